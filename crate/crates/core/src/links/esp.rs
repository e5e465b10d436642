//! ESP tunnel-mode SAs. The inner packet is the full GTP-U datagram; outer IP
//! addressing is left to the emulated transport.

use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::replay::{ReplayVerdict, ReplayWindow};
use super::{LinkError, OpCounts};
use crate::crypto::{CbcHmacKey, GcmKey, SecuritySuite, SuiteFamily, HMAC_KEY_LEN};
use crate::wire::{decode_esp, ESP_HEADER_LEN};

/// Next-header value for an IPv4 inner packet (tunnel mode).
const NEXT_HEADER_IPV4: u8 = 4;
const TRAILER_LEN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaDirection {
    Protect,
    Unprotect,
}

impl SaDirection {
    fn name(self) -> &'static str {
        match self {
            SaDirection::Protect => "protect",
            SaDirection::Unprotect => "unprotect",
        }
    }
}

/// Static keying material for one SA pair.
///
/// GCM and GMAC suites use `enc_key` plus the 4-byte `salt`; `auth_key` must
/// be empty. CBC suites use `enc_key` and a 32-byte HMAC `auth_key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EspKeys {
    pub enc_key: Vec<u8>,
    pub auth_key: Vec<u8>,
    pub salt: [u8; 4],
}

impl EspKeys {
    /// Deterministic test keys of the right shape for `suite`.
    pub fn fixed_for(suite: &SecuritySuite, seed: u8) -> Self {
        let auth_len = if suite.is_cbc() { HMAC_KEY_LEN } else { 0 };
        EspKeys {
            enc_key: (0..suite.key_bytes()).map(|i| seed.wrapping_add(i as u8)).collect(),
            auth_key: (0..auth_len).map(|i| seed ^ (0xa0 + i as u8)).collect(),
            salt: [seed, 0x5a, 0xc3, seed.rotate_left(3)],
        }
    }
}

enum Engine {
    Gcm(GcmKey),
    Gmac(GcmKey),
    Cbc(CbcHmacKey, Box<ChaCha8Rng>),
}

/// Observable mutable state, for before/after comparison in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaState {
    pub tx_sequence: u32,
    pub replay: ReplayWindow,
    pub ops: OpCounts,
}

pub struct SecurityAssociation {
    spi: u32,
    suite: SecuritySuite,
    salt: [u8; 4],
    direction: SaDirection,
    engine: Engine,
    /// Last sequence number sent; 0 before the first packet.
    tx_sequence: u32,
    replay: ReplayWindow,
    ops: OpCounts,
}

fn validate(suite: &SecuritySuite, keys: &EspKeys) -> Result<(), LinkError> {
    if suite.family != SuiteFamily::Esp {
        return Err(LinkError::InvalidSuite {
            suite: suite.id.to_string(),
            reason: "not an ESP suite".into(),
        });
    }
    if keys.enc_key.len() != suite.key_bytes() {
        return Err(crate::crypto::CryptoError::KeyLength {
            suite: suite.id.as_str(),
            expected: suite.key_bytes(),
            got: keys.enc_key.len(),
        }
        .into());
    }
    let want_auth = if suite.is_cbc() { HMAC_KEY_LEN } else { 0 };
    if keys.auth_key.len() != want_auth {
        return Err(crate::crypto::CryptoError::KeyLength {
            suite: suite.id.as_str(),
            expected: want_auth,
            got: keys.auth_key.len(),
        }
        .into());
    }
    Ok(())
}

impl SecurityAssociation {
    fn new(suite: &SecuritySuite, keys: &EspKeys, spi: u32, direction: SaDirection) -> Result<Self, LinkError> {
        validate(suite, keys)?;
        let engine = if suite.is_cbc() {
            // CBC IVs come from a per-SA generator so traces stay reproducible.
            let mut seed = [0u8; 32];
            seed.copy_from_slice(&keys.auth_key[..32]);
            seed[..4].iter_mut().zip(spi.to_be_bytes()).for_each(|(s, b)| *s ^= b);
            Engine::Cbc(
                CbcHmacKey::new(suite, &keys.enc_key, &keys.auth_key)?,
                Box::new(ChaCha8Rng::from_seed(seed)),
            )
        } else if suite.is_gmac() {
            Engine::Gmac(GcmKey::new(suite, &keys.enc_key)?)
        } else {
            Engine::Gcm(GcmKey::new(suite, &keys.enc_key)?)
        };
        Ok(SecurityAssociation {
            spi,
            suite: suite.clone(),
            salt: keys.salt,
            direction,
            engine,
            tx_sequence: 0,
            replay: ReplayWindow::new(),
            ops: OpCounts::default(),
        })
    }

    pub fn spi(&self) -> u32 {
        self.spi
    }

    pub fn suite(&self) -> &SecuritySuite {
        &self.suite
    }

    pub fn direction(&self) -> SaDirection {
        self.direction
    }

    pub fn ops(&self) -> OpCounts {
        self.ops
    }

    pub fn state(&self) -> SaState {
        SaState {
            tx_sequence: self.tx_sequence,
            replay: self.replay,
            ops: self.ops,
        }
    }

    /// Bytes to reserve in front of the inner packet for [`Self::protect_in_place`].
    pub fn headroom(&self) -> usize {
        ESP_HEADER_LEN + self.suite.iv_len
    }

    /// Wire length for an inner packet of `inner_len` bytes.
    pub fn wire_len(&self, inner_len: usize) -> usize {
        self.headroom() + esp_payload_len(&self.suite, inner_len) + self.suite.tag_len
    }

    #[cfg(test)]
    pub(crate) fn force_tx_sequence(&mut self, seq: u32) {
        self.tx_sequence = seq;
    }

    fn expect(&self, want: SaDirection) -> Result<(), LinkError> {
        if self.direction != want {
            return Err(LinkError::WrongDirection {
                actual: self.direction.name(),
                attempted: want.name(),
            });
        }
        Ok(())
    }

    pub fn protect(&mut self, inner: &[u8]) -> Result<Vec<u8>, LinkError> {
        let mut buf = Vec::with_capacity(self.wire_len(inner.len()));
        buf.resize(self.headroom(), 0);
        buf.extend_from_slice(inner);
        self.protect_in_place(&mut buf)?;
        Ok(buf)
    }

    /// `buf` holds `headroom()` scratch bytes followed by the inner packet.
    /// On success it holds the complete ESP packet.
    pub fn protect_in_place(&mut self, buf: &mut Vec<u8>) -> Result<(), LinkError> {
        self.expect(SaDirection::Protect)?;
        let head = self.headroom();
        debug_assert!(buf.len() >= head);
        let seq = self.tx_sequence.checked_add(1).ok_or(LinkError::SequenceExhausted)?;
        let inner_len = buf.len() - head;

        let payload_len = esp_payload_len(&self.suite, inner_len);
        let pad = payload_len - inner_len - TRAILER_LEN;
        buf.reserve(payload_len - inner_len + self.suite.tag_len);
        buf.extend((1..=pad as u8).take(pad));
        buf.push(pad as u8);
        buf.push(NEXT_HEADER_IPV4);

        buf[0..4].copy_from_slice(&self.spi.to_be_bytes());
        buf[4..8].copy_from_slice(&seq.to_be_bytes());
        let icv: [u8; 16] = match &mut self.engine {
            Engine::Gcm(key) => {
                let iv = (seq as u64).to_be_bytes();
                buf[8..16].copy_from_slice(&iv);
                let nonce = nonce(self.salt, &iv);
                let (hdr, rest) = buf.split_at_mut(head);
                key.seal_in_place(nonce, &hdr[..ESP_HEADER_LEN], rest)
            }
            Engine::Gmac(key) => {
                let iv = (seq as u64).to_be_bytes();
                buf[8..16].copy_from_slice(&iv);
                key.gmac(nonce(self.salt, &iv), buf)
            }
            Engine::Cbc(key, rng) => {
                let mut iv = [0u8; 16];
                rng.fill_bytes(&mut iv);
                buf[8..24].copy_from_slice(&iv);
                key.encrypt_in_place(iv, &mut buf[head..])?;
                key.icv(&[buf])
            }
        };
        buf.extend_from_slice(&icv[..self.suite.tag_len]);
        self.tx_sequence = seq;
        self.ops.esp += 1;
        Ok(())
    }

    pub fn unprotect(&mut self, wire: &[u8]) -> Result<Vec<u8>, LinkError> {
        self.expect(SaDirection::Unprotect)?;
        let pkt = decode_esp(wire, &self.suite)?;
        if pkt.spi != self.spi {
            return Err(LinkError::UnknownSpi {
                got: pkt.spi,
                expected: self.spi,
            });
        }
        let seq = pkt.sequence as u64;
        if seq == 0 || self.replay.check(seq) != ReplayVerdict::Fresh {
            return Err(LinkError::ReplayRejected(seq));
        }
        let head = self.headroom();
        let authed_end = wire.len() - self.suite.tag_len;
        let mut payload = pkt.ciphertext;
        match &self.engine {
            Engine::Gcm(key) => {
                let n = nonce(self.salt, &pkt.iv);
                key.open_in_place(n, &wire[..ESP_HEADER_LEN], &mut payload, &pkt.icv)
                    .map_err(|_| LinkError::AuthenticationFailure)?;
            }
            Engine::Gmac(key) => {
                let n = nonce(self.salt, &pkt.iv);
                key.gmac_verify(n, &wire[..authed_end], &pkt.icv)
                    .map_err(|_| LinkError::AuthenticationFailure)?;
            }
            Engine::Cbc(key, _) => {
                key.verify(&[&wire[..authed_end]], &pkt.icv)
                    .map_err(|_| LinkError::AuthenticationFailure)?;
                let iv: [u8; 16] = wire[ESP_HEADER_LEN..head].try_into().unwrap();
                key.decrypt_in_place(iv, &mut payload).map_err(|_| LinkError::Padding)?;
            }
        }
        let inner_len = strip_trailer(&payload)?;
        payload.truncate(inner_len);
        self.replay.update(seq);
        self.ops.esp += 1;
        Ok(payload)
    }
}

fn nonce(salt: [u8; 4], iv: &[u8]) -> [u8; 12] {
    let mut n = [0u8; 12];
    n[..4].copy_from_slice(&salt);
    n[4..].copy_from_slice(iv);
    n
}

/// Padded payload length: inner + padding + pad-length + next-header,
/// aligned to the suite's block size.
pub fn esp_payload_len(suite: &SecuritySuite, inner_len: usize) -> usize {
    (inner_len + TRAILER_LEN).next_multiple_of(suite.block_align())
}

fn strip_trailer(payload: &[u8]) -> Result<usize, LinkError> {
    if payload.len() < TRAILER_LEN {
        return Err(LinkError::Padding);
    }
    let next = payload[payload.len() - 1];
    let pad = payload[payload.len() - 2] as usize;
    if next != NEXT_HEADER_IPV4 || pad + TRAILER_LEN > payload.len() {
        return Err(LinkError::Padding);
    }
    let inner_len = payload.len() - TRAILER_LEN - pad;
    let pad_ok = payload[inner_len..inner_len + pad]
        .iter()
        .enumerate()
        .all(|(i, &b)| b as usize == i + 1);
    if !pad_ok {
        return Err(LinkError::Padding);
    }
    Ok(inner_len)
}

/// Pre-provisioned SA pair for one link direction: the sender's protect SA
/// and the receiver's unprotect SA sharing keys and SPI.
pub fn sa_provision(
    suite: &SecuritySuite,
    keys: &EspKeys,
    spi: u32,
) -> Result<(SecurityAssociation, SecurityAssociation), LinkError> {
    Ok((
        SecurityAssociation::new(suite, keys, spi, SaDirection::Protect)?,
        SecurityAssociation::new(suite, keys, spi, SaDirection::Unprotect)?,
    ))
}

/// Hands out SA pairs with SPIs that are unique across the session.
#[derive(Debug, Default)]
pub struct ProvisioningSession {
    used: HashSet<u32>,
    next: u32,
}

/// SPIs 1-255 are reserved (RFC 4303).
const FIRST_SPI: u32 = 0x100;

impl ProvisioningSession {
    pub fn new() -> Self {
        ProvisioningSession {
            used: HashSet::new(),
            next: FIRST_SPI,
        }
    }

    pub fn provision(
        &mut self,
        suite: &SecuritySuite,
        keys: &EspKeys,
    ) -> Result<(SecurityAssociation, SecurityAssociation), LinkError> {
        while self.used.contains(&self.next) {
            self.next += 1;
        }
        let spi = self.next;
        self.provision_with_spi(suite, keys, spi)
    }

    pub fn provision_with_spi(
        &mut self,
        suite: &SecuritySuite,
        keys: &EspKeys,
        spi: u32,
    ) -> Result<(SecurityAssociation, SecurityAssociation), LinkError> {
        if spi < FIRST_SPI {
            return Err(LinkError::InvalidSuite {
                suite: suite.id.to_string(),
                reason: format!("SPI {spi} is in the reserved range 0-255"),
            });
        }
        if self.used.contains(&spi) {
            return Err(LinkError::DuplicateSpi(spi));
        }
        let pair = sa_provision(suite, keys, spi)?;
        self.used.insert(spi);
        Ok(pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{esp_suites, SuiteId};
    use crate::wire::{decode_esp, encode_esp};

    fn pair(id: SuiteId) -> (SecurityAssociation, SecurityAssociation) {
        let s = id.suite();
        sa_provision(&s, &EspKeys::fixed_for(&s, 3), 0x1001).unwrap()
    }

    #[test]
    fn roundtrip_every_suite() {
        for s in esp_suites() {
            let (mut tx, mut rx) = pair(s.id);
            for len in [0usize, 1, 13, 14, 15, 16, 1032, 1500] {
                let inner: Vec<u8> = (0..len).map(|i| i as u8).collect();
                let wire = tx.protect(&inner).unwrap();
                assert_eq!(wire.len(), tx.wire_len(len));
                assert_eq!(rx.unprotect(&wire).unwrap(), inner, "{s} len {len}");
            }
        }
    }

    #[test]
    fn gcm128_kilobyte_growth() {
        let (mut tx, _) = pair(SuiteId::AesGcm128);
        let wire = tx.protect(&[0u8; 1024]).unwrap();
        // 32 fixed bytes plus a 4-byte-aligned trailer (2 pad + pad len + next header)
        assert_eq!(wire.len(), 1024 + 32 + 4);
        let decoded = decode_esp(&wire, tx.suite()).unwrap();
        assert_eq!(encode_esp(&decoded, tx.suite()).unwrap(), wire);
        assert_eq!(decoded.ciphertext.len(), 1028);
    }

    #[test]
    fn cbc_payload_is_block_multiple() {
        for len in 0..64 {
            let s = SuiteId::AesCbc128HmacSha256.suite();
            let p = esp_payload_len(&s, len);
            assert_eq!(p % 16, 0);
            assert!(p >= len + 2 && p < len + 2 + 16);
        }
    }

    #[test]
    fn consecutive_sequence_numbers() {
        let (mut tx, _) = pair(SuiteId::NullGmac128);
        let a = decode_esp(&tx.protect(b"a").unwrap(), tx.suite()).unwrap();
        let b = decode_esp(&tx.protect(b"b").unwrap(), tx.suite()).unwrap();
        assert_eq!((a.sequence, b.sequence), (1, 2));
    }

    #[test]
    fn replay_rejected() {
        let (mut tx, mut rx) = pair(SuiteId::AesGcm256);
        let w = tx.protect(b"once").unwrap();
        rx.unprotect(&w).unwrap();
        assert_eq!(rx.unprotect(&w), Err(LinkError::ReplayRejected(1)));
    }

    #[test]
    fn tamper_leaves_state_unchanged() {
        let (mut tx, mut rx) = pair(SuiteId::AesCbc256HmacSha256);
        rx.unprotect(&tx.protect(b"first").unwrap()).unwrap();
        let mut w = tx.protect(b"second").unwrap();
        let before = rx.state();
        w[30] ^= 1;
        assert_eq!(rx.unprotect(&w), Err(LinkError::AuthenticationFailure));
        assert_eq!(rx.state(), before);
        w[30] ^= 1;
        assert_eq!(rx.unprotect(&w).unwrap(), b"second");
    }

    #[test]
    fn gmac_leaves_payload_in_clear() {
        let (mut tx, mut rx) = pair(SuiteId::NullGmac256);
        let w = tx.protect(b"visible payload").unwrap();
        assert_eq!(&w[16..31], b"visible payload");
        rx.unprotect(&w).unwrap();
    }

    #[test]
    fn sequence_exhaustion() {
        let (mut tx, _) = pair(SuiteId::AesGcm128);
        tx.force_tx_sequence(u32::MAX - 1);
        tx.protect(b"last").unwrap();
        assert_eq!(tx.protect(b"x"), Err(LinkError::SequenceExhausted));
    }

    #[test]
    fn wrong_key_length() {
        let s = SuiteId::AesGcm256.suite();
        let keys = EspKeys::fixed_for(&SuiteId::AesGcm128.suite(), 1);
        assert!(matches!(
            sa_provision(&s, &keys, 0x200),
            Err(LinkError::Crypto(crate::crypto::CryptoError::KeyLength { expected: 32, got: 16, .. }))
        ));
    }

    #[test]
    fn wrong_direction_and_spi() {
        let (mut tx, mut rx) = pair(SuiteId::AesGcm128);
        assert!(matches!(tx.unprotect(&[0; 64]), Err(LinkError::WrongDirection { .. })));
        assert!(matches!(rx.protect(b"x"), Err(LinkError::WrongDirection { .. })));
        let s = SuiteId::AesGcm128.suite();
        let (mut other, _) = sa_provision(&s, &EspKeys::fixed_for(&s, 3), 0x2002).unwrap();
        let w = other.protect(b"x").unwrap();
        assert!(matches!(rx.unprotect(&w), Err(LinkError::UnknownSpi { got: 0x2002, .. })));
    }

    #[test]
    fn session_spis_unique() {
        let mut session = ProvisioningSession::new();
        let s = SuiteId::AesGcm128.suite();
        let k = EspKeys::fixed_for(&s, 1);
        let (a, _) = session.provision(&s, &k).unwrap();
        let (b, _) = session.provision(&s, &k).unwrap();
        assert_ne!(a.spi(), b.spi());
        assert_eq!(
            session.provision_with_spi(&s, &k, a.spi()).err(),
            Some(LinkError::DuplicateSpi(a.spi()))
        );
        let (c, _) = session.provision(&s, &k).unwrap();
        assert!(c.spi() != a.spi() && c.spi() != b.spi());
    }

    #[test]
    fn in_place_matches_allocating_path() {
        let s = SuiteId::AesCbc128HmacSha256.suite();
        let k = EspKeys::fixed_for(&s, 9);
        let (mut a, _) = sa_provision(&s, &k, 0x300).unwrap();
        let (mut b, _) = sa_provision(&s, &k, 0x300).unwrap();
        let inner = vec![0x77u8; 333];
        let mut buf = vec![0u8; b.headroom()];
        buf.extend_from_slice(&inner);
        b.protect_in_place(&mut buf).unwrap();
        assert_eq!(a.protect(&inner).unwrap(), buf);
    }
}
