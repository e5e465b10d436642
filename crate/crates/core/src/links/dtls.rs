//! DTLS 1.2 record protection with AES-128-GCM and pre-provisioned keys.
//!
//! The 12-byte nonce is `salt || epoch || seq48` and is rebuilt from the
//! record header, so a protected record costs exactly header + tag.

use super::replay::{ReplayVerdict, ReplayWindow};
use super::{LinkError, OpCounts};
use crate::crypto::{GcmKey, SuiteId};
use crate::wire::{
    decode_dtls_record, encode_dtls_record, ContentType, DtlsRecord, DTLS_1_2_VERSION, DTLS_MAX_SEQUENCE,
};

/// Epoch used after the (elided) handshake.
pub const DTLS_EPOCH: u16 = 1;

/// Write keys for both directions of one association.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtlsKeys {
    pub a_to_b_key: [u8; 16],
    pub a_to_b_salt: [u8; 4],
    pub b_to_a_key: [u8; 16],
    pub b_to_a_salt: [u8; 4],
}

impl DtlsKeys {
    pub fn fixed(seed: u8) -> Self {
        DtlsKeys {
            a_to_b_key: [seed; 16],
            a_to_b_salt: [seed, 1, 2, 3],
            b_to_a_key: [seed ^ 0xff; 16],
            b_to_a_salt: [seed ^ 0xff, 3, 2, 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DtlsState {
    pub tx_sequence: u64,
    pub replay: ReplayWindow,
    pub ops: OpCounts,
}

pub struct DtlsEndpoint {
    epoch: u16,
    write_key: GcmKey,
    write_salt: [u8; 4],
    read_key: GcmKey,
    read_salt: [u8; 4],
    /// Next sequence number to send.
    tx_sequence: u64,
    replay: ReplayWindow,
    ops: OpCounts,
}

fn nonce(salt: [u8; 4], epoch: u16, seq: u64) -> [u8; 12] {
    let mut n = [0u8; 12];
    n[..4].copy_from_slice(&salt);
    n[4..].copy_from_slice(&((epoch as u64) << 48 | seq).to_be_bytes());
    n
}

fn aad(epoch: u16, seq: u64, ct: ContentType, plain_len: usize) -> [u8; 13] {
    let mut a = [0u8; 13];
    a[..8].copy_from_slice(&((epoch as u64) << 48 | seq).to_be_bytes());
    a[8] = ct.code();
    a[9..11].copy_from_slice(&DTLS_1_2_VERSION.to_be_bytes());
    a[11..].copy_from_slice(&(plain_len as u16).to_be_bytes());
    a
}

impl DtlsEndpoint {
    fn new(epoch: u16, write: ([u8; 16], [u8; 4]), read: ([u8; 16], [u8; 4])) -> Self {
        let suite = SuiteId::DtlsAesGcm128.suite();
        DtlsEndpoint {
            epoch,
            write_key: GcmKey::new(&suite, &write.0).expect("16-byte key"),
            write_salt: write.1,
            read_key: GcmKey::new(&suite, &read.0).expect("16-byte key"),
            read_salt: read.1,
            tx_sequence: 0,
            replay: ReplayWindow::new(),
            ops: OpCounts::default(),
        }
    }

    pub fn epoch(&self) -> u16 {
        self.epoch
    }

    pub fn ops(&self) -> OpCounts {
        self.ops
    }

    pub fn state(&self) -> DtlsState {
        DtlsState {
            tx_sequence: self.tx_sequence,
            replay: self.replay,
            ops: self.ops,
        }
    }

    #[cfg(test)]
    pub(crate) fn force_tx_sequence(&mut self, seq: u64) {
        self.tx_sequence = seq;
    }

    pub fn protect(&mut self, message: &[u8]) -> Result<Vec<u8>, LinkError> {
        if self.tx_sequence > DTLS_MAX_SEQUENCE {
            return Err(LinkError::SequenceExhausted);
        }
        let seq = self.tx_sequence;
        let ct = ContentType::ApplicationData;
        let mut body = Vec::with_capacity(message.len() + 16);
        body.extend_from_slice(message);
        let tag = self.write_key.seal_in_place(
            nonce(self.write_salt, self.epoch, seq),
            &aad(self.epoch, seq, ct, message.len()),
            &mut body,
        );
        body.extend_from_slice(&tag);
        let wire = encode_dtls_record(&DtlsRecord {
            content_type: ct,
            epoch: self.epoch,
            sequence: seq,
            body,
        })?;
        self.tx_sequence += 1;
        self.ops.dtls += 1;
        Ok(wire)
    }

    pub fn unprotect(&mut self, wire: &[u8]) -> Result<Vec<u8>, LinkError> {
        let rec = decode_dtls_record(wire)?;
        if rec.content_type != ContentType::ApplicationData {
            return Err(crate::wire::WireError::Malformed {
                format: "DTLS",
                reason: format!("unexpected {:?} record on an established association", rec.content_type),
            }
            .into());
        }
        if rec.epoch != self.epoch {
            // Records from an earlier epoch are stale replays; later epochs
            // would need a renegotiation that never happens here.
            return Err(LinkError::ReplayRejected(rec.sequence));
        }
        if self.replay.check(rec.sequence) != ReplayVerdict::Fresh {
            return Err(LinkError::ReplayRejected(rec.sequence));
        }
        if rec.body.len() < 16 {
            return Err(LinkError::AuthenticationFailure);
        }
        let split = rec.body.len() - 16;
        let mut plain = rec.body[..split].to_vec();
        self.read_key
            .open_in_place(
                nonce(self.read_salt, rec.epoch, rec.sequence),
                &aad(rec.epoch, rec.sequence, rec.content_type, split),
                &mut plain,
                &rec.body[split..],
            )
            .map_err(|_| LinkError::AuthenticationFailure)?;
        self.replay.update(rec.sequence);
        self.ops.dtls += 1;
        Ok(plain)
    }
}

/// Both ends of one pre-established DTLS association.
pub fn dtls_provision(keys: &DtlsKeys, epoch: u16) -> (DtlsEndpoint, DtlsEndpoint) {
    let ab = (keys.a_to_b_key, keys.a_to_b_salt);
    let ba = (keys.b_to_a_key, keys.b_to_a_salt);
    (DtlsEndpoint::new(epoch, ab, ba), DtlsEndpoint::new(epoch, ba, ab))
}
