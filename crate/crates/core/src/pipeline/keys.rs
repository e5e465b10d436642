//! Static per-link key material and its split into per-direction keys.
//!
//! A scenario gives one set of keys per link. Each direction (and each
//! purpose) gets its own keys via HKDF-SHA-256, the way an IKE or DTLS
//! handshake would hand out separate keys. Without the split, both
//! directions of a GCM link would reuse nonces under one key.

use aws_lc_rs::hkdf;

use super::topology::Interface;
use crate::crypto::SecuritySuite;
use crate::links::{DtlsKeys, EspKeys, PdcpConfig, UuProtection};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkKeys {
    pub enc_key: Vec<u8>,
    pub auth_key: Vec<u8>,
    pub salt: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    Uplink,
    Downlink,
}

impl LinkDirection {
    fn label(self) -> &'static str {
        match self {
            LinkDirection::Uplink => "uplink",
            LinkDirection::Downlink => "downlink",
        }
    }
}

struct Len(usize);

impl hkdf::KeyType for Len {
    fn len(&self) -> usize {
        self.0
    }
}

impl LinkKeys {
    /// Fixed, publicly known test keys. Never use outside the emulator.
    pub fn default_for(interface: Interface) -> Self {
        let tag = interface.as_str().as_bytes();
        let fill = |n: usize, base: u8| -> Vec<u8> {
            (0..n).map(|i| base.wrapping_add(i as u8) ^ tag[i % tag.len()]).collect()
        };
        LinkKeys {
            enc_key: fill(32, 0x10),
            auth_key: fill(32, 0x80),
            salt: fill(4, 0xc0),
        }
    }

    fn expand(&self, info: &str, len: usize) -> Vec<u8> {
        let salt = hkdf::Salt::new(hkdf::HKDF_SHA256, &self.salt);
        let mut ikm = self.enc_key.clone();
        ikm.extend_from_slice(&self.auth_key);
        let prk = salt.extract(&ikm);
        let info = [info.as_bytes()];
        let okm = prk.expand(&info, Len(len)).expect("HKDF output length within limits");
        let mut out = vec![0u8; len];
        okm.fill(&mut out).expect("buffer sized to requested length");
        out
    }

    pub fn esp_keys(&self, interface: Interface, suite: &SecuritySuite, dir: LinkDirection) -> EspKeys {
        let enc_len = suite.key_bytes();
        let auth_len = if suite.is_cbc() { crate::crypto::HMAC_KEY_LEN } else { 0 };
        let okm = self.expand(
            &format!("esp {} {} {}", interface, suite.id, dir.label()),
            enc_len + auth_len + 4,
        );
        EspKeys {
            enc_key: okm[..enc_len].to_vec(),
            auth_key: okm[enc_len..enc_len + auth_len].to_vec(),
            salt: okm[enc_len + auth_len..].try_into().unwrap(),
        }
    }

    /// Side A is the CU-CP end of the link.
    pub fn dtls_keys(&self, interface: Interface) -> DtlsKeys {
        let okm = self.expand(&format!("dtls {interface}"), 40);
        DtlsKeys {
            a_to_b_key: okm[0..16].try_into().unwrap(),
            a_to_b_salt: okm[16..20].try_into().unwrap(),
            b_to_a_key: okm[20..36].try_into().unwrap(),
            b_to_a_salt: okm[36..40].try_into().unwrap(),
        }
    }

    pub fn pdcp_config(&self, protection: UuProtection) -> PdcpConfig {
        let okm = self.expand("pdcp drb1", 32);
        PdcpConfig {
            bearer: 0,
            integrity_key: okm[..16].try_into().unwrap(),
            ciphering_key: okm[16..].try_into().unwrap(),
            protection,
        }
    }
}
