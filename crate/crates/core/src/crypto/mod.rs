//! Protection algorithms: NEA2/NIA2 for Uu, the six ESP configurations and
//! the DTLS AEAD.
//!
//! Everything here is a pure function of explicit keys and counters. Counter
//! and nonce allocation belongs to [`crate::links`].

mod aead;
mod cbc_hmac;
mod nea2;
mod nia2;
mod suite;

pub use aead::{aead_open, aead_seal, gmac_protect, gmac_verify, GcmKey, GCM_NONCE_LEN, GCM_TAG_LEN};
pub use cbc_hmac::{cbc_hmac_protect, cbc_hmac_unprotect, CbcHmacKey, CBC_BLOCK, HMAC_KEY_LEN, ICV_LEN};
pub use nea2::{nea2_crypt, nea2_crypt_bits, Direction, Nea2, UuSecurityInputs};
pub use nia2::{nia2_mac, nia2_mac_bits, Cmac128, CmacState, Nia2};
pub use suite::{
    esp_suites, suite_by_id, suite_catalog, Cipher, Integrity, SecuritySuite, SuiteFamily, SuiteId,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("unknown suite {name:?}; known suites: {}", known.join(", "))]
    UnknownSuite {
        name: String,
        known: Vec<&'static str>,
    },
    #[error("{suite} needs a {expected}-byte key, got {got}")]
    KeyLength {
        suite: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{suite} is not {expected}")]
    WrongSuite {
        suite: &'static str,
        expected: &'static str,
    },
    #[error("authentication failure")]
    AuthenticationFailure,
    #[error("padding error after authenticated decryption")]
    Padding,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// True when the CPU offers AES and carry-less multiply instructions.
pub fn aes_acceleration_available() -> bool {
    #[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
    {
        std::arch::is_x86_feature_detected!("aes") && std::arch::is_x86_feature_detected!("pclmulqdq")
    }
    #[cfg(target_arch = "aarch64")]
    {
        std::arch::is_aarch64_feature_detected!("aes") && std::arch::is_aarch64_feature_detected!("pmull")
    }
    #[cfg(not(any(target_arch = "x86", target_arch = "x86_64", target_arch = "aarch64")))]
    {
        false
    }
}
