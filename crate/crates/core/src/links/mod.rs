//! Stateful protection endpoints: ESP security associations, DTLS record
//! endpoints and PDCP bearer entities.
//!
//! Every endpoint is single-owner mutable state. Keys are pre-provisioned;
//! there is no handshake traffic. Rejected packets never change endpoint
//! state.

mod dtls;
mod esp;
mod pdcp;
mod replay;

pub use dtls::{dtls_provision, DtlsEndpoint, DtlsKeys, DtlsState, DTLS_EPOCH};
pub use esp::{
    esp_payload_len, sa_provision, EspKeys, ProvisioningSession, SaDirection, SaState, SecurityAssociation,
};
pub use pdcp::{pdcp_provision, PdcpConfig, PdcpEntity, PdcpRole, PdcpState, UuProtection};
pub use replay::{ReplayVerdict, ReplayWindow, REPLAY_WINDOW};

use std::ops::{Add, AddAssign};

use thiserror::Error;

use crate::crypto::CryptoError;
use crate::wire::WireError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("authentication failure")]
    AuthenticationFailure,
    #[error("integrity check failed (MAC-I mismatch)")]
    IntegrityFailure,
    #[error("replay rejected: sequence {0}")]
    ReplayRejected(u64),
    #[error("unknown SPI {got:#010x} (SA has {expected:#010x})")]
    UnknownSpi { got: u32, expected: u32 },
    #[error("sequence space exhausted; re-provision the SA")]
    SequenceExhausted,
    #[error("COUNT space exhausted; re-provision the bearer")]
    CountExhausted,
    #[error("SA is a {actual} endpoint, cannot {attempted}")]
    WrongDirection {
        actual: &'static str,
        attempted: &'static str,
    },
    #[error("bad ESP trailer after authentication")]
    Padding,
    #[error("SPI {0:#010x} already provisioned in this session")]
    DuplicateSpi(u32),
    #[error("suite {suite} cannot protect this link: {reason}")]
    InvalidSuite { suite: String, reason: String },
}

/// Primitive-invocation counters kept by every endpoint.
///
/// ESP and DTLS count one operation per protect/unprotect. PDCP counts MAC
/// and cipher passes separately, since the bearer runs them in sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounts {
    pub esp: u64,
    pub dtls: u64,
    pub pdcp_integrity: u64,
    pub pdcp_cipher: u64,
}

impl OpCounts {
    pub fn pdcp(&self) -> u64 {
        self.pdcp_integrity + self.pdcp_cipher
    }

    pub fn total(&self) -> u64 {
        self.esp + self.dtls + self.pdcp()
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, o: OpCounts) -> OpCounts {
        OpCounts {
            esp: self.esp + o.esp,
            dtls: self.dtls + o.dtls,
            pdcp_integrity: self.pdcp_integrity + o.pdcp_integrity,
            pdcp_cipher: self.pdcp_cipher + o.pdcp_cipher,
        }
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, o: OpCounts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for OpCounts {
    fn sum<I: Iterator<Item = OpCounts>>(iter: I) -> Self {
        iter.fold(OpCounts::default(), |a, b| a + b)
    }
}
