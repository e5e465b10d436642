//! Network-function pipeline: topology, per-link protection, transports and
//! the echo driver.
//!
//! Uplink path (disaggregated): UE -Uu- DU -F1-U- CU-UP -N3- UPF. PDCP runs
//! between UE and CU-UP, so the DU forwards PDCP PDUs untouched inside
//! GTP-U/ESP. Monolithic mode collapses DU and CU-UP into one gNB.

mod echo;
mod keys;
mod nodes;
mod topology;
mod transport;

pub use echo::{EchoResult, Execution, Hooks, Pipeline, PipelineOptions, Tamper};
pub use keys::{LinkDirection, LinkKeys};
pub use nodes::Hop;
pub use topology::{Interface, LinkSpec, Mode, NodeRole, PipelineTopology, TransportKind};
pub(crate) use transport::transport_tap;
pub use transport::{attach_transport, LinkEnd, PacketRx, PacketTx, TraceEntry, TransportError};

use std::time::Duration;

use thiserror::Error;

use crate::crypto::SuiteId;
use crate::links::LinkError;
use crate::wire::WireError;

/// Tunnel endpoint ids for the single bearer. Both directions of a tunnel
/// use the same id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TunnelIds {
    pub f1u: u32,
    pub n3: u32,
}

impl Default for TunnelIds {
    fn default() -> Self {
        TunnelIds { f1u: 0x1001, n3: 0x2001 }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("suite {suite} is not allowed on {interface}; allowed: {}", join(allowed))]
    InvalidSuiteForInterface {
        interface: Interface,
        suite: SuiteId,
        allowed: Vec<SuiteId>,
    },
    #[error("topology is missing {0}")]
    MissingNode(&'static str),
    #[error("TEID 0 is reserved ({0})")]
    ZeroTeid(Interface),
    #[error("provisioning {interface}: {source}")]
    Provision { interface: Interface, source: LinkError },
    #[error("transport for {interface}: {source}")]
    Transport {
        interface: Interface,
        source: TransportError,
    },
}

fn join(s: &[SuiteId]) -> String {
    s.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
}

/// Why an echo did not come back intact.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EchoError {
    #[error("protection failure on {link} at {node}: {source}")]
    Protection {
        link: Interface,
        node: NodeRole,
        source: LinkError,
    },
    #[error("malformed tunnel packet on {link} at {node}: {source}")]
    Wire {
        link: Interface,
        node: NodeRole,
        source: WireError,
    },
    #[error("TEID mismatch on {link} at {node}: expected {expected:#x}, got {got:#x}")]
    TeidMismatch {
        link: Interface,
        node: NodeRole,
        expected: u32,
        got: u32,
    },
    #[error("transport on {link}: {reason}")]
    Transport { link: Interface, reason: String },
    #[error("echoed payload differs from the sent payload ({sent} bytes sent, {got} received)")]
    PayloadMismatch { sent: usize, got: usize },
    #[error("no echo after {0:?}")]
    Timeout(Duration),
}

impl EchoError {
    /// The interface a failure is attributed to, if any.
    pub fn link(&self) -> Option<Interface> {
        match self {
            EchoError::Protection { link, .. }
            | EchoError::Wire { link, .. }
            | EchoError::TeidMismatch { link, .. }
            | EchoError::Transport { link, .. } => Some(*link),
            _ => None,
        }
    }
}
