use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::keys::LinkKeys;
use super::PipelineError;
use crate::crypto::{SuiteFamily, SuiteId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interface {
    #[serde(rename = "Uu")]
    Uu,
    #[serde(rename = "F1-U")]
    F1U,
    #[serde(rename = "F1-C")]
    F1C,
    #[serde(rename = "E1")]
    E1,
    #[serde(rename = "N3")]
    N3,
}

impl Interface {
    pub const ALL: [Interface; 5] = [Interface::Uu, Interface::F1U, Interface::F1C, Interface::E1, Interface::N3];

    pub fn as_str(self) -> &'static str {
        match self {
            Interface::Uu => "Uu",
            Interface::F1U => "F1-U",
            Interface::F1C => "F1-C",
            Interface::E1 => "E1",
            Interface::N3 => "N3",
        }
    }

    /// Token used in environment variable names (`RANSEC_F1U_SECURITY`).
    pub fn env_token(self) -> &'static str {
        match self {
            Interface::Uu => "UU",
            Interface::F1U => "F1U",
            Interface::F1C => "F1C",
            Interface::E1 => "E1",
            Interface::N3 => "N3",
        }
    }

    pub fn is_control(self) -> bool {
        matches!(self, Interface::F1C | Interface::E1)
    }

    /// Whether `suite` may protect this interface: Uu takes only NIA2/NEA2,
    /// F1-U and N3 take IPsec ESP, F1-C and E1 take ESP or DTLS.
    pub fn accepts(self, suite: SuiteId) -> bool {
        let family = suite.suite().family;
        match self {
            Interface::Uu => family == SuiteFamily::Uu,
            Interface::F1U | Interface::N3 => family == SuiteFamily::Esp,
            Interface::F1C | Interface::E1 => matches!(family, SuiteFamily::Esp | SuiteFamily::Dtls),
        }
    }

    pub fn valid_suites(self) -> Vec<SuiteId> {
        SuiteId::ALL.into_iter().filter(|&s| self.accepts(s)).collect()
    }
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Interface {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_uppercase();
        Interface::ALL
            .into_iter()
            .find(|i| i.env_token() == norm)
            .ok_or_else(|| format!("unknown interface {s:?}; expected one of Uu, F1-U, F1-C, E1, N3"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Ue,
    Du,
    CuUp,
    CuCp,
    GnbMonolithic,
    Upf,
    AmfStub,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Ue => "UE",
            NodeRole::Du => "DU",
            NodeRole::CuUp => "CU-UP",
            NodeRole::CuCp => "CU-CP",
            NodeRole::GnbMonolithic => "gNB",
            NodeRole::Upf => "UPF",
            NodeRole::AmfStub => "AMF-stub",
        }
    }
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Monolithic,
    Disaggregated,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Monolithic => "monolithic",
            Mode::Disaggregated => "disaggregated",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monolithic" => Ok(Mode::Monolithic),
            "disaggregated" => Ok(Mode::Disaggregated),
            _ => Err(format!("unknown mode {s:?}; expected monolithic or disaggregated")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransportKind {
    InProcess,
    UdpLoopback,
}

impl TransportKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransportKind::InProcess => "in-process",
            TransportKind::UdpLoopback => "udp-loopback",
        }
    }
}

impl FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in-process" => Ok(TransportKind::InProcess),
            "udp-loopback" => Ok(TransportKind::UdpLoopback),
            _ => Err(format!("unknown transport {s:?}; expected in-process or udp-loopback")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSpec {
    pub interface: Interface,
    pub security: Option<SuiteId>,
    pub transport: TransportKind,
    /// UDP port for the core-side socket; `None` picks an ephemeral port.
    pub port: Option<u16>,
    pub added_delay: Duration,
    pub keys: LinkKeys,
}

impl LinkSpec {
    pub fn plain(interface: Interface) -> Self {
        LinkSpec {
            interface,
            security: None,
            transport: TransportKind::InProcess,
            port: None,
            added_delay: Duration::ZERO,
            keys: LinkKeys::default_for(interface),
        }
    }

    pub fn secured(interface: Interface, suite: SuiteId) -> Self {
        LinkSpec {
            security: Some(suite),
            ..Self::plain(interface)
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if let Some(s) = self.security {
            if !self.interface.accepts(s) {
                return Err(PipelineError::InvalidSuiteForInterface {
                    interface: self.interface,
                    suite: s,
                    allowed: self.interface.valid_suites(),
                });
            }
        }
        Ok(())
    }
}

/// Nodes and links of one scenario. `up_links` run from the UE towards the
/// UPF; `control_links` are F1-C and E1 (disaggregated only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineTopology {
    pub mode: Mode,
    pub nodes: Vec<NodeRole>,
    pub up_links: Vec<LinkSpec>,
    pub control_links: Vec<LinkSpec>,
}

impl PipelineTopology {
    /// Assemble a topology from per-interface link specs. Interfaces that
    /// the mode does not have (F1-U, F1-C, E1 when monolithic) are ignored;
    /// missing ones default to plain in-process links.
    pub fn new(mode: Mode, specs: &[LinkSpec]) -> Result<Self, PipelineError> {
        for s in specs {
            s.validate()?;
        }
        let get = |i: Interface| specs.iter().find(|s| s.interface == i).cloned().unwrap_or_else(|| LinkSpec::plain(i));
        let (nodes, up, control) = match mode {
            Mode::Monolithic => (
                vec![NodeRole::Ue, NodeRole::GnbMonolithic, NodeRole::Upf],
                vec![get(Interface::Uu), get(Interface::N3)],
                vec![],
            ),
            Mode::Disaggregated => (
                vec![NodeRole::Ue, NodeRole::Du, NodeRole::CuUp, NodeRole::CuCp, NodeRole::Upf, NodeRole::AmfStub],
                vec![get(Interface::Uu), get(Interface::F1U), get(Interface::N3)],
                vec![get(Interface::F1C), get(Interface::E1)],
            ),
        };
        let t = PipelineTopology {
            mode,
            nodes,
            up_links: up,
            control_links: control,
        };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), PipelineError> {
        let count = |r: NodeRole| self.nodes.iter().filter(|&&n| n == r).count();
        if count(NodeRole::Ue) != 1 || count(NodeRole::Upf) != 1 {
            return Err(PipelineError::MissingNode("exactly one UE and one UPF"));
        }
        match self.mode {
            Mode::Disaggregated => {
                if count(NodeRole::Du) != 1 || count(NodeRole::CuUp) != 1 || count(NodeRole::CuCp) != 1 {
                    return Err(PipelineError::MissingNode("DU, CU-UP and CU-CP"));
                }
            }
            Mode::Monolithic => {
                if count(NodeRole::GnbMonolithic) != 1 {
                    return Err(PipelineError::MissingNode("gNB"));
                }
            }
        }
        Ok(())
    }

    /// User-plane nodes in path order, UE first.
    pub fn up_path(&self) -> Vec<NodeRole> {
        match self.mode {
            Mode::Monolithic => vec![NodeRole::Ue, NodeRole::GnbMonolithic, NodeRole::Upf],
            Mode::Disaggregated => vec![NodeRole::Ue, NodeRole::Du, NodeRole::CuUp, NodeRole::Upf],
        }
    }

    pub fn secured_up_links(&self) -> Vec<Interface> {
        self.up_links.iter().filter(|l| l.security.is_some()).map(|l| l.interface).collect()
    }

    pub fn link(&self, i: Interface) -> Option<&LinkSpec> {
        self.up_links.iter().chain(&self.control_links).find(|l| l.interface == i)
    }
}
