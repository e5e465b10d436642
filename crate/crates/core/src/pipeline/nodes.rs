//! Per-node packet processing. Each node owns the protection state of the
//! link ends it terminates.

use super::{EchoError, Interface, NodeRole, TunnelIds};
use crate::links::{OpCounts, PdcpEntity, SecurityAssociation};
use crate::wire::{decode_gtpu, encode_gtpu};

/// Result of uplink processing: pass the packet further up, or turn it
/// around (the UPF echo).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Hop {
    Forward(Vec<u8>),
    Bounce(Vec<u8>),
}

/// One node's end of an ESP-capable link. `tx` protects what this node
/// sends, `rx` unprotects what it receives. Both absent on plain links.
pub(crate) struct Guard {
    pub link: Interface,
    pub esp: Option<(SecurityAssociation, SecurityAssociation)>,
}

impl Guard {
    fn seal(&mut self, node: NodeRole, b: Vec<u8>) -> Result<Vec<u8>, EchoError> {
        match &mut self.esp {
            None => Ok(b),
            Some((tx, _)) => tx.protect(&b).map_err(|source| EchoError::Protection {
                link: self.link,
                node,
                source,
            }),
        }
    }

    fn open(&mut self, node: NodeRole, b: &[u8]) -> Result<Vec<u8>, EchoError> {
        match &mut self.esp {
            None => Ok(b.to_vec()),
            Some((_, rx)) => rx.unprotect(b).map_err(|source| EchoError::Protection {
                link: self.link,
                node,
                source,
            }),
        }
    }

    fn ops(&self) -> OpCounts {
        match &self.esp {
            None => OpCounts::default(),
            Some((tx, rx)) => tx.ops() + rx.ops(),
        }
    }

    /// GTP-U encapsulate, then protect.
    fn send(&mut self, node: NodeRole, teid: u32, inner: &[u8]) -> Result<Vec<u8>, EchoError> {
        let g = encode_gtpu(teid, inner).map_err(|source| EchoError::Wire {
            link: self.link,
            node,
            source,
        })?;
        self.seal(node, g)
    }

    /// Unprotect, then strip GTP-U and check the tunnel id.
    fn recv(&mut self, node: NodeRole, teid: u32, wire: &[u8]) -> Result<Vec<u8>, EchoError> {
        let g = self.open(node, wire)?;
        let p = decode_gtpu(&g).map_err(|source| EchoError::Wire {
            link: self.link,
            node,
            source,
        })?;
        if p.teid != teid {
            return Err(EchoError::TeidMismatch {
                link: self.link,
                node,
                expected: teid,
                got: p.teid,
            });
        }
        Ok(p.payload)
    }
}

fn pdcp_err(node: NodeRole) -> impl Fn(crate::links::LinkError) -> EchoError {
    move |source| EchoError::Protection {
        link: Interface::Uu,
        node,
        source,
    }
}

pub(crate) enum Node {
    Du {
        f1u: Guard,
        teid: u32,
    },
    CuUp {
        f1u: Guard,
        pdcp: PdcpEntity,
        n3: Guard,
        teids: TunnelIds,
    },
    Gnb {
        pdcp: PdcpEntity,
        n3: Guard,
        teid: u32,
    },
    Upf {
        n3: Guard,
        teid: u32,
    },
}

impl Node {
    pub fn role(&self) -> NodeRole {
        match self {
            Node::Du { .. } => NodeRole::Du,
            Node::CuUp { .. } => NodeRole::CuUp,
            Node::Gnb { .. } => NodeRole::GnbMonolithic,
            Node::Upf { .. } => NodeRole::Upf,
        }
    }

    pub fn ops(&self) -> OpCounts {
        match self {
            Node::Du { f1u, .. } => f1u.ops(),
            Node::CuUp { f1u, pdcp, n3, .. } => f1u.ops() + pdcp.ops() + n3.ops(),
            Node::Gnb { pdcp, n3, .. } => pdcp.ops() + n3.ops(),
            Node::Upf { n3, .. } => n3.ops(),
        }
    }

    /// Packet arriving from the UE side.
    pub fn uplink(&mut self, b: &[u8]) -> Result<Hop, EchoError> {
        let role = self.role();
        match self {
            Node::Du { f1u, teid } => Ok(Hop::Forward(f1u.send(role, *teid, b)?)),
            Node::CuUp { f1u, pdcp, n3, teids } => {
                let pdu = f1u.recv(role, teids.f1u, b)?;
                let sdu = pdcp.unprotect(&pdu).map_err(pdcp_err(role))?;
                Ok(Hop::Forward(n3.send(role, teids.n3, &sdu)?))
            }
            Node::Gnb { pdcp, n3, teid } => {
                let sdu = pdcp.unprotect(b).map_err(pdcp_err(role))?;
                Ok(Hop::Forward(n3.send(role, *teid, &sdu)?))
            }
            Node::Upf { n3, teid } => {
                let sdu = n3.recv(role, *teid, b)?;
                Ok(Hop::Bounce(n3.send(role, *teid, &sdu)?))
            }
        }
    }

    /// Packet arriving from the core side; the result goes towards the UE.
    pub fn downlink(&mut self, b: &[u8]) -> Result<Vec<u8>, EchoError> {
        let role = self.role();
        match self {
            Node::Du { f1u, teid } => f1u.recv(role, *teid, b),
            Node::CuUp { f1u, pdcp, n3, teids } => {
                let sdu = n3.recv(role, teids.n3, b)?;
                let pdu = pdcp.protect(&sdu).map_err(pdcp_err(role))?;
                f1u.send(role, teids.f1u, &pdu)
            }
            Node::Gnb { pdcp, n3, teid } => {
                let sdu = n3.recv(role, *teid, b)?;
                pdcp.protect(&sdu).map_err(pdcp_err(role))
            }
            Node::Upf { .. } => unreachable!("nothing sits above the UPF"),
        }
    }
}
