//! F1-C UE Context Setup and E1 Bearer Context Setup over optionally
//! protected control links.
//!
//! The CU-CP drives both procedures and reads all clocks. The DU and CU-UP
//! answer from their end of the link, either stepped by the caller or on
//! their own worker threads. Duplicates and replays of old responses are
//! dropped without touching the transcript.

mod message;

pub use message::{decode_message, encode_message, MessageKind, Procedure, ProcedureMessage};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::crypto::SuiteFamily;
use crate::links::{dtls_provision, DtlsEndpoint, LinkError, OpCounts, ProvisioningSession, SecurityAssociation, DTLS_EPOCH};
use crate::pipeline::{
    attach_transport, Execution, Hooks, Interface, LinkDirection, LinkEnd, LinkSpec, Mode, NodeRole, PipelineError,
    PipelineTopology, TransportError, TunnelIds,
};
use crate::wire::WireError;

pub const PROCEDURE_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcedureError {
    #[error("protection failure on {link} at {node}: {source}")]
    Protection {
        link: Interface,
        node: NodeRole,
        source: LinkError,
    },
    #[error("malformed message on {link} at {node}: {source}")]
    Malformed {
        link: Interface,
        node: NodeRole,
        source: WireError,
    },
    #[error("transport on {link}: {reason}")]
    Transport { link: Interface, reason: String },
    #[error("no response on {0} within {PROCEDURE_TIMEOUT:?}")]
    Timeout(Interface),
    #[error("bearer context response is unusable: {0}")]
    BadResponse(String),
    #[error("control procedures need a disaggregated topology")]
    NotDisaggregated,
    #[error("building control links: {0}")]
    Build(String),
}

impl From<PipelineError> for ProcedureError {
    fn from(e: PipelineError) -> Self {
        ProcedureError::Build(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageDirection {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    /// Nanoseconds since the request was handed to the transport.
    pub at_ns: u64,
    pub direction: MessageDirection,
    pub message: ProcedureMessage,
    /// Bytes on the link, protection included.
    pub wire_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcedureTranscript {
    pub procedure: Procedure,
    pub link: Interface,
    pub peer: NodeRole,
    pub entries: Vec<TranscriptEntry>,
    /// Request send to matching response receive, as seen by the CU-CP.
    pub duration: Duration,
}

impl ProcedureTranscript {
    /// One line per message: `timestamp_ns direction kind length`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let dir = match e.direction {
                MessageDirection::Sent => format!("{}->{}", NodeRole::CuCp, self.peer),
                MessageDirection::Received => format!("{}->{}", self.peer, NodeRole::CuCp),
            };
            writeln!(s, "{} {} {} {}", e.at_ns, dir, e.message, e.wire_len).unwrap();
        }
        s
    }

    pub fn wire_lengths(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.wire_len).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistrationTranscript {
    pub ue_context: ProcedureTranscript,
    pub bearer_context: ProcedureTranscript,
    pub teids: TunnelIds,
}

enum Protection {
    Plain,
    Esp { tx: SecurityAssociation, rx: SecurityAssociation },
    Dtls(DtlsEndpoint),
}

impl Protection {
    fn seal(&mut self, b: &[u8]) -> Result<Vec<u8>, LinkError> {
        match self {
            Protection::Plain => Ok(b.to_vec()),
            Protection::Esp { tx, .. } => tx.protect(b),
            Protection::Dtls(d) => d.protect(b),
        }
    }

    fn open(&mut self, b: &[u8]) -> Result<Vec<u8>, LinkError> {
        match self {
            Protection::Plain => Ok(b.to_vec()),
            Protection::Esp { rx, .. } => rx.unprotect(b),
            Protection::Dtls(d) => d.unprotect(b),
        }
    }

    fn ops(&self) -> OpCounts {
        match self {
            Protection::Plain => OpCounts::default(),
            Protection::Esp { tx, rx } => tx.ops() + rx.ops(),
            Protection::Dtls(d) => d.ops(),
        }
    }
}

/// Protection for both ends of a control link: `(cu_cp, peer)`.
fn provision(spec: &LinkSpec, session: &mut ProvisioningSession) -> Result<(Protection, Protection), ProcedureError> {
    let i = spec.interface;
    let Some(id) = spec.security else {
        return Ok((Protection::Plain, Protection::Plain));
    };
    let suite = id.suite();
    let err = |e: LinkError| ProcedureError::Build(format!("{i}: {e}"));
    match suite.family {
        SuiteFamily::Dtls => {
            let (a, b) = dtls_provision(&spec.keys.dtls_keys(i), DTLS_EPOCH);
            Ok((Protection::Dtls(a), Protection::Dtls(b)))
        }
        SuiteFamily::Esp => {
            // Uplink on a control link means towards the CU-CP.
            let (up_tx, up_rx) = session
                .provision(&suite, &spec.keys.esp_keys(i, &suite, LinkDirection::Uplink))
                .map_err(err)?;
            let (dn_tx, dn_rx) = session
                .provision(&suite, &spec.keys.esp_keys(i, &suite, LinkDirection::Downlink))
                .map_err(err)?;
            Ok((
                Protection::Esp { tx: dn_tx, rx: up_rx },
                Protection::Esp { tx: up_tx, rx: dn_rx },
            ))
        }
        SuiteFamily::Uu => Err(ProcedureError::Build(format!("{id} cannot protect {i}"))),
    }
}

fn transport_err(link: Interface) -> impl Fn(TransportError) -> ProcedureError {
    move |e| match e {
        TransportError::Timeout(_) => ProcedureError::Timeout(link),
        e => ProcedureError::Transport {
            link,
            reason: e.to_string(),
        },
    }
}

/// Hands out nonzero tunnel ids, never the same one twice.
#[derive(Debug, Clone)]
pub struct TeidAllocator {
    next: u32,
}

impl Default for TeidAllocator {
    fn default() -> Self {
        TeidAllocator { next: 1 }
    }
}

impl TeidAllocator {
    pub fn allocate(&mut self) -> Option<u32> {
        let t = self.next;
        if t == 0 {
            return None;
        }
        self.next = t.wrapping_add(1);
        Some(t)
    }
}

enum PeerState {
    Du { contexts: HashMap<u32, u32> },
    CuUp { bearers: HashMap<u32, TunnelIds>, alloc: TeidAllocator },
}

/// DU or CU-UP end of a control link.
struct Responder {
    role: NodeRole,
    link: Interface,
    prot: Protection,
    end: LinkEnd,
    state: PeerState,
    duplicate: Arc<AtomicBool>,
    /// Context count and crypto ops, refreshed after every message.
    published: Arc<Mutex<(usize, OpCounts)>>,
}

impl Responder {
    fn serve_one(&mut self, timeout: Duration) -> Result<bool, ProcedureError> {
        let r = self.handle(timeout);
        *self.published.lock().unwrap() = (self.context_count(), self.prot.ops());
        r
    }

    fn handle(&mut self, timeout: Duration) -> Result<bool, ProcedureError> {
        let wire = match self.end.recv(timeout) {
            Ok(w) => w,
            Err(TransportError::Timeout(_)) => return Ok(false),
            Err(e) => return Err(transport_err(self.link)(e)),
        };
        let (role, link) = (self.role, self.link);
        let plain = self
            .prot
            .open(&wire)
            .map_err(|source| ProcedureError::Protection { link, node: role, source })?;
        let req = decode_message(&plain).map_err(|source| ProcedureError::Malformed { link, node: role, source })?;
        if req.kind != MessageKind::Request {
            return Ok(true);
        }
        let mut resp = req.response_to();
        match (&mut self.state, req.procedure) {
            (PeerState::Du { contexts }, Procedure::UeContextSetup) => {
                contexts.insert(req.ue_id, req.transaction_id);
            }
            (PeerState::CuUp { bearers, alloc }, Procedure::BearerContextSetup) => {
                let exhausted = || ProcedureError::BadResponse("TEID space exhausted".into());
                let t = TunnelIds {
                    f1u: alloc.allocate().ok_or_else(exhausted)?,
                    n3: alloc.allocate().ok_or_else(exhausted)?,
                };
                bearers.insert(req.ue_id, t);
                resp.f1u_teid = Some(t.f1u);
                resp.n3_teid = Some(t.n3);
            }
            // Wrong procedure for this link: not answered.
            _ => return Ok(true),
        }
        let out = self
            .prot
            .seal(&encode_message(&resp))
            .map_err(|source| ProcedureError::Protection { link, node: role, source })?;
        // Publish before answering so the requester never sees stale counts.
        *self.published.lock().unwrap() = (self.context_count(), self.prot.ops());
        self.end.send(&out).map_err(transport_err(link))?;
        if self.duplicate.load(Ordering::Relaxed) {
            self.end.send(&out).map_err(transport_err(link))?;
        }
        Ok(true)
    }

    fn context_count(&self) -> usize {
        match &self.state {
            PeerState::Du { contexts } => contexts.len(),
            PeerState::CuUp { bearers, .. } => bearers.len(),
        }
    }
}

/// CU-CP side of one control link.
struct Requester {
    link: Interface,
    peer: NodeRole,
    prot: Protection,
    end: LinkEnd,
}

enum Peers {
    Stepped { f1c: Responder, e1: Responder },
    Threaded {
        errors: mpsc::Receiver<ProcedureError>,
        stop: Arc<AtomicBool>,
        handles: Vec<JoinHandle<()>>,
    },
}

/// CU-CP with its DU and CU-UP peers, plus the AMF stub that triggers
/// registrations.
pub struct ControlPlane {
    f1c: Requester,
    e1: Requester,
    peers: Peers,
    /// DU then CU-UP.
    published: [Arc<Mutex<(usize, OpCounts)>>; 2],
    hooks: Hooks,
    duplicate: Arc<AtomicBool>,
    next_transaction: u32,
    next_ue: u32,
}

impl ControlPlane {
    pub fn build(topology: &PipelineTopology, execution: Execution) -> Result<Self, ProcedureError> {
        if topology.mode != Mode::Disaggregated {
            return Err(ProcedureError::NotDisaggregated);
        }
        let hooks = Hooks::default();
        let duplicate = Arc::new(AtomicBool::new(false));
        let mut session = ProvisioningSession::new();
        let published = [Arc::default(), Arc::default()];
        let mut make = |i: Interface, peer: NodeRole, state: PeerState, published: &Arc<Mutex<(usize, OpCounts)>>| -> Result<(Requester, Responder), ProcedureError> {
            let spec = topology.link(i).ok_or(ProcedureError::Build(format!("missing {i} link")))?;
            spec.validate()?;
            let (cp, pp) = provision(spec, &mut session)?;
            let (mut peer_end, mut cp_end) =
                attach_transport(spec.transport, spec.port, spec.added_delay).map_err(transport_err(i))?;
            peer_end.tx = Box::new(crate::pipeline::transport_tap(peer_end.tx, hooks.tap(i, true)));
            cp_end.tx = Box::new(crate::pipeline::transport_tap(cp_end.tx, hooks.tap(i, false)));
            Ok((
                Requester {
                    link: i,
                    peer,
                    prot: cp,
                    end: cp_end,
                },
                Responder {
                    role: peer,
                    link: i,
                    prot: pp,
                    end: peer_end,
                    state,
                    duplicate: duplicate.clone(),
                    published: published.clone(),
                },
            ))
        };
        let (f1c, du) = make(
            Interface::F1C,
            NodeRole::Du,
            PeerState::Du { contexts: HashMap::new() },
            &published[0],
        )?;
        let (e1, cuup) = make(
            Interface::E1,
            NodeRole::CuUp,
            PeerState::CuUp {
                bearers: HashMap::new(),
                alloc: TeidAllocator::default(),
            },
            &published[1],
        )?;
        let peers = match execution {
            Execution::Deterministic => Peers::Stepped { f1c: du, e1: cuup },
            Execution::Threaded => spawn_peers([du, cuup]),
        };
        Ok(ControlPlane {
            f1c,
            e1,
            peers,
            published,
            hooks,
            duplicate,
            next_transaction: 1,
            next_ue: 1,
        })
    }

    /// Tamper hooks: on control links `uplink` means towards the CU-CP.
    pub fn hooks(&self) -> &Hooks {
        &self.hooks
    }

    /// Make the DU and CU-UP send every response twice.
    pub fn inject_duplicate_responses(&self, on: bool) {
        self.duplicate.store(on, Ordering::Relaxed);
    }

    /// UE contexts held by the DU and bearer contexts held by the CU-UP.
    pub fn context_counts(&self) -> (usize, usize) {
        (self.published[0].lock().unwrap().0, self.published[1].lock().unwrap().0)
    }

    /// Crypto operations spent by the CU-CP ends of both links.
    pub fn cucp_ops(&self) -> OpCounts {
        self.f1c.prot.ops() + self.e1.prot.ops()
    }

    /// Crypto operations on each control link, both ends together.
    pub fn link_ops(&self) -> [(Interface, OpCounts); 2] {
        [
            (Interface::F1C, self.f1c.prot.ops() + self.published[0].lock().unwrap().1),
            (Interface::E1, self.e1.prot.ops() + self.published[1].lock().unwrap().1),
        ]
    }

    fn transact(&mut self, e1: bool, req: ProcedureMessage) -> Result<(ProcedureTranscript, ProcedureMessage), ProcedureError> {
        let r = if e1 { &mut self.e1 } else { &mut self.f1c };
        let (link, peer) = (r.link, r.peer);
        let wire = r
            .prot
            .seal(&encode_message(&req))
            .map_err(|source| ProcedureError::Protection {
                link,
                node: NodeRole::CuCp,
                source,
            })?;
        let t0 = Instant::now();
        r.end.send(&wire).map_err(transport_err(link))?;
        let mut entries = vec![TranscriptEntry {
            at_ns: 0,
            direction: MessageDirection::Sent,
            message: req.clone(),
            wire_len: wire.len(),
        }];
        if let Peers::Stepped { f1c, e1: cuup } = &mut self.peers {
            let p = if e1 { cuup } else { f1c };
            if !p.serve_one(PROCEDURE_TIMEOUT)? {
                return Err(ProcedureError::Timeout(link));
            }
        }
        let r = if e1 { &mut self.e1 } else { &mut self.f1c };
        loop {
            let remaining = PROCEDURE_TIMEOUT.saturating_sub(t0.elapsed());
            if remaining.is_zero() {
                return Err(ProcedureError::Timeout(link));
            }
            let got = match r.end.recv(remaining.min(Duration::from_millis(2))) {
                Ok(b) => b,
                Err(TransportError::Timeout(_)) => {
                    if let Peers::Threaded { errors, .. } = &self.peers {
                        if let Ok(e) = errors.try_recv() {
                            return Err(e);
                        }
                    }
                    continue;
                }
                Err(e) => return Err(transport_err(link)(e)),
            };
            let plain = match r.prot.open(&got) {
                Ok(p) => p,
                // A replayed copy of an earlier response.
                Err(LinkError::ReplayRejected(_)) => continue,
                Err(source) => {
                    return Err(ProcedureError::Protection {
                        link,
                        node: NodeRole::CuCp,
                        source,
                    })
                }
            };
            let msg = decode_message(&plain).map_err(|source| ProcedureError::Malformed {
                link,
                node: NodeRole::CuCp,
                source,
            })?;
            if !msg.answers(&req) {
                continue;
            }
            let duration = t0.elapsed();
            entries.push(TranscriptEntry {
                at_ns: duration.as_nanos() as u64,
                direction: MessageDirection::Received,
                message: msg.clone(),
                wire_len: got.len(),
            });
            return Ok((
                ProcedureTranscript {
                    procedure: req.procedure,
                    link,
                    peer,
                    entries,
                    duration,
                },
                msg,
            ));
        }
    }

    fn fresh_transaction(&mut self) -> u32 {
        let t = self.next_transaction;
        self.next_transaction = self.next_transaction.wrapping_add(1);
        t
    }

    pub fn run_ue_context_setup(&mut self, ue_id: u32) -> Result<ProcedureTranscript, ProcedureError> {
        let tx = self.fresh_transaction();
        Ok(self.transact(false, ProcedureMessage::request(Procedure::UeContextSetup, tx, ue_id))?.0)
    }

    pub fn run_bearer_context_setup(&mut self, ue_id: u32) -> Result<(ProcedureTranscript, TunnelIds), ProcedureError> {
        let tx = self.fresh_transaction();
        let (t, resp) = self.transact(true, ProcedureMessage::request(Procedure::BearerContextSetup, tx, ue_id))?;
        let teids = match (resp.f1u_teid, resp.n3_teid) {
            (Some(f1u), Some(n3)) if f1u != 0 && n3 != 0 && f1u != n3 => TunnelIds { f1u, n3 },
            other => return Err(ProcedureError::BadResponse(format!("TEIDs {other:?}"))),
        };
        Ok((t, teids))
    }

    /// The AMF stub registers a new UE: UE Context Setup on F1-C, then Bearer
    /// Context Setup on E1.
    pub fn run_registration_sequence(&mut self) -> Result<RegistrationTranscript, ProcedureError> {
        let ue = self.next_ue;
        self.next_ue = self.next_ue.wrapping_add(1);
        let ue_context = self.run_ue_context_setup(ue)?;
        let (bearer_context, teids) = self.run_bearer_context_setup(ue)?;
        Ok(RegistrationTranscript {
            ue_context,
            bearer_context,
            teids,
        })
    }
}

fn spawn_peers(peers: [Responder; 2]) -> Peers {
    let stop = Arc::new(AtomicBool::new(false));
    let (err_tx, errors) = mpsc::channel();
    let handles = peers
        .into_iter()
        .map(|mut p| {
            let stop = stop.clone();
            let err_tx = err_tx.clone();
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    if let Err(e) = p.serve_one(Duration::from_millis(20)) {
                        let _ = err_tx.send(e);
                    }
                }
            })
        })
        .collect();
    Peers::Threaded {
        errors,
        stop,
        handles,
    }
}

impl Drop for ControlPlane {
    fn drop(&mut self) {
        if let Peers::Threaded { stop, handles, .. } = &mut self.peers {
            stop.store(true, Ordering::Relaxed);
            for h in handles.drain(..) {
                let _ = h.join();
            }
        }
    }
}
