//! Pipeline assembly and the echo driver.
//!
//! Deterministic execution steps every node from the calling thread, one
//! hop at a time. Threaded execution gives each node its own worker fed by
//! the link receive ends; only the UE stays with the caller. In both modes
//! the caller is the only one reading clocks.

use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::keys::LinkDirection;
use super::nodes::{Guard, Hop, Node};
use super::topology::{Interface, LinkSpec, Mode, NodeRole, PipelineTopology};
use super::transport::{attach_transport, LinkEnd, PacketRx, PacketTx, TapTx, TraceEntry, TransportError};
use super::{EchoError, PipelineError, TunnelIds};
use crate::links::{pdcp_provision, OpCounts, PdcpEntity, ProvisioningSession, UuProtection};

/// How long the driver waits for an echo to come back.
pub const ECHO_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Deterministic,
    Threaded,
}

impl Execution {
    pub fn as_str(self) -> &'static str {
        match self {
            Execution::Deterministic => "deterministic",
            Execution::Threaded => "threaded",
        }
    }
}

impl FromStr for Execution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deterministic" => Ok(Execution::Deterministic),
            "threaded" => Ok(Execution::Threaded),
            _ => Err(format!("unknown execution {s:?}; expected deterministic or threaded")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PipelineOptions {
    pub execution: Execution,
    pub teids: TunnelIds,
}

/// Flip bits in packets crossing one link in one direction.
/// `offset` wraps around the packet length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tamper {
    pub link: Interface,
    pub uplink: bool,
    pub offset: usize,
    pub xor: u8,
}

#[derive(Default)]
struct HookState {
    tamper: Mutex<Option<Tamper>>,
    trace: Mutex<Option<Vec<TraceEntry>>>,
}

/// Test and diagnostic taps on every link transmitter.
#[derive(Clone, Default)]
pub struct Hooks(Arc<HookState>);

impl Hooks {
    pub fn set_tamper(&self, t: Option<Tamper>) {
        *self.0.tamper.lock().unwrap() = t;
    }

    /// Start recording every packet put on any link.
    pub fn start_trace(&self) {
        *self.0.trace.lock().unwrap() = Some(Vec::new());
    }

    pub fn take_trace(&self) -> Vec<TraceEntry> {
        self.0.trace.lock().unwrap().take().unwrap_or_default()
    }

    pub(crate) fn tap(&self, link: Interface, uplink: bool) -> Arc<dyn Fn(&mut Vec<u8>) + Send + Sync> {
        let h = self.0.clone();
        Arc::new(move |b: &mut Vec<u8>| {
            if let Some(t) = *h.tamper.lock().unwrap() {
                if t.link == link && t.uplink == uplink && !b.is_empty() {
                    let i = t.offset % b.len();
                    b[i] ^= t.xor;
                }
            }
            if let Some(tr) = h.trace.lock().unwrap().as_mut() {
                tr.push(TraceEntry {
                    link,
                    uplink,
                    bytes: b.clone(),
                });
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EchoResult {
    /// UE protect through UE unprotect.
    pub rtt: Duration,
    /// Operations spent by each node on this round trip, UE first.
    pub ops: Vec<(NodeRole, OpCounts)>,
}

impl EchoResult {
    pub fn total(&self) -> OpCounts {
        self.ops.iter().map(|(_, o)| *o).sum()
    }

    pub fn ops_of(&self, role: NodeRole) -> OpCounts {
        self.ops.iter().find(|(r, _)| *r == role).map(|(_, o)| *o).unwrap_or_default()
    }
}

/// Ends of one link: `lower` is the UE-side end, `upper` the core side.
struct Wire {
    interface: Interface,
    lower: LinkEnd,
    upper: LinkEnd,
}

enum Engine {
    Stepped { nodes: Vec<Node>, links: Vec<Wire> },
    Threaded(Workers),
}

struct Workers {
    ue_end: LinkEnd,
    roles: Vec<NodeRole>,
    published: Vec<Arc<Mutex<OpCounts>>>,
    errors: mpsc::Receiver<EchoError>,
    stop: Arc<AtomicBool>,
    handles: Vec<JoinHandle<()>>,
}

pub struct Pipeline {
    topology: PipelineTopology,
    teids: TunnelIds,
    ue: PdcpEntity,
    hooks: Hooks,
    engine: Engine,
}

fn provision_guards(
    spec: &LinkSpec,
    session: &mut ProvisioningSession,
) -> Result<(Guard, Guard), PipelineError> {
    let i = spec.interface;
    let Some(id) = spec.security else {
        return Ok((Guard { link: i, esp: None }, Guard { link: i, esp: None }));
    };
    let suite = id.suite();
    let err = |source| PipelineError::Provision { interface: i, source };
    let (ul_tx, ul_rx) = session
        .provision(&suite, &spec.keys.esp_keys(i, &suite, LinkDirection::Uplink))
        .map_err(err)?;
    let (dl_tx, dl_rx) = session
        .provision(&suite, &spec.keys.esp_keys(i, &suite, LinkDirection::Downlink))
        .map_err(err)?;
    Ok((
        Guard {
            link: i,
            esp: Some((ul_tx, dl_rx)),
        },
        Guard {
            link: i,
            esp: Some((dl_tx, ul_rx)),
        },
    ))
}

impl Pipeline {
    pub fn build(topology: &PipelineTopology, opts: PipelineOptions) -> Result<Self, PipelineError> {
        for l in topology.up_links.iter().chain(&topology.control_links) {
            l.validate()?;
        }
        let teids = opts.teids;
        if teids.n3 == 0 {
            return Err(PipelineError::ZeroTeid(Interface::N3));
        }
        if topology.mode == Mode::Disaggregated && teids.f1u == 0 {
            return Err(PipelineError::ZeroTeid(Interface::F1U));
        }
        let spec = |i: Interface| topology.link(i).cloned().ok_or(PipelineError::MissingNode("user-plane link"));
        let uu = spec(Interface::Uu)?;
        let protection = if uu.security.is_some() {
            UuProtection::IntegrityAndCiphering
        } else {
            UuProtection::Off
        };
        let (ue, net) = pdcp_provision(&uu.keys.pdcp_config(protection)).map_err(|source| PipelineError::Provision {
            interface: Interface::Uu,
            source,
        })?;

        let mut session = ProvisioningSession::new();
        let (n3_low, n3_up) = provision_guards(&spec(Interface::N3)?, &mut session)?;
        let nodes = match topology.mode {
            Mode::Monolithic => vec![
                Node::Gnb {
                    pdcp: net,
                    n3: n3_low,
                    teid: teids.n3,
                },
                Node::Upf { n3: n3_up, teid: teids.n3 },
            ],
            Mode::Disaggregated => {
                let (f1_low, f1_up) = provision_guards(&spec(Interface::F1U)?, &mut session)?;
                vec![
                    Node::Du {
                        f1u: f1_low,
                        teid: teids.f1u,
                    },
                    Node::CuUp {
                        f1u: f1_up,
                        pdcp: net,
                        n3: n3_low,
                        teids,
                    },
                    Node::Upf { n3: n3_up, teid: teids.n3 },
                ]
            }
        };

        let hooks = Hooks::default();
        let mut links = Vec::new();
        for l in &topology.up_links {
            let (mut lower, mut upper) =
                attach_transport(l.transport, l.port, l.added_delay).map_err(|source| PipelineError::Transport {
                    interface: l.interface,
                    source,
                })?;
            lower.tx = Box::new(TapTx {
                inner: lower.tx,
                tap: hooks.tap(l.interface, true),
            });
            upper.tx = Box::new(TapTx {
                inner: upper.tx,
                tap: hooks.tap(l.interface, false),
            });
            links.push(Wire {
                interface: l.interface,
                lower,
                upper,
            });
        }
        debug_assert_eq!(links.len(), nodes.len());

        let engine = match opts.execution {
            Execution::Deterministic => Engine::Stepped { nodes, links },
            Execution::Threaded => Engine::Threaded(spawn_workers(nodes, links)),
        };
        Ok(Pipeline {
            topology: topology.clone(),
            teids,
            ue,
            hooks,
            engine,
        })
    }

    pub fn topology(&self) -> &PipelineTopology {
        &self.topology
    }

    pub fn teids(&self) -> TunnelIds {
        self.teids
    }

    pub fn hooks(&self) -> &Hooks {
        &self.hooks
    }

    /// Cumulative operation counters per node, UE first.
    pub fn ops(&self) -> Vec<(NodeRole, OpCounts)> {
        let mut v = vec![(NodeRole::Ue, self.ue.ops())];
        match &self.engine {
            Engine::Stepped { nodes, .. } => v.extend(nodes.iter().map(|n| (n.role(), n.ops()))),
            Engine::Threaded(w) => v.extend(
                w.roles
                    .iter()
                    .zip(&w.published)
                    .map(|(r, p)| (*r, *p.lock().unwrap())),
            ),
        }
        v
    }

    pub fn total_ops(&self) -> OpCounts {
        self.ops().into_iter().map(|(_, o)| o).sum()
    }

    /// One UE -> UPF -> UE round trip of `payload`.
    pub fn send_echo(&mut self, payload: &[u8]) -> Result<EchoResult, EchoError> {
        let before = self.ops();
        let uu_err = |source| EchoError::Protection {
            link: Interface::Uu,
            node: NodeRole::Ue,
            source,
        };
        let t0 = Instant::now();
        let pdu = self.ue.protect(payload).map_err(uu_err)?;
        let back = match &mut self.engine {
            Engine::Stepped { nodes, links } => step(nodes, links, pdu)?,
            Engine::Threaded(w) => w.round_trip(&pdu)?,
        };
        let sdu = self.ue.unprotect(&back).map_err(uu_err)?;
        let rtt = t0.elapsed();
        if sdu != payload {
            return Err(EchoError::PayloadMismatch {
                sent: payload.len(),
                got: sdu.len(),
            });
        }
        let ops = self
            .ops()
            .into_iter()
            .zip(before)
            .map(|((r, a), (_, b))| {
                (
                    r,
                    OpCounts {
                        esp: a.esp - b.esp,
                        dtls: a.dtls - b.dtls,
                        pdcp_integrity: a.pdcp_integrity - b.pdcp_integrity,
                        pdcp_cipher: a.pdcp_cipher - b.pdcp_cipher,
                    },
                )
            })
            .collect();
        Ok(EchoResult { rtt, ops })
    }
}

fn transport_err(link: Interface) -> impl Fn(TransportError) -> EchoError {
    move |e| match e {
        TransportError::Timeout(d) => EchoError::Timeout(d),
        e => EchoError::Transport {
            link,
            reason: e.to_string(),
        },
    }
}

fn step(nodes: &mut [Node], links: &[Wire], mut pkt: Vec<u8>) -> Result<Vec<u8>, EchoError> {
    let mut turn = None;
    for (i, (node, l)) in nodes.iter_mut().zip(links).enumerate() {
        let e = transport_err(l.interface);
        l.lower.send(&pkt).map_err(&e)?;
        let got = l.upper.recv(ECHO_TIMEOUT).map_err(&e)?;
        match node.uplink(&got)? {
            Hop::Forward(b) => pkt = b,
            Hop::Bounce(b) => {
                pkt = b;
                turn = Some(i);
                break;
            }
        }
    }
    let top = turn.expect("the last node bounces");
    for i in (0..=top).rev() {
        let l = &links[i];
        let e = transport_err(l.interface);
        l.upper.send(&pkt).map_err(&e)?;
        pkt = l.lower.recv(ECHO_TIMEOUT).map_err(&e)?;
        if i > 0 {
            pkt = nodes[i - 1].downlink(&pkt)?;
        }
    }
    Ok(pkt)
}

enum Inbound {
    FromBelow(Vec<u8>),
    FromAbove(Vec<u8>),
}

const POLL: Duration = Duration::from_millis(20);

fn spawn_pump(
    rx: Box<dyn PacketRx>,
    inbox: Sender<Inbound>,
    below: bool,
    stop: Arc<AtomicBool>,
) -> JoinHandle<()> {
    std::thread::spawn(move || {
        while !stop.load(Ordering::Relaxed) {
            match rx.recv(POLL) {
                Ok(b) => {
                    let m = if below { Inbound::FromBelow(b) } else { Inbound::FromAbove(b) };
                    if inbox.send(m).is_err() {
                        return;
                    }
                }
                Err(TransportError::Timeout(_)) => {}
                Err(_) => return,
            }
        }
    })
}

fn spawn_workers(nodes: Vec<Node>, links: Vec<Wire>) -> Workers {
    let stop = Arc::new(AtomicBool::new(false));
    let (err_tx, errors) = mpsc::channel();
    let mut handles = Vec::new();
    let mut roles = Vec::new();
    let mut published = Vec::new();

    // Split every link into the part each side owns.
    let mut lowers: Vec<Option<LinkEnd>> = Vec::new();
    let mut uppers: Vec<Option<(Interface, LinkEnd)>> = Vec::new();
    for w in links {
        lowers.push(Some(w.lower));
        uppers.push(Some((w.interface, w.upper)));
    }
    let ue_end = lowers[0].take().unwrap();

    for (i, mut node) in nodes.into_iter().enumerate() {
        let (down_if, down) = uppers[i].take().unwrap();
        let up = lowers.get_mut(i + 1).and_then(Option::take);
        let up_if = uppers.get(i + 1).and_then(|u| u.as_ref().map(|(i, _)| *i));
        let (inbox_tx, inbox) = mpsc::channel();
        handles.push(spawn_pump(down.rx, inbox_tx.clone(), true, stop.clone()));
        let up_tx: Option<Box<dyn PacketTx>> = up.map(|u| {
            handles.push(spawn_pump(u.rx, inbox_tx.clone(), false, stop.clone()));
            u.tx
        });
        drop(inbox_tx);
        let down_tx = down.tx;
        let pubd = Arc::new(Mutex::new(OpCounts::default()));
        roles.push(node.role());
        published.push(pubd.clone());
        let err_tx = err_tx.clone();
        handles.push(std::thread::spawn(move || loop {
            let msg = match inbox.recv_timeout(POLL) {
                Ok(m) => m,
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => return,
            };
            let out = match msg {
                Inbound::FromBelow(b) => node.uplink(&b).map(|h| match h {
                    Hop::Forward(b) => (true, b),
                    Hop::Bounce(b) => (false, b),
                }),
                Inbound::FromAbove(b) => node.downlink(&b).map(|b| (false, b)),
            };
            *pubd.lock().unwrap() = node.ops();
            let sent = match out {
                Ok((true, b)) => {
                    let tx = up_tx.as_ref().expect("uplink forward needs an upper link");
                    tx.send(&b).map_err(transport_err(up_if.unwrap()))
                }
                Ok((false, b)) => down_tx.send(&b).map_err(transport_err(down_if)),
                Err(e) => Err(e),
            };
            if let Err(e) = sent {
                let _ = err_tx.send(e);
            }
        }));
    }
    Workers {
        ue_end,
        roles,
        published,
        errors,
        stop,
        handles,
    }
}

impl Workers {
    fn round_trip(&mut self, pdu: &[u8]) -> Result<Vec<u8>, EchoError> {
        // Errors left over from an earlier failed echo are stale.
        while self.errors.try_recv().is_ok() {}
        let e = transport_err(Interface::Uu);
        self.ue_end.send(pdu).map_err(&e)?;
        let start = Instant::now();
        loop {
            match self.ue_end.recv(Duration::from_millis(2)) {
                Ok(b) => return Ok(b),
                Err(TransportError::Timeout(_)) => {
                    if let Ok(err) = self.errors.try_recv() {
                        return Err(err);
                    }
                    if start.elapsed() > ECHO_TIMEOUT {
                        return Err(EchoError::Timeout(ECHO_TIMEOUT));
                    }
                }
                Err(other) => return Err(e(other)),
            }
        }
    }
}

impl Drop for Workers {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
    }
}
