//! Packet transports between adjacent nodes: a lossless in-process queue
//! pair, or UDP datagram sockets on 127.0.0.1. Both ends of a link expose
//! the same send/receive contract.

use std::io;
use std::net::{Ipv4Addr, SocketAddr, UdpSocket};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::topology::TransportKind;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("port {0} on 127.0.0.1 is already in use")]
    PortInUse(u16),
    #[error("peer end of the link is gone")]
    Disconnected,
    #[error("timed out after {0:?} waiting for a packet")]
    Timeout(Duration),
    #[error("socket error: {0}")]
    Io(#[from] io::Error),
}

pub trait PacketTx: Send {
    fn send(&self, bytes: &[u8]) -> Result<(), TransportError>;
}

pub trait PacketRx: Send {
    fn recv(&self, timeout: Duration) -> Result<Vec<u8>, TransportError>;
}

/// One side of a link.
pub struct LinkEnd {
    pub tx: Box<dyn PacketTx>,
    pub rx: Box<dyn PacketRx>,
}

impl LinkEnd {
    pub fn send(&self, bytes: &[u8]) -> Result<(), TransportError> {
        self.tx.send(bytes)
    }

    pub fn recv(&self, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        self.rx.recv(timeout)
    }
}

struct ChanTx(Sender<Vec<u8>>);
struct ChanRx(Receiver<Vec<u8>>);

impl PacketTx for ChanTx {
    fn send(&self, bytes: &[u8]) -> Result<(), TransportError> {
        self.0.send(bytes.to_vec()).map_err(|_| TransportError::Disconnected)
    }
}

impl PacketRx for ChanRx {
    fn recv(&self, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        self.0.recv_timeout(timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => TransportError::Timeout(timeout),
            RecvTimeoutError::Disconnected => TransportError::Disconnected,
        })
    }
}

struct UdpTx(UdpSocket);
struct UdpRx(UdpSocket);

const MAX_DATAGRAM: usize = 65_535;

impl PacketTx for UdpTx {
    fn send(&self, bytes: &[u8]) -> Result<(), TransportError> {
        let n = self.0.send(bytes)?;
        if n != bytes.len() {
            return Err(TransportError::Io(io::Error::other("short datagram write")));
        }
        Ok(())
    }
}

impl PacketRx for UdpRx {
    fn recv(&self, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        self.0.set_read_timeout(Some(timeout.max(Duration::from_micros(1))))?;
        let mut buf = vec![0u8; MAX_DATAGRAM];
        match self.0.recv(&mut buf) {
            Ok(n) => {
                buf.truncate(n);
                Ok(buf)
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                Err(TransportError::Timeout(timeout))
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Busy-waits before each send: sleeping would overshoot small delays.
struct DelayedTx {
    inner: Box<dyn PacketTx>,
    delay: Duration,
}

impl PacketTx for DelayedTx {
    fn send(&self, bytes: &[u8]) -> Result<(), TransportError> {
        let until = Instant::now() + self.delay;
        while Instant::now() < until {
            std::hint::spin_loop();
        }
        self.inner.send(bytes)
    }
}

/// Applies a mutation to every packet before handing it on. Used by the
/// fault-injection hooks and the byte tracer.
pub(crate) struct TapTx {
    pub inner: Box<dyn PacketTx>,
    pub tap: Arc<dyn Fn(&mut Vec<u8>) + Send + Sync>,
}

impl PacketTx for TapTx {
    fn send(&self, bytes: &[u8]) -> Result<(), TransportError> {
        let mut b = bytes.to_vec();
        (self.tap)(&mut b);
        self.inner.send(&b)
    }
}

pub(crate) fn transport_tap(
    inner: Box<dyn PacketTx>,
    tap: Arc<dyn Fn(&mut Vec<u8>) + Send + Sync>,
) -> TapTx {
    TapTx { inner, tap }
}

fn bind(port: u16) -> Result<UdpSocket, TransportError> {
    UdpSocket::bind(SocketAddr::from((Ipv4Addr::LOCALHOST, port))).map_err(|e| {
        if e.kind() == io::ErrorKind::AddrInUse {
            TransportError::PortInUse(port)
        } else {
            TransportError::Io(e)
        }
    })
}

/// Creates both ends of a link: `(ue_side, core_side)`. For UDP the core
/// side binds `port` (ephemeral when `None`), the UE side an ephemeral port.
pub fn attach_transport(
    kind: TransportKind,
    port: Option<u16>,
    added_delay: Duration,
) -> Result<(LinkEnd, LinkEnd), TransportError> {
    let (mut a, mut b) = match kind {
        TransportKind::InProcess => {
            let (tx_ab, rx_ab) = mpsc::channel();
            let (tx_ba, rx_ba) = mpsc::channel();
            (
                LinkEnd {
                    tx: Box::new(ChanTx(tx_ab)),
                    rx: Box::new(ChanRx(rx_ba)),
                },
                LinkEnd {
                    tx: Box::new(ChanTx(tx_ba)),
                    rx: Box::new(ChanRx(rx_ab)),
                },
            )
        }
        TransportKind::UdpLoopback => {
            let core = bind(port.unwrap_or(0))?;
            let ue = bind(0)?;
            ue.connect(core.local_addr()?)?;
            core.connect(ue.local_addr()?)?;
            (
                LinkEnd {
                    tx: Box::new(UdpTx(ue.try_clone()?)),
                    rx: Box::new(UdpRx(ue)),
                },
                LinkEnd {
                    tx: Box::new(UdpTx(core.try_clone()?)),
                    rx: Box::new(UdpRx(core)),
                },
            )
        }
    };
    if !added_delay.is_zero() {
        a.tx = Box::new(DelayedTx { inner: a.tx, delay: added_delay });
        b.tx = Box::new(DelayedTx { inner: b.tx, delay: added_delay });
    }
    Ok((a, b))
}

/// One packet as it was put on a link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub link: super::Interface,
    pub uplink: bool,
    pub bytes: Vec<u8>,
}
