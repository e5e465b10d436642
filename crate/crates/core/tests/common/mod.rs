#![allow(dead_code)]

pub mod vectors;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ransec::crypto::{SecuritySuite, SuiteFamily, SuiteId};
use ransec::links::{
    dtls_provision, pdcp_provision, sa_provision, DtlsEndpoint, LinkError, PdcpEntity, SecurityAssociation,
    UuProtection, REPLAY_WINDOW,
};
use ransec::pipeline::{Interface, LinkDirection, LinkKeys};

/// PDCP receive window: half the 18-bit SN space.
pub const PDCP_WINDOW: u64 = 1 << 17;

/// One direction of a provisioned link, sender and receiver.
pub enum Link {
    Esp(SecurityAssociation, SecurityAssociation),
    Dtls(DtlsEndpoint, DtlsEndpoint),
    Pdcp(PdcpEntity, PdcpEntity),
}

impl Link {
    pub fn new(interface: Interface, suite: SuiteId) -> Link {
        let s = SecuritySuite::of(suite);
        let keys = LinkKeys::default_for(interface);
        match s.family {
            SuiteFamily::Esp => {
                let k = keys.esp_keys(interface, &s, LinkDirection::Uplink);
                let (tx, rx) = sa_provision(&s, &k, 0x4000).unwrap();
                Link::Esp(tx, rx)
            }
            SuiteFamily::Dtls => {
                let (a, b) = dtls_provision(&keys.dtls_keys(interface), 1);
                Link::Dtls(a, b)
            }
            SuiteFamily::Uu => {
                let (ue, net) = pdcp_provision(&keys.pdcp_config(UuProtection::IntegrityAndCiphering)).unwrap();
                Link::Pdcp(ue, net)
            }
        }
    }

    pub fn protect(&mut self, m: &[u8]) -> Vec<u8> {
        match self {
            Link::Esp(tx, _) => tx.protect(m),
            Link::Dtls(tx, _) => tx.protect(m),
            Link::Pdcp(tx, _) => tx.protect(m),
        }
        .expect("protect")
    }

    pub fn unprotect(&mut self, w: &[u8]) -> Result<Vec<u8>, LinkError> {
        match self {
            Link::Esp(_, rx) => rx.unprotect(w),
            Link::Dtls(_, rx) => rx.unprotect(w),
            Link::Pdcp(_, rx) => rx.unprotect(w),
        }
    }

    /// Everything observable about the receiver.
    pub fn rx_state(&self) -> String {
        match self {
            Link::Esp(_, rx) => format!("{:?}", rx.state()),
            Link::Dtls(_, rx) => format!("{:?}", rx.state()),
            Link::Pdcp(_, rx) => format!("{:?}", rx.state()),
        }
    }
}

/// Every (interface, suite) pair the topology allows.
pub fn link_matrix() -> Vec<(Interface, SuiteId)> {
    Interface::ALL
        .into_iter()
        .flat_map(|i| SuiteId::ALL.into_iter().filter(move |s| i.accepts(*s)).map(move |s| (i, s)))
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct PropertyCounts {
    pub roundtrips: usize,
    pub tampers: usize,
    pub replays: usize,
    pub boundaries: usize,
}

fn random_packet(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = rng.random_range(1..=1400usize);
    (0..n).map(|_| rng.random()).collect()
}

/// A rejection that must leave the receiver untouched.
fn expect_rejected(link: &mut Link, w: &[u8], what: &str) -> Result<(), String> {
    let before = link.rx_state();
    match link.unprotect(w) {
        Ok(_) => Err(format!("{what}: accepted")),
        Err(_) if link.rx_state() != before => Err(format!("{what}: state changed on rejection")),
        Err(_) => Ok(()),
    }
}

fn expect_accepted(link: &mut Link, w: &[u8], m: &[u8], what: &str) -> Result<(), String> {
    match link.unprotect(w) {
        Ok(got) if got == m => Ok(()),
        Ok(_) => Err(format!("{what}: payload differs")),
        Err(e) => Err(format!("{what}: {e}")),
    }
}

/// Roundtrip identity, single-bit tamper rejection, duplicate rejection and
/// window-boundary behaviour for one link. Returns counts of checks run.
pub fn property_suite(
    interface: Interface,
    suite: SuiteId,
    roundtrips: usize,
    tampers: usize,
    seed: u64,
) -> Result<PropertyCounts, String> {
    let tag = format!("{interface}/{suite}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = PropertyCounts::default();
    let mut link = Link::new(interface, suite);

    // roundtrips, each interleaved with a replay of the previous packet
    let mut last: Option<Vec<u8>> = None;
    for i in 0..roundtrips {
        let m = random_packet(&mut rng);
        let w = link.protect(&m);
        expect_accepted(&mut link, &w, &m, &format!("{tag} roundtrip {i}"))?;
        c.roundtrips += 1;
        if i % 10 == 0 {
            expect_rejected(&mut link, &w, &format!("{tag} duplicate {i}"))?;
            if let Some(p) = &last {
                expect_rejected(&mut link, p, &format!("{tag} stale {i}"))?;
            }
            c.replays += 1;
        }
        last = Some(w);
    }

    // single-bit flips at sampled positions of fresh packets
    for i in 0..tampers {
        let m = random_packet(&mut rng);
        let w = link.protect(&m);
        let mut bad = w.clone();
        let bit = rng.random_range(0..bad.len() * 8);
        bad[bit / 8] ^= 0x80 >> (bit % 8);
        expect_rejected(&mut link, &bad, &format!("{tag} tamper {i} bit {bit}"))?;
        // the genuine packet still goes through afterwards
        expect_accepted(&mut link, &w, &m, &format!("{tag} after tamper {i}"))?;
        c.tampers += 1;
    }

    c.boundaries += match SecuritySuite::of(suite).family {
        SuiteFamily::Uu => pdcp_boundaries(&tag, interface, suite)?,
        _ => window_boundaries(&tag, interface, suite)?,
    };
    Ok(c)
}

/// 64-entry sliding window: hold N packets, deliver the newest first, then
/// probe both edges.
fn window_boundaries(tag: &str, interface: Interface, suite: SuiteId) -> Result<usize, String> {
    let mut link = Link::new(interface, suite);
    let n = 3 * REPLAY_WINDOW as usize;
    let held: Vec<(Vec<u8>, Vec<u8>)> = (0..n)
        .map(|i| {
            let m = format!("packet {i}").into_bytes();
            let w = link.protect(&m);
            (m, w)
        })
        .collect();
    let top = n - 1;
    let edge = top - (REPLAY_WINDOW as usize - 1);
    expect_accepted(&mut link, &held[top].1, &held[top].0, &format!("{tag} newest"))?;
    expect_accepted(&mut link, &held[edge].1, &held[edge].0, &format!("{tag} oldest in window"))?;
    expect_rejected(&mut link, &held[edge].1, &format!("{tag} oldest in window twice"))?;
    expect_rejected(&mut link, &held[edge - 1].1, &format!("{tag} just outside window"))?;
    expect_rejected(&mut link, &held[0].1, &format!("{tag} far outside window"))?;
    // out-of-order inside the window, each accepted exactly once
    for k in (edge + 1..top).rev() {
        expect_accepted(&mut link, &held[k].1, &held[k].0, &format!("{tag} in window {k}"))?;
        expect_rejected(&mut link, &held[k].1, &format!("{tag} in window {k} twice"))?;
    }
    Ok(5 + 2 * (top - edge - 1))
}

/// PDCP delivers in order within a 2^17 window ahead of RX_DELIV.
fn pdcp_boundaries(tag: &str, interface: Interface, suite: SuiteId) -> Result<usize, String> {
    let mut link = Link::new(interface, suite);
    let Link::Pdcp(..) = link else { unreachable!() };
    let base = 5u64;
    let at = |link: &mut Link, tx_count: u64| {
        if let Link::Pdcp(tx, rx) = link {
            tx.set_counts(tx_count, 0);
            rx.set_counts(0, base);
        }
        let m = format!("count {tx_count}").into_bytes();
        let w = link.protect(&m);
        (m, w)
    };
    let (m, w) = at(&mut link, base + PDCP_WINDOW - 1);
    expect_accepted(&mut link, &w, &m, &format!("{tag} last count in window"))?;
    let (_, w) = at(&mut link, base + PDCP_WINDOW);
    expect_rejected(&mut link, &w, &format!("{tag} first count past window"))?;
    let (_, w) = at(&mut link, base - 1);
    expect_rejected(&mut link, &w, &format!("{tag} count behind RX_DELIV"))?;
    let (m, w) = at(&mut link, base);
    expect_accepted(&mut link, &w, &m, &format!("{tag} count at RX_DELIV"))?;
    expect_rejected(&mut link, &w, &format!("{tag} count at RX_DELIV twice"))?;
    Ok(5)
}
