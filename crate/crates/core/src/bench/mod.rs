//! Throughput of the protection paths across buffer sizes.
//!
//! Every measurement runs the same code the links use: ESP suites through
//! [`SecurityAssociation::protect_in_place`], the Uu suite through
//! [`PdcpEntity::protect_in_place`] (NIA2 then NEA2). Buffers are filled
//! with seeded random bytes before timing starts. A curve interleaves its
//! sizes across repetitions and each size reports the median. Sizes below [`BATCH_BYTES`] are protected
//! several times per repetition and divided back out.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::crypto::{aes_acceleration_available, Direction, GcmKey, Nea2, Nia2, SuiteFamily, SuiteId};
use crate::links::{sa_provision, EspKeys, LinkError, PdcpConfig, PdcpEntity, PdcpRole, SecurityAssociation, UuProtection};
use crate::stats::report::BenchRow;
use crate::stats::{linear_fit, LinearFit, StatsError};

pub const KIB: usize = 1024;
pub const MIB: usize = 1024 * KIB;
pub const GIB: usize = 1024 * MIB;
/// Smallest amount of data one timed repetition covers.
pub const BATCH_BYTES: usize = MIB;
/// Ordering verdicts only look at sizes from here up.
pub const LARGE_REGIME: usize = 64 * KIB;
pub const CHUNK: usize = 64 * MIB;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("curves share no common sizes")]
    DisjointSizes,
    #[error("could not allocate {0} bytes")]
    Allocation(usize),
}

/// What to time. `Suite` is a full protect path; the other two are the
/// halves of the Uu composite on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchTarget {
    Suite(SuiteId),
    Nia2Only,
    Nea2Only,
}

impl BenchTarget {
    pub fn label(self) -> String {
        match self {
            BenchTarget::Suite(s) => s.to_string(),
            BenchTarget::Nia2Only => "NIA2".into(),
            BenchTarget::Nea2Only => "NEA2".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchPoint {
    pub size: usize,
    pub runtime_s: f64,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCurve {
    pub suite: String,
    pub points: Vec<BenchPoint>,
    pub accel: bool,
    /// Set when a size could not be allocated; later sizes are missing.
    pub truncated: bool,
}

impl BenchCurve {
    pub fn rows(&self) -> Vec<BenchRow> {
        self.points
            .iter()
            .map(|p| BenchRow {
                suite: self.suite.clone(),
                size_bytes: p.size as u64,
                runtime_s: p.runtime_s,
                throughput_bps: p.throughput_bps,
                accel: self.accel,
            })
            .collect()
    }

    pub fn from_rows(rows: &[BenchRow]) -> Vec<BenchCurve> {
        let mut out: Vec<BenchCurve> = Vec::new();
        for r in rows {
            let p = BenchPoint {
                size: r.size_bytes as usize,
                runtime_s: r.runtime_s,
                throughput_bps: r.throughput_bps,
            };
            match out.iter_mut().find(|c| c.suite == r.suite) {
                Some(c) => c.points.push(p),
                None => out.push(BenchCurve {
                    suite: r.suite.clone(),
                    points: vec![p],
                    accel: r.accel,
                    truncated: false,
                }),
            }
        }
        out
    }

    pub fn at(&self, size: usize) -> Option<&BenchPoint> {
        self.points.iter().find(|p| p.size == size)
    }

    /// Least-squares fit of runtime against size over `lo..=hi` bytes.
    pub fn linearity(&self, lo: usize, hi: usize) -> Result<LinearFit, StatsError> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.size >= lo && p.size <= hi)
            .map(|p| (p.size as f64, p.runtime_s))
            .collect();
        linear_fit(&pts)
    }

    /// Throughput on the way up to its peak never falls more than `band`
    /// below the best seen at a smaller size. Past the peak the buffer
    /// outgrows the caches and memory bandwidth takes over, so later sizes
    /// are not held to this.
    pub fn ramp_monotone_within(&self, band: f64) -> bool {
        let Some(peak) = self
            .points
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.throughput_bps.total_cmp(&b.1.throughput_bps))
            .map(|(i, _)| i)
        else {
            return true;
        };
        let mut best = 0.0f64;
        for p in &self.points[..=peak] {
            if p.throughput_bps < best * (1.0 - band) {
                return false;
            }
            best = best.max(p.throughput_bps);
        }
        true
    }
}

/// One protect path with its own keys and counters.
pub enum Protector {
    Esp(SecurityAssociation),
    Uu(PdcpEntity),
    Mac(Nia2),
    Cipher(Nea2),
}

impl Protector {
    pub fn new(target: BenchTarget) -> Result<Self, BenchError> {
        let cfg = PdcpConfig::fixed(UuProtection::IntegrityAndCiphering);
        Ok(match target {
            BenchTarget::Suite(id) => {
                let suite = id.suite();
                match suite.family {
                    SuiteFamily::Esp => {
                        let (tx, _) = sa_provision(&suite, &EspKeys::fixed_for(&suite, 0x42), 0x1000)?;
                        Protector::Esp(tx)
                    }
                    SuiteFamily::Uu => Protector::Uu(PdcpEntity::new(&cfg, PdcpRole::Ue)?),
                    SuiteFamily::Dtls => {
                        return Err(BenchError::InvalidArgument(format!(
                            "{id} is a record protocol, not a bulk protection path"
                        )))
                    }
                }
            }
            BenchTarget::Nia2Only => Protector::Mac(Nia2::new(&cfg.integrity_key)),
            BenchTarget::Nea2Only => Protector::Cipher(Nea2::new(&cfg.ciphering_key)),
        })
    }

    pub fn headroom(&self) -> usize {
        match self {
            Protector::Esp(sa) => sa.headroom(),
            Protector::Uu(_) => crate::wire::PDCP_HEADER_LEN,
            Protector::Mac(_) | Protector::Cipher(_) => 0,
        }
    }

    /// Worst-case growth behind the data.
    pub fn tailroom(&self) -> usize {
        64
    }

    /// Protect `buf` (headroom then data) in place. Afterwards `buf` holds
    /// the protected packet.
    pub fn protect(&mut self, buf: &mut Vec<u8>) -> Result<(), BenchError> {
        match self {
            Protector::Esp(sa) => sa.protect_in_place(buf)?,
            Protector::Uu(p) => p.protect_in_place(buf)?,
            Protector::Mac(m) => {
                let tag = m.mac_parts(1, 0, Direction::Uplink, &[buf]);
                buf.extend_from_slice(&tag);
            }
            Protector::Cipher(c) => c.apply(1, 0, Direction::Uplink, buf),
        }
        Ok(())
    }
}

fn alloc(len: usize) -> Result<Vec<u8>, BenchError> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| BenchError::Allocation(len))?;
    Ok(v)
}

/// Buffer of `headroom` zero bytes, then `size` random bytes, with spare
/// capacity for the trailer.
fn fill_buffer(p: &Protector, size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<u8>, BenchError> {
    let mut buf = alloc(p.headroom() + size + p.tailroom())?;
    buf.resize(p.headroom() + size, 0);
    rng.fill_bytes(&mut buf[p.headroom()..]);
    Ok(buf)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Protects of `buf` per timed batch, about [`BATCH_BYTES`] of work.
fn batch_len(size: usize) -> usize {
    BATCH_BYTES.div_ceil(size.max(1)).max(1)
}

/// Seconds per protect, averaged over one batch.
fn time_batch(p: &mut Protector, buf: &mut Vec<u8>, batch: usize) -> Result<f64, BenchError> {
    let len = buf.len();
    let t0 = Instant::now();
    for _ in 0..batch {
        p.protect(buf)?;
        buf.truncate(len);
    }
    Ok(t0.elapsed().as_secs_f64() / batch as f64)
}

/// Seconds per protect of `size` bytes: median over `reps` timed repetitions.
pub fn time_protect(p: &mut Protector, size: usize, reps: usize, rng: &mut ChaCha8Rng) -> Result<f64, BenchError> {
    if reps == 0 {
        return Err(BenchError::InvalidArgument("repetitions must be at least 1".into()));
    }
    let mut buf = fill_buffer(p, size, rng)?;
    // One untimed pass to fault in pages and warm the key schedule.
    time_batch(p, &mut buf, 1)?;
    let mut times = (0..reps)
        .map(|_| time_batch(p, &mut buf, batch_len(size)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(median(&mut times))
}

/// Repetitions go round-robin over the sizes, so a slow stretch on a shared
/// host hits every size a little instead of one size entirely.
pub fn bench_suite(target: BenchTarget, sizes: &[usize], reps: usize, seed: u64) -> Result<BenchCurve, BenchError> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::InvalidArgument("sizes must be strictly increasing".into()));
    }
    if reps == 0 {
        return Err(BenchError::InvalidArgument("repetitions must be at least 1".into()));
    }
    let mut p = Protector::new(target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truncated = false;
    let mut bufs = Vec::with_capacity(sizes.len());
    for &size in sizes {
        match fill_buffer(&p, size, &mut rng) {
            Ok(mut b) => {
                time_batch(&mut p, &mut b, 1)?;
                bufs.push(b);
            }
            Err(BenchError::Allocation(_)) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut times = vec![Vec::with_capacity(reps); bufs.len()];
    for _ in 0..reps {
        for ((buf, t), &size) in bufs.iter_mut().zip(&mut times).zip(sizes) {
            t.push(time_batch(&mut p, buf, batch_len(size))?);
        }
    }
    let points = sizes
        .iter()
        .zip(&mut times)
        .map(|(&size, t)| {
            let runtime_s = median(t);
            BenchPoint {
                size,
                runtime_s,
                throughput_bps: size as f64 / runtime_s,
            }
        })
        .collect();
    Ok(BenchCurve {
        suite: target.label(),
        points,
        accel: aes_acceleration_available(),
        truncated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GibMode {
    SingleBuffer,
    /// 64 MiB pieces, one protect each.
    Chunked,
}

/// Wall time to protect 1 GiB.
pub fn bench_runtime_1gib(target: BenchTarget, mode: GibMode, seed: u64) -> Result<f64, BenchError> {
    bench_runtime(target, GIB, mode, seed)
}

pub fn bench_runtime(target: BenchTarget, total: usize, mode: GibMode, seed: u64) -> Result<f64, BenchError> {
    let mut p = Protector::new(target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let piece = match mode {
        GibMode::SingleBuffer => total,
        GibMode::Chunked => CHUNK.min(total),
    };
    let mut buf = fill_buffer(&p, piece, &mut rng)?;
    let len = buf.len();
    let t0 = Instant::now();
    let mut done = 0;
    while done < total {
        p.protect(&mut buf)?;
        buf.truncate(len);
        done += piece;
    }
    Ok(t0.elapsed().as_secs_f64())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UuComparison {
    pub size: usize,
    /// NIA2 then NEA2 through the PDCP entity.
    pub composite_s: f64,
    pub mac_s: f64,
    pub cipher_s: f64,
    /// One AES-GCM-128 seal over the same bytes.
    pub aead_s: f64,
}

/// The sequential Uu composite against a single AEAD pass, per operation.
pub fn uu_vs_aead(size: usize, reps: usize, seed: u64) -> Result<UuComparison, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = |target| -> Result<f64, BenchError> { time_protect(&mut Protector::new(target)?, size, reps, &mut rng) };
    let composite_s = t(BenchTarget::Suite(SuiteId::Nia2Nea2))?;
    let mac_s = t(BenchTarget::Nia2Only)?;
    let cipher_s = t(BenchTarget::Nea2Only)?;
    let suite = SuiteId::AesGcm128.suite();
    let key = GcmKey::new(&suite, &[0x42; 16]).map_err(LinkError::from)?;
    let mut buf = vec![0u8; size];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.fill_bytes(&mut buf);
    let batch = batch_len(size);
    let mut times = Vec::with_capacity(reps);
    let mut n = 0u64;
    for _ in 0..reps {
        let t0 = Instant::now();
        for _ in 0..batch {
            n += 1;
            let mut nonce = [0u8; 12];
            nonce[4..].copy_from_slice(&n.to_be_bytes());
            std::hint::black_box(key.seal_in_place(nonce, &[], &mut buf));
        }
        times.push(t0.elapsed().as_secs_f64() / batch as f64);
    }
    Ok(UuComparison {
        size,
        composite_s,
        mac_s,
        cipher_s,
        aead_s: median(&mut times),
    })
}

/// NEA2 split over `workers` threads on block boundaries. Returns seconds
/// per pass. CTR allows this; NIA2's CMAC chain does not.
pub fn parallel_nea2(data: &mut [u8], workers: usize) -> f64 {
    let nea = Nea2::new(&PdcpConfig::fixed(UuProtection::IntegrityAndCiphering).ciphering_key);
    let workers = workers.max(1);
    let per = data.len().div_ceil(workers).next_multiple_of(16).max(16);
    let t0 = Instant::now();
    std::thread::scope(|s| {
        for (i, chunk) in data.chunks_mut(per).enumerate() {
            let nea = &nea;
            s.spawn(move || nea.apply_from_block(1, 0, Direction::Uplink, (i * per / 16) as u64, chunk));
        }
    });
    t0.elapsed().as_secs_f64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Faster,
    Slower,
    Neither,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairVerdict {
    pub a: String,
    pub b: String,
    /// Per common size: whether `a` had strictly higher throughput than `b`.
    pub per_size: Vec<(usize, Dominance)>,
    /// Over sizes at or above [`LARGE_REGIME`].
    pub summary: Dominance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    pub sizes: Vec<usize>,
    pub pairs: Vec<PairVerdict>,
}

impl OrderingReport {
    pub fn verdict(&self, a: &str, b: &str) -> Option<Dominance> {
        self.pairs.iter().find_map(|p| {
            if p.a == a && p.b == b {
                Some(p.summary)
            } else if p.a == b && p.b == a {
                Some(match p.summary {
                    Dominance::Faster => Dominance::Slower,
                    Dominance::Slower => Dominance::Faster,
                    Dominance::Neither => Dominance::Neither,
                })
            } else {
                None
            }
        })
    }

    /// Curve labels ordered so each one dominates everything after it, if
    /// such a total order exists in the large regime.
    pub fn total_order(&self) -> Option<Vec<String>> {
        let mut names: Vec<String> = Vec::new();
        for p in &self.pairs {
            for n in [&p.a, &p.b] {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        let wins = |n: &String| {
            names
                .iter()
                .filter(|m| *m != n && self.verdict(n, m) == Some(Dominance::Faster))
                .count()
        };
        let mut sorted = names.clone();
        sorted.sort_by_key(|n| std::cmp::Reverse(wins(n)));
        let ok = sorted
            .windows(2)
            .all(|w| self.verdict(&w[0], &w[1]) == Some(Dominance::Faster));
        ok.then_some(sorted)
    }
}

pub fn analyze_ordering(curves: &[BenchCurve]) -> Result<OrderingReport, BenchError> {
    if curves.len() < 2 {
        return Err(BenchError::InvalidArgument("need at least two curves".into()));
    }
    let mut sizes: Vec<usize> = curves[0].points.iter().map(|p| p.size).collect();
    for c in &curves[1..] {
        sizes.retain(|s| c.at(*s).is_some());
    }
    if sizes.is_empty() {
        return Err(BenchError::DisjointSizes);
    }
    let mut pairs = Vec::new();
    for (i, a) in curves.iter().enumerate() {
        for b in &curves[i + 1..] {
            let per_size: Vec<(usize, Dominance)> = sizes
                .iter()
                .map(|&s| {
                    let (x, y) = (a.at(s).unwrap().throughput_bps, b.at(s).unwrap().throughput_bps);
                    let d = if x > y {
                        Dominance::Faster
                    } else if y > x {
                        Dominance::Slower
                    } else {
                        Dominance::Neither
                    };
                    (s, d)
                })
                .collect();
            let large: Vec<Dominance> = per_size
                .iter()
                .filter(|(s, _)| *s >= LARGE_REGIME)
                .map(|(_, d)| *d)
                .collect();
            let summary = if !large.is_empty() && large.iter().all(|d| *d == Dominance::Faster) {
                Dominance::Faster
            } else if !large.is_empty() && large.iter().all(|d| *d == Dominance::Slower) {
                Dominance::Slower
            } else {
                Dominance::Neither
            };
            pairs.push(PairVerdict {
                a: a.suite.clone(),
                b: b.suite.clone(),
                per_size,
                summary,
            });
        }
    }
    Ok(OrderingReport { sizes, pairs })
}

/// Gnuplot data blocks: one block per suite, `size_bytes throughput_Bps
/// runtime_s` per line, blocks separated by two blank lines.
pub fn plot_data(curves: &[BenchCurve]) -> String {
    let mut s = String::new();
    for c in curves {
        s.push_str(&format!("# {}\n# size_bytes throughput_Bps runtime_s\n", c.suite));
        for p in &c.points {
            s.push_str(&format!("{} {:.6e} {:.6e}\n", p.size, p.throughput_bps, p.runtime_s));
        }
        s.push_str("\n\n");
    }
    s
}
