//! Monte Carlo estimators for the renewal measure of a suspension flow:
//! windowed and cumulative renewal mass, rectangle mixing, occupation
//! averages, fixed-index local-limit windows, and Laplace functionals.
//!
//! All estimators run on an [`OrbitDriver`] and share one harness: orbits
//! are dealt to 256 fixed RNG blocks (ChaCha streams), each block
//! accumulates integer or real partials, and block partials are merged in
//! block-index order. Results therefore depend only on (configuration,
//! seed, orbit count) — never on thread scheduling or on how the blocks
//! are split across shards — and integer-count estimators combine across
//! shards exactly.

mod driver;

pub use driver::{AnyDriver, DeterministicDriver, IidDriver, OrbitDriver, Step};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::dynamics::DynamicsError;
use crate::specfun::{m_of_t, renewal_constants, SpecFunError, StableLaw, TailModel};

#[derive(Debug, thiserror::Error)]
pub enum RenewalError {
    #[error("renewal estimator domain error: {0}")]
    Domain(String),
    #[error("orbit truncation rate {discards}/{n_orbits} exceeds the 1e-4 budget")]
    ExcessiveTruncation { discards: u64, n_orbits: u64 },
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Start/arrival intervals on the section plus the fiber bands used by the
/// rectangle and occupation estimators. Bands must stay below the
/// essential infimum of the return time over their interval so that the
/// rectangles are genuine subsets of the suspension space (drivers check
/// this against sampled minima).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSets {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub a_band: (f64, f64),
    pub b_band: (f64, f64),
}

impl TargetSets {
    /// A = B = the whole section, with the default bands [0,1) and [0,0.5).
    pub fn full(lo: f64, hi: f64) -> Self {
        Self {
            a: (lo, hi),
            b: (lo, hi),
            a_band: (0.0, 1.0),
            b_band: (0.0, 0.5),
        }
    }

    /// A = left half of the section, B = the whole section.
    pub fn left_half(lo: f64, hi: f64) -> Self {
        Self {
            a: (lo, 0.5 * (lo + hi)),
            ..Self::full(lo, hi)
        }
    }

    pub fn contains_a(&self, y: f64) -> bool {
        self.a.0 <= y && y < self.a.1
    }

    pub fn contains_b(&self, y: f64) -> bool {
        self.b.0 <= y && y < self.b.1
    }

    pub fn validate(&self, lo: f64, hi: f64) -> Result<(), RenewalError> {
        for (name, iv) in [("A", self.a), ("B", self.b)] {
            if !(iv.0 < iv.1) || iv.0 < lo - 1e-12 || iv.1 > hi + 1e-12 {
                return Err(RenewalError::Domain(format!(
                    "set {name} = [{}, {}) is not a subinterval of [{lo}, {hi}]",
                    iv.0, iv.1
                )));
            }
        }
        for (name, band) in [("A", self.a_band), ("B", self.b_band)] {
            if !(band.0 >= 0.0 && band.0 < band.1 && band.1.is_finite()) {
                return Err(RenewalError::Domain(format!(
                    "fiber band over {name} must satisfy 0 <= lo < hi, got [{}, {})",
                    band.0, band.1
                )));
            }
        }
        Ok(())
    }
}

/// One estimator row. `normalized` carries the limit-theorem scaling
/// (`m(t)·raw_mean`, `t^{-1}m(t)·raw_mean`, or `d_n·raw_mean/h`) and
/// `target` the corresponding theorem constant; both are set to zero when
/// `t` lies below the tail model's window (no scaling defined there).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalEstimate {
    pub t: f64,
    pub h: f64,
    pub raw_mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub normalized: f64,
    pub target: f64,
    pub ratio: f64,
}

/// Rows of one estimator run plus its discard counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateBatch {
    pub rows: Vec<RenewalEstimate>,
    pub discards: u64,
}

/// Fixed-index local-limit windows, one grid of rows per checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LltBatch {
    pub n_values: Vec<u64>,
    pub grids: Vec<Vec<RenewalEstimate>>,
    pub discards: u64,
}

/// Laplace functional of the renewal measure at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub sigma: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

const N_BLOCKS: u64 = 256;

// Stream salts keep estimator families on disjoint ChaCha streams. The
// window and cumulative estimators deliberately share one salt: the
// partition identity (sum of windows over a partition of [0,t) equals the
// cumulative count at t) holds exactly only on a common orbit set.
const SALT_LADDER: u64 = 1;
const SALT_RECT: u64 = 3;
const SALT_OCC: u64 = 4;
const SALT_LLT: u64 = 5;
const SALT_LAPLACE: u64 = 6;

fn block_rng(seed: u64, salt: u64, block: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((salt << 32) | block);
    rng
}

fn validate_run(n_orbits: u64, shards: usize) -> Result<(), RenewalError> {
    if n_orbits == 0 {
        return Err(RenewalError::Domain("need at least one orbit".into()));
    }
    if shards == 0 || shards as u64 > N_BLOCKS {
        return Err(RenewalError::Domain(format!(
            "shard count must lie in 1..={N_BLOCKS}, got {shards}"
        )));
    }
    Ok(())
}

/// Deal `n_orbits` across the 256 blocks, run `orbit` once per orbit, and
/// return the per-block accumulators in block order. `shards` only groups
/// the execution; the result is identical for every value.
fn run_blocks<D, T, F>(
    driver: &D,
    n_orbits: u64,
    seed: u64,
    salt: u64,
    shards: usize,
    init: impl Fn() -> T + Sync,
    orbit: F,
) -> Vec<T>
where
    D: OrbitDriver,
    T: Send,
    F: Fn(&mut D, &mut ChaCha8Rng, &mut T) + Sync,
{
    let mut out: Vec<T> = Vec::with_capacity(N_BLOCKS as usize);
    for shard in 0..shards as u64 {
        let lo = shard * N_BLOCKS / shards as u64;
        let hi = (shard + 1) * N_BLOCKS / shards as u64;
        let mut part: Vec<T> = (lo..hi)
            .into_par_iter()
            .map(|b| {
                let mut drv = driver.clone();
                let mut rng = block_rng(seed, salt, b);
                let mut acc = init();
                let n_b = n_orbits / N_BLOCKS + u64::from(b < n_orbits % N_BLOCKS);
                for _ in 0..n_b {
                    orbit(&mut drv, &mut rng, &mut acc);
                }
                acc
            })
            .collect();
        out.append(&mut part);
    }
    out
}

/// Integer-count accumulator: per-orbit counts are staged in `scratch`
/// and committed (or dropped, on a truncated orbit) atomically, keeping
/// per-orbit squares exact in u64.
struct CountAcc {
    sum: Vec<u64>,
    sum_sq: Vec<u64>,
    scratch: Vec<u32>,
    touched: Vec<u32>,
    orbits: u64,
    discards: u64,
}

impl CountAcc {
    fn new(k: usize) -> Self {
        Self {
            sum: vec![0; k],
            sum_sq: vec![0; k],
            scratch: vec![0; k],
            touched: Vec::with_capacity(16),
            orbits: 0,
            discards: 0,
        }
    }

    fn mark(&mut self, i: usize) {
        if self.scratch[i] == 0 {
            self.touched.push(i as u32);
        }
        self.scratch[i] += 1;
    }

    fn commit(&mut self, cap: u32) {
        for &i in &self.touched {
            let w = self.scratch[i as usize] as u64;
            debug_assert!(w <= cap as u64, "window count {w} above the bound {cap}");
            self.sum[i as usize] += w;
            self.sum_sq[i as usize] += w * w;
            self.scratch[i as usize] = 0;
        }
        self.touched.clear();
        self.orbits += 1;
    }

    fn commit_dense(&mut self) {
        for i in 0..self.scratch.len() {
            let w = self.scratch[i] as u64;
            self.sum[i] += w;
            self.sum_sq[i] += w * w;
            self.scratch[i] = 0;
        }
        self.orbits += 1;
    }

    fn abort(&mut self) {
        for &i in &self.touched {
            self.scratch[i as usize] = 0;
        }
        self.touched.clear();
        self.scratch.iter_mut().for_each(|w| *w = 0);
        self.discards += 1;
    }
}

/// Real-valued accumulator with the same stage/commit discipline.
struct RealAcc {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    scratch: Vec<f64>,
    orbits: u64,
    discards: u64,
}

impl RealAcc {
    fn new(k: usize) -> Self {
        Self {
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
            scratch: vec![0.0; k],
            orbits: 0,
            discards: 0,
        }
    }

    fn commit(&mut self) {
        for i in 0..self.scratch.len() {
            let w = self.scratch[i];
            self.sum[i] += w;
            self.sum_sq[i] += w * w;
            self.scratch[i] = 0.0;
        }
        self.orbits += 1;
    }

    fn abort(&mut self) {
        self.scratch.iter_mut().for_each(|w| *w = 0.0);
        self.discards += 1;
    }
}

struct CountTotals {
    sum: Vec<u64>,
    sum_sq: Vec<u64>,
    orbits: u64,
    discards: u64,
}

fn merge_counts(blocks: Vec<CountAcc>, k: usize, n_orbits: u64) -> Result<CountTotals, RenewalError> {
    let mut t = CountTotals {
        sum: vec![0; k],
        sum_sq: vec![0; k],
        orbits: 0,
        discards: 0,
    };
    for b in blocks {
        for i in 0..k {
            t.sum[i] += b.sum[i];
            t.sum_sq[i] += b.sum_sq[i];
        }
        t.orbits += b.orbits;
        t.discards += b.discards;
    }
    check_discards(t.discards, n_orbits, t.orbits)?;
    Ok(t)
}

struct RealTotals {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    orbits: u64,
    discards: u64,
}

fn merge_reals(blocks: Vec<RealAcc>, k: usize, n_orbits: u64) -> Result<RealTotals, RenewalError> {
    // the fold order is the fixed block order, so the floating sums are
    // reproducible for every shard split
    let mut t = RealTotals {
        sum: vec![0.0; k],
        sum_sq: vec![0.0; k],
        orbits: 0,
        discards: 0,
    };
    for b in blocks {
        for i in 0..k {
            t.sum[i] += b.sum[i];
            t.sum_sq[i] += b.sum_sq[i];
        }
        t.orbits += b.orbits;
        t.discards += b.discards;
    }
    check_discards(t.discards, n_orbits, t.orbits)?;
    Ok(t)
}

fn check_discards(discards: u64, n_orbits: u64, kept: u64) -> Result<(), RenewalError> {
    if kept == 0 || discards * 10_000 > n_orbits {
        return Err(RenewalError::ExcessiveTruncation { discards, n_orbits });
    }
    Ok(())
}

fn mean_stderr(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// `(normalized, ratio)` for a row whose normalization is `scale(t) ·
/// raw_mean`; zeros below the tail window where no scaling is defined.
fn normalized_ratio(scale: Option<f64>, raw_mean: f64, target: f64) -> (f64, f64) {
    match scale {
        Some(s) => {
            let normalized = s * raw_mean;
            (normalized, normalized / target)
        }
        None => (0.0, 0.0),
    }
}

fn m_scale(tail: &TailModel, t: f64) -> Option<f64> {
    if t >= tail.t_min {
        m_of_t(tail, t).ok()
    } else {
        None
    }
}

fn validate_ladder(ts: &[f64], min_t: f64) -> Result<(), RenewalError> {
    if ts.is_empty() {
        return Err(RenewalError::Domain("time ladder is empty".into()));
    }
    if !ts.iter().all(|t| t.is_finite() && *t >= min_t) {
        return Err(RenewalError::Domain(format!(
            "ladder times must be finite and >= {min_t}"
        )));
    }
    if !ts.windows(2).all(|w| w[0] < w[1]) {
        return Err(RenewalError::Domain(
            "ladder times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Windowed renewal mass `U_{A,B}([t, t+h))` for every `t` in a ladder,
/// all windows scored from one shared orbit set (common random numbers).
/// Rows report `m(t)·raw_mean` against the window target
/// `d_beta·mu(A)mu(B)·h`.
pub fn estimate_renewal_window<D: OrbitDriver>(
    driver: &D,
    ts: &[f64],
    h: f64,
    n_orbits: u64,
    seed: u64,
    shards: usize,
) -> Result<EstimateBatch, RenewalError> {
    validate_run(n_orbits, shards)?;
    validate_ladder(ts, 0.0)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(RenewalError::Domain(format!(
            "window width must be positive, got {h}"
        )));
    }
    let k = ts.len();
    let budget = ts[k - 1] + h;
    let cap = h.ceil() as u32 + 1;
    let blocks = run_blocks(
        driver,
        n_orbits,
        seed,
        SALT_LADDER,
        shards,
        || CountAcc::new(k),
        |drv, rng, acc| {
            let (in_a, in_b0) = drv.reset(rng);
            if !in_a {
                acc.commit(cap);
                return;
            }
            if in_b0 {
                score_windows(ts, h, 0.0, acc);
            }
            let mut tau = 0.0;
            loop {
                let s = drv.step(rng, budget - tau);
                if s.truncated {
                    acc.abort();
                    return;
                }
                if s.exceeded {
                    break;
                }
                tau += s.dt;
                if tau > budget {
                    break;
                }
                if s.in_b {
                    score_windows(ts, h, tau, acc);
                }
            }
            acc.commit(cap);
        },
    );
    let totals = merge_counts(blocks, k, n_orbits)?;
    let consts = renewal_constants(driver.tail().beta)?;
    let mu_ab = driver.mu_a() * driver.mu_b();
    let rows = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (raw_mean, stderr) =
                mean_stderr(totals.sum[i] as f64, totals.sum_sq[i] as f64, totals.orbits);
            let target = consts.d_beta * mu_ab * h;
            let (normalized, ratio) =
                normalized_ratio(m_scale(driver.tail(), t), raw_mean, target);
            RenewalEstimate {
                t,
                h,
                raw_mean,
                stderr,
                n_samples: totals.orbits,
                normalized,
                target,
                ratio,
            }
        })
        .collect();
    Ok(EstimateBatch {
        rows,
        discards: totals.discards,
    })
}

/// Mark every window `[ts[i], ts[i]+h)` containing `tau`. Windows are
/// half-open and the scan applies the literal membership test, so ties at
/// window edges resolve identically everywhere.
fn score_windows(ts: &[f64], h: f64, tau: f64, acc: &mut CountAcc) {
    let end = ts.partition_point(|&t| t <= tau);
    for i in (0..end).rev() {
        if ts[i] + h > tau {
            acc.mark(i);
        } else {
            break;
        }
    }
}

/// Cumulative renewal mass `U_{A,B}([0, t])` for every `t` in a ladder.
/// Rows report `t^{-1} m(t)·raw_mean` against the target
/// `D_beta·mu(A)mu(B)`.
pub fn estimate_renewal_cumulative<D: OrbitDriver>(
    driver: &D,
    ts: &[f64],
    n_orbits: u64,
    seed: u64,
    shards: usize,
) -> Result<EstimateBatch, RenewalError> {
    validate_run(n_orbits, shards)?;
    validate_ladder(ts, f64::MIN_POSITIVE)?;
    let k = ts.len();
    let budget = ts[k - 1];
    let blocks = run_blocks(
        driver,
        n_orbits,
        seed,
        SALT_LADDER,
        shards,
        || CountAcc::new(k),
        |drv, rng, acc| {
            let (in_a, in_b0) = drv.reset(rng);
            if !in_a {
                acc.commit_dense();
                return;
            }
            let mut cnt: u32 = u32::from(in_b0); // the n = 0 renewal at time 0
            let mut idx = 0usize;
            let mut tau = 0.0;
            loop {
                let s = drv.step(rng, budget - tau);
                if s.truncated {
                    acc.abort();
                    return;
                }
                if s.exceeded {
                    break;
                }
                tau += s.dt;
                if tau > budget {
                    break;
                }
                while idx < k && ts[idx] < tau {
                    acc.scratch[idx] = cnt;
                    idx += 1;
                }
                if s.in_b {
                    cnt += 1;
                }
            }
            while idx < k {
                acc.scratch[idx] = cnt;
                idx += 1;
            }
            acc.commit_dense();
        },
    );
    let totals = merge_counts(blocks, k, n_orbits)?;
    let consts = renewal_constants(driver.tail().beta)?;
    let target = consts.big_d_beta * driver.mu_a() * driver.mu_b();
    let rows = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (raw_mean, stderr) =
                mean_stderr(totals.sum[i] as f64, totals.sum_sq[i] as f64, totals.orbits);
            let scale = m_scale(driver.tail(), t).map(|m| m / t);
            let (normalized, ratio) = normalized_ratio(scale, raw_mean, target);
            RenewalEstimate {
                t,
                h: t,
                raw_mean,
                stderr,
                n_samples: totals.orbits,
                normalized,
                target,
                ratio,
            }
        })
        .collect();
    Ok(EstimateBatch {
        rows,
        discards: totals.discards,
    })
}

/// Rectangle mixing: mass of `A1 ∩ Phi_t^{-1} B1` under the (infinite)
/// product measure, estimated by flowing samples of `A1` for time `t`.
/// `raw_mean` is already scaled by `mu^tau(A1) = mu(A)·(a2-a1)`; the row
/// reports `m(t)·raw_mean` against `d_beta·mu^tau(A1)·mu^tau(B1)`.
pub fn estimate_rectangle_mixing<D: OrbitDriver>(
    driver: &D,
    t: f64,
    n_orbits: u64,
    seed: u64,
    shards: usize,
) -> Result<EstimateBatch, RenewalError> {
    validate_run(n_orbits, shards)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(RenewalError::Domain(format!(
            "flow time must be nonnegative, got {t}"
        )));
    }
    let sets = *driver.sets();
    let (a1, a2) = sets.a_band;
    let (b1, b2) = sets.b_band;
    let blocks = run_blocks(
        driver,
        n_orbits,
        seed,
        SALT_RECT,
        shards,
        || CountAcc::new(1),
        move |drv, rng, acc| {
            let in_b0 = drv.reset_in_a(rng);
            let u = a1 + (a2 - a1) * rng.gen::<f64>();
            let budget = t + u;
            let mut tau = 0.0;
            let (mut last_tau, mut last_in_b) = (0.0, in_b0);
            loop {
                let s = drv.step(rng, budget - tau);
                if s.truncated {
                    acc.abort();
                    return;
                }
                if s.exceeded {
                    break;
                }
                tau += s.dt;
                if tau > budget {
                    break;
                }
                last_tau = tau;
                last_in_b = s.in_b;
            }
            // flow position after time t: fiber of the last renewal at or
            // below t+u, at height t+u-last_tau
            let height = budget - last_tau;
            if last_in_b && height >= b1 && height < b2 {
                acc.mark(0);
            }
            acc.commit(1);
        },
    );
    let totals = merge_counts(blocks, 1, n_orbits)?;
    let consts = renewal_constants(driver.tail().beta)?;
    let mu_a1 = driver.mu_a() * (a2 - a1);
    let mu_b1 = driver.mu_b() * (b2 - b1);
    let (mean, err) = mean_stderr(totals.sum[0] as f64, totals.sum_sq[0] as f64, totals.orbits);
    let raw_mean = mean * mu_a1;
    let target = consts.d_beta * mu_a1 * mu_b1;
    let (normalized, ratio) = normalized_ratio(m_scale(driver.tail(), t), raw_mean, target);
    Ok(EstimateBatch {
        rows: vec![RenewalEstimate {
            t,
            h: b2 - b1,
            raw_mean,
            stderr: err * mu_a1,
            n_samples: totals.orbits,
            normalized,
            target,
            ratio,
        }],
        discards: totals.discards,
    })
}

/// Occupation average: `int_0^t mu^tau(A1 ∩ Phi_x^{-1} B1) dx`, estimated
/// by the exact Lebesgue time each flowed sample of `A1` spends in `B1`.
/// The row reports `t^{-1} m(t)·raw_mean` against
/// `D_beta·mu^tau(A1)·mu^tau(B1)`.
pub fn estimate_occupation_average<D: OrbitDriver>(
    driver: &D,
    t: f64,
    n_orbits: u64,
    seed: u64,
    shards: usize,
) -> Result<EstimateBatch, RenewalError> {
    validate_run(n_orbits, shards)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(RenewalError::Domain(format!(
            "occupation horizon must be positive, got {t}"
        )));
    }
    let sets = *driver.sets();
    let (a1, a2) = sets.a_band;
    let (b1, b2) = sets.b_band;
    let blocks = run_blocks_real(
        driver,
        n_orbits,
        seed,
        SALT_OCC,
        shards,
        1,
        move |drv: &mut D, rng: &mut ChaCha8Rng, acc: &mut RealAcc| {
            let in_b0 = drv.reset_in_a(rng);
            let u = a1 + (a2 - a1) * rng.gen::<f64>();
            let budget = t + u;
            // the fiber entered at renewal time tau_n is visible in band
            // [b1,b2) during flow times [tau_n - u + b1, tau_n - u + b2)
            let mut occ = 0.0;
            let mut add = |tau_n: f64, in_b: bool| {
                if in_b {
                    let lo = (tau_n - u + b1).max(0.0);
                    let hi = (tau_n - u + b2).min(t);
                    if hi > lo {
                        occ += hi - lo;
                    }
                }
            };
            add(0.0, in_b0);
            let mut tau = 0.0;
            loop {
                let s = drv.step(rng, budget - tau);
                if s.truncated {
                    acc.abort();
                    return;
                }
                if s.exceeded {
                    break;
                }
                tau += s.dt;
                if tau > budget {
                    break;
                }
                add(tau, s.in_b);
            }
            drop(add);
            debug_assert!(occ <= t + 1e-9, "occupation {occ} above the horizon {t}");
            acc.scratch[0] = occ;
            acc.commit();
        },
    );
    let totals = merge_reals(blocks, 1, n_orbits)?;
    let consts = renewal_constants(driver.tail().beta)?;
    let mu_a1 = driver.mu_a() * (a2 - a1);
    let mu_b1 = driver.mu_b() * (b2 - b1);
    let (mean, err) = mean_stderr(totals.sum[0], totals.sum_sq[0], totals.orbits);
    let raw_mean = mean * mu_a1;
    let target = consts.big_d_beta * mu_a1 * mu_b1;
    let scale = m_scale(driver.tail(), t).map(|m| m / t);
    let (normalized, ratio) = normalized_ratio(scale, raw_mean, target);
    Ok(EstimateBatch {
        rows: vec![RenewalEstimate {
            t,
            h: t,
            raw_mean,
            stderr: err * mu_a1,
            n_samples: totals.orbits,
            normalized,
            target,
            ratio,
        }],
        discards: totals.discards,
    })
}

// run_blocks cannot infer RealAcc from a closure alone; this wrapper keeps
// the call sites uniform.
fn run_blocks_real<D, F>(
    driver: &D,
    n_orbits: u64,
    seed: u64,
    salt: u64,
    shards: usize,
    k: usize,
    orbit: F,
) -> Vec<RealAcc>
where
    D: OrbitDriver,
    F: Fn(&mut D, &mut ChaCha8Rng, &mut RealAcc) + Sync,
{
    run_blocks(driver, n_orbits, seed, salt, shards, || RealAcc::new(k), orbit)
}

/// Plan for the fixed-index local-limit windows: checkpoints `ns` with one
/// left-endpoint grid each and a common window width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LltPlan {
    pub ns: Vec<u64>,
    pub grids: Vec<Vec<f64>>,
    pub h: f64,
}

impl LltPlan {
    /// Evenly spaced grid of `points` window starts on
    /// `[span.0 d_n, span.1 d_n]` for each checkpoint.
    pub fn scaled(
        tail: &TailModel,
        ns: &[u64],
        span: (f64, f64),
        points: usize,
        h: f64,
    ) -> Result<Self, RenewalError> {
        if ns.is_empty() || points == 0 || !(h > 0.0) {
            return Err(RenewalError::Domain(
                "local-limit plan needs checkpoints, grid points and h > 0".into(),
            ));
        }
        if !ns.windows(2).all(|w| w[0] < w[1]) {
            return Err(RenewalError::Domain(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        if !(span.0 > 0.0 && span.0 < span.1 && span.1.is_finite()) {
            return Err(RenewalError::Domain(format!(
                "grid span must satisfy 0 < lo < hi, got {}..{}",
                span.0, span.1
            )));
        }
        let grids = ns
            .iter()
            .map(|&n| {
                let d = tail.d_n(n.max(1));
                let (lo, hi) = (span.0 * d, span.1 * d);
                (0..points)
                    .map(|i| lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64)
                    .collect()
            })
            .collect();
        Ok(Self {
            ns: ns.to_vec(),
            grids,
            h,
        })
    }

    /// A single explicit window at one checkpoint.
    pub fn single(n: u64, t: f64, h: f64) -> Self {
        Self {
            ns: vec![n],
            grids: vec![vec![t]],
            h,
        }
    }
}

/// Fixed-index windows `mu(y in A, F^n y in B, tau_n in [t, t+h))` for
/// every checkpoint and grid point, one orbit pass for all of them. Rows
/// report `d_n·raw_mean/h` against the density target
/// `q_beta(t/d_n)·mu(A)mu(B)`.
pub fn estimate_llt_window<D: OrbitDriver>(
    driver: &D,
    law: &StableLaw,
    plan: &LltPlan,
    n_orbits: u64,
    seed: u64,
    shards: usize,
) -> Result<LltBatch, RenewalError> {
    validate_run(n_orbits, shards)?;
    if plan.ns.len() != plan.grids.len() || plan.ns.is_empty() {
        return Err(RenewalError::Domain(
            "local-limit plan has mismatched checkpoints and grids".into(),
        ));
    }
    for g in &plan.grids {
        validate_ladder(g, 0.0)?;
    }
    if !(plan.h > 0.0 && plan.h.is_finite()) {
        return Err(RenewalError::Domain(format!(
            "window width must be positive, got {}",
            plan.h
        )));
    }
    let h = plan.h;
    let offsets: Vec<usize> = plan
        .grids
        .iter()
        .scan(0usize, |s, g| {
            let o = *s;
            *s += g.len();
            Some(o)
        })
        .collect();
    let k: usize = plan.grids.iter().map(Vec::len).sum();
    let cap = plan
        .grids
        .iter()
        .map(|g| g[g.len() - 1] + h)
        .fold(0.0f64, f64::max);
    let ns = &plan.ns;
    let grids = &plan.grids;
    let blocks = run_blocks(
        driver,
        n_orbits,
        seed,
        SALT_LLT,
        shards,
        || CountAcc::new(k),
        |drv, rng, acc| {
            let (in_a, in_b0) = drv.reset(rng);
            if !in_a {
                acc.commit(1);
                return;
            }
            let mut k_idx = 0usize;
            if ns[0] == 0 {
                if in_b0 {
                    score_checkpoint(&grids[0], h, offsets[0], 0.0, acc);
                }
                k_idx = 1;
            }
            let mut tau = 0.0;
            let mut steps = 0u64;
            while k_idx < ns.len() {
                let s = drv.step(rng, cap - tau);
                if s.truncated {
                    acc.abort();
                    return;
                }
                if s.exceeded {
                    break;
                }
                tau += s.dt;
                steps += 1;
                if steps == ns[k_idx] {
                    if s.in_b && tau <= cap {
                        score_checkpoint(&grids[k_idx], h, offsets[k_idx], tau, acc);
                    }
                    k_idx += 1;
                }
                if tau > cap {
                    break;
                }
            }
            acc.commit(1);
        },
    );
    let totals = merge_counts(blocks, k, n_orbits)?;
    let mu_ab = driver.mu_a() * driver.mu_b();
    let mut grids_out = Vec::with_capacity(ns.len());
    for (ci, grid) in plan.grids.iter().enumerate() {
        let d_n = driver.tail().d_n(ns[ci].max(1));
        let rows = grid
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let i = offsets[ci] + j;
                let (raw_mean, stderr) =
                    mean_stderr(totals.sum[i] as f64, totals.sum_sq[i] as f64, totals.orbits);
                let scale = if ns[ci] == 0 { 0.0 } else { d_n / h };
                let normalized = scale * raw_mean;
                let target = law.density(t / d_n) * mu_ab;
                RenewalEstimate {
                    t,
                    h,
                    raw_mean,
                    stderr,
                    n_samples: totals.orbits,
                    normalized,
                    target,
                    ratio: if target > 0.0 { normalized / target } else { 0.0 },
                }
            })
            .collect();
        grids_out.push(rows);
    }
    Ok(LltBatch {
        n_values: ns.clone(),
        grids: grids_out,
        discards: totals.discards,
    })
}

fn score_checkpoint(grid: &[f64], h: f64, offset: usize, tau: f64, acc: &mut CountAcc) {
    let end = grid.partition_point(|&t| t <= tau);
    for j in (0..end).rev() {
        if grid[j] + h > tau {
            acc.mark(offset + j);
        } else {
            break;
        }
    }
}

/// Laplace functional `int e^{-sigma t} dU_{A,B}(t)` at each abscissa,
/// scored from one orbit set walked to the slowest abscissa's horizon
/// (increments past `45/sigma` are dropped; `e^{-45}` is far below any
/// attainable Monte Carlo resolution).
pub fn estimate_laplace<D: OrbitDriver>(
    driver: &D,
    sigmas: &[f64],
    n_orbits: u64,
    seed: u64,
    shards: usize,
) -> Result<(Vec<LaplaceEstimate>, u64), RenewalError> {
    validate_run(n_orbits, shards)?;
    if sigmas.is_empty() || !sigmas.iter().all(|s| s.is_finite() && *s > 0.0) {
        return Err(RenewalError::Domain(
            "Laplace abscissas must be positive".into(),
        ));
    }
    let k = sigmas.len();
    let budget = 45.0 / sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
    let blocks = run_blocks_real(driver, n_orbits, seed, SALT_LAPLACE, shards, k, |drv, rng, acc| {
        let (in_a, in_b0) = drv.reset(rng);
        if !in_a {
            acc.commit();
            return;
        }
        if in_b0 {
            for w in acc.scratch.iter_mut() {
                *w += 1.0; // n = 0 term, e^0
            }
        }
        let mut tau = 0.0;
        loop {
            let s = drv.step(rng, budget - tau);
            if s.truncated {
                acc.abort();
                return;
            }
            if s.exceeded {
                break;
            }
            tau += s.dt;
            if tau > budget {
                break;
            }
            if s.in_b {
                for (j, &sigma) in sigmas.iter().enumerate() {
                    let x = sigma * tau;
                    if x <= 45.0 {
                        acc.scratch[j] += (-x).exp();
                    }
                }
            }
        }
        acc.commit();
    });
    let totals = merge_reals(blocks, k, n_orbits)?;
    let rows = sigmas
        .iter()
        .enumerate()
        .map(|(j, &sigma)| {
            let (mean, stderr) = mean_stderr(totals.sum[j], totals.sum_sq[j], totals.orbits);
            LaplaceEstimate {
                sigma,
                mean,
                stderr,
                n_samples: totals.orbits,
            }
        })
        .collect();
    Ok((rows, totals.discards))
}

/// CSV rows `t,h,raw_mean,stderr,normalized,target,ratio,n_samples,discards`.
pub fn write_renewal_csv<W: Write>(mut out: W, batch: &EstimateBatch) -> io::Result<()> {
    writeln!(
        out,
        "t,h,raw_mean,stderr,normalized,target,ratio,n_samples,discards"
    )?;
    for r in &batch.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t, r.h, r.raw_mean, r.stderr, r.normalized, r.target, r.ratio, r.n_samples, batch.discards
        )?;
    }
    Ok(())
}
