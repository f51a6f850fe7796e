//! Orbit drivers: the sampling abstraction every renewal estimator runs on.
//!
//! A driver produces one renewal sequence per orbit: a starting point with
//! set memberships, then successive holding-time increments. Two
//! implementations share the interface — the deterministic induced system
//! (map + roof, started from the invariant measure) and an i.i.d. baseline
//! whose increments have an exactly known regularly varying survival
//! function, used as an oracle for the limit theorems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::{RenewalError, TargetSets};
use crate::dynamics::{first_return, DynamicsError, IntermittentMapSpec, MeasureTable, RoofSpec};
use crate::specfun::TailModel;

/// One renewal step along an orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Holding-time increment; meaningful only when both flags are false.
    pub dt: f64,
    /// Membership of the new renewal point in the arrival set B.
    pub in_b: bool,
    /// The next renewal lies beyond the caller's budget; the orbit is done.
    pub exceeded: bool,
    /// Internal iteration guard fired; the orbit must be discarded.
    pub truncated: bool,
}

impl Step {
    fn renewal(dt: f64, in_b: bool) -> Self {
        Step {
            dt,
            in_b,
            exceeded: false,
            truncated: false,
        }
    }

    const EXCEEDED: Step = Step {
        dt: 0.0,
        in_b: false,
        exceeded: true,
        truncated: false,
    };

    const TRUNCATED: Step = Step {
        dt: 0.0,
        in_b: false,
        exceeded: false,
        truncated: true,
    };
}

/// Common sampling interface for the renewal estimators. Implementations
/// must be cheap to clone (one clone per worker block) and deterministic
/// given the RNG stream.
pub trait OrbitDriver: Clone + Send + Sync {
    /// Start a fresh orbit from the stationary law on the whole state
    /// space; returns (in A, in B) for the initial point (the n = 0
    /// renewal at time 0).
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> (bool, bool);

    /// Start a fresh orbit conditioned on the start set A; returns the
    /// initial point's membership in B.
    fn reset_in_a(&mut self, rng: &mut ChaCha8Rng) -> bool;

    /// Advance to the next renewal. `budget` is the remaining time the
    /// caller can still use: once the increment alone is known to exceed
    /// it the driver may give up early (`exceeded`), since every later
    /// renewal falls outside the caller's horizon too.
    fn step(&mut self, rng: &mut ChaCha8Rng, budget: f64) -> Step;

    /// Stationary mass of the start set A.
    fn mu_a(&self) -> f64;

    /// Stationary mass of the arrival set B.
    fn mu_b(&self) -> f64;

    /// Tail model of the holding times (drives every normalization).
    fn tail(&self) -> &TailModel;

    /// Target sets and fiber bands for the rectangle/occupation routes.
    fn sets(&self) -> &TargetSets;
}

/// Renewal sampling on the induced system of an intermittent circle map:
/// starts are drawn from a tabulated invariant measure, increments are
/// Birkhoff sums of the roof over excursions.
#[derive(Clone)]
pub struct DeterministicDriver {
    map: IntermittentMapSpec,
    roof: RoofSpec,
    table: Arc<MeasureTable>,
    sets: TargetSets,
    tail: TailModel,
    max_iter: u64,
    mu_a: f64,
    mu_b: f64,
    y: f64,
}

impl DeterministicDriver {
    pub fn new(
        map: IntermittentMapSpec,
        roof: RoofSpec,
        table: Arc<MeasureTable>,
        sets: TargetSets,
        tail: TailModel,
        max_iter: u64,
    ) -> Result<Self, RenewalError> {
        roof.validate()?;
        let (lo, hi) = table.domain();
        sets.validate(lo, hi)?;
        if max_iter < 16 {
            return Err(RenewalError::Domain(format!(
                "max_iter {max_iter} is too small to run any excursion"
            )));
        }
        let mu_a = table.mass_of_interval(sets.a.0, sets.a.1);
        let mu_b = table.mass_of_interval(sets.b.0, sets.b.1);
        if mu_a <= 0.0 || mu_b <= 0.0 {
            return Err(RenewalError::Domain(
                "target sets must carry positive mass".into(),
            ));
        }
        let driver = Self {
            map,
            roof,
            table,
            sets,
            tail,
            max_iter,
            mu_a,
            mu_b,
            y: lo,
        };
        let (min_a, min_b) = driver.probe_return_minima(256, 0xE551)?;
        if sets.a_band.1 > min_a + 1e-9 {
            return Err(RenewalError::Domain(format!(
                "band top {} over A exceeds the sampled return-time minimum {min_a}",
                sets.a_band.1
            )));
        }
        if sets.b_band.1 > min_b + 1e-9 {
            return Err(RenewalError::Domain(format!(
                "band top {} over B exceeds the sampled return-time minimum {min_b}",
                sets.b_band.1
            )));
        }
        Ok(driver)
    }

    /// Smallest return time seen over `n` starts sampled inside A and
    /// inside B — the empirical stand-in for the essential infimum that
    /// bounds admissible fiber bands.
    pub fn probe_return_minima(&self, n: u32, seed: u64) -> Result<(f64, f64), RenewalError> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut minima = [f64::INFINITY; 2];
        for (slot, interval) in [self.sets.a, self.sets.b].into_iter().enumerate() {
            let mut kept = 0u32;
            for _ in 0..n {
                let y = self.table.sample_in(interval.0, interval.1, &mut rng);
                match first_return(&self.map, &self.roof, y, self.max_iter) {
                    Ok(step) => {
                        minima[slot] = minima[slot].min(step.tau);
                        kept += 1;
                    }
                    // an excursion cut off by the iteration guard already
                    // lasted longer than any candidate minimum
                    Err(DynamicsError::Truncated { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            if kept < n / 4 {
                return Err(RenewalError::Domain(format!(
                    "return-minimum probe kept only {kept}/{n} samples; raise max_iter"
                )));
            }
        }
        Ok((minima[0], minima[1]))
    }
}

impl OrbitDriver for DeterministicDriver {
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> (bool, bool) {
        self.y = self.table.sample(rng);
        (self.sets.contains_a(self.y), self.sets.contains_b(self.y))
    }

    fn reset_in_a(&mut self, rng: &mut ChaCha8Rng) -> bool {
        self.y = self.table.sample_in(self.sets.a.0, self.sets.a.1, rng);
        self.sets.contains_b(self.y)
    }

    fn step(&mut self, _rng: &mut ChaCha8Rng, budget: f64) -> Step {
        // inline first-return walk with an early exit: the partial roof sum
        // only grows, so once it passes the budget the full increment (and
        // every subsequent renewal) lies beyond the caller's horizon
        let x_star = self.map.x_star();
        let mut tau = self.roof.eval(self.y);
        let mut x = self.map.apply(self.y);
        let mut iter: u64 = 1;
        while x < x_star {
            if tau > budget {
                return Step::EXCEEDED;
            }
            if iter >= self.max_iter || x == 0.0 {
                return Step::TRUNCATED;
            }
            tau += self.roof.eval(x);
            x = self.map.apply(x);
            iter += 1;
        }
        self.y = x;
        Step::renewal(tau, self.sets.contains_b(x))
    }

    fn mu_a(&self) -> f64 {
        self.mu_a
    }

    fn mu_b(&self) -> f64 {
        self.mu_b
    }

    fn tail(&self) -> &TailModel {
        &self.tail
    }

    fn sets(&self) -> &TargetSets {
        &self.sets
    }
}

/// I.i.d. baseline: holding times drawn by inverse CDF from a law whose
/// survival is exactly `ell(t) t^{-beta}` with constant `ell` beyond the
/// essential infimum 1.5, and both target sets equal to the whole space.
///
/// For `beta < 1` the law mixes an atom of mass `beta` at 1.5 with a
/// Pareto tail of weight `1 - beta`, making `S(t) = (1-beta)(t/1.5)^{-beta}`
/// exact for all `t >= 1.5`; for `beta = 1` it is a plain Pareto cut off
/// at 1.5.
#[derive(Clone)]
pub struct IidDriver {
    beta: f64,
    scale: f64,
    tail: TailModel,
    sets: TargetSets,
}

impl IidDriver {
    pub const SCALE: f64 = 1.5;

    pub fn new(beta: f64) -> Result<Self, RenewalError> {
        Self::with_bands((0.0, 1.0), (0.0, 0.5), beta)
    }

    /// Baseline with custom fiber bands (both must stay below the
    /// essential infimum 1.5 of the holding times).
    pub fn with_bands(
        a_band: (f64, f64),
        b_band: (f64, f64),
        beta: f64,
    ) -> Result<Self, RenewalError> {
        Self::with_scale_and_bands(a_band, b_band, beta, Self::SCALE)
    }

    /// Baseline with a custom essential infimum (`scale >= 1`); the tail
    /// constant becomes `(1-beta) scale^beta` (or `scale` when `beta = 1`).
    pub fn with_scale(beta: f64, scale: f64) -> Result<Self, RenewalError> {
        let b_top = 0.5f64.min(scale);
        Self::with_scale_and_bands((0.0, 1.0), (0.0, b_top), beta, scale)
    }

    /// Fully general baseline: custom bands and a custom infimum.
    pub fn with_scale_and_bands(
        a_band: (f64, f64),
        b_band: (f64, f64),
        beta: f64,
        scale: f64,
    ) -> Result<Self, RenewalError> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(RenewalError::Domain(format!(
                "i.i.d. baseline needs beta in (0,1], got {beta}"
            )));
        }
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(RenewalError::Domain(format!(
                "i.i.d. holding-time infimum must be a finite value >= 1, got {scale}"
            )));
        }
        let c0 = if beta < 1.0 {
            (1.0 - beta) * scale.powf(beta)
        } else {
            scale
        };
        let tail = TailModel::new(beta, crate::specfun::EllKind::Constant, c0, scale)?;
        let sets = TargetSets {
            a: (0.0, 1.0),
            b: (0.0, 1.0),
            a_band,
            b_band,
        };
        sets.validate(0.0, 1.0)?;
        for (name, band) in [("A", a_band), ("B", b_band)] {
            if band.1 > scale {
                return Err(RenewalError::Domain(format!(
                    "band top {} over {name} exceeds the holding-time infimum {scale}",
                    band.1
                )));
            }
        }
        Ok(Self {
            beta,
            scale,
            tail,
            sets,
        })
    }

    /// Inverse-CDF draw of one holding time.
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.gen();
        if self.beta >= 1.0 {
            self.scale / (1.0 - u)
        } else if u < self.beta {
            self.scale
        } else {
            self.scale * ((1.0 - u) / (1.0 - self.beta)).powf(-1.0 / self.beta)
        }
    }
}

impl OrbitDriver for IidDriver {
    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> (bool, bool) {
        (true, true)
    }

    fn reset_in_a(&mut self, _rng: &mut ChaCha8Rng) -> bool {
        true
    }

    fn step(&mut self, rng: &mut ChaCha8Rng, budget: f64) -> Step {
        // the draw happens unconditionally so RNG consumption per orbit
        // depends only on the renewal sequence, never on how the caller
        // splits its horizon
        let dt = self.draw(rng);
        if dt > budget {
            Step::EXCEEDED
        } else {
            Step::renewal(dt, true)
        }
    }

    fn mu_a(&self) -> f64 {
        1.0
    }

    fn mu_b(&self) -> f64 {
        1.0
    }

    fn tail(&self) -> &TailModel {
        &self.tail
    }

    fn sets(&self) -> &TargetSets {
        &self.sets
    }
}

/// Either orbit source behind one type, so experiment drivers can hold a
/// deterministic flow and the i.i.d. baseline in the same slot.
#[derive(Clone)]
pub enum AnyDriver {
    Deterministic(DeterministicDriver),
    Iid(IidDriver),
}

impl OrbitDriver for AnyDriver {
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> (bool, bool) {
        match self {
            AnyDriver::Deterministic(d) => d.reset(rng),
            AnyDriver::Iid(d) => d.reset(rng),
        }
    }

    fn reset_in_a(&mut self, rng: &mut ChaCha8Rng) -> bool {
        match self {
            AnyDriver::Deterministic(d) => d.reset_in_a(rng),
            AnyDriver::Iid(d) => d.reset_in_a(rng),
        }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng, budget: f64) -> Step {
        match self {
            AnyDriver::Deterministic(d) => d.step(rng, budget),
            AnyDriver::Iid(d) => d.step(rng, budget),
        }
    }

    fn mu_a(&self) -> f64 {
        match self {
            AnyDriver::Deterministic(d) => d.mu_a(),
            AnyDriver::Iid(d) => d.mu_a(),
        }
    }

    fn mu_b(&self) -> f64 {
        match self {
            AnyDriver::Deterministic(d) => d.mu_b(),
            AnyDriver::Iid(d) => d.mu_b(),
        }
    }

    fn tail(&self) -> &TailModel {
        match self {
            AnyDriver::Deterministic(d) => d.tail(),
            AnyDriver::Iid(d) => d.tail(),
        }
    }

    fn sets(&self) -> &TargetSets {
        match self {
            AnyDriver::Deterministic(d) => d.sets(),
            AnyDriver::Iid(d) => d.sets(),
        }
    }
}
