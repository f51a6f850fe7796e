//! Empirical tails of the return time sigma and the induced roof tau under
//! the invariant measure: log-survival least squares for the exponent and
//! level, plus a Hill estimator as an independent read of the same index.
//!
//! Excursions past the cap are kept as right-censored observations: they
//! still count as "> n" for every threshold below the cap, so survival
//! curves over the fit window carry no truncation bias.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{first_return, DynamicsError, IntermittentMapSpec, MeasureTable, RoofSpec};

/// One survival-curve row.
#[derive(Debug, Clone, Copy)]
pub struct TailPoint {
    pub threshold: f64,
    pub survival_sigma: f64,
    pub survival_tau: f64,
}

#[derive(Debug, Clone)]
pub struct TailFit {
    /// unconstrained log-log slopes (the fitted tail exponents)
    pub beta_sigma: f64,
    pub beta_tau: f64,
    /// Hill estimate of the tau tail index from upper order statistics
    pub beta_hill: f64,
    /// exponent the levels below are constrained to (1/gamma1)
    pub beta_ref: f64,
    /// tail levels: mu(sigma > n) ~ c0_sigma n^{-beta_ref}, same for tau
    pub c0_sigma: f64,
    pub c0_tau: f64,
    pub table: Vec<TailPoint>,
    pub n_samples: u64,
    pub censored: u64,
    /// worst relative gap between c0 t^{-beta_ref} and the empirical tau
    /// survival over the fit window
    pub max_rel_defect: f64,
}

/// Log-log least squares on a survival curve: returns (exponent, level)
/// for survival ~ level * x^{-exponent}, plus the level refitted with the
/// exponent pinned to `beta_ref` (less noise feeding downstream scales).
fn fit_power_tail(thresholds: &[f64], survival: &[f64], beta_ref: f64) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = thresholds
        .iter()
        .zip(survival)
        .filter(|(_, &s)| s > 0.0)
        .map(|(&t, &s)| (t.ln(), s.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let level_pinned = pts
        .iter()
        .map(|p| p.1 + beta_ref * p.0)
        .sum::<f64>()
        / n;
    (-slope, level_pinned.exp())
}

/// Hill estimator of the tail index from the top `k` order statistics.
fn hill_index(values: &mut [f64], k: usize) -> f64 {
    assert!(k + 1 < values.len());
    let pivot = values.len() - k - 1;
    values.select_nth_unstable_by(pivot, |a, b| a.total_cmp(b));
    let xk = values[pivot];
    let mean_log: f64 = values[pivot + 1..]
        .iter()
        .map(|&x| (x / xk).ln())
        .sum::<f64>()
        / k as f64;
    1.0 / mean_log
}

/// Fit the return-time and roof tails from `n_samples` draws of the
/// invariant measure. `max_iter` caps each excursion and must leave at
/// least a factor of 4 above the top fit threshold.
pub fn tail_fit(
    map: &IntermittentMapSpec,
    roof: &RoofSpec,
    measure: &MeasureTable,
    n_samples: u64,
    seed: u64,
    max_iter: u64,
) -> Result<TailFit, DynamicsError> {
    if n_samples < 10_000 {
        return Err(DynamicsError::Domain(
            "tail fit needs at least 1e4 samples".into(),
        ));
    }
    let beta_ref = map.beta_predicted();
    let top = (max_iter as f64 / 4.0).min(1e4);
    if top < 1e3 {
        return Err(DynamicsError::Domain(
            "max_iter leaves no room for the fit window [1e2, 1e4]".into(),
        ));
    }
    let thresholds: Vec<f64> = {
        let steps = 12usize;
        let (a, b) = (1e2f64.ln(), top.ln());
        (0..=steps)
            .map(|i| (a + (b - a) * i as f64 / steps as f64).exp())
            .collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma_exceed = vec![0u64; thresholds.len()];
    let mut tau_exceed = vec![0u64; thresholds.len()];
    let mut taus: Vec<f64> = Vec::with_capacity(n_samples as usize);
    let mut censored = 0u64;
    for _ in 0..n_samples {
        let y = measure.sample(&mut rng);
        let (sigma, tau) = match first_return(map, roof, y, max_iter) {
            Ok(step) => (step.sigma as f64, step.tau),
            Err(DynamicsError::Truncated { sigma, tau, .. }) => {
                // right-censored: true values exceed the partials; both
                // partials already exceed every threshold in the window
                censored += 1;
                (sigma as f64, tau)
            }
            Err(e) => return Err(e),
        };
        for (i, &thr) in thresholds.iter().enumerate() {
            if sigma > thr {
                sigma_exceed[i] += 1;
            }
            if tau > thr {
                tau_exceed[i] += 1;
            }
        }
        taus.push(tau);
    }
    let table: Vec<TailPoint> = thresholds
        .iter()
        .enumerate()
        .map(|(i, &thr)| TailPoint {
            threshold: thr,
            survival_sigma: sigma_exceed[i] as f64 / n_samples as f64,
            survival_tau: tau_exceed[i] as f64 / n_samples as f64,
        })
        .collect();
    if table.last().unwrap().survival_tau == 0.0 {
        return Err(DynamicsError::FitFailed(
            "no exceedances at the top threshold; raise the sample budget".into(),
        ));
    }

    let surv_sigma: Vec<f64> = table.iter().map(|p| p.survival_sigma).collect();
    let surv_tau: Vec<f64> = table.iter().map(|p| p.survival_tau).collect();
    let (beta_sigma, c0_sigma) = fit_power_tail(&thresholds, &surv_sigma, beta_ref);
    let (beta_tau, c0_tau) = fit_power_tail(&thresholds, &surv_tau, beta_ref);
    let k = (n_samples as f64).powf(0.55) as usize;
    let beta_hill = hill_index(&mut taus, k.max(400));

    let max_rel_defect = table
        .iter()
        .filter(|p| p.survival_tau > 0.0)
        .map(|p| (c0_tau * p.threshold.powf(-beta_ref) / p.survival_tau - 1.0).abs())
        .fold(0.0, f64::max);

    Ok(TailFit {
        beta_sigma,
        beta_tau,
        beta_hill,
        beta_ref,
        c0_sigma,
        c0_tau,
        table,
        n_samples,
        censored,
        max_rel_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{invariant_measure_y, MeasureMethod};
    use rand::Rng;
    use std::sync::OnceLock;

    #[test]
    fn power_fit_recovers_synthetic_pareto() {
        // survival exactly 0.4 x^{-0.75} sampled on a log grid
        let thresholds: Vec<f64> = (0..13).map(|i| 100.0 * 10f64.powf(i as f64 / 6.0)).collect();
        let survival: Vec<f64> = thresholds.iter().map(|t| 0.4 * t.powf(-0.75)).collect();
        let (beta, c0) = fit_power_tail(&thresholds, &survival, 0.75);
        assert!((beta - 0.75).abs() < 1e-12);
        assert!((c0 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn hill_recovers_pareto_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let beta = 0.75;
        let mut xs: Vec<f64> = (0..400_000)
            .map(|_| rng.gen::<f64>().powf(-1.0 / beta))
            .collect();
        let k = (xs.len() as f64).powf(0.55) as usize;
        let est = hill_index(&mut xs, k);
        assert!((est - beta).abs() < 0.03, "Hill index {est}");
    }

    fn fixture() -> &'static (IntermittentMapSpec, RoofSpec, MeasureTable) {
        static F: OnceLock<(IntermittentMapSpec, RoofSpec, MeasureTable)> = OnceLock::new();
        F.get_or_init(|| {
            let map = IntermittentMapSpec::new(4.0 / 3.0, 1.0).unwrap();
            let roof = RoofSpec::default();
            let t = invariant_measure_y(
                &map,
                &roof,
                1 << 10,
                MeasureMethod::Ulam {
                    samples_per_cell: 64,
                    seed: 2,
                    max_iter: 1 << 24,
                },
            )
            .unwrap();
            (map, roof, t)
        })
    }

    #[test]
    fn return_time_tail_matches_the_map_exponent() {
        let (map, roof, table) = fixture();
        let fit = tail_fit(map, roof, table, 1_000_000, 71, 1 << 24).unwrap();
        assert!(
            (fit.beta_sigma - 0.75).abs() < 0.03,
            "sigma tail slope {}",
            fit.beta_sigma
        );
        assert!(
            (fit.beta_tau - 0.75).abs() < 0.03,
            "tau tail slope {}",
            fit.beta_tau
        );
        assert!(
            (fit.beta_hill - 0.75).abs() < 0.05,
            "Hill index {}",
            fit.beta_hill
        );
        assert!(fit.c0_tau > 0.0 && fit.c0_sigma > 0.0);
        assert!(
            fit.max_rel_defect < 0.10,
            "self-consistency defect {:.3}",
            fit.max_rel_defect
        );
        // slow variation: n^beta * survival stays within a factor band
        let factors: Vec<f64> = fit
            .table
            .iter()
            .filter(|p| p.survival_sigma > 0.0)
            .map(|p| p.survival_sigma * p.threshold.powf(0.75))
            .collect();
        let top = factors.iter().fold(f64::MIN, |a, &b| a.max(b));
        let bot = factors.iter().fold(f64::MAX, |a, &b| a.min(b));
        assert!(top / bot < 2.5, "tail factor drifts: {bot:.4}..{top:.4}");
    }

    #[test]
    fn censoring_is_counted_but_harmless_in_window() {
        let (map, roof, table) = fixture();
        // cap low enough that a few excursions censor, window shrinks
        let fit = tail_fit(map, roof, table, 200_000, 9, 40_000).unwrap();
        assert!(fit.table.last().unwrap().threshold <= 10_001.0);
        assert!((fit.beta_sigma - 0.75).abs() < 0.06);
        // cap too low for any window at all
        assert!(tail_fit(map, roof, table, 50_000, 9, 2_000).is_err());
    }
}
