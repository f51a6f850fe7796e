//! Structured experiment reports: verdicts, data tables, provenance, and
//! the canonical byte form used for reproducibility comparisons.

use serde::{Deserialize, Serialize};

use crate::cli::ExperimentConfig;
use crate::renewal::{LaplaceEstimate, LltBatch, RenewalEstimate};

pub const SCHEMA_VERSION: u32 = 1;

/// One named check with its tolerance, the observed value, and whether the
/// run had enough statistical weight for the comparison to mean anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub tolerance: String,
    pub observed: f64,
    pub pass: bool,
    pub conclusive: bool,
}

impl Verdict {
    pub fn new(
        criterion: impl Into<String>,
        tolerance: impl Into<String>,
        observed: f64,
        pass: bool,
    ) -> Self {
        Self {
            criterion: criterion.into(),
            tolerance: tolerance.into(),
            observed,
            pass,
            conclusive: true,
        }
    }

    pub fn inconclusive(mut self) -> Self {
        self.conclusive = false;
        self
    }

    /// `PASS name (tolerance): observed`
    pub fn line(&self) -> String {
        let tag = if !self.conclusive {
            "INCONCLUSIVE"
        } else if self.pass {
            "PASS"
        } else {
            "FAIL"
        };
        format!(
            "{tag} {} ({}): {:.6}",
            self.criterion, self.tolerance, self.observed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

/// What the run actually measured the system to be, independent of the
/// requested configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub mode: String,
    /// tail exponent in force for normalization
    pub beta: f64,
    /// tail level in force for normalization
    pub c0: f64,
    pub mu_a: f64,
    pub mu_b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_star: Option<f64>,
    /// unconstrained tail-exponent fits, deterministic mode only
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_tau_free: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_hill: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_max_rel_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_censored: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator_stochasticity_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator_truncated_samples: Option<u64>,
}

/// One spectral data point; which fields are set depends on the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub kind: String,
    pub b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_re_l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl SpectralRow {
    pub fn empty(kind: impl Into<String>, b: f64) -> Self {
        Self {
            kind: kind.into(),
            b,
            lambda_re: None,
            lambda_im: None,
            gap: None,
            radius: None,
            norm_re_l1: None,
            residual: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

impl NamedValue {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
        }
    }
}

/// Everything needed to re-run the experiment and audit its sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub shards: usize,
    pub n_orbits: u64,
    pub max_iter: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_cell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_samples: Option<u64>,
    /// orbits dropped by the excursion cap, summed over estimator runs
    pub discards: u64,
}

/// The full artifact one experiment emits. Two runs with the same config
/// produce byte-identical `canonical_json`; wall-clock facts live only in
/// `timestamp` and `timings_ms`, which the canonical form blanks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment_id: String,
    pub outcome: Outcome,
    pub verdicts: Vec<Verdict>,
    pub system: SystemSummary,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub t_grid: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub renewal_rows: Vec<RenewalEstimate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub llt: Option<LltBatch>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub laplace_rows: Vec<LaplaceEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub spectral_rows: Vec<SpectralRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub named: Vec<NamedValue>,
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    pub timestamp: String,
    #[serde(default)]
    pub timings_ms: Vec<NamedValue>,
}

pub fn outcome_of(verdicts: &[Verdict]) -> Outcome {
    if verdicts.iter().any(|v| v.conclusive && !v.pass) {
        Outcome::Fail
    } else if verdicts.iter().any(|v| !v.conclusive) {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// The deterministic byte form: wall-clock fields blanked, everything
    /// else verbatim.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.timestamp = String::new();
        c.timings_ms = Vec::new();
        serde_json::to_string_pretty(&c).expect("report serialization cannot fail")
    }

    /// One line per verdict plus a final outcome line.
    pub fn verdict_lines(&self) -> String {
        let mut s = String::new();
        for v in &self.verdicts {
            s.push_str(&v.line());
            s.push('\n');
        }
        s.push_str(&format!(
            "{} {}\n",
            match self.outcome {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Inconclusive => "INCONCLUSIVE",
            },
            self.experiment_id
        ));
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v}"))
}

/// `kind,b,lambda_re,lambda_im,gap,radius,norm_re_l1,residual`
pub fn spectral_csv(rows: &[SpectralRow]) -> String {
    let mut s = String::from("kind,b,lambda_re,lambda_im,gap,radius,norm_re_l1,residual\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.kind,
            r.b,
            fmt_opt(r.lambda_re),
            fmt_opt(r.lambda_im),
            fmt_opt(r.gap),
            fmt_opt(r.radius),
            fmt_opt(r.norm_re_l1),
            fmt_opt(r.residual),
        ));
    }
    s
}

/// `sigma,mean,stderr,n_samples`
pub fn laplace_csv(rows: &[LaplaceEstimate]) -> String {
    let mut s = String::from("sigma,mean,stderr,n_samples\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.sigma, r.mean, r.stderr, r.n_samples
        ));
    }
    s
}

/// `name,value`
pub fn named_csv(rows: &[NamedValue]) -> String {
    let mut s = String::from("name,value\n");
    for r in rows {
        s.push_str(&format!("{},{}\n", r.name, r.value));
    }
    s
}

/// Local-limit rows flattened with their checkpoint index:
/// `n,t,h,raw_mean,stderr,normalized,target,ratio,n_samples`
pub fn llt_csv(batch: &LltBatch) -> String {
    let mut s = String::from("n,t,h,raw_mean,stderr,normalized,target,ratio,n_samples\n");
    for (n, grid) in batch.n_values.iter().zip(&batch.grids) {
        for r in grid {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                n, r.t, r.h, r.raw_mean, r.stderr, r.normalized, r.target, r.ratio, r.n_samples
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_report() -> ExperimentReport {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment_id: "demo".into(),
            outcome: Outcome::Pass,
            verdicts: vec![Verdict::new("check", "x in [0,1]", 0.5, true)],
            system: SystemSummary {
                mode: "iid".into(),
                beta: 0.75,
                c0: 0.4,
                mu_a: 1.0,
                mu_b: 1.0,
                x_star: None,
                beta_tau_free: None,
                beta_hill: None,
                tail_max_rel_defect: None,
                tail_censored: None,
                operator_stochasticity_defect: None,
                operator_truncated_samples: None,
            },
            t_grid: vec![1.0, 2.0],
            renewal_rows: vec![],
            llt: None,
            laplace_rows: vec![],
            spectral_rows: vec![SpectralRow {
                radius: Some(0.9),
                ..SpectralRow::empty("scan", 0.3)
            }],
            named: vec![NamedValue::new("answer", 42.0)],
            provenance: Provenance {
                seed: 1,
                shards: 1,
                n_orbits: 100,
                max_iter: 1 << 20,
                grid_size: None,
                samples_per_cell: None,
                tail_samples: None,
                discards: 0,
            },
            config: ExperimentConfig::default(),
            timestamp: "1755216000".into(),
            timings_ms: vec![NamedValue::new("total", 12.0)],
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let r = tiny_report();
        let back: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn canonical_form_hides_only_wall_clock_fields() {
        let mut a = tiny_report();
        let mut b = tiny_report();
        b.timestamp = "1755219999".into();
        b.timings_ms = vec![NamedValue::new("total", 99.0)];
        assert_eq!(a.canonical_json(), b.canonical_json());
        b.named[0].value = 43.0;
        assert_ne!(a.canonical_json(), b.canonical_json());
        a.named[0].value = 43.0;
        assert_eq!(a.canonical_json(), b.canonical_json());
    }

    #[test]
    fn outcome_ranks_fail_over_inconclusive() {
        let pass = Verdict::new("a", "t", 0.0, true);
        let fail = Verdict::new("b", "t", 0.0, false);
        let open = Verdict::new("c", "t", 0.0, true).inconclusive();
        assert_eq!(outcome_of(&[pass.clone()]), Outcome::Pass);
        assert_eq!(outcome_of(&[pass.clone(), open.clone()]), Outcome::Inconclusive);
        assert_eq!(outcome_of(&[pass, open, fail.clone()]), Outcome::Fail);
        // a failing check that was itself inconclusive does not fail the run
        let open_fail = Verdict::new("d", "t", 0.0, false).inconclusive();
        assert_eq!(outcome_of(&[open_fail]), Outcome::Inconclusive);
    }

    #[test]
    fn verdict_lines_name_every_check() {
        let r = tiny_report();
        let lines = r.verdict_lines();
        assert!(lines.contains("PASS check (x in [0,1]): 0.5"));
        assert!(lines.trim_end().ends_with("PASS demo"));
    }

    #[test]
    fn csv_tables_have_stable_headers() {
        assert!(spectral_csv(&[]).starts_with("kind,b,lambda_re"));
        assert!(laplace_csv(&[]).starts_with("sigma,mean,stderr"));
        assert!(named_csv(&[]).starts_with("name,value"));
    }
}
