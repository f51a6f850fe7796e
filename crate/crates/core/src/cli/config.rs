//! Experiment configuration: a flat `key = value` file format plus
//! programmatic overrides, shared by every experiment runner.
//!
//! Values are plain scalars with two conveniences: any float may be written
//! as a fraction (`gamma1 = 4/3`), and intervals use `lo..hi`
//! (`band_b = 0..1/2`). Unknown keys are rejected by name so typos never
//! silently fall back to defaults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::RoofSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}` (run with `--help` for the key list)")]
    UnknownKey(String),
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    MalformedLine { line: usize, text: String },
    #[error("bad value for `{key}`: `{value}` ({reason})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Domain(String),
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
}

/// Orbit source selector: the deterministic suspension flow or the
/// i.i.d. renewal baseline with the same tail exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Det,
    Iid,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Det => "det",
            Mode::Iid => "iid",
        })
    }
}

/// Every knob an experiment can turn, with defaults that make each
/// subcommand runnable as-is. The struct is embedded verbatim in each
/// report so any artifact can be reproduced from its own echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `det` (suspension flow over the interval map) or `iid` (renewal
    /// baseline with independent holding times)
    pub mode: Mode,
    /// map exponent; the return-time tail index is 1/gamma1
    pub gamma1: f64,
    /// map coefficient in (0, 1]
    pub c1: f64,
    /// roof function over the full interval
    pub roof: RoofSpec,
    /// tail exponent override, i.i.d. mode only (det derives 1/gamma1)
    pub beta: Option<f64>,
    /// tail constant override, i.i.d. mode only (sets the holding-time
    /// infimum via c0 = (1-beta) a^beta, or a itself when beta = 1)
    pub c0: Option<f64>,
    /// target set A as a fraction of the reference cell
    pub set_a: (f64, f64),
    /// target set B as a fraction of the reference cell
    pub set_b: (f64, f64),
    /// fiber band over A for rectangle and occupation runs
    pub band_a: (f64, f64),
    /// fiber band over B for rectangle and occupation runs
    pub band_b: (f64, f64),
    /// first rung of the time ladder
    pub t_min: f64,
    /// final time horizon
    pub t_max: f64,
    /// window width for windowed renewal counts
    pub window_h: f64,
    /// grid density for the dense (liminf) time grid
    pub points_per_octave: usize,
    /// renewal-step checkpoints for local limit runs
    pub n_list: Vec<u64>,
    /// local-limit spatial grid, in units of the stable scale d_n
    pub llt_span: (f64, f64),
    /// number of points on the local-limit spatial grid
    pub llt_points: usize,
    /// window width for local-limit counts
    pub llt_h: f64,
    /// twist-frequency range for the aperiodicity scan
    pub scan_b: (f64, f64),
    pub scan_points: usize,
    /// twist-frequency range for the small-b eigenvalue fit (must stay
    /// within (0, 0.1])
    pub fit_b: (f64, f64),
    pub fit_points: usize,
    /// Laplace abscissas for cross-validation
    pub sigmas: Vec<f64>,
    /// abscissa for the Laplace-route normalization check
    pub sigma_route: f64,
    /// Monte Carlo orbit budget per estimator
    pub n_orbits: u64,
    /// transfer-operator grid size (power of two)
    pub grid_size: usize,
    /// Monte Carlo samples per grid cell in the operator build
    pub samples_per_cell: usize,
    /// draws for the return-time tail fit
    pub tail_samples: u64,
    /// hard cap on excursion length
    pub max_iter: u64,
    pub seed: u64,
    /// execution grouping for orbit batches; never affects results
    pub shards: usize,
    /// artifact directory (the RENLAB_OUT environment variable, when set,
    /// overrides this and nothing else)
    pub out_dir: String,
    pub write_json: bool,
    pub write_csv: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Det,
            gamma1: 4.0 / 3.0,
            c1: 1.0,
            roof: RoofSpec::default(),
            beta: None,
            c0: None,
            set_a: (0.0, 1.0),
            set_b: (0.0, 1.0),
            band_a: (0.0, 1.0),
            band_b: (0.0, 0.5),
            t_min: 100.0,
            t_max: 2000.0,
            window_h: 0.5,
            points_per_octave: 16,
            n_list: vec![25, 50, 100, 200],
            llt_span: (0.2, 5.0),
            llt_points: 33,
            llt_h: 2.0,
            scan_b: (0.05, 20.0),
            scan_points: 200,
            // the small-b eigenvalue asymptotics carry a slowly decaying
            // correction from the compensated mean of the return time
            // (relative size ~ 0.3 * b^{1-beta} for the default map), so the
            // fitted slope and phase approach their limits only as b -> 0
            // while per-point build noise grows like 1/b^beta; this window
            // balances the two (expected slope ~ 0.727, phase bias ~ -0.04)
            fit_b: (1e-4, 1e-3),
            fit_points: 12,
            sigmas: vec![0.05, 0.1, 0.2],
            sigma_route: 0.01,
            n_orbits: 200_000,
            grid_size: 1 << 12,
            samples_per_cell: 512,
            tail_samples: 100_000,
            max_iter: 1 << 24,
            seed: 0,
            shards: 1,
            out_dir: "out".into(),
            write_json: true,
            write_csv: true,
        }
    }
}

/// Every key `apply_kv` accepts, for help and error text.
pub fn known_keys() -> &'static [&'static str] {
    KNOWN_KEYS
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "gamma1",
    "c1",
    "roof",
    "beta",
    "c0",
    "set_a",
    "set_b",
    "band_a",
    "band_b",
    "t_min",
    "t_max",
    "window_h",
    "points_per_octave",
    "n_list",
    "llt_span",
    "llt_points",
    "llt_h",
    "scan_b",
    "scan_points",
    "fit_b",
    "fit_points",
    "sigmas",
    "sigma_route",
    "n_orbits",
    "grid_size",
    "samples_per_cell",
    "tail_samples",
    "max_iter",
    "seed",
    "shards",
    "out_dir",
    "write_json",
    "write_csv",
];

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

/// Parse a float, accepting `a/b` fractions.
fn parse_num(key: &str, v: &str) -> Result<f64, ConfigError> {
    let v = v.trim();
    let x = if let Some((num, den)) = v.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| bad(key, v, "fraction numerator is not a number"))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| bad(key, v, "fraction denominator is not a number"))?;
        if d == 0.0 {
            return Err(bad(key, v, "division by zero"));
        }
        n / d
    } else {
        v.parse()
            .map_err(|_| bad(key, v, "not a number (fractions like 4/3 are allowed)"))?
    };
    if !x.is_finite() {
        return Err(bad(key, v, "must be finite"));
    }
    Ok(x)
}

fn parse_interval(key: &str, v: &str) -> Result<(f64, f64), ConfigError> {
    let (lo, hi) = v
        .split_once("..")
        .ok_or_else(|| bad(key, v, "expected an interval `lo..hi`"))?;
    Ok((parse_num(key, lo)?, parse_num(key, hi)?))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| bad(key, v, "not a non-negative integer"))
}

fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigError> {
    let v = v.trim();
    // allow 2^k for the big budget knobs
    if let Some((base, exp)) = v.split_once('^') {
        let b: u64 = base
            .trim()
            .parse()
            .map_err(|_| bad(key, v, "bad power base"))?;
        let e: u32 = exp
            .trim()
            .parse()
            .map_err(|_| bad(key, v, "bad power exponent"))?;
        return b
            .checked_pow(e)
            .ok_or_else(|| bad(key, v, "power overflows u64"));
    }
    v.parse()
        .map_err(|_| bad(key, v, "not a non-negative integer"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, v, "expected true/false")),
    }
}

fn parse_roof(key: &str, v: &str) -> Result<RoofSpec, ConfigError> {
    let v = v.trim();
    let (kind, args) = v.split_once(':').unwrap_or((v, ""));
    match kind.trim() {
        "affine" => {
            let (a0, a1) = args
                .split_once(',')
                .ok_or_else(|| bad(key, v, "affine roof wants `affine:a0,a1`"))?;
            Ok(RoofSpec::Affine {
                a0: parse_num(key, a0)?,
                a1: parse_num(key, a1)?,
            })
        }
        "constant" => Ok(RoofSpec::Constant {
            c: parse_num(key, args)?,
        }),
        other => Err(bad(
            key,
            v,
            format!("unknown roof kind `{other}` (use affine:a0,a1 or constant:c)"),
        )),
    }
}

fn roof_to_string(roof: &RoofSpec) -> String {
    match *roof {
        RoofSpec::Affine { a0, a1 } => format!("affine:{a0},{a1}"),
        RoofSpec::Constant { c } => format!("constant:{c}"),
    }
}

fn parse_list_f64(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|p| parse_num(key, p)).collect()
}

fn parse_list_u64(key: &str, v: &str) -> Result<Vec<u64>, ConfigError> {
    v.split(',').map(|p| parse_u64(key, p)).collect()
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Apply one `key = value` assignment.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        let v = value.trim();
        match key {
            "mode" => {
                self.mode = match v.to_ascii_lowercase().as_str() {
                    "det" | "deterministic" => Mode::Det,
                    "iid" => Mode::Iid,
                    _ => return Err(bad(key, v, "expected det or iid")),
                }
            }
            "gamma1" => self.gamma1 = parse_num(key, v)?,
            "c1" => self.c1 = parse_num(key, v)?,
            "roof" => self.roof = parse_roof(key, v)?,
            "beta" => {
                self.beta = if v.is_empty() || v == "auto" {
                    None
                } else {
                    Some(parse_num(key, v)?)
                }
            }
            "c0" => {
                self.c0 = if v.is_empty() || v == "auto" {
                    None
                } else {
                    Some(parse_num(key, v)?)
                }
            }
            "set_a" => self.set_a = parse_interval(key, v)?,
            "set_b" => self.set_b = parse_interval(key, v)?,
            "band_a" => self.band_a = parse_interval(key, v)?,
            "band_b" => self.band_b = parse_interval(key, v)?,
            "t_min" => self.t_min = parse_num(key, v)?,
            "t_max" => self.t_max = parse_num(key, v)?,
            "window_h" => self.window_h = parse_num(key, v)?,
            "points_per_octave" => self.points_per_octave = parse_usize(key, v)?,
            "n_list" => self.n_list = parse_list_u64(key, v)?,
            "llt_span" => self.llt_span = parse_interval(key, v)?,
            "llt_points" => self.llt_points = parse_usize(key, v)?,
            "llt_h" => self.llt_h = parse_num(key, v)?,
            "scan_b" => self.scan_b = parse_interval(key, v)?,
            "scan_points" => self.scan_points = parse_usize(key, v)?,
            "fit_b" => self.fit_b = parse_interval(key, v)?,
            "fit_points" => self.fit_points = parse_usize(key, v)?,
            "sigmas" => self.sigmas = parse_list_f64(key, v)?,
            "sigma_route" => self.sigma_route = parse_num(key, v)?,
            "n_orbits" => self.n_orbits = parse_u64(key, v)?,
            "grid_size" => self.grid_size = parse_u64(key, v)? as usize,
            "samples_per_cell" => self.samples_per_cell = parse_u64(key, v)? as usize,
            "tail_samples" => self.tail_samples = parse_u64(key, v)?,
            "max_iter" => self.max_iter = parse_u64(key, v)?,
            "seed" => self.seed = parse_u64(key, v)?,
            "shards" => self.shards = parse_usize(key, v)?,
            "out_dir" => self.out_dir = v.to_string(),
            "write_json" => self.write_json = parse_bool(key, v)?,
            "write_csv" => self.write_csv = parse_bool(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parse a whole flat config file (blank lines and `#` comments ignored).
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::MalformedLine {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.apply_kv(k, v)?;
        }
        Ok(())
    }

    /// Build a config from an optional file plus `key=value` overrides,
    /// validated and with the output-directory environment override
    /// (`RENLAB_OUT`) applied.
    pub fn from_sources(
        file: Option<&std::path::Path>,
        overrides: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            cfg.apply_text(&text)?;
        }
        for (k, v) in overrides {
            cfg.apply_kv(k, v)?;
        }
        if let Ok(dir) = std::env::var("RENLAB_OUT") {
            if !dir.is_empty() {
                cfg.out_dir = dir;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The flat `key = value` rendering; `apply_text` of this string
    /// reproduces the config exactly.
    pub fn to_flat(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("mode", self.mode.to_string());
        put("gamma1", self.gamma1.to_string());
        put("c1", self.c1.to_string());
        put("roof", roof_to_string(&self.roof));
        put(
            "beta",
            self.beta.map_or("auto".into(), |x| x.to_string()),
        );
        put("c0", self.c0.map_or("auto".into(), |x| x.to_string()));
        put("set_a", format!("{}..{}", self.set_a.0, self.set_a.1));
        put("set_b", format!("{}..{}", self.set_b.0, self.set_b.1));
        put("band_a", format!("{}..{}", self.band_a.0, self.band_a.1));
        put("band_b", format!("{}..{}", self.band_b.0, self.band_b.1));
        put("t_min", self.t_min.to_string());
        put("t_max", self.t_max.to_string());
        put("window_h", self.window_h.to_string());
        put("points_per_octave", self.points_per_octave.to_string());
        put("n_list", join(&self.n_list));
        put(
            "llt_span",
            format!("{}..{}", self.llt_span.0, self.llt_span.1),
        );
        put("llt_points", self.llt_points.to_string());
        put("llt_h", self.llt_h.to_string());
        put("scan_b", format!("{}..{}", self.scan_b.0, self.scan_b.1));
        put("scan_points", self.scan_points.to_string());
        put("fit_b", format!("{}..{}", self.fit_b.0, self.fit_b.1));
        put("fit_points", self.fit_points.to_string());
        put("sigmas", join(&self.sigmas));
        put("sigma_route", self.sigma_route.to_string());
        put("n_orbits", self.n_orbits.to_string());
        put("grid_size", self.grid_size.to_string());
        put("samples_per_cell", self.samples_per_cell.to_string());
        put("tail_samples", self.tail_samples.to_string());
        put("max_iter", self.max_iter.to_string());
        put("seed", self.seed.to_string());
        put("shards", self.shards.to_string());
        put("out_dir", self.out_dir.clone());
        put("write_json", self.write_json.to_string());
        put("write_csv", self.write_csv.to_string());
        s
    }

    /// Tail exponent the run will target: 1/gamma1 in deterministic mode,
    /// the (possibly overridden) baseline exponent otherwise.
    pub fn effective_beta(&self) -> f64 {
        match self.mode {
            Mode::Det => 1.0 / self.gamma1,
            Mode::Iid => self.beta.unwrap_or(0.75),
        }
    }

    /// Holding-time infimum of the i.i.d. baseline implied by the c0
    /// override (default 1.5).
    pub fn iid_scale(&self) -> Result<f64, ConfigError> {
        let beta = self.effective_beta();
        match self.c0 {
            None => Ok(1.5),
            Some(c0) => {
                let a = if beta < 1.0 {
                    (c0 / (1.0 - beta)).powf(1.0 / beta)
                } else {
                    c0
                };
                if !(a >= 1.0 && a.is_finite()) {
                    return Err(ConfigError::Domain(format!(
                        "c0 = {c0} puts the holding-time infimum at {a:.4}, below the \
                         supported minimum 1 (need c0 >= {:.4})",
                        if beta < 1.0 { 1.0 - beta } else { 1.0 }
                    )));
                }
                Ok(a)
            }
        }
    }

    /// Doubling time ladder from t_min up, always ending exactly at t_max.
    pub fn ladder(&self) -> Vec<f64> {
        let mut ts = Vec::new();
        let mut t = self.t_min;
        while t < self.t_max * (1.0 - 1e-12) {
            ts.push(t);
            t *= 2.0;
        }
        ts.push(self.t_max);
        ts
    }

    /// Geometric grid with `points_per_octave` rungs per doubling,
    /// ending exactly at t_max.
    pub fn dense_ladder(&self) -> Vec<f64> {
        let octaves = (self.t_max / self.t_min).log2();
        let n = ((octaves * self.points_per_octave as f64).ceil() as usize).max(1);
        let mut ts: Vec<f64> = (0..n)
            .map(|i| self.t_min * (self.t_max / self.t_min).powf(i as f64 / n as f64))
            .collect();
        ts.push(self.t_max);
        ts
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let dom = |m: String| Err(ConfigError::Domain(m));
        if !(self.gamma1 >= 1.0 && self.gamma1.is_finite()) {
            return dom(format!("gamma1 must be >= 1, got {}", self.gamma1));
        }
        if !(self.c1 > 0.0 && self.c1 <= 1.0) {
            return dom(format!("c1 must lie in (0, 1], got {}", self.c1));
        }
        self.roof
            .validate()
            .map_err(|e| ConfigError::Domain(e.to_string()))?;
        match self.mode {
            Mode::Det => {
                if self.beta.is_some() {
                    return dom(
                        "beta is derived from gamma1 in det mode; set gamma1 instead".into(),
                    );
                }
                if self.c0.is_some() {
                    return dom(
                        "c0 is fitted from orbit samples in det mode and cannot be set".into(),
                    );
                }
            }
            Mode::Iid => {
                if let Some(b) = self.beta {
                    if !(b > 0.0 && b <= 1.0) {
                        return dom(format!("beta must lie in (0, 1], got {b}"));
                    }
                }
                self.iid_scale()?;
                if self.set_a != (0.0, 1.0) || self.set_b != (0.0, 1.0) {
                    return dom(
                        "the i.i.d. baseline has no base-space structure; \
                         set_a and set_b must be 0..1"
                            .into(),
                    );
                }
            }
        }
        for (name, (lo, hi)) in [
            ("set_a", self.set_a),
            ("set_b", self.set_b),
            ("band_a", self.band_a),
            ("band_b", self.band_b),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                return dom(format!("{name} must satisfy 0 <= lo < hi, got {lo}..{hi}"));
            }
            if name.starts_with("set") && hi > 1.0 {
                return dom(format!("{name} is a fraction of the cell; got top {hi} > 1"));
            }
        }
        if !(self.t_min >= 1.0 && self.t_min < self.t_max && self.t_max.is_finite()) {
            return dom(format!(
                "need 1 <= t_min < t_max, got {}..{}",
                self.t_min, self.t_max
            ));
        }
        if !(self.window_h > 0.0 && self.window_h.is_finite()) {
            return dom(format!("window_h must be positive, got {}", self.window_h));
        }
        if self.points_per_octave < 2 {
            return dom("points_per_octave must be at least 2".into());
        }
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return dom("n_list must be a strictly increasing nonempty list".into());
        }
        if self.n_list[0] == 0 {
            return dom("n_list entries must be positive".into());
        }
        if !(self.llt_span.0 > 0.0 && self.llt_span.0 < self.llt_span.1) {
            return dom(format!(
                "llt_span must satisfy 0 < lo < hi, got {}..{}",
                self.llt_span.0, self.llt_span.1
            ));
        }
        if self.llt_points < 2 {
            return dom("llt_points must be at least 2".into());
        }
        if !(self.llt_h > 0.0 && self.llt_h.is_finite()) {
            return dom(format!("llt_h must be positive, got {}", self.llt_h));
        }
        for (name, (lo, hi), pts) in [
            ("scan_b", self.scan_b, self.scan_points),
            ("fit_b", self.fit_b, self.fit_points),
        ] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return dom(format!("{name} must satisfy 0 < lo < hi, got {lo}..{hi}"));
            }
            if pts < 4 {
                return dom(format!("{name} needs at least 4 points"));
            }
        }
        if self.fit_b.1 > 0.1 + 1e-12 {
            return dom(format!(
                "fit_b top must stay within the asymptotic range (0, 0.1], got {}",
                self.fit_b.1
            ));
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return dom("sigmas must be a nonempty list of positive reals".into());
        }
        if !(self.sigma_route > 0.0 && self.sigma_route.is_finite()) {
            return dom(format!(
                "sigma_route must be positive, got {}",
                self.sigma_route
            ));
        }
        if self.n_orbits < 16 {
            return dom("n_orbits must be at least 16".into());
        }
        if self.grid_size < 64 || !self.grid_size.is_power_of_two() {
            return dom(format!(
                "grid_size must be a power of two >= 64, got {}",
                self.grid_size
            ));
        }
        if self.samples_per_cell < 16 {
            return dom("samples_per_cell must be at least 16".into());
        }
        if self.tail_samples < 10_000 {
            return dom("tail_samples must be at least 10000".into());
        }
        if self.max_iter < 4_096 {
            return dom("max_iter must be at least 4096".into());
        }
        if !(1..=256).contains(&self.shards) {
            return dom(format!("shards must lie in 1..=256, got {}", self.shards));
        }
        Ok(())
    }
}
