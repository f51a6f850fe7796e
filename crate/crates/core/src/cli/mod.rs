//! Flat `key = value` configuration and the command dispatcher behind the
//! `renlab` binary: pick an experiment, run it, write the report
//! artifacts, print one line per check, and map the result to an exit
//! code.
//!
//! Exit codes: 0 all checks pass, 1 a conclusive check failed, 2 the run
//! was statistically inconclusive, 3 the configuration was rejected
//! (including regimes an experiment refuses to cover), 4 a numerical
//! stage failed to converge.

pub mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub use config::{ConfigError, ExperimentConfig, Mode};

use crate::renewal::{write_renewal_csv, EstimateBatch};
use crate::specfun::{renewal_constants_checked, StableLaw};
use crate::verify::{
    self, laplace_csv, llt_csv, named_csv, spectral_csv, ExperimentReport, VerifyError,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// windowed renewal convergence
    Srt,
    /// cumulative averages and the Laplace route
    Wre,
    /// fixed-index local limit against the stable density
    Llt,
    /// dense-ladder liminf structure of the window ratios
    Liminf,
    /// transfer-operator spectral probes
    Spectral,
    /// Monte Carlo vs. independent Laplace references
    Xval,
    /// windowed renewal convergence on the i.i.d. baseline
    Iid,
    /// print the normalization constants for the effective tail exponent
    Constants,
    /// tabulate the one-sided stable density to CSV
    Density,
}

/// Run one command against a validated config, write artifacts, print
/// verdict lines to stdout, and return the process exit code.
pub fn dispatch(cmd: Command, mut cfg: ExperimentConfig) -> i32 {
    if cmd == Command::Iid {
        cfg.mode = Mode::Iid;
        if let Err(e) = cfg.validate() {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    }
    match cmd {
        Command::Constants => return print_constants(&cfg),
        Command::Density => return write_density_table(&cfg),
        _ => {}
    }
    let result = match cmd {
        Command::Srt | Command::Iid => verify::run_srt(&cfg),
        Command::Wre => verify::run_wre(&cfg),
        Command::Llt => verify::run_llt(&cfg),
        Command::Liminf => verify::run_liminf(&cfg),
        Command::Spectral => verify::run_spectral(&cfg),
        Command::Xval => verify::cross_validate(&cfg),
        Command::Constants | Command::Density => unreachable!("handled above"),
    };
    let report = match result {
        Ok(r) => r,
        Err(VerifyError::Refused(msg)) => {
            eprintln!("refused: {msg}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return EXIT_NUMERICAL;
        }
    };
    if let Err(e) = write_artifacts(&report, &cfg) {
        eprintln!("cannot write artifacts under {}: {e}", cfg.out_dir);
        return EXIT_NUMERICAL;
    }
    print!("{}", report.verdict_lines());
    match report.outcome {
        verify::Outcome::Pass => EXIT_PASS,
        verify::Outcome::Fail => EXIT_FAIL,
        verify::Outcome::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Write the JSON report and, when enabled, one CSV per data table.
/// Returns the paths written.
pub fn write_artifacts(
    report: &ExperimentReport,
    cfg: &ExperimentConfig,
) -> std::io::Result<Vec<PathBuf>> {
    let dir = Path::new(&cfg.out_dir);
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let id = &report.experiment_id;
    if cfg.write_json {
        let path = dir.join(format!("{id}.json"));
        fs::write(&path, report.to_json())?;
        written.push(path);
    }
    if cfg.write_csv {
        if !report.renewal_rows.is_empty() {
            let path = dir.join(format!("{id}_renewal.csv"));
            let batch = EstimateBatch {
                rows: report.renewal_rows.clone(),
                discards: report.provenance.discards,
            };
            let mut buf = Vec::new();
            write_renewal_csv(&mut buf, &batch)?;
            fs::write(&path, buf)?;
            written.push(path);
        }
        if let Some(batch) = &report.llt {
            let path = dir.join(format!("{id}_llt.csv"));
            fs::write(&path, llt_csv(batch))?;
            written.push(path);
        }
        if !report.laplace_rows.is_empty() {
            let path = dir.join(format!("{id}_laplace.csv"));
            fs::write(&path, laplace_csv(&report.laplace_rows))?;
            written.push(path);
        }
        if !report.spectral_rows.is_empty() {
            let path = dir.join(format!("{id}_spectral.csv"));
            fs::write(&path, spectral_csv(&report.spectral_rows))?;
            written.push(path);
        }
        if !report.named.is_empty() {
            let path = dir.join(format!("{id}_named.csv"));
            fs::write(&path, named_csv(&report.named))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn print_constants(cfg: &ExperimentConfig) -> i32 {
    let beta = cfg.effective_beta();
    match renewal_constants_checked(beta) {
        Ok(c) => {
            println!("beta = {}", c.beta);
            println!("d_beta = {:.15}", c.d_beta);
            println!("big_d_beta = {:.15}", c.big_d_beta);
            println!("big_d_prime_beta = {:.15}", c.big_d_prime_beta);
            if c.has_c_beta() {
                println!("c_beta_re = {:.15}", c.c_beta.re);
                println!("c_beta_im = {:.15}", c.c_beta.im);
            }
            EXIT_PASS
        }
        Err(e) => {
            eprintln!("constants: {e}");
            EXIT_NUMERICAL
        }
    }
}

fn write_density_table(cfg: &ExperimentConfig) -> i32 {
    let beta = cfg.effective_beta();
    let law = match StableLaw::new(beta) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("density table: {e}");
            return EXIT_CONFIG;
        }
    };
    let dir = Path::new(&cfg.out_dir);
    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("cannot create {}: {e}", cfg.out_dir);
        return EXIT_NUMERICAL;
    }
    let path = dir.join(format!("density-beta-{beta}.csv"));
    let mut buf = Vec::new();
    let _ = writeln!(buf, "x,density,cdf");
    for i in 1..=800 {
        let x = i as f64 * 0.01;
        let _ = writeln!(buf, "{},{},{}", x, law.density(x), law.cdf(x));
    }
    match fs::write(&path, buf) {
        Ok(()) => {
            println!("wrote {}", path.display());
            EXIT_PASS
        }
        Err(e) => {
            eprintln!("cannot write {}: {e}", path.display());
            EXIT_NUMERICAL
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_table_lands_in_out_dir() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.apply_kv("mode", "iid").unwrap();
        cfg.out_dir = dir.path().to_string_lossy().into_owned();
        assert_eq!(dispatch(Command::Density, cfg), EXIT_PASS);
        let path = dir.path().join("density-beta-0.75.csv");
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("x,density,cdf"));
        assert_eq!(text.lines().count(), 801);
    }

    #[test]
    fn constants_rejects_nothing_in_range() {
        let cfg = ExperimentConfig::default();
        assert_eq!(print_constants(&cfg), EXIT_PASS);
    }
}
