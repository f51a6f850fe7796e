//! Renewal-theory laboratory CLI: build an intermittent suspension flow or
//! its i.i.d. baseline, run one verification experiment, and write report
//! artifacts.
//!
//! Configuration is a flat `key = value` file plus repeatable `--set
//! key=value` overrides; a few common keys also have dedicated flags.
//! Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 bad configuration,
//! 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use renlab::cli::{self, Command, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "renlab",
    version,
    about = "numerical laboratory for continuous-time renewal theory of induced interval maps"
)]
struct Cli {
    /// flat key = value configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// override one configuration key (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// random seed (shorthand for --set seed=...)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// det or iid (shorthand for --set mode=...)
    #[arg(long, global = true)]
    mode: Option<String>,

    /// intermittency exponent of the map (shorthand for --set gamma1=...)
    #[arg(long, global = true)]
    gamma1: Option<String>,

    /// left-branch cell width (shorthand for --set c1=...)
    #[arg(long, global = true)]
    c1: Option<String>,

    /// roof function, affine:a0,a1 or constant:c (shorthand for --set roof=...)
    #[arg(long, global = true)]
    roof: Option<String>,

    /// baseline tail exponent (shorthand for --set beta=...)
    #[arg(long, global = true)]
    beta: Option<String>,

    /// Monte Carlo orbit count (shorthand for --set n_orbits=...)
    #[arg(long = "n-orbits", global = true)]
    n_orbits: Option<String>,

    /// operator grid size (shorthand for --set grid_size=...)
    #[arg(long = "grid-size", global = true)]
    grid_size: Option<String>,

    /// independent execution shards (shorthand for --set shards=...)
    #[arg(long, global = true)]
    shards: Option<String>,

    /// artifact directory (shorthand for --set out_dir=...)
    #[arg(long, global = true)]
    out: Option<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// windowed renewal convergence (final band, error trend, rectangle route)
    Srt,
    /// cumulative averages, occupation ratio, and the Laplace route
    Wre,
    /// fixed-index local limit against the one-sided stable density
    Llt,
    /// liminf structure of window ratios on a dense time ladder
    Liminf,
    /// transfer-operator spectral probes (gap, aperiodicity, asymptotics)
    Spectral,
    /// cross-validate Monte Carlo Laplace values against exact references
    Xval,
    /// windowed renewal convergence on the i.i.d. baseline
    Iid,
    /// print the renewal normalization constants for the effective tail exponent
    Constants,
    /// tabulate the one-sided stable density and distribution to CSV
    Density,
}

fn collect_overrides(cli: &Cli) -> Result<Vec<(String, String)>, String> {
    let mut kv: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            kv.push((k.to_string(), v));
        }
    };
    push("seed", cli.seed.map(|s| s.to_string()));
    push("mode", cli.mode.clone());
    push("gamma1", cli.gamma1.clone());
    push("c1", cli.c1.clone());
    push("roof", cli.roof.clone());
    push("beta", cli.beta.clone());
    push("n_orbits", cli.n_orbits.clone());
    push("grid_size", cli.grid_size.clone());
    push("shards", cli.shards.clone());
    push("out_dir", cli.out.clone());
    for pair in &cli.set {
        match pair.split_once('=') {
            Some((k, v)) => kv.push((k.trim().to_string(), v.trim().to_string())),
            None => return Err(format!("--set needs key=value, got `{pair}`")),
        }
    }
    Ok(kv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = match collect_overrides(&cli) {
        Ok(kv) => kv,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(cli::EXIT_CONFIG as u8);
        }
    };
    let cfg = match ExperimentConfig::from_sources(cli.config.as_deref(), &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            if matches!(e, renlab::cli::ConfigError::UnknownKey(_)) {
                eprintln!("known keys: {}", renlab::cli::config::known_keys().join(", "));
            }
            return ExitCode::from(cli::EXIT_CONFIG as u8);
        }
    };
    let cmd = match cli.cmd {
        Cmd::Srt => Command::Srt,
        Cmd::Wre => Command::Wre,
        Cmd::Llt => Command::Llt,
        Cmd::Liminf => Command::Liminf,
        Cmd::Spectral => Command::Spectral,
        Cmd::Xval => Command::Xval,
        Cmd::Iid => Command::Iid,
        Cmd::Constants => Command::Constants,
        Cmd::Density => Command::Density,
    };
    ExitCode::from(cli::dispatch(cmd, cfg) as u8)
}
