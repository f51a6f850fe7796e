//! Numerical laboratory for continuous-time renewal behaviour of
//! intermittent interval maps.
//!
//! The crate is organized as a pipeline:
//!
//! * [`specfun`] — closed-form constants, the one-sided stable law, and
//!   smoothing kernels that the limit theorems are measured against;
//! * `dynamics` — the interval map, its induced first-return system over the
//!   fundamental cell, and tail diagnostics of the return-time distribution;
//! * `transfer` — finite-volume (Ulam-type) twisted transfer operators of the
//!   induced system, their leading spectral data, and resolvent asymptotics;
//! * `renewal` — Monte Carlo estimators of renewal windows, cumulative
//!   occupation, and local-limit histograms, deterministically sharded;
//! * `verify` — experiment drivers that assemble the above into quantitative
//!   pass/fail verdicts with machine-readable reports;
//! * `cli` — configuration parsing and the `renlab` binary's entry points.

pub mod cli;
pub mod dynamics;
pub(crate) mod quad;
pub mod renewal;
pub mod specfun;
pub mod transfer;
pub mod verify;
