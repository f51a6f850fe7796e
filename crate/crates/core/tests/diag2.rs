//! Scratch diagnostics (ignored by default).

use renlab::cli::ExperimentConfig;
use renlab::renewal::{estimate_llt_window, LltPlan, OrbitDriver};
use renlab::specfun::StableLaw;
use renlab::verify::build_lab;

fn det_cfg() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_kv("grid_size", "4096").unwrap();
    cfg.apply_kv("samples_per_cell", "128").unwrap();
    cfg.apply_kv("tail_samples", "200000").unwrap();
    cfg.validate().unwrap();
    cfg
}

#[test]
#[ignore]
fn compensated_mean_and_llt_shift() {
    let cfg = det_cfg();
    let lab = build_lab(&cfg, false).unwrap();
    let beta = lab.beta;
    let c0 = lab.tail.c0;
    println!("beta={beta} c0={c0}");

    // direct kappa1 = E[tau 1(tau<T)] - beta/(1-beta) c0 T^{1-beta}
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(424242);
    let mut drv = lab.driver.clone();
    let n_samples = 400_000u64;
    let thresholds: [f64; 5] = [30.0, 100.0, 300.0, 1000.0, 3000.0];
    let mut sums = [0.0f64; 5];
    let mut censored = [0u64; 5];
    for _ in 0..n_samples {
        drv.reset(&mut rng);
        let s = drv.step(&mut rng, 1e7);
        let tau = if s.truncated { 1e7 } else { s.dt };
        for (k, &t_cap) in thresholds.iter().enumerate() {
            if tau < t_cap {
                sums[k] += tau;
            } else {
                censored[k] += 1;
            }
        }
    }
    for (k, &t_cap) in thresholds.iter().enumerate() {
        let trunc_mean = sums[k] / n_samples as f64;
        let compensation = beta / (1.0 - beta) * c0 * t_cap.powf(1.0 - beta);
        println!(
            "T={t_cap:8.0}  E[tau 1(tau<T)]={trunc_mean:10.4}  comp={compensation:10.4}  kappa1_hat={:10.4}  censored_frac={:.5}",
            trunc_mean - compensation,
            censored[k] as f64 / n_samples as f64
        );
    }

    // llt windows vs plain and shifted stable density
    let law = StableLaw::new(beta).unwrap();
    for &n in &[50u64, 200u64] {
        let d_n = lab.tail.d_n(n);
        let plan = LltPlan::scaled(&lab.tail, &[n], (0.2, 5.0), 13, 2.0).unwrap();
        let batch = estimate_llt_window(&lab.driver, &law, &plan, 400_000, 19, 1).unwrap();
        println!("n={n} d_n={d_n:.2}  (columns: x, normalized, target, shifted targets for kappa1 in {{-2.6,-3.1,-3.6}})");
        for row in &batch.grids[0] {
            let x = row.t / d_n;
            let mm = lab.mu_a * lab.mu_b;
            let sh = |k1: f64| law.density(x - n as f64 * k1 / d_n) * mm;
            println!(
                "  x={x:6.3}  est={:8.5}  q={:8.5}  q26={:8.5} q31={:8.5} q36={:8.5}",
                row.normalized,
                row.target,
                sh(-2.6),
                sh(-3.1),
                sh(-3.6)
            );
        }
    }
}
