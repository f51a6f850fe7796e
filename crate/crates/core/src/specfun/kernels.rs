//! The smoothing kernel family used by the window estimators: a Fejér-type
//! pair linking a triangle on the frequency side to a squared-sinc profile
//! on the time side, in two normalizations.
//!
//! With `core(u) = 2(1 - cos u)/u^2` (value 1 at 0):
//!   gamma_a(x) = core(a x)                    peak-normalized profile
//!   g_a(b)     = (1 - |b|/a)_+ / a            its transform / (2 pi)
//!   K_a(x)     = core(x/a) / (2 pi a)         unit-mass profile
//!   k_a(b)     = (1 - a |b|)_+                its transform
//! so that  FT(gamma_a) = 2 pi g_a,  FT(K_a) = k_a,  and the mass identity
//! integral K_a = k_a(0) = 1 holds for every bandwidth a > 0.

/// All four kernels evaluated at one argument (time-side for gamma_a and
/// K_a, frequency-side for g_a and k_a).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValues {
    /// gamma_a(x) = 2 (1 - cos a x) / (a x)^2, equal to 1 at x = 0
    pub gamma: f64,
    /// g_a(b) = a^{-1} (1 - |b|/a) for |b| <= a, else 0
    pub g: f64,
    /// K_a(x) = (2 pi a)^{-1} * 2 (1 - cos(x/a)) / (x/a)^2, unit mass
    pub big_k: f64,
    /// k_a(b) = (1 - a |b|)_+
    pub little_k: f64,
}

/// 2 (1 - cos u) / u^2 with a series core so the removable singularity at
/// 0 stays smooth to machine precision.
fn fejer_core(u: f64) -> f64 {
    let u2 = u * u;
    if u.abs() <= 0.01 {
        1.0 - u2 / 12.0 + u2 * u2 / 360.0
    } else {
        2.0 * (1.0 - u.cos()) / u2
    }
}

/// Evaluate the kernel family at bandwidth `a > 0` (panics otherwise).
pub fn kernel_pair(a: f64, x_or_b: f64) -> KernelValues {
    assert!(a > 0.0 && a.is_finite(), "kernel bandwidth must be positive");
    let x = x_or_b;
    KernelValues {
        gamma: fejer_core(a * x),
        g: (1.0 - x.abs() / a).max(0.0) / a,
        big_k: fejer_core(x / a) / (2.0 * std::f64::consts::PI * a),
        little_k: (1.0 - a * x.abs()).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;
    use std::f64::consts::PI;

    const BANDWIDTHS: [f64; 3] = [0.5, 1.0, 4.0];

    #[test]
    fn values_at_zero() {
        for a in BANDWIDTHS {
            let v = kernel_pair(a, 0.0);
            assert_eq!(v.gamma, 1.0);
            assert_eq!(v.g, 1.0 / a);
            assert!((v.big_k - 1.0 / (2.0 * PI * a)).abs() < 1e-15);
            assert_eq!(v.little_k, 1.0);
        }
    }

    #[test]
    fn triangle_shapes_and_supports() {
        let a = 2.0;
        assert_eq!(kernel_pair(a, 1.0).g, 0.25); // (1 - 1/2)/2
        assert_eq!(kernel_pair(a, 2.0).g, 0.0);
        assert_eq!(kernel_pair(a, 3.0).g, 0.0);
        assert_eq!(kernel_pair(a, 0.25).little_k, 0.5); // 1 - 2*0.25
        assert_eq!(kernel_pair(a, 0.5).little_k, 0.0);
        assert_eq!(kernel_pair(a, -0.25).little_k, 0.5);
        assert_eq!(kernel_pair(a, -1.0).g, 0.25);
    }

    #[test]
    fn series_joins_direct_branch_smoothly() {
        for &u in &[0.01f64, -0.01, 0.01 + 1e-9, 0.0099999] {
            let series = 1.0 - u * u / 12.0 + u.powi(4) / 360.0;
            let direct = 2.0 * (1.0 - f64::cos(u)) / (u * u);
            assert!((series - direct).abs() < 1e-12);
            assert!((fejer_core(u) - direct).abs() < 1e-12);
        }
    }

    /// integral over [U, infinity) of core(u)/2 du, from integration by
    /// parts and the sine-integral expansion; error O(U^{-3}).
    fn core_tail(u: f64) -> f64 {
        1.0 / u + u.sin() / (u * u)
    }

    #[test]
    fn unit_mass_profile_integrates_to_little_k_at_zero() {
        let gl = GaussLegendre::new(24);
        for a in BANDWIDTHS {
            // integrate K_a over [-L, L] in oscillation-sized panels,
            // then add the analytic tail beyond u = L/a = 3000
            let l = 3000.0 * a;
            let panels = 960usize;
            let mut mass = 0.0;
            for p in 0..panels {
                let (lo, hi) = (
                    l * p as f64 / panels as f64,
                    l * (p + 1) as f64 / panels as f64,
                );
                mass += 2.0 * gl.integrate(lo, hi, |x| kernel_pair(a, x).big_k);
            }
            // two-sided tail: 2 * (1/(2 pi a)) * a * int_{3000}^inf core
            //               = (2/pi) * core_tail(3000)
            mass += 2.0 * core_tail(3000.0) / PI;
            let expected = kernel_pair(a, 0.0).little_k;
            assert!(
                (mass - expected).abs() < 1e-8,
                "a={a}: mass {mass} vs k_a(0) = {expected}"
            );
        }
    }

    #[test]
    fn profiles_are_the_transforms_of_their_triangles() {
        // gamma_a(x) = 2 int_0^a g_a(b) cos(bx) db  and
        // K_a(x) = (1/pi) int_0^{1/a} k_a(b) cos(bx) db: compact support
        // makes plain quadrature an exact oracle for both identities.
        let gl = GaussLegendre::new(24);
        for a in BANDWIDTHS {
            for &x in &[0.0, 0.3, 1.0, 2.7, 10.0 / a, 55.5] {
                let v = kernel_pair(a, x);
                let mut gamma_q = 0.0;
                let mut big_k_q = 0.0;
                let panels = 64usize;
                for p in 0..panels {
                    let (lo, hi) = (
                        a * p as f64 / panels as f64,
                        a * (p + 1) as f64 / panels as f64,
                    );
                    gamma_q +=
                        2.0 * gl.integrate(lo, hi, |b| kernel_pair(a, b).g * (b * x).cos());
                    let (lo, hi) = (lo / (a * a), hi / (a * a)); // [0, 1/a]
                    big_k_q += gl.integrate(lo, hi, |b| {
                        kernel_pair(a, b).little_k * (b * x).cos()
                    }) / PI;
                }
                assert!(
                    (v.gamma - gamma_q).abs() < 1e-9,
                    "a={a}, x={x}: gamma {} vs quadrature {gamma_q}",
                    v.gamma
                );
                assert!(
                    (v.big_k - big_k_q).abs() < 1e-9,
                    "a={a}, x={x}: K {} vs quadrature {big_k_q}",
                    v.big_k
                );
            }
        }
    }

    #[test]
    fn fft_of_gamma_recovers_two_pi_g() {
        use rustfft::{num_complex::Complex, FftPlanner};
        let mut planner = FftPlanner::new();
        for a in BANDWIDTHS {
            let n = 1usize << 18;
            let dx = 0.5 / a;
            let fft = planner.plan_fft_forward(n);
            let mut buf: Vec<Complex<f64>> = (0..n)
                .map(|j| {
                    let x = (j as f64 - n as f64 / 2.0) * dx;
                    Complex::new(kernel_pair(a, x).gamma * dx, 0.0)
                })
                .collect();
            fft.process(&mut buf);
            let db = 2.0 * PI / (n as f64 * dx);
            let mut sup = 0.0f64;
            // frequencies up to 1.2 a (covering the support and beyond)
            let m_max = (1.2 * a / db) as usize;
            for m in 0..=m_max {
                let b = m as f64 * db;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let estimate = sign * buf[m].re;
                let exact = 2.0 * PI * kernel_pair(a, b).g;
                sup = sup.max((estimate - exact).abs());
            }
            // absolute gate at a = 1; scale-matched gate elsewhere
            let gate = 1e-4 * 2.0 * PI / a;
            assert!(sup < gate.max(1e-4), "a={a}: sup FFT error {sup:.2e}");
            if a == 1.0 {
                assert!(sup < 1e-4, "a=1 absolute gate: {sup:.2e}");
            }
        }
    }

    #[test]
    #[should_panic(expected = "bandwidth must be positive")]
    fn rejects_nonpositive_bandwidth() {
        kernel_pair(0.0, 1.0);
    }
}
