//! Shared Gauss–Legendre quadrature utilities.
//!
//! Callers lay out their own panel edges — every integrand in this crate is
//! smooth once its singularity has been removed by an explicit substitution —
//! and the fixed-order rule integrates each panel. Nodes and weights are
//! generated at construction by Newton iteration on the Legendre recurrence,
//! which reaches machine precision in a handful of steps and avoids
//! hand-typed coefficient tables.

use num_complex::Complex64;

/// Legendre polynomial value and derivative at `x` for order `n`, by the
/// standard three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0_f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed-order Gauss–Legendre rule on [-1, 1], mapped per panel.
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre order must be at least 2");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..60 {
                let (p, dp) = legendre_pair(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_pair(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    pub fn integrate_cx<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }
}

/// Trapezoid rule over an arbitrary sorted node/value table.
pub fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    assert_eq!(t.len(), v.len());
    let mut acc = 0.0;
    for i in 1..t.len() {
        acc += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let gl = GaussLegendre::new(8);
        // degree 15 is the highest exactly integrated by an 8-point rule
        let exact = 2.0 / 16.0; // int_{-1}^{1} x^{15} dx = 0; use x^14: 2/15
        let got = gl.integrate(-1.0, 1.0, |x| x.powi(14));
        assert!(
            (got - 2.0 / 15.0).abs() < 1e-14,
            "x^14 over [-1,1]: got {got}, want {}",
            2.0 / 15.0
        );
        let odd = gl.integrate(-1.0, 1.0, |x| x.powi(15));
        assert!(odd.abs() < 1e-15, "odd power should vanish, got {odd}");
        let _ = exact;
    }

    #[test]
    fn panels_integrate_oscillatory_exponential() {
        let gl = GaussLegendre::new(20);
        // int_0^{2 pi} sin(x) e^{-x} dx = (1 - e^{-2 pi}) / 2
        let mut acc = 0.0;
        let edges = 8;
        for k in 0..edges {
            let a = 2.0 * std::f64::consts::PI * k as f64 / edges as f64;
            let b = 2.0 * std::f64::consts::PI * (k + 1) as f64 / edges as f64;
            acc += gl.integrate(a, b, |x| x.sin() * (-x).exp());
        }
        let want = (1.0 - (-2.0 * std::f64::consts::PI).exp()) / 2.0;
        assert!((acc - want).abs() < 1e-14, "got {acc}, want {want}");
    }

    #[test]
    fn trapezoid_on_linear_table_is_exact() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|x| 3.0 * x + 1.0).collect();
        let got = trapezoid(&t, &v);
        assert!((got - 2.5).abs() < 1e-15, "got {got}, want 2.5");
    }
}
