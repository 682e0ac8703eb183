//! Gauss–Legendre quadrature and the folded rule for split integrals.
//!
//! Integrals over the split variable have the form ∫₀¹ f(u) du with f
//! symmetric about 1/2, so they fold to 2∫₀^{1/2}. The integrands that arise
//! from the mgf functional equation develop a boundary layer of width ~e^{-t}
//! near u = 0 for large t, so the folded rule spends half of its nodes on a
//! log-transformed panel u = e^{-v} that resolves the layer at every t, and
//! the other half on a plain panel covering [U_CUT, 1/2].

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes/weights by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Tricomi initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes/weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let xs = self.nodes.iter().map(|&x| mid + half * x).collect();
        let ws = self.weights.iter().map(|&w| half * w).collect();
        (xs, ws)
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Boundary between the log-transformed panel and the plain panel.
const U_CUT: f64 = 0.02;

/// Folded quadrature rule for ∫₀¹ f(u) du with f(u) = f(1−u).
#[derive(Debug, Clone)]
pub struct SplitQuad {
    /// Nodes in (0, 1/2], sorted ascending.
    pub u: Vec<f64>,
    /// Effective weights including the symmetry factor 2 and panel jacobians.
    pub w: Vec<f64>,
    /// ln of each effective weight, for log-domain accumulation.
    pub log_w: Vec<f64>,
}

impl SplitQuad {
    /// Rule with `total_nodes` nodes; the log panel reaches down to u = e^{-v_max}.
    pub fn new(total_nodes: usize, v_max: f64) -> Self {
        assert!(total_nodes >= 8, "need at least 8 quadrature nodes");
        let n_log = total_nodes / 2;
        let n_lin = total_nodes - n_log;

        let mut u = Vec::with_capacity(total_nodes);
        let mut w = Vec::with_capacity(total_nodes);

        // Log panel: u = e^{-v}, v from ln(1/U_CUT) to v_max; du = -e^{-v} dv.
        let gl_log = GaussLegendre::new(n_log);
        let (vs, vws) = gl_log.mapped(-U_CUT.ln(), v_max);
        for (v, vw) in vs.iter().rev().zip(vws.iter().rev()) {
            let uj = (-v).exp();
            u.push(uj);
            w.push(2.0 * vw * uj);
        }

        // Plain panel on [U_CUT, 1/2].
        let gl_lin = GaussLegendre::new(n_lin);
        let (us, uws) = gl_lin.mapped(U_CUT, 0.5);
        for (uj, uw) in us.iter().zip(uws.iter()) {
            u.push(*uj);
            w.push(2.0 * uw);
        }

        let log_w = w.iter().map(|x| x.ln()).collect();
        SplitQuad { u, w, log_w }
    }

    /// Default rule for plain (non-mgf) split integrals.
    pub fn standard(total_nodes: usize) -> Self {
        SplitQuad::new(total_nodes, 45.0)
    }

    /// ∫₀¹ f(u) du for symmetric f.
    pub fn integrate_symmetric(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.u
            .iter()
            .zip(self.w.iter())
            .map(|(&uj, &wj)| wj * f(uj))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split::{g_split_unchecked, SplitConstants};

    #[test]
    fn gauss_legendre_low_orders_match_known_values() {
        let gl = GaussLegendre::new(2);
        let x = 1.0 / 3.0f64.sqrt();
        assert!((gl.nodes[0] + x).abs() < 1e-15);
        assert!((gl.nodes[1] - x).abs() < 1e-15);
        assert!((gl.weights[0] - 1.0).abs() < 1e-15);

        let gl3 = GaussLegendre::new(3);
        assert!((gl3.nodes[1]).abs() < 1e-15);
        assert!((gl3.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        // n nodes integrate degree 2n-1 exactly.
        let gl = GaussLegendre::new(8);
        let (xs, ws) = gl.mapped(0.0, 1.0);
        for deg in 0..16usize {
            let approx: f64 = xs
                .iter()
                .zip(ws.iter())
                .map(|(&x, &w)| w * x.powi(deg as i32))
                .sum();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!(
                (approx - exact).abs() < 1e-14,
                "degree {deg}: {approx} vs {exact}"
            );
        }
    }

    #[test]
    fn folded_rule_integrates_constants_and_symmetric_polys() {
        let q = SplitQuad::standard(256);
        assert!((q.integrate_symmetric(|_| 1.0) - 1.0).abs() < 1e-12);
        // u(1-u) is symmetric with integral 1/6.
        assert!((q.integrate_symmetric(|u| u * (1.0 - u)) - 1.0 / 6.0).abs() < 1e-13);
        // u^2 + (1-u)^2 is symmetric with integral 2/3.
        let v = q.integrate_symmetric(|u| u * u + (1.0 - u) * (1.0 - u));
        assert!((v - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn integral_of_g_vanishes() {
        // Forced by ∫ u ln u du = −1/4; the truncated sampler's zero mean
        // rests on this.
        let q = SplitQuad::standard(256);
        let v = q.integrate_symmetric(g_split_unchecked);
        assert!(v.abs() < 1e-10, "∫ g = {v}");
    }

    #[test]
    fn integral_of_g_squared_is_a_third_of_var_z() {
        let q = SplitQuad::standard(256);
        let c = SplitConstants::new();
        let v = q.integrate_symmetric(|u| g_split_unchecked(u).powi(2));
        assert!((v - c.var_z / 3.0).abs() < 1e-8, "∫ g² = {v}");
    }

    #[test]
    fn node_count_split_between_panels() {
        let q = SplitQuad::new(64, 50.0);
        assert_eq!(q.len(), 64);
        assert!(q.u.iter().all(|&u| u > 0.0 && u <= 0.5));
        assert!(q.u.windows(2).all(|p| p[0] < p[1]));
    }
}
