//! Split-cost functions and the constants of the limit law.
//!
//! `g` is the deterministic toll added at every recursive split of the
//! normalized cost recursion; `h` is the entropy-like integrand with
//! `g(u) = 2 h(u) + 1`. Everything else in the crate is built on these two
//! functions and the handful of constants collected in [`SplitConstants`].

use crate::error::{Error, Result};

/// Constants shared across solvers, bounds, and samplers.
///
/// All values are computed from their defining formulas at full double
/// precision rather than transcribed as decimals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SplitConstants {
    /// κ = 2 − 1/ln 2, the rate constant of the left-tail mgf bound.
    pub kappa: f64,
    /// γ = κ⁻¹, the exponential rate inside the left tail's double exponent.
    pub gamma: f64,
    /// Variance of the limit law: 7 − (2/3)π².
    pub var_z: f64,
    /// ln 2.
    pub ln2: f64,
}

impl SplitConstants {
    pub fn new() -> Self {
        let ln2 = std::f64::consts::LN_2;
        let kappa = 2.0 - 1.0 / ln2;
        let pi = std::f64::consts::PI;
        SplitConstants {
            kappa,
            gamma: 1.0 / kappa,
            var_z: 7.0 - 2.0 / 3.0 * pi * pi,
            ln2,
        }
    }
}

impl Default for SplitConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// x ln x with the analytic limit 0 at x = 0.
#[inline]
fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[inline]
pub(crate) fn g_split_unchecked(u: f64) -> f64 {
    2.0 * xlnx(u) + 2.0 * xlnx(1.0 - u) + 1.0
}

#[inline]
pub(crate) fn h_split_unchecked(u: f64) -> f64 {
    xlnx(u) + xlnx(1.0 - u)
}

/// Split cost g(u) = 2u ln u + 2(1−u) ln(1−u) + 1 on [0, 1].
///
/// Symmetric about 1/2; maximum g(0) = g(1) = 1, minimum g(1/2) = 1 − 2 ln 2.
/// Endpoints use the limit u ln u → 0 exactly.
pub fn g_split(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::domain(format!("g_split: u = {u} outside [0, 1]")));
    }
    Ok(g_split_unchecked(u))
}

/// h(u) = u ln u + (1−u) ln(1−u) on [0, 1], so that g(u) = 2 h(u) + 1.
pub fn h_split(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::domain(format!("h_split: u = {u} outside [0, 1]")));
    }
    Ok(h_split_unchecked(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn constants_satisfy_their_defining_relations() {
        let c = SplitConstants::new();
        assert!((c.gamma * c.kappa - 1.0).abs() <= 4.0 * f64::EPSILON);
        assert!(c.var_z > 0.0);
        assert!(c.kappa > 0.55 && c.kappa < 0.56);
        assert!(c.gamma > 1.79 && c.gamma < 1.80);
    }

    #[test]
    fn g_at_half_is_one_minus_two_ln_two() {
        let v = g_split(0.5).unwrap();
        assert!((v - (1.0 - 2.0 * std::f64::consts::LN_2)).abs() < 1e-15);
        assert!((v - (-0.3862943611198906)).abs() < 1e-12);
    }

    #[test]
    fn g_endpoints_are_exactly_one() {
        assert_eq!(g_split(0.0).unwrap(), 1.0);
        assert_eq!(g_split(1.0).unwrap(), 1.0);
    }

    #[test]
    fn g_quarter_frozen_value() {
        // 0.5 ln(1/4) + 1.5 ln(3/4) + 1, evaluated in high precision.
        assert!((g_split(0.25).unwrap() - (-0.12467028923761665)).abs() < 1e-14);
    }

    #[test]
    fn h_frozen_values() {
        assert!((h_split(0.5).unwrap() + std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(h_split(0.0).unwrap(), 0.0);
        assert_eq!(h_split(1.0).unwrap(), 0.0);
        assert!((h_split(0.25).unwrap() - (-0.5623351446188083)).abs() < 1e-14);
    }

    #[test]
    fn domain_errors_outside_unit_interval() {
        assert!(g_split(-1e-12).is_err());
        assert!(g_split(1.0 + 1e-12).is_err());
        assert!(h_split(2.0).is_err());
        assert!(h_split(f64::NAN).is_err());
    }

    #[test]
    fn symmetry_and_identity_on_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u: f64 = rng.gen();
            let g = g_split(u).unwrap();
            let h = h_split(u).unwrap();
            assert!((g - g_split(1.0 - u).unwrap()).abs() < 1e-14);
            assert!((h - h_split(1.0 - u).unwrap()).abs() < 1e-14);
            assert!((g - (2.0 * h + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn taylor_lower_bound_on_h() {
        // h(u) >= -ln 2 + 2 (u - 1/2)^2 everywhere on [0, 1].
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let u: f64 = rng.gen();
            let h = h_split(u).unwrap();
            let lower = -std::f64::consts::LN_2 + 2.0 * (u - 0.5) * (u - 0.5);
            assert!(h >= lower - 1e-14, "u = {u}: h = {h} < {lower}");
        }
    }

    #[test]
    fn weighted_h_positivity() {
        // (2 - kappa) h(u) + 1 >= (2/ln2)(u - 1/2)^2 >= (u - 1/2)^2.
        let c = SplitConstants::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let u: f64 = rng.gen();
            let lhs = (2.0 - c.kappa) * h_split(u).unwrap() + 1.0;
            let quad = (u - 0.5) * (u - 0.5);
            assert!(lhs >= (2.0 / c.ln2) * quad - 1e-14);
            assert!(lhs >= quad - 1e-14);
        }
    }
}
