//! Moment generating function ψ(t) = E e^{tZ} of the limit law.
//!
//! ψ satisfies the fixed-point equation ψ(t) = ∫₀¹ ψ(ut) ψ((1−u)t) e^{t g(u)} du,
//! and is finite for every real t but grows violently on the right
//! (log ψ(10) is in the thousands), so everything here works on log ψ.
//!
//! Solving: plain Picard iteration of the integral operator stalls at large
//! |t| — information propagates from small |t| outward only one interpolation
//! cell per pass, and reaching log ψ(t_max) takes on the order of log ψ(t_max)
//! passes. Instead `solve_mgf` performs nonlinear Gauss–Seidel sweeps from
//! t = 0 outward (each grid value is re-solved against the current table by a
//! safeguarded secant), which propagates the solution across the whole grid
//! per sweep. The converged table is a fixed point of the same discrete
//! operator, which [`fixed_point_step`] then certifies: the residual reported
//! in the table is sup |log ψ − step(log ψ)| over the grid.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::interp::{derivative_at_index, hermite_eval, segment_index, MonotoneCubic};
use crate::par::{map_indexed, map_indexed_seq};
use crate::quad::SplitQuad;
use crate::split::SplitConstants;
use crate::Side;

/// Solver configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Half-width of the symmetric t-grid.
    pub t_max: f64,
    /// Number of grid points (odd, so that 0 is a node).
    pub grid_points: usize,
    /// Total quadrature nodes per integral evaluation.
    pub quad_nodes: usize,
    /// Sup-norm convergence tolerance on log ψ.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_max: 10.0,
            grid_points: 2001,
            quad_nodes: 256,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) {
            return Err(Error::config("t_max must be positive"));
        }
        if self.grid_points % 2 == 0 || self.grid_points < 5 {
            return Err(Error::config("grid_points must be odd and >= 5"));
        }
        if self.quad_nodes < 16 {
            return Err(Error::config("quad_nodes must be >= 16"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol must be positive"));
        }
        Ok(())
    }

    fn quad(&self) -> SplitQuad {
        SplitQuad::new(self.quad_nodes, self.t_max + 45.0)
    }

    /// Symmetric grid with an exact 0 at the center and exact ±t pairs.
    pub fn grid(&self) -> Vec<f64> {
        let half = (self.grid_points - 1) / 2;
        let mut ts = Vec::with_capacity(self.grid_points);
        for i in (1..=half).rev() {
            ts.push(-self.t_max * i as f64 / half as f64);
        }
        ts.push(0.0);
        for i in 1..=half {
            ts.push(self.t_max * i as f64 / half as f64);
        }
        ts
    }
}

/// Solved table of log ψ on a symmetric t-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MgfTable {
    pub config: SolverConfig,
    pub t_grid: Vec<f64>,
    pub log_psi: Vec<f64>,
    /// Picard verification steps taken after the sweep phase.
    pub iteration_count: usize,
    /// sup |log ψ − step(log ψ)| over the grid at convergence.
    pub residual: f64,
}

/// Empirical constant certifying one of the mgf bounds on a computed table:
/// left, ψ(−t) < exp(κ t ln t + a t + 1); right, ψ(t) ≤ exp(e^t + a t).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaConstant {
    pub side: Side,
    pub a: f64,
    /// Positive-t interval the certificate was checked on.
    pub t_range: (f64, f64),
    /// Smallest gap bound_exponent − log ψ over the checked grid (≥ 0).
    pub slack_min: f64,
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = terms.iter().map(|&t| (t - m).exp()).sum();
    m + s.ln()
}

/// Hermite lookup with derivatives recomputed from the current values; used
/// during sweeps where knot values are still moving.
fn eval_local(ts: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = segment_index(ts, x);
    let d0 = derivative_at_index(ts, ys, k);
    let d1 = derivative_at_index(ts, ys, k + 1);
    hermite_eval(ts[k], ts[k + 1], ys[k], ys[k + 1], d0, d1, x)
}

/// One application of the integral operator at grid index i, evaluating the
/// current table by local interpolation.
fn operator_at(ts: &[f64], ys: &[f64], i: usize, quad: &SplitQuad) -> f64 {
    let t = ts[i];
    if t == 0.0 {
        return 0.0;
    }
    let mut terms = Vec::with_capacity(quad.len());
    for (j, &u) in quad.u.iter().enumerate() {
        let a = eval_local(ts, ys, u * t);
        let b = eval_local(ts, ys, (1.0 - u) * t);
        terms.push(quad.log_w[j] + a + b + t * crate::split::g_split_unchecked(quad.u[j]));
    }
    log_sum_exp(&terms)
}

/// Solve ys[i] = operator_at(i) in-place by safeguarded secant (regula falsi
/// with Illinois damping). ys[i] holds the initial guess on entry.
fn solve_point(
    ts: &[f64],
    ys: &mut [f64],
    i: usize,
    quad: &SplitQuad,
    inner_floor: f64,
) -> Result<f64> {
    let phi = |ys: &mut [f64], y: f64| -> f64 {
        ys[i] = y;
        operator_at(ts, ys, i, quad) - y
    };

    let mut lo = ys[i];
    let mut flo = phi(ys, lo);
    // Walk the bracket ends until phi(lo) >= 0 >= phi(hi).
    let mut step = 1.0 + 0.1 * lo.abs();
    let mut guard = 0;
    while flo < 0.0 && guard < 90 {
        lo -= step;
        step *= 2.0;
        flo = phi(ys, lo);
        guard += 1;
    }
    let mut hi = lo + 1.0 + 0.05 * lo.abs();
    let mut fhi = phi(ys, hi);
    step = hi - lo;
    guard = 0;
    while fhi > 0.0 && guard < 90 {
        lo = hi;
        flo = fhi;
        hi += step;
        step *= 2.0;
        fhi = phi(ys, hi);
        guard += 1;
    }
    if flo < 0.0 || fhi > 0.0 {
        return Err(Error::Numeric(format!(
            "mgf solve: could not bracket the fixed point at t = {}",
            ts[i]
        )));
    }

    let tol = |y: f64| (1.0 + y.abs()) * f64::EPSILON * 4.0 + inner_floor;
    for _ in 0..200 {
        if hi - lo <= tol(hi) {
            break;
        }
        // Secant through the bracket ends, bisection as fallback.
        let mut cand = if (fhi - flo).abs() > 0.0 {
            lo + flo * (hi - lo) / (flo - fhi)
        } else {
            0.5 * (lo + hi)
        };
        if !(cand > lo && cand < hi) {
            cand = 0.5 * (lo + hi);
        }
        let fc = phi(ys, cand);
        if fc == 0.0 {
            ys[i] = cand;
            return Ok(cand);
        }
        if fc > 0.0 {
            lo = cand;
            flo = fc;
            // Illinois damping so one stagnant end cannot pin the bracket.
            fhi *= 0.5;
        } else {
            hi = cand;
            fhi = fc;
            flo *= 0.5;
        }
    }
    let y = 0.5 * (lo + hi);
    ys[i] = y;
    Ok(y)
}

/// One outward Gauss–Seidel sweep over both halves; returns the largest
/// value change. The points at ±h are pinned by the caller (their discrete
/// equations are degenerate: both integrand arguments fall into the single
/// adjoining interpolation segment, whose Hermite weights sum to exactly 1,
/// so the operator is insensitive to the value there).
fn sweep(ts: &[f64], ys: &mut [f64], quad: &SplitQuad, inner_floor: f64) -> Result<f64> {
    let center = ts.len() / 2;
    debug_assert_eq!(ts[center], 0.0);
    ys[center] = 0.0;
    let mut max_change = 0.0f64;
    for k in center + 2..ts.len() {
        let old = ys[k];
        let new = solve_point(ts, ys, k, quad, inner_floor)?;
        max_change = max_change.max((new - old).abs());
    }
    for k in (0..center.saturating_sub(1)).rev() {
        let old = ys[k];
        let new = solve_point(ts, ys, k, quad, inner_floor)?;
        max_change = max_change.max((new - old).abs());
    }
    Ok(max_change)
}

/// Third central moment of the limit law from the fixed-point identity:
/// m₃ (1 − E[U³+(1−U)³]) = 6 var E[U²g] + E g³ with E[U³+(1−U)³] = 1/2 and
/// E[U²g] = 1/36, so m₃ = var/3 + 2 E g³.
fn third_moment(quad: &SplitQuad) -> f64 {
    let c = SplitConstants::new();
    let g3 = quad.integrate_symmetric(|u| crate::split::g_split_unchecked(u).powi(3));
    c.var_z / 3.0 + 2.0 * g3
}

fn step_values<F>(ts: &[f64], ys: &[f64], quad: &SplitQuad, map: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>,
{
    let interp = MonotoneCubic::new(ts.to_vec(), ys.to_vec())?;
    let eval_one = |i: usize| -> f64 {
        let t = ts[i];
        if t == 0.0 {
            return 0.0;
        }
        let mut terms = Vec::with_capacity(quad.len());
        for (j, &u) in quad.u.iter().enumerate() {
            terms.push(
                quad.log_w[j]
                    + interp.eval(u * t)
                    + interp.eval((1.0 - u) * t)
                    + t * crate::split::g_split_unchecked(u),
            );
        }
        log_sum_exp(&terms)
    };
    let out = map(ts.len(), &eval_one);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "fixed-point step produced a non-finite log psi value".into(),
        ));
    }
    Ok(out)
}

/// One log-domain application of the functional-equation operator to a table.
pub fn fixed_point_step(table: &MgfTable) -> Result<MgfTable> {
    #[cfg(feature = "parallel")]
    {
        fixed_point_step_par(table)
    }
    #[cfg(not(feature = "parallel"))]
    {
        fixed_point_step_seq(table)
    }
}

/// Sequential variant of [`fixed_point_step`] (always available; the
/// parallel variant produces bit-identical output).
pub fn fixed_point_step_seq(table: &MgfTable) -> Result<MgfTable> {
    let quad = table.config.quad();
    let log_psi = step_values(&table.t_grid, &table.log_psi, &quad, |n, f| {
        map_indexed_seq(n, f)
    })?;
    Ok(MgfTable {
        config: table.config.clone(),
        t_grid: table.t_grid.clone(),
        log_psi,
        iteration_count: table.iteration_count,
        residual: table.residual,
    })
}

/// Rayon-parallel variant of [`fixed_point_step`].
#[cfg(feature = "parallel")]
pub fn fixed_point_step_par(table: &MgfTable) -> Result<MgfTable> {
    let quad = table.config.quad();
    let log_psi = step_values(&table.t_grid, &table.log_psi, &quad, |n, f| {
        map_indexed(n, f)
    })?;
    Ok(MgfTable {
        config: table.config.clone(),
        t_grid: table.t_grid.clone(),
        log_psi,
        iteration_count: table.iteration_count,
        residual: table.residual,
    })
}

/// A-posteriori self-consistency check: sup |log ψ − step(log ψ)| over the grid.
pub fn mgf_residual(table: &MgfTable) -> Result<f64> {
    let stepped = fixed_point_step(table)?;
    Ok(table
        .log_psi
        .iter()
        .zip(stepped.log_psi.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Solve the functional equation on the configured grid.
///
/// Starts from log ψ₀(t) = var_z t²/2 (matching the first two moments of the
/// fixed point) and runs outward Gauss–Seidel sweeps — each grid value is
/// re-solved against its own equation — until the sup-norm change of a sweep
/// drops below `tol`. The final residual is measured by one application of
/// [`fixed_point_step`].
///
/// Long Picard loops are deliberately avoided: the linearized operator
/// δ ↦ E[δ(Ut) + δ((1−U)t)] is neutral on mean-shift perturbations and
/// expanding on perturbations that vanish sublinearly at t = 0, so repeated
/// stepping amplifies roundoff instead of converging.
pub fn solve_mgf(config: &SolverConfig) -> Result<MgfTable> {
    config.validate()?;
    let quad = config.quad();
    let ts = config.grid();
    let c = SplitConstants::new();
    let mut ys: Vec<f64> = ts.iter().map(|&t| 0.5 * c.var_z * t * t).collect();

    // The points at ±h carry no information of their own in the discrete
    // system; pin them from the cumulant expansion
    // log ψ(t) = var t²/2 + m₃ t³/6 + O(t⁴).
    let center = ts.len() / 2;
    let h = ts[center + 1];
    let m3 = third_moment(&quad);
    ys[center + 1] = 0.5 * c.var_z * h * h + m3 * h * h * h / 6.0;
    ys[center - 1] = 0.5 * c.var_z * h * h - m3 * h * h * h / 6.0;

    let inner_floor = (config.tol * 1e-3).min(1e-12);
    let mut change = f64::INFINITY;
    let mut iterations = 0usize;
    while iterations < config.max_iter {
        change = sweep(&ts, &mut ys, &quad, inner_floor)?;
        iterations += 1;
        if change < config.tol {
            let mut table = MgfTable {
                config: config.clone(),
                t_grid: ts,
                log_psi: ys,
                iteration_count: iterations,
                residual: f64::NAN,
            };
            table.residual = mgf_residual(&table)?;
            if !table.residual.is_finite() {
                return Err(Error::Numeric("non-finite residual after solve".into()));
            }
            return Ok(table);
        }
    }
    Err(Error::Convergence {
        iterations,
        residual: change,
    })
}

/// Smallest a ≥ 0 making the side's mgf bound hold at every positive grid
/// point of the table, together with the residual slack under that a.
pub fn find_lemma_constant(side: Side, table: &MgfTable) -> Result<LemmaConstant> {
    let c = SplitConstants::new();
    let center = table.t_grid.len() / 2;
    let n_pos = table.t_grid.len() - center - 1;
    if n_pos == 0 {
        return Err(Error::domain("find_lemma_constant: no positive grid points"));
    }

    // Exponent of the certified bound at t > 0, with a = 0.
    let base = |t: f64| -> f64 {
        match side {
            Side::Left => c.kappa * t * t.ln() + 1.0,
            Side::Right => t.exp(),
        }
    };
    // log psi at the side's argument (−t for left, t for right).
    let log_psi_at = |k: usize| -> f64 {
        match side {
            Side::Left => table.log_psi[center - k],
            Side::Right => table.log_psi[center + k],
        }
    };

    let mut a = 0.0f64;
    for k in 1..=n_pos {
        let t = table.t_grid[center + k];
        a = a.max((log_psi_at(k) - base(t)) / t);
    }
    let mut slack_min = f64::INFINITY;
    for k in 1..=n_pos {
        let t = table.t_grid[center + k];
        slack_min = slack_min.min(base(t) + a * t - log_psi_at(k));
    }
    Ok(LemmaConstant {
        side,
        a,
        t_range: (table.t_grid[center + 1], table.config.t_max),
        slack_min,
    })
}

impl MgfTable {
    /// Index of t = 0.
    pub fn center(&self) -> usize {
        self.t_grid.len() / 2
    }

    /// Grid spacing.
    pub fn spacing(&self) -> f64 {
        self.t_grid[self.center() + 1] - self.t_grid[self.center()]
    }

    /// ψ at the k-th grid point right of center (negative k: left).
    fn psi_near_zero(&self, k: i64) -> f64 {
        let idx = (self.center() as i64 + k) as usize;
        self.log_psi[idx].exp()
    }

    /// ψ′(0) by a fourth-order central difference on the grid.
    pub fn psi_prime_at_zero(&self) -> f64 {
        let h = self.spacing();
        (8.0 * (self.psi_near_zero(1) - self.psi_near_zero(-1))
            - (self.psi_near_zero(2) - self.psi_near_zero(-2)))
            / (12.0 * h)
    }

    /// ψ″(0) by a fourth-order central difference on the grid.
    pub fn psi_second_at_zero(&self) -> f64 {
        let h = self.spacing();
        (-self.psi_near_zero(2) + 16.0 * self.psi_near_zero(1) - 30.0
            + 16.0 * self.psi_near_zero(-1)
            - self.psi_near_zero(-2))
            / (12.0 * h * h)
    }

    /// Interpolator for log ψ over the full grid.
    pub fn interpolator(&self) -> Result<MonotoneCubic> {
        MonotoneCubic::new(self.t_grid.clone(), self.log_psi.clone())
    }

    /// CSV rows: t, log_psi.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "t,log_psi")?;
        for (t, lp) in self.t_grid.iter().zip(self.log_psi.iter()) {
            writeln!(out, "{t},{lp}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SolverConfig {
        SolverConfig {
            t_max: 2.0,
            grid_points: 201,
            quad_nodes: 96,
            tol: 1e-10,
            max_iter: 200,
        }
    }

    fn flat_table(config: &SolverConfig) -> MgfTable {
        let ts = config.grid();
        MgfTable {
            config: config.clone(),
            log_psi: vec![0.0; ts.len()],
            t_grid: ts,
            iteration_count: 0,
            residual: 0.0,
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig {
            grid_points: 2000,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            t_max: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            quad_nodes: 8,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn grid_is_symmetric_with_exact_zero() {
        let ts = SolverConfig::default().grid();
        assert_eq!(ts.len(), 2001);
        assert_eq!(ts[1000], 0.0);
        for i in 0..ts.len() {
            assert_eq!(ts[i], -ts[ts.len() - 1 - i]);
        }
        assert_eq!(ts[0], -10.0);
        assert_eq!(*ts.last().unwrap(), 10.0);
    }

    #[test]
    fn step_of_constant_one_at_zero_is_zero() {
        let cfg = small_config();
        let stepped = fixed_point_step(&flat_table(&cfg)).unwrap();
        assert_eq!(stepped.log_psi[stepped.center()], 0.0);
    }

    #[test]
    fn step_of_constant_one_matches_small_t_expansion() {
        // With psi = 1 the step returns log ∫ e^{t g(u)} du ≈ t² var_z / 6.
        let cfg = small_config();
        let stepped = fixed_point_step(&flat_table(&cfg)).unwrap();
        let c = SplitConstants::new();
        let h = stepped.spacing();
        let idx = stepped.center() + 1;
        let t = stepped.t_grid[idx];
        assert!((t - h).abs() < 1e-15);
        // Second-order expansion with an O(t³) allowance (∫g³ ≈ 0.046).
        let expected = t * t * c.var_z / 6.0;
        assert!(
            (stepped.log_psi[idx] - expected).abs() < 0.1 * t * t * t,
            "t = {t}: {} vs {expected}",
            stepped.log_psi[idx]
        );

        // Direct quadrature oracle at the same t.
        let q = cfg.quad();
        let oracle = q
            .integrate_symmetric(|u| (t * crate::split::g_split_unchecked(u)).exp())
            .ln();
        assert!((stepped.log_psi[idx] - oracle).abs() < 1e-13);
    }

    #[test]
    fn constant_one_is_not_a_fixed_point_away_from_zero() {
        let cfg = small_config();
        let table = flat_table(&cfg);
        let r = mgf_residual(&table).unwrap();
        assert!(r > 0.1, "residual of psi==1 at t_max=2 is {r}");
    }

    #[test]
    fn small_solve_converges_and_matches_moments() {
        let cfg = small_config();
        let table = solve_mgf(&cfg).unwrap();
        let c = SplitConstants::new();
        assert_eq!(table.log_psi[table.center()], 0.0);
        // Residual is dominated by the cumulant-pinned points at ±h, which
        // carry an O(m3 h^3) interpolation error.
        assert!(table.residual < 1e-6, "residual {}", table.residual);
        assert!(table.psi_prime_at_zero().abs() < 1e-6);
        assert!((table.psi_second_at_zero() - c.var_z).abs() < 1e-3);
        // Jensen: log psi >= 0 on the whole grid.
        assert!(table.log_psi.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn lemma_constants_on_degenerate_flat_table() {
        let cfg = small_config();
        let table = flat_table(&cfg);
        let left = find_lemma_constant(Side::Left, &table).unwrap();
        assert_eq!(left.a, 0.0);
        assert!(left.slack_min >= 0.0);
        let right = find_lemma_constant(Side::Right, &table).unwrap();
        assert_eq!(right.a, 0.0);
        assert!(right.slack_min >= 0.0);
    }

    #[test]
    fn parallel_and_sequential_steps_agree() {
        let cfg = small_config();
        let mut table = flat_table(&cfg);
        table.log_psi = table
            .t_grid
            .iter()
            .map(|&t| 0.21 * t * t)
            .collect();
        let seq = fixed_point_step_seq(&table).unwrap();
        #[cfg(feature = "parallel")]
        {
            let par = fixed_point_step_par(&table).unwrap();
            assert_eq!(seq.log_psi, par.log_psi);
        }
        let _ = seq;
    }

    #[test]
    fn csv_round_shape() {
        let cfg = small_config();
        let table = flat_table(&cfg);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,log_psi\n"));
        assert_eq!(s.lines().count(), cfg.grid_points + 1);
    }
}
