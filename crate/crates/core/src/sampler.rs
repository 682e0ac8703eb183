//! Monte Carlo machinery for the limit law.
//!
//! The identity Z = U Z′ + (1−U) Z″ + g(U) expands into a random binary tree
//! whose node at ancestral fraction f contributes f·g(U). Truncating a
//! subtree replaces it by its conditional mean 0, so a depth-d truncation has
//! mean exactly 0 and variance var_z (1 − (2/3)^d). Subtrees whose ancestral
//! fraction falls below a prune threshold ε are cut the same way; the
//! expected number of expanded nodes is 2(1/ε − 1) regardless of depth, and
//! the extra variance deficit is at most ε·var_z.
//!
//! Two conditioned samplers estimate the rare tails, each an unbiased
//! estimator of P(tail event ∧ conditioning event) ≤ P(tail event):
//!
//! - balanced-splits: every split in the first m generations is drawn from
//!   Uniform(1/2−ε, 1/2+ε); weight (2ε)^(2^m −1). A complete conditioned tree
//!   costs 2^m nodes, which is the mechanism behind the doubly exponential
//!   left tail.
//! - unbalanced spine: a path of m splits drawn from Uniform(0, δ), recursing
//!   on the large side; weight δ^m, linear cost.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::par::{map_indexed, map_indexed_seq};
use crate::rng::{stream_rng, SampleRng};
use crate::split::{g_split_unchecked, SplitConstants};
use crate::Side;
use rand::Rng;

/// Default truncation depth for plain sampling.
pub const DEFAULT_DEPTH: u32 = 30;
/// Default ancestral-fraction prune threshold; expected cost per plain sample
/// is 2(1/ε − 1) node visits and the variance bias is below ε·var_z.
pub const DEFAULT_PRUNE_FRAC: f64 = 1e-3;
/// Hard cap on conditioned-tree nodes per balanced-splits sample.
pub const NODE_BUDGET: u64 = 1 << 20;
/// Depth cap (tree cost doubles per level if unpruned).
pub const MAX_DEPTH: u32 = 64;

/// One draw of the truncated recursion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightedSample {
    /// Realized value of the truncated recursion.
    pub value: f64,
    /// Log importance weight; 0 for plain sampling, negative for the
    /// conditioned samplers.
    pub log_weight: f64,
    /// Truncation depth the value corresponds to.
    pub depth: u32,
}

/// Estimator label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Plain,
    BalancedIs,
    SpineIs,
}

/// A tail probability estimate. `log_p_hat`/`log_std_err` are authoritative:
/// conditioned estimates routinely underflow the linear fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailEstimate {
    pub x: f64,
    pub side: Side,
    pub p_hat: f64,
    pub std_err: f64,
    pub log_p_hat: f64,
    pub log_std_err: f64,
    pub n_samples: usize,
    pub method: Method,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
}

/// Plain-sampler configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub depth: u32,
    pub prune_frac: f64,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            depth: DEFAULT_DEPTH,
            prune_frac: DEFAULT_PRUNE_FRAC,
            seed: 0,
        }
    }
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::domain(format!(
            "depth {depth} exceeds cap {MAX_DEPTH}"
        )));
    }
    Ok(())
}

/// Recursive expansion; pruned subtrees contribute their conditional mean 0.
fn tree_value(rng: &mut SampleRng, frac: f64, depth: u32, prune: f64, nodes: &mut u64) -> f64 {
    if depth == 0 || frac < prune {
        return 0.0;
    }
    *nodes += 1;
    let u: f64 = rng.gen();
    frac * g_split_unchecked(u)
        + tree_value(rng, frac * u, depth - 1, prune, nodes)
        + tree_value(rng, frac * (1.0 - u), depth - 1, prune, nodes)
}

/// One plain draw of the truncated recursion at the given depth.
pub fn sample_z(depth: u32, rng: &mut SampleRng) -> Result<WeightedSample> {
    sample_z_with(depth, DEFAULT_PRUNE_FRAC, rng)
}

/// Plain draw with an explicit prune threshold (0 disables pruning).
pub fn sample_z_with(depth: u32, prune_frac: f64, rng: &mut SampleRng) -> Result<WeightedSample> {
    check_depth(depth)?;
    let mut nodes = 0;
    let value = tree_value(rng, 1.0, depth, prune_frac, &mut nodes);
    Ok(WeightedSample {
        value,
        log_weight: 0.0,
        depth,
    })
}

fn batch_values<F>(n: usize, cfg: &SampleConfig, map: F) -> Vec<f64>
where
    F: Fn(usize, &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>,
{
    let depth = cfg.depth;
    let prune = cfg.prune_frac;
    let seed = cfg.seed;
    let one = move |i: usize| -> f64 {
        let mut rng = stream_rng(seed, i as u64);
        let mut nodes = 0;
        tree_value(&mut rng, 1.0, depth, prune, &mut nodes)
    };
    map(n, &one)
}

/// n plain values, one independent stream per sample index.
pub fn sample_batch(cfg: &SampleConfig, n: usize) -> Result<Vec<f64>> {
    check_depth(cfg.depth)?;
    Ok(batch_values(n, cfg, |n, f| map_indexed(n, f)))
}

/// Sequential batch; bit-identical to [`sample_batch`].
pub fn sample_batch_seq(cfg: &SampleConfig, n: usize) -> Result<Vec<f64>> {
    check_depth(cfg.depth)?;
    Ok(batch_values(n, cfg, |n, f| map_indexed_seq(n, f)))
}

/// Rayon-parallel batch; bit-identical to the sequential path.
#[cfg(feature = "parallel")]
pub fn sample_batch_par(cfg: &SampleConfig, n: usize) -> Result<Vec<f64>> {
    check_depth(cfg.depth)?;
    Ok(batch_values(n, cfg, |n, f| crate::par::map_indexed(n, f)))
}

/// Mean/variance summary of a sample batch with asymptotic standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub mean_std_err: f64,
    pub variance: f64,
    pub variance_std_err: f64,
}

pub fn moments(values: &[f64]) -> MomentSummary {
    let n = values.len();
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= nf;
    m4 /= nf;
    let variance = m2 * nf / (nf - 1.0);
    MomentSummary {
        n,
        mean,
        mean_std_err: (m2 / nf).sqrt(),
        variance,
        variance_std_err: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
    }
}

/// var_z (1 − (2/3)^d): variance of the depth-d truncated recursion.
pub fn truncated_variance(depth: u32) -> f64 {
    let c = SplitConstants::new();
    c.var_z * (1.0 - (2.0f64 / 3.0).powi(depth as i32))
}

fn make_estimate(
    x: f64,
    side: Side,
    successes: u64,
    n: usize,
    log_weight: f64,
    method: Method,
    seed: u64,
    params: BTreeMap<String, f64>,
) -> TailEstimate {
    let nf = n as f64;
    let f = successes as f64 / nf;
    let (log_p, log_se) = if successes == 0 {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    } else {
        let var = (f * (1.0 - f) / nf).max(0.0);
        (
            log_weight + f.ln(),
            if var > 0.0 {
                log_weight + 0.5 * var.ln()
            } else {
                f64::NEG_INFINITY
            },
        )
    };
    TailEstimate {
        x,
        side,
        p_hat: log_p.exp(),
        std_err: log_se.exp(),
        log_p_hat: log_p,
        log_std_err: log_se,
        n_samples: n,
        method,
        seed,
        params,
    }
}

/// Direct Monte Carlo estimate of P(Z ≤ −x) or P(Z ≥ x) from plain samples.
pub fn estimate_tail_plain(
    x: f64,
    side: Side,
    n: usize,
    cfg: &SampleConfig,
) -> Result<TailEstimate> {
    if n == 0 {
        return Err(Error::domain("estimate_tail_plain: n must be >= 1"));
    }
    let values = sample_batch(cfg, n)?;
    let successes = values
        .iter()
        .filter(|&&v| match side {
            Side::Left => v <= -x,
            Side::Right => v >= x,
        })
        .count() as u64;
    let mut params = BTreeMap::new();
    params.insert("depth".into(), cfg.depth as f64);
    params.insert("prune_frac".into(), cfg.prune_frac);
    Ok(make_estimate(
        x,
        side,
        successes,
        n,
        0.0,
        Method::Plain,
        cfg.seed,
        params,
    ))
}

/// Balanced-splits importance sampler configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalancedIsConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Split half-width; default x^{−1/2} (valid only when that keeps the
    /// per-generation gain positive — override for moderate x).
    pub epsilon: Option<f64>,
    /// Conditioned generations m; default ⌈x / a(ε)⌉ with a(ε) = −g(1/2+ε).
    pub generations: Option<u32>,
    /// Truncation depth of the unconditioned subtrees below generation m.
    pub residual_depth: u32,
    pub prune_frac: f64,
}

impl Default for BalancedIsConfig {
    fn default() -> Self {
        BalancedIsConfig {
            n_samples: 10_000,
            seed: 0,
            epsilon: None,
            generations: None,
            residual_depth: 12,
            prune_frac: DEFAULT_PRUNE_FRAC,
        }
    }
}

fn balanced_tree_value(
    rng: &mut SampleRng,
    frac: f64,
    gens_left: u32,
    eps: f64,
    residual_depth: u32,
    prune: f64,
) -> f64 {
    if gens_left == 0 {
        let mut nodes = 0;
        return tree_value(rng, frac, residual_depth, prune, &mut nodes);
    }
    let u = 0.5 - eps + 2.0 * eps * rng.gen::<f64>();
    frac * g_split_unchecked(u)
        + balanced_tree_value(rng, frac * u, gens_left - 1, eps, residual_depth, prune)
        + balanced_tree_value(rng, frac * (1.0 - u), gens_left - 1, eps, residual_depth, prune)
}

/// Left-tail estimate by conditioning the first m generations on ε-balanced
/// splits. Unbiased for P(value ≤ −x ∧ all first-m splits ε-balanced), a
/// lower-bound-style estimate of the left tail.
pub fn estimate_left_tail_is(x: f64, cfg: &BalancedIsConfig) -> Result<TailEstimate> {
    if !(x > 0.0) {
        return Err(Error::domain("estimate_left_tail_is: x must be positive"));
    }
    if cfg.n_samples == 0 {
        return Err(Error::domain("n_samples must be >= 1"));
    }
    check_depth(cfg.residual_depth)?;
    let eps = cfg.epsilon.unwrap_or_else(|| x.powf(-0.5));
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain(format!(
            "epsilon {eps} outside (0, 1/2); override epsilon for x <= 4"
        )));
    }
    let a = -g_split_unchecked(0.5 + eps);
    if a <= 0.0 {
        return Err(Error::domain(format!(
            "epsilon {eps} too large: per-generation gain a = −g(1/2+ε) = {:.4} is not positive",
            -a
        )));
    }
    let m = cfg.generations.unwrap_or_else(|| (x / a).ceil() as u32);
    if m == 0 {
        return Err(Error::domain("generations must be >= 1"));
    }
    if m >= 63 || (1u64 << m) > NODE_BUDGET {
        return Err(Error::ResourceLimit(format!(
            "balanced tree of {m} generations needs 2^{m} nodes > budget 2^20; \
             reduce x or override generations/epsilon"
        )));
    }

    let log_weight = ((1u64 << m) - 1) as f64 * (2.0 * eps).ln();
    let seed = cfg.seed;
    let residual_depth = cfg.residual_depth;
    let prune = cfg.prune_frac;
    let hits: Vec<bool> = map_indexed(cfg.n_samples, move |i| {
        let mut rng = stream_rng(seed, i as u64);
        let value = balanced_tree_value(&mut rng, 1.0, m, eps, residual_depth, prune);
        value <= -x
    });
    let successes = hits.iter().filter(|&&h| h).count() as u64;

    let mut params = BTreeMap::new();
    params.insert("epsilon".into(), eps);
    params.insert("generations".into(), m as f64);
    params.insert("residual_depth".into(), cfg.residual_depth as f64);
    params.insert("prune_frac".into(), cfg.prune_frac);
    Ok(make_estimate(
        x,
        Side::Left,
        successes,
        cfg.n_samples,
        log_weight,
        Method::BalancedIs,
        cfg.seed,
        params,
    ))
}

/// Unbalanced-spine importance sampler configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpineIsConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Split cap on the spine; default 1/(x ln x).
    pub delta: Option<f64>,
    /// Per-step tail gain b; default 1 − 2/ln x (positive only for x > e²).
    pub step_gain: Option<f64>,
    /// Spine length m; default ⌈x / b⌉.
    pub steps: Option<u32>,
    /// Truncation depth of the off-spine and end-of-spine subtrees.
    pub residual_depth: u32,
    pub prune_frac: f64,
}

impl Default for SpineIsConfig {
    fn default() -> Self {
        SpineIsConfig {
            n_samples: 10_000,
            seed: 0,
            delta: None,
            step_gain: None,
            steps: None,
            residual_depth: 30,
            prune_frac: DEFAULT_PRUNE_FRAC,
        }
    }
}

/// Right-tail estimate by conditioning a spine of m splits on U ≤ δ and
/// recursing on the large side. Unbiased for
/// P(value ≥ x ∧ all spine splits ≤ δ).
pub fn estimate_right_tail_is(x: f64, cfg: &SpineIsConfig) -> Result<TailEstimate> {
    if x <= std::f64::consts::E {
        return Err(Error::domain("estimate_right_tail_is: x must exceed e"));
    }
    if cfg.n_samples == 0 {
        return Err(Error::domain("n_samples must be >= 1"));
    }
    check_depth(cfg.residual_depth)?;
    let delta = cfg.delta.unwrap_or_else(|| 1.0 / (x * x.ln()));
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain(format!("delta {delta} outside (0, 1/2)")));
    }
    let m = match cfg.steps {
        Some(m) => m,
        None => {
            let b = match cfg.step_gain {
                Some(b) => b,
                None => {
                    let e2 = std::f64::consts::E * std::f64::consts::E;
                    if x <= e2 {
                        return Err(Error::domain(format!(
                            "default step gain b = 1 − 2/ln x is nonpositive for x = {x} <= e²; \
                             override step_gain or steps"
                        )));
                    }
                    1.0 - 2.0 / x.ln()
                }
            };
            if !(b > 0.0) {
                return Err(Error::domain("step_gain must be positive"));
            }
            (x / b).ceil() as u32
        }
    };
    if m == 0 {
        return Err(Error::domain("steps must be >= 1"));
    }
    if m > 100_000 {
        return Err(Error::ResourceLimit(format!("spine length {m} over cap 100000")));
    }

    let log_weight = m as f64 * delta.ln();
    let seed = cfg.seed;
    let residual_depth = cfg.residual_depth;
    let prune = cfg.prune_frac;
    let hits: Vec<bool> = map_indexed(cfg.n_samples, move |i| {
        let mut rng = stream_rng(seed, i as u64);
        let mut frac = 1.0;
        let mut total = 0.0;
        let mut nodes = 0;
        for _ in 0..m {
            let u = delta * rng.gen::<f64>();
            total += frac * g_split_unchecked(u);
            total += tree_value(&mut rng, frac * u, residual_depth, prune, &mut nodes);
            frac *= 1.0 - u;
        }
        total += tree_value(&mut rng, frac, residual_depth, prune, &mut nodes);
        total >= x
    });
    let successes = hits.iter().filter(|&&h| h).count() as u64;

    let mut params = BTreeMap::new();
    params.insert("delta".into(), delta);
    params.insert("steps".into(), m as f64);
    params.insert("residual_depth".into(), cfg.residual_depth as f64);
    params.insert("prune_frac".into(), cfg.prune_frac);
    if let Some(b) = cfg.step_gain {
        params.insert("step_gain".into(), b);
    }
    Ok(make_estimate(
        x,
        Side::Right,
        successes,
        cfg.n_samples,
        log_weight,
        Method::SpineIs,
        cfg.seed,
        params,
    ))
}

/// OLS fit of the tail-shape transform: left regresses ln(−ln p̂) on x,
/// right regresses −ln p̂ on x ln x.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Estimates used after filtering degenerate p̂ ∈ {0, 1}.
    pub used: usize,
    pub filtered: usize,
}

pub fn slope_diagnostic(estimates: &[TailEstimate], side: Side) -> Result<SlopeFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut filtered = 0usize;
    for e in estimates {
        // p in (0,1) <=> log p finite and negative.
        if !(e.log_p_hat.is_finite() && e.log_p_hat < 0.0) {
            filtered += 1;
            continue;
        }
        match side {
            Side::Left => {
                xs.push(e.x);
                ys.push((-e.log_p_hat).ln());
            }
            Side::Right => {
                xs.push(e.x * e.x.ln());
                ys.push(-e.log_p_hat);
            }
        }
    }
    if xs.len() < 3 {
        return Err(Error::domain(format!(
            "slope_diagnostic needs >= 3 usable estimates, got {} ({} filtered)",
            xs.len(),
            filtered
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::domain("slope_diagnostic: degenerate abscissae"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r2,
        used: xs.len(),
        filtered,
    })
}
