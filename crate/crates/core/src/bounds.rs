//! Tail bounds and reference asymptotics for the limit law.
//!
//! Upper bounds: Chernoff optimization over a solved mgf table, the two
//! closed forms obtained by optimizing the lemma-certified mgf envelopes
//! (t = exp(κ⁻¹(x−a)−1) on the left, t = ln x on the right), and the earlier
//! published bounds exp(−x²/5) / exp(−x ln x + (1+ln2)x). Reference curves:
//! the non-rigorous left/right asymptotics with their constants exposed as
//! parameters, and the two-sided envelopes of the tail theorem with explicit
//! stand-ins for the O(1)/O(x) offsets.
//!
//! Extreme-x bounds underflow f64, so every evaluator reports the log of the
//! bound alongside the (possibly underflowed) linear value. All bounds clip
//! at 1.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::mgf::MgfTable;
use crate::split::SplitConstants;
use crate::Side;

/// Chernoff bound from a table scan plus golden-section refinement.
#[derive(Debug, Clone, Serialize)]
pub struct ChernoffBound {
    pub bound: f64,
    pub log_bound: f64,
    /// Minimizing t ≥ 0.
    pub t_opt: f64,
    /// Set when the minimizer sits at the end of the grid; the bound is still
    /// valid but a larger t_max would improve it.
    pub at_boundary: bool,
}

/// Constants of the non-rigorous left-tail reference curve c₁ exp(−c₂ e^{γx}).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KsParams {
    pub c1: f64,
    pub c2: f64,
}

/// P(Z ≤ −x) ≤ min(1, e^{−tx} ψ(−t)) or P(Z ≥ x) ≤ min(1, e^{−tx} ψ(t)),
/// minimized over t ≥ 0 within the table grid.
pub fn chernoff_from_table(x: f64, side: Side, table: &MgfTable) -> Result<ChernoffBound> {
    let interp = table.interpolator()?;
    chernoff_with_interp(x, side, table, &interp)
}

fn chernoff_objective(t: f64, x: f64, side: Side, interp: &MonotoneCubic) -> f64 {
    let arg = match side {
        Side::Left => -t,
        Side::Right => t,
    };
    -t * x + interp.eval(arg)
}

fn chernoff_with_interp(
    x: f64,
    side: Side,
    table: &MgfTable,
    interp: &MonotoneCubic,
) -> Result<ChernoffBound> {
    let center = table.center();
    let n_pos = table.t_grid.len() - center - 1;
    if n_pos == 0 {
        return Err(Error::domain("chernoff_from_table: empty positive grid"));
    }

    let mut best_k = 0usize;
    let mut best = 0.0f64; // objective at t = 0 is log psi(0) = 0
    for k in 0..=n_pos {
        let t = table.t_grid[center + k];
        let f = chernoff_objective(t, x, side, interp);
        if f < best {
            best = f;
            best_k = k;
        }
    }

    // Golden-section refinement between the neighbors of the grid minimizer.
    let lo = table.t_grid[center + best_k.saturating_sub(1)];
    let hi = table.t_grid[center + (best_k + 1).min(n_pos)];
    let inv_phi = 0.618_033_988_749_894_8;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = chernoff_objective(c, x, side, interp);
    let mut fd = chernoff_objective(d, x, side, interp);
    for _ in 0..80 {
        if (b - a).abs() < 1e-12 * (1.0 + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = chernoff_objective(c, x, side, interp);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = chernoff_objective(d, x, side, interp);
        }
    }
    let t_refined = 0.5 * (a + b);
    let f_refined = chernoff_objective(t_refined, x, side, interp);
    let (t_opt, log_bound) = if f_refined < best {
        (t_refined, f_refined)
    } else {
        (table.t_grid[center + best_k], best)
    };
    let log_bound = log_bound.min(0.0);
    Ok(ChernoffBound {
        bound: log_bound.exp(),
        log_bound,
        t_opt,
        at_boundary: best_k == n_pos,
    })
}

/// log of the optimized left bound: −κ e^{κ⁻¹(x−a)−1} + 1, clipped at 0.
pub fn closed_form_left_log(x: f64, a: f64) -> Result<f64> {
    if a < 0.0 {
        return Err(Error::domain("closed_form_left: a must be >= 0"));
    }
    let c = SplitConstants::new();
    let t = (c.gamma * (x - a) - 1.0).exp();
    Ok((-c.kappa * t + 1.0).min(0.0))
}

/// Optimized left-tail bound exp(−κ e^{κ⁻¹(x−a)−1} + 1), clipped at 1.
pub fn closed_form_left(x: f64, a: f64) -> Result<f64> {
    Ok(closed_form_left_log(x, a)?.exp())
}

/// log of the right bound at t = ln x: −x ln x + x + a ln x, clipped at 0.
pub fn closed_form_right_log(x: f64, a: f64) -> Result<f64> {
    if a < 0.0 {
        return Err(Error::domain("closed_form_right: a must be >= 0"));
    }
    if x < 1.0 {
        return Err(Error::domain(format!(
            "closed_form_right: x = {x} < 1 makes t = ln x negative"
        )));
    }
    let lx = x.ln();
    Ok((-x * lx + x + a * lx).min(0.0))
}

/// Right-tail bound exp(−x ln x + x + a ln x), clipped at 1.
pub fn closed_form_right(x: f64, a: f64) -> Result<f64> {
    Ok(closed_form_right_log(x, a)?.exp())
}

/// Value of a bound evaluation, with its log and a validity flag.
#[derive(Debug, Clone, Serialize)]
pub struct BoundValue {
    pub value: f64,
    pub log_value: f64,
    /// False when x lies outside the bound's published validity domain.
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_opt: Option<f64>,
}

impl BoundValue {
    fn from_log(log_value: f64, valid: bool) -> Self {
        let log_value = log_value.min(0.0);
        BoundValue {
            value: log_value.exp(),
            log_value,
            valid,
            t_opt: None,
        }
    }
}

/// Published bounds: left exp(−x²/5) for x ≥ 0; right exp(−x ln x + (1+ln2)x)
/// for x ≥ 303. Out-of-validity x still evaluates, flagged.
pub fn fj_bound(x: f64, side: Side) -> BoundValue {
    let c = SplitConstants::new();
    match side {
        Side::Left => BoundValue::from_log(-x * x / 5.0, x >= 0.0),
        Side::Right => {
            if x <= 0.0 {
                return BoundValue::from_log(0.0, false);
            }
            BoundValue::from_log(-x * x.ln() + (1.0 + c.ln2) * x, x >= 303.0)
        }
    }
}

/// Non-rigorous reference curves with their o(·) terms dropped:
/// left c₁ exp(−c₂ e^{γx}), right exp(−x ln x − x ln ln x + (1+ln2)x).
pub fn ks_reference(x: f64, side: Side, params: Option<KsParams>) -> Result<f64> {
    let c = SplitConstants::new();
    match side {
        Side::Left => {
            let p = params.ok_or_else(|| {
                Error::config("ks_reference left needs c1 and c2 parameters")
            })?;
            if !(p.c1 > 0.0 && p.c2 > 0.0) {
                return Err(Error::config("ks_reference: c1 and c2 must be positive"));
            }
            Ok((p.c1.ln() - p.c2 * (c.gamma * x).exp()).min(0.0).exp())
        }
        Side::Right => {
            if x <= std::f64::consts::E {
                return Err(Error::domain(format!(
                    "ks_reference right needs x > e, got {x}"
                )));
            }
            let lx = x.ln();
            Ok((-x * lx - x * lx.ln() + (1.0 + c.ln2) * x).min(0.0).exp())
        }
    }
}

/// Two-sided tail envelopes with explicit stand-ins for the implicit offsets:
/// left (exp(−e^{γx+lnlnx+C_lo}), exp(−e^{γx+C_hi})); right
/// (exp(−x lnx − x lnlnx + C_lo·x), exp(−x lnx + C_hi·x)). Requires x > e.
pub fn theorem_envelope(x: f64, side: Side, offsets: (f64, f64)) -> Result<(f64, f64)> {
    if x <= std::f64::consts::E {
        return Err(Error::domain(format!(
            "theorem_envelope needs x > e, got {x}"
        )));
    }
    let (c_lo, c_hi) = offsets;
    let c = SplitConstants::new();
    let lx = x.ln();
    let llx = lx.ln();
    let (lower_log, upper_log) = match side {
        Side::Left => (
            -((c.gamma * x + llx + c_lo).exp()),
            -((c.gamma * x + c_hi).exp()),
        ),
        Side::Right => (
            -x * lx - x * llx + c_lo * x,
            -x * lx + c_hi * x,
        ),
    };
    Ok((lower_log.min(0.0).exp(), upper_log.min(0.0).exp()))
}

/// A named bound with validity domain and parameters, evaluable over an
/// x-grid; the registry behind the CLI's curve export.
#[derive(Debug, Clone)]
pub struct TailBound {
    pub name: String,
    pub side: Side,
    /// Inclusive-exclusive validity interval in x.
    pub validity: (f64, f64),
    pub params: BTreeMap<String, f64>,
    kind: BoundKind,
}

#[derive(Debug, Clone)]
enum BoundKind {
    ClosedForm { a: f64 },
    Fj,
    KsLeft { params: KsParams },
    KsRight,
    EnvelopeLower { offset: f64 },
    EnvelopeUpper { offset: f64 },
    Chernoff { table: std::sync::Arc<MgfTable>, interp: std::sync::Arc<MonotoneCubic> },
}

impl TailBound {
    pub fn closed_form(side: Side, a: f64) -> Result<Self> {
        if a < 0.0 {
            return Err(Error::domain("closed-form bound needs a >= 0"));
        }
        let mut params = BTreeMap::new();
        params.insert("a".to_string(), a);
        Ok(TailBound {
            name: format!("closed_form_{side}"),
            side,
            validity: match side {
                Side::Left => (0.0, f64::INFINITY),
                Side::Right => (1.0, f64::INFINITY),
            },
            params,
            kind: BoundKind::ClosedForm { a },
        })
    }

    pub fn fj(side: Side) -> Self {
        TailBound {
            name: format!("fj_{side}"),
            side,
            validity: match side {
                Side::Left => (0.0, f64::INFINITY),
                Side::Right => (303.0, f64::INFINITY),
            },
            params: BTreeMap::new(),
            kind: BoundKind::Fj,
        }
    }

    pub fn ks(side: Side, params: Option<KsParams>) -> Result<Self> {
        match side {
            Side::Left => {
                let p = params.ok_or_else(|| {
                    Error::config("ks reference curve (left) needs c1 and c2")
                })?;
                let mut map = BTreeMap::new();
                map.insert("c1".to_string(), p.c1);
                map.insert("c2".to_string(), p.c2);
                Ok(TailBound {
                    name: "ks_left".to_string(),
                    side,
                    validity: (0.0, f64::INFINITY),
                    params: map,
                    kind: BoundKind::KsLeft { params: p },
                })
            }
            Side::Right => Ok(TailBound {
                name: "ks_right".to_string(),
                side,
                validity: (std::f64::consts::E, f64::INFINITY),
                params: BTreeMap::new(),
                kind: BoundKind::KsRight,
            }),
        }
    }

    pub fn envelope_lower(side: Side, offset: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("c_lo".to_string(), offset);
        TailBound {
            name: format!("envelope_lower_{side}"),
            side,
            validity: (std::f64::consts::E, f64::INFINITY),
            params,
            kind: BoundKind::EnvelopeLower { offset },
        }
    }

    pub fn envelope_upper(side: Side, offset: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("c_hi".to_string(), offset);
        TailBound {
            name: format!("envelope_upper_{side}"),
            side,
            validity: (std::f64::consts::E, f64::INFINITY),
            params,
            kind: BoundKind::EnvelopeUpper { offset },
        }
    }

    pub fn chernoff(side: Side, table: &MgfTable) -> Result<Self> {
        let interp = table.interpolator()?;
        let mut params = BTreeMap::new();
        params.insert("t_max".to_string(), table.config.t_max);
        Ok(TailBound {
            name: format!("chernoff_{side}"),
            side,
            validity: (0.0, f64::INFINITY),
            params,
            kind: BoundKind::Chernoff {
                table: std::sync::Arc::new(table.clone()),
                interp: std::sync::Arc::new(interp),
            },
        })
    }

    pub fn eval(&self, x: f64) -> BoundValue {
        let in_domain = x >= self.validity.0 && x < self.validity.1;
        match &self.kind {
            BoundKind::ClosedForm { a } => {
                let log = match self.side {
                    Side::Left => closed_form_left_log(x, *a).unwrap_or(0.0),
                    Side::Right => {
                        if x < 1.0 {
                            0.0
                        } else {
                            closed_form_right_log(x, *a).unwrap_or(0.0)
                        }
                    }
                };
                BoundValue::from_log(log, in_domain)
            }
            BoundKind::Fj => {
                let mut bv = fj_bound(x, self.side);
                bv.valid = in_domain;
                bv
            }
            BoundKind::KsLeft { params } => {
                let c = SplitConstants::new();
                let log = params.c1.ln() - params.c2 * (c.gamma * x).exp();
                BoundValue::from_log(log, in_domain)
            }
            BoundKind::KsRight => {
                if x <= std::f64::consts::E {
                    return BoundValue::from_log(0.0, false);
                }
                let c = SplitConstants::new();
                let lx = x.ln();
                BoundValue::from_log(-x * lx - x * lx.ln() + (1.0 + c.ln2) * x, in_domain)
            }
            BoundKind::EnvelopeLower { offset } | BoundKind::EnvelopeUpper { offset } => {
                if x <= std::f64::consts::E {
                    return BoundValue::from_log(0.0, false);
                }
                let c = SplitConstants::new();
                let lx = x.ln();
                let log = match (&self.kind, self.side) {
                    (BoundKind::EnvelopeLower { .. }, Side::Left) => {
                        -((c.gamma * x + lx.ln() + offset).exp())
                    }
                    (BoundKind::EnvelopeUpper { .. }, Side::Left) => {
                        -((c.gamma * x + offset).exp())
                    }
                    (BoundKind::EnvelopeLower { .. }, Side::Right) => {
                        -x * lx - x * lx.ln() + offset * x
                    }
                    (BoundKind::EnvelopeUpper { .. }, Side::Right) => -x * lx + offset * x,
                    (_, _) => unreachable!(),
                };
                BoundValue::from_log(log, in_domain)
            }
            BoundKind::Chernoff { table, interp } => {
                match chernoff_with_interp(x, self.side, table, interp) {
                    Ok(cb) => BoundValue {
                        value: cb.bound,
                        log_value: cb.log_bound,
                        valid: in_domain && !cb.at_boundary,
                        t_opt: Some(cb.t_opt),
                    },
                    Err(_) => BoundValue::from_log(0.0, false),
                }
            }
        }
    }
}
