//! Toolkit for the limiting Quicksort distribution.
//!
//! The number of comparisons X_n of Quicksort on n randomly ordered keys,
//! centered and scaled as Z_n = (X_n − E X_n)/n, converges to a limit law Z.
//! This crate makes that law computationally concrete:
//!
//! - [`exact`]: exact finite-n pmfs of X_n by the distributional recurrence,
//!   with a permutation brute-force oracle and the closed-form mean.
//! - [`mgf`]: the moment generating function ψ(t) = E e^{tZ} on a grid, by
//!   solving its integral fixed-point equation in log domain.
//! - [`bounds`]: Chernoff bounds from the ψ table, closed-form tail bounds,
//!   prior published bounds, and reference asymptotics.
//! - [`sampler`]: a truncated-recursion sampler of Z plus two importance
//!   samplers (balanced-splits and unbalanced-spine conditioning) for
//!   rare-event tail estimation.
//! - [`verify`]: the cross-module consistency suite used by the acceptance
//!   tests and the CLI `verify` subcommand.
//!
//! With the default `parallel` feature, batch sampling and the mgf grid update
//! fan out over rayon; results are bit-identical to the sequential fallback.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod harmonic;
pub mod interp;
pub mod mgf;
mod par;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod split;
pub mod verify;

pub use error::{Error, Result};
pub use split::SplitConstants;

/// Which tail of the distribution an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// P(Z ≤ −x).
    Left,
    /// P(Z ≥ x).
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Left => write!(f, "left"),
            Side::Right => write!(f, "right"),
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(Error::config(format!("unknown side {other:?} (use left|right)"))),
        }
    }
}
