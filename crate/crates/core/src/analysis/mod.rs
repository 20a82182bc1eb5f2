//! Error diagnostics: empirical prediction error, restricted-eigenvalue
//! estimates, theoretical error bounds and the norm-shrinkage checks.

mod bounds;
mod re;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use bounds::{
    bound_classic, bound_group, BoundForm, BoundReport, ClassicBoundInputs, GroupBoundInputs,
};
pub use re::{gre_constant, re_constant, ReEstimate, ReKind, ReMode, ReOptions};

use crate::data::{Dataset, GroupPartition};
use crate::error::{check_len, Result};
use crate::norms::group_l21_inverse;
use crate::objective::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionError {
    /// `(1/(2n))‖X(β̂ − β*)‖₂²`
    pub half_mean: f64,
    /// `(1/n)‖X(β̂ − β*)‖₂²`
    pub mean: f64,
}

pub fn prediction_error(data: &Dataset, beta_hat: &DVector<f64>, beta_star: &DVector<f64>) -> Result<PredictionError> {
    check_len("beta_hat", data.p(), beta_hat.len())?;
    check_len("beta_star", data.p(), beta_star.len())?;
    let mean = (&data.x * (beta_hat - beta_star)).norm_squared() / data.n() as f64;
    Ok(PredictionError {
        half_mean: mean / 2.0,
        mean,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageReport {
    /// `‖β̂‖₁` or `Σ_l ‖β̂^l‖₂/ω_l`.
    pub estimate_norm: f64,
    /// The same norm of `β*`.
    pub truth_norm: f64,
    /// `estimate_norm / truth_norm`; `None` when both vanish.
    pub ratio: Option<f64>,
    /// `estimate_norm ≤ 9 · truth_norm`.
    pub holds: bool,
    pub degenerate: bool,
}

pub const SHRINKAGE_FACTOR: f64 = 9.0;

pub fn shrinkage_check(beta_hat: &DVector<f64>, beta_star: &DVector<f64>, variant: &Variant) -> Result<ShrinkageReport> {
    check_len("beta_star", beta_hat.len(), beta_star.len())?;
    let (est, truth) = match variant {
        Variant::Classic => (beta_hat.lp_norm(1), beta_star.lp_norm(1)),
        Variant::Group(g) => {
            check_len("partition dimension", beta_hat.len(), g.p())?;
            (group_l21_inverse(beta_hat, g), group_l21_inverse(beta_star, g))
        }
    };
    let degenerate = est == 0.0 && truth == 0.0;
    let ratio = if degenerate {
        None
    } else if truth == 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(est / truth)
    };
    Ok(ShrinkageReport {
        estimate_norm: est,
        truth_norm: truth,
        ratio,
        holds: est <= SHRINKAGE_FACTOR * truth,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupGramCheck {
    /// Largest entry of `|X_{G_l}ᵀX_{G_l}/n − I|` over all groups.
    pub max_deviation: f64,
    pub holds: bool,
}

/// Whether every within-group Gram matrix `X_{G_l}ᵀX_{G_l}/n` is the identity
/// to within `tol`, the design hypothesis of the group corollary bounds.
pub fn check_group_gram_identity(x: &DMatrix<f64>, partition: &GroupPartition, tol: f64) -> Result<GroupGramCheck> {
    check_len("partition dimension", x.ncols(), partition.p())?;
    let n = x.nrows() as f64;
    let mut worst: f64 = 0.0;
    for idx in partition.groups() {
        let xg = x.select_columns(idx);
        let gram = xg.tr_mul(&xg) / n;
        for a in 0..idx.len() {
            for b in 0..idx.len() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[(a, b)] - target).abs());
            }
        }
    }
    Ok(GroupGramCheck {
        max_deviation: worst,
        holds: worst <= tol,
    })
}
