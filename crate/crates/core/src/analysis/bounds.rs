//! Prediction-error upper bounds for the classic and group estimators.
//!
//! Each bound is reported in one of three forms: the deterministic form
//! driven by δ, the high-probability form with the tuning rule substituted,
//! and the simplified form with `R = 2√41‖β*‖₂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    Theorem,
    CorollaryHighProb,
    CorollarySimplified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicBoundInputs {
    pub s: usize,
    pub p: usize,
    pub n: usize,
    pub delta: f64,
    /// Restricted eigenvalue constant; `None` when not available.
    pub gamma: Option<f64>,
    pub eps_l1: f64,
    pub beta_star_l2: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupBoundInputs {
    /// Number of support groups.
    pub g: usize,
    /// Number of coordinates in the support groups.
    pub support_size: usize,
    pub num_groups: usize,
    pub n: usize,
    pub delta: f64,
    /// Weights of the support groups.
    pub support_weights: Vec<f64>,
    pub kappa: Option<f64>,
    pub eps_l1: f64,
    pub beta_star_l2: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum BoundInputs {
    Classic(ClassicBoundInputs),
    Group(GroupBoundInputs),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub form: BoundForm,
    /// `None` when the bound is undefined (zero or missing eigenvalue constant).
    pub bound: Option<f64>,
    pub inputs: BoundInputs,
    /// `2√41‖β*‖₂`, simplified form only.
    pub r: Option<f64>,
    /// `σ < γR/6` (or `κR/6`), simplified form only, when σ and the constant are known.
    pub sigma_condition: Option<bool>,
    /// `(1/(2n))‖X(β̂ − β*)‖₂²`
    pub empirical: Option<f64>,
    pub dominated: Option<bool>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn with_empirical(mut self, empirical: f64) -> Self {
        self.empirical = Some(empirical);
        self.dominated = self.bound.map(|b| empirical <= b);
        self
    }
}

/// `max{9/c² (‖ε‖₁/n)², 164‖β*‖₂²}`; `None` when `c` is zero or unknown.
fn max_term(constant: Option<f64>, eps_l1: f64, n: usize, beta_l2: f64, notes: &mut Vec<String>) -> Option<f64> {
    let c = match constant {
        Some(c) if c > 0.0 => c,
        Some(_) => {
            notes.push("eigenvalue constant is zero: bound undefined".into());
            return None;
        }
        None => {
            notes.push("eigenvalue constant not supplied: bound undefined".into());
            return None;
        }
    };
    let noise = eps_l1 / n as f64;
    Some((9.0 / (c * c) * noise * noise).max(164.0 * beta_l2 * beta_l2))
}

fn radius(beta_l2: f64) -> f64 {
    2.0 * 41f64.sqrt() * beta_l2
}

fn check_common(n: usize, delta: f64, eps_l1: f64, beta_l2: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    for (name, v) in [("delta", delta), ("eps_l1", eps_l1), ("beta_star_l2", beta_l2)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    Ok(())
}

pub fn bound_classic(inputs: &ClassicBoundInputs, form: BoundForm) -> Result<BoundReport> {
    let i = inputs;
    check_common(i.n, i.delta, i.eps_l1, i.beta_star_l2)?;
    if i.p < 2 {
        return Err(Error::invalid("the classic bounds need p ≥ 2"));
    }
    let mut notes = Vec::new();
    let rate = 192.0 * i.s as f64 * (i.p as f64).ln() / i.n as f64;
    let (bound, r, sigma_condition) = match form {
        BoundForm::Theorem => {
            if i.delta == 0.0 {
                notes.push("δ = 0 satisfies the oracle condition only when Xᵀε = 0".into());
            }
            let b = max_term(i.gamma, i.eps_l1, i.n, i.beta_star_l2, &mut notes)
                .map(|m| 3.0 * i.delta * i.delta * i.s as f64 * m);
            (b, None, None)
        }
        BoundForm::CorollaryHighProb => {
            let b = max_term(i.gamma, i.eps_l1, i.n, i.beta_star_l2, &mut notes).map(|m| rate * m);
            (b, None, None)
        }
        BoundForm::CorollarySimplified => {
            let r = radius(i.beta_star_l2);
            let cond = match (i.sigma, i.gamma) {
                (Some(s), Some(g)) => Some(s < g * r / 6.0),
                _ => None,
            };
            if cond == Some(false) {
                notes.push("noise level violates σ < γR/6".into());
            }
            (Some(rate * r * r), Some(r), cond)
        }
    };
    Ok(BoundReport {
        form,
        bound,
        inputs: BoundInputs::Classic(i.clone()),
        r,
        sigma_condition,
        empirical: None,
        dominated: None,
        notes,
    })
}

pub fn bound_group(inputs: &GroupBoundInputs, form: BoundForm) -> Result<BoundReport> {
    let i = inputs;
    check_common(i.n, i.delta, i.eps_l1, i.beta_star_l2)?;
    if i.num_groups < 2 {
        return Err(Error::invalid("the group bounds need at least 2 groups"));
    }
    if i.support_weights.len() != i.g {
        return Err(Error::DimensionMismatch {
            what: "support weights".into(),
            expected: i.g,
            got: i.support_weights.len(),
        });
    }
    if i.support_weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::invalid("group weights must be positive"));
    }
    let mut notes = Vec::new();
    let rate = 432.0 * (i.support_size as f64 + i.g as f64 * (i.num_groups as f64).ln()) / i.n as f64;
    let (bound, r, sigma_condition) = match form {
        BoundForm::Theorem => {
            let inv_sq: f64 = i.support_weights.iter().map(|w| 1.0 / (w * w)).sum();
            let b = max_term(i.kappa, i.eps_l1, i.n, i.beta_star_l2, &mut notes)
                .map(|m| 3.0 * i.delta * i.delta * inv_sq * m);
            (b, None, None)
        }
        BoundForm::CorollaryHighProb => {
            let b = max_term(i.kappa, i.eps_l1, i.n, i.beta_star_l2, &mut notes).map(|m| rate * m);
            (b, None, None)
        }
        BoundForm::CorollarySimplified => {
            let r = radius(i.beta_star_l2);
            let cond = match (i.sigma, i.kappa) {
                (Some(s), Some(k)) => Some(s < k * r / 6.0),
                _ => None,
            };
            if cond == Some(false) {
                notes.push("noise level violates σ < κR/6".into());
            }
            (Some(rate * r * r), Some(r), cond)
        }
    };
    Ok(BoundReport {
        form,
        bound,
        inputs: BoundInputs::Group(i.clone()),
        r,
        sigma_condition,
        empirical: None,
        dominated: None,
        notes,
    })
}
