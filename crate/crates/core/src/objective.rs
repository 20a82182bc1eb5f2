//! Adversarial squared loss in primal (inner supremum) and dual (closed form)
//! form.
//!
//! For the classic variant the perturbation ball is `‖Δ‖_∞ ≤ δ` and the dual
//! per-sample term is `(|x_iᵀβ − y_i| + δ‖β‖₁)²`. For the group variant the
//! ball is `max_l ω_l‖Δ^l‖₂ ≤ δ` and the penalty becomes `Σ_l ‖β^l‖₂ / ω_l`.
//! The dual is the canonical objective; the primal exists as a cross-check.

use nalgebra::{DVector, DVectorView};

use crate::data::{Dataset, GroupPartition};
use crate::error::{check_len, Error, Result};
use crate::norms::group_l21_inverse;

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Classic,
    Group(GroupPartition),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Classic => "classic",
            Variant::Group(_) => "group",
        }
    }

    pub fn partition(&self) -> Option<&GroupPartition> {
        match self {
            Variant::Classic => None,
            Variant::Group(g) => Some(g),
        }
    }

    /// `‖β‖₁` or `Σ_l ‖β^l‖₂ / ω_l`.
    pub fn penalty(&self, beta: &DVector<f64>) -> f64 {
        match self {
            Variant::Classic => beta.lp_norm(1),
            Variant::Group(g) => group_l21_inverse(beta, g),
        }
    }

    /// Element of `∂penalty(β)`, taking the zero vector on zero blocks.
    pub fn penalty_direction(&self, beta: &DVector<f64>) -> DVector<f64> {
        match self {
            Variant::Classic => beta.map(sign0),
            Variant::Group(g) => {
                let mut d = DVector::zeros(beta.len());
                for (l, idx) in g.groups().iter().enumerate() {
                    let nb = g.block_norm(beta, l);
                    if nb > 0.0 {
                        let w = g.weights()[l];
                        for &j in idx {
                            d[j] = beta[j] / (w * nb);
                        }
                    }
                }
                d
            }
        }
    }
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sign with the tie rule `sign(0) = +1`.
fn sign_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// An adversarial regression objective over a fixed dataset.
#[derive(Debug, Clone)]
pub struct AdvObjective<'a> {
    pub data: &'a Dataset,
    pub delta: f64,
    pub variant: Variant,
}

/// A subgradient of the dual objective together with the sign choices that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient {
    pub g: DVector<f64>,
    /// `z_i ∈ sign(x_iᵀβ − y_i)`, 0 where the residual vanishes.
    pub residual_signs: DVector<f64>,
    /// `w ∈ ∂‖β‖₁` (classic) or `t` with `t^l = β^l / (ω_l‖β^l‖₂)` (group),
    /// zero on zero blocks.
    pub coef_dirs: DVector<f64>,
}

/// The three terms of the expanded classic dual objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationView {
    /// `(1/n) Σ r_i²`
    pub mse: f64,
    /// `δ‖β‖₁ · (2/n) Σ |r_i|`
    pub cross: f64,
    /// `δ²‖β‖₁²`
    pub square: f64,
}

impl RegularizationView {
    pub fn total(&self) -> f64 {
        self.mse + self.cross + self.square
    }
}

impl<'a> AdvObjective<'a> {
    pub fn new(data: &'a Dataset, delta: f64, variant: Variant) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::invalid(format!("delta must be finite and >= 0, got {delta}")));
        }
        if let Variant::Group(g) = &variant {
            check_len("partition dimension", data.p(), g.p())?;
        }
        Ok(Self {
            data,
            delta,
            variant,
        })
    }

    pub fn classic(data: &'a Dataset, delta: f64) -> Result<Self> {
        Self::new(data, delta, Variant::Classic)
    }

    pub fn group(data: &'a Dataset, delta: f64, partition: GroupPartition) -> Result<Self> {
        Self::new(data, delta, Variant::Group(partition))
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.data, delta, self.variant.clone())
    }

    fn check_beta(&self, beta: &DVector<f64>) -> Result<()> {
        check_len("coefficient vector", self.p(), beta.len())
    }

    pub fn penalty(&self, beta: &DVector<f64>) -> f64 {
        self.variant.penalty(beta)
    }

    /// Dual objective without dimension checks.
    pub(crate) fn value(&self, beta: &DVector<f64>) -> f64 {
        let r = self.data.residuals(beta);
        self.value_from_residuals(&r, self.penalty(beta))
    }

    pub(crate) fn value_from_residuals(&self, r: &DVector<f64>, penalty: f64) -> f64 {
        let shift = self.delta * penalty;
        r.iter().map(|ri| (ri.abs() + shift).powi(2)).sum::<f64>() / self.n() as f64
    }

    /// `(1/n) Σ_i (|x_iᵀβ − y_i| + δ · penalty(β))²`.
    pub fn dual_adv_loss(&self, beta: &DVector<f64>) -> Result<f64> {
        self.check_beta(beta)?;
        Ok(self.value(beta))
    }

    /// Maximizer of `((x + Δ)ᵀβ − y)²` over the perturbation ball.
    pub fn worst_case_perturbation(
        &self,
        x: DVectorView<'_, f64>,
        y: f64,
        beta: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        self.check_beta(beta)?;
        check_len("sample", self.p(), x.len())?;
        let s = sign_plus(x.dot(beta) - y);
        let delta = self.delta;
        Ok(match &self.variant {
            Variant::Classic => beta.map(|b| delta * s * sign0(b)),
            Variant::Group(_) => self.variant.penalty_direction(beta) * (delta * s),
        })
    }

    /// `(1/n) Σ_i max_Δ ((x_i + Δ)ᵀβ − y_i)²`, evaluated at the closed-form
    /// worst-case perturbation of each sample.
    pub fn primal_adv_loss(&self, beta: &DVector<f64>) -> Result<f64> {
        self.check_beta(beta)?;
        let mut total = 0.0;
        for i in 0..self.n() {
            let xi = self.data.x.row(i).transpose();
            let d = self.worst_case_perturbation(xi.as_view(), self.data.y[i], beta)?;
            total += ((xi + d).dot(beta) - self.data.y[i]).powi(2);
        }
        Ok(total / self.n() as f64)
    }

    /// Subgradient `(2/n) Σ_i c_i (z_i x_i + δ d)` with `c_i = |r_i| + δ·penalty`
    /// and `d` the penalty direction.
    pub fn subgradient(&self, beta: &DVector<f64>) -> Result<Subgradient> {
        self.check_beta(beta)?;
        let r = self.data.residuals(beta);
        let shift = self.delta * self.penalty(beta);
        let z = r.map(sign0);
        let c = r.map(|ri| ri.abs() + shift);
        let dirs = self.variant.penalty_direction(beta);
        let n = self.n() as f64;
        let weighted = c.component_mul(&z);
        let g = (self.data.x.tr_mul(&weighted) + &dirs * (self.delta * c.sum())) * (2.0 / n);
        Ok(Subgradient {
            g,
            residual_signs: z,
            coef_dirs: dirs,
        })
    }

    pub fn regularization_view(&self, beta: &DVector<f64>) -> Result<RegularizationView> {
        if let Variant::Group(_) = self.variant {
            return Err(Error::UnsupportedVariant("group"));
        }
        self.check_beta(beta)?;
        let r = self.data.residuals(beta);
        let n = self.n() as f64;
        let l1 = beta.lp_norm(1);
        Ok(RegularizationView {
            mse: r.norm_squared() / n,
            cross: self.delta * l1 * 2.0 * r.lp_norm(1) / n,
            square: (self.delta * l1).powi(2),
        })
    }
}
