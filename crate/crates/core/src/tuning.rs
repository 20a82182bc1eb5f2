//! Closed-form perturbation magnitudes and the oracle admissibility checks.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroundTruth, GroupPartition};
use crate::error::{check_len, Error, Result};
use crate::objective::Variant;

/// `1 / (√(2/π) − 1/10)`, shared by both rules.
fn base_constant() -> f64 {
    1.0 / ((2.0 / std::f64::consts::PI).sqrt() - 0.1)
}

/// Multiplier of `√(ln p / n)` in the classic rule.
pub fn classic_constant() -> f64 {
    4.0 * base_constant()
}

/// Multiplier of `√((3 p_l + 9 ln L) / n)` in the group rule.
pub fn group_constant() -> f64 {
    2.0 * base_constant()
}

/// `δ = 4/(√(2/π) − 0.1) · √(ln p / n)`.
pub fn delta_classic(n: usize, p: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if p < 2 {
        return Err(Error::invalid(format!("the classic rule needs p ≥ 2, got {p}")));
    }
    Ok(classic_constant() * ((p as f64).ln() / n as f64).sqrt())
}

/// Per-group value of `δ/ω_l`.
pub fn group_rule_values(n: usize, partition: &GroupPartition) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let num = partition.num_groups();
    if num < 2 {
        return Err(Error::invalid(format!("the group rule needs at least 2 groups, got {num}")));
    }
    let log_l = (num as f64).ln();
    Ok(partition
        .sizes()
        .iter()
        .map(|&pl| group_constant() * ((3.0 * pl as f64 + 9.0 * log_l) / n as f64).sqrt())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTuning {
    pub delta: f64,
    pub weights: Vec<f64>,
}

/// `δ` equal to the first group's rule value and `ω_l = δ / rule_l`, so every
/// ratio `δ/ω_l` equals its rule value and `ω_1 = 1`.
pub fn delta_group(n: usize, partition: &GroupPartition) -> Result<GroupTuning> {
    let rules = group_rule_values(n, partition)?;
    let delta = rules[0];
    let weights = rules.iter().map(|r| delta / r).collect();
    Ok(GroupTuning { delta, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Pass,
    Fail,
    /// `ε = 0`: the ratio is 0/0.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCondition {
    pub status: ConditionStatus,
    /// Threshold minus observed ratio, one entry per constraint (one for the
    /// classic variant, one per group otherwise). Empty when degenerate.
    pub margins: Vec<f64>,
    pub min_margin: Option<f64>,
}

impl DeltaCondition {
    pub fn passed(&self) -> bool {
        self.status == ConditionStatus::Pass
    }
}

/// Classic: `2‖Xᵀε‖_∞ / ‖ε‖₁ ≤ δ`. Group: `2‖(Xᵀε)^l‖₂ / ‖ε‖₁ ≤ δ/ω_l` for every l.
pub fn check_delta_condition(
    truth: &GroundTruth,
    data: &Dataset,
    delta: f64,
    variant: &Variant,
) -> Result<DeltaCondition> {
    let eps = truth.epsilon()?;
    check_len("noise vector", data.n(), eps.len())?;
    let l1 = eps.lp_norm(1);
    if l1 == 0.0 {
        return Ok(DeltaCondition {
            status: ConditionStatus::Degenerate,
            margins: Vec::new(),
            min_margin: None,
        });
    }
    let xte: DVector<f64> = data.x.tr_mul(eps);
    let margins: Vec<f64> = match variant {
        Variant::Classic => vec![delta - 2.0 * xte.amax() / l1],
        Variant::Group(g) => {
            check_len("partition dimension", data.p(), g.p())?;
            (0..g.num_groups())
                .map(|l| delta / g.weights()[l] - 2.0 * g.block_norm(&xte, l) / l1)
                .collect()
        }
    };
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DeltaCondition {
        status: if min_margin >= 0.0 {
            ConditionStatus::Pass
        } else {
            ConditionStatus::Fail
        },
        margins,
        min_margin: Some(min_margin),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn constants() {
        let c = 1.0 / ((2.0 / std::f64::consts::PI).sqrt() - 0.1);
        assert_eq!(classic_constant(), 4.0 * c);
        assert_eq!(group_constant(), 2.0 * c);
        assert!((classic_constant() - 5.731607).abs() < 1e-6);
        assert!((group_constant() - 2.865804).abs() < 1e-6);
    }

    #[test]
    fn classic_rule_values() {
        assert!((delta_classic(400, 500).unwrap() - 0.7144195).abs() < 1e-7);
        let a = delta_classic(100, 50).unwrap();
        let b = delta_classic(400, 50).unwrap();
        assert!((a / 2.0 - b).abs() <= 1e-15 * a);
        assert!(delta_classic(10, 1).is_err());
        assert!(delta_classic(0, 10).is_err());
    }

    #[test]
    fn equal_groups() {
        let part = GroupPartition::equal_size(500, 4).unwrap();
        let t = delta_group(400, &part).unwrap();
        assert!((t.delta - 1.0670532).abs() < 1e-7);
        assert!(t.weights.iter().all(|w| (w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn larger_groups_get_smaller_weights() {
        let part = GroupPartition::new(vec![vec![0], vec![1, 2, 3], vec![4, 5]], vec![1.0; 3], 6).unwrap();
        let t = delta_group(30, &part).unwrap();
        assert_eq!(t.weights[0], 1.0);
        assert!(t.weights[1] < t.weights[2] && t.weights[2] < t.weights[0]);
        assert!(delta_group(30, &GroupPartition::new(vec![vec![0, 1]], vec![1.0], 2).unwrap()).is_err());
    }

    #[test]
    fn condition_cases() {
        let data = Dataset::new(DMatrix::identity(2, 2), DVector::from_vec(vec![0.0, 0.0])).unwrap();
        let zero = GroundTruth::new(DVector::zeros(2), Some(DVector::zeros(2)), 0.1);
        let c = check_delta_condition(&zero, &data, 1.0, &Variant::Classic).unwrap();
        assert_eq!(c.status, ConditionStatus::Degenerate);

        // ε = (1, −3): 2‖Xᵀε‖_∞/‖ε‖₁ = 6/4.
        let gt = GroundTruth::new(DVector::zeros(2), Some(DVector::from_vec(vec![1.0, -3.0])), 0.1);
        let at = check_delta_condition(&gt, &data, 1.5, &Variant::Classic).unwrap();
        assert!(at.passed());
        assert_eq!(at.min_margin, Some(0.0));
        let below = check_delta_condition(&gt, &data, 1.49, &Variant::Classic).unwrap();
        assert_eq!(below.status, ConditionStatus::Fail);

        let missing = GroundTruth::new(DVector::zeros(2), None, 0.1);
        assert!(matches!(
            check_delta_condition(&missing, &data, 1.0, &Variant::Classic),
            Err(Error::OracleUnavailable)
        ));
    }
}
