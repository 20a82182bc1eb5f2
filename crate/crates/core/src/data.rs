//! Datasets, synthetic Gaussian-linear-model generation and group partitions.
//!
//! Index sets are 0-based in memory. The on-disk formats in [`crate::io`]
//! use 1-based indices.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Default tolerance below which a coefficient block counts as zero.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Fixed design `x` (n × p) and response `y` (length n).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Multipliers applied to each column by [`normalize_columns`], if any.
    pub column_scales: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        check_len("response length", x.nrows(), y.len())?;
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::invalid("design matrix must be non-empty"));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("design and response must be finite"));
        }
        Ok(Self {
            x,
            y,
            column_scales: None,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Residual vector `x β − y`.
    pub fn residuals(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.x * beta - &self.y
    }

    /// Largest column norm relative to `√n`; at most 1 for a normalized design.
    pub fn max_column_ratio(&self) -> f64 {
        let root_n = (self.n() as f64).sqrt();
        self.x
            .column_iter()
            .map(|c| c.norm() / root_n)
            .fold(0.0, f64::max)
    }
}

/// Oracle quantities of a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub beta_star: DVector<f64>,
    /// Indices `j` with `beta_star[j] != 0`, ascending.
    pub support: Vec<usize>,
    /// Noise realisation; absent when the truth was loaded without it.
    pub epsilon: Option<DVector<f64>>,
    pub sigma: f64,
}

impl GroundTruth {
    pub fn new(beta_star: DVector<f64>, epsilon: Option<DVector<f64>>, sigma: f64) -> Self {
        let support = support_of(&beta_star);
        Self {
            beta_star,
            support,
            epsilon,
            sigma,
        }
    }

    pub fn s(&self) -> usize {
        self.support.len()
    }

    pub fn epsilon(&self) -> Result<&DVector<f64>> {
        self.epsilon.as_ref().ok_or(Error::OracleUnavailable)
    }
}

fn support_of(beta: &DVector<f64>) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Disjoint partition of `0..p` into groups, each carrying a positive weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
    p: usize,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl TryFrom<PartitionRepr> for GroupPartition {
    type Error = Error;

    fn try_from(r: PartitionRepr) -> Result<Self> {
        let p = r.groups.iter().map(Vec::len).sum();
        GroupPartition::new(r.groups, r.weights, p)
    }
}

impl From<GroupPartition> for PartitionRepr {
    fn from(g: GroupPartition) -> Self {
        PartitionRepr {
            groups: g.groups,
            weights: g.weights,
        }
    }
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<usize>>, weights: Vec<f64>, p: usize) -> Result<Self> {
        check_len("group weights", groups.len(), weights.len())?;
        if groups.is_empty() {
            return Err(Error::invalid("partition needs at least one group"));
        }
        let mut seen = vec![false; p];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::invalid("empty group in partition"));
            }
            for &j in g {
                if j >= p {
                    return Err(Error::invalid(format!("index {j} out of range for p = {p}")));
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(Error::invalid(format!("index {j} appears in two groups")));
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("index {j} is not covered by any group")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("group weight {w} is not positive")));
        }
        Ok(Self { groups, weights, p })
    }

    /// Consecutive groups of `size` coordinates with unit weights.
    pub fn equal_size(p: usize, size: usize) -> Result<Self> {
        if size == 0 || p % size != 0 {
            return Err(Error::invalid(format!(
                "cannot split p = {p} into groups of size {size}"
            )));
        }
        let groups = (0..p / size)
            .map(|l| (l * size..(l + 1) * size).collect())
            .collect::<Vec<_>>();
        let weights = vec![1.0; groups.len()];
        Self::new(groups, weights, p)
    }

    pub fn singletons(p: usize) -> Self {
        Self::equal_size(p, 1).expect("p >= 1")
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.groups.clone(), weights, self.p)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Euclidean norm of `v` restricted to group `l`.
    pub fn block_norm(&self, v: &DVector<f64>, l: usize) -> f64 {
        self.groups[l]
            .iter()
            .map(|&j| v[j] * v[j])
            .sum::<f64>()
            .sqrt()
    }
}

/// Groups carrying a nonzero block of a coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportGroups {
    /// Group indices `l` with `‖β^l‖₂ > tol`, ascending.
    pub groups: Vec<usize>,
    /// Number of coordinates covered by those groups.
    pub covered: usize,
}

impl SupportGroups {
    pub fn g(&self) -> usize {
        self.groups.len()
    }
}

pub fn support_groups(
    beta: &DVector<f64>,
    partition: &GroupPartition,
    tol: f64,
) -> Result<SupportGroups> {
    check_len("coefficient vector", partition.p(), beta.len())?;
    let groups: Vec<usize> = (0..partition.num_groups())
        .filter(|&l| partition.block_norm(beta, l) > tol)
        .collect();
    let covered = groups.iter().map(|&l| partition.groups()[l].len()).sum();
    Ok(SupportGroups { groups, covered })
}

/// Rescale every column to Euclidean norm `√n`. Returns the new matrix and
/// the multiplier applied to each column.
pub fn normalize_columns(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let target = (x.nrows() as f64).sqrt();
    let mut out = x.clone();
    let mut scales = Vec::with_capacity(x.ncols());
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::ZeroColumn { column: j });
        }
        let scale = target / norm;
        col *= scale;
        scales.push(scale);
    }
    Ok((out, scales))
}

/// Coefficient vector of the reference experiment for dimension `p ≥ 8`:
/// the first four entries are 0.1, 0.2, 0.15, 0.25, the last four are
/// 0.9, 0.95, 1, 1.05 and the rest are zero.
pub fn reference_beta(p: usize) -> Result<DVector<f64>> {
    if p < 8 {
        return Err(Error::invalid("reference coefficient vector needs p >= 8"));
    }
    let mut beta = DVector::zeros(p);
    for (j, v) in [0.1, 0.2, 0.15, 0.25].into_iter().enumerate() {
        beta[j] = v;
    }
    for (k, v) in [0.9, 0.95, 1.0, 1.05].into_iter().enumerate() {
        beta[p - 4 + k] = v;
    }
    Ok(beta)
}

/// Draw a Gaussian-linear-model dataset.
///
/// The design has i.i.d. standard normal entries (drawn row by row) and is
/// then column-normalized to `‖x_j‖₂ = √n`; noise is i.i.d. `N(0, σ²)` and
/// `y = x β* + ε`. Output is a pure function of the arguments.
pub fn generate_synthetic(
    n: usize,
    p: usize,
    beta_star: &DVector<f64>,
    sigma: f64,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("n and p must be positive"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("noise level must be positive, got {sigma}")));
    }
    check_len("beta_star", p, beta_star.len())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            raw[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    let (x, scales) = normalize_columns(&raw)?;
    let epsilon = DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    });
    let y = &x * beta_star + &epsilon;

    let mut data = Dataset::new(x, y)?;
    data.column_scales = Some(scales);
    let truth = GroundTruth::new(beta_star.clone(), Some(epsilon), sigma);
    Ok((data, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_three_four_column() {
        let x = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let (z, scales) = normalize_columns(&x).unwrap();
        let factor = 2f64.sqrt() / 5.0;
        assert!((scales[0] - factor).abs() < 1e-15);
        assert!((z[(0, 0)] - 3.0 * factor).abs() < 1e-15);
        assert!((z[(1, 0)] - 4.0 * factor).abs() < 1e-15);
        assert!((z.column(0).norm() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn normalized_column_is_unchanged() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let (z, scales) = normalize_columns(&x).unwrap();
        assert!((scales[0] - 1.0).abs() < 1e-15);
        assert!((z - x).norm() < 1e-15);
    }

    #[test]
    fn zero_column_is_named() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 3.0, 0.0, 1.0]);
        match normalize_columns(&x) {
            Err(Error::ZeroColumn { column }) => assert_eq!(column, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let beta = DVector::from_vec(vec![1.0, 0.0, -0.5]);
        let (a, ta) = generate_synthetic(5, 3, &beta, 0.3, 7).unwrap();
        let (b, tb) = generate_synthetic(5, 3, &beta, 0.3, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate_synthetic(5, 3, &beta, 0.3, 8).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn generated_data_reconstructs_noise() {
        let beta = reference_beta(40).unwrap();
        let (data, truth) = generate_synthetic(30, 40, &beta, 0.1, 1).unwrap();
        let eps = truth.epsilon.unwrap();
        let rebuilt = &data.y - &data.x * &beta;
        assert!((rebuilt - &eps).amax() <= 1e-14 * (1.0 + data.y.amax()));
        assert_eq!(truth.support, vec![0, 1, 2, 3, 36, 37, 38, 39]);
        for c in data.x.column_iter() {
            assert!((c.norm() / 30f64.sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_noise_approaches_noiseless_response() {
        let beta = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let (data, truth) = generate_synthetic(6, 3, &beta, 1e-300, 3).unwrap();
        let clean = &data.x * &beta;
        assert!((&data.y - clean).amax() < 1e-290);
        assert!(truth.epsilon.unwrap().amax() < 1e-298);
    }

    #[test]
    fn rejects_bad_arguments() {
        let beta = DVector::zeros(3);
        assert!(generate_synthetic(0, 3, &beta, 1.0, 0).is_err());
        assert!(generate_synthetic(4, 3, &beta, 0.0, 0).is_err());
        assert!(generate_synthetic(4, 3, &beta, -1.0, 0).is_err());
        assert!(generate_synthetic(4, 2, &beta, 1.0, 0).is_err());
    }

    #[test]
    fn reference_support_groups() {
        let beta = reference_beta(500).unwrap();
        let part = GroupPartition::equal_size(500, 4).unwrap();
        let sg = support_groups(&beta, &part, SUPPORT_TOL).unwrap();
        assert_eq!(sg.groups, vec![0, 124]);
        assert_eq!(sg.g(), 2);
        assert_eq!(sg.covered, 8);
    }

    #[test]
    fn support_groups_edge_cases() {
        let part = GroupPartition::equal_size(12, 3).unwrap();
        let zero = DVector::zeros(12);
        assert!(support_groups(&zero, &part, SUPPORT_TOL).unwrap().groups.is_empty());
        let mut one = DVector::zeros(12);
        one[7] = -0.3;
        assert_eq!(support_groups(&one, &part, SUPPORT_TOL).unwrap().groups, vec![2]);
        assert!(support_groups(&DVector::zeros(5), &part, SUPPORT_TOL).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(GroupPartition::new(vec![vec![0, 1], vec![1, 2]], vec![1.0, 1.0], 3).is_err());
        assert!(GroupPartition::new(vec![vec![0], vec![2]], vec![1.0, 1.0], 3).is_err());
        assert!(GroupPartition::new(vec![vec![0, 1], vec![2]], vec![1.0, 0.0], 3).is_err());
        assert!(GroupPartition::new(vec![vec![0, 1], vec![2]], vec![1.0], 3).is_err());
        let ok = GroupPartition::new(vec![vec![2, 0], vec![1]], vec![0.5, 2.0], 3).unwrap();
        assert_eq!(ok.sizes(), vec![2, 1]);
        assert!(GroupPartition::equal_size(10, 4).is_err());
    }
}
