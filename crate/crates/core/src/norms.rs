//! Plain ℓ_q norms and weighted group (r, s)-norms with their duals.
//!
//! The weighted (r, s)-norm of `z` under a partition with weights `ω` is
//! `(Σ_l ‖ω_l z^l‖_r^s)^{1/s}`, or `max_l ‖ω_l z^l‖_r` when `s = ∞`. Its dual
//! is the (q, t)-norm with weights `1/ω`, where `1/r + 1/q = 1` and
//! `1/s + 1/t = 1`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::GroupPartition;
use crate::error::{check_len, Error, Result};

/// A norm exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);

    pub fn finite(q: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::invalid(format!("norm exponent must be >= 1, got {q}")));
        }
        if q.is_infinite() {
            return Ok(Exponent::Infinity);
        }
        Ok(Exponent::Finite(q))
    }

    /// Hölder conjugate: `1/q + 1/q' = 1`.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinity => Exponent::ONE,
            Exponent::Finite(q) if q == 1.0 => Exponent::Infinity,
            Exponent::Finite(q) => Exponent::Finite(q / (q - 1.0)),
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            Exponent::Finite(q) => Exponent::finite(q),
            Exponent::Infinity => Ok(self),
        }
    }
}

fn norm_of<I: Iterator<Item = f64>>(values: I, q: Exponent) -> f64 {
    match q {
        Exponent::Infinity => values.fold(0.0, |m, v| m.max(v.abs())),
        Exponent::Finite(q) if q == 1.0 => values.map(f64::abs).sum(),
        Exponent::Finite(q) if q == 2.0 => values.map(|v| v * v).sum::<f64>().sqrt(),
        Exponent::Finite(q) => {
            // Scale by the largest entry to keep |v|^q representable.
            let vals: Vec<f64> = values.map(f64::abs).collect();
            let scale = vals.iter().copied().fold(0.0, f64::max);
            if scale == 0.0 {
                return 0.0;
            }
            scale * vals.iter().map(|v| (v / scale).powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }
}

pub fn lq_norm(z: &[f64], q: Exponent) -> Result<f64> {
    let q = q.validate()?;
    Ok(norm_of(z.iter().copied(), q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Group `l` is scaled by `ω_l`.
    Direct,
    /// Group `l` is scaled by `1/ω_l`.
    Inverse,
}

impl WeightMode {
    fn flip(self) -> Self {
        match self {
            WeightMode::Direct => WeightMode::Inverse,
            WeightMode::Inverse => WeightMode::Direct,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGroupNorm {
    pub partition: GroupPartition,
    pub inner: Exponent,
    pub outer: Exponent,
    pub weight_mode: WeightMode,
}

impl WeightedGroupNorm {
    pub fn new(
        partition: GroupPartition,
        inner: Exponent,
        outer: Exponent,
        weight_mode: WeightMode,
    ) -> Result<Self> {
        Ok(Self {
            partition,
            inner: inner.validate()?,
            outer: outer.validate()?,
            weight_mode,
        })
    }

    /// Multiplier applied to group `l`.
    pub fn group_scale(&self, l: usize) -> f64 {
        let w = self.partition.weights()[l];
        match self.weight_mode {
            WeightMode::Direct => w,
            WeightMode::Inverse => 1.0 / w,
        }
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        weighted_group_norm(z, self)
    }

    pub fn dual(&self) -> Self {
        dual_norm_params(self)
    }
}

/// Evaluate a weighted group norm. A zero block contributes zero whatever its
/// weight.
pub fn weighted_group_norm(z: &[f64], norm: &WeightedGroupNorm) -> Result<f64> {
    check_len("vector for group norm", norm.partition.p(), z.len())?;
    let blocks = norm
        .partition
        .groups()
        .iter()
        .enumerate()
        .map(|(l, g)| {
            let inner = norm_of(g.iter().map(|&j| z[j]), norm.inner);
            if inner == 0.0 {
                0.0
            } else {
                norm.group_scale(l) * inner
            }
        });
    Ok(norm_of(blocks, norm.outer))
}

pub fn dual_norm_params(norm: &WeightedGroupNorm) -> WeightedGroupNorm {
    WeightedGroupNorm {
        partition: norm.partition.clone(),
        inner: norm.inner.conjugate(),
        outer: norm.outer.conjugate(),
        weight_mode: norm.weight_mode.flip(),
    }
}

/// Unit vector `h` in the `q`-dual sense for `y`: `‖h‖_{q'} = 1` and
/// `⟨y, h⟩ = ‖y‖_q`. Returns zeros when `y = 0`.
fn dual_unit(y: &[f64], q: Exponent) -> Vec<f64> {
    let ny = norm_of(y.iter().copied(), q);
    if ny == 0.0 {
        return vec![0.0; y.len()];
    }
    match q {
        Exponent::Infinity => {
            let (k, _) = y
                .iter()
                .enumerate()
                .fold((0, -1.0), |(bk, bv), (k, v)| if v.abs() > bv { (k, v.abs()) } else { (bk, bv) });
            let mut h = vec![0.0; y.len()];
            h[k] = y[k].signum();
            h
        }
        Exponent::Finite(q) if q == 1.0 => y
            .iter()
            .map(|v| if *v == 0.0 { 0.0 } else { v.signum() })
            .collect(),
        Exponent::Finite(q) => y
            .iter()
            .map(|v| v.signum() * (v.abs() / ny).powf(q - 1.0))
            .collect(),
    }
}

/// Point on the unit sphere of `norm` attaining `⟨z, u⟩ = ‖z‖_dual`.
pub fn dual_extremizer(z: &[f64], norm: &WeightedGroupNorm) -> Result<Vec<f64>> {
    check_len("vector for group norm", norm.partition.p(), z.len())?;
    let dual = dual_norm_params(norm);
    let groups = norm.partition.groups();
    // Per group: y^l = (dual scale) z^l, h^l the inner dual unit vector.
    let mut block_vals = Vec::with_capacity(groups.len());
    let mut block_dirs = Vec::with_capacity(groups.len());
    for (l, g) in groups.iter().enumerate() {
        let y: Vec<f64> = g.iter().map(|&j| dual.group_scale(l) * z[j]).collect();
        block_vals.push(norm_of(y.iter().copied(), dual.inner));
        block_dirs.push(dual_unit(&y, dual.inner));
    }
    let lambda = dual_unit(&block_vals, dual.outer);
    let mut u = vec![0.0; z.len()];
    for (l, g) in groups.iter().enumerate() {
        // ‖scale_l u^l‖_r = λ_l.
        let scale = norm.group_scale(l);
        for (k, &j) in g.iter().enumerate() {
            u[j] = lambda[l] * block_dirs[l][k] / scale;
        }
    }
    Ok(u)
}

/// Lower estimate of `sup{⟨z, u⟩ : ‖u‖ ≤ 1}` from random directions rescaled
/// to the unit sphere, together with the analytic extremizer.
pub fn dual_norm_by_search(
    z: &[f64],
    norm: &WeightedGroupNorm,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    check_len("vector for group norm", norm.partition.p(), z.len())?;
    let dot = |u: &[f64]| z.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut u = vec![0.0; z.len()];
    for _ in 0..n_samples {
        for v in u.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let nu = weighted_group_norm(&u, norm)?;
        if nu > 0.0 {
            best = best.max(dot(&u).abs() / nu);
        }
    }
    let cand = dual_extremizer(z, norm)?;
    let nc = weighted_group_norm(&cand, norm)?;
    if nc > 0.0 {
        best = best.max(dot(&cand) / nc);
    }
    Ok(best)
}

/// `Σ_l ‖β^l‖₂ / ω_l`, the penalty of the group dual objective.
pub fn group_l21_inverse(beta: &DVector<f64>, partition: &GroupPartition) -> f64 {
    partition
        .weights()
        .iter()
        .enumerate()
        .map(|(l, w)| partition.block_norm(beta, l) / w)
        .sum()
}
