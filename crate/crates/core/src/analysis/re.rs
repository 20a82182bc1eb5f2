//! Restricted-eigenvalue estimates.
//!
//! The RE constant is `min ‖Xv‖₂ / (√n‖v‖₂)` over supports `|S| ≤ s` and the
//! cone `‖v_{S^c}‖₁ ≤ c₁‖v_S‖₁`; the group version divides by `‖v_{G_J}‖₂`
//! and uses the weighted cone `Σ_{J^c} ‖v^l‖₂/ω_l ≤ c₂ Σ_J ‖v^l‖₂/ω_l`. Cones
//! grow with the support, so only supports of the maximal size are visited.
//! Each support contributes the minimum over a finite set of cone vectors,
//! which makes the result an upper estimate of the true constant. It is
//! flagged exact when it meets the lower bound `√λ_min(XᵀX/n)`, as happens
//! for orthonormal designs.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::GroupPartition;
use crate::error::{check_len, Error, Result};

/// Exhaustive support enumeration is used up to this many coordinates
/// (groups for the group constant).
pub const ENUMERATION_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReKind {
    Re { s: usize, c1: f64 },
    Gre { g: usize, c2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReMode {
    /// The estimate equals the eigenvalue lower bound, so it is the constant.
    ExactOrthonormal,
    /// All supports enumerated; cone vectors sampled.
    EnumeratedUpperEstimate,
    /// Supports and cone vectors sampled.
    SampledUpperEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReEstimate {
    #[serde(flatten)]
    pub kind: ReKind,
    pub value: f64,
    pub mode: ReMode,
    /// `√λ_min(XᵀX/n)`, a lower bound on the constant.
    pub lower_bound: f64,
    pub supports: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReOptions {
    /// Random cone vectors per support.
    pub samples: usize,
    /// Supports drawn when enumeration is not possible.
    pub max_supports: usize,
    /// Projected-gradient steps refining the best candidates per support.
    pub refine_iters: usize,
    pub seed: u64,
}

impl Default for ReOptions {
    fn default() -> Self {
        Self {
            samples: 64,
            max_supports: 200,
            refine_iters: 200,
            seed: 0,
        }
    }
}

const EXACT_TOL: f64 = 1e-10;

/// Block structure shared by both constants.
struct Cone<'a> {
    blocks: &'a [Vec<usize>],
    /// Per-block factor in the cone norm (1 for RE, 1/ω_l for GRE).
    scale: Vec<f64>,
    c: f64,
    /// Denominator is the full norm (RE) or the support norm (GRE).
    support_denominator: bool,
}

impl Cone<'_> {
    fn block_norm(&self, v: &DVector<f64>, b: usize) -> f64 {
        self.blocks[b].iter().map(|&j| v[j] * v[j]).sum::<f64>().sqrt()
    }

    /// For RE the cone norm is ℓ₁ over coordinates, i.e. blocks are singletons.
    fn sides(&self, v: &DVector<f64>, inside: &[bool]) -> (f64, f64) {
        let mut on = 0.0;
        let mut off = 0.0;
        for b in 0..self.blocks.len() {
            let t = self.scale[b] * self.block_norm(v, b);
            if inside[b] {
                on += t;
            } else {
                off += t;
            }
        }
        (on, off)
    }

    /// Shrink the off-support part until `v` lies in the cone; `None` when
    /// the on-support part vanishes.
    fn make_feasible(&self, mut v: DVector<f64>, inside: &[bool]) -> Option<DVector<f64>> {
        let (on, off) = self.sides(&v, inside);
        if on <= 0.0 {
            return None;
        }
        if off > self.c * on {
            let t = self.c * on / off;
            for (b, idx) in self.blocks.iter().enumerate() {
                if !inside[b] {
                    for &j in idx {
                        v[j] *= t;
                    }
                }
            }
        }
        Some(v)
    }

    fn ratio_sq(&self, sigma: &DMatrix<f64>, v: &DVector<f64>, inside: &[bool]) -> f64 {
        let num = v.dot(&(sigma * v));
        let den = if self.support_denominator {
            (0..self.blocks.len())
                .filter(|&b| inside[b])
                .map(|b| self.block_norm(v, b).powi(2))
                .sum::<f64>()
        } else {
            v.norm_squared()
        };
        if den > 0.0 {
            (num / den).max(0.0)
        } else {
            f64::INFINITY
        }
    }
}

fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Eigenvectors of `sigma` for its `k` smallest eigenvalues.
fn smallest_eigenvectors(eigvals: &DVector<f64>, eigvecs: &DMatrix<f64>, k: usize) -> Vec<DVector<f64>> {
    let mut order: Vec<usize> = (0..eigvals.len()).collect();
    order.sort_by(|&a, &b| eigvals[a].total_cmp(&eigvals[b]));
    order.iter().take(k).map(|&i| eigvecs.column(i).into_owned()).collect()
}

fn support_minimum(
    cone: &Cone<'_>,
    sigma: &DMatrix<f64>,
    global_low: &[DVector<f64>],
    inside: &[bool],
    opts: &ReOptions,
    seed: u64,
) -> f64 {
    let p = sigma.nrows();
    let coords: Vec<usize> = (0..cone.blocks.len())
        .filter(|&b| inside[b])
        .flat_map(|b| cone.blocks[b].iter().copied())
        .collect();
    let mut cands: Vec<DVector<f64>> = Vec::new();

    // Vectors supported on the support itself are always in the cone.
    let sub = sigma.select_rows(&coords).select_columns(&coords);
    let (vals, vecs) = symmetric_eigen(&sub);
    for v in smallest_eigenvectors(&vals, &vecs, 2.min(coords.len())) {
        let mut full = DVector::zeros(p);
        for (a, &j) in coords.iter().enumerate() {
            full[j] = v[a];
        }
        cands.push(full);
    }
    cands.extend(global_low.iter().cloned());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..opts.samples {
        let v: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        cands.push(v);
    }

    let mut scored: Vec<(f64, DVector<f64>)> = cands
        .into_iter()
        .filter_map(|v| cone.make_feasible(v, inside))
        .map(|v| (cone.ratio_sq(sigma, &v, inside), v))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.truncate(3);

    let mut best = scored.first().map(|s| s.0).unwrap_or(f64::INFINITY);
    let step0 = 0.5 / sigma.diagonal().amax().max(1e-300);
    for (mut val, mut v) in scored {
        let mut step = step0;
        for _ in 0..opts.refine_iters {
            // Gradient of the Rayleigh quotient with the current denominator.
            let sv = sigma * &v;
            let den = if cone.support_denominator {
                let mut d = DVector::zeros(p);
                for &j in &coords {
                    d[j] = v[j];
                }
                d
            } else {
                v.clone()
            };
            let dn = den.norm_squared();
            if dn <= 0.0 {
                break;
            }
            let grad = (sv - den * val) * (2.0 / dn);
            let Some(cand) = cone.make_feasible(&v - &grad * step, inside) else {
                break;
            };
            let cv = cone.ratio_sq(sigma, &cand, inside);
            if cv < val {
                let norm = cand.norm();
                v = cand / norm;
                val = cv;
                step *= 1.2;
            } else {
                step *= 0.5;
                if step < 1e-14 * step0 {
                    break;
                }
            }
        }
        best = best.min(val);
    }
    best
}

/// All `k`-subsets of `0..m` in lexicographic order.
fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > m {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < m - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn estimate(
    x: &DMatrix<f64>,
    blocks: &[Vec<usize>],
    scale: Vec<f64>,
    size: usize,
    c: f64,
    support_denominator: bool,
    opts: &ReOptions,
) -> Result<(f64, ReMode, f64, usize, usize)> {
    let n = x.nrows();
    let m = blocks.len();
    if n == 0 {
        return Err(Error::invalid("design has no rows"));
    }
    if size == 0 || size > m {
        return Err(Error::invalid(format!("support size must lie in 1..={m}, got {size}")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("cone constant must be finite and non-negative, got {c}")));
    }
    let sigma = x.tr_mul(x) / n as f64;
    let (eigvals, eigvecs) = symmetric_eigen(&sigma);
    let lambda_min = eigvals.min().max(0.0);
    let lower = lambda_min.sqrt();
    let global_low = smallest_eigenvectors(&eigvals, &eigvecs, 3.min(sigma.nrows()));
    let cone = Cone {
        blocks,
        scale,
        c,
        support_denominator,
    };

    let enumerate = m <= ENUMERATION_LIMIT;
    let supports: Vec<Vec<usize>> = if enumerate {
        combinations(m, size)
    } else {
        // Supports built from the largest entries of low-curvature directions,
        // then uniform draws.
        let mut sup = Vec::new();
        for v in &global_low {
            let mut order: Vec<usize> = (0..m).collect();
            let weight = |b: usize| blocks[b].iter().map(|&j| v[j] * v[j]).sum::<f64>();
            order.sort_by(|&a, &b| weight(b).total_cmp(&weight(a)));
            let mut s: Vec<usize> = order[..size].to_vec();
            s.sort_unstable();
            sup.push(s);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
        while sup.len() < opts.max_supports.max(1) {
            let mut s = sample(&mut rng, m, size).into_vec();
            s.sort_unstable();
            sup.push(s);
        }
        sup
    };

    let best_sq = supports
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let mut inside = vec![false; m];
            for &b in s {
                inside[b] = true;
            }
            support_minimum(&cone, &sigma, &global_low, &inside, opts, opts.seed.wrapping_add(k as u64))
        })
        .reduce(|| f64::INFINITY, f64::min);
    let value = best_sq.sqrt();
    let mode = if (value - lower).abs() <= EXACT_TOL * lower.max(1.0) {
        ReMode::ExactOrthonormal
    } else if enumerate {
        ReMode::EnumeratedUpperEstimate
    } else {
        ReMode::SampledUpperEstimate
    };
    let value = if mode == ReMode::ExactOrthonormal { lower } else { value };
    Ok((value, mode, lower, supports.len(), opts.samples))
}

pub fn re_constant(x: &DMatrix<f64>, s: usize, c1: f64, opts: &ReOptions) -> Result<ReEstimate> {
    let blocks: Vec<Vec<usize>> = (0..x.ncols()).map(|j| vec![j]).collect();
    let (value, mode, lower_bound, supports, samples) =
        estimate(x, &blocks, vec![1.0; x.ncols()], s, c1, false, opts)?;
    Ok(ReEstimate {
        kind: ReKind::Re { s, c1 },
        value,
        mode,
        lower_bound,
        supports,
        samples,
        seed: opts.seed,
    })
}

pub fn gre_constant(
    x: &DMatrix<f64>,
    partition: &GroupPartition,
    g: usize,
    c2: f64,
    opts: &ReOptions,
) -> Result<ReEstimate> {
    check_len("partition dimension", x.ncols(), partition.p())?;
    let scale = partition.weights().iter().map(|w| 1.0 / w).collect();
    let (value, mode, lower_bound, supports, samples) =
        estimate(x, partition.groups(), scale, g, c2, true, opts)?;
    Ok(ReEstimate {
        kind: ReKind::Gre { g, c2 },
        value,
        mode,
        lower_bound,
        supports,
        samples,
        seed: opts.seed,
    })
}
