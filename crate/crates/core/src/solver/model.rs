//! Second-order models of the dual objective used by the Newton-type solvers.
//!
//! Both the smoothed objective (absolute values replaced by
//! `√(v² + μ²) − μ`) and the exact objective restricted to a fixed manifold
//! (signs of residuals fixed, some residuals pinned at zero, zero blocks
//! removed) have the form `(1/n) Σ_i (ℓ_i(β) + δ P(β))²`, so they share one
//! assembly routine.

use nalgebra::{DMatrix, DVector};

use crate::objective::{AdvObjective, Variant};

#[derive(Debug, Clone, Copy)]
pub(crate) enum ResidualModel<'s> {
    Smoothed(f64),
    /// `+1`/`−1` for free residuals, `0` for residuals pinned at zero.
    Manifold(&'s [f64]),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum PenaltyModel {
    Smoothed(f64),
    /// Exact penalty; every active block must be nonzero.
    Exact,
}

pub(crate) struct Model {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

struct PenaltyParts {
    value: f64,
    grad: DVector<f64>,
    /// Curvature blocks as (coordinates, dense block).
    blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
}

fn penalty_parts(variant: &Variant, beta: &DVector<f64>, mode: PenaltyModel) -> PenaltyParts {
    let p = beta.len();
    let mut grad = DVector::zeros(p);
    let mut blocks = Vec::new();
    let mut value = 0.0;
    match (variant, mode) {
        (Variant::Classic, PenaltyModel::Smoothed(mu)) => {
            for j in 0..p {
                let b = beta[j];
                let s = (b * b + mu * mu).sqrt();
                value += s - mu;
                grad[j] = b / s;
                blocks.push((vec![j], DMatrix::from_element(1, 1, mu * mu / (s * s * s))));
            }
        }
        (Variant::Classic, PenaltyModel::Exact) => {
            value = beta.lp_norm(1);
            grad = beta.map(|b| if b > 0.0 { 1.0 } else if b < 0.0 { -1.0 } else { 0.0 });
        }
        (Variant::Group(g), mode) => {
            let mu = match mode {
                PenaltyModel::Smoothed(mu) => mu,
                PenaltyModel::Exact => 0.0,
            };
            for (l, idx) in g.groups().iter().enumerate() {
                let w = g.weights()[l];
                let nb2 = idx.iter().map(|&j| beta[j] * beta[j]).sum::<f64>();
                let s = (nb2 + mu * mu).sqrt();
                if s == 0.0 {
                    continue;
                }
                value += (s - mu) / w;
                let k = idx.len();
                let mut h = DMatrix::zeros(k, k);
                for (a, &ja) in idx.iter().enumerate() {
                    grad[ja] = beta[ja] / (w * s);
                    for (b, &jb) in idx.iter().enumerate() {
                        let eye = if a == b { 1.0 / s } else { 0.0 };
                        h[(a, b)] = (eye - beta[ja] * beta[jb] / (s * s * s)) / w;
                    }
                }
                blocks.push((idx.clone(), h));
            }
        }
    }
    PenaltyParts {
        value,
        grad,
        blocks,
    }
}

/// Value only, for line searches.
pub(crate) fn model_value(
    obj: &AdvObjective<'_>,
    beta: &DVector<f64>,
    rmode: ResidualModel<'_>,
    pmode: PenaltyModel,
) -> f64 {
    let r = obj.data.residuals(beta);
    let pen = match (&obj.variant, pmode) {
        (_, PenaltyModel::Exact) => obj.penalty(beta),
        (v, m) => penalty_parts(v, beta, m).value,
    };
    let shift = obj.delta * pen;
    let total: f64 = (0..r.len())
        .map(|i| {
            let l = match rmode {
                ResidualModel::Smoothed(mu) => (r[i] * r[i] + mu * mu).sqrt() - mu,
                ResidualModel::Manifold(s) => s[i] * r[i],
            };
            (l + shift).powi(2)
        })
        .sum();
    total / r.len() as f64
}

/// Value, gradient and Hessian restricted to the coordinates `active`
/// (`None` means all coordinates).
pub(crate) fn assemble(
    obj: &AdvObjective<'_>,
    beta: &DVector<f64>,
    active: Option<&[usize]>,
    rmode: ResidualModel<'_>,
    pmode: PenaltyModel,
) -> Model {
    let x = &obj.data.x;
    let n = x.nrows();
    let nf = n as f64;
    let delta = obj.delta;
    let r = obj.data.residuals(beta);
    let pen = penalty_parts(&obj.variant, beta, pmode);

    let mut ell = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut curv = DVector::zeros(n);
    for i in 0..n {
        match rmode {
            ResidualModel::Smoothed(mu) => {
                let s = (r[i] * r[i] + mu * mu).sqrt();
                ell[i] = s - mu;
                u[i] = r[i] / s;
                curv[i] = mu * mu / (s * s * s);
            }
            ResidualModel::Manifold(sig) => {
                ell[i] = sig[i] * r[i];
                u[i] = sig[i];
            }
        }
    }
    let c = ell.add_scalar(delta * pen.value);
    let total_c = c.sum();
    let value = c.norm_squared() / nf;

    let all: Vec<usize>;
    let act: &[usize] = match active {
        Some(a) => a,
        None => {
            all = (0..x.ncols()).collect();
            &all
        }
    };
    let k = act.len();
    let xa = if active.is_none() {
        x.clone()
    } else {
        x.select_columns(act)
    };
    let v = DVector::from_iterator(k, act.iter().map(|&j| pen.grad[j]));

    // Gradient: (2/n)[X_aᵀ(c∘u) + δ C v].
    let grad = (xa.tr_mul(&c.component_mul(&u)) + &v * (delta * total_c)) * (2.0 / nf);

    // Hessian.
    let weights = DVector::from_fn(n, |i, _| (u[i] * u[i] + c[i] * curv[i]).max(0.0).sqrt());
    let mut w = xa.clone();
    for (i, mut row) in w.row_iter_mut().enumerate() {
        row *= weights[i];
    }
    let mut hess = w.transpose() * &w;
    let q = xa.tr_mul(&u);
    hess.ger(delta, &q, &v, 1.0);
    hess.ger(delta, &v, &q, 1.0);
    hess.ger(nf * delta * delta, &v, &v, 1.0);

    // Penalty curvature on the active coordinates.
    let mut pos = vec![usize::MAX; x.ncols()];
    for (a, &j) in act.iter().enumerate() {
        pos[j] = a;
    }
    let scale = delta * total_c;
    if scale != 0.0 {
        for (idx, blk) in &pen.blocks {
            for (a, &ja) in idx.iter().enumerate() {
                if pos[ja] == usize::MAX {
                    continue;
                }
                for (b, &jb) in idx.iter().enumerate() {
                    if pos[jb] != usize::MAX {
                        hess[(pos[ja], pos[jb])] += scale * blk[(a, b)];
                    }
                }
            }
        }
    }
    hess *= 2.0 / nf;

    Model { value, grad, hess }
}

/// Solve `H x = b` for symmetric positive semidefinite `H`, adding a growing
/// multiple of the identity until Cholesky succeeds.
pub(crate) fn solve_psd(h: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().amax().max(1e-300);
    let mut shift = 0.0;
    for _ in 0..30 {
        let mut m = h.clone();
        if shift > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += shift;
            }
        }
        if let Some(ch) = m.cholesky() {
            let x = ch.solve(b);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 10.0 };
    }
    None
}

/// Solve a general square system, falling back to a pseudo-inverse when the
/// LU solution is inaccurate.
pub(crate) fn solve_general(k: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let tol = 1e-10 * (1.0 + b.amax());
    if let Some(x) = k.clone().lu().solve(b) {
        if x.iter().all(|v| v.is_finite()) && (k * &x - b).amax() <= tol {
            return Some(x);
        }
    }
    let svd = k.clone().svd(true, true);
    let eps = 1e-13 * svd.singular_values.amax();
    let x = svd.solve(b, eps).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}
