//! Active-set refinement.
//!
//! From an approximate minimizer, guess which coefficient blocks are zero and
//! which residuals vanish, then minimize the exact objective on that piece:
//! signs of the remaining residuals and coefficients are frozen, the zero
//! residuals become linear equality constraints. On this piece the classic
//! objective is quadratic and the group objective is smooth, so a few
//! constrained Newton steps reach the piecewise minimizer to rounding error.

use nalgebra::{DMatrix, DVector};

use super::certificate::min_norm_subgradient;
use super::model::{assemble, model_value, solve_general, PenaltyModel, ResidualModel};
use crate::objective::{AdvObjective, Variant};

pub(crate) struct Candidate {
    pub beta: DVector<f64>,
    pub objective: f64,
    pub certificate: f64,
    pub steps: usize,
}

const THRESHOLDS: [f64; 7] = [1e-12, 1e-10, 1e-8, 1e-6, 1e-5, 1e-4, 1e-3];

pub(crate) fn candidates(obj: &AdvObjective<'_>, beta: &DVector<f64>, kink_tol: f64) -> Vec<Candidate> {
    let data = obj.data;
    let r = data.residuals(beta);
    let y = &data.y;
    let rscale = (y.norm_squared() / y.len().max(1) as f64).sqrt().max(r.amax()).max(1e-300);
    let bscale = beta.amax().max(1e-300);

    let blocks: Vec<Vec<usize>> = match &obj.variant {
        Variant::Classic => (0..beta.len()).map(|j| vec![j]).collect(),
        Variant::Group(g) => g.groups().to_vec(),
    };
    let block_norm = |b: &[usize]| b.iter().map(|&j| beta[j] * beta[j]).sum::<f64>().sqrt();

    let mut seen: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut out = Vec::new();
    for tau in THRESHOLDS {
        let active_blocks: Vec<usize> = (0..blocks.len())
            .filter(|&b| block_norm(&blocks[b]) > tau * bscale)
            .collect();
        let zero_rows: Vec<usize> = (0..r.len()).filter(|&i| r[i].abs() <= tau * rscale).collect();
        let key = (active_blocks.clone(), zero_rows.clone());
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let active: Vec<usize> = active_blocks.iter().flat_map(|&b| blocks[b].iter().copied()).collect();
        if let Some(c) = refine(obj, beta, &active, &zero_rows, kink_tol) {
            out.push(c);
        }
    }
    out
}

fn refine(
    obj: &AdvObjective<'_>,
    start: &DVector<f64>,
    active: &[usize],
    zero_rows: &[usize],
    kink_tol: f64,
) -> Option<Candidate> {
    let data = obj.data;
    let n = data.n();
    let p = data.p();
    let mut beta = DVector::zeros(p);
    for &j in active {
        beta[j] = start[j];
    }
    let r0 = data.residuals(start);
    let sig: Vec<f64> = (0..n)
        .map(|i| {
            if zero_rows.binary_search(&i).is_ok() {
                0.0
            } else if r0[i] >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let coef_sign: Vec<f64> = start.iter().map(|b| b.signum()).collect();
    let k = active.len();
    let mcon = zero_rows.len();
    let mut steps = 0;

    if k > 0 {
        let a = DMatrix::from_fn(mcon, k, |i, j| data.x[(zero_rows[i], active[j])]);

        // Move onto the constraint set with a minimum-norm correction.
        if mcon > 0 {
            let viol = DVector::from_fn(mcon, |i, _| data.y[zero_rows[i]])
                - &a * DVector::from_iterator(k, active.iter().map(|&j| beta[j]));
            let svd = a.clone().svd(true, true);
            let eps = 1e-13 * svd.singular_values.amax().max(1e-300);
            let corr = svd.solve(&viol, eps).ok()?;
            for (a_idx, &j) in active.iter().enumerate() {
                beta[j] += corr[a_idx];
            }
        }

        let rmode = ResidualModel::Manifold(&sig);
        let pmode = PenaltyModel::Exact;
        for _ in 0..40 {
            if !on_piece(obj, &beta, active, &sig, &coef_sign) {
                return None;
            }
            let model = assemble(obj, &beta, Some(active), rmode, pmode);
            let mut kkt = DMatrix::zeros(k + mcon, k + mcon);
            kkt.view_mut((0, 0), (k, k)).copy_from(&model.hess);
            if mcon > 0 {
                kkt.view_mut((k, 0), (mcon, k)).copy_from(&a);
                kkt.view_mut((0, k), (k, mcon)).copy_from(&a.transpose());
            }
            let mut rhs = DVector::zeros(k + mcon);
            rhs.rows_mut(0, k).copy_from(&(-&model.grad));
            let sol = solve_general(&kkt, &rhs)?;
            let d = sol.rows(0, k).into_owned();
            let dec = -model.grad.dot(&d);
            if !(dec > 1e-16 * model.value.max(1e-300)) {
                break;
            }
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let mut cand = beta.clone();
                for (a_idx, &j) in active.iter().enumerate() {
                    cand[j] += t * d[a_idx];
                }
                if on_piece(obj, &cand, active, &sig, &coef_sign)
                    && model_value(obj, &cand, rmode, pmode) <= model.value - 1e-4 * t * dec
                {
                    beta = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            steps += 1;
            if !moved {
                break;
            }
        }
        if !on_piece(obj, &beta, active, &sig, &coef_sign) {
            return None;
        }
    }

    let objective = obj.value(&beta);
    if !objective.is_finite() {
        return None;
    }
    let certificate = min_norm_subgradient(obj, &beta, kink_tol).norm;
    Some(Candidate {
        beta,
        objective,
        certificate,
        steps,
    })
}

/// Residual signs off the zero set and active coefficient signs (classic) or
/// nonzero active blocks (group) are unchanged.
fn on_piece(obj: &AdvObjective<'_>, beta: &DVector<f64>, active: &[usize], sig: &[f64], coef_sign: &[f64]) -> bool {
    let r = obj.data.residuals(beta);
    if sig.iter().zip(r.iter()).any(|(s, ri)| *s * ri < 0.0) {
        return false;
    }
    match &obj.variant {
        Variant::Classic => active.iter().all(|&j| beta[j] * coef_sign[j] > 0.0),
        Variant::Group(g) => {
            let mut mask = vec![false; beta.len()];
            for &j in active {
                mask[j] = true;
            }
            g.groups()
                .iter()
                .filter(|idx| mask[idx[0]])
                .all(|idx| idx.iter().any(|&j| beta[j] != 0.0))
        }
    }
}
