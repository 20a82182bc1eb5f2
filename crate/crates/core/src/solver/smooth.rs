//! Damped Newton on the smoothed objective with a decreasing smoothing
//! parameter.

use nalgebra::DVector;

use super::model::{assemble, model_value, solve_psd, PenaltyModel, ResidualModel};
use super::Tracker;
use crate::error::{Error, Result};
use crate::objective::AdvObjective;

pub(crate) struct SmoothOutcome {
    pub beta: DVector<f64>,
    /// Relative change of the best exact objective over the last stage.
    pub last_stage_change: f64,
    /// Every stage ended on the decrement test rather than a budget.
    pub all_stages_settled: bool,
}

const MAX_NEWTON_PER_STAGE: usize = 60;

pub(crate) fn run(
    obj: &AdvObjective<'_>,
    beta0: DVector<f64>,
    mu_start: f64,
    mu_end: f64,
    mu_factor: f64,
    tracker: &mut Tracker,
) -> Result<SmoothOutcome> {
    let y = &obj.data.y;
    let rms = (y.norm_squared() / y.len() as f64).sqrt();
    let scale = if rms > 0.0 { rms } else { 1.0 };
    let floor = 1e-24 * scale * scale;
    // Objective changes below this level are rounding noise.
    let noise = 1e-16 * scale * scale;

    let mut beta = beta0;
    let mut mu = mu_start;
    let mut settled = true;
    let mut last_change;
    loop {
        let m = mu * scale;
        let stage_start = tracker.best;
        let rmode = ResidualModel::Smoothed(m);
        let pmode = PenaltyModel::Smoothed(m);
        let mut stage_settled = false;
        for _ in 0..MAX_NEWTON_PER_STAGE {
            if tracker.exhausted() {
                break;
            }
            // The objective is non-negative, so nothing is left to gain.
            if tracker.best <= floor {
                stage_settled = true;
                break;
            }
            let model = assemble(obj, &beta, None, rmode, pmode);
            if !model.value.is_finite() {
                return Err(Error::NumericalFailure("non-finite smoothed objective".into()));
            }
            let Some(d) = solve_psd(&model.hess, &(-&model.grad)) else {
                break;
            };
            let dec = -model.grad.dot(&d);
            if !(dec > 1e-15 * model.value.max(m * m).max(floor)) {
                stage_settled = true;
                break;
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let cand = &beta + &d * t;
                let v = model_value(obj, &cand, rmode, pmode);
                if v <= model.value - 1e-4 * t * dec {
                    accepted = Some(cand);
                    break;
                }
                t *= 0.5;
            }
            let Some(next) = accepted else {
                stage_settled = true;
                break;
            };
            beta = next;
            tracker.record(obj, &beta)?;
        }
        settled &= stage_settled;
        last_change = (stage_start - tracker.best) / stage_start.abs().max(noise);
        if tracker.exhausted() {
            settled = false;
            break;
        }
        if mu <= mu_end * (1.0 + 1e-12) {
            break;
        }
        mu = (mu * mu_factor).max(mu_end);
    }
    Ok(SmoothOutcome {
        beta,
        last_stage_change: last_change.max(0.0),
        all_stages_settled: settled,
    })
}
