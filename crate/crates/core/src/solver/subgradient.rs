//! Subgradient method with best-iterate tracking and iterate averaging.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{StepRule, Tracker};
use crate::error::{Error, Result};
use crate::objective::AdvObjective;

pub(crate) struct SubgradientOutcome {
    /// Relative change of the best objective over the final window.
    pub window_change: f64,
}

/// Radius of a ball around the origin that contains every minimizer.
///
/// Any minimizer satisfies `δ²·penalty(β)² ≤ f(β) ≤ f(0)`; for `δ = 0` the
/// least-squares norm bound `‖y‖ / σ_min(X)` is used instead.
fn ball_radius(obj: &AdvObjective<'_>) -> f64 {
    let f0 = obj.value(&DVector::zeros(obj.p()));
    if obj.delta > 0.0 {
        // penalty ≥ ‖β‖₂ / max(ω) for the group variant, ‖β‖₂ for classic.
        let wmax = obj
            .variant
            .partition()
            .map(|g| g.weights().iter().copied().fold(0.0, f64::max))
            .unwrap_or(1.0);
        f0.sqrt() / obj.delta * wmax.max(1.0)
    } else {
        let smin = obj.data.x.singular_values().min();
        if smin > 0.0 {
            obj.data.y.norm() / smin
        } else {
            f0.sqrt().max(1.0)
        }
    }
}

fn lipschitz_estimate(obj: &AdvObjective<'_>, radius: f64) -> Result<f64> {
    let p = obj.p();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut lip: f64 = obj.subgradient(&DVector::zeros(p))?.g.norm();
    for _ in 0..8 {
        let u: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        let b = &u * (radius / u.norm().max(1e-300));
        lip = lip.max(obj.subgradient(&b)?.g.norm());
    }
    Ok(lip.max(1e-300))
}

pub(crate) fn run(
    obj: &AdvObjective<'_>,
    beta0: DVector<f64>,
    rule: StepRule,
    window: usize,
    tol_rel_obj: f64,
    tracker: &mut Tracker,
) -> Result<SubgradientOutcome> {
    let radius = ball_radius(obj).max(beta0.norm());
    let lip = lipschitz_estimate(obj, radius)?;
    let c = radius / lip;

    let mut beta = beta0;
    let mut avg = beta.clone();
    let mut weight_sum = 0.0;
    let mut step = c;
    let mut k = 0usize;
    let mut change = f64::INFINITY;
    while !tracker.exhausted() {
        k += 1;
        let sg = obj.subgradient(&beta)?;
        let gnorm = sg.g.norm();
        if !gnorm.is_finite() {
            return Err(Error::NumericalFailure("non-finite subgradient".into()));
        }
        if gnorm == 0.0 {
            change = 0.0;
            break;
        }
        match rule {
            StepRule::Diminishing => {
                let t = c / (k as f64).sqrt();
                beta -= &sg.g * t;
            }
            StepRule::Backtracking => {
                let f = obj.value(&beta);
                let mut moved = false;
                for _ in 0..40 {
                    let cand = &beta - &sg.g * step;
                    if obj.value(&cand) < f {
                        beta = cand;
                        moved = true;
                        step *= 1.5;
                        break;
                    }
                    step *= 0.5;
                }
                if !moved {
                    beta -= &sg.g * (c / (k as f64).sqrt());
                }
            }
        }
        tracker.record(obj, &beta)?;

        // Averaging with weights growing like √k favors late iterates.
        let w = (k as f64).sqrt();
        weight_sum += w;
        avg += (&beta - &avg) * (w / weight_sum);
        if k % window.max(1) == 0 {
            tracker.consider(obj, &avg)?;
            let trace = &tracker.trace;
            if trace.len() > window {
                let old = trace[trace.len() - 1 - window];
                let new = *trace.last().unwrap();
                change = (old - new) / old.abs().max(1e-300);
                if change < tol_rel_obj {
                    break;
                }
            }
        }
    }
    Ok(SubgradientOutcome { window_change: change })
}
