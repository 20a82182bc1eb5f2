//! Minimization of the dual adversarial objective.
//!
//! Two backends share one interface. The default runs damped Newton on a
//! smoothed objective while driving the smoothing to zero, then refines on
//! the identified active set. The alternative is a plain subgradient method.
//! Either result can be handed to the active-set refinement, and every
//! returned estimate carries a first-order certificate.

mod certificate;
mod model;
mod polish;
mod smooth;
mod subgradient;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use certificate::{min_norm_subgradient, Certificate};

use crate::data::Dataset;
use crate::error::{check_len, Error, Result};
use crate::objective::{AdvObjective, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SmoothedNewton,
    Subgradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `c/√k` with `c` from a Lipschitz estimate on the initial ball.
    Diminishing,
    Backtracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zeros,
    WarmStart(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub tol_rel_obj: f64,
    pub tol_cert: f64,
    pub window: usize,
    pub algorithm: Algorithm,
    pub step_rule: StepRule,
    pub init: Init,
    /// Run the active-set refinement after the main backend.
    pub polish: bool,
    /// Residuals and blocks at most this large count as kinks in the certificate.
    pub kink_tol: f64,
    /// Smoothing schedule, relative to the root-mean-square response.
    pub mu_start: f64,
    pub mu_end: f64,
    pub mu_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            tol_rel_obj: 1e-9,
            tol_cert: 1e-6,
            window: 50,
            algorithm: Algorithm::SmoothedNewton,
            step_rule: StepRule::Diminishing,
            init: Init::Zeros,
            polish: true,
            kink_tol: 1e-9,
            mu_start: 1e-1,
            mu_end: 1e-12,
            mu_factor: 0.1,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        for (name, v) in [
            ("tol_rel_obj", self.tol_rel_obj),
            ("tol_cert", self.tol_cert),
            ("kink_tol", self.kink_tol),
            ("mu_start", self.mu_start),
            ("mu_end", self.mu_end),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.mu_end > self.mu_start {
            return Err(Error::invalid("mu_end must not exceed mu_start"));
        }
        if !(self.mu_factor > 0.0 && self.mu_factor < 1.0) {
            return Err(Error::invalid("mu_factor must lie in (0, 1)"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub objective: f64,
    pub certificate: f64,
    pub iters: usize,
    /// Best objective seen after each iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn beta(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta_hat)
    }
}

/// Iteration bookkeeping shared by the backends.
pub(crate) struct Tracker {
    pub best: f64,
    pub best_beta: DVector<f64>,
    pub trace: Vec<f64>,
    pub iters: usize,
    max_iters: usize,
}

impl Tracker {
    fn new(obj: &AdvObjective<'_>, beta0: &DVector<f64>, max_iters: usize) -> Result<Self> {
        let f = obj.value(beta0);
        if !f.is_finite() {
            return Err(Error::NumericalFailure("objective is not finite at the initial point".into()));
        }
        Ok(Self {
            best: f,
            best_beta: beta0.clone(),
            trace: Vec::new(),
            iters: 0,
            max_iters,
        })
    }

    pub fn exhausted(&self) -> bool {
        self.iters >= self.max_iters
    }

    /// Count one iteration ending at `beta`.
    pub fn record(&mut self, obj: &AdvObjective<'_>, beta: &DVector<f64>) -> Result<()> {
        self.iters += 1;
        self.consider(obj, beta)?;
        self.trace.push(self.best);
        Ok(())
    }

    /// Offer a point for best-iterate tracking without counting an iteration.
    pub fn consider(&mut self, obj: &AdvObjective<'_>, beta: &DVector<f64>) -> Result<()> {
        let f = obj.value(beta);
        if f.is_nan() {
            return Err(Error::NumericalFailure("objective evaluated to NaN".into()));
        }
        if f < self.best {
            self.best = f;
            self.best_beta = beta.clone();
        }
        Ok(())
    }
}

fn initial_point(obj: &AdvObjective<'_>, init: &Init) -> Result<DVector<f64>> {
    match init {
        Init::Zeros => Ok(DVector::zeros(obj.p())),
        Init::WarmStart(v) => {
            check_len("warm start", obj.p(), v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("warm start contains non-finite values"));
            }
            Ok(DVector::from_column_slice(v))
        }
    }
}

/// Minimize the dual objective of `obj`.
pub fn fit(obj: &AdvObjective<'_>, opts: &SolverOptions) -> Result<FitResult> {
    opts.validate()?;
    let mut warnings = Vec::new();
    let ratio = obj.data.max_column_ratio();
    if (ratio - 1.0).abs() > 1e-6 {
        warnings.push(format!(
            "design columns are not normalized to norm √n (largest ratio {ratio:.6})"
        ));
    }
    let beta0 = initial_point(obj, &opts.init)?;
    let mut tracker = Tracker::new(obj, &beta0, opts.max_iters)?;

    let (stalled, end_point) = match opts.algorithm {
        Algorithm::SmoothedNewton => {
            let out = smooth::run(obj, beta0, opts.mu_start, opts.mu_end, opts.mu_factor, &mut tracker)?;
            (
                out.all_stages_settled && out.last_stage_change < opts.tol_rel_obj,
                out.beta,
            )
        }
        Algorithm::Subgradient => {
            let out = subgradient::run(obj, beta0, opts.step_rule, opts.window, opts.tol_rel_obj, &mut tracker)?;
            (out.window_change < opts.tol_rel_obj, tracker.best_beta.clone())
        }
    };

    let mut beta = tracker.best_beta.clone();
    let mut objective = tracker.best;
    let mut certificate = min_norm_subgradient(obj, &beta, opts.kink_tol).norm;

    // The refinement only matters when the certificate is not already far
    // below the threshold.
    if opts.polish && !(certificate < 1e-2 * opts.tol_cert) {
        let slack = 1e-10 * objective.abs().max(1e-300);
        let mut starts = vec![beta.clone()];
        if end_point != beta {
            starts.push(end_point);
        }
        for start in &starts {
            for cand in polish::candidates(obj, start, opts.kink_tol) {
                tracker.iters += cand.steps;
                if cand.objective <= objective + slack && cand.certificate < certificate {
                    beta = cand.beta;
                    objective = cand.objective;
                    certificate = cand.certificate;
                } else if cand.objective < objective - slack {
                    beta = cand.beta;
                    objective = cand.objective;
                    certificate = cand.certificate;
                }
            }
        }
        let best = tracker.best.min(objective);
        tracker.trace.push(best);
    }

    let objective = obj.value(&beta);
    if objective.is_nan() {
        return Err(Error::NumericalFailure("objective evaluated to NaN".into()));
    }
    let converged = stalled && certificate < opts.tol_cert;
    if !converged && tracker.exhausted() {
        warnings.push(format!("iteration budget of {} exhausted", opts.max_iters));
    }
    Ok(FitResult {
        beta_hat: beta.iter().copied().collect(),
        objective,
        certificate,
        iters: tracker.iters,
        trace: tracker.trace,
        converged,
        warnings,
    })
}

/// Exhaustive grid minimization over `[−box_radius, box_radius]^p`, `p ≤ 3`.
pub fn brute_force_fit(obj: &AdvObjective<'_>, box_radius: f64, grid_points_per_dim: usize) -> Result<FitResult> {
    let p = obj.p();
    if p > 3 {
        return Err(Error::Refused(format!("brute force limited to p ≤ 3, got p = {p}")));
    }
    if !(box_radius > 0.0) || grid_points_per_dim < 2 {
        return Err(Error::invalid("need box_radius > 0 and at least 2 grid points per dimension"));
    }
    let m = grid_points_per_dim;
    let step = 2.0 * box_radius / (m - 1) as f64;
    let coord = |k: usize| -box_radius + step * k as f64;
    let total = m.pow(p as u32);
    let mut beta = DVector::zeros(p);
    let mut best = f64::INFINITY;
    let mut best_beta = beta.clone();
    let mut trace = Vec::new();
    for flat in 0..total {
        let mut rem = flat;
        for j in 0..p {
            beta[j] = coord(rem % m);
            rem /= m;
        }
        let f = obj.value(&beta);
        if f < best {
            best = f;
            best_beta.copy_from(&beta);
        }
        if flat % m == m - 1 {
            trace.push(best);
        }
    }
    Ok(FitResult {
        beta_hat: best_beta.iter().copied().collect(),
        objective: best,
        certificate: f64::NAN,
        iters: total,
        trace,
        converged: false,
        warnings: vec!["grid search: no certificate".into()],
    })
}

/// Fits along an ascending grid of δ, warm-starting each fit from the
/// previous estimate.
pub fn coefficient_path(
    data: &Dataset,
    deltas: &[f64],
    variant: &Variant,
    opts: &SolverOptions,
) -> Result<Vec<FitResult>> {
    if deltas.is_empty() {
        return Err(Error::invalid("delta grid is empty"));
    }
    if deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::invalid("path deltas must be strictly positive"));
    }
    if deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("path deltas must be strictly ascending"));
    }
    let mut out: Vec<FitResult> = Vec::with_capacity(deltas.len());
    let mut opts = opts.clone();
    for &delta in deltas {
        let obj = AdvObjective::new(data, delta, variant.clone())?;
        let res = fit(&obj, &opts)?;
        opts.init = Init::WarmStart(res.beta_hat.clone());
        out.push(res);
    }
    Ok(out)
}
