use serde::{Deserialize, Serialize};

use super::{Diagnostics, EstimatorId, Transitions, WeightEstimate};
use crate::error::{LstdError, Result};
use crate::linalg::{condition_number, eigenvalues, singular_values, Matrix, Vector};
use crate::mrp::{FeatureMap, Mrp, StationaryWeights, Trajectory};

/// Step sizes for TD iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant { alpha: f64 },
    /// `α_t = a / (b + t)`.
    Harmonic { a: f64, b: f64 },
    /// Expected-update mode: the largest constant step that still
    /// contracts, `min_λ Re(λ)/|λ|²` over the eigenvalues of the update
    /// matrix. Sample mode: harmonic with `a = 1/min_λ Re(λ)` over the
    /// empirical update matrix and a first step of `1/max‖φ‖²`; falls back
    /// to `1/(10 + t)` when some `Re(λ) <= 0`.
    Auto,
}

impl StepSchedule {
    fn validate(self) -> Result<()> {
        let ok = match self {
            StepSchedule::Constant { alpha } => alpha > 0.0 && alpha.is_finite(),
            StepSchedule::Harmonic { a, b } => a > 0.0 && b >= 0.0 && a.is_finite() && b.is_finite(),
            StepSchedule::Auto => true,
        };
        if ok {
            Ok(())
        } else {
            Err(LstdError::InvalidArgument(format!("invalid step schedule {self:?}")))
        }
    }

    fn sample_step(self, t: usize) -> f64 {
        match self {
            StepSchedule::Constant { alpha } => alpha,
            StepSchedule::Harmonic { a, b } => a / (b + t as f64),
            StepSchedule::Auto => 1.0 / (10.0 + t as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdOptions {
    pub schedule: StepSchedule,
    /// Iterations (expected mode) or single-transition updates (sample mode).
    pub max_iters: usize,
    /// Stop once the weights are provably within `tol` of the fixpoint.
    pub tol: f64,
    pub w0: Option<Vector>,
}

impl Default for TdOptions {
    fn default() -> Self {
        Self { schedule: StepSchedule::Auto, max_iters: 1_000_000, tol: 1e-10, w0: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    /// `‖b − Aw‖₂`, the norm of the expected update direction.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdRun {
    pub estimate: WeightEstimate,
    pub iterations: usize,
    pub converged: bool,
    /// Recorded at iteration 0 and every power of two, plus the last one.
    pub trace: Vec<TracePoint>,
}

fn initial_weights(opts: &TdOptions, k: usize) -> Result<Vector> {
    match &opts.w0 {
        Some(w) if w.len() != k => Err(LstdError::InvalidArgument(format!(
            "initial weights have length {}, expected {k}",
            w.len()
        ))),
        Some(w) => Ok(w.clone()),
        None => Ok(Vector::zeros(k)),
    }
}

fn contracting_step(a: &Matrix) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    let eig = eigenvalues(a).ok_or_else(|| LstdError::Numeric("eigenvalues of the TD update did not converge".into()))?;
    for z in &eig {
        if z.re.is_nan() || z.re <= 0.0 {
            return Err(LstdError::Numeric(format!("expected TD update has eigenvalue {z} with Re <= 0")));
        }
        alpha = alpha.min(z.re / z.norm_sqr());
    }
    Ok(alpha)
}

fn auto_sample_schedule(t: &Transitions, a: &Matrix) -> StepSchedule {
    let Some(eig) = eigenvalues(a) else {
        return StepSchedule::Auto;
    };
    let min_re = eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max_sq = t.features.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max);
    if !(min_re > 0.0 && min_re.is_finite() && max_sq > 0.0) {
        return StepSchedule::Auto;
    }
    let a = 1.0 / min_re;
    StepSchedule::Harmonic { a, b: a * max_sq }
}

fn record(trace: &mut Vec<TracePoint>, iteration: usize, residual: f64) {
    if iteration == 0 || iteration.is_power_of_two() {
        trace.push(TracePoint { iteration, residual });
    }
}

fn roundoff_floor(a: &Matrix, w: &Vector, b: &Vector) -> f64 {
    4.0 * f64::EPSILON * (a.norm() * w.norm() + b.norm())
}

/// Deterministic iteration `w ← w + α(b − Aw)` with `A = ΦᵀW(Φ − γΦ')`,
/// `b = ΦᵀWr`. Stops when `‖b − Aw‖ ≤ tol·σ_min(A)`, which bounds the
/// distance to the LSTD weights by `tol`, or once the residual is down to
/// the round-off level of evaluating `b − Aw`.
pub fn td_iterate_expected(t: &Transitions, opts: &TdOptions) -> Result<TdRun> {
    opts.schedule.validate()?;
    let a = t.cross();
    let b = t.reward_moment();
    let sigma_min = singular_values(&a).last().copied().unwrap_or(0.0);
    if sigma_min.is_nan() || sigma_min <= 0.0 {
        return Err(LstdError::SingularSystem { condition_number: f64::INFINITY });
    }
    let constant = match opts.schedule {
        StepSchedule::Auto => Some(contracting_step(&a)?),
        StepSchedule::Constant { alpha } => Some(alpha),
        StepSchedule::Harmonic { .. } => None,
    };
    let mut w = initial_weights(opts, t.dim())?;
    let mut trace = Vec::new();
    let mut iter = 0;
    loop {
        let dir = &b - &a * &w;
        let residual = dir.norm();
        if !residual.is_finite() {
            return Err(LstdError::Numeric(format!("TD iteration diverged at step {iter}")));
        }
        record(&mut trace, iter, residual);
        if residual <= (opts.tol * sigma_min).max(roundoff_floor(&a, &w, &b)) {
            if trace.last().map(|p| p.iteration) != Some(iter) {
                trace.push(TracePoint { iteration: iter, residual });
            }
            let diagnostics = Diagnostics { condition_number: condition_number(&a), residual, n_samples: t.n_samples };
            return Ok(TdRun {
                estimate: WeightEstimate::new(EstimatorId::TdIterate, w, diagnostics)?,
                iterations: iter,
                converged: true,
                trace,
            });
        }
        if iter == opts.max_iters {
            return Err(LstdError::MaxItersExceeded { iterations: iter, residual });
        }
        let alpha = constant.unwrap_or_else(|| opts.schedule.sample_step(iter));
        w += dir * alpha;
        iter += 1;
    }
}

/// Expected-update TD on the exact model.
pub fn td_iterate_design(mrp: &Mrp, fmap: &FeatureMap, xi: &StationaryWeights, opts: &TdOptions) -> Result<TdRun> {
    td_iterate_expected(&Transitions::from_design(mrp, fmap, xi)?, opts)
}

/// Online TD(0): `w ← w + α_t φ(s_i)δ_i`, cycling through the observed
/// transitions in order for `max_iters` updates. Convergence is reported,
/// never enforced.
pub fn td_iterate_sample(traj: &Trajectory, gamma: f64, opts: &TdOptions) -> Result<TdRun> {
    opts.schedule.validate()?;
    let t = Transitions::from_trajectory(traj, gamma)?;
    let a = t.cross();
    let b = t.reward_moment();
    let mut w = initial_weights(opts, t.dim())?;
    let mut trace = Vec::new();
    let n = t.rows();
    let schedule = match opts.schedule {
        StepSchedule::Auto => auto_sample_schedule(&t, &a),
        other => other,
    };
    for step in 0..opts.max_iters {
        if step == 0 || step.is_power_of_two() {
            record(&mut trace, step, (&b - &a * &w).norm());
        }
        let i = step % n;
        let phi = t.features.row(i);
        let delta = t.rewards[i] + gamma * t.next_features.row(i).dot(&w.transpose()) - phi.dot(&w.transpose());
        w += phi.transpose() * (schedule.sample_step(step) * delta);
        if !w.iter().all(|x| x.is_finite()) {
            return Err(LstdError::Numeric(format!("TD iteration diverged at update {step}")));
        }
    }
    let residual = (&b - &a * &w).norm();
    if trace.last().map(|p| p.iteration) != Some(opts.max_iters) {
        trace.push(TracePoint { iteration: opts.max_iters, residual });
    }
    let sigma_min = singular_values(&a).last().copied().unwrap_or(0.0);
    let diagnostics = Diagnostics { condition_number: condition_number(&a), residual, n_samples: t.n_samples };
    Ok(TdRun {
        estimate: WeightEstimate::new(EstimatorId::TdIterate, w, diagnostics)?,
        iterations: opts.max_iters,
        converged: sigma_min > 0.0 && residual <= opts.tol * sigma_min,
        trace,
    })
}
