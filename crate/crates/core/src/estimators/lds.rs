use super::{Diagnostics, EstimatorId, Transitions, WeightEstimate};
use crate::error::Result;
use crate::linalg::{max_abs, solve_checked, solve_vec, Matrix, Singularity, Vector};
use crate::mrp::{FeatureMap, Mrp, StationaryWeights, Trajectory};

/// Linear model in feature space: one-step dynamics `Φ' ≈ ΦF`, rewards
/// `r ≈ Φq`, and the weights `w = (I − γF)⁻¹q` they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct LdsModel {
    pub f: Matrix,
    pub q: Vector,
    pub gamma: f64,
    pub estimate: WeightEstimate,
}

impl LdsModel {
    /// Truncated series `Σ_{t<=horizon} (γF)ᵗq`.
    pub fn partial_sum(&self, horizon: usize) -> Vector {
        let step = &self.f * self.gamma;
        let mut term = self.q.clone();
        let mut total = term.clone();
        for _ in 0..horizon {
            term = &step * term;
            total += &term;
        }
        total
    }
}

pub(crate) fn fit_lds(t: &Transitions, id: EstimatorId) -> Result<LdsModel> {
    let gram = t.gram();
    let k = t.dim();
    let mut rhs = Matrix::zeros(k, k + 1);
    rhs.columns_mut(0, k).copy_from(&t.successor_moment());
    rhs.set_column(k, &t.reward_moment());
    let (sol, _) = solve_checked(&gram, &rhs, Singularity::Gram)?;
    let f = sol.columns(0, k).into_owned();
    let q = sol.column(k).into_owned();
    let system = Matrix::identity(k, k) - &f * t.gamma;
    let (w, condition_number) = solve_vec(&system, &q, Singularity::System)?;
    let residual = max_abs(&(&system * &w - &q));
    let estimate = WeightEstimate::new(id, w, Diagnostics { condition_number, residual, n_samples: t.n_samples })?;
    Ok(LdsModel { f, q, gamma: t.gamma, estimate })
}

/// `F = (ΦᵀΞΦ)⁻¹ΦᵀΞPΦ`, `q = (ΦᵀΞΦ)⁻¹ΦᵀΞr̄`.
pub fn lds_model(mrp: &Mrp, fmap: &FeatureMap, xi: &StationaryWeights) -> Result<LdsModel> {
    fit_lds(&Transitions::from_design(mrp, fmap, xi)?, EstimatorId::Lds)
}

/// Sample model `F̂ = (Φ_SᵀΦ_S)⁻¹Φ_SᵀNΦ_S` over the observed transitions.
pub fn lds_sample(traj: &Trajectory, gamma: f64) -> Result<LdsModel> {
    fit_lds(&Transitions::from_trajectory(traj, gamma)?, EstimatorId::Lds)
}
