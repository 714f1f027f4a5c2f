use super::{Diagnostics, EstimatorId, Transitions, WeightEstimate};
use crate::error::{LstdError, Result};
use crate::linalg::{max_abs, max_abs_matrix, solve_vec, Matrix, Singularity};
use crate::mrp::Trajectory;

/// MAP estimate under a Gaussian prior with precision `l_prior`: minimizes
/// `‖r_S − DΦ_S w‖²_{Φ_S G Φ_Sᵀ} + ‖w‖²_L`, i.e. solves
/// `(AᵀGA + L)w = AᵀGb` with `A = Φ_SᵀDΦ_S`, `b = Φ_Sᵀr_S`.
pub fn bayes_map(traj: &Trajectory, gamma: f64, g: &Matrix, l_prior: &Matrix) -> Result<WeightEstimate> {
    let t = Transitions::from_trajectory(traj, gamma)?;
    let k = t.dim();
    for (name, mat) in [("G", g), ("L", l_prior)] {
        if mat.shape() != (k, k) {
            return Err(LstdError::InvalidArgument(format!("{name} must be {k}x{k}")));
        }
        if max_abs_matrix(&(mat - mat.transpose())) > 1e-12 * max_abs_matrix(mat).max(1.0) {
            return Err(LstdError::InvalidArgument(format!("{name} must be symmetric")));
        }
    }
    // unnormalized sums, so the prior precision keeps its scale
    let scale = t.rows() as f64;
    let a = t.cross() * scale;
    let b = t.reward_moment() * scale;
    let at_g = a.tr_mul(g);
    let system = &at_g * &a + l_prior;
    let rhs = at_g * b;
    let (w, condition_number) = solve_vec(&system, &rhs, Singularity::System)?;
    let residual = max_abs(&(&system * &w - &rhs));
    WeightEstimate::new(EstimatorId::BayesMap, w, Diagnostics { condition_number, residual, n_samples: t.n_samples })
}
