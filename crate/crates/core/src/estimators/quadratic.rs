use serde::{Deserialize, Serialize};

use super::{Diagnostics, EstimatorId, WeightEstimate};
use crate::error::Result;
use crate::linalg::{least_squares, max_abs, max_abs_matrix, scale_rows, Matrix, Singularity};
use crate::mrp::{FeatureMap, Mrp, StationaryWeights};
use crate::projections::weighted_projection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticFormVariant {
    /// `K = LᵀΠᵀΞΠL`.
    Projected,
    /// `K' = LᵀΞΦΦᵀΞL`.
    Original,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub variant: QuadraticFormVariant,
    pub k: Matrix,
    /// Minimizer of `(V − Φw)ᵀK(V − Φw)`.
    pub estimate: WeightEstimate,
    /// `max(|ΞΠ − ΠᵀΞ|, |ΞΠ − ΠᵀΞΠ|)`, zero up to rounding.
    pub identity_residual: f64,
}

/// Builds `K = MᵀM` and minimizes `‖M(V − Φw)‖²` as a least-squares
/// problem in `MΦ`. Since `LV = r̄`, the target `MV` is formed from the
/// rewards without computing `V`.
pub fn quadratic_form_k(
    mrp: &Mrp,
    fmap: &FeatureMap,
    xi: &StationaryWeights,
    variant: QuadraticFormVariant,
) -> Result<QuadraticForm> {
    fmap.check_states(mrp.states())?;
    let phi = fmap.phi();
    let proj = weighted_projection(phi, xi)?;
    let xi_pi = scale_rows(&proj.projector, xi.weights());
    let pi_t_xi = xi_pi.transpose();
    let identity_residual = max_abs_matrix(&(&xi_pi - &pi_t_xi)).max(max_abs_matrix(&(&xi_pi - proj.projector.tr_mul(&xi_pi))));

    let l = mrp.bellman_matrix();
    let (m_left, m_target) = match variant {
        QuadraticFormVariant::Projected => {
            let root = xi.weights().map(f64::sqrt);
            let half = scale_rows(&proj.projector, &root);
            (&half * &l, half * mrp.mean_reward())
        }
        QuadraticFormVariant::Original => {
            let phi_t_xi = scale_rows(phi, xi.weights()).transpose();
            (&phi_t_xi * &l, phi_t_xi * mrp.mean_reward())
        }
    };
    let k = m_left.tr_mul(&m_left);
    let design = &m_left * phi;
    let (w, condition_number) = least_squares(&design, &m_target, Singularity::System)?;
    let residual = max_abs(&design.tr_mul(&(&design * &w - &m_target)));
    let estimate = WeightEstimate::new(
        EstimatorId::LstdDesign,
        w,
        Diagnostics { condition_number, residual, n_samples: None },
    )?;
    Ok(QuadraticForm { variant, k, estimate, identity_residual })
}
