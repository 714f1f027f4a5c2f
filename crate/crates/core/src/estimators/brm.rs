use super::{Diagnostics, EstimatorId, Transitions, WeightEstimate};
use crate::error::{LstdError, Result};
use crate::linalg::{least_squares, max_abs, scale_rows, solve_vec, Singularity};
use crate::mrp::{FeatureMap, Mrp, StationaryWeights, Trajectory};

/// Weighted least squares of `r` on the rows of `Φ − γΦ'`, i.e. the
/// minimizer of `‖TΦw − Φw‖_W` when `Φ'` holds expected successors.
pub(crate) fn solve_brm(t: &Transitions, id: EstimatorId) -> Result<WeightEstimate> {
    let root = t.weights.map(f64::sqrt);
    let psi = scale_rows(&t.differences(), &root);
    let target = t.rewards.component_mul(&root);
    let (w, condition_number) = least_squares(&psi, &target, Singularity::System)?;
    let residual = max_abs(&psi.tr_mul(&(&psi * &w - &target)));
    WeightEstimate::new(id, w, Diagnostics { condition_number, residual, n_samples: t.n_samples })
}

/// `w_B = (ΦᵀLᵀΞLΦ)⁻¹ΦᵀLᵀΞr̄` with `L = I − γP`.
pub fn brm_design(mrp: &Mrp, fmap: &FeatureMap, xi: &StationaryWeights) -> Result<WeightEstimate> {
    solve_brm(&Transitions::from_design(mrp, fmap, xi)?, EstimatorId::BrmDesign)
}

/// Double-sample BRM: solves `(Ψ¹ᵀΨ² + Ψ²ᵀΨ¹)ŵ = (Ψ¹ + Ψ²)ᵀr_S`, where
/// `Ψ¹` uses the realized successors and `Ψ²` the independent alternative
/// successors stored in the trajectory.
pub fn brm_sample(traj: &Trajectory, gamma: f64) -> Result<WeightEstimate> {
    let alt = traj.alt_features.as_ref().ok_or(LstdError::MissingAltSample)?;
    let t = Transitions::from_trajectory(traj, gamma)?;
    let n = t.rows();
    let psi1 = t.differences();
    let psi2 = &t.features - alt.rows(0, n) * gamma;
    let scale = 1.0 / n as f64;
    let m = (psi1.tr_mul(&psi2) + psi2.tr_mul(&psi1)) * scale;
    let rhs = (&psi1 + &psi2).tr_mul(&t.rewards) * scale;
    let (w, condition_number) = solve_vec(&m, &rhs, Singularity::System)?;
    let residual = max_abs(&(&m * &w - &rhs));
    WeightEstimate::new(
        EstimatorId::BrmSample,
        w,
        Diagnostics { condition_number, residual, n_samples: t.n_samples },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::lstd::solve_lstd;
    use crate::linalg::{weighted_norm, Matrix, Vector};
    use crate::mrp::{exact_value, stationary_weights};

    fn m(rows: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, data.len() / rows, data)
    }

    fn three_state() -> Mrp {
        Mrp::new(
            m(3, &[0.1, 0.6, 0.3, 0.4, 0.2, 0.4, 0.5, 0.3, 0.2]),
            Vector::from_vec(vec![1.0, -1.0, 2.0]),
            0.7,
        )
        .unwrap()
    }

    fn bellman_residual(mrp: &Mrp, phi: &Matrix, xi: &Vector, w: &Vector) -> f64 {
        let v = phi * w;
        let backup = mrp.mean_reward() + mrp.transition() * &v * mrp.discount();
        weighted_norm(&(backup - v), xi)
    }

    /// Nested grid search: a 41x41 grid on a box, re-centred on the best
    /// point and shrunk twenty-fold at each refinement.
    fn grid_argmin(f: impl Fn(&Vector) -> f64, half_width: f64, refinements: usize) -> Vector {
        let mut centre = Vector::zeros(2);
        let mut half = half_width;
        for _ in 0..=refinements {
            let mut best = (f64::INFINITY, centre.clone());
            for i in 0..=40 {
                for j in 0..=40 {
                    let p = Vector::from_vec(vec![
                        centre[0] - half + half * i as f64 / 20.0,
                        centre[1] - half + half * j as f64 / 20.0,
                    ]);
                    let val = f(&p);
                    if val < best.0 {
                        best = (val, p);
                    }
                }
            }
            centre = best.1;
            half /= 20.0;
        }
        centre
    }

    #[test]
    fn tabular_brm_is_exact() {
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let est = brm_design(&mrp, &FeatureMap::tabular(3), &xi).unwrap();
        assert!((est.w - exact_value(&mrp).unwrap()).amax() < 1e-12);
    }

    #[test]
    fn zero_discount_matches_lstd() {
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let fmap = FeatureMap::new(m(3, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0])).unwrap();
        let t = Transitions::from_design_with_gamma(&mrp, &fmap, &xi, 0.0).unwrap();
        let b = solve_brm(&t, EstimatorId::BrmDesign).unwrap();
        let l = solve_lstd(&t, EstimatorId::LstdDesign).unwrap();
        assert!((b.w - l.w).amax() < 1e-12);
    }

    #[test]
    fn formula_matches_grid_search() {
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let phi = m(3, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let oracle = grid_argmin(|w| bellman_residual(&mrp, &phi, xi.weights(), w), 20.0, 3);
        let est = brm_design(&mrp, &FeatureMap::new(phi.clone()).unwrap(), &xi).unwrap();
        assert!((&est.w - &oracle).amax() < 1e-3, "{} vs {}", est.w, oracle);
        let best = bellman_residual(&mrp, &phi, xi.weights(), &est.w);
        assert!(best <= bellman_residual(&mrp, &phi, xi.weights(), &oracle) + 1e-12);
    }

    #[test]
    fn oblique_fixpoint_form() {
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let phi = m(3, &[1.0, 0.5, -1.0, 1.0, 0.3, 0.3]);
        let w = brm_design(&mrp, &FeatureMap::new(phi.clone()).unwrap(), &xi).unwrap().w;
        let l = mrp.bellman_matrix();
        let y = xi.diag() * &l * &phi;
        let proj = &phi * (y.tr_mul(&phi)).try_inverse().unwrap() * y.transpose();
        let v = &phi * &w;
        let backup = mrp.mean_reward() + mrp.transition() * &v * mrp.discount();
        assert!((proj * backup - v).amax() < 1e-8);
    }

    #[test]
    fn degenerate_double_sample_is_ols() {
        // deterministic 3-cycle: alternative successor == realized successor
        let fmap = FeatureMap::new(m(3, &[1.0, 0.0, 0.5, 1.0, -1.0, 2.0])).unwrap();
        let states: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let alt: Vec<usize> = (1..13).map(|i| i % 3).collect();
        let rewards = Vector::from_iterator(12, states.iter().map(|s| [1.0, 2.0, -1.0][*s]));
        let traj = Trajectory::from_states(&fmap, states, rewards, Some(alt)).unwrap();
        let est = brm_sample(&traj, 0.6).unwrap();
        let t = Transitions::from_trajectory(&traj, 0.6).unwrap();
        let ols = t.differences().svd(true, true).solve(&t.rewards, 1e-14).unwrap();
        assert!((est.w - ols).amax() < 1e-10);
    }

    #[test]
    fn missing_alt_and_zero_rewards() {
        let fmap = FeatureMap::tabular(2);
        let traj = Trajectory::from_states(&fmap, vec![0, 1, 1, 0], Vector::zeros(4), None).unwrap();
        assert_eq!(brm_sample(&traj, 0.9), Err(LstdError::MissingAltSample));
        let traj =
            Trajectory::from_states(&fmap, vec![0, 1, 1, 0], Vector::zeros(4), Some(vec![1, 1, 0, 0])).unwrap();
        assert_eq!(brm_sample(&traj, 0.9).unwrap().w, Vector::zeros(2));
    }
}
