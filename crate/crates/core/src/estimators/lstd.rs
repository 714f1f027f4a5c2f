use super::{Diagnostics, EstimatorId, Transitions, WeightEstimate};
use crate::error::Result;
use crate::linalg::{condition_number, max_abs, pseudo_inverse, solve_vec, Singularity};
use crate::mrp::{FeatureMap, Mrp, StationaryWeights, Trajectory};

/// Solves `ΦᵀW(Φ − γΦ')w = ΦᵀWr`.
pub(crate) fn solve_lstd(t: &Transitions, id: EstimatorId) -> Result<WeightEstimate> {
    let a = t.cross();
    let b = t.reward_moment();
    let (w, condition_number) = solve_vec(&a, &b, Singularity::System)?;
    let residual = max_abs(&(&a * &w - &b));
    WeightEstimate::new(id, w, Diagnostics { condition_number, residual, n_samples: t.n_samples })
}

/// Same system with the pseudo-inverse in place of the inverse.
pub(crate) fn solve_lstd_pinv(t: &Transitions) -> Result<WeightEstimate> {
    let a = t.cross();
    let b = t.reward_moment();
    let w = pseudo_inverse(&a) * &b;
    let residual = max_abs(&(&a * &w - &b));
    WeightEstimate::new(
        EstimatorId::LstdPinv,
        w,
        Diagnostics { condition_number: condition_number(&a), residual, n_samples: t.n_samples },
    )
}

/// `w = (ΦᵀΞ(I − γP)Φ)⁻¹ΦᵀΞr̄`, the fixpoint of the projected Bellman
/// operator.
pub fn lstd_design(mrp: &Mrp, fmap: &FeatureMap, xi: &StationaryWeights) -> Result<WeightEstimate> {
    solve_lstd(&Transitions::from_design(mrp, fmap, xi)?, EstimatorId::LstdDesign)
}

/// `ŵ = (Φ_SᵀDΦ_S)⁻¹Φ_Sᵀr_S` over the observed transitions.
pub fn lstd_sample(traj: &Trajectory, gamma: f64) -> Result<WeightEstimate> {
    solve_lstd(&Transitions::from_trajectory(traj, gamma)?, EstimatorId::LstdSample)
}

/// Design LSTD with a pseudo-inverse; defined for singular systems.
pub fn lstd_pinv_design(mrp: &Mrp, fmap: &FeatureMap, xi: &StationaryWeights) -> Result<WeightEstimate> {
    solve_lstd_pinv(&Transitions::from_design(mrp, fmap, xi)?)
}

/// Sample LSTD with a pseudo-inverse; defined for singular systems.
pub fn lstd_pinv_sample(traj: &Trajectory, gamma: f64) -> Result<WeightEstimate> {
    solve_lstd_pinv(&Transitions::from_trajectory(traj, gamma)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};
    use crate::mrp::{exact_value, stationary_weights, RewardNoise};
    use crate::projections::weighted_projection;
    use crate::LstdError;

    fn m(rows: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, data.len() / rows, data)
    }

    fn two_state() -> Mrp {
        Mrp::new(m(2, &[0.5, 0.5, 0.5, 0.5]), Vector::from_vec(vec![1.0, 0.0]), 0.9).unwrap()
    }

    fn three_state() -> Mrp {
        Mrp::new(
            m(3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]),
            Vector::from_vec(vec![1.0, -2.0, 0.5]),
            0.8,
        )
        .unwrap()
    }

    #[test]
    fn tabular_lstd_is_exact() {
        let mrp = two_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let est = lstd_design(&mrp, &FeatureMap::tabular(2), &xi).unwrap();
        let v = exact_value(&mrp).unwrap();
        assert!((&est.w - &v).amax() < 1e-12);
        assert!((est.w[0] - 5.5).abs() < 1e-12 && (est.w[1] - 4.5).abs() < 1e-12);
        assert_eq!(est.estimator_id, EstimatorId::LstdDesign);
    }

    #[test]
    fn zero_discount_is_weighted_regression() {
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let fmap = FeatureMap::new(m(3, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0])).unwrap();
        let t = Transitions::from_design_with_gamma(&mrp, &fmap, &xi, 0.0).unwrap();
        let w = solve_lstd(&t, EstimatorId::LstdDesign).unwrap().w;
        let c = weighted_projection(fmap.phi(), &xi).unwrap().coefficients(mrp.mean_reward());
        assert!((w - c).amax() < 1e-12);
    }

    #[test]
    fn zero_reward_gives_zero_weights() {
        let mrp = Mrp::new(m(2, &[0.3, 0.7, 0.6, 0.4]), Vector::zeros(2), 0.9).unwrap();
        let xi = stationary_weights(&mrp, None).unwrap();
        let fmap = FeatureMap::new(m(2, &[1.0, 2.0])).unwrap();
        assert_eq!(lstd_design(&mrp, &fmap, &xi).unwrap().w, Vector::zeros(1));
    }

    #[test]
    fn solution_is_projected_fixpoint() {
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let fmap = FeatureMap::new(m(3, &[1.0, 0.2, -0.4, 1.0, 0.9, 0.3])).unwrap();
        let w = lstd_design(&mrp, &fmap, &xi).unwrap().w;
        let pi = weighted_projection(fmap.phi(), &xi).unwrap();
        let value = fmap.phi() * &w;
        let backup = mrp.mean_reward() + mrp.transition() * &value * mrp.discount();
        assert!((pi.apply(&backup) - value).amax() < 1e-9);
    }

    #[test]
    fn census_trajectory_reproduces_design() {
        // Eulerian circuit using each edge of the 3-cycle-with-both-directions
        // chain once, so transition counts are exactly proportional to ξ_s P(s, s').
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let fmap = FeatureMap::new(m(3, &[1.0, 0.2, -0.4, 1.0, 0.9, 0.3])).unwrap();
        let states = vec![0, 1, 2, 0, 2, 1, 0];
        let rewards = Vector::from_iterator(states.len(), states.iter().map(|s| mrp.mean_reward()[*s]));
        let traj = Trajectory::from_states(&fmap, states, rewards, None).unwrap();
        let sample = lstd_sample(&traj, mrp.discount()).unwrap();
        let design = lstd_design(&mrp, &fmap, &xi).unwrap();
        assert!((&sample.w - &design.w).amax() < 1e-8);
        assert_eq!(sample.diagnostics.n_samples, Some(7));

        let tab = FeatureMap::tabular(3);
        let traj = Trajectory::from_states(&tab, traj.states.clone(), traj.rewards.clone(), None).unwrap();
        let sample = lstd_sample(&traj, mrp.discount()).unwrap();
        assert!((&sample.w - exact_value(&mrp).unwrap()).amax() < 1e-8);
    }

    #[test]
    fn zero_rewards_sample() {
        let fmap = FeatureMap::tabular(2);
        let traj = Trajectory::from_states(&fmap, vec![0, 1, 0, 0, 1], Vector::zeros(5), None).unwrap();
        assert_eq!(lstd_sample(&traj, 0.9).unwrap().w, Vector::zeros(2));
    }

    #[test]
    fn too_few_samples_is_singular() {
        let fmap = FeatureMap::tabular(3);
        let traj = Trajectory::from_states(&fmap, vec![0, 1], Vector::zeros(2), None).unwrap();
        assert!(matches!(lstd_sample(&traj, 0.9), Err(LstdError::SingularSystem { .. })));
    }

    #[test]
    fn pinv_matches_reduced_basis_on_duplicated_column() {
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let base = m(3, &[1.0, 0.2, -0.4, 1.0, 0.9, 0.3]);
        let dup = Matrix::from_fn(3, 3, |i, j| base[(i, j.min(1))]);
        let fmap_dup = FeatureMap::new(dup.clone()).unwrap();
        assert!(matches!(lstd_design(&mrp, &fmap_dup, &xi), Err(LstdError::SingularSystem { .. })));
        let pinv = lstd_pinv_design(&mrp, &fmap_dup, &xi).unwrap();
        let reduced = lstd_design(&mrp, &FeatureMap::new(base.clone()).unwrap(), &xi).unwrap();
        assert!((pinv.values(&dup) - reduced.values(&base)).amax() < 1e-8);
    }

    #[test]
    fn pinv_equals_inverse_when_invertible() {
        let mrp = Mrp::with_noise(
            m(2, &[0.5, 0.5, 0.5, 0.5]),
            Vector::from_vec(vec![1.0, 0.0]),
            0.9,
            RewardNoise::Gaussian { std: vec![0.1, 0.1] },
        )
        .unwrap();
        let fmap = FeatureMap::tabular(2);
        let traj = crate::mrp::sample_trajectory(&mrp, &fmap, 500, 4, false).unwrap();
        let a = lstd_sample(&traj, 0.9).unwrap();
        let b = lstd_pinv_sample(&traj, 0.9).unwrap();
        assert!((a.w - b.w).amax() < 1e-10);
    }

    #[test]
    fn pinv_on_zero_features() {
        let mrp = three_state();
        let xi = stationary_weights(&mrp, None).unwrap();
        let fmap = FeatureMap::new(Matrix::zeros(3, 2)).unwrap();
        let est = lstd_pinv_design(&mrp, &fmap, &xi).unwrap();
        assert_eq!(est.w, Vector::zeros(2));
    }
}
