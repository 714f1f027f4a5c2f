use super::lstd::solve_lstd;
use super::{EstimatorId, Transitions, WeightEstimate};
use crate::error::Result;
use crate::mrp::{EpisodeBatch, EpisodicMrp, FeatureMap};

/// LSTD over a batch of episodes. Each episode contributes its own
/// transitions; the last step bootstraps from the zero terminal feature.
pub fn episodic_lstd(batch: &EpisodeBatch, gamma: f64) -> Result<WeightEstimate> {
    solve_lstd(&Transitions::from_episodes(batch, gamma)?, EstimatorId::Episodic)
}

/// Design form on the chain augmented with its termination state, weighted
/// by the stationary distribution of the restarting chain.
pub fn episodic_lstd_design(emrp: &EpisodicMrp, fmap: &FeatureMap) -> Result<WeightEstimate> {
    solve_lstd(&Transitions::from_episodic_design(emrp, fmap)?, EstimatorId::Episodic)
}
