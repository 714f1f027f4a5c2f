//! Finite Markov reward processes: model types, exact quantities and
//! trajectory sampling.

mod chain;
mod episodic;
mod sampling;

pub use chain::{
    recurrent_classes, recurrent_classes_of, stationary_distribution, stationary_weights, StateClass,
    StationaryWeights,
};
pub use episodic::{episodic_matrices, sample_episodes, EpisodeBatch, EpisodicMatrices, EpisodicMrp};
pub use sampling::{sample_trajectory, sample_trajectory_with, Trajectory, TrajectoryOptions};

use crate::error::{LstdError, Result};
use crate::linalg::{max_abs, solve_vec, Matrix, Singularity, Vector};

/// Tolerance on row sums of transition matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Zero-mean reward noise added to the mean reward of the departed state.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum RewardNoise {
    #[default]
    None,
    /// Gaussian noise with a per-state standard deviation.
    Gaussian { std: Vec<f64> },
    /// Per-state finite distribution given as `(deviation, probability)` pairs.
    Discrete { support: Vec<Vec<(f64, f64)>> },
}

impl RewardNoise {
    fn validate(&self, states: usize) -> Result<()> {
        match self {
            RewardNoise::None => Ok(()),
            RewardNoise::Gaussian { std } => {
                if std.len() != states {
                    return Err(LstdError::InvalidMrp(format!(
                        "noise std has length {}, expected {states}",
                        std.len()
                    )));
                }
                if std.iter().any(|s| !s.is_finite() || *s < 0.0) {
                    return Err(LstdError::InvalidMrp("noise std must be finite and >= 0".into()));
                }
                Ok(())
            }
            RewardNoise::Discrete { support } => {
                if support.len() != states {
                    return Err(LstdError::InvalidMrp(format!(
                        "discrete noise has {} states, expected {states}",
                        support.len()
                    )));
                }
                for (s, atoms) in support.iter().enumerate() {
                    if atoms.is_empty() {
                        return Err(LstdError::InvalidMrp(format!("state {s}: empty noise support")));
                    }
                    if atoms.iter().any(|(v, p)| !v.is_finite() || p.is_nan() || *p < 0.0) {
                        return Err(LstdError::InvalidMrp(format!("state {s}: bad noise atom")));
                    }
                    let mass: f64 = atoms.iter().map(|(_, p)| p).sum();
                    let mean: f64 = atoms.iter().map(|(v, p)| v * p).sum();
                    if (mass - 1.0).abs() > STOCHASTIC_TOL {
                        return Err(LstdError::InvalidMrp(format!(
                            "state {s}: noise probabilities sum to {mass}"
                        )));
                    }
                    if mean.abs() > 1e-12 * (1.0 + atoms.iter().map(|(v, _)| v.abs()).fold(0.0, f64::max)) {
                        return Err(LstdError::InvalidMrp(format!("state {s}: noise mean is {mean}, not 0")));
                    }
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn validate_stochastic(p: &Matrix, what: &str) -> Result<()> {
    for (i, row) in p.row_iter().enumerate() {
        if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(LstdError::InvalidMrp(format!("{what}: row {i} has a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(LstdError::InvalidMrp(format!("{what}: row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// A finite, discounted Markov reward process. Rewards are attached to the
/// state being left.
#[derive(Debug, Clone, PartialEq)]
pub struct Mrp {
    transition: Matrix,
    mean_reward: Vector,
    discount: f64,
    reward_noise: RewardNoise,
}

impl Mrp {
    pub fn new(transition: Matrix, mean_reward: Vector, discount: f64) -> Result<Self> {
        Self::with_noise(transition, mean_reward, discount, RewardNoise::None)
    }

    pub fn with_noise(
        transition: Matrix,
        mean_reward: Vector,
        discount: f64,
        reward_noise: RewardNoise,
    ) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 || !transition.is_square() {
            return Err(LstdError::InvalidMrp(format!(
                "transition must be a non-empty square matrix, got {}x{}",
                n,
                transition.ncols()
            )));
        }
        validate_stochastic(&transition, "transition")?;
        if mean_reward.len() != n {
            return Err(LstdError::InvalidMrp(format!(
                "mean_reward has length {}, expected {n}",
                mean_reward.len()
            )));
        }
        if mean_reward.iter().any(|r| !r.is_finite()) {
            return Err(LstdError::InvalidMrp("mean_reward must be finite".into()));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(LstdError::InvalidMrp(format!("discount {discount} outside (0, 1)")));
        }
        reward_noise.validate(n)?;
        Ok(Self { transition, mean_reward, discount, reward_noise })
    }

    pub fn states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn mean_reward(&self) -> &Vector {
        &self.mean_reward
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn reward_noise(&self) -> &RewardNoise {
        &self.reward_noise
    }

    /// Same dynamics and rewards under a different discount. Used by checks
    /// that sweep the discount; `discount` must lie in (0, 1).
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::with_noise(self.transition.clone(), self.mean_reward.clone(), discount, self.reward_noise.clone())
    }

    /// `I - γP`.
    pub fn bellman_matrix(&self) -> Matrix {
        Matrix::identity(self.states(), self.states()) - &self.transition * self.discount
    }
}

/// Solves `(I - γP) V = r̄`.
pub fn exact_value(mrp: &Mrp) -> Result<Vector> {
    let l = mrp.bellman_matrix();
    let (v, _) = solve_vec(&l, mrp.mean_reward(), Singularity::System)
        .map_err(|e| LstdError::Numeric(format!("Bellman solve failed: {e}")))?;
    let residual = max_abs(&(&l * &v - mrp.mean_reward()));
    if residual > 1e-10 * (1.0 + max_abs(mrp.mean_reward())) {
        return Err(LstdError::Numeric(format!("Bellman residual {residual:.3e} too large")));
    }
    Ok(v)
}

/// Feature design matrix, one row per state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    phi: Matrix,
}

impl FeatureMap {
    pub fn new(phi: Matrix) -> Result<Self> {
        if phi.nrows() == 0 {
            return Err(LstdError::InvalidFeatures("feature matrix has no rows".into()));
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(LstdError::InvalidFeatures("features must be finite".into()));
        }
        Ok(Self { phi })
    }

    /// Identity features (one indicator per state).
    pub fn tabular(states: usize) -> Self {
        Self { phi: Matrix::identity(states, states) }
    }

    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    pub fn states(&self) -> usize {
        self.phi.nrows()
    }

    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub(crate) fn check_states(&self, states: usize) -> Result<()> {
        if self.states() != states {
            return Err(LstdError::InvalidFeatures(format!(
                "feature map has {} rows, MRP has {states} states",
                self.states()
            )));
        }
        Ok(())
    }
}
