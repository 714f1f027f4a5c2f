use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::{stationary_weights, FeatureMap, Mrp, RewardNoise};
use crate::error::{LstdError, Result};
use crate::linalg::{Matrix, Vector};

/// A sampled trajectory: visited states, their feature rows and the rewards
/// collected when leaving them. `alt_features` row `i`, when present, is the
/// feature of an independent successor draw from `P(·|states[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub features: Matrix,
    pub rewards: Vector,
    pub alt_features: Option<Matrix>,
}

impl Trajectory {
    /// Builds a trajectory from raw parts, checking shapes.
    pub fn new(states: Vec<usize>, features: Matrix, rewards: Vector, alt_features: Option<Matrix>) -> Result<Self> {
        let n = states.len();
        if features.nrows() != n || rewards.len() != n {
            return Err(LstdError::InvalidArgument(format!(
                "trajectory of {n} states has {} feature rows and {} rewards",
                features.nrows(),
                rewards.len()
            )));
        }
        if let Some(alt) = &alt_features {
            if alt.shape() != features.shape() {
                return Err(LstdError::InvalidArgument("alt_features shape differs from features".into()));
            }
        }
        Ok(Self { states, features, rewards, alt_features })
    }

    /// Builds a trajectory whose feature rows are looked up in `fmap`.
    pub fn from_states(
        fmap: &FeatureMap,
        states: Vec<usize>,
        rewards: Vector,
        alt_states: Option<Vec<usize>>,
    ) -> Result<Self> {
        let lookup = |ss: &[usize]| -> Result<Matrix> {
            if let Some(bad) = ss.iter().find(|s| **s >= fmap.states()) {
                return Err(LstdError::InvalidArgument(format!("state {bad} out of range")));
            }
            Ok(Matrix::from_fn(ss.len(), fmap.dim(), |i, j| fmap.phi()[(ss[i], j)]))
        };
        let features = lookup(&states)?;
        let alt = alt_states.map(|a| lookup(&a)).transpose()?;
        Self::new(states, features, rewards, alt)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Sampling options beyond length and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOptions {
    pub length: usize,
    pub seed: u64,
    pub with_alt: bool,
    /// When set, start uniformly at random and discard this many steps
    /// instead of drawing the start state from the stationary weights.
    pub burn_in: Option<usize>,
    /// Recurrent class whose stationary weights seed the start state.
    pub class: Option<usize>,
}

impl TrajectoryOptions {
    pub fn new(length: usize, seed: u64) -> Self {
        Self { length, seed, with_alt: false, burn_in: None, class: None }
    }
}

/// Per-row categorical samplers plus the noise model, shared with the
/// episodic sampler.
pub(crate) struct StepSampler {
    rows: Vec<Option<WeightedIndex<f64>>>,
    noise: NoiseSampler,
}

enum NoiseSampler {
    None,
    Gaussian(Vec<Normal<f64>>),
    Discrete(Vec<(Vec<f64>, WeightedIndex<f64>)>),
}

impl StepSampler {
    pub(crate) fn new(transition: &Matrix, noise: &RewardNoise) -> Result<Self> {
        let rows = transition
            .row_iter()
            .map(|row| WeightedIndex::new(row.iter().copied()).ok())
            .collect();
        let noise = match noise {
            RewardNoise::None => NoiseSampler::None,
            RewardNoise::Gaussian { std } => NoiseSampler::Gaussian(
                std.iter()
                    .map(|s| Normal::new(0.0, *s).map_err(|e| LstdError::InvalidMrp(e.to_string())))
                    .collect::<Result<_>>()?,
            ),
            RewardNoise::Discrete { support } => NoiseSampler::Discrete(
                support
                    .iter()
                    .map(|atoms| {
                        let values = atoms.iter().map(|(v, _)| *v).collect();
                        let index = WeightedIndex::new(atoms.iter().map(|(_, p)| *p))
                            .map_err(|e| LstdError::InvalidMrp(e.to_string()))?;
                        Ok((values, index))
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self { rows, noise })
    }

    pub(crate) fn next_state<R: Rng>(&self, state: usize, rng: &mut R) -> usize {
        self.rows[state]
            .as_ref()
            .expect("validated transition rows carry positive mass")
            .sample(rng)
    }

    pub(crate) fn noise<R: Rng>(&self, state: usize, rng: &mut R) -> f64 {
        match &self.noise {
            NoiseSampler::None => 0.0,
            NoiseSampler::Gaussian(dists) => dists[state].sample(rng),
            NoiseSampler::Discrete(dists) => {
                let (values, index) = &dists[state];
                values[index.sample(rng)]
            }
        }
    }
}

/// Samples `n` steps of the chain starting from the stationary weights.
pub fn sample_trajectory(mrp: &Mrp, fmap: &FeatureMap, n: usize, seed: u64, with_alt: bool) -> Result<Trajectory> {
    let mut options = TrajectoryOptions::new(n, seed);
    options.with_alt = with_alt;
    sample_trajectory_with(mrp, fmap, &options)
}

pub fn sample_trajectory_with(mrp: &Mrp, fmap: &FeatureMap, options: &TrajectoryOptions) -> Result<Trajectory> {
    fmap.check_states(mrp.states())?;
    let n = options.length;
    if n < 2 {
        return Err(LstdError::InvalidArgument(format!("trajectory length {n} < 2")));
    }
    let sampler = StepSampler::new(mrp.transition(), mrp.reward_noise())?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let mut state = match options.burn_in {
        Some(burn_in) => {
            let mut s = rng.random_range(0..mrp.states());
            for _ in 0..burn_in {
                s = sampler.next_state(s, &mut rng);
            }
            s
        }
        None => {
            let xi = stationary_weights(mrp, options.class)?;
            WeightedIndex::new(xi.weights().iter().copied())
                .map_err(|e| LstdError::Numeric(e.to_string()))?
                .sample(&mut rng)
        }
    };

    let mut states = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    let mut alt_states = options.with_alt.then(|| Vec::with_capacity(n));
    for _ in 0..n {
        states.push(state);
        rewards.push(mrp.mean_reward()[state] + sampler.noise(state, &mut rng));
        if let Some(alt) = alt_states.as_mut() {
            alt.push(sampler.next_state(state, &mut rng));
        }
        state = sampler.next_state(state, &mut rng);
    }
    Trajectory::from_states(fmap, states, Vector::from_vec(rewards), alt_states)
}
