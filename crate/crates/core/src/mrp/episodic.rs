use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampling::StepSampler;
use super::{stationary_distribution, validate_stochastic, FeatureMap, RewardNoise, StateClass, StationaryWeights, Trajectory};
use crate::error::{LstdError, Result};
use crate::linalg::{spectral_radius, Matrix, Vector};

/// A terminating MRP. `transition_t` is `S x (S+1)`; its last column holds
/// the termination probability of each state.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicMrp {
    transition_t: Matrix,
    mean_reward: Vector,
    discount: f64,
    start_state: usize,
    reward_noise: RewardNoise,
}

impl EpisodicMrp {
    pub fn new(transition_t: Matrix, mean_reward: Vector, discount: f64, start_state: usize) -> Result<Self> {
        Self::with_noise(transition_t, mean_reward, discount, start_state, RewardNoise::None)
    }

    pub fn with_noise(
        transition_t: Matrix,
        mean_reward: Vector,
        discount: f64,
        start_state: usize,
        reward_noise: RewardNoise,
    ) -> Result<Self> {
        let s = transition_t.nrows();
        if s == 0 || transition_t.ncols() != s + 1 {
            return Err(LstdError::InvalidMrp(format!(
                "episodic transition must be S x (S+1), got {}x{}",
                s,
                transition_t.ncols()
            )));
        }
        validate_stochastic(&transition_t, "episodic transition")?;
        if mean_reward.len() != s || mean_reward.iter().any(|r| !r.is_finite()) {
            return Err(LstdError::InvalidMrp(format!("mean_reward must hold {s} finite values")));
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(LstdError::InvalidMrp(format!("discount {discount} outside (0, 1]")));
        }
        if start_state >= s {
            return Err(LstdError::InvalidMrp(format!("start state {start_state} out of range")));
        }
        reward_noise.validate(s)?;
        let rho = spectral_radius(&transition_t.columns(0, s).into_owned());
        if rho >= 1.0 - 1e-10 {
            return Err(LstdError::InvalidMrp(format!(
                "termination is not reachable from every state (spectral radius {rho})"
            )));
        }
        Ok(Self { transition_t, mean_reward, discount, start_state, reward_noise })
    }

    pub fn states(&self) -> usize {
        self.transition_t.nrows()
    }

    pub fn transition_t(&self) -> &Matrix {
        &self.transition_t
    }

    /// Transitions among non-terminal states (drops the termination column).
    pub fn transient_block(&self) -> Matrix {
        self.transition_t.columns(0, self.states()).into_owned()
    }

    pub fn termination(&self) -> Vector {
        self.transition_t.column(self.states()).into_owned()
    }

    pub fn mean_reward(&self) -> &Vector {
        &self.mean_reward
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn start_state(&self) -> usize {
        self.start_state
    }

    pub fn reward_noise(&self) -> &RewardNoise {
        &self.reward_noise
    }

    /// Expected discounted return until termination from each state.
    pub fn exact_value(&self) -> Result<Vector> {
        let s = self.states();
        let l = Matrix::identity(s, s) - self.transient_block() * self.discount;
        l.lu()
            .solve(&self.mean_reward)
            .ok_or_else(|| LstdError::Numeric("episodic Bellman solve failed".into()))
    }
}

/// The square chains built from an episodic MRP, over `S+1` states with the
/// termination state last.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicMatrices {
    /// Termination restarts at the start state.
    pub restart: Matrix,
    /// Termination is absorbing.
    pub absorb: Matrix,
    /// Stationary weights of the restart chain.
    pub weights: StationaryWeights,
}

pub fn episodic_matrices(emrp: &EpisodicMrp) -> Result<EpisodicMatrices> {
    let s = emrp.states();
    let mut restart = Matrix::zeros(s + 1, s + 1);
    restart.rows_mut(0, s).copy_from(emrp.transition_t());
    let mut absorb = restart.clone();
    restart[(s, emrp.start_state())] = 1.0;
    absorb[(s, s)] = 1.0;

    let classes = super::recurrent_classes_of(&restart);
    let class = match classes[emrp.start_state()] {
        StateClass::Recurrent(id) => id,
        StateClass::Transient => {
            return Err(LstdError::Numeric("start state is transient in the restart chain".into()))
        }
    };
    let weights = stationary_distribution(&restart, Some(class))?;
    Ok(EpisodicMatrices { restart, absorb, weights })
}

/// A batch of complete episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeBatch {
    pub episodes: Vec<Trajectory>,
}

impl EpisodeBatch {
    pub fn new(episodes: Vec<Trajectory>) -> Result<Self> {
        if episodes.iter().any(Trajectory::is_empty) {
            return Err(LstdError::InvalidArgument("empty episode".into()));
        }
        Ok(Self { episodes })
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Total number of steps over all episodes.
    pub fn steps(&self) -> usize {
        self.episodes.iter().map(Trajectory::len).sum()
    }
}

/// Samples `num_episodes` episodes, each starting at the start state and
/// ending when the termination column is drawn.
pub fn sample_episodes(emrp: &EpisodicMrp, fmap: &FeatureMap, num_episodes: usize, seed: u64) -> Result<EpisodeBatch> {
    fmap.check_states(emrp.states())?;
    let terminal = emrp.states();
    let sampler = StepSampler::new(emrp.transition_t(), emrp.reward_noise())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episodes = Vec::with_capacity(num_episodes);
    for _ in 0..num_episodes {
        let mut states = Vec::new();
        let mut rewards = Vec::new();
        let mut state = emrp.start_state();
        loop {
            states.push(state);
            rewards.push(emrp.mean_reward()[state] + sampler.noise(state, &mut rng));
            state = sampler.next_state(state, &mut rng);
            if state == terminal {
                break;
            }
        }
        episodes.push(Trajectory::from_states(fmap, states, Vector::from_vec(rewards), None)?);
    }
    EpisodeBatch::new(episodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn always_terminating_single_state() {
        let e = EpisodicMrp::new(m(1, &[0.0, 1.0]), Vector::from_vec(vec![1.0]), 1.0, 0).unwrap();
        let mats = episodic_matrices(&e).unwrap();
        assert_eq!(mats.restart, m(2, &[0.0, 1.0, 1.0, 0.0]));
        assert!((mats.weights.weights() - Vector::from_vec(vec![0.5, 0.5])).amax() < 1e-15);
        let batch = sample_episodes(&e, &FeatureMap::tabular(1), 20, 3).unwrap();
        assert!(batch.episodes.iter().all(|ep| ep.len() == 1));
    }

    #[test]
    fn absorbing_row_and_stochasticity() {
        let e = EpisodicMrp::new(
            m(2, &[0.2, 0.5, 0.3, 0.25, 0.25, 0.5]),
            Vector::from_vec(vec![1.0, -1.0]),
            0.9,
            0,
        )
        .unwrap();
        let mats = episodic_matrices(&e).unwrap();
        assert_eq!(mats.absorb.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
        for p in [&mats.restart, &mats.absorb] {
            for row in p.row_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
        // lazy power iteration on the restart chain
        let lazy = (Matrix::identity(3, 3) + &mats.restart) * 0.5;
        let mut x = Vector::from_element(3, 1.0 / 3.0);
        for _ in 0..5000 {
            x = lazy.tr_mul(&x);
        }
        assert!((mats.weights.weights() - &x).amax() < 1e-12);
        assert!(mats.weights.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn unreachable_states_carry_no_weight() {
        // state 1 is never visited from the start state 0
        let e = EpisodicMrp::new(m(2, &[0.5, 0.0, 0.5, 0.0, 0.5, 0.5]), Vector::zeros(2), 0.9, 0).unwrap();
        let w = episodic_matrices(&e).unwrap().weights;
        assert_eq!(w.weights()[1], 0.0);
        assert!(w.weights()[0] > 0.0 && w.weights()[2] > 0.0);
    }

    #[test]
    fn non_terminating_chain_rejected() {
        assert!(EpisodicMrp::new(m(2, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0]), Vector::zeros(2), 0.9, 0).is_err());
    }

    #[test]
    fn geometric_episode_length() {
        let e = EpisodicMrp::new(m(1, &[0.5, 0.5]), Vector::from_vec(vec![1.0]), 1.0, 0).unwrap();
        let fmap = FeatureMap::tabular(1);
        let batch = sample_episodes(&e, &fmap, 10_000, 5).unwrap();
        let mean = batch.steps() as f64 / batch.len() as f64;
        // geometric(1/2) on {1, 2, ...} has mean 2
        assert!((mean - 2.0).abs() < 0.1, "mean length {mean}");
        assert_eq!(batch, sample_episodes(&e, &fmap, 10_000, 5).unwrap());
    }
}
