use crate::error::{LstdError, Result};
use crate::linalg::{scale_rows, Matrix, Vector};
use crate::mrp::{episodic_matrices, EpisodeBatch, EpisodicMrp, FeatureMap, Mrp, StationaryWeights, Trajectory};

/// Weighted rows of `(φ, φ', r)`: the common currency of all estimators.
///
/// Design form: one row per state, weight `ξ_s`, successor row `(PΦ)_s`,
/// reward `r̄_s`. Sample form: one row per observed transition with weight
/// `1/n`. In sample form the last visited state has no observed successor
/// and contributes no row.
#[derive(Debug, Clone, PartialEq)]
pub struct Transitions {
    pub features: Matrix,
    pub next_features: Matrix,
    pub rewards: Vector,
    pub weights: Vector,
    pub gamma: f64,
    /// Number of sampled steps behind the rows; `None` in design form.
    pub n_samples: Option<usize>,
}

impl Transitions {
    pub fn new(
        features: Matrix,
        next_features: Matrix,
        rewards: Vector,
        weights: Vector,
        gamma: f64,
        n_samples: Option<usize>,
    ) -> Result<Self> {
        let n = features.nrows();
        if next_features.shape() != features.shape() || rewards.len() != n || weights.len() != n {
            return Err(LstdError::InvalidArgument("transition rows are not aligned".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(LstdError::InvalidArgument(format!("discount {gamma} outside [0, 1]")));
        }
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(LstdError::InvalidArgument("row weights must be >= 0".into()));
        }
        Ok(Self { features, next_features, rewards, weights, gamma, n_samples })
    }

    pub fn from_design(mrp: &Mrp, fmap: &FeatureMap, xi: &StationaryWeights) -> Result<Self> {
        fmap.check_states(mrp.states())?;
        if xi.states() != mrp.states() {
            return Err(LstdError::InvalidArgument("weights do not match the MRP".into()));
        }
        let phi = fmap.phi().clone();
        let next = mrp.transition() * &phi;
        Self::new(phi, next, mrp.mean_reward().clone(), xi.weights().clone(), mrp.discount(), None)
    }

    /// Same as [`Transitions::from_design`] with a different discount,
    /// including `γ = 0`.
    pub fn from_design_with_gamma(mrp: &Mrp, fmap: &FeatureMap, xi: &StationaryWeights, gamma: f64) -> Result<Self> {
        let mut t = Self::from_design(mrp, fmap, xi)?;
        if !(0.0..=1.0).contains(&gamma) {
            return Err(LstdError::InvalidArgument(format!("discount {gamma} outside [0, 1]")));
        }
        t.gamma = gamma;
        Ok(t)
    }

    /// Rows `i = 0..N-1` pair `φ(s_i)` with `φ(s_{i+1})` and `r_i`.
    pub fn from_trajectory(traj: &Trajectory, gamma: f64) -> Result<Self> {
        let n = traj.len();
        if n < 2 {
            return Err(LstdError::InvalidArgument(format!("trajectory of length {n} has no transition")));
        }
        let k = traj.dim();
        let features = traj.features.rows(0, n - 1).into_owned();
        let next = traj.features.rows(1, n - 1).into_owned();
        let rewards = traj.rewards.rows(0, n - 1).into_owned();
        let weights = Vector::from_element(n - 1, 1.0 / (n - 1) as f64);
        debug_assert_eq!(features.ncols(), k);
        Self::new(features, next, rewards, weights, gamma, Some(n))
    }

    /// Every step of every episode is a row; the successor of the final
    /// step is the termination state, whose feature is zero.
    pub fn from_episodes(batch: &EpisodeBatch, gamma: f64) -> Result<Self> {
        if batch.is_empty() {
            return Err(LstdError::InvalidArgument("no episodes".into()));
        }
        let k = batch.episodes[0].dim();
        if batch.episodes.iter().any(|e| e.dim() != k) {
            return Err(LstdError::InvalidArgument("episodes disagree on feature dimension".into()));
        }
        let total = batch.steps();
        let mut features = Matrix::zeros(total, k);
        let mut next = Matrix::zeros(total, k);
        let mut rewards = Vector::zeros(total);
        let mut row = 0;
        for ep in &batch.episodes {
            let len = ep.len();
            features.rows_mut(row, len).copy_from(&ep.features);
            if len > 1 {
                next.rows_mut(row, len - 1).copy_from(&ep.features.rows(1, len - 1));
            }
            rewards.rows_mut(row, len).copy_from(&ep.rewards);
            row += len;
        }
        let weights = Vector::from_element(total, 1.0 / total as f64);
        Self::new(features, next, rewards, weights, gamma, Some(total))
    }

    /// Design form of an episodic MRP over `S+1` states: the termination
    /// state carries zero feature and zero reward, the dynamics are the
    /// absorbing chain and the weights come from the restarting chain.
    pub fn from_episodic_design(emrp: &EpisodicMrp, fmap: &FeatureMap) -> Result<Self> {
        fmap.check_states(emrp.states())?;
        let s = emrp.states();
        let mats = episodic_matrices(emrp)?;
        let mut phi = Matrix::zeros(s + 1, fmap.dim());
        phi.rows_mut(0, s).copy_from(fmap.phi());
        let mut reward = Vector::zeros(s + 1);
        reward.rows_mut(0, s).copy_from(emrp.mean_reward());
        let next = &mats.absorb * &phi;
        Self::new(phi, next, reward, mats.weights.weights().clone(), emrp.discount(), None)
    }

    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// `ΦᵀWΦ`.
    pub fn gram(&self) -> Matrix {
        scale_rows(&self.features, &self.weights).tr_mul(&self.features)
    }

    /// `ΦᵀWΦ'`.
    pub fn successor_moment(&self) -> Matrix {
        scale_rows(&self.features, &self.weights).tr_mul(&self.next_features)
    }

    /// Rows of `Φ − γΦ'`; in design form this is `(I − γP)Φ`.
    pub fn differences(&self) -> Matrix {
        &self.features - &self.next_features * self.gamma
    }

    /// `ΦᵀW(Φ − γΦ')`, the matrix LSTD inverts.
    pub fn cross(&self) -> Matrix {
        scale_rows(&self.features, &self.weights).tr_mul(&self.differences())
    }

    /// `ΦᵀWr`.
    pub fn reward_moment(&self) -> Vector {
        scale_rows(&self.features, &self.weights).tr_mul(&self.rewards)
    }

    /// Per-row TD errors `r + γφ'w − φw`.
    pub fn td_errors(&self, w: &Vector) -> Vector {
        &self.rewards + &self.next_features * w * self.gamma - &self.features * w
    }

    /// Restricts every row to the listed feature columns.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        Self {
            features: self.features.select_columns(columns),
            next_features: self.next_features.select_columns(columns),
            rewards: self.rewards.clone(),
            weights: self.weights.clone(),
            gamma: self.gamma,
            n_samples: self.n_samples,
        }
    }

    /// Replaces the features by `ΦC` (and `Φ'C`).
    pub fn transform_features(&self, c: &Matrix) -> Result<Self> {
        if c.nrows() != self.dim() {
            return Err(LstdError::InvalidArgument("basis change has the wrong row count".into()));
        }
        Ok(Self {
            features: &self.features * c,
            next_features: &self.next_features * c,
            rewards: self.rewards.clone(),
            weights: self.weights.clone(),
            gamma: self.gamma,
            n_samples: self.n_samples,
        })
    }
}
