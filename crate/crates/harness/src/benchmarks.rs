//! Fixed problems used by the shipped configs and the acceptance suite.

use lstd_core::io::{EpisodicDocument, NoiseDocument, ProblemDocument};

/// Two states, uniform transitions, rewards `[1, 0]`, `γ = 0.9`, tabular
/// features and Gaussian reward noise of std 0.1. Exact value `[5.5, 4.5]`.
pub fn two_state() -> ProblemDocument {
    ProblemDocument {
        transition: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        mean_reward: vec![1.0, 0.0],
        discount: 0.9,
        features: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        reward_noise: Some(NoiseDocument::Gaussian { std: vec![0.1, 0.1] }),
        episodic: None,
    }
}

/// Three transient states that terminate with probability 0.1, 0.2 and 0.4,
/// two features, episodes starting in state 0.
pub fn three_state_episodic() -> ProblemDocument {
    ProblemDocument {
        transition: vec![vec![0.2, 0.5, 0.2], vec![0.1, 0.3, 0.4], vec![0.3, 0.1, 0.2]],
        mean_reward: vec![1.0, -0.5, 2.0],
        discount: 0.9,
        features: vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]],
        reward_noise: Some(NoiseDocument::Gaussian { std: vec![0.1, 0.1, 0.1] }),
        episodic: Some(EpisodicDocument { termination: vec![0.1, 0.2, 0.4], start: 0 }),
    }
}
