//! Convergence experiments: every estimator at every sample size and
//! repetition, scored against its design-form counterpart.

use std::time::Instant;

use lstd_core::estimators::{
    bayes_map, brm_design, brm_sample, episodic_lstd, episodic_lstd_design, lds_sample, lstd_design, lstd_pinv_design,
    lstd_pinv_sample, lstd_sample, td_iterate_sample, EstimatorId, TdOptions, Transitions, WeightEstimate,
};
use lstd_core::io::Problem;
use lstd_core::linalg::{weighted_norm, Matrix, Vector};
use lstd_core::mrp::{
    episodic_matrices, exact_value, sample_episodes, sample_trajectory, stationary_weights, EpisodicMrp, FeatureMap,
    Mrp, StationaryWeights, Trajectory,
};
use lstd_core::regularizers::regularized_estimate;
use lstd_core::LstdError;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EstimatorEntry, ExperimentConfig};
use crate::error::{HarnessError, Result};

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub estimator_id: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    /// `‖ŵ − w_design‖∞` against the estimator's design form.
    pub weight_error: f64,
    /// `‖Φŵ − V‖_Ξ` against the exact value.
    pub value_error: f64,
    pub condition_number: f64,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    /// One message per (estimator, N, repetition) that failed numerically.
    pub failures: Vec<String>,
}

enum Model {
    Continuing { mrp: Mrp, xi: StationaryWeights },
    Episodic { emrp: EpisodicMrp },
}

enum Data {
    Trajectory(Trajectory),
    Episodes(lstd_core::mrp::EpisodeBatch),
}

struct Setup {
    model: Model,
    fmap: FeatureMap,
    value: Vector,
    /// State weights of the value-error norm.
    weights: Vector,
    references: Vec<Vector>,
    with_alt: bool,
}

pub fn run_experiment(config: &ExperimentConfig, problem: &Problem) -> Result<ExperimentOutcome> {
    config.validate()?;
    let setup = Setup::new(config, problem)?;

    let tasks: Vec<(usize, usize)> = (0..config.sample_sizes.len())
        .flat_map(|ni| (0..config.repetitions).map(move |rep| (ni, rep)))
        .collect();
    let mut cells: Vec<(usize, usize, usize, std::result::Result<ResultRow, String>)> = tasks
        .par_iter()
        .flat_map_iter(|&(ni, rep)| {
            let n = config.sample_sizes[ni];
            let seed = config.seed.wrapping_add(rep as u64);
            let data = setup.sample(n, seed);
            let setup = &setup;
            config.estimators.iter().enumerate().map(move |(ei, entry)| {
                let row = match &data {
                    Err(e) => Err(e.to_string()),
                    Ok(data) => {
                        let start = Instant::now();
                        setup.estimate(entry, data).map(|est| {
                            let elapsed = start.elapsed().as_secs_f64() * 1e3;
                            setup.score(ei, entry, n, seed, &est, config.timing.then_some(elapsed))
                        })
                        .map_err(|e| e.to_string())
                    }
                };
                let row = row.map_err(|e| format!("{} N={n} seed={seed}: {e}", entry.id()));
                (ei, ni, rep, row)
            })
        })
        .collect();
    cells.sort_by_key(|c| (c.0, c.1, c.2));

    let mut outcome = ExperimentOutcome::default();
    for (_, _, _, row) in cells {
        match row {
            Ok(row) => outcome.rows.push(row),
            Err(msg) => outcome.failures.push(msg),
        }
    }
    Ok(outcome)
}

impl Setup {
    fn new(config: &ExperimentConfig, problem: &Problem) -> Result<Self> {
        let fmap = problem.fmap().clone();
        let episodic = matches!(problem, Problem::Episodic { .. });
        let min_n = if episodic { 1 } else { 2 };
        if config.sample_sizes[0] < min_n {
            return Err(HarnessError::Config(format!("sample_sizes: must be >= {min_n} for this problem")));
        }
        for (i, entry) in config.estimators.iter().enumerate() {
            let id = entry.id();
            let fits = match (episodic, id) {
                (true, EstimatorId::Episodic | EstimatorId::Regularized(_)) => true,
                (true, _) => false,
                (false, id) => id != EstimatorId::Episodic,
            };
            if !fits {
                let kind = if episodic { "an episodic" } else { "a continuing" };
                return Err(HarnessError::Config(format!("estimators[{i}]: {id} does not apply to {kind} problem")));
            }
            if let EstimatorEntry::Regularized(spec) = entry {
                spec.validate(fmap.dim()).map_err(|e| HarnessError::Config(format!("estimators[{i}]: {e}")))?;
            }
        }

        let (model, value, weights) = match problem {
            Problem::Continuing { mrp, .. } => {
                let xi = stationary_weights(mrp, None).map_err(HarnessError::from_core)?;
                let value = exact_value(mrp).map_err(HarnessError::from_core)?;
                let weights = xi.weights().clone();
                (Model::Continuing { mrp: mrp.clone(), xi }, value, weights)
            }
            Problem::Episodic { emrp, .. } => {
                let value = emrp.exact_value().map_err(HarnessError::from_core)?;
                let mats = episodic_matrices(emrp).map_err(HarnessError::from_core)?;
                let weights = mats.weights.weights().rows(0, emrp.states()).into_owned();
                (Model::Episodic { emrp: emrp.clone() }, value, weights)
            }
        };
        let with_alt = config.estimators.iter().any(|e| e.id() == EstimatorId::BrmSample);
        let mut setup = Setup { model, fmap, value, weights, references: Vec::new(), with_alt };
        setup.references = config
            .estimators
            .iter()
            .map(|e| {
                setup
                    .reference(e)
                    .map(|est| est.w)
                    .map_err(|err| HarnessError::Numeric(format!("design form of {}: {err}", e.id())))
            })
            .collect::<Result<_>>()?;
        Ok(setup)
    }

    fn reference(&self, entry: &EstimatorEntry) -> lstd_core::Result<WeightEstimate> {
        match &self.model {
            Model::Continuing { mrp, xi } => match entry {
                EstimatorEntry::Regularized(spec) => {
                    regularized_estimate(&Transitions::from_design(mrp, &self.fmap, xi)?, spec)
                }
                EstimatorEntry::Plain(EstimatorId::BrmDesign | EstimatorId::BrmSample) => {
                    brm_design(mrp, &self.fmap, xi)
                }
                EstimatorEntry::Plain(EstimatorId::LstdPinv) => lstd_pinv_design(mrp, &self.fmap, xi),
                _ => lstd_design(mrp, &self.fmap, xi),
            },
            Model::Episodic { emrp } => match entry {
                EstimatorEntry::Regularized(spec) => {
                    regularized_estimate(&Transitions::from_episodic_design(emrp, &self.fmap)?, spec)
                }
                _ => episodic_lstd_design(emrp, &self.fmap),
            },
        }
    }

    fn sample(&self, n: usize, seed: u64) -> lstd_core::Result<Data> {
        match &self.model {
            Model::Continuing { mrp, .. } => {
                sample_trajectory(mrp, &self.fmap, n, seed, self.with_alt).map(Data::Trajectory)
            }
            Model::Episodic { emrp } => sample_episodes(emrp, &self.fmap, n, seed).map(Data::Episodes),
        }
    }

    fn estimate(&self, entry: &EstimatorEntry, data: &Data) -> std::result::Result<WeightEstimate, LstdError> {
        match (&self.model, data) {
            (Model::Continuing { mrp, xi }, Data::Trajectory(traj)) => {
                let gamma = mrp.discount();
                match entry {
                    EstimatorEntry::Plain(id) => match id {
                        EstimatorId::LstdDesign => lstd_design(mrp, &self.fmap, xi),
                        EstimatorId::BrmDesign => brm_design(mrp, &self.fmap, xi),
                        EstimatorId::LstdSample => lstd_sample(traj, gamma),
                        EstimatorId::LstdPinv => lstd_pinv_sample(traj, gamma),
                        EstimatorId::BrmSample => brm_sample(traj, gamma),
                        EstimatorId::Lds => lds_sample(traj, gamma).map(|m| m.estimate),
                        EstimatorId::TdIterate => {
                            let opts = TdOptions { max_iters: traj.len() - 1, ..Default::default() };
                            td_iterate_sample(traj, gamma, &opts).map(|run| run.estimate)
                        }
                        other => Err(LstdError::Unsupported(format!("{other} on a continuing problem"))),
                    },
                    EstimatorEntry::BayesMap { prior_precision } => {
                        let k = self.fmap.dim();
                        let l = Matrix::identity(k, k) * *prior_precision;
                        bayes_map(traj, gamma, &Matrix::identity(k, k), &l)
                    }
                    EstimatorEntry::Regularized(spec) => {
                        regularized_estimate(&Transitions::from_trajectory(traj, gamma)?, spec)
                    }
                }
            }
            (Model::Episodic { emrp }, Data::Episodes(batch)) => match entry {
                EstimatorEntry::Regularized(spec) => {
                    regularized_estimate(&Transitions::from_episodes(batch, emrp.discount())?, spec)
                }
                _ => episodic_lstd(batch, emrp.discount()),
            },
            _ => unreachable!("data is sampled from the model"),
        }
    }

    fn score(
        &self,
        ei: usize,
        entry: &EstimatorEntry,
        n: usize,
        seed: u64,
        est: &WeightEstimate,
        wall_time_ms: Option<f64>,
    ) -> ResultRow {
        let weight_error = (&est.w - &self.references[ei]).amax();
        let value_error = weighted_norm(&(self.fmap.phi() * &est.w - &self.value), &self.weights);
        ResultRow {
            estimator_id: entry.id().to_string(),
            n,
            seed,
            weight_error,
            value_error,
            condition_number: est.diagnostics.condition_number,
            wall_time_ms,
        }
    }
}
