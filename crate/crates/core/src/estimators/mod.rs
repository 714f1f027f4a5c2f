//! Value-function estimators in design form (exact model quantities) and
//! sample form (trajectories).
//!
//! Every estimator is expressed over [`Transitions`]: weighted rows of
//! `(feature, successor feature, reward)`. In design form the rows are the
//! states, the weights are the stationary weights and the successor feature
//! is its expectation `PΦ`; in sample form the rows are observed
//! transitions with uniform weights.

mod bayes;
mod brm;
mod episodic;
mod lds;
mod lstd;
mod quadratic;
mod td;
mod transitions;

pub use bayes::bayes_map;
pub use brm::{brm_design, brm_sample};
pub use episodic::{episodic_lstd, episodic_lstd_design};
pub use lds::{lds_model, lds_sample, LdsModel};
pub use lstd::{lstd_design, lstd_pinv_design, lstd_pinv_sample, lstd_sample};
pub use quadratic::{quadratic_form_k, QuadraticForm, QuadraticFormVariant};
pub use td::{td_iterate_design, td_iterate_expected, td_iterate_sample, StepSchedule, TdOptions, TdRun, TracePoint};
pub use transitions::Transitions;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LstdError;
use crate::linalg::Vector;
use crate::regularizers::Scheme;

/// Which estimator produced a [`WeightEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum EstimatorId {
    LstdDesign,
    LstdSample,
    LstdPinv,
    BrmDesign,
    BrmSample,
    Lds,
    TdIterate,
    Episodic,
    BayesMap,
    Regularized(Scheme),
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EstimatorId::LstdDesign => "lstd_design",
            EstimatorId::LstdSample => "lstd_sample",
            EstimatorId::LstdPinv => "lstd_pinv",
            EstimatorId::BrmDesign => "brm_design",
            EstimatorId::BrmSample => "brm_sample",
            EstimatorId::Lds => "lds",
            EstimatorId::TdIterate => "td_iterate",
            EstimatorId::Episodic => "episodic",
            EstimatorId::BayesMap => "bayes_map",
            EstimatorId::Regularized(scheme) => return write!(f, "regularized:{scheme}"),
        };
        f.write_str(name)
    }
}

impl FromStr for EstimatorId {
    type Err = LstdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "lstd_design" => EstimatorId::LstdDesign,
            "lstd_sample" => EstimatorId::LstdSample,
            "lstd_pinv" => EstimatorId::LstdPinv,
            "brm_design" => EstimatorId::BrmDesign,
            "brm_sample" => EstimatorId::BrmSample,
            "lds" => EstimatorId::Lds,
            "td_iterate" => EstimatorId::TdIterate,
            "episodic" => EstimatorId::Episodic,
            "bayes_map" => EstimatorId::BayesMap,
            other => match other.strip_prefix("regularized:") {
                Some(scheme) => EstimatorId::Regularized(scheme.parse()?),
                None => return Err(LstdError::InvalidArgument(format!("unknown estimator id {other:?}"))),
            },
        })
    }
}

impl From<EstimatorId> for String {
    fn from(id: EstimatorId) -> Self {
        id.to_string()
    }
}

impl TryFrom<String> for EstimatorId {
    type Error = LstdError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Conditioning and fit diagnostics attached to every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Condition number of the matrix the estimator solved with.
    pub condition_number: f64,
    /// Max-norm residual of the solved system.
    pub residual: f64,
    /// Trajectory length (or total episode steps) for sample estimators.
    pub n_samples: Option<usize>,
}

/// Coefficient vector plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEstimate {
    pub estimator_id: EstimatorId,
    #[serde(with = "vector_serde")]
    pub w: Vector,
    pub diagnostics: Diagnostics,
}

impl WeightEstimate {
    pub(crate) fn new(estimator_id: EstimatorId, w: Vector, diagnostics: Diagnostics) -> crate::Result<Self> {
        if w.iter().any(|x| !x.is_finite()) {
            return Err(LstdError::Numeric(format!("{estimator_id} produced non-finite weights")));
        }
        Ok(Self { estimator_id, w, diagnostics })
    }

    /// Value vector `Φw` for the feature matrix the estimate was fitted on.
    pub fn values(&self, phi: &crate::linalg::Matrix) -> Vector {
        phi * &self.w
    }
}

pub(crate) mod vector_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Vector;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
