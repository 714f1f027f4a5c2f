//! Experiment configuration: one strictly validated JSON document.

use std::fs;
use std::path::{Path, PathBuf};

use lstd_core::estimators::EstimatorId;
use lstd_core::io::{Problem, ProblemDocument};
use lstd_core::regularizers::RegularizationSpec;
use lstd_core::verification::{generate_problem, GeneratorSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub estimators: Vec<EstimatorEntry>,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputFormat,
    /// Fill the `wall_time_ms` column. Off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub timing: bool,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    Inline(ProblemDocument),
    /// Relative paths resolve against the config file's directory.
    File(PathBuf),
    Generator(GeneratorSource),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSource {
    pub states: usize,
    pub features: usize,
    #[serde(default)]
    pub transient: usize,
    #[serde(default)]
    pub discount: Option<f64>,
    #[serde(default)]
    pub tabular: bool,
    pub seed: u64,
}

impl GeneratorSource {
    pub fn spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            states: self.states,
            features: self.features,
            transient: self.transient,
            discount: self.discount,
            tabular: self.tabular,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// One estimator to run. Written either as a bare id (`"lstd_sample"`) or
/// as a one-key object carrying parameters:
/// `{"regularized": {"scheme": "l2_fixpoint", "beta": 0.1}}` or
/// `{"bayes_map": {"prior_precision": 1.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub enum EstimatorEntry {
    Plain(EstimatorId),
    Regularized(RegularizationSpec),
    BayesMap { prior_precision: f64 },
}

impl EstimatorEntry {
    pub fn id(&self) -> EstimatorId {
        match self {
            EstimatorEntry::Plain(id) => *id,
            EstimatorEntry::Regularized(spec) => EstimatorId::Regularized(spec.scheme()),
            EstimatorEntry::BayesMap { .. } => EstimatorId::BayesMap,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BayesParams {
    #[serde(default)]
    prior_precision: f64,
}

impl TryFrom<Value> for EstimatorEntry {
    type Error = String;

    fn try_from(value: Value) -> std::result::Result<Self, String> {
        match value {
            Value::String(s) => match s.parse::<EstimatorId>().map_err(|e| e.to_string())? {
                EstimatorId::Regularized(scheme) => Err(format!(
                    "{s:?} needs parameters; write {{\"regularized\": {{\"scheme\": \"{scheme}\", ...}}}}"
                )),
                EstimatorId::BayesMap => Ok(EstimatorEntry::BayesMap { prior_precision: 0.0 }),
                id => Ok(EstimatorEntry::Plain(id)),
            },
            Value::Object(map) if map.len() == 1 => {
                let (key, inner) = map.into_iter().next().expect("one entry");
                match key.as_str() {
                    "regularized" => serde_json::from_value(inner)
                        .map(EstimatorEntry::Regularized)
                        .map_err(|e| format!("regularized: {e}")),
                    "bayes_map" => serde_json::from_value::<BayesParams>(inner)
                        .map(|p| EstimatorEntry::BayesMap { prior_precision: p.prior_precision })
                        .map_err(|e| format!("bayes_map: {e}")),
                    other => Err(format!("unknown parameterized estimator {other:?}")),
                }
            }
            other => Err(format!("expected an estimator id or a one-key object, got {other}")),
        }
    }
}

impl From<EstimatorEntry> for Value {
    fn from(entry: EstimatorEntry) -> Self {
        match entry {
            EstimatorEntry::Plain(id) => Value::String(id.to_string()),
            EstimatorEntry::Regularized(spec) => serde_json::json!({ "regularized": spec }),
            EstimatorEntry::BayesMap { prior_precision } => {
                serde_json::json!({ "bayes_map": { "prior_precision": prior_precision } })
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates. Errors name the line, column and field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            let path = e.path().to_string();
            let at = if path == "." { String::new() } else { format!(" at `{path}`") };
            HarnessError::Config(format!("line {} column {}{at}: {inner}", inner.line(), inner.column()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = Self::from_json(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {}", path.display(), strip(&e))))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    /// Shape checks that need no problem.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.estimators.is_empty() {
            return bad("estimators: list is empty");
        }
        if self.sample_sizes.is_empty() {
            return bad("sample_sizes: list is empty");
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sample_sizes: must be strictly increasing");
        }
        if self.repetitions == 0 {
            return bad("repetitions: must be >= 1");
        }
        if let ProblemSource::Generator(g) = &self.problem {
            g.spec().validate().map_err(|e| HarnessError::Config(format!("problem.generator: {e}")))?;
        }
        for (i, entry) in self.estimators.iter().enumerate() {
            if let EstimatorEntry::BayesMap { prior_precision } = entry {
                if !(prior_precision.is_finite() && *prior_precision >= 0.0) {
                    return Err(HarnessError::Config(format!(
                        "estimators[{i}]: prior_precision must be finite and >= 0"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Materializes the problem, resolving file paths against `base`.
    pub fn load_problem(&self, base: &Path) -> Result<Problem> {
        let doc = match &self.problem {
            ProblemSource::Inline(doc) => doc.clone(),
            ProblemSource::File(path) => {
                let path = base.join(path);
                let text = fs::read_to_string(&path)
                    .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
                ProblemDocument::from_json(&text)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
            }
            ProblemSource::Generator(g) => {
                let inst = generate_problem(&g.spec(), g.seed).map_err(HarnessError::from_core)?;
                inst.document()
            }
        };
        doc.to_problem().map_err(|e| HarnessError::Config(format!("problem: {e}")))
    }
}

fn strip(e: &HarnessError) -> String {
    match e {
        HarnessError::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "problem": {"generator": {"states": 3, "features": 2, "seed": 1}},
        "estimators": ["lstd_sample", {"regularized": {"scheme": "l2_fixpoint", "beta": 0.5}}],
        "sample_sizes": [10, 100],
        "repetitions": 2,
        "seed": 7
    }"#;

    fn config_err(text: &str) -> String {
        match ExperimentConfig::from_json(text) {
            Err(HarnessError::Config(m)) => m,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.output, OutputFormat::Csv);
        assert!(!c.timing);
        assert_eq!(c.estimators[1].id().to_string(), "regularized:l2_fixpoint");
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bare_bayes_has_no_prior() {
        let text = BASE.replace(r#""lstd_sample""#, r#""bayes_map""#);
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.estimators[0], EstimatorEntry::BayesMap { prior_precision: 0.0 });
    }

    #[test]
    fn shape_errors() {
        assert!(config_err(&BASE.replace(r#""lstd_sample", "#, "").replace(
            r#"{"regularized": {"scheme": "l2_fixpoint", "beta": 0.5}}"#,
            ""
        ))
        .contains("empty"));
        assert!(config_err(&BASE.replace("[10, 100]", "[100, 100]")).contains("strictly increasing"));
        assert!(config_err(&BASE.replace(r#""repetitions": 2"#, r#""repetitions": 0"#)).contains(">= 1"));
        assert!(config_err(&BASE.replace(r#""features": 2"#, r#""features": 9"#)).contains("generator"));
    }

    #[test]
    fn errors_carry_location() {
        let m = config_err(&BASE.replace(r#""lstd_sample""#, r#""lstd_fast""#));
        assert!(m.contains("estimators[0]") && m.contains("line 3"), "{m}");
        let m = config_err(&BASE.replace(r#""seed": 7"#, r#""seed": 7, "extra": 1"#));
        assert!(m.contains("extra"), "{m}");
        let m = config_err(&BASE.replace(r#""beta": 0.5"#, r#""rank": 1"#));
        assert!(m.contains("estimators[1]"), "{m}");
        let m = config_err(r#"{"problem": "#);
        assert!(m.contains("line 1"), "{m}");
    }

    #[test]
    fn parameterless_regularized_rejected() {
        let m = config_err(&BASE.replace(r#""lstd_sample""#, r#""regularized:lasso""#));
        assert!(m.contains("needs parameters"), "{m}");
    }
}
