//! JSON documents describing a problem: an MRP (continuing or episodic)
//! together with its feature matrix.
//!
//! ```json
//! {"transition": [[0.5, 0.5], [0.5, 0.5]], "mean_reward": [1, 0], "discount": 0.9,
//!  "features": [[1, 0], [0, 1]],
//!  "reward_noise": {"kind": "gaussian", "std": [0.1, 0.1]},
//!  "episodic": {"termination": [0.1, 0.2], "start": 0}}
//! ```
//!
//! In an episodic document `transition` holds the moves between
//! non-terminal states and `termination` the missing mass of each row.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{LstdError, Result};
use crate::linalg::{Matrix, Vector};
use crate::mrp::{EpisodicMrp, FeatureMap, Mrp, RewardNoise};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseDocument {
    None,
    Gaussian { std: Vec<f64> },
    /// Per state, a list of `[deviation, probability]` pairs.
    Discrete { support: Vec<Vec<(f64, f64)>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodicDocument {
    pub termination: Vec<f64>,
    #[serde(default)]
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub transition: Vec<Vec<f64>>,
    pub mean_reward: Vec<f64>,
    pub discount: f64,
    pub features: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_noise: Option<NoiseDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episodic: Option<EpisodicDocument>,
}

/// A validated problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Continuing { mrp: Mrp, fmap: FeatureMap },
    Episodic { emrp: EpisodicMrp, fmap: FeatureMap },
}

impl Problem {
    pub fn fmap(&self) -> &FeatureMap {
        match self {
            Problem::Continuing { fmap, .. } | Problem::Episodic { fmap, .. } => fmap,
        }
    }

    pub fn discount(&self) -> f64 {
        match self {
            Problem::Continuing { mrp, .. } => mrp.discount(),
            Problem::Episodic { emrp, .. } => emrp.discount(),
        }
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], field: &str) -> Result<Matrix> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != k) {
        return Err(LstdError::Document(format!("{field}: rows have different lengths")));
    }
    Ok(Matrix::from_fn(n, k, |i, j| rows[i][j]))
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn noise_from(doc: &Option<NoiseDocument>) -> RewardNoise {
    match doc {
        None | Some(NoiseDocument::None) => RewardNoise::None,
        Some(NoiseDocument::Gaussian { std }) => RewardNoise::Gaussian { std: std.clone() },
        Some(NoiseDocument::Discrete { support }) => RewardNoise::Discrete { support: support.clone() },
    }
}

fn noise_doc(noise: &RewardNoise) -> Option<NoiseDocument> {
    match noise {
        RewardNoise::None => None,
        RewardNoise::Gaussian { std } => Some(NoiseDocument::Gaussian { std: std.clone() }),
        RewardNoise::Discrete { support } => Some(NoiseDocument::Discrete { support: support.clone() }),
    }
}

impl ProblemDocument {
    pub fn from_mrp(mrp: &Mrp, fmap: &FeatureMap) -> Self {
        Self {
            transition: rows_of(mrp.transition()),
            mean_reward: mrp.mean_reward().iter().copied().collect(),
            discount: mrp.discount(),
            features: rows_of(fmap.phi()),
            reward_noise: noise_doc(mrp.reward_noise()),
            episodic: None,
        }
    }

    pub fn from_episodic(emrp: &EpisodicMrp, fmap: &FeatureMap) -> Self {
        Self {
            transition: rows_of(&emrp.transient_block()),
            mean_reward: emrp.mean_reward().iter().copied().collect(),
            discount: emrp.discount(),
            features: rows_of(fmap.phi()),
            reward_noise: noise_doc(emrp.reward_noise()),
            episodic: Some(EpisodicDocument {
                termination: emrp.termination().iter().copied().collect(),
                start: emrp.start_state(),
            }),
        }
    }

    pub fn from_problem(problem: &Problem) -> Self {
        match problem {
            Problem::Continuing { mrp, fmap } => Self::from_mrp(mrp, fmap),
            Problem::Episodic { emrp, fmap } => Self::from_episodic(emrp, fmap),
        }
    }

    /// Validates the document into a problem.
    pub fn to_problem(&self) -> Result<Problem> {
        let p = matrix_from_rows(&self.transition, "transition")?;
        let s = p.nrows();
        let fmap = FeatureMap::new(matrix_from_rows(&self.features, "features")?)?;
        if fmap.states() != s {
            return Err(LstdError::Document(format!(
                "features have {} rows but the chain has {s} states",
                fmap.states()
            )));
        }
        let reward = Vector::from_vec(self.mean_reward.clone());
        let noise = noise_from(&self.reward_noise);
        match &self.episodic {
            None => Ok(Problem::Continuing { mrp: Mrp::with_noise(p, reward, self.discount, noise)?, fmap }),
            Some(ep) => {
                if ep.termination.len() != s {
                    return Err(LstdError::Document(format!(
                        "termination has length {}, expected {s}",
                        ep.termination.len()
                    )));
                }
                let mut pt = Matrix::zeros(s, s + 1);
                pt.columns_mut(0, s).copy_from(&p);
                pt.set_column(s, &Vector::from_vec(ep.termination.clone()));
                let emrp = EpisodicMrp::with_noise(pt, reward, self.discount, ep.start, noise)?;
                Ok(Problem::Episodic { emrp, fmap })
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LstdError::Document(e.to_string()))
    }

    /// Pretty JSON with every float printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

/// Pretty printing, floats in `{:.16e}` form so they round-trip exactly.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes any value as pretty JSON with full-precision floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_STATE: &str = r#"{
        "transition": [[0.5, 0.5], [0.5, 0.5]],
        "mean_reward": [1, 0],
        "discount": 0.9,
        "features": [[1, 0], [0, 1]],
        "reward_noise": {"kind": "gaussian", "std": [0.1, 0.1]}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let doc = ProblemDocument::from_json(TWO_STATE).unwrap();
        let problem = doc.to_problem().unwrap();
        let Problem::Continuing { mrp, fmap } = &problem else { panic!("continuing expected") };
        assert_eq!(mrp.reward_noise(), &RewardNoise::Gaussian { std: vec![0.1, 0.1] });
        assert_eq!(fmap.dim(), 2);
        let text = ProblemDocument::from_problem(&problem).to_json();
        assert!(text.contains("9.0000000000000002e-1"));
        let back = ProblemDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn floats_round_trip_bit_exactly() {
        let values = [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, -123456.789, 0.0];
        let text = to_json_string(&values.to_vec());
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn episodic_document() {
        let text = r#"{"transition": [[0.0, 0.5], [0.0, 0.0]], "mean_reward": [1, 2], "discount": 1.0,
            "features": [[1], [1]], "episodic": {"termination": [0.5, 1.0], "start": 0}}"#;
        let doc = ProblemDocument::from_json(text).unwrap();
        let Problem::Episodic { emrp, .. } = doc.to_problem().unwrap() else { panic!("episodic expected") };
        assert_eq!(emrp.termination(), Vector::from_vec(vec![0.5, 1.0]));
        assert_eq!(ProblemDocument::from_episodic(&emrp, &FeatureMap::new(Matrix::from_element(2, 1, 1.0)).unwrap()), doc);
    }

    #[test]
    fn invalid_documents_rejected() {
        let bad = [
            r#"{"transition": [[0.5, 0.4], [0.5, 0.5]], "mean_reward": [1, 0], "discount": 0.9, "features": [[1], [1]]}"#,
            r#"{"transition": [[1.0]], "mean_reward": [1], "discount": 0.9, "features": [[1], [1]]}"#,
            r#"{"transition": [[1.0]], "mean_reward": [1], "discount": 0.9, "features": [[1]], "extra": 1}"#,
            r#"{"transition": [[1.0]], "mean_reward": [1], "discount": 1.0, "features": [[1]]}"#,
            r#"{"transition": [[1.0, 0.0], [1.0]], "mean_reward": [1, 1], "discount": 0.5, "features": [[1], [1]]}"#,
        ];
        for text in bad {
            let parsed = ProblemDocument::from_json(text).and_then(|d| d.to_problem());
            assert!(parsed.is_err(), "{text}");
        }
    }
}
