//! Regularized variants of LSTD: L2 penalties at three placements, a rank
//! constraint on the feature dynamics, PCA compression and greedy feature
//! selection.
//!
//! All schemes act on [`Transitions`], so the same code serves design form
//! (exact model, stationary weights) and sample form (uniform weights over
//! observed transitions). Sample weights sum to one, which keeps `β`
//! comparable across trajectory lengths.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LstdError, Result};
use crate::estimators::{Diagnostics, EstimatorId, Transitions, WeightEstimate};
use crate::linalg::{
    condition_number, least_squares, max_abs, pseudo_inverse, scale_rows, solve_vec, weighted_frobenius, weighted_norm, Matrix,
    Singularity, Vector,
};
use crate::mrp::{FeatureMap, StationaryWeights};
use crate::projections::reduced_rank_regression;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    L2Fixpoint,
    L2GalerkinSystem,
    L2Direct,
    RankConstraint,
    PcaBaseline,
    GreedySelection,
    Lasso,
    Dantzig,
}

const SCHEMES: [(Scheme, &str); 8] = [
    (Scheme::L2Fixpoint, "l2_fixpoint"),
    (Scheme::L2GalerkinSystem, "l2_galerkin_system"),
    (Scheme::L2Direct, "l2_direct"),
    (Scheme::RankConstraint, "rank_constraint"),
    (Scheme::PcaBaseline, "pca_baseline"),
    (Scheme::GreedySelection, "greedy_selection"),
    (Scheme::Lasso, "lasso"),
    (Scheme::Dantzig, "dantzig"),
];

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = SCHEMES.iter().find(|(s, _)| s == self).map(|(_, n)| *n).unwrap_or("?");
        f.write_str(name)
    }
}

impl FromStr for Scheme {
    type Err = LstdError;

    fn from_str(s: &str) -> Result<Self> {
        SCHEMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(scheme, _)| *scheme)
            .ok_or_else(|| LstdError::InvalidArgument(format!("unknown regularization scheme {s:?}")))
    }
}

/// A scheme together with its strength, e.g.
/// `{"scheme":"l2_fixpoint","beta":0.1}` or `{"scheme":"rank_constraint","rank":2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizationSpec {
    L2Fixpoint { beta: f64 },
    L2GalerkinSystem { beta: f64 },
    L2Direct { beta: f64 },
    RankConstraint { rank: usize },
    PcaBaseline { rank: usize },
    GreedySelection { budget: usize },
    Lasso { beta: f64 },
    Dantzig { beta: f64 },
}

impl RegularizationSpec {
    pub fn scheme(&self) -> Scheme {
        match self {
            RegularizationSpec::L2Fixpoint { .. } => Scheme::L2Fixpoint,
            RegularizationSpec::L2GalerkinSystem { .. } => Scheme::L2GalerkinSystem,
            RegularizationSpec::L2Direct { .. } => Scheme::L2Direct,
            RegularizationSpec::RankConstraint { .. } => Scheme::RankConstraint,
            RegularizationSpec::PcaBaseline { .. } => Scheme::PcaBaseline,
            RegularizationSpec::GreedySelection { .. } => Scheme::GreedySelection,
            RegularizationSpec::Lasso { .. } => Scheme::Lasso,
            RegularizationSpec::Dantzig { .. } => Scheme::Dantzig,
        }
    }

    /// The setting at which the scheme leaves LSTD unchanged.
    pub fn neutral(scheme: Scheme, dim: usize) -> Self {
        match scheme {
            Scheme::L2Fixpoint => RegularizationSpec::L2Fixpoint { beta: 0.0 },
            Scheme::L2GalerkinSystem => RegularizationSpec::L2GalerkinSystem { beta: 0.0 },
            Scheme::L2Direct => RegularizationSpec::L2Direct { beta: 0.0 },
            Scheme::RankConstraint => RegularizationSpec::RankConstraint { rank: dim },
            Scheme::PcaBaseline => RegularizationSpec::PcaBaseline { rank: dim },
            Scheme::GreedySelection => RegularizationSpec::GreedySelection { budget: dim },
            Scheme::Lasso => RegularizationSpec::Lasso { beta: 0.0 },
            Scheme::Dantzig => RegularizationSpec::Dantzig { beta: 0.0 },
        }
    }

    /// Checks the strength against a feature dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(LstdError::InvalidArgument(msg));
        match *self {
            RegularizationSpec::L2Fixpoint { beta }
            | RegularizationSpec::L2GalerkinSystem { beta }
            | RegularizationSpec::L2Direct { beta } => {
                if !(beta >= 0.0 && beta.is_finite()) {
                    return bad(format!("beta must be finite and >= 0, got {beta}"));
                }
            }
            RegularizationSpec::RankConstraint { rank } | RegularizationSpec::PcaBaseline { rank } => {
                if rank > dim {
                    return bad(format!("rank {rank} exceeds feature dimension {dim}"));
                }
            }
            RegularizationSpec::GreedySelection { budget } => {
                if budget == 0 || budget > dim {
                    return bad(format!("budget {budget} outside 1..={dim}"));
                }
            }
            RegularizationSpec::Lasso { .. } | RegularizationSpec::Dantzig { .. } => {
                return Err(LstdError::Unsupported(format!("{} needs an external solver", self.scheme())));
            }
        }
        Ok(())
    }
}

/// Runs any scheme and returns weights on the original feature columns.
pub fn regularized_estimate(t: &Transitions, spec: &RegularizationSpec) -> Result<WeightEstimate> {
    spec.validate(t.dim())?;
    match *spec {
        RegularizationSpec::L2Fixpoint { beta } => l2_fixpoint(t, beta),
        RegularizationSpec::L2GalerkinSystem { beta } => l2_galerkin_system(t, beta),
        RegularizationSpec::L2Direct { beta } => l2_direct(t, beta),
        RegularizationSpec::RankConstraint { rank } => Ok(rank_regularized_lds(t, rank)?.estimate),
        RegularizationSpec::PcaBaseline { rank } => pca_fit(t, rank),
        RegularizationSpec::GreedySelection { budget } => Ok(greedy_feature_selection(t, budget)?.estimate),
        RegularizationSpec::Lasso { .. } | RegularizationSpec::Dantzig { .. } => unreachable!("rejected by validate"),
    }
}

fn check_beta(beta: f64) -> Result<()> {
    RegularizationSpec::L2Fixpoint { beta }.validate(0)
}

fn finish(scheme: Scheme, m: &Matrix, rhs: &Vector, n_samples: Option<usize>) -> Result<WeightEstimate> {
    let (w, condition_number) = solve_vec(m, rhs, Singularity::System)?;
    let residual = max_abs(&(m * &w - rhs));
    WeightEstimate::new(EstimatorId::Regularized(scheme), w, Diagnostics { condition_number, residual, n_samples })
}

/// `(A + βI)⁻¹b` with `A = ΦᵀW(Φ − γΦ')`, `b = ΦᵀWr`.
pub fn l2_fixpoint(t: &Transitions, beta: f64) -> Result<WeightEstimate> {
    check_beta(beta)?;
    let k = t.dim();
    finish(Scheme::L2Fixpoint, &(t.cross() + Matrix::identity(k, k) * beta), &t.reward_moment(), t.n_samples)
}

/// Ridge solution of the feature-space system `Φ(I − γF)w ≈ Φq`:
/// `(XᵀWX + βI)⁻¹XᵀWΦq` with `X = Φ(I − γF)`.
pub fn l2_galerkin_system(t: &Transitions, beta: f64) -> Result<WeightEstimate> {
    check_beta(beta)?;
    let k = t.dim();
    let gram = t.gram();
    let mut rhs = Matrix::zeros(k, k + 1);
    rhs.columns_mut(0, k).copy_from(&t.successor_moment());
    rhs.set_column(k, &t.reward_moment());
    let (sol, _) = crate::linalg::solve_checked(&gram, &rhs, Singularity::Gram)?;
    let f = sol.columns(0, k).into_owned();
    let q = sol.column(k).into_owned();
    let x = &t.features * (Matrix::identity(k, k) - f * t.gamma);
    let target = &t.features * q;
    let root = t.weights.map(f64::sqrt);
    let (w, condition_number) = ridge(&scale_rows(&x, &root), &target.component_mul(&root), beta)?;
    let x_t_w = scale_rows(&x, &t.weights).transpose();
    let m = &x_t_w * &x + Matrix::identity(k, k) * beta;
    let residual = max_abs(&(&m * &w - x_t_w * target));
    WeightEstimate::new(
        EstimatorId::Regularized(Scheme::L2GalerkinSystem),
        w,
        Diagnostics { condition_number, residual, n_samples: t.n_samples },
    )
}

/// Least-squares solution of `[X; √βI]w ≈ [y; 0]` and its condition number.
fn ridge(x: &Matrix, y: &Vector, beta: f64) -> Result<(Vector, f64)> {
    let (m, k) = x.shape();
    let mut stacked = Matrix::zeros(m + k, k);
    stacked.rows_mut(0, m).copy_from(x);
    stacked.rows_mut(m, k).copy_from(&(Matrix::identity(k, k) * beta.sqrt()));
    let mut rhs = Vector::zeros(m + k);
    rhs.rows_mut(0, m).copy_from(y);
    least_squares(&stacked, &rhs, Singularity::System)
}

/// Ridge solution of the LSTD equation itself: `(AᵀA + βI)⁻¹Aᵀb`,
/// computed as the least-squares solution of `[A; √βI]w ≈ [b; 0]`.
pub fn l2_direct(t: &Transitions, beta: f64) -> Result<WeightEstimate> {
    check_beta(beta)?;
    let a = t.cross();
    let b = t.reward_moment();
    let (w, condition_number) = ridge(&a, &b, beta)?;
    let residual = max_abs(&(a.tr_mul(&(&a * &w - &b)) + &w * beta));
    WeightEstimate::new(
        EstimatorId::Regularized(Scheme::L2Direct),
        w,
        Diagnostics { condition_number, residual, n_samples: t.n_samples },
    )
}

/// Feature dynamics fitted under `rank(F_k) ≤ k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRegularizedLds {
    pub f_k: Matrix,
    pub q: Vector,
    /// Singular values of `W^{1/2}ΦF`, decreasing.
    pub spectrum: Vec<f64>,
    /// `‖ΦF_k − Φ'‖_W`.
    pub model_residual: f64,
    /// `‖ΦF − Φ'‖_W` for the unconstrained fit.
    pub full_rank_residual: f64,
    pub estimate: WeightEstimate,
}

impl RankRegularizedLds {
    /// `sqrt(‖ΦF − Φ'‖²_W + Σ_{i≥k} s_i²)`, which equals `model_residual`.
    pub fn tail_formula(&self, rank: usize) -> f64 {
        let tail: f64 = self.spectrum.iter().skip(rank).map(|s| s * s).sum();
        (self.full_rank_residual.powi(2) + tail).sqrt()
    }
}

/// Reduced-rank regression of `Φ'` on `Φ` for `F_k`; `q` is the ordinary
/// regression of rewards and is not constrained. `w = (I − γF_k)⁻¹q`.
pub fn rank_regularized_lds(t: &Transitions, rank: usize) -> Result<RankRegularizedLds> {
    RegularizationSpec::RankConstraint { rank }.validate(t.dim())?;
    let k = t.dim();
    let (q, _) = solve_vec(&t.gram(), &t.reward_moment(), Singularity::Gram)?;
    let fit = reduced_rank_regression(&t.features, &t.next_features, Some(&t.weights), rank)?;
    let model_residual = weighted_frobenius(&(&t.features * &fit.f_k - &t.next_features), &t.weights);
    let full_rank_residual = weighted_frobenius(&(&t.features * &fit.f_full - &t.next_features), &t.weights);
    let system = Matrix::identity(k, k) - &fit.f_k * t.gamma;
    let estimate = finish(Scheme::RankConstraint, &system, &q, t.n_samples)?;
    Ok(RankRegularizedLds { f_k: fit.f_k, q, spectrum: fit.spectrum, model_residual, full_rank_residual, estimate })
}

/// `V_kV_kᵀ` from the SVD of `W^{1/2}Φ`; right-multiplying Φ by it keeps
/// the `rank` leading weighted principal directions.
pub fn pca_basis(phi: &Matrix, weights: &Vector, rank: usize) -> Result<Matrix> {
    if phi.nrows() != weights.len() {
        return Err(LstdError::InvalidArgument("weights do not match the feature rows".into()));
    }
    RegularizationSpec::PcaBaseline { rank }.validate(phi.ncols())?;
    let k = phi.ncols();
    if rank == 0 || phi.nrows() == 0 {
        return Ok(Matrix::zeros(k, k));
    }
    let d = crate::linalg::svd(&scale_rows(phi, &weights.map(f64::sqrt)));
    let v = d.v.columns(0, rank.min(d.s.len())).into_owned();
    Ok(&v * v.transpose())
}

/// Compressed features `ΦV_kV_kᵀ`. Depends on Φ and Ξ only.
pub fn pca_baseline(fmap: &FeatureMap, xi: &StationaryWeights, rank: usize) -> Result<FeatureMap> {
    let basis = pca_basis(fmap.phi(), xi.weights(), rank)?;
    FeatureMap::new(fmap.phi() * basis)
}

/// LSTD on PCA-compressed features; the compressed system is rank
/// deficient below full rank, so it is solved with the pseudo-inverse.
pub fn pca_fit(t: &Transitions, rank: usize) -> Result<WeightEstimate> {
    let basis = pca_basis(&t.features, &t.weights, rank)?;
    let c = t.transform_features(&basis)?;
    let a = c.cross();
    let b = c.reward_moment();
    let w = pseudo_inverse(&a) * &b;
    let residual = max_abs(&(&a * &w - &b));
    WeightEstimate::new(
        EstimatorId::Regularized(Scheme::PcaBaseline),
        w,
        Diagnostics { condition_number: condition_number(&a), residual, n_samples: t.n_samples },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedySelection {
    /// Selected columns in order of selection.
    pub columns: Vec<usize>,
    /// Columns that made the system singular and were passed over.
    pub skipped: Vec<usize>,
    /// Weights on all columns, zero off the selection.
    pub estimate: WeightEstimate,
}

/// `|⟨φ_j, δ⟩_W| / ‖φ_j‖_W` for every column; zero columns score 0.
pub fn residual_correlations(t: &Transitions, delta: &Vector) -> Vec<f64> {
    (0..t.dim())
        .map(|j| {
            let col = t.features.column(j).into_owned();
            let norm = weighted_norm(&col, &t.weights);
            if norm > 0.0 {
                (col.component_mul(&t.weights).dot(delta)).abs() / norm
            } else {
                0.0
            }
        })
        .collect()
}

/// Adds, one at a time, the column most correlated with the current TD
/// residual and refits LSTD on the selection.
pub fn greedy_feature_selection(t: &Transitions, budget: usize) -> Result<GreedySelection> {
    RegularizationSpec::GreedySelection { budget }.validate(t.dim())?;
    let mut columns: Vec<usize> = Vec::new();
    let mut skipped = Vec::new();
    let mut w_sel = Vector::zeros(0);
    let mut fit = None;
    while columns.len() < budget {
        let delta = t.select_columns(&columns).td_errors(&w_sel);
        let scores = residual_correlations(t, &delta);
        let mut candidates: Vec<usize> =
            (0..t.dim()).filter(|j| !columns.contains(j) && !skipped.contains(j)).collect();
        candidates.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
        let mut added = false;
        for j in candidates {
            let mut trial = columns.clone();
            trial.push(j);
            let sub = t.select_columns(&trial);
            let a = sub.cross();
            match solve_vec(&a, &sub.reward_moment(), Singularity::System) {
                Ok((w, cond)) => {
                    columns = trial;
                    w_sel = w;
                    fit = Some((cond, max_abs(&(&a * &w_sel - sub.reward_moment()))));
                    added = true;
                    break;
                }
                Err(LstdError::SingularSystem { .. }) => skipped.push(j),
                Err(e) => return Err(e),
            }
        }
        if !added {
            return Err(LstdError::SingularSystem { condition_number: f64::INFINITY });
        }
    }
    let (condition_number, residual) = fit.expect("budget >= 1");
    let mut w = Vector::zeros(t.dim());
    for (pos, &j) in columns.iter().enumerate() {
        w[j] = w_sel[pos];
    }
    let estimate = WeightEstimate::new(
        EstimatorId::Regularized(Scheme::GreedySelection),
        w,
        Diagnostics { condition_number, residual, n_samples: t.n_samples },
    )?;
    Ok(GreedySelection { columns, skipped, estimate })
}
