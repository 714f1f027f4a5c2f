//! Weighted orthogonal projections, oblique projections and reduced-rank
//! regression.

use crate::error::{LstdError, Result};
use crate::linalg::{
    condition_number, pseudo_inverse, scale_rows, singular_values, solve_checked, Matrix, Singularity, Vector,
    PINV_RELATIVE_CUTOFF,
};
use crate::mrp::StationaryWeights;

/// `Π = Φ(ΦᵀΞΦ)⁻¹ΦᵀΞ`, the Ξ-orthogonal projector onto the span of Φ.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedProjector {
    pub projector: Matrix,
    pub weights: Vector,
    pub basis: Matrix,
    /// `(ΦᵀΞΦ)⁻¹ΦᵀΞ`, mapping a vector to its projection coefficients.
    pub coefficient_map: Matrix,
    pub gram_condition: f64,
}

impl WeightedProjector {
    pub fn apply(&self, v: &Vector) -> Vector {
        &self.projector * v
    }

    /// Coefficients `c` with `Φc = Πv`.
    pub fn coefficients(&self, v: &Vector) -> Vector {
        &self.coefficient_map * v
    }
}

/// Builds the Ξ-weighted projector onto the columns of `phi`.
pub fn weighted_projection(phi: &Matrix, xi: &StationaryWeights) -> Result<WeightedProjector> {
    weighted_projection_raw(phi, xi.weights())
}

/// Same as [`weighted_projection`] for an arbitrary non-negative weight
/// vector (not necessarily stationary).
pub fn weighted_projection_raw(phi: &Matrix, weights: &Vector) -> Result<WeightedProjector> {
    if phi.nrows() != weights.len() {
        return Err(LstdError::InvalidArgument(format!(
            "basis has {} rows, weights have {}",
            phi.nrows(),
            weights.len()
        )));
    }
    let phi_t_xi = scale_rows(phi, weights).transpose();
    let gram = &phi_t_xi * phi;
    let (coefficient_map, gram_condition) = solve_checked(&gram, &phi_t_xi, Singularity::Gram)?;
    Ok(WeightedProjector {
        projector: phi * &coefficient_map,
        weights: weights.clone(),
        basis: phi.clone(),
        coefficient_map,
        gram_condition,
    })
}

/// `X(YᵀX)⁻¹Yᵀ`: projection onto the column space of X along the
/// orthogonal complement of the column space of Y.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliqueProjector {
    pub projector: Matrix,
    pub onto_basis: Matrix,
    pub orthogonal_to_basis: Matrix,
    /// `(YᵀX)⁻¹Yᵀ` (or its pseudo-inverse variant).
    pub coefficient_map: Matrix,
    pub cross_condition: f64,
}

impl ObliqueProjector {
    pub fn apply(&self, v: &Vector) -> Vector {
        &self.projector * v
    }

    pub fn coefficients(&self, v: &Vector) -> Vector {
        &self.coefficient_map * v
    }
}

pub fn oblique_projection(x_basis: &Matrix, y_basis: &Matrix, use_pinv: bool) -> Result<ObliqueProjector> {
    if x_basis.shape() != y_basis.shape() {
        return Err(LstdError::InvalidArgument(format!(
            "X is {:?} but Y is {:?}",
            x_basis.shape(),
            y_basis.shape()
        )));
    }
    let cross = y_basis.tr_mul(x_basis);
    let y_t = y_basis.transpose();
    let (coefficient_map, cross_condition) = if use_pinv {
        (pseudo_inverse(&cross) * &y_t, condition_number(&cross))
    } else {
        solve_checked(&cross, &y_t, Singularity::Cross)?
    };
    Ok(ObliqueProjector {
        projector: x_basis * &coefficient_map,
        onto_basis: x_basis.clone(),
        orthogonal_to_basis: y_basis.clone(),
        coefficient_map,
        cross_condition,
    })
}

/// Outcome of [`complementarity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complementarity {
    pub complementary: bool,
    /// Smallest singular value of `ΦᵀAᵀBΦ`.
    pub min_singular_value: f64,
    pub max_singular_value: f64,
}

/// Decides whether `C(AΦ)^⊥` and `C(BΦ)` are complementary, which holds
/// iff `ΦᵀAᵀBΦ` has no null vector. The matrix counts as singular when its
/// smallest singular value is at most `1e-12` times its largest.
pub fn complementarity_check(a: &Matrix, b: &Matrix, phi: &Matrix) -> Result<Complementarity> {
    if a.ncols() != phi.nrows() || b.ncols() != phi.nrows() || a.nrows() != b.nrows() {
        return Err(LstdError::InvalidArgument("A, B and Φ are not conformable".into()));
    }
    let m = (a * phi).tr_mul(&(b * phi));
    let s = singular_values(&m);
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    Ok(Complementarity {
        complementary: max > 0.0 && min > PINV_RELATIVE_CUTOFF * max,
        min_singular_value: min,
        max_singular_value: max,
    })
}

/// Result of a (weighted) reduced-rank regression of Y on X.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRankFit {
    /// Rank-constrained coefficients `F_full V_k V_kᵀ`.
    pub f_k: Matrix,
    /// Unconstrained least-squares coefficients.
    pub f_full: Matrix,
    /// Singular values of the full fit `X F_full`, decreasing.
    pub spectrum: Vec<f64>,
    /// Leading right singular vectors of the full fit (columns).
    pub v_k: Matrix,
}

/// `argmin ‖XF − Y‖` subject to `rank(F) ≤ rank_k`, solved in two stages:
/// the full least-squares fit, then SVD truncation of the fitted values.
/// With `weights` the norm is the row-weighted one, handled by scaling rows
/// with `Ξ^{1/2}`.
pub fn reduced_rank_regression(x: &Matrix, y: &Matrix, weights: Option<&Vector>, rank_k: usize) -> Result<ReducedRankFit> {
    if x.nrows() != y.nrows() {
        return Err(LstdError::InvalidArgument(format!(
            "X has {} rows, Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let (xs, ys) = match weights {
        Some(w) => {
            if w.len() != x.nrows() || w.iter().any(|v| *v < 0.0) {
                return Err(LstdError::InvalidArgument("weights must be non-negative, one per row".into()));
            }
            let root = w.map(f64::sqrt);
            (scale_rows(x, &root), scale_rows(y, &root))
        }
        None => (x.clone(), y.clone()),
    };
    let f_full = pseudo_inverse(&xs) * &ys;
    let fitted = &xs * &f_full;
    let cols = y.ncols();
    if fitted.nrows() == 0 || cols == 0 {
        return Ok(ReducedRankFit { f_k: f_full.clone(), f_full, spectrum: Vec::new(), v_k: Matrix::zeros(cols, 0) });
    }
    let d = crate::linalg::svd(&fitted);
    let keep = rank_k.min(d.s.len());
    let v_k = d.v.columns(0, keep).into_owned();
    let spectrum = d.s;
    let f_k = &f_full * &v_k * v_k.transpose();
    Ok(ReducedRankFit { f_k, f_full, spectrum, v_k })
}
