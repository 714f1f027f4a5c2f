//! Dense linear-algebra helpers shared by every module.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{LstdError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// 2-norm condition number above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Relative cutoff for singular values in the pseudo-inverse.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// Thin SVD `A = U diag(s) Vᵀ`, singular values in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        us * self.v.transpose()
    }

    /// Reconstruction plus orthogonality defect, relative to `‖A‖_F`.
    fn defect(&self, a: &Matrix) -> f64 {
        let scale = a.norm().max(f64::MIN_POSITIVE);
        let recon = (self.reconstruct() - a).norm() / scale;
        let r = self.s.len();
        let v_orth = (self.v.transpose() * &self.v - Matrix::identity(r, r)).amax();
        let s_max = self.s.first().copied().unwrap_or(0.0);
        let live: Vec<usize> = (0..r).filter(|&j| self.s[j] > 1e-10 * s_max).collect();
        let u_live = self.u.select_columns(live.iter());
        let u_orth = if live.is_empty() {
            0.0
        } else {
            (u_live.transpose() * &u_live - Matrix::identity(live.len(), live.len())).amax()
        };
        recon.max(v_orth).max(u_orth)
    }
}

/// nalgebra's SVD, sorted into decreasing order.
fn raw_svd(a: &Matrix) -> Svd {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    Svd {
        u: u.select_columns(order.iter()),
        s: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v: v_t.select_rows(order.iter()).transpose(),
    }
}

/// SVDs of a tall matrix through its R factor, factoring R and Rᵀ.
fn qr_svds(a: &Matrix) -> [Svd; 2] {
    let qr = a.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let direct = raw_svd(&r);
    let flipped = raw_svd(&r.transpose());
    [
        Svd { u: &q * direct.u, s: direct.s, v: direct.v },
        Svd { u: &q * flipped.v, s: flipped.s, v: flipped.u },
    ]
}

const SVD_TOLERANCE: f64 = 1e-13;

/// Thin SVD. nalgebra's bidiagonal iteration occasionally returns
/// inaccurate singular values on rank-deficient input, so several
/// routes are tried and the first one that reconstructs `A` with
/// orthonormal factors wins.
pub fn svd(a: &Matrix) -> Svd {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Svd { u: Matrix::zeros(m, 0), s: Vec::new(), v: Matrix::zeros(n, 0) };
    }
    if m < n {
        let t = svd(&a.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let [direct, flipped] = qr_svds(a);
    let mut best: Option<(f64, Svd)> = None;
    for cand in [direct, flipped, raw_svd(a)] {
        let d = cand.defect(a);
        if d <= SVD_TOLERANCE {
            return cand;
        }
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, cand));
        }
    }
    best.expect("at least one route").1
}

/// Singular values in decreasing order.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    svd(a).s
}

/// 2-norm condition number `s_max / s_min`; infinite when the smallest
/// singular value is zero or the matrix is empty.
pub fn condition_number(a: &Matrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        _ => f64::INFINITY,
    }
}

/// Which error to raise when a solve hits a singular matrix.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Singularity {
    Gram,
    Cross,
    System,
}

impl Singularity {
    fn error(self, condition_number: f64) -> LstdError {
        match self {
            Singularity::Gram => LstdError::SingularGram { condition_number },
            Singularity::Cross => LstdError::SingularCross { condition_number },
            Singularity::System => LstdError::SingularSystem { condition_number },
        }
    }
}

/// Factorized solve of `a x = b` for a square `a`, refusing matrices whose
/// condition number exceeds [`SINGULAR_CONDITION`]. Returns the solution and
/// the condition number.
pub(crate) fn solve_checked(a: &Matrix, b: &Matrix, kind: Singularity) -> Result<(Matrix, f64)> {
    debug_assert!(a.is_square());
    let cond = condition_number(a);
    if cond.is_nan() || cond > SINGULAR_CONDITION {
        return Err(kind.error(cond));
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| kind.error(cond))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LstdError::Numeric("non-finite solution".into()));
    }
    Ok((x, cond))
}

pub(crate) fn solve_vec(a: &Matrix, b: &Vector, kind: Singularity) -> Result<(Vector, f64)> {
    let rhs = Matrix::from_column_slice(b.len(), 1, b.as_slice());
    let (x, cond) = solve_checked(a, &rhs, kind)?;
    Ok((x.column(0).into_owned(), cond))
}

/// Least-squares solution of `a x ≈ b` for a tall matrix through its QR
/// factorization. Refuses rank-deficient `a` (condition number above
/// [`SINGULAR_CONDITION`]).
pub(crate) fn least_squares(a: &Matrix, b: &Vector, kind: Singularity) -> Result<(Vector, f64)> {
    let cond = condition_number(a);
    if cond.is_nan() || cond > SINGULAR_CONDITION || a.nrows() < a.ncols() {
        return Err(kind.error(cond));
    }
    let qr = a.clone().qr();
    let rhs = qr.q().tr_mul(b);
    let x = qr.r().solve_upper_triangular(&rhs).ok_or_else(|| kind.error(cond))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LstdError::Numeric("non-finite solution".into()));
    }
    Ok((x, cond))
}

/// Moore-Penrose pseudo-inverse through the SVD; singular values below
/// `PINV_RELATIVE_CUTOFF * s_max` count as zero.
pub fn pseudo_inverse(a: &Matrix) -> Matrix {
    let s_max = singular_values(a).first().copied().unwrap_or(0.0);
    pseudo_inverse_with_cutoff(a, PINV_RELATIVE_CUTOFF * s_max)
}

/// Pseudo-inverse treating singular values `<= cutoff` as zero.
pub fn pseudo_inverse_with_cutoff(a: &Matrix, cutoff: f64) -> Matrix {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Matrix::zeros(n, m);
    }
    let d = svd(a);
    let mut out = Matrix::zeros(n, m);
    for (i, &s) in d.s.iter().enumerate() {
        if s > cutoff {
            out += (d.v.column(i) * d.u.column(i).transpose()) / s;
        }
    }
    out
}

/// Largest modulus among the (complex) eigenvalues of a square matrix.
pub fn spectral_radius(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    match eigenvalues(a) {
        Some(eig) => eig.iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_radius(a),
    }
}

/// Eigenvalues through a Schur decomposition with a bounded iteration
/// count; `None` if the QR iteration does not settle.
pub fn eigenvalues(a: &Matrix) -> Option<Vec<Complex<f64>>> {
    let schur = a.clone().try_schur(f64::EPSILON, 10_000)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// `lim ‖A^n‖^{1/n}` by repeated normalized squaring.
fn gelfand_radius(a: &Matrix) -> f64 {
    let mut b = a.clone();
    let mut log_scale = 0.0;
    let mut n = 1.0;
    for _ in 0..60 {
        let norm = b.norm();
        if norm == 0.0 {
            return 0.0;
        }
        b /= norm;
        log_scale += norm.ln() / n;
        b = &b * &b;
        n *= 2.0;
    }
    log_scale.exp()
}

/// `diag(w) * a`, scaling row `i` of `a` by `w[i]`.
pub fn scale_rows(a: &Matrix, w: &Vector) -> Matrix {
    let mut out = a.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= w[i];
    }
    out
}

/// `sqrt(sum_i w_i v_i^2)`.
pub fn weighted_norm(v: &Vector, w: &Vector) -> f64 {
    v.iter()
        .zip(w.iter())
        .map(|(x, wi)| wi * x * x)
        .sum::<f64>()
        .sqrt()
}

/// Weighted Frobenius norm `sqrt(trace(Aᵀ diag(w) A))`.
pub fn weighted_frobenius(a: &Matrix, w: &Vector) -> f64 {
    a.row_iter()
        .zip(w.iter())
        .map(|(row, wi)| wi * row.norm_squared())
        .sum::<f64>()
        .sqrt()
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_matrix(a: &Matrix) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelfand_matches_schur_on_defective_matrix() {
        let a = Matrix::from_row_slice(3, 3, &[0.5, 1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.5]);
        assert!((gelfand_radius(&a) - 0.5).abs() < 1e-12);
        assert!((spectral_radius(&a) - 0.5).abs() < 1e-6);
        let rot = Matrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        assert!((gelfand_radius(&rot) - 2.0).abs() < 1e-12);
        assert_eq!(gelfand_radius(&Matrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn svd_is_accurate_on_rank_deficient_fit() {
        let x = Matrix::from_row_slice(7, 2, &[
            0.9228750091763525, -0.4821593743065449, -0.7325374361318399, -0.8507273918599562,
            -0.38311972443014547, 0.0, 0.34152699225631905, -0.6325895851570544,
            0.7918374952033329, -0.8009504286887167, 0.0, -0.5142938611426346,
            0.6085967634760284, 0.6887219049964015,
        ]);
        let y = Matrix::from_row_slice(7, 3, &[
            -0.5440612717575388, 0.7563638141790506, -0.6959819567294642, 0.0,
            0.7310058892510487, -0.5529632538544645, 0.0, -0.49624225433347563,
            0.29739878939012077, 0.5436028791754478, -0.7167759232990655, 0.06890446157642516,
            0.0, -0.9431161724161847, -0.6700763375306291, -0.285453277233235, 0.0,
            -0.3859753316927335, -0.7493011254804925, -0.5960598872197485, 0.0,
        ]);
        let fitted = &x * pseudo_inverse(&x) * &y;
        for a in [fitted.clone(), fitted.transpose()] {
            let d = svd(&a);
            let sum2: f64 = d.s.iter().map(|s| s * s).sum();
            assert!((sum2 - a.norm_squared()).abs() < 1e-12, "{sum2} vs {}", a.norm_squared());
            assert!(d.defect(&a) < 1e-11);
            // Squared singular values are the eigenvalues of the Gram matrix.
            let eig = (fitted.transpose() * &fitted).symmetric_eigen().eigenvalues;
            let mut ev: Vec<f64> = eig.iter().map(|e| e.max(0.0).sqrt()).collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            for (s, e) in d.s.iter().zip(&ev) {
                assert!((s - e).abs() < 1e-7, "{s} vs {e}");
            }
        }
    }

    #[test]
    fn pinv_of_invertible_is_inverse() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let p = pseudo_inverse(&a);
        let inv = a.clone().try_inverse().unwrap();
        assert!((p - inv).norm() < 1e-12);
    }

    #[test]
    fn pinv_satisfies_penrose_on_rank_deficient() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let p = pseudo_inverse(&a);
        assert!((&a * &p * &a - &a).norm() < 1e-12);
        assert!((&p * &a * &p - &p).norm() < 1e-12);
        let ap = &a * &p;
        assert!((&ap - ap.transpose()).norm() < 1e-12);
    }

    #[test]
    fn singular_solve_is_refused() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]);
        let err = solve_vec(&a, &b, Singularity::System).unwrap_err();
        assert!(matches!(err, LstdError::SingularSystem { .. }));
    }

    #[test]
    fn spectral_radius_of_rotation() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(&a) - 0.5).abs() < 1e-12);
    }
}
