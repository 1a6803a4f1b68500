//! Numerical primitives: symmetric eigen-functions and sample moments.
//!
//! Sample moments treat columns as variables and rows as cases, and always
//! divide by `n - 1` after centering.

use nalgebra::{DMatrix, DVector};

use crate::data::ScoreMatrix;
use crate::error::{Error, Result};
use crate::model::FactorCorr;

/// Relative eigenvalue threshold below which a matrix counts as singular.
pub const PD_REL_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors, one per column, aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Decomposes `s`. Only the lower triangle is read; callers check symmetry.
    pub fn new(s: &DMatrix<f64>) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::Dimension(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix passed to eigensolver".into()));
        }
        let n = s.nrows();
        if n == 0 {
            return Ok(Self {
                eigenvalues: DVector::zeros(0),
                eigenvectors: DMatrix::zeros(0, 0),
            });
        }
        let eig = s.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn smallest(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `V f(L) V'`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| {
            v[(i, j)] * f(self.eigenvalues[j])
        });
        let out = scaled * v.transpose();
        symmetrize(&out)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|l| l)
    }
}

/// How eigenvalues are treated before taking fractional powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenvalueMode {
    /// Reject any eigenvalue at or below the relative threshold.
    #[default]
    Strict,
    /// Take absolute values first, as the reference SPSS syntax does for the
    /// model-implied correlation matrix. Near-zero magnitudes are still rejected.
    Absolute,
}

/// Fails unless `|s_ij - s_ji| <= tol * max(1, max|s|)` for all pairs.
pub fn check_symmetric(s: &DMatrix<f64>, tol: f64, what: &str) -> Result<()> {
    if !s.is_square() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = s.amax().max(1.0);
    for i in 0..s.nrows() {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > tol * scale {
                return Err(Error::NotSymmetric(format!(
                    "{what} (entry {},{})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

pub fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

/// Fails if the smallest eigenvalue does not exceed `tol` times the largest.
pub fn ensure_positive_definite(
    s: &DMatrix<f64>,
    what: &str,
    tol: f64,
) -> Result<SpectralDecomposition> {
    let spec = SpectralDecomposition::new(s)?;
    let threshold = tol * spec.largest().max(0.0);
    let smallest = spec.smallest();
    if spec.eigenvalues.is_empty() {
        return Ok(spec);
    }
    if !(smallest > threshold) || spec.largest() <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            what: what.to_string(),
            eigenvalue: smallest,
            threshold,
        });
    }
    Ok(spec)
}

pub fn is_positive_definite(s: &DMatrix<f64>) -> bool {
    ensure_positive_definite(s, "matrix", PD_REL_TOL).is_ok()
}

/// `S^power` through the eigendecomposition of a symmetric matrix.
pub fn sym_power(
    s: &DMatrix<f64>,
    power: f64,
    tol: f64,
    mode: EigenvalueMode,
) -> Result<DMatrix<f64>> {
    check_symmetric(s, tol, "matrix")?;
    let spec = SpectralDecomposition::new(&symmetrize(s))?;
    let magnitude = |l: f64| match mode {
        EigenvalueMode::Strict => l,
        EigenvalueMode::Absolute => l.abs(),
    };
    let largest = spec
        .eigenvalues
        .iter()
        .map(|&l| magnitude(l))
        .fold(0.0, f64::max);
    let threshold = tol * largest;
    for &l in spec.eigenvalues.iter() {
        let m = magnitude(l);
        if !(m > threshold) {
            return Err(Error::NotPositiveDefinite {
                what: "matrix (near-singular)".into(),
                eigenvalue: l,
                threshold,
            });
        }
    }
    Ok(spec.map(|l| magnitude(l).powf(power)))
}

/// Symmetric square root `V L^{1/2} V'`.
pub fn sym_sqrt(s: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    sym_power(s, 0.5, tol, EigenvalueMode::Strict)
}

/// Symmetric inverse square root `V L^{-1/2} V'`.
pub fn sym_inv_sqrt(s: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    sym_power(s, -0.5, tol, EigenvalueMode::Strict)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(s: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    ensure_positive_definite(s, what, PD_REL_TOL)?;
    let chol = symmetrize(s)
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite {
            what: what.to_string(),
            eigenvalue: f64::NAN,
            threshold: 0.0,
        })?;
    Ok(symmetrize(&chol.inverse()))
}

pub fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows().max(1) as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

pub fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let means = column_means(m);
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    out
}

/// Cross-covariance `A'B / (n - 1)` of column-centered copies of `a` and `b`.
pub fn cross_cov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Alignment {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    let n = a.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 cases, got {n}"
        )));
    }
    let ac = center_columns(a);
    let bc = center_columns(b);
    Ok(ac.transpose() * bc / (n as f64 - 1.0))
}

pub fn sample_cov(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    cross_cov(m, m).map(|c| symmetrize(&c))
}

/// `diag(S)^{-1/2} S diag(S)^{-1/2}`; `labels` name columns in errors.
pub fn cov_to_corr(cov: &DMatrix<f64>, labels: &[String]) -> Result<DMatrix<f64>> {
    let sd: Vec<f64> = (0..cov.nrows())
        .map(|i| {
            let v = cov[(i, i)];
            if v > 0.0 && v.is_finite() {
                Ok(v.sqrt())
            } else {
                let name = labels
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| format!("#{}", i + 1));
                Err(Error::ZeroVariance(name))
            }
        })
        .collect::<Result<_>>()?;
    let mut r = DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| {
        cov[(i, j)] / (sd[i] * sd[j])
    });
    for i in 0..r.nrows() {
        r[(i, i)] = 1.0;
    }
    Ok(symmetrize(&r))
}

/// Shifts every column to mean zero.
pub fn mean_center(scores: &ScoreMatrix) -> Result<ScoreMatrix> {
    require_cases(scores.n_cases())?;
    Ok(scores.with_values(center_columns(scores.values())))
}

/// Sample correlation of the score columns.
pub fn sample_corr(scores: &ScoreMatrix) -> Result<FactorCorr> {
    let n = scores.n_cases();
    require_cases(n)?;
    if n <= scores.n_factors() {
        return Err(Error::InsufficientData(format!(
            "{n} cases for {} factors: sample correlation would be rank deficient",
            scores.n_factors()
        )));
    }
    let cov = sample_cov(scores.values())?;
    let corr = cov_to_corr(&cov, scores.labels())?;
    FactorCorr::from_sample(scores.labels().to_vec(), corr)
}

/// Scales every column to unit sample variance. Means are left untouched.
pub fn row_standardize(scores: &ScoreMatrix) -> Result<ScoreMatrix> {
    require_cases(scores.n_cases())?;
    let cov = sample_cov(scores.values())?;
    let mut out = scores.values().clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let var = cov[(j, j)];
        if !(var > 0.0) {
            return Err(Error::ZeroVariance(scores.labels()[j].clone()));
        }
        col /= var.sqrt();
    }
    Ok(scores.with_values(out))
}

fn require_cases(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 cases, got {n}"
        )));
    }
    Ok(())
}
