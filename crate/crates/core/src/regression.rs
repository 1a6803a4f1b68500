//! Standardized OLS path coefficients between score blocks.

use nalgebra::DMatrix;

use crate::data::ScoreMatrix;
use crate::error::{Error, Result};
use crate::kernels::{cov_to_corr, sample_cov, SpectralDecomposition, PD_REL_TOL};

/// Betas from correlations: solves `R_xx B = R_xy`.
///
/// Returns one row per predictor and one column per outcome.
pub fn betas_from_correlations(r_xx: &DMatrix<f64>, r_xy: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !r_xx.is_square() || r_xy.nrows() != r_xx.nrows() {
        return Err(Error::Dimension(format!(
            "predictor correlation {}x{} vs cross correlation {}x{}",
            r_xx.nrows(),
            r_xx.ncols(),
            r_xy.nrows(),
            r_xy.ncols()
        )));
    }
    let spec = SpectralDecomposition::new(r_xx)?;
    if !(spec.smallest() > PD_REL_TOL * spec.largest()) {
        return Err(Error::Collinear(format!(
            "predictor correlation has eigenvalue {:.3e}",
            spec.smallest()
        )));
    }
    let chol = r_xx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Collinear("predictor correlation is not positive definite".into()))?;
    Ok(chol.solve(r_xy))
}

/// Standardized regression of every outcome column on all predictor columns,
/// computed from sample correlations (divisor `n - 1`, no intercept needed
/// after centering).
pub fn standardized_betas(
    predictors: &ScoreMatrix,
    outcomes: &ScoreMatrix,
) -> Result<DMatrix<f64>> {
    if predictors.n_cases() != outcomes.n_cases() {
        return Err(Error::Alignment {
            left: predictors.n_cases(),
            right: outcomes.n_cases(),
        });
    }
    let (n, kx, ky) = (
        predictors.n_cases(),
        predictors.n_factors(),
        outcomes.n_factors(),
    );
    if n <= kx + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} cases for {kx} predictors"
        )));
    }
    let mut joined = DMatrix::zeros(n, kx + ky);
    joined.columns_mut(0, kx).copy_from(predictors.values());
    joined.columns_mut(kx, ky).copy_from(outcomes.values());
    let labels: Vec<String> = predictors
        .labels()
        .iter()
        .chain(outcomes.labels())
        .cloned()
        .collect();
    let r = cov_to_corr(&sample_cov(&joined)?, &labels)?;
    let r_xx = r.view((0, 0), (kx, kx)).into_owned();
    let r_xy = r.view((0, kx), (kx, ky)).into_owned();
    betas_from_correlations(&r_xx, &r_xy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Block, Provenance};

    fn sm(labels: &[&str], block: Block, cols: &[&[f64]]) -> ScoreMatrix {
        let n = cols[0].len();
        ScoreMatrix::new(
            DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]),
            labels.iter().map(|s| s.to_string()).collect(),
            vec![block; cols.len()],
            Provenance::Regression,
        )
        .unwrap()
    }

    #[test]
    fn outcome_equal_to_predictor() {
        let a = [0.3, -1.2, 0.8, 2.0, -0.4, -1.5];
        let b = [1.1, 0.2, -0.7, 0.4, -1.0, 0.0];
        let x = sm(&["a", "b"], Block::Exogenous, &[&a, &b]);
        let y = sm(&["y"], Block::Endogenous, &[&b]);
        let beta = standardized_betas(&x, &y).unwrap();
        assert!(beta[(0, 0)].abs() < 1e-12);
        assert!((beta[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_predictors_give_simple_correlations() {
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        let y = [0.5, 2.0, -0.3, -1.0];
        let x = sm(&["a", "b"], Block::Exogenous, &[&a, &b]);
        let out = sm(&["y"], Block::Endogenous, &[&y]);
        let beta = standardized_betas(&x, &out).unwrap();
        let corr = |u: &[f64], v: &[f64]| {
            let n = u.len() as f64;
            let (mu, mv) = (u.iter().sum::<f64>() / n, v.iter().sum::<f64>() / n);
            let suv: f64 = u.iter().zip(v).map(|(a, b)| (a - mu) * (b - mv)).sum();
            let su: f64 = u.iter().map(|a| (a - mu).powi(2)).sum();
            let sv: f64 = v.iter().map(|b| (b - mv).powi(2)).sum();
            suv / (su * sv).sqrt()
        };
        assert!((beta[(0, 0)] - corr(&a, &y)).abs() < 1e-12);
        assert!((beta[(1, 0)] - corr(&b, &y)).abs() < 1e-12);
    }

    #[test]
    fn collinear_predictors_rejected() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        let x = sm(&["a", "b"], Block::Exogenous, &[&a, &b]);
        let y = sm(&["y"], Block::Endogenous, &[&[0.1, 0.5, -0.2, 0.3, 0.0]]);
        assert!(matches!(
            standardized_betas(&x, &y),
            Err(Error::Collinear(_))
        ));
    }

    #[test]
    fn row_mismatch_rejected() {
        let x = sm(&["a"], Block::Exogenous, &[&[1.0, 2.0, 3.0, 4.0]]);
        let y = sm(&["y"], Block::Endogenous, &[&[1.0, 2.0, 3.0]]);
        assert!(matches!(
            standardized_betas(&x, &y),
            Err(Error::Alignment { .. })
        ));
    }

    #[test]
    fn exact_correlation_structure_recovers_gamma() {
        // Phi and Phi Gamma' in, Gamma' out.
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let gamma_t = DMatrix::from_row_slice(2, 1, &[0.4, -0.2]);
        let beta = betas_from_correlations(&phi, &(&phi * &gamma_t)).unwrap();
        assert!((beta - gamma_t).amax() < 1e-14);
    }
}
