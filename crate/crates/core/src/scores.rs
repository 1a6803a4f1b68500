//! Factor score families.
//!
//! Every parameter-route score is a linear map of centered observed data,
//! `scores = X_c W'`, so each family is exposed both as a weight matrix
//! (for population algebra) and as a function producing a [`ScoreMatrix`].
//!
//! The data route ([`cp_transform`]) maps any score matrix `P` onto
//! `C^{1/2} C_P^{-1/2} P` after centering and scaling to unit variance,
//! which makes the sample correlation of the result equal `C`.

use nalgebra::DMatrix;

use crate::data::{Block, DataMatrix, Provenance, ScoreMatrix};
use crate::error::{Error, Result};
use crate::kernels::{
    center_columns, mean_center, row_standardize, sample_corr, spd_inverse, sym_inv_sqrt,
    sym_power, sym_sqrt, symmetrize, EigenvalueMode, PD_REL_TOL,
};
use crate::model::{
    combined_factor_corr, implied_cov_joint, indicator_factor_cov, FactorCorr, MeasurementBlock,
    SemModel,
};

/// Population covariance `W Sigma W'` of scores with weights `W`.
pub fn score_cov(weights: &DMatrix<f64>, sigma: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(weights * sigma * weights.transpose()))
}

/// Regression weights `K Lambda' Sigma^-1` for one block.
pub fn regression_weights(mb: &MeasurementBlock) -> DMatrix<f64> {
    &mb.factor_cov * mb.loadings.transpose() * &mb.sigma_inv
}

/// `K Lambda' Sigma^-1 Lambda K`, the covariance of regression scores.
pub fn regression_score_cov(mb: &MeasurementBlock) -> DMatrix<f64> {
    score_cov(&regression_weights(mb), &mb.sigma)
}

/// Correlation implied for the regression scores of one block.
pub fn regression_score_corr_block(model: &SemModel, block: Block) -> Result<FactorCorr> {
    let mb = model.measurement(block)?;
    let a = regression_score_cov(&mb);
    let d = diag_inv_sqrt(&a, model.labels_of(block))?;
    FactorCorr::new(model.labels_of(block).to_vec(), symmetrize(&(&d * a * &d)))
}

/// Inter-correlation of the exogenous regression scores,
/// `diag(A)^{-1/2} A diag(A)^{-1/2}` with `A = Phi Lambda_x' Sigma_x^-1 Lambda_x Phi`.
pub fn regression_score_corr(model: &SemModel) -> Result<FactorCorr> {
    regression_score_corr_block(model, Block::Exogenous)
}

/// Takeuchi weights `(Lambda' Sigma^-1 Lambda)^{-1/2} Lambda' Sigma^-1`.
pub fn takeuchi_weights(mb: &MeasurementBlock) -> Result<DMatrix<f64>> {
    let lt_si = mb.loadings.transpose() * &mb.sigma_inv;
    let info = symmetrize(&(&lt_si * &mb.loadings));
    let root =
        sym_inv_sqrt(&info, PD_REL_TOL).map_err(|e| singular("Lambda' Sigma^-1 Lambda", e))?;
    Ok(root * lt_si)
}

/// Correlation-preserving weights from parameters only:
/// `K^{1/2} R^{-1/2} diag(A)^{-1/2} K Lambda' Sigma^-1`, where `A` is the
/// regression-score covariance and `R` its correlation.
pub fn cp_param_weights(mb: &MeasurementBlock) -> Result<DMatrix<f64>> {
    let w = regression_weights(mb);
    correlation_preserving(&w, &mb.sigma, &mb.factor_cov)
}

/// `K^{1/2}` times the Takeuchi weights.
pub fn cp_takeuchi_weights(mb: &MeasurementBlock) -> Result<DMatrix<f64>> {
    let root = sym_sqrt(&mb.factor_cov, PD_REL_TOL)?;
    Ok(root * takeuchi_weights(mb)?)
}

/// Regression weights of all factors on all indicators,
/// `Cov(F, [x; y]) Sigma^-1`. These are the posterior means `E(F | x, y)`
/// that mean plausible values approximate.
pub fn joint_regression_weights(model: &SemModel) -> Result<DMatrix<f64>> {
    let sigma = implied_cov_joint(model)?;
    let sigma_inv = spd_inverse(&sigma, "joint implied covariance of x and y")?;
    Ok(indicator_factor_cov(model).transpose() * sigma_inv)
}

/// Joint correlation-preserving weights with the model-implied `C_P`:
/// `C^{1/2} R^{-1/2} diag(A)^{-1/2} W` for the joint regression weights `W`.
pub fn joint_cp_param_weights(model: &SemModel) -> Result<DMatrix<f64>> {
    let w = joint_regression_weights(model)?;
    let sigma = implied_cov_joint(model)?;
    let c = combined_factor_corr(model)?;
    correlation_preserving(&w, &sigma, c.values())
}

fn correlation_preserving(
    w: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    target: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let a = score_cov(w, sigma);
    let labels: Vec<String> = (1..=a.nrows()).map(|i| format!("score {i}")).collect();
    let d = diag_inv_sqrt(&a, &labels)?;
    let r = symmetrize(&(&d * &a * &d));
    let r_inv_root = sym_inv_sqrt(&r, PD_REL_TOL)?;
    let target_root = sym_sqrt(target, PD_REL_TOL)?;
    Ok(target_root * r_inv_root * d * w)
}

fn diag_inv_sqrt(a: &DMatrix<f64>, labels: &[String]) -> Result<DMatrix<f64>> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        if !(a[(i, i)] > 0.0) {
            return Err(Error::InvalidModel(format!(
                "degenerate determinacy: score variance {} for '{}'",
                a[(i, i)],
                labels[i]
            )));
        }
        d[(i, i)] = 1.0 / a[(i, i)].sqrt();
    }
    Ok(d)
}

fn singular(what: &str, e: Error) -> Error {
    match e {
        Error::NotPositiveDefinite {
            eigenvalue,
            threshold,
            ..
        } => Error::NotPositiveDefinite {
            what: what.to_string(),
            eigenvalue,
            threshold,
        },
        other => other,
    }
}

/// Applies `weights` (factors x indicators) to centered data.
pub fn apply_weights(
    data: &DataMatrix,
    indicator_labels: &[String],
    weights: &DMatrix<f64>,
    factor_labels: &[String],
    blocks: Vec<Block>,
    provenance: Provenance,
) -> Result<ScoreMatrix> {
    if weights.ncols() != indicator_labels.len() || weights.nrows() != factor_labels.len() {
        return Err(Error::Dimension(format!(
            "weights are {}x{}, expected {}x{}",
            weights.nrows(),
            weights.ncols(),
            factor_labels.len(),
            indicator_labels.len()
        )));
    }
    let aligned = data.select(indicator_labels)?;
    let centered = center_columns(aligned.values());
    let values = centered * weights.transpose();
    ScoreMatrix::new(values, factor_labels.to_vec(), blocks, provenance)
}

fn block_scores(
    model: &SemModel,
    block: Block,
    data: &DataMatrix,
    weights: &DMatrix<f64>,
    provenance: Provenance,
) -> Result<ScoreMatrix> {
    apply_weights(
        data,
        model.indicator_labels_of(block),
        weights,
        model.labels_of(block),
        vec![block; model.labels_of(block).len()],
        provenance,
    )
}

/// Regression scores of one block from that block's own indicators.
pub fn regression_scores(model: &SemModel, block: Block, data: &DataMatrix) -> Result<ScoreMatrix> {
    let mb = model.measurement(block)?;
    block_scores(
        model,
        block,
        data,
        &regression_weights(&mb),
        Provenance::Regression,
    )
}

/// `Phi Lambda_x' Sigma_x^-1 x` per case.
pub fn regression_scores_exo(model: &SemModel, x: &DataMatrix) -> Result<ScoreMatrix> {
    regression_scores(model, Block::Exogenous, x)
}

/// `E(eta eta') Lambda_y' Sigma_y^-1 y` per case.
pub fn regression_scores_endo(model: &SemModel, y: &DataMatrix) -> Result<ScoreMatrix> {
    regression_scores(model, Block::Endogenous, y)
}

/// Posterior-mean scores of every factor given all indicators.
pub fn regression_scores_joint(
    model: &SemModel,
    x: &DataMatrix,
    y: &DataMatrix,
) -> Result<ScoreMatrix> {
    let w = joint_regression_weights(model)?;
    let data = join_data(x, y)?;
    let indicators: Vec<String> = model
        .x_labels()
        .iter()
        .chain(model.y_labels())
        .cloned()
        .collect();
    apply_weights(
        &data,
        &indicators,
        &w,
        &model.factor_labels(),
        model.factor_blocks(),
        Provenance::Regression,
    )
}

/// Correlation-preserving scores of all factors straight from parameters.
pub fn cp_scores_joint_from_params(
    model: &SemModel,
    x: &DataMatrix,
    y: &DataMatrix,
) -> Result<ScoreMatrix> {
    let w = joint_cp_param_weights(model)?;
    let data = join_data(x, y)?;
    let indicators: Vec<String> = model
        .x_labels()
        .iter()
        .chain(model.y_labels())
        .cloned()
        .collect();
    apply_weights(
        &data,
        &indicators,
        &w,
        &model.factor_labels(),
        model.factor_blocks(),
        Provenance::CorrelationPreserving,
    )
}

fn join_data(x: &DataMatrix, y: &DataMatrix) -> Result<DataMatrix> {
    if x.n_cases() != y.n_cases() {
        return Err(Error::Alignment {
            left: x.n_cases(),
            right: y.n_cases(),
        });
    }
    let mut values = DMatrix::zeros(x.n_cases(), x.n_indicators() + y.n_indicators());
    values
        .columns_mut(0, x.n_indicators())
        .copy_from(x.values());
    values
        .columns_mut(x.n_indicators(), y.n_indicators())
        .copy_from(y.values());
    let labels = x.labels().iter().chain(y.labels()).cloned().collect();
    DataMatrix::new(values, labels)
}

pub fn takeuchi_scores_block(
    model: &SemModel,
    block: Block,
    data: &DataMatrix,
) -> Result<ScoreMatrix> {
    let mb = model.measurement(block)?;
    block_scores(
        model,
        block,
        data,
        &takeuchi_weights(&mb)?,
        Provenance::Takeuchi,
    )
}

/// Orthogonal scores `(Lambda_x' Sigma_x^-1 Lambda_x)^{-1/2} Lambda_x' Sigma_x^-1 x`.
pub fn takeuchi_scores(model: &SemModel, x: &DataMatrix) -> Result<ScoreMatrix> {
    takeuchi_scores_block(model, Block::Exogenous, x)
}

pub fn cp_scores_from_params(
    model: &SemModel,
    block: Block,
    data: &DataMatrix,
) -> Result<ScoreMatrix> {
    let mb = model.measurement(block)?;
    block_scores(
        model,
        block,
        data,
        &cp_param_weights(&mb)?,
        Provenance::CorrelationPreserving,
    )
}

/// Correlation-preserving exogenous scores computed from parameters and `x`.
pub fn cp_exo_from_params(model: &SemModel, x: &DataMatrix) -> Result<ScoreMatrix> {
    cp_scores_from_params(model, Block::Exogenous, x)
}

pub fn cp_takeuchi_scores(
    model: &SemModel,
    block: Block,
    data: &DataMatrix,
) -> Result<ScoreMatrix> {
    let mb = model.measurement(block)?;
    block_scores(
        model,
        block,
        data,
        &cp_takeuchi_weights(&mb)?,
        Provenance::CorrelationPreserving,
    )
}

/// `Phi^{1/2}` times the Takeuchi scores.
pub fn cp_exo_takeuchi(model: &SemModel, x: &DataMatrix) -> Result<ScoreMatrix> {
    cp_takeuchi_scores(model, Block::Exogenous, x)
}

#[derive(Debug, Clone, Copy)]
pub struct CpOptions {
    /// Relative eigenvalue threshold for both square roots.
    pub tol: f64,
    /// Treatment of the target matrix's eigenvalues. `C_P` is always strict.
    pub target_mode: EigenvalueMode,
}

impl Default for CpOptions {
    fn default() -> Self {
        Self {
            tol: PD_REL_TOL,
            target_mode: EigenvalueMode::Strict,
        }
    }
}

/// Maps `p` onto scores whose sample correlation is `c_target`, given the
/// correlation `c_p` of `p`. Scores are centered and scaled to unit variance
/// first; all three inputs must list the same factors in the same order.
pub fn cp_transform(
    p: &ScoreMatrix,
    c_target: &FactorCorr,
    c_p: &FactorCorr,
) -> Result<ScoreMatrix> {
    cp_transform_with(p, c_target, c_p, &CpOptions::default())
}

pub fn cp_transform_with(
    p: &ScoreMatrix,
    c_target: &FactorCorr,
    c_p: &FactorCorr,
    opts: &CpOptions,
) -> Result<ScoreMatrix> {
    if p.labels() != c_target.labels() || p.labels() != c_p.labels() {
        return Err(Error::Labels(format!(
            "score columns [{}], target [{}] and C_P [{}] must match in order",
            p.labels().join(", "),
            c_target.labels().join(", "),
            c_p.labels().join(", ")
        )));
    }
    let standardized = row_standardize(&mean_center(p)?)?;
    let target_root = sym_power(c_target.values(), 0.5, opts.tol, opts.target_mode)?;
    let cp_inv_root = sym_inv_sqrt(c_p.values(), opts.tol).map_err(|e| singular("C_P", e))?;
    let transform = target_root * cp_inv_root;
    let values = standardized.values() * transform.transpose();
    Ok(standardized
        .with_values(values)
        .with_provenance(Provenance::CorrelationPreserving))
}

/// [`cp_transform`] with `C_P` taken as the sample correlation of `p`.
pub fn cp_transform_sample(
    p: &ScoreMatrix,
    c_target: &FactorCorr,
    opts: &CpOptions,
) -> Result<ScoreMatrix> {
    let c_p = sample_corr(p)?;
    cp_transform_with(p, c_target, &c_p, opts)
}

/// Exogenous-only transformation with `Phi` as the target.
pub fn cp_transform_exo(
    p_xi: &ScoreMatrix,
    phi: &FactorCorr,
    c_p_xi: &FactorCorr,
) -> Result<ScoreMatrix> {
    if p_xi.blocks().iter().any(|&b| b != Block::Exogenous) {
        return Err(Error::Labels(
            "exogenous transformation given endogenous score columns".into(),
        ));
    }
    cp_transform(p_xi, phi, c_p_xi)
}

/// Transforms each block separately against its own model correlation
/// (`Phi` for exogenous, `E(eta eta')` for endogenous), with sample `C_P`
/// per block. Cross-block correlations are not targeted.
pub fn cp_transform_blockwise(
    p: &ScoreMatrix,
    model: &SemModel,
    opts: &CpOptions,
) -> Result<ScoreMatrix> {
    let c = combined_factor_corr(model)?;
    let mut parts = Vec::new();
    for block in [Block::Exogenous, Block::Endogenous] {
        let labels = model.labels_of(block);
        let present = labels.iter().filter(|l| p.labels().contains(l)).count();
        if present == 0 {
            continue;
        }
        if present != labels.len() {
            return Err(Error::Labels(format!(
                "scores contain only some {block} factors"
            )));
        }
        let sub = p.select(labels)?;
        let offset = match block {
            Block::Exogenous => 0,
            Block::Endogenous => model.n_xi(),
        };
        let target = c.sub(offset, labels.len());
        parts.push(cp_transform_sample(&sub, &target, opts)?);
    }
    if parts.is_empty() {
        return Err(Error::Labels("scores contain no model factors".into()));
    }
    let refs: Vec<&ScoreMatrix> = parts.iter().collect();
    ScoreMatrix::hstack(&refs, Provenance::CorrelationPreserving)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::table1_model;

    fn one_factor() -> SemModel {
        SemModel::exogenous(
            DMatrix::from_column_slice(3, 1, &[0.8, 0.8, 0.8]),
            DMatrix::identity(1, 1),
        )
        .unwrap()
    }

    /// Gauss-Jordan inverse, independent of the crate's Cholesky path.
    #[allow(clippy::needless_range_loop)]
    fn gauss_jordan_inverse(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 6]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = a[i][j];
            }
            m[i][3 + i] = 1.0;
        }
        for c in 0..3 {
            let p = m[c][c];
            for j in 0..6 {
                m[c][j] /= p;
            }
            for r in 0..3 {
                if r != c {
                    let f = m[r][c];
                    for j in 0..6 {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
        }
        let mut inv = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                inv[i][j] = m[i][3 + j];
            }
        }
        inv
    }

    #[test]
    fn one_factor_regression_weights_match_closed_form() {
        let sigma = [[1.0, 0.64, 0.64], [0.64, 1.0, 0.64], [0.64, 0.64, 1.0]];
        let inv = gauss_jordan_inverse(&sigma);
        let lambda = [0.8, 0.8, 0.8];
        let mut w = [0.0; 3];
        for j in 0..3 {
            for i in 0..3 {
                w[j] += lambda[i] * inv[i][j];
            }
        }
        let var: f64 = (0..3).map(|j| w[j] * lambda[j]).sum();

        let model = one_factor();
        let mb = model.measurement(Block::Exogenous).unwrap();
        let got = regression_weights(&mb);
        for j in 0..3 {
            assert!((got[(0, j)] - w[j]).abs() < 1e-12);
        }
        assert!((regression_score_cov(&mb)[(0, 0)] - var).abs() < 1e-12);
        // Single factor: Lambda' Sigma^-1 Lambda = 3*0.64/(1+2*0.64) = 0.842105...
        assert!((var - 1.92 / 2.28).abs() < 1e-12);
    }

    #[test]
    fn zero_row_scores_zero() {
        let model = one_factor();
        // rows symmetric around zero keep the middle row at the mean
        let x = DataMatrix::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 0.0, 0.0, 0.0, -1.0, -2.0, -0.5]),
            model.x_labels().to_vec(),
        )
        .unwrap();
        for scores in [
            regression_scores_exo(&model, &x).unwrap(),
            takeuchi_scores(&model, &x).unwrap(),
            cp_exo_takeuchi(&model, &x).unwrap(),
        ] {
            assert_eq!(scores.values()[(1, 0)], 0.0);
        }
    }

    #[test]
    fn regression_corr_cases() {
        let simple = SemModel::exogenous(
            DMatrix::from_row_slice(4, 2, &[0.7, 0.0, 0.6, 0.0, 0.0, 0.8, 0.0, 0.5]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let r = regression_score_corr(&simple).unwrap();
        assert!((r.values() - DMatrix::identity(2, 2)).amax() < 1e-15);

        let r = regression_score_corr(&one_factor()).unwrap();
        assert_eq!(r.values(), &DMatrix::identity(1, 1));

        let model = table1_model();
        let r = regression_score_corr(&model).unwrap();
        assert!((r.values() - model.phi()).amax() > 1e-3);
    }

    #[test]
    fn takeuchi_single_factor_is_unit_variance_regression_score() {
        let model = one_factor();
        let mb = model.measurement(Block::Exogenous).unwrap();
        let reg = regression_weights(&mb);
        let var = regression_score_cov(&mb)[(0, 0)];
        let tk = takeuchi_weights(&mb).unwrap();
        assert!((&reg / var.sqrt() - &tk).amax() < 1e-12);
        assert!((score_cov(&tk, &mb.sigma)[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cp_takeuchi_with_identity_phi_is_takeuchi() {
        let model = SemModel::exogenous(
            DMatrix::from_row_slice(4, 2, &[0.7, 0.1, 0.6, 0.0, 0.05, 0.8, 0.0, 0.5]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let mb = model.measurement(Block::Exogenous).unwrap();
        let a = takeuchi_weights(&mb).unwrap();
        let b = cp_takeuchi_weights(&mb).unwrap();
        assert!((a - b).amax() < 1e-14);
    }

    #[test]
    fn population_covariances_of_weight_families() {
        let model = table1_model();
        let mb = model.measurement(Block::Exogenous).unwrap();
        let tk = takeuchi_weights(&mb).unwrap();
        assert!((score_cov(&tk, &mb.sigma) - DMatrix::identity(3, 3)).amax() < 1e-9);
        for w in [
            cp_param_weights(&mb).unwrap(),
            cp_takeuchi_weights(&mb).unwrap(),
        ] {
            assert!((score_cov(&w, &mb.sigma) - model.phi()).amax() < 1e-9);
        }
        let joint = joint_cp_param_weights(&model).unwrap();
        let c = combined_factor_corr(&model).unwrap();
        let sigma = implied_cov_joint(&model).unwrap();
        assert!((score_cov(&joint, &sigma) - c.values()).amax() < 1e-9);
    }

    #[test]
    fn cp_params_equals_takeuchi_when_score_variances_equal() {
        // Exchangeable loadings with Phi = I give a constant diag(A).
        let model = SemModel::exogenous(
            DMatrix::from_row_slice(
                6,
                2,
                &[0.7, 0.1, 0.7, 0.1, 0.7, 0.1, 0.1, 0.7, 0.1, 0.7, 0.1, 0.7],
            ),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let mb = model.measurement(Block::Exogenous).unwrap();
        let a = regression_score_cov(&mb);
        assert!((a[(0, 0)] - a[(1, 1)]).abs() < 1e-14);
        let p = cp_param_weights(&mb).unwrap();
        let t = takeuchi_weights(&mb).unwrap();
        assert!((p - t).amax() < 1e-12);
    }

    fn toy_scores(labels: &[&str], rows: &[&[f64]]) -> ScoreMatrix {
        let n = rows.len();
        let k = labels.len();
        let m = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
        ScoreMatrix::new(
            m,
            labels.iter().map(|s| s.to_string()).collect(),
            vec![Block::Exogenous; k],
            Provenance::PlausibleMean,
        )
        .unwrap()
    }

    #[test]
    fn cp_transform_identity_when_target_equals_cp() {
        let p = toy_scores(
            &["a", "b"],
            &[
                &[1.0, 0.3],
                &[-0.5, 1.2],
                &[0.2, -0.7],
                &[-0.7, -0.8],
                &[0.9, 0.4],
            ],
        );
        let c_p = sample_corr(&p).unwrap();
        let out = cp_transform(&p, &c_p, &c_p).unwrap();
        let standardized = row_standardize(&mean_center(&p).unwrap()).unwrap();
        assert!((out.values() - standardized.values()).amax() < 1e-12);
        assert_eq!(out.provenance(), Provenance::CorrelationPreserving);
    }

    #[test]
    fn cp_transform_from_identity_is_target_root() {
        let p = toy_scores(
            &["a", "b"],
            &[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]],
        );
        let c_p = FactorCorr::identity(vec!["a".into(), "b".into()]);
        let target = FactorCorr::new(
            vec!["a".into(), "b".into()],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]),
        )
        .unwrap();
        let out = cp_transform(&p, &target, &c_p).unwrap();
        let standardized = row_standardize(&mean_center(&p).unwrap()).unwrap();
        let root = sym_sqrt(target.values(), PD_REL_TOL).unwrap();
        assert!((out.values() - standardized.values() * root.transpose()).amax() < 1e-14);
        let r = sample_corr(&out).unwrap();
        assert!((r.values()[(0, 1)] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn cp_transform_label_mismatch() {
        let p = toy_scores(&["a", "b"], &[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.5]]);
        let wrong = FactorCorr::identity(vec!["b".into(), "a".into()]);
        let right = FactorCorr::identity(vec!["a".into(), "b".into()]);
        assert!(matches!(
            cp_transform(&p, &wrong, &right),
            Err(Error::Labels(_))
        ));
        assert!(matches!(
            cp_transform(&p, &right, &wrong),
            Err(Error::Labels(_))
        ));
    }

    #[test]
    fn cp_transform_rejects_singular_cp() {
        let p = toy_scores(&["a", "b"], &[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.1]]);
        let labels = vec!["a".to_string(), "b".to_string()];
        let singular =
            FactorCorr::from_sample(labels.clone(), DMatrix::from_element(2, 2, 1.0)).unwrap();
        let target = FactorCorr::identity(labels);
        assert!(matches!(
            cp_transform(&p, &target, &singular),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
