//! Determinacy coefficients: the correlation of a score with the factor it
//! estimates, computed from scores and observed data as
//! `diag(diag(P'P)^{-1/2} P'X Sigma^-1 Lambda K)` with `(n - 1)` divisors.

use std::fmt;

use nalgebra::DMatrix;

use crate::data::{Block, DataMatrix, Provenance, ScoreMatrix};
use crate::error::{Error, Result};
use crate::kernels::cross_cov;
use crate::model::{implied_cov_joint, SemModel};
use crate::scores::{regression_score_cov, score_cov};

/// Which determinacy formula produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeterminacyFormula {
    /// Exogenous scores against `x`, `Phi`.
    Exogenous,
    /// Endogenous scores against `y`, `Gamma Phi Gamma' + Psi`.
    Endogenous,
    /// The endogenous formula with `diag(P'P)^{-1}` in place of
    /// `diag(P'P)^{-1/2}`, reproducing the reference SPSS syntax. Values are
    /// not scale invariant.
    EndogenousAppendixCompat,
    /// Population determinacy of regression scores, `sqrt(diag(K Lambda' Sigma^-1 Lambda K))`.
    ClosedForm,
    /// Population value of the sample formula for known score weights.
    Population,
}

impl fmt::Display for DeterminacyFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeterminacyFormula::Exogenous => "exogenous (x, Phi)",
            DeterminacyFormula::Endogenous => "endogenous (y, Gamma Phi Gamma' + Psi)",
            DeterminacyFormula::EndogenousAppendixCompat => {
                "endogenous, appendix-compatible (variance instead of standard deviation; not scale invariant)"
            }
            DeterminacyFormula::ClosedForm => "closed form for regression scores",
            DeterminacyFormula::Population => "population value for score weights",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminacyReport {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub provenance: Option<Provenance>,
    pub n_cases: Option<usize>,
    pub formula: DeterminacyFormula,
}

impl fmt::Display for DeterminacyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "# determinacy: {}", self.formula)?;
        if let Some(p) = self.provenance {
            write!(f, "; scores: {p}")?;
        }
        if let Some(n) = self.n_cases {
            write!(f, "; n = {n}")?;
        }
        writeln!(f)?;
        for (l, c) in self.labels.iter().zip(&self.coefficients) {
            writeln!(f, "{l:>10}  {c:.3}")?;
        }
        Ok(())
    }
}

/// How the score standard deviation enters the sample formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Normalizer {
    StdDev,
    Variance,
}

fn sample_determinacy(
    scores: &ScoreMatrix,
    data: &DataMatrix,
    model: &SemModel,
    block: Block,
    normalizer: Normalizer,
) -> Result<Vec<f64>> {
    let factor_labels = model.labels_of(block);
    let p = scores.select(factor_labels)?;
    let x = data.select(model.indicator_labels_of(block))?;
    if p.n_cases() != x.n_cases() {
        return Err(Error::Alignment {
            left: p.n_cases(),
            right: x.n_cases(),
        });
    }
    let mb = model.measurement(block)?;
    let pv = p.values();
    let var_cov = cross_cov(pv, pv)?;
    let cross = cross_cov(pv, x.values())?;
    let g = cross * &mb.sigma_inv * &mb.loadings * &mb.factor_cov;
    (0..p.n_factors())
        .map(|i| {
            let var = var_cov[(i, i)];
            if !(var > 0.0) {
                return Err(Error::ZeroVariance(factor_labels[i].clone()));
            }
            let scale = match normalizer {
                Normalizer::StdDev => var.sqrt(),
                Normalizer::Variance => var,
            };
            Ok(g[(i, i)] / scale)
        })
        .collect()
}

fn report(
    model: &SemModel,
    block: Block,
    coefficients: Vec<f64>,
    scores: Option<&ScoreMatrix>,
    formula: DeterminacyFormula,
) -> DeterminacyReport {
    DeterminacyReport {
        labels: model.labels_of(block).to_vec(),
        coefficients,
        provenance: scores.map(|s| s.provenance()),
        n_cases: scores.map(|s| s.n_cases()),
        formula,
    }
}

/// Determinacy of exogenous scores. `scores` may hold extra columns; the
/// exogenous factors are picked by label.
pub fn determinacy_exo(
    scores: &ScoreMatrix,
    x: &DataMatrix,
    model: &SemModel,
) -> Result<DeterminacyReport> {
    let c = sample_determinacy(scores, x, model, Block::Exogenous, Normalizer::StdDev)?;
    Ok(report(
        model,
        Block::Exogenous,
        c,
        Some(scores),
        DeterminacyFormula::Exogenous,
    ))
}

/// Determinacy of endogenous scores.
pub fn determinacy_endo(
    scores: &ScoreMatrix,
    y: &DataMatrix,
    model: &SemModel,
) -> Result<DeterminacyReport> {
    let c = sample_determinacy(scores, y, model, Block::Endogenous, Normalizer::StdDev)?;
    Ok(report(
        model,
        Block::Endogenous,
        c,
        Some(scores),
        DeterminacyFormula::Endogenous,
    ))
}

/// Endogenous determinacy exactly as the reference SPSS syntax computes it,
/// dividing by the score variance rather than its square root.
pub fn determinacy_endo_appendix(
    scores: &ScoreMatrix,
    y: &DataMatrix,
    model: &SemModel,
) -> Result<DeterminacyReport> {
    let c = sample_determinacy(scores, y, model, Block::Endogenous, Normalizer::Variance)?;
    Ok(report(
        model,
        Block::Endogenous,
        c,
        Some(scores),
        DeterminacyFormula::EndogenousAppendixCompat,
    ))
}

/// Population determinacy of the regression scores of one block.
pub fn closed_form_regression_determinacy(
    model: &SemModel,
    block: Block,
) -> Result<DeterminacyReport> {
    let mb = model.measurement(block)?;
    let a = regression_score_cov(&mb);
    let c = (0..a.nrows()).map(|i| a[(i, i)].max(0.0).sqrt()).collect();
    Ok(report(
        model,
        block,
        c,
        None,
        DeterminacyFormula::ClosedForm,
    ))
}

/// Population value of the sample formula for scores `W [x; y]`, where
/// `weights` has one row per factor of `block` and one column per indicator
/// of `x` followed by `y`.
pub fn weight_determinacy(
    model: &SemModel,
    block: Block,
    weights: &DMatrix<f64>,
) -> Result<DeterminacyReport> {
    let sigma = implied_cov_joint(model)?;
    let (nx, ny) = (model.n_x(), model.n_y());
    if weights.ncols() != nx + ny || weights.nrows() != model.labels_of(block).len() {
        return Err(Error::Dimension(format!(
            "weights are {}x{}, expected {}x{}",
            weights.nrows(),
            weights.ncols(),
            model.labels_of(block).len(),
            nx + ny
        )));
    }
    let mb = model.measurement(block)?;
    let cols = match block {
        Block::Exogenous => sigma.columns(0, nx).into_owned(),
        Block::Endogenous => sigma.columns(nx, ny).into_owned(),
    };
    let var = score_cov(weights, &sigma);
    let g = weights * cols * &mb.sigma_inv * &mb.loadings * &mb.factor_cov;
    let c = (0..weights.nrows())
        .map(|i| g[(i, i)] / var[(i, i)].sqrt())
        .collect();
    Ok(report(
        model,
        block,
        c,
        None,
        DeterminacyFormula::Population,
    ))
}

/// Pads block weights (over that block's indicators) to all indicators.
pub fn embed_block_weights(model: &SemModel, block: Block, weights: &DMatrix<f64>) -> DMatrix<f64> {
    let (nx, ny) = (model.n_x(), model.n_y());
    let mut out = DMatrix::zeros(weights.nrows(), nx + ny);
    let offset = match block {
        Block::Exogenous => 0,
        Block::Endogenous => nx,
    };
    out.columns_mut(offset, weights.ncols()).copy_from(weights);
    out
}
