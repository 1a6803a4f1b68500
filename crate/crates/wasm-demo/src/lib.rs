//! Browser bindings for the demo page. Each export returns a JSON string;
//! the `*_json` functions behind them are plain Rust and tested natively.

// `!(a > b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use cpscore::example::{run_example, run_paper_example, table1_model, EXAMPLE_CASES};
use cpscore::kernels::{cov_to_corr, sample_corr};
use cpscore::model::{combined_factor_corr, implied_cov_joint, ModelParts};
use cpscore::regression::betas_from_correlations;
use cpscore::scores::{
    cp_transform_sample, joint_cp_param_weights, joint_regression_weights, regression_scores_exo,
    score_cov,
};
use cpscore::simulation::simulate_dataset;
use cpscore::{Block, CpOptions, SemModel, SimulationSpec};
use nalgebra::DMatrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Rows = Vec<Vec<f64>>;

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct CheckJson {
    name: String,
    observed: f64,
    target: f64,
    passed: bool,
}

#[derive(Serialize)]
struct ExampleJson {
    seed: u64,
    n: usize,
    model_hash: String,
    xi: Vec<String>,
    eta: Vec<String>,
    gamma: Rows,
    plain_betas: Rows,
    cp_betas: Rows,
    plain_determinacy: Vec<f64>,
    cp_determinacy: Vec<f64>,
    checks: Vec<CheckJson>,
    passed: bool,
}

pub fn example_json(seed: u64, n: usize) -> Result<String, String> {
    let report = if n == EXAMPLE_CASES {
        run_paper_example(seed)
    } else {
        run_example(&table1_model(), seed, n)
    }
    .map_err(|e| e.to_string())?;
    let out = ExampleJson {
        seed,
        n,
        model_hash: report.model_hash.clone(),
        xi: report.xi_labels.clone(),
        eta: report.eta_labels.clone(),
        gamma: rows(&report.gamma_t),
        plain_betas: rows(&report.plain_betas),
        cp_betas: rows(&report.cp_betas),
        plain_determinacy: report.plain_determinacy.clone(),
        cp_determinacy: report.cp_determinacy.clone(),
        checks: report
            .checks
            .iter()
            .map(|c| CheckJson {
                name: c.name.clone(),
                observed: c.observed,
                target: c.target,
                passed: c.passed,
            })
            .collect(),
        passed: report.passed(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurvePoint {
    scale: f64,
    gamma: f64,
    plain_beta: f64,
    cp_beta: f64,
    plain_determinacy: f64,
    cp_determinacy: f64,
}

/// Population path `xi3 -> eta2` and its determinacy as all loadings of the
/// example model shrink by a common factor.
pub fn bias_curve_json(steps: usize) -> Result<String, String> {
    let base = table1_model();
    let steps = steps.clamp(2, 200);
    let mut points = Vec::with_capacity(steps);
    for i in 0..steps {
        let scale = 0.4 + 0.6 * i as f64 / (steps - 1) as f64;
        let model = SemModel::from_parts(ModelParts {
            lambda_x: base.lambda_x() * scale,
            phi: base.phi().clone(),
            lambda_y: base.lambda_y() * scale,
            gamma: base.gamma().clone(),
            psi: Some(base.psi().clone()),
            eta_corr: None,
        })
        .map_err(|e| e.to_string())?;
        let (plain, plain_det) = population(
            &model,
            &joint_regression_weights(&model).map_err(|e| e.to_string())?,
        )?;
        let (cp, cp_det) = population(
            &model,
            &joint_cp_param_weights(&model).map_err(|e| e.to_string())?,
        )?;
        points.push(CurvePoint {
            scale,
            gamma: base.gamma()[(1, 2)],
            plain_beta: plain,
            cp_beta: cp,
            plain_determinacy: plain_det,
            cp_determinacy: cp_det,
        });
    }
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

/// Beta `xi3 -> eta2` and determinacy of `eta2` for scores `W [x; y]`.
fn population(model: &SemModel, w: &DMatrix<f64>) -> Result<(f64, f64), String> {
    let sigma = implied_cov_joint(model).map_err(|e| e.to_string())?;
    let labels = model.factor_labels();
    let r = cov_to_corr(&score_cov(w, &sigma), &labels).map_err(|e| e.to_string())?;
    let kx = model.n_xi();
    let ke = model.n_eta();
    let betas = betas_from_correlations(
        &r.view((0, 0), (kx, kx)).into_owned(),
        &r.view((0, kx), (kx, ke)).into_owned(),
    )
    .map_err(|e| e.to_string())?;
    let det = cpscore::determinacy::weight_determinacy(
        model,
        Block::Endogenous,
        &w.rows(kx, ke).into_owned(),
    )
    .map_err(|e| e.to_string())?;
    Ok((betas[(2, 1)], det.coefficients[1]))
}

#[derive(Serialize)]
struct ScatterJson {
    target: f64,
    regression_corr: f64,
    cp_corr: f64,
    regression: Rows,
    cp: Rows,
}

/// Two correlated factors with four indicators each: regression scores and
/// their correlation-preserving transform, at most 400 points each.
pub fn correlation_demo_json(r: f64, loading: f64, n: usize, seed: u64) -> Result<String, String> {
    if !(r.abs() < 0.95) || !(0.1..=0.95).contains(&loading) || !(10..=100_000).contains(&n) {
        return Err("need |r| < 0.95, loading in [0.1, 0.95] and 10 <= n <= 100000".into());
    }
    let lambda = DMatrix::from_fn(8, 2, |i, j| if i / 4 == j { loading } else { 0.0 });
    let phi = DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]);
    let model = SemModel::exogenous(lambda, phi).map_err(|e| e.to_string())?;
    let sim = simulate_dataset(&SimulationSpec {
        model: &model,
        n_cases: n,
        seed,
        emit_true_factors: false,
    })
    .map_err(|e| e.to_string())?;
    let reg = regression_scores_exo(&model, &sim.x).map_err(|e| e.to_string())?;
    let target = combined_factor_corr(&model).map_err(|e| e.to_string())?;
    let cp =
        cp_transform_sample(&reg, &target, &CpOptions::default()).map_err(|e| e.to_string())?;
    let corr = |s: &cpscore::ScoreMatrix| {
        sample_corr(s)
            .map(|c| c.values()[(0, 1)])
            .map_err(|e| e.to_string())
    };
    let keep = n.min(400);
    let out = ScatterJson {
        target: r,
        regression_corr: corr(&reg)?,
        cp_corr: corr(&cp)?,
        regression: rows(&reg.values().rows(0, keep).into_owned()),
        cp: rows(&cp.values().rows(0, keep).into_owned()),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn example_model(seed: u32, n: u32) -> Result<String, JsError> {
    example_json(seed as u64, n as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bias_curve(steps: u32) -> Result<String, JsError> {
    bias_curve_json(steps as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn correlation_demo(r: f64, loading: f64, n: u32, seed: u32) -> Result<String, JsError> {
    correlation_demo_json(r, loading, n as usize, seed as u64).map_err(|e| JsError::new(&e))
}
