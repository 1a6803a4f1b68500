//! The bundled three-exogenous, two-endogenous example model and the full
//! simulate -> score -> transform -> regress -> determinacy pipeline.
//!
//! Plain scores are the posterior means `E(F | x, y)` of all five factors
//! given all 25 indicators, the population counterpart of mean plausible
//! values. Correlation-preserving scores transform them jointly against the
//! model-implied factor correlation using their sample correlation as `C_P`.

use std::fmt;

use nalgebra::DMatrix;

use crate::data::Block;
use crate::determinacy::{
    determinacy_endo, determinacy_exo, embed_block_weights, weight_determinacy,
};
use crate::error::Result;
use crate::io::{model_hash, parse_model_str};
use crate::kernels::cov_to_corr;
use crate::model::{combined_factor_corr, implied_cov_joint, SemModel};
use crate::regression::{betas_from_correlations, standardized_betas};
use crate::scores::{
    cp_exo_takeuchi, cp_takeuchi_weights, cp_transform_sample, joint_cp_param_weights,
    joint_regression_weights, regression_scores_joint, score_cov, CpOptions,
};
use crate::simulation::{simulate_dataset, SimulationSpec, RNG_DESCRIPTION};

/// Text of the bundled example model file.
pub const TABLE1_MODEL: &str = include_str!("../data/table1.model");

/// Sample size of the published example.
pub const EXAMPLE_CASES: usize = 10_000;

/// Absolute tolerance on sampled path coefficients.
pub const BETA_TOL: f64 = 0.02;
/// Absolute tolerance on sampled determinacies.
pub const DETERMINACY_TOL: f64 = 0.02;
/// Minimum distortion of plain-score betas counted as bias.
pub const MIN_PLAIN_BIAS: f64 = 0.03;

pub fn table1_model() -> SemModel {
    parse_model_str(TABLE1_MODEL).expect("bundled model is valid")
}

/// Published values for the bundled model, rows exogenous, columns endogenous.
#[derive(Debug, Clone)]
pub struct PublishedValues {
    pub plain_betas: DMatrix<f64>,
    pub cp_betas: DMatrix<f64>,
    /// Exogenous then endogenous.
    pub plain_determinacy: Vec<f64>,
    pub cp_determinacy: Vec<f64>,
}

pub fn published_values() -> PublishedValues {
    PublishedValues {
        plain_betas: DMatrix::from_row_slice(3, 2, &[0.275, -0.038, -0.079, 0.005, 0.053, 0.549]),
        cp_betas: DMatrix::from_row_slice(3, 2, &[0.270, 0.000, 0.000, 0.037, 0.016, 0.447]),
        plain_determinacy: vec![0.97, 0.97, 0.97, 0.97, 0.85],
        cp_determinacy: vec![0.97, 0.97, 0.97, 0.99, 0.82],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

impl Check {
    fn within(name: String, observed: f64, target: f64, tolerance: f64) -> Self {
        Check {
            passed: (observed - target).abs() <= tolerance,
            name,
            observed,
            target,
            tolerance,
            note: String::new(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{mark}] {}: {:.3} vs {:.3} (tol {:.3})",
            self.name, self.observed, self.target, self.tolerance
        )?;
        if !self.note.is_empty() {
            write!(f, " {}", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExampleReport {
    pub seed: u64,
    pub n_cases: usize,
    pub model_hash: String,
    pub xi_labels: Vec<String>,
    pub eta_labels: Vec<String>,
    /// `Gamma'`: rows exogenous, columns endogenous.
    pub gamma_t: DMatrix<f64>,
    pub plain_betas: DMatrix<f64>,
    pub cp_betas: DMatrix<f64>,
    /// Betas of `Phi^{1/2}`-scaled Takeuchi scores onto the transformed endogenous scores.
    pub takeuchi_route_betas: DMatrix<f64>,
    pub population_plain_betas: DMatrix<f64>,
    pub population_takeuchi_route_betas: DMatrix<f64>,
    pub plain_determinacy: Vec<f64>,
    pub cp_determinacy: Vec<f64>,
    pub population_plain_determinacy: Vec<f64>,
    pub population_cp_determinacy: Vec<f64>,
    pub published: Option<PublishedValues>,
    /// Checks that decide [`ExampleReport::passed`].
    pub checks: Vec<Check>,
    /// Comparisons with published values; informational.
    pub published_checks: Vec<Check>,
}

impl ExampleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn factor_labels(&self) -> Vec<String> {
        self.xi_labels
            .iter()
            .chain(&self.eta_labels)
            .cloned()
            .collect()
    }
}

/// Runs the pipeline on the bundled model at the published sample size.
pub fn run_paper_example(seed: u64) -> Result<ExampleReport> {
    let mut report = run_example(&table1_model(), seed, EXAMPLE_CASES)?;
    attach_published(&mut report, published_values());
    Ok(report)
}

fn corr_betas(weights: &DMatrix<f64>, sigma: &DMatrix<f64>, n_pred: usize) -> Result<DMatrix<f64>> {
    let cov = score_cov(weights, sigma);
    let labels: Vec<String> = (0..cov.nrows())
        .map(|i| format!("score {}", i + 1))
        .collect();
    let r = cov_to_corr(&cov, &labels)?;
    let k = r.nrows();
    betas_from_correlations(
        &r.view((0, 0), (n_pred, n_pred)).into_owned(),
        &r.view((0, n_pred), (n_pred, k - n_pred)).into_owned(),
    )
}

/// Runs the pipeline for any model with both factor blocks.
pub fn run_example(model: &SemModel, seed: u64, n_cases: usize) -> Result<ExampleReport> {
    let (kx, ke) = (model.n_xi(), model.n_eta());
    let sim = simulate_dataset(&SimulationSpec {
        model,
        n_cases,
        seed,
        emit_true_factors: false,
    })?;
    let c = combined_factor_corr(model)?;

    let plain = regression_scores_joint(model, &sim.x, &sim.y)?;
    let cp = cp_transform_sample(&plain, &c, &CpOptions::default())?;
    let takeuchi_route = cp_exo_takeuchi(model, &sim.x)?;

    let plain_betas = standardized_betas(
        &plain.block(Block::Exogenous),
        &plain.block(Block::Endogenous),
    )?;
    let cp_betas = standardized_betas(&cp.block(Block::Exogenous), &cp.block(Block::Endogenous))?;
    let takeuchi_route_betas = standardized_betas(&takeuchi_route, &cp.block(Block::Endogenous))?;

    let determinacies = |s: &crate::data::ScoreMatrix| -> Result<Vec<f64>> {
        let mut d = determinacy_exo(s, &sim.x, model)?.coefficients;
        d.extend(determinacy_endo(s, &sim.y, model)?.coefficients);
        Ok(d)
    };
    let plain_determinacy = determinacies(&plain)?;
    let cp_determinacy = determinacies(&cp)?;

    let sigma = implied_cov_joint(model)?;
    let w_plain = joint_regression_weights(model)?;
    let w_cp = joint_cp_param_weights(model)?;
    let population_plain_betas = corr_betas(&w_plain, &sigma, kx)?;
    let mb_x = model.measurement(Block::Exogenous)?;
    let w_takeuchi_route =
        embed_block_weights(model, Block::Exogenous, &cp_takeuchi_weights(&mb_x)?);
    let mut w_route = DMatrix::zeros(kx + ke, sigma.nrows());
    w_route.rows_mut(0, kx).copy_from(&w_takeuchi_route);
    w_route.rows_mut(kx, ke).copy_from(&w_cp.rows(kx, ke));
    let population_takeuchi_route_betas = corr_betas(&w_route, &sigma, kx)?;

    let population_det = |w: &DMatrix<f64>| -> Result<Vec<f64>> {
        let mut d =
            weight_determinacy(model, Block::Exogenous, &w.rows(0, kx).into_owned())?.coefficients;
        d.extend(
            weight_determinacy(model, Block::Endogenous, &w.rows(kx, ke).into_owned())?
                .coefficients,
        );
        Ok(d)
    };
    let population_plain_determinacy = population_det(&w_plain)?;
    let population_cp_determinacy = population_det(&w_cp)?;

    let gamma_t = model.gamma().transpose();
    let xi = model.xi_labels().to_vec();
    let eta = model.eta_labels().to_vec();
    let path = |i: usize, j: usize| format!("{}->{}", xi[i], eta[j]);

    let mut checks = Vec::new();
    for i in 0..kx {
        for j in 0..ke {
            checks.push(Check::within(
                format!("cp beta {} = gamma", path(i, j)),
                cp_betas[(i, j)],
                gamma_t[(i, j)],
                BETA_TOL,
            ));
        }
    }
    // The plain-score distortion is checked where the model predicts it is largest.
    let bias = &population_plain_betas - &gamma_t;
    let (bi, bj) = (0..kx)
        .flat_map(|i| (0..ke).map(move |j| (i, j)))
        .max_by(|a, b| bias[*a].abs().total_cmp(&bias[*b].abs()))
        .unwrap_or((0, 0));
    let observed_bias = plain_betas[(bi, bj)] - gamma_t[(bi, bj)];
    let direction = bias[(bi, bj)].signum();
    checks.push(Check {
        name: format!("plain beta {} biased away from gamma", path(bi, bj)),
        observed: plain_betas[(bi, bj)],
        target: gamma_t[(bi, bj)],
        tolerance: MIN_PLAIN_BIAS,
        passed: observed_bias.signum() == direction && observed_bias.abs() >= MIN_PLAIN_BIAS,
        note: format!(
            "(needs deviation >= {MIN_PLAIN_BIAS:.3} {}; population {:.3})",
            if direction > 0.0 {
                "upward"
            } else {
                "downward"
            },
            population_plain_betas[(bi, bj)]
        ),
    });
    let factor_labels = model.factor_labels();
    for (family, sampled, population) in [
        ("plain", &plain_determinacy, &population_plain_determinacy),
        ("cp", &cp_determinacy, &population_cp_determinacy),
    ] {
        for (k, label) in factor_labels.iter().enumerate() {
            checks.push(Check::within(
                format!("{family} determinacy {label} vs population"),
                sampled[k],
                population[k],
                DETERMINACY_TOL,
            ));
        }
    }

    Ok(ExampleReport {
        seed,
        n_cases,
        model_hash: model_hash(model),
        xi_labels: xi,
        eta_labels: eta,
        gamma_t,
        plain_betas,
        cp_betas,
        takeuchi_route_betas,
        population_plain_betas,
        population_takeuchi_route_betas,
        plain_determinacy,
        cp_determinacy,
        population_plain_determinacy,
        population_cp_determinacy,
        published: None,
        checks,
        published_checks: Vec::new(),
    })
}

fn attach_published(report: &mut ExampleReport, published: PublishedValues) {
    let mut checks = Vec::new();
    let (kx, ke) = (report.xi_labels.len(), report.eta_labels.len());
    for i in 0..kx {
        for j in 0..ke {
            let name = format!("{}->{}", report.xi_labels[i], report.eta_labels[j]);
            checks.push(Check::within(
                format!("cp beta {name} vs published"),
                report.cp_betas[(i, j)],
                published.cp_betas[(i, j)],
                BETA_TOL,
            ));
        }
    }
    let labels = report.factor_labels();
    for (family, sampled, target) in [
        (
            "plain",
            &report.plain_determinacy,
            &published.plain_determinacy,
        ),
        ("cp", &report.cp_determinacy, &published.cp_determinacy),
    ] {
        for (k, label) in labels.iter().enumerate() {
            checks.push(Check::within(
                format!("{family} determinacy {label} vs published"),
                sampled[k],
                target[k],
                DETERMINACY_TOL,
            ));
        }
    }
    report.published_checks = checks;
    report.published = Some(published);
}

impl fmt::Display for ExampleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# cpscore verify --seed {} --n {}",
            self.seed, self.n_cases
        )?;
        writeln!(
            f,
            "# model {}  seed {}  n {}",
            self.model_hash, self.seed, self.n_cases
        )?;
        writeln!(f, "# rng: {RNG_DESCRIPTION}")?;
        writeln!(
            f,
            "# plain scores: posterior means E(F | x, y) from all indicators"
        )?;
        writeln!(
            f,
            "# cp scores: joint transformation C^1/2 C_P^-1/2 P with sample C_P"
        )?;
        writeln!(
            f,
            "# takeuchi route: Phi^1/2 (Lx' Sx^-1 Lx)^-1/2 Lx' Sx^-1 x as predictors"
        )?;
        writeln!(
            f,
            "# determinacy: diag(P'P)^-1/2 P'x Sx^-1 Lx Phi (exogenous), diag(P'P)^-1/2 P'y Sy^-1 Ly (G Phi G' + Psi) (endogenous)"
        )?;
        writeln!(f)?;
        writeln!(f, "Standardized path coefficients")?;
        write!(
            f,
            "{:<12}{:>8}{:>8}{:>8}{:>8}{:>10}{:>10}",
            "path", "gamma", "plain", "(pop)", "cp", "takeuchi", "(pop)"
        )?;
        if self.published.is_some() {
            write!(f, "{:>10}{:>10}", "pub plain", "pub cp")?;
        }
        writeln!(f)?;
        for i in 0..self.xi_labels.len() {
            for j in 0..self.eta_labels.len() {
                write!(
                    f,
                    "{:<12}{:>8.3}{:>8.3}{:>8.3}{:>8.3}{:>10.3}{:>10.3}",
                    format!("{}->{}", self.xi_labels[i], self.eta_labels[j]),
                    self.gamma_t[(i, j)],
                    self.plain_betas[(i, j)],
                    self.population_plain_betas[(i, j)],
                    self.cp_betas[(i, j)],
                    self.takeuchi_route_betas[(i, j)],
                    self.population_takeuchi_route_betas[(i, j)],
                )?;
                if let Some(p) = &self.published {
                    write!(
                        f,
                        "{:>10.3}{:>10.3}",
                        p.plain_betas[(i, j)],
                        p.cp_betas[(i, j)]
                    )?;
                }
                writeln!(f)?;
            }
        }
        writeln!(f)?;
        writeln!(f, "Determinacy")?;
        write!(
            f,
            "{:<12}{:>8}{:>8}{:>8}{:>8}",
            "factor", "plain", "(pop)", "cp", "(pop)"
        )?;
        if self.published.is_some() {
            write!(f, "{:>10}{:>10}", "pub plain", "pub cp")?;
        }
        writeln!(f)?;
        for (k, label) in self.factor_labels().iter().enumerate() {
            write!(
                f,
                "{:<12}{:>8.3}{:>8.3}{:>8.3}{:>8.3}",
                label,
                self.plain_determinacy[k],
                self.population_plain_determinacy[k],
                self.cp_determinacy[k],
                self.population_cp_determinacy[k]
            )?;
            if let Some(p) = &self.published {
                write!(
                    f,
                    "{:>10.2}{:>10.2}",
                    p.plain_determinacy[k], p.cp_determinacy[k]
                )?;
            }
            writeln!(f)?;
        }
        writeln!(f)?;
        writeln!(f, "Checks")?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        if !self.published_checks.is_empty() {
            writeln!(f)?;
            writeln!(f, "Published values (informational)")?;
            for c in &self.published_checks {
                writeln!(f, "{c}")?;
            }
        }
        writeln!(f)?;
        writeln!(
            f,
            "result: {} ({} of {} checks passed)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len()
        )
    }
}
