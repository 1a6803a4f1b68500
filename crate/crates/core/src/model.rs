//! Estimated model parameters and the structures they imply.
//!
//! The structural part is `eta = Gamma xi + zeta` with `Cov(zeta) = Psi`; the
//! measurement parts are `x = Lambda_x xi + delta` and `y = Lambda_y eta + eps`
//! with diagonal unique variances. All quantities are completely standardized,
//! so unique variances are always derived as `1 - diag(Lambda K Lambda')`.

use std::fmt;

use nalgebra::DMatrix;

use crate::data::Block;
use crate::error::{Error, Result};
use crate::kernels::{
    self, check_symmetric, ensure_positive_definite, spd_inverse, symmetrize, PD_REL_TOL,
};

/// Tolerance on `diag(Gamma Phi Gamma' + Psi) = 1`.
pub const ETA_DIAG_TOL: f64 = 1e-6;
/// Tolerance for exact unit-diagonal and symmetry checks.
pub const EXACT_TOL: f64 = 1e-12;
/// Slack on standardized loading magnitudes and unique variances.
pub const LOADING_TOL: f64 = 1e-6;
const UNIQUENESS_TOL: f64 = 1e-10;

/// Correlation matrix over an ordered list of factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCorr {
    labels: Vec<String>,
    values: DMatrix<f64>,
}

impl FactorCorr {
    /// Checks symmetry and unit diagonal to 1e-12 and positive definiteness.
    pub fn new(labels: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let corr = Self::from_sample(labels, values)?;
        ensure_positive_definite(&corr.values, "factor correlation", PD_REL_TOL)?;
        Ok(corr)
    }

    /// Like [`FactorCorr::new`] without the definiteness check; sample
    /// correlations of collinear columns are singular but still valid output.
    pub(crate) fn from_sample(labels: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if labels.len() != values.nrows() {
            return Err(Error::Dimension(format!(
                "{} labels for a {}x{} correlation matrix",
                labels.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        check_symmetric(&values, EXACT_TOL, "factor correlation")?;
        for i in 0..values.nrows() {
            if (values[(i, i)] - 1.0).abs() > EXACT_TOL {
                return Err(Error::InvalidModel(format!(
                    "correlation diagonal for '{}' is {}",
                    labels[i],
                    values[(i, i)]
                )));
            }
        }
        Ok(Self { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn is_positive_definite(&self) -> bool {
        kernels::is_positive_definite(&self.values)
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Principal submatrix over a contiguous range of factors.
    pub fn sub(&self, start: usize, len: usize) -> FactorCorr {
        FactorCorr {
            labels: self.labels[start..start + len].to_vec(),
            values: self.values.view((start, start), (len, len)).into_owned(),
        }
    }

    pub fn identity(labels: Vec<String>) -> FactorCorr {
        let k = labels.len();
        FactorCorr {
            labels,
            values: DMatrix::identity(k, k),
        }
    }
}

/// Raw parameter matrices. Exactly one of `psi` and `eta_corr` is expected;
/// both are accepted when they agree to within [`ETA_DIAG_TOL`].
#[derive(Debug, Clone, Default)]
pub struct ModelParts {
    pub lambda_x: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub lambda_y: DMatrix<f64>,
    /// Path coefficients, one row per endogenous factor.
    pub gamma: DMatrix<f64>,
    pub psi: Option<DMatrix<f64>>,
    pub eta_corr: Option<DMatrix<f64>>,
}

/// Estimated structural equation model.
#[derive(Debug, Clone, PartialEq)]
pub struct SemModel {
    lambda_x: DMatrix<f64>,
    lambda_y: DMatrix<f64>,
    phi: DMatrix<f64>,
    gamma: DMatrix<f64>,
    psi: DMatrix<f64>,
    xi_labels: Vec<String>,
    eta_labels: Vec<String>,
    x_labels: Vec<String>,
    y_labels: Vec<String>,
}

impl SemModel {
    /// Builds a model after structural (shape) checks. Parameter-value
    /// invariants are reported by [`validate_model`].
    pub fn from_parts(parts: ModelParts) -> Result<Self> {
        let ModelParts {
            lambda_x,
            phi,
            lambda_y,
            gamma,
            psi,
            eta_corr,
        } = parts;
        let n_xi = phi.nrows();
        if !phi.is_square() {
            return Err(Error::Dimension(format!(
                "phi is {}x{}, expected square",
                phi.nrows(),
                phi.ncols()
            )));
        }
        if lambda_x.ncols() != n_xi {
            return Err(Error::Dimension(format!(
                "lambda_x has {} columns but phi has order {n_xi}",
                lambda_x.ncols()
            )));
        }
        let n_eta = lambda_y.ncols();
        if gamma.nrows() != n_eta || gamma.ncols() != n_xi {
            return Err(Error::Dimension(format!(
                "gamma is {}x{}, expected {n_eta}x{n_xi} (endogenous x exogenous)",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        for (name, m) in [("psi", &psi), ("eta_corr", &eta_corr)] {
            if let Some(m) = m {
                if m.nrows() != n_eta || m.ncols() != n_eta {
                    return Err(Error::Dimension(format!(
                        "{name} is {}x{}, expected {n_eta}x{n_eta}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        let psi = match (psi, eta_corr) {
            (Some(psi), None) => psi,
            (None, Some(eta_corr)) => psi_from_eta_corr(&gamma, &phi, &eta_corr)?,
            (Some(psi), Some(eta_corr)) => {
                let implied = &gamma * &phi * gamma.transpose() + &psi;
                let gap = (&implied - &eta_corr).amax();
                if gap > ETA_DIAG_TOL {
                    return Err(Error::InvalidModel(format!(
                        "psi and eta_corr both given but Gamma Phi Gamma' + Psi differs from eta_corr by {gap:.3e}"
                    )));
                }
                psi
            }
            (None, None) if n_eta == 0 => DMatrix::zeros(0, 0),
            (None, None) => {
                return Err(Error::InvalidModel(
                    "one of psi or eta_corr is required".into(),
                ));
            }
        };
        let model = SemModel {
            xi_labels: numbered("xi", n_xi),
            eta_labels: numbered("eta", n_eta),
            x_labels: numbered("x", lambda_x.nrows()),
            y_labels: numbered("y", lambda_y.nrows()),
            lambda_x,
            lambda_y,
            phi,
            gamma,
            psi,
        };
        for (name, m) in [
            ("lambda_x", &model.lambda_x),
            ("lambda_y", &model.lambda_y),
            ("phi", &model.phi),
        ] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "{name} contains non-finite entries"
                )));
            }
        }
        Ok(model)
    }

    /// Exogenous-only measurement model.
    pub fn exogenous(lambda_x: DMatrix<f64>, phi: DMatrix<f64>) -> Result<Self> {
        let n_xi = phi.nrows();
        Self::from_parts(ModelParts {
            lambda_x,
            phi,
            lambda_y: DMatrix::zeros(0, 0),
            gamma: DMatrix::zeros(0, n_xi),
            psi: None,
            eta_corr: None,
        })
    }

    pub fn with_labels(
        mut self,
        xi: Vec<String>,
        eta: Vec<String>,
        x: Vec<String>,
        y: Vec<String>,
    ) -> Result<Self> {
        let checks = [
            ("xi", &xi, self.n_xi()),
            ("eta", &eta, self.n_eta()),
            ("x", &x, self.n_x()),
            ("y", &y, self.n_y()),
        ];
        for (name, labels, n) in checks {
            if labels.len() != n {
                return Err(Error::Dimension(format!(
                    "{} {name} labels for {n} entries",
                    labels.len()
                )));
            }
        }
        let mut all: Vec<&String> = xi.iter().chain(eta.iter()).collect();
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Labels("factor labels must be unique".into()));
        }
        self.xi_labels = xi;
        self.eta_labels = eta;
        self.x_labels = x;
        self.y_labels = y;
        Ok(self)
    }

    pub fn lambda_x(&self) -> &DMatrix<f64> {
        &self.lambda_x
    }

    pub fn lambda_y(&self) -> &DMatrix<f64> {
        &self.lambda_y
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// Path coefficients, `n_eta x n_xi`.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn n_xi(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_eta(&self) -> usize {
        self.lambda_y.ncols()
    }

    pub fn n_x(&self) -> usize {
        self.lambda_x.nrows()
    }

    pub fn n_y(&self) -> usize {
        self.lambda_y.nrows()
    }

    pub fn xi_labels(&self) -> &[String] {
        &self.xi_labels
    }

    pub fn eta_labels(&self) -> &[String] {
        &self.eta_labels
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    /// Exogenous labels followed by endogenous labels.
    pub fn factor_labels(&self) -> Vec<String> {
        self.xi_labels
            .iter()
            .chain(self.eta_labels.iter())
            .cloned()
            .collect()
    }

    pub fn factor_blocks(&self) -> Vec<Block> {
        std::iter::repeat_n(Block::Exogenous, self.n_xi())
            .chain(std::iter::repeat_n(Block::Endogenous, self.n_eta()))
            .collect()
    }

    pub fn labels_of(&self, block: Block) -> &[String] {
        match block {
            Block::Exogenous => &self.xi_labels,
            Block::Endogenous => &self.eta_labels,
        }
    }

    pub fn indicator_labels_of(&self, block: Block) -> &[String] {
        match block {
            Block::Exogenous => &self.x_labels,
            Block::Endogenous => &self.y_labels,
        }
    }

    pub fn phi_corr(&self) -> Result<FactorCorr> {
        FactorCorr::new(self.xi_labels.clone(), self.phi.clone())
    }

    /// `E(eta eta') = Gamma Phi Gamma' + Psi`.
    pub fn eta_cov(&self) -> DMatrix<f64> {
        symmetrize(&(&self.gamma * &self.phi * self.gamma.transpose() + &self.psi))
    }

    /// Factor correlation of one block: `Phi` or `E(eta eta')`.
    pub fn factor_cov(&self, block: Block) -> DMatrix<f64> {
        match block {
            Block::Exogenous => self.phi.clone(),
            Block::Endogenous => self.eta_cov(),
        }
    }

    pub fn loadings(&self, block: Block) -> &DMatrix<f64> {
        match block {
            Block::Exogenous => &self.lambda_x,
            Block::Endogenous => &self.lambda_y,
        }
    }

    /// Loadings, factor correlation and implied covariance of one block.
    pub fn measurement(&self, block: Block) -> Result<MeasurementBlock> {
        let loadings = self.loadings(block).clone();
        let factor_cov = self.factor_cov(block);
        let sigma = implied_cov(&loadings, &factor_cov, self.indicator_labels_of(block))?;
        let what = match block {
            Block::Exogenous => "implied covariance of x",
            Block::Endogenous => "implied covariance of y",
        };
        let sigma_inv = spd_inverse(&sigma, what)?;
        Ok(MeasurementBlock {
            block,
            loadings,
            factor_cov,
            sigma,
            sigma_inv,
        })
    }
}

/// Measurement model of one block with its implied covariance and inverse.
#[derive(Debug, Clone)]
pub struct MeasurementBlock {
    pub block: Block,
    pub loadings: DMatrix<f64>,
    pub factor_cov: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub sigma_inv: DMatrix<f64>,
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// `Lambda K Lambda' + diag(1 - diag(Lambda K Lambda'))`.
fn implied_cov(
    loadings: &DMatrix<f64>,
    factor_cov: &DMatrix<f64>,
    labels: &[String],
) -> Result<DMatrix<f64>> {
    let common = symmetrize(&(loadings * factor_cov * loadings.transpose()));
    let mut sigma = common.clone();
    for i in 0..sigma.nrows() {
        let theta = 1.0 - common[(i, i)];
        if theta < -UNIQUENESS_TOL {
            return Err(Error::InvalidModel(format!(
                "negative implied uniqueness {theta:.6} for indicator '{}'",
                labels[i]
            )));
        }
        sigma[(i, i)] = 1.0;
    }
    Ok(sigma)
}

/// Unique variances `diag(I - Lambda K Lambda')`, clamped at zero.
pub fn uniquenesses(model: &SemModel, block: Block) -> Vec<f64> {
    let l = model.loadings(block);
    let common = l * model.factor_cov(block) * l.transpose();
    (0..common.nrows())
        .map(|i| (1.0 - common[(i, i)]).max(0.0))
        .collect()
}

/// `Sigma_x = Lambda_x Phi Lambda_x' + Theta_delta`.
pub fn implied_cov_x(model: &SemModel) -> Result<DMatrix<f64>> {
    implied_cov(model.lambda_x(), model.phi(), model.x_labels())
}

/// `Sigma_y = Lambda_y (Gamma Phi Gamma' + Psi) Lambda_y' + Theta_eps`.
pub fn implied_cov_y(model: &SemModel) -> Result<DMatrix<f64>> {
    implied_cov(model.lambda_y(), &model.eta_cov(), model.y_labels())
}

/// Covariance of observed variables with the factors, `Cov([x; y], [xi; eta])`.
pub fn indicator_factor_cov(model: &SemModel) -> DMatrix<f64> {
    let (nx, ny, kx, ke) = (model.n_x(), model.n_y(), model.n_xi(), model.n_eta());
    let phi = model.phi();
    let gamma = model.gamma();
    let mut out = DMatrix::zeros(nx + ny, kx + ke);
    out.view_mut((0, 0), (nx, kx))
        .copy_from(&(model.lambda_x() * phi));
    out.view_mut((0, kx), (nx, ke))
        .copy_from(&(model.lambda_x() * phi * gamma.transpose()));
    out.view_mut((nx, 0), (ny, kx))
        .copy_from(&(model.lambda_y() * gamma * phi));
    out.view_mut((nx, kx), (ny, ke))
        .copy_from(&(model.lambda_y() * model.eta_cov()));
    out
}

/// Joint implied covariance of `[x; y]`.
pub fn implied_cov_joint(model: &SemModel) -> Result<DMatrix<f64>> {
    let (nx, ny) = (model.n_x(), model.n_y());
    let sx = implied_cov_x(model)?;
    let sy = implied_cov_y(model)?;
    let cross =
        model.lambda_x() * model.phi() * model.gamma().transpose() * model.lambda_y().transpose();
    let mut out = DMatrix::zeros(nx + ny, nx + ny);
    out.view_mut((0, 0), (nx, nx)).copy_from(&sx);
    out.view_mut((nx, nx), (ny, ny)).copy_from(&sy);
    out.view_mut((0, nx), (nx, ny)).copy_from(&cross);
    out.view_mut((nx, 0), (ny, nx))
        .copy_from(&cross.transpose());
    Ok(out)
}

/// `Psi = E(eta eta') - Gamma Phi Gamma'`.
pub fn psi_from_eta_corr(
    gamma: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    eta_corr: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_symmetric(eta_corr, EXACT_TOL, "eta_corr")?;
    ensure_positive_definite(eta_corr, "eta_corr", PD_REL_TOL)
        .map_err(|e| Error::InvalidModel(format!("E(eta eta') {e}")))?;
    Ok(symmetrize(&(eta_corr - gamma * phi * gamma.transpose())))
}

/// Correlation of all factors, exogenous block first:
/// `[[Phi, Phi Gamma'], [Gamma Phi, Gamma Phi Gamma' + Psi]]`.
pub fn combined_factor_corr(model: &SemModel) -> Result<FactorCorr> {
    let (kx, ke) = (model.n_xi(), model.n_eta());
    let phi = model.phi();
    let cross = model.gamma() * phi;
    let mut c = DMatrix::zeros(kx + ke, kx + ke);
    c.view_mut((0, 0), (kx, kx)).copy_from(phi);
    c.view_mut((kx, 0), (ke, kx)).copy_from(&cross);
    c.view_mut((0, kx), (kx, ke)).copy_from(&cross.transpose());
    c.view_mut((kx, kx), (ke, ke)).copy_from(&model.eta_cov());
    for i in 0..kx + ke {
        if (c[(i, i)] - 1.0).abs() > ETA_DIAG_TOL {
            return Err(Error::InvalidModel(format!(
                "factor '{}' has implied variance {}",
                model.factor_labels()[i],
                c[(i, i)]
            )));
        }
        c[(i, i)] = 1.0;
    }
    let c = symmetrize(&c);
    ensure_positive_definite(&c, "model-implied factor correlation", PD_REL_TOL).map_err(|e| {
        match e {
            Error::NotPositiveDefinite { eigenvalue, .. } => Error::InvalidModel(format!(
                "degenerate model-implied correlation (smallest eigenvalue {eigenvalue:.3e})"
            )),
            other => other,
        }
    })?;
    FactorCorr::new(model.factor_labels(), c)
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, invariant: &'static str, detail: String) {
        self.violations.push(Violation { invariant, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "model accepted");
        }
        writeln!(f, "model rejected ({} violations)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every parameter-value invariant and lists the offending entries.
pub fn validate_model(model: &SemModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let phi = model.phi();
    let xi = model.xi_labels();
    for i in 0..model.n_xi() {
        if (phi[(i, i)] - 1.0).abs() > EXACT_TOL {
            report.push(
                "unit factor variance",
                format!("phi[{0},{0}] = {1}", xi[i], phi[(i, i)]),
            );
        }
        for j in 0..i {
            if (phi[(i, j)] - phi[(j, i)]).abs() > EXACT_TOL {
                report.push(
                    "phi symmetric",
                    format!("phi[{},{}] != phi[{},{}]", xi[i], xi[j], xi[j], xi[i]),
                );
            }
        }
    }
    if let Err(e) = ensure_positive_definite(&symmetrize(phi), "phi", PD_REL_TOL) {
        report.push(
            "phi positive definite",
            format!("phi is not positive definite ({e})"),
        );
    }

    let psi = model.psi();
    if check_symmetric(psi, EXACT_TOL, "psi").is_err() {
        report.push("psi symmetric", "psi is not symmetric".into());
    }
    let eta_cov = model.eta_cov();
    for (i, name) in model.eta_labels().iter().enumerate() {
        let d = eta_cov[(i, i)];
        if (d - 1.0).abs() > ETA_DIAG_TOL {
            report.push(
                "unit endogenous variance",
                format!("diag(Gamma Phi Gamma' + Psi)[{name}] = {d:.9}"),
            );
        }
    }
    if model.n_eta() > 0 {
        let spec = kernels::SpectralDecomposition::new(&symmetrize(psi));
        if let Ok(spec) = spec {
            if spec.smallest() < -UNIQUENESS_TOL {
                report.push(
                    "psi positive semidefinite",
                    format!("psi has eigenvalue {:.3e}", spec.smallest()),
                );
            }
        }
    }

    for block in [Block::Exogenous, Block::Endogenous] {
        let l = model.loadings(block);
        let names = model.indicator_labels_of(block);
        let factors = model.labels_of(block);
        let lname = match block {
            Block::Exogenous => "lambda_x",
            Block::Endogenous => "lambda_y",
        };
        for i in 0..l.nrows() {
            for j in 0..l.ncols() {
                if l[(i, j)].abs() > 1.0 + LOADING_TOL {
                    report.push(
                        "standardized loading",
                        format!("{lname}[{},{}] = {}", names[i], factors[j], l[(i, j)]),
                    );
                }
            }
        }
        let common = l * model.factor_cov(block) * l.transpose();
        for i in 0..common.nrows() {
            let theta = 1.0 - common[(i, i)];
            if theta < -UNIQUENESS_TOL {
                report.push(
                    "non-negative uniqueness",
                    format!("implied uniqueness of {} is {theta:.6}", names[i]),
                );
            }
        }
    }

    if let Ok(sx) = implied_cov_x(model) {
        if let Err(e) = ensure_positive_definite(&sx, "Sigma_x", PD_REL_TOL) {
            report.push("Sigma_x positive definite", e.to_string());
        }
    }
    if let Ok(sy) = implied_cov_y(model) {
        if let Err(e) = ensure_positive_definite(&sy, "Sigma_y", PD_REL_TOL) {
            report.push("Sigma_y positive definite", e.to_string());
        }
    }
    if report.is_accepted() {
        if let Err(e) = combined_factor_corr(model) {
            report.push("factor correlation positive definite", e.to_string());
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::table1_model;

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn table1_is_accepted() {
        let model = table1_model();
        let report = validate_model(&model);
        assert!(report.is_accepted(), "{report}");
        assert_eq!(model.n_x(), 15);
        assert_eq!(model.n_y(), 10);
        // gamma is stored endogenous x exogenous
        assert_eq!(model.gamma()[(1, 2)], 0.447);
        assert_eq!(model.gamma()[(0, 2)], 0.016);
    }

    #[test]
    fn psi_matches_hand_computation() {
        // Psi = Ceta - Gamma Phi Gamma', expanded entry by entry from the table.
        let phi = [
            [1.0, 0.275, 0.270],
            [0.275, 1.0, 0.324],
            [0.270, 0.324, 1.0],
        ];
        let g = [[0.270, 0.000, 0.016], [0.000, 0.037, 0.447]];
        let mut gpg = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..3 {
                    for j in 0..3 {
                        gpg[a][b] += g[a][i] * phi[i][j] * g[b][j];
                    }
                }
            }
        }
        let model = table1_model();
        let psi = model.psi();
        assert!((psi[(0, 0)] - (1.0 - gpg[0][0])).abs() < 1e-14);
        assert!((psi[(1, 1)] - (1.0 - gpg[1][1])).abs() < 1e-14);
        assert!((psi[(0, 1)] - (0.513 - gpg[0][1])).abs() < 1e-14);
        assert!((psi[(0, 0)] - 0.925).abs() < 5e-4);
        assert!((psi[(1, 1)] - 0.788).abs() < 5e-4);
        assert!((psi[(0, 1)] - 0.470).abs() < 5e-4);
    }

    #[test]
    fn psi_edge_cases() {
        let phi = DMatrix::identity(2, 2);
        let eta = m(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let psi = psi_from_eta_corr(&DMatrix::zeros(2, 2), &phi, &eta).unwrap();
        assert_eq!(psi, eta);

        let gamma = m(1, 2, &[0.6, 0.8]);
        let psi = psi_from_eta_corr(&gamma, &phi, &m(1, 1, &[1.0])).unwrap();
        assert!(psi[(0, 0)].abs() < 1e-15);

        let bad = m(2, 2, &[1.0, 1.2, 1.2, 1.0]);
        assert!(matches!(
            psi_from_eta_corr(&DMatrix::zeros(2, 2), &phi, &bad),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn eta_corr_round_trip() {
        let model = table1_model();
        let back = model.eta_cov();
        assert!((back[(0, 1)] - 0.513).abs() < 1e-12);
        assert!((back[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi_not_pd_is_rejected() {
        let phi = m(2, 2, &[1.0, 1.5, 1.5, 1.0]);
        let lx = m(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        let model = SemModel::exogenous(lx, phi).unwrap();
        let report = validate_model(&model);
        assert!(!report.is_accepted());
        assert!(
            report.to_string().contains("not positive definite"),
            "{report}"
        );
    }

    #[test]
    fn gamma_shape_mismatch_is_structural() {
        let parts = ModelParts {
            lambda_x: m(2, 2, &[0.7, 0.0, 0.0, 0.7]),
            phi: DMatrix::identity(2, 2),
            lambda_y: m(1, 1, &[0.7]),
            gamma: m(1, 3, &[0.1, 0.1, 0.1]),
            psi: Some(m(1, 1, &[0.98])),
            eta_corr: None,
        };
        assert!(matches!(
            SemModel::from_parts(parts),
            Err(Error::Dimension(_))
        ));
        let parts = ModelParts {
            lambda_x: m(2, 3, &[0.7, 0.0, 0.0, 0.0, 0.7, 0.0]),
            phi: DMatrix::identity(2, 2),
            ..Default::default()
        };
        assert!(matches!(
            SemModel::from_parts(parts),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn inconsistent_psi_and_eta_corr() {
        let base = ModelParts {
            lambda_x: m(1, 1, &[0.7]),
            phi: m(1, 1, &[1.0]),
            lambda_y: m(1, 1, &[0.7]),
            gamma: m(1, 1, &[0.5]),
            psi: Some(m(1, 1, &[0.75])),
            eta_corr: Some(m(1, 1, &[1.0])),
        };
        assert!(SemModel::from_parts(base.clone()).is_ok());
        let bad = ModelParts {
            psi: Some(m(1, 1, &[0.70])),
            ..base
        };
        assert!(matches!(
            SemModel::from_parts(bad),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn implied_cov_x_table1() {
        let model = table1_model();
        let sx = implied_cov_x(&model).unwrap();
        for i in 0..15 {
            assert!((sx[(i, i)] - 1.0).abs() < 1e-10);
        }
        // entry (x1, x2) = row1 * Phi * row2'
        let r1 = [0.750, 0.066, 0.025];
        let r2 = [0.845, 0.049, 0.002];
        let phi = [
            [1.0, 0.275, 0.270],
            [0.275, 1.0, 0.324],
            [0.270, 0.324, 1.0],
        ];
        let mut e = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                e += r1[i] * phi[i][j] * r2[j];
            }
        }
        assert!((sx[(0, 1)] - e).abs() < 1e-14);
    }

    #[test]
    fn implied_cov_trivial_cases() {
        let model = SemModel::exogenous(m(1, 1, &[0.8]), m(1, 1, &[1.0])).unwrap();
        assert_eq!(implied_cov_x(&model).unwrap(), m(1, 1, &[1.0]));
        assert!((uniquenesses(&model, Block::Exogenous)[0] - 0.36).abs() < 1e-15);

        let model = SemModel::exogenous(DMatrix::zeros(3, 2), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(implied_cov_x(&model).unwrap(), DMatrix::identity(3, 3));

        let model = SemModel::exogenous(m(1, 1, &[1.2]), m(1, 1, &[1.0])).unwrap();
        match implied_cov_x(&model) {
            Err(Error::InvalidModel(msg)) => assert!(msg.contains("x1"), "{msg}"),
            other => panic!("expected uniqueness error, got {other:?}"),
        }
    }

    #[test]
    fn implied_cov_y_cases() {
        let model = table1_model();
        let sy = implied_cov_y(&model).unwrap();
        for i in 0..10 {
            assert!((sy[(i, i)] - 1.0).abs() < 1e-10);
        }
        // y3, y6 = row3 * Ceta * row6'
        let (a, b) = ([0.999, -0.041], [-0.038, 0.534]);
        let c = [[1.0, 0.513], [0.513, 1.0]];
        let mut e = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                e += a[i] * c[i][j] * b[j];
            }
        }
        assert!((sy[(2, 5)] - e).abs() < 1e-12);

        let identity = SemModel::from_parts(ModelParts {
            lambda_x: m(1, 1, &[0.5]),
            phi: m(1, 1, &[1.0]),
            lambda_y: DMatrix::identity(2, 2),
            gamma: DMatrix::zeros(2, 1),
            psi: Some(DMatrix::identity(2, 2)),
            eta_corr: None,
        })
        .unwrap();
        assert_eq!(implied_cov_y(&identity).unwrap(), DMatrix::identity(2, 2));

        let perfect = SemModel::from_parts(ModelParts {
            lambda_x: m(1, 1, &[0.5]),
            phi: m(1, 1, &[1.0]),
            lambda_y: m(2, 1, &[1.0, 1.0]),
            gamma: DMatrix::zeros(1, 1),
            psi: Some(m(1, 1, &[1.0])),
            eta_corr: None,
        })
        .unwrap();
        assert_eq!(implied_cov_y(&perfect).unwrap()[(0, 1)], 1.0);
    }

    #[test]
    fn combined_corr_table1() {
        let model = table1_model();
        let c = combined_factor_corr(&model).unwrap();
        let v = c.values();
        assert_eq!(c.labels(), ["xi1", "xi2", "xi3", "eta1", "eta2"]);
        assert!((v.view((0, 0), (3, 3)) - model.phi()).amax() < 1e-15);
        assert!((v[(3, 4)] - 0.513).abs() < 1e-12);
        // cross block Gamma Phi: eta1 with xi2 = 0.270*0.275 + 0*1 + 0.016*0.324
        let e = 0.270 * 0.275 + 0.016 * 0.324;
        assert!((v[(3, 1)] - e).abs() < 1e-15);
        assert!((v[(1, 3)] - e).abs() < 1e-15);
        for i in 0..5 {
            assert_eq!(v[(i, i)], 1.0);
            for j in 0..5 {
                assert!((v[(i, j)] - v[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn combined_corr_degenerate_cases() {
        let independent = SemModel::from_parts(ModelParts {
            lambda_x: m(2, 2, &[0.7, 0.0, 0.0, 0.7]),
            phi: m(2, 2, &[1.0, 0.4, 0.4, 1.0]),
            lambda_y: m(1, 1, &[0.7]),
            gamma: DMatrix::zeros(1, 2),
            psi: Some(m(1, 1, &[1.0])),
            eta_corr: None,
        })
        .unwrap();
        let c = combined_factor_corr(&independent).unwrap();
        let expected = m(3, 3, &[1.0, 0.4, 0.0, 0.4, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(c.values(), &expected);

        let collapsed = SemModel::from_parts(ModelParts {
            lambda_x: m(2, 2, &[0.7, 0.0, 0.0, 0.7]),
            phi: DMatrix::identity(2, 2),
            lambda_y: m(2, 2, &[0.7, 0.0, 0.0, 0.7]),
            gamma: DMatrix::identity(2, 2),
            psi: Some(DMatrix::zeros(2, 2)),
            eta_corr: None,
        })
        .unwrap();
        match combined_factor_corr(&collapsed) {
            Err(Error::InvalidModel(msg)) => assert!(msg.contains("degenerate"), "{msg}"),
            other => panic!("expected degenerate error, got {other:?}"),
        }
    }
}
