//! Data generation from a model.
//!
//! Factors are drawn as `C^{1/2} z` with the symmetric square root of the
//! combined factor correlation, indicators as `Lambda f + sqrt(theta) z`.
//! Draw order per case: factors, then x uniques, then y uniques, all from one
//! sequential ChaCha20 stream.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::data::{Block, DataMatrix, Provenance, ScoreMatrix};
use crate::error::{Error, Result};
use crate::kernels::{center_columns, sample_cov, sym_inv_sqrt, sym_sqrt, symmetrize, PD_REL_TOL};
use crate::model::{
    combined_factor_corr, implied_cov_joint, implied_cov_x, implied_cov_y, uniquenesses,
    ModelParts, SemModel,
};

/// Generator identity recorded in reports.
pub const RNG_DESCRIPTION: &str =
    "ChaCha20 (rand_chacha 0.9), ziggurat standard normal (rand_distr 0.5)";

#[derive(Debug, Clone, Copy)]
pub struct SimulationSpec<'a> {
    pub model: &'a SemModel,
    pub n_cases: usize,
    pub seed: u64,
    pub emit_true_factors: bool,
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub x: DataMatrix,
    pub y: DataMatrix,
    /// Latent factor values, exogenous first; present when requested.
    pub factors: Option<ScoreMatrix>,
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn simulate_dataset(spec: &SimulationSpec<'_>) -> Result<SimulatedData> {
    let model = spec.model;
    let n = spec.n_cases;
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 cases, got {n}"
        )));
    }
    // surface negative uniquenesses with the indicator name
    implied_cov_x(model)?;
    implied_cov_y(model)?;
    let c = combined_factor_corr(model)?;
    let root = sym_sqrt(c.values(), PD_REL_TOL)?;
    let theta_x: Vec<f64> = uniquenesses(model, Block::Exogenous)
        .iter()
        .map(|t| t.sqrt())
        .collect();
    let theta_y: Vec<f64> = uniquenesses(model, Block::Endogenous)
        .iter()
        .map(|t| t.sqrt())
        .collect();
    let (kx, k) = (model.n_xi(), model.n_xi() + model.n_eta());
    let (nx, ny) = (model.n_x(), model.n_y());
    let lx = model.lambda_x();
    let ly = model.lambda_y();

    let mut rng = rng_from_seed(spec.seed);
    let mut factors = DMatrix::zeros(n, k);
    let mut x = DMatrix::zeros(n, nx);
    let mut y = DMatrix::zeros(n, ny);
    let mut z = vec![0.0; k];
    let mut f = vec![0.0; k];
    for case in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for (i, fi) in f.iter_mut().enumerate() {
            *fi = (0..k).map(|j| root[(i, j)] * z[j]).sum();
            factors[(case, i)] = *fi;
        }
        for i in 0..nx {
            let e: f64 = rng.sample(StandardNormal);
            x[(case, i)] = (0..kx).map(|j| lx[(i, j)] * f[j]).sum::<f64>() + theta_x[i] * e;
        }
        for i in 0..ny {
            let e: f64 = rng.sample(StandardNormal);
            y[(case, i)] = (kx..k).map(|j| ly[(i, j - kx)] * f[j]).sum::<f64>() + theta_y[i] * e;
        }
    }
    let factors = if spec.emit_true_factors {
        Some(ScoreMatrix::new(
            factors,
            model.factor_labels(),
            model.factor_blocks(),
            Provenance::TrueFactors,
        )?)
    } else {
        None
    };
    Ok(SimulatedData {
        x: DataMatrix::new(x, model.x_labels().to_vec())?,
        y: DataMatrix::new(y, model.y_labels().to_vec())?,
        factors,
    })
}

/// Data whose sample covariance (divisor `n - 1`) equals the model-implied
/// covariance of `[x; y]` to rounding error. Useful wherever a sample
/// computation must coincide with its population counterpart.
pub fn simulate_exact_moments(
    model: &SemModel,
    n_cases: usize,
    seed: u64,
) -> Result<(DataMatrix, DataMatrix)> {
    let (nx, ny) = (model.n_x(), model.n_y());
    let p = nx + ny;
    if n_cases <= p {
        return Err(Error::InsufficientData(format!(
            "exact-moment data needs more than {p} cases, got {n_cases}"
        )));
    }
    let sigma = implied_cov_joint(model)?;
    let mut rng = rng_from_seed(seed);
    let z = DMatrix::from_fn(n_cases, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let zc = center_columns(&z);
    let s = sample_cov(&zc)?;
    let whiten = sym_inv_sqrt(&s, PD_REL_TOL)?;
    let color = sym_sqrt(&sigma, PD_REL_TOL)?;
    let data = zc * whiten * color;
    let x = DataMatrix::new(data.columns(0, nx).into_owned(), model.x_labels().to_vec())?;
    let y = DataMatrix::new(data.columns(nx, ny).into_owned(), model.y_labels().to_vec())?;
    Ok((x, y))
}

fn random_corr<R: Rng>(rng: &mut R, k: usize, spread: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(k, k, |_, _| spread * rng.sample::<f64, _>(StandardNormal));
    let s = &b * b.transpose() + DMatrix::identity(k, k);
    let d: Vec<f64> = (0..k).map(|i| 1.0 / s[(i, i)].sqrt()).collect();
    let mut r = DMatrix::from_fn(k, k, |i, j| s[(i, j)] * d[i] * d[j]);
    for i in 0..k {
        r[(i, i)] = 1.0;
    }
    symmetrize(&r)
}

fn random_loadings<R: Rng>(
    rng: &mut R,
    factor_cov: &DMatrix<f64>,
    per_factor: usize,
) -> DMatrix<f64> {
    let k = factor_cov.nrows();
    let mut l = DMatrix::from_fn(k * per_factor, k, |i, j| {
        if i / per_factor == j {
            rng.random_range(0.5..0.85)
        } else {
            rng.random_range(-0.1..0.1)
        }
    });
    let common = &l * factor_cov * l.transpose();
    for i in 0..l.nrows() {
        let c = common[(i, i)];
        if c > 0.9 {
            let s = (0.9 / c).sqrt();
            l.row_mut(i).scale_mut(s);
        }
    }
    l
}

/// A random valid standardized model: simple-structure loadings with small
/// cross-loadings, moderate factor correlations, and structural paths whose
/// explained variance stays below 0.6.
pub fn random_model<R: Rng>(
    rng: &mut R,
    n_xi: usize,
    n_eta: usize,
    per_factor: usize,
) -> Result<SemModel> {
    let phi = random_corr(rng, n_xi, 0.5);
    let mut gamma = DMatrix::from_fn(n_eta, n_xi, |_, _| rng.random_range(-0.5..0.5));
    let explained = &gamma * &phi * gamma.transpose();
    for i in 0..n_eta {
        let v = explained[(i, i)];
        if v > 0.6 {
            let s = (0.6 / v).sqrt();
            gamma.row_mut(i).scale_mut(s);
        }
    }
    let explained = symmetrize(&(&gamma * &phi * gamma.transpose()));
    let r = random_corr(rng, n_eta, 0.5) * 0.5 + DMatrix::identity(n_eta, n_eta) * 0.5;
    let sd: Vec<f64> = (0..n_eta)
        .map(|i| (1.0 - explained[(i, i)]).sqrt())
        .collect();
    let psi = DMatrix::from_fn(n_eta, n_eta, |i, j| r[(i, j)] * sd[i] * sd[j]);
    let eta_cov = symmetrize(&(&explained + &psi));
    let lambda_x = random_loadings(rng, &phi, per_factor);
    let lambda_y = random_loadings(rng, &eta_cov, per_factor);
    SemModel::from_parts(ModelParts {
        lambda_x,
        phi,
        lambda_y,
        gamma,
        psi: Some(symmetrize(&psi)),
        eta_corr: None,
    })
}
