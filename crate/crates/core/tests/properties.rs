use cpscore::determinacy::{determinacy_endo, determinacy_exo};
use cpscore::io::{read_table, write_table};
use cpscore::kernels::{sample_corr, sym_inv_sqrt, sym_sqrt, PD_REL_TOL};
use cpscore::model::{combined_factor_corr, implied_cov_x, implied_cov_y, psi_from_eta_corr};
use cpscore::regression::standardized_betas;
use cpscore::scores::{cp_transform, regression_scores_joint};
use cpscore::simulation::{random_model, rng_from_seed, simulate_dataset};
use cpscore::{Block, Provenance, ScoreMatrix, SimulationSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn normal_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_spd(seed: u64, k: usize) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let b = normal_matrix(&mut rng, k, k);
    &b * b.transpose() + DMatrix::identity(k, k) * 0.1
}

fn random_orthogonal(seed: u64, k: usize) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    normal_matrix(&mut rng, k, k).qr().q()
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

fn scores(values: DMatrix<f64>, blocks: Vec<Block>) -> ScoreMatrix {
    let labels = (0..values.ncols()).map(|i| format!("f{}", i + 1)).collect();
    ScoreMatrix::new(values, labels, blocks, Provenance::PlausibleMean).unwrap()
}

fn rescale(s: &ScoreMatrix, factors: &[f64]) -> ScoreMatrix {
    let mut v = s.values().clone();
    for (j, f) in factors.iter().enumerate() {
        v.column_mut(j).scale_mut(*f);
    }
    ScoreMatrix::new(v, s.labels().to_vec(), s.blocks().to_vec(), s.provenance()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sym_sqrt_squares_back(seed in any::<u64>(), k in 2usize..=10) {
        let s = random_spd(seed, k);
        let root = sym_sqrt(&s, PD_REL_TOL).unwrap();
        prop_assert!(rel_err(&(&root * &root), &s) < 1e-9);
        let inv_root = sym_inv_sqrt(&s, PD_REL_TOL).unwrap();
        prop_assert!(rel_err(&(&inv_root * &root), &DMatrix::identity(k, k)) < 1e-9);
    }

    #[test]
    fn sym_sqrt_commutes_with_rotation(seed in any::<u64>(), k in 2usize..=10) {
        let s = random_spd(seed, k);
        let q = random_orthogonal(seed ^ 0x5eed, k);
        let lhs = sym_sqrt(&(&q * &s * q.transpose()), PD_REL_TOL).unwrap();
        let rhs = &q * sym_sqrt(&s, PD_REL_TOL).unwrap() * q.transpose();
        prop_assert!(rel_err(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn sample_corr_ignores_affine_rescaling(
        seed in any::<u64>(),
        k in 2usize..=6,
        scale in prop::collection::vec(0.01f64..100.0, 6),
        shift in prop::collection::vec(-50.0f64..50.0, 6),
    ) {
        let mut rng = rng_from_seed(seed);
        let p = scores(normal_matrix(&mut rng, 40, k), vec![Block::Exogenous; k]);
        let mut v = p.values().clone();
        for j in 0..k {
            v.column_mut(j).apply(|x| *x = *x * scale[j] + shift[j]);
        }
        let q = scores(v, vec![Block::Exogenous; k]);
        let a = sample_corr(&p).unwrap();
        let b = sample_corr(&q).unwrap();
        prop_assert!((a.values() - b.values()).amax() < 1e-12);
    }

    #[test]
    fn cp_transform_hits_target_and_ignores_scale(
        seed in any::<u64>(),
        n_xi in 1usize..=3,
        n_eta in 1usize..=2,
        scale in prop::collection::vec(0.01f64..100.0, 5),
    ) {
        let mut rng = rng_from_seed(seed);
        let model = random_model(&mut rng, n_xi, n_eta, 3).unwrap();
        let c = combined_factor_corr(&model).unwrap();
        let k = n_xi + n_eta;
        let p = ScoreMatrix::new(
            normal_matrix(&mut rng, 50, k),
            model.factor_labels(),
            model.factor_blocks(),
            Provenance::PlausibleMean,
        ).unwrap();
        let out = cp_transform(&p, &c, &sample_corr(&p).unwrap()).unwrap();
        prop_assert!((sample_corr(&out).unwrap().values() - c.values()).amax() < 1e-10);
        let q = rescale(&p, &scale[..k]);
        let out_q = cp_transform(&q, &c, &sample_corr(&q).unwrap()).unwrap();
        prop_assert!((out.values() - out_q.values()).amax() < 1e-10);
    }

    #[test]
    fn betas_ignore_column_scale(
        seed in any::<u64>(),
        kx in 1usize..=4,
        ky in 1usize..=3,
        scale in prop::collection::vec(0.01f64..100.0, 7),
    ) {
        let mut rng = rng_from_seed(seed);
        let x = scores(normal_matrix(&mut rng, 30, kx), vec![Block::Exogenous; kx]);
        let y = scores(normal_matrix(&mut rng, 30, ky), vec![Block::Endogenous; ky]);
        let base = standardized_betas(&x, &y).unwrap();
        let scaled = standardized_betas(&rescale(&x, &scale[..kx]), &rescale(&y, &scale[kx..kx + ky])).unwrap();
        prop_assert!((base - scaled).amax() < 1e-10);
    }

    #[test]
    fn model_invariants(seed in any::<u64>(), n_xi in 1usize..=3, n_eta in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let model = random_model(&mut rng, n_xi, n_eta, 2).unwrap();
        let c = combined_factor_corr(&model).unwrap();
        let v = c.values();
        prop_assert!((v - v.transpose()).amax() < 1e-12);
        for i in 0..v.nrows() {
            prop_assert!((v[(i, i)] - 1.0).abs() < 1e-12);
        }
        for s in [implied_cov_x(&model).unwrap(), implied_cov_y(&model).unwrap()] {
            for i in 0..s.nrows() {
                prop_assert!((s[(i, i)] - 1.0).abs() < 1e-10);
            }
        }
        let eta_corr = model.eta_cov();
        let psi = psi_from_eta_corr(model.gamma(), model.phi(), &eta_corr).unwrap();
        let back = model.gamma() * model.phi() * model.gamma().transpose() + psi;
        prop_assert!((back - eta_corr).amax() < 1e-12);
    }

    #[test]
    fn csv_round_trip(seed in any::<u64>(), r in 1usize..20, c in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let v = normal_matrix(&mut rng, r, c) * 1e3;
        let labels: Vec<String> = (0..c).map(|i| format!("v{i}")).collect();
        let mut buf = Vec::new();
        write_table(&mut buf, &labels, &v).unwrap();
        let table = read_table(buf.as_slice()).unwrap();
        prop_assert_eq!(table.labels, labels);
        prop_assert!((table.values - v).amax() < 1e-12);
    }
}

#[test]
fn determinacy_ignores_score_scale() {
    let mut rng = rng_from_seed(5);
    let model = random_model(&mut rng, 2, 2, 3).unwrap();
    let sim = simulate_dataset(&SimulationSpec {
        model: &model,
        n_cases: 300,
        seed: 9,
        emit_true_factors: false,
    })
    .unwrap();
    let p = regression_scores_joint(&model, &sim.x, &sim.y).unwrap();
    let q = rescale(&p, &[0.2, 7.0, 31.0, 0.003]);
    let a = determinacy_exo(&p, &sim.x, &model).unwrap();
    let b = determinacy_exo(&q, &sim.x, &model).unwrap();
    let c = determinacy_endo(&p, &sim.y, &model).unwrap();
    let d = determinacy_endo(&q, &sim.y, &model).unwrap();
    for (u, v) in a
        .coefficients
        .iter()
        .chain(&c.coefficients)
        .zip(b.coefficients.iter().chain(&d.coefficients))
    {
        assert!((u - v).abs() < 1e-10);
    }
}
