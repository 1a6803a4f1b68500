use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use cpscore::determinacy::{
    determinacy_endo, determinacy_endo_appendix, determinacy_exo, DeterminacyReport,
};
use cpscore::example::{run_example, run_paper_example, table1_model, EXAMPLE_CASES};
use cpscore::io::{
    model_hash, parse_model_file, parse_model_unvalidated, read_data_csv, read_scores_csv,
    write_data_csv, write_scores_csv,
};
use cpscore::model::{combined_factor_corr, validate_model};
use cpscore::scores::{
    cp_scores_from_params, cp_scores_joint_from_params, cp_takeuchi_scores, cp_transform_blockwise,
    cp_transform_sample, regression_scores, regression_scores_joint, takeuchi_scores_block,
};
use cpscore::simulation::{simulate_dataset, RNG_DESCRIPTION};
use cpscore::{
    Block, CpOptions, DataMatrix, EigenvalueMode, ScoreMatrix, SemModel, SimulationSpec,
};

#[derive(Parser)]
#[command(
    name = "cpscore",
    version,
    about = "Correlation-preserving factor scores for structural equation models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file; exit 1 if any invariant is violated.
    Validate { model: PathBuf },
    /// Draw indicator data (and optionally true factors) from a model.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_x: PathBuf,
        #[arg(long)]
        out_y: PathBuf,
        #[arg(long)]
        out_factors: Option<PathBuf>,
    },
    /// Compute factor scores from indicator data and model parameters.
    Scores {
        model: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transform existing scores so their correlations match the model.
    Transform {
        model: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Joint)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        /// Use absolute eigenvalues of the target correlation instead of
        /// rejecting it when it is not positive definite.
        #[arg(long)]
        lenient_eigen: bool,
    },
    /// Determinacy coefficients of scores against observed data.
    Determinacy {
        model: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long)]
        y: Option<PathBuf>,
        /// Divide by the score variance instead of its standard deviation
        /// for endogenous factors, as the reference SPSS syntax does.
        #[arg(long)]
        appendix_compat: bool,
    },
    /// Run the bundled example end to end; exit 1 if a tolerance check fails.
    Verify {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = EXAMPLE_CASES)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Regression scores per block from that block's indicators.
    Regression,
    /// Posterior means of all factors from all indicators (needs --y).
    RegressionJoint,
    /// Orthonormal scores per block.
    Takeuchi,
    /// Correlation-preserving scores per block from parameters.
    CpParams,
    /// Correlation-preserving scores of all factors from all indicators (needs --y).
    CpParamsJoint,
    /// Symmetric root of the factor correlation times Takeuchi scores.
    CpTakeuchi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// All factors against the combined model correlation.
    Joint,
    /// Each block against its own correlation, cross-block correlations untouched.
    Exogenous,
}

/// Failure of a tolerance or validation check, as opposed to bad input.
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate { model } => validate(&model),
        Command::Simulate {
            model,
            n,
            seed,
            out_x,
            out_y,
            out_factors,
        } => simulate(&model, n, seed, &out_x, &out_y, out_factors.as_deref()),
        Command::Scores {
            model,
            x,
            y,
            method,
            out,
        } => scores(&model, &x, y.as_deref(), method, &out),
        Command::Transform {
            model,
            scores,
            mode,
            out,
            lenient_eigen,
        } => transform(&model, &scores, mode, &out, lenient_eigen),
        Command::Determinacy {
            model,
            scores,
            x,
            y,
            appendix_compat,
        } => determinacy(&model, &scores, x.as_deref(), y.as_deref(), appendix_compat),
        Command::Verify { seed, n } => verify(seed, n),
    }
}

fn load_model(path: &Path) -> Result<SemModel> {
    parse_model_file(path).with_context(|| format!("model {}", path.display()))
}

fn load_data(path: &Path) -> Result<DataMatrix> {
    read_data_csv(path).with_context(|| format!("data {}", path.display()))
}

fn validate(path: &Path) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let model =
        parse_model_unvalidated(&text).with_context(|| format!("model {}", path.display()))?;
    let report = validate_model(&model);
    println!("# model {} ({})", model_hash(&model), path.display());
    println!(
        "# {} exogenous, {} endogenous factors; {} x, {} y indicators",
        model.n_xi(),
        model.n_eta(),
        model.n_x(),
        model.n_y()
    );
    print!("{report}");
    Ok(if report.is_accepted() {
        0
    } else {
        EXIT_CHECK_FAILED
    })
}

fn simulate(
    path: &Path,
    n: usize,
    seed: u64,
    out_x: &Path,
    out_y: &Path,
    out_factors: Option<&Path>,
) -> Result<u8> {
    let model = load_model(path)?;
    let sim = simulate_dataset(&SimulationSpec {
        model: &model,
        n_cases: n,
        seed,
        emit_true_factors: out_factors.is_some(),
    })?;
    write_data_csv(out_x, &sim.x)?;
    write_data_csv(out_y, &sim.y)?;
    if let (Some(p), Some(f)) = (out_factors, &sim.factors) {
        write_scores_csv(p, f)?;
    }
    println!(
        "# cpscore simulate {} --n {n} --seed {seed}",
        path.display()
    );
    println!("# model {}  rng: {RNG_DESCRIPTION}", model_hash(&model));
    println!("wrote {n} cases");
    Ok(0)
}

fn per_block(
    model: &SemModel,
    x: &DataMatrix,
    y: Option<&DataMatrix>,
    f: impl Fn(&SemModel, Block, &DataMatrix) -> cpscore::Result<ScoreMatrix>,
) -> Result<ScoreMatrix> {
    let mut parts = vec![f(model, Block::Exogenous, x)?];
    if let Some(y) = y {
        parts.push(f(model, Block::Endogenous, y)?);
    }
    let provenance = parts[0].provenance();
    let refs: Vec<&ScoreMatrix> = parts.iter().collect();
    Ok(ScoreMatrix::hstack(&refs, provenance)?)
}

fn scores(path: &Path, x: &Path, y: Option<&Path>, method: Method, out: &Path) -> Result<u8> {
    let model = load_model(path)?;
    let x = load_data(x)?;
    let y = y.map(load_data).transpose()?;
    let need_y = || y.as_ref().context("this method needs --y");
    let s = match method {
        Method::Regression => per_block(&model, &x, y.as_ref(), regression_scores)?,
        Method::RegressionJoint => regression_scores_joint(&model, &x, need_y()?)?,
        Method::Takeuchi => per_block(&model, &x, y.as_ref(), takeuchi_scores_block)?,
        Method::CpParams => per_block(&model, &x, y.as_ref(), cp_scores_from_params)?,
        Method::CpParamsJoint => cp_scores_joint_from_params(&model, &x, need_y()?)?,
        Method::CpTakeuchi => per_block(&model, &x, y.as_ref(), cp_takeuchi_scores)?,
    };
    write_scores_csv(out, &s)?;
    println!("# model {}  scores: {}", model_hash(&model), s.provenance());
    println!(
        "wrote {} cases x {} factors ({})",
        s.n_cases(),
        s.n_factors(),
        s.labels().join(", ")
    );
    Ok(0)
}

fn transform(path: &Path, scores: &Path, mode: Mode, out: &Path, lenient: bool) -> Result<u8> {
    let model = load_model(path)?;
    let p =
        read_scores_csv(scores, &model).with_context(|| format!("scores {}", scores.display()))?;
    let opts = CpOptions {
        target_mode: if lenient {
            EigenvalueMode::Absolute
        } else {
            EigenvalueMode::Strict
        },
        ..CpOptions::default()
    };
    let result = match mode {
        Mode::Joint => {
            let c = combined_factor_corr(&model)?;
            cp_transform_sample(&p, &c, &opts)?
        }
        Mode::Exogenous => cp_transform_blockwise(&p, &model, &opts)?,
    };
    write_scores_csv(out, &result)?;
    println!("# model {}", model_hash(&model));
    match mode {
        Mode::Joint => println!(
            "# transform: joint, C^1/2 C_P^-1/2 over all factors, C_P = sample correlation"
        ),
        Mode::Exogenous => {
            println!("# transform: per block, target Phi or E(eta eta'), C_P = sample correlation")
        }
    }
    if lenient {
        println!("# eigenvalues of the target: absolute values (lenient)");
    }
    println!(
        "wrote {} cases x {} factors",
        result.n_cases(),
        result.n_factors()
    );
    Ok(0)
}

fn determinacy(
    path: &Path,
    scores: &Path,
    x: Option<&Path>,
    y: Option<&Path>,
    appendix_compat: bool,
) -> Result<u8> {
    let model = load_model(path)?;
    let s =
        read_scores_csv(scores, &model).with_context(|| format!("scores {}", scores.display()))?;
    let has = |b: Block| s.blocks().contains(&b);
    let mut reports: Vec<DeterminacyReport> = Vec::new();
    if has(Block::Exogenous) {
        let x = x.context("scores contain exogenous factors; pass --x")?;
        reports.push(determinacy_exo(&s, &load_data(x)?, &model)?);
    }
    if has(Block::Endogenous) {
        let y = y.context("scores contain endogenous factors; pass --y")?;
        let y = load_data(y)?;
        reports.push(if appendix_compat {
            determinacy_endo_appendix(&s, &y, &model)?
        } else {
            determinacy_endo(&s, &y, &model)?
        });
    } else if appendix_compat {
        bail!("--appendix-compat only affects endogenous factors, and the scores have none");
    }
    println!(
        "# model {}  scores {}",
        model_hash(&model),
        scores.display()
    );
    if appendix_compat {
        println!("# WARNING: appendix-compatible endogenous values are not scale invariant");
    }
    for r in &reports {
        print!("{r}");
    }
    Ok(0)
}

fn verify(seed: u64, n: usize) -> Result<u8> {
    let report = if n == EXAMPLE_CASES {
        run_paper_example(seed)?
    } else {
        run_example(&table1_model(), seed, n)?
    };
    print!("{report}");
    Ok(if report.passed() {
        0
    } else {
        EXIT_CHECK_FAILED
    })
}
