//! Correlation-preserving factor scores for structural equation models with
//! exogenous (`xi`) and endogenous (`eta`) latent factors.
//!
//! The crate simulates data from a standardized model, computes regression,
//! Takeuchi and correlation-preserving scores, transforms existing scores so
//! that their correlations match the model, estimates path coefficients
//! between score blocks and reports determinacy coefficients.

// `!(a > b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod determinacy;
pub mod error;
pub mod example;
pub mod io;
pub mod kernels;
pub mod model;
pub mod regression;
pub mod scores;
pub mod simulation;

pub use data::{Block, DataMatrix, Provenance, ScoreMatrix};
pub use determinacy::{DeterminacyFormula, DeterminacyReport};
pub use error::{Error, Result};
pub use kernels::EigenvalueMode;
pub use model::{FactorCorr, ModelParts, SemModel, ValidationReport};
pub use scores::CpOptions;
pub use simulation::{SimulatedData, SimulationSpec};
