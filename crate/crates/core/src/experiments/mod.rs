//! Experiment drivers: weight-equivalence sweep, correction degradation
//! curves, local-strategy comparison and layered explanation reports.
//!
//! Every driver is a deterministic function of its configuration and base
//! seed. Grid points and Monte Carlo replicas run on the current rayon pool;
//! results are assembled by index, so the thread count never changes output.

mod degradation;
mod explain;
mod local;
pub mod output;
pub mod plot;
mod sweep;

pub use degradation::{degradation_curve, spread_ks, DegradationCurve};
pub use explain::{
    emit_explanation_report, ExplanationContext, ExplanationRecord, ExplanationReport, Scope,
};
pub use local::{
    local_refit_decisions, local_strategies_table, realize_local_refit, LocalConfig, ReplicationRecord, Strategy, StrategyRow, StrategyTable,
};
pub use sweep::{
    deviation_at_points, weight_equivalence_sweep, GridAxis, GridSpec, SweepResult,
};

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::fairglm::FitError;
use crate::pdm::PdmError;
use crate::selection::SelectionError;
use crate::values::ValuesError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Policy(#[from] PdmError),
    #[error(transparent)]
    Values(#[from] ValuesError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("subpopulation `{part}` has test rows but no training rows (replication {replication})")]
    EmptySubpopulation { part: String, replication: usize },
    #[error("scope {scope} requires {missing}")]
    MissingContext { scope: String, missing: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Seed of replica `index`: `base + index` (wrapping).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

/// Independent stream `tag` of a replica seed (splitmix64 finalizer).
pub fn substream(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
