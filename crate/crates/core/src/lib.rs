//! Simulation and analysis of algorithmic decision-making under human
//! oversight.
//!
//! A strategic decision-maker picks a fairness-regularized classifier
//! ([`fairglm`]) by weighing accuracy against value statistics ([`values`]).
//! A practical decision-maker then overrides its recommendations according
//! to some policy ([`pdm`]). [`selection`] chooses algorithms robustly
//! against those overrides, and [`experiments`] quantifies how much the
//! overseer blurs the intended values.

pub mod cli;
pub mod dataset;
pub mod experiments;
pub mod fairglm;
pub mod pdm;
pub mod selection;
pub mod values;

pub use dataset::{Dataset, RawTable, SplitPair};
pub use fairglm::{FairGlmModel, FitOptions, ValueWeights};
pub use pdm::{AppliedDecisions, PdmPolicy};
pub use values::ValueReport;
