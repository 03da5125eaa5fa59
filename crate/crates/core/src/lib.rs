//! Iterative causal-DAG discovery for tabular panel data.
//!
//! A pluggable proposer (an LLM endpoint, a scripted replay, or an offline
//! correlation heuristic) emits candidate graphs; a statistical verification
//! engine checks each candidate against structural, identification, and
//! model-fit criteria and feeds failures back to the proposer until a graph
//! is accepted or the iteration budget runs out.
//!
//! The numeric pipeline is generic over the scalar type through
//! [`scalar::Scalar`] (`f32` or `f64`); the aliases below fix `f64`, which is
//! what the CLI and the test suites use.

pub mod data;
pub mod eval;
pub mod graph;
pub mod ident;
pub mod propose;
pub mod run;
pub mod scalar;
pub mod stats;
pub mod synth;

pub use scalar::Scalar;

/// `f64` instantiations of the generic pipeline types.
pub type Dataset = data::PanelDataset<f64>;
pub type Fit = stats::RegressionFit<f64>;
pub type Diagnostics = eval::Diagnostics<f64>;
pub type Hyperparameters = propose::Hyperparameters<f64>;
pub type RunConfig = run::RunConfig<f64>;
pub type RunTranscript = run::RunTranscript<f64>;
