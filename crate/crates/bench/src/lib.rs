//! Benchmark and verification harness for the marketlearn crate: seeded
//! loss-sequence generators, experiment orchestration with CSV artifacts,
//! and the bound-verification suite behind the `marketlearn` CLI.

pub mod error;
pub mod experiment;
pub mod gen;
pub mod logs;
pub mod verify;

pub use error::{BenchError, Result};
pub use experiment::{
    run_experiment, run_simulate, AlgoChoice, ExperimentConfig, ExperimentSummary, GenChoice,
    MarketChoice, RunStatus, SimulateConfig,
};
pub use gen::{rotating_losses, GeneratorKind, LossGenerator};
pub use logs::{market_session_csv, msr_session_csv, regret_trace_csv, BoundConfig};
pub use verify::{verify_all, CheckLine, Relation, Report};
