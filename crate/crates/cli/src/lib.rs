//! Library surface behind the `lyapgibbs` binary: configuration
//! ingestion, the classify/solve/sweep/verify runs, and report
//! rendering. The binary is a thin argument-parsing shell over this.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{
    audit, gather_verify_artifacts, run_classify, run_solve, run_sweep, run_verify, to_json,
    ClassifyReport, SolveReport, SweepOutput, SweepRow, VerifyArtifacts, VerifyReport,
};
pub use config::{build_kernel, KernelConfig, NumericsConfig, RunConfig, SweepConfig};
pub use error::CliError;
