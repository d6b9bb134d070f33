//! Benchmark harness for the Stokes multigrid solvers: solver comparison
//! tables, FMG accuracy studies, closed-form predictions and a smoother
//! throughput probe.

pub mod commands;
pub mod config;
pub mod report;

pub use config::{BenchConfig, FmgVariant, Format, LevelRange};
pub use report::{FmgRow, MetricRow, RunRow, Table};
