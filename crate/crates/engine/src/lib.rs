//! Partitioned execution engine and tooling around `gasline-core`.
//!
//! [`runtime`] executes validated plans over partitioned graphs with one
//! worker per partition (BSP supersteps, message-passing only). [`io`] and
//! [`gen`] carry the text file formats and synthetic data generators,
//! [`report`] / [`compare`] the structured metrics, and [`cli`] the
//! `gasline` command line on top of it all.

pub mod cli;
pub mod compare;
pub mod gen;
pub mod io;
pub mod report;
pub mod runtime;

pub use compare::{compare_runs, ComparisonRecord};
pub use report::{ExecutionReport, StepMetrics};
pub use runtime::{execute, ExecError, ExecOptions, MessageBatch};
