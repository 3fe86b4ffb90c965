//! Grid benchmark and per-update error traces.

mod bench;
mod summary;
mod trace;

use thiserror::Error;

use crate::exact::ExactError;
use crate::factor_graph::GraphError;
use crate::schedulers::SchedulerError;

pub use bench::{bench_schedules, write_bench_csv, BenchConfig, BenchRow, BENCH_HEADER};
pub use summary::{summarize, PairwiseComparison, ScheduleSummary, Summary};
pub use trace::{trace_metrics, write_trace_csv, TraceRecord, TRACE_HEADER};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("no rows to summarize")]
    EmptyInput,
    #[error("rbp0l did not converge within {messages_computed} computed updates")]
    DidNotConverge { messages_computed: u64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
