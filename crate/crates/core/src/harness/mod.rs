//! Training, evaluation, benchmarking and reporting drivers.

pub mod bench;
pub mod config;
pub mod metrics;
pub mod report;
pub mod sim;

pub use bench::{bench_exec_time, bench_to_csv, parse_bench_csv, BenchRow};
pub use config::{Engine, RunConfig};
pub use metrics::{metrics_to_csv, parse_metrics_csv, MetricsWriter, PhaseAccumulator, PhaseMetrics, METRICS_HEADER};
pub use report::{emit_report, ReportFiles};
pub use sim::{
    load_params, run_agent_episode, run_eval, run_eval_on, run_eval_phases, run_training, summarize, train_from, write_eval,
    ActionSelection, EpisodeResult, Replica, TrainOutcome,
};
