//! Benchmark orchestration, the external-adapter bridge and report output.

pub mod adapter;
pub mod config;
pub mod mock;
mod report;
mod run;

pub use adapter::{
    bridge_external, hard_timeout, run_session, AdapterClient, AdapterInfo, BridgeOutcome, ProcessTransport, Reply,
    Request, Transport, PROTOCOL_VERSION,
};
pub use config::{BenchmarkConfig, DatasetSource, MethodConfig, DEFAULT_AUTOML_BUDGET_SECONDS};
pub use report::{emit_report, score_records, write_plotdata, write_table, ReportFormat, PLOT_CRITERIA};
pub use run::{load_dataset, run_benchmark, Cell, CellStatus, CleanSummary, CycleLog, ReportBundle, SubsetSummary};
