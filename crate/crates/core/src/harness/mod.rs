//! Closed-loop experiments: references, the simulation loop, metrics, and
//! result files.

mod metrics;
mod output;
mod reference;
mod run;

pub use metrics::{compute_metrics, steady_state_start, Metrics, METRIC_LABELS};
pub use output::{
    comparison_csv, comparison_table, diagnostics_csv, metrics_toml, plot_csvs, run_csv, write_run_outputs,
    TIMING_COLUMNS,
};
pub use reference::{Reference, Unit};
pub use run::{
    derive_seed, offline_excitation, run_closed_loop, DiagnosticsTable, LoopSpec, OfflineData, RunResult,
    SeedRecord, LIFTER_STREAM, NOISE_STREAM,
};
