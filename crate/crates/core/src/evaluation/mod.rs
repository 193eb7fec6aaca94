//! Overlap and surface metrics, per-case reports and the experiment grids.

mod evaluate;
mod grid;
mod metrics;
mod plot;
mod report;

pub use evaluate::{evaluate, evaluate_checkpoint, network_from_checkpoint};
pub use grid::{
    ablation_rows, beta_rows, fraction_rows, run_ablation, run_grid, sweep_beta, sweep_fraction, ExperimentGrid,
    GridKind, GridOptions, GridRow, RowResult, BETA_GRID, FRACTION_GRID,
};
pub use metrics::{asd, case_metrics, dice, hd95, jaccard, percentile_linear, CaseMetrics, OverlapCounts};
pub use plot::line_plot_png;
pub use report::{config_fingerprint, mean_sd, MetricReport, MetricSummary, REPORT_CSV_HEADER};
