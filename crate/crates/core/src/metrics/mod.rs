//! Evaluation statistics for interval sets.

mod bootstrap;
mod intervals;
mod report;
mod stats;
mod youden;

pub use bootstrap::{bootstrap_ci, bootstrap_ci_by, BootstrapConfig, Statistic};
pub use intervals::{
    cascade_ratio, marginal_coverage, mean_winkler, strata_of, stratified_rows, stratum_label, winkler_score,
    StratumRow,
};
pub use report::{evaluate, render_number, CiBounds, EvalOptions, MetricsReport, CSV_COLUMNS};
pub use stats::{average_ranks, kolmogorov_sf, ks_two_sample, spearman, KsResult, SpearmanResult};
pub use youden::{youden_threshold, YoudenCut};
