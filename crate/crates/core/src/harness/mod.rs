//! Experiments, statistics and instance generation.

mod experiment;
mod generate;
mod stats;

pub use experiment::{
    apply_param, read_runs_csv, run_experiment, summarize, write_runs_csv, write_summary_csv, Budget,
    ExperimentError, ExperimentSpec, RunRecord, SpecError, SummaryRow, Variant,
};
pub use generate::{generate_instance, GenerateError};
pub use stats::{significance_table, wilcoxon_rank_sum, wilcoxon_rank_sum_normal, Comparison, Outcome, RankSumTest, StatsError, WdlRow, EXACT_LIMIT};
