//! Cross-model and cross-dataset analyses over [`MetricReport`]s.
//!
//! [`MetricReport`]: crate::metrics::MetricReport

mod aggregate;
mod export;
mod gap;
mod plot;
mod rank;

pub use aggregate::{aggregate_by_model, multiseed_aggregate};
pub use export::{subgroup_export, write_subgroup_csv, SubgroupRow};
pub use gap::{gap_analysis, GapAnalysis, GapRecord, GapSummary};
pub use plot::{box_stats, gap_svg, render_plots, subgroup_svg, BoxStats};
pub use rank::{competition_ranks, rank_table, rank_table_from_reports, RankInput, RankRow, RankTable};
