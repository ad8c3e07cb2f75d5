use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::rank::csv_error;
use crate::canonical::format_float;
use crate::error::Result;
use crate::metrics::{LabelwiseMode, MetricReport};

/// One subgroup accuracy, long form, for box plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupRow {
    pub model_id: String,
    pub dataset_id: String,
    pub label_count: usize,
    pub accuracy: f64,
    pub mode: LabelwiseMode,
}

/// Rows for label counts in `min..=max`, ordered by dataset, model, count.
pub fn subgroup_export(reports: &[MetricReport], min_count: usize, max_count: usize) -> Vec<SubgroupRow> {
    let mut rows: Vec<SubgroupRow> = reports
        .iter()
        .flat_map(|r| {
            r.subgroups
                .per_group
                .iter()
                .filter(|g| (min_count..=max_count).contains(&g.label_count))
                .map(|g| SubgroupRow {
                    model_id: r.model_id.clone(),
                    dataset_id: r.dataset_id.clone(),
                    label_count: g.label_count,
                    accuracy: g.accuracy,
                    mode: r.subgroups.mode,
                })
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.dataset_id, &a.model_id, a.label_count).cmp(&(&b.dataset_id, &b.model_id, b.label_count))
    });
    rows
}

pub fn write_subgroup_csv<W: Write>(rows: &[SubgroupRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model_id", "dataset_id", "label_count", "accuracy", "mode"])
        .map_err(csv_error)?;
    for row in rows {
        w.write_record([
            row.model_id.clone(),
            row.dataset_id.clone(),
            row.label_count.to_string(),
            format_float(row.accuracy),
            row.mode.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| crate::Error::Config(e.to_string()))
}
