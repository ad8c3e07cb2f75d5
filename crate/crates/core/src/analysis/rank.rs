use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::gap::{index_reports, metric_of};
use crate::canonical::format_float;
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankInput {
    pub model_id: String,
    pub primary: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub model_id: String,
    pub primary_value: f64,
    pub primary_rank: usize,
    pub baseline_value: f64,
    pub baseline_rank: usize,
    /// `baseline_rank - primary_rank`: positive when the model climbs
    /// under the primary metric.
    pub delta_rank: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub primary_metric: String,
    pub baseline_metric: String,
    /// Primary value descending, ties by model id.
    pub rows: Vec<RankRow>,
}

/// Competition ranks (1-based, descending): tied values share the lowest
/// rank and the following rank numbers are skipped.
pub fn competition_ranks(values: &[(&str, f64)]) -> BTreeMap<String, usize> {
    let mut sorted: Vec<(&str, f64)> = values.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut ranks = BTreeMap::new();
    let mut current = 0;
    for (i, (id, v)) in sorted.iter().enumerate() {
        if i == 0 || *v != sorted[i - 1].1 {
            current = i + 1;
        }
        ranks.insert(id.to_string(), current);
    }
    ranks
}

pub fn rank_table(inputs: &[RankInput], primary_metric: &str, baseline_metric: &str) -> Result<RankTable> {
    if inputs.len() < 2 {
        return Err(Error::Config(format!("ranking needs at least 2 models, got {}", inputs.len())));
    }
    let primary: Vec<(&str, f64)> = inputs.iter().map(|r| (r.model_id.as_str(), r.primary)).collect();
    let baseline: Vec<(&str, f64)> = inputs.iter().map(|r| (r.model_id.as_str(), r.baseline)).collect();
    let primary_ranks = competition_ranks(&primary);
    let baseline_ranks = competition_ranks(&baseline);
    if primary_ranks.len() != inputs.len() {
        return Err(Error::Config("duplicate model ids in ranking input".into()));
    }
    let mut rows: Vec<RankRow> = inputs
        .iter()
        .map(|r| {
            let primary_rank = primary_ranks[&r.model_id];
            let baseline_rank = baseline_ranks[&r.model_id];
            RankRow {
                model_id: r.model_id.clone(),
                primary_value: r.primary,
                primary_rank,
                baseline_value: r.baseline,
                baseline_rank,
                delta_rank: baseline_rank as i64 - primary_rank as i64,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.primary_value
            .total_cmp(&a.primary_value)
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    Ok(RankTable {
        primary_metric: primary_metric.to_string(),
        baseline_metric: baseline_metric.to_string(),
        rows,
    })
}

/// Ranks models by `primary` taken from `primary_reports` against
/// `baseline` taken from `baseline_reports` (which may be the same set).
/// Every model in either set must appear in both.
pub fn rank_table_from_reports(
    primary_reports: &[MetricReport],
    primary: Metric,
    baseline_reports: &[MetricReport],
    baseline: Metric,
) -> Result<RankTable> {
    let p = index_reports(primary_reports, "primary")?;
    let b = index_reports(baseline_reports, "baseline")?;
    if let Some(missing) = b.keys().find(|m| !p.contains_key(*m)) {
        return Err(Error::MissingMetric {
            model_id: missing.to_string(),
            metric: primary.to_string(),
        });
    }
    let inputs = p
        .iter()
        .map(|(model, rp)| {
            let rb = b.get(model).ok_or_else(|| Error::MissingMetric {
                model_id: model.to_string(),
                metric: baseline.to_string(),
            })?;
            Ok(RankInput {
                model_id: model.to_string(),
                primary: metric_of(rp, primary)?,
                baseline: metric_of(rb, baseline)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rank_table(&inputs, primary.as_str(), baseline.as_str())
}

impl RankTable {
    /// Columns: `rank,model_id,<primary>,<baseline>,<baseline>_rank,delta_rank`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let baseline_rank = format!("{}_rank", self.baseline_metric);
        w.write_record(["rank", "model_id", &self.primary_metric, &self.baseline_metric, &baseline_rank, "delta_rank"])
            .map_err(csv_error)?;
        for row in &self.rows {
            w.write_record([
                row.primary_rank.to_string(),
                row.model_id.clone(),
                format_float(row.primary_value),
                format_float(row.baseline_value),
                row.baseline_rank.to_string(),
                format!("{:+}", row.delta_rank),
            ])
            .map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}
