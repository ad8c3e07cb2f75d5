use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricReport};

/// One model's metric on two datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "GapRecordWire")]
pub struct GapRecord {
    pub model_id: String,
    pub metric: Metric,
    pub value_a: f64,
    pub value_b: f64,
    /// Always `value_a - value_b`; recomputed on deserialization.
    pub absolute_difference: f64,
}

#[derive(Deserialize)]
struct GapRecordWire {
    model_id: String,
    metric: Metric,
    value_a: f64,
    value_b: f64,
}

impl From<GapRecordWire> for GapRecord {
    fn from(w: GapRecordWire) -> Self {
        GapRecord::new(w.model_id, w.metric, w.value_a, w.value_b)
    }
}

impl GapRecord {
    pub fn new(model_id: String, metric: Metric, value_a: f64, value_b: f64) -> Self {
        Self {
            model_id,
            metric,
            value_a,
            value_b,
            absolute_difference: value_a - value_b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub models: usize,
    pub min_difference: f64,
    pub max_difference: f64,
    pub mean_difference: f64,
    /// Models whose absolute difference is under one percentage point.
    pub below_one_percent: usize,
    /// Models present in only one report set; excluded from the records.
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapAnalysis {
    pub metric: Metric,
    /// Dataset id shared by set a, or `a` when the set mixes datasets.
    pub label_a: String,
    pub label_b: String,
    /// Sorted by `value_a` descending, then model id.
    pub records: Vec<GapRecord>,
    pub summary: GapSummary,
}

pub(crate) fn index_reports<'a>(reports: &'a [MetricReport], side: &str) -> Result<BTreeMap<&'a str, &'a MetricReport>> {
    let mut map = BTreeMap::new();
    for r in reports {
        if map.insert(r.model_id.as_str(), r).is_some() {
            return Err(Error::Heterogeneous {
                model_id: r.model_id.clone(),
                message: format!("model appears twice in report set {side}"),
            });
        }
    }
    Ok(map)
}

pub(crate) fn metric_of(report: &MetricReport, metric: Metric) -> Result<f64> {
    report.metric(metric).ok_or_else(|| Error::MissingMetric {
        model_id: report.model_id.clone(),
        metric: metric.to_string(),
    })
}

fn set_label(reports: &[MetricReport], fallback: &str) -> String {
    match reports.first() {
        Some(first) if reports.iter().all(|r| r.dataset_id == first.dataset_id) => first.dataset_id.clone(),
        _ => fallback.to_string(),
    }
}

pub fn gap_analysis(reports_a: &[MetricReport], reports_b: &[MetricReport], metric: Metric) -> Result<GapAnalysis> {
    let a = index_reports(reports_a, "a")?;
    let b = index_reports(reports_b, "b")?;
    let mut records = Vec::new();
    for (model, ra) in &a {
        if let Some(rb) = b.get(model) {
            records.push(GapRecord::new(model.to_string(), metric, metric_of(ra, metric)?, metric_of(rb, metric)?));
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    records.sort_by(|x, y| y.value_a.total_cmp(&x.value_a).then_with(|| x.model_id.cmp(&y.model_id)));
    let diffs: Vec<f64> = records.iter().map(|r| r.absolute_difference).collect();
    let summary = GapSummary {
        models: records.len(),
        min_difference: diffs.iter().copied().fold(f64::INFINITY, f64::min),
        max_difference: diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_difference: crate::metrics::order_free_mean(&diffs),
        below_one_percent: diffs.iter().filter(|d| d.abs() < 0.01).count(),
        only_in_a: a.keys().filter(|m| !b.contains_key(*m)).map(|m| m.to_string()).collect(),
        only_in_b: b.keys().filter(|m| !a.contains_key(*m)).map(|m| m.to_string()).collect(),
    };
    Ok(GapAnalysis {
        metric,
        label_a: set_label(reports_a, "a"),
        label_b: set_label(reports_b, "b"),
        records,
        summary,
    })
}
