use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::metrics::{order_free_mean, Accuracy, GroupAccuracy, MetricReport, PopulationCounts, SubgroupBreakdown};

fn common_stem(ids: &[&str]) -> String {
    let first = ids[0];
    let mut len = first.len();
    for id in &ids[1..] {
        len = first
            .char_indices()
            .zip(id.chars())
            .take_while(|((_, a), b)| a == b)
            .count()
            .min(len);
    }
    let prefix: String = first.chars().take(len).collect();
    let stem = prefix.trim_end_matches(|c: char| c.is_ascii_digit() || c == '-' || c == '_');
    if stem.is_empty() {
        "multi".to_string()
    } else {
        stem.to_string()
    }
}

fn pooled(values: impl Iterator<Item = Accuracy>) -> Accuracy {
    let (hits, total) = values.fold((0, 0), |(h, t), a| (h + a.hits(), t + a.count()));
    Accuracy::new(hits, total)
}

/// Averages one model's reports across dataset variants (seeds): ASMA and
/// each subgroup accuracy by arithmetic mean, top-1 and ReaL by pooling
/// their ratios. The result does not depend on input order.
pub fn multiseed_aggregate(reports: &[MetricReport]) -> Result<MetricReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Config("no reports to aggregate".into()))?;
    for r in reports {
        if r.model_id != first.model_id {
            return Err(Error::Heterogeneous {
                model_id: first.model_id.clone(),
                message: format!("cannot average with model {:?}", r.model_id),
            });
        }
        let (a, b) = (&first.config, &r.config);
        if a.labelwise_mode != b.labelwise_mode
            || a.empty_policy != b.empty_policy
            || a.population != b.population
            || a.min_group != b.min_group
            || a.max_group != b.max_group
            || a.num_classes != b.num_classes
        {
            return Err(Error::Heterogeneous {
                model_id: r.model_id.clone(),
                message: format!("config of {:?} differs from {:?}", r.dataset_id, first.dataset_id),
            });
        }
    }
    let mut sorted: Vec<&MetricReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
    let ids: Vec<&str> = sorted.iter().map(|r| r.dataset_id.as_str()).collect();
    if sorted.windows(2).any(|w| w[0].dataset_id == w[1].dataset_id) {
        return Err(Error::Heterogeneous {
            model_id: first.model_id.clone(),
            message: "dataset id repeated across seed reports".into(),
        });
    }
    if sorted.len() == 1 {
        let mut single = first.clone();
        single.aggregated_from = Some(vec![first.dataset_id.clone()]);
        return Ok(single);
    }

    let mut groups: BTreeMap<usize, (u64, u64, Vec<f64>)> = BTreeMap::new();
    for r in &sorted {
        for g in &r.subgroups.per_group {
            let slot = groups.entry(g.label_count).or_default();
            slot.0 += g.count;
            slot.1 += g.recall_undefined;
            slot.2.push(g.accuracy);
        }
    }
    let per_group: Vec<GroupAccuracy> = groups
        .into_iter()
        .map(|(label_count, (count, recall_undefined, accs))| GroupAccuracy {
            label_count,
            count,
            accuracy: order_free_mean(&accs),
            recall_undefined,
        })
        .collect();
    let asmas: Vec<f64> = sorted.iter().map(|r| r.subgroups.asma).collect();
    let top1 = if sorted.iter().all(|r| r.top1.is_some()) {
        Some(pooled(sorted.iter().map(|r| r.top1.expect("checked"))))
    } else {
        None
    };
    let sum = |f: fn(&PopulationCounts) -> u64| sorted.iter().map(|r| f(&r.population)).sum();
    Ok(MetricReport {
        model_id: first.model_id.clone(),
        dataset_id: format!("{}-mean", common_stem(&ids)),
        config: first.config.clone(),
        population: PopulationCounts {
            predictions: sum(|p| p.predictions),
            annotations: sum(|p| p.annotations),
            matched: sum(|p| p.matched),
            only_predictions: sum(|p| p.only_predictions),
            only_annotations: sum(|p| p.only_annotations),
            single_label: top1.map(|_| sorted.iter().map(|r| r.population.single_label.unwrap_or(0)).sum()),
        },
        top1,
        real: pooled(sorted.iter().map(|r| r.real)),
        subgroups: SubgroupBreakdown {
            mode: first.subgroups.mode,
            asma: order_free_mean(&asmas),
            included_groups: per_group.iter().map(|g| g.label_count).collect(),
            per_group,
        },
        aggregated_from: Some(ids.iter().map(|s| s.to_string()).collect()),
    })
}

/// Groups reports by model id and aggregates each group.
pub fn aggregate_by_model(reports: &[MetricReport]) -> Result<Vec<MetricReport>> {
    let mut by_model: BTreeMap<&str, Vec<MetricReport>> = BTreeMap::new();
    for r in reports {
        by_model.entry(r.model_id.as_str()).or_default().push(r.clone());
    }
    by_model.values().map(|rs| multiseed_aggregate(rs)).collect()
}
