//! Top-1, ReaL, variable top-k, label-wise and subgroup accuracy, ASMA.
//!
//! Every metric is a pure function of canonical rankings and label sets.
//! Numerators are accumulated as integers (or integer histograms) so the
//! result does not depend on evaluation order or thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotations::AnnotationStore;
use crate::error::{Error, Result};
use crate::predictions::{DepthShortfall, PredictionDataset, Ranking};
use crate::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelwiseMode {
    /// `(C - |gt Δ pred|) / C`: the indicator sum over all C classes.
    #[default]
    LiteralHamming,
    /// `|gt ∩ pred| / |gt ∪ pred|`, 1 when both are empty.
    Jaccard,
    /// `|gt ∩ pred| / |gt|`, 1 by convention when gt is empty.
    Recall,
}

impl LabelwiseMode {
    pub const ALL: [LabelwiseMode; 3] = [Self::LiteralHamming, Self::Jaccard, Self::Recall];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LiteralHamming => "literal_hamming",
            Self::Jaccard => "jaccard",
            Self::Recall => "recall",
        }
    }
}

impl fmt::Display for LabelwiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelwiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown label-wise mode {s:?}")))
    }
}

/// Treatment of images whose plausible-label set is empty under ReaL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmptyPolicy {
    #[default]
    Exclude,
    CountAsMiss,
}

impl FromStr for EmptyPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclude" => Ok(Self::Exclude),
            "count_as_miss" => Ok(Self::CountAsMiss),
            _ => Err(Error::Config(format!("unknown empty policy {s:?}"))),
        }
    }
}

/// How ids present in only one input are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PopulationPolicy {
    #[default]
    Intersection,
    Strict,
}

impl FromStr for PopulationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(Self::Intersection),
            "strict" => Ok(Self::Strict),
            _ => Err(Error::Config(format!("unknown population policy {s:?}"))),
        }
    }
}

/// An accuracy as an exact ratio plus its float rendering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub accuracy: f64,
    /// `[hits, evaluated]`
    pub ratio: [u64; 2],
}

impl Accuracy {
    pub fn new(hits: u64, total: u64) -> Self {
        debug_assert!(total > 0 && hits <= total);
        Self {
            accuracy: hits as f64 / total as f64,
            ratio: [hits, total],
        }
    }

    pub fn hits(&self) -> u64 {
        self.ratio[0]
    }

    pub fn count(&self) -> u64 {
        self.ratio[1]
    }
}

/// Single ground-truth class per image, as used by top-1 accuracy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleLabelTruth {
    pub dataset_id: String,
    pub num_classes: u32,
    labels: BTreeMap<String, ClassId>,
}

impl SingleLabelTruth {
    pub fn from_store(store: &AnnotationStore) -> Result<Self> {
        let labels = store
            .iter()
            .map(|(id, set)| match set {
                [only] => Ok((id.to_string(), *only)),
                _ => Err(Error::NotSingleLabel {
                    id: id.to_string(),
                    count: set.len(),
                }),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dataset_id: store.dataset_id().to_string(),
            num_classes: store.num_classes(),
            labels,
        })
    }

    pub fn from_pairs(
        dataset_id: impl Into<String>,
        num_classes: u32,
        pairs: impl IntoIterator<Item = (String, ClassId)>,
    ) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            num_classes,
            labels: pairs.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Ids matched between predictions and a ground-truth map.
struct Joined<'a, V: ?Sized> {
    pairs: Vec<(&'a str, &'a Ranking, &'a V)>,
    only_predictions: usize,
    only_truth: usize,
}

fn join<'a, V, T>(
    preds: &'a PredictionDataset,
    truth: &'a BTreeMap<String, T>,
    view: impl Fn(&'a T) -> &'a V,
    policy: PopulationPolicy,
    truth_name: &'static str,
) -> Result<Joined<'a, V>>
where
    V: ?Sized,
{
    let mut pairs = Vec::with_capacity(preds.len().min(truth.len()));
    let mut only_predictions = 0;
    let mut only_truth = 0;
    let mut left = preds.records().iter().peekable();
    let mut right = truth.iter().peekable();
    loop {
        match (left.peek(), right.peek()) {
            (Some((lk, lv)), Some((rk, rv))) => match lk.cmp(rk) {
                std::cmp::Ordering::Less => {
                    only_predictions += 1;
                    left.next();
                }
                std::cmp::Ordering::Greater => {
                    only_truth += 1;
                    right.next();
                }
                std::cmp::Ordering::Equal => {
                    pairs.push((lk.as_str(), *lv, view(rv)));
                    left.next();
                    right.next();
                }
            },
            (Some(_), None) => {
                only_predictions += 1;
                left.next();
            }
            (None, Some(_)) => {
                only_truth += 1;
                right.next();
            }
            (None, None) => break,
        }
    }
    if policy == PopulationPolicy::Strict && (only_predictions > 0 || only_truth > 0) {
        return Err(Error::PopulationMismatch {
            left: "predictions",
            right: truth_name,
            only_left: only_predictions,
            only_right: only_truth,
        });
    }
    Ok(Joined {
        pairs,
        only_predictions,
        only_truth,
    })
}

fn join_store<'a>(
    preds: &'a PredictionDataset,
    store: &'a AnnotationStore,
    policy: PopulationPolicy,
) -> Result<Joined<'a, [ClassId]>> {
    join(preds, store.entries(), |v| v.as_slice(), policy, "annotations")
}

/// `(1/N) Σ 1[argmax = y]` over ids present in both inputs.
pub fn top1_accuracy(
    preds: &PredictionDataset,
    truth: &SingleLabelTruth,
    policy: PopulationPolicy,
) -> Result<Accuracy> {
    let joined = join(preds, &truth.labels, |v| v, policy, "single-label truth")?;
    if joined.pairs.is_empty() {
        return Err(Error::EmptyPopulation { metric: "top1" });
    }
    let hits = joined
        .pairs
        .iter()
        .filter(|(_, ranking, &label)| ranking.argmax() == label)
        .count() as u64;
    Ok(Accuracy::new(hits, joined.pairs.len() as u64))
}

/// `(1/N) Σ 1[argmax ∈ plausible]`.
pub fn real_accuracy(
    preds: &PredictionDataset,
    store: &AnnotationStore,
    empty_policy: EmptyPolicy,
    policy: PopulationPolicy,
) -> Result<Accuracy> {
    let joined = join_store(preds, store, policy)?;
    let mut hits = 0u64;
    let mut total = 0u64;
    for (_, ranking, plausible) in &joined.pairs {
        if plausible.is_empty() && empty_policy == EmptyPolicy::Exclude {
            continue;
        }
        total += 1;
        if plausible.binary_search(&ranking.argmax()).is_ok() {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyPopulation { metric: "real" });
    }
    Ok(Accuracy::new(hits, total))
}

fn shortfall(image_id: &str, s: DepthShortfall) -> Error {
    Error::InsufficientDepth {
        image_id: image_id.to_string(),
        required: s.required,
        available: s.available,
    }
}

/// Per image, the top-`k_i` predicted classes where `k_i` is its number of
/// ground-truth labels. Unlabeled images map to the empty set.
pub fn variable_topk_sets(
    preds: &PredictionDataset,
    store: &AnnotationStore,
    policy: PopulationPolicy,
) -> Result<BTreeMap<String, Vec<ClassId>>> {
    let joined = join_store(preds, store, policy)?;
    joined
        .pairs
        .into_iter()
        .map(|(id, ranking, gt)| {
            let set = ranking.topk_set(gt.len()).map_err(|s| shortfall(id, s))?;
            Ok((id.to_string(), set))
        })
        .collect()
}

/// Set sizes that fully determine every label-wise mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Overlap {
    pub intersection: u32,
    pub gt_len: u32,
    pub pred_len: u32,
}

impl Overlap {
    /// Both inputs must be sorted ascending without duplicates.
    pub fn of(gt: &[ClassId], pred: &[ClassId]) -> Self {
        let (mut i, mut j, mut common) = (0, 0, 0u32);
        while i < gt.len() && j < pred.len() {
            match gt[i].cmp(&pred[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Self {
            intersection: common,
            gt_len: gt.len() as u32,
            pred_len: pred.len() as u32,
        }
    }

    pub fn symmetric_difference(&self) -> u32 {
        self.gt_len + self.pred_len - 2 * self.intersection
    }

    pub fn union(&self) -> u32 {
        self.gt_len + self.pred_len - self.intersection
    }

    /// Recall is undefined for an empty ground-truth set.
    pub fn recall_undefined(&self) -> bool {
        self.gt_len == 0
    }

    pub fn score(&self, mode: LabelwiseMode, num_classes: u32) -> f64 {
        match mode {
            LabelwiseMode::LiteralHamming => {
                f64::from(num_classes - self.symmetric_difference()) / f64::from(num_classes)
            }
            LabelwiseMode::Jaccard => match self.union() {
                0 => 1.0,
                u => f64::from(self.intersection) / f64::from(u),
            },
            LabelwiseMode::Recall => match self.gt_len {
                0 => 1.0,
                g => f64::from(self.intersection) / f64::from(g),
            },
        }
    }
}

/// Label-wise agreement between two sorted class-id sets.
pub fn labelwise_accuracy(gt: &[ClassId], pred: &[ClassId], num_classes: u32, mode: LabelwiseMode) -> f64 {
    Overlap::of(gt, pred).score(mode, num_classes)
}

/// Inclusive label-count window for subgroup averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRange {
    pub min_group: usize,
    pub max_group: Option<usize>,
}

impl Default for GroupRange {
    fn default() -> Self {
        Self {
            min_group: 1,
            max_group: None,
        }
    }
}

impl GroupRange {
    pub fn contains(&self, g: usize) -> bool {
        g >= self.min_group && self.max_group.is_none_or(|max| g <= max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub label_count: usize,
    pub count: u64,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub recall_undefined: u64,
}

fn is_zero(n: &u64) -> bool {
    *n == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupBreakdown {
    pub mode: LabelwiseMode,
    pub asma: f64,
    pub included_groups: Vec<usize>,
    pub per_group: Vec<GroupAccuracy>,
}

impl SubgroupBreakdown {
    pub fn group(&self, g: usize) -> Option<&GroupAccuracy> {
        self.per_group.iter().find(|a| a.label_count == g)
    }
}

/// Mean of a list of values, summed in ascending order so the result does
/// not depend on input order.
pub(crate) fn order_free_mean(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

fn overlaps_for(
    pairs: &[(&str, &Ranking, &[ClassId])],
) -> Vec<std::result::Result<Overlap, DepthShortfall>> {
    let one = |(_, ranking, gt): &(&str, &Ranking, &[ClassId])| {
        ranking
            .topk_set(gt.len())
            .map(|pred| Overlap::of(gt, &pred))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pairs.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        pairs.iter().map(one).collect()
    }
}

/// Per-group mean label-wise accuracy and their unweighted mean (ASMA)
/// over non-empty groups inside `range`.
pub fn subgroup_breakdown(
    preds: &PredictionDataset,
    store: &AnnotationStore,
    mode: LabelwiseMode,
    range: GroupRange,
    policy: PopulationPolicy,
) -> Result<SubgroupBreakdown> {
    let joined = join_store(preds, store, policy)?;
    let in_range: Vec<_> = joined
        .pairs
        .into_iter()
        .filter(|(_, _, gt)| range.contains(gt.len()))
        .collect();
    let overlaps = overlaps_for(&in_range);

    // group -> overlap -> count
    let mut tallies: BTreeMap<usize, BTreeMap<Overlap, u64>> = BTreeMap::new();
    for ((id, _, gt), overlap) in in_range.iter().zip(overlaps) {
        let overlap = overlap.map_err(|s| shortfall(id, s))?;
        *tallies.entry(gt.len()).or_default().entry(overlap).or_default() += 1;
    }
    if tallies.is_empty() {
        return Err(Error::NoGroupsInRange);
    }
    let num_classes = store.num_classes();
    let per_group: Vec<GroupAccuracy> = tallies
        .into_iter()
        .map(|(g, hist)| {
            let count: u64 = hist.values().sum();
            let total: f64 = hist
                .iter()
                .map(|(o, &n)| n as f64 * o.score(mode, num_classes))
                .sum();
            let recall_undefined = if mode == LabelwiseMode::Recall {
                hist.iter()
                    .filter(|(o, _)| o.recall_undefined())
                    .map(|(_, &n)| n)
                    .sum()
            } else {
                0
            };
            GroupAccuracy {
                label_count: g,
                count,
                accuracy: total / count as f64,
                recall_undefined,
            }
        })
        .collect();
    let accuracies: Vec<f64> = per_group.iter().map(|a| a.accuracy).collect();
    Ok(SubgroupBreakdown {
        mode,
        asma: order_free_mean(&accuracies),
        included_groups: per_group.iter().map(|a| a.label_count).collect(),
        per_group,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalPolicies {
    pub mode: LabelwiseMode,
    pub empty_policy: EmptyPolicy,
    pub population: PopulationPolicy,
    pub groups: GroupRange,
    /// Evaluate even when prediction and annotation dataset ids differ.
    pub allow_dataset_mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub labelwise_mode: LabelwiseMode,
    pub empty_policy: EmptyPolicy,
    pub population: PopulationPolicy,
    pub min_group: usize,
    pub max_group: Option<usize>,
    pub depth: u32,
    pub num_classes: u32,
    pub dataset_id_override: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationCounts {
    pub predictions: u64,
    pub annotations: u64,
    pub matched: u64,
    pub only_predictions: u64,
    pub only_annotations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_label: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model_id: String,
    pub dataset_id: String,
    pub config: ReportConfig,
    pub population: PopulationCounts,
    #[serde(default)]
    pub top1: Option<Accuracy>,
    pub real: Accuracy,
    pub subgroups: SubgroupBreakdown,
    /// Dataset ids averaged into this report, when it is a multi-seed mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregated_from: Option<Vec<String>>,
}

impl MetricReport {
    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::malformed(e.line(), e.to_string()))
    }

    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Top1 => self.top1.map(|a| a.accuracy),
            Metric::Real => Some(self.real.accuracy),
            Metric::Asma => Some(self.subgroups.asma),
        }
    }
}

/// Scalar metrics selectable for comparisons and rankings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Top1,
    Real,
    Asma,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Top1 => "top1",
            Metric::Real => "real",
            Metric::Asma => "asma",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top1" => Ok(Metric::Top1),
            "real" => Ok(Metric::Real),
            "asma" => Ok(Metric::Asma),
            _ => Err(Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

pub fn evaluate(
    preds: &PredictionDataset,
    store: &AnnotationStore,
    single_label: Option<&SingleLabelTruth>,
    policies: &EvalPolicies,
) -> Result<MetricReport> {
    if preds.dataset_id != store.dataset_id() && !policies.allow_dataset_mismatch {
        return Err(Error::DatasetMismatch {
            predictions: preds.dataset_id.clone(),
            annotations: store.dataset_id().to_string(),
        });
    }
    if preds.num_classes != store.num_classes() {
        return Err(Error::ClassCountMismatch {
            left: preds.num_classes,
            right: store.num_classes(),
        });
    }
    if let Some(truth) = single_label {
        if truth.num_classes != preds.num_classes {
            return Err(Error::ClassCountMismatch {
                left: preds.num_classes,
                right: truth.num_classes,
            });
        }
    }
    let joined = join_store(preds, store, policies.population)?;
    let top1 = single_label
        .map(|truth| top1_accuracy(preds, truth, policies.population))
        .transpose()?;
    let real = real_accuracy(preds, store, policies.empty_policy, policies.population)?;
    let subgroups = subgroup_breakdown(preds, store, policies.mode, policies.groups, policies.population)?;
    Ok(MetricReport {
        model_id: preds.model_id.clone(),
        dataset_id: store.dataset_id().to_string(),
        config: ReportConfig {
            labelwise_mode: policies.mode,
            empty_policy: policies.empty_policy,
            population: policies.population,
            min_group: policies.groups.min_group,
            max_group: policies.groups.max_group,
            depth: preds.depth,
            num_classes: preds.num_classes,
            dataset_id_override: policies.allow_dataset_mismatch,
        },
        population: PopulationCounts {
            predictions: preds.len() as u64,
            annotations: store.len() as u64,
            matched: joined.pairs.len() as u64,
            only_predictions: joined.only_predictions as u64,
            only_annotations: joined.only_truth as u64,
            single_label: single_label.map(|t| t.len() as u64),
        },
        top1,
        real,
        subgroups,
        aggregated_from: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds_from(orders: &[(&str, &[ClassId])], num_classes: u32) -> PredictionDataset {
        let mut ds = PredictionDataset::new("m", "d", num_classes, num_classes).unwrap();
        for (id, order) in orders {
            ds.insert(*id, Ranking::from_order(order).unwrap().entries().to_vec())
                .unwrap();
        }
        ds
    }

    fn store_from(entries: &[(&str, &[ClassId])], num_classes: u32) -> AnnotationStore {
        let mut store = AnnotationStore::new("d", num_classes).unwrap();
        for (id, labels) in entries {
            store.insert(*id, labels.iter().copied()).unwrap();
        }
        store
    }

    #[test]
    fn top1_hand_count() {
        let preds = preds_from(&[("a", &[2, 0]), ("b", &[1, 0]), ("c", &[0, 1])], 3);
        let truth = SingleLabelTruth::from_pairs(
            "d",
            3,
            [("a".into(), 2), ("b".into(), 0), ("c".into(), 0)],
        );
        let acc = top1_accuracy(&preds, &truth, PopulationPolicy::Strict).unwrap();
        assert_eq!(acc.ratio, [2, 3]);
        assert!((acc.accuracy - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn top1_identity_and_empty() {
        let preds = preds_from(&[("a", &[1]), ("b", &[0])], 2);
        let truth = SingleLabelTruth::from_pairs("d", 2, [("a".into(), 1), ("b".into(), 0)]);
        assert_eq!(top1_accuracy(&preds, &truth, PopulationPolicy::Strict).unwrap().accuracy, 1.0);
        let none = SingleLabelTruth::from_pairs("d", 2, [("z".into(), 1)]);
        assert!(matches!(
            top1_accuracy(&preds, &none, PopulationPolicy::Intersection).unwrap_err(),
            Error::EmptyPopulation { .. }
        ));
        assert!(matches!(
            top1_accuracy(&preds, &none, PopulationPolicy::Strict).unwrap_err(),
            Error::PopulationMismatch { only_left: 2, only_right: 1, .. }
        ));
    }

    #[test]
    fn real_hand_count_and_policies() {
        let preds = preds_from(&[("a", &[1, 0]), ("b", &[2, 0])], 4);
        let store = store_from(&[("a", &[1, 3]), ("b", &[0])], 4);
        let acc = real_accuracy(&preds, &store, EmptyPolicy::Exclude, PopulationPolicy::Strict).unwrap();
        assert_eq!(acc.ratio, [1, 2]);

        let empty = store_from(&[("a", &[]), ("b", &[])], 4);
        assert!(matches!(
            real_accuracy(&preds, &empty, EmptyPolicy::Exclude, PopulationPolicy::Strict).unwrap_err(),
            Error::EmptyPopulation { metric: "real" }
        ));

        let mixed = store_from(&[("a", &[1]), ("b", &[])], 4);
        let acc = real_accuracy(&preds, &mixed, EmptyPolicy::CountAsMiss, PopulationPolicy::Strict).unwrap();
        assert_eq!(acc.ratio, [1, 2]);
        let acc = real_accuracy(&preds, &mixed, EmptyPolicy::Exclude, PopulationPolicy::Strict).unwrap();
        assert_eq!(acc.ratio, [1, 1]);
    }

    #[test]
    fn variable_topk_examples() {
        let order: Vec<ClassId> = vec![9, 4, 1, 7, 0, 2, 3, 5, 6, 8, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19];
        let preds = preds_from(&[("a", &order[..]), ("b", &order[..]), ("c", &order[..])], 20);
        let store = store_from(
            &[("a", &[3, 5, 6]), ("b", &[]), ("c", &[0, 1, 2, 3, 4, 5, 6, 7, 8])],
            20,
        );
        let sets = variable_topk_sets(&preds, &store, PopulationPolicy::Strict).unwrap();
        assert_eq!(sets["a"], vec![1, 4, 9]);
        assert!(sets["b"].is_empty());
        let mut expected = order[..9].to_vec();
        expected.sort();
        assert_eq!(sets["c"], expected);
    }

    #[test]
    fn variable_topk_depth_error_names_image() {
        let preds = preds_from(&[("a", &[0, 1]), ("b", &[0])], 5);
        let store = store_from(&[("a", &[0, 1]), ("b", &[0, 1, 2])], 5);
        match variable_topk_sets(&preds, &store, PopulationPolicy::Strict).unwrap_err() {
            Error::InsufficientDepth { image_id, required, available } => {
                assert_eq!((image_id.as_str(), required, available), ("b", 3, 1))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labelwise_examples() {
        let (gt, pred) = ([0, 2], [0, 1]);
        assert_eq!(labelwise_accuracy(&gt, &pred, 5, LabelwiseMode::LiteralHamming), 3.0 / 5.0);
        assert_eq!(labelwise_accuracy(&gt, &pred, 5, LabelwiseMode::Jaccard), 1.0 / 3.0);
        assert_eq!(labelwise_accuracy(&gt, &pred, 5, LabelwiseMode::Recall), 1.0 / 2.0);
        for mode in LabelwiseMode::ALL {
            assert_eq!(labelwise_accuracy(&[1, 4], &[1, 4], 5, mode), 1.0);
            assert_eq!(labelwise_accuracy(&[], &[], 5, mode), 1.0);
        }
        assert_eq!(labelwise_accuracy(&[3], &[7], 1000, LabelwiseMode::LiteralHamming), 0.998);
        assert_eq!(labelwise_accuracy(&[3], &[7], 1000, LabelwiseMode::Jaccard), 0.0);
        assert!(Overlap::of(&[], &[]).recall_undefined());
    }

    #[test]
    fn subgroup_asma_hand_evaluation() {
        let preds = preds_from(&[("a", &[1, 0, 2, 3, 4, 5]), ("b", &[1, 2, 0, 3, 4, 5]), ("c", &[3, 5, 4, 0, 1, 2])], 6);
        let store = store_from(&[("a", &[1]), ("b", &[1, 2]), ("c", &[3, 4])], 6);
        let bd = subgroup_breakdown(&preds, &store, LabelwiseMode::Jaccard, GroupRange::default(), PopulationPolicy::Strict)
            .unwrap();
        assert_eq!(bd.included_groups, vec![1, 2]);
        assert_eq!(bd.group(1).unwrap().accuracy, 1.0);
        let a2 = (1.0 + 1.0 / 3.0) / 2.0;
        assert!((bd.group(2).unwrap().accuracy - a2).abs() < 1e-15);
        assert!((bd.asma - (1.0 + a2) / 2.0).abs() < 1e-15);
        assert!((bd.asma - 0.833_333_333_333_333_4).abs() < 1e-12);
    }

    #[test]
    fn subgroup_range_and_empty_group() {
        let preds = preds_from(&[("a", &[1, 0]), ("b", &[0, 1])], 2);
        let store = store_from(&[("a", &[]), ("b", &[0, 1])], 2);
        let only_zero = GroupRange { min_group: 0, max_group: Some(0) };
        let bd = subgroup_breakdown(&preds, &store, LabelwiseMode::Recall, only_zero, PopulationPolicy::Strict).unwrap();
        assert_eq!(bd.included_groups, vec![0]);
        assert_eq!(bd.per_group[0].recall_undefined, 1);
        let none = GroupRange { min_group: 5, max_group: None };
        assert!(matches!(
            subgroup_breakdown(&preds, &store, LabelwiseMode::Recall, none, PopulationPolicy::Strict).unwrap_err(),
            Error::NoGroupsInRange
        ));
    }

    #[test]
    fn evaluate_rejects_dataset_mismatch() {
        let preds = preds_from(&[("a", &[1, 0])], 2);
        let mut store = AnnotationStore::new("other", 2).unwrap();
        store.insert("a", [1]).unwrap();
        assert!(matches!(
            evaluate(&preds, &store, None, &EvalPolicies::default()).unwrap_err(),
            Error::DatasetMismatch { .. }
        ));
        let policies = EvalPolicies { allow_dataset_mismatch: true, ..Default::default() };
        let report = evaluate(&preds, &store, None, &policies).unwrap();
        assert!(report.config.dataset_id_override);
        assert_eq!(report.real.ratio, [1, 1]);
    }

    #[test]
    fn report_json_round_trips() {
        let preds = preds_from(&[("a", &[1, 0]), ("b", &[0, 1])], 2);
        let store = store_from(&[("a", &[1]), ("b", &[0, 1])], 2);
        let report = evaluate(&preds, &store, None, &EvalPolicies::default()).unwrap();
        let text = report.to_canonical_json();
        let back = MetricReport::from_json(&text).unwrap();
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn mode_strings() {
        for mode in LabelwiseMode::ALL {
            assert_eq!(mode.as_str().parse::<LabelwiseMode>().unwrap(), mode);
        }
        assert!("hamming".parse::<LabelwiseMode>().is_err());
    }
}
