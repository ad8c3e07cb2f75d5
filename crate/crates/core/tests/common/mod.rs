//! Shared test support: random instances and a brute-force reference that
//! works on full score vectors and boolean label vectors, independent of
//! the library's ranking and set code.

#![allow(dead_code)]

use mlpc_core::annotations::AnnotationStore;
use mlpc_core::metrics::{
    Accuracy, EmptyPolicy, GroupAccuracy, LabelwiseMode, MetricReport, PopulationCounts, PopulationPolicy,
    ReportConfig, SingleLabelTruth, SubgroupBreakdown,
};
use mlpc_core::predictions::PredictionDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A generated evaluation instance with full-depth scores.
#[derive(Debug, Clone)]
pub struct Instance {
    pub num_classes: u32,
    /// (id, score per class)
    pub scores: Vec<(String, Vec<f32>)>,
    /// (id, labels); may include ids without scores and vice versa
    pub labels: Vec<(String, Vec<u32>)>,
    /// (id, single label)
    pub single: Vec<(String, u32)>,
}

pub fn random_instance(seed: u64, max_images: usize, max_classes: u32) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_classes = rng.random_range(1..=max_classes);
    let n = rng.random_range(1..=max_images);
    // a handful of score levels makes ties common
    let levels = rng.random_range(2..=6u32);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut single = Vec::new();
    for i in 0..n {
        let id = format!("img_{i:04}");
        let has_pred = rng.random_bool(0.95);
        let has_label = rng.random_bool(0.95) || !has_pred;
        if has_pred {
            let s: Vec<f32> = (0..num_classes)
                .map(|_| rng.random_range(0..levels) as f32 / levels as f32)
                .collect();
            scores.push((id.clone(), s));
        }
        if has_label {
            let max_k = num_classes.min(6);
            let k = if rng.random_bool(0.05) { 0 } else { rng.random_range(1..=max_k) };
            let mut set: Vec<u32> = Vec::new();
            while set.len() < k as usize {
                let c = rng.random_range(0..num_classes);
                if !set.contains(&c) {
                    set.push(c);
                }
            }
            if let Some(&first) = set.first() {
                single.push((id.clone(), first));
            }
            labels.push((id, set));
        }
    }
    Instance {
        num_classes,
        scores,
        labels,
        single,
    }
}

impl Instance {
    pub fn predictions(&self, dataset_id: &str) -> PredictionDataset {
        let mut ds = PredictionDataset::new("model", dataset_id, self.num_classes, self.num_classes).unwrap();
        for (id, s) in &self.scores {
            ds.insert(id.clone(), s.iter().enumerate().map(|(c, &v)| (c as u32, v)).collect())
                .unwrap();
        }
        ds
    }

    pub fn store(&self, dataset_id: &str) -> AnnotationStore {
        let mut store = AnnotationStore::new(dataset_id, self.num_classes).unwrap();
        for (id, set) in &self.labels {
            store.insert(id.clone(), set.iter().copied()).unwrap();
        }
        store
    }

    pub fn single_truth(&self, dataset_id: &str) -> SingleLabelTruth {
        SingleLabelTruth::from_pairs(dataset_id, self.num_classes, self.single.iter().cloned())
    }
}

/// A hand-built report. `groups` holds (label count, accuracy); ASMA is
/// their plain mean.
pub fn report(model: &str, dataset: &str, mode: LabelwiseMode, top1: Option<f64>, groups: &[(usize, f64)]) -> MetricReport {
    let asma = if groups.is_empty() {
        0.0
    } else {
        groups.iter().map(|g| g.1).sum::<f64>() / groups.len() as f64
    };
    MetricReport {
        model_id: model.into(),
        dataset_id: dataset.into(),
        config: ReportConfig {
            labelwise_mode: mode,
            empty_policy: EmptyPolicy::Exclude,
            population: PopulationPolicy::Intersection,
            min_group: 1,
            max_group: None,
            depth: 20,
            num_classes: 1000,
            dataset_id_override: false,
        },
        population: PopulationCounts {
            predictions: 1,
            annotations: 1,
            matched: 1,
            only_predictions: 0,
            only_annotations: 0,
            single_label: None,
        },
        top1: top1.map(|v| Accuracy { accuracy: v, ratio: [0, 1] }),
        real: Accuracy::new(1, 1),
        subgroups: SubgroupBreakdown {
            mode,
            asma,
            included_groups: groups.iter().map(|g| g.0).collect(),
            per_group: groups
                .iter()
                .map(|&(label_count, accuracy)| GroupAccuracy {
                    label_count,
                    count: 1,
                    accuracy,
                    recall_undefined: 0,
                })
                .collect(),
        },
        aggregated_from: None,
    }
}

pub mod oracle {
    /// Index of the highest score; earlier (lower) class wins ties.
    pub fn argmax(scores: &[f32]) -> u32 {
        let mut best = 0;
        for c in 1..scores.len() {
            if scores[c] > scores[best] {
                best = c;
            }
        }
        best as u32
    }

    /// Full sort of every class by (score desc, class asc), first k taken.
    pub fn topk(scores: &[f32], k: usize) -> Vec<bool> {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
        let mut mask = vec![false; scores.len()];
        for &c in &order[..k] {
            mask[c] = true;
        }
        mask
    }

    pub fn mask(labels: &[u32], c: usize) -> Vec<bool> {
        let mut m = vec![false; c];
        for &l in labels {
            m[l as usize] = true;
        }
        m
    }

    pub fn hamming(gt: &[bool], pred: &[bool]) -> f64 {
        let agree = gt.iter().zip(pred).filter(|(a, b)| a == b).count();
        agree as f64 / gt.len() as f64
    }

    pub fn jaccard(gt: &[bool], pred: &[bool]) -> f64 {
        let both = gt.iter().zip(pred).filter(|(a, b)| **a && **b).count();
        let either = gt.iter().zip(pred).filter(|(a, b)| **a || **b).count();
        if either == 0 {
            1.0
        } else {
            both as f64 / either as f64
        }
    }

    pub fn recall(gt: &[bool], pred: &[bool]) -> f64 {
        let both = gt.iter().zip(pred).filter(|(a, b)| **a && **b).count();
        let g = gt.iter().filter(|a| **a).count();
        if g == 0 {
            1.0
        } else {
            both as f64 / g as f64
        }
    }

    pub fn labelwise(mode: &str, gt: &[bool], pred: &[bool]) -> f64 {
        match mode {
            "literal_hamming" => hamming(gt, pred),
            "jaccard" => jaccard(gt, pred),
            "recall" => recall(gt, pred),
            other => panic!("mode {other}"),
        }
    }

    fn find<'a, T>(items: &'a [(String, T)], id: &str) -> Option<&'a T> {
        items.iter().find(|(k, _)| k == id).map(|(_, v)| v)
    }

    /// (hits, total) over ids present in both.
    pub fn top1(scores: &[(String, Vec<f32>)], single: &[(String, u32)]) -> (u64, u64) {
        let (mut hits, mut total) = (0, 0);
        for (id, s) in scores {
            if let Some(&y) = find(single, id) {
                total += 1;
                if argmax(s) == y {
                    hits += 1;
                }
            }
        }
        (hits, total)
    }

    pub fn real(scores: &[(String, Vec<f32>)], labels: &[(String, Vec<u32>)], count_empty: bool) -> (u64, u64) {
        let (mut hits, mut total) = (0, 0);
        for (id, s) in scores {
            if let Some(set) = find(labels, id) {
                if set.is_empty() && !count_empty {
                    continue;
                }
                total += 1;
                if set.contains(&argmax(s)) {
                    hits += 1;
                }
            }
        }
        (hits, total)
    }

    /// Per label count `g >= min_group`: (g, N_g, A_g); then ASMA.
    pub fn subgroups(
        scores: &[(String, Vec<f32>)],
        labels: &[(String, Vec<u32>)],
        num_classes: usize,
        mode: &str,
        min_group: usize,
    ) -> (Vec<(usize, u64, f64)>, f64) {
        let mut groups: Vec<(usize, Vec<f64>)> = Vec::new();
        for (id, s) in scores {
            let Some(set) = find(labels, id) else { continue };
            let g = set.len();
            if g < min_group {
                continue;
            }
            let gt = mask(set, num_classes);
            let pred = topk(s, g);
            let value = labelwise(mode, &gt, &pred);
            match groups.iter_mut().find(|(k, _)| *k == g) {
                Some((_, v)) => v.push(value),
                None => groups.push((g, vec![value])),
            }
        }
        groups.sort_by_key(|(g, _)| *g);
        let per: Vec<(usize, u64, f64)> = groups
            .iter()
            .map(|(g, v)| (*g, v.len() as u64, v.iter().sum::<f64>() / v.len() as f64))
            .collect();
        let asma = per.iter().map(|p| p.2).sum::<f64>() / per.len() as f64;
        (per, asma)
    }
}
