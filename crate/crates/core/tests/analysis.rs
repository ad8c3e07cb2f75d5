mod common;

use common::report;
use mlpc_core::analysis::{
    competition_ranks, gap_analysis, gap_svg, multiseed_aggregate, rank_table, render_plots, subgroup_export,
    subgroup_svg, write_subgroup_csv, RankInput,
};
use mlpc_core::metrics::{LabelwiseMode, Metric};
use mlpc_core::Error;

const J: LabelwiseMode = LabelwiseMode::Jaccard;

#[test]
fn gap_of_one_model() {
    let a = [report("m", "v1", J, Some(0.80), &[(1, 0.5)])];
    let b = [report("m", "v2", J, Some(0.70), &[(1, 0.5)])];
    let gaps = gap_analysis(&a, &b, Metric::Top1).unwrap();
    assert!((gaps.records[0].absolute_difference - 0.10).abs() < 1e-12);
    assert_eq!((gaps.label_a.as_str(), gaps.label_b.as_str()), ("v1", "v2"));
    let asma = gap_analysis(&a, &b, Metric::Asma).unwrap();
    assert_eq!(asma.summary.max_difference, 0.0);
    assert_eq!(asma.summary.below_one_percent, 1);
}

#[test]
fn identical_sets_have_zero_gaps() {
    let set: Vec<_> = (0..5)
        .map(|i| report(&format!("m{i}"), "v1", J, Some(0.5 + i as f64 / 20.0), &[(1, 0.3), (2, 0.4)]))
        .collect();
    for metric in [Metric::Top1, Metric::Real, Metric::Asma] {
        let gaps = gap_analysis(&set, &set, metric).unwrap();
        assert!(gaps.records.iter().all(|r| r.absolute_difference == 0.0));
    }
}

#[test]
fn gap_reports_models_missing_on_one_side() {
    let a = [report("m1", "v1", J, Some(0.8), &[]), report("m2", "v1", J, Some(0.7), &[])];
    let b = [report("m2", "v2", J, Some(0.6), &[]), report("m3", "v2", J, Some(0.6), &[])];
    let gaps = gap_analysis(&a, &b, Metric::Top1).unwrap();
    assert_eq!(gaps.records.len(), 1);
    assert_eq!(gaps.summary.only_in_a, vec!["m1"]);
    assert_eq!(gaps.summary.only_in_b, vec!["m3"]);
    let disjoint = [report("z", "v2", J, Some(0.6), &[])];
    assert!(matches!(gap_analysis(&a, &disjoint, Metric::Top1), Err(Error::EmptyIntersection)));
    // top-1 absent from multi-label-only reports
    let no_top1 = [report("m1", "v2", J, None, &[])];
    assert!(matches!(gap_analysis(&a, &no_top1, Metric::Top1), Err(Error::MissingMetric { .. })));
}

#[test]
fn tied_values_share_the_lower_rank() {
    let ranks = competition_ranks(&[("a", 0.5), ("b", 0.7), ("c", 0.5), ("d", 0.4)]);
    assert_eq!(ranks["b"], 1);
    assert_eq!(ranks["a"], 2);
    assert_eq!(ranks["c"], 2);
    assert_eq!(ranks["d"], 4);
}

#[test]
fn delta_ranks_sum_to_zero_without_ties() {
    let inputs: Vec<RankInput> = (0..12)
        .map(|i| RankInput {
            model_id: format!("m{i:02}"),
            primary: ((i * 7) % 12) as f64,
            baseline: ((i * 5) % 12) as f64,
        })
        .collect();
    let table = rank_table(&inputs, "asma", "top1").unwrap();
    assert_eq!(table.rows.iter().map(|r| r.delta_rank).sum::<i64>(), 0);
    assert!(table.rows.windows(2).all(|w| w[0].primary_rank < w[1].primary_rank));
}

#[test]
fn ranks_survive_monotone_transforms() {
    let inputs: Vec<RankInput> = (0..8)
        .map(|i| RankInput {
            model_id: format!("m{i}"),
            primary: (i as f64 * 0.37).sin(),
            baseline: (i as f64 * 0.91).cos(),
        })
        .collect();
    let transformed: Vec<RankInput> = inputs
        .iter()
        .map(|r| RankInput {
            primary: r.primary.exp() * 3.0,
            baseline: r.baseline * 10.0 + 1.0,
            ..r.clone()
        })
        .collect();
    let a = rank_table(&inputs, "p", "b").unwrap();
    let b = rank_table(&transformed, "p", "b").unwrap();
    let ranks = |t: &mlpc_core::analysis::RankTable| {
        t.rows.iter().map(|r| (r.model_id.clone(), r.primary_rank, r.baseline_rank)).collect::<Vec<_>>()
    };
    assert_eq!(ranks(&a), ranks(&b));
}

#[test]
fn rank_needs_two_models() {
    let one = [RankInput {
        model_id: "m".into(),
        primary: 1.0,
        baseline: 1.0,
    }];
    assert!(rank_table(&one, "p", "b").is_err());
}

#[test]
fn multiseed_mean_and_permutation_invariance() {
    let r1 = report("m", "patchml-seed1", J, None, &[(1, 0.70)]);
    let r2 = report("m", "patchml-seed2", J, None, &[(1, 0.72)]);
    let fwd = multiseed_aggregate(&[r1.clone(), r2.clone()]).unwrap();
    let rev = multiseed_aggregate(&[r2, r1]).unwrap();
    assert!((fwd.subgroups.asma - 0.71).abs() < 1e-12);
    assert_eq!(fwd, rev);
    assert_eq!(fwd.dataset_id, "patchml-seed-mean");
    assert_eq!(fwd.aggregated_from.as_ref().unwrap().len(), 2);
}

#[test]
fn multiseed_rejects_mixed_modes() {
    let r1 = report("m", "s1", J, None, &[(1, 0.7)]);
    let r2 = report("m", "s2", LabelwiseMode::Recall, None, &[(1, 0.7)]);
    assert!(matches!(multiseed_aggregate(&[r1, r2]), Err(Error::Heterogeneous { .. })));
}

#[test]
fn subgroup_export_cardinality() {
    let mut reports = Vec::new();
    for ds in ["v1", "v2"] {
        for m in ["a", "b", "c"] {
            reports.push(report(m, ds, J, None, &[(1, 0.9), (2, 0.8), (7, 0.1)]));
        }
    }
    let rows = subgroup_export(&reports, 2, 5);
    assert_eq!(rows.len(), 6);
    let mut buf = Vec::new();
    write_subgroup_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "model_id,dataset_id,label_count,accuracy,mode");
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn gap_plot_has_one_point_per_model() {
    let a: Vec<_> = (0..10).map(|i| report(&format!("m{i}"), "v1", J, Some(0.9 - i as f64 / 50.0), &[])).collect();
    let b: Vec<_> = (0..10).map(|i| report(&format!("m{i}"), "v2", J, Some(0.8 - i as f64 / 50.0), &[])).collect();
    let gaps = gap_analysis(&a, &b, Metric::Top1).unwrap();
    let svg = gap_svg(&gaps).unwrap();
    assert_eq!(svg.matches(r#"class="a""#).count(), 10);
    assert_eq!(svg.matches(r#"class="b""#).count(), 10);
    let xs: std::collections::BTreeSet<&str> = svg
        .lines()
        .filter(|l| l.contains(r#"class="a""#))
        .map(|l| l.split("cx=\"").nth(1).unwrap().split('"').next().unwrap())
        .collect();
    assert_eq!(xs.len(), 10);
    assert_eq!(svg, gap_svg(&gaps).unwrap());
}

#[test]
fn subgroup_plot_boxes_and_empty_input() {
    let reports: Vec<_> = (0..4).map(|i| report(&format!("m{i}"), "v1", J, None, &[(1, 0.5 + i as f64 / 10.0), (2, 0.4)])).collect();
    let rows = subgroup_export(&reports, 1, 5);
    let svg = subgroup_svg(&rows).unwrap();
    assert_eq!(svg.matches(r#"class="box""#).count(), 2);
    assert!(matches!(subgroup_svg(&[]), Err(Error::EmptyTable(_))));
    let dir = tempfile::tempdir().unwrap();
    assert!(render_plots(None, None, dir.path()).is_err());
    let written = render_plots(None, Some(&rows), dir.path()).unwrap();
    assert_eq!(written, vec![dir.path().join("subgroups.svg")]);
}
