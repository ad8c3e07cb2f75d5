//! Dependency-free SVG renderings of gap tables and subgroup distributions.
//! Output is a pure function of the input rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::export::SubgroupRow;
use crate::analysis::gap::GapAnalysis;
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn y_of(v: f64) -> f64 {
    TOP + (1.0 - v.clamp(0.0, 1.0)) * (HEIGHT - TOP - BOTTOM)
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for tick in 0..=10 {
        let v = f64::from(tick) / 10.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/>"#,
        HEIGHT - BOTTOM
    );
}

/// Per-model values on both datasets, models in record order.
pub fn gap_svg(gaps: &GapAnalysis) -> Result<String> {
    if gaps.records.is_empty() {
        return Err(Error::EmptyTable("gap table"));
    }
    let n = gaps.records.len() as f64;
    let step = (WIDTH - LEFT - RIGHT) / n;
    let x_of = |i: usize| LEFT + (i as f64 + 0.5) * step;
    let mut svg = String::new();
    header(&mut svg, &format!("{} per model: {} vs {}", gaps.metric, gaps.label_a, gaps.label_b));
    for (series, (color, label)) in [(PALETTE[0], &gaps.label_a), (PALETTE[1], &gaps.label_b)].into_iter().enumerate() {
        let value = |i: usize| {
            let r = &gaps.records[i];
            if series == 0 { r.value_a } else { r.value_b }
        };
        let points: Vec<String> = (0..gaps.records.len())
            .map(|i| format!("{:.2},{:.2}", x_of(i), y_of(value(i))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let class = if series == 0 { "a" } else { "b" };
        for i in 0..gaps.records.len() {
            let _ = writeln!(
                svg,
                r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"><title>{} {:.6}</title></circle>"#,
                x_of(i),
                y_of(value(i)),
                escape(&gaps.records[i].model_id),
                value(i)
            );
        }
        let ly = TOP + 14.0 * series as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - RIGHT - 180.0,
            ly - 9.0,
            WIDTH - RIGHT - 165.0,
            ly,
            escape(label)
        );
    }
    if gaps.records.len() <= 40 {
        for (i, r) in gaps.records.iter().enumerate() {
            let (x, y) = (x_of(i), HEIGHT - BOTTOM + 10.0);
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{y:.2}" transform="rotate(45 {x:.2} {y:.2})">{}</text>"#,
                escape(&r.model_id)
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Most extreme data within 1.5 IQR of the box.
    pub whisker_low: f64,
    pub whisker_high: f64,
}

pub fn box_stats(values: &[f64]) -> BoxStats {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let whisker_low = sorted.iter().copied().find(|v| *v >= q1 - 1.5 * iqr).unwrap_or(q1);
    let whisker_high = sorted.iter().rev().copied().find(|v| *v <= q3 + 1.5 * iqr).unwrap_or(q3);
    BoxStats {
        q1,
        median: quantile(&sorted, 0.5),
        q3,
        whisker_low,
        whisker_high,
    }
}

/// Box plot of subgroup accuracy per label count, one box per dataset,
/// every model drawn as a dot.
pub fn subgroup_svg(rows: &[SubgroupRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyTable("subgroup table"));
    }
    let counts: BTreeSet<usize> = rows.iter().map(|r| r.label_count).collect();
    let datasets: BTreeSet<&str> = rows.iter().map(|r| r.dataset_id.as_str()).collect();
    let mut cells: BTreeMap<(usize, &str), Vec<f64>> = BTreeMap::new();
    for r in rows {
        cells.entry((r.label_count, r.dataset_id.as_str())).or_default().push(r.accuracy);
    }
    let slot = (WIDTH - LEFT - RIGHT) / counts.len() as f64;
    let box_w = (slot * 0.8) / datasets.len() as f64;
    let mut svg = String::new();
    header(&mut svg, &format!("Subgroup accuracy vs label count ({})", rows[0].mode));
    for (ci, count) in counts.iter().enumerate() {
        let x0 = LEFT + ci as f64 * slot + slot * 0.1;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{count}</text>"#,
            LEFT + (ci as f64 + 0.5) * slot,
            HEIGHT - BOTTOM + 16.0
        );
        for (di, dataset) in datasets.iter().enumerate() {
            let Some(values) = cells.get(&(*count, *dataset)) else {
                continue;
            };
            let color = PALETTE[di % PALETTE.len()];
            let s = box_stats(values);
            let (xl, xc) = (x0 + di as f64 * box_w + box_w * 0.1, x0 + (di as f64 + 0.5) * box_w);
            let bw = box_w * 0.8;
            let _ = writeln!(
                svg,
                r#"<g class="box" data-label-count="{count}" data-dataset="{}">"#,
                escape(dataset)
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{xc:.2}" y1="{:.2}" x2="{xc:.2}" y2="{:.2}" stroke="{color}"/>"#,
                y_of(s.whisker_low),
                y_of(s.whisker_high)
            );
            let _ = writeln!(
                svg,
                r#"<rect x="{xl:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="{color}" fill-opacity="0.25" stroke="{color}"/>"#,
                y_of(s.q3),
                (y_of(s.q1) - y_of(s.q3)).max(0.5)
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{xl:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
                y_of(s.median),
                xl + bw,
                y_of(s.median)
            );
            for v in values {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{xc:.2}" cy="{:.2}" r="2" fill="{color}" fill-opacity="0.6"/>"#,
                    y_of(*v)
                );
            }
            svg.push_str("</g>\n");
        }
    }
    for (di, dataset) in datasets.iter().enumerate() {
        let ly = TOP + 14.0 * di as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - RIGHT - 180.0,
            ly - 9.0,
            PALETTE[di % PALETTE.len()],
            WIDTH - RIGHT - 165.0,
            ly,
            escape(dataset)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `gaps.svg` and/or `subgroups.svg` into `dir`.
pub fn render_plots(gaps: Option<&GapAnalysis>, subgroups: Option<&[SubgroupRow]>, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if gaps.is_none() && subgroups.is_none() {
        return Err(Error::EmptyTable("no tables given"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, svg: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    if let Some(g) = gaps {
        emit("gaps.svg", gap_svg(g)?)?;
    }
    if let Some(rows) = subgroups {
        emit("subgroups.svg", subgroup_svg(rows)?)?;
    }
    Ok(written)
}
