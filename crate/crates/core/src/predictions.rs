//! Ranked per-image predictions.
//!
//! Records are truncated top-M rankings. Every ranking is kept in canonical
//! order: descending score, ties broken by ascending class id. Metrics only
//! ever look at this order, never at score magnitudes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::annotations::{json_string, write_joined};
use crate::error::{Error, Result};
use crate::ClassId;

pub const DEFAULT_DEPTH: u32 = 20;

/// Requested more ranked entries than a record holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthShortfall {
    pub required: usize,
    pub available: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    entries: Vec<(ClassId, f32)>,
}

fn canonical_cmp(a: &(ClassId, f32), b: &(ClassId, f32)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .expect("scores are finite")
        .then(a.0.cmp(&b.0))
}

impl Ranking {
    /// Builds a canonical ranking. Callers have already checked finiteness
    /// and class-id uniqueness; this only sorts.
    fn from_validated(mut entries: Vec<(ClassId, f32)>) -> Self {
        entries.sort_by(canonical_cmp);
        Self { entries }
    }

    /// Validates and canonicalizes `(class, score)` pairs.
    pub fn new(entries: Vec<(ClassId, f32)>) -> std::result::Result<Self, String> {
        if entries.is_empty() {
            return Err("empty ranking".into());
        }
        let mut seen = BTreeSet::new();
        for &(class, score) in &entries {
            if !score.is_finite() {
                return Err(format!("non-finite score for class {class}"));
            }
            if !seen.insert(class) {
                return Err(format!("duplicate class {class}"));
            }
        }
        Ok(Self::from_validated(entries))
    }

    /// Builds a ranking from class ids already in rank order; scores are
    /// synthesized as strictly decreasing values.
    pub fn from_order(classes: &[ClassId]) -> std::result::Result<Self, String> {
        let n = classes.len() as f32;
        Self::new(
            classes
                .iter()
                .enumerate()
                .map(|(i, &c)| (c, (n - i as f32) / n))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[(ClassId, f32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Class ids in rank order.
    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn argmax(&self) -> ClassId {
        self.entries[0].0
    }

    /// The first `k` class ids in canonical order, returned sorted ascending.
    pub fn topk_set(&self, k: usize) -> std::result::Result<Vec<ClassId>, DepthShortfall> {
        if k > self.entries.len() {
            return Err(DepthShortfall {
                required: k,
                available: self.entries.len(),
            });
        }
        let mut set: Vec<ClassId> = self.entries[..k].iter().map(|e| e.0).collect();
        set.sort_unstable();
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDataset {
    pub model_id: String,
    pub dataset_id: String,
    pub num_classes: u32,
    pub depth: u32,
    records: BTreeMap<String, Ranking>,
}

impl PredictionDataset {
    pub fn new(
        model_id: impl Into<String>,
        dataset_id: impl Into<String>,
        num_classes: u32,
        depth: u32,
    ) -> Result<Self> {
        if num_classes == 0 || depth == 0 {
            return Err(Error::Config("num_classes and depth must be positive".into()));
        }
        Ok(Self {
            model_id: model_id.into(),
            dataset_id: dataset_id.into(),
            num_classes,
            depth,
            records: BTreeMap::new(),
        })
    }

    /// Validates one record against the dataset header and stores it.
    pub fn insert_at_line(
        &mut self,
        line: usize,
        id: impl Into<String>,
        entries: Vec<(ClassId, f32)>,
    ) -> Result<()> {
        let id = id.into();
        if entries.is_empty() || entries.len() > self.depth as usize {
            return Err(Error::DepthViolation {
                line,
                id,
                len: entries.len(),
                depth: self.depth,
            });
        }
        let mut seen = BTreeSet::new();
        for &(class, score) in &entries {
            if class >= self.num_classes {
                return Err(Error::ClassOutOfRange {
                    line,
                    class_id: u64::from(class),
                    num_classes: self.num_classes,
                });
            }
            if !score.is_finite() {
                return Err(Error::NonFiniteScore { line, id });
            }
            if !seen.insert(class) {
                return Err(Error::DuplicateClass {
                    line,
                    id,
                    class_id: class,
                });
            }
        }
        if self.records.contains_key(&id) {
            return Err(Error::DuplicateImage { line, id });
        }
        self.records.insert(id, Ranking::from_validated(entries));
        Ok(())
    }

    pub fn insert(&mut self, id: impl Into<String>, entries: Vec<(ClassId, f32)>) -> Result<()> {
        let next = self.records.len() + 1;
        self.insert_at_line(next, id, entries)
    }

    pub fn get(&self, id: &str) -> Option<&Ranking> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Ranking)> {
        self.records.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub(crate) fn records(&self) -> &BTreeMap<String, Ranking> {
        &self.records
    }

    pub fn topk_set(&self, image_id: &str, k: usize) -> Result<Vec<ClassId>> {
        let ranking = self
            .records
            .get(image_id)
            .ok_or_else(|| Error::Config(format!("no prediction for image {image_id:?}")))?;
        ranking.topk_set(k).map_err(|s| Error::InsufficientDepth {
            image_id: image_id.to_string(),
            required: s.required,
            available: s.available,
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{{\"meta\":{{\"dataset_id\":{},\"depth\":{},\"model_id\":{},\"num_classes\":{}}}}}",
            json_string(&self.dataset_id),
            self.depth,
            json_string(&self.model_id),
            self.num_classes
        )?;
        for (id, ranking) in &self.records {
            let classes: Vec<ClassId> = ranking.classes().collect();
            let scores: Vec<f32> = ranking.entries.iter().map(|e| e.1).collect();
            write!(out, "{{\"id\":{},\"classes\":[", json_string(id))?;
            write_joined(&mut out, &classes)?;
            out.write_all(b"],\"scores\":[")?;
            write_joined(&mut out, &scores)?;
            writeln!(out, "]}}")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON output is UTF-8")
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_jsonl(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Deserialize)]
struct HeaderLine {
    meta: PredictionMeta,
}

#[derive(Deserialize)]
struct PredictionMeta {
    model_id: String,
    dataset_id: String,
    num_classes: u32,
    depth: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    classes: Vec<i64>,
    scores: Vec<Value>,
}

fn parse_score(line: usize, id: &str, value: &Value) -> Result<f32> {
    match value {
        Value::Number(n) => {
            let score = n.as_f64().unwrap_or(f64::NAN) as f32;
            if score.is_finite() {
                Ok(score)
            } else {
                Err(Error::NonFiniteScore {
                    line,
                    id: id.to_string(),
                })
            }
        }
        Value::String(s) => {
            let lowered = s.trim().to_ascii_lowercase();
            let lowered = lowered.trim_start_matches(['+', '-']);
            if matches!(lowered, "nan" | "inf" | "infinity") {
                Err(Error::NonFiniteScore {
                    line,
                    id: id.to_string(),
                })
            } else {
                Err(Error::malformed(line, format!("score {s:?} is not a number")))
            }
        }
        other => Err(Error::malformed(line, format!("score {other} is not a number"))),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<PredictionDataset> {
    let mut dataset: Option<PredictionDataset> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::malformed(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match dataset.as_mut() {
            None => {
                let header: HeaderLine = serde_json::from_str(&line)
                    .map_err(|e| Error::malformed(lineno, format!("expected meta header: {e}")))?;
                let m = header.meta;
                dataset = Some(
                    PredictionDataset::new(m.model_id, m.dataset_id, m.num_classes, m.depth)
                        .map_err(|e| Error::malformed(lineno, e.to_string()))?,
                );
            }
            Some(dataset) => {
                let record: RecordLine =
                    serde_json::from_str(&line).map_err(|e| Error::malformed(lineno, e.to_string()))?;
                if record.classes.len() != record.scores.len() {
                    return Err(Error::malformed(
                        lineno,
                        format!(
                            "{} classes but {} scores",
                            record.classes.len(),
                            record.scores.len()
                        ),
                    ));
                }
                let mut entries = Vec::with_capacity(record.classes.len());
                for (class, score) in record.classes.iter().zip(&record.scores) {
                    let class = match ClassId::try_from(*class) {
                        Ok(c) => c,
                        Err(_) if *class > 0 => {
                            return Err(Error::ClassOutOfRange {
                                line: lineno,
                                class_id: *class as u64,
                                num_classes: dataset.num_classes,
                            })
                        }
                        Err(_) => return Err(Error::malformed(lineno, format!("negative class id {class}"))),
                    };
                    entries.push((class, parse_score(lineno, &record.id, score)?));
                }
                dataset.insert_at_line(lineno, record.id, entries)?;
            }
        }
    }
    dataset.ok_or_else(|| Error::malformed(1, "missing meta header"))
}

/// Loads predictions, choosing the binary container when the file starts
/// with its magic bytes and JSONL otherwise.
pub fn load_predictions(path: &Path) -> Result<PredictionDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let head = reader.fill_buf().map_err(|e| Error::io(path, e))?;
    if head.starts_with(crate::container::MAGIC) {
        crate::container::read_binary(reader)
    } else {
        read_jsonl(reader)
    }
}
