//! Multi-label ground-truth annotations.
//!
//! An [`AnnotationStore`] maps image ids to the set of class ids considered
//! valid for that image. Empty sets are kept: whether an unannotated image
//! counts is a metric policy, not a storage one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ClassId;

/// On-disk annotation layouts accepted by [`load_annotations`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationFormat {
    /// Canonical JSONL: a `meta` header line, then `{"id", "labels"}` lines.
    Jsonl,
    /// A single JSON array of label arrays; position `i` becomes the id
    /// rendered from `id_template` with `{index}` = `i + index_base`.
    RealAdapter {
        id_template: String,
        index_base: u64,
        num_classes: u32,
        dataset_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationStore {
    dataset_id: String,
    num_classes: u32,
    entries: BTreeMap<String, Vec<ClassId>>,
}

impl AnnotationStore {
    pub fn new(dataset_id: impl Into<String>, num_classes: u32) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        Ok(Self {
            dataset_id: dataset_id.into(),
            num_classes,
            entries: BTreeMap::new(),
        })
    }

    /// Adds one image. Duplicate labels collapse; out-of-range ids and
    /// repeated image ids are rejected. `line` is used for error reporting.
    pub fn insert_at_line(
        &mut self,
        line: usize,
        id: impl Into<String>,
        labels: impl IntoIterator<Item = u64>,
    ) -> Result<()> {
        let id = id.into();
        let mut set = BTreeSet::new();
        for label in labels {
            if label >= u64::from(self.num_classes) {
                return Err(Error::ClassOutOfRange {
                    line,
                    class_id: label,
                    num_classes: self.num_classes,
                });
            }
            set.insert(label as ClassId);
        }
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateImage { line, id });
        }
        self.entries.insert(id, set.into_iter().collect());
        Ok(())
    }

    pub fn insert(
        &mut self,
        id: impl Into<String>,
        labels: impl IntoIterator<Item = ClassId>,
    ) -> Result<()> {
        let next = self.entries.len() + 1;
        self.insert_at_line(next, id, labels.into_iter().map(u64::from))
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted label set for `id`.
    pub fn get(&self, id: &str) -> Option<&[ClassId]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    /// Entries in lexicographic id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[ClassId])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub(crate) fn entries(&self) -> &BTreeMap<String, Vec<ClassId>> {
        &self.entries
    }

    /// Canonical JSONL: header, then ids ascending with sorted label sets.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{{\"meta\":{{\"dataset_id\":{},\"num_classes\":{}}}}}",
            json_string(&self.dataset_id),
            self.num_classes
        )?;
        for (id, labels) in &self.entries {
            write!(out, "{{\"id\":{},\"labels\":[", json_string(id))?;
            write_joined(&mut out, labels)?;
            writeln!(out, "]}}")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON output is UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_jsonl(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub(crate) fn write_joined<W: Write, T: std::fmt::Display>(
    out: &mut W,
    items: &[T],
) -> std::io::Result<()> {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        write!(out, "{item}")?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct HeaderLine {
    meta: AnnotationMeta,
}

#[derive(Deserialize)]
struct AnnotationMeta {
    dataset_id: String,
    num_classes: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryLine {
    id: String,
    labels: Vec<i64>,
}

fn checked_labels(line: usize, labels: Vec<i64>) -> Result<Vec<u64>> {
    labels
        .into_iter()
        .map(|l| u64::try_from(l).map_err(|_| Error::malformed(line, format!("negative class id {l}"))))
        .collect()
}

/// Reads canonical annotation JSONL from any reader.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<AnnotationStore> {
    let mut store: Option<AnnotationStore> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::malformed(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match store.as_mut() {
            None => {
                let header: HeaderLine = serde_json::from_str(&line)
                    .map_err(|e| Error::malformed(lineno, format!("expected meta header: {e}")))?;
                store = Some(
                    AnnotationStore::new(header.meta.dataset_id, header.meta.num_classes)
                        .map_err(|e| Error::malformed(lineno, e.to_string()))?,
                );
            }
            Some(store) => {
                let entry: EntryLine =
                    serde_json::from_str(&line).map_err(|e| Error::malformed(lineno, e.to_string()))?;
                let labels = checked_labels(lineno, entry.labels)?;
                store.insert_at_line(lineno, entry.id, labels)?;
            }
        }
    }
    store.ok_or_else(|| Error::malformed(1, "missing meta header"))
}

/// Renders an id template such as `val_{index:08}` for one position.
pub fn render_id(template: &str, index: u64) -> Result<String> {
    let start = template
        .find("{index")
        .ok_or_else(|| Error::Config(format!("id template {template:?} lacks {{index}}")))?;
    let rest = &template[start + "{index".len()..];
    let end = rest
        .find('}')
        .ok_or_else(|| Error::Config(format!("unterminated placeholder in {template:?}")))?;
    let spec = &rest[..end];
    let formatted = match spec.strip_prefix(':') {
        None if spec.is_empty() => index.to_string(),
        Some(width) if !width.is_empty() && width.bytes().all(|b| b.is_ascii_digit()) => {
            let zero = width.starts_with('0');
            let width: usize = width
                .parse()
                .map_err(|_| Error::Config(format!("bad width in {template:?}")))?;
            if zero {
                format!("{index:0width$}")
            } else {
                format!("{index:width$}")
            }
        }
        _ => return Err(Error::Config(format!("unsupported placeholder in {template:?}"))),
    };
    Ok(format!("{}{}{}", &template[..start], formatted, &rest[end + 1..]))
}

/// Reads a positional label-array file (ReaL style).
pub fn read_real_adapter<R: Read>(
    reader: R,
    id_template: &str,
    index_base: u64,
    num_classes: u32,
    dataset_id: &str,
) -> Result<AnnotationStore> {
    let arrays: Vec<Vec<i64>> =
        serde_json::from_reader(reader).map_err(|e| Error::malformed(e.line(), e.to_string()))?;
    let mut store = AnnotationStore::new(dataset_id, num_classes)?;
    // errors name the array position (1-based), standing in for a line number
    for (i, labels) in arrays.into_iter().enumerate() {
        let id = render_id(id_template, i as u64 + index_base)?;
        let labels = checked_labels(i + 1, labels)?;
        store.insert_at_line(i + 1, id, labels)?;
    }
    Ok(store)
}

pub fn load_annotations(path: &Path, format: &AnnotationFormat) -> Result<AnnotationStore> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        AnnotationFormat::Jsonl => read_jsonl(reader),
        AnnotationFormat::RealAdapter {
            id_template,
            index_base,
            num_classes,
            dataset_id,
        } => read_real_adapter(reader, id_template, *index_base, *num_classes, dataset_id),
    }
}

/// Images partitioned by the size of their label set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubgroupIndex {
    pub groups: BTreeMap<usize, Vec<String>>,
}

impl SubgroupIndex {
    pub fn max_label_count(&self) -> Option<usize> {
        self.groups.keys().next_back().copied()
    }

    pub fn total(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }
}

pub fn subgroup_index(store: &AnnotationStore) -> SubgroupIndex {
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (id, labels) in store.iter() {
        groups.entry(labels.len()).or_default().push(id.to_string());
    }
    SubgroupIndex { groups }
}

/// Image counts per label count, with everything at or above
/// `overflow_bucket` folded into one bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCountHistogram {
    pub overflow_bucket: usize,
    /// Images with no labels.
    pub unlabeled: usize,
    /// Label counts `1..overflow_bucket`, every bucket present.
    pub buckets: BTreeMap<usize, usize>,
    /// Images with at least `overflow_bucket` labels.
    pub overflow: usize,
}

impl LabelCountHistogram {
    pub fn total(&self) -> usize {
        self.unlabeled + self.overflow + self.buckets.values().sum::<usize>()
    }

    /// Label shown for the overflow bucket, e.g. `>5` for bucket 6.
    pub fn overflow_label(&self) -> String {
        format!(">{}", self.overflow_bucket - 1)
    }
}

pub fn label_count_histogram(store: &AnnotationStore, overflow_bucket: usize) -> Result<LabelCountHistogram> {
    if overflow_bucket == 0 {
        return Err(Error::Config("overflow bucket must be at least 1".into()));
    }
    let mut hist = LabelCountHistogram {
        overflow_bucket,
        unlabeled: 0,
        buckets: (1..overflow_bucket).map(|g| (g, 0)).collect(),
        overflow: 0,
    };
    for (_, labels) in store.iter() {
        match labels.len() {
            0 => hist.unlabeled += 1,
            n if n >= overflow_bucket => hist.overflow += 1,
            n => *hist.buckets.get_mut(&n).expect("bucket pre-filled") += 1,
        }
    }
    Ok(hist)
}
