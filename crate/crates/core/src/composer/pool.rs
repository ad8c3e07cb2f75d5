use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ClassId;

/// One labeled object crop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub patch_id: String,
    pub label: ClassId,
    /// Source image, relative to the patch manifest's directory.
    pub source: String,
    /// Crop box `[x, y, w, h]` in source pixels.
    #[serde(rename = "box")]
    pub bbox: [u32; 4],
}

impl PatchRecord {
    pub fn width(&self) -> u32 {
        self.bbox[2]
    }

    pub fn height(&self) -> u32 {
        self.bbox[3]
    }
}

/// Yields the unresized pixels of a patch.
pub trait PatchPixels: Sync {
    fn pixels(&self, patch: &PatchRecord) -> Result<RgbImage>;
}

/// Crops patches out of source images on disk.
#[derive(Debug, Clone)]
pub struct FilePixels {
    root: PathBuf,
}

impl FilePixels {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl PatchPixels for FilePixels {
    fn pixels(&self, patch: &PatchRecord) -> Result<RgbImage> {
        let path = self.root.join(&patch.source);
        let img = image::open(&path).map_err(|e| Error::Image {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let [x, y, w, h] = patch.bbox;
        if x.saturating_add(w) > img.width() || y.saturating_add(h) > img.height() {
            return Err(Error::Image {
                path,
                message: format!("box {:?} exceeds image {}x{}", patch.bbox, img.width(), img.height()),
            });
        }
        Ok(img.crop_imm(x, y, w, h).to_rgb8())
    }
}

/// Reads the patch manifest JSONL and checks every row: positive box area,
/// label in range, unique patch ids, readable source whose bounds contain
/// the box. The pool keeps file order.
pub fn build_pool(manifest: &Path, num_classes: u32) -> Result<Vec<PatchRecord>> {
    let file = File::open(manifest).map_err(|e| Error::io(manifest, e))?;
    let root = manifest.parent().unwrap_or(Path::new("."));
    let mut dims_cache: HashMap<String, (u32, u32)> = HashMap::new();
    let mut seen = BTreeSet::new();
    let mut pool = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let row = idx + 1;
        let line = line.map_err(|e| Error::io(manifest, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let patch: PatchRecord = serde_json::from_str(&line).map_err(|e| Error::BadPatch {
            row,
            message: e.to_string(),
        })?;
        let bad = |message: String| Error::BadPatch { row, message };
        let [x, y, w, h] = patch.bbox;
        if w == 0 || h == 0 {
            return Err(bad(format!("degenerate crop box {:?}", patch.bbox)));
        }
        if patch.label >= num_classes {
            return Err(bad(format!("label {} out of range for {num_classes} classes", patch.label)));
        }
        if !seen.insert(patch.patch_id.clone()) {
            return Err(bad(format!("duplicate patch id {:?}", patch.patch_id)));
        }
        let (iw, ih) = match dims_cache.get(&patch.source) {
            Some(d) => *d,
            None => {
                let path = root.join(&patch.source);
                let d = image::image_dimensions(&path)
                    .map_err(|e| bad(format!("unreadable source {}: {e}", path.display())))?;
                dims_cache.insert(patch.source.clone(), d);
                d
            }
        };
        if x.saturating_add(w) > iw || y.saturating_add(h) > ih {
            return Err(bad(format!("box {:?} exceeds source {iw}x{ih}", patch.bbox)));
        }
        pool.push(patch);
    }
    Ok(pool)
}
