use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotations::AnnotationStore;
use crate::composer::config::{ComposerConfig, GridConfig, PoolPolicy};
use crate::composer::geometry::{paste_resized, GridCanvas, PlacementRecord};
use crate::composer::pool::{PatchPixels, PatchRecord};
use crate::error::{Error, Result};
use crate::ClassId;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the ChaCha8 stream used for one `(k, p)` family:
/// `splitmix64(seed ^ splitmix64(k << 32 | p))`.
pub fn substream_seed(seed: u64, grid: GridConfig) -> u64 {
    splitmix64(seed ^ splitmix64((u64::from(grid.k) << 32) | u64::from(grid.p)))
}

pub fn composite_id(grid: GridConfig, index: usize, seed: u64) -> String {
    format!("patchml_{}_{}_{}_seed_{}", grid.k, grid.p, index, seed)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeEntry {
    pub image_id: String,
    pub k: u32,
    pub p: u32,
    pub canvas: u32,
    pub index: usize,
    /// Union of placed patch labels, ascending.
    pub labels: Vec<ClassId>,
    pub placements: Vec<PlacementRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub k: u32,
    pub p: u32,
    pub substream_seed: u64,
    pub composites: usize,
    pub used_patches: usize,
    /// Patches left when this family stopped: discarded under
    /// `fresh_per_config`, carried to the next family under `shared`.
    pub unused_patches: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub seed: u64,
    pub canvas: u32,
    pub num_classes: u32,
    pub distinct_labels: bool,
    pub pool_policy: PoolPolicy,
    pub pool_size: usize,
    pub configs: Vec<ConfigSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeManifest {
    pub meta: ManifestMeta,
    /// Ordered by family (config order), then index.
    pub composites: Vec<CompositeEntry>,
}

impl CompositeManifest {
    pub fn dataset_id(&self) -> String {
        format!("patchml-seed{}", self.meta.seed)
    }

    /// Header line then one line per composite.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            meta: &'a ManifestMeta,
        }
        serde_json::to_writer(&mut out, &Header { meta: &self.meta })?;
        out.write_all(b"\n")?;
        for entry in &self.composites {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON output is UTF-8")
    }

    /// Ground truth for the composites, ready for evaluation.
    pub fn to_annotation_store(&self) -> Result<AnnotationStore> {
        let mut store = AnnotationStore::new(self.dataset_id(), self.meta.num_classes)?;
        for entry in &self.composites {
            store.insert(entry.image_id.clone(), entry.labels.iter().copied())?;
        }
        Ok(store)
    }
}

/// Draws `k` pool positions without replacement by swap-removal from
/// `remaining`. With `distinct`, draws whose label is already taken are set
/// aside and returned to the pool afterwards. Returns `None`, with the pool
/// restored, when `k` suitable patches cannot be found.
fn sample_patches(
    rng: &mut ChaCha8Rng,
    remaining: &mut Vec<usize>,
    pool: &[PatchRecord],
    k: usize,
    distinct: bool,
) -> Option<Vec<usize>> {
    let mut chosen = Vec::with_capacity(k);
    let mut labels = BTreeSet::new();
    let mut deferred = Vec::new();
    while chosen.len() < k && !remaining.is_empty() {
        let pick = remaining.swap_remove(rng.random_range(0..remaining.len()));
        if distinct && !labels.insert(pool[pick].label) {
            deferred.push(pick);
        } else {
            chosen.push(pick);
        }
    }
    remaining.extend(deferred);
    if chosen.len() < k {
        remaining.extend(chosen);
        return None;
    }
    Some(chosen)
}

fn generate_family(
    config: &ComposerConfig,
    grid: GridConfig,
    pool: &[PatchRecord],
    remaining: &mut Vec<usize>,
) -> (ConfigSummary, Vec<CompositeEntry>) {
    let seed = substream_seed(config.seed, grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = grid.k as usize;
    let dim = config.canvas / grid.p;
    let mut composites = Vec::new();
    let mut used = 0;
    while remaining.len() >= k {
        let Some(chosen) = sample_patches(&mut rng, remaining, pool, k, config.distinct_labels) else {
            break;
        };
        used += chosen.len();
        let mut canvas = GridCanvas::new(config.canvas, grid.p);
        let mut placements = Vec::with_capacity(k);
        let mut labels = BTreeSet::new();
        for (i, &pick) in chosen.iter().enumerate() {
            let (row, col) = (i as u32 / dim, i as u32 % dim);
            if let Some(rec) = canvas.place_patch_in_grid(&pool[pick], None, row, col, &mut rng) {
                labels.insert(rec.label);
                placements.push(rec);
            }
        }
        let index = composites.len();
        composites.push(CompositeEntry {
            image_id: composite_id(grid, index, config.seed),
            k: grid.k,
            p: grid.p,
            canvas: config.canvas,
            index,
            labels: labels.into_iter().collect(),
            placements,
        });
    }
    let summary = ConfigSummary {
        k: grid.k,
        p: grid.p,
        substream_seed: seed,
        composites: composites.len(),
        used_patches: used,
        unused_patches: remaining.len(),
    };
    (summary, composites)
}

/// Builds the composite manifest. Each family draws from its own seeded
/// stream: per composite, `k` swap-remove draws, then for each patch in
/// order an x offset and a y offset, both uniform over the cell slack.
pub fn generate_manifest(config: &ComposerConfig, pool: &[PatchRecord]) -> Result<CompositeManifest> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::Config("patch pool is empty".into()));
    }
    if let Some(p) = pool.iter().find(|p| p.label >= config.num_classes) {
        return Err(Error::Config(format!(
            "patch {:?} label {} out of range for {} classes",
            p.patch_id, p.label, config.num_classes
        )));
    }
    let families: Vec<(ConfigSummary, Vec<CompositeEntry>)> = match config.pool_policy {
        PoolPolicy::FreshPerConfig => {
            let run = |grid: &GridConfig| {
                let mut remaining: Vec<usize> = (0..pool.len()).collect();
                generate_family(config, *grid, pool, &mut remaining)
            };
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                config.configs.par_iter().map(run).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                config.configs.iter().map(run).collect()
            }
        }
        PoolPolicy::Shared => {
            let mut remaining: Vec<usize> = (0..pool.len()).collect();
            config
                .configs
                .iter()
                .map(|grid| generate_family(config, *grid, pool, &mut remaining))
                .collect()
        }
    };
    let mut summaries = Vec::with_capacity(families.len());
    let mut composites = Vec::new();
    for (summary, entries) in families {
        summaries.push(summary);
        composites.extend(entries);
    }
    Ok(CompositeManifest {
        meta: ManifestMeta {
            seed: config.seed,
            canvas: config.canvas,
            num_classes: config.num_classes,
            distinct_labels: config.distinct_labels,
            pool_policy: config.pool_policy,
            pool_size: pool.len(),
            configs: summaries,
        },
        composites,
    })
}

/// Paints one composite from its manifest entry onto a black canvas.
pub fn render_composite(
    entry: &CompositeEntry,
    pool: &[PatchRecord],
    pixels: &dyn PatchPixels,
) -> Result<RgbImage> {
    let mut canvas = RgbImage::new(entry.canvas, entry.canvas);
    for placement in &entry.placements {
        let patch = pool
            .iter()
            .find(|p| p.patch_id == placement.patch_id)
            .ok_or_else(|| Error::Config(format!("patch {:?} not in pool", placement.patch_id)))?;
        let source = pixels.pixels(patch)?;
        paste_resized(&mut canvas, &source, placement.x, placement.y, placement.w, placement.h);
    }
    Ok(canvas)
}

/// Lookup-based variant of [`render_composite`] for bulk rendering.
fn render_indexed(
    entry: &CompositeEntry,
    pool: &[PatchRecord],
    by_id: &std::collections::HashMap<&str, usize>,
    pixels: &dyn PatchPixels,
) -> Result<RgbImage> {
    let mut canvas = RgbImage::new(entry.canvas, entry.canvas);
    for placement in &entry.placements {
        let idx = by_id
            .get(placement.patch_id.as_str())
            .ok_or_else(|| Error::Config(format!("patch {:?} not in pool", placement.patch_id)))?;
        let source = pixels.pixels(&pool[*idx])?;
        paste_resized(&mut canvas, &source, placement.x, placement.y, placement.w, placement.h);
    }
    Ok(canvas)
}

/// Writes `manifest.jsonl`, `annotations.jsonl` and, when `pixels` is given,
/// `images/<image_id>.png` under `dir`.
pub fn write_outputs(
    manifest: &CompositeManifest,
    pool: &[PatchRecord],
    pixels: Option<&dyn PatchPixels>,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join("manifest.jsonl");
    let file = File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut out = BufWriter::new(file);
    manifest
        .write_jsonl(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&manifest_path, e))?;
    manifest.to_annotation_store()?.save(&dir.join("annotations.jsonl"))?;

    let Some(pixels) = pixels else {
        return Ok(());
    };
    let images = dir.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let by_id: std::collections::HashMap<&str, usize> =
        pool.iter().enumerate().map(|(i, p)| (p.patch_id.as_str(), i)).collect();
    let write_one = |entry: &CompositeEntry| -> Result<()> {
        let img = render_indexed(entry, pool, &by_id, pixels)?;
        let path = images.join(format!("{}.png", entry.image_id));
        img.save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| Error::Image {
                path: path.clone(),
                message: e.to_string(),
            })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        manifest.composites.par_iter().try_for_each(write_one)
    }
    #[cfg(not(feature = "parallel"))]
    {
        manifest.composites.iter().try_for_each(write_one)
    }
}
