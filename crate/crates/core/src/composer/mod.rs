//! Synthetic multi-label composites: labeled object patches sampled without
//! replacement and placed, one per grid cell, on a black square canvas. A
//! composite's label set is the union of its patches' labels.

mod config;
mod generate;
mod geometry;
mod pool;
pub mod synthetic;

pub use config::{default_configs, parse_configs, ComposerConfig, GridConfig, PoolPolicy, DEFAULT_CANVAS};
pub use generate::{
    composite_id, generate_manifest, render_composite, substream_seed, write_outputs, CompositeEntry,
    CompositeManifest, ConfigSummary, ManifestMeta,
};
pub use geometry::{paste_resized, resize_proportional, FixedOffset, GridCanvas, OffsetSource, PlacementRecord};
pub use pool::{build_pool, FilePixels, PatchPixels, PatchRecord};
