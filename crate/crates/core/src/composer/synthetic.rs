//! Procedural patches for tests, benchmarks and the browser demo. Every
//! pixel is non-black so rendered composites can be checked against their
//! placement rectangles.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::composer::pool::{PatchPixels, PatchRecord};
use crate::error::Result;
use crate::ClassId;

/// `count` patches with uniform labels in `0..num_classes` and box sides in
/// `min_side..=max_side`.
pub fn synthetic_pool(count: usize, num_classes: u32, min_side: u32, max_side: u32, seed: u64) -> Vec<PatchRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let label = rng.random_range(0..num_classes);
            let w = rng.random_range(min_side..=max_side);
            let h = rng.random_range(min_side..=max_side);
            PatchRecord {
                patch_id: format!("syn_{i:06}"),
                label,
                source: format!("synthetic/{label}"),
                bbox: [0, 0, w, h],
            }
        })
        .collect()
}

/// Two-tone striped fill derived from the label.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticPixels;

pub fn label_color(label: ClassId) -> Rgb<u8> {
    let mut h = u64::from(label).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= h >> 29;
    let channel = |shift: u32| 64 + ((h >> shift) % 192) as u8;
    Rgb([channel(0), channel(16), channel(32)])
}

impl PatchPixels for SyntheticPixels {
    fn pixels(&self, patch: &PatchRecord) -> Result<RgbImage> {
        let base = label_color(patch.label);
        let light = Rgb(base.0.map(|c| c.saturating_add(48)));
        Ok(RgbImage::from_fn(patch.width(), patch.height(), |x, y| {
            if ((x + y) / 8) % 2 == 0 {
                base
            } else {
                light
            }
        }))
    }
}
