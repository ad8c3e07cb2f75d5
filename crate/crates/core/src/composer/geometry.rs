use std::collections::BTreeSet;

use image::{imageops, RgbImage};
use serde::{Deserialize, Serialize};

use crate::composer::pool::PatchRecord;
use crate::ClassId;

/// Scales `(width, height)` so the longer side equals `cell`, rounding each
/// side to the nearest pixel (halves round up) with a floor of one pixel.
pub fn resize_proportional(width: u32, height: u32, cell: u32) -> (u32, u32) {
    let longest = u64::from(width.max(height).max(1));
    let scale = |side: u32| {
        let scaled = (2 * u64::from(side) * u64::from(cell) + longest) / (2 * longest);
        (scaled as u32).max(1)
    };
    (scale(width), scale(height))
}

/// Where one patch landed on a composite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub patch_id: String,
    pub label: ClassId,
    pub row: u32,
    pub col: u32,
    pub w: u32,
    pub h: u32,
    pub x_off: u32,
    pub y_off: u32,
    pub x: u32,
    pub y: u32,
}

/// Supplies in-cell offsets: a value in `0..=slack`.
pub trait OffsetSource {
    fn offset(&mut self, slack: u32) -> u32;
}

impl<R: rand::Rng> OffsetSource for R {
    fn offset(&mut self, slack: u32) -> u32 {
        self.random_range(0..=slack)
    }
}

/// Always returns the same offset, clamped to the slack.
#[derive(Debug, Clone, Copy)]
pub struct FixedOffset(pub u32);

impl OffsetSource for FixedOffset {
    fn offset(&mut self, slack: u32) -> u32 {
        self.0.min(slack)
    }
}

/// A square black canvas divided into `floor(size / cell)` square cells,
/// tracking which cells hold a patch. Pixels are optional so manifests can
/// be generated without rendering.
#[derive(Debug, Clone)]
pub struct GridCanvas {
    size: u32,
    cell: u32,
    occupied: BTreeSet<(u32, u32)>,
    pixels: Option<RgbImage>,
}

impl GridCanvas {
    pub fn new(size: u32, cell: u32) -> Self {
        Self {
            size,
            cell,
            occupied: BTreeSet::new(),
            pixels: None,
        }
    }

    pub fn with_pixels(size: u32, cell: u32) -> Self {
        Self {
            pixels: Some(RgbImage::new(size, size)),
            ..Self::new(size, cell)
        }
    }

    /// Cells per row and per column.
    pub fn grid_dim(&self) -> u32 {
        self.size / self.cell
    }

    pub fn is_occupied(&self, row: u32, col: u32) -> bool {
        self.occupied.contains(&(row, col))
    }

    pub fn pixels(&self) -> Option<&RgbImage> {
        self.pixels.as_ref()
    }

    pub fn into_pixels(self) -> Option<RgbImage> {
        self.pixels
    }

    /// Resizes the patch to fit the cell, draws offsets, and places it at
    /// cell `(row, col)`. Returns `None`, leaving the canvas unchanged, when
    /// the cell is taken or the patch would leave the canvas.
    ///
    /// `source` is the unresized crop; it is only read when this canvas
    /// carries pixels.
    pub fn place_patch_in_grid(
        &mut self,
        patch: &PatchRecord,
        source: Option<&RgbImage>,
        row: u32,
        col: u32,
        offsets: &mut impl OffsetSource,
    ) -> Option<PlacementRecord> {
        if self.is_occupied(row, col) {
            return None;
        }
        let (w, h) = resize_proportional(patch.width(), patch.height(), self.cell);
        let x_off = offsets.offset(self.cell - w);
        let y_off = offsets.offset(self.cell - h);
        let x = col * self.cell + x_off;
        let y = row * self.cell + y_off;
        if x + w > self.size || y + h > self.size {
            return None;
        }
        if let (Some(canvas), Some(source)) = (self.pixels.as_mut(), source) {
            paste_resized(canvas, source, x, y, w, h);
        }
        self.occupied.insert((row, col));
        Some(PlacementRecord {
            patch_id: patch.patch_id.clone(),
            label: patch.label,
            row,
            col,
            w,
            h,
            x_off,
            y_off,
            x,
            y,
        })
    }
}

/// Resizes `source` to `w x h` and copies it onto `canvas` at `(x, y)`.
pub fn paste_resized(canvas: &mut RgbImage, source: &RgbImage, x: u32, y: u32, w: u32, h: u32) {
    let resized = if source.dimensions() == (w, h) {
        source.clone()
    } else {
        imageops::resize(source, w, h, imageops::FilterType::Triangle)
    };
    imageops::replace(canvas, &resized, i64::from(x), i64::from(y));
}
