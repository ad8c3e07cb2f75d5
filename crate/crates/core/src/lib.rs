//! Multi-label-aware evaluation of image classifiers and synthetic
//! multi-label composite generation.
//!
//! - [`annotations`]: ground-truth label sets, subgroup partitions, label-count histograms
//! - [`predictions`] / [`container`]: ranked top-M predictions (JSONL and binary)
//! - [`metrics`]: top-1, ReaL, variable top-k, label-wise accuracy, subgroup accuracy, ASMA
//! - [`composer`]: grid-placed patch composites with seeded sampling
//! - [`analysis`]: accuracy gaps, rankings, subgroup exports, multi-seed means, SVG plots

pub mod analysis;
pub mod annotations;
pub mod canonical;
pub mod composer;
pub mod container;
pub mod error;
pub mod metrics;
pub mod predictions;

pub use error::{Error, Result};

/// Index into the class space `0..C`.
pub type ClassId = u32;
