//! Browser bindings for the static demo page in `www/`.
//!
//! Three operations: compose a PatchML preview from a procedural pool,
//! tabulate label-wise accuracy as mistakes grow, and evaluate pasted
//! prediction and annotation JSONL. Each has a plain Rust twin so the
//! logic is tested natively.

use mlpc_core::annotations;
use mlpc_core::composer::synthetic::{synthetic_pool, SyntheticPixels};
use mlpc_core::composer::{generate_manifest, render_composite, ComposerConfig, GridConfig};
use mlpc_core::metrics::{evaluate, labelwise_accuracy, EvalPolicies, LabelwiseMode};
use mlpc_core::predictions;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// A rendered composite: RGBA pixels plus its manifest entry as JSON.
#[wasm_bindgen]
pub struct Preview {
    size: u32,
    rgba: Vec<u8>,
    manifest: String,
}

#[wasm_bindgen]
impl Preview {
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> u32 {
        self.size
    }

    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn manifest(&self) -> String {
        self.manifest.clone()
    }
}

pub struct PreviewRequest {
    pub seed: u64,
    pub k: u32,
    pub p: u32,
    pub canvas: u32,
    pub index: usize,
    pub pool_size: usize,
    pub num_classes: u32,
    pub distinct_labels: bool,
}

pub fn preview(req: &PreviewRequest) -> Result<Preview, String> {
    let pool = synthetic_pool(req.pool_size, req.num_classes, 16, 400, req.seed ^ 0x5eed);
    let config = ComposerConfig {
        canvas: req.canvas,
        configs: vec![GridConfig { k: req.k, p: req.p }],
        seed: req.seed,
        distinct_labels: req.distinct_labels,
        num_classes: req.num_classes,
        ..ComposerConfig::new(req.seed)
    };
    config.validate().map_err(|e| e.to_string())?;
    let manifest = generate_manifest(&config, &pool).map_err(|e| e.to_string())?;
    let entry = manifest
        .composites
        .get(req.index)
        .ok_or_else(|| format!("pool yields {} composites, index {} out of range", manifest.composites.len(), req.index))?;
    let img = render_composite(entry, &pool, &SyntheticPixels).map_err(|e| e.to_string())?;
    let rgba = img.pixels().flat_map(|px| [px.0[0], px.0[1], px.0[2], 255]).collect();
    let body = json!({"entry": entry, "summary": manifest.meta.configs[0]});
    Ok(Preview {
        size: req.canvas,
        rgba,
        manifest: serde_json::to_string_pretty(&body).expect("serializable"),
    })
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn compose_preview(
    seed: u64,
    k: u32,
    p: u32,
    canvas: u32,
    index: usize,
    pool_size: usize,
    num_classes: u32,
    distinct_labels: bool,
) -> Result<Preview, JsError> {
    preview(&PreviewRequest {
        seed,
        k,
        p,
        canvas,
        index,
        pool_size,
        num_classes,
        distinct_labels,
    })
    .map_err(|e| JsError::new(&e))
}

/// Label-wise accuracy of every mode for an image with `g` labels when
/// `m = 0..=g` of its top-g predictions are wrong, over `num_classes`.
pub fn curves(num_classes: u32, g: u32) -> Result<String, String> {
    if g == 0 || 2 * g > num_classes {
        return Err(format!("need 1 <= g and 2g <= C, got g={g}, C={num_classes}"));
    }
    let gt: Vec<u32> = (0..g).collect();
    let rows: Vec<_> = (0..=g)
        .map(|m| {
            // replace the last m true labels with classes outside the set
            let mut pred: Vec<u32> = (0..g - m).chain(g..g + m).collect();
            pred.sort_unstable();
            let mut row = serde_json::Map::new();
            row.insert("mistakes".into(), json!(m));
            for mode in LabelwiseMode::ALL {
                row.insert(mode.as_str().into(), json!(labelwise_accuracy(&gt, &pred, num_classes, mode)));
            }
            row
        })
        .collect();
    Ok(serde_json::to_string(&rows).expect("serializable"))
}

#[wasm_bindgen]
pub fn labelwise_curves(num_classes: u32, g: u32) -> Result<String, JsError> {
    curves(num_classes, g).map_err(|e| JsError::new(&e))
}

pub fn evaluate_jsonl(predictions_jsonl: &str, annotations_jsonl: &str, mode: &str) -> Result<String, String> {
    let preds = predictions::read_jsonl(predictions_jsonl.as_bytes()).map_err(|e| format!("predictions: {e}"))?;
    let store = annotations::read_jsonl(annotations_jsonl.as_bytes()).map_err(|e| format!("annotations: {e}"))?;
    let policies = EvalPolicies {
        mode: mode.parse().map_err(|e: mlpc_core::Error| e.to_string())?,
        ..Default::default()
    };
    let report = evaluate(&preds, &store, None, &policies).map_err(|e| e.to_string())?;
    Ok(report.to_canonical_json())
}

#[wasm_bindgen]
pub fn evaluate_text(predictions_jsonl: &str, annotations_jsonl: &str, mode: &str) -> Result<String, JsError> {
    evaluate_jsonl(predictions_jsonl, annotations_jsonl, mode).map_err(|e| JsError::new(&e))
}
