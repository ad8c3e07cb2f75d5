use mlpc_demo::{curves, evaluate_jsonl, preview, PreviewRequest};

fn request(seed: u64) -> PreviewRequest {
    PreviewRequest {
        seed,
        k: 4,
        p: 128,
        canvas: 256,
        index: 0,
        pool_size: 40,
        num_classes: 20,
        distinct_labels: false,
    }
}

#[test]
fn preview_is_deterministic_rgba() {
    let a = preview(&request(3)).unwrap();
    let b = preview(&request(3)).unwrap();
    assert_eq!(a.size(), 256);
    assert_eq!(a.rgba().len(), 256 * 256 * 4);
    assert_eq!(a.rgba(), b.rgba());
    assert_eq!(a.manifest(), b.manifest());
    let m: serde_json::Value = serde_json::from_str(&a.manifest()).unwrap();
    assert_eq!(m["entry"]["placements"].as_array().unwrap().len(), 4);
    assert_eq!(m["summary"]["composites"], 10);
    assert_ne!(preview(&request(4)).unwrap().rgba(), a.rgba());
}

#[test]
fn preview_rejects_bad_grid_and_index() {
    let mut r = request(1);
    r.k = 9;
    assert!(preview(&r).is_err());
    let mut r = request(1);
    r.index = 10;
    assert!(preview(&r).is_err());
}

#[test]
fn curves_follow_closed_form() {
    let rows: Vec<serde_json::Value> = serde_json::from_str(&curves(10, 3).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    for (m, row) in rows.iter().enumerate() {
        let m = m as f64;
        assert_eq!(row["literal_hamming"].as_f64().unwrap(), (10.0 - 2.0 * m) / 10.0);
        assert_eq!(row["jaccard"].as_f64().unwrap(), (3.0 - m) / (3.0 + m));
        assert_eq!(row["recall"].as_f64().unwrap(), (3.0 - m) / 3.0);
    }
    assert!(curves(4, 3).is_err());
}

#[test]
fn evaluates_pasted_text() {
    let preds = "{\"meta\":{\"dataset_id\":\"d\",\"depth\":3,\"model_id\":\"m\",\"num_classes\":5}}\n\
                 {\"id\":\"a\",\"classes\":[1,2,3],\"scores\":[0.9,0.5,0.1]}\n";
    let ann = "{\"meta\":{\"dataset_id\":\"d\",\"num_classes\":5}}\n{\"id\":\"a\",\"labels\":[1,3]}\n";
    let report: serde_json::Value = serde_json::from_str(&evaluate_jsonl(preds, ann, "jaccard").unwrap()).unwrap();
    assert_eq!(report["real"]["ratio"], serde_json::json!([1, 1]));
    // top-2 {1,2} against {1,3}: 1/3
    assert!((report["subgroups"]["asma"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-6);
    assert!(evaluate_jsonl(preds, ann, "bogus").is_err());
    assert!(evaluate_jsonl("not json", ann, "recall").unwrap_err().starts_with("predictions"));
}
