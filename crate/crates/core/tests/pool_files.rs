use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use mlpc_core::composer::{
    build_pool, generate_manifest, render_composite, write_outputs, ComposerConfig, FilePixels, GridConfig,
};
use mlpc_core::Error;

fn write_source(dir: &Path, name: &str, w: u32, h: u32, color: [u8; 3]) {
    RgbImage::from_pixel(w, h, Rgb(color)).save(dir.join(name)).unwrap();
}

fn write_manifest(dir: &Path, rows: &[&str]) -> std::path::PathBuf {
    let path = dir.join("patches.jsonl");
    fs::write(&path, rows.join("\n") + "\n").unwrap();
    path
}

#[test]
fn composes_from_png_sources() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("src")).unwrap();
    write_source(&dir.path().join("src"), "red.png", 40, 30, [200, 10, 10]);
    write_source(&dir.path().join("src"), "blue.png", 20, 50, [10, 10, 200]);
    let manifest = write_manifest(
        dir.path(),
        &[
            r#"{"patch_id":"p0","label":1,"source":"src/red.png","box":[0,0,40,30]}"#,
            r#"{"patch_id":"p1","label":2,"source":"src/blue.png","box":[5,5,10,40]}"#,
            r#"{"patch_id":"p2","label":1,"source":"src/red.png","box":[10,10,20,20]}"#,
            r#"{"patch_id":"p3","label":3,"source":"src/blue.png","box":[0,0,20,50]}"#,
        ],
    );
    let pool = build_pool(&manifest, 5).unwrap();
    assert_eq!(pool.len(), 4);
    let mut config = ComposerConfig::new(9);
    config.canvas = 64;
    config.configs = vec![GridConfig { k: 4, p: 32 }];
    config.num_classes = 5;
    let out = generate_manifest(&config, &pool).unwrap();
    assert_eq!(out.composites.len(), 1);
    let img = render_composite(&out.composites[0], &pool, &FilePixels::new(dir.path())).unwrap();
    let colored = img.pixels().filter(|p| p.0 != [0, 0, 0]).count();
    let area: u32 = out.composites[0].placements.iter().map(|r| r.w * r.h).sum();
    assert_eq!(colored as u32, area);

    let dest = dir.path().join("out");
    write_outputs(&out, &pool, Some(&FilePixels::new(dir.path())), &dest).unwrap();
    let png = dest.join("images").join(format!("{}.png", out.composites[0].image_id));
    assert_eq!(image::image_dimensions(png).unwrap(), (64, 64));
}

#[test]
fn rejects_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    write_source(dir.path(), "a.png", 16, 16, [1, 2, 3]);
    let cases = [
        (r#"{"patch_id":"p","label":0,"source":"a.png","box":[0,0,0,5]}"#, "degenerate"),
        (r#"{"patch_id":"p","label":9,"source":"a.png","box":[0,0,4,4]}"#, "out of range"),
        (r#"{"patch_id":"p","label":0,"source":"a.png","box":[10,10,8,8]}"#, "exceeds"),
        (r#"{"patch_id":"p","label":0,"source":"missing.png","box":[0,0,4,4]}"#, "unreadable"),
    ];
    for (row, needle) in cases {
        let manifest = write_manifest(dir.path(), &[row]);
        match build_pool(&manifest, 5) {
            Err(Error::BadPatch { row: 1, message }) => assert!(message.contains(needle), "{message}"),
            other => panic!("{row}: {other:?}"),
        }
    }
    let dup = write_manifest(
        dir.path(),
        &[
            r#"{"patch_id":"p","label":0,"source":"a.png","box":[0,0,4,4]}"#,
            r#"{"patch_id":"p","label":1,"source":"a.png","box":[0,0,4,4]}"#,
        ],
    );
    assert!(matches!(build_pool(&dup, 5), Err(Error::BadPatch { row: 2, .. })));
}
