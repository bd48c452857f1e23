use std::path::Path;

use fsseg_core::eval::{evaluate_batch, generate_scene, write_scene, SceneSpec};
use fsseg_core::npy::{read_npy, write_npy};
use fsseg_core::pipeline::{discover_frames, process_frame, run_maskgen, FeatureSource, PipelineConfig};
use fsseg_core::{io, Error};

fn synth_batch(dir: &Path, count: usize, seed: u64) {
    for (id, spec) in SceneSpec::corridor_batch(count, seed) {
        let scene = generate_scene(&spec, spec.rng_seed).unwrap();
        write_scene(&scene, &dir.join(id)).unwrap();
    }
}

fn config(input: &Path, output: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.paths.input = Some(input.to_path_buf());
    cfg.paths.output = Some(output.to_path_buf());
    cfg
}

#[test]
fn writes_one_mask_per_scene_and_scores_them() {
    let (input, output) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth_batch(input.path(), 3, 11);
    let summary = run_maskgen(&config(input.path(), output.path())).unwrap();
    assert!(summary.is_success(), "{:?}", summary.failures);
    assert_eq!(summary.written, ["scene_000", "scene_001", "scene_002"]);
    for stem in &summary.written {
        let mask = io::load_mask(output.path().join(format!("{stem}.png"))).unwrap();
        assert_eq!((mask.width(), mask.height()), (160, 120));
    }
    let report = evaluate_batch(output.path(), input.path()).unwrap();
    assert_eq!(report.per_image.len(), 3);
    assert_eq!(report.params_digest, summary.params_digest);
    assert!(report.per_image.iter().all(|s| (0.0..=1.0).contains(&s.iou)));
}

#[test]
fn missing_depth_fails_only_that_frame() {
    let (input, output) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth_batch(input.path(), 3, 5);
    std::fs::remove_file(input.path().join("scene_001/depth.png")).unwrap();
    let summary = run_maskgen(&config(input.path(), output.path())).unwrap();
    assert_eq!(summary.written, ["scene_000", "scene_002"]);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].stem, "scene_001");
    assert!(!output.path().join("scene_001.png").exists());
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(output.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["failures"][0]["stem"], "scene_001");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let input = tempfile::tempdir().unwrap();
    synth_batch(input.path(), 4, 3);
    let outs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (i, out) in outs.iter().enumerate() {
        let mut cfg = config(input.path(), out.path());
        cfg.jobs = i + 1;
        run_maskgen(&cfg).unwrap();
    }
    for i in 0..4 {
        let name = format!("scene_{i:03}.png");
        let a = std::fs::read(outs[0].path().join(&name)).unwrap();
        let b = std::fs::read(outs[1].path().join(&name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn debug_outputs_describe_the_frame() {
    let (input, output) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth_batch(input.path(), 1, 2);
    let mut cfg = config(input.path(), output.path());
    cfg.debug_json = true;
    run_maskgen(&cfg).unwrap();
    let raw = std::fs::read(output.path().join("scene_000.labels.npy")).unwrap();
    let header_len = u16::from_le_bytes([raw[8], raw[9]]) as usize;
    let header = std::str::from_utf8(&raw[10..10 + header_len]).unwrap();
    assert!(header.contains("'descr': '<i4'") && header.contains("'shape': (120, 160)"), "{header}");
    assert_eq!(raw.len(), 10 + header_len + 120 * 160 * 4);
    let desc = read_npy(output.path().join("scene_000.descriptors.npy")).unwrap();
    assert_eq!(desc.shape[1], 16);
    let debug: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(output.path().join("scene_000.debug.json")).unwrap()).unwrap();
    assert_eq!(debug["cluster_depths"].as_array().unwrap().len(), 5);
}

#[test]
fn ingested_token_features_drive_the_pipeline() {
    let (input, output) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth_batch(input.path(), 2, 8);
    // token 0 is the class token; every patch token carries its row index
    let (tokens, dim) = (577, 4);
    let data: Vec<f32> = (0..tokens).flat_map(|t| {
        let row = if t == 0 { 0.0 } else { ((t - 1) / 24) as f32 };
        [row, 1.0, 0.0, -row]
    }).collect();
    write_npy(&[tokens, dim], &data, input.path().join("scene_000.feat.npy")).unwrap();
    let mut cfg = config(input.path(), output.path());
    cfg.features.source = FeatureSource::Ingest;
    let summary = run_maskgen(&cfg).unwrap();
    assert_eq!(summary.written, ["scene_000"]);
    assert_eq!(summary.failures[0].stem, "scene_001");
}

#[test]
fn flat_layout_is_discovered() {
    let dir = tempfile::tempdir().unwrap();
    let scene = generate_scene(&SceneSpec::default(), 0).unwrap();
    io::save_image(&scene.rgb, dir.path().join("a.png")).unwrap();
    io::save_depth_png(&scene.depth, dir.path().join("a_depth.png")).unwrap();
    io::save_image(&scene.rgb, dir.path().join("b.png")).unwrap();
    io::save_mask(&scene.truth, dir.path().join("b_mask.png")).unwrap();
    let frames = discover_frames(dir.path()).unwrap();
    assert_eq!(frames.len(), 2);
    assert!(frames[0].depth.is_some());
    assert!(frames[1].depth.is_none());
    let depth = io::load_depth(frames[0].depth.as_ref().unwrap()).unwrap();
    let out = process_frame(&scene.rgb, &depth, None, &PipelineConfig::default()).unwrap();
    assert_eq!(out.mask.width(), scene.rgb.width());
}

#[test]
fn unset_paths_are_config_errors() {
    let cfg = PipelineConfig::default();
    assert!(matches!(run_maskgen(&cfg), Err(Error::Config(_))));
    let mut bad = config(Path::new("/nonexistent/in"), Path::new("/tmp/out"));
    assert!(matches!(run_maskgen(&bad), Err(Error::Config(_))));
    bad.cluster.k = 0;
    assert!(matches!(run_maskgen(&bad), Err(Error::Config(_) | Error::InvalidParam(_))));
}
