use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scanrig::body::read_body;
use scanrig::geom::obj::read_obj;
use scanrig::geom::DegeneratePolicy;
use scanrig::pipeline::formats::*;
use scanrig::placement::SceneLayout;
use scanrig::retarget::{AnimationClip, RiggedAsset};

fn scanrig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scanrig")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(dir: &Path) -> PathBuf {
    let inputs = dir.join("inputs");
    let o = scanrig(&["generate", "--out", s(&inputs), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    inputs
}

/// A short fit schedule so the pipeline tests stay quick.
fn quick_config(dir: &Path) -> PathBuf {
    let path = dir.join("quick.json");
    std::fs::write(
        &path,
        r#"{"fit": {"max_outer": 3, "inner_steps": 20, "warmup_steps": 100}}"#,
    )
    .unwrap();
    path
}

#[test]
fn help_lists_subcommands() {
    let o = scanrig(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["fit", "retarget", "animate", "place", "eval", "generate", "demo"] {
        assert!(text.contains(sub), "{sub} missing from --help");
    }
}

#[test]
fn fit_without_skeleton_names_the_flags() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = generate(dir.path());
    let o = scanrig(&["fit", "--scan", s(&inputs.join("scan.obj")), "--out", s(&dir.path().join("fit"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("--keypoints") && err.contains("--skeleton"), "{err}");
}

#[test]
fn malformed_obj_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = generate(dir.path());
    let bad = dir.path().join("bad.obj");
    std::fs::write(&bad, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 x\nf 1 2 3\n").unwrap();
    let o = scanrig(&[
        "fit",
        "--scan",
        s(&bad),
        "--skeleton",
        s(&inputs.join("skeleton.json")),
        "--out",
        s(&dir.path().join("fit")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.obj:4"), "{}", stderr(&o));
}

#[test]
fn inverted_scene_bounds_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    std::fs::write(
        &scene,
        r#"{"format_version": 1, "scene_bounds": {"min": [5, 5, 0], "max": [-5, -5, 3]}, "obstacles": []}"#,
    )
    .unwrap();
    let o = scanrig(&["place", "--scene", s(&scene), "--out", s(&dir.path().join("place"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scene"), "{}", stderr(&o));
}

#[test]
fn eval_of_identical_meshes_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = generate(dir.path());
    let out = dir.path().join("metrics.json");
    let scan = inputs.join("scan.obj");
    let o = scanrig(&["eval", "--mesh", s(&scan), "--reference", s(&scan), "--v2v", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = MetricsDoc::read(&out).unwrap();
    assert_eq!(m.v2v_mm, Some(0.0));
    assert_eq!(m.chamfer_mm, 0.0);
}

#[test]
fn generated_inputs_reload() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = generate(dir.path());
    let body = read_body(&inputs.join("body.json")).unwrap();
    let scan = read_obj(&inputs.join("scan.obj"), DegeneratePolicy::Reject).unwrap();
    assert_eq!(scan.vertices.len(), body.num_vertices());
    read_obj(&inputs.join("truth.obj"), DegeneratePolicy::Reject).unwrap();
    KeypointsDoc::read(&inputs.join("keypoints.json")).unwrap();
    let (joints, _) = SkeletonDoc::read(&inputs.join("skeleton.json")).unwrap().joints_and_flags();
    assert_eq!(joints.len(), body.num_joints());
    for i in 0..scanrig::pipeline::GENERATED_CLIPS {
        AnimationClip::read(&inputs.join(format!("clip_{i}.json")))
            .unwrap()
            .validate(body.num_joints())
            .unwrap();
    }
    SceneLayout::read(&inputs.join("scene.json")).unwrap();
}

#[test]
fn pipeline_stages_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let inputs = generate(d);
    let config = quick_config(d);
    let scan = inputs.join("scan.obj");

    let o = scanrig(&[
        "fit",
        "--scan",
        s(&scan),
        "--keypoints",
        s(&inputs.join("keypoints.json")),
        "--reference",
        s(&inputs.join("truth.obj")),
        "--out",
        s(&d.join("fit")),
        "--config",
        s(&config),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = FitDoc::read(&d.join("fit/fit.json")).unwrap();
    assert!(fit.result.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    read_obj(&d.join("fit/fitted.obj"), DegeneratePolicy::Reject).unwrap();

    // empty shape list
    let empty = d.join("empty.json");
    std::fs::write(&empty, r#"{"format_version": 1, "betas": []}"#).unwrap();
    let fit_json = d.join("fit/fit.json");
    let o = scanrig(&["retarget", "--scan", s(&scan), "--fit", s(&fit_json), "--betas", s(&empty), "--out", s(&d.join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));

    // fit of another scan
    let other = d.join("other.obj");
    std::fs::copy(inputs.join("truth.obj"), &other).unwrap();
    let o = scanrig(&["retarget", "--scan", s(&other), "--fit", s(&fit_json), "--out", s(&d.join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scan_hash"), "{}", stderr(&o));

    let assets = d.join("assets");
    let o = scanrig(&["retarget", "--scan", s(&scan), "--fit", s(&fit_json), "--samples", "2", "--out", s(&assets)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = RetargetManifest::read(&assets.join("manifest.json")).unwrap();
    assert_eq!(manifest.assets.len(), 2);
    for entry in &manifest.assets {
        RiggedAsset::load(&assets.join(&entry.directory)).unwrap().validate().unwrap();
    }

    let a0 = assets.join(&manifest.assets[0].directory);
    let clip = inputs.join("clip_0.json");
    let o = scanrig(&["animate", "--asset", s(&a0), "--clip", s(&clip), "--out", s(&d.join("anim"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let index = AnimationIndex::read(&d.join("anim/animation.json")).unwrap();
    assert_eq!(index.frames.len(), AnimationClip::read(&clip).unwrap().len());

    let a1 = assets.join(&manifest.assets[1].directory);
    let seq0 = format!("{}={}", s(&a0), s(&clip));
    let seq1 = format!("{}={}", s(&a1), s(&inputs.join("clip_1.json")));
    let o = scanrig(&["place", "--scene", s(&inputs.join("scene.json")), "--sequence", &seq0, "--sequence", &seq1, "--out", s(&d.join("place"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let placement = PlacementDoc::read(&d.join("place/placement.json")).unwrap();
    assert!(placement.params().is_some());
    let gt = GroundTruthDoc::read(&d.join("place/ground_truth.json")).unwrap();
    assert!(!gt.frames.is_empty());

    // a room too small for anyone
    let tiny = d.join("tiny.json");
    std::fs::write(
        &tiny,
        r#"{"format_version": 1, "scene_bounds": {"min": [-0.2, -0.2, 0], "max": [0.2, 0.2, 0.5]}, "obstacles": []}"#,
    )
    .unwrap();
    let o = scanrig(&["place", "--scene", s(&tiny), "--sequence", &seq0, "--max-generations", "20", "--out", s(&d.join("tiny"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("placement_failure.json"), "{}", stderr(&o));
    let failed = PlacementDoc::read(&d.join("tiny/placement_failure.json")).unwrap();
    assert!(failed.params().is_none());
}

#[test]
fn config_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let inputs = generate(d);
    let config = d.join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"scan": "{}", "skeleton": "{}", "output_dir": "{}", "fit": {{"max_outer": 1, "inner_steps": 5, "warmup_steps": 10}}}}"#,
            s(&inputs.join("scan.obj")),
            s(&inputs.join("skeleton.json")),
            s(&d.join("from_config"))
        ),
    )
    .unwrap();
    let o = scanrig(&["fit", "--scan", "/nonexistent.obj", "--out", s(&d.join("from_flag")), "--config", s(&config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.join("from_config/fit.json").is_file());
    assert!(!d.join("from_flag").exists());
    let fit = FitDoc::read(&d.join("from_config/fit.json")).unwrap();
    assert_eq!(fit.config.max_outer, 1);

    let missing = d.join("missing.json");
    std::fs::write(&missing, r#"{"scan": "/nonexistent/scan.obj"}"#).unwrap();
    let o = scanrig(&["fit", "--config", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/scan.obj"), "{}", stderr(&o));
}

#[test]
fn fit_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let inputs = generate(d);
    let config = quick_config(d);
    let run = |name: &str| {
        let out = d.join(name);
        let o = scanrig(&[
            "fit",
            "--scan",
            s(&inputs.join("scan.obj")),
            "--skeleton",
            s(&inputs.join("skeleton.json")),
            "--out",
            s(&out),
            "--config",
            s(&config),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (std::fs::read(out.join("fit.json")).unwrap(), std::fs::read(out.join("fitted.obj")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}
