//! The pipeline stages as library calls; the binary maps flags onto these.

use std::path::{Path, PathBuf};

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::formats::*;
use super::synth::{capture_rig, demo_room, project_keypoints, synthetic_scan, walking_clip, SynthConfig};
use crate::body::demo::demo_body;
use crate::body::{read_body, sample_shape, write_body, write_json, ParametricBody, ShapeParams};
use crate::error::{Error, Result};
use crate::fit::{fit_body, triangulate_keypoints, FitConfig};
use crate::geom::obj::{read_obj, write_obj};
use crate::geom::{
    chamfer_distance_mm, classify_inside, count_self_intersections, v2v_error_mm, Aabb, DegeneratePolicy, Mesh, Vec3,
};
use crate::placement::{
    brute_force_loss, motion_volume, place_sequences, CmaConfig, MotionVolume, PlacementOutcome, SceneLayout,
};
use crate::retarget::{animate_asset, AnimationClip, Retargeter, RiggedAsset};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn file_name(p: &Path) -> String {
    p.display().to_string()
}

/// `path` written relative to `base` (with `..` steps) when both are relative
/// or both absolute; otherwise `path` unchanged.
pub fn relative_to(path: &Path, base: &Path) -> PathBuf {
    use std::path::Component;
    if path.is_absolute() != base.is_absolute() {
        return path.to_path_buf();
    }
    fn clean(p: &Path) -> Vec<Component<'_>> {
        p.components().filter(|c| *c != Component::CurDir).collect()
    }
    let (p, b) = (clean(path), clean(base));
    let common = p.iter().zip(&b).take_while(|(x, y)| x == y).count();
    if b[common..].iter().any(|c| *c == Component::ParentDir) {
        return path.to_path_buf();
    }
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &p[common..] {
        out.push(c.as_os_str());
    }
    if out.as_os_str().is_empty() {
        out.push(".");
    }
    out
}

pub fn load_body(path: Option<&Path>) -> Result<ParametricBody> {
    match path {
        Some(p) => read_body(p),
        None => Ok(demo_body()),
    }
}

pub fn load_scan(path: &Path) -> Result<Mesh> {
    read_obj(path, DegeneratePolicy::Drop)
}

#[derive(Clone, Debug)]
pub struct FitInputs {
    pub scan: PathBuf,
    /// Built-in demo body when unset.
    pub body: Option<PathBuf>,
    pub keypoints: Option<PathBuf>,
    pub skeleton: Option<PathBuf>,
    /// Mesh with the body's topology to report V2V against.
    pub reference: Option<PathBuf>,
    pub out: PathBuf,
    pub config: FitConfig,
}

/// Fit the body, then write `fit.json` and `fitted.obj` into `out`.
pub fn run_fit(inputs: &FitInputs) -> Result<FitDoc> {
    inputs.config.validate()?;
    let scan = load_scan(&inputs.scan)?;
    let body = load_body(inputs.body.as_deref())?;
    let (joints, valid) = match (&inputs.skeleton, &inputs.keypoints) {
        (Some(p), _) => {
            let (j, v) = SkeletonDoc::read(p)?.joints_and_flags();
            if j.len() != body.num_joints() || v.len() != j.len() {
                return Err(Error::Format {
                    path: p.clone(),
                    field: "joints".into(),
                    msg: format!("expected {} joints, found {}", body.num_joints(), j.len()),
                });
            }
            (j, v)
        }
        (None, Some(p)) => {
            let doc = KeypointsDoc::read(p)?;
            for (i, view) in doc.views.iter().enumerate() {
                if view.keypoints.points.len() != body.num_joints() {
                    return Err(Error::Format {
                        path: p.clone(),
                        field: format!("views[{i}].keypoints.points"),
                        msg: format!("expected {} keypoints, found {}", body.num_joints(), view.keypoints.points.len()),
                    });
                }
            }
            let views: Vec<_> = doc.views.into_iter().map(|v| (v.camera, v.keypoints)).collect();
            let tri = triangulate_keypoints(&views)?;
            info!("triangulated {} of {} joints", tri.valid_count(), tri.joints.len());
            (tri.joints, tri.valid)
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "no 3D skeleton source: pass --keypoints or --skeleton".into(),
            ))
        }
    };
    let result = fit_body(&body, &scan, &joints, &valid, &inputs.config)?;
    let (fitted, _) = body.pose_mesh(&result.theta, &result.beta)?;
    let reference_v2v_mm = match &inputs.reference {
        Some(p) => Some(v2v_error_mm(&fitted.vertices, &load_scan(p)?.vertices)?),
        None => None,
    };
    create_dir(&inputs.out)?;
    write_obj(&inputs.out.join("fitted.obj"), &fitted)?;
    let doc = FitDoc {
        format_version: FORMAT_VERSION,
        scan_hash: scan.content_hash(),
        config: inputs.config.clone(),
        result,
        reference_v2v_mm,
    };
    doc.write(&inputs.out.join("fit.json"))?;
    Ok(doc)
}

/// Shape vectors for retargeting: `count` draws at `scale` from one seed.
pub fn sample_betas(count: usize, scale: f64, dim: usize, seed: u64) -> Result<Vec<ShapeParams>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_shape(rng.gen(), scale, dim)).collect()
}

/// One asset directory per beta plus `manifest.json`.
pub fn run_retarget(
    scan_path: &Path,
    fit_path: &Path,
    body_path: Option<&Path>,
    betas: &[ShapeParams],
    out: &Path,
) -> Result<RetargetManifest> {
    if betas.is_empty() {
        return Err(Error::InvalidArgument("beta list is empty".into()));
    }
    let scan = load_scan(scan_path)?;
    let fit = FitDoc::read(fit_path)?;
    let hash = scan.content_hash();
    if fit.scan_hash != hash {
        return Err(Error::Format {
            path: fit_path.to_path_buf(),
            field: "scan_hash".into(),
            msg: format!("fit belongs to scan {}, not {} ({hash})", fit.scan_hash, file_name(scan_path)),
        });
    }
    let body = load_body(body_path)?;
    let rt = Retargeter::bind(&scan, &body, &fit.result.theta, &fit.result.beta)?;
    let (bind_body, _) = body.pose_mesh(&fit.result.theta, &fit.result.beta)?;
    let reconstruction_error = rt
        .field
        .reconstruct(&bind_body)?
        .iter()
        .zip(&scan.vertices)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    create_dir(out)?;
    let mut assets = Vec::with_capacity(betas.len());
    for (i, beta) in betas.iter().enumerate() {
        let asset = rt.asset(&body, beta)?;
        let name = format!("asset_{i:02}");
        asset.save(&out.join(&name))?;
        assets.push(AssetEntry {
            directory: name,
            beta: beta.beta.clone(),
            weights_stochastic: asset.weights.check_stochastic(1e-9).is_ok(),
            max_weight_row_error: asset.max_row_error(),
            self_intersections: count_self_intersections(&asset.rest_mesh),
        });
    }
    let manifest = RetargetManifest {
        format_version: FORMAT_VERSION,
        scan_hash: hash,
        reconstruction_error,
        assets,
    };
    manifest.write(&out.join("manifest.json"))?;
    Ok(manifest)
}

/// Posed OBJ per frame plus `animation.json` with the posed joints.
pub fn run_animate(asset_dir: &Path, clip_path: &Path, out: &Path) -> Result<AnimationIndex> {
    let asset = RiggedAsset::load(asset_dir)?;
    let clip = AnimationClip::read(clip_path)?;
    let meshes = animate_asset(&asset, &clip)?;
    create_dir(out)?;
    let mut frames = Vec::with_capacity(meshes.len());
    let mut joints = Vec::with_capacity(meshes.len());
    for (f, (mesh, frame)) in meshes.iter().zip(&clip.frames).enumerate() {
        let name = format!("frame_{f:04}.obj");
        write_obj(&out.join(&name), mesh)?;
        frames.push(name);
        let (_, j) = asset.pose_frame(frame)?;
        joints.push(j.iter().map(|p| [p.x, p.y, p.z]).collect());
    }
    let index = AnimationIndex {
        format_version: FORMAT_VERSION,
        fps: clip.fps,
        frames,
        joints,
    };
    index.write(&out.join("animation.json"))?;
    Ok(index)
}

struct Sequence {
    asset: RiggedAsset,
    clip: AnimationClip,
}

fn sequences_volumes(seqs: &[Sequence]) -> Result<Vec<MotionVolume>> {
    seqs.iter()
        .map(|s| motion_volume(&animate_asset(&s.asset, &s.clip)?))
        .collect()
}

fn ground_truth(layout: &SceneLayout, seqs: &[Sequence], doc: &PlacementDoc) -> Result<Option<GroundTruthDoc>> {
    let Some(params) = doc.params() else {
        return Ok(None);
    };
    let horizon = seqs.iter().map(|s| s.clip.len()).max().unwrap_or(0);
    let mut frames = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut people = Vec::new();
        for (i, (s, p)) in seqs.iter().zip(params).enumerate() {
            let Some(frame) = s.clip.frames.get(t) else {
                continue;
            };
            let (v, j) = s.asset.pose_frame(frame)?;
            let world: Vec<Vec3> = v.iter().map(|q| p.transform_point(q, layout.up_axis)).collect();
            people.push(PersonFrame {
                sequence: i,
                joints: j
                    .iter()
                    .map(|q| {
                        let w = p.transform_point(q, layout.up_axis);
                        [w.x, w.y, w.z]
                    })
                    .collect(),
                bounds: Aabb::from_points(world.iter()),
            });
        }
        frames.push(FrameRecord { frame: t, people });
    }
    Ok(Some(GroundTruthDoc {
        format_version: FORMAT_VERSION,
        fps: seqs.first().map_or(30.0, |s| s.clip.fps),
        joint_names: seqs.first().map(|s| s.asset.joint_names.clone()).unwrap_or_default(),
        transforms: params.to_vec(),
        frames,
    }))
}

/// Place animated assets in a scene. On success writes `placement.json` and
/// `ground_truth.json`; otherwise `placement_failure.json`.
pub fn run_place(
    scene_path: &Path,
    sequences: &[(PathBuf, PathBuf)],
    cma: &CmaConfig,
    out: &Path,
) -> Result<(PlacementDoc, PathBuf)> {
    let layout = SceneLayout::read(scene_path)?;
    if sequences.is_empty() {
        return Err(Error::InvalidArgument("no asset/clip pairs to place".into()));
    }
    let mut seqs = Vec::with_capacity(sequences.len());
    for (a, c) in sequences {
        let asset = RiggedAsset::load(a)?;
        let clip = AnimationClip::read(c)?;
        clip.validate(asset.skeleton.len())?;
        if clip.is_empty() {
            return Err(Error::Format {
                path: c.clone(),
                field: "frames".into(),
                msg: "clip has no frames".into(),
            });
        }
        seqs.push(Sequence { asset, clip });
    }
    let volumes = sequences_volumes(&seqs)?;
    let outcome = place_sequences(&layout, &volumes, cma)?;
    if let PlacementOutcome::Success(p) = &outcome {
        let check = brute_force_loss(&layout, &volumes, &p.params)?;
        if check.total != 0 {
            return Err(Error::Numerical("accepted placement failed the brute-force recount".into()));
        }
    }
    let doc = PlacementDoc {
        format_version: FORMAT_VERSION,
        seed: cma.seed,
        sequences: sequences
            .iter()
            .zip(&seqs)
            .map(|((a, c), s)| SequenceEntry {
                asset: file_name(&relative_to(a, out)),
                clip: file_name(&relative_to(c, out)),
                frames: s.clip.len(),
            })
            .collect(),
        outcome,
    };
    create_dir(out)?;
    let path = match ground_truth(&layout, &seqs, &doc)? {
        Some(gt) => {
            gt.write(&out.join("ground_truth.json"))?;
            out.join("placement.json")
        }
        None => out.join("placement_failure.json"),
    };
    doc.write(&path)?;
    Ok((doc, path))
}

/// V2V (when the vertex counts agree), Chamfer and inside fraction of `mesh` against `reference`.
pub fn evaluate(mesh: &Mesh, reference: &Mesh, require_v2v: bool) -> Result<MetricsDoc> {
    let v2v_mm = if mesh.vertices.len() == reference.vertices.len() {
        Some(v2v_error_mm(&mesh.vertices, &reference.vertices)?)
    } else if require_v2v {
        return Err(Error::dim("vertex count for V2V", reference.vertices.len(), mesh.vertices.len()));
    } else {
        None
    };
    let (inside, _) = classify_inside(reference, &mesh.vertices);
    Ok(MetricsDoc {
        format_version: FORMAT_VERSION,
        v2v_mm,
        chamfer_mm: chamfer_distance_mm(mesh, reference)?,
        inside_fraction: inside.len() as f64 / mesh.vertices.len().max(1) as f64,
    })
}

pub fn run_eval(mesh: &Path, reference: &Path, require_v2v: bool, out: &Path) -> Result<MetricsDoc> {
    let doc = evaluate(&load_scan(mesh)?, &load_scan(reference)?, require_v2v)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    doc.write(out)?;
    Ok(doc)
}

/// Number of clips written by [`run_generate`].
pub const GENERATED_CLIPS: usize = 5;

/// Write the demo body, a synthetic scan bundle, walking clips and the demo room.
pub fn run_generate(out: &Path, seed: u64) -> Result<()> {
    create_dir(out)?;
    let body = demo_body();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let synth = synthetic_scan(&body, rng.gen(), &SynthConfig::default())?;
    write_body(&out.join("body.json"), &body)?;
    write_obj(&out.join("scan.obj"), &synth.scan)?;
    write_obj(&out.join("truth.obj"), &synth.truth)?;
    write_json(&out.join("truth_params.json"), &(&synth.theta, &synth.beta))?;
    SkeletonDoc::from_joints(&synth.joints).write(&out.join("skeleton.json"))?;
    let center = [synth.theta.translation[0], synth.theta.translation[1]];
    let views = project_keypoints(&capture_rig(center)?, &synth.joints, 1.0, &mut rng);
    KeypointsDoc {
        format_version: FORMAT_VERSION,
        views: views
            .into_iter()
            .map(|(camera, keypoints)| ViewDoc { camera, keypoints })
            .collect(),
    }
    .write(&out.join("keypoints.json"))?;
    for i in 0..GENERATED_CLIPS {
        let frames = rng.gen_range(40..=70);
        let speed = rng.gen_range(0.5..1.3);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        walking_clip(body.num_joints(), frames, 30.0, speed, phase).write(&out.join(format!("clip_{i}.json")))?;
    }
    demo_room().write(&out.join("scene.json"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths() {
        let r = |a: &str, b: &str| relative_to(Path::new(a), Path::new(b));
        assert_eq!(r("d1/assets/a0", "d1/place"), PathBuf::from("../assets/a0"));
        assert_eq!(r("/x/y/z", "/x"), PathBuf::from("y/z"));
        assert_eq!(r("./d1/c.json", "d1"), PathBuf::from("c.json"));
        assert_eq!(r("/x/y", "rel"), PathBuf::from("/x/y"));
        assert_eq!(r("a", "a"), PathBuf::from("."));
    }
}

#[derive(Clone, Debug)]
pub struct DemoOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub assets: usize,
    pub shape_scale: f64,
    pub fit: FitConfig,
    pub cma: CmaConfig,
}

impl DemoOptions {
    pub fn new(out: PathBuf, seed: u64) -> Self {
        DemoOptions {
            out,
            seed,
            assets: 4,
            shape_scale: 1.0,
            fit: FitConfig::default(),
            cma: CmaConfig::default(),
        }
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// Synthetic scan, fit, reshaped assets, animation, placement and ground truth.
pub fn run_demo(opts: &DemoOptions) -> Result<DemoReport> {
    let out = &opts.out;
    let inputs = out.join("inputs");
    run_generate(&inputs, opts.seed)?;
    info!("inputs written to {}", inputs.display());

    let fit = run_fit(&FitInputs {
        scan: inputs.join("scan.obj"),
        body: Some(inputs.join("body.json")),
        keypoints: Some(inputs.join("keypoints.json")),
        skeleton: None,
        reference: Some(inputs.join("truth.obj")),
        out: out.join("fit"),
        config: opts.fit.clone(),
    })?;
    let fit_v2v = fit.reference_v2v_mm.unwrap_or(f64::NAN);
    info!("fit: V2V {fit_v2v:.2} mm, inside {:.3}", fit.result.inside_fraction());

    let body = read_body(&inputs.join("body.json"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let betas = sample_betas(opts.assets, opts.shape_scale, body.num_shapes(), rng.gen())?;
    let manifest = run_retarget(
        &inputs.join("scan.obj"),
        &out.join("fit").join("fit.json"),
        Some(&inputs.join("body.json")),
        &betas,
        &out.join("assets"),
    )?;

    let mut pairs = Vec::new();
    for (i, entry) in manifest.assets.iter().enumerate() {
        let asset = out.join("assets").join(&entry.directory);
        let clip = inputs.join(format!("clip_{}.json", i % GENERATED_CLIPS));
        run_animate(&asset, &clip, &out.join("animations").join(&entry.directory))?;
        pairs.push((asset, clip));
    }
    let cma = CmaConfig {
        seed: rng.gen(),
        ..opts.cma.clone()
    };
    let (placement, placement_path) = run_place(&inputs.join("scene.json"), &pairs, &cma, &out.join("place"))?;

    let mut checks = vec![
        check(
            "fit_objective_trace_non_increasing",
            fit.result.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9),
            format!("{} outer iterations", fit.result.outer_iterations),
        ),
        check(
            "field_reconstruction",
            manifest.reconstruction_error < 1e-9,
            format!("max error {:.3e} m", manifest.reconstruction_error),
        ),
        check(
            "asset_weights_stochastic",
            manifest.assets.iter().all(|a| a.weights_stochastic),
            format!(
                "max row error {:.3e}",
                manifest.assets.iter().map(|a| a.max_weight_row_error).fold(0.0, f64::max)
            ),
        ),
    ];
    for entry in &manifest.assets {
        let back = RiggedAsset::load(&out.join("assets").join(&entry.directory));
        checks.push(check(
            &format!("{}_reloads", entry.directory),
            back.as_ref().map(|a| a.validate().is_ok()).unwrap_or(false),
            back.err().map_or_else(String::new, |e| e.to_string()),
        ));
    }
    let placement_loss = match &placement.outcome {
        PlacementOutcome::Success(p) => {
            checks.push(check("placement_verified", p.verified && p.loss.total == 0, format!("{:?}", p.loss)));
            let gt = GroundTruthDoc::read(&out.join("place").join("ground_truth.json"));
            checks.push(check(
                "ground_truth_reloads",
                gt.as_ref().map(|g| g.frames.len() > 0).unwrap_or(false),
                gt.err().map_or_else(String::new, |e| e.to_string()),
            ));
            p.loss
        }
        PlacementOutcome::Infeasible(f) => {
            checks.push(check(
                "placement_verified",
                false,
                format!("see {}", relative_to(&placement_path, out).display()),
            ));
            f.best_loss
        }
    };
    checks.push(check(
        "placement_file_reloads",
        PlacementDoc::read(&placement_path).is_ok(),
        relative_to(&placement_path, out).display().to_string(),
    ));
    let report = DemoReport {
        format_version: FORMAT_VERSION,
        seed: opts.seed,
        fit_v2v_mm: fit_v2v,
        fit_inside_fraction: fit.result.inside_fraction(),
        placement: placement_loss,
        checks,
    };
    report.write(&out.join("report.json"))?;
    Ok(report)
}
