//! Synthetic inputs: posed and inflated demo scans, keypoints, clips and scenes.

use std::f64::consts::PI;

use nalgebra::Rotation3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::body::{matrix_to_rot6d, sample_shape, ParametricBody, PoseParams, ShapeParams};
use crate::error::Result;
use crate::fit::{CameraView, Keypoints2D};
use crate::geom::{Aabb, Mesh, Vec3};
use crate::placement::{propose_cameras, CameraIntrinsics, SceneLayout, UpAxis};
use crate::retarget::AnimationClip;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Bound on each axis-angle component of the per-joint rotations, radians.
    pub max_joint_angle: f64,
    /// Standard deviation of the sampled shape.
    pub shape_scale: f64,
    /// Offset of the scan along the posed vertex normals, meters.
    pub inflation: f64,
    /// Half side of the square on which the subject's root is placed, meters.
    pub placement_half_side: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_joint_angle: 0.3,
            shape_scale: 1.0,
            inflation: 0.005,
            placement_half_side: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticScan {
    pub theta: PoseParams,
    pub beta: ShapeParams,
    /// Posed body without inflation.
    pub truth: Mesh,
    pub joints: Vec<Vec3>,
    /// Posed body pushed out along its vertex normals.
    pub scan: Mesh,
}

fn small_rotation(rng: &mut ChaCha8Rng, bound: f64) -> [f64; 6] {
    let v = Vec3::new(
        rng.gen_range(-bound..=bound),
        rng.gen_range(-bound..=bound),
        rng.gen_range(-bound..=bound),
    );
    matrix_to_rot6d(Rotation3::from_scaled_axis(v).matrix())
}

/// Random pose: bounded joint rotations, free yaw, root moved in the ground plane.
pub fn random_pose(rng: &mut ChaCha8Rng, joints: usize, cfg: &SynthConfig) -> PoseParams {
    let joint_rotations = (0..joints).map(|_| small_rotation(rng, cfg.max_joint_angle)).collect();
    let yaw = rng.gen_range(-PI..PI);
    let h = cfg.placement_half_side;
    let translation = if h > 0.0 {
        [rng.gen_range(-h..h), rng.gen_range(-h..h), 0.0]
    } else {
        [0.0; 3]
    };
    PoseParams {
        global_rotation: matrix_to_rot6d(Rotation3::from_axis_angle(&Vec3::z_axis(), yaw).matrix()),
        translation,
        joint_rotations,
    }
}

/// Offset every vertex along its area-weighted normal.
pub fn inflate(mesh: &Mesh, offset: f64) -> Mesh {
    let normals = mesh.vertex_normals();
    Mesh {
        vertices: mesh
            .vertices
            .iter()
            .zip(&normals)
            .map(|(v, n)| v + n * offset)
            .collect(),
        faces: mesh.faces.clone(),
        uvs: mesh.uvs.clone(),
        normals: None,
    }
}

pub fn synthetic_scan(body: &ParametricBody, seed: u64, cfg: &SynthConfig) -> Result<SyntheticScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = random_pose(&mut rng, body.num_joints(), cfg);
    let beta = sample_shape(rng.gen(), cfg.shape_scale, body.num_shapes())?;
    let (truth, joints) = body.pose_mesh(&theta, &beta)?;
    let scan = inflate(&truth, cfg.inflation);
    Ok(SyntheticScan {
        theta,
        beta,
        truth,
        joints,
        scan,
    })
}

/// Project joints into `cameras`, adding Gaussian pixel noise of `sigma_px`.
pub fn project_keypoints(
    cameras: &[CameraView],
    joints: &[Vec3],
    sigma_px: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(CameraView, Keypoints2D)> {
    let noise = Normal::new(0.0, sigma_px.max(0.0)).unwrap();
    cameras
        .iter()
        .map(|c| {
            let points = joints
                .iter()
                .map(|p| match c.project(p) {
                    Some([u, v]) => {
                        let (du, dv) = if sigma_px > 0.0 {
                            (noise.sample(rng), noise.sample(rng))
                        } else {
                            (0.0, 0.0)
                        };
                        [u + du, v + dv, 1.0]
                    }
                    None => [0.0, 0.0, 0.0],
                })
                .collect();
            (c.clone(), Keypoints2D { points })
        })
        .collect()
}

/// The 4-camera rig 3 m from the subject used for keypoint capture.
pub fn capture_rig(center: [f64; 2]) -> Result<Vec<CameraView>> {
    propose_cameras(
        center,
        3.0 / 2f64.sqrt(),
        [1.0, 1.5, 2.0, 2.5],
        1.0,
        &CameraIntrinsics::default(),
    )
}

/// Walking clip: the root advances along +y at `speed` m/s while legs and arms swing.
pub fn walking_clip(
    joints: usize,
    frames: usize,
    fps: f64,
    speed: f64,
    phase: f64,
) -> AnimationClip {
    let rot = |axis: Vec3, angle: f64| {
        matrix_to_rot6d(Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix())
    };
    let frames = (0..frames)
        .map(|f| {
            let t = f as f64 / fps;
            let s = (2.0 * PI * 1.0 * t + phase).sin();
            let mut r = vec![crate::body::IDENTITY_6D; joints];
            if joints == 24 {
                let (hip_l, hip_r) = (-0.4 * s, 0.4 * s);
                let (knee_l, knee_r) = (-0.3 * (1.0 + s), -0.3 * (1.0 - s));
                r[1] = rot(Vec3::x(), hip_l);
                r[2] = rot(Vec3::x(), hip_r);
                r[4] = rot(Vec3::x(), knee_l);
                r[5] = rot(Vec3::x(), knee_r);
                // keep the feet level with the ground
                r[7] = rot(Vec3::x(), -(hip_l + knee_l));
                r[8] = rot(Vec3::x(), -(hip_r + knee_r));
                r[16] = rot(Vec3::y(), 1.2);
                r[17] = rot(Vec3::y(), -1.2);
                r[18] = rot(Vec3::z(), 0.3 * s);
                r[19] = rot(Vec3::z(), 0.3 * s);
            }
            crate::retarget::ClipFrame {
                joint_rotations: r,
                root_translation: [0.0, speed * t, 0.0],
            }
        })
        .collect();
    AnimationClip { fps, frames }
}

/// 10 × 10 m room, 3 m high, with three obstacle boxes and the floor below it.
pub fn demo_room() -> SceneLayout {
    SceneLayout {
        scene_bounds: Aabb::new([-5.0, -5.0, 0.0], [5.0, 5.0, 3.0]),
        obstacles: vec![
            Aabb::new([-5.0, -5.0, -0.1], [5.0, 5.0, 0.0]),
            Aabb::new([-3.5, 1.5, 0.0], [-2.0, 3.0, 0.8]),
            Aabb::new([1.0, -1.0, 0.0], [2.0, 0.5, 1.0]),
            Aabb::new([2.5, 2.5, 0.0], [4.0, 3.2, 2.0]),
        ],
        up_axis: UpAxis::Z,
    }
}
