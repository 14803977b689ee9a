use std::path::Path;

use serde::{Deserialize, Serialize};

use super::clip::{frame_transforms, AnimationClip};
use super::field::{apply_field, bind_field, transfer_skinning, DisplacementField};
use crate::body::{
    linear_blend_skin, read_json, write_json, ParametricBody, PoseParams, ShapeParams, Skeleton,
    SparseRows,
};
use crate::error::{Error, Result};
use crate::geom::obj::{read_obj, write_obj};
use crate::geom::{DegeneratePolicy, Mesh, Vec3};

pub const RIG_FORMAT_VERSION: u32 = 1;
pub const REST_MESH_FILE: &str = "rest.obj";
pub const RIG_FILE: &str = "rig.json";

/// A scan in the rest pose of a chosen shape, with skin weights and skeleton.
#[derive(Clone, Debug)]
pub struct RiggedAsset {
    pub rest_mesh: Mesh,
    pub weights: SparseRows,
    pub skeleton: Skeleton,
    pub joint_names: Vec<String>,
    pub beta: ShapeParams,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RigDoc {
    format_version: u32,
    joint_names: Vec<String>,
    parents: Vec<i64>,
    rest_joints: Vec<[f64; 3]>,
    beta: Vec<f64>,
    vertex_count: usize,
    weights: Vec<(usize, usize, f64)>,
}

impl RiggedAsset {
    /// Weight rows nonnegative and summing to 1 within 1e-6, sizes consistent.
    pub fn validate(&self) -> Result<()> {
        if self.weights.nrows() != self.rest_mesh.vertices.len() {
            return Err(Error::dim("weight rows", self.rest_mesh.vertices.len(), self.weights.nrows()));
        }
        if self.weights.ncols() != self.skeleton.len() {
            return Err(Error::dim("weight columns", self.skeleton.len(), self.weights.ncols()));
        }
        if let Err((row, msg)) = self.weights.check_stochastic(1e-6) {
            return Err(Error::InvalidArgument(format!("weight row {row}: {msg}")));
        }
        Ok(())
    }

    /// Largest deviation of a weight row sum from 1.
    pub fn max_row_error(&self) -> f64 {
        (0..self.weights.nrows())
            .map(|r| (self.weights.row_sum(r) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Skinned vertices and joint positions for one clip frame.
    pub fn pose_frame(&self, frame: &super::ClipFrame) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
        let world = frame_transforms(&self.skeleton, frame)?;
        let v = linear_blend_skin(&self.rest_mesh.vertices, &self.skeleton.rest_joints, &self.weights, &world)?;
        Ok((v, world.translations))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_obj(&dir.join(REST_MESH_FILE), &self.rest_mesh)?;
        let doc = RigDoc {
            format_version: RIG_FORMAT_VERSION,
            joint_names: self.joint_names.clone(),
            parents: self
                .skeleton
                .parents
                .iter()
                .map(|p| p.map_or(-1, |p| p as i64))
                .collect(),
            rest_joints: self.skeleton.rest_joints.iter().map(|j| [j.x, j.y, j.z]).collect(),
            beta: self.beta.beta.clone(),
            vertex_count: self.weights.nrows(),
            weights: self.weights.triplets(),
        };
        write_json(&dir.join(RIG_FILE), &doc)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let rest_mesh = read_obj(&dir.join(REST_MESH_FILE), DegeneratePolicy::Reject)?;
        let rig_path = dir.join(RIG_FILE);
        let doc: RigDoc = read_json(&rig_path)?;
        let field = |field: &str, msg: String| Error::Format {
            path: rig_path.clone(),
            field: field.into(),
            msg,
        };
        if doc.format_version != RIG_FORMAT_VERSION {
            return Err(field("format_version", format!("unsupported version {}", doc.format_version)));
        }
        let parents = doc
            .parents
            .iter()
            .map(|&p| if p < 0 { None } else { Some(p as usize) })
            .collect();
        let skeleton = Skeleton::new(parents, doc.rest_joints.iter().map(|j| Vec3::from(*j)).collect())
            .map_err(|e| field("parents", e.to_string()))?;
        let weights = SparseRows::from_triplets(doc.vertex_count, skeleton.len(), &doc.weights)
            .map_err(|e| field("weights", e.to_string()))?;
        let asset = RiggedAsset {
            rest_mesh,
            weights,
            skeleton,
            joint_names: doc.joint_names,
            beta: ShapeParams { beta: doc.beta },
        };
        asset.validate().map_err(|e| field("weights", e.to_string()))?;
        Ok(asset)
    }
}

/// A scan bound to its fitted body, ready to produce assets for any shape.
#[derive(Clone, Debug)]
pub struct Retargeter {
    pub field: DisplacementField,
    scan: Mesh,
}

impl Retargeter {
    pub fn bind(scan: &Mesh, body: &ParametricBody, theta_fit: &PoseParams, beta_fit: &ShapeParams) -> Result<Self> {
        let (fitted, _) = body.pose_mesh(theta_fit, beta_fit)?;
        Ok(Retargeter {
            field: bind_field(scan, &fitted)?,
            scan: scan.clone(),
        })
    }

    /// Rest-pose asset for `beta_new`.
    pub fn asset(&self, body: &ParametricBody, beta_new: &ShapeParams) -> Result<RiggedAsset> {
        let (rest_body, _) = body.pose_mesh(&PoseParams::identity(body.num_joints()), beta_new)?;
        let vertices = apply_field(&self.field, &rest_body)?;
        let asset = RiggedAsset {
            rest_mesh: Mesh {
                vertices,
                faces: self.scan.faces.clone(),
                uvs: self.scan.uvs.clone(),
                normals: None,
            },
            weights: transfer_skinning(&self.field, body.skin_weights())?,
            skeleton: body.skeleton(beta_new)?,
            joint_names: body.joint_names().to_vec(),
            beta: beta_new.clone(),
        };
        asset.validate()?;
        Ok(asset)
    }
}

/// Unpose and reshape `scan` (fitted with `theta_fit`, `beta_fit`) to the rest pose of `beta_new`.
pub fn make_rest_asset(
    scan: &Mesh,
    body: &ParametricBody,
    theta_fit: &PoseParams,
    beta_fit: &ShapeParams,
    beta_new: &ShapeParams,
) -> Result<RiggedAsset> {
    Retargeter::bind(scan, body, theta_fit, beta_fit)?.asset(body, beta_new)
}

/// LBS of the asset's rest mesh for every clip frame.
pub fn animate_asset(asset: &RiggedAsset, clip: &AnimationClip) -> Result<Vec<Mesh>> {
    clip.validate(asset.skeleton.len())?;
    clip.frames
        .iter()
        .map(|frame| {
            let (vertices, _) = asset.pose_frame(frame)?;
            asset.rest_mesh.with_vertices(vertices)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::demo::demo_body;
    use crate::body::{sample_shape, IDENTITY_6D};
    use crate::geom::v2v_error_mm;
    use crate::pipeline::synth::{inflate, synthetic_scan, walking_clip, SynthConfig};
    use crate::retarget::frame_from_pose;

    #[test]
    fn double_identity_is_exact() {
        let body = demo_body();
        let beta = sample_shape(3, 1.0, body.num_shapes()).unwrap();
        let theta = PoseParams::identity(body.num_joints());
        let scan = inflate(&body.pose_mesh(&theta, &beta).unwrap().0, 0.01);
        let asset = make_rest_asset(&scan, &body, &theta, &beta, &beta).unwrap();
        for (a, b) in asset.rest_mesh.vertices.iter().zip(&scan.vertices) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn round_trip_with_true_parameters() {
        let body = demo_body();
        let s = synthetic_scan(&body, 11, &SynthConfig::default()).unwrap();
        let asset = make_rest_asset(&s.scan, &body, &s.theta, &s.beta, &s.beta).unwrap();
        let frame = frame_from_pose(&s.theta, &asset.skeleton).unwrap();
        let (v, _) = asset.pose_frame(&frame).unwrap();
        let err = v2v_error_mm(&v, &s.scan.vertices).unwrap();
        assert!(err < 15.0, "{err} mm");
    }

    #[test]
    fn identity_clip_gives_rest_mesh() {
        let body = demo_body();
        let s = synthetic_scan(&body, 2, &SynthConfig::default()).unwrap();
        let asset = make_rest_asset(&s.scan, &body, &s.theta, &s.beta, &ShapeParams::zeros(4)).unwrap();
        let clip = AnimationClip {
            fps: 30.0,
            frames: vec![
                crate::retarget::ClipFrame {
                    joint_rotations: vec![IDENTITY_6D; 24],
                    root_translation: [0.0; 3],
                };
                3
            ],
        };
        for m in animate_asset(&asset, &clip).unwrap() {
            for (a, b) in m.vertices.iter().zip(&asset.rest_mesh.vertices) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        assert!(animate_asset(&asset, &walking_clip(23, 2, 30.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn bundle_roundtrip() {
        let body = demo_body();
        let s = synthetic_scan(&body, 5, &SynthConfig::default()).unwrap();
        let asset = make_rest_asset(&s.scan, &body, &s.theta, &s.beta, &s.beta).unwrap();
        let dir = tempfile::tempdir().unwrap();
        asset.save(dir.path()).unwrap();
        let back = RiggedAsset::load(dir.path()).unwrap();
        assert_eq!(back.weights, asset.weights);
        assert_eq!(back.skeleton, asset.skeleton);
        assert_eq!(back.beta, asset.beta);
        assert!(v2v_error_mm(&back.rest_mesh.vertices, &asset.rest_mesh.vertices).unwrap() < 1e-3);
    }
}
