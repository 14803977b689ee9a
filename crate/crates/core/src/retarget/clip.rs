use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::body::{read_json, rot6d_to_matrix, write_json, PoseParams, Skeleton, WorldTransforms};
use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};

pub const CLIP_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipFrame {
    /// Local 6D rotation per joint.
    pub joint_rotations: Vec<[f64; 6]>,
    /// Offset of the root from its rest position, meters.
    pub root_translation: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnimationClip {
    pub fps: f64,
    pub frames: Vec<ClipFrame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClipDoc {
    format_version: u32,
    fps: f64,
    frames: Vec<ClipFrame>,
}

impl AnimationClip {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self, joints: usize) -> Result<()> {
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(Error::InvalidArgument(format!("clip fps {} must be positive", self.fps)));
        }
        for (f, frame) in self.frames.iter().enumerate() {
            if frame.joint_rotations.len() != joints {
                return Err(Error::InvalidArgument(format!(
                    "clip frame {f} has {} joint rotations, skeleton has {joints}",
                    frame.joint_rotations.len()
                )));
            }
            let finite = frame.root_translation.iter().all(|v| v.is_finite())
                && frame.joint_rotations.iter().flatten().all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidArgument(format!("clip frame {f} is not finite")));
            }
        }
        Ok(())
    }

    /// World transforms of `skeleton` for every frame.
    pub fn world_transforms(&self, skeleton: &Skeleton) -> Result<Vec<WorldTransforms>> {
        self.validate(skeleton.len())?;
        self.frames
            .iter()
            .map(|frame| frame_transforms(skeleton, frame))
            .collect()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let doc: ClipDoc = read_json(path)?;
        if doc.format_version != CLIP_FORMAT_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                field: "format_version".into(),
                msg: format!("unsupported version {}", doc.format_version),
            });
        }
        Ok(AnimationClip {
            fps: doc.fps,
            frames: doc.frames,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(
            path,
            &ClipDoc {
                format_version: CLIP_FORMAT_VERSION,
                fps: self.fps,
                frames: self.frames.clone(),
            },
        )
    }
}

pub fn frame_transforms(skeleton: &Skeleton, frame: &ClipFrame) -> Result<WorldTransforms> {
    let local = frame
        .joint_rotations
        .iter()
        .map(rot6d_to_matrix)
        .collect::<Result<Vec<_>>>()?;
    let mut world = skeleton.forward(&local)?;
    world.apply_global(&Mat3::identity(), &Vec3::from(frame.root_translation));
    Ok(world)
}

/// The clip frame that poses `skeleton` exactly like `theta` does.
///
/// The global rotation folds into the root rotation and the translation is
/// re-expressed relative to the rest root.
pub fn frame_from_pose(theta: &PoseParams, skeleton: &Skeleton) -> Result<ClipFrame> {
    if theta.joint_rotations.len() != skeleton.len() {
        return Err(Error::dim("joint rotations", skeleton.len(), theta.joint_rotations.len()));
    }
    let g = rot6d_to_matrix(&theta.global_rotation)?;
    let l0 = rot6d_to_matrix(&theta.joint_rotations[0])?;
    let c0 = skeleton.rest_joints[0];
    let tau = g * c0 + Vec3::from(theta.translation) - c0;
    let mut joint_rotations = theta.joint_rotations.clone();
    joint_rotations[0] = crate::body::matrix_to_rot6d(&(g * l0));
    Ok(ClipFrame {
        joint_rotations,
        root_translation: [tau.x, tau.y, tau.z],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::demo::demo_body;
    use crate::pipeline::synth::{synthetic_scan, SynthConfig};

    #[test]
    fn frame_from_pose_matches_body() {
        let body = demo_body();
        let s = synthetic_scan(&body, 4, &SynthConfig::default()).unwrap();
        let skel = body.skeleton(&s.beta).unwrap();
        let frame = frame_from_pose(&s.theta, &skel).unwrap();
        let a = frame_transforms(&skel, &frame).unwrap();
        let b = body.world_transforms(&s.theta, &s.beta).unwrap();
        for j in 0..skel.len() {
            assert!((a.rotations[j] - b.rotations[j]).norm() < 1e-12);
            assert!((a.translations[j] - b.translations[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn clip_roundtrip_and_validation() {
        let clip = crate::pipeline::synth::walking_clip(24, 5, 30.0, 1.0, 0.2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("clip.json");
        clip.write(&p).unwrap();
        assert_eq!(AnimationClip::read(&p).unwrap(), clip);
        assert!(clip.validate(23).is_err());
        let mut bad = clip.clone();
        bad.fps = 0.0;
        assert!(bad.validate(24).is_err());
    }
}
