//! Versioned JSON documents written and read by the command-line pipeline.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::body::{read_json, write_json};
use crate::error::{Error, Result};
use crate::fit::{CameraView, FitConfig, FitResult, Keypoints2D};
use crate::geom::{Aabb, Vec3};
use crate::placement::{PlacementLoss, PlacementOutcome, PlacementParams};

pub const FORMAT_VERSION: u32 = 1;

/// Documents that carry a `format_version` field.
pub trait Versioned: Serialize + DeserializeOwned {
    fn version(&self) -> u32;

    fn read(path: &Path) -> Result<Self> {
        let doc: Self = read_json(path)?;
        if doc.version() != FORMAT_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                field: "format_version".into(),
                msg: format!("expected {FORMAT_VERSION}, found {}", doc.version()),
            });
        }
        Ok(doc)
    }

    fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn version(&self) -> u32 {
                self.format_version
            }
        })*
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewDoc {
    pub camera: CameraView,
    pub keypoints: Keypoints2D,
}

/// Cameras and per-view 2D keypoints of one subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeypointsDoc {
    pub format_version: u32,
    pub views: Vec<ViewDoc>,
}

/// A 3D skeleton given directly; `valid` defaults to all joints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonDoc {
    pub format_version: u32,
    pub joints: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<Vec<bool>>,
}

impl SkeletonDoc {
    pub fn from_joints(joints: &[Vec3]) -> Self {
        SkeletonDoc {
            format_version: FORMAT_VERSION,
            joints: joints.iter().map(|j| [j.x, j.y, j.z]).collect(),
            valid: None,
        }
    }

    pub fn joints_and_flags(&self) -> (Vec<Vec3>, Vec<bool>) {
        let joints: Vec<Vec3> = self.joints.iter().map(|j| Vec3::from(*j)).collect();
        let valid = self.valid.clone().unwrap_or_else(|| vec![true; joints.len()]);
        (joints, valid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDoc {
    pub format_version: u32,
    /// Content hash of the scan this fit belongs to.
    pub scan_hash: String,
    pub config: FitConfig,
    pub result: FitResult,
    /// V2V against a reference mesh, when one was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_v2v_mm: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaListDoc {
    pub format_version: u32,
    pub betas: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetEntry {
    pub directory: String,
    pub beta: Vec<f64>,
    pub weights_stochastic: bool,
    pub max_weight_row_error: f64,
    pub self_intersections: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetargetManifest {
    pub format_version: u32,
    pub scan_hash: String,
    /// Largest `|A V_t + D - V_s|` at the bind configuration, meters.
    pub reconstruction_error: f64,
    pub assets: Vec<AssetEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnimationIndex {
    pub format_version: u32,
    pub fps: f64,
    pub frames: Vec<String>,
    /// Posed joint positions per frame.
    pub joints: Vec<Vec<[f64; 3]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub asset: String,
    pub clip: String,
    pub frames: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementDoc {
    pub format_version: u32,
    pub seed: u64,
    pub sequences: Vec<SequenceEntry>,
    pub outcome: PlacementOutcome,
}

impl PlacementDoc {
    pub fn params(&self) -> Option<&[PlacementParams]> {
        match &self.outcome {
            PlacementOutcome::Success(p) => Some(&p.params),
            PlacementOutcome::Infeasible(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonFrame {
    pub sequence: usize,
    pub joints: Vec<[f64; 3]>,
    pub bounds: Aabb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame: usize,
    pub people: Vec<PersonFrame>,
}

/// Per-frame world-space joints and boxes of every placed subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthDoc {
    pub format_version: u32,
    pub fps: f64,
    pub joint_names: Vec<String>,
    pub transforms: Vec<PlacementParams>,
    pub frames: Vec<FrameRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsDoc {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v2v_mm: Option<f64>,
    pub chamfer_mm: f64,
    /// Fraction of the evaluated mesh's vertices inside the reference.
    pub inside_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoReport {
    pub format_version: u32,
    pub seed: u64,
    pub fit_v2v_mm: f64,
    pub fit_inside_fraction: f64,
    pub placement: PlacementLoss,
    pub checks: Vec<Check>,
}

impl DemoReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

versioned!(
    KeypointsDoc,
    SkeletonDoc,
    FitDoc,
    BetaListDoc,
    RetargetManifest,
    AnimationIndex,
    PlacementDoc,
    GroundTruthDoc,
    MetricsDoc,
    DemoReport
);
