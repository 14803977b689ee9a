use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::body::{read_json, write_json};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Mesh, Vec3};

pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpAxis {
    X,
    Y,
    #[default]
    Z,
}

impl UpAxis {
    pub fn index(self) -> usize {
        match self {
            UpAxis::X => 0,
            UpAxis::Y => 1,
            UpAxis::Z => 2,
        }
    }

    /// The two ground-plane axes `(u, w)`, ordered so that `u × w` points up.
    pub fn ground_axes(self) -> (usize, usize) {
        match self {
            UpAxis::X => (1, 2),
            UpAxis::Y => (2, 0),
            UpAxis::Z => (0, 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub scene_bounds: Aabb,
    /// Boxes around every object, floor included.
    pub obstacles: Vec<Aabb>,
    #[serde(default)]
    pub up_axis: UpAxis,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    format_version: u32,
    scene_bounds: Aabb,
    #[serde(default)]
    obstacles: Vec<Aabb>,
    #[serde(default)]
    up_axis: UpAxis,
}

impl SceneLayout {
    pub fn validate(&self) -> Result<()> {
        if !self.scene_bounds.is_nondegenerate() {
            return Err(Error::InvalidArgument(format!(
                "scene bounds {:?} .. {:?} are inverted or flat",
                self.scene_bounds.min, self.scene_bounds.max
            )));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.is_valid() {
                return Err(Error::InvalidArgument(format!("obstacle {i} is not a finite box")));
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let doc: SceneDoc = read_json(path)?;
        let err = |field: &str, msg: String| Error::Format {
            path: path.to_path_buf(),
            field: field.into(),
            msg,
        };
        if doc.format_version != SCENE_FORMAT_VERSION {
            return Err(err("format_version", format!("unsupported version {}", doc.format_version)));
        }
        let layout = SceneLayout {
            scene_bounds: doc.scene_bounds,
            obstacles: doc.obstacles,
            up_axis: doc.up_axis,
        };
        layout.validate().map_err(|e| err("scene_bounds", e.to_string()))?;
        Ok(layout)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(
            path,
            &SceneDoc {
                format_version: SCENE_FORMAT_VERSION,
                scene_bounds: self.scene_bounds,
                obstacles: self.obstacles.clone(),
                up_axis: self.up_axis,
            },
        )
    }
}

/// Per-frame tight boxes of an animated subject in its own frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionVolume {
    pub frames: Vec<Aabb>,
}

impl MotionVolume {
    pub fn duration(&self) -> usize {
        self.frames.len()
    }

    /// Box of the middle frame; its center anchors the initial placement.
    pub fn mid_box(&self) -> Aabb {
        self.frames[self.frames.len() / 2]
    }
}

pub fn motion_volume(frames: &[Mesh]) -> Result<MotionVolume> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("motion volume needs at least one frame".into()));
    }
    let mut boxes = Vec::with_capacity(frames.len());
    for (f, m) in frames.iter().enumerate() {
        if m.vertices.is_empty() {
            return Err(Error::InvalidArgument(format!("frame {f} has no vertices")));
        }
        boxes.push(m.bounds());
    }
    Ok(MotionVolume { frames: boxes })
}

/// Translation in the ground plane and yaw about the up axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementParams {
    pub translation: [f64; 2],
    pub yaw: f64,
}

/// `(cos, sin)` that are exact at multiples of a quarter turn.
pub fn yaw_cos_sin(yaw: f64) -> (f64, f64) {
    let q = yaw / FRAC_PI_2;
    let k = q.round();
    if q == k && k.abs() < 1e15 {
        return match (k as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    (yaw.cos(), yaw.sin())
}

impl PlacementParams {
    /// `b` rotated about the up axis through the subject origin, re-tightened and moved.
    pub fn place_box(&self, b: &Aabb, up: UpAxis) -> Aabb {
        let (u, w) = up.ground_axes();
        let (c, s) = yaw_cos_sin(self.yaw);
        let cu = 0.5 * (b.min[u] + b.max[u]);
        let cw = 0.5 * (b.min[w] + b.max[w]);
        let hu = 0.5 * (b.max[u] - b.min[u]);
        let hw = 0.5 * (b.max[w] - b.min[w]);
        let nu = c * cu - s * cw + self.translation[0];
        let nw = s * cu + c * cw + self.translation[1];
        let eu = c.abs() * hu + s.abs() * hw;
        let ew = s.abs() * hu + c.abs() * hw;
        let mut out = *b;
        out.min[u] = nu - eu;
        out.max[u] = nu + eu;
        out.min[w] = nw - ew;
        out.max[w] = nw + ew;
        out
    }

    /// World position of a point given in the subject frame.
    pub fn transform_point(&self, p: &Vec3, up: UpAxis) -> Vec3 {
        let (u, w) = up.ground_axes();
        let (c, s) = yaw_cos_sin(self.yaw);
        let mut out = *p;
        out[u] = c * p[u] - s * p[w] + self.translation[0];
        out[w] = s * p[u] + c * p[w] + self.translation[1];
        out
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|v| v.is_finite()) && self.yaw.is_finite()
    }
}
