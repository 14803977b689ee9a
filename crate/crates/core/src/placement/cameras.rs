use nalgebra::{Matrix3, RowVector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::CameraView;
use crate::geom::Vec3;

/// Image size and horizontal field of view; the principal point is the image center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: f64,
    pub height: f64,
    pub horizontal_fov_deg: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics {
            width: 1920.0,
            height: 1080.0,
            horizontal_fov_deg: 60.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn matrix(&self) -> Result<Matrix3<f64>> {
        let fov = self.horizontal_fov_deg.to_radians();
        if !(self.width > 0.0 && self.height > 0.0) || !(fov > 0.0 && fov < std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!("invalid intrinsics {self:?}")));
        }
        let f = 0.5 * self.width / (0.5 * fov).tan();
        Ok(Matrix3::new(
            f,
            0.0,
            0.5 * self.width,
            0.0,
            f,
            0.5 * self.height,
            0.0,
            0.0,
            1.0,
        ))
    }

    pub fn principal_point(&self) -> [f64; 2] {
        [0.5 * self.width, 0.5 * self.height]
    }
}

/// Camera at `center` looking at `target` with z up, image x right and y down.
pub fn look_at(center: &Vec3, target: &Vec3, intrinsics: &CameraIntrinsics) -> Result<CameraView> {
    let forward = (target - center)
        .try_normalize(1e-12)
        .ok_or_else(|| Error::InvalidArgument("camera center equals its target".into()))?;
    let right = forward
        .cross(&Vec3::z())
        .try_normalize(1e-9)
        .ok_or_else(|| Error::InvalidArgument("camera looks straight along the up axis".into()))?;
    let down = forward.cross(&right);
    let r = Matrix3::from_rows(&[
        RowVector3::from(right.transpose()),
        RowVector3::from(down.transpose()),
        RowVector3::from(forward.transpose()),
    ]);
    CameraView::from_krt(&intrinsics.matrix()?, &r, center)
}

/// Four cameras on the corners of the square of half side `half_side` around
/// `region_center`, at the given heights, all aimed at the region center at
/// `target_height`.
pub fn propose_cameras(
    region_center: [f64; 2],
    half_side: f64,
    elevations: [f64; 4],
    target_height: f64,
    intrinsics: &CameraIntrinsics,
) -> Result<Vec<CameraView>> {
    if !(half_side > 0.0) || !half_side.is_finite() {
        return Err(Error::InvalidArgument(format!("half_side {half_side} must be > 0")));
    }
    let [cx, cy] = region_center;
    let target = Vec3::new(cx, cy, target_height);
    let corners = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
    corners
        .iter()
        .zip(elevations)
        .map(|(&(sx, sy), z)| look_at(&Vec3::new(cx + sx * half_side, cy + sy * half_side, z), &target, intrinsics))
        .collect()
}
