use nalgebra::{DMatrix, Matrix3, Matrix3x4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Pinhole camera as a 3×4 projection matrix (row-major).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraDoc", into = "CameraDoc")]
pub struct CameraView {
    projection: Matrix3x4<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct CameraDoc {
    projection: [[f64; 4]; 3],
}

impl TryFrom<CameraDoc> for CameraView {
    type Error = Error;
    fn try_from(d: CameraDoc) -> Result<Self> {
        CameraView::from_rows(d.projection)
    }
}

impl From<CameraView> for CameraDoc {
    fn from(c: CameraView) -> Self {
        CameraDoc {
            projection: c.rows(),
        }
    }
}

impl CameraView {
    pub fn new(projection: Matrix3x4<f64>) -> Result<Self> {
        if !projection.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("projection matrix is not finite".into()));
        }
        let m: Matrix3<f64> = projection.fixed_view::<3, 3>(0, 0).into();
        let scale = m.norm().max(1e-300);
        if m.determinant().abs() <= 1e-12 * scale.powi(3) {
            return Err(Error::InvalidArgument(
                "projection matrix has a singular left 3x3 block".into(),
            ));
        }
        Ok(CameraView { projection })
    }

    pub fn from_rows(rows: [[f64; 4]; 3]) -> Result<Self> {
        Self::new(Matrix3x4::from_fn(|r, c| rows[r][c]))
    }

    /// Camera from intrinsics `k`, world-to-camera rotation `r` and camera center.
    pub fn from_krt(k: &Matrix3<f64>, r: &Matrix3<f64>, center: &Vec3) -> Result<Self> {
        let t = -(r * center);
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        rt.set_column(3, &t);
        Self::new(k * rt)
    }

    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.projection
    }

    pub fn rows(&self) -> [[f64; 4]; 3] {
        let p = &self.projection;
        [0, 1, 2].map(|r| [p[(r, 0)], p[(r, 1)], p[(r, 2)], p[(r, 3)]])
    }

    /// Pixel coordinates, or `None` for points on the camera plane.
    pub fn project(&self, x: &Vec3) -> Option<[f64; 2]> {
        let h = self.projection * Vector4::new(x.x, x.y, x.z, 1.0);
        if h.z.abs() < 1e-300 {
            return None;
        }
        Some([h.x / h.z, h.y / h.z])
    }

    /// Optical center: the right null vector of the projection.
    pub fn center(&self) -> Vec3 {
        let m: Matrix3<f64> = self.projection.fixed_view::<3, 3>(0, 0).into();
        let p4: Vec3 = self.projection.column(3).into();
        -(m.try_inverse().expect("validated nonsingular") * p4)
    }

    /// Unit direction of the ray through pixel `uv`.
    pub fn ray_direction(&self, uv: [f64; 2]) -> Vec3 {
        let m: Matrix3<f64> = self.projection.fixed_view::<3, 3>(0, 0).into();
        (m.try_inverse().expect("validated nonsingular") * Vec3::new(uv[0], uv[1], 1.0)).normalize()
    }
}

/// One view's 2D detections: `(u, v, confidence)` per joint, confidence 0 = missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoints2D {
    pub points: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    pub joints: Vec<Vec3>,
    pub valid: Vec<bool>,
    /// Reprojection RMS in pixels over the observing views (0 for invalid joints).
    pub reprojection_rms: Vec<f64>,
    /// Why a joint was rejected.
    pub diagnostics: Vec<Option<String>>,
}

impl Triangulation {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Minimum spread of the observing camera centers, meters.
const MIN_BASELINE: f64 = 1e-6;

/// Confidence-weighted DLT per joint.
pub fn triangulate_keypoints(views: &[(CameraView, Keypoints2D)]) -> Result<Triangulation> {
    let nj = views.first().map_or(0, |(_, k)| k.points.len());
    for (i, (_, k)) in views.iter().enumerate() {
        if k.points.len() != nj {
            return Err(Error::InvalidArgument(format!(
                "view {i} has {} keypoints, view 0 has {nj}",
                k.points.len()
            )));
        }
        for (j, p) in k.points.iter().enumerate() {
            if !p.iter().all(|v| v.is_finite()) || !(0.0..=1.0).contains(&p[2]) {
                return Err(Error::InvalidArgument(format!(
                    "view {i} joint {j}: keypoint {p:?} must be finite with confidence in [0, 1]"
                )));
            }
        }
    }
    let centers: Vec<Vec3> = views.iter().map(|(c, _)| c.center()).collect();
    let mut out = Triangulation {
        joints: vec![Vec3::zeros(); nj],
        valid: vec![false; nj],
        reprojection_rms: vec![0.0; nj],
        diagnostics: vec![None; nj],
    };
    for j in 0..nj {
        let obs: Vec<usize> = (0..views.len()).filter(|&i| views[i].1.points[j][2] > 0.0).collect();
        if obs.len() < 2 {
            out.diagnostics[j] = Some(format!("observed in {} view(s), need 2", obs.len()));
            continue;
        }
        let spread = obs
            .iter()
            .flat_map(|&a| obs.iter().map(move |&b| (a, b)))
            .map(|(a, b)| (centers[a] - centers[b]).norm())
            .fold(0.0, f64::max);
        if spread < MIN_BASELINE {
            out.diagnostics[j] = Some("observing cameras share one center".into());
            continue;
        }
        let mut a = DMatrix::<f64>::zeros(2 * obs.len(), 4);
        for (r, &i) in obs.iter().enumerate() {
            let p = views[i].0.matrix();
            let [u, v, conf] = views[i].1.points[j];
            for (k, coord) in [u, v].into_iter().enumerate() {
                let row = p.row(2) * coord - p.row(k);
                let n = row.norm();
                if n > 0.0 {
                    a.row_mut(2 * r + k).copy_from(&(row * (conf / n)));
                }
            }
        }
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("requested V^T");
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(k, _)| k)
            .unwrap();
        let h = vt.row(k);
        if h[3].abs() < 1e-12 * h.norm() {
            out.diagnostics[j] = Some("solution at infinity".into());
            continue;
        }
        let x = Vec3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]);
        let mut sq = 0.0;
        for &i in &obs {
            let [u, v, _] = views[i].1.points[j];
            match views[i].0.project(&x) {
                Some(uv) => sq += (uv[0] - u).powi(2) + (uv[1] - v).powi(2),
                None => sq = f64::INFINITY,
            }
        }
        out.joints[j] = x;
        out.valid[j] = true;
        out.reprojection_rms[j] = (sq / obs.len() as f64).sqrt();
    }
    Ok(out)
}
