use crate::body::{PoseParams, ShapeParams, IDENTITY_6D};
use crate::error::{Error, Result};
use crate::geom::{classify_inside, ClosestMode, Mesh, TriangleBvh, Vec3};

use super::FitConfig;

/// Mean Euclidean distance over valid joints, meters.
pub fn joint_loss(jt: &[Vec3], js: &[Vec3], valid: &[bool]) -> Result<f64> {
    Ok(joint_loss_grad(jt, js, valid)?.0)
}

/// [`joint_loss`] and its gradient with respect to `jt`.
pub fn joint_loss_grad(jt: &[Vec3], js: &[Vec3], valid: &[bool]) -> Result<(f64, Vec<Vec3>)> {
    if jt.len() != js.len() {
        return Err(Error::dim("joint targets", jt.len(), js.len()));
    }
    if valid.len() != jt.len() {
        return Err(Error::dim("joint validity flags", jt.len(), valid.len()));
    }
    let count = valid.iter().filter(|v| **v).count();
    if count == 0 {
        return Err(Error::InvalidArgument("no valid joints".into()));
    }
    let inv = 1.0 / count as f64;
    let mut sum = 0.0;
    let mut grad = vec![Vec3::zeros(); jt.len()];
    for j in 0..jt.len() {
        if !valid[j] {
            continue;
        }
        let d = jt[j] - js[j];
        let n = d.norm();
        sum += n;
        if n > 0.0 {
            grad[j] = d * (inv / n);
        }
    }
    Ok((sum * inv, grad))
}

/// Squared deviation of the joint rotations from the identity encoding.
pub fn pose_prior(theta: &PoseParams) -> f64 {
    theta
        .joint_rotations
        .iter()
        .flat_map(|r| r.iter().zip(IDENTITY_6D.iter()).map(|(a, b)| (a - b) * (a - b)))
        .sum()
}

pub fn shape_prior(beta: &ShapeParams) -> f64 {
    beta.squared_norm()
}

/// `pose_prior + shape_prior`; the global rotation and translation are not penalized.
pub fn prior_loss(theta: &PoseParams, beta: &ShapeParams) -> f64 {
    pose_prior(theta) + shape_prior(beta)
}

/// Closest scan points and inside labels, held fixed during one outer iteration.
#[derive(Clone, Debug)]
pub struct Correspondences {
    pub targets: Vec<Vec3>,
    pub inside: Vec<bool>,
}

impl Correspondences {
    pub fn compute(vertices: &[Vec3], scan: &Mesh, bvh: &TriangleBvh, mode: ClosestMode) -> Self {
        let (inside_idx, _) = classify_inside(scan, vertices);
        let mut inside = vec![false; vertices.len()];
        for i in inside_idx {
            inside[i] = true;
        }
        let targets = vertices.iter().map(|v| bvh.query(v, mode).position).collect();
        Correspondences { targets, inside }
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|v| **v).count()
    }
}

/// Inside/outside weighted sum of closest distances to the scan.
///
/// Returns `(value, inside count, outside count)`.
pub fn icp_loss(
    vertices: &[Vec3],
    scan_bvh: &TriangleBvh,
    scan: &Mesh,
    cfg: &FitConfig,
) -> Result<(f64, usize, usize)> {
    if scan.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let corr = Correspondences::compute(vertices, scan, scan_bvh, cfg.closest_mode);
    let (value, _) = frozen_icp_loss(vertices, &corr, cfg)?;
    let inside = corr.inside_count();
    Ok((value, inside, vertices.len() - inside))
}

/// The inside/outside loss against frozen targets and labels, with its gradient.
pub fn frozen_icp_loss(
    vertices: &[Vec3],
    corr: &Correspondences,
    cfg: &FitConfig,
) -> Result<(f64, Vec<Vec3>)> {
    if corr.targets.len() != vertices.len() {
        return Err(Error::dim("correspondences", vertices.len(), corr.targets.len()));
    }
    let mut value = 0.0;
    let mut grad = vec![Vec3::zeros(); vertices.len()];
    for (i, (p, q)) in vertices.iter().zip(&corr.targets).enumerate() {
        let lambda = if corr.inside[i] { cfg.lambda_i } else { cfg.lambda_o };
        let d = p - q;
        let n = d.norm();
        value += lambda * n;
        if n > 0.0 {
            grad[i] = d * (lambda / n);
        }
    }
    Ok((value, grad))
}
