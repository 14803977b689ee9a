use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::rot6d::{rot6d_backward, rot6d_to_matrix, IDENTITY_6D};
use super::skeleton::{linear_blend_skin, validate_parents, Skeleton, WorldTransforms};
use super::SparseRows;
use crate::error::{Error, Result};
use crate::geom::{DegeneratePolicy, Mat3, Mesh, Vec3};

/// Linear shape coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub beta: Vec<f64>,
}

impl ShapeParams {
    pub fn zeros(dim: usize) -> Self {
        ShapeParams {
            beta: vec![0.0; dim],
        }
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn squared_norm(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum()
    }
}

/// Global rigid motion plus per-joint local rotations, all rotations in 6D form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseParams {
    pub global_rotation: [f64; 6],
    pub translation: [f64; 3],
    pub joint_rotations: Vec<[f64; 6]>,
}

impl PoseParams {
    pub fn identity(joints: usize) -> Self {
        PoseParams {
            global_rotation: IDENTITY_6D,
            translation: [0.0; 3],
            joint_rotations: vec![IDENTITY_6D; joints],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.global_rotation.iter().all(|v| v.is_finite())
            && self.translation.iter().all(|v| v.is_finite())
            && self.joint_rotations.iter().flatten().all(|v| v.is_finite())
    }
}

/// Parameter gradient in the same layout as ([`PoseParams`], [`ShapeParams`]).
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGradient {
    pub global_rotation: [f64; 6],
    pub translation: [f64; 3],
    pub joint_rotations: Vec<[f64; 6]>,
    pub beta: Vec<f64>,
}

/// Every intermediate of one forward evaluation, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct PoseEvaluation {
    pub shaped: Vec<Vec3>,
    pub rest_joints: Vec<Vec3>,
    pub local: Vec<Mat3>,
    /// Joint transforms before the global motion.
    pub world: WorldTransforms,
    pub global: Mat3,
    pub translation: Vec3,
    /// Skinned vertices before the global motion.
    pub skinned: Vec<Vec3>,
    pub vertices: Vec<Vec3>,
    pub joints: Vec<Vec3>,
}

/// Articulated body: rest mesh, linear blendshapes, joint tree, joint
/// regressor and skinning weights.
#[derive(Clone, Debug)]
pub struct ParametricBody {
    template: Mesh,
    blendshapes: Vec<Vec<Vec3>>,
    parents: Vec<Option<usize>>,
    joint_names: Vec<String>,
    joint_regressor: SparseRows,
    skin_weights: SparseRows,
    max_influences: usize,
}

pub const DEFAULT_MAX_INFLUENCES: usize = 4;

impl ParametricBody {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rest_vertices: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        uvs: Option<Vec<[f64; 2]>>,
        blendshapes: Vec<Vec<Vec3>>,
        parents: Vec<Option<usize>>,
        joint_names: Vec<String>,
        joint_regressor: SparseRows,
        skin_weights: SparseRows,
        max_influences: usize,
    ) -> Result<Self> {
        let template = Mesh::with_attributes(rest_vertices, faces, uvs, None, DegeneratePolicy::Reject)
            .map_err(|e| Error::InvalidBody(format!("rest mesh: {e}")))?;
        let n = template.vertices.len();
        validate_parents(&parents)?;
        let j = parents.len();
        for (s, shape) in blendshapes.iter().enumerate() {
            if shape.len() != n {
                return Err(Error::InvalidBody(format!(
                    "blendshape {s} has {} offsets for {n} vertices",
                    shape.len()
                )));
            }
            if shape.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
                return Err(Error::InvalidBody(format!("blendshape {s} is not finite")));
            }
        }
        if !joint_names.is_empty() && joint_names.len() != j {
            return Err(Error::InvalidBody(format!(
                "{} joint names for {j} joints",
                joint_names.len()
            )));
        }
        if joint_regressor.nrows() != j || joint_regressor.ncols() != n {
            return Err(Error::InvalidBody(format!(
                "joint_regressor is {}x{}, expected {j}x{n}",
                joint_regressor.nrows(),
                joint_regressor.ncols()
            )));
        }
        if let Err((r, msg)) = joint_regressor.check_stochastic(1e-6) {
            return Err(Error::InvalidBody(format!("joint_regressor row {r}: {msg}")));
        }
        if skin_weights.nrows() != n || skin_weights.ncols() != j {
            return Err(Error::InvalidBody(format!(
                "skin_weights is {}x{}, expected {n}x{j}",
                skin_weights.nrows(),
                skin_weights.ncols()
            )));
        }
        if let Err((r, msg)) = skin_weights.check_stochastic(1e-6) {
            return Err(Error::InvalidBody(format!("skin_weights row {r}: {msg}")));
        }
        if max_influences == 0 {
            return Err(Error::InvalidBody("max_influences must be positive".into()));
        }
        if let Some(r) = (0..n).find(|&r| skin_weights.row_nnz(r) > max_influences) {
            return Err(Error::InvalidBody(format!(
                "skin_weights row {r} has {} influences (max {max_influences})",
                skin_weights.row_nnz(r)
            )));
        }
        Ok(ParametricBody {
            template,
            blendshapes,
            parents,
            joint_names,
            joint_regressor,
            skin_weights,
            max_influences,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.template.vertices.len()
    }

    pub fn num_joints(&self) -> usize {
        self.parents.len()
    }

    pub fn num_shapes(&self) -> usize {
        self.blendshapes.len()
    }

    pub fn template(&self) -> &Mesh {
        &self.template
    }

    pub fn rest_vertices(&self) -> &[Vec3] {
        &self.template.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.template.faces
    }

    pub fn blendshapes(&self) -> &[Vec<Vec3>] {
        &self.blendshapes
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn joint_regressor(&self) -> &SparseRows {
        &self.joint_regressor
    }

    pub fn skin_weights(&self) -> &SparseRows {
        &self.skin_weights
    }

    pub fn max_influences(&self) -> usize {
        self.max_influences
    }

    fn check_beta(&self, beta: &ShapeParams) -> Result<()> {
        if beta.len() != self.num_shapes() {
            return Err(Error::dim("shape parameters", self.num_shapes(), beta.len()));
        }
        if !beta.beta.iter().all(|b| b.is_finite()) {
            return Err(Error::InvalidArgument("shape parameters are not finite".into()));
        }
        Ok(())
    }

    /// Rest vertices plus the beta-weighted blendshape offsets.
    pub fn shape_mesh(&self, beta: &ShapeParams) -> Result<Vec<Vec3>> {
        self.check_beta(beta)?;
        let mut out = self.template.vertices.clone();
        for (b, shape) in beta.beta.iter().zip(&self.blendshapes) {
            if *b == 0.0 {
                continue;
            }
            for (v, d) in out.iter_mut().zip(shape) {
                *v += d * *b;
            }
        }
        Ok(out)
    }

    pub fn regress_joints(&self, vertices: &[Vec3]) -> Vec<Vec3> {
        (0..self.num_joints())
            .map(|j| {
                self.joint_regressor
                    .row(j)
                    .fold(Vec3::zeros(), |acc, (i, w)| acc + vertices[i] * w)
            })
            .collect()
    }

    /// Skeleton whose rest joints are regressed from the shaped rest mesh.
    pub fn skeleton(&self, beta: &ShapeParams) -> Result<Skeleton> {
        let shaped = self.shape_mesh(beta)?;
        Skeleton::new(self.parents.clone(), self.regress_joints(&shaped))
    }

    pub fn evaluate(&self, theta: &PoseParams, beta: &ShapeParams) -> Result<PoseEvaluation> {
        if theta.joint_rotations.len() != self.num_joints() {
            return Err(Error::dim(
                "joint rotations",
                self.num_joints(),
                theta.joint_rotations.len(),
            ));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("pose parameters are not finite".into()));
        }
        let shaped = self.shape_mesh(beta)?;
        let rest_joints = self.regress_joints(&shaped);
        let local = theta
            .joint_rotations
            .iter()
            .map(rot6d_to_matrix)
            .collect::<Result<Vec<_>>>()?;
        let skeleton = Skeleton {
            parents: self.parents.clone(),
            rest_joints: rest_joints.clone(),
        };
        let world = skeleton.forward(&local)?;
        let skinned = linear_blend_skin(&shaped, &rest_joints, &self.skin_weights, &world)?;
        let global = rot6d_to_matrix(&theta.global_rotation)?;
        let translation = Vec3::from(theta.translation);
        let vertices = skinned.iter().map(|u| global * u + translation).collect();
        let joints = world
            .translations
            .iter()
            .map(|t| global * t + translation)
            .collect();
        Ok(PoseEvaluation {
            shaped,
            rest_joints,
            local,
            world,
            global,
            translation,
            skinned,
            vertices,
            joints,
        })
    }

    /// Posed mesh (sharing the body's faces and UVs) and posed joints.
    pub fn pose_mesh(&self, theta: &PoseParams, beta: &ShapeParams) -> Result<(Mesh, Vec<Vec3>)> {
        let ev = self.evaluate(theta, beta)?;
        let mesh = Mesh {
            vertices: ev.vertices,
            faces: self.template.faces.clone(),
            uvs: self.template.uvs.clone(),
            normals: None,
        };
        Ok((mesh, ev.joints))
    }

    pub fn model_joints(&self, theta: &PoseParams, beta: &ShapeParams) -> Result<Vec<Vec3>> {
        Ok(self.evaluate(theta, beta)?.joints)
    }

    /// World transforms (global motion included) that [`Self::pose_mesh`] skins with.
    pub fn world_transforms(&self, theta: &PoseParams, beta: &ShapeParams) -> Result<WorldTransforms> {
        let ev = self.evaluate(theta, beta)?;
        let mut w = ev.world;
        w.apply_global(&ev.global, &ev.translation);
        Ok(w)
    }

    /// Reverse-mode gradient of a scalar loss given its gradient with respect
    /// to the posed vertices and the posed joints.
    pub fn backward(
        &self,
        theta: &PoseParams,
        ev: &PoseEvaluation,
        grad_vertices: &[Vec3],
        grad_joints: &[Vec3],
    ) -> Result<ParamGradient> {
        let n = self.num_vertices();
        let nj = self.num_joints();
        if grad_vertices.len() != n {
            return Err(Error::dim("vertex gradient", n, grad_vertices.len()));
        }
        if grad_joints.len() != nj {
            return Err(Error::dim("joint gradient", nj, grad_joints.len()));
        }
        let g = &ev.global;
        let gt = g.transpose();

        // v = G u + t,  P = G t_j + t
        let mut grad_trans = Vec3::zeros();
        let mut grad_global = Mat3::zeros();
        let mut grad_skinned = Vec::with_capacity(n);
        for (gv, u) in grad_vertices.iter().zip(&ev.skinned) {
            grad_trans += gv;
            grad_global += gv * u.transpose();
            grad_skinned.push(gt * gv);
        }
        let mut grad_t = vec![Vec3::zeros(); nj];
        for (j, gp) in grad_joints.iter().enumerate() {
            grad_trans += gp;
            grad_global += gp * ev.world.translations[j].transpose();
            grad_t[j] = gt * gp;
        }

        // LBS: u_i = Σ_j w_ij (A_j (x_i - c_j) + t_j)
        let mut grad_a = vec![Mat3::zeros(); nj];
        let mut grad_c = vec![Vec3::zeros(); nj];
        let mut grad_x = vec![Vec3::zeros(); n];
        for i in 0..n {
            let gu = grad_skinned[i];
            if gu == Vec3::zeros() {
                continue;
            }
            let x = ev.shaped[i];
            for (j, w) in self.skin_weights.row(i) {
                let a = &ev.world.rotations[j];
                let wg = gu * w;
                grad_a[j] += wg * (x - ev.rest_joints[j]).transpose();
                grad_t[j] += wg;
                let atg = a.transpose() * wg;
                grad_c[j] -= atg;
                grad_x[i] += atg;
            }
        }

        // Forward kinematics, children before parents.
        let mut grad_local = vec![Mat3::zeros(); nj];
        for j in (0..nj).rev() {
            match self.parents[j] {
                None => {
                    grad_local[j] = grad_a[j];
                    grad_c[j] += grad_t[j];
                }
                Some(p) => {
                    let ap = ev.world.rotations[p];
                    let gtj = grad_t[j];
                    grad_t[p] += gtj;
                    grad_a[p] += gtj * (ev.rest_joints[j] - ev.rest_joints[p]).transpose();
                    let apt_g = ap.transpose() * gtj;
                    grad_c[j] += apt_g;
                    grad_c[p] -= apt_g;
                    let gaj = grad_a[j];
                    grad_a[p] += gaj * ev.local[j].transpose();
                    grad_local[j] = ap.transpose() * gaj;
                }
            }
        }

        // Joint regression: c_j = Σ_i R_ji x_i
        for (j, gc) in grad_c.iter().enumerate() {
            for (i, r) in self.joint_regressor.row(j) {
                grad_x[i] += gc * r;
            }
        }

        let beta = self
            .blendshapes
            .iter()
            .map(|shape| shape.iter().zip(&grad_x).map(|(d, gx)| d.dot(gx)).sum())
            .collect();
        let joint_rotations = theta
            .joint_rotations
            .iter()
            .zip(&grad_local)
            .map(|(r, gl)| rot6d_backward(r, gl))
            .collect::<Result<Vec<_>>>()?;
        let global_rotation = rot6d_backward(&theta.global_rotation, &grad_global)?;

        Ok(ParamGradient {
            global_rotation,
            translation: [grad_trans.x, grad_trans.y, grad_trans.z],
            joint_rotations,
            beta,
        })
    }
}

/// Deterministic Gaussian shape sample with standard deviation `scale`.
pub fn sample_shape(seed: u64, scale: f64, dim: usize) -> Result<ShapeParams> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("shape sample scale {scale} must be >= 0")));
    }
    if scale == 0.0 {
        return Ok(ShapeParams::zeros(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, scale).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ShapeParams {
        beta: (0..dim).map(|_| normal.sample(&mut rng)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::demo::demo_body;
    use crate::body::rot6d::matrix_to_rot6d;
    use nalgebra::Rotation3;

    fn body() -> ParametricBody {
        demo_body()
    }

    fn random_pose(seed: u64, joints: usize, scale: f64) -> PoseParams {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rot = |s: f64| {
            let r = Rotation3::from_scaled_axis(Vec3::new(
                rng.gen_range(-s..s),
                rng.gen_range(-s..s),
                rng.gen_range(-s..s),
            ));
            matrix_to_rot6d(r.matrix())
        };
        let global_rotation = rot(1.0);
        let joint_rotations = (0..joints).map(|_| rot(scale)).collect();
        PoseParams {
            global_rotation,
            translation: [0.3, -0.2, 0.1],
            joint_rotations,
        }
    }

    #[test]
    fn zero_beta_is_rest() {
        let b = body();
        assert_eq!(b.shape_mesh(&ShapeParams::zeros(b.num_shapes())).unwrap(), b.rest_vertices());
    }

    #[test]
    fn shape_is_linear() {
        let b = body();
        let s = b.num_shapes();
        let mut e1 = ShapeParams::zeros(s);
        e1.beta[0] = 1.0;
        let mut e1x2 = ShapeParams::zeros(s);
        e1x2.beta[0] = 2.0;
        let one = b.shape_mesh(&e1).unwrap();
        let two = b.shape_mesh(&e1x2).unwrap();
        for i in 0..b.num_vertices() {
            let d1 = one[i] - b.rest_vertices()[i];
            assert!((d1 - b.blendshapes()[0][i]).norm() < 1e-12);
            assert!((two[i] - b.rest_vertices()[i] - d1 * 2.0).norm() < 1e-12);
        }
        assert!(b.shape_mesh(&ShapeParams::zeros(s + 1)).is_err());
    }

    #[test]
    fn identity_pose_reproduces_rest() {
        let b = body();
        let (m, joints) = b
            .pose_mesh(&PoseParams::identity(b.num_joints()), &ShapeParams::zeros(b.num_shapes()))
            .unwrap();
        for (p, q) in m.vertices.iter().zip(b.rest_vertices()) {
            assert!((p - q).norm() < 1e-9);
        }
        let regressed = b.regress_joints(b.rest_vertices());
        for (p, q) in joints.iter().zip(&regressed) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn translation_shifts_joints() {
        let b = body();
        let beta = ShapeParams::zeros(b.num_shapes());
        let mut theta = PoseParams::identity(b.num_joints());
        let base = b.model_joints(&theta, &beta).unwrap();
        theta.translation = [0.5, -1.0, 2.0];
        let moved = b.model_joints(&theta, &beta).unwrap();
        for (p, q) in base.iter().zip(&moved) {
            assert!((q - p - Vec3::new(0.5, -1.0, 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn lbs_matches_naive_per_vertex_sum() {
        let b = body();
        let theta = random_pose(3, b.num_joints(), 0.5);
        let beta = sample_shape(9, 1.0, b.num_shapes()).unwrap();
        let (m, _) = b.pose_mesh(&theta, &beta).unwrap();

        // Oracle: recompute every transform from scratch per vertex, walking
        // the parent chain with dense weights.
        let shaped = b.shape_mesh(&beta).unwrap();
        let rest = b.regress_joints(&shaped);
        let dense = b.skin_weights().to_dense();
        let g = rot6d_to_matrix(&theta.global_rotation).unwrap();
        let t = Vec3::from(theta.translation);
        let chain_transform = |j: usize| -> (Mat3, Vec3) {
            let mut path = vec![j];
            while let Some(p) = b.parents()[*path.last().unwrap()] {
                path.push(p);
            }
            path.reverse();
            let mut a = Mat3::identity();
            let mut pos = rest[path[0]];
            for (k, &jj) in path.iter().enumerate() {
                if k > 0 {
                    pos += a * (rest[jj] - rest[path[k - 1]]);
                }
                a *= rot6d_to_matrix(&theta.joint_rotations[jj]).unwrap();
            }
            (a, pos)
        };
        let transforms: Vec<(Mat3, Vec3)> = (0..b.num_joints()).map(chain_transform).collect();
        for i in 0..b.num_vertices() {
            let mut v = Vec3::zeros();
            for j in 0..b.num_joints() {
                let w = dense[i][j];
                if w != 0.0 {
                    let (a, p) = transforms[j];
                    v += (g * (a * (shaped[i] - rest[j]) + p) + t) * w;
                }
            }
            assert!((v - m.vertices[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn one_hot_vertex_at_joint_reproduces_posed_joint() {
        let b = body();
        let theta = random_pose(5, b.num_joints(), 0.6);
        let beta = sample_shape(2, 1.0, b.num_shapes()).unwrap();
        let world = b.world_transforms(&theta, &beta).unwrap();
        let joints = b.model_joints(&theta, &beta).unwrap();
        let rest = b.skeleton(&beta).unwrap().rest_joints;
        for j in 0..b.num_joints() {
            let v = world.rotations[j] * (rest[j] - rest[j]) + world.translations[j];
            assert!((v - joints[j]).norm() < 1e-9);
        }
    }

    #[test]
    fn global_motion_folds_into_parameters() {
        let b = body();
        let beta = sample_shape(4, 1.0, b.num_shapes()).unwrap();
        let mut theta = random_pose(8, b.num_joints(), 0.4);
        theta.global_rotation = IDENTITY_6D;
        theta.translation = [0.0; 3];
        let (m0, _) = b.pose_mesh(&theta, &beta).unwrap();
        let q = Rotation3::from_euler_angles(0.4, 0.9, -2.2).into_inner();
        let tr = Vec3::new(1.0, -2.0, 0.5);
        theta.global_rotation = matrix_to_rot6d(&q);
        theta.translation = [tr.x, tr.y, tr.z];
        let (m1, _) = b.pose_mesh(&theta, &beta).unwrap();
        for (p, r) in m0.vertices.iter().zip(&m1.vertices) {
            assert!((q * p + tr - r).norm() < 1e-6);
        }
    }

    #[test]
    fn root_one_hot_weights_give_rigid_motion() {
        let b = body();
        let n = b.num_vertices();
        let trip: Vec<_> = (0..n).map(|i| (i, 0usize, 1.0)).collect();
        let weights = SparseRows::from_triplets(n, b.num_joints(), &trip).unwrap();
        let rigid = ParametricBody::new(
            b.rest_vertices().to_vec(),
            b.faces().to_vec(),
            b.template().uvs.clone(),
            b.blendshapes().to_vec(),
            b.parents().to_vec(),
            vec![],
            b.joint_regressor().clone(),
            weights,
            4,
        )
        .unwrap();
        let theta = random_pose(6, b.num_joints(), 0.7);
        let beta = sample_shape(1, 1.0, b.num_shapes()).unwrap();
        let (m, joints) = rigid.pose_mesh(&theta, &beta).unwrap();
        let shaped = rigid.shape_mesh(&beta).unwrap();
        let c0 = rigid.regress_joints(&shaped)[0];
        let g = rot6d_to_matrix(&theta.global_rotation).unwrap();
        let a0 = g * rot6d_to_matrix(&theta.joint_rotations[0]).unwrap();
        for (x, v) in shaped.iter().zip(&m.vertices) {
            assert!((a0 * (x - c0) + joints[0] - v).norm() < 1e-9);
        }
    }

    #[test]
    fn sample_shape_properties() {
        assert_eq!(sample_shape(7, 1.0, 4).unwrap(), sample_shape(7, 1.0, 4).unwrap());
        assert_eq!(sample_shape(7, 0.0, 4).unwrap(), ShapeParams::zeros(4));
        assert!(sample_shape(7, -1.0, 4).is_err());

        let dim = 4;
        let n = 10_000;
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        for seed in 0..n {
            let s = sample_shape(seed as u64, 1.0, dim).unwrap();
            for k in 0..dim {
                sum[k] += s.beta[k];
                sq[k] += s.beta[k] * s.beta[k];
            }
        }
        for k in 0..dim {
            let mean = sum[k] / n as f64;
            let var = sq[k] / n as f64 - mean * mean;
            assert!(mean.abs() < 0.05, "mean {mean}");
            assert!((var - 1.0).abs() < 0.1, "var {var}");
        }
    }
}
