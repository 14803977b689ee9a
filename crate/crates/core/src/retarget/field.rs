use sha2::{Digest, Sha256};

use crate::body::SparseRows;
use crate::error::{Error, Result};
use crate::geom::{interpolate_frame, vertex_frames, LocalFrame, Mat3, Mesh, TriangleBvh, Vec3};

/// Scan vertices expressed as offsets from their closest points on a body surface.
#[derive(Clone, Debug)]
pub struct DisplacementField {
    /// Row k holds the barycentric weights of scan vertex k on `bind_faces[k]`.
    pub connection: SparseRows,
    pub bind_faces: Vec<usize>,
    pub bind_bary: Vec<[f64; 3]>,
    pub displacements: Vec<Vec3>,
    pub bind_frames: Vec<LocalFrame>,
    topology: String,
}

/// Vertex positions produced by [`apply_field_parts`].
#[derive(Clone, Debug)]
pub struct AppliedField {
    /// Closest points carried to the new body, `A V'_t`.
    pub anchors: Vec<Vec3>,
    /// Per-vertex `R' R^T`.
    pub rotations: Vec<Mat3>,
    pub vertices: Vec<Vec3>,
}

fn topology_hash(mesh: &Mesh) -> Result<String> {
    let uvs = mesh
        .uvs
        .as_ref()
        .ok_or_else(|| Error::InvalidMesh("body mesh has no UVs; tangent frames need them".into()))?;
    let mut h = Sha256::new();
    h.update((mesh.vertices.len() as u64).to_le_bytes());
    for f in &mesh.faces {
        for &i in f {
            h.update((i as u64).to_le_bytes());
        }
    }
    for uv in uvs {
        h.update(uv[0].to_le_bytes());
        h.update(uv[1].to_le_bytes());
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn anchor(mesh: &Mesh, face: usize, bary: &[f64; 3]) -> Vec3 {
    let f = mesh.faces[face];
    mesh.vertices[f[0]] * bary[0] + mesh.vertices[f[1]] * bary[1] + mesh.vertices[f[2]] * bary[2]
}

fn clamp_bary(b: [f64; 3]) -> [f64; 3] {
    let c = [b[0].max(0.0), b[1].max(0.0), b[2].max(0.0)];
    let s = c[0] + c[1] + c[2];
    if s > 0.0 {
        [c[0] / s, c[1] / s, c[2] / s]
    } else {
        [1.0 / 3.0; 3]
    }
}

/// Bind every scan vertex to its closest point on `body`.
pub fn bind_field(scan: &Mesh, body: &Mesh) -> Result<DisplacementField> {
    let topology = topology_hash(body)?;
    if scan.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let bvh = TriangleBvh::build(body)?;
    let frames = vertex_frames(body)?;
    let n = scan.vertices.len();
    let mut triplets = Vec::with_capacity(3 * n);
    let mut bind_faces = Vec::with_capacity(n);
    let mut bind_bary = Vec::with_capacity(n);
    let mut displacements = Vec::with_capacity(n);
    let mut bind_frames = Vec::with_capacity(n);
    for (k, v) in scan.vertices.iter().enumerate() {
        let sp = bvh.closest_point(v);
        let bary = clamp_bary(sp.bary);
        let f = body.faces[sp.face];
        for c in 0..3 {
            triplets.push((k, f[c], bary[c]));
        }
        displacements.push(v - anchor(body, sp.face, &bary));
        bind_frames.push(interpolate_frame(body, &frames, sp.face, &bary)?);
        bind_faces.push(sp.face);
        bind_bary.push(bary);
    }
    Ok(DisplacementField {
        connection: SparseRows::from_triplets(n, body.vertices.len(), &triplets)?,
        bind_faces,
        bind_bary,
        displacements,
        bind_frames,
        topology,
    })
}

impl DisplacementField {
    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    /// `A V_t + D`.
    pub fn reconstruct(&self, body: &Mesh) -> Result<Vec<Vec3>> {
        self.check_topology(body)?;
        Ok((0..self.len())
            .map(|k| anchor(body, self.bind_faces[k], &self.bind_bary[k]) + self.displacements[k])
            .collect())
    }

    fn check_topology(&self, body: &Mesh) -> Result<()> {
        if topology_hash(body)? != self.topology {
            return Err(Error::InvalidMesh(
                "body mesh faces or UVs differ from the bind body".into(),
            ));
        }
        Ok(())
    }
}

/// Re-express the field on `new_body` and return every intermediate quantity.
pub fn apply_field_parts(field: &DisplacementField, new_body: &Mesh) -> Result<AppliedField> {
    field.check_topology(new_body)?;
    let frames = vertex_frames(new_body)?;
    let n = field.len();
    let mut anchors = Vec::with_capacity(n);
    let mut rotations = Vec::with_capacity(n);
    let mut vertices = Vec::with_capacity(n);
    for k in 0..n {
        let (face, bary) = (field.bind_faces[k], &field.bind_bary[k]);
        let a = anchor(new_body, face, bary);
        let r_new = interpolate_frame(new_body, &frames, face, bary)?;
        let rot = r_new.matrix() * field.bind_frames[k].matrix().transpose();
        vertices.push(a + rot * field.displacements[k]);
        anchors.push(a);
        rotations.push(rot);
    }
    Ok(AppliedField {
        anchors,
        rotations,
        vertices,
    })
}

/// New scan vertices for `new_body`: `A V'_t + R' R^T D` per vertex.
pub fn apply_field(field: &DisplacementField, new_body: &Mesh) -> Result<Vec<Vec3>> {
    Ok(apply_field_parts(field, new_body)?.vertices)
}

/// `A W`: skin weights carried from body vertices to scan vertices.
pub fn transfer_skinning(field: &DisplacementField, weights: &SparseRows) -> Result<SparseRows> {
    if weights.nrows() != field.connection.ncols() {
        return Err(Error::dim("body weight rows", field.connection.ncols(), weights.nrows()));
    }
    if let Err((row, msg)) = weights.check_stochastic(1e-9) {
        return Err(Error::InvalidArgument(format!("body weight row {row}: {msg}")));
    }
    let mut triplets = Vec::new();
    for k in 0..field.connection.nrows() {
        for (i, a) in field.connection.row(k) {
            for (j, w) in weights.row(i) {
                triplets.push((k, j, a * w));
            }
        }
    }
    SparseRows::from_triplets(field.connection.nrows(), weights.ncols(), &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::demo::demo_body;
    use crate::body::{PoseParams, ShapeParams};
    use crate::pipeline::synth::inflate;
    use nalgebra::Rotation3;

    fn demo_mesh() -> Mesh {
        let body = demo_body();
        body.pose_mesh(&PoseParams::identity(body.num_joints()), &ShapeParams::zeros(body.num_shapes()))
            .unwrap()
            .0
    }

    #[test]
    fn self_binding_is_exact() {
        let body = demo_mesh();
        let field = bind_field(&body, &body).unwrap();
        for k in 0..field.len() {
            assert!(field.displacements[k].norm() < 1e-12);
            let row: Vec<_> = field.connection.row(k).collect();
            let w: f64 = row.iter().filter(|(i, _)| *i == k).map(|(_, w)| w).sum();
            assert!((w - 1.0).abs() < 1e-9, "vertex {k}: {row:?}");
        }
    }

    #[test]
    fn offset_scan_displacements_follow_normals() {
        let body = crate::geom::shapes::uv_sphere_icosphere(3, 0.3);
        let scan = inflate(&body, 0.005);
        let field = bind_field(&scan, &body).unwrap();
        for k in 0..field.len() {
            let d = field.displacements[k];
            assert!((d.norm() - 0.005).abs() < 5e-4, "{k}: {}", d.norm());
            assert!(d.dot(&field.bind_frames[k].normal()) > 0.0);
        }
    }

    #[test]
    fn identities() {
        let body = demo_mesh();
        let scan = inflate(&body, 0.01);
        let field = bind_field(&scan, &body).unwrap();
        for (a, b) in field.reconstruct(&body).unwrap().iter().zip(&scan.vertices) {
            assert!((a - b).norm() < 1e-9);
        }
        for (a, b) in apply_field(&field, &body).unwrap().iter().zip(&scan.vertices) {
            assert!((a - b).norm() < 1e-9);
        }
        let q = *Rotation3::from_euler_angles(0.3, -1.1, 2.0).matrix();
        let t = Vec3::new(0.5, -2.0, 1.0);
        let moved = apply_field(&field, &body.transformed(&q, &t)).unwrap();
        for (a, b) in moved.iter().zip(&scan.vertices) {
            assert!((a - (q * b + t)).norm() < 1e-6);
        }
        let scaled = body.transformed(&(Mat3::identity() * 1.2), &Vec3::zeros());
        let parts = apply_field_parts(&field, &scaled).unwrap();
        for k in 0..field.len() {
            let d = (parts.vertices[k] - parts.anchors[k]).norm();
            assert!((d - field.displacements[k].norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn requires_uvs_and_same_topology() {
        let body = demo_mesh();
        let mut bare = body.clone();
        bare.uvs = None;
        assert!(bind_field(&body, &bare).is_err());
        let field = bind_field(&body, &body).unwrap();
        let mut other = body.clone();
        other.faces.swap(0, 1);
        assert!(apply_field(&field, &other).is_err());
    }

    #[test]
    fn skinning_matches_dense_product() {
        let body = demo_body();
        let mesh = demo_mesh();
        let scan = inflate(&mesh, 0.01);
        let field = bind_field(&scan, &mesh).unwrap();
        let out = transfer_skinning(&field, body.skin_weights()).unwrap();
        let a = field.connection.to_dense();
        let w = body.skin_weights().to_dense();
        let dense = out.to_dense();
        for k in (0..field.len()).step_by(7) {
            for j in 0..body.num_joints() {
                let expect: f64 = (0..w.len()).map(|i| a[k][i] * w[i][j]).sum();
                assert!((dense[k][j] - expect).abs() < 1e-12);
            }
        }
        assert!(out.check_stochastic(1e-9).is_ok());
        let short = SparseRows::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0)]).unwrap();
        assert!(transfer_skinning(&field, &short).is_err());
    }
}
