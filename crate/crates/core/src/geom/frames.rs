use super::{Mat3, Mesh, Vec3};
use crate::error::{Error, Result};

/// Orthonormal tangent frame stored as a rotation with columns
/// (tangent, normal, bitangent) and bitangent = tangent × normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame(pub Mat3);

impl LocalFrame {
    /// Gram–Schmidt `tangent` against the unit `normal`. `None` if they are (nearly) parallel.
    pub fn from_tangent_normal(tangent: &Vec3, normal: &Vec3) -> Option<Self> {
        let n = normal.try_normalize(0.0)?;
        let t = tangent - n * n.dot(tangent);
        let len = t.norm();
        if !(len > 1e-12 * tangent.norm().max(1e-300)) {
            return None;
        }
        let t = t / len;
        let b = t.cross(&n);
        Some(LocalFrame(Mat3::from_columns(&[t, n, b])))
    }

    pub fn tangent(&self) -> Vec3 {
        self.0.column(0).into()
    }

    pub fn normal(&self) -> Vec3 {
        self.0.column(1).into()
    }

    pub fn bitangent(&self) -> Vec3 {
        self.0.column(2).into()
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// max |RᵀR − I| and |det R − 1|.
    pub fn orthonormality_error(&self) -> (f64, f64) {
        let e = (self.0.transpose() * self.0 - Mat3::identity()).abs().max();
        (e, (self.0.determinant() - 1.0).abs())
    }
}

fn any_perpendicular(n: &Vec3) -> Vec3 {
    let a = n.abs();
    let axis = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    axis - n * n.dot(&axis)
}

/// Per-vertex tangent frames derived from the UV parameterization.
///
/// Each face contributes its unit UV-gradient direction ∂p/∂u weighted by
/// its area; faces whose UV triangle has zero area are skipped. The
/// accumulated tangent is orthogonalized against the vertex normal (stored
/// normals, else area-weighted face normals).
///
/// A vertex left without a usable tangent takes the direction of the edge to
/// its lowest-indexed neighbor, projected into the tangent plane. This keeps
/// the fallback rigid-motion equivariant. Isolated vertices use the world axis
/// least aligned with the normal.
pub fn vertex_frames(mesh: &Mesh) -> Result<Vec<LocalFrame>> {
    let uvs = mesh
        .uvs
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("tangent frames need per-vertex UVs".into()))?;
    let normals = mesh.normals_or_computed();
    let n = mesh.vertices.len();

    let mut acc = vec![Vec3::zeros(); n];
    let mut weight = vec![0.0; n];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let [p0, p1, p2] = mesh.triangle(fi);
        let (t0, t1, t2) = (uvs[f[0]], uvs[f[1]], uvs[f[2]]);
        let (du1, dv1) = (t1[0] - t0[0], t1[1] - t0[1]);
        let (du2, dv2) = (t2[0] - t0[0], t2[1] - t0[1]);
        let det = du1 * dv2 - du2 * dv1;
        if det.abs() < 1e-14 {
            continue;
        }
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        let dp_du = (e1 * dv2 - e2 * dv1) / det;
        let Some(dir) = dp_du.try_normalize(0.0) else {
            continue;
        };
        let area = 0.5 * e1.cross(&e2).norm();
        for &i in f {
            acc[i] += dir * area;
            weight[i] += area;
        }
    }

    let mut neighbors: Option<Vec<Vec<usize>>> = None;
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let nrm = normals[i];
        if weight[i] > 0.0 {
            let t = acc[i] - nrm * nrm.dot(&acc[i]);
            if t.norm() > 1e-6 * weight[i] {
                if let Some(fr) = LocalFrame::from_tangent_normal(&t, &nrm) {
                    frames.push(fr);
                    continue;
                }
            }
        }
        let adj = neighbors.get_or_insert_with(|| adjacency(mesh));
        let mut frame = None;
        for &j in &adj[i] {
            let e = mesh.vertices[j] - mesh.vertices[i];
            let ep = e - nrm * nrm.dot(&e);
            if ep.norm() > 1e-9 * e.norm() {
                frame = LocalFrame::from_tangent_normal(&ep, &nrm);
                if frame.is_some() {
                    break;
                }
            }
        }
        let frame = frame
            .or_else(|| LocalFrame::from_tangent_normal(&any_perpendicular(&nrm), &nrm))
            .expect("perpendicular axis always exists for a unit normal");
        frames.push(frame);
    }
    Ok(frames)
}

fn adjacency(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.vertices.len()];
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Frame at a point inside `face`: barycentric blend of the vertex normals and
/// tangents followed by Gram–Schmidt.
pub fn interpolate_frame(
    mesh: &Mesh,
    frames: &[LocalFrame],
    face: usize,
    bary: &[f64; 3],
) -> Result<LocalFrame> {
    let f = *mesh
        .faces
        .get(face)
        .ok_or_else(|| Error::InvalidArgument(format!("face index {face} out of range")))?;
    if frames.len() != mesh.vertices.len() {
        return Err(Error::dim("frame count", mesh.vertices.len(), frames.len()));
    }
    let mut n = Vec3::zeros();
    let mut t = Vec3::zeros();
    for k in 0..3 {
        n += frames[f[k]].normal() * bary[k];
        t += frames[f[k]].tangent() * bary[k];
    }
    let n = match n.try_normalize(1e-12) {
        Some(n) => n,
        None => mesh
            .face_cross(face)
            .try_normalize(0.0)
            .unwrap_or_else(Vec3::z),
    };
    if let Some(fr) = LocalFrame::from_tangent_normal(&t, &n) {
        return Ok(fr);
    }
    let dominant = (0..3)
        .max_by(|&a, &b| bary[a].total_cmp(&bary[b]).then(b.cmp(&a)))
        .unwrap();
    let fr = LocalFrame::from_tangent_normal(&frames[f[dominant]].tangent(), &n)
        .or_else(|| LocalFrame::from_tangent_normal(&any_perpendicular(&n), &n))
        .expect("perpendicular axis always exists for a unit normal");
    Ok(fr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;
    use nalgebra::Rotation3;

    fn quad() -> Mesh {
        shapes::grid_plane(4, 4, 2.0)
    }

    fn assert_close(a: &Vec3, b: &Vec3, tol: f64) {
        assert!((a - b).norm() < tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn missing_uvs_is_an_error() {
        let m = shapes::cube(1.0);
        assert!(vertex_frames(&m).is_err());
    }

    #[test]
    fn identity_uv_quad() {
        let m = quad();
        for fr in vertex_frames(&m).unwrap() {
            assert_close(&fr.tangent(), &Vec3::x(), 1e-12);
            assert_close(&fr.normal(), &Vec3::z(), 1e-12);
            assert_close(&fr.bitangent(), &-Vec3::y(), 1e-12);
        }
    }

    #[test]
    fn rotated_quad_rotates_frames() {
        let m = quad();
        let q = Rotation3::from_euler_angles(0.3, -1.1, 2.0).into_inner();
        let r = m.transformed(&q, &Vec3::new(1.0, 2.0, 3.0));
        let a = vertex_frames(&m).unwrap();
        let b = vertex_frames(&r).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            assert!((q * fa.0 - fb.0).abs().max() < 1e-12);
        }
    }

    #[test]
    fn sphere_frames_are_rotations() {
        let m = shapes::uv_sphere_icosphere(3, 1.0);
        for fr in vertex_frames(&m).unwrap() {
            let (o, d) = fr.orthonormality_error();
            assert!(o < 1e-6 && d < 1e-6);
        }
    }

    #[test]
    fn zero_area_uv_faces_fall_back_to_edges() {
        let mut m = quad();
        m.uvs = Some(vec![[0.5, 0.5]; m.vertices.len()]);
        let frames = vertex_frames(&m).unwrap();
        for fr in frames {
            let (o, d) = fr.orthonormality_error();
            assert!(o < 1e-12 && d < 1e-12);
            assert_close(&fr.normal(), &Vec3::z(), 1e-12);
        }
    }

    #[test]
    fn interpolation_at_vertex_and_constant_field() {
        let m = quad();
        let frames = vertex_frames(&m).unwrap();
        let f = m.faces[3];
        let at_vertex = interpolate_frame(&m, &frames, 3, &[0.0, 1.0, 0.0]).unwrap();
        assert!((at_vertex.0 - frames[f[1]].0).abs().max() < 1e-12);
        let inside = interpolate_frame(&m, &frames, 3, &[0.2, 0.3, 0.5]).unwrap();
        assert!((inside.0 - frames[f[0]].0).abs().max() < 1e-12);
        assert!(interpolate_frame(&m, &frames, 10_000, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn interpolation_is_continuous() {
        let m = shapes::uv_sphere_icosphere(2, 1.0);
        let frames = vertex_frames(&m).unwrap();
        for face in (0..m.faces.len()).step_by(7) {
            let b0 = [0.3, 0.3, 0.4];
            let b1 = [0.3 + 1e-6, 0.3, 0.4 - 1e-6];
            let a = interpolate_frame(&m, &frames, face, &b0).unwrap();
            let b = interpolate_frame(&m, &frames, face, &b1).unwrap();
            let (o, d) = a.orthonormality_error();
            assert!(o < 1e-6 && d < 1e-6);
            assert!((a.0 - b.0).norm() < 1e-4);
        }
    }
}
