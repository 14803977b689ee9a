use sha2::{Digest, Sha256};

use super::{Aabb, Mat3, Vec3};
use crate::error::{Error, Result};

/// Faces with area at or below this (m²) are degenerate.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// What to do with zero-area faces during validation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DegeneratePolicy {
    #[default]
    Reject,
    Drop,
}

/// Indexed triangle mesh. Positions are in meters.
///
/// Construct through [`Mesh::new`] (or [`Mesh::with_attributes`]) to get the
/// validated invariants; the fields stay public so posed copies of a
/// validated template can be produced cheaply.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub uvs: Option<Vec<[f64; 2]>>,
    pub normals: Option<Vec<Vec3>>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_attributes(vertices, faces, None, None, DegeneratePolicy::Reject)
    }

    pub fn with_attributes(
        vertices: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        uvs: Option<Vec<[f64; 2]>>,
        normals: Option<Vec<Vec3>>,
        policy: DegeneratePolicy,
    ) -> Result<Self> {
        let n = vertices.len();
        if let Some((i, _)) = vertices
            .iter()
            .enumerate()
            .find(|(_, v)| !v.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        if let Some(uv) = &uvs {
            if uv.len() != n {
                return Err(Error::dim("uv count", n, uv.len()));
            }
            const SLACK: f64 = 1e-9;
            if let Some((i, _)) = uv.iter().enumerate().find(|(_, t)| {
                !t.iter()
                    .all(|c| c.is_finite() && *c >= -SLACK && *c <= 1.0 + SLACK)
            }) {
                return Err(Error::InvalidMesh(format!("uv {i} outside [0,1]^2")));
            }
        }
        if let Some(nrm) = &normals {
            if nrm.len() != n {
                return Err(Error::dim("normal count", n, nrm.len()));
            }
            if let Some((i, _)) = nrm
                .iter()
                .enumerate()
                .find(|(_, v)| (v.norm() - 1.0).abs() > 1e-6)
            {
                return Err(Error::InvalidMesh(format!("normal {i} is not unit length")));
            }
        }

        let mut kept = Vec::with_capacity(faces.len());
        for (fi, f) in faces.into_iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex out of range (vertex count {n})"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex index")));
            }
            let area = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if area <= MIN_FACE_AREA {
                match policy {
                    DegeneratePolicy::Reject => {
                        return Err(Error::InvalidMesh(format!(
                            "face {fi} is degenerate (area {area:e} m^2)"
                        )))
                    }
                    DegeneratePolicy::Drop => continue,
                }
            }
            kept.push(f);
        }

        Ok(Mesh {
            vertices,
            faces: kept,
            uvs,
            normals,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty() || self.vertices.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let f = self.faces[face];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    /// Unnormalized face normal (length = 2 × area).
    pub fn face_cross(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    /// Area-weighted average of incident face normals. Isolated vertices get +z.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let c = self.face_cross(fi);
            for &i in f {
                acc[i] += c;
            }
        }
        acc.into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vec3::z()
                }
            })
            .collect()
    }

    /// Stored normals if present, otherwise [`Mesh::vertex_normals`].
    pub fn normals_or_computed(&self) -> Vec<Vec3> {
        match &self.normals {
            Some(n) => n.clone(),
            None => self.vertex_normals(),
        }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Copy with every vertex mapped through `x -> rot * x + trans`. Normals are rotated.
    pub fn transformed(&self, rot: &Mat3, trans: &Vec3) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|v| rot * v + trans).collect(),
            faces: self.faces.clone(),
            uvs: self.uvs.clone(),
            normals: self
                .normals
                .as_ref()
                .map(|n| n.iter().map(|v| rot * v).collect()),
        }
    }

    /// Copy with new vertex positions and the same connectivity and UVs.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Mesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::dim("vertex count", self.vertices.len(), vertices.len()));
        }
        Ok(Mesh {
            vertices,
            faces: self.faces.clone(),
            uvs: self.uvs.clone(),
            normals: None,
        })
    }

    /// SHA-256 over positions and faces, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.vertices.len() as u64).to_le_bytes());
        for v in &self.vertices {
            for c in v.iter() {
                h.update(c.to_le_bytes());
            }
        }
        h.update((self.faces.len() as u64).to_le_bytes());
        for f in &self.faces {
            for &i in f {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub(crate) fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}
