use std::f64::consts::PI;

use super::{Mesh, Vec3};

/// Signed solid angle subtended by triangle `t` at `q`.
///
/// Returns 0 when `q` lies in the plane of the triangle (including on it).
pub fn solid_angle(q: &Vec3, t: &[Vec3; 3]) -> f64 {
    let a = t[0] - q;
    let b = t[1] - q;
    let c = t[2] - q;
    let la = a.norm();
    let lb = b.norm();
    let lc = c.norm();
    let num = a.dot(&b.cross(&c));
    if num == 0.0 {
        return 0.0;
    }
    let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * num.atan2(den)
}

/// Generalized winding number of `mesh` at `q`: the summed signed solid angle over 4π.
///
/// For a closed, outward-oriented mesh this is 1 inside and 0 outside. A
/// query exactly on the surface gets no contribution from the faces that
/// contain it, which yields 0.5 on the interior of a flat face.
pub fn winding_number(mesh: &Mesh, q: &Vec3) -> f64 {
    let mut total = 0.0;
    for f in &mesh.faces {
        let t = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
        total += solid_angle(q, &t);
    }
    total / (4.0 * PI)
}

/// Split point indices into (inside, outside) with winding number > 0.5 meaning inside.
pub fn classify_inside(mesh: &Mesh, points: &[Vec3]) -> (Vec<usize>, Vec<usize>) {
    let tris: Vec<[Vec3; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let w: f64 = tris.iter().map(|t| solid_angle(p, t)).sum::<f64>() / (4.0 * PI);
        if w > 0.5 {
            inside.push(i);
        } else {
            outside.push(i);
        }
    }
    (inside, outside)
}
