use super::{ClosestMode, Mesh, TriangleBvh, Vec3};
use crate::error::{Error, Result};

/// Mean Euclidean distance between corresponding vertices, in millimeters.
pub fn v2v_error_mm(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim("v2v vertex count", a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm()).sum();
    Ok(1000.0 * sum / a.len() as f64)
}

/// Bidirectional Chamfer distance in millimeters:
///
/// `½ · ( mean_{p ∈ V_a} d(p, S_b) + mean_{q ∈ V_b} d(q, S_a) )`
///
/// where `d(p, S)` is the unsquared distance from a vertex to the nearest
/// point of the other surface (or nearest vertex in [`ClosestMode::Vertex`]).
pub fn chamfer_distance_mm(a: &Mesh, b: &Mesh) -> Result<f64> {
    let ba = TriangleBvh::build(a)?;
    let bb = TriangleBvh::build(b)?;
    Ok(chamfer_with_bvhs(a, &ba, b, &bb, ClosestMode::Surface))
}

pub fn chamfer_with_bvhs(
    a: &Mesh,
    a_bvh: &TriangleBvh,
    b: &Mesh,
    b_bvh: &TriangleBvh,
    mode: ClosestMode,
) -> f64 {
    let one_way = |from: &Mesh, to: &TriangleBvh| -> f64 {
        let s: f64 = from
            .vertices
            .iter()
            .map(|p| to.query(p, mode).distance)
            .sum();
        s / from.vertices.len() as f64
    };
    let ab = one_way(a, b_bvh);
    let ba = one_way(b, a_bvh);
    1000.0 * 0.5 * (ab + ba)
}
