//! Continuous 6D rotation encoding: the first two matrix columns, orthonormalized.

use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};

pub const IDENTITY_6D: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

const PARALLEL_EPS: f64 = 1e-12;

/// Gram–Schmidt of `(r[0..3], r[3..6])`, third column by cross product.
pub fn rot6d_to_matrix(r: &[f64; 6]) -> Result<Mat3> {
    let a = Vec3::new(r[0], r[1], r[2]);
    let b = Vec3::new(r[3], r[4], r[5]);
    let la = a.norm();
    if !(la > PARALLEL_EPS) {
        return Err(Error::DegenerateRotation(format!("first column has norm {la:e}")));
    }
    let e1 = a / la;
    let bp = b - e1 * e1.dot(&b);
    let lb = bp.norm();
    if !(lb > PARALLEL_EPS * b.norm().max(1.0)) {
        return Err(Error::DegenerateRotation(
            "columns are parallel or second column is zero".into(),
        ));
    }
    let e2 = bp / lb;
    let e3 = e1.cross(&e2);
    Ok(Mat3::from_columns(&[e1, e2, e3]))
}

pub fn matrix_to_rot6d(m: &Mat3) -> [f64; 6] {
    [m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(0, 1)], m[(1, 1)], m[(2, 1)]]
}

/// Pull a gradient with respect to the output matrix back onto the 6 inputs.
pub fn rot6d_backward(r: &[f64; 6], grad: &Mat3) -> Result<[f64; 6]> {
    let a = Vec3::new(r[0], r[1], r[2]);
    let b = Vec3::new(r[3], r[4], r[5]);
    let m = rot6d_to_matrix(r)?;
    let e1: Vec3 = m.column(0).into();
    let e2: Vec3 = m.column(1).into();
    let g1: Vec3 = grad.column(0).into();
    let g2: Vec3 = grad.column(1).into();
    let g3: Vec3 = grad.column(2).into();

    // e3 = e1 × e2
    let mut ge1 = g1 + e2.cross(&g3);
    let ge2 = g2 + g3.cross(&e1);

    // e2 = b' / |b'|, b' = b - (e1·b) e1
    let bp = b - e1 * e1.dot(&b);
    let lb = bp.norm();
    let gbp = (ge2 - e2 * e2.dot(&ge2)) / lb;
    let gb = gbp - e1 * e1.dot(&gbp);
    ge1 -= gbp * e1.dot(&b) + b * e1.dot(&gbp);

    // e1 = a / |a|
    let la = a.norm();
    let ga = (ge1 - e1 * e1.dot(&ge1)) / la;

    Ok([ga.x, ga.y, ga.z, gb.x, gb.y, gb.z])
}
