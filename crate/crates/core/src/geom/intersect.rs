use super::{Aabb, Mesh, Vec3};

/// Number of face pairs that share no vertex and whose triangles intersect.
///
/// Sweep over x-sorted triangle bounds, then an exact segment/triangle test on
/// the six edges of each candidate pair.
pub fn count_self_intersections(mesh: &Mesh) -> usize {
    let nf = mesh.faces.len();
    let tris: Vec<[Vec3; 3]> = (0..nf).map(|f| mesh.triangle(f)).collect();
    let boxes: Vec<Aabb> = tris.iter().map(|t| Aabb::from_points(t.iter())).collect();
    let mut order: Vec<usize> = (0..nf).collect();
    order.sort_by(|&a, &b| boxes[a].min[0].total_cmp(&boxes[b].min[0]).then(a.cmp(&b)));

    let mut count = 0;
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if boxes[j].min[0] > boxes[i].max[0] {
                break;
            }
            if !closed_overlap(&boxes[i], &boxes[j]) {
                continue;
            }
            let (fi, fj) = (mesh.faces[i], mesh.faces[j]);
            if fi.iter().any(|v| fj.contains(v)) {
                continue;
            }
            if triangles_intersect(&tris[i], &tris[j]) {
                count += 1;
            }
        }
    }
    count
}

fn closed_overlap(a: &Aabb, b: &Aabb) -> bool {
    (0..3).all(|k| a.min[k] <= b.max[k] && b.min[k] <= a.max[k])
}

fn triangles_intersect(a: &[Vec3; 3], b: &[Vec3; 3]) -> bool {
    (0..3).any(|k| segment_hits_triangle(&a[k], &a[(k + 1) % 3], b))
        || (0..3).any(|k| segment_hits_triangle(&b[k], &b[(k + 1) % 3], a))
}

fn segment_hits_triangle(p: &Vec3, q: &Vec3, t: &[Vec3; 3]) -> bool {
    let dir = q - p;
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-15 {
        return false;
    }
    let inv = 1.0 / det;
    let s = p - t[0];
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qv = s.cross(&e1);
    let v = inv * dir.dot(&qv);
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    let t_hit = inv * e2.dot(&qv);
    (0.0..=1.0).contains(&t_hit)
}
