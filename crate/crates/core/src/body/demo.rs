//! Procedural humanoid used by the tests, the synthetic generators and the
//! `demo` subcommand.
//!
//! The body is z-up with +x toward the subject's left and +y forward. It is a
//! union of eight closed tubes (torso, head, arms, legs, feet) with elliptical
//! cross-sections, so twisting a limb about its own axis changes its surface.
//! Each ring of a tube shares one skin-weight row, interpolated between at
//! most two joints along the tube axis. Every joint sits at the center of a
//! ring, and its regressor row averages that ring.

use std::f64::consts::PI;

use super::model::{ParametricBody, DEFAULT_MAX_INFLUENCES};
use super::SparseRows;
use crate::geom::Vec3;

pub const JOINT_NAMES: [&str; 24] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hand",
    "right_hand",
];

pub const PARENTS: [i64; 24] = [
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21,
];

/// Joints that no other joint hangs from.
pub const LEAF_JOINTS: [usize; 5] = [10, 11, 15, 22, 23];

pub const SHAPE_NAMES: [&str; 4] = ["stature", "arm_length", "shoulder_breadth", "belly"];

const SHOULDER_Z: f64 = 1.42;
const FOOT_T: f64 = 0.55;

/// Rest joint positions of the template (zero shape).
pub fn rest_joints() -> Vec<Vec3> {
    let ankle = |s: f64| Vec3::new(s * 0.10, 0.0, 0.10);
    let toe = |s: f64| Vec3::new(s * 0.10, 0.17, 0.045);
    let foot = |s: f64| ankle(s) + (toe(s) - ankle(s)) * FOOT_T;
    vec![
        Vec3::new(0.0, 0.0, 0.95),
        Vec3::new(0.09, 0.0, 0.90),
        Vec3::new(-0.09, 0.0, 0.90),
        Vec3::new(0.0, 0.0, 1.05),
        Vec3::new(0.10, 0.0, 0.50),
        Vec3::new(-0.10, 0.0, 0.50),
        Vec3::new(0.0, 0.0, 1.18),
        ankle(1.0),
        ankle(-1.0),
        Vec3::new(0.0, 0.0, 1.30),
        foot(1.0),
        foot(-1.0),
        Vec3::new(0.0, 0.0, 1.50),
        Vec3::new(0.07, 0.0, SHOULDER_Z),
        Vec3::new(-0.07, 0.0, SHOULDER_Z),
        Vec3::new(0.0, 0.0, 1.60),
        Vec3::new(0.18, 0.0, SHOULDER_Z),
        Vec3::new(-0.18, 0.0, SHOULDER_Z),
        Vec3::new(0.45, 0.0, SHOULDER_Z),
        Vec3::new(-0.45, 0.0, SHOULDER_Z),
        Vec3::new(0.70, 0.0, SHOULDER_Z),
        Vec3::new(-0.70, 0.0, SHOULDER_Z),
        Vec3::new(0.77, 0.0, SHOULDER_Z),
        Vec3::new(-0.77, 0.0, SHOULDER_Z),
    ]
}

#[derive(Clone, Copy, PartialEq)]
enum Part {
    Torso,
    Head,
    Arm,
    Leg,
    Foot,
}

struct Station {
    center: Vec3,
    a: f64,
    b: f64,
}

struct Tube {
    part: Part,
    e1: Vec3,
    e2: Vec3,
    ring: usize,
    stations: Vec<Station>,
    /// Scalar coordinate along the tube used to look up `keys`.
    axial: fn(&Vec3) -> f64,
    /// Sorted (axial coordinate, joint) pairs.
    keys: Vec<(f64, usize)>,
    cell: (usize, usize),
}

fn st(center: Vec3, a: f64, b: f64) -> Station {
    Station { center, a, b }
}

fn torso() -> Tube {
    let rows = [
        (0.82, 0.13, 0.09),
        (0.88, 0.155, 0.10),
        (0.95, 0.16, 0.105),
        (1.00, 0.15, 0.10),
        (1.05, 0.14, 0.095),
        (1.11, 0.14, 0.095),
        (1.18, 0.145, 0.10),
        (1.24, 0.155, 0.105),
        (1.30, 0.165, 0.11),
        (1.36, 0.17, 0.11),
        (SHOULDER_Z, 0.165, 0.10),
        (1.46, 0.12, 0.08),
        (1.50, 0.06, 0.065),
        (1.54, 0.055, 0.06),
    ];
    Tube {
        part: Part::Torso,
        e1: Vec3::x(),
        e2: Vec3::y(),
        ring: 28,
        stations: rows.iter().map(|&(z, a, b)| st(Vec3::new(0.0, 0.0, z), a, b)).collect(),
        axial: |p| p.z,
        keys: vec![(0.95, 0), (1.08, 3), (1.20, 6), (1.32, 9), (1.44, 9), (1.50, 12)],
        cell: (0, 0),
    }
}

fn head() -> Tube {
    let rows = [
        (1.50, 0.05, 0.055),
        (1.54, 0.055, 0.06),
        (1.58, 0.075, 0.085),
        (1.60, 0.085, 0.095),
        (1.64, 0.092, 0.10),
        (1.68, 0.09, 0.10),
        (1.72, 0.08, 0.09),
        (1.76, 0.06, 0.07),
        (1.79, 0.035, 0.04),
    ];
    Tube {
        part: Part::Head,
        e1: Vec3::x(),
        e2: Vec3::y(),
        ring: 18,
        stations: rows.iter().map(|&(z, a, b)| st(Vec3::new(0.0, 0.0, z), a, b)).collect(),
        axial: |p| p.z,
        keys: vec![(1.53, 12), (1.58, 15)],
        cell: (1, 0),
    }
}

fn arm(side: f64) -> Tube {
    let rows = [
        (0.11, 0.05, 0.05),
        (0.15, 0.055, 0.05),
        (0.18, 0.055, 0.05),
        (0.22, 0.052, 0.047),
        (0.26, 0.05, 0.045),
        (0.30, 0.048, 0.043),
        (0.34, 0.046, 0.041),
        (0.38, 0.044, 0.039),
        (0.42, 0.042, 0.037),
        (0.45, 0.04, 0.036),
        (0.48, 0.042, 0.036),
        (0.52, 0.043, 0.035),
        (0.56, 0.041, 0.033),
        (0.60, 0.038, 0.031),
        (0.64, 0.034, 0.028),
        (0.67, 0.031, 0.025),
        (0.70, 0.028, 0.022),
        (0.735, 0.04, 0.018),
        (0.77, 0.045, 0.016),
        (0.81, 0.042, 0.014),
        (0.85, 0.03, 0.012),
    ];
    let left = side > 0.0;
    let j = |l: usize, r: usize| if left { l } else { r };
    Tube {
        part: Part::Arm,
        e1: Vec3::y(),
        e2: Vec3::z(),
        ring: 16,
        stations: rows
            .iter()
            .map(|&(x, a, b)| st(Vec3::new(side * x, 0.0, SHOULDER_Z), a, b))
            .collect(),
        axial: |p| p.x.abs(),
        keys: vec![
            (0.13, j(13, 14)),
            (0.22, j(16, 17)),
            (0.40, j(16, 17)),
            (0.50, j(18, 19)),
            (0.66, j(18, 19)),
            (0.72, j(20, 21)),
            (0.75, j(20, 21)),
            (0.80, j(22, 23)),
        ],
        cell: (if left { 2 } else { 3 }, 0),
    }
}

fn leg(side: f64) -> Tube {
    let rows = [
        (0.97, 0.07, 0.08),
        (0.90, 0.075, 0.085),
        (0.84, 0.072, 0.082),
        (0.77, 0.068, 0.077),
        (0.70, 0.063, 0.072),
        (0.63, 0.058, 0.066),
        (0.56, 0.053, 0.06),
        (0.50, 0.05, 0.056),
        (0.44, 0.05, 0.058),
        (0.37, 0.05, 0.06),
        (0.30, 0.046, 0.055),
        (0.23, 0.04, 0.047),
        (0.16, 0.035, 0.04),
        (0.10, 0.033, 0.037),
        (0.06, 0.03, 0.034),
    ];
    let left = side > 0.0;
    let j = |l: usize, r: usize| if left { l } else { r };
    // Hip to knee the axis drifts from |x| = 0.09 to 0.10, then runs straight down.
    let axis_x = |z: f64| 0.09 + 0.01 * ((0.90 - z) / 0.40).min(1.0);
    Tube {
        part: Part::Leg,
        e1: Vec3::x(),
        e2: Vec3::y(),
        ring: 16,
        stations: rows
            .iter()
            .map(|&(z, a, b)| st(Vec3::new(side * axis_x(z), 0.0, z), a, b))
            .collect(),
        axial: |p| -p.z,
        keys: vec![
            (-0.96, 0),
            (-0.84, j(1, 2)),
            (-0.56, j(1, 2)),
            (-0.45, j(4, 5)),
            (-0.16, j(4, 5)),
            (-0.07, j(7, 8)),
        ],
        cell: (if left { 0 } else { 1 }, 1),
    }
}

fn foot(side: f64) -> Tube {
    let joints = rest_joints();
    let f = joints[10];
    let rows = [
        (-0.05, 0.05, 0.035, 0.03),
        (-0.02, 0.05, 0.04, 0.032),
        (0.02, 0.055, 0.045, 0.033),
        (0.055, 0.062, 0.046, 0.032),
        (f.y, f.z, 0.045, 0.03),
        (0.13, 0.062, 0.044, 0.026),
        (0.17, 0.05, 0.04, 0.02),
        (0.19, 0.045, 0.03, 0.014),
    ];
    let left = side > 0.0;
    let j = |l: usize, r: usize| if left { l } else { r };
    Tube {
        part: Part::Foot,
        e1: Vec3::x(),
        e2: Vec3::z(),
        ring: 12,
        stations: rows
            .iter()
            .map(|&(y, z, a, b)| st(Vec3::new(side * 0.10, y, z), a, b))
            .collect(),
        axial: |p| p.y,
        keys: vec![(0.03, j(7, 8)), (0.12, j(10, 11))],
        cell: (if left { 2 } else { 3 }, 1),
    }
}

fn weight_row(keys: &[(f64, usize)], a: f64) -> Vec<(usize, f64)> {
    let first = keys[0];
    let last = keys[keys.len() - 1];
    if a <= first.0 {
        return vec![(first.1, 1.0)];
    }
    if a >= last.0 {
        return vec![(last.1, 1.0)];
    }
    let k = keys.windows(2).position(|w| a < w[1].0).unwrap();
    let (a0, j0) = keys[k];
    let (a1, j1) = keys[k + 1];
    let t = (a - a0) / (a1 - a0);
    if j0 == j1 || t <= 0.0 {
        vec![(j0, 1.0)]
    } else {
        vec![(j0, 1.0 - t), (j1, t)]
    }
}

struct Built {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    uvs: Vec<[f64; 2]>,
    weights: Vec<(usize, usize, f64)>,
    /// (part, first vertex, vertex count) per tube.
    parts: Vec<(Part, usize, usize)>,
    /// First vertex of each station ring, per tube.
    rings: Vec<Vec<usize>>,
}

fn build(tubes: &[Tube]) -> Built {
    let mut out = Built {
        vertices: Vec::new(),
        faces: Vec::new(),
        uvs: Vec::new(),
        weights: Vec::new(),
        parts: Vec::new(),
        rings: Vec::new(),
    };
    for tube in tubes {
        let base = out.vertices.len();
        let n = tube.ring;
        let ns = tube.stations.len();
        let first = tube.stations[0].center;
        let last = tube.stations[ns - 1].center;
        let d = (last - first).normalize();
        let e1 = tube.e1;
        let e2 = if e1.cross(&tube.e2).dot(&d) < 0.0 { -tube.e2 } else { tube.e2 };

        let (cu, cv) = tube.cell;
        let (u0, v0) = (cu as f64 * 0.25, cv as f64 * 0.5);
        let (du, dv) = (0.25, 0.5);
        let u_of = |t: f64| u0 + du * (0.1 + 0.8 * t);
        let mut rings = Vec::with_capacity(ns);

        let push = |out: &mut Built, p: Vec3, uv: [f64; 2]| {
            let a = (tube.axial)(&p);
            out.vertices.push(p);
            out.uvs.push(uv);
            let i = out.vertices.len() - 1;
            out.weights
                .extend(weight_row(&tube.keys, a).into_iter().map(|(j, w)| (i, j, w)));
        };

        for (s, station) in tube.stations.iter().enumerate() {
            rings.push(out.vertices.len());
            let u = u_of(s as f64 / (ns - 1) as f64);
            for k in 0..n {
                let phi = 2.0 * PI * k as f64 / n as f64;
                let p = station.center + e1 * (station.a * phi.cos()) + e2 * (station.b * phi.sin());
                let tent = (2.0 * k as f64 / n as f64 - 1.0).abs();
                // The whole ring shares the weights of its center.
                let a = (tube.axial)(&station.center);
                out.vertices.push(p);
                out.uvs.push([u, v0 + dv * (0.1 + 0.8 * tent)]);
                let i = out.vertices.len() - 1;
                out.weights
                    .extend(weight_row(&tube.keys, a).into_iter().map(|(j, w)| (i, j, w)));
            }
        }
        let cap = |st: &Station| 0.6 * st.a.min(st.b);
        let start_pole = out.vertices.len();
        push(&mut out, first - d * cap(&tube.stations[0]), [u0 + du * 0.05, v0 + dv * 0.5]);
        let end_pole = out.vertices.len();
        push(&mut out, last + d * cap(&tube.stations[ns - 1]), [u0 + du * 0.95, v0 + dv * 0.5]);

        let vid = |s: usize, k: usize| base + s * n + k % n;
        for s in 0..ns - 1 {
            for k in 0..n {
                out.faces.push([vid(s, k), vid(s, k + 1), vid(s + 1, k + 1)]);
                out.faces.push([vid(s, k), vid(s + 1, k + 1), vid(s + 1, k)]);
            }
        }
        for k in 0..n {
            out.faces.push([start_pole, vid(0, k + 1), vid(0, k)]);
            out.faces.push([vid(ns - 1, k), vid(ns - 1, k + 1), end_pole]);
        }
        out.parts.push((tube.part, base, out.vertices.len() - base));
        out.rings.push(rings);
    }
    out
}

fn tubes() -> Vec<Tube> {
    vec![
        torso(),
        head(),
        arm(1.0),
        arm(-1.0),
        leg(1.0),
        leg(-1.0),
        foot(1.0),
        foot(-1.0),
    ]
}

fn smooth_ramp(x: f64, lo: f64, hi: f64) -> f64 {
    let t = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn blendshapes(b: &Built) -> Vec<Vec<Vec3>> {
    let n = b.vertices.len();
    let mut part_of = vec![Part::Torso; n];
    for &(part, start, count) in &b.parts {
        for p in &mut part_of[start..start + count] {
            *p = part;
        }
    }
    let mut stature = vec![Vec3::zeros(); n];
    let mut arm_length = vec![Vec3::zeros(); n];
    let mut shoulders = vec![Vec3::zeros(); n];
    let mut belly = vec![Vec3::zeros(); n];
    for (i, v) in b.vertices.iter().enumerate() {
        stature[i] = Vec3::new(0.0, 0.0, 0.05 * v.z);
        match part_of[i] {
            Part::Arm => {
                let s = v.x.signum();
                arm_length[i].x = s * 0.06 * (v.x.abs() - 0.18).max(0.0) / 0.67;
                shoulders[i].x = s * 0.025;
            }
            Part::Torso => {
                shoulders[i].x = 0.025 * (v.x / 0.165) * smooth_ramp(v.z, 1.20, 1.38);
                let bump = (-((v.z - 1.08) / 0.09).powi(2)).exp();
                belly[i].y = 0.25 * v.y.max(0.0) * bump;
            }
            _ => {}
        }
    }
    vec![stature, arm_length, shoulders, belly]
}

fn regressor(b: &Built, tubes: &[Tube], joints: &[Vec3]) -> SparseRows {
    // Locate the ring whose center is the joint.
    let ring_of = |j: usize| -> (usize, usize) {
        for (t, tube) in tubes.iter().enumerate() {
            for (s, st) in tube.stations.iter().enumerate() {
                if (st.center - joints[j]).norm() < 1e-12 {
                    return (t, s);
                }
            }
        }
        panic!("joint {j} has no ring");
    };
    let mut trip = Vec::new();
    let ring = |j: usize, t: usize, s: usize, w: f64, trip: &mut Vec<(usize, usize, f64)>| {
        let n = tubes[t].ring;
        let start = b.rings[t][s];
        for k in 0..n {
            trip.push((j, start + k, w / n as f64));
        }
    };
    for j in 0..joints.len() {
        if j == 13 || j == 14 {
            let shoulder = if j == 13 { 16 } else { 17 };
            let w = joints[j].x.abs() / joints[shoulder].x.abs();
            let (ts, ss) = ring_of(shoulder);
            ring(j, ts, ss, w, &mut trip);
            let torso = tubes[0]
                .stations
                .iter()
                .position(|st| st.center.z == SHOULDER_Z)
                .unwrap();
            ring(j, 0, torso, 1.0 - w, &mut trip);
        } else {
            let (t, s) = ring_of(j);
            ring(j, t, s, 1.0, &mut trip);
        }
    }
    SparseRows::from_triplets(joints.len(), b.vertices.len(), &trip).unwrap()
}

/// The demo body: 24 joints, about 1,900 vertices, 4 blendshapes
/// (stature, arm length, shoulder breadth, belly).
pub fn demo_body() -> ParametricBody {
    let tubes = tubes();
    let built = build(&tubes);
    let joints = rest_joints();
    let reg = regressor(&built, &tubes, &joints);
    let n = built.vertices.len();
    let weights = SparseRows::from_triplets(n, joints.len(), &built.weights).unwrap();
    let shapes = blendshapes(&built);
    ParametricBody::new(
        built.vertices,
        built.faces,
        Some(built.uvs),
        shapes,
        PARENTS.iter().map(|&p| usize::try_from(p).ok()).collect(),
        JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
        reg,
        weights,
        DEFAULT_MAX_INFLUENCES,
    )
    .expect("demo body is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::ShapeParams;
    use crate::geom::{winding_number, Mesh};

    #[test]
    fn size_and_counts() {
        let b = demo_body();
        assert_eq!(b.num_joints(), 24);
        assert_eq!(b.num_shapes(), 4);
        assert!((1500..=2500).contains(&b.num_vertices()), "{}", b.num_vertices());
        for i in 0..b.num_vertices() {
            assert!(b.skin_weights().row_nnz(i) <= 2);
        }
    }

    #[test]
    fn regressed_rest_joints_match_table() {
        let b = demo_body();
        let reg = b.regress_joints(b.rest_vertices());
        for (j, (r, t)) in reg.iter().zip(rest_joints()).enumerate() {
            assert!((r - t).norm() < 1e-12, "joint {j}: {r:?} vs {t:?}");
        }
    }

    #[test]
    fn every_joint_drives_some_vertex() {
        let b = demo_body();
        let mut used = vec![false; b.num_joints()];
        for (_, j, _) in b.skin_weights().triplets() {
            used[j] = true;
        }
        assert!(used.iter().all(|&u| u), "{used:?}");
    }

    #[test]
    fn tubes_are_closed_and_outward() {
        let b = demo_body();
        let mesh = Mesh {
            vertices: b.rest_vertices().to_vec(),
            faces: b.faces().to_vec(),
            uvs: None,
            normals: None,
        };
        let mut directed = std::collections::HashSet::new();
        for f in &mesh.faces {
            for k in 0..3 {
                assert!(directed.insert((f[k], f[(k + 1) % 3])));
            }
        }
        for &(a, c) in &directed {
            assert!(directed.contains(&(c, a)));
        }
        // Points on one tube only, and a point far away.
        let probes = [
            (Vec3::new(0.0, 0.0, 1.18), 1.0),
            (Vec3::new(0.0, 0.0, 1.70), 1.0),
            (Vec3::new(0.60, 0.0, SHOULDER_Z), 1.0),
            (Vec3::new(-0.60, 0.0, SHOULDER_Z), 1.0),
            (Vec3::new(0.10, 0.0, 0.30), 1.0),
            (Vec3::new(-0.10, 0.0, 0.30), 1.0),
            (Vec3::new(0.10, 0.15, 0.05), 1.0),
            (Vec3::new(0.0, 0.0, 3.0), 0.0),
        ];
        for (p, w) in probes {
            assert!((winding_number(&mesh, &p) - w).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn extreme_shapes_stay_valid_meshes() {
        let b = demo_body();
        for beta in [-3.0, 3.0] {
            let v = b.shape_mesh(&ShapeParams { beta: vec![beta; 4] }).unwrap();
            assert!(Mesh::new(v, b.faces().to_vec()).is_ok());
        }
    }

    #[test]
    fn uvs_in_unit_square() {
        let b = demo_body();
        for uv in b.template().uvs.as_ref().unwrap() {
            assert!((0.0..=1.0).contains(&uv[0]) && (0.0..=1.0).contains(&uv[1]));
        }
    }
}
