//! Helpers and independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scanrig::body::demo::demo_body;
use scanrig::body::ParametricBody;
use scanrig::fit::{fit_body, triangulate_keypoints, FitConfig, FitResult};
use scanrig::geom::{Mesh, Vec3};
use scanrig::pipeline::synth::{capture_rig, project_keypoints, synthetic_scan, SynthConfig, SyntheticScan};

/// Seeds of the synthetic fitting suite.
pub const SUITE_SEEDS: std::ops::Range<u64> = 0..10;

/// One synthetic scan with keypoints triangulated from the 4-camera rig (1 px noise).
pub struct Case {
    pub seed: u64,
    pub synth: SyntheticScan,
    pub joints: Vec<Vec3>,
    pub valid: Vec<bool>,
}

pub fn suite_case(body: &ParametricBody, seed: u64) -> Case {
    let synth = synthetic_scan(body, seed, &SynthConfig::default()).unwrap();
    let center = [synth.theta.translation[0], synth.theta.translation[1]];
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let views = project_keypoints(&capture_rig(center).unwrap(), &synth.joints, 1.0, &mut rng);
    let tri = triangulate_keypoints(&views).unwrap();
    Case {
        seed,
        synth,
        joints: tri.joints,
        valid: tri.valid,
    }
}

pub fn fit_case(body: &ParametricBody, case: &Case, cfg: &FitConfig) -> FitResult {
    fit_body(body, &case.synth.scan, &case.joints, &case.valid, cfg).unwrap()
}

pub fn body() -> ParametricBody {
    demo_body()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean_distance_mm(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert_eq!(a.len(), b.len());
    1000.0 * a.iter().zip(b).map(|(p, q)| (p - q).norm()).sum::<f64>() / a.len() as f64
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Ray/triangle hit distance, or `Err` when the ray passes too close to an
/// edge or runs parallel to the face for the parity count to be trusted.
fn ray_hit(o: &Vec3, d: &Vec3, t: [Vec3; 3]) -> Result<Option<f64>, ()> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    let scale = e1.norm() * e2.norm();
    if det.abs() < 1e-10 * scale {
        return Ok(None);
    }
    let s = o - t[0];
    let u = s.dot(&p) / det;
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    let dist = e2.dot(&q) / det;
    if dist <= 1e-12 {
        return Ok(None);
    }
    let m = u.min(v).min(1.0 - u - v);
    if m.abs() < 1e-7 {
        return Err(());
    }
    Ok((m > 0.0).then_some(dist))
}

/// Ray-casting parity test, retrying with new directions on ambiguous hits.
pub fn ray_parity_inside(mesh: &Mesh, q: &Vec3, rng: &mut impl Rng) -> bool {
    'retry: loop {
        let d = random_unit(rng);
        let mut hits = 0;
        for f in &mesh.faces {
            let tri = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
            match ray_hit(q, &d, tri) {
                Ok(Some(_)) => hits += 1,
                Ok(None) => {}
                Err(()) => continue 'retry,
            }
        }
        return hits % 2 == 1;
    }
}

/// Distance from `p` to triangle `t` by projection onto the plane and, when
/// the projection falls outside, onto each edge segment.
pub fn point_triangle_distance(p: &Vec3, t: [Vec3; 3]) -> f64 {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let nn = n.norm_squared();
    if nn > 0.0 {
        let proj = p - n * ((p - t[0]).dot(&n) / nn);
        let inside = (0..3).all(|k| {
            let a = t[k];
            let b = t[(k + 1) % 3];
            (b - a).cross(&(proj - a)).dot(&n) >= 0.0
        });
        if inside {
            return (p - proj).norm();
        }
    }
    (0..3)
        .map(|k| {
            let a = t[k];
            let b = t[(k + 1) % 3];
            let ab = b - a;
            let len2 = ab.norm_squared();
            let s = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            (p - (a + ab * s)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn exhaustive_distance(mesh: &Mesh, p: &Vec3) -> f64 {
    mesh.faces
        .iter()
        .map(|f| point_triangle_distance(p, [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]]))
        .fold(f64::INFINITY, f64::min)
}

/// Central finite-difference gradient with step `h`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let a = f(&probe);
            probe[i] = x[i] - h;
            let b = f(&probe);
            probe[i] = x[i];
            (a - b) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}
