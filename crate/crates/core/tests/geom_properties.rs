use nalgebra::Rotation3;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scanrig::geom::shapes::{cube, grid_plane, icosphere, l_prism, random_triangle_soup, torus, uv_sphere_icosphere};
use scanrig::geom::{
    chamfer_distance_mm, classify_inside, interpolate_frame, v2v_error_mm, vertex_frames, winding_number, LocalFrame,
    Mat3, Mesh, Vec3,
};

fn closed_meshes() -> Vec<Mesh> {
    vec![cube(1.0), icosphere(2, 0.7), torus(1.0, 0.3, 24, 12), l_prism()]
}

fn soup(seed: u64, count: usize) -> Mesh {
    random_triangle_soup(&mut ChaCha8Rng::seed_from_u64(seed), count, 1.0)
}

fn rotation(axis: [f64; 3]) -> Mat3 {
    *Rotation3::from_scaled_axis(Vec3::from(axis)).matrix()
}

fn unit_dir(d: [f64; 3]) -> Option<Vec3> {
    Vec3::from(d).try_normalize(1e-3)
}

fn assert_rotation(frame: &LocalFrame) -> Result<(), TestCaseError> {
    let (ortho, det) = frame.orthonormality_error();
    prop_assert!(ortho < 1e-6 && det < 1e-6, "RᵀR - I {ortho:e}, det - 1 {det:e}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chamfer_is_symmetric(sa in 0u64..1000, sb in 0u64..1000, na in 1usize..60, nb in 1usize..60) {
        let (a, b) = (soup(sa, na), soup(sb + 1000, nb));
        prop_assert_eq!(chamfer_distance_mm(&a, &b).unwrap(), chamfer_distance_mm(&b, &a).unwrap());
    }

    #[test]
    fn metrics_ignore_shared_rigid_motion(
        sa in 0u64..1000,
        sb in 0u64..1000,
        axis in prop::array::uniform3(-3.0..3.0f64),
        t in prop::array::uniform3(-10.0..10.0f64),
    ) {
        let (a, b) = (soup(sa, 40), soup(sb + 1000, 40));
        let (r, t) = (rotation(axis), Vec3::from(t));
        let (ma, mb) = (a.transformed(&r, &t), b.transformed(&r, &t));
        let chamfer = chamfer_distance_mm(&a, &b).unwrap();
        let moved = chamfer_distance_mm(&ma, &mb).unwrap();
        prop_assert!((chamfer - moved).abs() < 1e-9, "{chamfer} vs {moved}");
        let v2v = v2v_error_mm(&a.vertices, &b.vertices).unwrap();
        let moved = v2v_error_mm(&ma.vertices, &mb.vertices).unwrap();
        prop_assert!((v2v - moved).abs() < 1e-9, "{v2v} vs {moved}");
    }

    #[test]
    fn winding_vanishes_far_away(which in 0usize..4, d in prop::array::uniform3(-1.0..1.0f64), scale in 1.0..50.0f64) {
        let Some(dir) = unit_dir(d) else { return Ok(()) };
        let mesh = &closed_meshes()[which];
        let bounds = mesh.bounds();
        let center = Vec3::from(bounds.center());
        // the bounding sphere has radius diagonal / 2, so this is at least one diagonal outside the box
        let q = center + dir * bounds.diagonal() * (0.5 + scale);
        let w = winding_number(mesh, &q);
        prop_assert!(w.abs() < 1e-6, "{w}");
    }

    #[test]
    fn classification_ignores_face_order(which in 0usize..4, seed in 0u64..1000) {
        let mesh = &closed_meshes()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = mesh.clone();
        shuffled.faces.shuffle(&mut rng);
        let b = mesh.bounds();
        let points: Vec<Vec3> = (0..200)
            .map(|_| {
                Vec3::from_fn(|k, _| b.min[k] + (b.max[k] - b.min[k]) * (1.2 * rng.gen::<f64>() - 0.1))
            })
            .collect();
        prop_assert_eq!(classify_inside(mesh, &points), classify_inside(&shuffled, &points));
    }

    #[test]
    fn frames_are_rotations(
        t in prop::array::uniform3(-1.0..1.0f64),
        n in prop::array::uniform3(-1.0..1.0f64),
    ) {
        if let Some(frame) = LocalFrame::from_tangent_normal(&Vec3::from(t), &Vec3::from(n)) {
            assert_rotation(&frame)?;
        }
    }

    #[test]
    fn interpolated_frames_are_rotations(
        sphere in any::<bool>(),
        face_pick in 0.0..1.0f64,
        w in prop::array::uniform3(0.0..1.0f64),
    ) {
        let mesh = if sphere { uv_sphere_icosphere(2, 0.5) } else { grid_plane(6, 4, 1.0) };
        let frames = vertex_frames(&mesh).unwrap();
        for frame in &frames {
            assert_rotation(frame)?;
        }
        let sum = w[0] + w[1] + w[2];
        prop_assume!(sum > 1e-6);
        let bary = [w[0] / sum, w[1] / sum, w[2] / sum];
        let face = ((face_pick * mesh.faces.len() as f64) as usize).min(mesh.faces.len() - 1);
        assert_rotation(&interpolate_frame(&mesh, &frames, face, &bary).unwrap())?;
    }
}
