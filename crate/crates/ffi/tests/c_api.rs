use std::ffi::{c_char, CStr, CString};
use std::ptr;

use scanrig::geom::obj::write_obj;
use scanrig::geom::shapes::cube;
use scanrig_ffi::*;

fn last_error() -> String {
    let need = unsafe { scanrig_last_error(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; need];
    unsafe { scanrig_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn mesh_round_trip_and_queries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.obj");
    write_obj(&path, &cube(1.0)).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { scanrig_mesh_load_obj(cpath.as_ptr(), &mut mesh) }, ScanrigStatus::Ok);
    let n = unsafe { scanrig_mesh_vertex_count(mesh) };
    assert_eq!(n, 8);
    assert_eq!(unsafe { scanrig_mesh_face_count(mesh) }, 12);

    let mut verts = vec![0.0; 3 * n];
    assert_eq!(unsafe { scanrig_mesh_copy_vertices(mesh, verts.as_mut_ptr(), verts.len()) }, ScanrigStatus::Ok);
    assert!(verts.iter().all(|v| v.abs() <= 0.5 + 1e-12));

    let mut w = 0.0;
    let c = [0.0, 0.0, 0.0];
    assert_eq!(unsafe { scanrig_mesh_winding_number(mesh, c.as_ptr(), &mut w) }, ScanrigStatus::Ok);
    assert!((w - 1.0).abs() < 1e-9, "{w}");
    let far = [3.0, 0.0, 0.0];
    unsafe { scanrig_mesh_winding_number(mesh, far.as_ptr(), &mut w) };
    assert!(w.abs() < 1e-9, "{w}");

    let mut d = -1.0;
    assert_eq!(unsafe { scanrig_v2v_mm(mesh, mesh, &mut d) }, ScanrigStatus::Ok);
    assert_eq!(d, 0.0);
    assert_eq!(unsafe { scanrig_chamfer_mm(mesh, mesh, &mut d) }, ScanrigStatus::Ok);
    assert!(d.abs() < 1e-9);

    let out = CString::new(dir.path().join("copy.obj").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { scanrig_mesh_save_obj(mesh, out.as_ptr()) }, ScanrigStatus::Ok);
    let mut copy = ptr::null_mut();
    assert_eq!(unsafe { scanrig_mesh_load_obj(out.as_ptr(), &mut copy) }, ScanrigStatus::Ok);
    unsafe { scanrig_v2v_mm(mesh, copy, &mut d) };
    assert!(d < 1e-6);
    unsafe {
        scanrig_mesh_free(copy);
        scanrig_mesh_free(mesh);
    }
}

#[test]
fn error_codes() {
    let mut mesh = ptr::null_mut();
    let missing = CString::new("/nonexistent/scan.obj").unwrap();
    assert_eq!(unsafe { scanrig_mesh_load_obj(missing.as_ptr(), &mut mesh) }, ScanrigStatus::Io);
    assert!(mesh.is_null());
    assert!(last_error().contains("/nonexistent/scan.obj"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.obj");
    std::fs::write(&bad, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 zz\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { scanrig_mesh_load_obj(bad.as_ptr(), &mut mesh) }, ScanrigStatus::Parse);
    assert!(last_error().contains(":4:"), "{}", last_error());

    let mut body = ptr::null_mut();
    unsafe { scanrig_body_demo(&mut body) };
    let short = [0.0; 5];
    assert_eq!(
        unsafe { scanrig_body_pose(body, short.as_ptr(), short.len(), &mut mesh) },
        ScanrigStatus::InvalidArgument
    );
    unsafe { scanrig_body_free(body) };
    unsafe { scanrig_body_free(ptr::null_mut()) };
}

#[test]
fn fit_through_c_api() {
    let mut body = ptr::null_mut();
    assert_eq!(unsafe { scanrig_body_demo(&mut body) }, ScanrigStatus::Ok);
    let n = unsafe { scanrig_body_param_count(body) };
    assert_eq!(n, 9 + 6 * unsafe { scanrig_body_num_joints(body) } + unsafe { scanrig_body_num_shapes(body) });

    let synth = scanrig::pipeline::synth::synthetic_scan(
        &scanrig::body::demo::demo_body(),
        4,
        &scanrig::pipeline::synth::SynthConfig::default(),
    )
    .unwrap();
    let x = scanrig::fit::pack_params(&synth.theta, &synth.beta);
    let mut truth = ptr::null_mut();
    assert_eq!(unsafe { scanrig_body_pose(body, x.as_ptr(), x.len(), &mut truth) }, ScanrigStatus::Ok);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.obj");
    write_obj(&path, &synth.scan).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut scan = ptr::null_mut();
    assert_eq!(unsafe { scanrig_mesh_load_obj(cpath.as_ptr(), &mut scan) }, ScanrigStatus::Ok);

    let joints: Vec<f64> = synth.joints.iter().flat_map(|j| [j.x, j.y, j.z]).collect();
    let mut fit = ptr::null_mut();
    let s = unsafe { scanrig_fit(body, scan, joints.as_ptr(), ptr::null(), synth.joints.len(), &mut fit) };
    assert_eq!(s, ScanrigStatus::Ok, "{}", last_error());
    assert!(unsafe { scanrig_fit_inside_fraction(fit) } > 0.9);

    let mut params = vec![0.0; n];
    assert_eq!(unsafe { scanrig_fit_copy_params(fit, params.as_mut_ptr(), n) }, ScanrigStatus::Ok);
    let mut fitted = ptr::null_mut();
    assert_eq!(unsafe { scanrig_body_pose(body, params.as_ptr(), n, &mut fitted) }, ScanrigStatus::Ok);
    let mut v2v = 0.0;
    unsafe { scanrig_v2v_mm(fitted, truth, &mut v2v) };
    assert!(v2v < 20.0, "{v2v}");
    unsafe {
        scanrig_mesh_free(fitted);
        scanrig_mesh_free(truth);
        scanrig_mesh_free(scan);
        scanrig_fit_free(fit);
        scanrig_body_free(body);
    }
}

#[test]
fn header_declares_every_export() {
    let root = env!("CARGO_MANIFEST_DIR");
    let src = std::fs::read_to_string(format!("{root}/src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(format!("{root}/include/scanrig.h")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    let version = unsafe { CStr::from_ptr(scanrig_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}
