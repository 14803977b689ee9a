//! C interface to scanrig.
//!
//! Objects are opaque handles created by `scanrig_*_load`/`scanrig_*_demo`
//! style constructors and released with the matching `_free`. Every fallible
//! call returns a [`ScanrigStatus`]; on failure the message is available from
//! [`scanrig_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use scanrig::body::{demo::demo_body, read_body, ParametricBody};
use scanrig::error::Error;
use scanrig::fit::{fit_body, pack_params, unpack_params, FitConfig, FitResult};
use scanrig::geom::obj::{read_obj, write_obj};
use scanrig::geom::{chamfer_distance_mm, v2v_error_mm, winding_number, DegeneratePolicy, Mesh, Vec3};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanrigStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Io = 3,
    Parse = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A parametric body model.
pub struct ScanrigBody(ParametricBody);

/// A triangle mesh.
pub struct ScanrigMesh(Mesh);

/// Result of fitting a body to a scan.
pub struct ScanrigFit(FitResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> ScanrigStatus {
    match err {
        Error::Io { .. } => ScanrigStatus::Io,
        Error::Parse { .. } | Error::Format { .. } => ScanrigStatus::Parse,
        Error::Numerical(_) | Error::DegenerateRotation(_) => ScanrigStatus::Numerical,
        _ => ScanrigStatus::InvalidArgument,
    }
}

struct Failure(ScanrigStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ScanrigStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ScanrigStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            ScanrigStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ScanrigStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure(ScanrigStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(values: impl ExactSizeIterator<Item = f64>, out: *mut f64, len: usize) -> Result<(), Failure> {
    let n = values.len();
    if len < n {
        return Err(Failure(
            ScanrigStatus::BufferTooSmall,
            format!("buffer holds {len} values, {n} needed"),
        ));
    }
    if n > 0 && out.is_null() {
        return Err(null("out"));
    }
    for (i, v) in values.enumerate() {
        *out.add(i) = v;
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scanrig_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the buffer size needed for the whole message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn scanrig_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// The built-in 24-joint demo body.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn scanrig_body_demo(out: *mut *mut ScanrigBody) -> ScanrigStatus {
    guard(|| store(out, ScanrigBody(demo_body())))
}

/// # Safety
/// `path` must be a NUL-terminated string, `out` a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn scanrig_body_load(path: *const c_char, out: *mut *mut ScanrigBody) -> ScanrigStatus {
    guard(|| {
        let body = read_body(&path_arg(path)?)?;
        store(out, ScanrigBody(body))
    })
}

/// # Safety
/// `body` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scanrig_body_free(body: *mut ScanrigBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// # Safety
/// `body` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scanrig_body_num_joints(body: *const ScanrigBody) -> usize {
    body.as_ref().map_or(0, |b| b.0.num_joints())
}

/// # Safety
/// `body` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scanrig_body_num_shapes(body: *const ScanrigBody) -> usize {
    body.as_ref().map_or(0, |b| b.0.num_shapes())
}

/// Length of the parameter vector `[global 6 | translation 3 | joints 6J | shape S]`.
///
/// # Safety
/// `body` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scanrig_body_param_count(body: *const ScanrigBody) -> usize {
    body.as_ref().map_or(0, |b| 9 + 6 * b.0.num_joints() + b.0.num_shapes())
}

/// Pose the body with a packed parameter vector.
///
/// # Safety
/// `params` must point to `len` doubles, `out` to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn scanrig_body_pose(
    body: *const ScanrigBody,
    params: *const f64,
    len: usize,
    out: *mut *mut ScanrigMesh,
) -> ScanrigStatus {
    guard(|| {
        let body = &handle(body, "body")?.0;
        let x = slice_arg(params, len, "params")?;
        let (theta, beta) = unpack_params(x, body.num_joints(), body.num_shapes())?;
        let (mesh, _) = body.pose_mesh(&theta, &beta)?;
        store(out, ScanrigMesh(mesh))
    })
}

/// Read an OBJ file. Degenerate faces are dropped.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn scanrig_mesh_load_obj(path: *const c_char, out: *mut *mut ScanrigMesh) -> ScanrigStatus {
    guard(|| {
        let mesh = read_obj(&path_arg(path)?, DegeneratePolicy::Drop)?;
        store(out, ScanrigMesh(mesh))
    })
}

/// # Safety
/// `mesh` must be a live handle, `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn scanrig_mesh_save_obj(mesh: *const ScanrigMesh, path: *const c_char) -> ScanrigStatus {
    guard(|| Ok(write_obj(&path_arg(path)?, &handle(mesh, "mesh")?.0)?))
}

/// # Safety
/// `mesh` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scanrig_mesh_free(mesh: *mut ScanrigMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scanrig_mesh_vertex_count(mesh: *const ScanrigMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.vertices.len())
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scanrig_mesh_face_count(mesh: *const ScanrigMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.faces.len())
}

/// Copy vertex positions as `x0 y0 z0 x1 ...`; `len` must be at least 3 × vertex count.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn scanrig_mesh_copy_vertices(mesh: *const ScanrigMesh, out: *mut f64, len: usize) -> ScanrigStatus {
    guard(|| {
        let m = &handle(mesh, "mesh")?.0;
        let flat: Vec<f64> = m.vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
        copy_out(flat.into_iter(), out, len)
    })
}

/// Generalized winding number of `point` (3 doubles) with respect to the mesh.
///
/// # Safety
/// `point` must point to 3 doubles, `out` to one.
#[no_mangle]
pub unsafe extern "C" fn scanrig_mesh_winding_number(
    mesh: *const ScanrigMesh,
    point: *const f64,
    out: *mut f64,
) -> ScanrigStatus {
    guard(|| {
        let m = &handle(mesh, "mesh")?.0;
        let p = slice_arg(point, 3, "point")?;
        let w = winding_number(m, &Vec3::new(p[0], p[1], p[2]));
        copy_out(std::iter::once(w), out, 1)
    })
}

/// Mean per-vertex distance between two meshes with equal vertex counts, mm.
///
/// # Safety
/// Both meshes must be live handles, `out` must point to one double.
#[no_mangle]
pub unsafe extern "C" fn scanrig_v2v_mm(a: *const ScanrigMesh, b: *const ScanrigMesh, out: *mut f64) -> ScanrigStatus {
    guard(|| {
        let d = v2v_error_mm(&handle(a, "a")?.0.vertices, &handle(b, "b")?.0.vertices)?;
        copy_out(std::iter::once(d), out, 1)
    })
}

/// Symmetric vertex-to-surface Chamfer distance, mm.
///
/// # Safety
/// Both meshes must be live handles, `out` must point to one double.
#[no_mangle]
pub unsafe extern "C" fn scanrig_chamfer_mm(a: *const ScanrigMesh, b: *const ScanrigMesh, out: *mut f64) -> ScanrigStatus {
    guard(|| {
        let d = chamfer_distance_mm(&handle(a, "a")?.0, &handle(b, "b")?.0)?;
        copy_out(std::iter::once(d), out, 1)
    })
}

/// Fit the body to a scan with default settings.
///
/// `joints` holds 3 × `joint_count` doubles of 3D keypoints; `valid` holds one
/// flag per joint (nonzero = observed) or is null when all are observed.
///
/// # Safety
/// Pointers must reference buffers of the stated sizes; `out` a handle slot.
#[no_mangle]
pub unsafe extern "C" fn scanrig_fit(
    body: *const ScanrigBody,
    scan: *const ScanrigMesh,
    joints: *const f64,
    valid: *const u8,
    joint_count: usize,
    out: *mut *mut ScanrigFit,
) -> ScanrigStatus {
    guard(|| {
        let body = &handle(body, "body")?.0;
        let scan = &handle(scan, "scan")?.0;
        let flat = slice_arg(joints, 3 * joint_count, "joints")?;
        let js: Vec<Vec3> = flat.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        let flags = if valid.is_null() {
            vec![true; joint_count]
        } else {
            slice_arg(valid, joint_count, "valid")?.iter().map(|v| *v != 0).collect()
        };
        let result = fit_body(body, scan, &js, &flags, &FitConfig::default())?;
        store(out, ScanrigFit(result))
    })
}

/// # Safety
/// `fit` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scanrig_fit_free(fit: *mut ScanrigFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Copy the fitted packed parameter vector (see [`scanrig_body_param_count`]).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn scanrig_fit_copy_params(fit: *const ScanrigFit, out: *mut f64, len: usize) -> ScanrigStatus {
    guard(|| {
        let f = &handle(fit, "fit")?.0;
        copy_out(pack_params(&f.theta, &f.beta).into_iter(), out, len)
    })
}

/// Fraction of fitted vertices inside the scan, or NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn scanrig_fit_inside_fraction(fit: *const ScanrigFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.inside_fraction())
}

#[cfg(test)]
mod tests {
    use super::*;
    use scanrig::body::{PoseParams, ShapeParams};

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        unsafe { scanrig_last_error(buf.as_mut_ptr(), buf.len()) };
        unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn null_handles_report_errors() {
        let mut out = ptr::null_mut();
        let s = unsafe { scanrig_body_pose(ptr::null(), ptr::null(), 0, &mut out) };
        assert_eq!(s, ScanrigStatus::NullPointer);
        assert!(out.is_null());
        assert_eq!(last_error(), "body is null");
        assert_eq!(unsafe { scanrig_mesh_vertex_count(ptr::null()) }, 0);
        assert!(unsafe { scanrig_fit_inside_fraction(ptr::null()) }.is_nan());
    }

    #[test]
    fn last_error_truncates() {
        let mut out = ptr::null_mut();
        unsafe { scanrig_body_load(ptr::null(), &mut out) };
        let mut buf = [1 as c_char; 4];
        let need = unsafe { scanrig_last_error(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(need, "path is null".len() + 1);
        assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes(), b"pat");
    }

    #[test]
    fn small_buffer_rejected() {
        let mut body = ptr::null_mut();
        assert_eq!(unsafe { scanrig_body_demo(&mut body) }, ScanrigStatus::Ok);
        let n = unsafe { scanrig_body_param_count(body) };
        let params = pack_params(&PoseParams::identity(24), &ShapeParams::zeros(4));
        assert_eq!(params.len(), n);
        let mut mesh = ptr::null_mut();
        assert_eq!(unsafe { scanrig_body_pose(body, params.as_ptr(), n, &mut mesh) }, ScanrigStatus::Ok);
        let mut small = [0.0; 3];
        let s = unsafe { scanrig_mesh_copy_vertices(mesh, small.as_mut_ptr(), small.len()) };
        assert_eq!(s, ScanrigStatus::BufferTooSmall);
        unsafe {
            scanrig_mesh_free(mesh);
            scanrig_body_free(body);
        }
    }
}
