use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::loss::{frozen_icp_loss, joint_loss_grad, pose_prior, shape_prior, Correspondences};
use super::optimize::minimize;
use super::{FitConfig, Objective};
use crate::body::{matrix_to_rot6d, rot6d_to_matrix, ParametricBody, PoseParams, ShapeParams, IDENTITY_6D};
use crate::error::{Error, Result};
use crate::geom::{chamfer_with_bvhs, v2v_error_mm, Mat3, Mesh, TriangleBvh, Vec3};

/// Flatten parameters as `[global 6 | translation 3 | joints 6J | beta S]`.
pub fn pack_params(theta: &PoseParams, beta: &ShapeParams) -> Vec<f64> {
    let mut x = Vec::with_capacity(9 + 6 * theta.joint_rotations.len() + beta.len());
    x.extend_from_slice(&theta.global_rotation);
    x.extend_from_slice(&theta.translation);
    for r in &theta.joint_rotations {
        x.extend_from_slice(r);
    }
    x.extend_from_slice(&beta.beta);
    x
}

pub fn unpack_params(x: &[f64], joints: usize, shapes: usize) -> Result<(PoseParams, ShapeParams)> {
    let n = 9 + 6 * joints + shapes;
    if x.len() != n {
        return Err(Error::dim("parameter vector", n, x.len()));
    }
    let six = |s: &[f64]| -> [f64; 6] { s.try_into().unwrap() };
    let theta = PoseParams {
        global_rotation: six(&x[0..6]),
        translation: [x[6], x[7], x[8]],
        joint_rotations: (0..joints).map(|j| six(&x[9 + 6 * j..15 + 6 * j])).collect(),
    };
    let beta = ShapeParams {
        beta: x[9 + 6 * joints..].to_vec(),
    };
    Ok((theta, beta))
}

/// Weighted terms of the objective at one parameter point.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub joint: f64,
    pub scan: f64,
    pub pose_prior: f64,
    pub shape_prior: f64,
    pub total: f64,
}

/// Objective value and parameter gradient.
///
/// `corr = None` drops the scan term. All terms are reported unweighted
/// except `total`, which is `λ_j·joint + scan + w_θ·pose_prior + w_β·shape_prior`
/// (the scan term already carries λ_i / λ_o).
pub fn objective_gradient(
    body: &ParametricBody,
    x: &[f64],
    js: &[Vec3],
    valid: &[bool],
    corr: Option<&Correspondences>,
    cfg: &FitConfig,
) -> Result<(ObjectiveTerms, Vec<f64>)> {
    let (theta, beta) = unpack_params(x, body.num_joints(), body.num_shapes())?;
    let ev = body.evaluate(&theta, &beta)?;
    let (lj, mut gj) = joint_loss_grad(&ev.joints, js, valid)?;
    for g in &mut gj {
        *g *= cfg.lambda_j;
    }
    let (lm, gv) = match corr {
        Some(c) => frozen_icp_loss(&ev.vertices, c, cfg)?,
        None => (0.0, vec![Vec3::zeros(); ev.vertices.len()]),
    };
    let grad = body.backward(&theta, &ev, &gv, &gj)?;
    let lp = pose_prior(&theta);
    let ls = shape_prior(&beta);

    let mut g = Vec::with_capacity(x.len());
    g.extend_from_slice(&grad.global_rotation);
    g.extend_from_slice(&grad.translation);
    for (gr, r) in grad.joint_rotations.iter().zip(&theta.joint_rotations) {
        for k in 0..6 {
            g.push(gr[k] + cfg.w_theta * 2.0 * (r[k] - IDENTITY_6D[k]));
        }
    }
    for (gb, b) in grad.beta.iter().zip(&beta.beta) {
        g.push(gb + cfg.w_beta * 2.0 * b);
    }
    let terms = ObjectiveTerms {
        joint: lj,
        scan: lm,
        pose_prior: lp,
        shape_prior: ls,
        total: cfg.lambda_j * lj + lm + cfg.w_theta * lp + cfg.w_beta * ls,
    };
    Ok((terms, g))
}

/// Rigid `(R, t)` minimizing `Σ |R a_i + t − b_i|²`.
pub fn kabsch(a: &[Vec3], b: &[Vec3]) -> (Mat3, Vec3) {
    let n = a.len().min(b.len());
    if n == 0 {
        return (Mat3::identity(), Vec3::zeros());
    }
    let ca = a[..n].iter().sum::<Vec3>() / n as f64;
    let cb = b[..n].iter().sum::<Vec3>() / n as f64;
    if n < 3 {
        return (Mat3::identity(), cb - ca);
    }
    let mut h = Mat3::zeros();
    for (p, q) in a[..n].iter().zip(&b[..n]) {
        h += (p - ca) * (q - cb).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let v = vt.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose();
    (r, cb - r * ca)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: PoseParams,
    pub beta: ShapeParams,
    /// Best objective seen up to each outer iteration (non-increasing).
    pub objective_trace: Vec<f64>,
    /// Objective right after each correspondence refresh.
    pub refreshed_trace: Vec<f64>,
    /// Objective at the end of each inner minimization, correspondences frozen.
    pub frozen_trace: Vec<f64>,
    pub stage_a_joint_loss: f64,
    pub outer_iterations: usize,
    /// Terms at the returned parameters with fresh correspondences.
    pub final_terms: ObjectiveTerms,
    pub inside_count: usize,
    pub outside_count: usize,
    pub chamfer_to_scan_mm: f64,
    /// Only when the scan shares the body's vertex count.
    pub v2v_to_scan_mm: Option<f64>,
}

impl FitResult {
    pub fn inside_fraction(&self) -> f64 {
        self.inside_count as f64 / (self.inside_count + self.outside_count).max(1) as f64
    }
}

fn dump(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

const LOCAL_GRID: f64 = (1u64 << 30) as f64;

/// Fit pose and shape to a scan and a 3D skeleton in the same frame.
///
/// Stage A aligns the model joints to `js`: global motion from a Kabsch fit of
/// the rest joints, then pose and shape by minimizing the joint term and priors. Stage B alternates between
/// refreshing closest points and inside labels and minimizing the objective
/// with them frozen. The best iterate by refreshed objective is returned.
pub fn fit_body(
    body: &ParametricBody,
    scan: &Mesh,
    js: &[Vec3],
    valid: &[bool],
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let nj = body.num_joints();
    let ns = body.num_shapes();
    if js.len() != nj {
        return Err(Error::dim("skeleton joints", nj, js.len()));
    }
    if valid.len() != nj {
        return Err(Error::dim("skeleton validity flags", nj, valid.len()));
    }
    if !valid.iter().any(|v| *v) {
        return Err(Error::InvalidArgument(
            "skeleton has no valid joints; fitting to the scan alone is not supported".into(),
        ));
    }
    if js.iter().zip(valid).any(|(p, v)| *v && !p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidArgument("skeleton joints are not finite".into()));
    }
    let rest = body.regress_joints(body.rest_vertices());
    let (src, dst): (Vec<Vec3>, Vec<Vec3>) = (0..nj)
        .filter(|&j| valid[j])
        .map(|j| (rest[j], js[j]))
        .unzip();
    let (r0, t0) = kabsch(&src, &dst);
    // Work in the frame of the initial alignment, so the iterates do not
    // depend on where the subject stands. The global motion is composed back
    // onto the result at the end. Snapping to a 2^-30 m grid removes the
    // last-bit differences the transform leaves behind; without it L-BFGS
    // amplifies them once joints sit at the kink of the distance term.
    let to_local = |p: &Vec3| (r0.transpose() * (p - t0)).map(|c| (c * LOCAL_GRID).round() / LOCAL_GRID);
    let local_scan = scan.with_vertices(scan.vertices.iter().map(to_local).collect())?;
    let local_js: Vec<Vec3> = js.iter().map(to_local).collect();
    let (scan, js) = (&local_scan, local_js.as_slice());
    let bvh = TriangleBvh::build(scan)?;
    let mut x = pack_params(&PoseParams::identity(nj), &ShapeParams::zeros(ns));

    let check = |x: &[f64], v: f64, what: &str| -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::Numerical(format!("{what}: objective is {v} at parameters {}", dump(x))))
        }
    };
    // Trial points of a line search may leave the valid rotation domain; treat them as +inf.
    let eval = |x: &[f64], corr: Option<&Correspondences>| -> Result<(f64, Vec<f64>)> {
        match objective_gradient(body, x, js, valid, corr, cfg) {
            Ok((t, g)) => Ok((t.total, g)),
            Err(Error::DegenerateRotation(_)) => Ok((f64::INFINITY, vec![0.0; x.len()])),
            Err(e) => Err(e),
        }
    };

    // Stage A: joints and priors only.
    let start = eval(&x, None)?.0;
    check(&x, start, "stage A start")?;
    let stage_a = minimize(|xp: &[f64]| eval(xp, None), &x, cfg.warmup_steps, cfg.method)?;
    check(&stage_a.x, stage_a.value, "stage A")?;
    x = stage_a.x;
    let stage_a_terms = objective_gradient(body, &x, js, valid, None, cfg)?.0;
    info!(
        "stage A: {} steps, joint loss {:.3} mm",
        stage_a.iterations,
        stage_a_terms.joint * 1e3
    );

    let mut objective_trace = Vec::new();
    let mut refreshed_trace = Vec::new();
    let mut frozen_trace = Vec::new();
    let mut outer_iterations = 0;

    match cfg.objective {
        Objective::JointsOnly => {
            objective_trace.push(stage_a.value);
            refreshed_trace.push(stage_a.value);
            frozen_trace.push(stage_a.value);
        }
        Objective::Full => {
            let mut best = (f64::INFINITY, x.clone());
            let mut stale = 0;
            for k in 0..=cfg.max_outer {
                let (theta_k, beta_k) = unpack_params(&x, nj, ns)?;
                let verts = body.evaluate(&theta_k, &beta_k)?.vertices;
                let corr = Correspondences::compute(&verts, scan, &bvh, cfg.closest_mode);
                let refreshed = eval(&x, Some(&corr))?.0;
                check(&x, refreshed, "refreshed objective")?;
                refreshed_trace.push(refreshed);
                if refreshed < best.0 - cfg.tolerance {
                    stale = 0;
                } else {
                    stale += 1;
                }
                if refreshed < best.0 {
                    best = (refreshed, x.clone());
                }
                objective_trace.push(best.0);
                debug!(
                    "outer {k}: refreshed {refreshed:.6}, inside {}/{}",
                    corr.inside_count(),
                    verts.len()
                );
                if k == cfg.max_outer || stale >= 2 {
                    break;
                }
                let m = minimize(|xp: &[f64]| eval(xp, Some(&corr)), &x, cfg.inner_steps, cfg.method)?;
                check(&m.x, m.value, "inner minimization")?;
                frozen_trace.push(m.value);
                outer_iterations += 1;
                x = m.x;
            }
            x = best.1;
        }
    }

    let (mut theta, beta) = unpack_params(&x, nj, ns)?;
    let (fitted, _) = body.pose_mesh(&theta, &beta)?;
    let corr = Correspondences::compute(&fitted.vertices, scan, &bvh, cfg.closest_mode);
    let final_terms = objective_gradient(body, &x, js, valid, Some(&corr), cfg)?.0;
    let inside_count = corr.inside_count();
    let fitted_bvh = TriangleBvh::build(&fitted)?;
    let chamfer = chamfer_with_bvhs(&fitted, &fitted_bvh, scan, &bvh, cfg.closest_mode);
    let v2v = if scan.vertices.len() == fitted.vertices.len() {
        Some(v2v_error_mm(&fitted.vertices, &scan.vertices)?)
    } else {
        None
    };
    theta.global_rotation = matrix_to_rot6d(&(r0 * rot6d_to_matrix(&theta.global_rotation)?));
    let t = r0 * Vec3::from(theta.translation) + t0;
    theta.translation = [t.x, t.y, t.z];
    info!(
        "fit done: {outer_iterations} outer iterations, chamfer {chamfer:.2} mm, inside {inside_count}/{}",
        fitted.vertices.len()
    );
    Ok(FitResult {
        theta,
        beta,
        objective_trace,
        refreshed_trace,
        frozen_trace,
        stage_a_joint_loss: stage_a_terms.joint,
        outer_iterations,
        final_terms,
        inside_count,
        outside_count: fitted.vertices.len() - inside_count,
        chamfer_to_scan_mm: chamfer,
        v2v_to_scan_mm: v2v,
    })
}
