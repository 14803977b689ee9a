//! Registration of the parametric body to a scan: keypoint triangulation, the
//! joint, inside/outside ICP and prior losses, and the staged optimizer.

mod fit_body;
mod loss;
mod optimize;
mod triangulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::ClosestMode;

pub use fit_body::{
    fit_body, kabsch, objective_gradient, pack_params, unpack_params, FitResult, ObjectiveTerms,
};
pub use loss::{
    frozen_icp_loss, icp_loss, joint_loss, joint_loss_grad, pose_prior, prior_loss, shape_prior,
    Correspondences,
};
pub use optimize::{minimize, Method, Minimum};
pub use triangulate::{triangulate_keypoints, CameraView, Keypoints2D, Triangulation};

/// Which terms Stage B optimizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Joint term, inside/outside scan term and priors.
    #[default]
    Full,
    /// Stop after the joints-only stage.
    JointsOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub lambda_j: f64,
    pub lambda_i: f64,
    pub lambda_o: f64,
    pub w_theta: f64,
    pub w_beta: f64,
    pub max_outer: usize,
    pub inner_steps: usize,
    /// Stop once the best objective improved by less than this over two outer iterations.
    pub tolerance: f64,
    /// Optimizer steps of the joints-only warm start.
    pub warmup_steps: usize,
    pub closest_mode: ClosestMode,
    pub method: Method,
    pub objective: Objective,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda_j: 1.0,
            lambda_i: 1.0,
            lambda_o: 10.0,
            w_theta: 1e-3,
            w_beta: 1e-3,
            max_outer: 50,
            inner_steps: 100,
            tolerance: 1e-6,
            warmup_steps: 300,
            closest_mode: ClosestMode::Surface,
            method: Method::Lbfgs,
            objective: Objective::Full,
        }
    }
}

impl FitConfig {
    /// Default schedule with the given weights; fails unless `lambda_i < lambda_o`.
    pub fn new(lambda_j: f64, lambda_i: f64, lambda_o: f64, w_theta: f64, w_beta: f64) -> Result<Self> {
        let cfg = FitConfig {
            lambda_j,
            lambda_i,
            lambda_o,
            w_theta,
            w_beta,
            ..FitConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_j", self.lambda_j),
            ("lambda_i", self.lambda_i),
            ("lambda_o", self.lambda_o),
            ("w_theta", self.w_theta),
            ("w_beta", self.w_beta),
            ("tolerance", self.tolerance),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !(self.lambda_i < self.lambda_o) {
            return Err(Error::InvalidArgument(format!(
                "lambda_i ({}) must be smaller than lambda_o ({})",
                self.lambda_i, self.lambda_o
            )));
        }
        Ok(())
    }
}
