use serde::{Deserialize, Serialize};

use super::cma::{cma_minimize, CmaConfig};
use super::loss::{brute_force_loss, placement_loss, PlacementLoss};
use super::scene::{yaw_cos_sin, MotionVolume, PlacementParams, SceneLayout};
use crate::error::{Error, Result};

/// Yaw step between consecutive sequences at initialization, radians.
pub const INITIAL_YAW_SPREAD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub params: Vec<PlacementParams>,
    pub loss: PlacementLoss,
    /// Whether the brute-force recount agreed on zero loss.
    pub verified: bool,
    pub generations: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementFailure {
    pub best_params: Vec<PlacementParams>,
    pub best_loss: PlacementLoss,
    pub generations: usize,
    pub evaluations: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PlacementOutcome {
    Success(Placement),
    Infeasible(PlacementFailure),
}

impl PlacementOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, PlacementOutcome::Success(_))
    }
}

fn encode(params: &[PlacementParams]) -> Vec<f64> {
    params
        .iter()
        .flat_map(|p| [p.translation[0], p.translation[1], p.yaw])
        .collect()
}

fn decode(x: &[f64]) -> Vec<PlacementParams> {
    x.chunks(3)
        .map(|c| PlacementParams {
            translation: [c[0], c[1]],
            yaw: c[2],
        })
        .collect()
}

/// Start point: every sequence's middle box centered on the scene center,
/// yaws fanned out by [`INITIAL_YAW_SPREAD`].
pub fn initial_params(layout: &SceneLayout, volumes: &[MotionVolume]) -> Vec<PlacementParams> {
    let (u, w) = layout.up_axis.ground_axes();
    let center = layout.scene_bounds.center();
    volumes
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let yaw = INITIAL_YAW_SPREAD * i as f64;
            let (c, s) = yaw_cos_sin(yaw);
            let m = v.mid_box().center();
            let (ru, rw) = (c * m[u] - s * m[w], s * m[u] + c * m[w]);
            PlacementParams {
                translation: [center[u] - ru, center[w] - rw],
                yaw,
            }
        })
        .collect()
}

/// Search for a collision-free, in-bounds placement. Only zero-loss placements
/// confirmed by [`brute_force_loss`] are reported as success.
pub fn place_sequences(layout: &SceneLayout, volumes: &[MotionVolume], cfg: &CmaConfig) -> Result<PlacementOutcome> {
    layout.validate()?;
    cfg.validate()?;
    if volumes.is_empty() {
        return Err(Error::InvalidArgument("no sequences to place".into()));
    }
    if let Some(i) = volumes.iter().position(|v| v.frames.is_empty()) {
        return Err(Error::InvalidArgument(format!("sequence {i} has no frames")));
    }
    let x0 = encode(&initial_params(layout, volumes));
    let start = placement_loss(layout, volumes, &decode(&x0))?;
    let (x, generations, evaluations) = if start.total == 0 {
        (x0, 0, 1)
    } else {
        let cma_cfg = CmaConfig {
            sigma0: Some(cfg.sigma0.unwrap_or(0.3 * layout.scene_bounds.diagonal())),
            target: 0.0,
            ..cfg.clone()
        };
        let objective = |x: &[f64]| {
            placement_loss(layout, volumes, &decode(x))
                .map(|l| l.total as f64)
                .unwrap_or(f64::INFINITY)
        };
        let r = cma_minimize(objective, &x0, &cma_cfg)?;
        (r.x, r.generations, r.evaluations)
    };
    let params = decode(&x);
    let loss = placement_loss(layout, volumes, &params)?;
    if loss.total == 0 {
        let check = brute_force_loss(layout, volumes, &params)?;
        if check.total == 0 {
            return Ok(PlacementOutcome::Success(Placement {
                params,
                loss,
                verified: true,
                generations,
                evaluations,
            }));
        }
        return Ok(PlacementOutcome::Infeasible(PlacementFailure {
            best_params: params,
            best_loss: check,
            generations,
            evaluations,
            reason: "brute-force recount disagreed with the optimized loss".into(),
        }));
    }
    Ok(PlacementOutcome::Infeasible(PlacementFailure {
        best_params: params,
        best_loss: loss,
        generations,
        evaluations,
        reason: "no zero-loss placement found within the generation budget".into(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::placement::UpAxis;

    #[test]
    fn single_volume_in_big_scene() {
        let layout = SceneLayout {
            scene_bounds: Aabb::new([-50.0, -50.0, 0.0], [50.0, 50.0, 10.0]),
            obstacles: vec![],
            up_axis: UpAxis::Z,
        };
        let v = MotionVolume {
            frames: vec![Aabb::new([10.0, 3.0, 0.0], [10.5, 3.5, 1.8]); 5],
        };
        let out = place_sequences(&layout, &[v], &CmaConfig::default()).unwrap();
        let PlacementOutcome::Success(p) = out else { panic!("{out:?}") };
        assert!(p.verified);
        assert_eq!(p.generations, 0);
    }

    #[test]
    fn infeasible_scene_reports_failure() {
        let layout = SceneLayout {
            scene_bounds: Aabb::new([0.0, 0.0, 0.0], [0.5, 0.5, 0.5]),
            obstacles: vec![],
            up_axis: UpAxis::Z,
        };
        let v = MotionVolume {
            frames: vec![Aabb::new([0.0; 3], [1.0; 3]); 4],
        };
        let cfg = CmaConfig { max_generations: 40, ..CmaConfig::default() };
        match place_sequences(&layout, &[v.clone(), v], &cfg).unwrap() {
            PlacementOutcome::Infeasible(f) => assert!(f.best_loss.out_of_bounds > 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_volumes_separate() {
        let layout = SceneLayout {
            scene_bounds: Aabb::new([-5.0, -5.0, 0.0], [5.0, 5.0, 3.0]),
            obstacles: vec![Aabb::new([-5.0, -5.0, -0.1], [5.0, 5.0, 0.0])],
            up_axis: UpAxis::Z,
        };
        let v = MotionVolume {
            frames: (0..20).map(|t| Aabb::new([-0.3, 0.05 * t as f64, 0.01], [0.3, 0.05 * t as f64 + 0.4, 1.8])).collect(),
        };
        let out = place_sequences(&layout, &[v.clone(), v], &CmaConfig::default()).unwrap();
        let PlacementOutcome::Success(p) = out else { panic!("{out:?}") };
        assert_eq!(brute_force_loss(&layout, &[MotionVolume { frames: vec![] }; 0], &[]).unwrap().total, 0);
        assert!(p.verified && p.loss.total == 0);
    }
}
