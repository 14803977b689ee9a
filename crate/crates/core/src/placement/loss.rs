use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::scene::{MotionVolume, PlacementParams, SceneLayout};
use crate::error::{Error, Result};
use crate::geom::Aabb;

/// Collision and out-of-bounds counts; `total` is their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementLoss {
    pub collisions: usize,
    pub out_of_bounds: usize,
    pub total: usize,
}

impl PlacementLoss {
    fn new(collisions: usize, out_of_bounds: usize) -> Self {
        PlacementLoss {
            collisions,
            out_of_bounds,
            total: collisions + out_of_bounds,
        }
    }
}

fn check_lengths(volumes: &[MotionVolume], params: &[PlacementParams]) -> Result<()> {
    if volumes.len() != params.len() {
        return Err(Error::dim("placement parameters", volumes.len(), params.len()));
    }
    Ok(())
}

/// World boxes of every sequence, one per frame of that sequence.
pub fn placed_boxes(layout: &SceneLayout, volumes: &[MotionVolume], params: &[PlacementParams]) -> Result<Vec<Vec<Aabb>>> {
    check_lengths(volumes, params)?;
    Ok(volumes
        .iter()
        .zip(params)
        .map(|(v, p)| v.frames.iter().map(|b| p.place_box(b, layout.up_axis)).collect())
        .collect())
}

/// One collision per overlapping (pair, timestep) and per (subject, obstacle,
/// timestep); one out-of-bounds count per subject timestep not inside the scene.
pub fn placement_loss(layout: &SceneLayout, volumes: &[MotionVolume], params: &[PlacementParams]) -> Result<PlacementLoss> {
    let boxes = placed_boxes(layout, volumes, params)?;
    let horizon = boxes.iter().map(Vec::len).max().unwrap_or(0);
    let mut collisions = 0;
    let mut out = 0;
    let mut live: Vec<&Aabb> = Vec::with_capacity(boxes.len());
    for t in 0..horizon {
        live.clear();
        live.extend(boxes.iter().filter_map(|seq| seq.get(t)));
        for (i, a) in live.iter().enumerate() {
            if !layout.scene_bounds.contains_box(a) {
                out += 1;
            }
            collisions += layout.obstacles.iter().filter(|o| o.overlaps(a)).count();
            collisions += live[i + 1..].iter().filter(|b| b.overlaps(a)).count();
        }
    }
    Ok(PlacementLoss::new(collisions, out))
}

/// Unoptimized recount used to verify accepted placements. It rotates all four
/// ground corners of each box explicitly and loops pair by pair over time.
pub fn brute_force_loss(layout: &SceneLayout, volumes: &[MotionVolume], params: &[PlacementParams]) -> Result<PlacementLoss> {
    check_lengths(volumes, params)?;
    let (u, w) = layout.up_axis.ground_axes();
    let place = |b: &Aabb, p: &PlacementParams| -> Aabb {
        let (c, s) = super::scene::yaw_cos_sin(p.yaw);
        let mut out = *b;
        let (mut lo_u, mut hi_u, mut lo_w, mut hi_w) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for x in [b.min[u], b.max[u]] {
            for y in [b.min[w], b.max[w]] {
                let ru = c * x - s * y + p.translation[0];
                let rw = s * x + c * y + p.translation[1];
                lo_u = lo_u.min(ru);
                hi_u = hi_u.max(ru);
                lo_w = lo_w.min(rw);
                hi_w = hi_w.max(rw);
            }
        }
        out.min[u] = lo_u;
        out.max[u] = hi_u;
        out.min[w] = lo_w;
        out.max[w] = hi_w;
        out
    };
    let overlap = |a: &Aabb, b: &Aabb| {
        let mut all = true;
        for k in 0..3 {
            if !(a.min[k] < b.max[k] && b.min[k] < a.max[k]) {
                all = false;
            }
        }
        all
    };
    let mut collisions = 0;
    let mut out = 0;
    for i in 0..volumes.len() {
        for t in 0..volumes[i].frames.len() {
            let a = place(&volumes[i].frames[t], &params[i]);
            let mut inside = true;
            for k in 0..3 {
                if a.min[k] < layout.scene_bounds.min[k] || a.max[k] > layout.scene_bounds.max[k] {
                    inside = false;
                }
            }
            if !inside {
                out += 1;
            }
            for o in &layout.obstacles {
                if overlap(&a, o) {
                    collisions += 1;
                }
            }
            for j in i + 1..volumes.len() {
                if t < volumes[j].frames.len() && overlap(&a, &place(&volumes[j].frames[t], &params[j])) {
                    collisions += 1;
                }
            }
        }
    }
    Ok(PlacementLoss::new(collisions, out))
}

fn cells(b: &Aabb, res: f64) -> impl Iterator<Item = [i64; 3]> {
    let lo: Vec<i64> = (0..3).map(|k| (b.min[k] / res).floor() as i64).collect();
    let hi: Vec<i64> = (0..3).map(|k| (b.max[k] / res).floor() as i64).collect();
    let (l0, l1, l2, h0, h1, h2) = (lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]);
    (l0..=h0).flat_map(move |x| (l1..=h1).flat_map(move |y| (l2..=h2).map(move |z| [x, y, z])))
}

/// Discrete alternative: subjects collide at a timestep when their boxes touch
/// a common grid cell of side `resolution`. Never lower than the box count.
pub fn voxel_collisions(
    layout: &SceneLayout,
    volumes: &[MotionVolume],
    params: &[PlacementParams],
    resolution: f64,
) -> Result<usize> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidArgument(format!("grid resolution {resolution} must be positive")));
    }
    let boxes = placed_boxes(layout, volumes, params)?;
    let occupied = |b: &Aabb| cells(b, resolution).collect::<HashSet<_>>();
    let obstacle_cells: Vec<HashSet<[i64; 3]>> = layout.obstacles.iter().map(occupied).collect();
    let horizon = boxes.iter().map(Vec::len).max().unwrap_or(0);
    let mut count = 0;
    for t in 0..horizon {
        let live: Vec<HashSet<[i64; 3]>> = boxes.iter().filter_map(|s| s.get(t)).map(occupied).collect();
        for (i, a) in live.iter().enumerate() {
            count += obstacle_cells.iter().filter(|o| !o.is_disjoint(a)).count();
            count += live[i + 1..].iter().filter(|b| !b.is_disjoint(a)).count();
        }
    }
    Ok(count)
}
