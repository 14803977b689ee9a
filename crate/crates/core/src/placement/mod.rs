//! Collision-free placement of animated subjects and the corner camera rig.

mod cameras;
mod cma;
mod loss;
mod place;
mod scene;

pub use cameras::{look_at, propose_cameras, CameraIntrinsics};
pub use cma::{cma_minimize, CmaConfig, CmaResult};
pub use loss::{brute_force_loss, placed_boxes, placement_loss, voxel_collisions, PlacementLoss};
pub use place::{initial_params, place_sequences, Placement, PlacementFailure, PlacementOutcome, INITIAL_YAW_SPREAD};
pub use scene::{motion_volume, yaw_cos_sin, MotionVolume, PlacementParams, SceneLayout, UpAxis, SCENE_FORMAT_VERSION};
