//! Scan retargeting: a displacement field bound to the fitted body carries the
//! scan to new poses and shapes, together with its skin weights.

mod asset;
mod clip;
mod field;

pub use asset::{animate_asset, make_rest_asset, Retargeter, RiggedAsset, REST_MESH_FILE, RIG_FILE, RIG_FORMAT_VERSION};
pub use clip::{frame_from_pose, frame_transforms, AnimationClip, ClipFrame, CLIP_FORMAT_VERSION};
pub use field::{apply_field, apply_field_parts, bind_field, transfer_skinning, AppliedField, DisplacementField};
