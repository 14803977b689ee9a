//! Parametric articulated body: linear blendshapes, a joint tree and linear
//! blend skinning.

pub mod demo;
mod file;
mod model;
mod rot6d;
mod skeleton;
mod sparse;

pub use file::{parse_json, read_body, read_json, write_body, write_json, BodyDoc, RegressorDoc, BODY_FORMAT_VERSION};
pub use model::{
    sample_shape, ParamGradient, ParametricBody, PoseEvaluation, PoseParams, ShapeParams,
    DEFAULT_MAX_INFLUENCES,
};
pub use rot6d::{matrix_to_rot6d, rot6d_backward, rot6d_to_matrix, IDENTITY_6D};
pub use skeleton::{linear_blend_skin, validate_parents, Skeleton, WorldTransforms};
pub use sparse::SparseRows;
