//! Scan-to-rig toolkit.
//!
//! The crate covers four stages of turning a clothed 3D scan into an
//! animation-ready asset placed in a scene:
//!
//! * [`geom`]: triangle meshes, closest-point queries, generalized winding
//!   numbers, UV-derived tangent frames and the V2V/Chamfer metrics.
//! * [`body`]: a compact parametric body (linear blendshapes, joint tree,
//!   linear blend skinning) with analytic parameter gradients.
//! * [`fit`]: keypoint triangulation and the joint + inside/outside ICP fit.
//! * [`retarget`]: tangent-space displacement fields, skinning transfer and
//!   rigged rest assets.
//! * [`placement`]: motion volumes, the collision/out-of-bounds loss, CMA-ES
//!   and the 4-corner camera rig.
//! * [`pipeline`]: file formats and the command-line driver.

pub mod body;
pub mod error;
pub mod fit;
pub mod geom;
pub mod pipeline;
pub mod placement;
pub mod retarget;

pub use error::{Error, Result};
pub use geom::{Mat3, Vec3};
