//! Triangle meshes and the spatial queries the rest of the pipeline is built on.

mod aabb;
mod bvh;
mod frames;
mod intersect;
mod mesh;
mod metrics;
pub mod obj;
pub mod shapes;
mod winding;

pub use aabb::Aabb;
pub use bvh::{closest_point_on_triangle, ClosestMode, SurfacePoint, TriangleBvh};
pub use frames::{interpolate_frame, vertex_frames, LocalFrame};
pub use intersect::count_self_intersections;
pub use mesh::{DegeneratePolicy, Mesh, MIN_FACE_AREA};
pub use metrics::{chamfer_distance_mm, chamfer_with_bvhs, v2v_error_mm};
pub use winding::{classify_inside, solid_angle, winding_number};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
