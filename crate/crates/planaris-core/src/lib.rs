//! Structure-preserving planar simplification of indoor point clouds.
//!
//! The crate turns a raw indoor scan into a compact polygonal model of the
//! permanent structure (walls, ceilings, floors) and leaves everything else
//! as a separate point cloud:
//!
//! 1. [`ransac`] extracts planar primitives (vertex groups).
//! 2. [`alignment`] rotates the scene so up is `+Z` and walls follow `X`/`Y`.
//! 3. [`segmentation`] labels primitives as ceiling, floor, wall or clutter.
//! 4. [`planemesh`] fits one rectangle per structured primitive.
//! 5. [`adjacency`] and [`vtrans`] close the corners between adjacent walls.
//! 6. [`mclip`] trims ceiling and floor rectangles to the wall layout.
//! 7. [`metrics`] measures face counts and cloud-to-mesh RMSE.
//!
//! [`synth`] generates labelled synthetic rooms used as ground truth, and
//! [`sampling`] converts meshes back into evenly spaced point clouds.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the pipeline
//! driver and the command line live in the companion `planaris` crate.

#![no_std]
// `!(x > y)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod adjacency;
pub mod alignment;
mod error;
pub mod geom;
pub mod kdtree;
mod linalg;
mod par;
pub mod mclip;
pub mod metrics;
pub mod planemesh;
pub mod polygon;
pub mod ransac;
pub mod sampling;
pub mod segmentation;
pub mod synth;
pub mod vtrans;

pub use error::{Error, Result};
pub use geom::{
    plane_point_distance, rotation_from_vector_to_vector, Aabb, PlaneParams, Point3, PointCloud,
    RigidRotation, TriangleMesh, UnitVector3, Vec3,
};
pub use linalg::refit_plane;
pub use ransac::PlanarPrimitive;
