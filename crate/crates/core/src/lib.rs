//! Synthetic plenoptic camera simulation and a gradient observer that
//! reconstructs a static scene as a point cloud from a sequence of
//! light-field frames taken along a known trajectory.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: poses, planes, perspective projection, half-cone predicates.
//! - [`camera`]: the two-plane plenoptic camera model and its projection maps.
//! - [`scene`]: convex Lambertian scenes, brightness maps, ray casting.
//! - [`lightfield`]: tiled light-field images and the ray-traced renderer.
//! - [`photometric`]: pairwise and windowed photometric errors and the depth gradient.
//! - [`observer`]: the per-point vector field and the discrete update step.
//! - [`trajectory`]: Lissajous camera paths and scenario validation.
//! - [`harness`]: configuration, the render/observe loop, metrics and exports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod lightfield;
pub mod observer;
pub mod photometric;
pub mod ply;
pub mod scene;
pub mod trajectory;

pub use error::{Error, ErrorCode, Result};

/// Colour triple, components nominally in `[0, 1]`.
pub type Rgb = nalgebra::Vector3<f64>;
