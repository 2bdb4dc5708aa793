//! Core of a software stereo ray tracer with hybrid rasterization.
//!
//! Everything here is `no_std` plus `alloc`: camera and projection math,
//! scene description, a two-level BVH, a software G-buffer rasterizer, the
//! per-material effect tracer and the render-pass graph. IO, threading and
//! timing live in the `rayvr` crate.

// Negated comparisons are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accel;
pub mod camera;
pub mod gbuffer;
pub mod graph;
pub mod image;
pub mod math;
pub mod rng;
pub mod scene;
pub mod shapes;
pub mod tracer;

pub use accel::{Hit, SceneBvh};
pub use camera::{Dims, Eye, Pose, ProjectionParams, Ray, RayGenMode, StereoRig};
pub use graph::{build_graph, PassKind, RenderGraph};
pub use image::{HdrImage, Rgb8Image};
pub use math::{Mat4, Rgb, Vec2, Vec3};
pub use scene::{EffectId, Light, Material, Mesh, Scene};
pub use tracer::{RayCounters, TraceSettings, Tracer};
