//! Stereo hybrid ray tracer front end: scene files, parallel frame
//! rendering, benchmarks, the command line and the live tuning service.

// Negated comparisons are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod named;
pub mod obj;
pub mod output;
pub mod render;
pub mod scene_file;
pub mod service;

pub use error::{Error, Result};
pub use render::{Frame, FrameStats, Renderer, View};
pub use scene_file::{load_scene, SceneFile};
