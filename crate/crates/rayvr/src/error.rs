use std::path::PathBuf;

use rayvr_core::accel::AccelError;
use rayvr_core::camera::CameraError;
use rayvr_core::scene::SceneError;
use rayvr_core::tracer::TraceError;

use crate::obj::ObjError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Obj { path: PathBuf, source: ObjError },
    #[error("{path}: {source}")]
    SceneJson { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("scene: {0}")]
    Scene(#[from] SceneError),
    #[error("scene: instance {instance} references unknown mesh '{name}'")]
    UnknownMeshName { instance: usize, name: String },
    #[error("acceleration structure: {0}")]
    Accel(#[from] AccelError),
    #[error("camera: {0}")]
    Camera(#[from] CameraError),
    #[error("tracer: {0}")]
    Trace(#[from] TraceError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
