//! Getting images onto surfaces and results back out: texture mapping,
//! noise, mesh loading, PLY export, field dumps and quality metrics.

mod mesh_io;
mod metrics;
mod noise;
mod patterns;
mod raster;
mod surface_map;

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use mesh_io::{export_mesh_colors, export_surface, load_mesh, read_ply_colors, surface_samples, write_ply};
pub use metrics::{mse, psnr, read_field, write_diagnostics, write_field};
pub use noise::{add_noise, NoiseModel, NoiseOutcome, NoiseSpec};
pub use patterns::{checkerboard, fingerprint, stripes, sunflower, wood, Pattern, PatternSpec};
pub use raster::{quantize, RasterImage};
pub use surface_map::{mesh_colors_to_surface, texture_to_surface};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("surface `{0}` has no texture parameterization; use per-vertex mesh colors instead")]
    UnparameterizedSurface(&'static str),
    #[error("mesh has no per-vertex colors")]
    MissingColors,
    #[error("fields do not match: {0}")]
    Mismatch(String),
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl IoError {
    pub(crate) fn file(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
        move |source| IoError::File { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &std::path::Path, message: impl Into<String>) -> IoError {
        IoError::Format { path: path.to_path_buf(), message: message.into() }
    }
}
