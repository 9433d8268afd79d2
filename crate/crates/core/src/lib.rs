//! Surface-intrinsic diffusion filtering with the closest point method.
//!
//! Images live on a narrow band of Cartesian grid points around a surface and
//! are always stored as closest point extensions. One filter step evolves the
//! 3D embedding equation with a finite difference stencil and then re-extends
//! the result by tri-cubic interpolation at the closest points.
//!
//! The main entry points are [`SurfaceDomain`] (band, closest points and
//! assembled operators for a surface) and the filters in [`filters`].

pub mod band;
pub mod domain;
pub mod filters;
pub mod geometry;
pub mod io;
pub mod ops;
pub mod structure;

use thiserror::Error;

pub use band::{BandError, BandedGrid, GridSpec};
pub use domain::SurfaceDomain;
pub use filters::{FilterConfig, FilterError, FilterKind};
pub use geometry::{GeometryError, Surface, Vec3};
pub use ops::{SurfaceField, TensorField};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Operator(#[from] ops::OperatorError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Io(#[from] io::IoError),
}
