//! Discrete operators on the band: differences, the 7-point Laplacian,
//! the tri-cubic extension and the anisotropic divergence stencil.

mod extension;
mod field;
mod sparse;
mod stencil;

#[cfg(test)]
mod tests;

use thiserror::Error;

pub use extension::{assemble_extension, cubic_weights, interpolate_at, interpolation_stencil, ExtensionOperator};
pub use field::{SurfaceField, TensorField, XX, XY, XZ, YY, YZ, ZZ};
pub use sparse::SparseOperator;
pub use stencil::{
    anisotropic_divergence, assemble_laplacian, axis_avg_forward, axis_diff, central_gradient, isotropic_divergence,
    DiffVariant, StencilTopology, OFFSETS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("interpolation footprint of band row {row} reaches grid point {point:?} outside the stencil-complete band; increase the band radius")]
    FootprintEscapesBand { row: usize, point: [i32; 3] },
}
