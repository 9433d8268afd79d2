//! Precomputed per-surface state shared by every filter run.

use rayon::prelude::*;

use crate::band::{build_band_with_cp, compute_band_radius, BandError, BandedGrid, GridSpec};
use crate::geometry::{tangent_basis_householder, ClosestPoint, Surface, SurfacePoint, TangentBasis};
use crate::ops::{
    assemble_extension, assemble_laplacian, ExtensionOperator, SparseOperator, StencilTopology, SurfaceField,
};
use crate::Error;

/// Interpolation degree of the extension.
pub const INTERP_DEGREE: u32 = 3;
/// Reach of the finite difference stencils in cells.
pub const STENCIL_RADIUS: u32 = 1;

/// A surface discretized on its computational band.
///
/// Holds the band, the closest point and tangent basis of every band point,
/// the neighbour table, and the assembled Laplacian `L` and extension `E`.
/// Everything is immutable after construction.
#[derive(Debug, Clone)]
pub struct SurfaceDomain {
    surface: Surface,
    band: BandedGrid,
    cps: Vec<SurfacePoint>,
    bases: Vec<TangentBasis>,
    topology: StencilTopology,
    laplacian: SparseOperator,
    extension: ExtensionOperator,
}

impl SurfaceDomain {
    /// Builds the domain with the default band radius for spacing `spec.h`.
    pub fn new(surface: Surface, spec: GridSpec) -> Result<Self, Error> {
        Self::with_radius(surface, spec, Self::band_radius(spec.h))
    }

    /// Builds the domain on the smallest grid of spacing `h` that holds the
    /// default band with two spare cells on every side.
    pub fn fitted(surface: Surface, h: f64) -> Result<Self, Error> {
        let spec = Self::fitted_grid(&surface, h)?;
        Self::new(surface, spec)
    }

    /// The grid used by [`SurfaceDomain::fitted`].
    pub fn fitted_grid(surface: &Surface, h: f64) -> Result<GridSpec, BandError> {
        let radius = Self::band_radius(h);
        let (lo, hi) = surface.bounds();
        GridSpec::fitted(&lo, &hi, h, radius + 2.0 * h)
    }

    /// Default band radius for spacing `h`.
    pub fn band_radius(h: f64) -> f64 {
        compute_band_radius(INTERP_DEGREE, STENCIL_RADIUS, h)
    }

    pub fn with_radius(surface: Surface, spec: GridSpec, radius: f64) -> Result<Self, Error> {
        let (band, cps) = build_band_with_cp(&surface, spec, radius)?;
        let bases = cps.par_iter().map(|cp| tangent_basis_householder(&cp.normal)).collect::<Result<Vec<_>, _>>()?;
        let topology = StencilTopology::new(&band);
        let laplacian = assemble_laplacian(&topology);
        let extension = assemble_extension(&band, &topology, &cps)?;
        Ok(Self { surface, band, cps, bases, topology, laplacian, extension })
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn band(&self) -> &BandedGrid {
        &self.band
    }

    pub fn h(&self) -> f64 {
        self.band.h()
    }

    pub fn len(&self) -> usize {
        self.band.len()
    }

    pub fn is_empty(&self) -> bool {
        self.band.is_empty()
    }

    pub fn closest_points(&self) -> &[SurfacePoint] {
        &self.cps
    }

    pub fn bases(&self) -> &[TangentBasis] {
        &self.bases
    }

    pub fn topology(&self) -> &StencilTopology {
        &self.topology
    }

    pub fn laplacian(&self) -> &SparseOperator {
        &self.laplacian
    }

    pub fn extension(&self) -> &ExtensionOperator {
        &self.extension
    }

    /// Closest point extension of a function given on the surface: `u(cp(x_i))`.
    pub fn extend_fn(&self, channels: usize, u: impl Fn(&SurfacePoint) -> Vec<f64> + Sync) -> SurfaceField {
        SurfaceField::from_fn(self.len(), channels, |i| u(&self.cps[i])).extended(true)
    }
}
