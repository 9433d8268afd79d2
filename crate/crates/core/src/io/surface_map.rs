use crate::domain::SurfaceDomain;
use crate::geometry::Surface;
use crate::ops::SurfaceField;

use super::{IoError, RasterImage};

/// Samples `img` at the texture coordinates of every band point's closest point.
///
/// The result is a closest point extension by construction.
pub fn texture_to_surface(img: &RasterImage, domain: &SurfaceDomain) -> Result<SurfaceField, IoError> {
    let surface = domain.surface();
    if surface.texture_coords(&domain.closest_points()[0].position).is_none() {
        return Err(IoError::UnparameterizedSurface(surface.name()));
    }
    let wrap = surface.periodic_coords();
    Ok(domain.extend_fn(img.channels(), |cp| {
        let (a, b) = surface.texture_coords(&cp.position).expect("parameterized surface");
        img.sample(a, b, wrap)
    }))
}

/// Barycentric interpolation of a mesh's vertex colors at every closest point.
pub fn mesh_colors_to_surface(domain: &SurfaceDomain) -> Result<SurfaceField, IoError> {
    let Surface::Mesh(mesh) = domain.surface() else {
        return Err(IoError::MissingColors);
    };
    let colors = mesh.colors().ok_or(IoError::MissingColors)?;
    let band = domain.band();
    Ok(SurfaceField::from_fn(domain.len(), 3, |i| {
        let hit = mesh.closest(&band.position(i));
        let face = mesh.faces()[hit.face];
        (0..3).map(|c| (0..3).map(|k| hit.bary[k] * colors[face[k]][c]).sum()).collect()
    })
    .extended(true))
}
