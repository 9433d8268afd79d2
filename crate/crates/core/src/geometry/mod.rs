//! Closest point representations of surfaces embedded in R³.
//!
//! Every surface answers a single query: given a point `x` in space, return the
//! surface point nearest to it in Euclidean distance together with the unit
//! normal there. Analytic surfaces (sphere, torus, planar patch, surfaces of
//! revolution) evaluate closed-form projections; triangle meshes use an exact
//! point/triangle test behind a bounding volume hierarchy.

mod analytic;
mod mesh;
mod revolution;
mod tangent;

use nalgebra::Vector3;
use thiserror::Error;

pub use analytic::{cp_plane_patch, cp_sphere, cp_torus, PlanePatch};
pub use mesh::{MeshHit, TriMesh};
pub use revolution::{cp_revolution, Profile};
pub use tangent::{tangent_basis_from_cp_jacobian, tangent_basis_householder, TangentBasis};

pub type Vec3 = Vector3<f64>;

/// Queries closer than this to a medial locus are rejected.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("closest point is not unique at query point {0:?}")]
    DegenerateQuery([f64; 3]),
    #[error("normal vector has length {0}, expected 1")]
    NotUnit(f64),
    #[error("closest point Jacobian eigenvalues {0:?} do not cluster as (0, 1, 1)")]
    IllConditioned([f64; 3]),
    #[error("profile curve needs at least two vertices with s >= 0")]
    InvalidProfile,
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("mesh face {face} references vertex {vertex}, but only {count} vertices exist")]
    BadFaceIndex { face: usize, vertex: usize, count: usize },
}

pub(crate) fn degenerate(x: &Vec3) -> GeometryError {
    GeometryError::DegenerateQuery([x.x, x.y, x.z])
}

/// Result of a closest point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    /// Unit normal at `position`, oriented per surface kind.
    pub normal: Vec3,
    /// Unsigned distance from the query point to `position`.
    pub distance: f64,
}

/// A closest point function `x -> cp(x)`.
pub trait ClosestPoint {
    fn closest_point(&self, x: &Vec3) -> Result<SurfacePoint, GeometryError>;

    /// Axis-aligned bounds `(min, max)` of the surface itself.
    fn bounds(&self) -> (Vec3, Vec3);
}

/// The surfaces this crate knows how to filter on.
#[derive(Debug, Clone)]
pub enum Surface {
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
    Plane(PlanePatch),
    Revolution(Profile),
    Mesh(std::sync::Arc<TriMesh>),
}

impl Surface {
    pub fn name(&self) -> &'static str {
        match self {
            Surface::Sphere { .. } => "sphere",
            Surface::Torus { .. } => "torus",
            Surface::Plane(_) => "plane",
            Surface::Revolution(_) => "revolution",
            Surface::Mesh(_) => "mesh",
        }
    }

    /// Surface parameters `(a, b)`, both in `[0, 1]`, used for texture lookup.
    ///
    /// `a` is the periodic coordinate where one exists. Meshes have no
    /// parameterization and return `None`.
    pub fn texture_coords(&self, p: &Vec3) -> Option<(f64, f64)> {
        use std::f64::consts::{FRAC_PI_2, PI};
        let azimuth = |p: &Vec3| (p.y.atan2(p.x) + PI) / (2.0 * PI);
        match self {
            Surface::Sphere { radius } => {
                let lat = (p.z / radius).clamp(-1.0, 1.0).asin();
                Some((azimuth(p), (FRAC_PI_2 - lat) / PI))
            }
            Surface::Torus { major, .. } => {
                let rho = p.x.hypot(p.y);
                let minor_angle = p.z.atan2(rho - major);
                Some((azimuth(p), (minor_angle + PI) / (2.0 * PI)))
            }
            Surface::Plane(patch) => Some(patch.texture_coords(p)),
            Surface::Revolution(profile) => {
                let s = profile.arclength_at(p.x.hypot(p.y), p.z);
                Some((azimuth(p), 1.0 - s / profile.length()))
            }
            Surface::Mesh(_) => None,
        }
    }

    /// Whether the first texture coordinate wraps around.
    pub fn periodic_coords(&self) -> (bool, bool) {
        match self {
            Surface::Sphere { .. } | Surface::Revolution(_) => (true, false),
            Surface::Torus { .. } => (true, true),
            Surface::Plane(_) | Surface::Mesh(_) => (false, false),
        }
    }
}

impl ClosestPoint for Surface {
    fn closest_point(&self, x: &Vec3) -> Result<SurfacePoint, GeometryError> {
        match self {
            Surface::Sphere { radius } => cp_sphere(x, *radius),
            Surface::Torus { major, minor } => cp_torus(x, *major, *minor),
            Surface::Plane(patch) => Ok(cp_plane_patch(x, patch)),
            Surface::Revolution(profile) => cp_revolution(x, profile),
            Surface::Mesh(mesh) => Ok(mesh.closest(x).point),
        }
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        match self {
            Surface::Sphere { radius } => (Vec3::repeat(-radius), Vec3::repeat(*radius)),
            Surface::Torus { major, minor } => {
                let ext = major + minor;
                (Vec3::new(-ext, -ext, -minor), Vec3::new(ext, ext, *minor))
            }
            Surface::Plane(patch) => patch.bounds(),
            Surface::Revolution(profile) => profile.bounds(),
            Surface::Mesh(mesh) => mesh.bounds(),
        }
    }
}
