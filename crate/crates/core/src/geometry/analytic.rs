use super::{degenerate, GeometryError, SurfacePoint, Vec3, DEGENERATE_EPS};

/// Closest point on the sphere of the given radius centred at the origin.
pub fn cp_sphere(x: &Vec3, radius: f64) -> Result<SurfacePoint, GeometryError> {
    let norm = x.norm();
    if norm < DEGENERATE_EPS {
        return Err(degenerate(x));
    }
    let normal = x / norm;
    Ok(SurfacePoint { position: normal * radius, normal, distance: (norm - radius).abs() })
}

/// Closest point on the torus `(R - sqrt(x² + y²))² + z² = r²`.
///
/// The query is first projected to the ring of centres (radius `major` in the
/// xy-plane) and then pushed out by `minor` along the connecting direction.
pub fn cp_torus(x: &Vec3, major: f64, minor: f64) -> Result<SurfacePoint, GeometryError> {
    let rho = x.x.hypot(x.y);
    if rho < DEGENERATE_EPS {
        return Err(degenerate(x));
    }
    let ring = Vec3::new(major * x.x / rho, major * x.y / rho, 0.0);
    let offset = x - ring;
    let len = offset.norm();
    if len < DEGENERATE_EPS {
        return Err(degenerate(x));
    }
    let normal = offset / len;
    Ok(SurfacePoint { position: ring + normal * minor, normal, distance: (len - minor).abs() })
}

/// Axis-aligned rectangle in the plane `z = height`, normal `+z`.
///
/// An open surface: queries beyond the rectangle clamp to its boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePatch {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub height: f64,
}

impl PlanePatch {
    pub fn new(min: [f64; 2], max: [f64; 2], height: f64) -> Self {
        Self { min, max, height }
    }

    pub(crate) fn bounds(&self) -> (Vec3, Vec3) {
        (Vec3::new(self.min[0], self.min[1], self.height), Vec3::new(self.max[0], self.max[1], self.height))
    }

    pub(crate) fn texture_coords(&self, p: &Vec3) -> (f64, f64) {
        let a = (p.x - self.min[0]) / (self.max[0] - self.min[0]);
        let b = (self.max[1] - p.y) / (self.max[1] - self.min[1]);
        (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0))
    }
}

pub fn cp_plane_patch(x: &Vec3, patch: &PlanePatch) -> SurfacePoint {
    let position =
        Vec3::new(x.x.clamp(patch.min[0], patch.max[0]), x.y.clamp(patch.min[1], patch.max[1]), patch.height);
    SurfacePoint { position, normal: Vec3::z(), distance: (x - position).norm() }
}
