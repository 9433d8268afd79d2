use super::{degenerate, GeometryError, SurfacePoint, Vec3, DEGENERATE_EPS};

/// Generating curve of a surface of revolution about the z-axis.
///
/// A polyline of `(s, z)` vertices where `s >= 0` is the distance from the axis.
/// The surface normal is the profile normal `(dz, -ds)` rotated about the axis,
/// so a profile traversed bottom to top yields outward normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    points: Vec<[f64; 2]>,
    cumulative: Vec<f64>,
    seg_normals: Vec<[f64; 2]>,
}

impl Profile {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        if points.len() < 2 || points.iter().any(|p| p[0] < 0.0 || !p[0].is_finite() || !p[1].is_finite()) {
            return Err(GeometryError::InvalidProfile);
        }
        let mut cumulative = vec![0.0];
        let mut seg_normals = Vec::with_capacity(points.len() - 1);
        for w in points.windows(2) {
            let (ds, dz) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            let len = ds.hypot(dz);
            if len == 0.0 {
                return Err(GeometryError::InvalidProfile);
            }
            cumulative.push(cumulative.last().unwrap() + len);
            seg_normals.push([dz / len, -ds / len]);
        }
        Ok(Self { points, cumulative, seg_normals })
    }

    /// Parses `s,z` rows; blank lines, `#` comments and a non-numeric header are skipped.
    pub fn from_csv(text: &str) -> Result<Self, GeometryError> {
        let mut points = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',').map(|f| f.trim().parse::<f64>());
            match (fields.next(), fields.next(), fields.next()) {
                (Some(Ok(s)), Some(Ok(z)), None) => points.push([s, z]),
                _ if points.is_empty() => continue,
                _ => return Err(GeometryError::InvalidProfile),
            }
        }
        Self::new(points)
    }

    /// A vase-like profile sampled from a smooth curve, `z ∈ [-1, 1]`.
    pub fn vase(samples: usize) -> Self {
        let n = samples.max(2);
        let points = (0..n)
            .map(|i| {
                let z = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                let s = 0.6 + 0.2 * (1.8 * z + 0.6).sin() - 0.1 * z;
                [s, z]
            })
            .collect();
        Self::new(points).expect("vase profile is valid")
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub(crate) fn bounds(&self) -> (Vec3, Vec3) {
        let smax = self.points.iter().map(|p| p[0]).fold(0.0, f64::max);
        let zmin = self.points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let zmax = self.points.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        (Vec3::new(-smax, -smax, zmin), Vec3::new(smax, smax, zmax))
    }

    /// Nearest polyline point to `(s, z)`: `(segment, t, point)`, first minimum wins.
    fn nearest(&self, s: f64, z: f64) -> (usize, f64, [f64; 2]) {
        let mut best = (0, 0.0, self.points[0], f64::INFINITY);
        for (k, w) in self.points.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let t = (((s - a[0]) * d[0] + (z - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
            let p = [a[0] + t * d[0], a[1] + t * d[1]];
            let dist2 = (s - p[0]).powi(2) + (z - p[1]).powi(2);
            if dist2 < best.3 {
                best = (k, t, p, dist2);
            }
        }
        (best.0, best.1, best.2)
    }

    fn normal_at(&self, seg: usize, t: f64) -> [f64; 2] {
        let last = self.seg_normals.len() - 1;
        let vertex_blend = |a: [f64; 2], b: [f64; 2]| {
            let m = [a[0] + b[0], a[1] + b[1]];
            let len = m[0].hypot(m[1]);
            if len < DEGENERATE_EPS {
                a
            } else {
                [m[0] / len, m[1] / len]
            }
        };
        if t <= 0.0 && seg > 0 {
            vertex_blend(self.seg_normals[seg - 1], self.seg_normals[seg])
        } else if t >= 1.0 && seg < last {
            vertex_blend(self.seg_normals[seg], self.seg_normals[seg + 1])
        } else {
            self.seg_normals[seg]
        }
    }

    /// Arclength from the first vertex to the profile point nearest `(s, z)`.
    pub fn arclength_at(&self, s: f64, z: f64) -> f64 {
        let (seg, t, _) = self.nearest(s, z);
        self.cumulative[seg] + t * (self.cumulative[seg + 1] - self.cumulative[seg])
    }
}

/// Closest point on the surface obtained by revolving `profile` about the z-axis.
///
/// The query reduces to a planar closest point problem in the half-plane
/// `(sqrt(x² + y²), z)`; queries past the profile ends land on the end circles.
pub fn cp_revolution(x: &Vec3, profile: &Profile) -> Result<SurfacePoint, GeometryError> {
    let rho = x.x.hypot(x.y);
    let (seg, t, p) = profile.nearest(rho, x.z);
    let (cos, sin) = if rho < DEGENERATE_EPS {
        if p[0] > DEGENERATE_EPS {
            return Err(degenerate(x));
        }
        (1.0, 0.0)
    } else {
        (x.x / rho, x.y / rho)
    };
    let n = profile.normal_at(seg, t);
    let position = Vec3::new(p[0] * cos, p[0] * sin, p[1]);
    Ok(SurfacePoint { position, normal: Vec3::new(n[0] * cos, n[0] * sin, n[1]), distance: (x - position).norm() })
}
