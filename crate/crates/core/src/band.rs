//! The computational band: Cartesian grid points within a fixed distance of the surface.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{ClosestPoint, GeometryError, SurfacePoint, Vec3};

#[derive(Debug, Error)]
pub enum BandError {
    #[error("no grid point lies within the band radius of the surface")]
    EmptyBand,
    #[error("band reaches the reference box boundary at grid point {0:?}; enlarge the box")]
    BandTouchesBoxBoundary([i32; 3]),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("malformed band dump: {0}")]
    Parse(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Uniform Cartesian grid over a reference box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 3],
    pub h: f64,
    pub extents: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: [f64; 3], h: f64, extents: [usize; 3]) -> Result<Self, BandError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(BandError::InvalidGrid(format!("h must be positive, got {h}")));
        }
        if extents.contains(&0) {
            return Err(BandError::InvalidGrid(format!("extents must be >= 1, got {extents:?}")));
        }
        if extents.iter().map(|&e| e as u128).product::<u128>() >= u32::MAX as u128 {
            return Err(BandError::InvalidGrid("grid has too many points".into()));
        }
        Ok(Self { origin, h, extents })
    }

    /// Grid covering the cube `[lo, hi]³` with spacing `h`.
    pub fn cube(lo: f64, hi: f64, h: f64) -> Result<Self, BandError> {
        if !(hi > lo) {
            return Err(BandError::InvalidGrid(format!("box [{lo}, {hi}] is empty")));
        }
        let n = ((hi - lo) / h).round() as usize + 1;
        Self::new([lo; 3], h, [n; 3])
    }

    /// Smallest grid with nodes at integer multiples of `h` covering `[lo, hi]`
    /// grown by `margin` on every side.
    pub fn fitted(lo: &Vec3, hi: &Vec3, h: f64, margin: f64) -> Result<Self, BandError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(BandError::InvalidGrid(format!("h must be positive, got {h}")));
        }
        let first = (lo - Vec3::repeat(margin)).map(|v| (v / h).floor());
        let last = (hi + Vec3::repeat(margin)).map(|v| (v / h).ceil());
        let extents = [0, 1, 2].map(|a| (last[a] - first[a]) as usize + 1);
        Self::new([first.x * h, first.y * h, first.z * h], h, extents)
    }

    pub fn position(&self, c: [i32; 3]) -> Vec3 {
        Vec3::new(
            self.origin[0] + self.h * c[0] as f64,
            self.origin[1] + self.h * c[1] as f64,
            self.origin[2] + self.h * c[2] as f64,
        )
    }

    pub fn contains(&self, c: [i32; 3]) -> bool {
        (0..3).all(|a| c[a] >= 0 && (c[a] as usize) < self.extents[a])
    }

    fn linear(&self, c: [i32; 3]) -> usize {
        (c[0] as usize * self.extents[1] + c[1] as usize) * self.extents[2] + c[2] as usize
    }
}

/// Band radius for an interpolation of degree `interp_degree` followed by a finite
/// difference stencil reaching `fd_stencil_radius` cells.
///
/// `√3 · h · ((p + 1) / 2 + s + 1)`: the interpolation block half-width plus the
/// stencil reach plus one cell, measured along the cube diagonal.
pub fn compute_band_radius(interp_degree: u32, fd_stencil_radius: u32, h: f64) -> f64 {
    3f64.sqrt() * h * ((interp_degree as f64 + 1.0) / 2.0 + fd_stencil_radius as f64 + 1.0)
}

/// Grid points within `band_radius` of the surface, in lexicographic `(x, y, z)` order.
#[derive(Debug, Clone)]
pub struct BandedGrid {
    spec: GridSpec,
    points: Vec<[i32; 3]>,
    index_map: Vec<u32>,
    band_radius: f64,
}

const NOT_IN_BAND: u32 = u32::MAX;
const COARSE_BLOCK: i32 = 8;

/// Builds the band for `surface`; see [`build_band_with_cp`].
pub fn build_band<S: ClosestPoint + Sync + ?Sized>(
    surface: &S,
    spec: GridSpec,
    radius: f64,
) -> Result<BandedGrid, BandError> {
    build_band_with_cp(surface, spec, radius).map(|(band, _)| band)
}

/// Builds the band and returns the closest point of every band point alongside it.
///
/// Blocks of grid points are first discarded using the distance at the block
/// centre (distance to a surface is 1-Lipschitz), then the remaining points are
/// tested individually. Points where the closest point is not unique lie on the
/// medial axis, which must be farther than `radius` from the surface, and are
/// never band points.
pub fn build_band_with_cp<S: ClosestPoint + Sync + ?Sized>(
    surface: &S,
    spec: GridSpec,
    radius: f64,
) -> Result<(BandedGrid, Vec<SurfacePoint>), BandError> {
    use rayon::prelude::*;

    if !(radius > 0.0) {
        return Err(BandError::InvalidGrid(format!("band radius must be positive, got {radius}")));
    }
    let ext = spec.extents.map(|e| e as i32);
    let nblocks = ext.map(|e| (e + COARSE_BLOCK - 1) / COARSE_BLOCK);
    let half_diag = 3f64.sqrt() * spec.h * COARSE_BLOCK as f64 / 2.0;

    let blocks: Vec<[i32; 3]> = (0..nblocks[0])
        .flat_map(|bx| (0..nblocks[1]).flat_map(move |by| (0..nblocks[2]).map(move |bz| [bx, by, bz])))
        .collect();

    let per_block: Vec<Vec<([i32; 3], SurfacePoint)>> = blocks
        .par_iter()
        .map(|b| {
            let lo = b.map(|v| v * COARSE_BLOCK);
            let hi = [0, 1, 2].map(|a| (lo[a] + COARSE_BLOCK).min(ext[a]));
            let centre = Vec3::new(
                spec.origin[0] + spec.h * (lo[0] + hi[0] - 1) as f64 / 2.0,
                spec.origin[1] + spec.h * (lo[1] + hi[1] - 1) as f64 / 2.0,
                spec.origin[2] + spec.h * (lo[2] + hi[2] - 1) as f64 / 2.0,
            );
            if let Ok(cp) = surface.closest_point(&centre) {
                if cp.distance > radius + half_diag {
                    return Vec::new();
                }
            }
            let mut found = Vec::new();
            for i in lo[0]..hi[0] {
                for j in lo[1]..hi[1] {
                    for k in lo[2]..hi[2] {
                        let c = [i, j, k];
                        if let Ok(cp) = surface.closest_point(&spec.position(c)) {
                            if cp.distance <= radius {
                                found.push((c, cp));
                            }
                        }
                    }
                }
            }
            found
        })
        .collect();

    let mut all: Vec<([i32; 3], SurfacePoint)> = per_block.into_iter().flatten().collect();
    if all.is_empty() {
        return Err(BandError::EmptyBand);
    }
    all.sort_unstable_by_key(|(c, _)| *c);
    if let Some((c, _)) = all.iter().find(|(c, _)| (0..3).any(|a| c[a] == 0 || c[a] == ext[a] - 1)) {
        return Err(BandError::BandTouchesBoxBoundary(*c));
    }
    let (points, cps): (Vec<_>, Vec<_>) = all.into_iter().unzip();
    let band = BandedGrid::from_points(spec, points, radius)?;
    Ok((band, cps))
}

impl BandedGrid {
    /// Assembles a band from already sorted, in-box points.
    pub fn from_points(spec: GridSpec, points: Vec<[i32; 3]>, band_radius: f64) -> Result<Self, BandError> {
        let total: usize = spec.extents.iter().product();
        let mut index_map = vec![NOT_IN_BAND; total];
        for (i, w) in points.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(BandError::Parse(format!("points not strictly increasing at {}", i + 1)));
            }
        }
        for (i, c) in points.iter().enumerate() {
            if !spec.contains(*c) {
                return Err(BandError::Parse(format!("point {c:?} outside grid")));
            }
            index_map[spec.linear(*c)] = i as u32;
        }
        Ok(Self { spec, points, index_map, band_radius })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[i32; 3]] {
        &self.points
    }

    pub fn band_radius(&self) -> f64 {
        self.band_radius
    }

    pub fn position(&self, i: usize) -> Vec3 {
        self.spec.position(self.points[i])
    }

    pub fn index_of(&self, c: [i32; 3]) -> Option<usize> {
        if !self.spec.contains(c) {
            return None;
        }
        match self.index_map[self.spec.linear(c)] {
            NOT_IN_BAND => None,
            i => Some(i as usize),
        }
    }

    /// Band index of the point at `offset` from band point `i`.
    pub fn neighbor(&self, i: usize, offset: [i32; 3]) -> Option<usize> {
        let c = self.points[i];
        self.index_of([c[0] + offset[0], c[1] + offset[1], c[2] + offset[2]])
    }

    /// Text dump: a header line, then one `i j k` triple per band point.
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "cpdiff-band h={} origin={},{},{} extents={},{},{} radius={} count={}\n",
            s.h,
            s.origin[0],
            s.origin[1],
            s.origin[2],
            s.extents[0],
            s.extents[1],
            s.extents[2],
            self.band_radius,
            self.points.len()
        );
        for c in &self.points {
            writeln!(out, "{} {} {}", c[0], c[1], c[2]).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, BandError> {
        let bad = |m: &str| BandError::Parse(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty dump"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("cpdiff-band") {
            return Err(bad("missing cpdiff-band header"));
        }
        let mut h = None;
        let mut origin = None;
        let mut extents = None;
        let mut radius = None;
        let mut count = None;
        let floats = |v: &str| v.split(',').map(|x| x.parse::<f64>()).collect::<Result<Vec<_>, _>>();
        for f in fields {
            let (key, val) = f.split_once('=').ok_or_else(|| bad("header field without '='"))?;
            match key {
                "h" => h = val.parse::<f64>().ok(),
                "origin" => origin = floats(val).ok().filter(|v| v.len() == 3),
                "extents" => {
                    extents = val
                        .split(',')
                        .map(|x| x.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .ok()
                        .filter(|v| v.len() == 3)
                }
                "radius" => radius = val.parse::<f64>().ok(),
                "count" => count = val.parse::<usize>().ok(),
                _ => return Err(bad(&format!("unknown header field {key}"))),
            }
        }
        let (Some(h), Some(o), Some(e), Some(r), Some(n)) = (h, origin, extents, radius, count) else {
            return Err(bad("incomplete header"));
        };
        let spec = GridSpec::new([o[0], o[1], o[2]], h, [e[0], e[1], e[2]])?;
        let mut points = Vec::with_capacity(n);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let v: Vec<i32> = line
                .split_whitespace()
                .map(|x| x.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(&format!("bad point line '{line}'")))?;
            if v.len() != 3 {
                return Err(bad(&format!("bad point line '{line}'")));
            }
            points.push([v[0], v[1], v[2]]);
        }
        if points.len() != n {
            return Err(bad(&format!("header says {n} points, found {}", points.len())));
        }
        Self::from_points(spec, points, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PlanePatch, Surface};

    #[test]
    fn radius_formula() {
        let r = compute_band_radius(3, 1, 0.0125);
        assert!((r - 3f64.sqrt() * 0.0125 * 4.0).abs() < 1e-15);
        assert!(compute_band_radius(1, 0, 1.0) >= 1.0);
        // monotone in every argument
        assert!(compute_band_radius(3, 2, 0.1) > compute_band_radius(3, 1, 0.1));
        assert!(compute_band_radius(4, 1, 0.1) > compute_band_radius(3, 1, 0.1));
        assert!(compute_band_radius(3, 1, 0.2) > compute_band_radius(3, 1, 0.1));
        // a degree-3 tensor interpolant in 3D uses (p + 1)^d points
        assert_eq!((3 + 1usize).pow(3), 64);
    }

    #[test]
    fn sphere_band_matches_brute_force_scan() {
        let sphere = Surface::Sphere { radius: 1.0 };
        let spec = GridSpec::cube(-1.5, 1.5, 0.1).unwrap();
        let band = build_band(&sphere, spec, 0.25).unwrap();
        let mut brute = Vec::new();
        for i in 0..spec.extents[0] as i32 {
            for j in 0..spec.extents[1] as i32 {
                for k in 0..spec.extents[2] as i32 {
                    let p = spec.position([i, j, k]);
                    if (p.norm() - 1.0).abs() <= 0.25 {
                        brute.push([i, j, k]);
                    }
                }
            }
        }
        assert_eq!(band.points(), brute.as_slice());
        for (i, c) in band.points().iter().enumerate() {
            assert_eq!(band.index_of(*c), Some(i));
        }
    }

    #[test]
    fn plane_between_grid_planes_gives_empty_band() {
        let h = 0.1;
        // grid planes at z = -1 + k h; the patch sits halfway between two of them
        let patch = Surface::Plane(PlanePatch::new([-0.5, -0.5], [0.5, 0.5], h / 2.0));
        let spec = GridSpec::cube(-1.0, 1.0, h).unwrap();
        assert!(matches!(build_band(&patch, spec, h / 4.0), Err(BandError::EmptyBand)));
    }

    #[test]
    fn torus_fits_reference_box() {
        let torus = Surface::Torus { major: 1.0, minor: 0.4 };
        let h = 0.05;
        let spec = GridSpec::cube(-1.9, 1.9, h).unwrap();
        build_band(&torus, spec, compute_band_radius(3, 1, h)).unwrap();
        let tight = GridSpec::cube(-1.6, 1.6, h).unwrap();
        assert!(matches!(
            build_band(&torus, tight, compute_band_radius(3, 1, h)),
            Err(BandError::BandTouchesBoxBoundary(_))
        ));
    }

    #[test]
    fn dump_round_trip_and_determinism() {
        let sphere = Surface::Sphere { radius: 1.0 };
        let spec = GridSpec::cube(-1.5, 1.5, 0.1).unwrap();
        let a = build_band(&sphere, spec, 0.3).unwrap();
        let b = build_band(&sphere, spec, 0.3).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let back = BandedGrid::from_text(&a.to_text()).unwrap();
        assert_eq!(back.points(), a.points());
        assert_eq!(back.spec(), a.spec());
        assert_eq!(back.to_text(), a.to_text());
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(GridSpec::new([0.0; 3], -0.1, [4; 3]).is_err());
        assert!(GridSpec::new([0.0; 3], 0.1, [0, 4, 4]).is_err());
    }
}
