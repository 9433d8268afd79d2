//! Finite difference stencils on the band.
//!
//! Difference operators are evaluated only on *interior* rows, band points
//! whose full 19-point neighbourhood (the point, its six axis neighbours and
//! the twelve in-plane diagonals) lies in the band. The remaining rim rows are
//! left at zero; the band closure guarantees the extension never reads them.

use rayon::prelude::*;

use super::field::{SurfaceField, TensorField, XX, XY, XZ, YY, YZ, ZZ};
use super::SparseOperator;
use crate::band::BandedGrid;

/// Neighbour offsets: `-x, +x, -y, +y, -z, +z`, then the in-plane diagonals
/// of the xy, xz and yz planes in `(--, -+, +-, ++)` order.
pub const OFFSETS: [[i32; 3]; 18] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
    [-1, -1, 0],
    [-1, 1, 0],
    [1, -1, 0],
    [1, 1, 0],
    [-1, 0, -1],
    [-1, 0, 1],
    [1, 0, -1],
    [1, 0, 1],
    [0, -1, -1],
    [0, -1, 1],
    [0, 1, -1],
    [0, 1, 1],
];

const MISSING: u32 = u32::MAX;

/// Index of the axis neighbour in `OFFSETS`.
const fn axis_slot(axis: usize, positive: bool) -> usize {
    2 * axis + positive as usize
}

/// Index of the diagonal neighbour at `sa·e_a + sb·e_b` (`a < b`) in `OFFSETS`.
const fn diag_slot(a: usize, b: usize, pa: bool, pb: bool) -> usize {
    let plane = match (a, b) {
        (0, 1) => 6,
        (0, 2) => 10,
        _ => 14,
    };
    plane + 2 * pa as usize + pb as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffVariant {
    Forward,
    Backward,
    Central,
}

/// Neighbour table of the band.
#[derive(Debug, Clone)]
pub struct StencilTopology {
    neighbors: Vec<[u32; 18]>,
    interior: Vec<bool>,
    h: f64,
}

impl StencilTopology {
    pub fn new(band: &BandedGrid) -> Self {
        let neighbors: Vec<[u32; 18]> = (0..band.len())
            .into_par_iter()
            .map(|i| OFFSETS.map(|o| band.neighbor(i, o).map_or(MISSING, |j| j as u32)))
            .collect();
        let interior = neighbors.par_iter().map(|n| n.iter().all(|&j| j != MISSING)).collect();
        Self { neighbors, interior, h: band.h() }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.interior[i]
    }

    pub fn interior_count(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }

    fn slot(&self, i: usize, s: usize) -> Option<usize> {
        match self.neighbors[i][s] {
            MISSING => None,
            j => Some(j as usize),
        }
    }

    #[inline]
    fn nb(&self, i: usize, s: usize) -> usize {
        self.neighbors[i][s] as usize
    }
}

/// Standard 7-point Laplacian, `(Σ v_nb − 6 v_i) / h²`, on interior rows.
pub fn assemble_laplacian(topo: &StencilTopology) -> SparseOperator {
    let inv_h2 = 1.0 / (topo.h * topo.h);
    let rows = (0..topo.len())
        .into_par_iter()
        .map(|i| {
            if !topo.interior[i] {
                return Vec::new();
            }
            let mut row: Vec<(usize, f64)> = (0..6).map(|s| (topo.nb(i, s), inv_h2)).collect();
            row.push((i, -6.0 * inv_h2));
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect();
    SparseOperator::from_rows(rows)
}

/// Two-point difference along `axis`: forward and backward scaled by `1/h`,
/// central by `1/(2h)`. Rows missing a required neighbour are zero.
pub fn axis_diff(field: &SurfaceField, topo: &StencilTopology, axis: usize, variant: DiffVariant) -> SurfaceField {
    let k = field.channels();
    let v = field.values();
    let h = topo.h;
    let mut out = SurfaceField::zeros(field.len(), k);
    out.values_mut().par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        let lo = topo.slot(i, axis_slot(axis, false));
        let hi = topo.slot(i, axis_slot(axis, true));
        let (a, b, scale) = match (variant, lo, hi) {
            (DiffVariant::Forward, _, Some(p)) => (i, p, 1.0 / h),
            (DiffVariant::Backward, Some(m), _) => (m, i, 1.0 / h),
            (DiffVariant::Central, Some(m), Some(p)) => (m, p, 0.5 / h),
            _ => return,
        };
        for (c, o) in row.iter_mut().enumerate() {
            *o = (v[b * k + c] - v[a * k + c]) * scale;
        }
    });
    out
}

/// Forward average along `axis`, `(v_i + v_{i+e})/2`; rows without the neighbour are zero.
pub fn axis_avg_forward(field: &SurfaceField, topo: &StencilTopology, axis: usize) -> SurfaceField {
    let k = field.channels();
    let v = field.values();
    let mut out = SurfaceField::zeros(field.len(), k);
    out.values_mut().par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        if let Some(p) = topo.slot(i, axis_slot(axis, true)) {
            for (c, o) in row.iter_mut().enumerate() {
                *o = 0.5 * (v[i * k + c] + v[p * k + c]);
            }
        }
    });
    out
}

/// Discrete `div(G ∇v)` with the nine-term stencil.
///
/// Diagonal terms use `D⁻(A⁺G_aa · D⁺v)`, so tensor components are averaged to
/// edge centres; off-diagonal terms use nested central differences
/// `Dᶜ_a(G_ab · Dᶜ_b v)` with the point values of `G_ab`. Every channel of `v`
/// shares the same `G`.
pub fn anisotropic_divergence(g: &TensorField, v: &SurfaceField, topo: &StencilTopology) -> SurfaceField {
    assert_eq!(g.len(), v.len());
    let k = v.channels();
    let vals = v.values();
    let gv = g.as_field().values();
    let inv_h2 = 1.0 / (topo.h * topo.h);
    let inv_4h2 = 0.25 * inv_h2;
    let diag = [XX, YY, ZZ];
    let off = |a: usize, b: usize| match (a.min(b), a.max(b)) {
        (0, 1) => XY,
        (0, 2) => XZ,
        _ => YZ,
    };

    let mut out = SurfaceField::zeros(v.len(), k);
    out.values_mut().par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        if !topo.interior[i] {
            return;
        }
        let gi = &gv[i * 6..i * 6 + 6];
        for (c, o) in row.iter_mut().enumerate() {
            let at = |j: usize| vals[j * k + c];
            let vi = at(i);
            let mut acc = 0.0;
            for a in 0..3 {
                let m = topo.nb(i, axis_slot(a, false));
                let p = topo.nb(i, axis_slot(a, true));
                let g_p = 0.5 * (gi[diag[a]] + gv[p * 6 + diag[a]]);
                let g_m = 0.5 * (gv[m * 6 + diag[a]] + gi[diag[a]]);
                acc += (g_p * (at(p) - vi) - g_m * (vi - at(m))) * inv_h2;
            }
            for a in 0..3 {
                for b in 0..3 {
                    if a == b {
                        continue;
                    }
                    let comp = off(a, b);
                    let p = topo.nb(i, axis_slot(a, true));
                    let m = topo.nb(i, axis_slot(a, false));
                    // Dᶜ_b v at i ± e_a uses the diagonals (±e_a ± e_b)
                    let dv = |pa: bool| {
                        let (lo, hi) = if a < b {
                            (diag_slot(a, b, pa, false), diag_slot(a, b, pa, true))
                        } else {
                            (diag_slot(b, a, false, pa), diag_slot(b, a, true, pa))
                        };
                        at(topo.nb(i, hi)) - at(topo.nb(i, lo))
                    };
                    acc += (gv[p * 6 + comp] * dv(true) - gv[m * 6 + comp] * dv(false)) * inv_4h2;
                }
            }
            *o = acc;
        }
    });
    out
}

/// `div(g ∇v)` for a scalar diffusivity: the diagonal terms of
/// [`anisotropic_divergence`] with `G = g·I`.
pub fn isotropic_divergence(g: &[f64], v: &SurfaceField, topo: &StencilTopology) -> SurfaceField {
    assert_eq!(g.len(), v.len());
    let k = v.channels();
    let vals = v.values();
    let inv_h2 = 1.0 / (topo.h * topo.h);
    let mut out = SurfaceField::zeros(v.len(), k);
    out.values_mut().par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        if !topo.interior[i] {
            return;
        }
        for (c, o) in row.iter_mut().enumerate() {
            let vi = vals[i * k + c];
            let mut acc = 0.0;
            for a in 0..3 {
                let m = topo.nb(i, axis_slot(a, false));
                let p = topo.nb(i, axis_slot(a, true));
                let g_p = 0.5 * (g[i] + g[p]);
                let g_m = 0.5 * (g[m] + g[i]);
                acc += (g_p * (vals[p * k + c] - vi) - g_m * (vi - vals[m * k + c])) * inv_h2;
            }
            *o = acc;
        }
    });
    out
}

/// Central-difference gradient on interior rows; output has `3·k` channels,
/// `(∂x, ∂y, ∂z)` for each input channel in turn.
pub fn central_gradient(v: &SurfaceField, topo: &StencilTopology) -> SurfaceField {
    let k = v.channels();
    let vals = v.values();
    let scale = 0.5 / topo.h;
    let mut out = SurfaceField::zeros(v.len(), 3 * k);
    out.values_mut().par_chunks_mut(3 * k).enumerate().for_each(|(i, row)| {
        if !topo.interior[i] {
            return;
        }
        for c in 0..k {
            for a in 0..3 {
                let m = topo.nb(i, axis_slot(a, false));
                let p = topo.nb(i, axis_slot(a, true));
                row[3 * c + a] = (vals[p * k + c] - vals[m * k + c]) * scale;
            }
        }
    });
    out
}
