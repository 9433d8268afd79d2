//! Closest point extension by tri-cubic interpolation.
//!
//! Row `i` of the extension operator evaluates the tensor-product cubic
//! Lagrange interpolant of the band data at `cp(x_i)`. The 4×4×4 block is
//! anchored so that `cp(x_i)` falls in its central cell.

use rayon::prelude::*;

use super::{OperatorError, SparseOperator, StencilTopology, SurfaceField};
use crate::band::{BandedGrid, GridSpec};
use crate::geometry::{SurfacePoint, Vec3};

/// Cubic Lagrange weights for nodes `-1, 0, 1, 2` at parameter `s`.
pub fn cubic_weights(s: f64) -> [f64; 4] {
    let (sm1, sm2, sp1) = (s - 1.0, s - 2.0, s + 1.0);
    [-s * sm1 * sm2 / 6.0, sp1 * sm1 * sm2 / 2.0, -sp1 * s * sm2 / 2.0, sp1 * s * sm1 / 6.0]
}

/// First grid coordinate of the 4×4×4 block around `p` and the per-axis weights.
///
/// The central cell is `[floor(t), floor(t) + 1]` per axis, so points on a
/// grid plane take the block whose central cell starts at that plane.
pub fn interpolation_stencil(spec: &GridSpec, p: &Vec3) -> ([i32; 3], [[f64; 4]; 3]) {
    let mut base = [0i32; 3];
    let mut weights = [[0.0; 4]; 3];
    for a in 0..3 {
        let t = (p[a] - spec.origin[a]) / spec.h;
        let cell = t.floor();
        base[a] = cell as i32 - 1;
        weights[a] = cubic_weights(t - cell);
    }
    (base, weights)
}

/// The extension matrix `E` in compact form.
///
/// For each row the 16 runs of four z-consecutive band points are stored by
/// their first band index (z-runs are contiguous because of the lexicographic
/// ordering), together with the three 1D weight vectors.
#[derive(Debug, Clone)]
pub struct ExtensionOperator {
    runs: Vec<[u32; 16]>,
    weights: Vec<[[f64; 4]; 3]>,
}

/// Assembles `E` at the given closest points.
///
/// Every footprint point must be an interior row of `topo`, so that one
/// extension followed by one stencil application never leaves the band.
pub fn assemble_extension(
    band: &BandedGrid,
    topo: &StencilTopology,
    cps: &[SurfacePoint],
) -> Result<ExtensionOperator, OperatorError> {
    assert_eq!(cps.len(), band.len());
    let rows: Result<Vec<_>, _> = cps
        .par_iter()
        .enumerate()
        .map(|(i, cp)| {
            let (base, w) = interpolation_stencil(band.spec(), &cp.position);
            let mut runs = [0u32; 16];
            for a in 0..4 {
                for b in 0..4 {
                    let start = [base[0] + a, base[1] + b, base[2]];
                    let first = band.index_of(start);
                    let ok = first.is_some_and(|j| {
                        (0..4).all(|c| band.points().get(j + c) == Some(&[start[0], start[1], start[2] + c as i32]))
                            && (0..4).all(|c| topo.is_interior(j + c))
                    });
                    match (ok, first) {
                        (true, Some(j)) => runs[(a * 4 + b) as usize] = j as u32,
                        _ => return Err(OperatorError::FootprintEscapesBand { row: i, point: start }),
                    }
                }
            }
            Ok((runs, w))
        })
        .collect();
    let (runs, weights) = rows?.into_iter().unzip();
    Ok(ExtensionOperator { runs, weights })
}

#[inline(always)]
fn apply_row<const K: usize>(runs: &[u32; 16], w: &[[f64; 4]; 3], x: &[f64], out: &mut [f64]) {
    let mut acc = [0.0; K];
    for a in 0..4 {
        for b in 0..4 {
            let wab = w[0][a] * w[1][b];
            let start = runs[a * 4 + b] as usize * K;
            let mut line = [0.0; K];
            for c in 0..4 {
                let base = start + c * K;
                for ch in 0..K {
                    line[ch] += w[2][c] * x[base + ch];
                }
            }
            for ch in 0..K {
                acc[ch] += wab * line[ch];
            }
        }
    }
    out.copy_from_slice(&acc);
}

fn apply_row_dyn(runs: &[u32; 16], w: &[[f64; 4]; 3], x: &[f64], out: &mut [f64]) {
    let k = out.len();
    out.fill(0.0);
    for a in 0..4 {
        for b in 0..4 {
            let wab = w[0][a] * w[1][b];
            let start = runs[a * 4 + b] as usize * k;
            for c in 0..4 {
                let wc = wab * w[2][c];
                for ch in 0..k {
                    out[ch] += wc * x[start + c * k + ch];
                }
            }
        }
    }
}

impl ExtensionOperator {
    pub fn rows(&self) -> usize {
        self.runs.len()
    }

    /// The 64 `(band index, weight)` pairs of row `i`.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let (runs, w) = (&self.runs[i], &self.weights[i]);
        let mut out = Vec::with_capacity(64);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    out.push((runs[a * 4 + b] as usize + c, w[0][a] * w[1][b] * w[2][c]));
                }
            }
        }
        out
    }

    pub fn to_sparse(&self) -> SparseOperator {
        SparseOperator::from_rows((0..self.rows()).map(|i| self.row(i)).collect())
    }

    /// `out = E · input`; the result is flagged as an extension.
    pub fn apply_into(&self, input: &SurfaceField, out: &mut SurfaceField) {
        let k = input.channels();
        assert_eq!(out.channels(), k);
        assert_eq!(out.len(), self.rows());
        let x = input.values();
        let rows = self.runs.par_iter().zip(self.weights.par_iter());
        let chunks = out.values_mut().par_chunks_mut(k);
        match k {
            1 => rows.zip(chunks).for_each(|((r, w), o)| apply_row::<1>(r, w, x, o)),
            3 => rows.zip(chunks).for_each(|((r, w), o)| apply_row::<3>(r, w, x, o)),
            6 => rows.zip(chunks).for_each(|((r, w), o)| apply_row::<6>(r, w, x, o)),
            _ => rows.zip(chunks).for_each(|((r, w), o)| apply_row_dyn(r, w, x, o)),
        }
        out.extended = true;
    }

    pub fn apply(&self, input: &SurfaceField) -> SurfaceField {
        let mut out = SurfaceField::zeros(self.rows(), input.channels());
        self.apply_into(input, &mut out);
        out
    }
}

/// Tri-cubic interpolation of band data at an arbitrary point.
///
/// Fails if the 4×4×4 block around `p` is not entirely in the band.
pub fn interpolate_at(band: &BandedGrid, field: &SurfaceField, p: &Vec3) -> Result<Vec<f64>, OperatorError> {
    let (base, w) = interpolation_stencil(band.spec(), p);
    let k = field.channels();
    let mut out = vec![0.0; k];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let g = [base[0] + a as i32, base[1] + b as i32, base[2] + c as i32];
                let j = band.index_of(g).ok_or(OperatorError::FootprintEscapesBand { row: usize::MAX, point: g })?;
                let wt = w[0][a] * w[1][b] * w[2][c];
                for (o, v) in out.iter_mut().zip(field.point(j)) {
                    *o += wt * v;
                }
            }
        }
    }
    Ok(out)
}
