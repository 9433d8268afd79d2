use rayon::prelude::*;

use super::SurfaceField;

/// Row-compressed sparse matrix over band indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Builds from per-row `(column, weight)` lists.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            for (c, w) in row {
                cols.push(c as u32);
                vals.push(w);
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.vals[r].iter().copied())
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, w)| w).sum()
    }

    /// `out = self · input`, channel by channel.
    pub fn apply_into(&self, input: &SurfaceField, out: &mut SurfaceField) {
        let k = input.channels();
        assert_eq!(out.channels(), k);
        assert_eq!(out.len(), self.rows());
        let x = input.values();
        out.values_mut().par_chunks_mut(k).enumerate().for_each(|(i, row)| {
            row.fill(0.0);
            for (c, w) in self.row(i) {
                for (o, v) in row.iter_mut().zip(&x[c * k..(c + 1) * k]) {
                    *o += w * v;
                }
            }
        });
    }

    pub fn apply(&self, input: &SurfaceField) -> SurfaceField {
        let mut out = SurfaceField::zeros(self.rows(), input.channels());
        self.apply_into(input, &mut out);
        out
    }
}
