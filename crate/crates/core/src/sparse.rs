//! Compressed sparse row storage for Hermitian sector operators.
//!
//! The Hamiltonian is real in the occupation basis, so values are `f64`.
//! Rows are built from (row, col, value) triplets with duplicate summing;
//! column indices are sorted within each row, which keeps every matrix
//! traversal deterministic.

use crate::error::{CoreError, Result};
use ndarray::Array2;

#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Triplet accumulator; duplicates are summed on `build`.
#[derive(Debug)]
pub struct TripletBuilder {
    dim: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        if value != 0.0 {
            self.entries.push((row as u32, col as u32, value));
        }
    }

    pub fn build(mut self) -> SparseOperator {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut cols: Vec<u32> = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut rows: Vec<u32> = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut row_ptr = vec![0usize; self.dim + 1];
        for &r in &rows {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 1..row_ptr.len() {
            row_ptr[i] += row_ptr[i - 1];
        }
        SparseOperator {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl SparseOperator {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    /// Dense diagonal, zeros where absent.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                if *c as usize == r {
                    d[r] += *v;
                }
            }
        }
        d
    }

    /// y = A x (real vector).
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            y[r] = acc;
        }
    }

    /// Largest absolute deviation from symmetry, |A - A^T|_max.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let c = *c as usize;
                let (tc, tv) = self.row(c);
                let mirror = match tc.binary_search(&(r as u32)) {
                    Ok(k) => tv[k],
                    Err(_) => 0.0,
                };
                defect = defect.max((v - mirror).abs());
            }
        }
        defect
    }

    pub fn assert_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.symmetry_defect();
        if defect > tol {
            return Err(CoreError::DimensionMismatch(format!(
                "operator not symmetric: defect {defect:.3e} > {tol:.3e}"
            )));
        }
        Ok(())
    }

    /// Guaranteed enclosure of the spectrum by Gershgorin discs.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut center = 0.0;
            let mut radius = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                if *c as usize == r {
                    center += v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// A + scale * diag(d) as a new operator.
    pub fn with_added_diagonal(&self, d: &[f64], scale: f64) -> SparseOperator {
        assert_eq!(d.len(), self.dim);
        let mut b = TripletBuilder::new(self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut seen_diag = false;
            for (c, v) in cols.iter().zip(vals) {
                let mut v = *v;
                if *c as usize == r {
                    v += scale * d[r];
                    seen_diag = true;
                }
                b.add(r, *c as usize, v);
            }
            if !seen_diag && scale * d[r] != 0.0 {
                b.add(r, r, scale * d[r]);
            }
        }
        b.build()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.dim, self.dim));
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                a[(r, *c as usize)] += *v;
            }
        }
        a
    }

    /// Purely diagonal operator.
    pub fn from_diagonal(d: &[f64]) -> SparseOperator {
        let mut b = TripletBuilder::new(d.len());
        for (i, v) in d.iter().enumerate() {
            b.add(i, i, *v);
        }
        b.build()
    }
}
