//! Compressed-row sparse matrices assembled from element contributions.

use crate::error::{Error, Result};

/// Prescribed values for a subset of unknowns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dirichlet {
    entries: Vec<(usize, f64)>,
}

impl Dirichlet {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        entries.dedup_by_key(|&mut (i, _)| i);
        Self { entries }
    }

    /// Fixes every listed unknown to zero.
    pub fn homogeneous(dofs: impl IntoIterator<Item = usize>) -> Self {
        Self::new(dofs.into_iter().map(|d| (d, 0.0)).collect())
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Boolean mask of constrained unknowns.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &(i, _) in &self.entries {
            mask[i] = true;
        }
        mask
    }
}

/// Square matrix in compressed sparse row layout with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Zero matrix whose pattern couples every pair of unknowns that share
    /// an element. `element_dofs` yields the global unknowns of each element.
    pub fn from_element_pattern<'a, I>(n: usize, element_dofs: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in element_dofs {
            for &r in dofs {
                rows[r].extend_from_slice(dofs);
            }
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            col_indices.extend_from_slice(&cols);
            row_offsets.push(col_indices.len());
        }
        let values = vec![0.0; col_indices.len()];
        Self {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Builds a matrix from raw CSR arrays. Columns in each row must be
    /// strictly increasing.
    pub fn from_csr(
        n: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n + 1
            || row_offsets[0] != 0
            || *row_offsets.last().unwrap() != col_indices.len()
            || col_indices.len() != values.len()
        {
            return Err(Error::InvalidArgument("inconsistent CSR arrays".into()));
        }
        for r in 0..n {
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= n) {
                return Err(Error::InvalidArgument(format!(
                    "row {r} has unsorted or out-of-range columns"
                )));
            }
        }
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Position of `(row, col)` in the value array, if stored.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.row_offsets[row];
        let cols = &self.col_indices[start..self.row_offsets[row + 1]];
        cols.binary_search(&col).ok().map(|k| start + k)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.values[k])
    }

    /// Value-array positions of the dense block `dofs × dofs`, row-major.
    pub fn scatter_map(&self, dofs: &[usize]) -> Vec<usize> {
        let mut map = Vec::with_capacity(dofs.len() * dofs.len());
        for &r in dofs {
            for &c in dofs {
                map.push(
                    self.position(r, c)
                        .expect("element block outside the sparsity pattern"),
                );
            }
        }
        map
    }

    /// Adds `scale * block` at the positions returned by [`Self::scatter_map`].
    pub fn add_block(&mut self, map: &[usize], block: &[f64], scale: f64) {
        debug_assert_eq!(map.len(), block.len());
        for (&k, &v) in map.iter().zip(block) {
            self.values[k] += scale * v;
        }
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (r, yr) in y.iter_mut().enumerate() {
            let range = self.row_offsets[r]..self.row_offsets[r + 1];
            let mut acc = 0.0;
            for (&c, &v) in self.col_indices[range.clone()].iter().zip(&self.values[range]) {
                acc += v * x[c];
            }
            *yr = acc;
        }
    }

    /// `r = b − A x`, each row accumulated in compensated (double-double)
    /// arithmetic so the result stays accurate after heavy cancellation.
    pub fn residual_compensated(&self, b: &[f64], x: &[f64], r: &mut [f64]) {
        for (row, ri) in r.iter_mut().enumerate() {
            let mut sum = b[row];
            let mut err = 0.0;
            for k in self.row_offsets[row]..self.row_offsets[row + 1] {
                let a = -self.values[k];
                let xv = x[self.col_indices[k]];
                let prod = a * xv;
                let prod_err = a.mul_add(xv, -prod);
                let t = sum + prod;
                let z = t - sum;
                err += (sum - (t - z)) + (prod - z) + prod_err;
                sum = t;
            }
            *ri = sum + err;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// Largest `|A_ij − A_ji|` relative to the largest `|A_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let max = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            return 0.0;
        }
        let mut defect = 0.0f64;
        for r in 0..self.n {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                defect = defect.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        defect / max
    }

    /// Eliminates constrained rows and columns, leaving a unit diagonal, and
    /// moves the prescribed values to the right-hand side. Symmetry is kept.
    pub fn apply_dirichlet(&mut self, constraints: &Dirichlet, rhs: &mut [f64]) {
        if constraints.is_empty() {
            return;
        }
        let mut prescribed = vec![None; self.n];
        for &(i, v) in constraints.entries() {
            prescribed[i] = Some(v);
        }
        for r in 0..self.n {
            let range = self.row_offsets[r]..self.row_offsets[r + 1];
            if let Some(value) = prescribed[r] {
                for k in range {
                    self.values[k] = if self.col_indices[k] == r { 1.0 } else { 0.0 };
                }
                rhs[r] = value;
            } else {
                for k in range {
                    if let Some(value) = prescribed[self.col_indices[k]] {
                        rhs[r] -= self.values[k] * value;
                        self.values[k] = 0.0;
                    }
                }
            }
        }
    }

    /// Row-major dense copy; intended for small test problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (r, row) in dense.iter_mut().enumerate() {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                row[self.col_indices[k]] = self.values[k];
            }
        }
        dense
    }
}
