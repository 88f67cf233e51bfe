//! Compressed sparse row matrices.

use std::io::Write;
use std::path::Path;

use super::dense::DenseMatrix;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

/// Accumulates (row, col, value) entries; duplicates are summed on build.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    pub nrows: usize,
    pub ncols: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder { nrows, ncols, ..Default::default() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.rows.push(i as u32);
        self.cols.push(j as u32);
        self.vals.push(v);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn build(&self) -> CsrMatrix {
        let n = self.nrows;
        let mut count = vec![0usize; n + 1];
        for &r in &self.rows {
            count[r as usize + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut pos = count.clone();
        let mut cols = vec![0u32; self.vals.len()];
        let mut vals = vec![0.0; self.vals.len()];
        for k in 0..self.vals.len() {
            let r = self.rows[k] as usize;
            cols[pos[r]] = self.cols[k];
            vals[pos[r]] = self.vals[k];
            pos[r] += 1;
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(self.vals.len());
        let mut data = Vec::with_capacity(self.vals.len());
        indptr.push(0);
        let mut perm: Vec<usize> = Vec::new();
        for i in 0..n {
            let (s, e) = (count[i], count[i + 1]);
            perm.clear();
            perm.extend(s..e);
            perm.sort_unstable_by_key(|&k| cols[k]);
            let mut last = u32::MAX;
            for &k in &perm {
                if cols[k] == last {
                    *data.last_mut().unwrap() += vals[k];
                } else {
                    indices.push(cols[k] as usize);
                    data.push(vals[k]);
                    last = cols[k];
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: n, ncols: self.ncols, indptr, indices, data }
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), data: vec![1.0; n] }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, t: &[(usize, usize, f64)]) -> Self {
        let mut b = TripletBuilder::with_capacity(nrows, ncols, t.len());
        for &(i, j, v) in t {
            b.push(i, j, v);
        }
        b.build()
    }

    pub fn from_dense(a: &DenseMatrix, drop_tol: f64) -> Self {
        let mut b = TripletBuilder::new(a.nrows, a.ncols);
        for i in 0..a.nrows {
            for j in 0..a.ncols {
                if a[(i, j)].abs() > drop_tol {
                    b.push(i, j, a[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.data[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        for i in 0..self.nrows {
            let (s, e) = (self.indptr[i], self.indptr[i + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[i] = acc;
        }
    }

    /// y += alpha A x
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for i in 0..self.nrows {
            let (s, e) = (self.indptr[i], self.indptr[i + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[i] += alpha * acc;
        }
    }

    /// y += alpha Aᵀ x
    pub fn matvec_transpose_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for i in 0..self.nrows {
            let xi = alpha * x[i];
            if xi != 0.0 {
                for k in self.indptr[i]..self.indptr[i + 1] {
                    y[self.indices[k]] += self.data[k] * xi;
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            count[j + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let mut pos = count.clone();
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                indices[pos[j]] = i;
                data[pos[j]] = self.data[k];
                pos[j] += 1;
            }
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, indptr: count, indices, data }
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// alpha A + beta B
    pub fn add(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        indptr.push(0);
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                if q == cb.len() || (p < ca.len() && ca[p] < cb[q]) {
                    indices.push(ca[p]);
                    data.push(alpha * va[p]);
                    p += 1;
                } else if p == ca.len() || cb[q] < ca[p] {
                    indices.push(cb[q]);
                    data.push(beta * vb[q]);
                    q += 1;
                } else {
                    indices.push(ca[p]);
                    data.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, data }
    }

    /// Sparse product A B.
    pub fn matmul(&self, b: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, b.nrows);
        let mut acc = vec![0.0; b.ncols];
        let mut mark = vec![usize::MAX; b.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = b.row(k);
                for (&j, &bv) in cb.iter().zip(vb) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * bv;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                indices.push(j);
                data.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: b.ncols, indptr, indices, data }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                d[(i, self.indices[k])] += self.data[k];
            }
        }
        d
    }

    /// Dense submatrix on index sets (rows and columns need not be sorted).
    pub fn dense_submatrix(&self, rows: &[usize], cols: &[usize], lookup: &mut Vec<usize>) -> DenseMatrix {
        if lookup.len() < self.ncols {
            lookup.resize(self.ncols, usize::MAX);
        }
        for (k, &c) in cols.iter().enumerate() {
            lookup[c] = k;
        }
        let mut d = DenseMatrix::zeros(rows.len(), cols.len());
        for (a, &r) in rows.iter().enumerate() {
            let (ci, vi) = self.row(r);
            for (&c, &v) in ci.iter().zip(vi) {
                let k = lookup[c];
                if k != usize::MAX {
                    d[(a, k)] += v;
                }
            }
        }
        for &c in cols {
            lookup[c] = usize::MAX;
        }
        d
    }

    /// Zero the given rows and columns and put `diag` on their diagonal.
    pub fn eliminate_symmetric(&mut self, rows_cols: &[bool], diag: f64) {
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                if rows_cols[i] || rows_cols[j] {
                    self.data[k] = if i == j { diag } else { 0.0 };
                }
            }
        }
    }

    /// Zero rows and columns of a rectangular block (row mask, column mask).
    pub fn zero_rows_cols(&mut self, row_mask: Option<&[bool]>, col_mask: Option<&[bool]>) {
        for i in 0..self.nrows {
            let zr = row_mask.is_some_and(|m| m[i]);
            for k in self.indptr[i]..self.indptr[i + 1] {
                if zr || col_mask.is_some_and(|m| m[self.indices[k]]) {
                    self.data[k] = 0.0;
                }
            }
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Write in Matrix-Market coordinate format.
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(f, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                writeln!(f, "{} {} {:.17e}", i + 1, self.indices[k] + 1, self.data[k])?;
            }
        }
        f.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_summed_and_sorted() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(m.indptr, vec![0, 2, 3]);
        assert_eq!(m.indices, vec![0, 2, 1]);
        assert_eq!(m.data, vec![2.0, 4.0, -1.0]);
    }

    #[test]
    fn transpose_and_product() {
        let a = CsrMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, 3.0)]);
        let at = a.transpose();
        let p = at.matmul(&a).to_dense();
        assert_eq!(p[(0, 0)], 10.0);
        assert_eq!(p[(1, 1)], 4.0);
        assert_eq!(p[(0, 1)], 0.0);
    }
}
