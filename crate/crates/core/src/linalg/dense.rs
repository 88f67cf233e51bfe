//! Dense row-major matrices and LU factorisation with partial pivoting.
//!
//! The factorisation is blocked: panels are factored column by column and the
//! trailing update is a matrix product, so coarse-grid systems of a few
//! thousand unknowns stay affordable on one core.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<f64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        gemm(self.nrows, self.ncols, other.ncols, 1.0, &self.data, self.ncols, &other.data, other.ncols, 0.0, &mut out.data, other.ncols);
        out
    }

    pub fn add(&self, other: &DenseMatrix, alpha: f64) -> DenseMatrix {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rows `r` and columns `c` of this matrix.
    pub fn select(&self, r: &[usize], c: &[usize]) -> DenseMatrix {
        Self::from_fn(r.len(), c.len(), |i, j| self[(r[i], c[j])])
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        let lu = LuFactor::new(self.clone())?;
        let n = self.nrows;
        let mut inv = DenseMatrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            lu.solve_in_place(&mut col);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    /// Solve A X = B for a dense right-hand side matrix.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        let lu = LuFactor::new(self.clone())?;
        let mut out = DenseMatrix::zeros(b.nrows, b.ncols);
        let mut col = vec![0.0; b.nrows];
        for j in 0..b.ncols {
            for i in 0..b.nrows {
                col[i] = b[(i, j)];
            }
            lu.solve_in_place(&mut col);
            for i in 0..b.nrows {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }
}

#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], lda: usize, b: &[f64], ldb: usize, beta: f64, c: &mut [f64], ldc: usize) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: dimensions and strides describe sub-blocks inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha, a.as_ptr(), lda as isize, 1, b.as_ptr(), ldb as isize, 1, beta, c.as_mut_ptr(), ldc as isize, 1,
        );
    }
}

/// LU factorisation P A = L U stored in place.
#[derive(Clone, Debug)]
pub struct LuFactor {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

const PANEL: usize = 64;

impl LuFactor {
    pub fn new(a: DenseMatrix) -> Result<Self> {
        assert_eq!(a.nrows, a.ncols, "LU needs a square matrix");
        let n = a.nrows;
        let threshold = 1e-14 * a.max_abs();
        let mut lu = a.data;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut kb = 0;
        while kb < n {
            let nb = PANEL.min(n - kb);
            for j in kb..kb + nb {
                let mut p = j;
                let mut best = lu[j * n + j].abs();
                for i in j + 1..n {
                    let v = lu[i * n + j].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                if !(best > threshold) || best == 0.0 {
                    return Err(Error::SingularMatrix { column: j, pivot: best, threshold });
                }
                if p != j {
                    for c in 0..n {
                        lu.swap(j * n + c, p * n + c);
                    }
                    perm.swap(j, p);
                }
                let d = 1.0 / lu[j * n + j];
                for i in j + 1..n {
                    let l = lu[i * n + j] * d;
                    lu[i * n + j] = l;
                    if l != 0.0 {
                        for c in j + 1..kb + nb {
                            lu[i * n + c] -= l * lu[j * n + c];
                        }
                    }
                }
            }
            let end = kb + nb;
            if end < n {
                // U12 = L11^{-1} A12
                for j in kb..end {
                    for i in j + 1..end {
                        let l = lu[i * n + j];
                        if l != 0.0 {
                            let (top, bottom) = lu.split_at_mut(i * n);
                            let src = &top[j * n + end..j * n + n];
                            for (dst, s) in bottom[end..n].iter_mut().zip(src) {
                                *dst -= l * s;
                            }
                        }
                    }
                }
                // A22 -= L21 U12
                let (top, bottom) = lu.split_at_mut(end * n);
                let u12 = &top[kb * n + end..];
                let rows = n - end;
                let l21: Vec<f64> = (0..rows).flat_map(|i| bottom[i * n + kb..i * n + end].to_vec()).collect();
                gemm(rows, nb, n - end, -1.0, &l21, nb, u12, n, 1.0, &mut bottom[end..], n);
            }
            kb = end;
        }
        Ok(LuFactor { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&y[i + 1..]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&y);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let lu = LuFactor::new(DenseMatrix::identity(5)).unwrap();
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(lu.solve(&b), b);
    }

    #[test]
    fn permutation_solve_exact() {
        let p = [2usize, 0, 3, 1];
        let a = DenseMatrix::from_fn(4, 4, |i, j| if p[i] == j { 1.0 } else { 0.0 });
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = LuFactor::new(a).unwrap().solve(&b);
        for i in 0..4 {
            assert_eq!(x[p[i]], b[i]);
        }
    }

    #[test]
    fn hilbert_inverse() {
        // analytic inverse of the Hilbert matrix
        let n = 4;
        let h = DenseMatrix::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64);
        let binom = |n: i64, k: i64| -> f64 {
            (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
        };
        let exact = DenseMatrix::from_fn(n, n, |i, j| {
            let (i, j, n) = ((i + 1) as i64, (j + 1) as i64, n as i64);
            let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            s * (i + j - 1) as f64 * binom(n + i - 1, n - j) * binom(n + j - 1, n - i) * binom(i + j - 2, i - 1).powi(2)
        });
        let inv = h.inverse().unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((inv[(i, j)] - exact[(i, j)]).abs() <= 1e-8, "{i} {j} {} {}", inv[(i, j)], exact[(i, j)]);
            }
        }
    }

    #[test]
    fn singular_detected() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| (i + j) as f64);
        assert!(matches!(LuFactor::new(a), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn blocked_matches_residual() {
        let n = 150;
        let a = DenseMatrix::from_fn(n, n, |i, j| ((i * 31 + j * 17) % 23) as f64 / 23.0 + if i == j { 3.0 } else { 0.0 });
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = LuFactor::new(a.clone()).unwrap().solve(&b);
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        let err: f64 = r.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-10);
    }
}
