use crate::{FsiError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.get_mut(i, i) = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols);
            data.extend_from_slice(r);
        }
        DenseMatrix { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] += v;
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let row = self.row_slice(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// y = A^T x
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let row = self.row_slice(i);
            for (j, a) in row.iter().enumerate() {
                y[j] += a * x[i];
            }
        }
        y
    }

    /// C = A B
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut c = DenseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.ncols {
                    c.add_at(i, j, a * other.get(k, j));
                }
            }
        }
        c
    }

    /// C = A^T B
    pub fn matmul_transpose_left(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.nrows, other.nrows);
        let mut c = DenseMatrix::zeros(self.ncols, other.ncols);
        for k in 0..self.nrows {
            for i in 0..self.ncols {
                let a = self.get(k, i);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.ncols {
                    c.add_at(i, j, a * other.get(k, j));
                }
            }
        }
        c
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                *t.get_mut(j, i) = self.get(i, j);
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Solves `A x = b` by LU factorization with partial pivoting.
///
/// Intended for small verification systems; errors out on (numerically)
/// singular matrices reporting the offending pivot magnitude.
pub fn dense_lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(FsiError::LinearSolver("dense LU needs a square matrix".into()));
    }
    if b.len() != n {
        return Err(FsiError::LinearSolver("rhs size mismatch".into()));
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.max_abs().max(1.0);

    for k in 0..n {
        // partial pivoting
        let mut p = k;
        let mut pmax = lu.get(perm[k], k).abs();
        for i in (k + 1)..n {
            let v = lu.get(perm[i], k).abs();
            if v > pmax {
                pmax = v;
                p = i;
            }
        }
        if pmax <= 1e-14 * scale {
            return Err(FsiError::LinearSolver(format!(
                "matrix is numerically singular (pivot magnitude {pmax:.3e} at column {k})"
            )));
        }
        perm.swap(k, p);
        let pk = perm[k];
        let diag = lu.get(pk, k);
        for i in (k + 1)..n {
            let pi = perm[i];
            let f = lu.get(pi, k) / diag;
            *lu.get_mut(pi, k) = f;
            if f != 0.0 {
                for j in (k + 1)..n {
                    let upd = f * lu.get(pk, j);
                    *lu.get_mut(pi, j) -= upd;
                }
                x[pi] -= f * x[pk];
            }
        }
    }
    // back substitution
    let mut out = vec![0.0; n];
    for k in (0..n).rev() {
        let pk = perm[k];
        let mut acc = x[pk];
        for j in (k + 1)..n {
            acc -= lu.get(pk, j) * out[j];
        }
        out[k] = acc / lu.get(pk, k);
    }
    Ok(out)
}
