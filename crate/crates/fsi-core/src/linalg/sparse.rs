use crate::{FsiError, Result};

/// Compressed sparse row matrix. Column indices are sorted and unique per row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Entries of one row as parallel (columns, values) slices.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// Extracts the square sub-matrix with rows and columns in `range`,
    /// re-indexed to start at zero. Entries outside the column range are dropped.
    pub fn extract_block(&self, range: std::ops::Range<usize>) -> CsrMatrix {
        let n = range.len();
        let mut t = Triplets::new(n, n);
        for i in range.clone() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if range.contains(&j) {
                    t.push(i - range.start, j - range.start, self.values[k]);
                }
            }
        }
        t.into_csr()
    }

    pub fn to_dense(&self) -> super::DenseMatrix {
        let mut d = super::DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                *d.get_mut(i, self.col_idx[k]) += self.values[k];
            }
        }
        d
    }

    /// Checks the structural invariants (monotone offsets, sorted unique columns).
    pub fn validate(&self) -> Result<()> {
        if self.row_ptr.len() != self.nrows + 1 {
            return Err(FsiError::LinearSolver("row pointer length mismatch".into()));
        }
        for i in 0..self.nrows {
            if self.row_ptr[i] > self.row_ptr[i + 1] {
                return Err(FsiError::LinearSolver("row offsets not monotone".into()));
            }
            let (cols, _) = self.row(i);
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(FsiError::LinearSolver(format!(
                        "row {i}: columns not sorted/unique"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Coordinate-format accumulator; duplicates are summed when converting to CSR.
#[derive(Debug, Clone)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if val != 0.0 {
            self.entries.push((row, col, val));
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Drops all entries in Dirichlet rows/columns and inserts a unit diagonal
    /// on those rows. `is_fixed[i]` marks constrained unknowns.
    pub fn apply_dirichlet(&mut self, is_fixed: &[bool]) {
        assert_eq!(is_fixed.len(), self.nrows);
        self.entries
            .retain(|&(r, c, _)| !is_fixed[r] && !is_fixed[c]);
        for (i, &fixed) in is_fixed.iter().enumerate() {
            if fixed {
                self.entries.push((i, i, 1.0));
            }
        }
    }

    pub fn into_csr(mut self) -> CsrMatrix {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; self.nrows];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_counts[r] += 1;
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        for i in 0..self.nrows {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}
