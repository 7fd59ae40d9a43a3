use super::CsrMatrix;
use crate::{FsiError, Result};

/// Application of an approximate inverse, used inside GMRES.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Identity preconditioner.
pub struct NoPrecond;

impl Preconditioner for NoPrecond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Incomplete LU factorization with zero fill-in.
///
/// The factors share the sparsity pattern of the input matrix; L is unit lower
/// triangular and stored together with U in one copy of the pattern.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(FsiError::LinearSolver("ILU(0) needs a square matrix".into()));
        }
        let mut lu = a.clone();
        let row_ptr: Vec<usize> = lu.row_ptr().to_vec();
        let col_idx: Vec<usize> = lu.col_idx().to_vec();

        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(FsiError::LinearSolver(format!(
                    "ILU(0): missing diagonal entry in row {i}"
                )));
            }
        }

        let find = |row: usize, col: usize| -> Option<usize> {
            let lo = row_ptr[row];
            let hi = row_ptr[row + 1];
            let cols = &col_idx[lo..hi];
            cols.binary_search(&col).ok().map(|p| lo + p)
        };

        for i in 0..n {
            for kk in row_ptr[i]..row_ptr[i + 1] {
                let k = col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.values()[diag[k]];
                if pivot.abs() < 1e-300 {
                    return Err(FsiError::LinearSolver(format!(
                        "ILU(0): zero pivot in row {k}"
                    )));
                }
                let factor = lu.values()[kk] / pivot;
                lu.values_mut()[kk] = factor;
                if factor == 0.0 {
                    continue;
                }
                for jj in (diag[k] + 1)..row_ptr[k + 1] {
                    let j = col_idx[jj];
                    if let Some(p) = find(i, j) {
                        let upd = factor * lu.values()[jj];
                        lu.values_mut()[p] -= upd;
                    }
                }
            }
            if lu.values()[diag[i]].abs() < 1e-300 {
                return Err(FsiError::LinearSolver(format!(
                    "ILU(0): zero pivot in row {i}"
                )));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// Sparsity pattern of the factors (identical to the input matrix pattern).
    pub fn pattern(&self) -> (&[usize], &[usize]) {
        (self.lu.row_ptr(), self.lu.col_idx())
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.nrows();
        debug_assert_eq!(r.len(), n);
        // forward: L z = r (unit diagonal)
        for i in 0..n {
            let mut acc = r[i];
            for k in self.lu.row_ptr()[i]..self.diag[i] {
                acc -= self.lu.values()[k] * z[self.lu.col_idx()[k]];
            }
            z[i] = acc;
        }
        // backward: U z = z
        for i in (0..n).rev() {
            let mut acc = z[i];
            for k in (self.diag[i] + 1)..self.lu.row_ptr()[i + 1] {
                acc -= self.lu.values()[k] * z[self.lu.col_idx()[k]];
            }
            z[i] = acc / self.lu.values()[self.diag[i]];
        }
    }
}

/// Block-Jacobi preconditioner with one ILU(0) factorization per field block.
///
/// Blocks are contiguous index ranges of the assembled system; couplings
/// between blocks are ignored by the preconditioner.
pub struct BlockIlu0 {
    blocks: Vec<(std::ops::Range<usize>, Ilu0)>,
}

impl BlockIlu0 {
    pub fn factor(a: &CsrMatrix, ranges: &[std::ops::Range<usize>]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(ranges.len());
        for r in ranges {
            if r.is_empty() {
                continue;
            }
            let sub = a.extract_block(r.clone());
            blocks.push((r.clone(), Ilu0::factor(&sub)?));
        }
        Ok(BlockIlu0 { blocks })
    }
}

impl Preconditioner for BlockIlu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for (range, ilu) in &self.blocks {
            let rsub = r[range.clone()].to_vec();
            ilu.apply(&rsub, &mut z[range.clone()]);
        }
    }
}
