use super::{CsrMatrix, Preconditioner};
use crate::{FsiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearMethod {
    Gmres,
    DenseLu,
}

/// Settings for the linear solves inside the Newton loop.
#[derive(Debug, Clone, serde::Deserialize, serde::Serialize)]
#[serde(default)]
pub struct LinearSolverConfig {
    pub method: LinearMethod,
    pub restart: usize,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub use_ilu0: bool,
    /// Dof cap for dense solves (oracle use only).
    pub dense_cap: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        LinearSolverConfig {
            method: LinearMethod::Gmres,
            restart: 50,
            rel_tol: 1e-5,
            max_iters: 2000,
            use_ilu0: true,
            dense_cap: 600,
        }
    }
}

impl LinearSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart < 1 {
            return Err(FsiError::InvalidConfig("gmres restart must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(FsiError::InvalidConfig(
                "linear rel_tol must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    /// Total inner (Arnoldi) iterations across all restart cycles.
    pub iters: usize,
    /// Recomputed true relative residual ||b - A x|| / ||b||.
    pub rel_residual: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Restarted GMRES with right preconditioning and modified Gram-Schmidt
/// (one reorthogonalization pass). Converges when the true relative residual
/// drops below `cfg.rel_tol`; happy breakdown counts as convergence.
pub fn gmres_solve(
    a: &CsrMatrix,
    b: &[f64],
    precond: &dyn Preconditioner,
    cfg: &LinearSolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    cfg.validate()?;
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(FsiError::LinearSolver("gmres: shape mismatch".into()));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iters: 0,
                rel_residual: 0.0,
            },
        ));
    }
    let m = cfg.restart;
    let mut x = vec![0.0; n];
    let mut total_iters = 0usize;
    let mut scratch = vec![0.0; n];

    loop {
        // true residual at cycle start
        a.matvec(&x, &mut scratch);
        let mut r: Vec<f64> = b.iter().zip(&scratch).map(|(bi, axi)| bi - axi).collect();
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= cfg.rel_tol {
            return Ok((
                x,
                SolveStats {
                    iters: total_iters,
                    rel_residual: rel,
                },
            ));
        }
        if total_iters >= cfg.max_iters {
            return Err(FsiError::LinearSolver(format!(
                "gmres stagnated: relative residual {rel:.3e} > {:.1e} after {total_iters} iterations",
                cfg.rel_tol
            )));
        }

        for v in &mut r {
            *v /= beta;
        }
        let mut basis: Vec<Vec<f64>> = vec![r];
        let mut h = vec![vec![0.0f64; m]; m + 1]; // h[i][j]
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for j in 0..m {
            precond.apply(&basis[j], &mut scratch);
            let mut w = a.matvec_alloc(&scratch);
            // modified Gram-Schmidt with one reorthogonalization pass
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let hij = dot(&w, v);
                    h[i][j] += hij;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= hij * vk;
                    }
                }
            }
            let hjp = norm2(&w);
            h[j + 1][j] = hjp;
            total_iters += 1;
            k_used = j + 1;

            // apply accumulated Givens rotations to the new column
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + hjp * hjp).sqrt();
            if denom == 0.0 {
                // column vanished entirely: operator is singular on this subspace
                if j == 0 {
                    return Err(FsiError::LinearSolver(
                        "gmres breakdown: matrix maps residual to zero".into(),
                    ));
                }
                k_used = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = hjp / denom;
            h[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];

            let happy = hjp <= 1e-14 * bnorm;
            if g[j + 1].abs() / bnorm <= cfg.rel_tol || happy || total_iters >= cfg.max_iters {
                break;
            }
            let mut v = w;
            for vk in &mut v {
                *vk /= hjp;
            }
            basis.push(v);
        }

        // back-substitute the small triangular system
        let mut y = vec![0.0f64; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for jj in (i + 1)..k_used {
                acc -= h[i][jj] * y[jj];
            }
            y[i] = acc / h[i][i];
        }
        // x += M^{-1} (V y)
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (uk, vk) in update.iter_mut().zip(&basis[j]) {
                *uk += yj * vk;
            }
        }
        precond.apply(&update, &mut scratch);
        for (xk, zk) in x.iter_mut().zip(&scratch) {
            *xk += zk;
        }
    }
}
