//! Uncondensed saddle-point system with explicit Lagrange multiplier
//! unknowns, assembled densely. Serves as the verification oracle for the
//! condensed variants on tiny meshes.

use super::blocks::BlockSystem;
use crate::coupling::{kinematic_constraint_rhs, traction_residuals, TractionInterpolation};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::mortar::{MasterChoice, MortarOperators};
use crate::Result;
use std::ops::Range;

#[derive(Debug, Clone)]
pub struct SaddleLayout {
    pub s_i: Range<usize>,
    pub s_g: Range<usize>,
    pub f_i: Range<usize>,
    pub f_g: Range<usize>,
    pub a_i: Range<usize>,
    pub g_g: Range<usize>,
    pub lam: Range<usize>,
    pub n: usize,
}

/// Solve `matrix * x = -residual`; the unknown vector carries the full
/// multiplier (not an increment) in the `lam` range.
pub struct SaddleSystem {
    pub matrix: DenseMatrix,
    pub residual: Vec<f64>,
    pub layout: SaddleLayout,
}

fn put_csr(m: &mut DenseMatrix, src: &CsrMatrix, row0: usize, col0: usize, scale: f64) {
    for i in 0..src.nrows() {
        let (cols, vals) = src.row(i);
        for (c, v) in cols.iter().zip(vals) {
            m.add_at(row0 + i, col0 + c, scale * v);
        }
    }
}

fn put_dense(m: &mut DenseMatrix, src: &DenseMatrix, row0: usize, col0: usize, scale: f64) {
    for i in 0..src.nrows() {
        for j in 0..src.ncols() {
            let v = src.get(i, j);
            if v != 0.0 {
                m.add_at(row0 + i, col0 + j, scale * v);
            }
        }
    }
}

/// Assembles the full seven-block-row monolithic system (field rows, mortar
/// constraint row, and the interface-motion closure row of the chosen master
/// side), including the multiplier columns and the first-iteration
/// right-hand-side terms.
pub fn build_saddle_system(
    bs: &BlockSystem,
    mortar: &MortarOperators,
    master: MasterChoice,
) -> Result<SaddleSystem> {
    let m = &bs.meta;
    let ns_i = bs.r_s_i.len();
    let ns_g = bs.r_s_g.len();
    let nf_i = bs.r_f_i.len();
    let nf_g = bs.r_f_g.len();
    let na_i = bs.r_ale.len();
    let ng_g = nf_g; // grid interface dofs coincide with fluid interface velocities
    let nlam = mortar.d.len();

    let s_i = 0..ns_i;
    let s_g = s_i.end..s_i.end + ns_g;
    let f_i = s_g.end..s_g.end + nf_i;
    let f_g = f_i.end..f_i.end + nf_g;
    let a_i = f_g.end..f_g.end + na_i;
    let g_g = a_i.end..a_i.end + ng_g;
    let lam = g_g.end..g_g.end + nlam;
    let n = lam.end;
    // row blocks: fields as the columns, then mortar + closure
    let mortar_rows = a_i.end..a_i.end + nlam;
    let closure_rows = mortar_rows.end..mortar_rows.end + ng_g;
    assert_eq!(closure_rows.end, n);

    let mut a = DenseMatrix::zeros(n, n);
    let mut r = vec![0.0; n];

    // solid rows
    put_csr(&mut a, &bs.s.ii, s_i.start, s_i.start, 1.0);
    put_dense(&mut a, &bs.s.ig, s_i.start, s_g.start, 1.0);
    put_dense(&mut a, &bs.s.gi, s_g.start, s_i.start, 1.0);
    put_dense(&mut a, &bs.s.gg, s_g.start, s_g.start, 1.0);
    r[s_i.clone()].copy_from_slice(&bs.r_s_i);
    r[s_g.clone()].copy_from_slice(&bs.r_s_g);

    // fluid rows
    put_csr(&mut a, &bs.f.ii, f_i.start, f_i.start, 1.0);
    put_dense(&mut a, &bs.f.ig, f_i.start, f_g.start, 1.0);
    put_csr(&mut a, &bs.fg.ii, f_i.start, a_i.start, 1.0);
    put_dense(&mut a, &bs.fg.ig, f_i.start, g_g.start, 1.0);
    put_dense(&mut a, &bs.f.gi, f_g.start, f_i.start, 1.0);
    put_dense(&mut a, &bs.f.gg, f_g.start, f_g.start, 1.0);
    put_dense(&mut a, &bs.fg.gi, f_g.start, a_i.start, 1.0);
    put_dense(&mut a, &bs.fg.gg, f_g.start, g_g.start, 1.0);
    r[f_i.clone()].copy_from_slice(&bs.r_f_i);
    r[f_g.clone()].copy_from_slice(&bs.r_f_g);

    // grid motion row
    put_csr(&mut a, &bs.a_ii, a_i.start, a_i.start, 1.0);
    put_dense(&mut a, &bs.a_ig, a_i.start, g_g.start, 1.0);
    r[a_i.clone()].copy_from_slice(&bs.r_ale);

    // multiplier columns: solid rows get -(1-a) C^S^T, fluid rows +(1-b) C^F^T
    match master {
        MasterChoice::Fluid => {
            // slave = structure: C^S = D, C^F = M
            for (j, &dj) in mortar.d.iter().enumerate() {
                a.add_at(s_g.start + j, lam.start + j, -(1.0 - m.a) * dj);
            }
            for jf in 0..nf_g {
                for jl in 0..nlam {
                    // M^T entry (fluid gamma, lambda)
                    let v = mortar.m.get(jl, jf);
                    if v != 0.0 {
                        a.add_at(f_g.start + jf, lam.start + jl, (1.0 - m.b) * v);
                    }
                }
            }
        }
        MasterChoice::Structure => {
            // slave = fluid: C^F = D, C^S = M
            for (j, &dj) in mortar.d.iter().enumerate() {
                a.add_at(f_g.start + j, lam.start + j, (1.0 - m.b) * dj);
            }
            for js in 0..ns_g {
                for jl in 0..nlam {
                    let v = mortar.m.get(jl, js);
                    if v != 0.0 {
                        a.add_at(s_g.start + js, lam.start + jl, -(1.0 - m.a) * v);
                    }
                }
            }
        }
    }
    // previous-multiplier traction forces in the residual
    let interp = TractionInterpolation { a: m.a, b: m.b };
    let zero = vec![0.0; nlam];
    let (tr_fluid, tr_solid) = traction_residuals(&interp, mortar, master, &m.lambda_n, &zero);
    for (j, v) in tr_solid.iter().enumerate() {
        r[s_g.start + j] += v;
    }
    for (j, v) in tr_fluid.iter().enumerate() {
        r[f_g.start + j] += v;
    }

    // mortar constraint row: -C^S (solid gamma cols) + tau C^F (fluid gamma cols)
    match master {
        MasterChoice::Fluid => {
            for (j, &dj) in mortar.d.iter().enumerate() {
                a.add_at(mortar_rows.start + j, s_g.start + j, -dj);
            }
            put_dense(&mut a, &mortar.m, mortar_rows.start, f_g.start, m.tau);
        }
        MasterChoice::Structure => {
            put_dense(&mut a, &mortar.m, mortar_rows.start, s_g.start, -1.0);
            for (j, &dj) in mortar.d.iter().enumerate() {
                a.add_at(mortar_rows.start + j, f_g.start + j, m.tau * dj);
            }
        }
    }
    let rhs_kin = kinematic_constraint_rhs(
        mortar,
        master,
        &m.pred_incr_gamma,
        &m.u_n_gamma,
        m.first_iter,
        m.dt,
    );
    for (j, v) in rhs_kin.iter().enumerate() {
        r[mortar_rows.start + j] += v;
    }

    // closure row for the interface grid motion
    match master {
        MasterChoice::Fluid => {
            // tau du_gamma - ddg_gamma = -(dt u^n_gamma) at the first iteration
            for j in 0..ng_g {
                a.add_at(closure_rows.start + j, f_g.start + j, m.tau);
                a.add_at(closure_rows.start + j, g_g.start + j, -1.0);
            }
            if m.first_iter {
                for j in 0..ng_g {
                    r[closure_rows.start + j] += m.dt * m.u_n_gamma[j];
                }
            }
        }
        MasterChoice::Structure => {
            // M dd^S_gamma - D ddg_gamma = -(M pred_incr) at the first iteration
            put_dense(&mut a, &mortar.m, closure_rows.start, s_g.start, 1.0);
            for (j, &dj) in mortar.d.iter().enumerate() {
                a.add_at(closure_rows.start + j, g_g.start + j, -dj);
            }
            if m.first_iter {
                let mp = mortar.m.matvec(&m.pred_incr_gamma);
                for (j, v) in mp.iter().enumerate() {
                    r[closure_rows.start + j] += v;
                }
            }
        }
    }

    Ok(SaddleSystem {
        matrix: a,
        residual: r,
        layout: SaddleLayout {
            s_i,
            s_g,
            f_i,
            f_g,
            a_i,
            g_g,
            lam,
            n,
        },
    })
}
