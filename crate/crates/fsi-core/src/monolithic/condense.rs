//! Condensation of the Lagrange multipliers and the slave interface dofs
//! from the monolithic saddle system, for either master choice.

use super::blocks::BlockSystem;
use crate::linalg::{CsrMatrix, DenseMatrix, Triplets};
use crate::mortar::{MasterChoice, MortarOperators};
use crate::{FsiError, Result};
use std::ops::Range;

/// Unknown ordering of a condensed system. Groups are contiguous; interface
/// unknowns of the master field sit next to that field's interior block.
#[derive(Debug, Clone)]
pub struct Layout {
    pub master: MasterChoice,
    pub s_i: Range<usize>,
    /// Solid interface unknowns (structure-handled only).
    pub s_g: Option<Range<usize>>,
    pub f_i: Range<usize>,
    /// Fluid interface velocity unknowns (fluid-handled only).
    pub f_g: Option<Range<usize>>,
    pub a_i: Range<usize>,
    pub n: usize,
}

impl Layout {
    /// Per-field diagonal ranges for block preconditioning.
    pub fn field_ranges(&self) -> Vec<Range<usize>> {
        match self.master {
            MasterChoice::Structure => vec![
                self.s_i.start..self.s_g.as_ref().unwrap().end,
                self.f_i.clone(),
                self.a_i.clone(),
            ],
            MasterChoice::Fluid => vec![
                self.s_i.clone(),
                self.f_i.start..self.f_g.as_ref().unwrap().end,
                self.a_i.clone(),
            ],
        }
    }

    /// Range holding the interface unknowns of the master field.
    pub fn master_gamma(&self) -> Range<usize> {
        match self.master {
            MasterChoice::Structure => self.s_g.clone().unwrap(),
            MasterChoice::Fluid => self.f_g.clone().unwrap(),
        }
    }
}

/// Condensed Newton system: solve `jacobian * dx = -residual`.
pub struct CondensedSystem {
    pub jacobian: Triplets,
    pub residual: Vec<f64>,
    pub layout: Layout,
}

fn push_csr(t: &mut Triplets, m: &CsrMatrix, row0: usize, col0: usize, scale: f64) {
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (c, v) in cols.iter().zip(vals) {
            t.push(row0 + i, col0 + c, scale * v);
        }
    }
}

fn push_dense(t: &mut Triplets, m: &DenseMatrix, row0: usize, col0: usize, scale: f64) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m.get(i, j);
            if v != 0.0 {
                t.push(row0 + i, col0 + j, scale * v);
            }
        }
    }
}

fn add_scaled(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

fn dense_sum(parts: &[(&DenseMatrix, f64)]) -> DenseMatrix {
    let (first, _) = parts[0];
    let mut out = DenseMatrix::zeros(first.nrows(), first.ncols());
    for (m, s) in parts {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.add_at(i, j, s * m.get(i, j));
            }
        }
    }
    out
}

/// Condensed system with structure-handled interface motion (structure is the
/// mortar master, the fluid interface velocities and grid displacements are
/// eliminated). Unknowns: solid interior, solid interface, fluid interior,
/// grid interior.
pub fn condense_structure_handled(
    bs: &BlockSystem,
    mortar: &MortarOperators,
    drop_shape: bool,
) -> Result<CondensedSystem> {
    let m = &bs.meta;
    if (1.0 - m.b).abs() < 1e-14 {
        return Err(FsiError::InvalidConfig(
            "traction factor b = 1 makes the structure-handled condensation singular".into(),
        ));
    }
    if m.tau == 0.0 {
        return Err(FsiError::InvalidConfig("conversion factor tau is zero".into()));
    }
    let k = (1.0 - m.a) / (1.0 - m.b);
    let inv_tau = 1.0 / m.tau;
    let p = &mortar.p; // fluid gamma x solid gamma

    let ns_i = bs.r_s_i.len();
    let ns_g = bs.r_s_g.len();
    let nf_i = bs.r_f_i.len();
    let na_i = bs.r_ale.len();
    let s_i = 0..ns_i;
    let s_g = ns_i..ns_i + ns_g;
    let f_i = s_g.end..s_g.end + nf_i;
    let a_i = f_i.end..f_i.end + na_i;
    let n = a_i.end;

    let mut jac = Triplets::new(n, n);
    // solid interior row
    push_csr(&mut jac, &bs.s.ii, s_i.start, s_i.start, 1.0);
    push_dense(&mut jac, &bs.s.ig, s_i.start, s_g.start, 1.0);
    // merged interface row
    push_dense(&mut jac, &bs.s.gi, s_g.start, s_i.start, 1.0);
    let pt_fgg_p = p.matmul_transpose_left(&bs.f.gg.matmul(p));
    let pt_fggg_p = p.matmul_transpose_left(&bs.fg.gg.matmul(p));
    let mut gg_parts = vec![(&bs.s.gg, 1.0), (&pt_fgg_p, k * inv_tau)];
    if !drop_shape {
        gg_parts.push((&pt_fggg_p, k));
    }
    let gg = dense_sum(&gg_parts);
    push_dense(&mut jac, &gg, s_g.start, s_g.start, 1.0);
    let pt_fgi = p.matmul_transpose_left(&bs.f.gi);
    push_dense(&mut jac, &pt_fgi, s_g.start, f_i.start, k);
    if !drop_shape {
        let pt_fggi = p.matmul_transpose_left(&bs.fg.gi);
        push_dense(&mut jac, &pt_fggi, s_g.start, a_i.start, k);
    }
    // fluid interior row
    let fig_p = bs.f.ig.matmul(p);
    push_dense(&mut jac, &fig_p, f_i.start, s_g.start, inv_tau);
    if !drop_shape {
        let fgig_p = bs.fg.ig.matmul(p);
        push_dense(&mut jac, &fgig_p, f_i.start, s_g.start, 1.0);
        push_csr(&mut jac, &bs.fg.ii, f_i.start, a_i.start, 1.0);
    }
    push_csr(&mut jac, &bs.f.ii, f_i.start, f_i.start, 1.0);
    // grid interior row
    let aig_p = bs.a_ig.matmul(p);
    push_dense(&mut jac, &aig_p, a_i.start, s_g.start, 1.0);
    push_csr(&mut jac, &bs.a_ii, a_i.start, a_i.start, 1.0);

    // residual
    let mut res = vec![0.0; n];
    res[s_i.clone()].copy_from_slice(&bs.r_s_i);
    res[f_i.clone()].copy_from_slice(&bs.r_f_i);
    res[a_i.clone()].copy_from_slice(&bs.r_ale);
    {
        let rg = &mut res[s_g.clone()];
        rg.copy_from_slice(&bs.r_s_g);
        add_scaled(rg, &p.matvec_transpose(&bs.r_f_g), k);
        let coef = -m.a + m.b * (1.0 - m.a) / (1.0 - m.b);
        add_scaled(rg, &mortar.m.matvec_transpose(&m.lambda_n), coef);
    }
    if m.first_iter {
        let p_dp = p.matvec(&m.pred_incr_gamma);
        // merged interface row
        let fgg_pdp = bs.f.gg.matvec(&p_dp);
        let fgg_un = bs.f.gg.matvec(&m.u_n_gamma);
        {
            let rg = &mut res[s_g.clone()];
            add_scaled(rg, &p.matvec_transpose(&fgg_pdp), k * inv_tau);
            add_scaled(rg, &p.matvec_transpose(&fgg_un), -k * m.dt * inv_tau);
            let fggg_pdp = bs.fg.gg.matvec(&p_dp);
            add_scaled(rg, &p.matvec_transpose(&fggg_pdp), k);
        }
        // fluid interior row
        {
            let ri = &mut res[f_i.clone()];
            add_scaled(ri, &bs.f.ig.matvec(&p_dp), inv_tau);
            add_scaled(ri, &bs.fg.ig.matvec(&p_dp), 1.0);
            add_scaled(ri, &bs.f.ig.matvec(&m.u_n_gamma), -m.dt * inv_tau);
        }
        // grid interior row
        add_scaled(&mut res[a_i.clone()], &bs.a_ig.matvec(&p_dp), 1.0);
    }

    Ok(CondensedSystem {
        jacobian: jac,
        residual: res,
        layout: Layout {
            master: MasterChoice::Structure,
            s_i,
            s_g: Some(s_g),
            f_i,
            f_g: None,
            a_i,
            n,
        },
    })
}

/// Condensed system with fluid-handled interface motion (fluid is the mortar
/// master, the solid interface displacements are eliminated). Unknowns: solid
/// interior, fluid interior, fluid interface velocities, grid interior.
pub fn condense_fluid_handled(
    bs: &BlockSystem,
    mortar: &MortarOperators,
    drop_shape: bool,
) -> Result<CondensedSystem> {
    let m = &bs.meta;
    if (1.0 - m.a).abs() < 1e-14 {
        return Err(FsiError::InvalidConfig(
            "traction factor a = 1 makes the fluid-handled condensation singular".into(),
        ));
    }
    let k = (1.0 - m.b) / (1.0 - m.a);
    let tau = m.tau;
    let p = &mortar.p; // solid gamma x fluid gamma

    let ns_i = bs.r_s_i.len();
    let nf_i = bs.r_f_i.len();
    let nf_g = bs.r_f_g.len();
    let na_i = bs.r_ale.len();
    let s_i = 0..ns_i;
    let f_i = ns_i..ns_i + nf_i;
    let f_g = f_i.end..f_i.end + nf_g;
    let a_i = f_g.end..f_g.end + na_i;
    let n = a_i.end;

    let mut jac = Triplets::new(n, n);
    // solid interior row
    push_csr(&mut jac, &bs.s.ii, s_i.start, s_i.start, 1.0);
    let sig_p = bs.s.ig.matmul(p);
    push_dense(&mut jac, &sig_p, s_i.start, f_g.start, tau);
    // fluid interior row
    push_csr(&mut jac, &bs.f.ii, f_i.start, f_i.start, 1.0);
    let mut fig_parts = vec![(&bs.f.ig, 1.0)];
    if !drop_shape {
        fig_parts.push((&bs.fg.ig, tau));
    }
    let fig = dense_sum(&fig_parts);
    push_dense(&mut jac, &fig, f_i.start, f_g.start, 1.0);
    if !drop_shape {
        push_csr(&mut jac, &bs.fg.ii, f_i.start, a_i.start, 1.0);
    }
    // interface row (fluid momentum at the interface, solid row merged in)
    let pt_sgi = p.matmul_transpose_left(&bs.s.gi);
    push_dense(&mut jac, &pt_sgi, f_g.start, s_i.start, k);
    push_dense(&mut jac, &bs.f.gi, f_g.start, f_i.start, 1.0);
    let pt_sgg_p = p.matmul_transpose_left(&bs.s.gg.matmul(p));
    let mut gg_parts = vec![(&bs.f.gg, 1.0), (&pt_sgg_p, k * tau)];
    if !drop_shape {
        gg_parts.push((&bs.fg.gg, tau));
    }
    let gg = dense_sum(&gg_parts);
    push_dense(&mut jac, &gg, f_g.start, f_g.start, 1.0);
    if !drop_shape {
        push_dense(&mut jac, &bs.fg.gi, f_g.start, a_i.start, 1.0);
    }
    // grid interior row
    push_dense(&mut jac, &bs.a_ig, a_i.start, f_g.start, tau);
    push_csr(&mut jac, &bs.a_ii, a_i.start, a_i.start, 1.0);

    // residual
    let mut res = vec![0.0; n];
    res[f_i.clone()].copy_from_slice(&bs.r_f_i);
    res[a_i.clone()].copy_from_slice(&bs.r_ale);
    {
        let ri = &mut res[s_i.clone()];
        ri.copy_from_slice(&bs.r_s_i);
    }
    {
        let rg = &mut res[f_g.clone()];
        rg.copy_from_slice(&bs.r_f_g);
        add_scaled(rg, &p.matvec_transpose(&bs.r_s_g), k);
        let coef = m.b - m.a * (1.0 - m.b) / (1.0 - m.a);
        add_scaled(rg, &mortar.m.matvec_transpose(&m.lambda_n), coef);
    }
    if m.first_iter {
        let p_un = p.matvec(&m.u_n_gamma);
        // solid interior row
        {
            let ri = &mut res[s_i.clone()];
            add_scaled(ri, &bs.s.ig.matvec(&p_un), m.dt);
            add_scaled(ri, &bs.s.ig.matvec(&m.pred_incr_gamma), -1.0);
        }
        // fluid interior row
        add_scaled(
            &mut res[f_i.clone()],
            &bs.fg.ig.matvec(&m.u_n_gamma),
            m.dt,
        );
        // interface row
        {
            let rg = &mut res[f_g.clone()];
            add_scaled(rg, &bs.fg.gg.matvec(&m.u_n_gamma), m.dt);
            let sgg_pun = bs.s.gg.matvec(&p_un);
            add_scaled(rg, &p.matvec_transpose(&sgg_pun), k * m.dt);
            let sgg_dp = bs.s.gg.matvec(&m.pred_incr_gamma);
            add_scaled(rg, &p.matvec_transpose(&sgg_dp), -k);
        }
        // grid interior row
        add_scaled(&mut res[a_i.clone()], &bs.a_ig.matvec(&m.u_n_gamma), m.dt);
    }

    Ok(CondensedSystem {
        jacobian: jac,
        residual: res,
        layout: Layout {
            master: MasterChoice::Fluid,
            s_i,
            s_g: None,
            f_i,
            f_g: Some(f_g),
            a_i,
            n,
        },
    })
}
