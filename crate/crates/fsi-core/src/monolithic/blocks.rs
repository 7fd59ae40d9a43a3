//! Problem definition and per-iteration block gathering.

use crate::ale::AleOperator;
use crate::coupling::{ConversionRule, TractionInterpolation};
use crate::dofmap::{DofMap, Place};
use crate::fluid::{
    assemble_fluid, FluidMaterial, FluidState, FluidTimeScheme, StabilizationConfig,
};
use crate::linalg::{CsrMatrix, DenseMatrix, Triplets};
use crate::mesh::Mesh2D;
use crate::mortar::{MasterChoice, MortarOperators};
use crate::solid::{assemble_solid, GenAlphaSolidParams, SolidMaterial, SolidState};
use crate::Result;

/// Everything fixed over a simulation: meshes, materials, schemes, coupling
/// choices, dof partitions, mortar operators, and Dirichlet masks.
pub struct FsiProblem {
    pub solid_mesh: Mesh2D,
    pub solid_mat: SolidMaterial,
    pub solid_params: GenAlphaSolidParams,
    pub fluid_mesh: Mesh2D,
    pub fluid_mat: FluidMaterial,
    pub fluid_scheme: FluidTimeScheme,
    pub stab: StabilizationConfig,
    pub conversion: ConversionRule,
    pub master: MasterChoice,
    pub interp: TractionInterpolation,
    pub dt: f64,
    pub solid_map: DofMap,
    pub fluid_map: DofMap,
    pub ale_map: DofMap,
    pub mortar: MortarOperators,
    pub ale: AleOperator,
    /// Drops the grid-displacement coupling blocks from the Newton matrix
    /// (experiments only; the residual keeps them).
    pub drop_shape_derivatives: bool,
    /// Dirichlet masks over full field dofs.
    pub solid_fixed: Vec<bool>,
    pub fluid_fixed: Vec<bool>,
    pub ale_fixed: Vec<bool>,
}

impl FsiProblem {
    pub fn tau(&self) -> f64 {
        self.conversion.tau(self.dt)
    }
}

/// Interior/interface sub-blocks of one field matrix.
pub struct SplitBlocks {
    pub ii: CsrMatrix,
    pub ig: DenseMatrix,
    pub gi: DenseMatrix,
    pub gg: DenseMatrix,
}

/// Routes triplet entries into the four interior/interface sub-blocks.
pub fn split_matrix(t: &Triplets, rows: &DofMap, cols: &DofMap) -> SplitBlocks {
    let ni_r = rows.interior.len();
    let ng_r = rows.interface.len();
    let ni_c = cols.interior.len();
    let ng_c = cols.interface.len();
    let mut ii = Triplets::new(ni_r, ni_c);
    let mut ig = DenseMatrix::zeros(ni_r, ng_c);
    let mut gi = DenseMatrix::zeros(ng_r, ni_c);
    let mut gg = DenseMatrix::zeros(ng_r, ng_c);
    for &(r, c, v) in t.entries() {
        match (rows.place(r), cols.place(c)) {
            (Place::Interior(i), Place::Interior(j)) => ii.push(i, j, v),
            (Place::Interior(i), Place::Interface(j)) => ig.add_at(i, j, v),
            (Place::Interface(i), Place::Interior(j)) => gi.add_at(i, j, v),
            (Place::Interface(i), Place::Interface(j)) => gg.add_at(i, j, v),
        }
    }
    SplitBlocks {
        ii: ii.into_csr(),
        ig,
        gi,
        gg,
    }
}

/// Step-level coupling data entering the first-iteration right-hand side.
pub struct CouplingMeta {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub dt: f64,
    pub first_iter: bool,
    /// Fluid interface velocity at the previous step.
    pub u_n_gamma: Vec<f64>,
    /// Solid interface displacement change over the predictor step
    /// (explicit predictor plus Dirichlet updates).
    pub pred_incr_gamma: Vec<f64>,
    /// Multiplier at the previous step (slave interface dofs).
    pub lambda_n: Vec<f64>,
}

/// All linearized field contributions of one Newton iteration, split by the
/// interior/interface partitions, plus the coupling metadata.
pub struct BlockSystem {
    pub s: SplitBlocks,
    pub r_s_i: Vec<f64>,
    pub r_s_g: Vec<f64>,
    pub f: SplitBlocks,
    pub fg: SplitBlocks,
    pub r_f_i: Vec<f64>,
    pub r_f_g: Vec<f64>,
    pub a_ii: CsrMatrix,
    pub a_ig: DenseMatrix,
    pub r_ale: Vec<f64>,
    pub meta: CouplingMeta,
}

/// Assembles both fields at the given trial states and splits the raw
/// residuals and tangents into the monolithic block structure. No boundary
/// conditions are applied here.
#[allow(clippy::too_many_arguments)]
pub fn gather_blocks(
    p: &FsiProblem,
    solid_state: &SolidState,
    fluid_state: &FluidState,
    trial_d: &[f64],
    trial_up: &[f64],
    trial_dg: &[f64],
    first_iter: bool,
    pred_incr_gamma: Vec<f64>,
    lambda_n: Vec<f64>,
) -> Result<BlockSystem> {
    let solid = assemble_solid(
        &p.solid_mesh,
        &p.solid_mat,
        &p.solid_params,
        p.dt,
        solid_state,
        trial_d,
    )?;
    let fluid = assemble_fluid(
        &p.fluid_mesh,
        &p.fluid_mat,
        &p.fluid_scheme,
        p.dt,
        fluid_state,
        trial_up,
        trial_dg,
        &p.stab,
    )?;

    let s = split_matrix(&solid.tangent, &p.solid_map, &p.solid_map);
    let f = split_matrix(&fluid.jac_uu, &p.fluid_map, &p.fluid_map);
    let fg = split_matrix(&fluid.jac_ug, &p.fluid_map, &p.ale_map);
    let (r_s_i, r_s_g) = p.solid_map.split(&solid.residual);
    let (r_f_i, r_f_g) = p.fluid_map.split(&fluid.residual);

    // the ALE operator is constant; split on demand
    let ale_full = p.ale.matrix();
    let ni = p.ale_map.interior.len();
    let ng = p.ale_map.interface.len();
    let mut a_ii = Triplets::new(ni, ni);
    let mut a_ig = DenseMatrix::zeros(ni, ng);
    for (row_local, &row) in p.ale_map.interior.iter().enumerate() {
        let (cols, vals) = ale_full.row(row);
        for (c, v) in cols.iter().zip(vals) {
            match p.ale_map.place(*c) {
                Place::Interior(j) => a_ii.push(row_local, j, *v),
                Place::Interface(j) => a_ig.add_at(row_local, j, *v),
            }
        }
    }
    let full_res = ale_full.matvec_alloc(trial_dg);
    let r_ale: Vec<f64> = p.ale_map.interior.iter().map(|&d| full_res[d]).collect();

    let u_n_gamma = p.fluid_map.gather_interface(&fluid_state.up);
    Ok(BlockSystem {
        s,
        r_s_i,
        r_s_g,
        f,
        fg,
        r_f_i,
        r_f_g,
        a_ii: a_ii.into_csr(),
        a_ig,
        r_ale,
        meta: CouplingMeta {
            a: p.interp.a,
            b: p.interp.b,
            tau: p.tau(),
            dt: p.dt,
            first_iter,
            u_n_gamma,
            pred_incr_gamma,
            lambda_n,
        },
    })
}
