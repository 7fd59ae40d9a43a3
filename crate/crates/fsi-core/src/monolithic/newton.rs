//! Newton driver for one coupled time step: predictors, condensation, linear
//! solve, slaved interface updates, convergence control, and multiplier
//! recovery.

use super::blocks::{gather_blocks, BlockSystem, FsiProblem};
use super::condense::{condense_fluid_handled, condense_structure_handled, CondensedSystem};
use super::saddle::build_saddle_system;
use crate::fluid::{update_fluid_history, FluidState};
use crate::linalg::{
    dense_lu_solve, gmres_solve, BlockIlu0, LinearMethod, LinearSolverConfig, NoPrecond,
    Preconditioner,
};
use crate::mortar::{MasterChoice, MortarOperators};
use crate::solid::{predict_solid, update_solid_history, PredictorKind, SolidState};
use crate::{FsiError, Result};

/// Prescribed boundary values of a case; written into full field vectors at
/// the constrained dofs only.
pub trait BoundaryDriver {
    fn solid_values(&self, t: f64, d: &mut [f64]);
    fn fluid_values(&self, t: f64, up: &mut [f64]);
}

/// Coupled solution at one time level.
#[derive(Debug, Clone)]
pub struct CoupledState {
    pub solid: SolidState,
    pub fluid: FluidState,
    /// Multiplier (interface traction onto the structure) on the slave dofs.
    pub lambda: Vec<f64>,
    pub step: usize,
}

impl CoupledState {
    pub fn time(&self) -> f64 {
        self.solid.time
    }
}

/// Convergence control: residuals and increments are tested per field group
/// in RMS-normalized 2-norm and max-norm against absolute tolerances.
#[derive(Debug, Clone, serde::Deserialize, serde::Serialize)]
#[serde(default)]
pub struct NewtonConfig {
    pub field_tol: f64,
    pub interface_tol: f64,
    pub max_iters: usize,
    pub linear: LinearSolverConfig,
    /// Cross-check every Newton increment against the dense saddle oracle.
    pub oracle_check: bool,
    pub oracle_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            field_tol: 1e-8,
            interface_tol: 1e-9,
            max_iters: 15,
            linear: LinearSolverConfig::default(),
            oracle_check: false,
            oracle_tol: 1e-8,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.field_tol <= 0.0 || self.interface_tol <= 0.0 {
            return Err(FsiError::InvalidConfig(
                "Newton tolerances must be positive".into(),
            ));
        }
        self.linear.validate()
    }
}

/// Per-step record emitted into the diagnostics CSV.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub newton_iters: usize,
    pub linear_iters: usize,
    pub constraint_norm: f64,
    pub interface_energy: f64,
    /// Largest relative deviation against the saddle oracle, when enabled.
    pub oracle_max_rel: Option<f64>,
}

/// Result of comparing condensed and saddle increments.
#[derive(Debug, Clone, Copy)]
pub struct OracleCheck {
    pub rel_diff: f64,
}

/// Closed-form multiplier recovery from the converged raw interface residuals
/// of the slave field's momentum balance.
pub fn recover_lambda(
    master: MasterChoice,
    a: f64,
    b: f64,
    mortar: &MortarOperators,
    raw_r_s_gamma: &[f64],
    raw_r_f_gamma: &[f64],
    lambda_n: &[f64],
) -> Result<Vec<f64>> {
    match master {
        MasterChoice::Fluid => {
            if (1.0 - a).abs() < 1e-14 {
                return Err(FsiError::InvalidConfig(
                    "multiplier recovery needs a != 1".into(),
                ));
            }
            Ok(lambda_n
                .iter()
                .zip(raw_r_s_gamma)
                .zip(&mortar.d)
                .map(|((ln, r), d)| -a / (1.0 - a) * ln + r / (d * (1.0 - a)))
                .collect())
        }
        MasterChoice::Structure => {
            if (1.0 - b).abs() < 1e-14 {
                return Err(FsiError::InvalidConfig(
                    "multiplier recovery needs b != 1".into(),
                ));
            }
            Ok(lambda_n
                .iter()
                .zip(raw_r_f_gamma)
                .zip(&mortar.d)
                .map(|((ln, r), d)| -b / (1.0 - b) * ln - r / (d * (1.0 - b)))
                .collect())
        }
    }
}

struct GroupNorm {
    rms: f64,
    inf: f64,
}

fn norms<'a>(v: &[f64], idx: impl Iterator<Item = &'a usize>) -> GroupNorm {
    let mut sum = 0.0;
    let mut inf = 0.0f64;
    let mut count = 0usize;
    for &i in idx {
        sum += v[i] * v[i];
        inf = inf.max(v[i].abs());
        count += 1;
    }
    GroupNorm {
        rms: if count > 0 {
            (sum / count as f64).sqrt()
        } else {
            0.0
        },
        inf,
    }
}

/// Index groups of the condensed unknown vector used for convergence norms.
struct NormGroups {
    solid: Vec<usize>,
    fluid_vel: Vec<usize>,
    pressure: Vec<usize>,
    interface: Vec<usize>,
    ale: Vec<usize>,
}

fn norm_groups(p: &FsiProblem, sys: &CondensedSystem) -> NormGroups {
    let l = &sys.layout;
    let mut fluid_vel = Vec::new();
    let mut pressure = Vec::new();
    for (k, &dof) in p.fluid_map.interior.iter().enumerate() {
        if dof % 3 == 2 {
            pressure.push(l.f_i.start + k);
        } else {
            fluid_vel.push(l.f_i.start + k);
        }
    }
    if let Some(fg) = &l.f_g {
        fluid_vel.extend(fg.clone());
    }
    NormGroups {
        solid: l
            .s_i
            .clone()
            .chain(l.s_g.clone().unwrap_or(0..0))
            .collect(),
        fluid_vel,
        pressure,
        interface: sys.layout.master_gamma().collect(),
        ale: l.a_i.clone().collect(),
    }
}

fn groups_converged(groups: &NormGroups, v: &[f64], cfg: &NewtonConfig) -> bool {
    let checks = [
        (&groups.solid, cfg.field_tol),
        (&groups.fluid_vel, cfg.field_tol),
        (&groups.pressure, cfg.field_tol),
        (&groups.ale, cfg.field_tol),
        (&groups.interface, cfg.interface_tol),
    ];
    checks.iter().all(|(idx, tol)| {
        let n = norms(v, idx.iter());
        n.rms <= *tol && n.inf <= *tol
    })
}

/// Builds the global Dirichlet mask for a condensed layout.
fn condensed_mask(p: &FsiProblem, sys: &CondensedSystem) -> Vec<bool> {
    let l = &sys.layout;
    let mut mask = vec![false; l.n];
    for (k, &dof) in p.solid_map.interior.iter().enumerate() {
        mask[l.s_i.start + k] = p.solid_fixed[dof];
    }
    if let Some(sg) = &l.s_g {
        for (k, &dof) in p.solid_map.interface.iter().enumerate() {
            mask[sg.start + k] = p.solid_fixed[dof];
        }
    }
    for (k, &dof) in p.fluid_map.interior.iter().enumerate() {
        mask[l.f_i.start + k] = p.fluid_fixed[dof];
    }
    if let Some(fg) = &l.f_g {
        for (k, &dof) in p.fluid_map.interface.iter().enumerate() {
            mask[fg.start + k] = p.fluid_fixed[dof];
        }
    }
    for (k, &dof) in p.ale_map.interior.iter().enumerate() {
        mask[l.a_i.start + k] = p.ale_fixed[dof];
    }
    mask
}

fn condense(p: &FsiProblem, bs: &BlockSystem) -> Result<CondensedSystem> {
    match p.master {
        MasterChoice::Structure => {
            condense_structure_handled(bs, &p.mortar, p.drop_shape_derivatives)
        }
        MasterChoice::Fluid => condense_fluid_handled(bs, &p.mortar, p.drop_shape_derivatives),
    }
}

/// Increments of all field trials implied by one condensed solve, including
/// the slaved interface quantities.
struct TrialIncrements {
    solid: Vec<f64>,
    fluid_up: Vec<f64>,
    grid: Vec<f64>,
}

fn expand_increments(
    p: &FsiProblem,
    bs: &BlockSystem,
    sys: &CondensedSystem,
    dx: &[f64],
    first_iter: bool,
) -> TrialIncrements {
    let l = &sys.layout;
    let m = &bs.meta;
    let mut solid = vec![0.0; p.solid_map.n_dofs()];
    let mut fluid_up = vec![0.0; p.fluid_map.n_dofs()];
    let mut grid = vec![0.0; p.ale_map.n_dofs()];

    for (k, &dof) in p.solid_map.interior.iter().enumerate() {
        solid[dof] = dx[l.s_i.start + k];
    }
    for (k, &dof) in p.fluid_map.interior.iter().enumerate() {
        fluid_up[dof] = dx[l.f_i.start + k];
    }
    for (k, &dof) in p.ale_map.interior.iter().enumerate() {
        grid[dof] = dx[l.a_i.start + k];
    }

    let delta = if first_iter { 1.0 } else { 0.0 };
    match p.master {
        MasterChoice::Structure => {
            let sg = l.s_g.as_ref().unwrap();
            let d_s_gamma: Vec<f64> = dx[sg.clone()].to_vec();
            for (k, &dof) in p.solid_map.interface.iter().enumerate() {
                solid[dof] = d_s_gamma[k];
            }
            // du_gamma = (1/tau) P (dd + delta dd_p) - delta (dt/tau) u^n
            let combined: Vec<f64> = d_s_gamma
                .iter()
                .zip(&m.pred_incr_gamma)
                .map(|(d, p)| d + delta * p)
                .collect();
            let p_comb = p.mortar.p.matvec(&combined);
            for (k, &dof) in p.fluid_map.interface.iter().enumerate() {
                fluid_up[dof] = p_comb[k] / m.tau - delta * m.dt / m.tau * m.u_n_gamma[k];
            }
            for (k, &dof) in p.ale_map.interface.iter().enumerate() {
                grid[dof] = p_comb[k];
            }
        }
        MasterChoice::Fluid => {
            let fg = l.f_g.as_ref().unwrap();
            let du_gamma: Vec<f64> = dx[fg.clone()].to_vec();
            for (k, &dof) in p.fluid_map.interface.iter().enumerate() {
                fluid_up[dof] = du_gamma[k];
            }
            // dd^S_gamma = tau P du + delta (dt P u^n - dd_p)
            let p_du = p.mortar.p.matvec(&du_gamma);
            let p_un = p.mortar.p.matvec(&m.u_n_gamma);
            for (k, &dof) in p.solid_map.interface.iter().enumerate() {
                solid[dof] =
                    m.tau * p_du[k] + delta * (m.dt * p_un[k] - m.pred_incr_gamma[k]);
            }
            for (k, &dof) in p.ale_map.interface.iter().enumerate() {
                grid[dof] = m.tau * du_gamma[k] + delta * m.dt * m.u_n_gamma[k];
            }
        }
    }
    TrialIncrements {
        solid,
        fluid_up,
        grid,
    }
}

/// Compares the condensed increments against a dense solve of the
/// uncondensed saddle system under the same Dirichlet mask.
fn saddle_oracle(
    p: &FsiProblem,
    bs: &BlockSystem,
    inc: &TrialIncrements,
) -> Result<OracleCheck> {
    let sys = build_saddle_system(bs, &p.mortar, p.master)?;
    let l = sys.layout.clone();
    let mut a = sys.matrix;
    let mut r = sys.residual;
    let mut mask = vec![false; l.n];
    for (k, &dof) in p.solid_map.interior.iter().enumerate() {
        mask[l.s_i.start + k] = p.solid_fixed[dof];
    }
    for (k, &dof) in p.solid_map.interface.iter().enumerate() {
        mask[l.s_g.start + k] = p.solid_fixed[dof];
    }
    for (k, &dof) in p.fluid_map.interior.iter().enumerate() {
        mask[l.f_i.start + k] = p.fluid_fixed[dof];
    }
    for (k, &dof) in p.fluid_map.interface.iter().enumerate() {
        mask[l.f_g.start + k] = p.fluid_fixed[dof];
    }
    for (k, &dof) in p.ale_map.interior.iter().enumerate() {
        mask[l.a_i.start + k] = p.ale_fixed[dof];
    }
    for i in 0..l.n {
        if mask[i] {
            for j in 0..l.n {
                *a.get_mut(i, j) = 0.0;
                *a.get_mut(j, i) = 0.0;
            }
            *a.get_mut(i, i) = 1.0;
            r[i] = 0.0;
        }
    }
    let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
    let x = dense_lu_solve(&a, &neg_r)?;

    // gather saddle increments into field vectors
    let mut solid = vec![0.0; p.solid_map.n_dofs()];
    let mut fluid_up = vec![0.0; p.fluid_map.n_dofs()];
    let mut grid = vec![0.0; p.ale_map.n_dofs()];
    for (k, &dof) in p.solid_map.interior.iter().enumerate() {
        solid[dof] = x[l.s_i.start + k];
    }
    for (k, &dof) in p.solid_map.interface.iter().enumerate() {
        solid[dof] = x[l.s_g.start + k];
    }
    for (k, &dof) in p.fluid_map.interior.iter().enumerate() {
        fluid_up[dof] = x[l.f_i.start + k];
    }
    for (k, &dof) in p.fluid_map.interface.iter().enumerate() {
        fluid_up[dof] = x[l.f_g.start + k];
    }
    for (k, &dof) in p.ale_map.interior.iter().enumerate() {
        grid[dof] = x[l.a_i.start + k];
    }
    for (k, &dof) in p.ale_map.interface.iter().enumerate() {
        grid[dof] = x[l.g_g.start + k];
    }

    let mut num = 0.0;
    let mut den = 0.0;
    let mut per_field = [0.0f64; 3];
    for (which, (ours, saddle)) in [
        (0, (&inc.solid, &solid)),
        (1, (&inc.fluid_up, &fluid_up)),
        (2, (&inc.grid, &grid)),
    ] {
        for (a, b) in saddle.iter().zip(ours.iter()) {
            num += (a - b) * (a - b);
            den += a * a;
            per_field[which] = per_field[which].max((a - b).abs());
        }
    }
    // negligible increments (converged iterations) are compared absolutely;
    // dividing rounding noise by rounding noise says nothing
    let rel = if den.sqrt() > 1e-11 {
        num.sqrt() / den.sqrt()
    } else {
        num.sqrt()
    };
    if rel > 1e-10 && std::env::var("FSI_ORACLE_DEBUG").is_ok() {
        eprintln!(
            "oracle: rel {rel:.3e}, max abs diff solid {:.3e} fluid {:.3e} grid {:.3e}",
            per_field[0], per_field[1], per_field[2]
        );
    }
    Ok(OracleCheck { rel_diff: rel })
}

/// Advances the coupled system by one time step.
pub fn newton_solve_step(
    p: &FsiProblem,
    driver: &dyn BoundaryDriver,
    state: &CoupledState,
    predictor: PredictorKind,
    cfg: &NewtonConfig,
) -> Result<(CoupledState, StepDiagnostics)> {
    cfg.validate()?;
    let dt = p.dt;
    let t_new = state.solid.time + dt;

    // predictor step: explicit extrapolation on free dofs, exact Dirichlet
    // values on constrained dofs; the interface change feeds the first
    // Newton iteration's constraint terms
    let mut trial_d = state.solid.d.clone();
    let pred = predict_solid(&state.solid, predictor, dt);
    for (i, v) in trial_d.iter_mut().enumerate() {
        if !p.solid_fixed[i] {
            *v += pred[i];
        }
    }
    let mut bc = trial_d.clone();
    driver.solid_values(t_new, &mut bc);
    for (i, &fixed) in p.solid_fixed.iter().enumerate() {
        if fixed {
            trial_d[i] = bc[i];
        }
    }
    let pred_incr_gamma: Vec<f64> = p
        .solid_map
        .interface
        .iter()
        .map(|&dof| trial_d[dof] - state.solid.d[dof])
        .collect();

    let mut trial_up = state.fluid.up.clone();
    let mut bc = trial_up.clone();
    driver.fluid_values(t_new, &mut bc);
    for (i, &fixed) in p.fluid_fixed.iter().enumerate() {
        if fixed {
            trial_up[i] = bc[i];
        }
    }
    let mut trial_dg = state.fluid.d_g.clone();

    let mut linear_iters = 0usize;
    let mut last_inc: Option<Vec<f64>> = None;
    let mut oracle_max: Option<f64> = None;

    for iter in 0..=cfg.max_iters {
        let first_iter = iter == 0;
        let bs = gather_blocks(
            p,
            &state.solid,
            &state.fluid,
            &trial_d,
            &trial_up,
            &trial_dg,
            first_iter,
            pred_incr_gamma.clone(),
            state.lambda.clone(),
        )?;
        let mut sys = condense(p, &bs)?;
        let mask = condensed_mask(p, &sys);
        for (i, &fixed) in mask.iter().enumerate() {
            if fixed {
                sys.residual[i] = 0.0;
            }
        }
        let groups = norm_groups(p, &sys);

        // convergence: residual of this assembly plus the previous increment
        if iter > 0 {
            let res_ok = groups_converged(&groups, &sys.residual, cfg);
            let inc_ok = last_inc
                .as_ref()
                .map(|inc| groups_converged(&groups, inc, cfg))
                .unwrap_or(false);
            if res_ok && inc_ok {
                return finish_step(
                    p, state, &bs, trial_d, trial_up, trial_dg, iter, linear_iters, oracle_max,
                );
            }
            if iter == cfg.max_iters {
                let n = norms(&sys.residual, groups.interface.iter());
                return Err(FsiError::NonConvergence {
                    iters: iter,
                    resid_2: n.rms,
                    resid_inf: n.inf,
                });
            }
        }

        let mut jac = sys.jacobian.clone();
        jac.apply_dirichlet(&mask);
        let matrix = jac.into_csr();
        let rhs: Vec<f64> = sys.residual.iter().map(|v| -v).collect();
        let dx = match cfg.linear.method {
            LinearMethod::DenseLu => {
                linear_iters += 1;
                dense_lu_solve(&matrix.to_dense(), &rhs).map_err(|e| {
                    FsiError::LinearSolver(format!("Newton iteration {iter}: {e}"))
                })?
            }
            LinearMethod::Gmres => {
                let precond: Box<dyn Preconditioner> = if cfg.linear.use_ilu0 {
                    Box::new(BlockIlu0::factor(&matrix, &sys.layout.field_ranges())?)
                } else {
                    Box::new(NoPrecond)
                };
                let (x, stats) =
                    gmres_solve(&matrix, &rhs, precond.as_ref(), &cfg.linear).map_err(|e| {
                        FsiError::LinearSolver(format!("Newton iteration {iter}: {e}"))
                    })?;
                linear_iters += stats.iters;
                x
            }
        };

        let inc = expand_increments(p, &bs, &sys, &dx, first_iter);
        if cfg.oracle_check {
            let check = saddle_oracle(p, &bs, &inc)?;
            let worst = oracle_max.get_or_insert(0.0);
            *worst = worst.max(check.rel_diff);
            if check.rel_diff > cfg.oracle_tol {
                return Err(FsiError::Assembly(format!(
                    "condensed increments deviate from the saddle oracle by {:.3e}",
                    check.rel_diff
                )));
            }
        }
        for (v, i) in trial_d.iter_mut().zip(&inc.solid) {
            *v += i;
        }
        for (v, i) in trial_up.iter_mut().zip(&inc.fluid_up) {
            *v += i;
        }
        for (v, i) in trial_dg.iter_mut().zip(&inc.grid) {
            *v += i;
        }
        last_inc = Some(dx);
    }
    unreachable!("newton loop exits through convergence or the iteration cap");
}

#[allow(clippy::too_many_arguments)]
fn finish_step(
    p: &FsiProblem,
    state: &CoupledState,
    bs: &BlockSystem,
    trial_d: Vec<f64>,
    trial_up: Vec<f64>,
    trial_dg: Vec<f64>,
    newton_iters: usize,
    linear_iters: usize,
    oracle_max_rel: Option<f64>,
) -> Result<(CoupledState, StepDiagnostics)> {
    let lambda = recover_lambda(
        p.master,
        p.interp.a,
        p.interp.b,
        &p.mortar,
        &bs.r_s_g,
        &bs.r_f_g,
        &state.lambda,
    )?;

    // kinematic constraint violation at the converged state
    let d_s_gamma = p.solid_map.gather_interface(&trial_d);
    let d_g_gamma = p.ale_map.gather_interface(&trial_dg);
    let violation: Vec<f64> = match p.master {
        MasterChoice::Structure => {
            // C^S = M (solid master), C^F = D (fluid slave)
            let ms = p.mortar.m.matvec(&d_s_gamma);
            let dg = p.mortar.apply_d(&d_g_gamma);
            ms.iter().zip(&dg).map(|(a, b)| a - b).collect()
        }
        MasterChoice::Fluid => {
            let ds = p.mortar.apply_d(&d_s_gamma);
            let mg = p.mortar.m.matvec(&d_g_gamma);
            ds.iter().zip(&mg).map(|(a, b)| a - b).collect()
        }
    };
    let constraint_norm = violation.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // interface energy of the step, paired on the slave dof basis
    let incr: Vec<f64> = p
        .solid_map
        .interface
        .iter()
        .map(|&dof| trial_d[dof] - state.solid.d[dof])
        .collect();
    let weighted_incr = match p.master {
        MasterChoice::Structure => p.mortar.m.matvec(&incr),
        MasterChoice::Fluid => p.mortar.apply_d(&incr),
    };
    let interface_energy =
        crate::coupling::interface_energy_step(&p.interp, &state.lambda, &lambda, &weighted_incr);

    let solid = update_solid_history(&state.solid, &trial_d, &p.solid_params, p.dt)?;
    let fluid = update_fluid_history(&state.fluid, &trial_up, &trial_dg, &p.fluid_scheme, p.dt);
    let new_state = CoupledState {
        solid,
        fluid,
        lambda,
        step: state.step + 1,
    };
    let diag = StepDiagnostics {
        step: new_state.step,
        time: new_state.solid.time,
        newton_iters,
        linear_iters,
        constraint_norm,
        interface_energy,
        oracle_max_rel,
    };
    Ok((new_state, diag))
}
