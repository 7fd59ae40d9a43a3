//! Time-loop driver, temporal convergence studies, and predictor comparisons,
//! with CSV emission of per-step diagnostics and study summaries.

use crate::cases::{column_l2_errors, CaseConfig, CaseKind, CaseSetup, ColumnReference};
use crate::monolithic::{newton_solve_step, CoupledState, StepDiagnostics};
use crate::solid::PredictorKind;
use crate::{FsiError, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Outcome of one time-loop run.
pub struct RunResult {
    pub final_state: CoupledState,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Absolute and relative L2 errors against the column reference solution
    /// at the final time (column runs only).
    pub err_u: Option<(f64, f64)>,
    pub err_p: Option<(f64, f64)>,
}

impl RunResult {
    pub fn total_linear_iters(&self) -> usize {
        self.diagnostics.iter().map(|d| d.linear_iters).sum()
    }

    pub fn total_newton_iters(&self) -> usize {
        self.diagnostics.iter().map(|d| d.newton_iters).sum()
    }

    pub fn max_interface_energy(&self) -> f64 {
        self.diagnostics
            .iter()
            .fold(0.0f64, |m, d| m.max(d.interface_energy.abs()))
    }
}

/// Runs the time loop of a built case from t = 0 to t_end.
pub fn run_case(setup: &CaseSetup) -> Result<RunResult> {
    let cfg = &setup.config;
    let n_steps = (cfg.time.t_end / cfg.time.dt).round().max(1.0) as usize;
    let mut state = setup.initial.clone();
    let mut diagnostics = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        let (new_state, diag) = newton_solve_step(
            &setup.problem,
            setup.driver.as_ref(),
            &state,
            cfg.coupling.predictor,
            &cfg.newton,
        )
        .map_err(|e| {
            FsiError::Assembly(format!(
                "step {} (t = {:.6}): {e}",
                step + 1,
                state.time() + cfg.time.dt
            ))
        })?;
        state = new_state;
        diagnostics.push(diag);
    }

    let (err_u, err_p) = if cfg.kind == CaseKind::PseudoColumn {
        let reference = ColumnReference::from_config(cfg);
        let (eu, ep, ru, rp) = column_l2_errors(
            &setup.problem.fluid_mesh,
            &state.fluid,
            &reference,
            state.fluid.time,
        );
        (
            Some((eu, eu / ru.max(1e-300))),
            Some((ep, ep / rp.max(1e-300))),
        )
    } else {
        (None, None)
    };

    Ok(RunResult {
        final_state: state,
        diagnostics,
        err_u,
        err_p,
    })
}

/// Fixed per-step diagnostics schema.
pub fn diagnostics_csv(diags: &[StepDiagnostics]) -> String {
    let mut out = String::from("step,time,newton_iters,linear_iters,constraint_norm,interface_energy\n");
    for d in diags {
        writeln!(
            out,
            "{},{:.10},{},{},{:.6e},{:.6e}",
            d.step, d.time, d.newton_iters, d.linear_iters, d.constraint_norm, d.interface_energy
        )
        .unwrap();
    }
    out
}

/// One row of a temporal convergence study.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub dt: f64,
    pub err_u: f64,
    pub err_p: f64,
    pub order_u: Option<f64>,
    pub order_p: Option<f64>,
}

pub struct StudyResult {
    pub rows: Vec<StudyRow>,
}

impl StudyResult {
    pub fn csv(&self) -> String {
        let mut out = String::from("dt,err_u_L2,err_p_L2,order_u,order_p\n");
        for r in &self.rows {
            let fmt = |o: Option<f64>| o.map(|v| format!("{v:.4}")).unwrap_or_default();
            writeln!(
                out,
                "{:.8e},{:.10e},{:.10e},{},{}",
                r.dt,
                r.err_u,
                r.err_p,
                fmt(r.order_u),
                fmt(r.order_p)
            )
            .unwrap();
        }
        out
    }

    /// Observed order between the two finest levels.
    pub fn final_orders(&self) -> Option<(f64, f64)> {
        let last = self.rows.last()?;
        Some((last.order_u?, last.order_p?))
    }
}

/// Observed convergence orders of an error sequence under dt halving,
/// `log2(e(dt) / e(dt/2))`.
pub fn observed_orders(errors: &[f64]) -> Vec<Option<f64>> {
    let mut orders = vec![None];
    for w in errors.windows(2) {
        orders.push(Some((w[0] / w[1]).log2()));
    }
    orders
}

/// Runs the column case across halving time-step levels and reports L2 errors
/// and observed orders at the fixed end time.
pub fn temporal_convergence_study(base: &CaseConfig, dts: &[f64]) -> Result<StudyResult> {
    if base.kind != CaseKind::PseudoColumn {
        return Err(FsiError::InvalidConfig(
            "temporal convergence study runs on the column case".into(),
        ));
    }
    if dts.len() < 2 {
        return Err(FsiError::InvalidConfig(
            "convergence study needs at least two dt levels".into(),
        ));
    }
    for w in dts.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-9 {
            return Err(FsiError::InvalidConfig(
                "convergence study expects halving dt levels".into(),
            ));
        }
    }
    let mut errs_u = Vec::new();
    let mut errs_p = Vec::new();
    let mut partial = Vec::new();
    for &dt in dts {
        let mut cfg = base.clone();
        cfg.time.dt = dt;
        let setup = cfg.build()?;
        let run = run_case(&setup)?;
        let (eu, _) = run.err_u.expect("column run reports velocity error");
        let (ep, _) = run.err_p.expect("column run reports pressure error");
        errs_u.push(eu);
        errs_p.push(ep);
        partial.push(dt);
    }
    let ou = observed_orders(&errs_u);
    let op = observed_orders(&errs_p);
    let rows = partial
        .iter()
        .enumerate()
        .map(|(k, &dt)| StudyRow {
            dt,
            err_u: errs_u[k],
            err_p: errs_p[k],
            order_u: ou[k],
            order_p: op[k],
        })
        .collect();
    Ok(StudyResult { rows })
}

/// Per-predictor cost record of the cavity study.
#[derive(Debug, Clone)]
pub struct PredictorRun {
    pub kind: PredictorKind,
    pub linear_iters: usize,
    pub newton_iters: usize,
    pub per_step_linear: Vec<usize>,
    pub final_state: CoupledState,
}

pub struct PredictorStudy {
    pub runs: Vec<PredictorRun>,
}

impl PredictorStudy {
    /// Largest pointwise state difference of any run against the first.
    pub fn max_state_difference(&self) -> f64 {
        let base = &self.runs[0].final_state;
        let mut worst = 0.0f64;
        for run in &self.runs[1..] {
            for (a, b) in base
                .solid
                .d
                .iter()
                .zip(&run.final_state.solid.d)
                .chain(base.fluid.up.iter().zip(&run.final_state.fluid.up))
            {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    /// Percent reduction of cumulative linear iterations against the first run.
    pub fn reduction_percent(&self, k: usize) -> f64 {
        let base = self.runs[0].linear_iters as f64;
        100.0 * (base - self.runs[k].linear_iters as f64) / base
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("predictor,newton_iters,linear_iters,reduction_percent\n");
        for (k, run) in self.runs.iter().enumerate() {
            writeln!(
                out,
                "{:?},{},{},{:.2}",
                run.kind,
                run.newton_iters,
                run.linear_iters,
                self.reduction_percent(k)
            )
            .unwrap();
        }
        out
    }
}

/// Reruns the same case under different structure-field predictors with all
/// solver settings held fixed.
pub fn predictor_study(base: &CaseConfig, kinds: &[PredictorKind]) -> Result<PredictorStudy> {
    let mut runs = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let mut cfg = base.clone();
        cfg.coupling.predictor = kind;
        let setup = cfg.build()?;
        let run = run_case(&setup)?;
        runs.push(PredictorRun {
            kind,
            linear_iters: run.total_linear_iters(),
            newton_iters: run.total_newton_iters(),
            per_step_linear: run.diagnostics.iter().map(|d| d.linear_iters).collect(),
            final_state: run.final_state,
        });
    }
    Ok(PredictorStudy { runs })
}

/// Writes the diagnostics CSV (and optional field snapshots) of a run.
pub fn write_outputs(setup: &CaseSetup, run: &RunResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("diagnostics.csv"), diagnostics_csv(&run.diagnostics))?;
    if setup.config.output.write_fields {
        let mesh = &setup.problem.fluid_mesh;
        let st = &run.final_state.fluid;
        let mut out = String::from("node,x,y,u,v,p\n");
        for (n, c) in mesh.node_coords.iter().enumerate() {
            writeln!(
                out,
                "{n},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                c[0] + st.d_g[2 * n],
                c[1] + st.d_g[2 * n + 1],
                st.up[3 * n],
                st.up[3 * n + 1],
                st.up[3 * n + 2]
            )
            .unwrap();
        }
        std::fs::write(dir.join("fluid_fields.csv"), out)?;

        let mesh = &setup.problem.solid_mesh;
        let d = &run.final_state.solid.d;
        let mut out = String::from("node,x,y,dx,dy\n");
        for (n, c) in mesh.node_coords.iter().enumerate() {
            writeln!(
                out,
                "{n},{:.10e},{:.10e},{:.10e},{:.10e}",
                c[0], c[1], d[2 * n], d[2 * n + 1]
            )
            .unwrap();
        }
        std::fs::write(dir.join("solid_fields.csv"), out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_quadratic_errors_give_order_two() {
        let errors = [4.0e-2, 1.0e-2, 2.5e-3, 6.25e-4];
        let orders = observed_orders(&errors);
        for o in orders.iter().skip(1) {
            assert!((o.unwrap() - 2.0).abs() < 1e-12);
        }
    }
}
