//! End-to-end behavior of the monolithic Newton driver on the column case.

use fsi_core::cases::{CaseConfig, ColumnReference};
use fsi_core::fluid::FluidTimeScheme;
use fsi_core::linalg::LinearMethod;
use fsi_core::monolithic::newton_solve_step;
use fsi_core::mortar::MasterChoice;
use fsi_core::studies::run_case;

fn tiny_column() -> CaseConfig {
    let mut cfg = CaseConfig::column_default();
    cfg.column.nx_fluid = 2;
    cfg.column.nx_solid = 2;
    cfg.column.ny_fluid = 1;
    cfg.column.ny_solid = 1;
    cfg.newton.linear.method = LinearMethod::DenseLu;
    cfg
}

#[test]
fn rest_state_converges_in_one_iteration_with_zero_increment() {
    let mut cfg = tiny_column();
    cfg.column.rigid_solid = false;
    cfg.column.drive_scale = 0.0; // no load at all
    let setup = cfg.build().unwrap();
    let (new_state, diag) = newton_solve_step(
        &setup.problem,
        setup.driver.as_ref(),
        &setup.initial,
        cfg.coupling.predictor,
        &cfg.newton,
    )
    .unwrap();
    assert_eq!(diag.newton_iters, 1);
    assert!(new_state.solid.d.iter().all(|&v| v.abs() < 1e-14));
    assert!(new_state.fluid.up.iter().all(|&v| v.abs() < 1e-14));
    assert!(new_state.lambda.iter().all(|&v| v.abs() < 1e-14));
}

#[test]
fn machine_precision_recovery_of_quadratic_drive() {
    for dt in [0.02, 0.01] {
        let mut cfg = tiny_column();
        cfg.column.rigid_solid = true;
        cfg.column.drive_power = 2;
        cfg.time.dt = dt;
        cfg.time.t_end = 10.0 * dt;
        cfg.fluid_scheme = FluidTimeScheme::GenAlpha { rho_inf: 1.0 };
        cfg.solid_scheme.rho_inf = 1.0;
        let setup = cfg.build().unwrap();
        let run = run_case(&setup).unwrap();
        let (_, rel_u) = run.err_u.unwrap();
        let (_, rel_p) = run.err_p.unwrap();
        assert!(rel_u <= 1e-9, "velocity error {rel_u:.3e} at dt={dt}");
        assert!(rel_p <= 1e-9, "pressure error {rel_p:.3e} at dt={dt}");
    }
}

#[test]
fn recovered_multiplier_equals_interface_pressure_traction() {
    // backward-Euler fluid (b = 0) recovers the multiplier without history
    // pollution; the multiplier coefficients are nodal traction values, so the
    // x-component equals the reference pressure at the deformed interface.
    let mut cfg = tiny_column();
    cfg.column.rigid_solid = true;
    cfg.column.drive_power = 2;
    cfg.column.width = 0.25;
    cfg.time.dt = 0.01;
    cfg.time.t_end = 0.01;
    cfg.fluid_scheme = FluidTimeScheme::OneStepTheta { theta: 1.0 };
    let setup = cfg.build().unwrap();
    let run = run_case(&setup).unwrap();
    let lambda = &run.final_state.lambda;
    let reference = ColumnReference::from_config(&cfg);
    let t = cfg.time.dt;
    let x_iface = cfg.column.fluid_len - t * t; // interface follows the drive
    let (_, _, p_iface) = reference.evaluate(x_iface, t);
    let mortar = &setup.problem.mortar;
    for (j, _node) in mortar.slave_nodes.iter().enumerate() {
        assert!(
            (lambda[2 * j] - p_iface).abs() <= 1e-9 * p_iface.abs(),
            "lambda_x[{j}] = {} vs {p_iface}",
            lambda[2 * j]
        );
    }
    // the lateral suppression of the slave-side corner nodes is enforced
    // weakly, so the multiplier carries antisymmetric lateral components
    let n_slave = mortar.slave_nodes.len();
    let (ly0, ly1) = (lambda[1], lambda[2 * (n_slave - 1) + 1]);
    assert!(ly0.abs() > 1e-6, "expected a lateral traction at the corner");
    assert!((ly0 + ly1).abs() <= 1e-9 * ly0.abs().max(1.0));
}

#[test]
fn converged_solution_is_independent_of_master_choice() {
    // free (deformable) solid on a non-matching column over several steps
    let mut base = CaseConfig::column_default();
    base.column.rigid_solid = false;
    base.column.nx_fluid = 2;
    base.column.nx_solid = 2;
    base.column.ny_fluid = 2;
    base.column.ny_solid = 3;
    base.column.drive_power = 2;
    base.time.dt = 0.02;
    base.time.t_end = 0.1;
    base.newton.linear.method = LinearMethod::DenseLu;

    let run_with = |master: MasterChoice| {
        let mut cfg = base.clone();
        cfg.coupling.master = master;
        let setup = cfg.build().unwrap();
        run_case(&setup).unwrap().final_state
    };
    let s1 = run_with(MasterChoice::Structure);
    let s2 = run_with(MasterChoice::Fluid);
    let mut worst = 0.0f64;
    for (a, b) in s1
        .solid
        .d
        .iter()
        .zip(&s2.solid.d)
        .chain(s1.fluid.up.iter().zip(&s2.fluid.up))
    {
        worst = worst.max((a - b).abs());
    }
    assert!(worst <= 1e-7, "master-choice deviation {worst:.3e}");
}

#[test]
fn recovered_multiplier_closes_the_slave_momentum_balance() {
    // plugging the recovered multiplier back into the uncondensed slave
    // interface momentum row must balance within the Newton tolerance
    let mut cfg = tiny_column();
    cfg.column.rigid_solid = false;
    cfg.time.dt = 0.02;
    cfg.time.t_end = 0.06;
    cfg.fluid_scheme = FluidTimeScheme::GenAlpha { rho_inf: 0.8 };
    let setup = cfg.build().unwrap();

    let mut state = setup.initial.clone();
    for _ in 0..3 {
        let lambda_old = state.lambda.clone();
        let (new_state, _) = newton_solve_step(
            &setup.problem,
            setup.driver.as_ref(),
            &state,
            cfg.coupling.predictor,
            &cfg.newton,
        )
        .unwrap();
        // structure-handled: fluid interface rows read
        //   r^F_gamma + D^T (b lambda_n + (1-b) lambda_{n+1}) = 0
        let p = &setup.problem;
        let bs = fsi_core::monolithic::gather_blocks(
            p,
            &state.solid,
            &state.fluid,
            &new_state.solid.d,
            &new_state.fluid.up,
            &new_state.fluid.d_g,
            false,
            vec![0.0; p.mortar.d.len()],
            lambda_old.clone(),
        )
        .unwrap();
        let b = p.interp.b;
        for (j, &d) in p.mortar.d.iter().enumerate() {
            let traction = d * (b * lambda_old[j] + (1.0 - b) * new_state.lambda[j]);
            let row = bs.r_f_g[j] + traction;
            assert!(row.abs() <= 1e-7, "interface row {j} imbalance {row:.3e}");
        }
        state = new_state;
    }
}
