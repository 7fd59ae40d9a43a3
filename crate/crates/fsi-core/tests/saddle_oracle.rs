//! Equivalence of the condensed Newton systems with a dense LU solve of the
//! uncondensed saddle-point system on tiny column meshes.

use fsi_core::cases::CaseConfig;
use fsi_core::coupling::ConversionRule;
use fsi_core::fluid::FluidTimeScheme;
use fsi_core::linalg::LinearMethod;
use fsi_core::monolithic::newton_solve_step;
use fsi_core::mortar::MasterChoice;
use fsi_core::solid::PredictorKind;

fn oracle_config(
    master: MasterChoice,
    conversion: ConversionRule,
    predictor: PredictorKind,
    matched_interpolation: bool,
) -> CaseConfig {
    let mut cfg = CaseConfig::column_default();
    cfg.column.rigid_solid = false;
    cfg.column.nx_fluid = 2;
    cfg.column.nx_solid = 2;
    cfg.column.ny_fluid = 2;
    cfg.column.ny_solid = 2;
    cfg.column.drive_power = 2;
    cfg.time.dt = 0.02;
    cfg.coupling.master = master;
    cfg.coupling.conversion = conversion;
    cfg.coupling.predictor = predictor;
    cfg.solid_scheme.rho_inf = 1.0; // a = 0.5
    cfg.fluid_scheme = if matched_interpolation {
        FluidTimeScheme::GenAlpha { rho_inf: 1.0 } // b = 0.5 = a
    } else {
        FluidTimeScheme::GenAlpha { rho_inf: 0.5 } // b = 1/3 != a
    };
    cfg.newton.linear.method = LinearMethod::DenseLu;
    cfg.newton.oracle_check = true;
    cfg.newton.oracle_tol = 1e-8;
    cfg
}

#[test]
fn condensed_increments_match_dense_saddle_solve() {
    // every Newton increment of every combination is cross-checked inside the
    // step driver; first_iter = true is covered by the first iteration
    for master in [MasterChoice::Structure, MasterChoice::Fluid] {
        for conversion in [ConversionRule::Trapezoidal, ConversionRule::BackwardEuler] {
            for predictor in [PredictorKind::ConstDis, PredictorKind::ConstVel] {
                for matched in [true, false] {
                    let cfg = oracle_config(master, conversion, predictor, matched);
                    let setup = cfg.build().unwrap();
                    let mut state = setup.initial.clone();
                    let mut worst: f64 = 0.0;
                    for _ in 0..3 {
                        let (new_state, diag) = newton_solve_step(
                            &setup.problem,
                            setup.driver.as_ref(),
                            &state,
                            predictor,
                            &cfg.newton,
                        )
                        .unwrap_or_else(|e| {
                            panic!("{master:?}/{conversion:?}/{predictor:?}/matched={matched}: {e}")
                        });
                        worst = worst.max(diag.oracle_max_rel.unwrap());
                        state = new_state;
                    }
                    println!(
                        "{master:?} {conversion:?} {predictor:?} matched={matched}: \
                         max oracle deviation {worst:.3e}"
                    );
                    assert!(worst <= 1e-8);
                }
            }
        }
    }
}

#[test]
fn predictors_change_iterations_never_the_answer() {
    let kinds = [
        PredictorKind::ConstDis,
        PredictorKind::ConstVel,
        PredictorKind::ConstAcc,
    ];
    let mut finals = Vec::new();
    for &kind in &kinds {
        let mut cfg = oracle_config(
            MasterChoice::Structure,
            ConversionRule::Trapezoidal,
            kind,
            true,
        );
        cfg.newton.oracle_check = false;
        cfg.time.t_end = 0.1;
        let setup = cfg.build().unwrap();
        let run = fsi_core::studies::run_case(&setup).unwrap();
        finals.push(run.final_state);
    }
    for other in &finals[1..] {
        for (a, b) in finals[0]
            .solid
            .d
            .iter()
            .zip(&other.solid.d)
            .chain(finals[0].fluid.up.iter().zip(&other.fluid.up))
        {
            assert!((a - b).abs() <= 1e-8, "predictor changed the solution");
        }
    }
}

#[test]
fn drive_with_zero_initial_velocity_makes_predictors_coincide() {
    // from rest, ConstVel predicts the same trial as ConstDis on step one
    let mut iters = Vec::new();
    for kind in [PredictorKind::ConstDis, PredictorKind::ConstVel] {
        let cfg = oracle_config(
            MasterChoice::Structure,
            ConversionRule::Trapezoidal,
            kind,
            true,
        );
        let setup = cfg.build().unwrap();
        let (_, diag) = newton_solve_step(
            &setup.problem,
            setup.driver.as_ref(),
            &setup.initial,
            kind,
            &cfg.newton,
        )
        .unwrap();
        iters.push(diag.newton_iters);
    }
    assert_eq!(iters[0], iters[1]);
}
