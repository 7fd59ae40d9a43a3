use fsi_core::cases::CaseConfig;
use fsi_core::studies::run_case;

#[test]
fn probe_cavity() {
    let mut cfg = CaseConfig::cavity_default();
    cfg.cavity.n_cav = 8;
    cfg.cavity.n_top = 1;
    cfg.cavity.n_solid_x = 9;
    cfg.cavity.n_solid_y = 1;
    cfg.time.dt = 0.02;
    cfg.time.t_end = 0.1;
    let setup = cfg.build().unwrap();
    let run = run_case(&setup).unwrap();
    for d in &run.diagnostics {
        println!(
            "step {} t={:.3} newton {} linear {} constraint {:.2e} energy {:.2e}",
            d.step, d.time, d.newton_iters, d.linear_iters, d.constraint_norm, d.interface_energy
        );
    }
    let st = &run.final_state;
    let maxu = st.fluid.up.iter().step_by(3).fold(0.0f64, |m, v| m.max(v.abs()));
    let maxd = st.solid.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("max |u| = {maxu:.4e}, max |d^S| = {maxd:.4e}");
}
