//! Temporal interface logic: displacement-velocity conversion, incremental
//! kinematic constraints with predictor-violation terms, traction
//! interpolation between the fields' intermediate time levels, and the
//! interface energy diagnostic.

use crate::mortar::{MasterChoice, MortarOperators};
use crate::{FsiError, Result};

/// Conversion between interface fluid velocities and grid displacements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionRule {
    Trapezoidal,
    BackwardEuler,
}

impl ConversionRule {
    pub fn tau(&self, dt: f64) -> f64 {
        match self {
            ConversionRule::Trapezoidal => 0.5 * dt,
            ConversionRule::BackwardEuler => dt,
        }
    }
}

/// Weights of the previous-step multiplier in the interface traction terms:
/// `a` on the solid side, `b` on the fluid side. Equal weights eliminate the
/// interface energy production per step.
#[derive(Debug, Clone, Copy)]
pub struct TractionInterpolation {
    pub a: f64,
    pub b: f64,
}

impl TractionInterpolation {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b) {
            return Err(FsiError::InvalidConfig(
                "traction interpolation factors must lie in [0, 1)".into(),
            ));
        }
        Ok(TractionInterpolation { a, b })
    }
}

/// Grid displacement increment from a fluid interface velocity increment:
/// `tau * du + [first_iter] * dt * u_n`.
pub fn convert_velocity_increment(
    rule: ConversionRule,
    du_gamma: &[f64],
    un_gamma: &[f64],
    first_iter: bool,
    dt: f64,
) -> Vec<f64> {
    let tau = rule.tau(dt);
    du_gamma
        .iter()
        .zip(un_gamma)
        .map(|(du, un)| tau * du + if first_iter { dt * un } else { 0.0 })
        .collect()
}

/// First-iteration right-hand side of the combined kinematic constraint:
/// `delta_i0 * (dt * C^F u_n - C^S dd_p)`, sized by the slave interface dofs.
///
/// `pred_incr_solid` is the full predictor-step change of the solid interface
/// displacements (explicit predictor plus Dirichlet updates); `un_fluid` is
/// the fluid interface velocity at the previous step.
pub fn kinematic_constraint_rhs(
    mortar: &MortarOperators,
    master: MasterChoice,
    pred_incr_solid: &[f64],
    un_fluid: &[f64],
    first_iter: bool,
    dt: f64,
) -> Vec<f64> {
    let n_slave = mortar.d.len();
    if !first_iter {
        return vec![0.0; n_slave];
    }
    match master {
        // fluid master: C^S = D acts on the (slave) solid, C^F = M on the fluid
        MasterChoice::Fluid => {
            let mu = mortar.m.matvec(un_fluid);
            let dd = mortar.apply_d(pred_incr_solid);
            mu.iter().zip(&dd).map(|(m, d)| dt * m - d).collect()
        }
        // structure master: C^F = D acts on the (slave) fluid, C^S = M on the solid
        MasterChoice::Structure => {
            let du = mortar.apply_d(un_fluid);
            let md = mortar.m.matvec(pred_incr_solid);
            du.iter().zip(&md).map(|(d, m)| dt * d - m).collect()
        }
    }
}

/// Time-interpolated interface traction forces on the two fields:
/// fluid rows get `+C^F^T (b l_n + (1-b) l_new)`, solid rows get
/// `-C^S^T (a l_n + (1-a) l_new)`.
pub fn traction_residuals(
    interp: &TractionInterpolation,
    mortar: &MortarOperators,
    master: MasterChoice,
    lambda_n: &[f64],
    lambda_new: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let fluid_weighted: Vec<f64> = lambda_n
        .iter()
        .zip(lambda_new)
        .map(|(ln, lnew)| interp.b * ln + (1.0 - interp.b) * lnew)
        .collect();
    let solid_weighted: Vec<f64> = lambda_n
        .iter()
        .zip(lambda_new)
        .map(|(ln, lnew)| interp.a * ln + (1.0 - interp.a) * lnew)
        .collect();
    match master {
        MasterChoice::Fluid => {
            // slave = structure: C^S = D, C^F = M
            let fluid = mortar.m.matvec_transpose(&fluid_weighted);
            let solid: Vec<f64> = mortar
                .apply_d(&solid_weighted)
                .into_iter()
                .map(|v| -v)
                .collect();
            (fluid, solid)
        }
        MasterChoice::Structure => {
            // slave = fluid: C^F = D, C^S = M
            let fluid = mortar.apply_d(&fluid_weighted);
            let solid: Vec<f64> = mortar
                .m
                .matvec_transpose(&solid_weighted)
                .into_iter()
                .map(|v| -v)
                .collect();
            (fluid, solid)
        }
    }
}

/// Interface energy production over one converged step,
/// `((a-b) l_n + (b-a) l_new) . (C^S dd_gamma)`, where `weighted_solid_incr`
/// is the mortar-weighted solid interface displacement increment in the slave
/// dof basis.
pub fn interface_energy_step(
    interp: &TractionInterpolation,
    lambda_n: &[f64],
    lambda_new: &[f64],
    weighted_solid_incr: &[f64],
) -> f64 {
    let ab = interp.a - interp.b;
    lambda_n
        .iter()
        .zip(lambda_new)
        .zip(weighted_solid_incr)
        .map(|((ln, lnew), inc)| (ab * ln - ab * lnew) * inc)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_column_meshes, sets};
    use crate::mortar::assemble_mortar;

    #[test]
    fn tau_follows_the_conversion_rule() {
        assert_eq!(ConversionRule::Trapezoidal.tau(0.1), 0.05);
        assert_eq!(ConversionRule::BackwardEuler.tau(0.1), 0.1);
    }

    #[test]
    fn conversion_mid_iteration_scales_by_tau() {
        let out =
            convert_velocity_increment(ConversionRule::Trapezoidal, &[3.0], &[9.9], false, 0.1);
        assert!((out[0] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn conversion_first_iteration_matches_trapezoidal_rule() {
        // constant velocity: d^{n+1} - d^n = dt/2 (u^{n+1} + u^n) = dt u^n
        let out =
            convert_velocity_increment(ConversionRule::Trapezoidal, &[0.0], &[1.0], true, 0.1);
        assert!((out[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn conversion_first_iteration_matches_backward_euler() {
        // u^{n+1} = 0: increment must bring d to d^n + dt u^{n+1} = d^n
        let out =
            convert_velocity_increment(ConversionRule::BackwardEuler, &[-1.0], &[1.0], true, 0.1);
        assert!(out[0].abs() < 1e-15);
    }

    fn conforming_ops() -> crate::mortar::MortarOperators {
        let (fluid, solid) = generate_column_meshes(1.0, 1.0, 1.0, 2, 2, 2).unwrap();
        assemble_mortar(&solid, sets::INTERFACE, &fluid, sets::INTERFACE).unwrap()
    }

    #[test]
    fn constraint_rhs_vanishes_after_first_iteration() {
        let ops = conforming_ops();
        let n = ops.d.len();
        let rhs = kinematic_constraint_rhs(
            &ops,
            MasterChoice::Fluid,
            &vec![1.0; n],
            &vec![1.0; n],
            false,
            0.1,
        );
        assert!(rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constraint_rhs_vanishes_at_rest_without_predictor() {
        let ops = conforming_ops();
        let n = ops.d.len();
        let rhs = kinematic_constraint_rhs(
            &ops,
            MasterChoice::Fluid,
            &vec![0.0; n],
            &vec![0.0; n],
            true,
            0.1,
        );
        assert!(rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constraint_rhs_carries_predictor_violation() {
        // fluid master: slave = solid, C^S = D; ConstVel with v = 1, dt = 0.01
        let ops = conforming_ops();
        let n = ops.d.len();
        let mut pred = vec![0.0; n];
        for j in 0..n / 2 {
            pred[2 * j] = 0.01; // x component
        }
        let rhs =
            kinematic_constraint_rhs(&ops, MasterChoice::Fluid, &pred, &vec![0.0; n], true, 0.01);
        for j in 0..n / 2 {
            assert!((rhs[2 * j] + 0.01 * ops.d[2 * j]).abs() < 1e-15);
            assert!(rhs[2 * j + 1].abs() < 1e-15);
        }
    }

    #[test]
    fn traction_residuals_zero_for_zero_multipliers() {
        let ops = conforming_ops();
        let n = ops.d.len();
        let interp = TractionInterpolation::new(0.3, 0.4).unwrap();
        let (f, s) = traction_residuals(
            &interp,
            &ops,
            MasterChoice::Fluid,
            &vec![0.0; n],
            &vec![0.0; n],
        );
        assert!(f.iter().all(|&v| v == 0.0) && s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn traction_weighting_collapses_for_a_zero() {
        let ops = conforming_ops();
        let n = ops.d.len();
        let interp = TractionInterpolation::new(0.0, 0.0).unwrap();
        let mut ek = vec![0.0; n];
        ek[1] = 1.0;
        let (_, s) = traction_residuals(&interp, &ops, MasterChoice::Fluid, &vec![0.0; n], &ek);
        // solid residual is -D^T e_k (diagonal D)
        for (j, &v) in s.iter().enumerate() {
            let expect = if j == 1 { -ops.d[1] } else { 0.0 };
            assert!((v - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_multipliers_weighted_half_half() {
        let ops = conforming_ops();
        let n = ops.d.len();
        let interp = TractionInterpolation::new(0.5, 0.5).unwrap();
        let lam = vec![2.5; n];
        let (f, s) = traction_residuals(&interp, &ops, MasterChoice::Structure, &lam, &lam);
        // fluid: +D^T lam, solid: -M^T lam
        let expect_f = ops.apply_d(&lam);
        let expect_s = ops.m.matvec_transpose(&lam);
        for j in 0..n {
            assert!((f[j] - expect_f[j]).abs() < 1e-14);
        }
        for (j, &v) in expect_s.iter().enumerate() {
            assert!((s[j] + v).abs() < 1e-14);
        }
    }

    #[test]
    fn energy_vanishes_for_matched_interpolation() {
        let interp = TractionInterpolation::new(0.5, 0.5).unwrap();
        let e = interface_energy_step(&interp, &[3.0, -1.0], &[5.0, 2.0], &[0.1, 0.2]);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn energy_vanishes_for_constant_multiplier() {
        let interp = TractionInterpolation::new(0.5, 0.0).unwrap();
        let lam = [3.0, -1.0];
        let e = interface_energy_step(&interp, &lam, &lam, &[0.1, 0.2]);
        assert!(e.abs() < 1e-15);
    }

    #[test]
    fn energy_expands_the_bracket() {
        // a - b = 0.1, lambda jump q, increment s: energy = -0.1 q . s
        let interp = TractionInterpolation::new(0.6, 0.5).unwrap();
        let e = interface_energy_step(&interp, &[1.0], &[4.0], &[0.25]);
        assert!((e + 0.1 * 3.0 * 0.25).abs() < 1e-15);
    }
}
