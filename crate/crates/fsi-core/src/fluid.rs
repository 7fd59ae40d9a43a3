//! Stabilized incompressible Navier-Stokes on a moving mesh.
//!
//! Equal-order bilinear velocity/pressure elements with SUPG/PSPG
//! stabilization (optional grad-div), assembled on the scheme's intermediate
//! configuration. The momentum equation is evaluated at the intermediate time
//! level of the chosen integrator (generalized-alpha or one-step-theta); the
//! continuity equation is enforced at the end of the step. Derivatives with
//! respect to both the velocity/pressure unknowns and the grid displacement
//! (shape derivatives) are propagated exactly through dual numbers.

use crate::dual::Dual;
use crate::linalg::Triplets;
use crate::mesh::{quad_shape_derivs, quad_shapes, Mesh2D};
use crate::solid::GAUSS_2;
use crate::{FsiError, Result};

#[derive(Debug, Clone, Copy, serde::Deserialize, serde::Serialize)]
pub struct FluidMaterial {
    pub dyn_viscosity: f64,
    pub density: f64,
}

impl FluidMaterial {
    pub fn validate(&self) -> Result<()> {
        if self.dyn_viscosity <= 0.0 || self.density <= 0.0 {
            return Err(FsiError::InvalidConfig(
                "fluid viscosity and density must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluidTimeScheme {
    OneStepTheta { theta: f64 },
    GenAlpha { rho_inf: f64 },
}

/// How the discrete acceleration entering the momentum residual is formed.
#[derive(Debug, Clone, Copy)]
pub enum AccelRule {
    /// Weighted stored accelerations with the gamma update rule.
    GenAlpha { alpha_m: f64, gamma: f64 },
    /// Plain step increment `(u^{n+1} - u^n) / dt`.
    StepIncrement,
}

/// Derived time-integration weights of the fluid scheme.
#[derive(Debug, Clone, Copy)]
pub struct FluidTimeWeights {
    /// Weight `b` of the previous-step multiplier in the interface traction.
    pub b: f64,
    /// Weight of the new velocity/pressure in the momentum terms.
    pub field_new: f64,
    /// Weight of the new grid displacement in the evaluation configuration.
    pub cfg_new: f64,
    pub accel: AccelRule,
}

impl FluidTimeScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FluidTimeScheme::OneStepTheta { theta } => {
                if !(theta > 0.0 && theta <= 1.0) {
                    return Err(FsiError::InvalidConfig(
                        "one-step-theta needs theta in (0, 1]; explicit schemes are excluded"
                            .into(),
                    ));
                }
            }
            FluidTimeScheme::GenAlpha { rho_inf } => {
                if !(0.0..=1.0).contains(&rho_inf) {
                    return Err(FsiError::InvalidConfig(
                        "fluid spectral radius must lie in [0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> FluidTimeWeights {
        match *self {
            FluidTimeScheme::OneStepTheta { theta } => FluidTimeWeights {
                b: 1.0 - theta,
                field_new: theta,
                cfg_new: theta,
                accel: AccelRule::StepIncrement,
            },
            FluidTimeScheme::GenAlpha { rho_inf } => {
                let alpha_f = 1.0 / (1.0 + rho_inf);
                let alpha_m = 0.5 * (3.0 - rho_inf) / (1.0 + rho_inf);
                let gamma = 0.5 + alpha_m - alpha_f;
                FluidTimeWeights {
                    b: 1.0 - alpha_f,
                    field_new: alpha_f,
                    cfg_new: alpha_f,
                    accel: AccelRule::GenAlpha { alpha_m, gamma },
                }
            }
        }
    }
}

/// Traction history weight and intermediate-time evaluation data.
pub fn fluid_time_weights(scheme: &FluidTimeScheme) -> Result<FluidTimeWeights> {
    scheme.validate()?;
    Ok(scheme.weights())
}

/// Fluid solution history. Velocity and pressure are merged per node
/// (`[u, v, p]` interleaved); acceleration and grid quantities carry two
/// components per node.
#[derive(Debug, Clone)]
pub struct FluidState {
    pub up: Vec<f64>,
    pub u_dot: Vec<f64>,
    pub d_g: Vec<f64>,
    pub grid_vel: Vec<f64>,
    pub time: f64,
}

impl FluidState {
    pub fn zeros(n_nodes: usize) -> Self {
        FluidState {
            up: vec![0.0; 3 * n_nodes],
            u_dot: vec![0.0; 2 * n_nodes],
            d_g: vec![0.0; 2 * n_nodes],
            grid_vel: vec![0.0; 2 * n_nodes],
            time: 0.0,
        }
    }
}

/// Advances the fluid history to the converged step solution.
pub fn update_fluid_history(
    state: &FluidState,
    converged_up: &[f64],
    converged_dg: &[f64],
    scheme: &FluidTimeScheme,
    dt: f64,
) -> FluidState {
    let n = state.u_dot.len() / 2;
    let w = scheme.weights();
    let mut u_dot = vec![0.0; 2 * n];
    for a in 0..n {
        for c in 0..2 {
            let du = converged_up[3 * a + c] - state.up[3 * a + c];
            u_dot[2 * a + c] = match w.accel {
                AccelRule::GenAlpha { gamma, .. } => {
                    du / (gamma * dt) + (1.0 - 1.0 / gamma) * state.u_dot[2 * a + c]
                }
                AccelRule::StepIncrement => du / dt,
            };
        }
    }
    let grid_vel: Vec<f64> = converged_dg
        .iter()
        .zip(&state.d_g)
        .map(|(new, old)| (new - old) / dt)
        .collect();
    FluidState {
        up: converged_up.to_vec(),
        u_dot,
        d_g: converged_dg.to_vec(),
        grid_vel,
        time: state.time + dt,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StabilizationConfig {
    pub grad_div: bool,
}

/// Raw fluid residual and Jacobians at a trial state. `jac_uu` couples to the
/// merged velocity/pressure unknowns, `jac_ug` to the grid displacement
/// (shape derivatives). No boundary conditions are applied.
pub struct FluidAssembly {
    pub residual: Vec<f64>,
    pub jac_uu: Triplets,
    pub jac_ug: Triplets,
}

const NLOC: usize = 20; // 4 nodes x (u, v, p) + 4 nodes x (gx, gy)
type D = Dual<NLOC>;

pub fn assemble_fluid(
    mesh: &Mesh2D,
    mat: &FluidMaterial,
    scheme: &FluidTimeScheme,
    dt: f64,
    state: &FluidState,
    trial_up: &[f64],
    trial_dg: &[f64],
    stab: &StabilizationConfig,
) -> Result<FluidAssembly> {
    if dt <= 0.0 {
        return Err(FsiError::InvalidConfig("time step must be positive".into()));
    }
    scheme.validate()?;
    let w = scheme.weights();
    let n = mesh.n_nodes();
    assert_eq!(trial_up.len(), 3 * n);
    assert_eq!(trial_dg.len(), 2 * n);

    let rho = mat.density;
    let mu = mat.dyn_viscosity;
    let nu_kin = mu / rho;

    let mut residual = vec![0.0; 3 * n];
    let mut jac_uu = Triplets::new(3 * n, 3 * n);
    let mut jac_ug = Triplets::new(3 * n, 2 * n);

    for (e, conn) in mesh.elements.iter().enumerate() {
        // nodal quantities, dual-seeded in the element-local unknowns
        let mut x = [[D::zero(); 2]; 4]; // evaluation configuration coords
        let mut u_w = [[D::zero(); 2]; 4]; // weighted velocity
        let mut u_new = [[D::zero(); 2]; 4]; // end-of-step velocity
        let mut a_w = [[D::zero(); 2]; 4]; // weighted acceleration
        let mut u_grid = [[D::zero(); 2]; 4]; // mesh velocity over the step
        let mut p_w = [D::zero(); 4]; // weighted pressure

        for a in 0..4 {
            let node = conn[a];
            for c in 0..2 {
                let un1 = D::variable(trial_up[3 * node + c], 3 * a + c);
                let un = state.up[3 * node + c];
                let gn1 = D::variable(trial_dg[2 * node + c], 12 + 2 * a + c);
                let gn = state.d_g[2 * node + c];

                u_new[a][c] = un1;
                u_w[a][c] = un1 * w.field_new + (1.0 - w.field_new) * un;
                u_grid[a][c] = (gn1 + (-gn)) * (1.0 / dt);
                x[a][c] = gn1 * w.cfg_new + (mesh.node_coords[node][c] + (1.0 - w.cfg_new) * gn);
                a_w[a][c] = match w.accel {
                    AccelRule::GenAlpha { alpha_m, gamma } => {
                        let udot_n = state.u_dot[2 * node + c];
                        let udot_n1 =
                            (un1 + (-un)) * (1.0 / (gamma * dt)) + (1.0 - 1.0 / gamma) * udot_n;
                        udot_n1 * alpha_m + (1.0 - alpha_m) * udot_n
                    }
                    AccelRule::StepIncrement => (un1 + (-un)) * (1.0 / dt),
                };
            }
            let pn1 = D::variable(trial_up[3 * node + 2], 3 * a + 2);
            let pn = state.up[3 * node + 2];
            p_w[a] = pn1 * w.field_new + (1.0 - w.field_new) * pn;
        }

        // element length scale and stabilization parameter from the center point
        let (_, det_c) = iso_gradients(&x, 0.0, 0.0).ok_or_else(|| inverted(e))?;
        if det_c.re <= 0.0 {
            return Err(inverted(e));
        }
        let h = (det_c * 4.0).sqrt();
        let shapes_c = quad_shapes(0.0, 0.0);
        let mut c_center = [D::zero(); 2];
        for a in 0..4 {
            for i in 0..2 {
                c_center[i] += (u_w[a][i] - u_grid[a][i]) * shapes_c[a];
            }
        }
        let cnorm = (c_center[0] * c_center[0] + c_center[1] * c_center[1] + 1e-30).sqrt();
        let visc_term = (h * h).recip() * (4.0 * nu_kin);
        let inv_tau_sq = (cnorm * 2.0 / h) * (cnorm * 2.0 / h)
            + visc_term * visc_term
            + (2.0 / dt) * (2.0 / dt);
        let tau = inv_tau_sq.sqrt().recip();
        let tau_c = cnorm * h * 0.5 + nu_kin;

        let mut r_elem = [D::zero(); 12];

        for &xi in &GAUSS_2 {
            for &eta in &GAUSS_2 {
                let shapes = quad_shapes(xi, eta);
                let (grads, det) = iso_gradients(&x, xi, eta).ok_or_else(|| inverted(e))?;
                if det.re <= 0.0 {
                    return Err(inverted(e));
                }

                // interpolate fields at the Gauss point
                let mut u = [D::zero(); 2];
                let mut acc = [D::zero(); 2];
                let mut ug = [D::zero(); 2];
                let mut grad_u = [[D::zero(); 2]; 2]; // grad_u[i][j] = du_i/dx_j
                let mut p = D::zero();
                let mut grad_p = [D::zero(); 2];
                let mut div_new = D::zero();
                let mut div_w = D::zero();
                for a in 0..4 {
                    let na = shapes[a];
                    for i in 0..2 {
                        u[i] += u_w[a][i] * na;
                        acc[i] += a_w[a][i] * na;
                        ug[i] += u_grid[a][i] * na;
                        grad_p[i] += p_w[a] * grads[a][i];
                        div_new += u_new[a][i] * grads[a][i];
                        div_w += u_w[a][i] * grads[a][i];
                        for j in 0..2 {
                            grad_u[i][j] += u_w[a][i] * grads[a][j];
                        }
                    }
                    p += p_w[a] * na;
                }
                let conv = [u[0] - ug[0], u[1] - ug[1]];
                // strong momentum residual; the viscous part is dropped from the
                // stabilization operator on bilinear elements
                let mut strong = [D::zero(); 2];
                for i in 0..2 {
                    strong[i] = (acc[i] + conv[0] * grad_u[i][0] + conv[1] * grad_u[i][1]) * rho
                        + grad_p[i];
                }

                for a in 0..4 {
                    let na = shapes[a];
                    let ga = grads[a];
                    let c_dot_ga = conv[0] * ga[0] + conv[1] * ga[1];
                    for i in 0..2 {
                        let mut val = (acc[i] + conv[0] * grad_u[i][0] + conv[1] * grad_u[i][1])
                            * (rho * na);
                        for j in 0..2 {
                            val += (grad_u[i][j] + grad_u[j][i]) * ga[j] * mu;
                        }
                        val -= p * ga[i];
                        val += tau * c_dot_ga * strong[i];
                        if stab.grad_div {
                            val += tau_c * div_w * ga[i] * rho;
                        }
                        r_elem[3 * a + i] += val * det;
                    }
                    let pspg = (ga[0] * strong[0] + ga[1] * strong[1]) * tau * (1.0 / rho);
                    r_elem[3 * a + 2] += (div_new * na + pspg) * det;
                }
            }
        }

        // scatter residual and Jacobian entries
        for k in 0..12 {
            let row = 3 * conn[k / 3] + k % 3;
            residual[row] += r_elem[k].re;
            for q in 0..12 {
                let col = 3 * conn[q / 3] + q % 3;
                jac_uu.push(row, col, r_elem[k].eps[q]);
            }
            for q in 0..8 {
                let col = 2 * conn[q / 2] + q % 2;
                jac_ug.push(row, col, r_elem[k].eps[12 + q]);
            }
        }
    }

    Ok(FluidAssembly {
        residual,
        jac_uu,
        jac_ug,
    })
}

fn inverted(e: usize) -> FsiError {
    FsiError::Assembly(format!(
        "fluid element {e}: non-positive Jacobian in evaluation configuration"
    ))
}

/// Physical gradients of the bilinear shapes and the Jacobian determinant at
/// a reference point, on dual-valued coordinates. Returns `None` when the map
/// degenerates.
fn iso_gradients(x: &[[D; 2]; 4], xi: f64, eta: f64) -> Option<([[D; 2]; 4], D)> {
    let dshape = quad_shape_derivs(xi, eta);
    let mut j = [[D::zero(); 2]; 2];
    for (a, d) in dshape.iter().enumerate() {
        for c in 0..2 {
            j[0][c] += x[a][c] * d[0];
            j[1][c] += x[a][c] * d[1];
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det.re.abs() < 1e-300 {
        return None;
    }
    let inv_det = det.recip();
    let inv = [
        [j[1][1] * inv_det, -(j[0][1] * inv_det)],
        [-(j[1][0] * inv_det), j[0][0] * inv_det],
    ];
    let mut grads = [[D::zero(); 2]; 4];
    for (a, d) in dshape.iter().enumerate() {
        for i in 0..2 {
            grads[a][i] = inv[i][0] * d[0] + inv[i][1] * d[1];
        }
    }
    Some((grads, det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_column_meshes, sets};

    fn water() -> FluidMaterial {
        FluidMaterial {
            dyn_viscosity: 0.01,
            density: 1.0,
        }
    }

    #[test]
    fn time_weights_match_scheme_definitions() {
        let w = fluid_time_weights(&FluidTimeScheme::OneStepTheta { theta: 1.0 }).unwrap();
        assert_eq!(w.b, 0.0);
        let w = fluid_time_weights(&FluidTimeScheme::GenAlpha { rho_inf: 0.5 }).unwrap();
        assert!((w.field_new - 2.0 / 3.0).abs() < 1e-15); // alpha_f
        assert!((w.b - 1.0 / 3.0).abs() < 1e-15);
        let w = fluid_time_weights(&FluidTimeScheme::OneStepTheta { theta: 0.5 }).unwrap();
        assert_eq!(w.b, 0.5);
    }

    #[test]
    fn explicit_theta_is_rejected() {
        assert!(fluid_time_weights(&FluidTimeScheme::OneStepTheta { theta: 0.0 }).is_err());
    }

    fn boundary_nodes(fluid: &Mesh2D) -> std::collections::HashSet<usize> {
        [sets::INTERFACE, sets::NEUMANN, sets::LATERAL]
            .iter()
            .flat_map(|s| fluid.edge_set_nodes(s).unwrap())
            .collect()
    }

    #[test]
    fn hydrostatic_rest_state_has_zero_interior_residual() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.5, 3, 1, 2).unwrap();
        let n = fluid.n_nodes();
        let mut state = FluidState::zeros(n);
        for a in 0..n {
            state.up[3 * a + 2] = 0.7; // constant pressure
        }
        let trial = state.up.clone();
        let scheme = FluidTimeScheme::OneStepTheta { theta: 0.5 };
        let asm = assemble_fluid(
            &fluid,
            &water(),
            &scheme,
            0.01,
            &state,
            &trial,
            &state.d_g.clone(),
            &StabilizationConfig::default(),
        )
        .unwrap();
        let boundary = boundary_nodes(&fluid);
        for a in 0..n {
            if !boundary.contains(&a) {
                assert!(asm.residual[3 * a].abs() < 1e-13);
                assert!(asm.residual[3 * a + 1].abs() < 1e-13);
            }
            assert!(asm.residual[3 * a + 2].abs() < 1e-13, "continuity at {a}");
        }
    }

    #[test]
    fn steady_uniform_flow_on_fixed_mesh_has_zero_interior_residual() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.5, 3, 1, 2).unwrap();
        let n = fluid.n_nodes();
        let mut state = FluidState::zeros(n);
        for a in 0..n {
            state.up[3 * a] = 0.8;
        }
        let trial = state.up.clone();
        let scheme = FluidTimeScheme::GenAlpha { rho_inf: 0.8 };
        let asm = assemble_fluid(
            &fluid,
            &water(),
            &scheme,
            0.01,
            &state,
            &trial,
            &state.d_g.clone(),
            &StabilizationConfig::default(),
        )
        .unwrap();
        let boundary = boundary_nodes(&fluid);
        for a in 0..n {
            if !boundary.contains(&a) {
                assert!(asm.residual[3 * a].abs() < 1e-13);
                assert!(asm.residual[3 * a + 1].abs() < 1e-13);
            }
            assert!(asm.residual[3 * a + 2].abs() < 1e-13);
        }
    }

    #[test]
    fn free_stream_preserved_on_uniformly_translating_mesh() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.5, 3, 1, 2).unwrap();
        let n = fluid.n_nodes();
        let mut state = FluidState::zeros(n);
        for a in 0..n {
            state.up[3 * a] = 1.3;
        }
        let trial = state.up.clone();
        let mut dg = vec![0.0; 2 * n];
        for a in 0..n {
            dg[2 * a] = 1.3 * 0.01; // mesh follows the flow over one step
        }
        let scheme = FluidTimeScheme::OneStepTheta { theta: 0.5 };
        let asm = assemble_fluid(
            &fluid,
            &water(),
            &scheme,
            0.01,
            &state,
            &trial,
            &dg,
            &StabilizationConfig::default(),
        )
        .unwrap();
        for r in &asm.residual {
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn combined_jacobian_matches_finite_differences() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.7, 2, 1, 2).unwrap();
        let n = fluid.n_nodes();
        let mat = water();
        let dt = 0.015;

        let mut seed = 0xc0ffee11u64;
        let mut rnd = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for scheme in [
            FluidTimeScheme::GenAlpha { rho_inf: 0.6 },
            FluidTimeScheme::OneStepTheta { theta: 0.7 },
        ] {
            let mut state = FluidState::zeros(n);
            let mut trial_up = vec![0.0; 3 * n];
            let mut trial_dg = vec![0.0; 2 * n];
            for a in 0..n {
                for c in 0..2 {
                    state.up[3 * a + c] = 0.3 * rnd();
                    state.u_dot[2 * a + c] = 0.3 * rnd();
                    state.d_g[2 * a + c] = 0.01 * rnd();
                    trial_dg[2 * a + c] = state.d_g[2 * a + c] + 0.01 * rnd();
                    trial_up[3 * a + c] = state.up[3 * a + c] + 0.1 * rnd();
                }
                state.up[3 * a + 2] = 0.3 * rnd();
                trial_up[3 * a + 2] = state.up[3 * a + 2] + 0.1 * rnd();
            }
            let stab = StabilizationConfig { grad_div: true };
            let asm =
                assemble_fluid(&fluid, &mat, &scheme, dt, &state, &trial_up, &trial_dg, &stab)
                    .unwrap();
            let juu = asm.jac_uu.into_csr();
            let jug = asm.jac_ug.into_csr();

            let wu: Vec<f64> = (0..3 * n).map(|_| rnd()).collect();
            let wg: Vec<f64> = (0..2 * n).map(|_| rnd()).collect();
            let mut jw = juu.matvec_alloc(&wu);
            let jgw = jug.matvec_alloc(&wg);
            for (a, b) in jw.iter_mut().zip(&jgw) {
                *a += b;
            }

            let eps = 1e-7;
            let perturb = |s: f64| -> Vec<f64> {
                let up: Vec<f64> = trial_up
                    .iter()
                    .zip(&wu)
                    .map(|(v, w)| v + s * eps * w)
                    .collect();
                let dg: Vec<f64> = trial_dg
                    .iter()
                    .zip(&wg)
                    .map(|(v, w)| v + s * eps * w)
                    .collect();
                assemble_fluid(&fluid, &mat, &scheme, dt, &state, &up, &dg, &stab)
                    .unwrap()
                    .residual
            };
            let rp = perturb(1.0);
            let rm = perturb(-1.0);
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..3 * n {
                let fd = (rp[i] - rm[i]) / (2.0 * eps);
                num += (fd - jw[i]).powi(2);
                den += jw[i].powi(2);
            }
            assert!(
                num.sqrt() <= 1e-5 * den.sqrt().max(1.0),
                "FD mismatch {:.3e} for {scheme:?}",
                num.sqrt() / den.sqrt()
            );
        }
    }

    #[test]
    fn history_update_rules() {
        let state = FluidState::zeros(2);
        // backward Euler stores (u^{n+1} - u^n)/dt
        let mut up1 = vec![0.0; 6];
        up1[0] = 0.2;
        let new = update_fluid_history(
            &state,
            &up1,
            &[0.0; 4],
            &FluidTimeScheme::OneStepTheta { theta: 1.0 },
            0.1,
        );
        assert!((new.u_dot[0] - 2.0).abs() < 1e-14);

        // gen-alpha with rho_inf = 1 keeps zero acceleration across constant states
        let new = update_fluid_history(
            &state,
            &[0.0; 6],
            &[0.0; 4],
            &FluidTimeScheme::GenAlpha { rho_inf: 1.0 },
            0.1,
        );
        assert!(new.u_dot.iter().all(|&x| x == 0.0));

        // zero flow stays zero
        assert!(new.up.iter().all(|&x| x == 0.0));
    }
}
