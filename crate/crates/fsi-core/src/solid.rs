//! Nonlinear elastodynamics: plane-strain St.-Venant-Kirchhoff continuum
//! elements (bilinear quads, 2x2 Gauss, total Lagrangian) with
//! generalized-alpha time integration and single-field predictors.

use crate::linalg::Triplets;
use crate::mesh::{quad_shape_derivs, quad_shapes, Mesh2D};
use crate::{FsiError, Result};

pub const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

#[derive(Debug, Clone, Copy, serde::Deserialize, serde::Serialize)]
pub struct SolidMaterial {
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
}

impl SolidMaterial {
    pub fn validate(&self) -> Result<()> {
        if self.young <= 0.0 || self.density <= 0.0 {
            return Err(FsiError::InvalidConfig(
                "solid modulus and density must be positive".into(),
            ));
        }
        if !(-1.0 < self.poisson && self.poisson < 0.5) {
            return Err(FsiError::InvalidConfig(
                "Poisson ratio must lie in (-1, 0.5)".into(),
            ));
        }
        Ok(())
    }

    /// Lamé constants (plane strain).
    pub fn lame(&self) -> (f64, f64) {
        let lambda = self.young * self.poisson / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson));
        let mu = self.young / (2.0 * (1.0 + self.poisson));
        (lambda, mu)
    }
}

/// Second Piola-Kirchhoff stress from the right Cauchy-Green tensor,
/// plane-strain convention.
pub fn svk_stress(c: [[f64; 2]; 2], mat: &SolidMaterial) -> Result<[[f64; 2]; 2]> {
    let sym_err = (c[0][1] - c[1][0]).abs();
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    if sym_err > 1e-10 * (1.0 + c[0][0].abs() + c[1][1].abs()) || c[0][0] <= 0.0 || det <= 0.0 {
        return Err(FsiError::Domain(
            "right Cauchy-Green tensor must be symmetric positive definite".into(),
        ));
    }
    let (lambda, mu) = mat.lame();
    let e = [
        [0.5 * (c[0][0] - 1.0), 0.5 * c[0][1]],
        [0.5 * c[1][0], 0.5 * (c[1][1] - 1.0)],
    ];
    let tr = e[0][0] + e[1][1];
    Ok([
        [lambda * tr + 2.0 * mu * e[0][0], 2.0 * mu * e[0][1]],
        [2.0 * mu * e[1][0], lambda * tr + 2.0 * mu * e[1][1]],
    ])
}

/// Generalized-alpha parameters derived from the spectral radius at infinity.
#[derive(Debug, Clone, Copy)]
pub struct GenAlphaSolidParams {
    pub rho_inf: f64,
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GenAlphaSolidParams {
    pub fn from_rho_inf(rho_inf: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_inf) {
            return Err(FsiError::InvalidConfig(
                "solid spectral radius must lie in [0, 1]".into(),
            ));
        }
        let alpha_m = (2.0 * rho_inf - 1.0) / (rho_inf + 1.0);
        let alpha_f = rho_inf / (rho_inf + 1.0);
        let beta = 0.25 * (1.0 - alpha_m + alpha_f).powi(2);
        let gamma = 0.5 - alpha_m + alpha_f;
        Ok(GenAlphaSolidParams {
            rho_inf,
            alpha_m,
            alpha_f,
            beta,
            gamma,
        })
    }

    /// Weight `a` of the previous multiplier in the interface traction term.
    pub fn traction_history_weight(&self) -> f64 {
        self.alpha_f
    }
}

/// Solution history of the solid field at one time level.
#[derive(Debug, Clone)]
pub struct SolidState {
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub time: f64,
}

impl SolidState {
    pub fn zeros(n_dofs: usize) -> Self {
        SolidState {
            d: vec![0.0; n_dofs],
            v: vec![0.0; n_dofs],
            a: vec![0.0; n_dofs],
            time: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    ConstDis,
    ConstVel,
    ConstAcc,
}

/// Predictor increment added to `d^n` to form the initial Newton trial.
pub fn predict_solid(state: &SolidState, kind: PredictorKind, dt: f64) -> Vec<f64> {
    let n = state.d.len();
    let mut inc = vec![0.0; n];
    match kind {
        PredictorKind::ConstDis => {}
        PredictorKind::ConstVel => {
            for i in 0..n {
                inc[i] = dt * state.v[i];
            }
        }
        PredictorKind::ConstAcc => {
            for i in 0..n {
                inc[i] = dt * state.v[i] + 0.5 * dt * dt * state.a[i];
            }
        }
    }
    inc
}

/// Newmark acceleration implied by a trial displacement.
pub fn newmark_accel(
    trial_d: &[f64],
    state: &SolidState,
    params: &GenAlphaSolidParams,
    dt: f64,
) -> Result<Vec<f64>> {
    if params.beta == 0.0 {
        return Err(FsiError::InvalidConfig(
            "Newmark beta must be nonzero for implicit updates".into(),
        ));
    }
    let c = 1.0 / (params.beta * dt * dt);
    Ok(trial_d
        .iter()
        .zip(&state.d)
        .zip(&state.v)
        .zip(&state.a)
        .map(|(((dn1, dn), vn), an)| {
            c * (dn1 - dn - dt * vn - dt * dt * (0.5 - params.beta) * an)
        })
        .collect())
}

/// Advances the Newmark history to the converged displacement.
pub fn update_solid_history(
    state: &SolidState,
    converged_d: &[f64],
    params: &GenAlphaSolidParams,
    dt: f64,
) -> Result<SolidState> {
    let a_new = newmark_accel(converged_d, state, params, dt)?;
    let v_new: Vec<f64> = state
        .v
        .iter()
        .zip(&state.a)
        .zip(&a_new)
        .map(|((vn, an), an1)| vn + dt * ((1.0 - params.gamma) * an + params.gamma * an1))
        .collect();
    Ok(SolidState {
        d: converged_d.to_vec(),
        v: v_new,
        a: a_new,
        time: state.time + dt,
    })
}

fn ref_gradients(coords: &[[f64; 2]; 4], xi: f64, eta: f64) -> Result<([[f64; 2]; 4], f64)> {
    let dshape = quad_shape_derivs(xi, eta);
    let mut j = [[0.0f64; 2]; 2];
    for (a, d) in dshape.iter().enumerate() {
        j[0][0] += d[0] * coords[a][0];
        j[0][1] += d[0] * coords[a][1];
        j[1][0] += d[1] * coords[a][0];
        j[1][1] += d[1] * coords[a][1];
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det <= 0.0 {
        return Err(FsiError::Assembly("non-positive element Jacobian".into()));
    }
    let inv = [
        [j[1][1] / det, -j[0][1] / det],
        [-j[1][0] / det, j[0][0] / det],
    ];
    let mut grads = [[0.0f64; 2]; 4];
    for (a, d) in dshape.iter().enumerate() {
        grads[a][0] = inv[0][0] * d[0] + inv[0][1] * d[1];
        grads[a][1] = inv[1][0] * d[0] + inv[1][1] * d[1];
    }
    Ok((grads, det))
}

/// Internal force vector of the total-Lagrangian SVK element patch.
pub fn internal_force(mesh: &Mesh2D, mat: &SolidMaterial, d: &[f64]) -> Result<Vec<f64>> {
    let mut f = vec![0.0; 2 * mesh.n_nodes()];
    let (lambda, mu) = mat.lame();
    for (e, conn) in mesh.elements.iter().enumerate() {
        let coords = element_coords(mesh, conn);
        for &xi in &GAUSS_2 {
            for &eta in &GAUSS_2 {
                let (grads, det) = ref_gradients(&coords, xi, eta)
                    .map_err(|_| elem_err(e))?;
                let fdef = deformation_gradient(conn, d, &grads);
                let s = pk2(&fdef, lambda, mu);
                // P = F S
                let p = matmul2(&fdef, &s);
                for (a, g) in grads.iter().enumerate() {
                    for i in 0..2 {
                        f[2 * conn[a] + i] += det * (p[i][0] * g[0] + p[i][1] * g[1]);
                    }
                }
            }
        }
    }
    Ok(f)
}

/// Consistent tangent stiffness (material + geometric) at a displacement state.
pub fn tangent_stiffness(mesh: &Mesh2D, mat: &SolidMaterial, d: &[f64]) -> Result<Triplets> {
    let n = 2 * mesh.n_nodes();
    let mut k = Triplets::new(n, n);
    let (lambda, mu) = mat.lame();
    let dmat = [
        [lambda + 2.0 * mu, lambda, 0.0],
        [lambda, lambda + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ];
    for (e, conn) in mesh.elements.iter().enumerate() {
        let coords = element_coords(mesh, conn);
        for &xi in &GAUSS_2 {
            for &eta in &GAUSS_2 {
                let (grads, det) = ref_gradients(&coords, xi, eta)
                    .map_err(|_| elem_err(e))?;
                let fdef = deformation_gradient(conn, d, &grads);
                let s = pk2(&fdef, lambda, mu);
                // nonlinear strain-displacement rows, Voigt (E11, E22, 2E12)
                let mut b = [[[0.0f64; 2]; 4]; 3];
                for (a, g) in grads.iter().enumerate() {
                    for i in 0..2 {
                        b[0][a][i] = fdef[i][0] * g[0];
                        b[1][a][i] = fdef[i][1] * g[1];
                        b[2][a][i] = fdef[i][0] * g[1] + fdef[i][1] * g[0];
                    }
                }
                for a in 0..4 {
                    for bn in 0..4 {
                        // geometric part
                        let gab = grads[a][0] * (s[0][0] * grads[bn][0] + s[0][1] * grads[bn][1])
                            + grads[a][1] * (s[1][0] * grads[bn][0] + s[1][1] * grads[bn][1]);
                        for i in 0..2 {
                            for j in 0..2 {
                                let mut kij = if i == j { gab } else { 0.0 };
                                for vi in 0..3 {
                                    for vj in 0..3 {
                                        kij += b[vi][a][i] * dmat[vi][vj] * b[vj][bn][j];
                                    }
                                }
                                k.push(2 * conn[a] + i, 2 * conn[bn] + j, det * kij);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(k)
}

/// Consistent mass matrix on the reference configuration.
pub fn mass_matrix(mesh: &Mesh2D, mat: &SolidMaterial) -> Result<Triplets> {
    let n = 2 * mesh.n_nodes();
    let mut m = Triplets::new(n, n);
    for (e, conn) in mesh.elements.iter().enumerate() {
        let coords = element_coords(mesh, conn);
        for &xi in &GAUSS_2 {
            for &eta in &GAUSS_2 {
                let (_, det) = ref_gradients(&coords, xi, eta).map_err(|_| elem_err(e))?;
                let shapes = quad_shapes(xi, eta);
                for a in 0..4 {
                    for b in 0..4 {
                        let w = mat.density * shapes[a] * shapes[b] * det;
                        for i in 0..2 {
                            m.push(2 * conn[a] + i, 2 * conn[b] + i, w);
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Raw generalized-alpha residual and tangent at a trial displacement.
///
/// The residual weighs inertia at the `1 - alpha_m` intermediate level and
/// internal forces at `1 - alpha_f`; interface traction terms are added by
/// the monolithic assembly, not here. No boundary conditions are applied.
pub struct SolidAssembly {
    pub residual: Vec<f64>,
    pub tangent: Triplets,
}

pub fn assemble_solid(
    mesh: &Mesh2D,
    mat: &SolidMaterial,
    params: &GenAlphaSolidParams,
    dt: f64,
    state: &SolidState,
    trial_d: &[f64],
) -> Result<SolidAssembly> {
    if dt <= 0.0 {
        return Err(FsiError::InvalidConfig("time step must be positive".into()));
    }
    let n = 2 * mesh.n_nodes();
    assert_eq!(trial_d.len(), n);
    let a_new = newmark_accel(trial_d, state, params, dt)?;
    let mass = mass_matrix(mesh, mat)?.into_csr();

    let mut a_mid = vec![0.0; n];
    for i in 0..n {
        a_mid[i] = (1.0 - params.alpha_m) * a_new[i] + params.alpha_m * state.a[i];
    }
    let mut residual = mass.matvec_alloc(&a_mid);

    let f_new = internal_force(mesh, mat, trial_d)?;
    let f_old = internal_force(mesh, mat, &state.d)?;
    for i in 0..n {
        residual[i] += (1.0 - params.alpha_f) * f_new[i] + params.alpha_f * f_old[i];
    }

    let stiff = tangent_stiffness(mesh, mat, trial_d)?.into_csr();
    let kfac = 1.0 - params.alpha_f;
    let mfac = (1.0 - params.alpha_m) / (params.beta * dt * dt);
    let mut tangent = Triplets::new(n, n);
    for i in 0..n {
        let (cols, vals) = stiff.row(i);
        for (c, v) in cols.iter().zip(vals) {
            tangent.push(i, *c, kfac * v);
        }
        let (cols, vals) = mass.row(i);
        for (c, v) in cols.iter().zip(vals) {
            tangent.push(i, *c, mfac * v);
        }
    }
    Ok(SolidAssembly { residual, tangent })
}

fn elem_err(e: usize) -> FsiError {
    FsiError::Assembly(format!("solid element {e}: non-positive Jacobian"))
}

fn element_coords(mesh: &Mesh2D, conn: &[usize; 4]) -> [[f64; 2]; 4] {
    [
        mesh.node_coords[conn[0]],
        mesh.node_coords[conn[1]],
        mesh.node_coords[conn[2]],
        mesh.node_coords[conn[3]],
    ]
}

fn deformation_gradient(conn: &[usize; 4], d: &[f64], grads: &[[f64; 2]; 4]) -> [[f64; 2]; 2] {
    let mut f = [[1.0, 0.0], [0.0, 1.0]];
    for (a, g) in grads.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                f[i][j] += d[2 * conn[a] + i] * g[j];
            }
        }
    }
    f
}

fn pk2(f: &[[f64; 2]; 2], lambda: f64, mu: f64) -> [[f64; 2]; 2] {
    // E = (F^T F - I)/2
    let mut e = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut c = 0.0;
            for k in 0..2 {
                c += f[k][i] * f[k][j];
            }
            e[i][j] = 0.5 * (c - if i == j { 1.0 } else { 0.0 });
        }
    }
    let tr = e[0][0] + e[1][1];
    [
        [lambda * tr + 2.0 * mu * e[0][0], 2.0 * mu * e[0][1]],
        [2.0 * mu * e[1][0], lambda * tr + 2.0 * mu * e[1][1]],
    ]
}

fn matmul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_column_meshes;

    fn mat250() -> SolidMaterial {
        SolidMaterial {
            young: 250.0,
            poisson: 0.0,
            density: 500.0,
        }
    }

    #[test]
    fn svk_stress_free_at_identity() {
        let s = svk_stress([[1.0, 0.0], [0.0, 1.0]], &mat250()).unwrap();
        assert_eq!(s, [[0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn svk_uniaxial_hand_value() {
        // E=250, nu=0: lambda=0, mu=125; C=diag(1.21,1) -> E=diag(0.105,0)
        let s = svk_stress([[1.21, 0.0], [0.0, 1.0]], &mat250()).unwrap();
        assert!((s[0][0] - 26.25).abs() < 1e-12);
        assert!(s[1][1].abs() < 1e-15 && s[0][1].abs() < 1e-15);
    }

    #[test]
    fn svk_frame_indifferent_under_rotation() {
        // C = R^T R = I for any rotation
        let s = svk_stress([[1.0, 0.0], [0.0, 1.0]], &mat250()).unwrap();
        assert!(s[0][0].abs() < 1e-15 && s[1][1].abs() < 1e-15);
    }

    #[test]
    fn svk_rejects_non_spd() {
        assert!(svk_stress([[1.0, 2.0], [2.0, 1.0]], &mat250()).is_err());
        assert!(svk_stress([[-1.0, 0.0], [0.0, 1.0]], &mat250()).is_err());
    }

    #[test]
    fn gen_alpha_params_no_dissipation() {
        let p = GenAlphaSolidParams::from_rho_inf(1.0).unwrap();
        assert!((p.alpha_f - 0.5).abs() < 1e-15);
        assert!((p.alpha_m - 0.5).abs() < 1e-15);
        assert!((p.beta - 0.25).abs() < 1e-15);
        assert!((p.gamma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn predictor_arithmetic() {
        let mut st = SolidState::zeros(4);
        st.v = vec![2.0, 0.0, 0.0, 0.0];
        st.a = vec![1.0, 1.0, 1.0, 1.0];
        assert!(predict_solid(&st, PredictorKind::ConstDis, 0.01)
            .iter()
            .all(|&x| x == 0.0));
        let pv = predict_solid(&st, PredictorKind::ConstVel, 0.01);
        assert!((pv[0] - 0.02).abs() < 1e-15 && pv[1] == 0.0);
        let mut st2 = SolidState::zeros(2);
        st2.a = vec![1.0, 1.0];
        let pa = predict_solid(&st2, PredictorKind::ConstAcc, 0.1);
        assert!((pa[0] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn newmark_rest_stays_at_rest() {
        let p = GenAlphaSolidParams::from_rho_inf(0.8).unwrap();
        let st = SolidState::zeros(3);
        let new = update_solid_history(&st, &[0.0, 0.0, 0.0], &p, 0.1).unwrap();
        assert!(new.a.iter().all(|&x| x == 0.0));
        assert!(new.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn newmark_constant_velocity_exact() {
        let p = GenAlphaSolidParams::from_rho_inf(0.5).unwrap();
        let mut st = SolidState::zeros(1);
        st.d = vec![1.0];
        st.v = vec![3.0];
        let dt = 0.05;
        let new = update_solid_history(&st, &[1.0 + dt * 3.0], &p, dt).unwrap();
        assert!(new.a[0].abs() < 1e-12);
        assert!((new.v[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn newmark_reproduces_quadratic_motion() {
        // d(t) = -t^2 sampled at dt = 0.1 with consistent initial state
        for rho in [1.0, 0.5, 0.0] {
            let p = GenAlphaSolidParams::from_rho_inf(rho).unwrap();
            let mut st = SolidState::zeros(1);
            st.a = vec![-2.0];
            let new = update_solid_history(&st, &[-0.01], &p, 0.1).unwrap();
            assert!((new.a[0] + 2.0).abs() < 1e-12, "rho_inf={rho}");
            assert!((new.v[0] + 0.2).abs() < 1e-12, "rho_inf={rho}");
        }
    }

    #[test]
    fn zero_state_zero_load_gives_zero_residual() {
        let (_, solid) = generate_column_meshes(1.0, 1.0, 0.25, 2, 2, 1).unwrap();
        let p = GenAlphaSolidParams::from_rho_inf(1.0).unwrap();
        let st = SolidState::zeros(2 * solid.n_nodes());
        let asm = assemble_solid(&solid, &mat250(), &p, 0.01, &st, &st.d.clone()).unwrap();
        assert!(asm.residual.iter().all(|&r| r.abs() < 1e-14));
    }

    #[test]
    fn rigid_translation_has_zero_internal_force() {
        let (_, solid) = generate_column_meshes(1.0, 1.0, 0.25, 3, 2, 2).unwrap();
        let mut d = vec![0.0; 2 * solid.n_nodes()];
        for n in 0..solid.n_nodes() {
            d[2 * n] = 0.37;
            d[2 * n + 1] = -0.11;
        }
        let f = internal_force(&solid, &mat250(), &d).unwrap();
        assert!(f.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let (_, solid) = generate_column_meshes(1.0, 1.0, 0.4, 2, 2, 2).unwrap();
        let mat = mat250();
        let p = GenAlphaSolidParams::from_rho_inf(0.8).unwrap();
        let n = 2 * solid.n_nodes();
        let dt = 0.02;

        // deterministic pseudo-random state
        let mut seed = 0x12345678u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let mut st = SolidState::zeros(n);
        let mut trial = vec![0.0; n];
        for i in 0..n {
            st.d[i] = 0.01 * rnd();
            st.v[i] = 0.1 * rnd();
            st.a[i] = 0.1 * rnd();
            trial[i] = st.d[i] + 0.01 * rnd();
        }
        let w: Vec<f64> = (0..n).map(|_| rnd()).collect();

        let asm = assemble_solid(&solid, &mat, &p, dt, &st, &trial).unwrap();
        let jac = asm.tangent.into_csr();
        let jw = jac.matvec_alloc(&w);

        let scale = trial.iter().fold(0.1f64, |m, x| m.max(x.abs()));
        let eps = 1e-6 * scale;
        let mut dplus = trial.clone();
        let mut dminus = trial.clone();
        for i in 0..n {
            dplus[i] += eps * w[i];
            dminus[i] -= eps * w[i];
        }
        let rp = assemble_solid(&solid, &mat, &p, dt, &st, &dplus).unwrap().residual;
        let rm = assemble_solid(&solid, &mat, &p, dt, &st, &dminus)
            .unwrap()
            .residual;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let fd = (rp[i] - rm[i]) / (2.0 * eps);
            num += (fd - jw[i]).powi(2);
            den += jw[i].powi(2);
        }
        assert!(
            num.sqrt() <= 1e-6 * den.sqrt(),
            "relative FD mismatch {:.3e}",
            num.sqrt() / den.sqrt()
        );
    }
}
