//! Case definitions: the driven pseudo-1D column and the leaky driven cavity
//! with flexible bottom, plus the column's closed-form reference solution and
//! L2 error evaluation.

use crate::ale::assemble_ale;
use crate::coupling::{ConversionRule, TractionInterpolation};
use crate::dofmap::DofMap;
use crate::fluid::{fluid_time_weights, FluidMaterial, FluidState, FluidTimeScheme,
    StabilizationConfig};
use crate::mesh::{
    generate_cavity_meshes, generate_column_meshes, quad_shapes, sets, Mesh2D, CAVITY_TOP_HEIGHT,
};
use crate::monolithic::{BoundaryDriver, CoupledState, FsiProblem, NewtonConfig};
use crate::mortar::{assemble_mortar, MasterChoice};
use crate::solid::{GenAlphaSolidParams, PredictorKind, SolidMaterial, SolidState, GAUSS_2};
use crate::{FsiError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    PseudoColumn,
    DrivenCavity,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct ColumnConfig {
    pub fluid_len: f64,
    pub solid_len: f64,
    pub width: f64,
    pub nx_fluid: usize,
    pub nx_solid: usize,
    pub ny_fluid: usize,
    pub ny_solid: usize,
    /// Dirichlet drive at the dry end: `d(t) = -drive_scale * t^drive_power`.
    pub drive_power: u32,
    pub drive_scale: f64,
    /// Drive every solid dof rigidly (the incompressible-column limit with an
    /// exact reference solution). Requires the structure as mortar master.
    pub rigid_solid: bool,
    /// Ambient pressure at the open end.
    pub p_inf: f64,
}

impl Default for ColumnConfig {
    fn default() -> Self {
        ColumnConfig {
            fluid_len: 1.0,
            solid_len: 1.0,
            width: 0.25,
            nx_fluid: 4,
            nx_solid: 4,
            ny_fluid: 1,
            ny_solid: 1,
            drive_power: 2,
            drive_scale: 1.0,
            rigid_solid: true,
            p_inf: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct CavityConfig {
    pub n_cav: usize,
    pub n_top: usize,
    pub n_solid_x: usize,
    pub n_solid_y: usize,
    /// Lid ramp period: `u_lid(t) = 1 - cos(2 pi t / lid_period)`.
    pub lid_period: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        CavityConfig {
            n_cav: 16,
            n_top: 2,
            n_solid_x: 18,
            n_solid_y: 1,
            lid_period: 5.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt: 0.02,
            t_end: 0.2,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct CouplingConfig {
    pub conversion: ConversionRule,
    pub master: MasterChoice,
    pub predictor: PredictorKind,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            conversion: ConversionRule::Trapezoidal,
            master: MasterChoice::Structure,
            predictor: PredictorKind::ConstDis,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct SolidSchemeConfig {
    pub rho_inf: f64,
}

impl Default for SolidSchemeConfig {
    fn default() -> Self {
        SolidSchemeConfig { rho_inf: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: String,
    pub write_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            write_fields: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct StabConfig {
    pub grad_div: bool,
    pub drop_shape_derivatives: bool,
}

impl Default for StabConfig {
    fn default() -> Self {
        StabConfig {
            grad_div: false,
            drop_shape_derivatives: false,
        }
    }
}

fn default_fluid_scheme() -> FluidTimeScheme {
    FluidTimeScheme::GenAlpha { rho_inf: 1.0 }
}

fn default_fluid_material() -> FluidMaterial {
    FluidMaterial {
        dyn_viscosity: 0.01,
        density: 1.0,
    }
}

fn default_solid_material() -> SolidMaterial {
    SolidMaterial {
        young: 100.0,
        poisson: 0.0,
        density: 1.0,
    }
}

/// Full description of one simulation, read from a TOML file with nested
/// sections; every field has a documented default.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CaseConfig {
    pub kind: CaseKind,
    #[serde(default)]
    pub column: ColumnConfig,
    #[serde(default)]
    pub cavity: CavityConfig,
    #[serde(default = "default_fluid_material")]
    pub fluid: FluidMaterial,
    #[serde(default = "default_solid_material")]
    pub solid: SolidMaterial,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub solid_scheme: SolidSchemeConfig,
    #[serde(default = "default_fluid_scheme")]
    pub fluid_scheme: FluidTimeScheme,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub stabilization: StabConfig,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl CaseConfig {
    pub fn column_default() -> Self {
        CaseConfig {
            kind: CaseKind::PseudoColumn,
            column: ColumnConfig::default(),
            cavity: CavityConfig::default(),
            fluid: default_fluid_material(),
            solid: default_solid_material(),
            time: TimeConfig::default(),
            solid_scheme: SolidSchemeConfig::default(),
            fluid_scheme: default_fluid_scheme(),
            coupling: CouplingConfig::default(),
            stabilization: StabConfig::default(),
            newton: NewtonConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn cavity_default() -> Self {
        let mut cfg = Self::column_default();
        cfg.kind = CaseKind::DrivenCavity;
        cfg.solid = SolidMaterial {
            young: 250.0,
            poisson: 0.0,
            density: 500.0,
        };
        cfg.time = TimeConfig {
            dt: 0.02,
            t_end: 1.2,
        };
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FsiError::InvalidConfig(format!("config parse: {e}")))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Builds meshes, dof partitions, boundary conditions, and coupling
    /// operators; rejects configurations that place interface Dirichlet data
    /// on the slave side before any assembly happens.
    pub fn build(&self) -> Result<CaseSetup> {
        self.fluid.validate()?;
        self.solid.validate()?;
        self.fluid_scheme.validate()?;
        self.newton.validate()?;
        if self.time.dt <= 0.0 || self.time.t_end <= 0.0 {
            return Err(FsiError::InvalidConfig(
                "time step and end time must be positive".into(),
            ));
        }
        let solid_params = GenAlphaSolidParams::from_rho_inf(self.solid_scheme.rho_inf)?;
        let a = solid_params.traction_history_weight();
        let b = fluid_time_weights(&self.fluid_scheme)?.b;
        let interp = TractionInterpolation::new(a, b)?;

        match self.kind {
            CaseKind::PseudoColumn => self.build_column(solid_params, interp),
            CaseKind::DrivenCavity => self.build_cavity(solid_params, interp),
        }
    }

    fn build_column(
        &self,
        solid_params: GenAlphaSolidParams,
        interp: TractionInterpolation,
    ) -> Result<CaseSetup> {
        let c = &self.column;
        let (fluid_mesh, _) = generate_column_meshes(
            c.fluid_len,
            c.solid_len,
            c.width,
            c.nx_fluid,
            c.nx_solid,
            c.ny_fluid,
        )?;
        let (_, solid_mesh) = generate_column_meshes(
            c.fluid_len,
            c.solid_len,
            c.width,
            c.nx_fluid,
            c.nx_solid,
            c.ny_solid,
        )?;

        let solid_map = DofMap::build(&solid_mesh, 2, sets::INTERFACE, None)?;
        let fluid_map =
            DofMap::build(&fluid_mesh, 3, sets::INTERFACE, Some(&[true, true, false]))?;
        let ale_map = DofMap::build(&fluid_mesh, 2, sets::INTERFACE, None)?;

        let master = self.coupling.master;
        let solid_iface = solid_mesh.edge_set_nodes(sets::INTERFACE)?;
        let fluid_iface = fluid_mesh.edge_set_nodes(sets::INTERFACE)?;

        // solid constraints: dry-end drive, lateral suppression, optional rigid mode
        let mut solid_fixed = vec![false; solid_map.n_dofs()];
        for n in 0..solid_mesh.n_nodes() {
            let on_iface = solid_iface.binary_search(&n).is_ok();
            if c.rigid_solid {
                // rigidly driven solid: every dof carries the drive
                solid_fixed[2 * n] = true;
                solid_fixed[2 * n + 1] = true;
            } else if master == MasterChoice::Structure || !on_iface {
                solid_fixed[2 * n + 1] = true; // pseudo-1D: no lateral motion
            }
        }
        for n in solid_mesh.edge_set_nodes(sets::DIRICHLET)? {
            solid_fixed[2 * n] = true;
            solid_fixed[2 * n + 1] = true;
        }

        // fluid constraints: lateral suppression everywhere except the slave interface
        let mut fluid_fixed = vec![false; fluid_map.n_dofs()];
        for n in 0..fluid_mesh.n_nodes() {
            let on_iface = fluid_iface.binary_search(&n).is_ok();
            let lateral_ok = master == MasterChoice::Fluid || !on_iface;
            if lateral_ok {
                fluid_fixed[3 * n + 1] = true;
            }
        }

        // grid constraints: open end pinned, lateral walls roll in x
        let mut ale_fixed = vec![false; ale_map.n_dofs()];
        for n in fluid_mesh.edge_set_nodes(sets::NEUMANN)? {
            ale_fixed[2 * n] = true;
            ale_fixed[2 * n + 1] = true;
        }
        for n in fluid_mesh.edge_set_nodes(sets::LATERAL)? {
            if fluid_iface.binary_search(&n).is_err() {
                ale_fixed[2 * n + 1] = true;
            }
        }

        let drive = PolyDrive {
            power: c.drive_power,
            scale: c.drive_scale,
        };
        let driver = ColumnDriver { drive };

        // consistent initialization from the reference solution
        let mut fluid_state = FluidState::zeros(fluid_mesh.n_nodes());
        let mut solid_state = SolidState::zeros(solid_map.n_dofs());
        if c.rigid_solid {
            let a0 = drive.accel(0.0);
            for n in 0..fluid_mesh.n_nodes() {
                fluid_state.u_dot[2 * n] = a0;
                fluid_state.up[3 * n + 2] =
                    -self.fluid.density * a0 * fluid_mesh.node_coords[n][0] + c.p_inf;
            }
            for n in 0..solid_mesh.n_nodes() {
                solid_state.a[2 * n] = a0;
            }
        }

        self.finish_setup(
            fluid_mesh,
            solid_mesh,
            solid_map,
            fluid_map,
            ale_map,
            solid_params,
            interp,
            solid_fixed,
            fluid_fixed,
            ale_fixed,
            Box::new(driver),
            solid_state,
            fluid_state,
        )
    }

    fn build_cavity(
        &self,
        solid_params: GenAlphaSolidParams,
        interp: TractionInterpolation,
    ) -> Result<CaseSetup> {
        let c = &self.cavity;
        let (fluid_mesh, solid_mesh) =
            generate_cavity_meshes(c.n_cav, c.n_top, c.n_solid_x, c.n_solid_y)?;

        let solid_map = DofMap::build(&solid_mesh, 2, sets::INTERFACE, None)?;
        let fluid_map =
            DofMap::build(&fluid_mesh, 3, sets::INTERFACE, Some(&[true, true, false]))?;
        let ale_map = DofMap::build(&fluid_mesh, 2, sets::INTERFACE, None)?;

        let fluid_iface = fluid_mesh.edge_set_nodes(sets::INTERFACE)?;

        let mut solid_fixed = vec![false; solid_map.n_dofs()];
        for n in solid_mesh.edge_set_nodes(sets::CLAMPED)? {
            solid_fixed[2 * n] = true;
            solid_fixed[2 * n + 1] = true;
        }

        // no-slip walls, lid, and inflow carry velocity data; the slave-side
        // interface nodes stay unconstrained even at the wall corners
        let mut fluid_fixed = vec![false; fluid_map.n_dofs()];
        let fix_vel = |n: usize, fixed: &mut Vec<bool>| {
            if fluid_iface.binary_search(&n).is_err() {
                fixed[3 * n] = true;
                fixed[3 * n + 1] = true;
            }
        };
        for set in [sets::WALLS, sets::LID, sets::INFLOW] {
            for n in fluid_mesh.edge_set_nodes(set)? {
                fix_vel(n, &mut fluid_fixed);
            }
        }

        let mut ale_fixed = vec![false; ale_map.n_dofs()];
        for set in [sets::WALLS, sets::LID, sets::INFLOW, sets::OUTFLOW] {
            for n in fluid_mesh.edge_set_nodes(set)? {
                if fluid_iface.binary_search(&n).is_err() {
                    ale_fixed[2 * n] = true;
                    ale_fixed[2 * n + 1] = true;
                }
            }
        }

        let lid_nodes = fluid_mesh.edge_set_nodes(sets::LID)?;
        let inflow_nodes = fluid_mesh.edge_set_nodes(sets::INFLOW)?;
        let driver = CavityDriver {
            period: c.lid_period,
            wall_nodes: fluid_mesh.edge_set_nodes(sets::WALLS)?,
            lid_nodes,
            inflow: inflow_nodes
                .iter()
                .map(|&n| (n, fluid_mesh.node_coords[n][1]))
                .collect(),
            strip_lo: 1.0 - CAVITY_TOP_HEIGHT,
            strip_h: CAVITY_TOP_HEIGHT,
        };

        let solid_state = SolidState::zeros(solid_map.n_dofs());
        let fluid_state = FluidState::zeros(fluid_mesh.n_nodes());

        self.finish_setup(
            fluid_mesh,
            solid_mesh,
            solid_map,
            fluid_map,
            ale_map,
            solid_params,
            interp,
            solid_fixed,
            fluid_fixed,
            ale_fixed,
            Box::new(driver),
            solid_state,
            fluid_state,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_setup(
        &self,
        fluid_mesh: Mesh2D,
        solid_mesh: Mesh2D,
        solid_map: DofMap,
        fluid_map: DofMap,
        ale_map: DofMap,
        solid_params: GenAlphaSolidParams,
        interp: TractionInterpolation,
        solid_fixed: Vec<bool>,
        fluid_fixed: Vec<bool>,
        ale_fixed: Vec<bool>,
        driver: Box<dyn BoundaryDriver + Send + Sync>,
        solid_state: SolidState,
        fluid_state: FluidState,
    ) -> Result<CaseSetup> {
        // interface Dirichlet data may only live on the master side
        let master = self.coupling.master;
        let slave_violation = match master {
            MasterChoice::Structure => fluid_map
                .interface
                .iter()
                .any(|&dof| fluid_fixed[dof]),
            MasterChoice::Fluid => solid_map.interface.iter().any(|&dof| solid_fixed[dof]),
        };
        if slave_violation {
            return Err(FsiError::InvalidConfig(
                "interface Dirichlet conditions are only allowed on the master side".into(),
            ));
        }

        let (mortar, ale) = match master {
            MasterChoice::Structure => (
                assemble_mortar(&fluid_mesh, sets::INTERFACE, &solid_mesh, sets::INTERFACE)?,
                assemble_ale(&fluid_mesh)?,
            ),
            MasterChoice::Fluid => (
                assemble_mortar(&solid_mesh, sets::INTERFACE, &fluid_mesh, sets::INTERFACE)?,
                assemble_ale(&fluid_mesh)?,
            ),
        };
        let n_slave = mortar.d.len();

        let problem = FsiProblem {
            solid_mesh,
            solid_mat: self.solid,
            solid_params,
            fluid_mesh,
            fluid_mat: self.fluid,
            fluid_scheme: self.fluid_scheme,
            stab: StabilizationConfig {
                grad_div: self.stabilization.grad_div,
            },
            conversion: self.coupling.conversion,
            master,
            interp,
            dt: self.time.dt,
            solid_map,
            fluid_map,
            ale_map,
            mortar,
            ale,
            drop_shape_derivatives: self.stabilization.drop_shape_derivatives,
            solid_fixed,
            fluid_fixed,
            ale_fixed,
        };
        let initial = CoupledState {
            solid: solid_state,
            fluid: fluid_state,
            lambda: vec![0.0; n_slave],
            step: 0,
        };
        Ok(CaseSetup {
            problem,
            driver,
            initial,
            config: self.clone(),
        })
    }
}

/// Ready-to-run case: problem definition, boundary driver, initial state.
pub struct CaseSetup {
    pub problem: FsiProblem,
    pub driver: Box<dyn BoundaryDriver + Send + Sync>,
    pub initial: CoupledState,
    pub config: CaseConfig,
}

/// Polynomial dry-end drive `d(t) = -scale * t^power`.
#[derive(Debug, Clone, Copy)]
pub struct PolyDrive {
    pub power: u32,
    pub scale: f64,
}

impl PolyDrive {
    pub fn displacement(&self, t: f64) -> f64 {
        -self.scale * t.powi(self.power as i32)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let n = self.power as f64;
        -self.scale * n * t.powi(self.power as i32 - 1)
    }

    pub fn accel(&self, t: f64) -> f64 {
        let n = self.power as f64;
        if self.power >= 2 {
            -self.scale * n * (n - 1.0) * t.powi(self.power as i32 - 2)
        } else {
            0.0
        }
    }
}

/// Closed-form reference solution of the driven column: spatially uniform
/// velocity, spatially linear pressure.
#[derive(Debug, Clone, Copy)]
pub struct ColumnReference {
    pub drive: PolyDrive,
    pub density: f64,
    pub p_inf: f64,
}

impl ColumnReference {
    pub fn from_config(cfg: &CaseConfig) -> Self {
        ColumnReference {
            drive: PolyDrive {
                power: cfg.column.drive_power,
                scale: cfg.column.drive_scale,
            },
            density: cfg.fluid.density,
            p_inf: cfg.column.p_inf,
        }
    }

    /// (velocity_x, acceleration_x, pressure) at position x and time t.
    pub fn evaluate(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let u = self.drive.velocity(t);
        let a = self.drive.accel(t);
        let p = -self.density * a * x + self.p_inf;
        (u, a, p)
    }
}

/// Reference solution access used by the error evaluator.
pub fn pseudo1d_analytic(drive: PolyDrive, density: f64, p_inf: f64, x: f64, t: f64) -> (f64, f64, f64) {
    ColumnReference {
        drive,
        density,
        p_inf,
    }
    .evaluate(x, t)
}

struct ColumnDriver {
    drive: PolyDrive,
}

impl BoundaryDriver for ColumnDriver {
    // the Newton driver copies these values at constrained dofs only
    fn solid_values(&self, t: f64, d: &mut [f64]) {
        let val = self.drive.displacement(t);
        for n in 0..d.len() / 2 {
            d[2 * n] = val;
            d[2 * n + 1] = 0.0;
        }
    }

    fn fluid_values(&self, _t: f64, up: &mut [f64]) {
        for n in 0..up.len() / 3 {
            up[3 * n + 1] = 0.0;
        }
    }
}

struct CavityDriver {
    period: f64,
    wall_nodes: Vec<usize>,
    lid_nodes: Vec<usize>,
    inflow: Vec<(usize, f64)>,
    strip_lo: f64,
    strip_h: f64,
}

impl CavityDriver {
    fn lid_velocity(&self, t: f64) -> f64 {
        1.0 - (2.0 * std::f64::consts::PI * t / self.period).cos()
    }
}

impl BoundaryDriver for CavityDriver {
    fn solid_values(&self, _t: f64, d: &mut [f64]) {
        for v in d.iter_mut() {
            *v = 0.0; // clamped edges
        }
    }

    fn fluid_values(&self, t: f64, up: &mut [f64]) {
        for &n in &self.wall_nodes {
            up[3 * n] = 0.0;
            up[3 * n + 1] = 0.0;
        }
        let lid = self.lid_velocity(t);
        for &n in &self.lid_nodes {
            up[3 * n] = lid;
            up[3 * n + 1] = 0.0;
        }
        for &(n, y) in &self.inflow {
            let frac = ((y - self.strip_lo) / self.strip_h).clamp(0.0, 1.0);
            up[3 * n] = lid * frac;
            up[3 * n + 1] = 0.0;
        }
    }
}

/// Element-wise Gauss quadrature of the squared mismatch between nodal fields
/// and an exact solution over the deformed mesh; returns the L2 norms of the
/// error and of the exact solution.
pub fn l2_error(
    mesh: &Mesh2D,
    d_g: &[f64],
    nodal_components: &[&[f64]],
    exact: &dyn Fn(f64, f64) -> Vec<f64>,
) -> (f64, f64) {
    let ncomp = nodal_components.len();
    let mut err_sq = 0.0;
    let mut ref_sq = 0.0;
    for conn in &mesh.elements {
        let coords: Vec<[f64; 2]> = conn
            .iter()
            .map(|&n| {
                [
                    mesh.node_coords[n][0] + d_g[2 * n],
                    mesh.node_coords[n][1] + d_g[2 * n + 1],
                ]
            })
            .collect();
        for &xi in &GAUSS_2 {
            for &eta in &GAUSS_2 {
                let shapes = quad_shapes(xi, eta);
                let dshape = crate::mesh::quad_shape_derivs(xi, eta);
                let mut j = [[0.0f64; 2]; 2];
                let mut x = [0.0f64; 2];
                for a in 0..4 {
                    for c in 0..2 {
                        x[c] += shapes[a] * coords[a][c];
                        j[0][c] += dshape[a][0] * coords[a][c];
                        j[1][c] += dshape[a][1] * coords[a][c];
                    }
                }
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let exact_vals = exact(x[0], x[1]);
                for (k, comp) in nodal_components.iter().enumerate().take(ncomp) {
                    let mut num = 0.0;
                    for a in 0..4 {
                        num += shapes[a] * comp[conn[a]];
                    }
                    err_sq += det * (num - exact_vals[k]).powi(2);
                    ref_sq += det * exact_vals[k].powi(2);
                }
            }
        }
    }
    (err_sq.sqrt(), ref_sq.sqrt())
}

/// Velocity and pressure L2 errors of a fluid state against the column
/// reference at time t: `(err_u, err_p, ref_u, ref_p)`.
pub fn column_l2_errors(
    mesh: &Mesh2D,
    state: &FluidState,
    reference: &ColumnReference,
    t: f64,
) -> (f64, f64, f64, f64) {
    let n = mesh.n_nodes();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n {
        u[k] = state.up[3 * k];
        v[k] = state.up[3 * k + 1];
        p[k] = state.up[3 * k + 2];
    }
    let (err_u, ref_u) = l2_error(mesh, &state.d_g, &[&u, &v], &|x, _y| {
        let (uu, _, _) = reference.evaluate(x, t);
        vec![uu, 0.0]
    });
    let (err_p, ref_p) = l2_error(mesh, &state.d_g, &[&p], &|x, _y| {
        let (_, _, pp) = reference.evaluate(x, t);
        vec![pp]
    });
    (err_u, err_p, ref_u, ref_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_solution_matches_hand_values() {
        let (u, a, p) = pseudo1d_analytic(PolyDrive { power: 2, scale: 1.0 }, 1.0, 0.0, 0.7, 0.3);
        assert!((u + 0.6).abs() < 1e-15);
        assert!((a + 2.0).abs() < 1e-15);
        assert!((p - 2.0 * 0.7).abs() < 1e-15);

        let (u, a, p) = pseudo1d_analytic(PolyDrive { power: 5, scale: 1.0 }, 2.0, 0.3, 1.0, 1.0);
        assert!((u + 5.0).abs() < 1e-13);
        assert!((a + 20.0).abs() < 1e-13);
        assert!((p - (20.0 * 2.0 * 1.0 + 0.3)).abs() < 1e-12);

        let (u, _, p) = pseudo1d_analytic(PolyDrive { power: 2, scale: 1.0 }, 1.0, 0.4, 0.5, 0.0);
        assert_eq!(u, 0.0);
        assert!((p - (2.0 * 0.5 + 0.4)).abs() < 1e-15);
    }

    #[test]
    fn l2_error_exact_for_linear_fields() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 1.0, 3, 1, 3).unwrap();
        let nodal: Vec<f64> = fluid
            .node_coords
            .iter()
            .map(|c| 2.0 * c[0] + 0.5 * c[1] - 0.3)
            .collect();
        let dg = vec![0.0; 2 * fluid.n_nodes()];
        let (err, _) = l2_error(&fluid, &dg, &[&nodal], &|x, y| vec![2.0 * x + 0.5 * y - 0.3]);
        assert!(err < 1e-12);
    }

    #[test]
    fn l2_error_of_constant_offset_is_the_offset() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 1.0, 4, 1, 4).unwrap(); // unit area
        let nodal: Vec<f64> = fluid.node_coords.iter().map(|c| c[0] + 0.25).collect();
        let dg = vec![0.0; 2 * fluid.n_nodes()];
        let (err, _) = l2_error(&fluid, &dg, &[&nodal], &|x, _| vec![x]);
        assert!((err - 0.25).abs() < 1e-12);
    }

    #[test]
    fn l2_error_of_zero_velocity_vs_uniform_reference() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 1.0, 4, 1, 4).unwrap();
        let zero = vec![0.0; fluid.n_nodes()];
        let dg = vec![0.0; 2 * fluid.n_nodes()];
        let (err, _) = l2_error(&fluid, &dg, &[&zero, &zero], &|_, _| vec![-2.0, 0.0]);
        assert!((err - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slave_side_interface_dirichlet_is_rejected() {
        let mut cfg = CaseConfig::column_default();
        cfg.column.rigid_solid = true;
        cfg.coupling.master = MasterChoice::Fluid; // solid becomes slave
        match cfg.build() {
            Err(FsiError::InvalidConfig(msg)) => {
                assert!(msg.contains("master side"), "{msg}");
            }
            other => panic!("expected config rejection, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn free_column_builds_under_both_masters() {
        let mut cfg = CaseConfig::column_default();
        cfg.column.rigid_solid = false;
        cfg.coupling.master = MasterChoice::Structure;
        assert!(cfg.build().is_ok());
        cfg.coupling.master = MasterChoice::Fluid;
        assert!(cfg.build().is_ok());
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let cfg = CaseConfig::cavity_default();
        let text = cfg.to_toml_string();
        let back = CaseConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.kind, CaseKind::DrivenCavity);
        assert_eq!(back.cavity.n_cav, cfg.cavity.n_cav);
        assert_eq!(back.solid.young, cfg.solid.young);
    }
}
