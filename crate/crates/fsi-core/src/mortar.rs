//! Dual-mortar coupling operators on a straight 1D interface between two
//! non-matching 2D meshes.
//!
//! The multiplier basis uses dual shape functions built element-wise from the
//! biorthogonality condition, which renders the slave coupling matrix D
//! diagonal. The master matrix M is integrated over overlap segments of the
//! slave and master discretizations with 3-point Gauss quadrature.

use crate::linalg::DenseMatrix;
use crate::mesh::Mesh2D;
use crate::{FsiError, Result};

const GAUSS_3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
    (0.0, 0.888_888_888_888_888_9),
    (0.774_596_669_241_483_4, 0.555_555_555_555_555_6),
];

/// Which field plays the mortar master; multipliers live on the other (slave)
/// side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MasterChoice {
    Fluid,
    Structure,
}

/// Mortar coupling matrices for one master/slave assignment.
///
/// Node-level scalar matrices are expanded to dof level with 2x2 identity
/// blocks; all interface vectors follow the node-ascending ordering of the
/// owning field's dof map.
#[derive(Debug, Clone)]
pub struct MortarOperators {
    pub slave_nodes: Vec<usize>,
    pub master_nodes: Vec<usize>,
    pub d_node: Vec<f64>,
    pub m_node: DenseMatrix,
    /// Diagonal of D, replicated per dof.
    pub d: Vec<f64>,
    /// M at dof level (slave dofs x master dofs).
    pub m: DenseMatrix,
    /// Projection P = D^{-1} M at dof level.
    pub p: DenseMatrix,
}

struct Segment {
    lo: f64,
    hi: f64,
    node_lo: usize, // local node index (into sorted node list)
    node_hi: usize,
}

struct InterfaceSide {
    /// Mesh node ids sorted by node id (dof-map order).
    nodes: Vec<usize>,
    /// Arclength parameter of each node, parallel to `nodes`.
    params: Vec<f64>,
    segments: Vec<Segment>,
}

fn build_side(
    mesh: &Mesh2D,
    set: &str,
    origin: [f64; 2],
    dir: [f64; 2],
    tol: f64,
) -> Result<InterfaceSide> {
    let nodes = mesh.edge_set_nodes(set)?;
    if nodes.is_empty() {
        return Err(FsiError::Coupling(format!("interface set '{set}' is empty")));
    }
    let mut params = Vec::with_capacity(nodes.len());
    for &n in &nodes {
        let c = mesh.node_coords[n];
        let rel = [c[0] - origin[0], c[1] - origin[1]];
        let t = rel[0] * dir[0] + rel[1] * dir[1];
        let off = (rel[0] - t * dir[0]).abs().max((rel[1] - t * dir[1]).abs());
        if off > tol {
            return Err(FsiError::Coupling(
                "interface node lies off the common interface line".into(),
            ));
        }
        params.push(t);
    }
    let index_of = |n: usize| nodes.binary_search(&n).unwrap();
    let mut segments = Vec::new();
    for &(e, l) in mesh.edge_set(set)? {
        let (a, b) = mesh.edge_nodes(e, l);
        let (ia, ib) = (index_of(a), index_of(b));
        let (ta, tb) = (params[ia], params[ib]);
        if (tb - ta).abs() <= tol {
            return Err(FsiError::Coupling("zero-length interface segment".into()));
        }
        let (lo, hi, node_lo, node_hi) = if ta < tb {
            (ta, tb, ia, ib)
        } else {
            (tb, ta, ib, ia)
        };
        segments.push(Segment {
            lo,
            hi,
            node_lo,
            node_hi,
        });
    }
    segments.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    Ok(InterfaceSide {
        nodes,
        params,
        segments,
    })
}

/// Coefficients of the element-wise dual shape functions in terms of the
/// standard linear shapes on a segment: `Phi_j = sum_k coeffs[j][k] N_k`.
pub fn dual_shape_coeffs() -> [[f64; 2]; 2] {
    // solves the 2x2 biorthogonality system with exact linear integrals
    [[2.0, -1.0], [-1.0, 2.0]]
}

/// Assembles D (slave, diagonal), M (master), and P = D^{-1} M for the
/// interface between `slave` and `master` meshes. Both interface curves must
/// be geometrically coincident straight lines.
pub fn assemble_mortar(
    slave: &Mesh2D,
    slave_set: &str,
    master: &Mesh2D,
    master_set: &str,
) -> Result<MortarOperators> {
    let tol = slave.geo_tol().max(master.geo_tol()).max(1e-14);

    // common line from the slave side's extremal nodes
    let s_nodes = slave.edge_set_nodes(slave_set)?;
    if s_nodes.len() < 2 {
        return Err(FsiError::Coupling("interface needs at least two nodes".into()));
    }
    let mut pts: Vec<[f64; 2]> = s_nodes.iter().map(|&n| slave.node_coords[n]).collect();
    pts.sort_by(|a, b| (a[0], a[1]).partial_cmp(&(b[0], b[1])).unwrap());
    let origin = pts[0];
    let end = pts[pts.len() - 1];
    let len = ((end[0] - origin[0]).powi(2) + (end[1] - origin[1]).powi(2)).sqrt();
    if len <= tol {
        return Err(FsiError::Coupling("degenerate interface line".into()));
    }
    let dir = [(end[0] - origin[0]) / len, (end[1] - origin[1]) / len];

    let s = build_side(slave, slave_set, origin, dir, tol)?;
    let m = build_side(master, master_set, origin, dir, tol)?;

    // the two parameterized curves must cover the same extent
    let (s_lo, s_hi) = extent(&s);
    let (m_lo, m_hi) = extent(&m);
    if (s_lo - m_lo).abs() > tol || (s_hi - m_hi).abs() > tol {
        return Err(FsiError::Coupling(
            "slave and master interface curves do not coincide".into(),
        ));
    }

    let ns = s.nodes.len();
    let nm = m.nodes.len();
    let mut d_node = vec![0.0; ns];
    for seg in &s.segments {
        let half = 0.5 * (seg.hi - seg.lo);
        d_node[seg.node_lo] += half;
        d_node[seg.node_hi] += half;
    }
    if let Some(j) = d_node.iter().position(|&v| v <= tol) {
        return Err(FsiError::Coupling(format!(
            "slave interface node {} has no segment support (singular D)",
            s.nodes[j]
        )));
    }

    // breakpoints: all slave and master node parameters
    let mut breaks: Vec<f64> = s.params.iter().chain(m.params.iter()).copied().collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= tol);

    let dual = dual_shape_coeffs();
    let mut m_node = DenseMatrix::zeros(ns, nm);
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= tol {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let sseg = s
            .segments
            .iter()
            .find(|seg| seg.lo - tol <= mid && mid <= seg.hi + tol);
        let mseg = m
            .segments
            .iter()
            .find(|seg| seg.lo - tol <= mid && mid <= seg.hi + tol);
        let (sseg, mseg) = match (sseg, mseg) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(FsiError::Coupling(
                    "interface discretizations do not overlap over the full curve".into(),
                ))
            }
        };
        let jac = 0.5 * (hi - lo);
        for &(gp, gw) in &GAUSS_3 {
            let t = mid + gp * jac;
            // linear shapes on each segment
            let xs = (t - sseg.lo) / (sseg.hi - sseg.lo);
            let n_s = [1.0 - xs, xs];
            let phi = [
                dual[0][0] * n_s[0] + dual[0][1] * n_s[1],
                dual[1][0] * n_s[0] + dual[1][1] * n_s[1],
            ];
            let xm = (t - mseg.lo) / (mseg.hi - mseg.lo);
            let n_m = [1.0 - xm, xm];
            let s_idx = [sseg.node_lo, sseg.node_hi];
            let m_idx = [mseg.node_lo, mseg.node_hi];
            for (sj, &srow) in s_idx.iter().enumerate() {
                for (ml, &mcol) in m_idx.iter().enumerate() {
                    m_node.add_at(srow, mcol, gw * jac * phi[sj] * n_m[ml]);
                }
            }
        }
    }

    // expand to dof level with 2x2 identity blocks
    let mut d = vec![0.0; 2 * ns];
    for j in 0..ns {
        d[2 * j] = d_node[j];
        d[2 * j + 1] = d_node[j];
    }
    let mut m_dof = DenseMatrix::zeros(2 * ns, 2 * nm);
    let mut p_dof = DenseMatrix::zeros(2 * ns, 2 * nm);
    for j in 0..ns {
        for l in 0..nm {
            let v = m_node.get(j, l);
            for c in 0..2 {
                *m_dof.get_mut(2 * j + c, 2 * l + c) = v;
                *p_dof.get_mut(2 * j + c, 2 * l + c) = v / d_node[j];
            }
        }
    }

    Ok(MortarOperators {
        slave_nodes: s.nodes,
        master_nodes: m.nodes,
        d_node,
        m_node,
        d,
        m: m_dof,
        p: p_dof,
    })
}

fn extent(side: &InterfaceSide) -> (f64, f64) {
    let lo = side.params.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = side
        .params
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

impl MortarOperators {
    /// P x for a master interface dof vector.
    pub fn project_master_to_slave(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.p.ncols() {
            return Err(FsiError::Coupling(format!(
                "projection shape mismatch: {} vs {}",
                x.len(),
                self.p.ncols()
            )));
        }
        Ok(self.p.matvec(x))
    }

    /// D x (diagonal application) for a slave interface dof vector.
    pub fn apply_d(&self, x: &[f64]) -> Vec<f64> {
        self.d.iter().zip(x).map(|(d, v)| d * v).collect()
    }

    /// Writes D, M, P in `row col value` coordinate format.
    pub fn dump(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut out = String::new();
        for (j, v) in self.d.iter().enumerate() {
            out.push_str(&format!("{j} {j} {v:.17e}\n"));
        }
        std::fs::write(dir.join("mortar_d.txt"), &out)?;
        for (name, mat) in [("mortar_m.txt", &self.m), ("mortar_p.txt", &self.p)] {
            let mut out = String::new();
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    let v = mat.get(i, j);
                    if v != 0.0 {
                        out.push_str(&format!("{i} {j} {v:.17e}\n"));
                    }
                }
            }
            std::fs::write(dir.join(name), &out)?;
        }
        Ok(())
    }
}
