//! Mesh motion by harmonic extension of boundary displacements.
//!
//! The operator is linear, component-decoupled, and assembled once on the
//! reference configuration.

use crate::linalg::{dense_lu_solve, CsrMatrix, DenseMatrix, Triplets};
use crate::mesh::{quad_shape_derivs, Mesh2D};
use crate::solid::GAUSS_2;
use crate::{FsiError, Result};

/// Scalar Laplacian stiffness replicated over both displacement components.
pub struct AleOperator {
    matrix: CsrMatrix,
}

pub fn assemble_ale(mesh: &Mesh2D) -> Result<AleOperator> {
    let n = mesh.n_nodes();
    let mut t = Triplets::new(2 * n, 2 * n);
    for (e, conn) in mesh.elements.iter().enumerate() {
        let coords = [
            mesh.node_coords[conn[0]],
            mesh.node_coords[conn[1]],
            mesh.node_coords[conn[2]],
            mesh.node_coords[conn[3]],
        ];
        for &xi in &GAUSS_2 {
            for &eta in &GAUSS_2 {
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
                    return Err(FsiError::Assembly(format!(
                        "ALE element {e}: non-positive Jacobian"
                    )));
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
                for a in 0..4 {
                    for b in 0..4 {
                        let k = det * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                        for c in 0..2 {
                            t.push(2 * conn[a] + c, 2 * conn[b] + c, k);
                        }
                    }
                }
            }
        }
    }
    Ok(AleOperator {
        matrix: t.into_csr(),
    })
}

impl AleOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Laplacian residual rows for a grid displacement vector.
    pub fn residual(&self, d_g: &[f64]) -> Vec<f64> {
        self.matrix.matvec_alloc(d_g)
    }

    /// Solves the extension for the free dofs given prescribed values on
    /// `fixed` (pairs of dof id and value). Dense solve, test-sized meshes only.
    pub fn solve_extension(&self, fixed: &[(usize, f64)], n_dofs: usize) -> Result<Vec<f64>> {
        let mut is_fixed = vec![false; n_dofs];
        let mut d = vec![0.0; n_dofs];
        for &(dof, val) in fixed {
            is_fixed[dof] = true;
            d[dof] = val;
        }
        let free: Vec<usize> = (0..n_dofs).filter(|&i| !is_fixed[i]).collect();
        if free.is_empty() {
            return Ok(d);
        }
        let pos: std::collections::HashMap<usize, usize> =
            free.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let nf = free.len();
        let mut a = DenseMatrix::zeros(nf, nf);
        let mut rhs = vec![0.0; nf];
        for (k, &i) in free.iter().enumerate() {
            let (cols, vals) = self.matrix.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if let Some(&kc) = pos.get(c) {
                    a.add_at(k, kc, *v);
                } else {
                    rhs[k] -= v * d[*c];
                }
            }
        }
        let sol = dense_lu_solve(&a, &rhs).map_err(|e| {
            FsiError::LinearSolver(format!("ALE extension is under-constrained: {e}"))
        })?;
        for (k, &i) in free.iter().enumerate() {
            d[i] = sol[k];
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_column_meshes, sets};

    fn boundary_fix(mesh: &Mesh2D, values: impl Fn(usize) -> [f64; 2]) -> Vec<(usize, f64)> {
        let mut fixed = Vec::new();
        for set in [sets::INTERFACE, sets::NEUMANN, sets::LATERAL] {
            for n in mesh.edge_set_nodes(set).unwrap() {
                let v = values(n);
                fixed.push((2 * n, v[0]));
                fixed.push((2 * n + 1, v[1]));
            }
        }
        fixed.sort_unstable_by_key(|&(dof, _)| dof);
        fixed.dedup_by_key(|&mut (dof, _)| dof);
        fixed
    }

    #[test]
    fn zero_boundary_gives_zero_interior() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.5, 3, 1, 3).unwrap();
        let op = assemble_ale(&fluid).unwrap();
        let fixed = boundary_fix(&fluid, |_| [0.0, 0.0]);
        let d = op.solve_extension(&fixed, 2 * fluid.n_nodes()).unwrap();
        assert!(d.iter().all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn uniform_translation_extends_uniformly() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.5, 3, 1, 3).unwrap();
        let op = assemble_ale(&fluid).unwrap();
        let fixed = boundary_fix(&fluid, |_| [0.25, -0.1]);
        let d = op.solve_extension(&fixed, 2 * fluid.n_nodes()).unwrap();
        for n in 0..fluid.n_nodes() {
            assert!((d[2 * n] - 0.25).abs() < 1e-12);
            assert!((d[2 * n + 1] + 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn column_stretch_interpolates_linearly() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.5, 4, 1, 2).unwrap();
        let op = assemble_ale(&fluid).unwrap();
        // interface (x = 1) moved by -0.1 in x, far end fixed, lateral y pinned
        let mut fixed = Vec::new();
        for n in fluid.edge_set_nodes(sets::INTERFACE).unwrap() {
            fixed.push((2 * n, -0.1));
            fixed.push((2 * n + 1, 0.0));
        }
        for n in fluid.edge_set_nodes(sets::NEUMANN).unwrap() {
            fixed.push((2 * n, 0.0));
            fixed.push((2 * n + 1, 0.0));
        }
        for n in fluid.edge_set_nodes(sets::LATERAL).unwrap() {
            fixed.push((2 * n + 1, 0.0));
        }
        fixed.sort_unstable_by_key(|&(dof, _)| dof);
        fixed.dedup_by_key(|&mut (dof, _)| dof);
        let d = op.solve_extension(&fixed, 2 * fluid.n_nodes()).unwrap();
        for (n, c) in fluid.node_coords.iter().enumerate() {
            let expect = -0.1 * c[0];
            assert!(
                (d[2 * n] - expect).abs() < 1e-12,
                "node {n}: {} vs {expect}",
                d[2 * n]
            );
        }
    }

    #[test]
    fn under_constrained_extension_errors() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.5, 2, 1, 1).unwrap();
        let op = assemble_ale(&fluid).unwrap();
        assert!(op.solve_extension(&[], 2 * fluid.n_nodes()).is_err());
    }
}
