//! Dof numbering and the interior/interface partition of a field.

use crate::mesh::Mesh2D;
use crate::Result;

/// Dof partition for one field on one mesh.
///
/// Global (field-local) dof ids are `node * dofs_per_node + component`.
/// The interface set Γ holds the selected components of nodes on the
/// interface edge set (node index ascending, then component); everything else
/// belongs to the interior set I, which keeps the same deterministic ordering.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub dofs_per_node: usize,
    pub n_nodes: usize,
    /// Sorted interior dof ids.
    pub interior: Vec<usize>,
    /// Interface dof ids, node ascending then component.
    pub interface: Vec<usize>,
    /// For each dof: position within its partition, tagged by partition.
    place: Vec<Place>,
    /// Sorted node ids on the interface.
    pub interface_nodes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    Interior(usize),
    Interface(usize),
}

impl DofMap {
    /// Builds the partition from a named interface edge set. `gamma_components`
    /// selects which nodal components of interface nodes belong to Γ; `None`
    /// selects all of them.
    pub fn build(
        mesh: &Mesh2D,
        dofs_per_node: usize,
        interface_set: &str,
        gamma_components: Option<&[bool]>,
    ) -> Result<DofMap> {
        let interface_nodes = mesh.edge_set_nodes(interface_set)?;
        let n_nodes = mesh.n_nodes();
        let n_dofs = n_nodes * dofs_per_node;
        let mut on_interface = vec![false; n_dofs];
        for &n in &interface_nodes {
            for c in 0..dofs_per_node {
                let in_gamma = gamma_components.map_or(true, |m| m[c]);
                if in_gamma {
                    on_interface[n * dofs_per_node + c] = true;
                }
            }
        }
        let mut interior = Vec::new();
        let mut interface = Vec::new();
        let mut place = vec![Place::Interior(usize::MAX); n_dofs];
        for dof in 0..n_dofs {
            if on_interface[dof] {
                place[dof] = Place::Interface(interface.len());
                interface.push(dof);
            } else {
                place[dof] = Place::Interior(interior.len());
                interior.push(dof);
            }
        }
        Ok(DofMap {
            dofs_per_node,
            n_nodes,
            interior,
            interface,
            place,
            interface_nodes,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.dofs_per_node
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        node * self.dofs_per_node + comp
    }

    pub fn place(&self, dof: usize) -> Place {
        self.place[dof]
    }

    /// Splits a full field vector into (interior, interface) parts.
    pub fn split(&self, full: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (
            self.interior.iter().map(|&d| full[d]).collect(),
            self.interface.iter().map(|&d| full[d]).collect(),
        )
    }

    /// Gathers the interface part of a full field vector.
    pub fn gather_interface(&self, full: &[f64]) -> Vec<f64> {
        self.interface.iter().map(|&d| full[d]).collect()
    }

    /// Adds partition increments back into a full-length vector.
    pub fn scatter_add(&self, interior: &[f64], interface: &[f64], full: &mut [f64]) {
        for (k, &d) in self.interior.iter().enumerate() {
            full[d] += interior[k];
        }
        for (k, &d) in self.interface.iter().enumerate() {
            full[d] += interface[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_column_meshes, sets};

    #[test]
    fn interface_dof_count_on_column() {
        let (_, solid) = generate_column_meshes(1.0, 1.0, 0.25, 4, 4, 1).unwrap();
        let map = DofMap::build(&solid, 2, sets::INTERFACE, None).unwrap();
        assert_eq!(map.interface.len(), 4); // 2 nodes x 2 dofs
        assert_eq!(map.interior.len() + map.interface.len(), map.n_dofs());
    }

    #[test]
    fn empty_interface_set_puts_all_dofs_interior() {
        let (mut fluid, _) = generate_column_meshes(1.0, 1.0, 0.25, 2, 2, 1).unwrap();
        fluid.edge_sets.insert("empty".into(), Vec::new());
        let map = DofMap::build(&fluid, 2, "empty", None).unwrap();
        assert!(map.interface.is_empty());
        assert_eq!(map.interior.len(), map.n_dofs());
    }

    #[test]
    fn three_dofs_per_node_single_element() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 1.0, 1, 1, 1).unwrap();
        let map = DofMap::build(&fluid, 3, sets::INTERFACE, None).unwrap();
        assert_eq!(map.n_dofs(), 12);
    }

    #[test]
    fn unknown_edge_set_is_an_error() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 1.0, 1, 1, 1).unwrap();
        assert!(DofMap::build(&fluid, 2, "nope", None).is_err());
    }

    #[test]
    fn partition_is_disjoint_cover() {
        let (fluid, _) = generate_column_meshes(1.0, 2.0, 0.5, 3, 2, 2).unwrap();
        let map = DofMap::build(&fluid, 3, sets::INTERFACE, Some(&[true, true, false])).unwrap();
        let mut seen = vec![0usize; map.n_dofs()];
        for &d in map.interior.iter().chain(&map.interface) {
            seen[d] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
        // velocity components of interface nodes in Γ, their pressures in I
        for &n in &map.interface_nodes {
            assert!(map.interface.contains(&map.dof(n, 0)));
            assert!(map.interface.contains(&map.dof(n, 1)));
            assert!(map.interior.contains(&map.dof(n, 2)));
        }
    }
}
