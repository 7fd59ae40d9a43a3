//! 2D quadrilateral meshes with named boundary/interface edge sets.
//!
//! Local edge convention (counter-clockwise around the element):
//! edge 0: nodes 0-1 (bottom), edge 1: nodes 1-2 (right),
//! edge 2: nodes 2-3 (top), edge 3: nodes 3-0 (left).

use crate::{FsiError, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Edge set names produced by the structured generators.
pub mod sets {
    pub const INTERFACE: &str = "interface";
    pub const NEUMANN: &str = "neumann";
    pub const DIRICHLET: &str = "dirichlet";
    pub const LATERAL: &str = "lateral";
    pub const WALLS: &str = "walls";
    pub const INFLOW: &str = "inflow";
    pub const OUTFLOW: &str = "outflow";
    pub const LID: &str = "lid";
    pub const CLAMPED: &str = "clamped";
}

#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub node_coords: Vec<[f64; 2]>,
    /// 4-node connectivity, counter-clockwise.
    pub elements: Vec<[usize; 4]>,
    /// Named lists of (element, local edge) pairs.
    pub edge_sets: BTreeMap<String, Vec<(usize, usize)>>,
}

impl Mesh2D {
    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Node pair of a local element edge, in CCW order.
    pub fn edge_nodes(&self, elem: usize, local_edge: usize) -> (usize, usize) {
        let conn = &self.elements[elem];
        match local_edge {
            0 => (conn[0], conn[1]),
            1 => (conn[1], conn[2]),
            2 => (conn[2], conn[3]),
            3 => (conn[3], conn[0]),
            _ => panic!("local edge index out of range"),
        }
    }

    pub fn edge_set(&self, name: &str) -> Result<&[(usize, usize)]> {
        self.edge_sets
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| FsiError::Mesh(format!("unknown edge set '{name}'")))
    }

    /// Sorted unique node ids touched by an edge set.
    pub fn edge_set_nodes(&self, name: &str) -> Result<Vec<usize>> {
        let mut nodes: Vec<usize> = self
            .edge_set(name)?
            .iter()
            .flat_map(|&(e, l)| {
                let (a, b) = self.edge_nodes(e, l);
                [a, b]
            })
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        Ok(nodes)
    }

    /// Shoelace area of one element.
    pub fn element_area(&self, elem: usize) -> f64 {
        let c = &self.elements[elem];
        let mut acc = 0.0;
        for k in 0..4 {
            let [x0, y0] = self.node_coords[c[k]];
            let [x1, y1] = self.node_coords[c[(k + 1) % 4]];
            acc += x0 * y1 - x1 * y0;
        }
        0.5 * acc
    }

    pub fn domain_diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.node_coords {
            for k in 0..2 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    }

    /// Geometric coincidence tolerance for interface checks.
    pub fn geo_tol(&self) -> f64 {
        1e-12 * self.domain_diameter()
    }

    /// Bilinear map Jacobian determinant at a corner of the reference square.
    fn corner_jacobian(&self, elem: usize, corner: usize) -> f64 {
        let (xi, eta) = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)][corner];
        let dshape = quad_shape_derivs(xi, eta);
        let conn = &self.elements[elem];
        let mut j = [[0.0f64; 2]; 2];
        for (a, d) in dshape.iter().enumerate() {
            let [x, y] = self.node_coords[conn[a]];
            j[0][0] += d[0] * x;
            j[0][1] += d[0] * y;
            j[1][0] += d[1] * x;
            j[1][1] += d[1] * y;
        }
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Checks element orientation, corner Jacobians, and that edge-set entries
    /// reference boundary edges of valid elements.
    pub fn validate(&self) -> Result<()> {
        for (e, conn) in self.elements.iter().enumerate() {
            for &n in conn {
                if n >= self.n_nodes() {
                    return Err(FsiError::Mesh(format!(
                        "element {e} references node {n} out of {}",
                        self.n_nodes()
                    )));
                }
            }
            for corner in 0..4 {
                if self.corner_jacobian(e, corner) <= 0.0 {
                    return Err(FsiError::Mesh(format!(
                        "element {e} has non-positive Jacobian at corner {corner}"
                    )));
                }
            }
        }
        // geometric edge -> adjacent element count
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (e, _) in self.elements.iter().enumerate() {
            for l in 0..4 {
                let (a, b) = self.edge_nodes(e, l);
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        for (name, list) in &self.edge_sets {
            for &(e, l) in list {
                if e >= self.n_elements() || l >= 4 {
                    return Err(FsiError::Mesh(format!(
                        "edge set '{name}' references invalid edge ({e}, {l})"
                    )));
                }
                let (a, b) = self.edge_nodes(e, l);
                let key = (a.min(b), a.max(b));
                if edge_count.get(&key) != Some(&1) {
                    return Err(FsiError::Mesh(format!(
                        "edge set '{name}' entry ({e}, {l}) is not a boundary edge"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Derivatives of the four bilinear shape functions w.r.t. (xi, eta).
pub fn quad_shape_derivs(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ]
}

/// Values of the four bilinear shape functions at (xi, eta).
pub fn quad_shapes(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

struct StructuredGrid {
    nx: usize,
    ny: usize,
}

impl StructuredGrid {
    fn node(&self, ix: usize, iy: usize) -> usize {
        iy * (self.nx + 1) + ix
    }

    fn elem(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    fn build(&self, xs: &[f64], ys: &[f64]) -> Mesh2D {
        let mut node_coords = Vec::with_capacity((self.nx + 1) * (self.ny + 1));
        for &y in ys {
            for &x in xs {
                node_coords.push([x, y]);
            }
        }
        let mut elements = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                elements.push([
                    self.node(ix, iy),
                    self.node(ix + 1, iy),
                    self.node(ix + 1, iy + 1),
                    self.node(ix, iy + 1),
                ]);
            }
        }
        Mesh2D {
            node_coords,
            elements,
            edge_sets: BTreeMap::new(),
        }
    }

    fn left_edges(&self) -> Vec<(usize, usize)> {
        (0..self.ny).map(|iy| (self.elem(0, iy), 3)).collect()
    }

    fn right_edges(&self) -> Vec<(usize, usize)> {
        (0..self.ny)
            .map(|iy| (self.elem(self.nx - 1, iy), 1))
            .collect()
    }

    fn bottom_edges(&self) -> Vec<(usize, usize)> {
        (0..self.nx).map(|ix| (self.elem(ix, 0), 0)).collect()
    }

    fn top_edges(&self) -> Vec<(usize, usize)> {
        (0..self.nx)
            .map(|ix| (self.elem(ix, self.ny - 1), 2))
            .collect()
    }
}

fn linspace(a: f64, b: f64, n_cells: usize) -> Vec<f64> {
    (0..=n_cells)
        .map(|i| a + (b - a) * i as f64 / n_cells as f64)
        .collect()
}

/// Generates the fluid/solid column pair: fluid on `[0, fluid_len] x [0, width]`,
/// solid on `[fluid_len, fluid_len + solid_len] x [0, width]`, interface at
/// `x = fluid_len`. The meshes may differ in axial resolution.
pub fn generate_column_meshes(
    fluid_len: f64,
    solid_len: f64,
    width: f64,
    nx_fluid: usize,
    nx_solid: usize,
    ny: usize,
) -> Result<(Mesh2D, Mesh2D)> {
    if fluid_len <= 0.0 || solid_len <= 0.0 || width <= 0.0 {
        return Err(FsiError::InvalidConfig(
            "column dimensions must be positive".into(),
        ));
    }
    if nx_fluid < 1 || nx_solid < 1 || ny < 1 {
        return Err(FsiError::InvalidConfig(
            "column element counts must be >= 1".into(),
        ));
    }
    let ys = linspace(0.0, width, ny);

    let fg = StructuredGrid { nx: nx_fluid, ny };
    let mut fluid = fg.build(&linspace(0.0, fluid_len, nx_fluid), &ys);
    fluid
        .edge_sets
        .insert(sets::INTERFACE.into(), fg.right_edges());
    fluid.edge_sets.insert(sets::NEUMANN.into(), fg.left_edges());
    let mut lateral = fg.bottom_edges();
    lateral.extend(fg.top_edges());
    fluid.edge_sets.insert(sets::LATERAL.into(), lateral);

    let sg = StructuredGrid { nx: nx_solid, ny };
    let mut solid = sg.build(&linspace(fluid_len, fluid_len + solid_len, nx_solid), &ys);
    solid
        .edge_sets
        .insert(sets::INTERFACE.into(), sg.left_edges());
    solid
        .edge_sets
        .insert(sets::DIRICHLET.into(), sg.right_edges());
    let mut lateral = sg.bottom_edges();
    lateral.extend(sg.top_edges());
    solid.edge_sets.insert(sets::LATERAL.into(), lateral);

    fluid.validate()?;
    solid.validate()?;
    Ok((fluid, solid))
}

/// Thickness of the flexible bottom strip of the driven-cavity case.
pub const CAVITY_SOLID_THICKNESS: f64 = 0.002;
/// Height of the leaky top strip of the unit-square cavity domain.
pub const CAVITY_TOP_HEIGHT: f64 = 0.125;

/// Generates the leaky driven-cavity pair: unit-square fluid domain made of a
/// cavity block (`n_cav x n_cav`) below a top strip (`n_cav x n_top`), and a
/// thin solid strip below `y = 0` (`n_solid_x x n_solid_y`), clamped at its
/// lateral edges. The fluid/solid interface sits at `y = 0`.
pub fn generate_cavity_meshes(
    n_cav: usize,
    n_top: usize,
    n_solid_x: usize,
    n_solid_y: usize,
) -> Result<(Mesh2D, Mesh2D)> {
    if n_cav < 1 || n_top < 1 || n_solid_x < 1 || n_solid_y < 1 {
        return Err(FsiError::InvalidConfig(
            "cavity element counts must be >= 1".into(),
        ));
    }
    let xs = linspace(0.0, 1.0, n_cav);
    let mut ys = linspace(0.0, 1.0 - CAVITY_TOP_HEIGHT, n_cav);
    ys.extend(
        linspace(1.0 - CAVITY_TOP_HEIGHT, 1.0, n_top)
            .into_iter()
            .skip(1),
    );
    let fg = StructuredGrid {
        nx: n_cav,
        ny: n_cav + n_top,
    };
    let mut fluid = fg.build(&xs, &ys);
    fluid
        .edge_sets
        .insert(sets::INTERFACE.into(), fg.bottom_edges());
    fluid.edge_sets.insert(sets::LID.into(), fg.top_edges());
    let mut walls = Vec::new();
    let mut inflow = Vec::new();
    let mut outflow = Vec::new();
    for iy in 0..(n_cav + n_top) {
        if iy < n_cav {
            walls.push((fg.elem(0, iy), 3));
            walls.push((fg.elem(n_cav - 1, iy), 1));
        } else {
            inflow.push((fg.elem(0, iy), 3));
            outflow.push((fg.elem(n_cav - 1, iy), 1));
        }
    }
    fluid.edge_sets.insert(sets::WALLS.into(), walls);
    fluid.edge_sets.insert(sets::INFLOW.into(), inflow);
    fluid.edge_sets.insert(sets::OUTFLOW.into(), outflow);

    let sg = StructuredGrid {
        nx: n_solid_x,
        ny: n_solid_y,
    };
    let mut solid = sg.build(
        &linspace(0.0, 1.0, n_solid_x),
        &linspace(-CAVITY_SOLID_THICKNESS, 0.0, n_solid_y),
    );
    solid
        .edge_sets
        .insert(sets::INTERFACE.into(), sg.top_edges());
    let mut clamped = sg.left_edges();
    clamped.extend(sg.right_edges());
    solid.edge_sets.insert(sets::CLAMPED.into(), clamped);

    fluid.validate()?;
    solid.validate()?;
    Ok((fluid, solid))
}

/// Writes a mesh in the line-oriented `mesh2d v1` text format.
pub fn save_mesh(mesh: &Mesh2D, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "mesh2d v1").unwrap();
    writeln!(out, "nodes {}", mesh.n_nodes()).unwrap();
    for c in &mesh.node_coords {
        writeln!(out, "{:.17e} {:.17e}", c[0], c[1]).unwrap();
    }
    writeln!(out, "elems {}", mesh.n_elements()).unwrap();
    for e in &mesh.elements {
        writeln!(out, "{} {} {} {}", e[0], e[1], e[2], e[3]).unwrap();
    }
    for (name, list) in &mesh.edge_sets {
        writeln!(out, "edgeset {} {}", name, list.len()).unwrap();
        for &(e, l) in list {
            writeln!(out, "{e} {l}").unwrap();
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a mesh written by [`save_mesh`]; reports malformed input with the
/// offending line number.
pub fn load_mesh(path: &Path) -> Result<Mesh2D> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<Mesh2D> {
    let err = |line: usize, msg: &str| FsiError::Parse {
        line,
        msg: msg.to_string(),
    };
    // strip comments and blank lines, keeping 1-based line numbers
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    if header != "mesh2d v1" {
        return Err(err(ln, "expected header 'mesh2d v1'"));
    }

    let (ln, decl) = lines.next().ok_or_else(|| err(ln, "missing 'nodes N'"))?;
    let n_nodes = parse_count(decl, "nodes").ok_or_else(|| err(ln, "expected 'nodes N'"))?;
    let mut node_coords = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, l) = lines.next().ok_or_else(|| err(ln, "unexpected end of node list"))?;
        let mut it = l.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(ln, "bad node coordinate"))?;
        let y: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(ln, "bad node coordinate"))?;
        node_coords.push([x, y]);
    }

    let (ln, decl) = lines.next().ok_or_else(|| err(ln, "missing 'elems M'"))?;
    let n_elems = parse_count(decl, "elems").ok_or_else(|| err(ln, "expected 'elems M'"))?;
    let mut elements = Vec::with_capacity(n_elems);
    for _ in 0..n_elems {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(ln, "unexpected end of element list"))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "bad element connectivity"))?;
        if ids.len() != 4 {
            return Err(err(ln, "element needs exactly 4 node ids"));
        }
        for &id in &ids {
            if id >= n_nodes {
                return Err(err(ln, "element references a node id out of range"));
            }
        }
        elements.push([ids[0], ids[1], ids[2], ids[3]]);
    }

    let mut edge_sets: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    let mut rest = lines.peekable();
    while let Some((ln, l)) = rest.next() {
        let mut it = l.split_whitespace();
        if it.next() != Some("edgeset") {
            return Err(err(ln, "expected 'edgeset <name> K'"));
        }
        let name = it
            .next()
            .ok_or_else(|| err(ln, "edgeset needs a name"))?
            .to_string();
        let count: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(ln, "edgeset needs a count"))?;
        if edge_sets.contains_key(&name) {
            return Err(err(ln, "duplicate edge-set name"));
        }
        let mut list = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, l) = rest
                .next()
                .ok_or_else(|| err(ln, "unexpected end of edge set"))?;
            let mut it = l.split_whitespace();
            let e: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(ln, "bad edge entry"))?;
            let le: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(ln, "bad edge entry"))?;
            if e >= n_elems || le >= 4 {
                return Err(err(ln, "edge entry out of range"));
            }
            list.push((e, le));
        }
        edge_sets.insert(name, list);
    }

    Ok(Mesh2D {
        node_coords,
        elements,
        edge_sets,
    })
}

fn parse_count(line: &str, keyword: &str) -> Option<usize> {
    let mut it = line.split_whitespace();
    if it.next() != Some(keyword) {
        return None;
    }
    it.next().and_then(|t| t.parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_conforming_layout() {
        let (fluid, solid) = generate_column_meshes(1.0, 1.0, 0.25, 4, 4, 1).unwrap();
        assert_eq!(fluid.n_elements(), 4);
        assert_eq!(solid.n_elements(), 4);
        let fi = fluid.edge_set_nodes(sets::INTERFACE).unwrap();
        let si = solid.edge_set_nodes(sets::INTERFACE).unwrap();
        assert_eq!(fi.len(), 2);
        assert_eq!(si.len(), 2);
        for (&f, &s) in fi.iter().zip(&si) {
            let a = fluid.node_coords[f];
            let b = solid.node_coords[s];
            assert!((a[0] - 1.0).abs() < 1e-15 && (b[0] - 1.0).abs() < 1e-15);
            assert!((a[1] - b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn column_non_matching_interface() {
        let (fluid, solid) = generate_column_meshes(1.0, 1.0, 0.25, 4, 6, 1).unwrap();
        let fi = fluid.edge_set_nodes(sets::INTERFACE).unwrap();
        let si = solid.edge_set_nodes(sets::INTERFACE).unwrap();
        assert_eq!(fi.len(), 2);
        assert_eq!(si.len(), 2);
        // same segment, different axial resolution elsewhere
        assert_eq!(fluid.n_elements(), 4);
        assert_eq!(solid.n_elements(), 6);
    }

    #[test]
    fn column_node_count_ny2() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.25, 4, 4, 2).unwrap();
        assert_eq!(fluid.n_nodes(), 15); // 5 x 3 structured grid
        assert_eq!(fluid.edge_set(sets::INTERFACE).unwrap().len(), 2);
    }

    #[test]
    fn cavity_paper_layout() {
        let (fluid, solid) = generate_cavity_meshes(64, 8, 72, 2).unwrap();
        assert_eq!(fluid.n_elements(), 64 * 72);
        assert_eq!(solid.n_elements(), 72 * 2);
        assert_eq!(fluid.edge_set(sets::INTERFACE).unwrap().len(), 64);
        assert_eq!(solid.edge_set(sets::INTERFACE).unwrap().len(), 72);
    }

    #[test]
    fn cavity_desk_scale_is_non_matching_9_to_8() {
        let (fluid, solid) = generate_cavity_meshes(16, 2, 18, 1).unwrap();
        let nf = fluid.edge_set(sets::INTERFACE).unwrap().len();
        let ns = solid.edge_set(sets::INTERFACE).unwrap().len();
        assert_eq!((ns as f64 / nf as f64), 18.0 / 16.0);
    }

    #[test]
    fn cavity_minimal_mesh_has_all_tags() {
        let (fluid, solid) = generate_cavity_meshes(1, 1, 1, 1).unwrap();
        // cavity block plus top strip
        assert_eq!(fluid.n_elements(), 2);
        assert_eq!(solid.n_elements(), 1);
        for name in [
            sets::INTERFACE,
            sets::WALLS,
            sets::INFLOW,
            sets::OUTFLOW,
            sets::LID,
        ] {
            assert!(!fluid.edge_set(name).unwrap().is_empty(), "missing {name}");
        }
        assert!(!solid.edge_set(sets::CLAMPED).unwrap().is_empty());
    }

    #[test]
    fn rejects_degenerate_dimensions() {
        assert!(generate_column_meshes(0.0, 1.0, 0.25, 4, 4, 1).is_err());
        assert!(generate_column_meshes(1.0, 1.0, -0.1, 4, 4, 1).is_err());
        assert!(generate_cavity_meshes(0, 1, 1, 1).is_err());
    }

    #[test]
    fn all_generated_elements_have_positive_area() {
        let (fluid, solid) = generate_cavity_meshes(5, 2, 7, 2).unwrap();
        for m in [&fluid, &solid] {
            for e in 0..m.n_elements() {
                assert!(m.element_area(e) > 0.0);
            }
        }
    }

    #[test]
    fn save_load_roundtrip_is_identity() {
        let (fluid, _) = generate_column_meshes(1.0, 1.0, 0.25, 3, 2, 2).unwrap();
        let dir = std::env::temp_dir().join("fsi_mesh_roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("fluid.mesh2d");
        save_mesh(&fluid, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.node_coords, fluid.node_coords);
        assert_eq!(back.elements, fluid.elements);
        assert_eq!(back.edge_sets, fluid.edge_sets);
    }

    #[test]
    fn load_rejects_dangling_node_index() {
        let text = "mesh2d v1\nnodes 3\n0 0\n1 0\n1 1\nelems 1\n0 1 2 9\n";
        match parse_mesh(text) {
            Err(FsiError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicate_edge_set() {
        let text = "mesh2d v1\nnodes 4\n0 0\n1 0\n1 1\n0 1\nelems 1\n0 1 2 3\n\
                    edgeset a 1\n0 0\nedgeset a 1\n0 1\n";
        match parse_mesh(text) {
            Err(FsiError::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
