//! Uniform Cartesian mesh with cut elements.
//!
//! Numbering on an `n × n` mesh:
//! node `(i, j)` is `j(n+1) + i`, element `(i, j)` is `jn + i`, the horizontal
//! edge starting at node `(i, j)` is `jn + i` and the vertical one is
//! `n(n+1) + j(n+1) + i`. Local edges of an element are bottom, right, top,
//! left.

use rayon::prelude::*;

use crate::cut::{cut_element_with_scans, CutClass, EdgeScan, ElementCut};
use crate::error::{Error, Result};
use crate::geometry::{Rect, SubdomainGeometry, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    /// End nodes in canonical direction.
    pub nodes: [usize; 2],
    /// Adjacent elements, lower index first.
    pub elements: [Option<usize>; 2],
    pub horizontal: bool,
    pub boundary: bool,
    /// An interface crosses or touches the open edge.
    pub interface: bool,
}

impl Edge {
    /// Local edge index of this edge in each adjacent element.
    pub fn local_indices(&self) -> [usize; 2] {
        if self.horizontal {
            [2, 0]
        } else {
            [1, 3]
        }
    }

    /// Unit normal from the first to the second adjacent element.
    pub fn normal(&self) -> Vec2 {
        if self.horizontal {
            Vec2::new(0.0, 1.0)
        } else {
            Vec2::new(1.0, 0.0)
        }
    }
}

#[derive(Clone, Debug)]
pub struct CartesianMesh {
    pub domain: Rect,
    pub n: usize,
    pub edges: Vec<Edge>,
    pub scans: Vec<EdgeScan>,
    pub cuts: Vec<ElementCut>,
    /// DOF index of each node, `None` on the boundary.
    pub dof_of_node: Vec<Option<usize>>,
    /// Node of each DOF.
    pub dof_nodes: Vec<usize>,
}

/// Mesh-line coordinate `k` of `n` on `[lo, hi]`, exact at both ends.
fn grid_coordinate(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
    if k == n {
        hi
    } else {
        lo + (hi - lo) * (k as f64 / n as f64)
    }
}

impl CartesianMesh {
    pub fn hx(&self) -> f64 {
        self.domain.width() / self.n as f64
    }

    pub fn hy(&self) -> f64 {
        self.domain.height() / self.n as f64
    }

    /// Mesh size (largest element side).
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn node_count(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn element_count(&self) -> usize {
        self.n * self.n
    }

    pub fn dof_count(&self) -> usize {
        self.dof_nodes.len()
    }

    pub fn x(&self, i: usize) -> f64 {
        grid_coordinate(self.domain.min.x, self.domain.max.x, i, self.n)
    }

    pub fn y(&self, j: usize) -> f64 {
        grid_coordinate(self.domain.min.y, self.domain.max.y, j, self.n)
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    pub fn node_position(&self, node: usize) -> Vec2 {
        let (i, j) = (node % (self.n + 1), node / (self.n + 1));
        Vec2::new(self.x(i), self.y(j))
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.dof_of_node[node].is_none()
    }

    pub fn element(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e % self.n, e / self.n)
    }

    pub fn element_rect(&self, e: usize) -> Rect {
        let (i, j) = self.element_ij(e);
        Rect::from_bounds(self.x(i), self.y(j), self.x(i + 1), self.y(j + 1))
    }

    /// Global node ids, counter-clockwise from the lower-left one.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (i, j) = self.element_ij(e);
        [self.node(i, j), self.node(i + 1, j), self.node(i + 1, j + 1), self.node(i, j + 1)]
    }

    pub fn horizontal_edge(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn vertical_edge(&self, i: usize, j: usize) -> usize {
        self.n * (self.n + 1) + j * (self.n + 1) + i
    }

    /// Global edge ids in local order bottom, right, top, left.
    pub fn element_edges(&self, e: usize) -> [usize; 4] {
        let (i, j) = self.element_ij(e);
        [
            self.horizontal_edge(i, j),
            self.vertical_edge(i + 1, j),
            self.horizontal_edge(i, j + 1),
            self.vertical_edge(i, j),
        ]
    }

    /// Elements of class `class`.
    pub fn elements_of(&self, class: CutClass) -> impl Iterator<Item = usize> + '_ {
        (0..self.element_count()).filter(move |&e| self.cuts[e].class == class)
    }

    /// Element counts per class, indexed by class code.
    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for cut in &self.cuts {
            counts[cut.class.code() as usize] += 1;
        }
        counts
    }

    /// Interior edges flagged as interface edges.
    pub fn interior_interface_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&k| self.edges[k].interface && !self.edges[k].boundary)
    }

    /// Element class codes, one row per mesh row starting at the bottom.
    pub fn classification_map(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.cuts[self.element(i, j)].class.code()).collect())
            .collect()
    }
}

/// Builds and cuts an `n × n` mesh of `domain`.
pub fn build_mesh(domain: Rect, n: usize, geom: &SubdomainGeometry) -> Result<CartesianMesh> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("mesh needs at least 2 subdivisions, got {n}")));
    }
    if !(domain.width() > 0.0 && domain.height() > 0.0) {
        return Err(Error::InvalidInput("domain must have positive extent".into()));
    }
    let mut mesh = CartesianMesh {
        domain,
        n,
        edges: Vec::new(),
        scans: Vec::new(),
        cuts: Vec::new(),
        dof_of_node: Vec::new(),
        dof_nodes: Vec::new(),
    };

    let mut edges = Vec::with_capacity(2 * n * (n + 1));
    for j in 0..=n {
        for i in 0..n {
            let below = (j > 0).then(|| mesh.element(i, j - 1));
            let above = (j < n).then(|| mesh.element(i, j));
            edges.push(edge_record(
                [mesh.node(i, j), mesh.node(i + 1, j)],
                below,
                above,
                true,
            ));
        }
    }
    for j in 0..n {
        for i in 0..=n {
            let left = (i > 0).then(|| mesh.element(i - 1, j));
            let right = (i < n).then(|| mesh.element(i, j));
            edges.push(edge_record([mesh.node(i, j), mesh.node(i, j + 1)], left, right, false));
        }
    }

    let scans: Vec<EdgeScan> = edges
        .par_iter()
        .map(|e| {
            crate::cut::scan_edge(geom, mesh.node_position(e.nodes[0]), mesh.node_position(e.nodes[1]))
        })
        .collect::<Result<_>>()?;
    for (edge, scan) in edges.iter_mut().zip(&scans) {
        edge.interface = scan.is_interface();
    }
    mesh.edges = edges;
    mesh.scans = scans;

    let cuts: Vec<ElementCut> = (0..n * n)
        .into_par_iter()
        .map(|e| {
            let [b, r, t, l] = mesh.element_edges(e);
            let s = &mesh.scans;
            cut_element_with_scans(geom, &mesh.element_rect(e), [&s[b], &s[r], &s[t], &s[l]])
                .map_err(|err| err.at_element(e))
        })
        .collect::<Result<_>>()?;
    mesh.cuts = cuts;

    let mut dof_of_node = vec![None; mesh.node_count()];
    let mut dof_nodes = Vec::with_capacity((n - 1) * (n - 1));
    for j in 1..n {
        for i in 1..n {
            let node = mesh.node(i, j);
            dof_of_node[node] = Some(dof_nodes.len());
            dof_nodes.push(node);
        }
    }
    mesh.dof_of_node = dof_of_node;
    mesh.dof_nodes = dof_nodes;
    Ok(mesh)
}

fn edge_record(nodes: [usize; 2], first: Option<usize>, second: Option<usize>, horizontal: bool) -> Edge {
    Edge {
        nodes,
        elements: [first, second],
        horizontal,
        boundary: first.is_none() || second.is_none(),
        interface: false,
    }
}

/// Writes a classification map as comma-separated rows.
pub fn classification_csv(map: &[Vec<u8>]) -> String {
    let mut out = String::new();
    for row in map {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{InterfaceLevelSet, LevelSet, LinearLevelSet, RegionRule, Subdomain};

    /// All three level sets far outside the unit square.
    fn empty_geometry() -> SubdomainGeometry {
        let ls: [Arc<dyn LevelSet>; 3] = [
            Arc::new(LinearLevelSet::new(1.0, 0.0, 10.0)),
            Arc::new(LinearLevelSet::new(0.0, 1.0, 10.0)),
            Arc::new(LinearLevelSet::new(1.0, 1.0, 10.0)),
        ];
        let iface = InterfaceLevelSet {
            level_set: 0,
            plus_on_positive: true,
        };
        SubdomainGeometry::new(ls, RegionRule::Leaf(Subdomain::Omega2), [iface; 3])
    }

    #[test]
    fn two_by_two_without_interfaces() {
        let mesh = build_mesh(Rect::from_bounds(0.0, 0.0, 1.0, 1.0), 2, &empty_geometry()).unwrap();
        assert_eq!(mesh.class_counts(), [4, 0, 0, 0]);
        assert_eq!(mesh.dof_count(), 1);
        assert_eq!(mesh.dof_nodes, vec![4]);
        assert!(mesh.classification_map().iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn edge_adjacency_counts() {
        let n = 5;
        let mesh = build_mesh(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), n, &empty_geometry()).unwrap();
        assert_eq!(mesh.edges.len(), 2 * n * (n + 1));
        let boundary = mesh.edges.iter().filter(|e| e.boundary).count();
        assert_eq!(boundary, 4 * n);
        for e in mesh.edges.iter().filter(|e| !e.boundary) {
            let [a, b] = e.elements;
            assert!(a.unwrap() < b.unwrap());
        }
        assert_eq!(mesh.dof_count(), (n - 1) * (n - 1));
    }

    #[test]
    fn element_edges_match_nodes() {
        let mesh = build_mesh(Rect::from_bounds(0.0, 0.0, 1.0, 1.0), 3, &empty_geometry()).unwrap();
        for e in 0..mesh.element_count() {
            let nodes = mesh.element_nodes(e);
            let edges = mesh.element_edges(e);
            assert_eq!(mesh.edges[edges[0]].nodes, [nodes[0], nodes[1]]);
            assert_eq!(mesh.edges[edges[1]].nodes, [nodes[1], nodes[2]]);
            assert_eq!(mesh.edges[edges[2]].nodes, [nodes[3], nodes[2]]);
            assert_eq!(mesh.edges[edges[3]].nodes, [nodes[0], nodes[3]]);
            for (k, &g) in edges.iter().enumerate() {
                let pos = mesh.edges[g].elements.iter().position(|x| *x == Some(e)).unwrap();
                assert_eq!(mesh.edges[g].local_indices()[pos], k);
            }
        }
    }

    #[test]
    fn too_coarse_mesh_rejected() {
        assert!(build_mesh(Rect::from_bounds(0.0, 0.0, 1.0, 1.0), 1, &empty_geometry()).is_err());
    }

    #[test]
    fn csv_rows() {
        assert_eq!(classification_csv(&[vec![0, 1], vec![3, 2]]), "0,1\n3,2\n");
    }
}
