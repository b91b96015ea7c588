//! Functions in the global IFE space: nodal values plus per-element
//! coefficients of the flux-jump functions.

use crate::basis::{eval_coeffs, locate_piece, Coeffs, LocalBasis};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::CartesianMesh;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteFunction {
    /// Value at every mesh node.
    pub nodal: Vec<f64>,
    /// Flux-function coefficients per element (empty on regular elements).
    pub flux: Vec<Vec<f64>>,
}

impl DiscreteFunction {
    pub fn zeros(mesh: &CartesianMesh, bases: &[LocalBasis]) -> Self {
        DiscreteFunction {
            nodal: vec![0.0; mesh.node_count()],
            flux: bases.iter().map(|b| vec![0.0; b.flux_count()]).collect(),
        }
    }

    /// Combined bilinear coefficients on each piece of element `e`.
    pub fn piece_coeffs(&self, mesh: &CartesianMesh, bases: &[LocalBasis], e: usize) -> Vec<Coeffs> {
        let basis = &bases[e];
        let nodes = mesh.element_nodes(e);
        let pieces = basis.nodal[0].len();
        (0..pieces)
            .map(|p| {
                let mut c = [0.0; 4];
                for (i, &node) in nodes.iter().enumerate() {
                    let u = self.nodal[node];
                    for j in 0..4 {
                        c[j] += u * basis.nodal[i][p][j];
                    }
                }
                for (k, &q) in self.flux[e].iter().enumerate() {
                    for j in 0..4 {
                        c[j] += q * basis.flux[k][p][j];
                    }
                }
                c
            })
            .collect()
    }

    /// Value and gradient at `p`.
    pub fn evaluate(&self, mesh: &CartesianMesh, bases: &[LocalBasis], p: Vec2) -> Result<(f64, Vec2)> {
        let e = locate_element(mesh, p)?;
        let piece = locate_piece(&mesh.cuts[e], p)?;
        let coeffs = self.piece_coeffs(mesh, bases, e);
        Ok(eval_coeffs(&coeffs[piece], &bases[e].rect, p))
    }
}

/// Element containing `p`; points on shared edges go to the upper/right element.
pub fn locate_element(mesh: &CartesianMesh, p: Vec2) -> Result<usize> {
    let d = &mesh.domain;
    let tol = 1e-12 * mesh.h();
    if !d.contains(p, tol) {
        return Err(Error::PointOutsideElement { x: p.x, y: p.y });
    }
    let cell = |v: f64, lo: f64, h: f64| -> usize {
        let k = ((v - lo) / h).floor();
        (k.max(0.0) as usize).min(mesh.n - 1)
    };
    let i = cell(p.x, d.min.x, mesh.hx());
    let j = cell(p.y, d.min.y, mesh.hy());
    Ok(mesh.element(i, j))
}
