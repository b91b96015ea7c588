//! Local piecewise-bilinear IFE shape functions.
//!
//! Each piece of an element carries its own bilinear polynomial
//! `a + b·ξ + c·η + d·ξη` in the element's reference coordinates
//! `ξ = (x − x0)/hx`, `η = (y − y0)/hy`. The four nodal functions interpolate
//! the nodes; the flux functions vanish at the nodes and carry a unit integral
//! flux jump across exactly one segment. Both satisfy value continuity across
//! the segments (at chord end points with a shared `d`, or at the spoke end
//! points and the triple point) and integral flux continuity elsewhere.

use nalgebra::{DMatrix, Matrix4};

use crate::cut::{CutClass, ElementCut, Segment, SegmentKind};
use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec2};

/// Coefficients `[a, b, c, d]` of `a + b·ξ + c·η + d·ξη`.
pub type Coeffs = [f64; 4];

/// Rank tolerance relative to the matrix max-norm.
pub const RANK_TOL: f64 = 1e-12;

/// Reference coordinates of the nodes, counter-clockwise from the lower-left one.
pub const NODE_LOCAL: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

const Q1: [Coeffs; 4] = [
    [1.0, -1.0, -1.0, 1.0],
    [0.0, 1.0, 0.0, -1.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, 1.0, -1.0],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisFn {
    Nodal(usize),
    /// Flux-jump function attached to segment `k` of the cut.
    Flux(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalBasis {
    pub rect: Rect,
    /// `nodal[i][piece]`
    pub nodal: [Vec<Coeffs>; 4],
    /// `flux[k][piece]`, one per segment.
    pub flux: Vec<Vec<Coeffs>>,
    /// Max absolute residual of the defining systems.
    pub condition_residual: f64,
}

impl LocalBasis {
    pub fn coeffs(&self, which: BasisFn) -> &[Coeffs] {
        match which {
            BasisFn::Nodal(i) => &self.nodal[i],
            BasisFn::Flux(k) => &self.flux[k],
        }
    }

    pub fn flux_count(&self) -> usize {
        self.flux.len()
    }

    /// Value and gradient of `which` on `piece` at `p` (no containment check).
    pub fn eval_on_piece(&self, which: BasisFn, piece: usize, p: Vec2) -> (f64, Vec2) {
        eval_coeffs(&self.coeffs(which)[piece], &self.rect, p)
    }

    /// Value and gradient at `p`, locating the containing piece.
    pub fn evaluate(&self, cut: &ElementCut, which: BasisFn, p: Vec2) -> Result<(f64, Vec2)> {
        let piece = locate_piece(cut, p)?;
        Ok(self.eval_on_piece(which, piece, p))
    }
}

/// Piece containing `p`, with a nudge towards the piece centroids on ties.
pub fn locate_piece(cut: &ElementCut, p: Vec2) -> Result<usize> {
    let h = cut.rect.width().max(cut.rect.height());
    if !cut.rect.contains(p, 1e-12 * h) {
        return Err(Error::PointOutsideElement { x: p.x, y: p.y });
    }
    cut.piece_at(p)
        .or_else(|| {
            cut.pieces
                .iter()
                .enumerate()
                .map(|(i, piece)| (i, (piece.centroid() - p).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i)
        })
        .ok_or(Error::PointOutsideElement { x: p.x, y: p.y })
}

pub fn eval_coeffs(c: &Coeffs, rect: &Rect, p: Vec2) -> (f64, Vec2) {
    let q = rect.to_local(p);
    let value = c[0] + c[1] * q.x + c[2] * q.y + c[3] * q.x * q.y;
    let grad = Vec2::new((c[1] + c[3] * q.y) / rect.width(), (c[2] + c[3] * q.x) / rect.height());
    (value, grad)
}

/// `[1, ξ, η, ξη]` at `p`.
fn monomials(rect: &Rect, p: Vec2) -> [f64; 4] {
    let q = rect.to_local(p);
    [1.0, q.x, q.y, q.x * q.y]
}

/// Gradients of the monomials at `p`.
fn monomial_gradients(rect: &Rect, p: Vec2) -> [Vec2; 4] {
    let q = rect.to_local(p);
    let (hx, hy) = (rect.width(), rect.height());
    [
        Vec2::zeros(),
        Vec2::new(1.0 / hx, 0.0),
        Vec2::new(0.0, 1.0 / hy),
        Vec2::new(q.y / hx, q.x / hy),
    ]
}

/// Builds the nodal and flux bases of one element.
pub fn build_local_basis(cut: &ElementCut, beta: [f64; 3]) -> Result<LocalBasis> {
    if beta.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidInput(format!("coefficients must be positive, got {beta:?}")));
    }
    if cut.class == CutClass::Regular {
        return Ok(LocalBasis {
            rect: cut.rect,
            nodal: Q1.map(|c| vec![c]),
            flux: Vec::new(),
            condition_residual: 0.0,
        });
    }
    let system = ConditionSystem::new(cut, beta);
    let (nodal, flux, residual) = system.solve()?;
    Ok(LocalBasis {
        rect: cut.rect,
        nodal,
        flux,
        condition_residual: residual,
    })
}

/// Nodal part only; equals [`build_local_basis`] without the flux functions.
pub fn build_nodal_basis(cut: &ElementCut, beta: [f64; 3]) -> Result<LocalBasis> {
    let mut basis = build_local_basis(cut, beta)?;
    basis.flux.clear();
    Ok(basis)
}

/// Flux part only.
pub fn build_flux_basis(cut: &ElementCut, beta: [f64; 3]) -> Result<Vec<Vec<Coeffs>>> {
    Ok(build_local_basis(cut, beta)?.flux)
}

/// The square linear system defining the local basis.
#[derive(Clone, Debug)]
pub struct ConditionSystem {
    pub matrix: DMatrix<f64>,
    /// Row of each nodal condition.
    pub nodal_rows: [usize; 4],
    /// Row of the flux condition of each segment.
    pub flux_rows: Vec<usize>,
    /// Scale applied to each flux row (`1/(β⁻ + β⁺)`).
    pub flux_scale: Vec<f64>,
    pieces: usize,
}

impl ConditionSystem {
    pub fn new(cut: &ElementCut, beta: [f64; 3]) -> Self {
        let np = cut.pieces.len();
        let n = 4 * np;
        let rect = &cut.rect;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut nodal_rows = [0; 4];
        for (k, node) in rect.corners().iter().enumerate() {
            let mut row = vec![0.0; n];
            let piece = cut.node_piece[k];
            row[4 * piece..4 * piece + 4].copy_from_slice(&monomials(rect, *node));
            nodal_rows[k] = rows.len();
            rows.push(row);
        }
        let continuity = |a: usize, b: usize, p: Vec2| {
            let mut row = vec![0.0; n];
            let m = monomials(rect, p);
            for j in 0..4 {
                row[4 * a + j] += m[j];
                row[4 * b + j] -= m[j];
            }
            row
        };
        for s in &cut.segments {
            match s.kind {
                SegmentKind::Chord => {
                    rows.push(continuity(s.plus_piece, s.minus_piece, s.start));
                    rows.push(continuity(s.plus_piece, s.minus_piece, s.end));
                    let mut row = vec![0.0; n];
                    row[4 * s.plus_piece + 3] = 1.0;
                    row[4 * s.minus_piece + 3] = -1.0;
                    rows.push(row);
                }
                SegmentKind::Spoke => rows.push(continuity(s.plus_piece, s.minus_piece, s.start)),
            }
        }
        if let Some(p) = cut.triple_point {
            rows.push(continuity(0, 1, p));
            rows.push(continuity(1, 2, p));
        }
        let mut flux_rows = Vec::with_capacity(cut.segments.len());
        let mut flux_scale = Vec::with_capacity(cut.segments.len());
        for s in &cut.segments {
            let (bm, bp) = segment_betas(cut, s, beta);
            let scale = 1.0 / (bm + bp);
            let g = monomial_gradients(rect, s.midpoint());
            let mut row = vec![0.0; n];
            for j in 0..4 {
                let gn = g[j].dot(&s.normal) * s.length * scale;
                row[4 * s.plus_piece + j] += bp * gn;
                row[4 * s.minus_piece + j] -= bm * gn;
            }
            flux_rows.push(rows.len());
            flux_scale.push(scale);
            rows.push(row);
        }
        debug_assert_eq!(rows.len(), n, "condition count must match unknowns");
        let matrix = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        ConditionSystem {
            matrix,
            nodal_rows,
            flux_rows,
            flux_scale,
            pieces: np,
        }
    }

    /// Right-hand sides: four nodal columns followed by one column per flux function.
    pub fn rhs(&self) -> DMatrix<f64> {
        let k = self.flux_rows.len();
        let mut b = DMatrix::zeros(self.matrix.nrows(), 4 + k);
        for (i, &r) in self.nodal_rows.iter().enumerate() {
            b[(r, i)] = 1.0;
        }
        for (j, (&r, &s)) in self.flux_rows.iter().zip(&self.flux_scale).enumerate() {
            b[(r, 4 + j)] = s;
        }
        b
    }

    #[allow(clippy::type_complexity)]
    fn solve(&self) -> Result<([Vec<Coeffs>; 4], Vec<Vec<Coeffs>>, f64)> {
        let a = &self.matrix;
        if a.nrows() != a.ncols() {
            return Err(Error::SingularLocalSystem {
                pivot: 0.0,
                detail: format!("{} conditions for {} unknowns", a.nrows(), a.ncols()),
            });
        }
        let max_norm = a.amax();
        let lu = a.clone().lu();
        let pivot = lu.u().diagonal().amin();
        if pivot <= RANK_TOL * max_norm {
            return Err(Error::SingularLocalSystem {
                pivot,
                detail: format!("{}x{} system, pieces {}", a.nrows(), a.ncols(), self.pieces),
            });
        }
        let b = self.rhs();
        let x = lu.solve(&b).ok_or_else(|| Error::SingularLocalSystem {
            pivot,
            detail: "LU solve failed".into(),
        })?;
        let residual = (a * &x - &b).amax();
        let column = |j: usize| -> Vec<Coeffs> {
            (0..self.pieces)
                .map(|p| [x[(4 * p, j)], x[(4 * p + 1, j)], x[(4 * p + 2, j)], x[(4 * p + 3, j)]])
                .collect()
        };
        let nodal = [column(0), column(1), column(2), column(3)];
        let flux = (0..self.flux_rows.len()).map(|k| column(4 + k)).collect();
        Ok((nodal, flux, residual))
    }
}

/// `(β⁻, β⁺)` of the pieces adjacent to `s`.
pub fn segment_betas(cut: &ElementCut, s: &Segment, beta: [f64; 3]) -> (f64, f64) {
    (
        beta[cut.pieces[s.minus_piece].label.index()],
        beta[cut.pieces[s.plus_piece].label.index()],
    )
}

/// Integral flux jump `∫ [β∇φ·n] ds` of a piecewise function across segment `s`.
pub fn flux_jump(cut: &ElementCut, coeffs: &[Coeffs], s: &Segment, beta: [f64; 3]) -> f64 {
    let (bm, bp) = segment_betas(cut, s, beta);
    let mid = s.midpoint();
    let (_, gp) = eval_coeffs(&coeffs[s.plus_piece], &cut.rect, mid);
    let (_, gm) = eval_coeffs(&coeffs[s.minus_piece], &cut.rect, mid);
    (bp * gp - bm * gm).dot(&s.normal) * s.length
}

/// Values of the nodal functions at the nodes; row `i` is function `i`.
pub fn nodal_value_matrix(cut: &ElementCut, basis: &LocalBasis) -> Matrix4<f64> {
    let corners = cut.rect.corners();
    Matrix4::from_fn(|i, k| eval_coeffs(&basis.nodal[i][cut.node_piece[k]], &cut.rect, corners[k]).0)
}

/// Samples `which` on an `m × m` grid over the element as `(x, y, value)`.
pub fn sample_basis_surface(cut: &ElementCut, basis: &LocalBasis, which: BasisFn, m: usize) -> Result<Vec<[f64; 3]>> {
    let m = m.max(2);
    let mut out = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            let q = Vec2::new(i as f64 / (m - 1) as f64, j as f64 / (m - 1) as f64);
            let p = cut.rect.from_local(q);
            let (v, _) = basis.evaluate(cut, which, p)?;
            out.push([p.x, p.y, v]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut::cut_element;
    use crate::geometry::{SubdomainGeometry, Vec2};

    fn quarter_planes() -> SubdomainGeometry {
        SubdomainGeometry::three_rays(Vec2::zeros(), [Vec2::new(0.0, 1.0), Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0)])
            .unwrap()
    }

    #[test]
    fn q1_at_first_node() {
        let rect = Rect::from_bounds(0.0, 0.0, 1.0, 1.0);
        let (v, g) = eval_coeffs(&Q1[0], &rect, Vec2::new(0.0, 0.0));
        assert_eq!(v, 1.0);
        assert_eq!(g, Vec2::new(-1.0, -1.0));
    }

    #[test]
    fn q1_is_nodal() {
        let rect = Rect::from_bounds(0.2, 0.1, 0.7, 0.3);
        for (i, c) in Q1.iter().enumerate() {
            for (k, node) in rect.corners().iter().enumerate() {
                let (v, _) = eval_coeffs(c, &rect, *node);
                assert!((v - if i == k { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn junction_basis_partition_of_unity() {
        let cut = cut_element(&quarter_planes(), &Rect::from_bounds(-0.5, -0.5, 0.5, 0.5)).unwrap();
        let basis = build_local_basis(&cut, [1.0, 10.0, 100.0]).unwrap();
        assert!(basis.condition_residual < 1e-12);
        assert_eq!(basis.flux_count(), 3);
        for piece in 0..3 {
            let mut sum = [0.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    sum[j] += basis.nodal[i][piece][j];
                }
            }
            assert!((sum[0] - 1.0).abs() < 1e-12);
            assert!(sum[1..].iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn flux_functions_have_unit_jump_on_own_segment() {
        let cut = cut_element(&quarter_planes(), &Rect::from_bounds(-0.5, -0.5, 0.5, 0.5)).unwrap();
        let beta = [1.0, 10.0, 100.0];
        let basis = build_local_basis(&cut, beta).unwrap();
        for (k, f) in basis.flux.iter().enumerate() {
            for (j, s) in cut.segments.iter().enumerate() {
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((flux_jump(&cut, f, s, beta) - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn equal_coefficients_reproduce_q1() {
        let cut = cut_element(&quarter_planes(), &Rect::from_bounds(-0.3, -0.4, 0.5, 0.5)).unwrap();
        let basis = build_local_basis(&cut, [3.0; 3]).unwrap();
        for i in 0..4 {
            for piece in &basis.nodal[i] {
                for j in 0..4 {
                    assert!((piece[j] - Q1[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_non_positive_coefficients() {
        let cut = cut_element(&quarter_planes(), &Rect::from_bounds(-0.5, -0.5, 0.5, 0.5)).unwrap();
        assert!(build_local_basis(&cut, [1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn point_outside_is_rejected() {
        let cut = cut_element(&quarter_planes(), &Rect::from_bounds(-0.5, -0.5, 0.5, 0.5)).unwrap();
        let basis = build_local_basis(&cut, [1.0; 3]).unwrap();
        let err = basis.evaluate(&cut, BasisFn::Nodal(0), Vec2::new(0.6, 0.0)).unwrap_err();
        assert!(matches!(err, Error::PointOutsideElement { .. }));
    }
}
