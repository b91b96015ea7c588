//! Global system assembly and solution.
//!
//! The bilinear form on the IFE space is
//!
//! ```text
//! a(u, v) = Σ_K ∫_K β∇u·∇v
//!         − Σ_e ∫_e {β∇u·n_e}[v] + ε Σ_e ∫_e {β∇v·n_e}[u] + Σ_e σ_e/|e| ∫_e [u][v]
//! ```
//!
//! with the edge sums over interior interface edges only (the plain Galerkin
//! scheme keeps the volume term). The right-hand side is
//! `(f, v) − Σ_k (b_k, v)_{Γ_k} − a(u_J, v)`, where `u_J` is the zero-extended
//! flux enrichment carrying the non-homogeneous flux jumps.

use rayon::prelude::*;

use crate::basis::{build_local_basis, eval_coeffs, LocalBasis};
use crate::cut::ElementCut;
use crate::discrete::DiscreteFunction;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::CartesianMesh;
use crate::problem::{ProblemSpec, Scheme, SchemeParams};
use crate::quadrature::{polygon_rule, segment_rule};
use crate::sparse::{bicgstab, conjugate_gradient, dense_lu, minres, CsrMatrix, SolveStats};

/// Systems below this size with a nonsymmetric matrix use dense LU.
pub const DENSE_LIMIT: usize = 2000;

/// Relative residual target of the iterative solvers.
pub const SOLVER_TOL: f64 = 1e-14;

/// Local bases of every element.
pub fn build_bases(mesh: &CartesianMesh, beta: [f64; 3]) -> Result<Vec<LocalBasis>> {
    mesh.cuts
        .par_iter()
        .enumerate()
        .map(|(e, cut)| build_local_basis(cut, beta).map_err(|err| err.at_element(e)))
        .collect()
}

/// Enrichment coefficients `q_T^k = ∫ b_k ds` over each segment of each element.
pub fn enrichment_coefficients(mesh: &CartesianMesh, spec: &ProblemSpec, order: usize) -> Result<Vec<Vec<f64>>> {
    mesh.cuts
        .par_iter()
        .map(|cut| {
            cut.segments
                .iter()
                .map(|s| {
                    let rule = segment_rule(s.start, s.end, order)?;
                    Ok(rule.integrate(|p| (spec.flux_jump)(s.interface, p)))
                })
                .collect()
        })
        .collect()
}

/// System over all mesh nodes before boundary elimination.
#[derive(Clone, Debug, Default)]
pub struct FullSystem {
    pub size: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

impl FullSystem {
    pub fn new(size: usize) -> Self {
        FullSystem {
            size,
            triplets: Vec::new(),
            rhs: vec![0.0; size],
        }
    }
}

/// Reduced system over interior nodes.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Prescribed value at every node (zero at interior nodes).
    pub dirichlet_values: Vec<f64>,
}

struct ElementBlock {
    nodes: [usize; 4],
    /// `stiffness[i][j]`, `j` over nodal then flux functions.
    stiffness: Vec<[f64; 4]>,
    load: [f64; 4],
}

/// Volume stiffness, its action on the enrichment, and the element loads
/// `(f, φ_i) − Σ (b, φ_i)_Γ`.
fn element_block(
    mesh: &CartesianMesh,
    bases: &[LocalBasis],
    spec: &ProblemSpec,
    params: &SchemeParams,
    e: usize,
) -> Result<ElementBlock> {
    let cut = &mesh.cuts[e];
    let basis = &bases[e];
    let k = basis.flux_count();
    let mut stiffness = vec![[0.0; 4]; 4 + k];
    let mut load = [0.0; 4];
    let mut grads = vec![Vec2::zeros(); 4 + k];
    for (pi, piece) in cut.pieces.iter().enumerate() {
        let beta = spec.beta[piece.label.index()];
        let rule = polygon_rule(&piece.polygon, params.orders.volume)?;
        for (p, w) in rule.iter() {
            let mut values = [0.0; 4];
            for i in 0..4 {
                let (v, g) = eval_coeffs(&basis.nodal[i][pi], &cut.rect, p);
                values[i] = v;
                grads[i] = g;
            }
            for j in 0..k {
                grads[4 + j] = eval_coeffs(&basis.flux[j][pi], &cut.rect, p).1;
            }
            let f = (spec.source)(piece.label, p);
            for i in 0..4 {
                load[i] += w * f * values[i];
                for (j, gj) in grads.iter().enumerate() {
                    stiffness[j][i] += w * beta * grads[i].dot(gj);
                }
            }
        }
    }
    for s in &cut.segments {
        let rule = segment_rule(s.start, s.end, params.orders.segment)?;
        for (p, w) in rule.iter() {
            let b = (spec.flux_jump)(s.interface, p);
            for i in 0..4 {
                let vm = eval_coeffs(&basis.nodal[i][s.minus_piece], &cut.rect, p).0;
                let vp = eval_coeffs(&basis.nodal[i][s.plus_piece], &cut.rect, p).0;
                load[i] -= w * b * 0.5 * (vm + vp);
            }
        }
    }
    Ok(ElementBlock {
        nodes: mesh.element_nodes(e),
        stiffness,
        load,
    })
}

/// Adds the volume terms and element loads, moving the enrichment's share to the right-hand side.
pub fn assemble_volume(
    mesh: &CartesianMesh,
    bases: &[LocalBasis],
    spec: &ProblemSpec,
    params: &SchemeParams,
    enrichment: &[Vec<f64>],
    system: &mut FullSystem,
) -> Result<()> {
    let blocks: Vec<ElementBlock> = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| element_block(mesh, bases, spec, params, e).map_err(|err| err.at_element(e)))
        .collect::<Result<_>>()?;
    system.triplets.reserve(16 * blocks.len());
    for (e, block) in blocks.iter().enumerate() {
        for i in 0..4 {
            let row = block.nodes[i];
            for j in 0..4 {
                system.triplets.push((row, block.nodes[j], block.stiffness[j][i]));
            }
            let mut rhs = block.load[i];
            for (kk, q) in enrichment[e].iter().enumerate() {
                rhs -= block.stiffness[4 + kk][i] * q;
            }
            system.rhs[row] += rhs;
        }
    }
    Ok(())
}

/// Local edge matrix over the side functions of both elements.
struct EdgeBlock {
    /// Global node or `None` (flux function) for each side function.
    rows: Vec<Option<usize>>,
    /// Flux coefficient of each side function (zero for nodal ones).
    q: Vec<f64>,
    /// `matrix[I][J] = a_e(φ_J, φ_I)`.
    matrix: Vec<Vec<f64>>,
}

fn edge_block(
    mesh: &CartesianMesh,
    bases: &[LocalBasis],
    spec: &ProblemSpec,
    params: &SchemeParams,
    enrichment: &[Vec<f64>],
    edge_id: usize,
) -> Result<EdgeBlock> {
    let edge = &mesh.edges[edge_id];
    let scan = &mesh.scans[edge_id];
    let elems = [edge.elements[0].expect("interior edge"), edge.elements[1].expect("interior edge")];
    let locals = edge.local_indices();
    let cuts: [&ElementCut; 2] = [&mesh.cuts[elems[0]], &mesh.cuts[elems[1]]];
    let normal = edge.normal();
    let length = scan.length();
    let penalty = params.penalty(spec.beta) / length;
    let epsilon = params.epsilon as f64;

    let mut rows = Vec::new();
    let mut q = Vec::new();
    let mut offsets = [0; 2];
    for side in 0..2 {
        offsets[side] = rows.len();
        let nodes = mesh.element_nodes(elems[side]);
        rows.extend(nodes.iter().map(|&n| Some(n)));
        q.extend([0.0; 4]);
        let k = bases[elems[side]].flux_count();
        rows.extend(std::iter::repeat(None).take(k));
        q.extend(enrichment[elems[side]].iter().copied());
    }
    let m = rows.len();
    let mut matrix = vec![vec![0.0; m]; m];

    let mut cuts_t: Vec<f64> = vec![0.0, 1.0];
    for side in 0..2 {
        for arc in &cuts[side].edge_arcs[locals[side]] {
            cuts_t.push(arc.t0);
            cuts_t.push(arc.t1);
        }
    }
    cuts_t.sort_by(f64::total_cmp);
    cuts_t.dedup();

    let mut jump = vec![0.0; m];
    let mut avg = vec![0.0; m];
    for w2 in cuts_t.windows(2) {
        let (ta, tb) = (w2[0], w2[1]);
        if tb <= ta {
            continue;
        }
        let mid = 0.5 * (ta + tb);
        let pieces = [
            cuts[0].edge_piece(locals[0], mid),
            cuts[1].edge_piece(locals[1], mid),
        ];
        let rule = segment_rule(scan.point(ta), scan.point(tb), params.orders.segment)?;
        for (p, w) in rule.iter() {
            for side in 0..2 {
                let basis = &bases[elems[side]];
                let piece = pieces[side];
                let beta = spec.beta[cuts[side].pieces[piece].label.index()];
                let sign = if side == 0 { 1.0 } else { -1.0 };
                let nf = 4 + basis.flux_count();
                for f in 0..nf {
                    let c = if f < 4 { &basis.nodal[f][piece] } else { &basis.flux[f - 4][piece] };
                    let (v, g) = eval_coeffs(c, &basis.rect, p);
                    jump[offsets[side] + f] = sign * v;
                    avg[offsets[side] + f] = 0.5 * beta * g.dot(&normal);
                }
            }
            for i in 0..m {
                if rows[i].is_none() {
                    continue;
                }
                let row = &mut matrix[i];
                for j in 0..m {
                    row[j] += w * (-avg[j] * jump[i] + epsilon * avg[i] * jump[j] + penalty * jump[i] * jump[j]);
                }
            }
        }
    }
    Ok(EdgeBlock { rows, q, matrix })
}

/// Adds the consistency, symmetrization and penalty terms on interior interface edges.
pub fn assemble_edge_terms(
    mesh: &CartesianMesh,
    bases: &[LocalBasis],
    spec: &ProblemSpec,
    params: &SchemeParams,
    enrichment: &[Vec<f64>],
    system: &mut FullSystem,
) -> Result<()> {
    if params.scheme != Scheme::Ppifem {
        return Ok(());
    }
    let edges: Vec<usize> = mesh.interior_interface_edges().collect();
    let blocks: Vec<EdgeBlock> = edges
        .par_iter()
        .map(|&g| edge_block(mesh, bases, spec, params, enrichment, g))
        .collect::<Result<_>>()?;
    for block in blocks {
        for (i, row) in block.rows.iter().enumerate() {
            let Some(r) = *row else { continue };
            for (j, col) in block.rows.iter().enumerate() {
                let v = block.matrix[i][j];
                match col {
                    Some(c) => system.triplets.push((r, *c, v)),
                    None => system.rhs[r] -= v * block.q[j],
                }
            }
        }
    }
    Ok(())
}

/// Strong Dirichlet conditions: boundary rows dropped, boundary columns moved to the right-hand side.
pub fn apply_dirichlet(mesh: &CartesianMesh, spec: &ProblemSpec, system: FullSystem) -> SparseSystem {
    let mut values = vec![0.0; mesh.node_count()];
    for (node, v) in values.iter_mut().enumerate() {
        if mesh.is_boundary_node(node) {
            *v = (spec.boundary)(mesh.node_position(node));
        }
    }
    let n = mesh.dof_count();
    let mut rhs: Vec<f64> = mesh.dof_nodes.iter().map(|&node| system.rhs[node]).collect();
    let mut triplets = Vec::with_capacity(system.triplets.len());
    for (r, c, v) in system.triplets {
        let Some(ri) = mesh.dof_of_node[r] else { continue };
        match mesh.dof_of_node[c] {
            Some(ci) => triplets.push((ri, ci, v)),
            None => rhs[ri] -= v * values[c],
        }
    }
    SparseSystem {
        matrix: CsrMatrix::from_triplets(n, n, triplets),
        rhs,
        dirichlet_values: values,
    }
}

/// Assembles the reduced system for the given bases and enrichment coefficients.
pub fn assemble(
    mesh: &CartesianMesh,
    bases: &[LocalBasis],
    spec: &ProblemSpec,
    params: &SchemeParams,
    enrichment: &[Vec<f64>],
) -> Result<SparseSystem> {
    params.validate()?;
    spec.validate()?;
    let mut full = FullSystem::new(mesh.node_count());
    assemble_volume(mesh, bases, spec, params, enrichment, &mut full)?;
    assemble_edge_terms(mesh, bases, spec, params, enrichment, &mut full)?;
    Ok(apply_dirichlet(mesh, spec, full))
}

/// Solves the reduced system: conjugate gradients for symmetric schemes (MINRES
/// if the matrix turns out indefinite), dense LU or BiCGSTAB otherwise.
pub fn solve(system: &SparseSystem, params: &SchemeParams) -> Result<(Vec<f64>, SolveStats)> {
    let n = system.matrix.nrows;
    if n == 0 {
        return Ok((Vec::new(), SolveStats { method: "none", iterations: 0, relative_residual: 0.0 }));
    }
    let max_iter = 20 * n;
    let symmetric = params.scheme == Scheme::Galerkin || params.epsilon == -1;
    if symmetric {
        match conjugate_gradient(&system.matrix, &system.rhs, SOLVER_TOL, max_iter) {
            // Small penalties can leave the symmetric matrix indefinite.
            Err(Error::SolverBreakdown(_)) => match minres(&system.matrix, &system.rhs, SOLVER_TOL, max_iter) {
                Ok(done) => Ok(done),
                Err(_) => solve_general(system, max_iter),
            },
            other => other,
        }
    } else {
        solve_general(system, max_iter)
    }
}

fn solve_general(system: &SparseSystem, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    if system.matrix.nrows < DENSE_LIMIT {
        dense_lu(&system.matrix, &system.rhs)
    } else {
        bicgstab(&system.matrix, &system.rhs, SOLVER_TOL, max_iter)
    }
}

/// Everything produced by one solve on one mesh.
#[derive(Clone, Debug)]
pub struct Solution {
    pub mesh: CartesianMesh,
    pub bases: Vec<LocalBasis>,
    pub enrichment: Vec<Vec<f64>>,
    pub system: SparseSystem,
    pub function: DiscreteFunction,
    pub stats: SolveStats,
}

/// Builds the mesh, assembles and solves on an `n × n` mesh.
pub fn solve_problem(spec: &ProblemSpec, n: usize, params: &SchemeParams) -> Result<Solution> {
    params.validate()?;
    let mesh = crate::mesh::build_mesh(spec.domain, n, &spec.geom)?;
    let bases = build_bases(&mesh, spec.beta)?;
    let enrichment = enrichment_coefficients(&mesh, spec, params.orders.segment)?;
    let system = assemble(&mesh, &bases, spec, params, &enrichment)?;
    let (x, stats) = solve(&system, params)?;
    let mut nodal = system.dirichlet_values.clone();
    for (dof, &node) in mesh.dof_nodes.iter().enumerate() {
        nodal[node] = x[dof];
    }
    if nodal.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverBreakdown("non-finite solution values".into()));
    }
    let function = DiscreteFunction {
        nodal,
        flux: enrichment.clone(),
    };
    Ok(Solution {
        mesh,
        bases,
        enrichment,
        system,
        function,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{domain, BuiltinExample};
    use crate::geometry::{Rect, SubdomainGeometry};

    /// All three interfaces lie outside `(−1, 1)²`.
    fn far_rays() -> SubdomainGeometry {
        SubdomainGeometry::three_rays(Vec2::new(5.0, 5.0), [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)])
            .unwrap()
    }

    #[test]
    fn single_interior_node_matches_q1_stiffness() {
        let spec = ProblemSpec::constant(far_rays(), Rect::from_bounds(0.0, 0.0, 1.0, 1.0), [1.0; 3], 0.0).unwrap();
        let sol = solve_problem(&spec, 2, &SchemeParams::default()).unwrap();
        assert_eq!(sol.system.matrix.nrows, 1);
        // Four unit squares, each contributing the Q1 diagonal entry 2/3.
        assert!((sol.system.matrix.get(0, 0) - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn constants_are_reproduced() {
        for ex in [BuiltinExample::StraightLines, BuiltinExample::CircleAndLine] {
            for beta in [[10.0, 1.0, 100.0], [100.0, 10000.0, 1.0], [1e6, 100.0, 10.0]] {
                let spec = ProblemSpec::constant(ex.geometry(), domain(), beta, 2.5).unwrap();
                let mut schemes = vec![SchemeParams::galerkin()];
                for eps in [-1, 0, 1] {
                    schemes.push(SchemeParams {
                        epsilon: eps,
                        ..Default::default()
                    });
                }
                for params in schemes {
                    let sol = solve_problem(&spec, 16, &params).unwrap();
                    let err = sol.function.nodal.iter().map(|v| (v - 2.5).abs()).fold(0.0, f64::max);
                    // At contrast 1e5 rounding in the assembled row sums alone is about 1e-10.
                    let tol = if beta[0] > 1e5 { 1e-9 } else { 1e-11 };
                    assert!(err < tol, "{ex} {beta:?} {params:?}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn symmetric_variant_is_symmetric() {
        for ex in [BuiltinExample::StraightLines, BuiltinExample::CircleAndLine] {
            let spec = ex.problem([10.0, 1.0, 100.0]).unwrap();
            let mesh = crate::mesh::build_mesh(spec.domain, 32, &spec.geom).unwrap();
            let bases = build_bases(&mesh, spec.beta).unwrap();
            let q = enrichment_coefficients(&mesh, &spec, 5).unwrap();
            let sys = assemble(&mesh, &bases, &spec, &SchemeParams::default(), &q).unwrap();
            assert!(sys.matrix.relative_asymmetry() < 1e-12);
            let nonsym = SchemeParams {
                epsilon: 1,
                ..Default::default()
            };
            let sys = assemble(&mesh, &bases, &spec, &nonsym, &q).unwrap();
            assert!(sys.matrix.relative_asymmetry() > 1e-8);
        }
    }

    #[test]
    fn galerkin_and_ppifem_agree_without_interfaces() {
        let spec = ProblemSpec::constant(far_rays(), domain(), [3.0, 3.0, 3.0], 1.0).unwrap();
        let mesh = crate::mesh::build_mesh(spec.domain, 8, &spec.geom).unwrap();
        assert_eq!(mesh.class_counts()[0], 64);
        let bases = build_bases(&mesh, spec.beta).unwrap();
        let q = enrichment_coefficients(&mesh, &spec, 5).unwrap();
        let a = assemble(&mesh, &bases, &spec, &SchemeParams::default(), &q).unwrap();
        let b = assemble(&mesh, &bases, &spec, &SchemeParams::galerkin(), &q).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn edge_terms_touch_only_interface_edge_nodes() {
        let spec = BuiltinExample::StraightLines.problem([10.0, 1.0, 100.0]).unwrap();
        let mesh = crate::mesh::build_mesh(spec.domain, 16, &spec.geom).unwrap();
        let bases = build_bases(&mesh, spec.beta).unwrap();
        let q = enrichment_coefficients(&mesh, &spec, 5).unwrap();
        let a = assemble(&mesh, &bases, &spec, &SchemeParams::default(), &q).unwrap();
        let b = assemble(&mesh, &bases, &spec, &SchemeParams::galerkin(), &q).unwrap();
        let mut touched = vec![false; mesh.node_count()];
        for g in mesh.interior_interface_edges() {
            for e in mesh.edges[g].elements.iter().flatten() {
                for n in mesh.element_nodes(*e) {
                    touched[n] = true;
                }
            }
        }
        for (row, &node) in mesh.dof_nodes.iter().enumerate() {
            if !touched[node] {
                for (col, v) in a.matrix.row(row) {
                    assert!((v - b.matrix.get(row, col)).abs() <= 1e-13 * v.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn coarse_example_one_solve() {
        let spec = BuiltinExample::StraightLines.problem([10.0, 1.0, 100.0]).unwrap();
        let sol = solve_problem(&spec, 16, &SchemeParams::default()).unwrap();
        assert_eq!(sol.stats.method, "cg");
        let report = crate::analysis::solution_errors(&spec, &SchemeParams::default(), &sol).unwrap();
        // Nodal error of the coarsest mesh is 2.70e-2 in the reference results.
        assert!(report.linf > 2.70e-2 / 3.0 && report.linf < 2.70e-2 * 3.0, "{report:?}");
    }

    #[test]
    fn dirichlet_identity_system() {
        let m = CsrMatrix::identity(3);
        let sys = SparseSystem {
            matrix: m,
            rhs: vec![1.0, -2.0, 3.0],
            dirichlet_values: vec![],
        };
        let (x, _) = solve(&sys, &SchemeParams::default()).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
    }
}
