//! Interpolation, error norms, convergence studies and error surfaces.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::assembly::{build_bases, enrichment_coefficients, solve_problem, Solution, SparseSystem};
use crate::basis::{eval_coeffs, locate_piece, LocalBasis};
use crate::cut::nudge_classify;
use crate::discrete::{locate_element, DiscreteFunction};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::mesh::{build_mesh, CartesianMesh};
use crate::problem::{ProblemSpec, SchemeParams};
use crate::quadrature::polygon_rule;

/// Error norms on one mesh and the rates against the previous one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub n: usize,
    pub linf: f64,
    pub l2: f64,
    pub h1: f64,
    pub rate_linf: Option<f64>,
    pub rate_l2: Option<f64>,
    pub rate_h1: Option<f64>,
}

impl ErrorReport {
    pub fn new(n: usize, linf: f64, l2: f64, h1: f64) -> Self {
        ErrorReport {
            n,
            linf,
            l2,
            h1,
            rate_linf: None,
            rate_l2: None,
            rate_h1: None,
        }
    }
}

/// `log2(prev / curr)` scaled by the refinement ratio; `None` unless both errors are positive.
pub fn rate(prev: f64, curr: f64, n_prev: usize, n_curr: usize) -> Option<f64> {
    (prev > 0.0 && curr > 0.0).then(|| (prev / curr).ln() / (n_curr as f64 / n_prev as f64).ln())
}

/// Fills the rate fields from consecutive reports.
pub fn attach_rates(reports: &mut [ErrorReport]) {
    for i in 1..reports.len() {
        let (a, b) = (reports[i - 1], reports[i]);
        reports[i].rate_linf = rate(a.linf, b.linf, a.n, b.n);
        reports[i].rate_l2 = rate(a.l2, b.l2, a.n, b.n);
        reports[i].rate_h1 = rate(a.h1, b.h1, a.n, b.n);
    }
}

/// Interpolant of the exact solution: nodal values plus the flux-jump integrals.
pub fn interpolate(mesh: &CartesianMesh, bases: &[LocalBasis], spec: &ProblemSpec, segment_order: usize) -> Result<DiscreteFunction> {
    let exact = spec.exact()?;
    let center = spec.domain.center();
    let nodal = (0..mesh.node_count())
        .map(|node| {
            let p = mesh.node_position(node);
            let s = nudge_classify(&spec.geom, p, center)?;
            Ok(exact.value(s, p))
        })
        .collect::<Result<Vec<f64>>>()?;
    let flux = enrichment_coefficients(mesh, spec, segment_order)?;
    debug_assert!(flux.iter().zip(bases).all(|(q, b)| q.len() == b.flux_count()));
    Ok(DiscreteFunction { nodal, flux })
}

/// L∞ at nodes, L2 and H1-seminorm by per-piece quadrature against the exact branch of each piece.
pub fn compute_errors(
    mesh: &CartesianMesh,
    bases: &[LocalBasis],
    spec: &ProblemSpec,
    u: &DiscreteFunction,
    order: usize,
) -> Result<ErrorReport> {
    let exact = spec.exact()?;
    let center = spec.domain.center();
    let mut linf: f64 = 0.0;
    for node in 0..mesh.node_count() {
        let p = mesh.node_position(node);
        let s = nudge_classify(&spec.geom, p, center)?;
        linf = linf.max((u.nodal[node] - exact.value(s, p)).abs());
    }
    let sums = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| -> Result<(f64, f64)> {
            let cut = &mesh.cuts[e];
            let coeffs = u.piece_coeffs(mesh, bases, e);
            let mut l2 = 0.0;
            let mut h1 = 0.0;
            for (pi, piece) in cut.pieces.iter().enumerate() {
                let rule = polygon_rule(&piece.polygon, order)?;
                for (p, w) in rule.iter() {
                    let (v, g) = eval_coeffs(&coeffs[pi], &cut.rect, p);
                    l2 += w * (v - exact.value(piece.label, p)).powi(2);
                    h1 += w * (g - exact.gradient(piece.label, p)).norm_squared();
                }
            }
            Ok((l2, h1))
        })
        .collect::<Result<Vec<_>>>()?;
    let (l2, h1) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok(ErrorReport::new(mesh.n, linf, l2.sqrt(), h1.sqrt()))
}

/// Interpolation errors on each mesh in `ns`.
pub fn interpolation_study(spec: &ProblemSpec, params: &SchemeParams, ns: &[usize]) -> Result<Vec<ErrorReport>> {
    let mut reports = ns
        .iter()
        .map(|&n| {
            let mesh = build_mesh(spec.domain, n, &spec.geom)?;
            let bases = build_bases(&mesh, spec.beta)?;
            let u = interpolate(&mesh, &bases, spec, params.orders.segment)?;
            compute_errors(&mesh, &bases, spec, &u, params.orders.error)
        })
        .collect::<Result<Vec<_>>>()?;
    attach_rates(&mut reports);
    Ok(reports)
}

/// Solve and measure on each mesh in `ns`.
pub fn convergence_study(spec: &ProblemSpec, params: &SchemeParams, ns: &[usize]) -> Result<Vec<ErrorReport>> {
    let mut reports = Vec::with_capacity(ns.len());
    for &n in ns {
        let sol = solve_problem(spec, n, params)?;
        reports.push(solution_errors(spec, params, &sol)?);
    }
    attach_rates(&mut reports);
    Ok(reports)
}

pub fn solution_errors(spec: &ProblemSpec, params: &SchemeParams, sol: &Solution) -> Result<ErrorReport> {
    compute_errors(&sol.mesh, &sol.bases, spec, &sol.function, params.orders.error)
}

/// `n_start, 2 n_start, …` with `refinements` entries.
pub fn doubling(n_start: usize, refinements: usize) -> Vec<usize> {
    (0..refinements).map(|k| n_start << k).collect()
}

/// Errors table with header `n,linf,rate_linf,l2,rate_l2,h1,rate_h1`.
pub fn errors_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from("n,linf,rate_linf,l2,rate_l2,h1,rate_h1\n");
    let r = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
    for e in reports {
        let _ = writeln!(
            out,
            "{},{:.6e},{},{:.6e},{},{:.6e},{}",
            e.n,
            e.linf,
            r(e.rate_linf),
            e.l2,
            r(e.rate_l2),
            e.h1,
            r(e.rate_h1)
        );
    }
    out
}

/// Human-readable rate table.
pub fn format_table(reports: &[ErrorReport]) -> String {
    let mut out = format!(
        "{:>6} {:>12} {:>6} {:>12} {:>6} {:>12} {:>6}\n",
        "N", "Linf", "rate", "L2", "rate", "H1", "rate"
    );
    let r = |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_default();
    for e in reports {
        let _ = writeln!(
            out,
            "{:>6} {:>12.3e} {:>6} {:>12.3e} {:>6} {:>12.3e} {:>6}",
            e.n,
            e.linf,
            r(e.rate_linf),
            e.l2,
            r(e.rate_l2),
            e.h1,
            r(e.rate_h1)
        );
    }
    out
}

/// What to sample on the surface grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceField {
    Solution,
    Error,
}

/// One grid sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    /// The sample lies in an interface element.
    pub near_interface: bool,
}

/// Samples on a uniform `(4n + 1) × (4n + 1)` grid, row-major in `y`.
pub fn sample_surface(
    mesh: &CartesianMesh,
    bases: &[LocalBasis],
    spec: &ProblemSpec,
    u: &DiscreteFunction,
    field: SurfaceField,
) -> Result<Vec<SurfacePoint>> {
    let exact = match field {
        SurfaceField::Error => Some(spec.exact()?),
        SurfaceField::Solution => None,
    };
    let m = 4 * mesh.n;
    let d = &spec.domain;
    let coord = |k: usize, lo: f64, hi: f64| if k == m { hi } else { lo + (hi - lo) * k as f64 / m as f64 };
    (0..(m + 1) * (m + 1))
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % (m + 1), idx / (m + 1));
            let p = Vec2::new(coord(i, d.min.x, d.max.x), coord(j, d.min.y, d.max.y));
            let e = locate_element(mesh, p)?;
            let cut = &mesh.cuts[e];
            let piece = locate_piece(cut, p)?;
            let coeffs = u.piece_coeffs(mesh, bases, e);
            let value = eval_coeffs(&coeffs[piece], &cut.rect, p).0;
            let value = match exact {
                Some(ex) => value - ex.value(cut.pieces[piece].label, p),
                None => value,
            };
            Ok(SurfacePoint {
                x: p.x,
                y: p.y,
                value,
                near_interface: cut.is_interface(),
            })
        })
        .collect()
}

/// Surface CSV with header `x,y,value`.
pub fn surface_csv(points: &[SurfacePoint]) -> String {
    let mut out = String::from("x,y,value\n");
    for s in points {
        let _ = writeln!(out, "{:.10e},{:.10e},{:.10e}", s.x, s.y, s.value);
    }
    out
}

/// Max `|value|` over all samples and over samples in interface elements.
pub fn surface_maxima(points: &[SurfacePoint]) -> (f64, f64) {
    points.iter().fold((0.0f64, 0.0f64), |(all, band), s| {
        let v = s.value.abs();
        (all.max(v), if s.near_interface { band.max(v) } else { band })
    })
}

/// Max-norm of `A x − b` on the reduced system with `x` the interpolant's interior values.
pub fn consistency_residual(mesh: &CartesianMesh, system: &SparseSystem, interpolant: &DiscreteFunction) -> f64 {
    let x: Vec<f64> = mesh.dof_nodes.iter().map(|&node| interpolant.nodal[node]).collect();
    let mut ax = vec![0.0; x.len()];
    system.matrix.mul_vec(&x, &mut ax);
    ax.iter().zip(&system.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
