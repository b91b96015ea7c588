use std::f64::consts::PI;

use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use ppifem_core::cut::BoundaryLocation;
use ppifem_core::examples::{self, BuiltinExample};
use ppifem_core::{build_mesh, solve_problem, CutClass, InterfaceId, SchemeParams, Subdomain, Vec2};

const BETA: [f64; 3] = [10.0, 1.0, 100.0];
const EXAMPLES: [BuiltinExample; 2] = [BuiltinExample::StraightLines, BuiltinExample::CircleAndLine];

#[test]
fn pieces_tile_their_element_and_carry_correct_labels() {
    for ex in EXAMPLES {
        let geom = ex.geometry();
        for n in [16, 32, 64] {
            let mesh = build_mesh(examples::domain(), n, &geom).unwrap();
            for (e, cut) in mesh.cuts.iter().enumerate() {
                let area: f64 = cut.pieces.iter().map(|p| p.area).sum();
                let full = cut.rect.area();
                assert!((area - full).abs() < 1e-12 * full, "{ex:?} n={n} e={e}: {area} vs {full}");
                if cut.pieces.len() > 1 {
                    for piece in &cut.pieces {
                        let c = piece.centroid();
                        assert_eq!(geom.classify_point(c).unwrap(), piece.label, "{ex:?} n={n} e={e}");
                    }
                }
            }
        }
    }
}

#[test]
fn circle_area_is_resolved() {
    let mesh = build_mesh(examples::domain(), 64, &BuiltinExample::CircleAndLine.geometry()).unwrap();
    let inside: f64 = mesh
        .cuts
        .iter()
        .flat_map(|c| c.pieces.iter())
        .filter(|p| p.label == Subdomain::Omega1)
        .map(|p| p.area)
        .sum();
    let exact = PI / 4.0;
    assert!((inside - exact).abs() < 0.02 * exact, "{inside}");
}

#[test]
fn junction_elements_have_three_boundary_crossings() {
    for ex in EXAMPLES {
        for n in [16, 32, 64, 128] {
            let mesh = build_mesh(examples::domain(), n, &ex.geometry()).unwrap();
            for e in mesh.elements_of(CutClass::TripleJunction) {
                let cut = &mesh.cuts[e];
                // Two interfaces may cross the same edge, so count crossings rather than edges.
                assert_eq!(cut.cut_points.len(), 3, "{ex:?} n={n} e={e}");
                let cut_edges = (0..4)
                    .filter(|&k| {
                        mesh.scans[mesh.element_edges(e)[k]].is_interface()
                            || cut.cut_points.iter().any(|c| match c.location {
                                BoundaryLocation::Node(i) => k == i || k == (i + 3) % 4,
                                BoundaryLocation::Edge(i) => i == k,
                            })
                    })
                    .count();
                assert!(cut_edges >= 2, "{ex:?} n={n} e={e}: {cut_edges}");
                let p = cut.triple_point.unwrap();
                assert!(cut.rect.contains(p, 0.0) && cut.rect.distance_to_boundary(p) > 0.0);
            }
        }
    }
}

#[test]
fn unknowns_are_interior_nodes() {
    for n in [4, 16, 33, 64] {
        let mesh = build_mesh(examples::domain(), n, &BuiltinExample::StraightLines.geometry()).unwrap();
        assert_eq!(mesh.dof_count(), (n - 1) * (n - 1));
        assert_eq!(mesh.node_count(), (n + 1) * (n + 1));
        assert_eq!(mesh.edges.len(), 2 * n * (n + 1));
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    for ex in EXAMPLES {
        let a = build_mesh(examples::domain(), 32, &ex.geometry()).unwrap();
        let b = build_mesh(examples::domain(), 32, &ex.geometry()).unwrap();
        assert_eq!(a.cuts, b.cuts);
        let spec = ex.problem(BETA).unwrap();
        let params = SchemeParams::default();
        let s1 = solve_problem(&spec, 16, &params).unwrap();
        let s2 = solve_problem(&spec, 16, &params).unwrap();
        assert_eq!(s1.function, s2.function);
        assert_eq!(s1.system.rhs, s2.system.rhs);
    }
}

fn fd_config() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        rng_seed: RngSeed::Fixed(7),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Five-point Laplacian, Richardson-extrapolated twice (sixth order).
fn fd_laplacian(u: impl Fn(Vec2) -> f64, p: Vec2) -> f64 {
    let second = |h: f64| {
        let (ex, ey) = (Vec2::new(h, 0.0), Vec2::new(0.0, h));
        (u(p + ex) + u(p - ex) + u(p + ey) + u(p - ey) - 4.0 * u(p)) / (h * h)
    };
    let h = 8e-3;
    let (d1, d2, d4) = (second(h), second(h / 2.0), second(h / 4.0));
    let (e1, e2) = ((4.0 * d2 - d1) / 3.0, (4.0 * d4 - d2) / 3.0);
    (16.0 * e2 - e1) / 15.0
}

fn fd_gradient(u: impl Fn(Vec2) -> f64, p: Vec2) -> Vec2 {
    let h = 1e-5;
    let (ex, ey) = (Vec2::new(h, 0.0), Vec2::new(0.0, h));
    Vec2::new(u(p + ex) - u(p - ex), u(p + ey) - u(p - ey)) / (2.0 * h)
}

proptest! {
    #![proptest_config(fd_config())]

    #[test]
    fn manufactured_data_matches_finite_differences(x in -1.0..1.0f64, y in -1.0..1.0f64, which in 0usize..2) {
        let ex = EXAMPLES[which];
        let spec = ex.problem(BETA).unwrap();
        let exact = ex.exact(BETA);
        let p = Vec2::new(x, y);
        for s in Subdomain::ALL {
            let u = |q: Vec2| exact.value(s, q);
            let g = exact.gradient(s, p);
            let g_fd = fd_gradient(u, p);
            prop_assert!((g - g_fd).norm() < 1e-8 * (1.0 + g.norm()), "{ex:?} {s:?}: {g:?} vs {g_fd:?}");
            let f = (spec.source)(s, p);
            let f_fd = -BETA[s.index()] * fd_laplacian(u, p);
            prop_assert!((f - f_fd).abs() < 1e-8 * (1.0 + f.abs()), "{ex:?} {s:?}: {f} vs {f_fd}");
        }
        for iface in InterfaceId::ALL {
            let (minus, plus) = iface.sides();
            let n = spec.geom.interface_normal(iface, p);
            let jump = BETA[plus.index()] * fd_gradient(|q| exact.value(plus, q), p)
                - BETA[minus.index()] * fd_gradient(|q| exact.value(minus, q), p);
            let b = (spec.flux_jump)(iface, p);
            prop_assert!((b - jump.dot(&n)).abs() < 1e-8 * (1.0 + b.abs()), "{ex:?} {iface:?}: {b}");
        }
    }
}
