//! Bilinear immersed finite elements with partial penalties for elliptic
//! interface problems on three subdomains meeting at triple junctions.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cut;
pub mod discrete;
pub mod error;
pub mod examples;
pub mod geometry;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod sparse;

pub use analysis::{compute_errors, convergence_study, interpolate, ErrorReport, SurfaceField};
pub use assembly::{solve_problem, Solution, SparseSystem};
pub use basis::{build_local_basis, BasisFn, Coeffs, LocalBasis};
pub use cut::{cut_element, scan_edge, CutClass, ElementCut, Piece, Segment, SegmentKind};
pub use discrete::DiscreteFunction;
pub use error::{Error, Result};
pub use examples::BuiltinExample;
pub use geometry::{
    CircleLevelSet, InterfaceId, InterfaceLevelSet, LevelSet, LinearLevelSet, Rect, RegionRule, Subdomain,
    SubdomainGeometry, Vec2,
};
pub use mesh::{build_mesh, CartesianMesh, Edge};
pub use problem::{ExactSolution, ProblemSpec, Scheme, SchemeParams, DEFAULT_SIGMA0};
pub use quadrature::{polygon_rule, segment_rule, QuadOrders, QuadRule};
pub use sparse::{CsrMatrix, SolveStats};
