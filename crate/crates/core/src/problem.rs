//! Problem data: geometry, coefficients, source, flux jumps, boundary data and
//! an optional exact solution.

use std::fmt;
use std::sync::Arc;

use crate::cut::nudge_classify;
use crate::error::{Error, Result};
use crate::geometry::{InterfaceId, Rect, Subdomain, SubdomainGeometry, Vec2};
use crate::quadrature::QuadOrders;

/// Piecewise-smooth exact solution, one smooth branch per subdomain.
///
/// Branches are evaluated slightly outside their own subdomain (at quadrature
/// points of approximate pieces), so they should extend smoothly.
pub trait ExactSolution: Send + Sync + fmt::Debug {
    fn value(&self, s: Subdomain, p: Vec2) -> f64;
    fn gradient(&self, s: Subdomain, p: Vec2) -> Vec2;
    fn laplacian(&self, s: Subdomain, p: Vec2) -> f64;
}

pub type SourceFn = Arc<dyn Fn(Subdomain, Vec2) -> f64 + Send + Sync>;
pub type FluxJumpFn = Arc<dyn Fn(InterfaceId, Vec2) -> f64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec {
    pub geom: SubdomainGeometry,
    pub domain: Rect,
    pub beta: [f64; 3],
    /// Source `f` evaluated on the branch of the given subdomain.
    pub source: SourceFn,
    /// Flux jump `b_k = [β∇u·n_k]` on interface `k`.
    pub flux_jump: FluxJumpFn,
    /// Dirichlet data.
    pub boundary: BoundaryFn,
    pub exact: Option<Arc<dyn ExactSolution>>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("geom", &self.geom)
            .field("domain", &self.domain)
            .field("beta", &self.beta)
            .field("exact", &self.exact)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Source, flux jumps and boundary data manufactured from `exact`:
    /// `f = −β Δu`, `b_k = β⁺∇u⁺·n − β⁻∇u⁻·n`, `g = u`.
    pub fn manufactured(geom: SubdomainGeometry, domain: Rect, beta: [f64; 3], exact: Arc<dyn ExactSolution>) -> Result<Self> {
        let u = exact.clone();
        let source: SourceFn = Arc::new(move |s, p| -beta[s.index()] * u.laplacian(s, p));
        let u = exact.clone();
        let g = geom.clone();
        let flux_jump: FluxJumpFn = Arc::new(move |iface, p| {
            let (minus, plus) = iface.sides();
            let n = g.interface_normal(iface, p);
            (beta[plus.index()] * u.gradient(plus, p) - beta[minus.index()] * u.gradient(minus, p)).dot(&n)
        });
        let u = exact.clone();
        let g = geom.clone();
        let center = domain.center();
        let boundary: BoundaryFn = Arc::new(move |p| match nudge_classify(&g, p, center) {
            Ok(s) => u.value(s, p),
            // Nudging only fails on degenerate geometry; fall back to the first branch.
            Err(_) => u.value(Subdomain::Omega1, p),
        });
        let spec = ProblemSpec {
            geom,
            domain,
            beta,
            source,
            flux_jump,
            boundary,
            exact: Some(exact),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `u ≡ c` with zero source and flux jumps.
    pub fn constant(geom: SubdomainGeometry, domain: Rect, beta: [f64; 3], c: f64) -> Result<Self> {
        Self::manufactured(geom, domain, beta, Arc::new(Constant(c)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidInput(format!("coefficients must be positive, got {:?}", self.beta)));
        }
        if !(self.domain.width() > 0.0 && self.domain.height() > 0.0) {
            return Err(Error::InvalidInput("domain must have positive extent".into()));
        }
        Ok(())
    }

    pub fn exact(&self) -> Result<&Arc<dyn ExactSolution>> {
        self.exact.as_ref().ok_or(Error::MissingExactSolution)
    }

    /// Coefficient of subdomain `s`.
    pub fn beta_of(&self, s: Subdomain) -> f64 {
        self.beta[s.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl ExactSolution for Constant {
    fn value(&self, _s: Subdomain, _p: Vec2) -> f64 {
        self.0
    }

    fn gradient(&self, _s: Subdomain, _p: Vec2) -> Vec2 {
        Vec2::zeros()
    }

    fn laplacian(&self, _s: Subdomain, _p: Vec2) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Galerkin IFE with consistency, symmetry and penalty terms on interface edges.
    Ppifem,
    /// Plain Galerkin IFE (volume term only).
    Galerkin,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ppifem => "ppifem",
            Scheme::Galerkin => "galerkin",
        })
    }
}

/// Default penalty scale. Larger values pull the discrete solution towards
/// the edge jumps of the enrichment and degrade pointwise accuracy; smaller
/// ones can leave the symmetric matrix indefinite at high contrast.
pub const DEFAULT_SIGMA0: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeParams {
    pub scheme: Scheme,
    /// `−1` symmetric, `0` incomplete, `1` nonsymmetric.
    pub epsilon: i8,
    /// Penalty scale; the edge penalty is `sigma0 · max β`.
    pub sigma0: f64,
    pub orders: QuadOrders,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            scheme: Scheme::Ppifem,
            epsilon: -1,
            sigma0: DEFAULT_SIGMA0,
            orders: QuadOrders::default(),
        }
    }
}

impl SchemeParams {
    pub fn galerkin() -> Self {
        SchemeParams {
            scheme: Scheme::Galerkin,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.epsilon, -1..=1) {
            return Err(Error::InvalidInput(format!("epsilon must be -1, 0 or 1, got {}", self.epsilon)));
        }
        if self.scheme == Scheme::Ppifem && !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        self.orders.validate()
    }

    /// Edge penalty `σ_e`.
    pub fn penalty(&self, beta: [f64; 3]) -> f64 {
        self.sigma0 * beta.iter().copied().fold(0.0, f64::max)
    }
}
