//! Built-in test problems on `(−1, 1)²`.
//!
//! Example 1 has three straight interfaces meeting at one point; Example 2 has
//! a circle cut by a line, giving two triple points. Both exact solutions
//! vanish on every interface, so the solution is continuous while its flux
//! jumps are generally nonzero.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    CircleLevelSet, InterfaceLevelSet, LevelSet, LinearLevelSet, Rect, RegionRule, Subdomain, SubdomainGeometry, Vec2,
};
use crate::problem::{ExactSolution, ProblemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinExample {
    StraightLines,
    CircleAndLine,
}

impl BuiltinExample {
    pub fn number(self) -> u8 {
        match self {
            BuiltinExample::StraightLines => 1,
            BuiltinExample::CircleAndLine => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(BuiltinExample::StraightLines),
            2 => Some(BuiltinExample::CircleAndLine),
            _ => None,
        }
    }

    pub fn geometry(self) -> SubdomainGeometry {
        match self {
            BuiltinExample::StraightLines => straight_lines_geometry(),
            BuiltinExample::CircleAndLine => circle_and_line_geometry(),
        }
    }

    pub fn exact(self, beta: [f64; 3]) -> Arc<dyn ExactSolution> {
        match self {
            BuiltinExample::StraightLines => Arc::new(StraightLinesSolution::new(beta)),
            BuiltinExample::CircleAndLine => Arc::new(CircleAndLineSolution { beta }),
        }
    }

    pub fn problem(self, beta: [f64; 3]) -> Result<ProblemSpec> {
        ProblemSpec::manufactured(self.geometry(), domain(), beta, self.exact(beta))
    }
}

impl fmt::Display for BuiltinExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for BuiltinExample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<u8>()
            .ok()
            .and_then(BuiltinExample::from_number)
            .ok_or_else(|| Error::InvalidInput(format!("unknown example '{s}', expected 1 or 2")))
    }
}

pub fn domain() -> Rect {
    Rect::from_bounds(-1.0, -1.0, 1.0, 1.0)
}

fn straight_lines() -> [LinearLevelSet; 3] {
    [
        LinearLevelSet::new(38.0 / 7.0, 1.0, -9.0 / 28.0),
        LinearLevelSet::new(5.25, 1.0, -0.3125),
        LinearLevelSet::new(1.0 / 19.0, 1.0, -1.0 / 19.0),
    ]
}

/// `Ω2` lies above the third line and right of the first; `Ω1` below the third
/// line and right of the second; `Ω3` fills the wedge on the left.
pub fn straight_lines_geometry() -> SubdomainGeometry {
    use Subdomain::*;
    let ls = straight_lines().map(|l| Arc::new(l) as Arc<dyn LevelSet>);
    let rule = RegionRule::split(
        2,
        RegionRule::split(1, RegionRule::Leaf(Omega3), RegionRule::Leaf(Omega1)),
        RegionRule::split(0, RegionRule::Leaf(Omega3), RegionRule::Leaf(Omega2)),
    );
    let interfaces = [
        InterfaceLevelSet {
            level_set: 0,
            plus_on_positive: false,
        },
        InterfaceLevelSet {
            level_set: 1,
            plus_on_positive: true,
        },
        InterfaceLevelSet {
            level_set: 2,
            plus_on_positive: true,
        },
    ];
    SubdomainGeometry::new(ls, rule, interfaces)
}

/// `Ω1` is the disc of radius 1/2; outside it the line `3x = 4y` separates
/// `Ω2` (below) from `Ω3` (above).
pub fn circle_and_line_geometry() -> SubdomainGeometry {
    use Subdomain::*;
    let ls: [Arc<dyn LevelSet>; 3] = [
        Arc::new(LinearLevelSet::new(3.0, -4.0, 0.0)),
        Arc::new(CircleLevelSet::new(Vec2::zeros(), 0.5, 1.0)),
        Arc::new(CircleLevelSet::new(Vec2::zeros(), 0.5, -1.0)),
    ];
    let rule = RegionRule::split(
        1,
        RegionRule::Leaf(Omega1),
        RegionRule::split(0, RegionRule::Leaf(Omega3), RegionRule::Leaf(Omega2)),
    );
    let interfaces = [0, 1, 2].map(|k| InterfaceLevelSet {
        level_set: k,
        plus_on_positive: false,
    });
    SubdomainGeometry::new(ls, rule, interfaces)
}

/// `u_i = sin(s_i · L_a L_b) / β_i` for a pair of the three lines per subdomain.
#[derive(Clone, Debug)]
pub struct StraightLinesSolution {
    pub beta: [f64; 3],
    lines: [LinearLevelSet; 3],
}

impl StraightLinesSolution {
    pub fn new(beta: [f64; 3]) -> Self {
        StraightLinesSolution {
            beta,
            lines: straight_lines(),
        }
    }

    /// Line pair and scale of the argument of the sine.
    fn factors(&self, s: Subdomain) -> (&LinearLevelSet, &LinearLevelSet, f64) {
        let [l1, l2, l3] = &self.lines;
        match s {
            Subdomain::Omega1 => (l3, l2, 1.0),
            Subdomain::Omega2 => (l3, l1, 1.0),
            Subdomain::Omega3 => (l1, l2, 0.1),
        }
    }

    /// Argument `g`, its gradient and Laplacian.
    fn argument(&self, s: Subdomain, p: Vec2) -> (f64, Vec2, f64) {
        let (la, lb, k) = self.factors(s);
        let (va, vb) = (la.value(p), lb.value(p));
        let (ga, gb) = (la.gradient(p), lb.gradient(p));
        (k * va * vb, (gb * va + ga * vb) * k, 2.0 * k * ga.dot(&gb))
    }
}

impl ExactSolution for StraightLinesSolution {
    fn value(&self, s: Subdomain, p: Vec2) -> f64 {
        self.argument(s, p).0.sin() / self.beta[s.index()]
    }

    fn gradient(&self, s: Subdomain, p: Vec2) -> Vec2 {
        let (g, dg, _) = self.argument(s, p);
        dg * (g.cos() / self.beta[s.index()])
    }

    fn laplacian(&self, s: Subdomain, p: Vec2) -> f64 {
        let (g, dg, lg) = self.argument(s, p);
        (g.cos() * lg - g.sin() * dg.norm_squared()) / self.beta[s.index()]
    }
}

/// Radial, product and logarithmic branches vanishing on the circle and the line.
#[derive(Clone, Debug)]
pub struct CircleAndLineSolution {
    pub beta: [f64; 3],
}

impl CircleAndLineSolution {
    /// `(β u, ∇(β u), Δ(β u))`.
    fn scaled(&self, s: Subdomain, p: Vec2) -> (f64, Vec2, f64) {
        let r2 = p.norm_squared();
        let line = 3.0 * p.x - 4.0 * p.y;
        let dline = Vec2::new(3.0, -4.0);
        match s {
            Subdomain::Omega1 => {
                let r = r2.sqrt();
                (r2 * r - 0.125, p * (3.0 * r), 9.0 * r)
            }
            Subdomain::Omega2 => {
                let (sn, cs) = line.sin_cos();
                let q = r2 - 0.25;
                let value = q * sn;
                let grad = p * (2.0 * sn) + dline * (q * cs);
                let lap = 4.0 * sn + 4.0 * line * cs - 25.0 * q * sn;
                (value, grad, lap)
            }
            Subdomain::Omega3 => {
                let sv = r2 + 0.75;
                let value = line * sv.ln();
                let grad = dline * sv.ln() + p * (2.0 * line / sv);
                let lap = 4.0 * line * (1.0 / sv + 0.75 / (sv * sv));
                (value, grad, lap)
            }
        }
    }
}

impl ExactSolution for CircleAndLineSolution {
    fn value(&self, s: Subdomain, p: Vec2) -> f64 {
        self.scaled(s, p).0 / self.beta[s.index()]
    }

    fn gradient(&self, s: Subdomain, p: Vec2) -> Vec2 {
        self.scaled(s, p).1 / self.beta[s.index()]
    }

    fn laplacian(&self, s: Subdomain, p: Vec2) -> f64 {
        self.scaled(s, p).2 / self.beta[s.index()]
    }
}
