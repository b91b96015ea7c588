//! Level-set description of a three-subdomain partition and the point-wise
//! queries built on it: classification, edge root finding and triple points.
//!
//! Interfaces follow a fixed orientation. `Γ1` separates `Ω2` (minus) from
//! `Ω3` (plus), `Γ2` separates `Ω3` from `Ω1` and `Γ3` separates `Ω1` from
//! `Ω2`. Normals always point from the minus side into the plus side, and a
//! flux jump is `(β∇u)|plus·n − (β∇u)|minus·n`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Points closer than this (in distance estimate `|φ|/|∇φ|`) to an interface are ambiguous.
pub const TOL_ON_SURFACE: f64 = 1e-12;

/// Number of uniform subintervals scanned for sign changes along an edge.
pub const EDGE_SCAN_INTERVALS: usize = 64;

/// Root tolerance in the edge parameter.
pub const EDGE_ROOT_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subdomain {
    Omega1,
    Omega2,
    Omega3,
}

impl Subdomain {
    pub const ALL: [Subdomain; 3] = [Subdomain::Omega1, Subdomain::Omega2, Subdomain::Omega3];

    /// Zero-based index.
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based label as used in the problem statement.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(n: usize) -> Option<Subdomain> {
        match n {
            1 => Some(Subdomain::Omega1),
            2 => Some(Subdomain::Omega2),
            3 => Some(Subdomain::Omega3),
            _ => None,
        }
    }
}

impl fmt::Display for Subdomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ω{}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InterfaceId {
    Gamma1,
    Gamma2,
    Gamma3,
}

impl InterfaceId {
    pub const ALL: [InterfaceId; 3] = [InterfaceId::Gamma1, InterfaceId::Gamma2, InterfaceId::Gamma3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }

    /// `(minus, plus)` subdomains of this interface.
    pub fn sides(self) -> (Subdomain, Subdomain) {
        match self {
            InterfaceId::Gamma1 => (Subdomain::Omega2, Subdomain::Omega3),
            InterfaceId::Gamma2 => (Subdomain::Omega3, Subdomain::Omega1),
            InterfaceId::Gamma3 => (Subdomain::Omega1, Subdomain::Omega2),
        }
    }

    /// The interface separating two distinct subdomains.
    pub fn between(a: Subdomain, b: Subdomain) -> Option<InterfaceId> {
        InterfaceId::ALL.into_iter().find(|iface| {
            let (m, p) = iface.sides();
            (m == a && p == b) || (m == b && p == a)
        })
    }
}

impl fmt::Display for InterfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Γ{}", self.number())
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Rect {
        Rect { min, max }
    }

    pub fn from_bounds(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
        Rect::new(Vec2::new(x0, y0), Vec2::new(x1, y1))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    /// Corners `A1..A4`, counter-clockwise from the lower-left one.
    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }

    /// Closed containment with absolute slack `tol`.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        p.x >= self.min.x - tol && p.x <= self.max.x + tol && p.y >= self.min.y - tol && p.y <= self.max.y + tol
    }

    pub fn distance_to_boundary(&self, p: Vec2) -> f64 {
        let dx = (p.x - self.min.x).min(self.max.x - p.x);
        let dy = (p.y - self.min.y).min(self.max.y - p.y);
        dx.min(dy)
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    /// Reference coordinates in `[0,1]²`.
    pub fn to_local(&self, p: Vec2) -> Vec2 {
        Vec2::new((p.x - self.min.x) / self.width(), (p.y - self.min.y) / self.height())
    }

    pub fn from_local(&self, q: Vec2) -> Vec2 {
        Vec2::new(self.min.x + q.x * self.width(), self.min.y + q.y * self.height())
    }
}

pub trait LevelSet: Send + Sync + fmt::Debug {
    fn value(&self, p: Vec2) -> f64;

    /// Defaults to a central difference.
    fn gradient(&self, p: Vec2) -> Vec2 {
        let h = 1e-6 * (1.0 + p.norm());
        let dx = Vec2::new(h, 0.0);
        let dy = Vec2::new(0.0, h);
        Vec2::new(
            (self.value(p + dx) - self.value(p - dx)) / (2.0 * h),
            (self.value(p + dy) - self.value(p - dy)) / (2.0 * h),
        )
    }
}

/// `a·x + b·y + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearLevelSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearLevelSet {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        LinearLevelSet { a, b, c }
    }

    /// Line through `point` whose positive side is to the left of `direction`.
    pub fn through(point: Vec2, direction: Vec2) -> Self {
        let normal = Vec2::new(-direction.y, direction.x);
        LinearLevelSet::new(normal.x, normal.y, -normal.dot(&point))
    }
}

impl LevelSet for LinearLevelSet {
    fn value(&self, p: Vec2) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }

    fn gradient(&self, _p: Vec2) -> Vec2 {
        Vec2::new(self.a, self.b)
    }
}

/// `sign·(|p − center|² − radius²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleLevelSet {
    pub center: Vec2,
    pub radius: f64,
    pub sign: f64,
}

impl CircleLevelSet {
    pub fn new(center: Vec2, radius: f64, sign: f64) -> Self {
        CircleLevelSet { center, radius, sign }
    }
}

impl LevelSet for CircleLevelSet {
    fn value(&self, p: Vec2) -> f64 {
        let d = p - self.center;
        self.sign * (d.x * d.x + d.y * d.y - self.radius * self.radius)
    }

    fn gradient(&self, p: Vec2) -> Vec2 {
        (p - self.center) * (2.0 * self.sign)
    }
}

/// Maps the sign vector of the three level sets to a subdomain.
#[derive(Clone, Debug, PartialEq)]
pub enum RegionRule {
    Leaf(Subdomain),
    Split {
        level_set: usize,
        negative: Box<RegionRule>,
        positive: Box<RegionRule>,
    },
}

impl RegionRule {
    pub fn split(level_set: usize, negative: RegionRule, positive: RegionRule) -> RegionRule {
        RegionRule::Split {
            level_set,
            negative: Box::new(negative),
            positive: Box::new(positive),
        }
    }

    /// `near[k]` marks level sets whose zero set is within tolerance of the point;
    /// when the decision depends on such a level set the result is `None`.
    fn evaluate(&self, values: &[f64; 3], near: &[bool; 3]) -> Option<Subdomain> {
        match self {
            RegionRule::Leaf(s) => Some(*s),
            RegionRule::Split {
                level_set,
                negative,
                positive,
            } => {
                if near[*level_set] {
                    let a = negative.evaluate(values, near)?;
                    let b = positive.evaluate(values, near)?;
                    (a == b).then_some(a)
                } else if values[*level_set] > 0.0 {
                    positive.evaluate(values, near)
                } else {
                    negative.evaluate(values, near)
                }
            }
        }
    }
}

/// Which level set carries an interface and on which side its plus subdomain lies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceLevelSet {
    pub level_set: usize,
    pub plus_on_positive: bool,
}

#[derive(Clone, Debug)]
pub struct SubdomainGeometry {
    pub level_sets: [Arc<dyn LevelSet>; 3],
    pub rule: RegionRule,
    pub interfaces: [InterfaceLevelSet; 3],
}

impl SubdomainGeometry {
    pub fn new(level_sets: [Arc<dyn LevelSet>; 3], rule: RegionRule, interfaces: [InterfaceLevelSet; 3]) -> Self {
        SubdomainGeometry {
            level_sets,
            rule,
            interfaces,
        }
    }

    /// Three straight interfaces emanating from a common point: `Γk` is the ray
    /// `junction + t·directions[k]`, `t > 0`.
    pub fn three_rays(junction: Vec2, directions: [Vec2; 3]) -> Result<Self> {
        let lines = directions.map(|d| LinearLevelSet::through(junction, d));
        let side = |line: usize, dir: usize| lines[line].value(junction + directions[dir]);
        // Pick the ray whose full line separates the other two.
        let pivot = (0..3)
            .find(|&m| {
                let (a, b) = ((m + 1) % 3, (m + 2) % 3);
                side(m, a) * side(m, b) < 0.0
            })
            .ok_or_else(|| Error::InvalidInput("rays must be pairwise non-parallel".into()))?;
        let common = |i: usize, j: usize| -> Subdomain {
            let (mi, pi) = InterfaceId::ALL[i].sides();
            let (mj, pj) = InterfaceId::ALL[j].sides();
            [mi, pi].into_iter().find(|s| *s == mj || *s == pj).expect("interfaces share a subdomain")
        };
        let branch = |a: usize, b: usize| -> RegionRule {
            // Within the half-plane holding ray `a`, the side of line `a` facing ray
            // `pivot` is the wedge (pivot, a); the other side belongs to wedge (a, b).
            let near_pivot = RegionRule::Leaf(common(pivot, a));
            let far = RegionRule::Leaf(common(a, b));
            if side(a, pivot) > 0.0 {
                RegionRule::split(a, far, near_pivot)
            } else {
                RegionRule::split(a, near_pivot, far)
            }
        };
        let (a, b) = ((pivot + 1) % 3, (pivot + 2) % 3);
        let rule = if side(pivot, a) > 0.0 {
            RegionRule::split(pivot, branch(b, a), branch(a, b))
        } else {
            RegionRule::split(pivot, branch(a, b), branch(b, a))
        };
        let mut interfaces = [InterfaceLevelSet {
            level_set: 0,
            plus_on_positive: true,
        }; 3];
        for (k, iface) in InterfaceId::ALL.into_iter().enumerate() {
            let (_, plus) = iface.sides();
            // Probe slightly off the ray on the positive side of its line.
            let normal = Vec2::new(lines[k].a, lines[k].b);
            let probe = junction + directions[k] + normal * 1e-3;
            let values = lines.map(|l| l.value(probe));
            let s = rule.evaluate(&values, &[false; 3]);
            interfaces[k] = InterfaceLevelSet {
                level_set: k,
                plus_on_positive: s == Some(plus),
            };
        }
        let level_sets: [Arc<dyn LevelSet>; 3] = lines.map(|l| Arc::new(l) as Arc<dyn LevelSet>);
        Ok(SubdomainGeometry::new(level_sets, rule, interfaces))
    }

    pub fn level_set_values(&self, p: Vec2) -> [f64; 3] {
        [
            self.level_sets[0].value(p),
            self.level_sets[1].value(p),
            self.level_sets[2].value(p),
        ]
    }

    /// Subdomain containing `p`.
    pub fn classify_point(&self, p: Vec2) -> Result<Subdomain> {
        let values = self.level_set_values(p);
        let mut near = [false; 3];
        for k in 0..3 {
            // Gradients are only needed close to the zero set.
            if values[k].abs() < 1e-6 {
                let g = self.level_sets[k].gradient(p).norm().max(f64::MIN_POSITIVE);
                near[k] = values[k].abs() / g < TOL_ON_SURFACE;
            }
        }
        self.rule
            .evaluate(&values, &near)
            .ok_or(Error::AmbiguousPoint { x: p.x, y: p.y })
    }

    /// Unit normal of interface `iface` at `p`, pointing from its minus to its plus side.
    pub fn interface_normal(&self, iface: InterfaceId, p: Vec2) -> Vec2 {
        let spec = self.interfaces[iface.index()];
        let g = self.level_sets[spec.level_set].gradient(p);
        let n = g / g.norm();
        if spec.plus_on_positive {
            n
        } else {
            -n
        }
    }

    /// Points where the zero set of interface `iface`'s level set crosses segment `[a, b]`.
    pub fn edge_intersections(&self, iface: InterfaceId, a: Vec2, b: Vec2) -> Result<Vec<Vec2>> {
        let ls = &*self.level_sets[self.interfaces[iface.index()].level_set];
        let roots = level_set_roots(ls, a, b)?;
        Ok(roots.into_iter().map(|t| a + (b - a) * t).collect())
    }

    /// Point where `φ1 = φ2 = 0` inside `element`, found by damped Newton from the center.
    pub fn locate_triple_point(&self, element: &Rect) -> Result<Vec2> {
        const MAX_ITER: usize = 50;
        let (f, g) = (&self.level_sets[0], &self.level_sets[1]);
        let residual = |p: Vec2| Vec2::new(f.value(p), g.value(p));
        let mut p = element.center();
        let mut r = residual(p);
        let mut converged = r.x.abs() + r.y.abs() < 1e-12;
        let mut iterations = 0;
        while !converged && iterations < MAX_ITER {
            iterations += 1;
            let (gf, gg) = (f.gradient(p), g.gradient(p));
            let jac = Matrix2::new(gf.x, gf.y, gg.x, gg.y);
            let Some(inv) = jac.try_inverse() else {
                return Err(Error::NoConvergence {
                    what: "triple point search",
                    iterations,
                });
            };
            let step = -(inv * r);
            let mut lambda = 1.0;
            let norm0 = r.norm();
            loop {
                let trial = p + step * lambda;
                let rt = residual(trial);
                if rt.norm() < norm0 || lambda < 1e-4 {
                    p = trial;
                    r = rt;
                    break;
                }
                lambda *= 0.5;
            }
            converged = r.x.abs() + r.y.abs() < 1e-12 || step.norm() * lambda < 1e-16 * (1.0 + p.norm());
        }
        if !converged || r.x.abs() + r.y.abs() > 1e-10 {
            return Err(Error::NoConvergence {
                what: "triple point search",
                iterations,
            });
        }
        let third = self.level_sets[2].value(p);
        if third.abs() > 1e-8 {
            return Err(Error::HypothesisViolation(format!(
                "third level set is {third:e} at the junction of the first two"
            )));
        }
        let slack = 1e-9 * element.width().max(element.height());
        if !element.contains(p, slack) {
            return Err(Error::TriplePointOutside { x: p.x, y: p.y });
        }
        Ok(element.clamp(p))
    }
}

/// Parameters `t ∈ (0,1)` where `ls` changes sign along `[a, b]`.
///
/// Sign changes are bracketed on a uniform scan and refined by bisection;
/// touching zeros without a sign change are ignored. More than two sign changes
/// violate hypothesis (H2).
pub fn level_set_roots(ls: &dyn LevelSet, a: Vec2, b: Vec2) -> Result<Vec<f64>> {
    let eval = |t: f64| ls.value(a + (b - a) * t);
    let n = EDGE_SCAN_INTERVALS;
    let mut roots = Vec::new();
    // (parameter, value) of the last sample with nonzero value
    let mut last: Option<(f64, f64)> = None;
    let mut zero_run: Option<(f64, f64)> = None;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let v = eval(t);
        if v == 0.0 {
            zero_run = Some(match zero_run {
                Some((start, _)) => (start, t),
                None => (t, t),
            });
            continue;
        }
        if let Some((tl, vl)) = last {
            if vl.signum() != v.signum() {
                let root = match zero_run {
                    Some((z0, z1)) => 0.5 * (z0 + z1),
                    None => bisect(&eval, tl, vl, t),
                };
                roots.push(root);
            }
        }
        zero_run = None;
        last = Some((t, v));
    }
    if roots.len() > 2 {
        return Err(Error::HypothesisViolation(format!(
            "{} crossings of one level set on the edge ({:.6}, {:.6})-({:.6}, {:.6})",
            roots.len(),
            a.x,
            a.y,
            b.x,
            b.y
        )));
    }
    Ok(roots)
}

fn bisect(eval: &impl Fn(f64) -> f64, mut lo: f64, v_lo: f64, mut hi: f64) -> f64 {
    let s_lo = v_lo.signum();
    while hi - lo > EDGE_ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = eval(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
