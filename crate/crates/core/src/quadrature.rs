//! Gauss–Legendre rules on segments, symmetric rules on triangles and
//! fan-triangulated rules on cut polygons.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const MAX_ORDER: usize = 10;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }
}

/// Per-integral-type orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadOrders {
    pub volume: usize,
    pub segment: usize,
    pub error: usize,
}

impl Default for QuadOrders {
    fn default() -> Self {
        QuadOrders {
            volume: 4,
            segment: 5,
            error: 5,
        }
    }
}

impl QuadOrders {
    pub fn uniform(order: usize) -> Self {
        QuadOrders {
            volume: order,
            segment: order,
            error: order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, o) in [("volume", self.volume), ("segment", self.segment), ("error", self.error)] {
            check_order(o).map_err(|_| Error::InvalidInput(format!("{name} quadrature order {o} not in [1, {MAX_ORDER}]")))?;
        }
        Ok(())
    }
}

fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("quadrature order {order} not in [1, {MAX_ORDER}]")))
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (1..=2 * MAX_ORDER).map(compute_gauss_legendre).collect());
    &table[n - 1]
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `order`-point Gauss–Legendre rule on the segment `[a, b]`; exact to degree `2·order − 1`.
pub fn segment_rule(a: Vec2, b: Vec2, order: usize) -> Result<QuadRule> {
    check_order(order)?;
    let (nodes, weights) = gauss_legendre(order);
    let half = (b - a).norm() * 0.5;
    Ok(QuadRule {
        points: nodes.iter().map(|&s| a + (b - a) * (0.5 * (s + 1.0))).collect(),
        weights: weights.iter().map(|w| w * half).collect(),
    })
}

/// Barycentric points and weights (summing to one) on the reference triangle,
/// exact for total degree at least `order`.
fn triangle_barycentric(order: usize) -> &'static [([f64; 3], f64)] {
    static TABLE: OnceLock<Vec<Vec<([f64; 3], f64)>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (1..=MAX_ORDER).map(build_triangle_rule).collect());
    &table[order - 1]
}

fn build_triangle_rule(order: usize) -> Vec<([f64; 3], f64)> {
    let orbit3 = |a: f64, w: f64| {
        let b = 1.0 - 2.0 * a;
        vec![([a, a, b], w), ([a, b, a], w), ([b, a, a], w)]
    };
    match order {
        1 => vec![([1.0 / 3.0; 3], 1.0)],
        2 => orbit3(1.0 / 6.0, 1.0 / 3.0),
        3..=5 => {
            // Radon's seven-point degree-5 rule.
            let s15 = 15f64.sqrt();
            let mut rule = vec![([1.0 / 3.0; 3], 9.0 / 40.0)];
            rule.extend(orbit3((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0));
            rule.extend(orbit3((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0));
            rule
        }
        _ => {
            // Collapsed (conical product) Gauss rule.
            let n = (order + 2).div_ceil(2);
            let (nodes, weights) = gauss_legendre(n);
            let mut rule = Vec::with_capacity(n * n);
            for (&su, &wu) in nodes.iter().zip(weights) {
                let u = 0.5 * (su + 1.0);
                for (&sv, &wv) in nodes.iter().zip(weights) {
                    let v = 0.5 * (sv + 1.0);
                    let lb = u;
                    let lc = v * (1.0 - u);
                    // 2 · (1/2)(1/2) · Jacobian (1 − u)
                    rule.push(([1.0 - lb - lc, lb, lc], 0.5 * wu * wv * (1.0 - u)));
                }
            }
            rule
        }
    }
}

pub fn triangle_rule(a: Vec2, b: Vec2, c: Vec2, order: usize) -> Result<QuadRule> {
    check_order(order)?;
    let mut rule = QuadRule::default();
    push_triangle(&mut rule, a, b, c, order);
    Ok(rule)
}

fn push_triangle(rule: &mut QuadRule, a: Vec2, b: Vec2, c: Vec2, order: usize) {
    let area = 0.5 * cross(b - a, c - a).abs();
    for (l, w) in triangle_barycentric(order) {
        rule.points.push(a * l[0] + b * l[1] + c * l[2]);
        rule.weights.push(w * area);
    }
}

pub(crate) fn cross(u: Vec2, v: Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Signed shoelace area (positive for counter-clockwise polygons).
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() * 0.5
}

pub fn polygon_centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let origin = poly[0];
    let mut acc = Vec2::zeros();
    let mut area2 = 0.0;
    for i in 0..n {
        let p = poly[i] - origin;
        let q = poly[(i + 1) % n] - origin;
        let c = cross(p, q);
        area2 += c;
        acc += (p + q) * c;
    }
    if area2.abs() < f64::MIN_POSITIVE {
        return poly.iter().sum::<Vec2>() / n as f64;
    }
    origin + acc / (3.0 * area2)
}

fn diameter_sq(poly: &[Vec2]) -> f64 {
    let mut lo = poly[0];
    let mut hi = poly[0];
    for p in poly {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm_squared()
}

/// Quadrature on a simple counter-clockwise polygon.
///
/// The polygon is fanned from its centroid; if any fan triangle comes out
/// inverted (non-star-shaped piece) it is ear-clipped instead.
pub fn polygon_rule(poly: &[Vec2], order: usize) -> Result<QuadRule> {
    check_order(order)?;
    if poly.len() < 3 {
        return Err(Error::DegeneratePolygon { area: 0.0 });
    }
    let area = polygon_area(poly);
    let scale = diameter_sq(poly);
    if area < 1e-14 * scale || area <= 0.0 {
        return Err(Error::DegeneratePolygon { area });
    }
    let mut rule = QuadRule::default();
    if poly.len() == 3 {
        push_triangle(&mut rule, poly[0], poly[1], poly[2], order);
        return Ok(rule);
    }
    let c = polygon_centroid(poly);
    let n = poly.len();
    let fan_ok = (0..n).all(|i| cross(poly[i] - c, poly[(i + 1) % n] - c) > -1e-14 * scale);
    if fan_ok {
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if cross(a - c, b - c) > 1e-15 * scale {
                push_triangle(&mut rule, c, a, b, order);
            }
        }
    } else {
        for [a, b, c] in ear_clip(poly)? {
            push_triangle(&mut rule, a, b, c, order);
        }
    }
    Ok(rule)
}

/// Triangulates a simple counter-clockwise polygon.
pub fn ear_clip(poly: &[Vec2]) -> Result<Vec<[Vec2; 3]>> {
    let scale = diameter_sq(poly);
    let eps = 1e-14 * scale;
    let mut verts: Vec<Vec2> = poly.to_vec();
    let mut tris = Vec::with_capacity(poly.len().saturating_sub(2));
    while verts.len() > 3 {
        let n = verts.len();
        let mut clipped = false;
        for i in 0..n {
            let (prev, cur, next) = (verts[(i + n - 1) % n], verts[i], verts[(i + 1) % n]);
            let turn = cross(cur - prev, next - cur);
            if turn.abs() <= eps {
                // Collinear vertex: dropping it leaves the region unchanged.
                verts.remove(i);
                clipped = true;
                break;
            }
            if turn < 0.0 {
                continue;
            }
            let blocked = verts.iter().enumerate().any(|(j, &p)| {
                j != i && j != (i + n - 1) % n && j != (i + 1) % n && point_in_triangle(p, prev, cur, next, eps)
            });
            if !blocked {
                tris.push([prev, cur, next]);
                verts.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::DegeneratePolygon {
                area: polygon_area(poly),
            });
        }
    }
    if verts.len() == 3 && cross(verts[1] - verts[0], verts[2] - verts[0]) > eps {
        tris.push([verts[0], verts[1], verts[2]]);
    }
    Ok(tris)
}

fn point_in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2, eps: f64) -> bool {
    cross(b - a, p - a) >= -eps && cross(c - b, p - b) >= -eps && cross(a - c, p - c) >= -eps
}
