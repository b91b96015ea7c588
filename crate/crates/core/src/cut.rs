//! Element cuts: how the interfaces split one rectangular element into
//! labelled polygonal pieces joined by straight interface segments.
//!
//! The cut is derived from a counter-clockwise walk around the element
//! boundary. Every edge is scanned once (see [`scan_edge`]) in its canonical
//! direction, so two elements sharing an edge see bitwise identical
//! intersection points. Label changes along the walk ("transitions") decide the
//! element class:
//!
//! * no transition: regular element;
//! * two: one chord between them;
//! * three: three spokes meeting at the triple point, or two chords when the
//!   triple point sits on the element boundary;
//! * four: two chords, each cutting off one boundary arc.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{InterfaceId, Rect, Subdomain, SubdomainGeometry, Vec2};
use crate::quadrature::{polygon_area, polygon_centroid};

/// Pieces smaller than this fraction of the element are snapped away.
pub const AREA_EPSILON: f64 = 1e-10;

/// Breakpoints closer than this (in edge parameter) are merged; breakpoints
/// this close to an end point are moved onto the node.
pub const BREAKPOINT_MERGE: f64 = 1e-9;

/// Triple points closer than this (relative to `h`) to the boundary are treated as on it.
pub const JUNCTION_BOUNDARY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CutClass {
    Regular,
    OneInterface,
    TwoInterface,
    TripleJunction,
}

impl CutClass {
    /// Integer code used in classification maps.
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Number of flux-jump basis functions on such an element.
    pub fn flux_count(self) -> usize {
        match self {
            CutClass::Regular => 0,
            CutClass::OneInterface => 1,
            CutClass::TwoInterface => 2,
            CutClass::TripleJunction => 3,
        }
    }
}

impl fmt::Display for CutClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CutClass::Regular => "regular",
            CutClass::OneInterface => "one-interface",
            CutClass::TwoInterface => "two-interface",
            CutClass::TripleJunction => "triple-junction",
        };
        f.write_str(s)
    }
}

/// Intersection pattern of one mesh edge, in its canonical direction
/// (left to right for horizontal edges, bottom to top for vertical ones).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeScan {
    pub start: Vec2,
    pub end: Vec2,
    /// Interior breakpoints in `(0, 1)`, increasing.
    pub breakpoints: Vec<f64>,
    /// One label per interval; `None` when the interval lies along an interface.
    pub labels: Vec<Option<Subdomain>>,
}

impl EdgeScan {
    pub fn point(&self, t: f64) -> Vec2 {
        self.start + (self.end - self.start) * t
    }

    pub fn interval_count(&self) -> usize {
        self.labels.len()
    }

    /// Parameter range of interval `i`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        let t0 = if i == 0 { 0.0 } else { self.breakpoints[i - 1] };
        let t1 = if i == self.breakpoints.len() { 1.0 } else { self.breakpoints[i] };
        (t0, t1)
    }

    /// True when an interface crosses or touches the open edge.
    pub fn is_interface(&self) -> bool {
        self.labels.len() > 1
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

/// Scans the segment `[a, b]` for label changes.
pub fn scan_edge(geom: &SubdomainGeometry, a: Vec2, b: Vec2) -> Result<EdgeScan> {
    let mut roots = Vec::new();
    for ls in &geom.level_sets {
        roots.extend(crate::geometry::level_set_roots(ls.as_ref(), a, b)?);
    }
    roots.retain(|&t| t > BREAKPOINT_MERGE && t < 1.0 - BREAKPOINT_MERGE);
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    let mut cluster: Vec<f64> = Vec::new();
    for t in roots {
        if let Some(&last) = cluster.last() {
            if t - last > BREAKPOINT_MERGE {
                merged.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
                cluster.clear();
            }
        }
        cluster.push(t);
    }
    if !cluster.is_empty() {
        merged.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
    }

    let mut breakpoints = Vec::new();
    let mut labels = Vec::new();
    let mut t0 = 0.0;
    for i in 0..=merged.len() {
        let t1 = merged.get(i).copied().unwrap_or(1.0);
        let mid = a + (b - a) * (0.5 * (t0 + t1));
        let label = match geom.classify_point(mid) {
            Ok(s) => Some(s),
            Err(Error::AmbiguousPoint { .. }) => None,
            Err(e) => return Err(e),
        };
        if i > 0 && labels.last() == Some(&label) {
            // Root of a level set that does not separate subdomains here.
        } else {
            if i > 0 {
                breakpoints.push(t0);
            }
            labels.push(label);
        }
        t0 = t1;
    }
    if breakpoints.len() > 2 {
        return Err(Error::HypothesisViolation(format!(
            "{} interface crossings on the edge ({:.6}, {:.6})-({:.6}, {:.6})",
            breakpoints.len(),
            a.x,
            a.y,
            b.x,
            b.y
        )));
    }
    Ok(EdgeScan {
        start: a,
        end: b,
        breakpoints,
        labels,
    })
}

/// Where a cut point sits on the element boundary (local indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryLocation {
    /// Interior of local edge `k` (0 bottom, 1 right, 2 top, 3 left).
    Edge(usize),
    /// Node `k` (0 lower-left, counter-clockwise).
    Node(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutPoint {
    pub location: BoundaryLocation,
    pub position: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub label: Subdomain,
    /// Counter-clockwise vertices.
    pub polygon: Vec<Vec2>,
    pub area: f64,
}

impl Piece {
    pub fn centroid(&self) -> Vec2 {
        polygon_centroid(&self.polygon)
    }

    /// Closed point-in-polygon test with absolute slack `tol`.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let n = self.polygon.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            let e = b - a;
            let len = e.norm();
            if len > 0.0 {
                let s = ((p - a).dot(&e) / (len * len)).clamp(0.0, 1.0);
                if (a + e * s - p).norm() <= tol {
                    return true;
                }
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    /// Straight cut between two boundary points.
    Chord,
    /// Boundary point joined to the triple point.
    Spoke,
}

/// Straight-line approximation of an interface inside the element.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub interface: InterfaceId,
    pub start: Vec2,
    pub end: Vec2,
    pub kind: SegmentKind,
    pub minus_piece: usize,
    pub plus_piece: usize,
    /// Unit normal pointing from the minus piece into the plus piece.
    pub normal: Vec2,
    pub length: f64,
}

impl Segment {
    pub fn midpoint(&self) -> Vec2 {
        (self.start + self.end) * 0.5
    }
}

/// Part `[t0, t1]` (canonical edge parameter) of a local edge covered by one piece.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeArc {
    pub t0: f64,
    pub t1: f64,
    pub piece: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementCut {
    pub rect: Rect,
    pub class: CutClass,
    pub pieces: Vec<Piece>,
    pub cut_points: Vec<CutPoint>,
    pub triple_point: Option<Vec2>,
    pub segments: Vec<Segment>,
    /// Piece holding each node.
    pub node_piece: [usize; 4],
    /// Piece coverage of each local edge in canonical parameter order.
    pub edge_arcs: [Vec<EdgeArc>; 4],
}

impl ElementCut {
    /// Subdomain of a regular element.
    pub fn owning_subdomain(&self) -> Option<Subdomain> {
        (self.class == CutClass::Regular).then(|| self.pieces[0].label)
    }

    pub fn is_interface(&self) -> bool {
        self.class != CutClass::Regular
    }

    /// Piece containing `p`; ties on shared boundaries go to the first match.
    pub fn piece_at(&self, p: Vec2) -> Option<usize> {
        if self.pieces.len() == 1 {
            return Some(0);
        }
        let tol = 1e-12 * self.rect.width().max(self.rect.height());
        self.pieces.iter().position(|piece| piece.contains(p, 0.0)).or_else(|| {
            self.pieces
                .iter()
                .position(|piece| piece.contains(p, tol))
        })
    }

    /// Piece covering canonical parameter `t` of local edge `k`.
    pub fn edge_piece(&self, k: usize, t: f64) -> usize {
        let arcs = &self.edge_arcs[k];
        arcs.iter()
            .find(|a| t <= a.t1)
            .unwrap_or_else(|| arcs.last().expect("edge has at least one arc"))
            .piece
    }
}

/// Canonical endpoints of local edge `k`.
pub fn local_edge_endpoints(rect: &Rect, k: usize) -> (Vec2, Vec2) {
    let c = rect.corners();
    match k {
        0 => (c[0], c[1]),
        1 => (c[1], c[2]),
        2 => (c[3], c[2]),
        3 => (c[0], c[3]),
        _ => panic!("local edge index {k} out of range"),
    }
}

/// Cuts `rect`, scanning its four edges.
pub fn cut_element(geom: &SubdomainGeometry, rect: &Rect) -> Result<ElementCut> {
    let scans = (0..4)
        .map(|k| {
            let (a, b) = local_edge_endpoints(rect, k);
            scan_edge(geom, a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    cut_element_with_scans(geom, rect, [&scans[0], &scans[1], &scans[2], &scans[3]])
}

/// Cuts `rect` from precomputed edge scans (bottom, right, top, left in canonical direction).
pub fn cut_element_with_scans(geom: &SubdomainGeometry, rect: &Rect, scans: [&EdgeScan; 4]) -> Result<ElementCut> {
    let mut walk = BoundaryWalk::new(geom, rect, scans)?;
    // Each retry removes at least one arc, so four passes suffice.
    for _ in 0..4 {
        let layout = walk.layout(geom)?;
        let areas: Vec<f64> = layout.pieces.iter().map(|(poly, _)| polygon_area(poly)).collect();
        let tiny = areas
            .iter()
            .position(|&a| a < AREA_EPSILON * rect.area());
        match tiny {
            None => return walk.finish(layout, areas),
            Some(piece) => {
                let ratio = areas[piece] / rect.area();
                let arcs: Vec<usize> = (0..walk.arcs.len()).filter(|&i| layout.arc_piece[i] == piece).collect();
                if arcs.len() != 1 || walk.arcs.len() < 2 {
                    return Err(Error::DegenerateCut { ratio });
                }
                walk.absorb_arc(arcs[0]);
            }
        }
    }
    Err(Error::DegenerateCut { ratio: 0.0 })
}

#[derive(Clone, Debug)]
struct WalkInterval {
    edge: usize,
    /// Canonical parameters, `t0 < t1`.
    t0: f64,
    t1: f64,
    label: Subdomain,
}

impl WalkInterval {
    /// True when the counter-clockwise traversal of this interval starts at node `edge`.
    fn starts_at_node(&self) -> bool {
        if self.edge < 2 {
            self.t0 == 0.0
        } else {
            self.t1 == 1.0
        }
    }

    /// Canonical parameter of the counter-clockwise start.
    fn start_param(&self) -> f64 {
        if self.edge < 2 {
            self.t0
        } else {
            self.t1
        }
    }
}

#[derive(Clone, Debug)]
struct Arc {
    /// Index of the first interval.
    first: usize,
    len: usize,
    label: Subdomain,
}

struct BoundaryWalk<'a> {
    rect: Rect,
    scans: [&'a EdgeScan; 4],
    intervals: Vec<WalkInterval>,
    arcs: Vec<Arc>,
}

struct Layout {
    class: CutClass,
    pieces: Vec<(Vec<Vec2>, Subdomain)>,
    arc_piece: Vec<usize>,
    /// (start, end, kind, left piece, right piece)
    segments: Vec<(Vec2, Vec2, SegmentKind, usize, usize)>,
    triple_point: Option<Vec2>,
}

impl<'a> BoundaryWalk<'a> {
    fn new(geom: &SubdomainGeometry, rect: &Rect, scans: [&'a EdgeScan; 4]) -> Result<Self> {
        let center = rect.center();
        let mut intervals = Vec::new();
        for (k, scan) in scans.iter().enumerate() {
            let mut local: Vec<WalkInterval> = Vec::with_capacity(scan.interval_count());
            for i in 0..scan.interval_count() {
                let (t0, t1) = scan.interval(i);
                let label = match scan.labels[i] {
                    Some(s) => s,
                    None => {
                        let mid = scan.point(0.5 * (t0 + t1));
                        nudge_classify(geom, mid, center)?
                    }
                };
                local.push(WalkInterval { edge: k, t0, t1, label });
            }
            if k >= 2 {
                local.reverse();
            }
            intervals.extend(local);
        }
        let mut walk = BoundaryWalk {
            rect: *rect,
            scans,
            intervals,
            arcs: Vec::new(),
        };
        walk.rebuild_arcs();
        Ok(walk)
    }

    fn rebuild_arcs(&mut self) {
        let n = self.intervals.len();
        let label = |i: usize| self.intervals[i % n].label;
        let Some(start) = (0..n).find(|&i| label(i) != label(i + n - 1)) else {
            self.arcs = vec![Arc {
                first: 0,
                len: n,
                label: label(0),
            }];
            return;
        };
        let mut arcs: Vec<Arc> = Vec::new();
        for step in 0..n {
            let i = (start + step) % n;
            match arcs.last_mut() {
                Some(arc) if arc.label == label(i) => arc.len += 1,
                _ => arcs.push(Arc {
                    first: i,
                    len: 1,
                    label: label(i),
                }),
            }
        }
        self.arcs = arcs;
    }

    /// Relabels arc `i` with its predecessor's label.
    fn absorb_arc(&mut self, i: usize) {
        let m = self.arcs.len();
        let label = self.arcs[(i + m - 1) % m].label;
        let n = self.intervals.len();
        let arc = self.arcs[i].clone();
        for step in 0..arc.len {
            self.intervals[(arc.first + step) % n].label = label;
        }
        self.rebuild_arcs();
    }

    fn transition_count(&self) -> usize {
        if self.arcs.len() == 1 {
            0
        } else {
            self.arcs.len()
        }
    }

    /// Boundary point where arc `i` starts.
    fn transition(&self, i: usize) -> CutPoint {
        let iv = &self.intervals[self.arcs[i].first];
        if iv.starts_at_node() {
            CutPoint {
                location: BoundaryLocation::Node(iv.edge),
                position: self.rect.corners()[iv.edge],
            }
        } else {
            CutPoint {
                location: BoundaryLocation::Edge(iv.edge),
                position: self.scans[iv.edge].point(iv.start_param()),
            }
        }
    }

    /// Nodes strictly inside arc `i`.
    fn arc_nodes(&self, i: usize) -> Vec<Vec2> {
        let corners = self.rect.corners();
        let n = self.intervals.len();
        let arc = &self.arcs[i];
        (1..arc.len)
            .map(|step| &self.intervals[(arc.first + step) % n])
            .filter(|iv| iv.starts_at_node())
            .map(|iv| corners[iv.edge])
            .collect()
    }

    /// Transition `i` followed by the nodes of arc `i`.
    fn arc_path(&self, i: usize) -> Vec<Vec2> {
        let mut path = vec![self.transition(i).position];
        path.extend(self.arc_nodes(i));
        path
    }

    fn layout(&self, geom: &SubdomainGeometry) -> Result<Layout> {
        let m = self.transition_count();
        let t = |i: usize| self.transition(i % m).position;
        let label = |i: usize| self.arcs[i % m].label;
        match m {
            0 => Ok(Layout {
                class: CutClass::Regular,
                pieces: vec![(self.rect.corners().to_vec(), self.arcs[0].label)],
                arc_piece: vec![0],
                segments: Vec::new(),
                triple_point: None,
            }),
            2 => {
                let mut p0 = self.arc_path(0);
                p0.push(t(1));
                let mut p1 = self.arc_path(1);
                p1.push(t(0));
                Ok(Layout {
                    class: CutClass::OneInterface,
                    pieces: vec![(p0, label(0)), (p1, label(1))],
                    arc_piece: vec![0, 1],
                    segments: vec![(t(0), t(1), SegmentKind::Chord, 1, 0)],
                    triple_point: None,
                })
            }
            3 => {
                if label(0) == label(1) || label(1) == label(2) || label(0) == label(2) {
                    return Err(Error::HypothesisViolation(
                        "three boundary arcs without three distinct subdomains".into(),
                    ));
                }
                let h = self.rect.width().max(self.rect.height());
                let p = match geom.locate_triple_point(&self.rect) {
                    Ok(p) if self.rect.distance_to_boundary(p) > JUNCTION_BOUNDARY_TOL * h => {
                        return Ok(self.junction_layout(p));
                    }
                    Ok(p) => p,
                    Err(Error::TriplePointOutside { x, y }) => Vec2::new(x, y),
                    Err(e) => return Err(e),
                };
                let j = (0..3)
                    .min_by(|&a, &b| (t(a) - p).norm().total_cmp(&(t(b) - p).norm()))
                    .expect("three transitions");
                Ok(self.boundary_junction_layout(j))
            }
            4 => {
                let rotation = match (label(0) == label(2), label(1) == label(3)) {
                    (true, false) => 1,
                    (false, true) => 0,
                    (true, true) => {
                        let center = nudge_classify(geom, self.rect.center(), self.rect.corners()[0])?;
                        if center == label(0) {
                            1
                        } else {
                            0
                        }
                    }
                    (false, false) => {
                        return Err(Error::HypothesisViolation(
                            "four boundary arcs cannot be paired by two chords".into(),
                        ))
                    }
                };
                Ok(self.two_chord_layout(rotation))
            }
            _ => Err(Error::HypothesisViolation(format!(
                "{m} interface crossings on the element boundary"
            ))),
        }
    }

    /// Spokes from each transition to the interior triple point `p`.
    fn junction_layout(&self, p: Vec2) -> Layout {
        let t = |i: usize| self.transition(i % 3).position;
        let mut pieces = Vec::with_capacity(3);
        let mut segments = Vec::with_capacity(3);
        for i in 0..3 {
            let mut poly = self.arc_path(i);
            poly.push(t(i + 1));
            poly.push(p);
            pieces.push((poly, self.arcs[i].label));
            segments.push((t(i), p, SegmentKind::Spoke, (i + 2) % 3, i));
        }
        Layout {
            class: CutClass::TripleJunction,
            pieces,
            arc_piece: vec![0, 1, 2],
            segments,
            triple_point: Some(p),
        }
    }

    /// Triple point on the boundary at transition `j`: the other two
    /// transitions are joined to it by chords.
    fn boundary_junction_layout(&self, j: usize) -> Layout {
        let t = |i: usize| self.transition(i % 3).position;
        let (a, b, c) = (j, (j + 1) % 3, (j + 2) % 3);
        let mut pa = self.arc_path(a);
        pa.push(t(b));
        let mut pb = self.arc_path(b);
        pb.push(t(c));
        pb.push(t(a));
        let mut pc = self.arc_path(c);
        pc.push(t(a));
        let mut arc_piece = vec![0; 3];
        arc_piece[a] = 0;
        arc_piece[b] = 1;
        arc_piece[c] = 2;
        Layout {
            class: CutClass::TwoInterface,
            pieces: vec![
                (dedup_cyclic(pa), self.arcs[a].label),
                (dedup_cyclic(pb), self.arcs[b].label),
                (dedup_cyclic(pc), self.arcs[c].label),
            ],
            arc_piece,
            segments: vec![
                (t(b), t(a), SegmentKind::Chord, 0, 1),
                (t(c), t(a), SegmentKind::Chord, 1, 2),
            ],
            triple_point: None,
        }
    }

    /// Chords cutting off arcs `r` and `r + 2`; the middle piece holds the other two.
    fn two_chord_layout(&self, r: usize) -> Layout {
        let t = |i: usize| self.transition(i % 4).position;
        let (a, m1, c, m2) = (r, (r + 1) % 4, (r + 2) % 4, (r + 3) % 4);
        let mut pa = self.arc_path(a);
        pa.push(t(a + 1));
        let mut pc = self.arc_path(c);
        pc.push(t(c + 1));
        let mut pb = self.arc_path(m1);
        pb.push(t(c));
        pb.extend(self.arc_path(m2));
        pb.push(t(a));
        let mut arc_piece = vec![0; 4];
        arc_piece[a] = 0;
        arc_piece[m1] = 1;
        arc_piece[c] = 2;
        arc_piece[m2] = 1;
        Layout {
            class: CutClass::TwoInterface,
            pieces: vec![
                (pa, self.arcs[a].label),
                (pb, self.arcs[m1].label),
                (pc, self.arcs[c].label),
            ],
            arc_piece,
            segments: vec![
                (t(a), t(a + 1), SegmentKind::Chord, 1, 0),
                (t(c), t(c + 1), SegmentKind::Chord, 1, 2),
            ],
            triple_point: None,
        }
    }

    fn finish(&self, layout: Layout, areas: Vec<f64>) -> Result<ElementCut> {
        let m = self.transition_count();
        let n = self.intervals.len();
        let arc_of_interval = {
            let mut map = vec![0; n];
            for (a, arc) in self.arcs.iter().enumerate() {
                for step in 0..arc.len {
                    map[(arc.first + step) % n] = a;
                }
            }
            map
        };

        let mut node_piece = [0; 4];
        let mut edge_arcs: [Vec<EdgeArc>; 4] = Default::default();
        for (i, iv) in self.intervals.iter().enumerate() {
            let piece = layout.arc_piece[arc_of_interval[i]];
            if iv.starts_at_node() {
                node_piece[iv.edge] = piece;
            }
            edge_arcs[iv.edge].push(EdgeArc {
                t0: iv.t0,
                t1: iv.t1,
                piece,
            });
        }
        for arcs in &mut edge_arcs {
            arcs.sort_by(|a, b| a.t0.total_cmp(&b.t0));
            arcs.dedup_by(|next, prev| {
                if next.piece == prev.piece {
                    prev.t1 = next.t1;
                    true
                } else {
                    false
                }
            });
        }

        let pieces: Vec<Piece> = layout
            .pieces
            .into_iter()
            .zip(areas)
            .map(|((polygon, label), area)| Piece { label, polygon, area })
            .collect();

        let mut segments = Vec::with_capacity(layout.segments.len());
        for (start, end, kind, left, right) in layout.segments {
            let (ll, rl) = (pieces[left].label, pieces[right].label);
            let interface = InterfaceId::between(ll, rl).ok_or_else(|| {
                Error::HypothesisViolation(format!("segment with {ll} on both sides"))
            })?;
            let d = end - start;
            let length = d.norm();
            let left_normal = Vec2::new(-d.y, d.x) / length;
            let (_, plus) = interface.sides();
            let (minus_piece, plus_piece, normal) = if ll == plus {
                (right, left, left_normal)
            } else {
                (left, right, -left_normal)
            };
            segments.push(Segment {
                interface,
                start,
                end,
                kind,
                minus_piece,
                plus_piece,
                normal,
                length,
            });
        }

        Ok(ElementCut {
            rect: self.rect,
            class: layout.class,
            pieces,
            cut_points: (0..m).map(|i| self.transition(i)).collect(),
            triple_point: layout.triple_point,
            segments,
            node_piece,
            edge_arcs,
        })
    }
}

fn dedup_cyclic(mut poly: Vec<Vec2>) -> Vec<Vec2> {
    poly.dedup();
    while poly.len() > 1 && poly.first() == poly.last() {
        poly.pop();
    }
    poly
}

/// Classifies `p`, moving it towards `target` if it lies on an interface.
/// Slightly skewed directions are tried when the straight path runs along an interface.
pub(crate) fn nudge_classify(geom: &SubdomainGeometry, p: Vec2, target: Vec2) -> Result<Subdomain> {
    let d = target - p;
    let skew = Vec2::new(-d.y, d.x) * 0.3;
    let mut last = None;
    for dir in [d, d + skew, d - skew] {
        for step in [0.0, 1e-9, 1e-6, 1e-4, 1e-2] {
            match geom.classify_point(p + dir * step) {
                Ok(s) => return Ok(s),
                Err(e @ Error::AmbiguousPoint { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc as Shared;

    use super::*;
    use crate::geometry::{InterfaceLevelSet, LevelSet, LinearLevelSet, RegionRule};

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    /// `Ω1` below `y = c`, `Ω2` above, separated by `Γ3`.
    fn horizontal(c: f64) -> SubdomainGeometry {
        let ls: [Shared<dyn LevelSet>; 3] = [
            Shared::new(LinearLevelSet::new(0.0, 1.0, -c)),
            Shared::new(LinearLevelSet::new(0.0, 1.0, -c)),
            Shared::new(LinearLevelSet::new(0.0, 1.0, -c)),
        ];
        let rule = RegionRule::split(2, RegionRule::Leaf(Subdomain::Omega1), RegionRule::Leaf(Subdomain::Omega2));
        let iface = InterfaceLevelSet {
            level_set: 2,
            plus_on_positive: true,
        };
        SubdomainGeometry::new(ls, rule, [iface; 3])
    }

    fn quarter_planes() -> SubdomainGeometry {
        SubdomainGeometry::three_rays(Vec2::zeros(), [v(0.0, 1.0), v(-1.0, -1.0), v(1.0, 0.0)]).unwrap()
    }

    fn check_areas(cut: &ElementCut) {
        let total: f64 = cut.pieces.iter().map(|p| p.area).sum();
        assert!((total - cut.rect.area()).abs() < 1e-12 * cut.rect.area());
    }

    #[test]
    fn horizontal_cut_halves_the_square() {
        let cut = cut_element(&horizontal(0.5), &Rect::from_bounds(0.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(cut.class, CutClass::OneInterface);
        assert_eq!(cut.pieces.len(), 2);
        for p in &cut.pieces {
            assert!((p.area - 0.5).abs() < 1e-14);
        }
        let s = &cut.segments[0];
        assert_eq!(s.interface, InterfaceId::Gamma3);
        let ends = [s.start, s.end];
        assert!(ends.contains(&v(0.0, 0.5)) && ends.contains(&v(1.0, 0.5)));
        // Γ3 points from Ω1 into Ω2, i.e. upwards.
        assert!((s.normal - v(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(cut.pieces[s.minus_piece].label, Subdomain::Omega1);
        assert_eq!(cut.node_piece.map(|i| cut.pieces[i].label), [
            Subdomain::Omega1,
            Subdomain::Omega1,
            Subdomain::Omega2,
            Subdomain::Omega2
        ]);
    }

    #[test]
    fn interface_along_an_edge_is_regular() {
        let cut = cut_element(&horizontal(1.0), &Rect::from_bounds(0.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(cut.class, CutClass::Regular);
        assert_eq!(cut.owning_subdomain(), Some(Subdomain::Omega1));
        let above = cut_element(&horizontal(1.0), &Rect::from_bounds(0.0, 1.0, 1.0, 2.0)).unwrap();
        assert_eq!(above.owning_subdomain(), Some(Subdomain::Omega2));
    }

    #[test]
    fn triple_junction_at_center() {
        let cut = cut_element(&quarter_planes(), &Rect::from_bounds(-0.5, -0.5, 0.5, 0.5)).unwrap();
        assert_eq!(cut.class, CutClass::TripleJunction);
        assert_eq!(cut.pieces.len(), 3);
        assert_eq!(cut.segments.len(), 3);
        let p = cut.triple_point.unwrap();
        assert!(p.norm() < 1e-14);
        for s in &cut.segments {
            assert_eq!(s.end, p);
            assert_eq!(s.kind, SegmentKind::Spoke);
        }
        check_areas(&cut);
        let area_of = |s: Subdomain| cut.pieces.iter().find(|p| p.label == s).unwrap().area;
        assert!((area_of(Subdomain::Omega2) - 0.25).abs() < 1e-14);
        assert!((area_of(Subdomain::Omega1) - 0.375).abs() < 1e-14);
        assert!((area_of(Subdomain::Omega3) - 0.375).abs() < 1e-14);
    }

    #[test]
    fn normals_point_from_minus_to_plus_piece() {
        let cut = cut_element(&quarter_planes(), &Rect::from_bounds(-0.5, -0.5, 0.5, 0.5)).unwrap();
        for s in &cut.segments {
            let mid = s.midpoint();
            let plus = cut.piece_at(mid + s.normal * 1e-3).unwrap();
            let minus = cut.piece_at(mid - s.normal * 1e-3).unwrap();
            assert_eq!(plus, s.plus_piece);
            assert_eq!(minus, s.minus_piece);
            let (ms, ps) = s.interface.sides();
            assert_eq!(cut.pieces[plus].label, ps);
            assert_eq!(cut.pieces[minus].label, ms);
        }
    }

    #[test]
    fn junction_on_edge_gives_two_chords() {
        // Triple point at the bottom edge midpoint, two rays entering the element.
        let g = SubdomainGeometry::three_rays(Vec2::zeros(), [v(-1.0, 1.0), v(1.0, 1.0), v(0.0, -1.0)]).unwrap();
        let cut = cut_element(&g, &Rect::from_bounds(-0.5, 0.0, 0.5, 1.0)).unwrap();
        assert_eq!(cut.class, CutClass::TwoInterface);
        assert_eq!(cut.segments.len(), 2);
        assert!(cut.segments.iter().all(|s| s.end == v(0.0, 0.0)));
        check_areas(&cut);
        assert!((cut.pieces[1].area - 0.75).abs() < 1e-14);
    }

    #[test]
    fn two_rays_through_the_element() {
        let g = SubdomainGeometry::three_rays(v(0.0, -0.2), [v(-0.3, 1.0), v(0.3, 1.0), v(0.0, -1.0)]).unwrap();
        let cut = cut_element(&g, &Rect::from_bounds(-0.5, 0.0, 0.5, 1.0)).unwrap();
        assert_eq!(cut.class, CutClass::TwoInterface);
        check_areas(&cut);
        // The wedge between Γ1 and Γ2 is Ω3.
        assert_eq!(cut.pieces[1].label, Subdomain::Omega3);
        assert_eq!(cut.cut_points.len(), 4);
    }

    #[test]
    fn line_through_opposite_nodes() {
        let g = SubdomainGeometry::three_rays(v(-5.0, -5.0), [v(1.0, 1.0), v(-1.0, 0.2), v(0.2, -1.0)]).unwrap();
        let cut = cut_element(&g, &Rect::from_bounds(0.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(cut.class, CutClass::OneInterface);
        assert!(cut.cut_points.iter().all(|c| matches!(c.location, BoundaryLocation::Node(_))));
        check_areas(&cut);
        assert!((cut.pieces[0].area - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sliver_is_snapped_to_regular() {
        let c = 1e-7;
        let cut = cut_element(&horizontal(c), &Rect::from_bounds(0.0, 0.0, 1.0, 1.0));
        // 1e-7 of the area is above the guard: stays a cut.
        assert_eq!(cut.unwrap().class, CutClass::OneInterface);
        let g = SubdomainGeometry::three_rays(v(-1.0 - 1e-6, -2.0), [v(1.0, 1.0), v(-1.0, 0.2), v(0.3, -1.0)]).unwrap();
        // Γ1 clips the lower-right corner of the square by a 1e-12-area triangle.
        let cut = cut_element(&g, &Rect::from_bounds(0.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(cut.class, CutClass::Regular);
    }

    #[test]
    fn shared_edge_points_agree_bitwise() {
        let g = SubdomainGeometry::three_rays(Vec2::zeros(), [v(1.0, 0.7), v(-1.0, 0.3), v(0.0, -1.0)]).unwrap();
        let left = cut_element(&g, &Rect::from_bounds(-0.3, 0.1, 0.2, 0.6)).unwrap();
        let right = cut_element(&g, &Rect::from_bounds(0.2, 0.1, 0.7, 0.6)).unwrap();
        let on_shared = |c: &ElementCut| -> Vec<Vec2> {
            c.cut_points.iter().map(|p| p.position).filter(|p| p.x == 0.2).collect()
        };
        assert_eq!(on_shared(&left).len(), 1);
        assert_eq!(on_shared(&left), on_shared(&right));
    }
}
