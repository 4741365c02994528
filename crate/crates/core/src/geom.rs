//! Planar primitives, cyclic polygon types and incidence predicates.
//!
//! Everything downstream works on tiles normalized to circumradius 1 with
//! the circumcenter of the base tile at the origin and side AB pointing
//! along +x. Arithmetic is plain f64 with one global incidence tolerance
//! [`EPS`]; there is no exact kernel.

use serde::Serialize;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Global incidence tolerance. Points closer than this to an edge or vertex
/// are treated as lying on it.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("polygon is degenerate (collinear or coincident vertices)")]
    DegeneratePolygon,
    #[error("points are not in convex clockwise position")]
    NonConvex,
    #[error("chord with |tau| >= 1 is tangent to or outside the circle")]
    TangentChord,
    #[error("invalid polygon parameters: {0}")]
    BadParameters(String),
}

/// 2D vector / point, y-up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// Points and vectors share a representation.
pub type Point2 = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at `angle` radians from +x.
    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is to the left
    /// of `self`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Wrap an angle to [0, 2pi).
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r < 0.0 {
        r += TAU;
    }
    // rem can return exactly TAU after the correction when a is a tiny
    // negative number
    if r >= TAU {
        r -= TAU;
    }
    r
}

/// Distance between two angles on the circle, in [0, pi].
pub fn circ_dist(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn expanded(&self, margin: f64) -> Rect {
        Rect::new(
            self.min - Vec2::new(margin, margin),
            self.max + Vec2::new(margin, margin),
        )
    }

    pub fn center(&self) -> Point2 {
        (self.min + self.max) * 0.5
    }
}

/// An edge of a tile: two endpoints plus the within-tile side index
/// (0 = a, 1 = b, 2 = c, 3 = d).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Edge {
    pub a: Point2,
    pub b: Point2,
    pub side: usize,
}

impl Edge {
    pub fn new(a: Point2, b: Point2, side: usize) -> Self {
        Edge { a, b, side }
    }

    pub fn midpoint(&self) -> Point2 {
        (self.a + self.b) * 0.5
    }

    pub fn tangent(&self) -> Vec2 {
        (self.b - self.a).normalized()
    }

    pub fn len(&self) -> f64 {
        self.a.dist(self.b)
    }
}

/// Tile shape family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PolygonKind {
    Triangle,
    CyclicQuad,
}

impl PolygonKind {
    pub fn sides(self) -> usize {
        match self {
            PolygonKind::Triangle => 3,
            PolygonKind::CyclicQuad => 4,
        }
    }
}

/// A triangle or cyclic quadrilateral with its circumcircle.
///
/// Vertices are stored in tour order (A, B, C[, D]); side `a` runs B->C for
/// triangles and A->B for quads, matching the usual labelling where the
/// triangle side `k` is opposite vertex `k`. Triangle tours are clockwise
/// and quad tours counterclockwise; this pins the sign conventions so the
/// fold picks up rotation 2*gamma per step of -c (triangles) and 2*delta per
/// step of a+b (quads).
#[derive(Clone, Debug, Serialize)]
pub struct CyclicPolygon {
    kind: PolygonKind,
    vertices: Vec<Point2>,
    angles: Vec<f64>,
    circumcenter: Point2,
    circumradius: f64,
    /// +1 for a counterclockwise vertex tour, -1 for clockwise.
    orientation: f64,
}

/// Vertex index pair (from, to) of side `k`.
pub fn side_vertices(kind: PolygonKind, k: usize) -> (usize, usize) {
    match kind {
        // a = BC, b = CA, c = AB
        PolygonKind::Triangle => [(1, 2), (2, 0), (0, 1)][k],
        // a = AB, b = BC, c = CD, d = DA
        PolygonKind::CyclicQuad => [(0, 1), (1, 2), (2, 3), (3, 0)][k],
    }
}

/// The two sides meeting at vertex `v`.
pub fn sides_at_vertex(kind: PolygonKind, v: usize) -> (usize, usize) {
    let n = kind.sides();
    let mut out = Vec::with_capacity(2);
    for k in 0..n {
        let (i, j) = side_vertices(kind, k);
        if i == v || j == v {
            out.push(k);
        }
    }
    (out[0], out[1])
}

impl CyclicPolygon {
    /// Triangle from its angles, normalized to circumradius 1 with the
    /// circumcenter at the origin and side AB along +x. The `side` length of
    /// the input shape only sets a scale and is normalized away.
    pub fn triangle_from_angles(alpha: f64, beta: f64, gamma: f64) -> Result<Self, GeomError> {
        let sum = alpha + beta + gamma;
        if !(alpha > 0.0 && beta > 0.0 && gamma > 0.0) || (sum - PI).abs() > 1e-9 {
            return Err(GeomError::BadParameters(format!(
                "triangle angles must be positive and sum to pi, got ({alpha}, {beta}, {gamma})"
            )));
        }
        // Inscribed in the unit circle: A and B symmetric about the y-axis at
        // height cos(gamma), C on the far arc. The tour A -> B -> C is
        // clockwise and AB points along +x.
        let a = Point2::from_angle(PI / 2.0 + gamma);
        let b = Point2::from_angle(PI / 2.0 - gamma);
        let c = Point2::from_angle(PI / 2.0 - gamma - 2.0 * alpha);
        Ok(CyclicPolygon {
            kind: PolygonKind::Triangle,
            vertices: vec![a, b, c],
            angles: vec![alpha, beta, gamma],
            circumcenter: Point2::ZERO,
            circumradius: 1.0,
            orientation: -1.0,
        })
    }

    /// Cyclic quadrilateral from four angular positions on the unit circle;
    /// the tour A, B, C, D must run strictly counterclockwise (increasing
    /// positions modulo 2 pi). The result is rotated so that side AB points
    /// along +x; cyclicity holds by construction.
    pub fn quad_from_positions(positions: [f64; 4]) -> Result<Self, GeomError> {
        let mut arcs = [0.0; 4];
        for i in 0..4 {
            let step = wrap_angle(positions[(i + 1) % 4] - positions[i]);
            if step <= EPS || step >= TAU - EPS {
                return Err(GeomError::BadParameters(
                    "quad positions must be strictly counterclockwise on the circle".into(),
                ));
            }
            arcs[i] = step;
        }
        if (arcs.iter().sum::<f64>() - TAU).abs() > 1e-9 {
            return Err(GeomError::NonConvex);
        }
        let raw: Vec<Point2> = positions.iter().map(|&p| Point2::from_angle(p)).collect();
        let ab_angle = (raw[1] - raw[0]).angle();
        let vertices: Vec<Point2> = raw.iter().map(|v| v.rotated(-ab_angle)).collect();
        // Interior angle at vertex i is half the total arc not adjacent to it.
        let angles = (0..4)
            .map(|i| (TAU - arcs[i] - arcs[(i + 3) % 4]) / 2.0)
            .collect();
        Ok(CyclicPolygon {
            kind: PolygonKind::CyclicQuad,
            vertices,
            angles,
            circumcenter: Point2::ZERO,
            circumradius: 1.0,
            orientation: 1.0,
        })
    }

    /// Rebuild a congruent tile at an explicit position (used by the tiling
    /// to emit translated and point-reflected copies).
    pub(crate) fn from_parts(
        kind: PolygonKind,
        vertices: Vec<Point2>,
        angles: Vec<f64>,
        circumcenter: Point2,
        circumradius: f64,
    ) -> Self {
        let mut area2 = 0.0;
        for i in 0..vertices.len() {
            area2 += vertices[i].cross(vertices[(i + 1) % vertices.len()]);
        }
        CyclicPolygon {
            kind,
            vertices,
            angles,
            circumcenter,
            circumradius,
            orientation: area2.signum(),
        }
    }

    pub fn kind(&self) -> PolygonKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    /// Interior angle at vertex `i`.
    pub fn angle(&self, i: usize) -> f64 {
        self.angles[i]
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn circumcenter(&self) -> Point2 {
        self.circumcenter
    }

    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// +1 for a counterclockwise vertex tour, -1 for clockwise.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn side_count(&self) -> usize {
        self.kind.sides()
    }

    /// Side `k` as an oriented edge.
    pub fn side(&self, k: usize) -> Edge {
        let (i, j) = side_vertices(self.kind, k);
        Edge::new(self.vertices[i], self.vertices[j], k)
    }

    /// Side vector of side `k` (b - a in tour orientation).
    pub fn side_vector(&self, k: usize) -> Vec2 {
        let e = self.side(k);
        e.b - e.a
    }

    pub fn barycenter(&self) -> Point2 {
        let mut s = Vec2::ZERO;
        for v in &self.vertices {
            s = s + *v;
        }
        s * (1.0 / self.vertices.len() as f64)
    }

    /// Strict interior test with an `eps` boundary band; works for either
    /// vertex-tour orientation.
    pub fn contains(&self, p: Point2, eps: f64) -> Containment {
        let n = self.vertices.len();
        let mut min_side = f64::INFINITY;
        for v in &self.vertices {
            if v.dist(p) <= eps {
                return Containment::OnVertex(*v);
            }
        }
        for k in 0..n {
            let e = self.side(k);
            let t = e.b - e.a;
            // signed distance to the side line, positive toward the interior
            let c = self.orientation * t.cross(p - e.a) / t.norm();
            if c < -eps {
                return Containment::Outside;
            }
            let along = t.dot(p - e.a) / t.norm_sq();
            if c.abs() <= eps && (-EPS..=1.0 + EPS).contains(&along) {
                return Containment::OnEdge(e);
            }
            min_side = min_side.min(c);
        }
        if min_side > eps {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }
}

/// Result of a point-in-tile query.
#[derive(Clone, Debug)]
pub enum Containment {
    Inside,
    Outside,
    OnEdge(Edge),
    OnVertex(Point2),
}

/// Circumcircle of 3+ points via perpendicular bisectors of the first three,
/// checked against the remaining ones.
pub fn circumcircle(points: &[Point2]) -> Result<(Point2, f64), GeomError> {
    if points.len() < 3 {
        return Err(GeomError::DegeneratePolygon);
    }
    let (p, q, r) = (points[0], points[1], points[2]);
    let d = 2.0 * (q - p).cross(r - p);
    let scale = (q - p).norm() * (r - p).norm();
    if d.abs() <= 1e-12 * scale.max(1.0) {
        return Err(GeomError::DegeneratePolygon);
    }
    let pq = q.norm_sq() - p.norm_sq();
    let pr = r.norm_sq() - p.norm_sq();
    let ux = ((q.y - p.y) * pr - (r.y - p.y) * pq) / -d;
    let uy = ((r.x - p.x) * pq - (q.x - p.x) * pr) / -d;
    let center = Point2::new(ux, uy);
    let radius = center.dist(p);
    for extra in &points[3..] {
        if (center.dist(*extra) - radius).abs() > 1e-6 * radius.max(1.0) {
            return Err(GeomError::BadParameters(
                "points are not concyclic".into(),
            ));
        }
    }
    Ok((center, radius))
}

/// Whether four convex points (either tour orientation) lie on a common
/// circle, via the opposite-angle criterion |alpha + gamma - pi| <= tol.
pub fn is_cyclic(quad: &[Point2; 4], tol: f64) -> Result<bool, GeomError> {
    let n = 4;
    let mut sign = 0.0f64;
    for i in 0..n {
        let a = quad[i];
        let b = quad[(i + 1) % n];
        let c = quad[(i + 2) % n];
        let turn = (b - a).cross(c - b);
        if turn.abs() <= EPS || (sign != 0.0 && turn.signum() != sign) {
            return Err(GeomError::NonConvex);
        }
        sign = turn.signum();
    }
    let angle_at = |i: usize| -> f64 {
        let prev = quad[(i + n - 1) % n];
        let next = quad[(i + 1) % n];
        let u = prev - quad[i];
        let v = next - quad[i];
        (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
    };
    Ok((angle_at(0) + angle_at(2) - PI).abs() <= tol)
}

/// Position of the circumcenter relative to the polygon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CenterLocation {
    Inside,
    Outside,
    Boundary,
}

/// Where the circumcenter sits: strictly inside, strictly outside, or within
/// [`EPS`] of the boundary (right triangles land on a side midpoint).
pub fn contains_circumcenter(poly: &CyclicPolygon) -> CenterLocation {
    match poly.contains(poly.circumcenter(), EPS) {
        Containment::Inside => CenterLocation::Inside,
        Containment::Outside => CenterLocation::Outside,
        Containment::OnEdge(_) | Containment::OnVertex(_) => CenterLocation::Boundary,
    }
}

/// Reflection of a direction across the line carrying `edge`. This is the
/// plain mirror image; the refraction rule that re-orients the result into
/// the next tile lives in the billiard module.
pub fn reflect_direction(d: Vec2, edge: &Edge) -> Vec2 {
    let t = edge.tangent();
    t * (2.0 * d.dot(t)) - d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ~ {b} within {tol}");
    }

    #[test]
    fn circumcircle_equilateral_side_one() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 3f64.sqrt() / 2.0),
        ];
        let (_, r) = circumcircle(&pts).unwrap();
        assert_close(r, 1.0 / 3f64.sqrt(), 1e-12);
    }

    #[test]
    fn circumcircle_unit_square() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ];
        let (c, r) = circumcircle(&pts).unwrap();
        assert_close(c.x, 0.5, 1e-12);
        assert_close(c.y, 0.5, 1e-12);
        assert_close(r, 2f64.sqrt() / 2.0, 1e-12);
    }

    #[test]
    fn circumcircle_recovers_sampled_circle() {
        let center = Point2::new(-1.25, 2.5);
        let radius = 3.75;
        let pts: Vec<Point2> = [2.9, 1.4, 0.3, -1.2]
            .iter()
            .map(|&a| center + Point2::from_angle(a) * radius)
            .collect();
        let (c, r) = circumcircle(&pts).unwrap();
        assert!(c.dist(center) < 1e-12);
        assert_close(r, radius, 1e-12);
    }

    #[test]
    fn circumcircle_rejects_collinear() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 2.0),
        ];
        assert_eq!(circumcircle(&pts), Err(GeomError::DegeneratePolygon));
    }

    #[test]
    fn is_cyclic_cases() {
        let square = [
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 0.0),
        ];
        assert!(is_cyclic(&square, 1e-9).unwrap());

        // clockwise non-rectangular parallelogram
        let para = [
            Point2::new(0.3, 1.0),
            Point2::new(1.3, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 0.0),
        ];
        assert!(!is_cyclic(&para, 1e-9).unwrap());

        let on_circle: [Point2; 4] = [
            Point2::from_angle(2.0),
            Point2::from_angle(1.0),
            Point2::from_angle(0.2),
            Point2::from_angle(-1.5),
        ];
        assert!(is_cyclic(&on_circle, 1e-9).unwrap());

        // self-intersecting order is rejected
        let bowtie = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert_eq!(is_cyclic(&bowtie, 1e-9), Err(GeomError::NonConvex));
    }

    #[test]
    fn contains_circumcenter_cases() {
        let eq = CyclicPolygon::triangle_from_angles(PI / 3.0, PI / 3.0, PI / 3.0).unwrap();
        assert_eq!(contains_circumcenter(&eq), CenterLocation::Inside);

        let obtuse = CyclicPolygon::triangle_from_angles(0.3, 0.3, PI - 0.6).unwrap();
        assert_eq!(contains_circumcenter(&obtuse), CenterLocation::Outside);

        let right = CyclicPolygon::triangle_from_angles(PI / 2.0, PI / 6.0, PI / 3.0).unwrap();
        assert_eq!(contains_circumcenter(&right), CenterLocation::Boundary);
    }

    #[test]
    fn reflect_direction_horizontal_edge() {
        let e = Edge::new(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0), 0);
        let r = reflect_direction(Vec2::new(0.0, 1.0), &e);
        assert!(r.dist(Vec2::new(0.0, -1.0)) < 1e-12);
        let r = reflect_direction(Vec2::new(1.0, 0.0), &e);
        assert!(r.dist(Vec2::new(1.0, 0.0)) < 1e-12);
        for t in [0.3, 1.1, 2.8, 4.0] {
            let r = reflect_direction(Vec2::from_angle(t), &e);
            assert!(r.dist(Vec2::new(t.cos(), -t.sin())) < 1e-12);
        }
    }

    #[test]
    fn normalized_triangle_invariants() {
        for (a, b, g) in [
            (1.0, 1.1, PI - 2.1),
            (0.4, 0.5, PI - 0.9),
            (PI / 3.0, PI / 3.0, PI / 3.0),
        ] {
            let t = CyclicPolygon::triangle_from_angles(a, b, g).unwrap();
            for v in t.vertices() {
                assert_close(v.norm(), 1.0, 1e-12);
            }
            // AB along +x
            let ab = t.vertex(1) - t.vertex(0);
            assert!(ab.y.abs() < 1e-12 && ab.x > 0.0);
            // interior angles match the inputs
            for (i, want) in [a, b, g].iter().enumerate() {
                let (s1, s2) = sides_at_vertex(PolygonKind::Triangle, i);
                let e1 = t.side(s1);
                let e2 = t.side(s2);
                // directions away from the vertex
                let u = if e1.a.dist(t.vertex(i)) < 1e-12 { e1.b - e1.a } else { e1.a - e1.b };
                let w = if e2.a.dist(t.vertex(i)) < 1e-12 { e2.b - e2.a } else { e2.a - e2.b };
                let ang = (u.dot(w) / (u.norm() * w.norm())).clamp(-1.0, 1.0).acos();
                assert_close(ang, *want, 1e-9);
            }
            // a + b + c = 0
            let s = t.side_vector(0) + t.side_vector(1) + t.side_vector(2);
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn normalized_quad_invariants() {
        let q = CyclicPolygon::quad_from_positions([-2.0, -0.4, 1.0, 2.4]).unwrap();
        for v in q.vertices() {
            assert_close(v.norm(), 1.0, 1e-12);
        }
        let ab = q.vertex(1) - q.vertex(0);
        assert!(ab.y.abs() < 1e-12 && ab.x > 0.0);
        // opposite angles sum to pi
        assert_close(q.angle(0) + q.angle(2), PI, 1e-9);
        assert_close(q.angle(1) + q.angle(3), PI, 1e-9);
        // tour vector sum is zero
        let s = (0..4).fold(Vec2::ZERO, |acc, k| acc + q.side_vector(k));
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn quad_rejects_bad_order() {
        assert!(CyclicPolygon::quad_from_positions([3.0, 2.0, 1.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn reflect_is_involution(angle in 0.0..TAU, edge_angle in 0.0..PI) {
            let e = Edge::new(Point2::ZERO, Point2::from_angle(edge_angle), 0);
            let d = Vec2::from_angle(angle);
            let rr = reflect_direction(reflect_direction(d, &e), &e);
            prop_assert!(rr.dist(d) < 1e-12);
        }

        #[test]
        fn triangle_angle_sum(a in 0.05..2.0f64, b in 0.05..1.0f64) {
            prop_assume!(PI - a - b > 0.05);
            let t = CyclicPolygon::triangle_from_angles(a, b, PI - a - b).unwrap();
            let sum: f64 = t.angles().iter().sum();
            prop_assert!((sum - PI).abs() <= 1e-12);
            for v in t.vertices() {
                prop_assert!((v.norm() - 1.0).abs() <= 1e-9);
            }
        }
    }
}
