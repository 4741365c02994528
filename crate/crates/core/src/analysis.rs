//! High-level experiments: the subtractive simplex algorithm behind the
//! exceptional parameter set, tree and flower checks on periodic
//! trajectories, escape profiling, and parameter sweeps.

use crate::billiard::{
    growth_exponent, singular_branches, trace, trace_from_vertex, TraceError, TraceOptions,
    TrajectoryRecord, TrajectoryStatus,
};
use crate::geom::{CyclicPolygon, Point2, Rect, Vec2, EPS};
use crate::tiling::{TileAddress, Tiling, TilingError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("trajectory polyline intersects itself")]
    SelfIntersecting,
    #[error("record is not periodic")]
    NotPeriodic,
    #[error("record is periodic; no escape to profile")]
    IsPeriodic,
    #[error("no closed singular leaf passes through the vertex")]
    NoSingularLeaf,
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Tiling(#[from] TilingError),
}

// --- subtractive simplex algorithm ----------------------------------------

/// A point of the standard 2-simplex: three nonnegative coordinates summing
/// to one (normalized triangle angles).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimplexPoint {
    pub coords: [f64; 3],
}

impl SimplexPoint {
    pub fn new(coords: [f64; 3]) -> Option<Self> {
        let sum: f64 = coords.iter().sum();
        if coords.iter().all(|&c| c >= 0.0) && (sum - 1.0).abs() <= 1e-12 {
            Some(SimplexPoint { coords })
        } else {
            None
        }
    }

    /// Normalize arbitrary nonnegative weights.
    pub fn project(raw: [f64; 3]) -> Option<Self> {
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 || raw.iter().any(|&c| c < 0.0) {
            return None;
        }
        Some(SimplexPoint {
            coords: [raw[0] / sum, raw[1] / sum, raw[2] / sum],
        })
    }

    /// Subtractive-algorithm coordinates of a triangle: x_i = 1 - 2 a_i / pi.
    /// Nonnegative exactly for acute triangles, which is consistent: the
    /// zero-energy surface has genus 3 (the only case admitting non-linear
    /// escape) precisely when the tile contains its circumcenter. The
    /// equilateral triangle maps to the immediate-exit center point and
    /// right triangles to the gasket's corner circles.
    pub fn from_triangle(poly: &CyclicPolygon) -> Option<Self> {
        let a = poly.angles();
        SimplexPoint::new([
            1.0 - 2.0 * a[0] / PI,
            1.0 - 2.0 * a[1] / PI,
            1.0 - 2.0 * a[2] / PI,
        ])
    }

    /// Inverse of [`from_triangle`]: the acute triangle with these
    /// subtractive coordinates.
    pub fn to_triangle(&self) -> Option<CyclicPolygon> {
        let [x1, x2, x3] = self.coords;
        CyclicPolygon::triangle_from_angles(
            PI * (1.0 - x1) / 2.0,
            PI * (1.0 - x2) / 2.0,
            PI * (1.0 - x3) / 2.0,
        )
        .ok()
    }
}

/// One step of the fully subtractive algorithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RauzyStep {
    /// The dominant coordinate gave up the other two; renormalized.
    Step { next: SimplexPoint, index: usize },
    /// No coordinate strictly exceeds one half.
    Exit,
}

/// Subtract the two smaller coordinates from a strictly dominant one and
/// renormalize. Ties with one half (within 1e-12) exit.
pub fn rauzy_step(x: &SimplexPoint) -> RauzyStep {
    let c = x.coords;
    for i in 0..3 {
        if c[i] > 0.5 + 1e-12 {
            let mut next = c;
            next[i] = 2.0 * c[i] - 1.0;
            let sum: f64 = next.iter().sum();
            for v in next.iter_mut() {
                *v /= sum;
            }
            return RauzyStep::Step {
                next: SimplexPoint { coords: next },
                index: i,
            };
        }
    }
    RauzyStep::Exit
}

/// Number of subtractive steps before exit, capped at `cap`. Points
/// reaching the cap are gasket-membership candidates at that resolution.
pub fn gasket_depth(x: &SimplexPoint, cap: usize) -> usize {
    let mut cur = *x;
    for depth in 0..cap {
        match rauzy_step(&cur) {
            RauzyStep::Step { next, .. } => cur = next,
            RauzyStep::Exit => return depth,
        }
    }
    cap
}

/// Depth map rasterized over the simplex: pixel (row, col) covers
/// barycentric (x1, x2, x3) = (u, v, 1-u-v) with u = (col+1/2)/n and
/// v = (row+1/2)/n; pixels outside the simplex are zero. Swapping row and
/// column swaps the first two coordinates, so the raster is symmetric about
/// its diagonal.
pub fn gasket_grid(n: usize, cap: usize) -> Vec<u8> {
    let cells: Vec<u8> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / n, idx % n);
            let u = (col as f64 + 0.5) / n as f64;
            let v = (row as f64 + 0.5) / n as f64;
            let w = 1.0 - u - v;
            if w <= 0.0 {
                return 0;
            }
            let depth = gasket_depth(&SimplexPoint { coords: [u, v, w] }, cap);
            ((depth * 255) / cap) as u8
        })
        .collect();
    cells
}

/// The fixed point of the subtractive algorithm with all-largest pivoting:
/// (t, t^2, t^3) for the real root of t^3 + t^2 + t = 1. Lies in the
/// exceptional set; its orbit is a coordinate permutation of itself.
pub fn tribonacci_point() -> SimplexPoint {
    // real root of t^3 + t^2 + t - 1
    let mut t = 0.5436890126920763f64;
    for _ in 0..4 {
        let f = t * t * t + t * t + t - 1.0;
        let df = 3.0 * t * t + 2.0 * t + 1.0;
        t -= f / df;
    }
    SimplexPoint::project([t, t * t, t * t * t]).unwrap()
}

// --- enclosed region and tree check ----------------------------------------

/// The tiling graph strictly inside a closed trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct EnclosedGraph {
    pub vertices: Vec<Point2>,
    /// Index pairs into `vertices`.
    pub edges: Vec<(usize, usize)>,
    pub tiles: Vec<TileAddress>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TreeCheck {
    pub is_tree: bool,
    pub enclosed_vertices: usize,
    pub enclosed_edges: usize,
    pub enclosed_tiles: usize,
    pub connected: bool,
    pub acyclic: bool,
}

/// Tiling vertices, edges and tiles strictly inside the closed polyline of
/// a periodic record.
pub fn enclosed_region(t: &Tiling, rec: &TrajectoryRecord) -> Result<EnclosedGraph, AnalysisError> {
    let polyline = rec.period_polyline().ok_or(AnalysisError::NotPeriodic)?;
    enclosed_from_polyline(t, &polyline)
}

/// Same, for an explicit closed polyline (the segment from the last point
/// back to the first is implied).
pub fn enclosed_from_polyline(
    t: &Tiling,
    polyline: &[Point2],
) -> Result<EnclosedGraph, AnalysisError> {
    if polyline.len() < 3 {
        return Ok(EnclosedGraph {
            vertices: vec![],
            edges: vec![],
            tiles: vec![],
        });
    }
    if self_intersects(polyline) {
        return Err(AnalysisError::SelfIntersecting);
    }
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in polyline {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let bbox = Rect::new(lo, hi).expanded(0.1);
    let infos = t.vertices_in_region(bbox)?;
    let orientation = polyline_area(polyline).signum();

    let mut vertices: Vec<Point2> = Vec::new();
    let mut incident: Vec<Vec<(TileAddress, usize)>> = Vec::new();
    for info in &infos {
        if strictly_inside(polyline, info.point, orientation) {
            vertices.push(info.point);
            incident.push(info.incident.clone());
        }
    }
    let index_of = |p: Point2| -> Option<usize> { vertices.iter().position(|v| v.dist(p) < 1e-7) };

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, _v) in vertices.iter().enumerate() {
        for (addr, vi) in &incident[i] {
            let tile = t.tile_at(*addr);
            let nv = tile.side_count();
            for u in [tile.vertex((vi + 1) % nv), tile.vertex((vi + nv - 1) % nv)] {
                if let Some(j) = index_of(u) {
                    let key = (i.min(j), i.max(j));
                    if i < j && !edges.contains(&key) && edge_clear(polyline, vertices[i], u) {
                        edges.push(key);
                    }
                }
            }
        }
    }

    let mut tiles: Vec<TileAddress> = Vec::new();
    let mut seen: Vec<TileAddress> = Vec::new();
    for inc in &incident {
        for (addr, _) in inc {
            if seen.contains(addr) {
                continue;
            }
            seen.push(*addr);
            let tile = t.tile_at(*addr);
            let all_sides_in = (0..tile.side_count()).all(|k| {
                let e = tile.side(k);
                match (index_of(e.a), index_of(e.b)) {
                    (Some(i), Some(j)) => edges.contains(&(i.min(j), i.max(j))),
                    _ => false,
                }
            });
            if all_sides_in {
                tiles.push(*addr);
            }
        }
    }
    Ok(EnclosedGraph {
        vertices,
        edges,
        tiles,
    })
}

/// Signed area of the closed polyline (positive for counterclockwise).
fn polyline_area(polyline: &[Point2]) -> f64 {
    let n = polyline.len();
    let mut s = 0.0;
    for i in 0..n {
        s += polyline[i].cross(polyline[(i + 1) % n]);
    }
    s / 2.0
}

/// Distance from `p` to the closed polyline.
fn polyline_distance(polyline: &[Point2], p: Point2) -> (f64, usize) {
    let n = polyline.len();
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..n {
        let a = polyline[i];
        let b = polyline[(i + 1) % n];
        let ab = b - a;
        let s = (ab.dot(p - a) / ab.norm_sq()).clamp(0.0, 1.0);
        let d = (a + ab * s).dist(p);
        if d < best.0 {
            best = (d, i);
        }
    }
    best
}

/// Whether `p` lies strictly inside the closed polyline. Points within
/// tolerance of the boundary are classified by which side of the nearest
/// segment they fall on.
pub fn strictly_inside(polyline: &[Point2], p: Point2, orientation: f64) -> bool {
    let (d, seg) = polyline_distance(polyline, p);
    if d < EPS {
        let a = polyline[seg];
        let b = polyline[(seg + 1) % polyline.len()];
        return orientation * (b - a).cross(p - a) > 0.0;
    }
    winding_number(polyline, p) != 0
}

fn winding_number(polyline: &[Point2], p: Point2) -> i32 {
    let n = polyline.len();
    let mut w = 0i32;
    for i in 0..n {
        let a = polyline[i];
        let b = polyline[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Whether a tiling edge is free of the curve: no polyline vertex sits in
/// its interior (trajectory crossings land on tile edges exactly there) and
/// no polyline segment crosses it transversally.
fn edge_clear(polyline: &[Point2], a: Point2, b: Point2) -> bool {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    for p in polyline {
        let s = ab.dot(*p - a) / len_sq;
        if (1e-9..=1.0 - 1e-9).contains(&s) {
            let d = (a + ab * s).dist(*p);
            if d < 1e-7 {
                return false;
            }
        }
    }
    let n = polyline.len();
    for i in 0..n {
        let p = polyline[i];
        let q = polyline[(i + 1) % n];
        if segments_cross(a, b, p, q) {
            return false;
        }
    }
    true
}

/// Proper interior crossing of two segments.
fn segments_cross(a: Point2, b: Point2, p: Point2, q: Point2) -> bool {
    let d1 = b - a;
    let d2 = q - p;
    let denom = d1.cross(d2);
    if denom.abs() < 1e-15 {
        return false;
    }
    let t = (p - a).cross(d2) / denom;
    let s = (p - a).cross(d1) / denom;
    (1e-9..=1.0 - 1e-9).contains(&t) && (1e-9..=1.0 - 1e-9).contains(&s)
}

fn self_intersects(polyline: &[Point2]) -> bool {
    let n = polyline.len();
    for i in 0..n {
        let a = polyline[i];
        let b = polyline[(i + 1) % n];
        for j in i + 1..n {
            // skip segments sharing an endpoint
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let p = polyline[j];
            let q = polyline[(j + 1) % n];
            if segments_cross(a, b, p, q) {
                return true;
            }
        }
    }
    false
}

/// The tree property of a periodic trajectory: the enclosed tiling graph is
/// connected and acyclic, equivalently no full tile is enclosed.
pub fn tree_check(t: &Tiling, rec: &TrajectoryRecord) -> Result<TreeCheck, AnalysisError> {
    let graph = enclosed_region(t, rec)?;
    Ok(tree_check_graph(&graph))
}

pub fn tree_check_graph(graph: &EnclosedGraph) -> TreeCheck {
    let nv = graph.vertices.len();
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut acyclic = true;
    for &(i, j) in &graph.edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri == rj {
            acyclic = false;
        } else {
            parent[ri] = rj;
        }
    }
    let components = (0..nv).filter(|&i| find(&mut parent, i) == i).count();
    let connected = components <= 1;
    TreeCheck {
        is_tree: connected && acyclic,
        enclosed_vertices: nv,
        enclosed_edges: graph.edges.len(),
        enclosed_tiles: graph.tiles.len(),
        connected,
        acyclic,
    }
}

// --- flower check -----------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct PetalInfo {
    pub start_direction: Vec2,
    pub steps: usize,
    pub tiles_crossed: usize,
    /// The petal visits two edge-adjacent tiles.
    pub adjacent_pair: bool,
    /// Some shared edge of an adjacent visited pair lies inside the petal.
    pub shared_edge_enclosed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowerReport {
    pub vertex: Point2,
    pub theta: f64,
    pub petal_count: usize,
    /// Another petal through the same vertex exists (the provable case).
    pub other_petal_exists: bool,
    pub petals: Vec<PetalInfo>,
    /// Every petal crosses an adjacent pair with the shared edge enclosed.
    pub bounded_flower_holds: bool,
}

/// Inspect the singular leaves of the `theta0` foliation through vertex
/// `v`: trace every branch, keep the ones that close up at `v`, and report
/// the bounded-flower evidence for each.
pub fn flower_check(t: &Tiling, v: Point2, theta0: f64) -> Result<FlowerReport, AnalysisError> {
    let branches = singular_branches(t, v, theta0);
    if branches.is_empty() {
        return Err(AnalysisError::NoSingularLeaf);
    }
    let opts = TraceOptions::with_max_steps(200_000);
    let mut petals: Vec<(Vec2, Vec<Point2>, Vec<TileAddress>)> = Vec::new();
    for d in branches {
        let rec = match trace_from_vertex(t, v, d, &opts) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let closed = matches!(
            rec.status,
            TrajectoryStatus::SingularHit { vertex, .. } if vertex.dist(v) < 1e-7
        );
        if !closed {
            continue;
        }
        let mut polyline = vec![v];
        polyline.extend(rec.crossings.iter().map(|c| c.point));
        let mut tiles = vec![rec.start_tile];
        tiles.extend(rec.crossings.iter().map(|c| c.tile));
        // the same petal traced from its other end retraces the same points
        let dup = petals.iter().any(|(_, pl, _)| {
            pl.len() == polyline.len()
                && polyline.get(1).is_some_and(|p| {
                    pl.iter().any(|q| q.dist(*p) < 1e-7)
                })
        });
        if !dup {
            petals.push((d, polyline, tiles));
        }
    }
    if petals.is_empty() {
        return Err(AnalysisError::NoSingularLeaf);
    }
    let mut infos = Vec::new();
    for (d, polyline, tiles) in &petals {
        let orientation = polyline_area(polyline).signum();
        let mut adjacent_pair = false;
        let mut enclosed = false;
        for (i, a) in tiles.iter().enumerate() {
            for b in tiles.iter().skip(i + 1) {
                if a == b || a.color == b.color {
                    continue;
                }
                for k in 0..t.side_count() {
                    if t.neighbor_across(*a, k) == *b {
                        adjacent_pair = true;
                        // the petal passes through its vertex, so the shared
                        // edge may end on the curve itself; its interior must
                        // stay inside
                        let e = t.tile_at(*a).side(k);
                        let on_or_in = |p: Point2| {
                            polyline_distance(polyline, p).0 < 1e-7
                                || strictly_inside(polyline, p, orientation)
                        };
                        if strictly_inside(polyline, e.midpoint(), orientation)
                            && edge_clear(polyline, e.a, e.b)
                            && on_or_in(e.a)
                            && on_or_in(e.b)
                        {
                            enclosed = true;
                        }
                    }
                }
            }
        }
        infos.push(PetalInfo {
            start_direction: *d,
            steps: polyline.len() - 1,
            tiles_crossed: tiles.len(),
            adjacent_pair,
            shared_edge_enclosed: enclosed,
        });
    }
    let holds = infos.iter().all(|p| p.adjacent_pair && p.shared_edge_enclosed);
    Ok(FlowerReport {
        vertex: v,
        theta: theta0,
        petal_count: infos.len(),
        other_petal_exists: infos.len() > 1,
        petals: infos,
        bounded_flower_holds: holds,
    })
}

// --- escape profile ---------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct EscapeProfile {
    /// Log-log slope of max displacement against steps over the last decade.
    pub exponent: f64,
    pub direction: Option<Vec2>,
    /// Max perpendicular deviation from the fitted direction relative to the
    /// final displacement, over the checkpoint positions.
    pub relative_residual: f64,
    pub windows: Vec<(usize, f64)>,
}

/// Displacement-growth profile of a non-periodic record.
pub fn escape_profile(rec: &TrajectoryRecord) -> Result<EscapeProfile, AnalysisError> {
    if rec.is_periodic() {
        return Err(AnalysisError::IsPeriodic);
    }
    let exponent = growth_exponent(&rec.displacement_checkpoints).unwrap_or(f64::NAN);
    let direction = match &rec.status {
        TrajectoryStatus::LinearEscape { drift, .. } => Some(drift.normalized()),
        _ => {
            let d = rec.end_point - rec.start_point;
            (d.norm() > 1e-9).then(|| d.normalized())
        }
    };
    let mut residual: f64 = 0.0;
    if let Some(dir) = direction {
        let total = (rec.end_point - rec.start_point).norm().max(1e-12);
        for c in &rec.displacement_checkpoints {
            residual = residual.max(dir.cross(c.point - rec.start_point).abs() / total);
        }
    }
    Ok(EscapeProfile {
        exponent,
        direction,
        relative_residual: residual,
        windows: rec
            .displacement_checkpoints
            .iter()
            .map(|c| (c.step, c.max_disp))
            .collect(),
    })
}

// --- random shapes and parameter sweeps -------------------------------------

/// Uniform random triangle angles (barycentric on the simplex), optionally
/// resampled until acute.
pub fn random_triangle(rng: &mut impl Rng, acute_only: bool) -> CyclicPolygon {
    loop {
        let mut cuts = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let angles = [cuts[0] * PI, (cuts[1] - cuts[0]) * PI, (1.0 - cuts[1]) * PI];
        if angles.iter().any(|&a| a < 0.05) {
            continue;
        }
        if acute_only && angles.iter().any(|&a| a > PI / 2.0 - 0.02) {
            continue;
        }
        if let Ok(p) = CyclicPolygon::triangle_from_angles(angles[0], angles[1], angles[2]) {
            return p;
        }
    }
}

/// Uniform random cyclic quadrilateral (arc lengths on the circle),
/// optionally resampled until it contains its circumcenter.
pub fn random_cyclic_quad(rng: &mut impl Rng, containing_only: bool) -> CyclicPolygon {
    loop {
        let mut cuts: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..TAU)).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let arcs: Vec<f64> = (0..4)
            .map(|i| {
                let d = cuts[(i + 1) % 4] - cuts[i];
                if d > 0.0 {
                    d
                } else {
                    d + TAU
                }
            })
            .collect();
        if arcs.iter().any(|&a| a < 0.1) {
            continue;
        }
        if containing_only && arcs.iter().any(|&a| a > PI - 0.02) {
            continue;
        }
        if let Ok(p) = CyclicPolygon::quad_from_positions([cuts[0], cuts[1], cuts[2], cuts[3]]) {
            return p;
        }
    }
}

/// A start point and direction inside the base tile whose trajectory has
/// the requested energy, at a random angle.
pub fn start_at_energy(t: &Tiling, tau: f64, rng: &mut impl Rng) -> Option<(Point2, Vec2)> {
    for _ in 0..256 {
        let theta = rng.gen_range(0.0..TAU);
        let along = rng.gen_range(0.2..0.8);
        if let Some(start) = crate::billiard::start_on_chord(t, tau, theta, along) {
            return Some(start);
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ShapeFamily {
    Triangle,
    CyclicQuad,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepConfig {
    pub family: ShapeFamily,
    pub shapes: usize,
    pub starts_per_shape: usize,
    pub max_steps: usize,
    pub seed: u64,
    /// Energies are drawn with |tau| in this range, random sign.
    pub tau_min: f64,
    pub tau_max: f64,
    /// Restrict shapes to circumcenter-containing ones.
    pub containing_only: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StatusKind {
    Periodic,
    LinearEscape,
    NonLinearCandidate,
    Unresolved,
    Singular,
}

impl From<&TrajectoryStatus> for StatusKind {
    fn from(s: &TrajectoryStatus) -> Self {
        match s {
            TrajectoryStatus::Periodic { .. } => StatusKind::Periodic,
            TrajectoryStatus::LinearEscape { .. } => StatusKind::LinearEscape,
            TrajectoryStatus::NonLinearCandidate => StatusKind::NonLinearCandidate,
            TrajectoryStatus::Unresolved => StatusKind::Unresolved,
            TrajectoryStatus::SingularHit { .. } => StatusKind::Singular,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepCell {
    pub shape: usize,
    pub start: usize,
    pub tau: f64,
    pub theta: f64,
    pub status: StatusKind,
    pub steps: usize,
    pub period: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StatusCounts {
    pub periodic: usize,
    pub linear_escape: usize,
    pub nonlinear_candidate: usize,
    pub unresolved: usize,
    pub singular: usize,
}

impl StatusCounts {
    fn add(&mut self, k: StatusKind) {
        match k {
            StatusKind::Periodic => self.periodic += 1,
            StatusKind::LinearEscape => self.linear_escape += 1,
            StatusKind::NonLinearCandidate => self.nonlinear_candidate += 1,
            StatusKind::Unresolved => self.unresolved += 1,
            StatusKind::Singular => self.singular += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.periodic + self.linear_escape + self.nonlinear_candidate + self.unresolved
            + self.singular
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub config: SweepConfig,
    /// Angle triples (triangles) or circle positions (quads) per shape.
    pub shape_params: Vec<Vec<f64>>,
    pub cells: Vec<SweepCell>,
    pub totals: StatusCounts,
}

/// Classify trajectories over a deterministic random grid of shapes, starts
/// and energies. Cells run in parallel and merge by index.
pub fn parameter_sweep(cfg: &SweepConfig) -> SweepTable {
    let shapes: Vec<CyclicPolygon> = (0..cfg.shapes)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9 + i as u64));
            match cfg.family {
                ShapeFamily::Triangle => random_triangle(&mut rng, cfg.containing_only),
                ShapeFamily::CyclicQuad => random_cyclic_quad(&mut rng, cfg.containing_only),
            }
        })
        .collect();
    let shape_params: Vec<Vec<f64>> = shapes
        .iter()
        .map(|p| match cfg.family {
            ShapeFamily::Triangle => p.angles().to_vec(),
            ShapeFamily::CyclicQuad => p
                .vertices()
                .iter()
                .map(|v| (*v - p.circumcenter()).angle())
                .collect(),
        })
        .collect();
    let tilings: Vec<Tiling> = shapes.into_iter().map(Tiling::new).collect();

    let cells: Vec<SweepCell> = (0..cfg.shapes * cfg.starts_per_shape)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / cfg.starts_per_shape, idx % cfg.starts_per_shape);
            let t = &tilings[i];
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed
                    .wrapping_mul(0x5851_f42d_4c95_7f2d)
                    .wrapping_add((idx as u64) << 1),
            );
            // resample singular-hit starts; they are measure zero and outside
            // the classification statements
            let mut last = None;
            for _ in 0..8 {
                let tau = if cfg.tau_max <= cfg.tau_min {
                    cfg.tau_min
                } else {
                    let mag = rng.gen_range(cfg.tau_min..cfg.tau_max);
                    if rng.gen::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                };
                let Some((p, d)) = start_at_energy(t, tau, &mut rng) else {
                    continue;
                };
                let opts = TraceOptions {
                    max_steps: cfg.max_steps,
                    store_crossings: 0,
                    ..Default::default()
                };
                let rec = trace(t, p, d, &opts);
                let rec = match rec {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                let cell = SweepCell {
                    shape: i,
                    start: j,
                    tau: rec.tau,
                    theta: rec.theta,
                    status: StatusKind::from(&rec.status),
                    steps: rec.steps,
                    period: rec.period(),
                };
                if cell.status != StatusKind::Singular {
                    return cell;
                }
                last = Some(cell);
            }
            last.unwrap_or(SweepCell {
                shape: i,
                start: j,
                tau: 0.0,
                theta: 0.0,
                status: StatusKind::Unresolved,
                steps: 0,
                period: None,
            })
        })
        .collect();

    let mut totals = StatusCounts::default();
    for c in &cells {
        totals.add(c.status);
    }
    SweepTable {
        config: *cfg,
        shape_params,
        cells,
        totals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::wrap_angle;

    fn equilateral() -> Tiling {
        Tiling::new(CyclicPolygon::triangle_from_angles(PI / 3.0, PI / 3.0, PI / 3.0).unwrap())
    }

    #[test]
    fn rauzy_step_cases() {
        let eq = SimplexPoint::new([1.0 / 3.0; 3]).unwrap();
        assert_eq!(rauzy_step(&eq), RauzyStep::Exit);

        let x = SimplexPoint::new([0.6, 0.3, 0.1]).unwrap();
        match rauzy_step(&x) {
            RauzyStep::Step { next, index } => {
                assert_eq!(index, 0);
                let want = [1.0 / 3.0, 0.5, 1.0 / 6.0];
                for (a, b) in next.coords.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
                }
            }
            RauzyStep::Exit => panic!("should step"),
        }

        let tie = SimplexPoint::new([0.5, 0.25, 0.25]).unwrap();
        assert_eq!(rauzy_step(&tie), RauzyStep::Exit);
    }

    #[test]
    fn rauzy_preserves_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let raw = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            let mut x = SimplexPoint::project(raw).unwrap();
            for _ in 0..20 {
                match rauzy_step(&x) {
                    RauzyStep::Step { next, .. } => {
                        let sum: f64 = next.coords.iter().sum();
                        assert!((sum - 1.0).abs() <= 1e-12);
                        assert!(next.coords.iter().all(|&c| c >= -1e-15));
                        x = next;
                    }
                    RauzyStep::Exit => break,
                }
            }
        }
    }

    #[test]
    fn gasket_depth_cases() {
        let eq = SimplexPoint::new([1.0 / 3.0; 3]).unwrap();
        assert_eq!(gasket_depth(&eq, 30), 0);
        let x = SimplexPoint::new([0.51, 0.25, 0.24]).unwrap();
        assert!(gasket_depth(&x, 10) >= 1);
        // the tribonacci point never exits
        assert_eq!(gasket_depth(&tribonacci_point(), 40), 40);
    }

    #[test]
    fn gasket_depth_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..100 {
            let x = SimplexPoint::project([rng.gen(), rng.gen(), rng.gen()]).unwrap();
            let d = gasket_depth(&x, 25);
            let c = x.coords;
            for perm in [[1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]] {
                let y = SimplexPoint::new([c[perm[0]], c[perm[1]], c[perm[2]]]).unwrap();
                assert_eq!(gasket_depth(&y, 25), d);
            }
        }
    }

    #[test]
    fn deep_survivors_are_rare() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let n = 20_000;
        let survivors = (0..n)
            .filter(|_| {
                let x = SimplexPoint::project([rng.gen(), rng.gen(), rng.gen()]).unwrap();
                gasket_depth(&x, 30) == 30
            })
            .count();
        assert!(
            (survivors as f64) < 0.01 * n as f64,
            "{survivors} of {n} survived depth 30"
        );
    }

    #[test]
    fn gasket_grid_is_diagonal_symmetric() {
        let n = 64;
        let grid = gasket_grid(n, 20);
        for r in 0..n {
            for c in 0..n {
                assert_eq!(grid[r * n + c], grid[c * n + r]);
            }
        }
        // equilateral pixel has depth zero
        let center = (n as f64 / 3.0) as usize;
        assert_eq!(grid[center * n + center], 0);
    }

    #[test]
    fn synthetic_hexagon_around_a_tile() {
        let t = equilateral();
        let tile = t.tile_at(TileAddress::white(0, 0));
        // closed curve just outside the tile: push each vertex and each edge
        // midpoint outward from the barycenter
        let bc = tile.barycenter();
        let mut polyline = Vec::new();
        for k in 0..3 {
            let v = tile.vertex(k);
            polyline.push(bc + (v - bc) * 1.25);
            let next = tile.vertex((k + 1) % 3);
            let mid = (v + next) * 0.5;
            polyline.push(bc + (mid - bc) * 1.3);
        }
        let graph = enclosed_from_polyline(&t, &polyline).unwrap();
        assert_eq!(graph.vertices.len(), 3);
        assert_eq!(graph.edges.len(), 3);
        assert_eq!(graph.tiles.len(), 1);
        let check = tree_check_graph(&graph);
        assert!(!check.is_tree, "a contoured tile is a cycle");
        assert_eq!(check.enclosed_tiles, 1);
    }

    #[test]
    fn periodic_orbit_is_a_tree() {
        let t = equilateral();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 20 {
            let tau = rng.gen_range(0.05..0.45) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let Some((p, d)) = start_at_energy(&t, tau, &mut rng) else {
                continue;
            };
            let rec = match trace(&t, p, d, &TraceOptions::with_max_steps(200_000)) {
                Ok(r) => r,
                Err(_) => continue,
            };
            if !rec.is_periodic() {
                continue;
            }
            let check = tree_check(&t, &rec).unwrap();
            assert!(check.is_tree, "periodic orbit enclosed a cycle: {check:?}");
            assert_eq!(check.enclosed_tiles, 0);
            assert_eq!(
                check.is_tree,
                check.enclosed_tiles == 0,
                "tree property and tile count must agree"
            );
            checked += 1;
        }
    }

    #[test]
    fn smallest_orbit_encloses_one_vertex() {
        let t = equilateral();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // small-energy orbits in the equilateral tiling are hexagons around
        // a vertex
        let (p, d) = start_at_energy(&t, 0.2, &mut rng).unwrap();
        let rec = trace(&t, p, d, &TraceOptions::with_max_steps(10_000)).unwrap();
        assert!(rec.is_periodic());
        let graph = enclosed_region(&t, &rec).unwrap();
        assert_eq!(graph.vertices.len(), 1);
        assert!(graph.edges.is_empty());
        assert!(graph.tiles.is_empty());
    }

    #[test]
    fn flower_check_finds_petals_on_scalene_tiling() {
        // generic shape: singular leaves close up at their own vertex; the
        // equilateral tiling instead has saddle connections between distinct
        // vertices and no single-vertex petals
        let t = Tiling::new(CyclicPolygon::triangle_from_angles(1.2, 0.95, PI - 2.15).unwrap());
        let v = t.base().vertex(0);
        let mut flowers = 0;
        for k in 0..60 {
            let theta0 = k as f64 * TAU / 60.0;
            match flower_check(&t, v, theta0) {
                Ok(report) => {
                    flowers += 1;
                    assert!(report.petal_count >= 1);
                    assert_eq!(report.other_petal_exists, report.petal_count > 1);
                    for petal in &report.petals {
                        assert!(petal.steps > 0);
                        assert!(petal.tiles_crossed > 0);
                        // the petal visits edge-adjacent tiles and encloses a
                        // shared edge: the bounded-flower evidence
                        assert!(petal.adjacent_pair);
                        assert!(petal.shared_edge_enclosed, "{report:?}");
                    }
                    assert!(report.bounded_flower_holds);
                }
                Err(AnalysisError::NoSingularLeaf) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!(flowers >= 1, "no flower found across the angle scan");

        // vertex angles with no singular leaf report the precondition
        let eq = equilateral();
        let empty = flower_check(&eq, eq.base().vertex(0), 0.3);
        assert!(matches!(empty, Err(AnalysisError::NoSingularLeaf)));
    }

    #[test]
    fn tribonacci_trace_is_nonlinear_candidate() {
        let x = tribonacci_point();
        let poly = x.to_triangle().unwrap();
        assert_eq!(
            crate::geom::contains_circumcenter(&poly),
            crate::geom::CenterLocation::Inside,
            "gasket triangles are acute"
        );
        let t = Tiling::new(poly.clone());
        // zero-energy start through the circumcenter
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p, d) = start_at_energy(&t, 0.0, &mut rng).unwrap();
        let opts = TraceOptions {
            max_steps: 300_000,
            store_crossings: 0,
            ..Default::default()
        };
        let rec = trace(&t, p, d, &opts).unwrap();
        assert_eq!(rec.status, TrajectoryStatus::NonLinearCandidate, "{:?}", rec.status);
        let profile = escape_profile(&rec).unwrap();
        assert!(profile.exponent < 0.9, "exponent {}", profile.exponent);
        // the two exceptional-set detectors agree
        assert_eq!(gasket_depth(&SimplexPoint::from_triangle(&poly).unwrap(), 30), 30);
    }

    #[test]
    fn sweep_is_deterministic_and_classified() {
        let cfg = SweepConfig {
            family: ShapeFamily::Triangle,
            shapes: 6,
            starts_per_shape: 3,
            max_steps: 200_000,
            seed: 99,
            tau_min: 1e-3,
            tau_max: 0.5,
            containing_only: false,
        };
        let a = parameter_sweep(&cfg);
        let b = parameter_sweep(&cfg);
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.status, y.status);
            assert_eq!(x.steps, y.steps);
            assert!((x.tau - y.tau).abs() < 1e-15);
        }
        assert_eq!(a.totals.total(), 18);
        assert_eq!(
            a.totals.periodic + a.totals.linear_escape,
            18,
            "away from zero energy everything resolves: {:?}",
            a.totals
        );
    }

    #[test]
    fn escape_profile_rejects_periodic() {
        let t = equilateral();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (p, d) = start_at_energy(&t, 0.3, &mut rng).unwrap();
        let rec = trace(&t, p, d, &TraceOptions::with_max_steps(100_000)).unwrap();
        assert!(rec.is_periodic());
        assert!(matches!(
            escape_profile(&rec),
            Err(AnalysisError::IsPeriodic)
        ));
    }




    #[test]
    fn winding_and_inside_probe() {
        let square = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(strictly_inside(&square, Point2::new(0.5, 0.5), 1.0));
        assert!(!strictly_inside(&square, Point2::new(1.5, 0.5), 1.0));
        // a point essentially on the boundary is classified by its side
        assert!(strictly_inside(&square, Point2::new(0.5, 1e-12), 1.0));
        assert!(!strictly_inside(&square, Point2::new(0.5, -1e-12), 1.0));
        assert!(wrap_angle(0.0) == 0.0);
    }
}
