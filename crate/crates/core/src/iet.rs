//! Interval exchange transformations with flips on the circle, and the
//! first-return reduction of the billiard flow.
//!
//! For a fixed energy, track the direction angle of the trajectory's segment
//! in each visited tile, adding pi in the reflected-color tiles. One tile
//! step acts on that circle coordinate as y -> 2*mu_k - y, where mu_k is the
//! direction angle of the side the segment exits through; which side that is
//! depends only on the arc of the circle y lies in, cut at the angles where
//! the chord leaves the tile through a vertex. The step map F is therefore
//! an interval exchange with every interval flipped (3 intervals for
//! triangles, 4 for quads), and the two-step first return T = F o F is an
//! ordinary interval exchange with 6 or 8 intervals.

use crate::billiard::{trace, TraceError, TraceOptions, TrajectoryStatus};
use crate::folding::line_tau;
use crate::geom::{circ_dist, wrap_angle, CyclicPolygon, Point2, Vec2};
use crate::tiling::{Color, Tiling};
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IetError {
    #[error("chord at distance {tau} misses the tile for some directions (limit {limit})")]
    DegenerateChord { tau: f64, limit: f64 },
    #[error("orbit hit an interval breakpoint at step {step}")]
    HitBreakpoint { step: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("trajectory hit a vertex before {wanted} symbols")]
    SingularTrajectory { wanted: usize },
}

/// Action on one continuity interval: y -> offset - y when flipped,
/// y -> y + offset otherwise (mod 2 pi).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntervalMap {
    pub flip: bool,
    pub offset: f64,
    /// Exit side of the tile for first-return maps.
    pub label: Option<usize>,
}

impl IntervalMap {
    fn eval(&self, y: f64) -> f64 {
        if self.flip {
            wrap_angle(self.offset - y)
        } else {
            wrap_angle(y + self.offset)
        }
    }
}

/// A piecewise isometry of the circle [0, 2 pi): continuity intervals
/// between successive breakpoints, each translated or reflected.
#[derive(Clone, Debug, Serialize)]
pub struct IetWithFlips {
    /// Sorted ascending; interval i runs from `breakpoints[i]` to the next
    /// breakpoint, wrapping at the end.
    pub breakpoints: Vec<f64>,
    pub maps: Vec<IntervalMap>,
}

impl IetWithFlips {
    pub fn new(breakpoints: Vec<f64>, maps: Vec<IntervalMap>) -> Self {
        debug_assert_eq!(breakpoints.len(), maps.len());
        debug_assert!(breakpoints.windows(2).all(|w| w[0] < w[1]));
        IetWithFlips { breakpoints, maps }
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Index of the interval containing `y`.
    pub fn interval_of(&self, y: f64) -> usize {
        let y = wrap_angle(y);
        match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&y).unwrap())
        {
            Ok(i) => i,
            // y below the first breakpoint wraps into the last interval
            Err(0) => self.len() - 1,
            Err(i) => i - 1,
        }
    }

    /// Arc length of interval `i`.
    pub fn interval_length(&self, i: usize) -> f64 {
        let a = self.breakpoints[i];
        let b = self.breakpoints[(i + 1) % self.len()];
        wrap_angle(b - a + TAU)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.maps[self.interval_of(y)].eval(wrap_angle(y))
    }

    /// Distance from `y` to the nearest breakpoint.
    pub fn breakpoint_distance(&self, y: f64) -> f64 {
        self.breakpoints
            .iter()
            .map(|&b| circ_dist(y, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Orbit of length `n+1` (including the start) and the symbolic word of
    /// interval indices used.
    pub fn iterate(&self, y: f64, n: usize, eps: f64) -> Result<(Vec<f64>, Vec<usize>), IetError> {
        let mut orbit = Vec::with_capacity(n + 1);
        let mut word = Vec::with_capacity(n);
        let mut y = wrap_angle(y);
        orbit.push(y);
        for step in 0..n {
            if self.breakpoint_distance(y) < eps {
                return Err(IetError::HitBreakpoint { step });
            }
            let i = self.interval_of(y);
            word.push(i);
            y = self.maps[i].eval(y);
            orbit.push(y);
        }
        Ok((orbit, word))
    }

    /// Start of the image arc of interval `i`.
    fn image_start(&self, i: usize) -> f64 {
        let a = self.breakpoints[i];
        let b = a + self.interval_length(i);
        if self.maps[i].flip {
            wrap_angle(self.maps[i].offset - b)
        } else {
            wrap_angle(a + self.maps[i].offset)
        }
    }

    /// Preimage of `x` under the restriction to interval `i`.
    fn preimage_in(&self, i: usize, x: f64) -> f64 {
        if self.maps[i].flip {
            wrap_angle(self.maps[i].offset - x)
        } else {
            wrap_angle(x - self.maps[i].offset)
        }
    }

    /// Interval whose image arc contains `x`.
    fn image_interval_of(&self, x: f64) -> usize {
        let x = wrap_angle(x);
        for i in 0..self.len() {
            let start = self.image_start(i);
            let len = self.interval_length(i);
            if wrap_angle(x - start) < len {
                return i;
            }
        }
        // x coincides with an image boundary; any adjacent interval works
        (0..self.len())
            .min_by(|&a, &b| {
                let da = circ_dist(self.image_start(a), x);
                let db = circ_dist(self.image_start(b), x);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap()
    }

    /// How far the image arcs are from partitioning the circle: the largest
    /// gap or overlap between consecutive image starts. Near zero for a
    /// bijection.
    pub fn bijectivity_defect(&self) -> f64 {
        let mut arcs: Vec<(f64, f64)> = (0..self.len())
            .map(|i| (self.image_start(i), self.interval_length(i)))
            .collect();
        arcs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut defect: f64 = 0.0;
        for i in 0..arcs.len() {
            let (start, len) = arcs[i];
            let next = arcs[(i + 1) % arcs.len()].0;
            defect = defect.max((wrap_angle(next - start) - len).abs());
        }
        defect
    }

    /// Ranks of the image arcs in circle order: entry `i` is the position of
    /// interval `i`'s image among all images.
    pub fn permutation(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.image_start(a)
                .partial_cmp(&self.image_start(b))
                .unwrap()
        });
        let mut rank = vec![0usize; self.len()];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos;
        }
        rank
    }

    /// The composition self o other (apply `other` first), with breakpoints
    /// within `snap` merged.
    pub fn compose(&self, other: &IetWithFlips, snap: f64) -> IetWithFlips {
        let mut cuts: Vec<f64> = other.breakpoints.clone();
        for &b in &self.breakpoints {
            let i = other.image_interval_of(b);
            cuts.push(other.preimage_in(i, b));
        }
        cuts = snap_sorted(cuts, snap);
        let mut maps = Vec::with_capacity(cuts.len());
        for i in 0..cuts.len() {
            let a = cuts[i];
            let b = cuts[(i + 1) % cuts.len()];
            let mid = a + wrap_angle(b - a + TAU) / 2.0;
            let m1 = &other.maps[other.interval_of(mid)];
            let x = m1.eval(mid);
            let m2 = &self.maps[self.interval_of(x)];
            let flip = m1.flip != m2.flip;
            let y = m2.eval(x);
            let offset = if flip {
                wrap_angle(y + mid)
            } else {
                wrap_angle(y - mid)
            };
            maps.push(IntervalMap {
                flip,
                offset,
                label: m1.label,
            });
        }
        IetWithFlips::new(cuts, maps)
    }
}

fn snap_sorted(mut cuts: Vec<f64>, snap: f64) -> Vec<f64> {
    for c in cuts.iter_mut() {
        *c = wrap_angle(*c);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(cuts.len());
    for c in cuts {
        if out.last().map_or(true, |&l| c - l > snap) {
            out.push(c);
        }
    }
    // wrap-around merge
    if out.len() > 1 {
        let first = out[0];
        let last = *out.last().unwrap();
        if TAU - (last - first) <= snap {
            out.pop();
        }
    }
    out
}

/// Largest energy magnitude for which the chord meets the tile in every
/// direction: the clearance of the circumcenter from the sides. Zero or
/// negative when the tile does not contain its circumcenter.
pub fn tau_max(poly: &CyclicPolygon) -> f64 {
    let orient = poly.orientation();
    let mut min_d = f64::INFINITY;
    for k in 0..poly.side_count() {
        let e = poly.side(k);
        let t = (e.b - e.a).normalized();
        let a = e.a - poly.circumcenter();
        // signed distance of the circumcenter from the side line, positive
        // toward the interior
        let d = orient * t.cross(-a);
        min_d = min_d.min(d);
    }
    min_d
}

/// Exit side of the oriented line (p + t d) through a convex tile, with the
/// exit parameter.
fn exit_side(poly: &CyclicPolygon, p: Point2, d: Vec2) -> Option<(usize, f64)> {
    let orient = poly.orientation();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut side = None;
    for k in 0..poly.side_count() {
        let e = poly.side(k);
        let tang = e.b - e.a;
        let num = orient * tang.cross(p - e.a);
        let den = orient * tang.cross(d);
        if den.abs() < 1e-15 {
            if num < 0.0 {
                return None;
            }
            continue;
        }
        let bound = -num / den;
        if den > 0.0 {
            lo = lo.max(bound);
        } else if bound < hi {
            hi = bound;
            side = Some(k);
        }
    }
    if lo + 1e-12 < hi {
        side.map(|k| (k, hi))
    } else {
        None
    }
}

/// The step map `F` (3 or 4 flipped intervals) and the first return
/// `T = F o F` (6 or 8 intervals) of the billiard flow at energy `tau` in
/// the tiling of `poly`, on the circle of per-tile direction angles.
pub fn first_return_iet(
    poly: &CyclicPolygon,
    tau: f64,
) -> Result<(IetWithFlips, IetWithFlips), IetError> {
    let limit = tau_max(poly);
    if tau.abs() >= limit - 1e-9 {
        return Err(IetError::DegenerateChord { tau, limit });
    }
    let eta = tau.asin();
    let center = poly.circumcenter();
    let mut cuts: Vec<f64> = poly
        .vertices()
        .iter()
        .map(|&v| wrap_angle((v - center).angle() + eta))
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut maps = Vec::with_capacity(cuts.len());
    for i in 0..cuts.len() {
        let a = cuts[i];
        let b = cuts[(i + 1) % cuts.len()];
        let mid = a + wrap_angle(b - a + TAU) / 2.0;
        let u = Vec2::from_angle(mid);
        let foot = center + Vec2::new(u.y, -u.x) * tau;
        let (k, _) = exit_side(poly, foot, u).ok_or(IetError::DegenerateChord { tau, limit })?;
        let mu = poly.side_vector(k).angle();
        maps.push(IntervalMap {
            flip: true,
            offset: wrap_angle(2.0 * mu),
            label: Some(k),
        });
    }
    let f = IetWithFlips::new(cuts, maps);
    let t = f.compose(&f, 1e-9);
    Ok((f, t))
}

/// Compare the interval exchange orbit against the simulator: trace `n` tile
/// visits from `start` and check that the per-tile direction angles and the
/// exit-side words agree pointwise.
pub fn coding_crosscheck(
    t: &Tiling,
    tau: f64,
    start: (Point2, Vec2),
    n: usize,
) -> Result<bool, IetError> {
    let (f, _) = first_return_iet(t.base(), tau)?;
    let opts = TraceOptions {
        max_steps: n + 1,
        // keep tracing past recurrences so the full word is produced
        recurrence_eps: 0.0,
        ..Default::default()
    };
    let rec = trace(t, start.0, start.1.normalized(), &opts)?;
    if matches!(rec.status, TrajectoryStatus::SingularHit { .. }) || rec.crossings.len() < n {
        return Err(IetError::SingularTrajectory { wanted: n });
    }
    let y0 = match rec.start_tile.color {
        Color::White => wrap_angle(rec.start_dir.angle()),
        Color::Grey => wrap_angle(rec.start_dir.angle() + std::f64::consts::PI),
    };
    let (orbit, word) = f.iterate(y0, n, 1e-12)?;
    // simulator angles per visit and exit sides per visit
    let mut y_sim = Vec::with_capacity(n + 1);
    y_sim.push(y0);
    for c in rec.crossings.iter().take(n) {
        let y = match c.tile.color {
            Color::White => wrap_angle(c.direction.angle()),
            Color::Grey => wrap_angle(c.direction.angle() + std::f64::consts::PI),
        };
        y_sim.push(y);
    }
    for (a, b) in orbit.iter().zip(&y_sim) {
        if circ_dist(*a, *b) > 1e-6 {
            return Ok(false);
        }
    }
    for (i, c) in rec.crossings.iter().take(n).enumerate() {
        if f.maps[word[i]].label != Some(c.side) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Energy of the line through `p` with direction `d` relative to a tile
/// centered at the origin (helper shared with tests).
pub fn chord_energy(p: Point2, d: Vec2) -> f64 {
    line_tau(p, d)
}
