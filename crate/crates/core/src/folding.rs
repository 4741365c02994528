//! The global folding map and the quasi-periodic angle function.
//!
//! Folding two neighboring tiles along their shared edge superimposes them;
//! local foldability makes the procedure globally consistent, so every tile
//! carries one isometry into the closed circumdisk of the base tile, with
//! all tile vertices landing on the unit circle. Same-color tiles fold to
//! images differing by a rotation about the center; the per-lattice-step
//! rotation angles generate the whole atlas, which is how
//! [`folding_isometry`] produces isometries in O(1) for any address.

use crate::geom::{wrap_angle, GeomError, Point2, Vec2, EPS};
use crate::tiling::{Color, TileAddress, Tiling};
use serde::Serialize;
use std::f64::consts::PI;

/// Planar isometry: x -> lin * x + trans. Grey tiles fold with reversed
/// orientation (det lin = -1).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FoldIsometry {
    pub lin: [[f64; 2]; 2],
    pub trans: Vec2,
}

impl FoldIsometry {
    pub fn identity() -> Self {
        FoldIsometry {
            lin: [[1.0, 0.0], [0.0, 1.0]],
            trans: Vec2::ZERO,
        }
    }

    /// Reflection across the line through `p` and `q`.
    pub fn reflection(p: Point2, q: Point2) -> Self {
        let t = (q - p).normalized();
        let lin = [
            [t.x * t.x - t.y * t.y, 2.0 * t.x * t.y],
            [2.0 * t.x * t.y, t.y * t.y - t.x * t.x],
        ];
        let lp = Vec2::new(
            lin[0][0] * p.x + lin[0][1] * p.y,
            lin[1][0] * p.x + lin[1][1] * p.y,
        );
        FoldIsometry { lin, trans: p - lp }
    }

    fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        FoldIsometry {
            lin: [[c, -s], [s, c]],
            trans: Vec2::ZERO,
        }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Vec2::new(
            self.lin[0][0] * p.x + self.lin[0][1] * p.y + self.trans.x,
            self.lin[1][0] * p.x + self.lin[1][1] * p.y + self.trans.y,
        )
    }

    /// Image of a direction under the linear part.
    pub fn apply_dir(&self, d: Vec2) -> Vec2 {
        Vec2::new(
            self.lin[0][0] * d.x + self.lin[0][1] * d.y,
            self.lin[1][0] * d.x + self.lin[1][1] * d.y,
        )
    }

    /// self o other (apply `other` first).
    pub fn compose(&self, other: &FoldIsometry) -> FoldIsometry {
        let a = &self.lin;
        let b = &other.lin;
        let lin = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        FoldIsometry {
            lin,
            trans: self.apply(other.trans),
        }
    }

    pub fn det(&self) -> f64 {
        self.lin[0][0] * self.lin[1][1] - self.lin[0][1] * self.lin[1][0]
    }

    pub fn is_orientation_preserving(&self) -> bool {
        self.det() > 0.0
    }

    /// Rotation angle of the linear part (orientation-preserving maps only).
    pub fn rotation_angle(&self) -> f64 {
        debug_assert!(self.is_orientation_preserving());
        wrap_angle(self.lin[1][0].atan2(self.lin[0][0]))
    }

    pub fn max_dist(&self, other: &FoldIsometry, probes: &[Point2]) -> f64 {
        probes
            .iter()
            .map(|&p| self.apply(p).dist(other.apply(p)))
            .fold(0.0, f64::max)
    }
}

/// Derive the rotation angles the fold picks up per lattice step by composing
/// explicit single-edge folds from the base tile to its two lattice
/// translates. Called once when a [`Tiling`] is built.
pub(crate) fn derive_generators(t: &Tiling) -> (f64, f64) {
    let psi = |target: TileAddress| -> f64 {
        let iso = fold_to_lattice_neighbor(t, target);
        debug_assert!(iso.is_orientation_preserving());
        iso.rotation_angle()
    };
    (psi(TileAddress::white(1, 0)), psi(TileAddress::white(0, 1)))
}

/// Fold isometry of a same-color lattice neighbor of the base tile, built
/// from two single-edge folds through a shared Grey neighbor.
fn fold_to_lattice_neighbor(t: &Tiling, target: TileAddress) -> FoldIsometry {
    let origin = TileAddress::white(0, 0);
    for k in 0..t.side_count() {
        let g = t.neighbor_across(origin, k);
        for j in 0..t.side_count() {
            if t.neighbor_across(g, j) == target {
                let path = [origin, g, target];
                return fold_along_path(t, &path).expect("valid fold path");
            }
        }
    }
    unreachable!("lattice translates share a neighbor with the base tile")
}

/// Compose single-edge folds along an explicit chain of pairwise-adjacent
/// tiles starting at the fixed base tile. Local foldability makes the result
/// independent of the chain; [`folding_isometry`] is the O(1) equivalent.
pub fn fold_along_path(t: &Tiling, path: &[TileAddress]) -> Result<FoldIsometry, GeomError> {
    if path.first() != Some(&TileAddress::white(0, 0)) {
        return Err(GeomError::BadParameters(
            "fold path must start at the base tile".into(),
        ));
    }
    let mut iso = FoldIsometry::identity();
    for w in path.windows(2) {
        let (cur, next) = (w[0], w[1]);
        let side = (0..t.side_count())
            .find(|&k| t.neighbor_across(cur, k) == next)
            .ok_or_else(|| GeomError::BadParameters("path tiles are not adjacent".into()))?;
        let edge = t.tile_at(cur).side(side);
        iso = iso.compose(&FoldIsometry::reflection(edge.a, edge.b));
    }
    Ok(iso)
}

/// Rotation angle between fold images of same-color tiles at lattice offset
/// (m, n); additive modulo 2 pi.
pub fn phi(t: &Tiling, m: i64, n: i64) -> f64 {
    let (p1, p2) = t.fold_generators();
    wrap_angle(m as f64 * p1 + n as f64 * p2)
}

/// Fold isometry of any tile, in closed form.
pub fn folding_isometry(t: &Tiling, addr: TileAddress) -> FoldIsometry {
    let chi = phi(t, addr.m, addr.n);
    let rot = FoldIsometry::rotation(chi);
    let shift = t.lattice_point(addr.m, addr.n);
    let base = match addr.color {
        Color::White => rot,
        Color::Grey => {
            let a = t.base().vertex(0);
            let b = t.base().vertex(1);
            rot.compose(&FoldIsometry::reflection(a, b))
        }
    };
    // pre-translate by -shift: x -> base(x - shift)
    let lin_shift = base.apply(shift) - base.trans;
    FoldIsometry {
        lin: base.lin,
        trans: base.trans - lin_shift,
    }
}

/// The quasi-periodic angle function: the direction that a trajectory of
/// reference angle `theta0` (its direction in the base tile frame) has
/// inside the addressed tile. Identity on the base tile; same-color tiles
/// differ by the lattice rotation angle, opposite colors flip.
pub fn angle_in_tile(t: &Tiling, theta0: f64, addr: TileAddress) -> f64 {
    let chi = phi(t, addr.m, addr.n);
    match addr.color {
        Color::White => wrap_angle(theta0 - chi),
        Color::Grey => wrap_angle(chi - theta0 + PI),
    }
}

/// Inverse of [`angle_in_tile`]: the reference angle of a trajectory whose
/// segment inside `addr` has direction angle `dir_angle`.
pub fn reference_angle(t: &Tiling, dir_angle: f64, addr: TileAddress) -> f64 {
    let chi = phi(t, addr.m, addr.n);
    match addr.color {
        Color::White => wrap_angle(dir_angle + chi),
        Color::Grey => wrap_angle(chi + PI - dir_angle),
    }
}

/// A chord of the unit circle in (energy, angle) coordinates: oriented
/// direction `theta`, signed distance `tau` to the center (positive when the
/// center lies to the left).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Chord {
    pub tau: f64,
    pub theta: f64,
}

impl Chord {
    pub fn new(tau: f64, theta: f64) -> Self {
        Chord { tau, theta }
    }

    /// Foot of the perpendicular from the center.
    pub fn foot(&self) -> Point2 {
        let u = Vec2::from_angle(self.theta);
        Vec2::new(u.y, -u.x) * self.tau
    }
}

/// Endpoints of the chord on the unit circle, ordered along the chord
/// direction.
pub fn chord_of(c: &Chord) -> Result<(Point2, Point2), GeomError> {
    if c.tau.abs() >= 1.0 - EPS {
        return Err(GeomError::TangentChord);
    }
    let u = Vec2::from_angle(c.theta);
    let foot = c.foot();
    let half = (1.0 - c.tau * c.tau).sqrt();
    Ok((foot - u * half, foot + u * half))
}

/// Signed distance from the oriented line through `p` with direction `d` to
/// the origin; positive when the origin is to the left.
pub fn line_tau(p: Point2, d: Vec2) -> f64 {
    p.cross(d)
}
