//! The triply periodic level-surface model of the billiard flow.
//!
//! For a fixed energy, the union over all angle levels of the corresponding
//! trajectory families is a piecewise smooth surface in (X, Theta)-space,
//! periodic under two horizontal-plus-angle shifts and the vertical 2 pi
//! shift. The surface is represented implicitly by a membership predicate
//! (never meshed); saddles of the height function sit where chords pass
//! through vertex fold-images, and counting their prongs gives the Euler
//! characteristic and genus of the quotient surface.

use crate::folding::{angle_in_tile, folding_isometry, line_tau};
use crate::geom::{
    circ_dist, contains_circumcenter, wrap_angle, CenterLocation, Containment, Point2, Vec2,
};
use crate::tiling::{TileAddress, Tiling};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HelicoidError {
    #[error("point is within tolerance of a tiling vertex")]
    NearVertex,
    #[error("genus is only computed at zero energy")]
    NonZeroTau,
    #[error("circumcenter lies on the tile boundary; the saddle structure is degenerate")]
    RightAngledDegenerate,
    #[error("period vectors are linearly dependent")]
    SingularLattice,
}

/// A period of the surface: plane shift plus angle shift.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PeriodVector {
    pub shift: Vec2,
    pub angle: f64,
}

/// Critical point of the height function: a vertex class at an angle level
/// where a chord runs into the vertex fold-image.
#[derive(Clone, Debug, Serialize)]
pub struct Saddle {
    /// Representative tiling vertex (a base tile vertex).
    pub vertex: Point2,
    pub class: usize,
    /// Angle level of the critical chord.
    pub level: f64,
    /// Leaf-ends meeting the vertex at the critical level, both colors.
    pub prongs: usize,
    /// Morse index 1 - prongs/2; -2 for triangle monkey saddles, -1 for
    /// quad simple saddles when the tile contains its circumcenter.
    pub index: i32,
}

/// The rectifying linear map and the section-plane covector.
#[derive(Clone, Debug, Serialize)]
pub struct Rectification {
    /// Maps the period vectors to the standard basis.
    pub matrix: [[f64; 3]; 3],
    /// Projective normal of the images of constant-angle planes; does not
    /// depend on the energy.
    pub covector: [f64; 3],
    pub det: f64,
}

/// Surface model: a tiling plus an energy, queried through membership.
#[derive(Clone, Debug)]
pub struct HelicoidModel {
    tiling: Tiling,
    tau: f64,
}

/// The three period vectors of the surface. The plane parts are the lattice
/// basis; the angle parts are the fold rotations per step, with the third
/// period purely vertical.
pub fn period_lattice(t: &Tiling) -> (PeriodVector, PeriodVector, PeriodVector) {
    let (v1, v2) = t.lattice_basis();
    let (p1, p2) = t.fold_generators();
    (
        PeriodVector { shift: v1, angle: p1 },
        PeriodVector { shift: v2, angle: p2 },
        PeriodVector {
            shift: Vec2::ZERO,
            angle: TAU,
        },
    )
}

/// Invert the period matrix: the unique linear map sending the periods to
/// the standard basis, with the covector normal to constant-angle plane
/// images.
pub fn rectify(t: &Tiling) -> Result<Rectification, HelicoidError> {
    let (w1, w2, w3) = period_lattice(t);
    let m = [
        [w1.shift.x, w2.shift.x, w3.shift.x],
        [w1.shift.y, w2.shift.y, w3.shift.y],
        [w1.angle, w2.angle, w3.angle],
    ];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-12 {
        return Err(HelicoidError::SingularLattice);
    }
    let cof = |r1: usize, r2: usize, c1: usize, c2: usize| {
        m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
    };
    let inv = [
        [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det],
        [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det],
        [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det],
    ];
    // normal of the image planes: transpose of the period matrix applied to
    // the vertical unit covector, i.e. the angle row of the periods
    let h_raw = [w1.angle, w2.angle, w3.angle];
    let norm = (h_raw[0] * h_raw[0] + h_raw[1] * h_raw[1] + h_raw[2] * h_raw[2]).sqrt();
    Ok(Rectification {
        matrix: inv,
        covector: [h_raw[0] / norm, h_raw[1] / norm, h_raw[2] / norm],
        det: 1.0 / det,
    })
}

impl HelicoidModel {
    pub fn new(tiling: Tiling, tau: f64) -> Self {
        HelicoidModel { tiling, tau }
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Distance from the leaf family: |energy of the level-theta line
    /// through x - tau|. Zero exactly on the surface.
    pub fn membership_defect(&self, x: Point2, theta: f64) -> Result<f64, HelicoidError> {
        let (addr, containment) = self
            .tiling
            .locate_relaxed(x)
            .map_err(|_| HelicoidError::NearVertex)?;
        if matches!(containment, Containment::OnVertex(_)) {
            return Err(HelicoidError::NearVertex);
        }
        let dir = Vec2::from_angle(angle_in_tile(&self.tiling, theta, addr));
        let local = x - self.tiling.circumcenter(addr);
        Ok((line_tau(local, dir) - self.tau).abs())
    }

    /// Whether (x, theta) lies on the surface, within `tol`.
    pub fn contains(&self, x: Point2, theta: f64, tol: f64) -> Result<bool, HelicoidError> {
        Ok(self.membership_defect(x, theta)? <= tol)
    }

    /// A random on-surface sample: a point on a leaf of a random level in a
    /// random tile near the origin.
    pub fn sample_point(&self, rng: &mut impl Rng) -> (Point2, f64) {
        loop {
            let theta = rng.gen_range(0.0..TAU);
            let addr = TileAddress::new(
                rng.gen_range(-4..=4),
                rng.gen_range(-4..=4),
                if rng.gen::<bool>() {
                    crate::tiling::Color::White
                } else {
                    crate::tiling::Color::Grey
                },
            );
            let dir = Vec2::from_angle(angle_in_tile(&self.tiling, theta, addr));
            let tile = self.tiling.tile_at(addr);
            let center = tile.circumcenter();
            let foot = center + Vec2::new(dir.y, -dir.x) * self.tau;
            if let Some((lo, hi)) = crate::billiard::clip_line_to_tile(&tile, foot, dir) {
                let s = rng.gen_range(0.1..0.9);
                let x = foot + dir * (lo + (hi - lo) * s);
                if self.tiling.locate(x).is_ok() {
                    return (x, theta);
                }
            }
        }
    }
}

/// All saddles of the height function at energy `tau`: for each vertex
/// class, the two levels whose chord runs into the vertex, kept when at
/// least four leaf-ends meet there.
pub fn saddles(t: &Tiling, tau: f64) -> Vec<Saddle> {
    let mut out = Vec::new();
    let eta = tau.asin();
    for (class, (vi, v)) in t.vertex_class_reps().into_iter().enumerate() {
        let _ = vi;
        let ang = v.angle();
        // arriving chord: v is the forward endpoint; departing: backward
        let configs = [
            (wrap_angle(ang + eta), -Vec2::from_angle(ang + eta)),
            (
                wrap_angle(ang - PI - eta),
                Vec2::from_angle(ang - PI - eta),
            ),
        ];
        for (level, ray) in configs {
            let prongs = count_prongs(t, v, ray);
            let index = 1 - (prongs as i32) / 2;
            if index <= -1 {
                out.push(Saddle {
                    vertex: v,
                    class,
                    level,
                    prongs,
                    index,
                });
            }
        }
    }
    out
}

/// Number of incident tile corners whose folded wedge contains the critical
/// ray direction at the vertex fold-image.
fn count_prongs(t: &Tiling, v: Point2, ray: Vec2) -> usize {
    let ring = match t.tiles_around_vertex(v) {
        Ok(r) => r,
        Err(_) => return 0,
    };
    let mut count = 0;
    for (addr, vi) in ring {
        let tile = t.tile_at(addr);
        let n = tile.side_count();
        let prev = tile.vertex((vi + n - 1) % n);
        let next = tile.vertex((vi + 1) % n);
        let corner = tile.vertex(vi);
        let iso = folding_isometry(t, addr);
        let fold_v = iso.apply(corner);
        let e1 = (iso.apply(prev) - fold_v).normalized();
        let e2 = (iso.apply(next) - fold_v).normalized();
        let bis = iso
            .apply_dir(((prev - corner).normalized() + (next - corner).normalized()).normalized());
        if e1.cross(ray) * e1.cross(bis) > 0.0 && e2.cross(ray) * e2.cross(bis) > 0.0 {
            count += 1;
        }
    }
    count
}

/// Euler characteristic and genus of the compact surface at zero energy,
/// from the sum of saddle indices.
pub fn euler_genus(t: &Tiling, tau: f64) -> Result<(i32, i32), HelicoidError> {
    if tau != 0.0 {
        return Err(HelicoidError::NonZeroTau);
    }
    if contains_circumcenter(t.base()) == CenterLocation::Boundary {
        return Err(HelicoidError::RightAngledDegenerate);
    }
    let chi: i32 = saddles(t, 0.0).iter().map(|s| s.index).sum();
    debug_assert!(chi % 2 == 0);
    Ok((chi, (2 - chi) / 2))
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    /// Max membership defect after shifting samples by each lattice period.
    pub lattice_shift_defect: f64,
    /// Max membership defect after the central reflection through
    /// (reflection center, pi).
    pub central_defect: f64,
    /// Max membership defect after the half-turn of the angle coordinate;
    /// about 2|tau| away from zero energy.
    pub angle_half_turn_defect: f64,
    /// Max deviation of theta + theta' from pi over trajectory pairs related
    /// by the central reflection of the fundamental domain.
    pub pairing_defect: f64,
    /// Membership defect at (reflection center, pi/2); equals |tau|, so the
    /// symmetry fixed point lies on the surface exactly at zero energy.
    pub fixed_point_defect: f64,
    /// Connectedness of the surface is assumed, not verified.
    pub connectedness_assumed: bool,
}

/// Empirical check of the surface symmetries on `n_samples` on-surface
/// points.
pub fn check_symmetries(model: &HelicoidModel, n_samples: usize, seed: u64) -> SymmetryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = model.tiling();
    let (w1, w2, _) = period_lattice(t);
    let m = t.reflection_center();
    let mut lattice_defect: f64 = 0.0;
    let mut central_defect: f64 = 0.0;
    let mut s_defect: f64 = 0.0;
    let mut sampled = 0;
    while sampled < n_samples {
        let (x, theta) = model.sample_point(&mut rng);
        let shifted = [
            (x + w1.shift, wrap_angle(theta + w1.angle)),
            (x + w2.shift, wrap_angle(theta + w2.angle)),
            (x, wrap_angle(theta + TAU)),
        ];
        let mut ok = true;
        let mut probe = |d: Result<f64, HelicoidError>, acc: &mut f64| match d {
            Ok(v) => *acc = acc.max(v),
            Err(_) => ok = false,
        };
        for (sx, st) in shifted {
            probe(model.membership_defect(sx, st), &mut lattice_defect);
        }
        probe(
            model.membership_defect(m * 2.0 - x, wrap_angle(TAU - theta)),
            &mut central_defect,
        );
        probe(
            model.membership_defect(x, wrap_angle(theta + PI)),
            &mut s_defect,
        );
        if ok {
            sampled += 1;
        }
    }
    // trajectory pairing through the fundamental domain
    let mut pairing_defect: f64 = 0.0;
    let mut paired = 0;
    let opts = crate::billiard::TraceOptions::with_max_steps(64);
    while paired < (n_samples / 10).max(8) {
        let (x, theta) = model.sample_point(&mut rng);
        let d = Vec2::from_angle(angle_in_tile(
            t,
            theta,
            match t.locate(x) {
                Ok(a) => a,
                Err(_) => continue,
            },
        ));
        let g1 = match crate::billiard::trace(t, x, d, &opts) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let g2 = match crate::billiard::trace(t, m * 2.0 - x, d, &opts) {
            Ok(r) => r,
            Err(_) => continue,
        };
        pairing_defect = pairing_defect.max(circ_dist(wrap_angle(g1.theta + g2.theta), PI));
        paired += 1;
    }
    let fixed_point_defect = model
        .membership_defect(m, PI / 2.0)
        .unwrap_or(f64::INFINITY);
    SymmetryReport {
        lattice_shift_defect: lattice_defect,
        central_defect,
        angle_half_turn_defect: s_defect,
        pairing_defect,
        fixed_point_defect,
        connectedness_assumed: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::CyclicPolygon;

    fn tri(a: f64, b: f64) -> Tiling {
        Tiling::new(CyclicPolygon::triangle_from_angles(a, b, PI - a - b).unwrap())
    }

    fn quad() -> Tiling {
        Tiling::new(CyclicPolygon::quad_from_positions([-2.0, -0.4, 1.0, 2.4]).unwrap())
    }

    #[test]
    fn period_lattice_matches_tile_data() {
        // equilateral: v1 = -c, angle 2 gamma = 2 pi / 3
        let t = tri(PI / 3.0, PI / 3.0);
        let (w1, w2, w3) = period_lattice(&t);
        let c_vec = t.base().side_vector(2);
        assert!((w1.shift + c_vec).norm() < 1e-12);
        assert!(circ_dist(w1.angle, 2.0 * PI / 3.0) < 1e-9);
        let a_vec = t.base().side_vector(0);
        assert!((w2.shift + a_vec).norm() < 1e-12);
        assert!(circ_dist(w2.angle, 2.0 * PI / 3.0) < 1e-9);
        assert_eq!(w3.shift, Vec2::ZERO);
        assert!((w3.angle - TAU).abs() < 1e-15);

        // square tile: v1 = a + b with angle 2 delta = pi
        let sq = Tiling::new(
            CyclicPolygon::quad_from_positions([-3.0 * PI / 4.0, -PI / 4.0, PI / 4.0, 3.0 * PI / 4.0])
                .unwrap(),
        );
        let (w1, _, _) = period_lattice(&sq);
        let ab = sq.base().side_vector(0) + sq.base().side_vector(1);
        assert!((w1.shift - ab).norm() < 1e-12);
        assert!(circ_dist(w1.angle, PI) < 1e-9);
    }

    #[test]
    fn rectify_sends_periods_to_basis() {
        for t in [tri(1.2, 0.8), quad()] {
            let r = rectify(&t).unwrap();
            let (w1, w2, w3) = period_lattice(&t);
            for (j, w) in [w1, w2, w3].iter().enumerate() {
                let v = [w.shift.x, w.shift.y, w.angle];
                for i in 0..3 {
                    let got: f64 = (0..3).map(|k| r.matrix[i][k] * v[k]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((got - want).abs() < 1e-12, "A V_{j} component {i}");
                }
            }
            // the covector evaluates image points by their original angle
            let p = [0.3, -0.7, 1.9f64];
            let q = [1.1, 0.4, 1.9f64];
            let apply = |m: &[[f64; 3]; 3], v: &[f64; 3]| {
                [
                    m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
                    m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
                    m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
                ]
            };
            let hp: f64 = apply(&r.matrix, &p)
                .iter()
                .zip(&r.covector)
                .map(|(a, b)| a * b)
                .sum();
            let hq: f64 = apply(&r.matrix, &q)
                .iter()
                .zip(&r.covector)
                .map(|(a, b)| a * b)
                .sum();
            assert!(
                (hp - hq).abs() < 1e-12,
                "equal-angle points land on one covector level"
            );
        }
    }

    #[test]
    fn membership_on_traced_trajectory() {
        use crate::billiard::{trace, TraceOptions};
        let t = tri(1.2, 0.9);
        let model = HelicoidModel::new(t.clone(), 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, theta) = model.sample_point(&mut rng);
        let addr = t.locate(x).unwrap();
        let d = Vec2::from_angle(angle_in_tile(&t, theta, addr));
        let rec = trace(&t, x, d, &TraceOptions::with_max_steps(500)).unwrap();
        assert!((rec.tau - 0.2).abs() < 1e-9);
        for c in rec.crossings.iter().take(100) {
            let defect = model
                .membership_defect(c.point + c.direction * 1e-4, rec.theta)
                .unwrap();
            assert!(defect < 1e-7, "trajectory point defect {defect}");
        }
    }

    #[test]
    fn membership_rejects_off_leaf_points() {
        let t = quad();
        let model = HelicoidModel::new(t, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut rejected = 0;
        let mut total = 0;
        while total < 200 {
            let x = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let theta = rng.gen_range(0.0..TAU);
            match model.contains(x, theta, 1e-7) {
                Ok(inside) => {
                    total += 1;
                    if !inside {
                        rejected += 1;
                    }
                }
                Err(_) => {}
            }
        }
        assert!(rejected > 195, "random points are almost never on the surface");
    }

    #[test]
    fn saddle_structure_acute_triangle() {
        let t = tri(1.2, 0.9);
        let s = saddles(&t, 0.0);
        assert_eq!(s.len(), 2, "one vertex class, two levels");
        for sd in &s {
            assert_eq!(sd.prongs, 6);
            assert_eq!(sd.index, -2);
        }
        assert!(circ_dist(s[0].level, wrap_angle(s[1].level + PI)) < 1e-9, "antipodal levels");
        let (chi, g) = euler_genus(&t, 0.0).unwrap();
        assert_eq!((chi, g), (-4, 3));
    }

    #[test]
    fn saddle_structure_obtuse_triangle() {
        let t = tri(0.3, 0.4);
        let s = saddles(&t, 0.0);
        assert!(s.is_empty(), "no critical leaves reach the vertex");
        let (chi, g) = euler_genus(&t, 0.0).unwrap();
        assert_eq!((chi, g), (0, 1));
    }

    #[test]
    fn saddle_structure_containing_quad() {
        let t = quad();
        assert_eq!(contains_circumcenter(t.base()), CenterLocation::Inside);
        let s = saddles(&t, 0.0);
        assert_eq!(s.len(), 4, "two vertex classes, two levels each");
        for sd in &s {
            assert_eq!(sd.prongs, 4);
            assert_eq!(sd.index, -1);
        }
        let (chi, g) = euler_genus(&t, 0.0).unwrap();
        assert_eq!((chi, g), (-4, 3));
        // levels come in antipodal pairs per class
        for class in 0..2 {
            let levels: Vec<f64> = s
                .iter()
                .filter(|sd| sd.class == class)
                .map(|sd| sd.level)
                .collect();
            assert_eq!(levels.len(), 2);
            assert!(circ_dist(levels[0], wrap_angle(levels[1] + PI)) < 1e-9);
        }
    }

    #[test]
    fn right_triangle_is_degenerate() {
        let t = tri(PI / 2.0, PI / 6.0);
        assert_eq!(
            euler_genus(&t, 0.0).unwrap_err(),
            HelicoidError::RightAngledDegenerate
        );
        assert_eq!(euler_genus(&tri(1.0, 1.0), 0.1).unwrap_err(), HelicoidError::NonZeroTau);
    }

    #[test]
    fn symmetries_at_zero_and_nonzero_energy() {
        let t = tri(1.2, 0.9);
        let zero = check_symmetries(&HelicoidModel::new(t.clone(), 0.0), 200, 31);
        assert!(zero.lattice_shift_defect < 1e-7);
        assert!(zero.central_defect < 1e-7);
        assert!(zero.angle_half_turn_defect < 1e-7, "half-turn symmetry at zero energy");
        assert!(zero.pairing_defect < 1e-7);
        assert!(zero.fixed_point_defect < 1e-9);

        let tau = 0.25;
        let nz = check_symmetries(&HelicoidModel::new(t, tau), 200, 32);
        assert!(nz.lattice_shift_defect < 1e-7);
        assert!(nz.central_defect < 1e-7);
        assert!(
            (nz.angle_half_turn_defect - 2.0 * tau).abs() < 1e-6,
            "half-turn symmetry breaks by 2 tau, got {}",
            nz.angle_half_turn_defect
        );
        assert!(nz.pairing_defect < 1e-7);
        assert!((nz.fixed_point_defect - tau).abs() < 1e-9);
    }

    #[test]
    fn section_points_lie_on_traced_leaves() {
        use crate::billiard::{trace, TraceOptions};
        let t = quad();
        let tau = 0.15;
        let model = HelicoidModel::new(t.clone(), tau);
        let theta = 0.9;
        // sample section points in a window by clipping leaf lines to tiles
        let mut section: Vec<Point2> = Vec::new();
        for m in -1..=1 {
            for n in -1..=1 {
                for color in [crate::tiling::Color::White, crate::tiling::Color::Grey] {
                    let addr = TileAddress::new(m, n, color);
                    let tile = t.tile_at(addr);
                    let dir = Vec2::from_angle(angle_in_tile(&t, theta, addr));
                    let foot = tile.circumcenter() + Vec2::new(dir.y, -dir.x) * tau;
                    if let Some((lo, hi)) = crate::billiard::clip_line_to_tile(&tile, foot, dir) {
                        for s in [0.3, 0.7] {
                            section.push(foot + dir * (lo + (hi - lo) * s));
                        }
                    }
                }
            }
        }
        assert!(section.len() > 8);
        for p in section {
            if t.locate(p).is_err() {
                continue;
            }
            let addr = t.locate(p).unwrap();
            let d = Vec2::from_angle(angle_in_tile(&t, theta, addr));
            let rec = trace(&t, p, d, &TraceOptions::with_max_steps(50)).unwrap();
            assert!((rec.tau - tau).abs() < 1e-9);
            assert!(circ_dist(rec.theta, theta) < 1e-9);
            assert!(model.membership_defect(p, theta).unwrap() < 1e-12);
        }
    }
}
