//! Refractive billiards in periodic triangle and cyclic-quadrilateral tilings.
//!
//! A ray of light crossing an edge between two tiles refracts with Snell
//! coefficient -1: the line of the outgoing ray is the reflection of the
//! incoming line across the crossed edge. This crate simulates those
//! trajectories, folds them onto a single circumdisk, reduces the dynamics to
//! interval exchange transformations with flips, builds the associated
//! triply periodic level-surface model (period lattice, rectifying map,
//! saddles, genus), and runs the empirical experiments behind the
//! periodic-or-linearly-escaping classification and its exceptional set.
//!
//! Module map:
//! - [`geom`]: planar primitives, cyclic polygons, incidence predicates
//! - [`tiling`]: the periodic two-colored tiling, addressing, point location
//! - [`folding`]: the global folding map, quasi-periodic angle function, chords
//! - [`billiard`]: trajectory tracing, energy invariant, classification
//! - [`iet`]: first-return interval exchange with flips, orbit coding
//! - [`helicoid`]: period lattice, surface membership, saddles, genus
//! - [`analysis`]: subtractive simplex algorithm, tree/flower checks, sweeps

pub mod analysis;
pub mod billiard;
pub mod folding;
pub mod geom;
pub mod helicoid;
pub mod iet;
pub mod tiling;

pub use billiard::{trace, TraceOptions, TrajectoryRecord, TrajectoryStatus};
pub use geom::{CyclicPolygon, Edge, Point2, PolygonKind, Rect, Vec2};
pub use helicoid::HelicoidModel;
pub use iet::IetWithFlips;
pub use tiling::{Color, TileAddress, Tiling};
