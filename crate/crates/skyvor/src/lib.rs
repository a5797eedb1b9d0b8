//! Spatial skyline queries in the plane.
//!
//! A point `p` of a set `P` dominates another point `q` (with respect to a
//! site set `S`) when `p` is strictly closer than `q` to every site. The
//! skyline of `P` is the subset dominated by nobody. This crate computes it
//! three ways:
//!
//! * [`oracles::skyline_brute`]: the definition, checked site by site.
//! * [`oracles::skyline_pairwise`]: pairwise tests through the reduction of
//!   domination to a single convex-distance comparison ([`reduction`]).
//! * [`voronoi::compute_skyline`]: incremental construction of a compact
//!   additively weighted Voronoi diagram whose non-empty cells are exactly
//!   the skyline ([`voronoi`]).
//!
//! The reduction lifts every point to a weight `ω_p = |p − o|²` for an origin
//! `o` inside the convex hull of `S` and replaces "closer to every site" by
//! one comparison under the convex distance `d_M` whose unit ball `M` is the
//! polar dual of the hull. All three paths agree exactly on integer inputs;
//! ties within `eps` count as non-domination.

pub mod geom;
pub mod oracles;
pub mod reduction;
pub mod vertex;
pub mod voronoi;

use std::collections::BTreeMap;

pub use geom::{ConvexPolygon, Halfplane, Point};
pub use reduction::{Mode, ReductionContext, WeightedSite};
pub use vertex::VertexResult;
pub use voronoi::{compute_skyline, DiagramStats, InsertOutcome, SpokeDiagram};

/// Errors surfaced by the geometric layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyInput,
    #[error("operation requires a non-degenerate polygon")]
    DegeneratePolygon,
    #[error("direction vector must be nonzero")]
    ZeroDirection,
    #[error("origin outside hull")]
    OriginOutsideHull,
    #[error("no distance polygon in degenerate mode")]
    NoDistancePolygon,
    #[error("site {0} has empty cell vs {1}")]
    EmptyCellAgainst(usize, usize),
    #[error("degenerate triple: coincident site positions")]
    DegenerateTriple,
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("non-finite coordinate")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, Error>;

/// Outcome of a skyline computation, shared by every algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkylineResult {
    /// Algorithm tag: "brute", "pairwise", "voronoi" or "degenerate".
    pub algorithm: String,
    /// Sorted ids (0-based input order) of non-dominated points.
    pub skyline: Vec<usize>,
    /// Dominated ids with a witness that dominates each, sorted by id.
    pub dominated: Vec<Dominated>,
    /// Work counters, algorithm specific.
    pub counters: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dominated {
    pub id: usize,
    pub witness: usize,
}

impl SkylineResult {
    pub fn new(algorithm: &str) -> Self {
        SkylineResult {
            algorithm: algorithm.to_string(),
            skyline: Vec::new(),
            dominated: Vec::new(),
            counters: BTreeMap::new(),
        }
    }

    /// Finalize: sort both partitions by id.
    pub fn normalize(&mut self) {
        self.skyline.sort_unstable();
        self.skyline.dedup();
        self.dominated.sort_unstable_by_key(|d| d.id);
    }
}

/// Default tolerance for domination comparisons (squared-distance scale).
pub const EPS_DOM: f64 = 1e-9;
/// Default tolerance for vertex-solver scale parameters.
pub const EPS_VERTEX: f64 = 1e-10;
/// Coordinate magnitude bound accepted by the library.
pub const COORD_BOUND: f64 = 1e6;
