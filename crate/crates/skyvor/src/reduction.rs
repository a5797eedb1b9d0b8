//! Reduction of spatial domination to one convex-distance comparison.
//!
//! Fix an origin `o` strictly inside `CH(S)` and translate everything by
//! `−o`. Each point `p` gets the lifting weight `ω_p = |p|²` (translated
//! frame). The distance polygon `M` is the polar dual of the translated hull,
//! `M = {v : 2s·v ≤ 1  for every hull vertex s}`, and the induced convex
//! distance is
//!
//! ```text
//! d_M(p, q) = max over hull vertices s of  2 s · (q − p)
//! ```
//!
//! Then `a` dominates `b` (strictly closer to every site) exactly when
//! `d_M(a, b) + ω_a < ω_b`. Equivalently, in untranslated coordinates,
//!
//! ```text
//! margin(a, b) = max over hull vertices s of  (d²(a, s) − d²(b, s)) < 0
//! ```
//!
//! The second form involves only squared Euclidean distances of inputs, so
//! for integer coordinates it is evaluated exactly in doubles; every
//! domination decision in this crate funnels through it.

use crate::geom::{
    convex_hull, extreme_point, point_in_convex_polygon, Containment, ConvexPolygon, Degeneracy,
    Point,
};
use crate::{Error, Result};

/// A point of `P` lifted for the weighted Voronoi view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSite {
    /// Index into the input point list.
    pub id: usize,
    /// Position translated so the context origin is (0,0).
    pub pos: Point,
    /// Lifting weight `ω = |pos|²`.
    pub weight: f64,
    /// Original (untranslated) position; carries the exact integer
    /// coordinates the margin predicate needs.
    pub world: Point,
}

/// How degenerate the site hull is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Proper hull; the full reduction applies.
    Full,
    /// All sites collinear; only the two extreme sites matter.
    TwoExtremes(Point, Point),
    /// All sites coincide.
    SingleSite(Point),
}

/// Everything needed to evaluate `d_M`, weights and domination.
#[derive(Debug, Clone)]
pub struct ReductionContext {
    /// Chosen origin in original coordinates (hull-vertex centroid).
    pub origin: Point,
    /// `CH(S)` translated by `−origin`.
    pub hull: ConvexPolygon,
    /// `CH(S)` in original coordinates (exact for integer input).
    pub hull_world: ConvexPolygon,
    /// Distance polygon `M` (polar dual of `hull`); `None` when degenerate.
    pub dual: Option<ConvexPolygon>,
    pub mode: Mode,
    pub eps_dom: f64,
}

/// Polar dual `M = {v : 2s·v ≤ 1 ∀ hull vertices s}` of a hull containing
/// the origin strictly inside. One dual vertex per hull edge: the solution
/// of `2 s_k · v = 1 = 2 s_{k+1} · v`.
pub fn polar_dual(hull: &ConvexPolygon) -> Result<ConvexPolygon> {
    if hull.len() < 3 {
        return Err(Error::DegeneratePolygon);
    }
    if point_in_convex_polygon(hull, Point::new(0.0, 0.0)) != Containment::Inside {
        return Err(Error::OriginOutsideHull);
    }
    let h = hull.len();
    let mut verts = Vec::with_capacity(h);
    for k in 0..h {
        let s = hull.vertex(k);
        let t = hull.vertex(k + 1);
        // 2s·v = 1, 2t·v = 1
        let det = 4.0 * s.cross(t);
        debug_assert!(det > 0.0, "hull edge degenerate under duality");
        verts.push(Point::new(2.0 * (t.y - s.y) / det, 2.0 * (s.x - t.x) / det));
    }
    // dual vertices of a CCW hull come out CCW; only re-rotate canonically
    let mut best = 0;
    for i in 1..h {
        if verts[i].lex_cmp(verts[best]) == std::cmp::Ordering::Less {
            best = i;
        }
    }
    verts.rotate_left(best);
    Ok(ConvexPolygon::from_canonical(verts))
}

/// Build the reduction for a site set. Degenerate hulls become modes, not
/// errors; the origin defaults to the hull-vertex centroid.
pub fn build_context(sites: &[Point], eps_dom: f64) -> Result<ReductionContext> {
    let hull_world = convex_hull(sites)?;
    match hull_world.degeneracy() {
        Degeneracy::Point => Ok(ReductionContext {
            origin: Point::new(0.0, 0.0),
            hull: hull_world.clone(),
            mode: Mode::SingleSite(hull_world.vertex(0)),
            hull_world,
            dual: None,
            eps_dom,
        }),
        Degeneracy::Segment => Ok(ReductionContext {
            origin: Point::new(0.0, 0.0),
            hull: hull_world.clone(),
            mode: Mode::TwoExtremes(hull_world.vertex(0), hull_world.vertex(1)),
            hull_world,
            dual: None,
            eps_dom,
        }),
        Degeneracy::Proper => {
            let h = hull_world.len();
            let mut cx = 0.0;
            let mut cy = 0.0;
            for v in hull_world.vertices() {
                cx += v.x;
                cy += v.y;
            }
            let origin = Point::new(cx / h as f64, cy / h as f64);
            build_context_with_origin(sites, origin, eps_dom)
        }
    }
}

/// Like [`build_context`] but with a caller-chosen origin, which must lie
/// strictly inside the hull (used by the origin-invariance tests). Requires a
/// non-degenerate hull.
pub fn build_context_with_origin(
    sites: &[Point],
    origin: Point,
    eps_dom: f64,
) -> Result<ReductionContext> {
    let hull_world = convex_hull(sites)?;
    if hull_world.len() < 3 {
        return Err(Error::DegeneratePolygon);
    }
    if point_in_convex_polygon(&hull_world, origin) != Containment::Inside {
        return Err(Error::OriginOutsideHull);
    }
    let translated: Vec<Point> = hull_world.vertices().iter().map(|&v| v - origin).collect();
    let hull = ConvexPolygon::from_canonical(translated);
    let dual = polar_dual(&hull)?;
    Ok(ReductionContext {
        origin,
        hull,
        hull_world,
        dual: Some(dual),
        mode: Mode::Full,
        eps_dom,
    })
}

impl ReductionContext {
    pub fn is_full(&self) -> bool {
        matches!(self.mode, Mode::Full)
    }

    /// Translate and weigh a point: `ω = |p − origin|²`.
    pub fn lift(&self, id: usize, p_world: Point) -> WeightedSite {
        let pos = p_world - self.origin;
        WeightedSite {
            id,
            pos,
            weight: pos.norm2(),
            world: p_world,
        }
    }

    /// [`Self::lift`] without a meaningful id (oracle and test plumbing).
    pub fn weight_of(&self, p_world: Point) -> WeightedSite {
        self.lift(0, p_world)
    }

    /// `d_M(p, q)`: one extreme-point query in direction `q − p`. Invariant
    /// under translation, so either frame works as long as both arguments
    /// share it.
    pub fn distance_dm(&self, p: Point, q: Point) -> Result<f64> {
        if !self.is_full() {
            return Err(Error::NoDistancePolygon);
        }
        let d = q - p;
        if d.x == 0.0 && d.y == 0.0 {
            return Ok(0.0);
        }
        let (_, s) = extreme_point(&self.hull, d)?;
        Ok(2.0 * s.dot(d))
    }

    /// Weighted distance from a lifted site to a point in translated frame.
    pub fn weighted_distance(&self, site: &WeightedSite, q: Point) -> Result<f64> {
        Ok(self.distance_dm(site.pos, q)? + site.weight)
    }

    /// `max over hull vertices s of (d²(a,s) − d²(b,s))`, evaluated in the
    /// original frame. Negative means `a` is strictly closer to every site;
    /// equals `d_M(a,b) + ω_a − ω_b`. Exact for integer inputs.
    pub fn domination_margin(&self, a: &WeightedSite, b: &WeightedSite) -> Result<f64> {
        if !self.is_full() {
            return Err(Error::NoDistancePolygon);
        }
        let dir = b.world - a.world;
        if dir.x == 0.0 && dir.y == 0.0 {
            return Ok(0.0);
        }
        let (_, s) = extreme_point(&self.hull_world, dir)?;
        let da = a.world - s;
        let db = b.world - s;
        Ok(da.norm2() - db.norm2())
    }

    /// Strict domination: `a` closer than `b` to every site, by more than
    /// `eps_dom`. Ties are non-domination.
    pub fn dominates(&self, a: &WeightedSite, b: &WeightedSite) -> Result<bool> {
        Ok(self.domination_margin(a, b)? < -self.eps_dom)
    }
}
