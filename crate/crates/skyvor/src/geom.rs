//! Planar primitives: points, orientation, convex hulls, logarithmic
//! extreme-point and containment queries, and small half-plane feasibility
//! problems.
//!
//! Orientation goes through an adaptive exact predicate, so hulls of
//! integer-valued inputs are combinatorially exact. Everything else is plain
//! double arithmetic; callers that need exactness arrange for integer inputs
//! (dot products of integers up to 1e6 are exact in f64).

use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product (positive = `o` is CCW of `self`).
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotate by +90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            Point::new(self.x / n, self.y / n)
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic (x, then y) comparison for canonical orderings.
    pub fn lex_cmp(self, o: Point) -> std::cmp::Ordering {
        self.x
            .partial_cmp(&o.x)
            .unwrap()
            .then(self.y.partial_cmp(&o.y).unwrap())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Sign of the signed area of triangle (a, b, c): +1 for a left turn,
/// 0 for collinear, -1 for a right turn. Exact for all double inputs.
pub fn orient2d(a: Point, b: Point, c: Point) -> i32 {
    let v = robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    );
    // robust returns positive for CCW under the (counter)clockwise convention
    // used here; only the sign is meaningful.
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Degeneracy tag of a polygon produced by [`convex_hull`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// All input points coincide; one vertex.
    Point,
    /// All input points collinear; the two extreme vertices.
    Segment,
    /// A proper polygon: at least 3 vertices, strictly convex.
    Proper,
}

/// A convex polygon in counterclockwise order, strictly convex (no three
/// consecutive vertices collinear), first vertex lexicographically smallest.
/// Degenerate forms keep 1 or 2 vertices and are tagged.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    verts: Vec<Point>,
}

impl ConvexPolygon {
    /// Wrap a vertex list that is already canonical (CCW, strictly convex,
    /// lexicographically smallest first). Debug-checked.
    pub fn from_canonical(verts: Vec<Point>) -> Self {
        let p = ConvexPolygon { verts };
        debug_assert!(p.check_canonical(), "polygon not canonical: {:?}", p.verts);
        p
    }

    pub fn vertices(&self) -> &[Point] {
        &self.verts
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.verts[i % self.verts.len()]
    }

    pub fn degeneracy(&self) -> Degeneracy {
        match self.verts.len() {
            1 => Degeneracy::Point,
            2 => Degeneracy::Segment,
            _ => Degeneracy::Proper,
        }
    }

    fn check_canonical(&self) -> bool {
        let n = self.verts.len();
        if n == 0 {
            return false;
        }
        for i in 0..n {
            if self.verts[i].lex_cmp(self.verts[0]) == std::cmp::Ordering::Less {
                return false;
            }
        }
        if n >= 3 {
            for i in 0..n {
                let a = self.verts[i];
                let b = self.verts[(i + 1) % n];
                let c = self.verts[(i + 2) % n];
                if orient2d(a, b, c) <= 0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Rotate `verts` so the lexicographically smallest vertex is first.
fn canonical_rotation(mut verts: Vec<Point>) -> Vec<Point> {
    let mut best = 0;
    for i in 1..verts.len() {
        if verts[i].lex_cmp(verts[best]) == std::cmp::Ordering::Less {
            best = i;
        }
    }
    verts.rotate_left(best);
    verts
}

/// Andrew's monotone chain. Collinear points are dropped (strict convexity);
/// all-collinear input degrades to a 2-vertex segment, all-equal to a single
/// vertex. Result is canonical CCW.
pub fn convex_hull(points: &[Point]) -> Result<ConvexPolygon> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(*b));
    pts.dedup();
    if pts.len() == 1 {
        return Ok(ConvexPolygon { verts: pts });
    }

    let build = |iter: &mut dyn Iterator<Item = Point>| -> Vec<Point> {
        let mut chain: Vec<Point> = Vec::new();
        for p in iter {
            while chain.len() >= 2
                && orient2d(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0
            {
                chain.pop();
            }
            chain.push(p);
        }
        chain
    };

    let mut lower = build(&mut pts.iter().copied());
    let mut upper = build(&mut pts.iter().rev().copied());
    // each chain repeats the other's endpoints
    lower.pop();
    upper.pop();
    if lower.len() == 1 && upper.len() == 1 {
        // all collinear: keep the two lexicographic extremes
        return Ok(ConvexPolygon {
            verts: vec![pts[0], pts[pts.len() - 1]],
        });
    }
    lower.extend(upper);
    Ok(ConvexPolygon {
        verts: canonical_rotation(lower),
    })
}

/// Index of the vertex maximizing `dot(vertex, dir)` in O(log h) probes.
/// Ties (a direction normal to an edge) resolve to the smallest index in
/// canonical order.
pub fn extreme_point(poly: &ConvexPolygon, dir: Point) -> Result<(usize, Point)> {
    let h = poly.len();
    if h < 3 {
        return Err(Error::DegeneratePolygon);
    }
    if dir.x == 0.0 && dir.y == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let score = |i: usize| poly.verts[i % h].dot(dir);
    // sign of score(j) - score(i): positive when j scores higher
    let cmp = |i: usize, j: usize| -> i32 {
        let d = score(j) - score(i);
        if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        }
    };
    // unique local maximum: at least the successor, strictly above the
    // predecessor (under ties this holds for exactly one vertex)
    let extr = |i: usize| cmp(i + 1, i) >= 0 && cmp(i, i + h - 1) < 0;

    let mut i = if extr(0) {
        0
    } else {
        let (mut lo, mut hi) = (0usize, h);
        let mut found = None;
        while lo + 1 < hi {
            let m = (lo + hi) / 2;
            if extr(m) {
                found = Some(m);
                break;
            }
            let ls = cmp(lo + 1, lo);
            let ms = cmp(m + 1, m);
            if ls < ms || (ls == ms && ls == cmp(lo, m)) {
                hi = m;
            } else {
                lo = m;
            }
        }
        found.unwrap_or(lo)
    };
    // settle an edge-normal tie onto the smallest canonical index
    let prev = (i + h - 1) % h;
    let next = (i + 1) % h;
    if cmp(next, i) == 0 && next < i {
        i = next;
    }
    if cmp(prev, i) == 0 && prev < i {
        i = prev;
    }
    Ok((i, poly.verts[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

/// Classify `q` against a convex polygon in O(log h) via the fan from the
/// first vertex. Degenerate polygons classify against the point or segment.
pub fn point_in_convex_polygon(poly: &ConvexPolygon, q: Point) -> Containment {
    let vs = &poly.verts;
    let h = vs.len();
    match h {
        0 => Containment::Outside,
        1 => {
            if vs[0] == q {
                Containment::Boundary
            } else {
                Containment::Outside
            }
        }
        2 => {
            if orient2d(vs[0], vs[1], q) == 0 && on_segment_collinear(vs[0], vs[1], q) {
                Containment::Boundary
            } else {
                Containment::Outside
            }
        }
        _ => {
            let v0 = vs[0];
            let o_first = orient2d(v0, vs[1], q);
            let o_last = orient2d(v0, vs[h - 1], q);
            if o_first < 0 || o_last > 0 {
                return Containment::Outside;
            }
            if o_first == 0 {
                return if on_segment_collinear(v0, vs[1], q) {
                    Containment::Boundary
                } else {
                    Containment::Outside
                };
            }
            if o_last == 0 {
                return if on_segment_collinear(v0, vs[h - 1], q) {
                    Containment::Boundary
                } else {
                    Containment::Outside
                };
            }
            // largest k with q not right of the diagonal v0 -> v_k
            let (mut lo, mut hi) = (1usize, h - 1);
            while lo + 1 < hi {
                let m = (lo + hi) / 2;
                if orient2d(v0, vs[m], q) >= 0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            match orient2d(vs[lo], vs[lo + 1], q) {
                s if s > 0 => Containment::Inside,
                0 => Containment::Boundary,
                _ => Containment::Outside,
            }
        }
    }
}

/// `q` is known collinear with segment (a, b); is it on the closed segment?
fn on_segment_collinear(a: Point, b: Point, q: Point) -> bool {
    let t = (q - a).dot(b - a);
    t >= 0.0 && t <= (b - a).norm2()
}

/// The constraint a·x + b·y ≤ c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfplane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Halfplane {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Halfplane { a, b, c }
    }

    pub fn normal(&self) -> Point {
        Point::new(self.a, self.b)
    }

    /// Signed violation at `p` (positive = outside).
    pub fn violation(&self, p: Point) -> f64 {
        self.a * p.x + self.b * p.y - self.c
    }
}

/// Bounding box applied to every feasibility solve; keeps the incremental
/// optimum finite without changing answers for inputs within bounds.
const LP_BOX: f64 = 1e9;
const LP_EPS: f64 = 1e-12;

fn lp_slack(c: f64) -> f64 {
    LP_EPS * (1.0 + c.abs())
}

/// Witness point satisfying every constraint (within a small relative slack
/// on normalized rows), or None when the intersection is empty. Randomized
/// incremental (Seidel) with a fixed internal seed: deterministic for a given
/// input list, expected O(n).
pub fn halfplane_feasible(constraints: &[Halfplane]) -> Option<Point> {
    // normalize rows; degenerate normals degenerate to trivial accept/reject
    let mut rows: Vec<Halfplane> = Vec::with_capacity(constraints.len());
    for con in constraints {
        let n = con.normal().norm();
        if n == 0.0 || !n.is_finite() {
            if con.c >= 0.0 {
                continue;
            }
            return None;
        }
        rows.push(Halfplane::new(con.a / n, con.b / n, con.c / n));
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    order.shuffle(&mut rng);

    // minimize y (tiny x tilt for uniqueness): optimum of the empty system
    // sits at the box corner
    let obj = Point::new(1e-7, 1.0);
    let mut cur = Point::new(-LP_BOX, -LP_BOX);

    for (step, &ci) in order.iter().enumerate() {
        let row = rows[ci];
        if row.violation(cur) <= lp_slack(row.c) {
            continue;
        }
        // optimum moves onto this row's line; solve the 1D problem over the
        // prefix processed so far plus the box
        let n = row.normal();
        let p0 = n * row.c; // closest point of the line to the origin
        let u = n.perp();
        let mut tlo = f64::NEG_INFINITY;
        let mut thi = f64::INFINITY;
        let mut clip = |den: f64, num: f64| -> bool {
            // den * t <= num
            if den.abs() <= 1e-15 {
                return num >= -1e-9;
            }
            let bound = num / den;
            if den > 0.0 {
                thi = thi.min(bound);
            } else {
                tlo = tlo.max(bound);
            }
            true
        };
        // box: |p0 + t u| <= LP_BOX componentwise
        let ok = clip(u.x, LP_BOX - p0.x)
            && clip(-u.x, LP_BOX + p0.x)
            && clip(u.y, LP_BOX - p0.y)
            && clip(-u.y, LP_BOX + p0.y);
        if !ok {
            return None;
        }
        let mut feasible = true;
        for &pj in order.iter().take(step) {
            let g = rows[pj];
            let den = g.normal().dot(u);
            let num = g.c - g.normal().dot(p0);
            if den.abs() <= 1e-15 {
                if num < -lp_slack(g.c) {
                    feasible = false;
                    break;
                }
                continue;
            }
            let bound = num / den;
            if den > 0.0 {
                thi = thi.min(bound);
            } else {
                tlo = tlo.max(bound);
            }
        }
        if !feasible || tlo > thi + 1e-9 {
            return None;
        }
        let t = if obj.dot(u) > 0.0 { tlo } else { thi };
        let t = t.clamp(tlo.min(thi), thi.max(tlo));
        cur = p0 + u * t;
    }
    Some(cur)
}
