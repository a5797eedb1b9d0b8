//! Weighted bisector and Voronoi vertex primitives.
//!
//! Both operations work on the lifted view: site `i` contributes the convex
//! cone `f_i(q) = d_M(x_i, q) + ω_i` and the diagram is the lower envelope of
//! these cones. [`bisector_point`] intersects a ray with the surface
//! `f_a = f_b`; [`weighted_vertex`] computes the weighted 1-center of a
//! triple, i.e. the smallest `t` whose three homothets `x_i + (t − ω_i)·M`
//! share a point.
//!
//! The solver is tolerance-based: a closed-form pairwise touching value
//! (support-function form, exact up to rounding) brackets the answer, and a
//! halfplane-feasibility bisection resolves the genuinely three-way cases.

use crate::geom::{extreme_point, halfplane_feasible, Halfplane, Point};
use crate::reduction::{ReductionContext, WeightedSite};
use crate::{Error, Result, EPS_VERTEX};

/// Outcome of [`weighted_vertex`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexResult {
    /// Equal weighted distance `t` to all three sites at `v`.
    Finite { v: Point, t: f64 },
    /// Only two homothets are critical; the triple's vertex lies at
    /// infinity. Carries the id of the non-critical (middle) site.
    AtInfinity { middle: usize },
    /// The named site's cone lies on or above another's everywhere; its cell
    /// would be empty.
    EmptyCell { site: usize },
    /// Active-set classification failed.
    NoVertex,
}

/// A scaled translate of the distance polygon: `center + scale·M`, which is
/// exactly `{v : d_M(center, v) ≤ scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homothet {
    pub center: Point,
    pub scale: f64,
}

impl Homothet {
    /// One halfplane per hull vertex: `a_k·(v − center) ≤ scale` with
    /// `a_k = 2 s_k`.
    pub fn constraints(&self, ctx: &ReductionContext) -> Vec<Halfplane> {
        ctx.hull
            .vertices()
            .iter()
            .map(|&s| {
                let a = s * 2.0;
                Halfplane::new(a.x, a.y, self.scale + a.dot(self.center))
            })
            .collect()
    }
}

/// Weighted distance `d_M(site.pos, q) + ω` in the translated frame.
fn cone(ctx: &ReductionContext, s: &WeightedSite, q: Point) -> f64 {
    ctx.distance_dm(s.pos, q).unwrap_or(f64::INFINITY) + s.weight
}

/// Crossing of the ray `a.pos + r·dir` (r ≥ 0) with the weighted bisector of
/// `a` and `b`, or `None` when the ray never leaves `a`'s side. Uses that
/// `f_a − f_b` is concave along rays out of `a.pos` (linear minus convex), so
/// "still on `a`'s side" is a prefix property and bisection applies; whether
/// a crossing exists at all is decided by the asymptotic intercept.
pub fn bisector_point(
    ctx: &ReductionContext,
    a: &WeightedSite,
    b: &WeightedSite,
    dir: Point,
) -> Result<Option<(Point, f64)>> {
    if !ctx.is_full() {
        return Err(Error::NoDistancePolygon);
    }
    if dir.x == 0.0 && dir.y == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let apex_gap = ctx.distance_dm(b.pos, a.pos)? + b.weight - a.weight;
    if apex_gap <= ctx.eps_dom {
        return Err(Error::EmptyCellAgainst(a.id, b.id));
    }
    let u = dir.normalized();

    // growth rate of d_M along u and the set of hull vertices attaining it
    let (_, s_star) = extreme_point(&ctx.hull, u)?;
    let sigma = 2.0 * s_star.dot(u);
    let rate_tol = 1e-12 * (1.0 + sigma.abs());
    let mut shift = f64::NEG_INFINITY;
    for &s in ctx.hull.vertices() {
        if 2.0 * s.dot(u) >= sigma - rate_tol {
            shift = shift.max(2.0 * s.dot(a.pos - b.pos));
        }
    }
    // limit of f_a − f_b along the ray
    let c_inf = a.weight - b.weight - shift;
    if c_inf <= ctx.eps_dom {
        return Ok(None);
    }

    let g = |r: f64| -> f64 {
        let p = a.pos + u * r;
        (sigma * r + a.weight) - cone(ctx, b, p)
    };
    let mut hi = 1.0 + (b.pos - a.pos).norm();
    let mut rounds = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        rounds += 1;
        if rounds > 120 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        let t_mid = sigma * mid + a.weight;
        if gm.abs() <= 0.01 * EPS_VERTEX * (1.0 + t_mid.abs()) {
            lo = mid;
            hi = mid;
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + hi) {
            break;
        }
    }
    let r = 0.5 * (lo + hi);
    let v = a.pos + u * r;
    Ok(Some((v, sigma * r + a.weight)))
}

/// Support function of the distance polygon: `max over vertices m of d·m`.
fn support_m(ctx: &ReductionContext, d: Point) -> f64 {
    let dual = ctx.dual.as_ref().expect("full mode");
    dual.vertices().iter().map(|m| m.dot(d)).fold(f64::MIN, f64::max)
}

/// Smallest `t` at which the homothets of `i` and `j` touch: the largest over
/// the sum polygon's edge normals `d` of
/// `(d·(x_j − x_i) + ω_i h_M(d) + ω_j h_M(−d)) / (h_M(d) + h_M(−d))`.
fn pair_touch_scale(ctx: &ReductionContext, i: &WeightedSite, j: &WeightedSite) -> f64 {
    let dual = ctx.dual.as_ref().expect("full mode");
    let delta = j.pos - i.pos;
    let mut t = f64::NEG_INFINITY;
    let verts = dual.vertices();
    let h = verts.len();
    for k in 0..h {
        let e = verts[(k + 1) % h] - verts[k];
        // outward normal of a CCW polygon edge
        let n = Point::new(e.y, -e.x).normalized();
        for d in [n, -n] {
            let hp = support_m(ctx, d);
            let hm = support_m(ctx, -d);
            let val = (d.dot(delta) + i.weight * hp + j.weight * hm) / (hp + hm);
            t = t.max(val);
        }
    }
    t
}

/// The reduced constraint system for "all three homothets at scale `t` share
/// a point": per hull vertex `a_k`, `a_k·v ≤ min_i ((t − ω_i) + a_k·x_i)`.
fn triple_constraints(ctx: &ReductionContext, sites: [&WeightedSite; 3], t: f64) -> Vec<Halfplane> {
    ctx.hull
        .vertices()
        .iter()
        .map(|&s| {
            let a = s * 2.0;
            let c = sites
                .iter()
                .map(|w| (t - w.weight) + a.dot(w.pos))
                .fold(f64::INFINITY, f64::min);
            Halfplane::new(a.x, a.y, c)
        })
        .collect()
}

/// Refine a near-vertex to the corner where the three active constraints
/// meet: solve `a_{k_i}·v − t = a_{k_i}·x_i − ω_i` for (v, t) and re-derive
/// the active hull vertex of each site until stable.
fn refine_corner(
    ctx: &ReductionContext,
    sites: [&WeightedSite; 3],
    mut v: Point,
    mut t: f64,
) -> Option<(Point, f64)> {
    for _ in 0..12 {
        let mut rows = [[0.0f64; 3]; 3];
        let mut rhs = [0.0f64; 3];
        for (r, w) in sites.iter().enumerate() {
            let d = v - w.pos;
            let dir = if d.x == 0.0 && d.y == 0.0 { Point::new(1.0, 0.0) } else { d };
            let (_, s) = extreme_point(&ctx.hull, dir).ok()?;
            let a = s * 2.0;
            rows[r] = [a.x, a.y, -1.0];
            rhs[r] = a.dot(w.pos) - w.weight;
        }
        let sol = solve3(rows, rhs)?;
        let nv = Point::new(sol[0], sol[1]);
        let nt = sol[2];
        let moved = (nv - v).norm() + (nt - t).abs();
        v = nv;
        t = nt;
        if moved <= 1e-13 * (1.0 + t.abs()) {
            break;
        }
    }
    Some((v, t))
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Weighted Voronoi vertex of three sites: the weighted 1-center under
/// `d_M`. Returns `EmptyCell` when one site's cone is covered by another's,
/// `Finite(v, t)` when all three homothets are critical at the optimum,
/// `AtInfinity(middle)` when only a pair is.
pub fn weighted_vertex(
    ctx: &ReductionContext,
    a: &WeightedSite,
    b: &WeightedSite,
    c: &WeightedSite,
) -> Result<VertexResult> {
    if !ctx.is_full() {
        return Err(Error::NoDistancePolygon);
    }
    let sites = [a, b, c];
    for i in 0..3 {
        for j in (i + 1)..3 {
            if sites[i].pos == sites[j].pos {
                return Err(Error::DegenerateTriple);
            }
        }
    }
    // apex coverage: i's cone at or below j's apex means j's cell is empty
    for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
        let gap = ctx.distance_dm(sites[i].pos, sites[j].pos)? + sites[i].weight
            - sites[j].weight;
        if gap <= ctx.eps_dom {
            return Ok(VertexResult::EmptyCell {
                site: sites[j].id,
            });
        }
    }

    let mut t0 = sites.iter().map(|s| s.weight).fold(f64::MIN, f64::max);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        t0 = t0.max(pair_touch_scale(ctx, sites[i], sites[j]));
    }
    let tol = |t: f64| EPS_VERTEX * (1.0 + t.abs());

    let mut t_star = t0;
    let mut witness = halfplane_feasible(&triple_constraints(ctx, sites, t0 + 2.0 * tol(t0)));
    if witness.is_none() {
        // genuinely three-way: bracket upward, then bisect
        let diam = {
            let mut d: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        d = d.max(ctx.distance_dm(sites[i].pos, sites[j].pos)?);
                    }
                }
            }
            d
        };
        let mut hi = t0 + diam + 1.0;
        let mut guard = 0;
        while halfplane_feasible(&triple_constraints(ctx, sites, hi)).is_none() {
            hi = 2.0 * (hi - t0) + t0 + 1.0;
            guard += 1;
            if guard > 60 {
                return Ok(VertexResult::NoVertex);
            }
        }
        let mut lo = t0;
        while hi - lo > 0.25 * tol(hi) {
            let mid = 0.5 * (lo + hi);
            if halfplane_feasible(&triple_constraints(ctx, sites, mid)).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        t_star = hi;
        witness = halfplane_feasible(&triple_constraints(ctx, sites, t_star + tol(t_star)));
    }
    let Some(w) = witness else {
        return Ok(VertexResult::NoVertex);
    };

    let active_tol = 10.0 * tol(t_star);
    let mut active = [false; 3];
    let mut n_active = 0;
    for (i, s) in sites.iter().enumerate() {
        let r = cone(ctx, s, w);
        if (r - t_star).abs() <= active_tol {
            active[i] = true;
            n_active += 1;
        }
    }
    match n_active {
        3 => {
            let refined = refine_corner(ctx, sites, w, t_star);
            let (v, t) = refined.unwrap_or((w, t_star));
            let resid = sites
                .iter()
                .map(|s| (cone(ctx, s, v) - t).abs())
                .fold(0.0, f64::max);
            if resid <= 1e-7 * (1.0 + t.abs()) {
                Ok(VertexResult::Finite { v, t })
            } else {
                // refinement drifted (tied active cones); keep the witness if
                // it meets the contract
                let resid_w = sites
                    .iter()
                    .map(|s| (cone(ctx, s, w) - t_star).abs())
                    .fold(0.0, f64::max);
                if resid_w <= 1e-7 * (1.0 + t_star.abs()) {
                    Ok(VertexResult::Finite { v: w, t: t_star })
                } else {
                    Ok(VertexResult::NoVertex)
                }
            }
        }
        2 => {
            let middle = sites
                .iter()
                .enumerate()
                .find(|(i, _)| !active[*i])
                .map(|(_, s)| s.id)
                .unwrap();
            Ok(VertexResult::AtInfinity { middle })
        }
        _ => Ok(VertexResult::NoVertex),
    }
}
