//! Reference skyline algorithms: the quadratic per-site scan, the pairwise
//! margin reduction, and the fast sort-scan paths for degenerate site sets.
//!
//! These exist to cross-check the diagram pipeline and to serve small or
//! degenerate inputs where building a diagram is wasted work. All three
//! agree exactly on integer inputs: every domination decision funnels
//! through differences of squared distances, which doubles compute exactly
//! in the supported coordinate range.

use crate::geom::{convex_hull, Degeneracy, Point};
use crate::reduction::{build_context, Mode};
use crate::{Dominated, Error, Result, SkylineResult};

/// A dominator-region membership query: is `q` strictly closer than
/// `anchor` to every site?
#[derive(Debug, Clone)]
pub struct DominatorRegionQuery {
    pub anchor: Point,
    pub sites: Vec<Point>,
}

/// Strict all-sites closeness test with tolerance: ties (within eps on the
/// squared scale) do not count as closer.
pub fn in_dominator_region(q: Point, query: &DominatorRegionQuery, eps: f64) -> bool {
    query
        .sites
        .iter()
        .all(|&s| (q - s).norm2() < (query.anchor - s).norm2() - eps)
}

fn check_inputs(points: &[Point], sites: &[Point]) -> Result<()> {
    if points.is_empty() || sites.is_empty() {
        return Err(Error::EmptyInput);
    }
    if points.iter().chain(sites).any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Ground truth by definition: p is dominated iff some other point is
/// strictly closer to every site. Witnesses are the lowest-id dominator.
pub fn skyline_brute(points: &[Point], sites: &[Point], eps: f64) -> Result<SkylineResult> {
    check_inputs(points, sites)?;
    let n = points.len();
    let mut res = SkylineResult::new("brute");
    let mut comparisons: u64 = 0;
    for i in 0..n {
        let mut witness = None;
        'dominators: for j in 0..n {
            if j == i {
                continue;
            }
            for &s in sites {
                comparisons += 1;
                if (points[j] - s).norm2() >= (points[i] - s).norm2() - eps {
                    continue 'dominators;
                }
            }
            witness = Some(j);
            break;
        }
        match witness {
            Some(j) => res.dominated.push(Dominated { id: i, witness: j }),
            None => res.skyline.push(i),
        }
    }
    res.counters.insert("comparisons".into(), comparisons);
    res.normalize();
    Ok(res)
}

/// The reduction collapses the all-sites test to a single margin: p
/// dominates q iff max over hull vertices s of d²(p,s) − d²(q,s) is
/// strictly negative, and the maximum is attained at the hull vertex
/// extreme in direction q − p. Quadratic in the points but O(log h) per
/// pair.
pub fn skyline_pairwise(points: &[Point], sites: &[Point], eps: f64) -> Result<SkylineResult> {
    check_inputs(points, sites)?;
    let ctx = build_context(sites, eps)?;
    if !ctx.is_full() {
        return Err(Error::NoDistancePolygon);
    }
    // duplicates collapse to their lowest-id representative: identical
    // positions have identical margins, bit for bit
    let mut first_at: std::collections::HashMap<(u64, u64), usize> = Default::default();
    let mut rep = vec![usize::MAX; points.len()];
    for (i, p) in points.iter().enumerate() {
        let key = (p.x.to_bits(), p.y.to_bits());
        rep[i] = *first_at.entry(key).or_insert(i);
    }
    let reps: Vec<usize> = (0..points.len()).filter(|&i| rep[i] == i).collect();
    let lifted: Vec<_> = points.iter().enumerate().map(|(i, &p)| ctx.lift(i, p)).collect();

    let mut dominance_tests: u64 = 0;
    let mut verdict: std::collections::HashMap<usize, Option<usize>> = Default::default();
    for &i in &reps {
        let mut witness = None;
        for &j in &reps {
            if j == i {
                continue;
            }
            dominance_tests += 1;
            if ctx.dominates(&lifted[j], &lifted[i])? {
                witness = Some(j);
                break;
            }
        }
        verdict.insert(i, witness);
    }
    let mut res = SkylineResult::new("pairwise");
    for i in 0..points.len() {
        match verdict[&rep[i]] {
            Some(w) => res.dominated.push(Dominated { id: i, witness: w }),
            None => res.skyline.push(i),
        }
    }
    res.counters.insert("dominance_tests".into(), dominance_tests);
    res.counters.insert("unique_points".into(), reps.len() as u64);
    res.normalize();
    Ok(res)
}

/// Near-linear paths when the sites do not span the plane. With one site
/// (or all sites coincident), domination is a strict order on distance to
/// it; with collinear sites it reduces to 2D strict dominance on the
/// distances to the two extremes, since the squared-distance difference is
/// linear along the segment and extremal at its ends.
pub fn skyline_degenerate(points: &[Point], sites: &[Point], eps: f64) -> Result<SkylineResult> {
    check_inputs(points, sites)?;
    let hull = convex_hull(sites)?;
    let mut res = SkylineResult::new("degenerate");
    match hull.degeneracy() {
        Degeneracy::Proper => {
            return Err(Error::Protocol(
                "degenerate path called with a full-dimensional site hull".into(),
            ))
        }
        Degeneracy::Point => {
            let s = hull.vertex(0);
            let n = points.len();
            let key: Vec<f64> = points.iter().map(|&p| (p - s).norm2()).collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| key[a].partial_cmp(&key[b]).unwrap().then(a.cmp(&b)));
            // sweep in distance order; everything strictly below d² − eps
            // has been passed, and the lowest id among it is the witness
            let mut head = 0usize;
            let mut min_id = usize::MAX;
            for &i in &order {
                while head < n && key[order[head]] < key[i] - eps {
                    min_id = min_id.min(order[head]);
                    head += 1;
                }
                if min_id != usize::MAX {
                    res.dominated.push(Dominated { id: i, witness: min_id });
                } else {
                    res.skyline.push(i);
                }
            }
        }
        Degeneracy::Segment => {
            let e1 = hull.vertex(0);
            let e2 = hull.vertex(1);
            let n = points.len();
            let u: Vec<f64> = points.iter().map(|&p| (p - e1).norm2()).collect();
            let v: Vec<f64> = points.iter().map(|&p| (p - e2).norm2()).collect();
            let dominated_flag = {
                // sort by u; a point is dominated iff some strictly-smaller-u
                // point also has strictly smaller v (strict 2D dominance)
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| u[a].partial_cmp(&u[b]).unwrap().then(a.cmp(&b)));
                let mut flag = vec![false; n];
                let mut head = 0usize;
                let mut min_v = f64::INFINITY;
                for &i in &order {
                    while head < n && u[order[head]] < u[i] - eps {
                        min_v = min_v.min(v[order[head]]);
                        head += 1;
                    }
                    flag[i] = min_v < v[i] - eps;
                }
                flag
            };
            for i in 0..n {
                if !dominated_flag[i] {
                    res.skyline.push(i);
                    continue;
                }
                // lowest-id witness, constant-time feature test per candidate
                let w = (0..n)
                    .find(|&j| j != i && u[j] < u[i] - eps && v[j] < v[i] - eps)
                    .expect("flagged point has a dominator");
                res.dominated.push(Dominated { id: i, witness: w });
            }
        }
    }
    res.counters.insert("points".into(), points.len() as u64);
    res.normalize();
    Ok(res)
}

/// Routing helper: true when the site set needs the degenerate path.
pub fn needs_degenerate(sites: &[Point], eps: f64) -> Result<bool> {
    let ctx = build_context(sites, eps)?;
    Ok(!matches!(ctx.mode, Mode::Full))
}
