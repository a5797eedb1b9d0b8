//! Compact additively weighted Voronoi diagram ("spoke diagram") with
//! incremental insertion and a conflict history DAG.
//!
//! The diagram of sites x_i with weights ω_i under the convex distance d_M
//! partitions the plane by argmin of f_i(q) = d_M(x_i, q) + ω_i. Cells are
//! star shaped around their site, so each cell decomposes into fans hinged at
//! the site: one quadrilateral fan pair per bisector piece (an *edge region*,
//! cornered by the two sites and two Voronoi vertices) and one unbounded fan
//! per unbounded cell (an *outer region* between its two infinite spokes).
//! Instead of storing bisector polylines (Θ(h) segments each), a region
//! stores only its corner vertices: membership is a cone test plus one
//! f-comparison, and the whole diagram is O(n).
//!
//! Insertion is weight ordered. Because domination implies strictly smaller
//! weight, an inserted cell can never later become empty, and a rejected site
//! stays rejected (witnesses carry over transitively). Each insertion walks
//! the new cell's boundary counterclockwise through the existing cells,
//! computing new vertices where the boundary crosses old pieces, swallowing
//! the structure inside, and recording every destroyed region's replacements
//! as DAG children for point location.
//!
//! Exactness: for lifted integer inputs every structural predicate that
//! matters — domination margins at the apex, far-field winners per direction
//! cone — reduces to differences of squared integer distances in the original
//! frame, which doubles evaluate exactly. Structural ties resolve toward the
//! later inserted site, consistently in every predicate: the effective
//! diagram is the symbolic-perturbation limit for weights ω_i − i·δ, δ→0+.
//! That orientation is what makes the degenerate (2D-thick) bisectors of a
//! polygonal metric tractable incrementally — the newest site wins its own
//! boundary ties, so a freshly inserted non-dominated cell is never pinched
//! to a zero-width sliver by older structure.

use crate::geom::{extreme_point, Point};
use crate::oracles;
use crate::reduction::{build_context, Mode, ReductionContext, WeightedSite};
use crate::{Dominated, Error, Result, SkylineResult};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

type SId = usize;
type VId = usize;
type RId = usize;

/// Band half-width for structural tie detection, relative to the terms
/// compared. Predicates on lifted integer inputs are exact, but anything
/// routed through the translated frame (centroid division) carries ~1e-16
/// relative rounding; the band absorbs it, and banded ties resolve to the
/// later inserted site.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum VKind {
    Finite { pos: Point, t: f64 },
    /// Asymptote of the bisector of `lo` and `hi` in the transition between
    /// direction cone `class` and `class + 1`; `lo` wins the far field of
    /// cone `class`, `hi` the next one.
    Infinite { class: usize, lo: SId, hi: SId },
}

#[derive(Debug, Clone)]
struct VertexNode {
    kind: VKind,
    alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RKind {
    /// Single-site diagram: the whole plane.
    Plane { site: SId },
    /// Fan pair over one bisector piece. Seen from `a`, the piece spans
    /// counterclockwise from vertex `u` to vertex `w`; from `b` it runs
    /// `w` to `u`.
    Edge { a: SId, b: SId, u: VId, w: VId },
    /// Unbounded fan of `site` between its two infinite spokes, spanning
    /// counterclockwise `u` to `w`.
    Outer { site: SId, u: VId, w: VId },
}

#[derive(Debug, Clone)]
struct Region {
    kind: RKind,
    alive: bool,
    children: Vec<RId>,
}

/// Cycle entry: vertex, then the piece that follows it counterclockwise
/// (up to the next entry's vertex).
#[derive(Debug, Clone, Copy)]
struct CellEntry {
    v: VId,
    region: RId,
}

#[derive(Debug, Clone, Default)]
pub struct Counters {
    pub solver_calls: u64,
    pub regions_created: u64,
    pub regions_deleted: u64,
    pub vertices_created: u64,
    pub vertices_deleted: u64,
    pub locate_steps: u64,
    pub locate_fallbacks: u64,
    pub inserts: u64,
    pub rejects: u64,
    pub walk_failures: u64,
}

#[derive(Debug, Clone)]
pub struct DiagramStats {
    pub sites: usize,
    pub finite_vertices: usize,
    pub infinite_vertices: usize,
    pub alive_regions: usize,
    pub total_regions: usize,
    /// 3 spokes per finite vertex (one per defining site), 1 per infinite.
    pub spokes: usize,
    pub max_dag_depth: usize,
    pub dag_depth_histogram: Vec<usize>,
    pub counters: Counters,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InsertOutcome {
    Inserted,
    /// Strictly dominated by the inserted site with this input id. Apex ties
    /// within eps are not domination: the site is still inserted, and the
    /// later-site tie rule keeps its cell non-empty.
    Dominated { witness: usize },
}

pub struct SpokeDiagram {
    ctx: ReductionContext,
    /// All inserted sites keep `weight == |pos|²` exactly, enabling the
    /// integer-frame exact predicates.
    lifted: bool,
    sites: Vec<WeightedSite>,
    cells: Vec<Vec<CellEntry>>,
    verts: Vec<VertexNode>,
    regions: Vec<Region>,
    roots: Vec<RId>,
    counters: Counters,
    /// a_k = 2·(translated hull vertex k); index-aligned with hull_world.
    acons: Vec<Point>,
    /// Unit direction of the transition between cones k and k+1.
    class_dir: Vec<Point>,
    degraded: bool,
}

// ---------------------------------------------------------------------------
// walk bookkeeping

#[derive(Debug, Clone, Copy)]
enum EvKind {
    /// Boundary crosses an old piece: new finite vertex, leaving `from`,
    /// entering `to`.
    Cross { region: RId, from: SId, to: SId, point: Point },
    /// Walk runs to infinity against `cell` in class `class` on the named
    /// outer region. `starts` tells whether the walk begins (backward
    /// escape) or ends (forward escape) here.
    Escape { region: RId, cell: SId, class: usize, starts: bool },
}

#[derive(Debug, Clone, Copy)]
struct EventRec {
    vertex: VId,
    kind: EvKind,
}

#[derive(Debug, Clone, Copy)]
struct SegRec {
    cell: SId,
    region: RId,
}

#[derive(Debug)]
enum ScanOutcome {
    Exit { pos: usize, other: SId, point: Point },
    Escape { pos: usize, class: usize },
    Stuck,
}

#[derive(Debug, Clone, Copy)]
enum EntryState {
    /// Kickstart: the walk's presence is known only via an interior point of
    /// the cell at this direction from the cell site.
    Mid { dir: Point },
    /// Entered the stretch at a crossing with this direction. `inclusive`
    /// marks whether a crossing exactly at the entry still counts; hops
    /// through a just-recorded vertex are exclusive so the walk cannot
    /// ping-pong over the same crossing.
    AtDir { dir: Point, inclusive: bool },
    /// Walk starts on this class asymptote (the backward escape anchor).
    AtClass { class: usize },
    /// Frontier advanced past an infinite vertex; entry sits on the class
    /// spoke at the radius where the frontier crossed it.
    AtSpoke { class: usize },
}

impl SpokeDiagram {
    /// Empty diagram over a full-mode context.
    pub fn new(ctx: ReductionContext) -> Result<Self> {
        if !ctx.is_full() {
            return Err(Error::NoDistancePolygon);
        }
        let h = ctx.hull.len();
        let acons: Vec<Point> = ctx.hull.vertices().iter().map(|&s| s * 2.0).collect();
        let mut class_dir = Vec::with_capacity(h);
        for k in 0..h {
            let s = ctx.hull.vertex(k);
            let t = ctx.hull.vertex(k + 1);
            let det = 4.0 * s.cross(t);
            let m = Point::new(2.0 * (t.y - s.y) / det, 2.0 * (s.x - t.x) / det);
            class_dir.push(m.normalized());
        }
        debug_assert_eq!(ctx.hull_world.len(), h);
        Ok(SpokeDiagram {
            ctx,
            lifted: true,
            sites: Vec::new(),
            cells: Vec::new(),
            verts: Vec::new(),
            regions: Vec::new(),
            roots: Vec::new(),
            counters: Counters::default(),
            acons,
            class_dir,
            degraded: false,
        })
    }

    /// Diagram of up to three mutually non-dominating sites, built by the
    /// ordinary insertion chain.
    pub fn bootstrap(ctx: &ReductionContext, first_sites: &[WeightedSite]) -> Result<Self> {
        let mut d = SpokeDiagram::new(ctx.clone())?;
        for s in first_sites {
            match d.insert(*s)? {
                InsertOutcome::Inserted => {}
                InsertOutcome::Dominated { witness } => {
                    return Err(Error::Protocol(format!(
                        "bootstrap site {} dominated by site {}",
                        s.id, witness
                    )));
                }
            }
        }
        Ok(d)
    }

    pub fn context(&self) -> &ReductionContext {
        &self.ctx
    }

    pub fn sites(&self) -> &[WeightedSite] {
        &self.sites
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn is_degraded(&self) -> bool {
        self.degraded
    }

    fn h(&self) -> usize {
        self.acons.len()
    }

    /// Weighted distance of site `i` at translated-frame `q`.
    fn f_eval(&self, i: SId, q: Point) -> f64 {
        let s = &self.sites[i];
        let d = q - s.pos;
        if d.x == 0.0 && d.y == 0.0 {
            return s.weight;
        }
        let (k, _) = extreme_point(&self.ctx.hull, d).expect("full mode");
        self.acons[k].dot(d) + s.weight
    }

    /// Apex margin of inserted site `j` against a prospective site `s`:
    /// f_j(x_s) − ω_s, negative iff `j` beats `s` at its own apex. Exact for
    /// lifted integer inputs (squared-distance difference in world frame).
    fn apex_margin(&self, j: SId, s: &WeightedSite) -> f64 {
        if self.lifted && s.weight == s.pos.norm2() {
            self.ctx
                .domination_margin(&self.sites[j], s)
                .expect("full mode")
        } else {
            self.f_eval(j, s.pos) - s.weight
        }
    }

    /// Far-field intercept difference of sites `i`, `j` in direction cone
    /// `k` plus a magnitude scale for banding: negative means `i` wins that
    /// cone at infinity. Exact when lifted: equals d²(p_i, s_k) − d²(p_j, s_k)
    /// in world coordinates.
    fn intercept_diff_scaled(&self, i: SId, j: SId, k: usize) -> (f64, f64) {
        let si = &self.sites[i];
        let sj = &self.sites[j];
        if self.lifted {
            let hk = self.ctx.hull_world.vertex(k);
            let ti = (si.world - hk).norm2();
            let tj = (sj.world - hk).norm2();
            (ti - tj, 1.0 + ti.abs() + tj.abs())
        } else {
            let ti = si.weight - self.acons[k].dot(si.pos);
            let tj = sj.weight - self.acons[k].dot(sj.pos);
            (ti - tj, 1.0 + ti.abs() + tj.abs())
        }
    }

    /// Winner of cone `k`'s far field between two sites; banded ties go to
    /// the later inserted site.
    fn cone_winner(&self, i: SId, j: SId, k: usize) -> SId {
        let (d, scale) = self.intercept_diff_scaled(i, j, k % self.h());
        if d < -TIE_EPS * scale {
            i
        } else if d > TIE_EPS * scale {
            j
        } else {
            i.max(j)
        }
    }

    fn transition_at(&self, i: SId, j: SId, k: usize) -> bool {
        self.cone_winner(i, j, k) != self.cone_winner(i, j, (k + 1) % self.h())
    }

    fn vertex_dir(&self, from_site: SId, v: VId) -> Point {
        match self.verts[v].kind {
            VKind::Finite { pos, .. } => {
                let d = pos - self.sites[from_site].pos;
                if d.x == 0.0 && d.y == 0.0 {
                    Point::new(1.0, 0.0)
                } else {
                    d.normalized()
                }
            }
            VKind::Infinite { class, .. } => self.class_dir[class],
        }
    }

    /// Counterclockwise span of a region seen from one of its cells.
    fn region_span(&self, r: RId, cell: SId) -> (VId, VId) {
        match self.regions[r].kind {
            RKind::Edge { a, b, u, w } => {
                if cell == a {
                    (u, w)
                } else {
                    debug_assert_eq!(cell, b);
                    (w, u)
                }
            }
            RKind::Outer { site, u, w } => {
                debug_assert_eq!(cell, site);
                (u, w)
            }
            RKind::Plane { .. } => unreachable!("plane region has no span"),
        }
    }

    fn region_sites(&self, r: RId) -> (SId, SId) {
        match self.regions[r].kind {
            RKind::Plane { site } | RKind::Outer { site, .. } => (site, site),
            RKind::Edge { a, b, .. } => (a, b),
        }
    }

    fn other_site(&self, r: RId, cell: SId) -> Option<SId> {
        match self.regions[r].kind {
            RKind::Edge { a, b, .. } => Some(if cell == a { b } else { a }),
            _ => None,
        }
    }

    // -----------------------------------------------------------------------
    // membership and location

    /// Is unit direction `d` inside the counterclockwise arc from `d1` to
    /// `d2` (arcs may exceed π)?
    fn in_ccw_arc(d1: Point, d2: Point, d: Point, tol: f64) -> bool {
        if d1.cross(d2) >= 0.0 && d1.dot(d2) >= -1.0 + 1e-15 {
            // span <= π
            d1.cross(d) >= -tol && d.cross(d2) >= -tol
        } else {
            // reflex: complement of the ccw arc d2 -> d1
            !(d2.cross(d) > tol && d.cross(d1) > tol)
        }
    }

    /// Cone whose closed ccw arc [class_dir(k-1), class_dir(k)] holds `d`.
    fn cone_of(&self, d: Point) -> usize {
        let h = self.h();
        for k in 0..h {
            if Self::in_ccw_arc(self.class_dir[(k + h - 1) % h], self.class_dir[k], d, 1e-9) {
                return k;
            }
        }
        0
    }

    fn fan_contains(&self, site: SId, u: VId, w: VId, q: Point, tol: f64) -> bool {
        let x = self.sites[site].pos;
        let d = q - x;
        if d.norm() <= 1e-15 * (1.0 + x.norm()) {
            return true;
        }
        if u == w {
            return true; // single-vertex cycle: fan wraps the full circle
        }
        let d1 = self.vertex_dir(site, u);
        let d2 = self.vertex_dir(site, w);
        Self::in_ccw_arc(d1, d2, d.normalized(), tol)
    }

    /// Membership of `q` (translated frame) in a region. `pass` widens
    /// tolerances: 0 = strict (ties only toward the later site), 1 = loose.
    /// The asymmetric tie rule keeps 2D-thick bisector ties from claiming
    /// both sides: within a tie region only the later site's side accepts.
    fn region_contains(&self, r: RId, q: Point, pass: u32) -> bool {
        let scale = 1.0 + q.norm();
        let cone_tol = if pass == 0 { 1e-9 } else { 1e-6 };
        match self.regions[r].kind {
            RKind::Plane { .. } => true,
            RKind::Outer { site, u, w } => self.fan_contains(site, u, w, q, cone_tol),
            RKind::Edge { a, b, u, w } => {
                let f_tol = (if pass == 0 { 1e-9 } else { 1e-6 }) * (scale * scale + 1.0);
                let fa = self.f_eval(a, q);
                let fb = self.f_eval(b, q);
                let side = |i: SId, fi: f64, j: SId, fj: f64, su: VId, sw: VId| -> bool {
                    if !self.fan_contains(i, su, sw, q, cone_tol) {
                        { eprintln!("DBG fail 423"); return false; }
                    }
                    // later site keeps ties; the earlier side must win strictly
                    if i > j || pass > 0 {
                        fi <= fj + f_tol
                    } else {
                        fi < fj
                    }
                };
                side(a, fa, b, fb, u, w) || side(b, fb, a, fa, w, u)
            }
        }
    }

    /// Ranking score for fallback location: larger is deeper inside.
    fn region_score(&self, r: RId, q: Point) -> f64 {
        match self.regions[r].kind {
            RKind::Plane { .. } => 0.0,
            RKind::Outer { site, u, w } => {
                let x = self.sites[site].pos;
                let d = (q - x).normalized();
                let d1 = self.vertex_dir(site, u);
                let d2 = self.vertex_dir(site, w);
                d1.cross(d).min(d.cross(d2))
            }
            RKind::Edge { a, b, u, w } => {
                let fa = self.f_eval(a, q);
                let fb = self.f_eval(b, q);
                let xa = self.sites[a].pos;
                let xb = self.sites[b].pos;
                let da = (q - xa).normalized();
                let db = (q - xb).normalized();
                let sa = self
                    .vertex_dir(a, u)
                    .cross(da)
                    .min(da.cross(self.vertex_dir(a, w)))
                    .min(fb - fa);
                let sb = self
                    .vertex_dir(b, w)
                    .cross(db)
                    .min(db.cross(self.vertex_dir(b, u)))
                    .min(fa - fb);
                sa.max(sb)
            }
        }
    }

    fn pick_child(&self, kids: &[RId], q: Point, counters: &mut Counters) -> Option<RId> {
        for pass in 0..2u32 {
            for &c in kids {
                if self.region_contains(c, q, pass) {
                    if pass > 0 {
                        counters.locate_fallbacks += 1;
                    }
                    return Some(c);
                }
            }
        }
        counters.locate_fallbacks += 1;
        kids.iter()
            .copied()
            .max_by(|&x, &y| {
                self.region_score(x, q)
                    .partial_cmp(&self.region_score(y, q))
                    .unwrap()
            })
    }

    /// Point location by DAG descent on a translated-frame query.
    fn locate_t(&self, q: Point) -> Option<(RId, (SId, SId))> {
        if self.sites.is_empty() {
            return None;
        }
        let mut counters = self.counters.clone();
        let r = self.locate_t_counted(q, &mut counters)?;
        Some(r)
    }

    fn locate_t_counted(&self, q: Point, counters: &mut Counters) -> Option<(RId, (SId, SId))> {
        if self.roots.is_empty() {
            return None;
        }
        if self.degraded {
            // structure unreliable: exhaustive nearest, exact results
            counters.locate_fallbacks += 1;
            let mut best = 0;
            for i in 1..self.sites.len() {
                if self.f_eval(i, q) < self.f_eval(best, q) {
                    best = i;
                }
            }
            let r = self.cells[best]
                .first()
                .map(|e| e.region)
                .unwrap_or(self.roots[0]);
            return Some((r, (best, best)));
        }
        let mut cur = self.pick_child(&self.roots, q, counters)?;
        let mut guard = 0usize;
        while !self.regions[cur].alive {
            counters.locate_steps += 1;
            guard += 1;
            if guard > 4 * self.regions.len() + 16 {
                return None;
            }
            let kids = &self.regions[cur].children;
            debug_assert!(!kids.is_empty(), "dead region without children");
            cur = self.pick_child(kids, q, counters)?;
        }
        Some((cur, self.region_sites(cur)))
    }

    /// Public location on an original-frame query: alive region id plus its
    /// two candidate sites, one of which is weighted-nearest to `q`.
    pub fn locate(&mut self, q_world: Point) -> Option<(usize, (usize, usize))> {
        let q = q_world - self.ctx.origin;
        let mut counters = std::mem::take(&mut self.counters);
        let out = self.locate_t_counted(q, &mut counters);
        self.counters = counters;
        out.map(|(r, (a, b))| (r, (self.sites[a].id, self.sites[b].id)))
    }

    /// Weighted nearest site (input id, value) for an original-frame query.
    /// Exactly two distance evaluations after location; ties toward the
    /// lower input id.
    pub fn nearest(&mut self, q_world: Point) -> Option<(usize, f64)> {
        let q = q_world - self.ctx.origin;
        let mut counters = std::mem::take(&mut self.counters);
        let located = self.locate_t_counted(q, &mut counters);
        self.counters = counters;
        let (_, (a, b)) = located?;
        let fa = self.f_eval(a, q);
        let fb = self.f_eval(b, q);
        let (i, v) = if fb < fa
            || (fb == fa && self.sites[b].id < self.sites[a].id)
        {
            (b, fb)
        } else {
            (a, fa)
        };
        Some((self.sites[i].id, v))
    }

    /// Best candidate site for a prospective insertion at translated `q`:
    /// locate, then improve through cell neighborhoods while improvement is
    /// possible (guards against tolerance slips near thick ties).
    fn best_site_at(&self, q: Point, counters: &mut Counters) -> Option<SId> {
        let (_, (a, b)) = self.locate_t_counted(q, counters)?;
        let mut best = if self.f_eval(b, q) < self.f_eval(a, q) { b } else { a };
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > self.sites.len() + 4 {
                break;
            }
            let mut improved = None;
            let fb = self.f_eval(best, q);
            for e in &self.cells[best] {
                if let Some(j) = self.other_site(e.region, best) {
                    if self.f_eval(j, q) < fb - 1e-12 * (1.0 + fb.abs()) {
                        improved = Some(j);
                        break;
                    }
                }
            }
            match improved {
                Some(j) => best = j,
                None => break,
            }
        }
        Some(best)
    }

    // -----------------------------------------------------------------------
    // insertion

    /// Insert a site. Protocol: nondecreasing weights, distinct positions
    /// (the skyline driver guarantees both; `bootstrap` relies on it too).
    pub fn insert(&mut self, s: WeightedSite) -> Result<InsertOutcome> {
        if !s.pos.is_finite() || !s.weight.is_finite() {
            return Err(Error::NonFinite);
        }
        if let Some(max_w) = self
            .sites
            .iter()
            .map(|w| w.weight)
            .max_by(|a, b| a.partial_cmp(b).unwrap())
        {
            if s.weight < max_w - 1e-9 * (1.0 + max_w.abs()) {
                return Err(Error::Protocol(format!(
                    "site {} inserted out of weight order",
                    s.id
                )));
            }
        }
        self.counters.inserts += 1;
        if self.sites.is_empty() {
            self.lifted = s.weight == s.pos.norm2();
            self.sites.push(s);
            self.cells.push(Vec::new());
            self.regions.push(Region {
                kind: RKind::Plane { site: 0 },
                alive: true,
                children: Vec::new(),
            });
            self.counters.regions_created += 1;
            self.roots = vec![0];
            return Ok(InsertOutcome::Inserted);
        }

        // apex criterion against the candidates: the cell is non-empty iff
        // every earlier site's cone is strictly above ω_s at x_s
        let mut counters = std::mem::take(&mut self.counters);
        let cand = self.best_site_at(s.pos, &mut counters);
        self.counters = counters;
        let Some(z0) = cand else {
            return Err(Error::Protocol("locate failed on insert".into()));
        };
        let (_, (ca, cb)) = self
            .locate_t(s.pos)
            .unwrap_or((0, (z0, z0)));
        let mut wit = z0;
        let mut margin = self.apex_margin(z0, &s);
        for c in [ca, cb] {
            let m = self.apex_margin(c, &s);
            if m < margin || (m == margin && self.sites[c].id < self.sites[wit].id) {
                margin = m;
                wit = c;
            }
        }
        if margin < -self.ctx.eps_dom {
            self.counters.rejects += 1;
            return Ok(InsertOutcome::Dominated {
                witness: self.sites[wit].id,
            });
        }

        self.lifted = self.lifted && s.weight == s.pos.norm2();
        let idx = self.sites.len();
        self.sites.push(s);
        self.cells.push(Vec::new());
        if idx == 1 {
            self.build_second_cell(idx)?;
        } else if !self.degraded && !self.carve(idx, wit) {
            self.degraded = true;
            self.counters.walk_failures += 1;
        }
        Ok(InsertOutcome::Inserted)
    }

    /// Direct structure for the second site: one edge region over the whole
    /// bisector plus an outer fan per side, glued at the bisector's two
    /// asymptotes.
    fn build_second_cell(&mut self, b: SId) -> Result<()> {
        let a: SId = 0;
        let h = self.h();
        let mut transitions = Vec::new();
        for k in 0..h {
            if self.transition_at(a, b, k) {
                transitions.push(k);
            }
        }
        if transitions.len() != 2 {
            // a bounded second cell needs weights a lifted pipeline cannot
            // produce for a non-dominated site
            return Err(Error::Protocol(
                "second site has a bounded cell (unsupported weights)".into(),
            ));
        }
        let (k1, k2) = {
            // k1 = transition where b takes over going ccw
            let (p, q) = (transitions[0], transitions[1]);
            if self.cone_winner(a, b, (p + 1) % h) == b {
                (p, q)
            } else {
                (q, p)
            }
        };
        let v1 = self.new_vertex(VKind::Infinite {
            class: k1,
            lo: self.cone_winner(a, b, k1),
            hi: self.cone_winner(a, b, (k1 + 1) % h),
        });
        let v2 = self.new_vertex(VKind::Infinite {
            class: k2,
            lo: self.cone_winner(a, b, k2),
            hi: self.cone_winner(a, b, (k2 + 1) % h),
        });
        // b's far arc runs ccw class k1 -> k2; a's is the complement
        let r_edge = self.new_region(RKind::Edge { a, b, u: v1, w: v2 });
        let r_out_a = self.new_region(RKind::Outer { site: a, u: v2, w: v1 });
        let r_out_b = self.new_region(RKind::Outer { site: b, u: v1, w: v2 });
        self.cells[a] = vec![
            CellEntry { v: v2, region: r_out_a },
            CellEntry { v: v1, region: r_edge },
        ];
        self.cells[b] = vec![
            CellEntry { v: v1, region: r_out_b },
            CellEntry { v: v2, region: r_edge },
        ];
        let plane: RId = self.roots[0];
        self.kill_region(plane, vec![r_edge, r_out_a, r_out_b]);
        Ok(())
    }

    fn new_vertex(&mut self, kind: VKind) -> VId {
        self.verts.push(VertexNode { kind, alive: true });
        self.counters.vertices_created += 1;
        self.verts.len() - 1
    }

    fn new_region(&mut self, kind: RKind) -> RId {
        self.regions.push(Region {
            kind,
            alive: true,
            children: Vec::new(),
        });
        self.counters.regions_created += 1;
        self.regions.len() - 1
    }

    fn kill_region(&mut self, r: RId, children: Vec<RId>) {
        debug_assert!(self.regions[r].alive);
        debug_assert!(!children.is_empty());
        self.regions[r].alive = false;
        self.regions[r].children = children;
        self.counters.regions_deleted += 1;
    }

    fn kill_vertex(&mut self, v: VId) {
        if self.verts[v].alive {
            self.verts[v].alive = false;
            self.counters.vertices_deleted += 1;
        }
    }

    // -----------------------------------------------------------------------
    // numeric subroutines of the walk

    /// First crossing of the pairwise bisector of `i` and `j` along the ray
    /// from x_i in direction `dir`: smallest r > 0 with f_i = f_j. The
    /// difference is concave along rays from the apex, so the sign pattern is
    /// a prefix and bisection is sound.
    fn ray_cross(&self, i: SId, j: SId, dir: Point) -> Option<Point> {
        let xi = self.sites[i].pos;
        let u = dir.normalized();
        let (k, _) = extreme_point(&self.ctx.hull, u).ok()?;
        let sigma = self.acons[k].dot(u);
        let wi = self.sites[i].weight;
        let g = |r: f64| (sigma * r + wi) - self.f_eval(j, xi + u * r);
        if g(0.0) >= 0.0 {
            return Some(xi);
        }
        // cap the bracket search: past r_max the two fields differ by less
        // than their rounding error when the ray parallels a far interface,
        // and any sign flip out there is noise; the far-field tests own it
        let r_max = 1e10 * (1.0 + xi.norm() + self.sites[j].pos.norm());
        let mut hi = 1.0 + (self.sites[j].pos - xi).norm();
        while g(hi) < 0.0 {
            hi *= 2.0;
            if hi > r_max {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + hi) {
                break;
            }
        }
        Some(xi + u * (0.5 * (lo + hi)))
    }

    /// First crossing of the new boundary f_s = f_z along the z-y piece,
    /// sweeping from the entry direction toward the far vertex in walk order.
    /// Sample points come from `ray_cross(z, y, ·)` and carry a side: the
    /// host holds the point, or the new site does. A banded tie counts for
    /// the new site, which owns ties, so a tied stretch reads as taken and a
    /// tie boundary reads as a crossing. The earliest side transition is
    /// bracketed, bisected, and Newton-polished; a boundary that lands back
    /// on an exclusive entry is the entry crossing itself, already consumed,
    /// so the sweep resumes past it. `None` means the boundary does not meet
    /// this stretch.
    #[allow(clippy::too_many_arguments)]
    fn solve_first_crossing(
        &mut self,
        s: SId,
        z: SId,
        y: SId,
        entry_dir: Point,
        far_dir: Point,
        fwd: bool,
        entry_inclusive: bool,
    ) -> Option<Point> {
        self.counters.solver_calls += 1;
        let tau = std::f64::consts::TAU;
        let raw = if fwd {
            far_dir.cross(entry_dir).atan2(far_dir.dot(entry_dir))
        } else {
            entry_dir.cross(far_dir).atan2(entry_dir.dot(far_dir))
        };
        let sweep = if raw < 0.0 { raw + tau } else { raw };
        // a near-full sweep is a zero-length piece between coincident split
        // corners whose angular order came out reversed by noise, never a
        // real span
        if sweep <= 1e-12 || sweep >= tau - 1e-9 {
            return None;
        }
        let dir_at = |t: f64| -> Point {
            let ang = if fwd { -t * sweep } else { t * sweep };
            let (sn, cs) = ang.sin_cos();
            Point::new(
                entry_dir.x * cs - entry_dir.y * sn,
                entry_dir.x * sn + entry_dir.y * cs,
            )
        };
        let side_at = |me: &Self, t: f64| -> Option<(Point, bool)> {
            let p = me.ray_cross(z, y, dir_at(t))?;
            let fs = me.f_eval(s, p);
            let fz = me.f_eval(z, p);
            Some((p, fs - fz > 1e-9 * (1.0 + fs.abs() + fz.abs())))
        };
        const K: usize = 24;
        let mut last: Option<(f64, bool)> = None;
        let mut gi: usize = 0;
        let mut refined = false;
        loop {
            let mut bracket: Option<(f64, f64, bool)> = None;
            while gi <= K {
                let t = gi as f64 / K as f64;
                gi += 1;
                let Some((_, host)) = side_at(self, t) else { continue };
                if let Some((tp, hp)) = last {
                    if host != hp {
                        bracket = Some((tp, t, hp));
                    }
                }
                last = Some((t, host));
                if bracket.is_some() {
                    break;
                }
            }
            if bracket.is_none() {
                if refined {
                    return None;
                }
                refined = true;
                // a near-parallel sweep end hides its crossings inside one
                // grid step where the sample rays miss or cap out: refine
                // toward each end geometrically from the outermost valid
                // samples
                let mut first: Option<(f64, bool)> = None;
                for i in 0..=K {
                    let t = i as f64 / K as f64;
                    if let Some((_, host)) = side_at(self, t) {
                        first = Some((t, host));
                        break;
                    }
                }
                if let Some((mut tf, hf)) = first {
                    let mut t = tf;
                    while bracket.is_none() && t > 1e-15 {
                        t *= 0.5;
                        let Some((_, host)) = side_at(self, t) else { continue };
                        if host != hf {
                            bracket = Some((t, tf, host));
                        } else {
                            tf = t;
                        }
                    }
                }
                if bracket.is_none() {
                    if let Some((mut tl, hl)) = last {
                        let mut t = tl;
                        while bracket.is_none() && 1.0 - t > 1e-15 {
                            t = 0.5 * (t + 1.0);
                            let Some((_, host)) = side_at(self, t) else { continue };
                            if host != hl {
                                bracket = Some((tl, t, hl));
                            } else {
                                tl = t;
                            }
                        }
                    }
                }
                if bracket.is_none() {
                    return None;
                }
            }
            let (mut lo, mut hi, host_lo) = bracket.unwrap();
            let mut p_mid: Option<Point> = None;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let Some((pm, hm)) = side_at(self, mid) else { break };
                p_mid = Some(pm);
                if hm == host_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_star = 0.5 * (lo + hi);
            if !entry_inclusive && t_star * sweep <= 1e-6 {
                continue;
            }
            let mut p_bis = match side_at(self, t_star) {
                Some((p, _)) => p,
                None => match p_mid {
                    Some(p) => p,
                    None => return None,
                },
            };
            {
                let fs = self.f_eval(s, p_bis);
                let fz = self.f_eval(z, p_bis);
                let band = 1e-9 * (1.0 + fs.abs() + fz.abs());
                if (fs - fz).abs() > 1e3 * band {
                    // the sweep converged onto a jump between two branches of
                    // the z-y bisector: the piece holds a radially degenerate
                    // stretch at this direction, and the boundary point sits
                    // somewhere on the limiting ray, invisible to an angular
                    // sweep. Bisect by radius between the two branch points.
                    let (t_s, t_h) = if host_lo { (hi, lo) } else { (lo, hi) };
                    if let (Some((ps, _)), Some((ph, _))) =
                        (side_at(self, t_s), side_at(self, t_h))
                    {
                        let xz = self.sites[z].pos;
                        let d_star = dir_at(t_s);
                        let mut r_s = (ps - xz).norm();
                        let mut r_h = (ph - xz).norm();
                        for _ in 0..90 {
                            let rm = 0.5 * (r_s + r_h);
                            let pm = xz + d_star * rm;
                            let fsm = self.f_eval(s, pm);
                            let fzm = self.f_eval(z, pm);
                            if fsm - fzm > 1e-9 * (1.0 + fsm.abs() + fzm.abs()) {
                                r_h = rm;
                            } else {
                                r_s = rm;
                            }
                        }
                        p_bis = xz + d_star * (0.5 * (r_s + r_h));
                    }
                }
            }
            // Newton polish, accepted only inside the swept arc and past the
            // entry for exclusive entries
            if let Some((v, tv)) = self.newton_vertex([s, z, y], p_bis) {
                let resid = [s, z, y]
                    .iter()
                    .map(|&i| (self.f_eval(i, v) - tv).abs())
                    .fold(0.0, f64::max);
                let dv = v - self.sites[z].pos;
                if resid <= 1e-8 * (1.0 + tv.abs()) && dv.norm() > 1e-15 {
                    let dvn = dv.normalized();
                    let in_arc = if fwd {
                        Self::in_ccw_arc(far_dir, entry_dir, dvn, 1e-7)
                    } else {
                        Self::in_ccw_arc(entry_dir, far_dir, dvn, 1e-7)
                    };
                    let past_entry = entry_inclusive || {
                        let r = if fwd {
                            dvn.cross(entry_dir).atan2(dvn.dot(entry_dir))
                        } else {
                            entry_dir.cross(dvn).atan2(entry_dir.dot(dvn))
                        };
                        let a = if r < 0.0 { r + tau } else { r };
                        a > 1e-9 && a < sweep + 1e-9
                    };
                    if in_arc && past_entry {
                        return Some(v);
                    }
                }
            }
            return Some(p_bis);
        }
    }

    /// Piecewise-Newton: solve a_{k_i}·v − t = a_{k_i}·x_i − ω_i for the
    /// three sites with cones re-derived each round.
    fn newton_vertex(&self, tri: [SId; 3], seed: Point) -> Option<(Point, f64)> {
        let mut v = seed;
        let mut t = 0.0;
        for _ in 0..10 {
            let mut m = [[0.0f64; 3]; 3];
            let mut rhs = [0.0f64; 3];
            for (r, &i) in tri.iter().enumerate() {
                let si = &self.sites[i];
                let d = v - si.pos;
                let dir = if d.x == 0.0 && d.y == 0.0 {
                    Point::new(1.0, 0.0)
                } else {
                    d
                };
                let (k, _) = extreme_point(&self.ctx.hull, dir).ok()?;
                let a = self.acons[k];
                m[r] = [a.x, a.y, -1.0];
                rhs[r] = a.dot(si.pos) - si.weight;
            }
            let sol = solve3(m, rhs)?;
            let nv = Point::new(sol[0], sol[1]);
            let moved = (nv - v).norm();
            v = nv;
            t = sol[2];
            if moved <= 1e-13 * (1.0 + v.norm()) {
                break;
            }
        }
        if v.is_finite() && t.is_finite() {
            Some((v, t))
        } else {
            None
        }
    }

    /// Does the new site swallow finite vertex `v`? Banded ties swallow: the
    /// later site's boundary passing exactly through a vertex takes it.
    fn swallows_finite(&self, s: SId, v: VId) -> bool {
        if let VKind::Finite { pos, t } = self.verts[v].kind {
            self.f_eval(s, pos) < t + 1e-9 * (1.0 + t.abs())
        } else {
            false
        }
    }

    /// Support of site `i` restricted to cones `k` and `k+1`: the far-field
    /// value governing class-`k` strips.
    fn elbow(&self, i: SId, k: usize, q: Point) -> f64 {
        let h = self.h();
        let si = &self.sites[i];
        let d = q - si.pos;
        let e0 = self.acons[k % h].dot(d) + si.weight;
        let e1 = self.acons[(k + 1) % h].dot(d) + si.weight;
        e0.max(e1)
    }

    /// Far winner between `i` and `j` on the class-`k` ray through `q`,
    /// banded ties to the later site.
    fn tail_is(&self, i: SId, j: SId, k: usize, q: Point) -> SId {
        let ei = self.elbow(i, k, q);
        let ej = self.elbow(j, k, q);
        let scale = 1.0 + ei.abs() + ej.abs();
        if ei < ej - TIE_EPS * scale {
            i
        } else if ej < ei - TIE_EPS * scale {
            j
        } else {
            i.max(j)
        }
    }

    /// Pairwise strip presence: does `s` own some class-`k` ray against `z`?
    /// s's elbow is a V over the ray offset with the two shared slopes, so
    /// testing at s's own kink decides the whole strip.
    fn strip_at(&self, s: SId, z: SId, k: usize) -> bool {
        let h = self.h();
        let d = self.class_dir[k];
        let n = Point::new(d.y, -d.x);
        let da = self.acons[(k + 1) % h] - self.acons[k];
        // da is perpendicular to the class direction, so da·n cannot vanish
        let denom = da.dot(n);
        if denom.abs() < 1e-30 {
            return self.tail_is(s, z, k, Point::new(0.0, 0.0)) == s;
        }
        let mu = da.dot(self.sites[s].pos) / denom;
        self.tail_is(s, z, k, n * mu) == s
    }

    /// A class-`k` spoke between `s` and `z` exists only if their pairwise
    /// exchange offset is owned by the pair against every other site.
    fn spoke_is_real(&self, s: SId, z: SId, k: usize) -> bool {
        let d = self.class_dir[k];
        let n = Point::new(d.y, -d.x);
        let Some(mu) = self.interface_offset(s, z, k) else {
            return false;
        };
        let q = n * mu;
        let mut best = 0;
        for t in 1..self.sites.len() {
            best = self.tail_is(best, t, k, q);
        }
        best == s || best == z
    }

    /// Perpendicular offset where `lo` and `hi` exchange the asymptotic win
    /// at class `c`, or None when banded arithmetic sees no exchange. The
    /// flip sits between the two elbow kinks; probing far beyond them would
    /// let the relative tie band swallow a constant elbow gap.
    fn interface_offset(&self, lo: SId, hi: SId, c: usize) -> Option<f64> {
        let h = self.h();
        let d = self.class_dir[c];
        let n = Point::new(d.y, -d.x);
        let da = self.acons[(c + 1) % h] - self.acons[c];
        let denom = da.dot(n);
        if denom.abs() < 1e-30 {
            return None;
        }
        let mu_lo = da.dot(self.sites[lo].pos) / denom;
        let mu_hi = da.dot(self.sites[hi].pos) / denom;
        let pad = 1.0 + mu_lo.abs() + mu_hi.abs();
        let (mut a, mut b) = (mu_lo.min(mu_hi) - pad, mu_lo.max(mu_hi) + pad);
        let pick = |mu: f64| self.tail_is(lo, hi, c, n * mu);
        let (wa, wb) = (pick(a), pick(b));
        if wa == wb {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if pick(mid) == wa {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some(0.5 * (a + b))
    }

    /// Offset of a vertex on the class-`c` line: a finite vertex projects,
    /// an infinite one must be a class-`c` interface.
    fn vertex_class_offset(&self, v: VId, c: usize, n: Point) -> Option<f64> {
        match self.verts[v].kind {
            VKind::Finite { pos, .. } => Some(pos.dot(n)),
            VKind::Infinite { class, lo, hi } => {
                if class != c {
                    return None;
                }
                self.interface_offset(lo, hi, c)
            }
        }
    }

    /// A dying spoke hands its cycle slot to the event spoke of the same
    /// class that shares a flank with the surviving piece and sits nearest
    /// in strip offset.
    fn find_spoke_replacement(
        &self,
        events: &[EventRec],
        vdead: VId,
        o1: SId,
        o2: Option<SId>,
    ) -> Option<VId> {
        let VKind::Infinite { class, lo, hi } = self.verts[vdead].kind else {
            return None;
        };
        let target = self.interface_offset(lo, hi, class)?;
        let mut best: Option<(f64, VId)> = None;
        for e in events {
            let VKind::Infinite { class: ec, lo: el, hi: eh } = self.verts[e.vertex].kind
            else {
                continue;
            };
            if ec != class {
                continue;
            }
            let shares = el == o1 || eh == o1 || o2.map_or(false, |o| el == o || eh == o);
            if !shares {
                continue;
            }
            let Some(off) = self.interface_offset(el, eh, class) else {
                continue;
            };
            let d = (off - target).abs();
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, e.vertex));
            }
        }
        best.map(|(_, v)| v)
    }

    /// Death test for an infinite vertex: `s` breaks it iff `s` reaches the
    /// lo/hi exchange offset along the class line. Banded ties break (the
    /// later site takes the spoke).
    fn strip_breaks(&self, s: SId, v: VId) -> bool {
        let VKind::Infinite { class, lo, hi } = self.verts[v].kind else {
            { eprintln!("DBG fail 1005"); return false; }
        };
        let d = self.class_dir[class];
        let n = Point::new(d.y, -d.x);
        let Some(mu) = self.interface_offset(lo, hi, class) else {
            { eprintln!("DBG fail 1014"); return false; }
        };
        let q = n * mu;
        let v_here = self.elbow(lo, class, q).min(self.elbow(hi, class, q));
        let es = self.elbow(s, class, q);
        es <= v_here + TIE_EPS * (1.0 + es.abs() + v_here.abs())
    }

    /// Class boundaries strictly inside the walk-oriented angular span from
    /// `d_from` to `d_to`, in traversal order. `cw` = forward walks.
    fn classes_between(&self, d_from: Point, d_to: Point, cw: bool) -> Vec<usize> {
        let tau = std::f64::consts::TAU;
        let off = |d: Point| -> f64 {
            let raw = if cw {
                d.cross(d_from).atan2(d.dot(d_from))
            } else {
                d_from.cross(d).atan2(d_from.dot(d))
            };
            let a = if raw < 0.0 { raw + tau } else { raw };
            // the entry direction itself is never inside the span
            if a <= 1e-12 { tau } else { a }
        };
        let raw_to = d_from.cross(d_to).atan2(d_from.dot(d_to));
        let lim = if raw_to.abs() <= 1e-12 { 0.0 } else { off(d_to) };
        let mut ks: Vec<usize> = (0..self.h())
            .filter(|&k| off(self.class_dir[k]) < lim - 1e-9)
            .collect();
        ks.sort_by(|&x, &y| {
            off(self.class_dir[x]).partial_cmp(&off(self.class_dir[y])).unwrap()
        });
        ks
    }

    // -----------------------------------------------------------------------
    // the carve walk

    /// Scan one cell stretch for the walk's next event. `fwd` walks ccw
    /// around the new site = cw around the host cell `z`. Advancing past a
    /// far vertex asserts the frontier stays inside the stretch there; each
    /// fully traversed piece and every vertex the frontier kills on the way
    /// is recorded for the commit.
    fn scan_cell(
        &mut self,
        s: SId,
        z: SId,
        start_pos: usize,
        entry: EntryState,
        fwd: bool,
        doomed: &mut Vec<VId>,
        traversed: &mut Vec<RId>,
    ) -> ScanOutcome {
        let len = self.cells[z].len();
        let h = self.h();
        let mut pos = start_pos;
        let mut entry = entry;
        for _ in 0..(2 * len + 4) {
            let far_idx = if fwd { pos } else { (pos + 1) % len };
            let far_v = self.cells[z][far_idx].v;
            let region = self.cells[z][pos].region;
            if let EntryState::AtSpoke { class } = entry {
                // the frontier just crossed this class spoke; if the next
                // cone's far field already belongs to z, the boundary turns
                // along the strip interface and leaves at the same class
                let probe = if fwd { class } else { (class + 1) % h };
                if self.cone_winner(s, z, probe) == z {
                    return ScanOutcome::Escape { pos, class };
                }
            }
            let entry_dir = match entry {
                EntryState::Mid { dir } | EntryState::AtDir { dir, .. } => dir,
                EntryState::AtClass { class } | EntryState::AtSpoke { class } => {
                    self.class_dir[class]
                }
            };
            let entry_inclusive = !matches!(entry, EntryState::AtDir { inclusive: false, .. });
            let far_dir = self.vertex_dir(z, far_v);
            let escape_k = self
                .classes_between(entry_dir, far_dir, fwd)
                .into_iter()
                .find(|&k| {
                    let cone_z = if fwd { k } else { (k + 1) % h };
                    self.cone_winner(s, z, cone_z) == z
                        && self.strip_at(s, z, k)
                        && self.spoke_is_real(s, z, k)
                });
            match self.regions[region].kind {
                RKind::Outer { .. } => {
                    if let Some(k) = escape_k {
                        return ScanOutcome::Escape { pos, class: k };
                    }
                }
                RKind::Edge { a, b, .. } => {
                    let y = if a == z { b } else { a };
                    // a zero-length piece joins coincident split corners; a
                    // walk that swept in through one twin crosses at the
                    // shared point iff the frontier passes exactly through
                    // it, while a walk that hopped in at that same point
                    // advances instead of crossing back
                    let near_idx = if fwd { (pos + 1) % len } else { pos };
                    let near_v = self.cells[z][near_idx].v;
                    if let (VKind::Finite { pos: pn, .. }, VKind::Finite { pos: pf, t }) =
                        (self.verts[near_v].kind, self.verts[far_v].kind)
                    {
                        if (pn - pf).norm() <= 1e-9 * (1.0 + pf.norm())
                            && matches!(entry, EntryState::AtDir { inclusive: true, .. })
                            && (self.f_eval(s, pf) - t).abs() <= 1e-9 * (1.0 + t.abs())
                        {
                            return ScanOutcome::Exit { pos, other: y, point: pf };
                        }
                    }
                    // an in-span escape caps the sweep: a crossing wins only
                    // when it comes first in walk order
                    let cap_dir = escape_k.map_or(far_dir, |k| self.class_dir[k]);
                    if let Some(point) =
                        self.solve_first_crossing(s, z, y, entry_dir, cap_dir, fwd, entry_inclusive)
                    {
                        return ScanOutcome::Exit { pos, other: y, point };
                    }
                    if let Some(k) = escape_k {
                        return ScanOutcome::Escape { pos, class: k };
                    }
                }
                RKind::Plane { .. } => return ScanOutcome::Stuck,
            }
            match self.verts[far_v].kind {
                VKind::Finite { .. } => {
                    if !self.swallows_finite(s, far_v) {
                        // surviving finite corner with no crossing found:
                        // the walk lost the boundary
                        return ScanOutcome::Stuck;
                    }
                    doomed.push(far_v);
                    traversed.push(region);
                    pos = if fwd { (pos + len - 1) % len } else { (pos + 1) % len };
                    entry = EntryState::AtDir { dir: far_dir, inclusive: true };
                }
                VKind::Infinite { class, .. } => {
                    // the walk meets class tail offsets in traversal order:
                    // increasing forward, decreasing backward. The frontier
                    // runs off to infinity inside this stretch iff the new
                    // site owns the far field just short of its strip
                    // interface with the host in arrival order
                    let d = self.class_dir[class];
                    let n = Point::new(d.y, -d.x);
                    let o_sz = self.interface_offset(s, z, class);
                    let escapes = match o_sz {
                        None => false,
                        Some(o) => {
                            let step = 1e-3 * (1.0 + o.abs());
                            let probe = if fwd { o - step } else { o + step };
                            self.tail_is(s, z, class, n * probe) == s
                        }
                    };
                    if escapes {
                        // the spoke itself can still drown in the new strip
                        // beyond the escape
                        if self.strip_breaks(s, far_v) {
                            doomed.push(far_v);
                        }
                        let mut out = pos;
                        if !fwd {
                            // a backward probe whose asymptote lies past the
                            // spoke must anchor on the far side of it, so the
                            // forward walk re-encounters and retires it
                            if let (Some(o), Some(osp)) =
                                (o_sz, self.vertex_class_offset(far_v, class, n))
                            {
                                if o < osp - 1e-9 * (1.0 + osp.abs()) {
                                    out = (pos + 1) % len;
                                }
                            }
                        }
                        return ScanOutcome::Escape { pos: out, class };
                    }
                    if self.strip_breaks(s, far_v) {
                        doomed.push(far_v);
                    }
                    traversed.push(region);
                    pos = if fwd { (pos + len - 1) % len } else { (pos + 1) % len };
                    entry = EntryState::AtSpoke { class };
                }
            }
        }
        ScanOutcome::Stuck
    }

    /// Find a starting stretch for the walk: a point q0 on the new boundary
    /// strictly inside some old cell, shot along the ray toward the current
    /// best site and re-aimed until location and boundary agree.
    fn kickstart(&mut self, s: SId) -> Option<(SId, usize, Point)> {
        let mut counters = std::mem::take(&mut self.counters);
        let mut z = self.best_site_at(self.sites[s].pos, &mut counters)?;
        self.counters = counters;
        let xs = self.sites[s].pos;
        for _ in 0..self.sites.len() + 4 {
            let dir = self.sites[z].pos - xs;
            let q0 = {
                let u = dir.normalized();
                let (k, _) = extreme_point(&self.ctx.hull, u).ok()?;
                let sigma = self.acons[k].dot(u);
                let ws = self.sites[s].weight;
                let g = |r: f64| (sigma * r + ws) - self.f_eval(z, xs + u * r);
                let mut hi = dir.norm();
                if g(hi) < 0.0 {
                    // numerical slack: extend a bit
                    hi *= 1.0 + 1e-9;
                }
                let mut lo = 0.0;
                for _ in 0..90 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                xs + u * (0.5 * (lo + hi))
            };
            self.counters.solver_calls += 1;
            let mut counters = std::mem::take(&mut self.counters);
            let zz = self.best_site_at(q0, &mut counters);
            let located = self.locate_t_counted(q0, &mut counters);
            self.counters = counters;
            let zz = zz?;
            if self.f_eval(zz, q0) < self.f_eval(z, q0) - 1e-10 * (1.0 + self.f_eval(z, q0).abs())
            {
                z = zz;
                continue;
            }
            // q0 sits on the new boundary inside z's cell; find z's fan
            let (rid, _) = located?;
            let pos = self.cells[z].iter().position(|e| e.region == rid);
            match pos {
                Some(p) => return Some((z, p, q0)),
                None => {
                    // locate landed in the partner cell's fan: take any region
                    // of z containing q0
                    let p2 = (0..self.cells[z].len()).find(|&i| {
                        let r = self.cells[z][i].region;
                        self.region_contains(r, q0, 1)
                    });
                    match p2 {
                        Some(p) => return Some((z, p, q0)),
                        None => {
                            let (a, b) = self.region_sites(rid);
                            z = if self.f_eval(a, q0) <= self.f_eval(b, q0) { a } else { b };
                            continue;
                        }
                    }
                }
            }
        }
        None
    }

    /// Carve the cell of the freshly appended site `s`. Returns false when
    /// the walk loses structural coherence (diagram then degrades to exact
    /// but slow linear location).
    fn carve(&mut self, s: SId, _hint: SId) -> bool {
        let Some((z0, pos0, q0)) = self.kickstart(s) else {
            { eprintln!("DBG fail 1232"); return false; }
        };
        let dir_q0 = (q0 - self.sites[z0].pos).normalized();

        // backward probe: hop cells against the walk until the boundary's
        // ccw anchor shows, either an escape to infinity or a full wrap of a
        // bounded loop back to the first backward crossing
        enum Anchor {
            Loop { cell: SId, pos: usize, region: RId, other: SId, point: Point },
            Far { cell: SId, pos: usize, class: usize },
        }
        let anchor;
        {
            let mut scratch_d = Vec::new();
            let mut scratch_t = Vec::new();
            let mut pcell = z0;
            let mut ppos = pos0;
            let mut pentry = EntryState::Mid { dir: dir_q0 };
            let mut first_hit: Option<(SId, usize, RId, SId, Point)> = None;
            let cap = 4 * self.regions.len() + 4 * self.sites.len() + 32;
            let mut steps = 0;
            loop {
                steps += 1;
                if steps > cap {
                    { eprintln!("DBG fail 1256"); return false; }
                }
                match self.scan_cell(s, pcell, ppos, pentry, false, &mut scratch_d, &mut scratch_t)
                {
                    ScanOutcome::Exit { pos, other, point } => {
                        let region = self.cells[pcell][pos].region;
                        if let Some((c0, p0, r0, o0, pt0)) = first_hit {
                            if (point - pt0).norm() <= 1e-7 * (1.0 + pt0.norm()) {
                                anchor = Anchor::Loop {
                                    cell: c0,
                                    pos: p0,
                                    region: r0,
                                    other: o0,
                                    point: pt0,
                                };
                                break;
                            }
                        } else {
                            first_hit = Some((pcell, pos, region, other, point));
                        }
                        let Some(npos) =
                            self.cells[other].iter().position(|e| e.region == region)
                        else {
                            { eprintln!("DBG fail 1279"); return false; }
                        };
                        pentry = EntryState::AtDir {
                            dir: (point - self.sites[other].pos).normalized(),
                            inclusive: false,
                        };
                        pcell = other;
                        ppos = npos;
                    }
                    ScanOutcome::Escape { pos, class } => {
                        anchor = Anchor::Far { cell: pcell, pos, class };
                        break;
                    }
                    ScanOutcome::Stuck => {
                        if first_hit.is_none() && pcell == z0 {
                            // no event anywhere around the kickstart cell:
                            // the new cell may sit inside a single piece
                            return self.try_island(s, z0, pos0, q0);
                        }
                        { eprintln!("DBG fail 1298"); return false; }
                    }
                }
            }
        }

        let mut events: Vec<EventRec> = Vec::new();
        let mut segments: Vec<SegRec> = Vec::new();
        let mut doomed: Vec<VId> = Vec::new();
        let mut traversed: Vec<RId> = Vec::new();
        let mut cur_cell;
        let mut cur_pos;
        let mut entry;
        let bounded;
        let mut anchor_key: Option<(RId, SId, Point)> = None;
        match anchor {
            Anchor::Loop { cell, pos, region, other, point } => {
                bounded = true;
                anchor_key = Some((region, cell, point));
                let t = self.f_eval(s, point);
                let v = self.new_vertex(VKind::Finite { pos: point, t });
                events.push(EventRec {
                    vertex: v,
                    kind: EvKind::Cross { region, from: other, to: cell, point },
                });
                cur_cell = cell;
                cur_pos = pos;
                entry = EntryState::AtDir {
                    dir: (point - self.sites[cell].pos).normalized(),
                    inclusive: false,
                };
            }
            Anchor::Far { cell, pos, class } => {
                bounded = false;
                let region = self.cells[cell][pos].region;
                let v = self.new_vertex(VKind::Infinite { class, lo: s, hi: cell });
                events.push(EventRec {
                    vertex: v,
                    kind: EvKind::Escape { region, cell, class, starts: true },
                });
                cur_cell = cell;
                cur_pos = pos;
                entry = EntryState::AtClass { class };
            }
        }

        // forward walk
        let cap = 4 * self.regions.len() + 4 * self.sites.len() + 32;
        let mut steps = 0;
        loop {
            steps += 1;
            if steps > cap {
                if std::env::var("SKYVOR_DBG").is_ok() {
                    eprintln!("WALK CAP s={s} cell={cur_cell} pos={cur_pos} entry={entry:?}");
                    for (i, e) in events.iter().enumerate() {
                        eprintln!("  ev[{i}] v={} kind={:?}", e.vertex, e.kind);
                    }
                }
                { eprintln!("DBG fail 1350"); return false; }
            }
            match self.scan_cell(s, cur_cell, cur_pos, entry, true, &mut doomed, &mut traversed) {
                ScanOutcome::Exit { pos, other, point } => {
                    let region = self.cells[cur_cell][pos].region;
                    if let Some((ar, ac, ap)) = anchor_key {
                        if region == ar
                            && other == ac
                            && (point - ap).norm() <= 1e-6 * (1.0 + ap.norm())
                        {
                            // closed the loop
                            segments.push(SegRec { cell: cur_cell, region: usize::MAX });
                            break;
                        }
                    }
                    let t = self.f_eval(s, point);
                    let v = self.new_vertex(VKind::Finite { pos: point, t });
                    events.push(EventRec {
                        vertex: v,
                        kind: EvKind::Cross { region, from: cur_cell, to: other, point },
                    });
                    segments.push(SegRec { cell: cur_cell, region: usize::MAX });
                    // enter the other cell through the same piece
                    let Some(npos) = self.cells[other].iter().position(|e| e.region == region)
                    else {
                        { eprintln!("DBG fail 1375"); return false; }
                    };
                    cur_cell = other;
                    cur_pos = npos;
                    entry = EntryState::AtDir {
                        dir: (point - self.sites[other].pos).normalized(),
                        inclusive: false,
                    };
                }
                ScanOutcome::Escape { pos, class } => {
                    if bounded {
                        { eprintln!("DBG fail 1386"); return false; }
                    }
                    let region = self.cells[cur_cell][pos].region;
                    let v = self.new_vertex(VKind::Infinite { class, lo: cur_cell, hi: s });
                    events.push(EventRec {
                        vertex: v,
                        kind: EvKind::Escape { region, cell: cur_cell, class, starts: false },
                    });
                    segments.push(SegRec { cell: cur_cell, region: usize::MAX });
                    break;
                }
                ScanOutcome::Stuck => { eprintln!("DBG fail 1397"); return false; }
            }
        }

        // wedge coherence: the far field of `s` must form the single
        // contiguous run the chain walk assumes, with the escapes on its
        // flanks; anything else needs a walk shape this structure cannot
        // represent
        {
            let h = self.h();
            let n = self.sites.len();
            let wins: Vec<bool> = (0..h)
                .map(|k| {
                    let mut best: SId = 0;
                    for i in 1..n {
                        best = self.cone_winner(best, i, k);
                    }
                    best == s
                })
                .collect();
            let switches = (0..h).filter(|&k| wins[k] != wins[(k + 1) % h]).count();
            if bounded {
                if switches != 0 || wins[0] {
                    { eprintln!("DBG fail 1420"); return false; }
                }
            } else {
                if switches > 2 {
                    { eprintln!("DBG fail 1424"); return false; }
                }
                let k_a = match events[0].kind {
                    EvKind::Escape { class, .. } => class,
                    _ => { eprintln!("DBG fail 1428"); return false; }
                };
                let k_f = match events[events.len() - 1].kind {
                    EvKind::Escape { class, .. } => class,
                    _ => { eprintln!("DBG fail 1432"); return false; }
                };
                if switches == 2 {
                    if !(wins[k_a] && !wins[(k_a + 1) % h]) {
                        { eprintln!("DBG fail 1436"); return false; }
                    }
                    if !(!wins[k_f] && wins[(k_f + 1) % h]) {
                        { eprintln!("DBG fail 1439"); return false; }
                    }
                } else if k_a != k_f {
                    { eprintln!("DBG fail 1442"); return false; }
                }
            }
        }

        self.commit(s, bounded, events, segments, doomed, traversed)
    }

    /// Fallback for a walk that finds no boundary event around the kickstart
    /// piece: when every class ray from the new apex crosses the pairwise
    /// boundary inside that one piece, the new cell is a fan island there.
    fn try_island(&mut self, s: SId, z: SId, pos0: usize, q0: Point) -> bool {
        let r0 = self.cells[z][pos0].region;
        for k in 0..self.h() {
            self.counters.solver_calls += 1;
            let Some(p) = self.ray_cross(s, z, self.class_dir[k]) else {
                { eprintln!("DBG fail 1458"); return false; }
            };
            if !self.region_contains(r0, p, 1) {
                { eprintln!("DBG fail 1461"); return false; }
            }
        }
        let t0 = self.f_eval(s, q0);
        let x = self.new_vertex(VKind::Finite { pos: q0, t: t0 });
        let island = self.new_region(RKind::Edge { a: s, b: z, u: x, w: x });
        let kind0 = self.regions[r0].kind;
        let clone = self.new_region(kind0);
        self.cells[s] = vec![CellEntry { v: x, region: island }];
        for ci in 0..self.cells.len() {
            for ei in 0..self.cells[ci].len() {
                if self.cells[ci][ei].region == r0 {
                    self.cells[ci][ei].region = clone;
                }
            }
        }
        self.kill_region(r0, vec![island, clone]);
        true
    }

    // -----------------------------------------------------------------------
    // committing a walk

    fn commit(
        &mut self,
        s: SId,
        bounded: bool,
        events: Vec<EventRec>,
        mut segments: Vec<SegRec>,
        doomed: Vec<VId>,
        traversed: Vec<RId>,
    ) -> bool {
        if std::env::var("SKYVOR_DBG").is_ok() {
            eprintln!("COMMIT s={s} bounded={bounded}");
            for (i, e) in events.iter().enumerate() {
                eprintln!("  ev[{i}] v={} kind={:?} vkind={:?}", e.vertex, e.kind, self.verts[e.vertex].kind);
            }
            for (i, g) in segments.iter().enumerate() {
                eprintln!("  seg[{i}] cell={}", g.cell);
            }
            eprintln!("  doomed={doomed:?} traversed={traversed:?}");
        }
        let m = events.len();
        if m == 0 || segments.len() != if bounded { m } else { m - 1 } {
            { eprintln!("DBG fail 1495"); return false; }
        }
        let mut dead_v = vec![false; self.verts.len()];
        for &v in &doomed {
            dead_v[v] = true;
        }

        // create the new site-side regions
        for (i, seg) in segments.iter_mut().enumerate() {
            let u = events[i].vertex;
            let w = events[(i + 1) % m].vertex;
            seg.region = self.new_region(RKind::Edge { a: s, b: seg.cell, u, w });
        }
        let outer_s = if bounded {
            None
        } else {
            let u = events[m - 1].vertex;
            let w = events[0].vertex;
            Some(self.new_region(RKind::Outer { site: s, u, w }))
        };

        // new cycle for s
        let mut s_cycle: Vec<CellEntry> = Vec::with_capacity(m);
        for (i, seg) in segments.iter().enumerate() {
            s_cycle.push(CellEntry { v: events[i].vertex, region: seg.region });
        }
        if let Some(out) = outer_s {
            s_cycle.push(CellEntry { v: events[m - 1].vertex, region: out });
        }
        self.cells[s] = s_cycle;

        // group boundary events per crossed old region
        let mut crossed: BTreeMap<RId, Vec<usize>> = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            let r = match e.kind {
                EvKind::Cross { region, .. } | EvKind::Escape { region, .. } => region,
            };
            crossed.entry(r).or_default().push(i);
        }

        // order each region's events along its a-view span, probe which
        // subspans the new site took, and build remnants for the survivors
        struct CrossedInfo {
            ordered: Vec<usize>,           // event indices, a-view order
            sub_regions: Vec<Option<RId>>, // per subspan: alive remnant id
        }
        let mut infos: BTreeMap<RId, CrossedInfo> = BTreeMap::new();
        for (&rid, evs) in &crossed {
            let kind = self.regions[rid].kind;
            let (a_site, u, w) = match kind {
                RKind::Edge { a, u, w, .. } => (a, u, w),
                RKind::Outer { site, u, w } => (site, u, w),
                RKind::Plane { .. } => { eprintln!("DBG fail 1573"); return false; }
            };
            let xa = self.sites[a_site].pos;
            let base = self.vertex_dir(a_site, u);
            let tau = std::f64::consts::TAU;
            let key = |ev: usize| -> (f64, u8, usize) {
                let (d, rank) = match events[ev].kind {
                    EvKind::Cross { point, .. } => ((point - xa).normalized(), 0u8),
                    EvKind::Escape { class, .. } => (self.class_dir[class], 1u8),
                };
                let raw = base.cross(d).atan2(base.dot(d));
                let mut ang = if raw < 0.0 { raw + tau } else { raw };
                if ang >= tau - 1e-12 {
                    ang = 0.0;
                }
                (ang, rank, ev)
            };
            let mut ordered = evs.clone();
            ordered.sort_by(|&x, &y| key(x).partial_cmp(&key(y)).unwrap());
            // subspans: [u, e0], [e0, e1], ..., [eLast, w]
            let wdir = self.vertex_dir(a_site, w);
            let raw_w = base.cross(wdir).atan2(base.dot(wdir));
            let mut o_w = if raw_w < 0.0 { raw_w + tau } else { raw_w };
            if u == w {
                if o_w <= 1e-12 {
                    o_w = tau; // single-corner ring: full-circle span
                }
            } else if o_w <= 1e-12 || o_w >= tau - 1e-9 {
                // distinct but coincident split corners bound a
                // zero-length piece, not a full ring
                o_w = 0.0;
            }
            let mut bounds = Vec::with_capacity(ordered.len() + 2);
            bounds.push(0.0);
            for &e in &ordered {
                bounds.push(key(e).0);
            }
            bounds.push(o_w);
            if bounds.windows(2).any(|p| p[1] < p[0] - 1e-9) {
                // an event outside the span this walk claims to have cut
                if std::env::var("SKYVOR_DBG").is_ok() {
                    eprintln!("  ORDER rid={rid} kind={kind:?} u={u} w={w} ordered={ordered:?} bounds={bounds:?}");
                }
                { eprintln!("DBG fail order"); return false; }
            }
            let n_sub = ordered.len() + 1;
            let mut alive = Vec::with_capacity(n_sub);
            for i in 0..n_sub {
                if bounds[i + 1] - bounds[i] <= 1e-9 {
                    // a zero-width span flush against a corner lives or dies
                    // with that corner; it is a pinched connector, not a
                    // strip tail
                    if i == 0 {
                        alive.push(!dead_v[u]);
                        continue;
                    }
                    if i == n_sub - 1 {
                        alive.push(!dead_v[w]);
                        continue;
                    }
                    // zero angular width in the interior: the far tail of a
                    // strip along a class line, owned by whoever wins
                    // asymptotically between the two bounding interfaces
                    let (sin, cos) = bounds[i].sin_cos();
                    let dm = Point::new(base.x * cos - base.y * sin, base.x * sin + base.y * cos);
                    let Some(c) = (0..self.h())
                        .find(|&k| {
                            let cd = self.class_dir[k];
                            cd.dot(dm) > 0.0 && cd.cross(dm).abs() <= 1e-7
                        })
                    else {
                        alive.push(false); // a pinch off the class lines
                        continue;
                    };
                    let dc = self.class_dir[c];
                    let nc = Point::new(dc.y, -dc.x);
                    let bound_off = |bi: usize| -> Option<f64> {
                        if bi == 0 {
                            self.vertex_class_offset(u, c, nc)
                        } else if bi == n_sub {
                            self.vertex_class_offset(w, c, nc)
                        } else {
                            let ev = &events[ordered[bi - 1]];
                            match ev.kind {
                                EvKind::Cross { point, .. } => Some(point.dot(nc)),
                                EvKind::Escape { .. } => {
                                    self.vertex_class_offset(ev.vertex, c, nc)
                                }
                            }
                        }
                    };
                    let (Some(o1), Some(o2)) = (bound_off(i), bound_off(i + 1)) else {
                        { eprintln!("DBG fail striptail"); return false; }
                    };
                    if (o1 - o2).abs() <= 1e-9 * (1.0 + o1.abs() + o2.abs()) {
                        alive.push(false);
                        continue;
                    }
                    let q = nc * (0.5 * (o1 + o2));
                    let mut best: SId = 0;
                    for t in 1..self.sites.len() {
                        best = self.tail_is(best, t, c, q);
                    }
                    let keeps = match kind {
                        RKind::Edge { a, b, .. } => best == a || best == b,
                        RKind::Outer { site, .. } => best == site,
                        RKind::Plane { .. } => unreachable!(),
                    };
                    alive.push(keeps);
                    continue;
                }
                let om = 0.5 * (bounds[i] + bounds[i + 1]);
                let (sin, cos) = om.sin_cos();
                let dm = Point::new(base.x * cos - base.y * sin, base.x * sin + base.y * cos);
                let keeps = match kind {
                    RKind::Edge { a, b, .. } => {
                        let Some(p) = self.ray_cross(a, b, dm) else {
                            if std::env::var("SKYVOR_DBG").is_ok() {
                                eprintln!("  RAYX rid={rid} a={a} b={b} u={u} w={w} i={i} dm={dm:?} bounds={bounds:?} ordered={ordered:?}");
                            }
                            { eprintln!("DBG fail raycross"); return false; }
                        };
                        let fa = self.f_eval(a, p);
                        let fs = self.f_eval(s, p);
                        fa < fs - TIE_EPS * (1.0 + fa.abs() + fs.abs())
                    }
                    RKind::Outer { site, .. } => {
                        self.cone_winner(site, s, self.cone_of(dm)) == site
                    }
                    RKind::Plane { .. } => unreachable!(),
                };
                alive.push(keeps);
            }
            // the stretch adjoining a span corner shares its fate, and two
            // survivor stretches need a dead one between them
            if alive[0] != !dead_v[u] || *alive.last().unwrap() != !dead_v[w] {
                if std::env::var("SKYVOR_DBG").is_ok() {
                    eprintln!("  MISMATCH rid={rid} kind={kind:?} u={u}(dead={}) w={w}(dead={}) ordered={ordered:?} alive={alive:?} bounds={bounds:?}", dead_v[u], dead_v[w]);
                }
                { eprintln!("DBG fail 1602"); return false; }
            }
            let mut prev: Option<bool> = None;
            for (i, &al) in alive.iter().enumerate() {
                if bounds[i + 1] - bounds[i] <= 1e-9 {
                    continue;
                }
                if prev == Some(al) {
                    { eprintln!("DBG fail interleave"); return false; }
                }
                prev = Some(al);
            }
            let mut sub_regions = Vec::with_capacity(n_sub);
            for i in 0..n_sub {
                if !alive[i] {
                    sub_regions.push(None);
                    continue;
                }
                let su = if i == 0 { u } else { events[ordered[i - 1]].vertex };
                let sw = if i == n_sub - 1 { w } else { events[ordered[i]].vertex };
                let nk = match kind {
                    RKind::Edge { a, b, .. } => RKind::Edge { a, b, u: su, w: sw },
                    RKind::Outer { site, .. } => RKind::Outer { site, u: su, w: sw },
                    RKind::Plane { .. } => unreachable!(),
                };
                sub_regions.push(Some(self.new_region(nk)));
            }
            infos.insert(rid, CrossedInfo { ordered, sub_regions });
        }

        let mut visited: Vec<SId> = segments.iter().map(|g| g.cell).collect();
        visited.sort_unstable();
        visited.dedup();

        // every flank of a dying spoke must have been walked, or some
        // unvisited cycle would keep referencing the dead vertex
        for &v in &doomed {
            if let VKind::Infinite { lo, hi, .. } = self.verts[v].kind {
                if visited.binary_search(&lo).is_err() || visited.binary_search(&hi).is_err() {
                    { eprintln!("DBG fail 1631"); return false; }
                }
            }
        }

        let mut traversed_set: Vec<RId> = traversed
            .into_iter()
            .filter(|r| !crossed.contains_key(r))
            .collect();
        traversed_set.sort_unstable();
        traversed_set.dedup();

        // fates of uncrossed regions in walked cells: fully swallowed pieces
        // die plainly, pieces the frontier passed through or whose corner
        // died live on as a remnant clone with mapped ends
        #[derive(Clone, Copy)]
        enum Fate {
            KillPlain,
            KillClone(RId),
        }
        let mut fates: BTreeMap<RId, Fate> = BTreeMap::new();
        for vi in 0..visited.len() {
            let z = visited[vi];
            for ei in 0..self.cells[z].len() {
                let r = self.cells[z][ei].region;
                if !self.regions[r].alive || crossed.contains_key(&r) || fates.contains_key(&r) {
                    continue;
                }
                let (u, w) = match self.regions[r].kind {
                    RKind::Edge { u, w, .. } | RKind::Outer { u, w, .. } => (u, w),
                    RKind::Plane { .. } => continue,
                };
                let touched = traversed_set.binary_search(&r).is_ok();
                if dead_v[u] && dead_v[w] {
                    fates.insert(r, Fate::KillPlain);
                } else if touched || dead_v[u] || dead_v[w] {
                    let (o1, o2) = match self.regions[r].kind {
                        RKind::Edge { a, b, .. } => (a, Some(b)),
                        RKind::Outer { site, .. } => (site, None),
                        RKind::Plane { .. } => unreachable!(),
                    };
                    let mu = if dead_v[u] {
                        self.find_spoke_replacement(&events, u, o1, o2)
                    } else {
                        Some(u)
                    };
                    let mw = if dead_v[w] {
                        self.find_spoke_replacement(&events, w, o1, o2)
                    } else {
                        Some(w)
                    };
                    let (Some(nu), Some(nw)) = (mu, mw) else {
                        // a dead end with no surviving stand-in means the
                        // frontier swallowed the piece whole
                        fates.insert(r, Fate::KillPlain);
                        continue;
                    };
                    let nk = match self.regions[r].kind {
                        RKind::Edge { a, b, .. } => RKind::Edge { a, b, u: nu, w: nw },
                        RKind::Outer { site, .. } => RKind::Outer { site, u: nu, w: nw },
                        RKind::Plane { .. } => unreachable!(),
                    };
                    let clone = self.new_region(nk);
                    fates.insert(r, Fate::KillClone(clone));
                }
            }
        }

        // exit-like event -> the s-side region of the segment it closes
        let mut exit_region: Vec<Option<RId>> = vec![None; m];
        for (i, seg) in segments.iter().enumerate() {
            // segment i runs events[i] -> events[i+1]; its exit is i+1
            exit_region[(i + 1) % m] = Some(seg.region);
        }

        // rebuild each visited cell's cycle
        for &z in &visited {
            let old = std::mem::take(&mut self.cells[z]);
            let mut fresh: Vec<CellEntry> = Vec::with_capacity(old.len() + 2);
            for entry in &old {
                let r = entry.region;
                if let Some(info) = infos.get(&r) {
                    let a_view = match self.regions[r].kind {
                        RKind::Edge { a, .. } => a == z,
                        RKind::Outer { .. } => true,
                        RKind::Plane { .. } => unreachable!(),
                    };
                    let n_sub = info.sub_regions.len();
                    let zview: Vec<usize> = if a_view {
                        (0..info.ordered.len()).collect()
                    } else {
                        (0..info.ordered.len()).rev().collect()
                    };
                    let sub_at = |i: usize| -> Option<RId> {
                        // z-view subspan i maps to a-view subspan
                        if a_view {
                            info.sub_regions[i]
                        } else {
                            info.sub_regions[n_sub - 1 - i]
                        }
                    };
                    if !dead_v[entry.v] {
                        match sub_at(0) {
                            Some(rr) => fresh.push(CellEntry { v: entry.v, region: rr }),
                            None => { eprintln!("DBG fail 1719"); return false; }
                        }
                    }
                    for (zi, &oi) in zview.iter().enumerate() {
                        let ev_idx = info.ordered[oi];
                        let ev = &events[ev_idx];
                        // an escape on the far flank changes this cell's
                        // subspan phase but adds no corner to its cycle
                        let relevant = match ev.kind {
                            EvKind::Cross { from, to, .. } => {
                                debug_assert!(from == z || to == z);
                                true
                            }
                            EvKind::Escape { cell, .. } => cell == z,
                        };
                        if !relevant {
                            continue;
                        }
                        let exit_like = match ev.kind {
                            EvKind::Cross { from, .. } => from == z,
                            EvKind::Escape { starts, .. } => !starts,
                        };
                        let follow = if exit_like {
                            exit_region[ev_idx]
                        } else {
                            sub_at(zi + 1)
                        };
                        match follow {
                            Some(rr) => fresh.push(CellEntry { v: ev.vertex, region: rr }),
                            None => {
                                // legitimate only when the frontier ate the
                                // rest of the piece: the successor piece's
                                // rebuild then supplies this cycle entry
                                let zw = match self.regions[r].kind {
                                    RKind::Edge { u, w, .. } | RKind::Outer { u, w, .. } => {
                                        if a_view { w } else { u }
                                    }
                                    RKind::Plane { .. } => unreachable!(),
                                };
                                let tail_gone =
                                    (zi + 1..n_sub).all(|j| sub_at(j).is_none());
                                if exit_like || !tail_gone || !dead_v[zw] {
                                    { eprintln!("DBG fail 1739"); return false; }
                                }
                            }
                        }
                    }
                } else {
                    match fates.get(&r) {
                        Some(Fate::KillClone(c)) => {
                            // the clone's start corner is the old one or its
                            // spoke replacement, either way its z-view u
                            let (zu, _) = self.region_span(*c, z);
                            fresh.push(CellEntry { v: zu, region: *c });
                        }
                        Some(Fate::KillPlain) => {
                            if !dead_v[entry.v] {
                                { eprintln!("DBG fail 1748"); return false; }
                            }
                        }
                        None => {
                            if dead_v[entry.v] {
                                { eprintln!("DBG fail 1748b"); return false; }
                            }
                            fresh.push(*entry);
                        }
                    }
                }
            }
            if fresh.is_empty() {
                { eprintln!("DBG fail 1755"); return false; }
            }
            self.cells[z] = fresh;
        }

        // a cloned edge piece may still be referenced from its unwalked
        // partner cell
        for (&r, fate) in &fates {
            let Fate::KillClone(clone) = *fate else { continue };
            if let RKind::Edge { a, b, .. } = self.regions[r].kind {
                for cell in [a, b] {
                    if visited.binary_search(&cell).is_ok() {
                        continue;
                    }
                    for ei in 0..self.cells[cell].len() {
                        if self.cells[cell][ei].region == r {
                            self.cells[cell][ei].region = clone;
                        }
                    }
                }
            }
        }

        // kill vertices and regions, wire the DAG; the new cell's regions go
        // first so location descends into them before any remnant
        for (v, d) in dead_v.iter().enumerate() {
            if *d {
                self.kill_vertex(v);
            }
        }
        let mut new_s_regions: Vec<RId> = segments.iter().map(|g| g.region).collect();
        if let Some(out) = outer_s {
            new_s_regions.push(out);
        }
        for (&rid, info) in &infos {
            let mut kids = new_s_regions.clone();
            kids.extend(info.sub_regions.iter().flatten().copied());
            self.kill_region(rid, kids);
        }
        for (&rid, fate) in &fates {
            let mut kids = new_s_regions.clone();
            if let Fate::KillClone(c) = fate {
                kids.push(*c);
            }
            self.kill_region(rid, kids);
        }
        true
    }

    // -----------------------------------------------------------------------
    // inspection

    pub fn stats(&self) -> DiagramStats {
        let mut fin = 0;
        let mut inf = 0;
        for v in &self.verts {
            if v.alive {
                match v.kind {
                    VKind::Finite { .. } => fin += 1,
                    VKind::Infinite { .. } => inf += 1,
                }
            }
        }
        let alive_regions = self.regions.iter().filter(|r| r.alive).count();
        // depth histogram over the DAG, breadth first from the roots
        let mut depth = vec![usize::MAX; self.regions.len()];
        let mut queue: std::collections::VecDeque<RId> = Default::default();
        for &r in &self.roots {
            depth[r] = 0;
            queue.push_back(r);
        }
        let mut hist: Vec<usize> = Vec::new();
        let mut maxd = 0;
        while let Some(r) = queue.pop_front() {
            let d = depth[r];
            if hist.len() <= d {
                hist.resize(d + 1, 0);
            }
            hist[d] += 1;
            maxd = maxd.max(d);
            for &c in &self.regions[r].children {
                if depth[c] == usize::MAX {
                    depth[c] = d + 1;
                    queue.push_back(c);
                }
            }
        }
        DiagramStats {
            sites: self.sites.len(),
            finite_vertices: fin,
            infinite_vertices: inf,
            alive_regions,
            total_regions: self.regions.len(),
            spokes: 3 * fin + inf,
            max_dag_depth: maxd,
            dag_depth_histogram: hist,
            counters: self.counters.clone(),
        }
    }

    /// Spoke geometry in original coordinates for rendering: finite spokes
    /// as segments, infinite spokes as (origin, direction) rays. Counts
    /// match `stats().spokes`.
    pub fn spoke_segments(&self) -> (Vec<(Point, Point)>, Vec<(Point, Point)>) {
        let o = self.ctx.origin;
        let mut segs = Vec::new();
        let mut rays = Vec::new();
        let mut seen: std::collections::BTreeSet<(SId, VId)> = Default::default();
        for (z, cell) in self.cells.iter().enumerate() {
            for e in cell {
                let v = e.v;
                if !self.verts[v].alive {
                    continue;
                }
                match self.verts[v].kind {
                    VKind::Finite { pos, .. } => {
                        if seen.insert((z, v)) {
                            segs.push((self.sites[z].pos + o, pos + o));
                        }
                    }
                    VKind::Infinite { class, lo, .. } => {
                        // one spoke per infinite vertex, drawn from its
                        // cone-side site
                        if z == lo && seen.insert((z, v)) {
                            rays.push((self.sites[z].pos + o, self.class_dir[class]));
                        }
                    }
                }
            }
        }
        (segs, rays)
    }

    /// Structural sanity: cycles consistent with region spans, dead regions
    /// have children, alive regions have alive corner vertices, counts obey
    /// the linear bounds.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.sites.len();
        for (z, cell) in self.cells.iter().enumerate() {
            if n == 1 {
                continue;
            }
            for (i, e) in cell.iter().enumerate() {
                let r = e.region;
                if !self.regions[r].alive {
                    return Err(format!("cell {z} references dead region {r}"));
                }
                if !self.verts[e.v].alive {
                    return Err(format!("cell {z} references dead vertex {}", e.v));
                }
                let (u, w) = self.region_span(r, z);
                let nxt = cell[(i + 1) % cell.len()].v;
                if u != e.v || w != nxt {
                    return Err(format!(
                        "cell {z} entry {i}: region {r} spans ({u},{w}), cycle has ({},{nxt})",
                        e.v
                    ));
                }
            }
        }
        let fin = self
            .verts
            .iter()
            .filter(|v| v.alive && matches!(v.kind, VKind::Finite { .. }))
            .count();
        if n >= 3 && fin > 2 * n - 4 {
            return Err(format!("{fin} finite vertices for {n} sites"));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if !r.alive {
                if r.children.is_empty() {
                    return Err(format!("dead region {i} has no children"));
                }
                if r.children.iter().any(|&c| c <= i) {
                    return Err(format!("region {i} has a non-newer child"));
                }
            } else if let RKind::Edge { u, w, .. } | RKind::Outer { u, w, .. } = r.kind {
                if !self.verts[u].alive || !self.verts[w].alive {
                    return Err(format!("alive region {i} with dead corner"));
                }
            }
        }
        Ok(())
    }
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

// ---------------------------------------------------------------------------
// the skyline pipeline

/// Spatial skyline via the incremental diagram: a point is skyline iff its
/// cell is non-empty, decided at insertion by the apex criterion. Degenerate
/// site sets delegate to the sort-scan path.
pub fn compute_skyline(points: &[Point], sites: &[Point], eps: f64) -> Result<SkylineResult> {
    compute_skyline_seeded(points, sites, eps, 0)
}

pub fn compute_skyline_seeded(
    points: &[Point],
    sites: &[Point],
    eps: f64,
    seed: u64,
) -> Result<SkylineResult> {
    Ok(compute_skyline_diagram(points, sites, eps, seed)?.0)
}

/// Like [`compute_skyline_seeded`] but also hands back the diagram (absent
/// on the degenerate path).
pub fn compute_skyline_diagram(
    points: &[Point],
    sites: &[Point],
    eps: f64,
    seed: u64,
) -> Result<(SkylineResult, Option<SpokeDiagram>)> {
    if points.is_empty() || sites.is_empty() {
        return Err(Error::EmptyInput);
    }
    if points.iter().chain(sites).any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    let ctx = build_context(sites, eps)?;
    if !matches!(ctx.mode, Mode::Full) {
        let mut res = oracles::skyline_degenerate(points, sites, eps)?;
        res.counters.insert("rerouted_degenerate".into(), 1);
        return Ok((res, None));
    }

    // collapse duplicates; all copies share their representative's fate
    let mut first_at: std::collections::HashMap<(u64, u64), usize> = Default::default();
    let mut rep = vec![usize::MAX; points.len()];
    for (i, p) in points.iter().enumerate() {
        let key = (p.x.to_bits(), p.y.to_bits());
        rep[i] = *first_at.entry(key).or_insert(i);
    }

    let mut order: Vec<WeightedSite> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| rep[i] == i)
        .map(|(i, &p)| ctx.lift(i, p))
        .collect();
    order.sort_by(|a, b| {
        a.weight
            .partial_cmp(&b.weight)
            .unwrap()
            .then(a.world.lex_cmp(b.world))
    });
    // shuffle within exactly-equal-weight runs: order there cannot change
    // any outcome (equal weights never dominate), only the structure
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x736b_7976_6f72);
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && order[j].weight == order[i].weight {
            j += 1;
        }
        order[i..j].shuffle(&mut rng);
        i = j;
    }

    let mut diagram = SpokeDiagram::new(ctx)?;
    let mut status: Vec<Option<Option<usize>>> = vec![None; points.len()];
    for s in &order {
        let out = diagram.insert(*s)?;
        status[s.id] = Some(match out {
            InsertOutcome::Inserted => None,
            InsertOutcome::Dominated { witness } => Some(witness),
        });
    }

    let mut res = SkylineResult::new("voronoi");
    for i in 0..points.len() {
        let verdict = status[rep[i]].clone().expect("all reps inserted");
        match verdict {
            None => res.skyline.push(i),
            Some(w) => res.dominated.push(Dominated { id: i, witness: w }),
        }
    }
    res.normalize();
    let c = &diagram.counters;
    let pairs: [(&str, u64); 10] = [
        ("solver_calls", c.solver_calls),
        ("regions_created", c.regions_created),
        ("regions_deleted", c.regions_deleted),
        ("vertices_created", c.vertices_created),
        ("vertices_deleted", c.vertices_deleted),
        ("locate_steps", c.locate_steps),
        ("locate_fallbacks", c.locate_fallbacks),
        ("inserts", c.inserts),
        ("rejects", c.rejects),
        ("walk_failures", c.walk_failures),
    ];
    for (k, v) in pairs {
        res.counters.insert(k.into(), v);
    }
    res.counters
        .insert("sites_unique".into(), order.len() as u64);
    Ok((res, Some(diagram)))
}
