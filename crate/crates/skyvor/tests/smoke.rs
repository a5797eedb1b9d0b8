use skyvor::geom::Point;
use skyvor::reduction::build_context;
use skyvor::voronoi::{compute_skyline, SpokeDiagram};
use skyvor::{oracles, InsertOutcome};

fn diamond() -> Vec<Point> {
    vec![
        Point::new(1.0, 0.0),
        Point::new(0.0, 1.0),
        Point::new(-1.0, 0.0),
        Point::new(0.0, -1.0),
    ]
}

#[test]
fn bootstrap_one_site() {
    let ctx = build_context(&diamond(), 1e-9).unwrap();
    let s = ctx.lift(0, Point::new(0.0, 0.0));
    let d = SpokeDiagram::bootstrap(&ctx, &[s]).unwrap();
    let st = d.stats();
    assert_eq!(st.sites, 1);
    assert_eq!(st.finite_vertices, 0);
    assert_eq!(st.infinite_vertices, 0);
    assert_eq!(st.alive_regions, 1);
    d.validate().unwrap();
}

#[test]
fn bootstrap_two_sites() {
    let ctx = build_context(&diamond(), 1e-9).unwrap();
    // weights 0 and 1, positions (0,0) and (2,0): bisector through (1.25, 0)
    let a = skyvor::WeightedSite { id: 0, pos: Point::new(0.0, 0.0), weight: 0.0, world: Point::new(0.0, 0.0) };
    let b = skyvor::WeightedSite { id: 1, pos: Point::new(2.0, 0.0), weight: 1.0, world: Point::new(2.0, 0.0) };
    let mut d = SpokeDiagram::bootstrap(&ctx, &[a, b]).unwrap();
    let st = d.stats();
    assert_eq!(st.sites, 2);
    assert_eq!(st.finite_vertices, 0);
    assert_eq!(st.infinite_vertices, 2);
    assert_eq!(st.alive_regions, 3);
    d.validate().unwrap();
    // nearest on each side
    let (id, val) = d.nearest(Point::new(3.0, 0.0)).unwrap();
    assert_eq!(id, 1);
    assert!((val - 3.0).abs() < 1e-9, "val={val}");
    let (id, val) = d.nearest(Point::new(-1.0, 0.0)).unwrap();
    assert_eq!(id, 0);
    assert!((val - 2.0).abs() < 1e-9);
    // near the crossing point (1.25, 0): left of it site 0 wins
    let (id, _) = d.nearest(Point::new(1.2, 0.0)).unwrap();
    assert_eq!(id, 0);
    let (id, _) = d.nearest(Point::new(1.3, 0.0)).unwrap();
    assert_eq!(id, 1);
}

#[test]
fn bootstrap_three_sites() {
    let ctx = build_context(&diamond(), 1e-9).unwrap();
    let mk = |id, x, y| skyvor::WeightedSite {
        id,
        pos: Point::new(x, y),
        weight: 0.0,
        world: Point::new(x, y),
    };
    let mut d =
        SpokeDiagram::bootstrap(&ctx, &[mk(0, 0.0, 0.0), mk(1, 2.0, 0.0), mk(2, 0.0, 2.0)]).unwrap();
    let st = d.stats();
    assert_eq!(st.sites, 3, "{:?}", st);
    assert_eq!(st.finite_vertices, 1, "{:?}", st);
    assert_eq!(st.spokes, 3 * st.finite_vertices + st.infinite_vertices);
    assert!(st.counters.solver_calls >= 1);
    d.validate().unwrap();
    let (id, val) = d.nearest(Point::new(3.0, 0.0)).unwrap();
    assert_eq!(id, 1);
    assert!((val - 2.0).abs() < 1e-9, "val={val}");
}

#[test]
fn insert_dominated_and_close() {
    let ctx = build_context(&diamond(), 1e-9).unwrap();
    let origin = ctx.lift(0, Point::new(0.0, 0.0));
    let mut d = SpokeDiagram::bootstrap(&ctx, &[origin]).unwrap();
    let far = ctx.lift(1, Point::new(3.0, 0.0));
    match d.insert(far).unwrap() {
        InsertOutcome::Dominated { witness } => assert_eq!(witness, 0),
        other => panic!("expected dominated, got {other:?}"),
    }
    let near = ctx.lift(2, Point::new(0.1, 0.0));
    assert_eq!(d.insert(near).unwrap(), InsertOutcome::Inserted);
    d.validate().unwrap();
}

#[test]
fn ring_all_skyline() {
    let sites = diamond();
    let n = 16;
    let pts: Vec<Point> = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            Point::new(2.0 * a.cos(), 2.0 * a.sin())
        })
        .collect();
    let res = compute_skyline(&pts, &sites, 1e-9).unwrap();
    assert_eq!(res.skyline.len(), n, "counters: {:?}", res.counters);
    assert_eq!(res.counters["walk_failures"], 0);
}

#[test]
fn random_integer_instances_match_brute() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for case in 0..60 {
        let n_s = rng.gen_range(3..8);
        let n_p = rng.gen_range(1..40);
        let sites: Vec<Point> = (0..n_s)
            .map(|_| Point::new(rng.gen_range(-50..=50) as f64, rng.gen_range(-50..=50) as f64))
            .collect();
        let pts: Vec<Point> = (0..n_p)
            .map(|_| Point::new(rng.gen_range(-60..=60) as f64, rng.gen_range(-60..=60) as f64))
            .collect();
        let brute = oracles::skyline_brute(&pts, &sites, 1e-9).unwrap();
        let fast = compute_skyline(&pts, &sites, 1e-9).unwrap();
        assert_eq!(
            brute.skyline, fast.skyline,
            "case {case}: sites={sites:?} pts={pts:?} counters={:?}",
            fast.counters
        );
        assert_eq!(fast.counters.get("walk_failures"), Some(&0), "case {case}");
        for (d_b, d_f) in brute.dominated.iter().zip(fast.dominated.iter()) {
            assert_eq!(d_b.id, d_f.id, "case {case}");
        }
    }
}
