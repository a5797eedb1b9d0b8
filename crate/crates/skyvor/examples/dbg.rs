use rand::seq::SliceRandom;
use rand::SeedableRng;
use skyvor::geom::Point;
use skyvor::reduction::build_context;
use skyvor::voronoi::SpokeDiagram;

fn diamond() -> Vec<Point> {
    vec![
        Point::new(1.0, 0.0),
        Point::new(0.0, 1.0),
        Point::new(-1.0, 0.0),
        Point::new(0.0, -1.0),
    ]
}

fn main() {
    let sites = diamond();
    let n = 16;
    let pts: Vec<Point> = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            Point::new(2.0 * a.cos(), 2.0 * a.sin())
        })
        .collect();
    let ctx = build_context(&sites, 1e-9).unwrap();
    let mut order: Vec<skyvor::WeightedSite> = pts
        .iter()
        .enumerate()
        .map(|(i, &p)| ctx.lift(i, p))
        .collect();
    order.sort_by(|a, b| {
        a.weight
            .partial_cmp(&b.weight)
            .unwrap()
            .then(a.world.lex_cmp(b.world))
    });
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0 ^ 0x736b_7976_6f72);
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && order[j].weight == order[i].weight {
            j += 1;
        }
        order[i..j].shuffle(&mut rng);
        i = j;
    }
    eprintln!("order: {:?}", order.iter().map(|s| s.id).collect::<Vec<_>>());
    let mut d = SpokeDiagram::new(ctx.clone()).unwrap();
    for (k, s) in order.iter().enumerate() {
        let was = d.is_degraded();
        let out = d.insert(*s).unwrap();
        eprintln!(
            "step {k}: insert id={} world=({:.4},{:.4}) -> {:?} degraded={}",
            s.id, s.world.x, s.world.y, out, d.is_degraded()
        );
        if !was && d.is_degraded() {
            eprintln!("FIRST FAILURE at step {k}, site id {}", s.id);
            eprintln!("prior sites:");
            for t in &order[..k] {
                eprintln!("  id={} world=({:.17},{:.17})", t.id, t.world.x, t.world.y);
            }
            eprintln!("failing: id={} world=({:.17},{:.17})", s.id, s.world.x, s.world.y);
            break;
        }
    }
}
