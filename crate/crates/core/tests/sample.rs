use graphonlab::functionals::{degree, degree_law, SmallGraph};
use graphonlab::graphon::{AnalyticGraphon, GraphonHandle};
use graphonlab::sample::{empirical_hom_density, sample_graph, SampledGraph};

fn cx() -> GraphonHandle {
    GraphonHandle::counterexample()
}

fn constant(p: f64) -> GraphonHandle {
    GraphonHandle::analytic(AnalyticGraphon::constant(p).unwrap())
}

#[test]
fn constant_extremes() {
    let g = sample_graph(&constant(1.0), 3, 7).unwrap();
    assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 2)]);
    let g = sample_graph(&constant(0.0), 100, 7).unwrap();
    assert_eq!(g.edge_count(), 0);
    assert!(sample_graph(&cx(), 0, 1).is_err());
}

#[test]
fn structure_invariants() {
    let g = sample_graph(&cx(), 300, 5).unwrap();
    assert!(g.positions().windows(2).all(|p| p[0] <= p[1]));
    assert!(g.positions().iter().all(|&x| (0.0..1.0).contains(&x)));
    for i in 0..g.n() {
        assert!(!g.has_edge(i, i));
        for j in 0..g.n() {
            assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
        }
    }
    // the two quarters off the branches carry no edges
    for (i, j) in g.edges() {
        let (x, y) = (g.positions()[i], g.positions()[j]);
        assert!((x < 0.5 && y < 0.5) || x + y > 1.5, "edge at ({x}, {y})");
    }
}

#[test]
fn degree_law_concentrates() {
    let oracle = degree_law(&degree(&cx(), 1 << 16).unwrap()).unwrap();
    let close = [1u64, 2, 3]
        .iter()
        .filter(|&&seed| {
            let g = sample_graph(&cx(), 2000, seed).unwrap();
            g.normalized_degree_law().unwrap().ks(&oracle) <= 0.05
        })
        .count();
    assert!(close >= 2, "{close}/3 seeds within 0.05");
}

#[test]
fn edge_density_near_an_eighth() {
    let g = sample_graph(&cx(), 2000, 11).unwrap();
    let t = empirical_hom_density(&SmallGraph::edge(), &g).unwrap();
    assert!((t - 0.125).abs() <= 0.02, "{t}");
    let n = g.n() as f64;
    assert_eq!(t, 2.0 * g.edge_count() as f64 / (n * (n - 1.0)));
}

#[test]
fn hom_density_examples() {
    let k10 = sample_graph(&constant(1.0), 10, 1).unwrap();
    assert_eq!(empirical_hom_density(&SmallGraph::edge(), &k10).unwrap(), 1.0);
    assert_eq!(empirical_hom_density(&SmallGraph::cycle4(), &k10).unwrap(), 1.0);
    let empty = sample_graph(&constant(0.0), 10, 1).unwrap();
    assert_eq!(empirical_hom_density(&SmallGraph::triangle(), &empty).unwrap(), 0.0);
    // more pattern vertices than graph vertices
    let two = sample_graph(&constant(1.0), 2, 1).unwrap();
    assert_eq!(empirical_hom_density(&SmallGraph::triangle(), &two).unwrap(), 0.0);
    let five = SmallGraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    assert!(empirical_hom_density(&five, &k10).is_err());
}

#[test]
fn triangle_density_of_a_constant() {
    let g = sample_graph(&constant(0.5), 400, 3).unwrap();
    let t = empirical_hom_density(&SmallGraph::triangle(), &g).unwrap();
    assert!((t - 0.125).abs() <= 0.01, "{t}");
    // the subsampled route above the exact limit
    let big = sample_graph(&constant(0.5), 3100, 3).unwrap();
    let e = empirical_hom_density(&SmallGraph::edge(), &big).unwrap();
    assert!((e - 0.5).abs() <= 0.01, "{e}");
}

#[test]
fn sorted_blocks_are_symmetric() {
    let g = sample_graph(&cx(), 1000, 4).unwrap();
    let b = g.degree_sorted_blocks(4).unwrap();
    assert!(b.iter().all(|&v| (0.0..=1.0).contains(&v)));
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(b[i * 4 + j], b[j * 4 + i]);
        }
    }
    assert!(g.degree_sorted_blocks(0).is_err());
}

#[test]
fn sampling_is_deterministic() {
    let a = sample_graph(&cx(), 500, 9).unwrap();
    assert_eq!(a, sample_graph(&cx(), 500, 9).unwrap());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    assert_eq!(a, pool.install(|| sample_graph(&cx(), 500, 9).unwrap()));
    assert_ne!(a, sample_graph(&cx(), 500, 10).unwrap());
}

#[test]
fn edge_list_round_trip() {
    let g = sample_graph(&cx(), 200, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    g.save(dir.path(), "s").unwrap();
    let text = std::fs::read_to_string(dir.path().join("s.edges")).unwrap();
    let first = text.lines().next().unwrap();
    let ij: Vec<usize> = first.split(' ').map(|t| t.parse().unwrap()).collect();
    assert!(ij[0] >= 1 && ij[0] < ij[1]);
    assert_eq!(SampledGraph::load(dir.path(), "s").unwrap(), g);

    let meta = g.metadata();
    assert!(SampledGraph::from_parts(&meta, "1 1\n").is_err());
    assert!(SampledGraph::from_parts(&meta, "0 2\n").is_err());
    assert!(meta.edges > 0 && SampledGraph::from_parts(&meta, "").is_err());
}
