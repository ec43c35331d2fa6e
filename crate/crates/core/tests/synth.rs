use std::collections::HashSet;

use modsplit::{detect, generate, nmi, Error, Method, PlantedConfig, SsrConfig};

fn fig_config(mixing: f64, seed: u64) -> PlantedConfig {
    PlantedConfig {
        n: 1000,
        k: 40,
        avg_degree: 10.0,
        max_degree: 25,
        mixing,
        seed,
    }
}

#[test]
fn realized_mixing_close_to_target() {
    let p = generate(&fig_config(0.1, 17)).unwrap();
    let crossing = p
        .graph
        .edges()
        .filter(|&(u, v, _)| p.truth.labels()[u] != p.truth.labels()[v])
        .count();
    let fraction = crossing as f64 / p.graph.edge_count() as f64;
    assert!((fraction - 0.1).abs() <= 0.03, "{fraction}");
    assert!((fraction - p.realized_mixing).abs() < 1e-12);
}

#[test]
fn simple_and_degree_bounded() {
    for mixing in [0.0, 0.2, 0.5] {
        let p = generate(&fig_config(mixing, 3)).unwrap();
        let mut seen = HashSet::new();
        for (u, v, w) in p.graph.edges() {
            assert_ne!(u, v);
            assert_eq!(w, 1.0);
            assert!(seen.insert((u.min(v), u.max(v))));
        }
        assert!(p.graph.out_degree().iter().all(|&d| d <= 25.0));
        let avg = 2.0 * p.graph.edge_count() as f64 / 1000.0;
        assert!((avg - 10.0).abs() <= 0.5);
    }
}

#[test]
fn identical_config_identical_graph() {
    let a = generate(&fig_config(0.3, 9)).unwrap();
    let b = generate(&fig_config(0.3, 9)).unwrap();
    assert_eq!(a.graph.edges().collect::<Vec<_>>(), b.graph.edges().collect::<Vec<_>>());
    let c = generate(&fig_config(0.3, 10)).unwrap();
    assert_ne!(a.graph.edges().collect::<Vec<_>>(), c.graph.edges().collect::<Vec<_>>());
}

#[test]
fn disconnected_blocks_are_recovered() {
    let p = generate(&PlantedConfig {
        n: 20,
        k: 2,
        avg_degree: 4.0,
        max_degree: 9,
        mixing: 0.0,
        seed: 1,
    })
    .unwrap();
    assert_eq!(p.realized_mixing, 0.0);
    let r = detect(&p.graph, &SsrConfig::default(), Method::Ssr).unwrap();
    assert_eq!(nmi(&r.partition, &p.truth).unwrap(), 1.0);
}

#[test]
fn feasibility_boundary() {
    // Communities of 10 hold at most 9 intra-community neighbours.
    let edge = PlantedConfig {
        n: 100,
        k: 10,
        avg_degree: 12.0,
        max_degree: 30,
        mixing: 0.25,
        seed: 0,
    };
    assert!(generate(&edge).is_ok());
    let over = PlantedConfig { mixing: 0.2, ..edge };
    assert!(matches!(generate(&over), Err(Error::Generation(_))));
}
