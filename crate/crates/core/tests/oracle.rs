mod common;

use transship::gen::{generate, Family};
use transship::graph::{Adjacency, Edge};
use transship::layers::LayerSequence;
use transship::oracle::{level_count, nearest_source, sample_hierarchy, OracleData};

use common::{brute_pieces, floyd_warshall, layer_edges};

/// Every nonempty layer with at most `limit` vertices across the corpus.
fn small_layers(limit: usize) -> Vec<(String, usize, Vec<Edge>, usize)> {
    let mut out = Vec::new();
    for (name, inst) in common::corpus() {
        let seq = LayerSequence::build(&inst);
        for layer in &seq.layers {
            if !layer.is_empty() && layer.n() <= limit {
                out.push((format!("{name}/{}", layer.index), layer.n(), layer_edges(layer), inst.n()));
            }
        }
    }
    out
}

#[test]
fn fixed_sample_on_path() {
    let inst = generate(Family::Path, 4, 0);
    let oracle = OracleData::from_levels(inst.adjacency(), 2, vec![0, 0, 1, 0]);
    assert_eq!(oracle.piece(0, 0), &[(0, 0.0), (1, 1.0)]);
    assert_eq!(oracle.piece(0, 1), &[(2, 2.0)]);
    let apsp = floyd_warshall(4, inst.edges());
    let brute = brute_pieces(&apsp, &[0, 0, 1, 0], 2);
    for v in 0..4 {
        for j in 0..2 {
            assert_eq!(oracle.piece(v, j), brute[v][j].as_slice());
        }
    }
}

#[test]
fn single_vertex_layer() {
    let adj = Adjacency::new(1, &[]);
    let levels = sample_hierarchy(&adj, 2, 16).unwrap();
    assert_eq!(levels, vec![1]);
    let oracle = OracleData::build(&adj, 2, 16).unwrap();
    assert_eq!(oracle.sample(0), vec![0]);
    assert_eq!(oracle.sample(1), vec![0]);
    assert_eq!(oracle.bundle(0), &[(0, 0.0)]);
}

#[test]
fn empty_layer_is_rejected() {
    let adj = Adjacency::new(0, &[]);
    assert!(OracleData::build(&adj, 2, 16).is_err());
}

#[test]
fn pieces_match_brute_force() {
    for (name, n, edges, n_input) in small_layers(50) {
        let adj = Adjacency::new(n, &edges);
        let k = level_count(n_input);
        let oracle = OracleData::build(&adj, k, n_input).unwrap();
        let levels: Vec<usize> = (0..n).map(|v| oracle.top_level(v)).collect();
        let apsp = floyd_warshall(n, &edges);
        let brute = brute_pieces(&apsp, &levels, k);
        for v in 0..n {
            for j in 0..k {
                let got = oracle.piece(v, j);
                let want = &brute[v][j];
                assert_eq!(got.len(), want.len(), "{name} v={v} j={j}");
                for (a, b) in got.iter().zip(want) {
                    assert_eq!(a.0, b.0, "{name} v={v} j={j}");
                    assert!(common::rel_close(a.1, b.1, 1e-12), "{name} v={v} j={j}");
                }
            }
        }
    }
}

#[test]
fn samples_are_nested_with_nonempty_top() {
    for (name, n, edges, n_input) in small_layers(usize::MAX) {
        let adj = Adjacency::new(n, &edges);
        let k = level_count(n_input);
        let oracle = OracleData::build(&adj, k, n_input).unwrap();
        assert_eq!(oracle.sample(0).len(), n, "{name}");
        for j in 1..k {
            let (upper, lower) = (oracle.sample(j), oracle.sample(j - 1));
            assert!(upper.iter().all(|w| lower.contains(w)), "{name}");
        }
        assert!(!oracle.sample(k - 1).is_empty(), "{name}");
        for v in 0..n {
            // a vertex always reaches itself at its own top level
            assert_eq!(oracle.piece(v, oracle.top_level(v)).first(), Some(&(v, 0.0)), "{name}");
        }
    }
}

#[test]
fn next_sample_distance_bounds_each_piece() {
    for (name, n, edges, n_input) in small_layers(200) {
        let adj = Adjacency::new(n, &edges);
        let k = level_count(n_input);
        let oracle = OracleData::build(&adj, k, n_input).unwrap();
        for j in 0..k - 1 {
            let (dist, _) = nearest_source(&adj, &oracle.sample(j + 1));
            for v in 0..n {
                // the nearest member of S^{j+1} is the first entry of a higher piece
                let first_above = (j + 1..k)
                    .filter_map(|l| oracle.piece(v, l).first().map(|x| x.1))
                    .fold(f64::INFINITY, f64::min);
                assert!(common::rel_close(first_above, dist[v], 1e-12), "{name} v={v} j={j}");
                assert!(oracle.piece(v, j).iter().all(|&(_, d)| d <= dist[v]), "{name}");
            }
        }
    }
}

#[test]
fn deterministic_builds() {
    for (_, n, edges, n_input) in small_layers(usize::MAX) {
        let adj = Adjacency::new(n, &edges);
        let k = level_count(n_input);
        assert_eq!(OracleData::build(&adj, k, n_input).unwrap(), OracleData::build(&adj, k, n_input).unwrap());
    }
}

#[test]
fn bundles_within_measured_bound() {
    for (name, inst) in common::corpus() {
        let n = inst.n() as f64;
        let k = level_count(inst.n()) as f64;
        let bound = 8.0 * k * n.powf(1.0 / k) * n.ln();
        let seq = LayerSequence::build(&inst);
        for layer in seq.layers.iter().filter(|l| !l.is_empty()) {
            let oracle = OracleData::build(layer.adjacency(), k as usize, inst.n()).unwrap();
            assert!((oracle.max_bundle_size() as f64) <= bound, "{name}: {} > {bound}", oracle.max_bundle_size());
        }
    }
}
