//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use transship::gen::{generate, random_demands, Family};
use transship::graph::{Edge, Instance};

/// Named instances used across the suites.
pub fn corpus() -> Vec<(String, Instance)> {
    let mut out = vec![
        ("path32".to_string(), generate(Family::Path, 32, 1)),
        ("cycle24".to_string(), generate(Family::Cycle, 24, 2)),
        ("grid5x5".to_string(), generate(Family::Grid, 25, 3)),
    ];
    for i in 0..10u64 {
        let n = 20 + 20 * i as usize;
        out.push((format!("random{n}"), generate(Family::Random, n, 100 + i)));
    }
    out
}

/// Corpus members with at most `limit` vertices.
pub fn small_corpus(limit: usize) -> Vec<(String, Instance)> {
    corpus().into_iter().filter(|(_, i)| i.n() <= limit).collect()
}

pub fn demand_batch(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count as u64).map(|i| random_demands(n, seed * 10_000 + i)).collect()
}

/// Floyd-Warshall over an undirected edge list.
pub fn floyd_warshall(n: usize, edges: &[Edge]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0.0;
    }
    for e in edges {
        if e.cost < d[e.tail][e.head] {
            d[e.tail][e.head] = e.cost;
            d[e.head][e.tail] = e.cost;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Bellman-Ford single-source distances.
pub fn bellman_ford(n: usize, edges: &[Edge], source: usize) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n];
    d[source] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for e in edges {
            for (a, b) in [(e.tail, e.head), (e.head, e.tail)] {
                if d[a] + e.cost < d[b] {
                    d[b] = d[a] + e.cost;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Plain union-find without path tricks.
pub struct NaiveSets(Vec<usize>);

impl NaiveSets {
    pub fn new(n: usize) -> Self {
        NaiveSets((0..n).collect())
    }
    pub fn find(&self, mut x: usize) -> usize {
        while self.0[x] != x {
            x = self.0[x];
        }
        x
    }
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// A layer described by member sets instead of ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RefLayer {
    pub reach: f64,
    /// Member sets of the supervertices, sorted.
    pub sets: Vec<Vec<usize>>,
    /// Edges as (set index, set index, cost), smaller index first, sorted.
    pub edges: Vec<(usize, usize, f64)>,
}

/// Straightforward reimplementation of the layer rules: contract cheap
/// edges with a fresh union-find per layer, keep the window, collapse
/// parallels to the cheapest, drop isolated vertices except a lone root.
pub fn reference_layers(inst: &Instance) -> Vec<RefLayer> {
    let n = inst.n();
    let nf = n as f64;
    let apsp = floyd_warshall(n, inst.edges());
    let mut far: Vec<f64> = apsp[0].clone();
    far.sort_by(|a, b| b.total_cmp(a));
    let mut reach = far[0] + far[1];
    let mut out = Vec::new();
    loop {
        let mut sets = NaiveSets::new(n);
        let mut costliest_contracted: Option<f64> = None;
        for e in inst.edges() {
            if e.cost <= reach / nf {
                sets.union(e.tail, e.head);
                costliest_contracted = Some(costliest_contracted.map_or(e.cost, |c: f64| c.max(e.cost)));
            }
        }
        let mut pair_cost: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for e in inst.edges() {
            if e.cost > reach / nf && e.cost <= 2.0 * reach {
                let (a, b) = (sets.find(e.tail), sets.find(e.head));
                if a != b {
                    let key = (a.min(b), a.max(b));
                    let entry = pair_cost.entry(key).or_insert(f64::INFINITY);
                    *entry = entry.min(e.cost);
                }
            }
        }
        let mut roots: Vec<usize> = pair_cost.keys().flat_map(|&(a, b)| [a, b]).collect();
        if out.is_empty() && roots.is_empty() {
            roots.push(sets.find(0));
        }
        roots.sort_unstable();
        roots.dedup();
        let members = |r: usize| -> Vec<usize> { (0..n).filter(|&v| sets.find(v) == r).collect() };
        let mut named: Vec<(Vec<usize>, usize)> = roots.iter().map(|&r| (members(r), r)).collect();
        named.sort();
        let index_of = |r: usize| named.iter().position(|(_, x)| *x == r).unwrap();
        let mut edges: Vec<(usize, usize, f64)> = pair_cost
            .iter()
            .map(|(&(a, b), &c)| {
                let (ia, ib) = (index_of(a), index_of(b));
                (ia.min(ib), ia.max(ib), c)
            })
            .collect();
        edges.sort_by_key(|x| (x.0, x.1));
        let has_edges = !edges.is_empty();
        out.push(RefLayer {
            reach,
            sets: named.into_iter().map(|(s, _)| s).collect(),
            edges,
        });
        if has_edges {
            reach /= 2.0;
        } else if let Some(c) = costliest_contracted {
            reach = c * nf / 2.0;
        } else {
            break;
        }
    }
    out
}

/// Brute-force bundle pieces from an all-pairs table, using the strict
/// `(distance, id)` order: `w ∈ S^j` joins `B^j(v)` iff it precedes every
/// member of `S^{j+1}`.
pub fn brute_pieces(dist: &[Vec<f64>], levels: &[usize], k: usize) -> Vec<Vec<Vec<(usize, f64)>>> {
    let n = dist.len();
    let before = |v: usize, a: usize, b: usize| -> bool {
        let (da, db) = (dist[v][a], dist[v][b]);
        da < db || (da == db && a < b)
    };
    (0..n)
        .map(|v| {
            (0..k)
                .map(|j| {
                    let mut piece: Vec<(usize, f64)> = (0..n)
                        .filter(|&w| levels[w] >= j && dist[v][w].is_finite())
                        .filter(|&w| (0..n).filter(|&x| levels[x] > j).all(|x| before(v, w, x)))
                        .map(|w| (w, dist[v][w]))
                        .collect();
                    piece.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                    piece
                })
                .collect()
        })
        .collect()
}

/// The distribution process simulated directly: as the radius grows from 0
/// to `reach`, mass arrives at rate `1/reach` and is split evenly over the
/// members within the radius of the highest piece that has any. The grid
/// is refined at every member distance so each cell has a fixed active set.
pub fn simulate_distribution(pieces: &[Vec<(usize, f64)>], reach: f64, cells: usize) -> Vec<(usize, f64)> {
    let mut cuts: Vec<f64> = (0..=cells).map(|i| reach * i as f64 / cells as f64).collect();
    for piece in pieces {
        for &(_, d) in piece {
            if d < reach {
                cuts.push(d);
            }
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    let mut mass: std::collections::BTreeMap<usize, f64> = Default::default();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let top = pieces
            .iter()
            .enumerate()
            .rev()
            .find(|(_, p)| p.iter().any(|&(_, d)| d <= mid));
        let Some((_, piece)) = top else { continue };
        let active: Vec<usize> = piece.iter().filter(|&&(_, d)| d <= mid).map(|&(w, _)| w).collect();
        let share = (hi - lo) / reach / active.len() as f64;
        for w in active {
            *mass.entry(w).or_insert(0.0) += share;
        }
    }
    mass.into_iter().filter(|&(_, x)| x > 0.0).collect()
}

/// Members of every supervertex enumerated from the parent pointers.
pub fn explicit_members(layers: &transship::layers::LayerSequence) -> Vec<Vec<usize>> {
    let fam = &layers.family;
    let mut sets = vec![Vec::new(); fam.len()];
    for (v, &leaf) in fam.leaf_of.iter().enumerate() {
        let mut w = Some(leaf);
        while let Some(x) = w {
            sets[x].push(v);
            w = fam.parent[x];
        }
    }
    sets
}

/// Edges of a layer as input-style edges over local ids.
pub fn layer_edges(layer: &transship::layers::Layer) -> Vec<Edge> {
    layer
        .edges
        .iter()
        .map(|e| Edge {
            tail: e.a,
            head: e.b,
            cost: e.cost,
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// `Σ_w |a(w) - b(w)|` for sparse columns sorted by row.
pub fn l1_difference(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut total = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(wa, xa)), Some(&(wb, xb))) if wa == wb => {
                total += (xa - xb).abs();
                i += 1;
                j += 1;
            }
            (Some(&(wa, xa)), Some(&(wb, _))) if wa < wb => {
                total += xa.abs();
                i += 1;
            }
            (Some(&(_, xa)), None) => {
                total += xa.abs();
                i += 1;
            }
            (_, Some(&(_, xb))) => {
                total += xb.abs();
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    total
}
