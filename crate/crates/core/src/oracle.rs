//! Thorup-Zwick samples and bundles for a single layer graph.
//!
//! Samples `V = S^0 ⊇ S^1 ⊇ ... ⊇ S^k = ∅` are stored as a top level per
//! vertex. Bundle pieces `B^j(v) = { w ∈ S^j : δ(v,w) < δ(v,S^{j+1}) }` are
//! found by growing one truncated Dijkstra cluster per center, comparing
//! `(distance, id)` pairs so every vertex sees distinct distances.

use std::collections::BinaryHeap;

use crate::error::OracleError;
use crate::graph::{Adjacency, HeapKey};

const NONE: usize = usize::MAX;

/// Samples and bundles of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleData {
    k: usize,
    level: Vec<usize>,
    piece_offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

/// `⌈lg n⌉`, the level count used for every layer.
pub fn level_count(n: usize) -> usize {
    let mut k = 0;
    while (1usize << k) < n {
        k += 1;
    }
    k.max(1)
}

impl OracleData {
    /// Builds samples with [`sample_hierarchy`] and the matching bundles.
    pub fn build(adj: &Adjacency, k: usize, n_input: usize) -> Result<Self, OracleError> {
        let level = sample_hierarchy(adj, k, n_input)?;
        Ok(Self::from_levels(adj, k, level))
    }

    /// Bundles for a caller-chosen hierarchy: vertex `v` belongs to `S^j`
    /// for every `j <= level[v]`. Levels must be below `k`.
    pub fn from_levels(adj: &Adjacency, k: usize, level: Vec<usize>) -> Self {
        let n = adj.len();
        assert_eq!(level.len(), n);
        assert!(level.iter().all(|&l| l < k), "S^k must be empty");

        let mut triples: Vec<(usize, usize, f64, usize)> = Vec::new();
        let mut scratch = Scratch::new(n);
        for j in 0..k {
            let sources: Vec<usize> = (0..n).filter(|&v| level[v] > j).collect();
            let (next_dist, next_src) = nearest_source(adj, &sources);
            for w in (0..n).filter(|&w| level[w] == j) {
                scratch.grow_cluster(adj, w, &next_dist, &next_src, |v, d| {
                    triples.push((v, j, d, w));
                });
            }
        }
        triples.sort_by(|x, y| {
            (x.0, x.1)
                .cmp(&(y.0, y.1))
                .then(x.2.total_cmp(&y.2))
                .then(x.3.cmp(&y.3))
        });
        let mut piece_offsets = vec![0usize; n * k + 1];
        for t in &triples {
            piece_offsets[t.0 * k + t.1 + 1] += 1;
        }
        for i in 0..n * k {
            piece_offsets[i + 1] += piece_offsets[i];
        }
        let entries = triples.into_iter().map(|(_, _, d, w)| (w, d)).collect();
        OracleData {
            k,
            level,
            piece_offsets,
            entries,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.level.len()
    }

    /// Highest `j` with `v ∈ S^j`.
    pub fn top_level(&self, v: usize) -> usize {
        self.level[v]
    }

    /// Members of `S^j`, ascending.
    pub fn sample(&self, j: usize) -> Vec<usize> {
        (0..self.n()).filter(|&v| j < self.k && self.level[v] >= j).collect()
    }

    /// `B^j(v)` as `(member, distance)` sorted by `(distance, id)`.
    pub fn piece(&self, v: usize, j: usize) -> &[(usize, f64)] {
        let i = v * self.k + j;
        &self.entries[self.piece_offsets[i]..self.piece_offsets[i + 1]]
    }

    /// Whole bundle `B(v)`, piece by piece.
    pub fn bundle(&self, v: usize) -> &[(usize, f64)] {
        let i = v * self.k;
        &self.entries[self.piece_offsets[i]..self.piece_offsets[i + self.k]]
    }

    pub fn bundle_size(&self, v: usize) -> usize {
        self.bundle(v).len()
    }

    pub fn max_bundle_size(&self) -> usize {
        (0..self.n()).map(|v| self.bundle_size(v)).max().unwrap_or(0)
    }

    pub fn total_size(&self) -> usize {
        self.entries.len()
    }
}

/// Multi-source Dijkstra. Returns `δ(v, S)` and the source attaining it,
/// where ties go to the smaller source id.
pub fn nearest_source(adj: &Adjacency, sources: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut src = vec![NONE; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        heap.push(HeapKey {
            dist: 0.0,
            tie: s,
            vertex: s,
        });
    }
    while let Some(HeapKey { dist: d, tie: s, vertex: v }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        dist[v] = d;
        src[v] = s;
        for &(w, c, _) in adj.neighbors(v) {
            if !done[w] {
                heap.push(HeapKey {
                    dist: d + c,
                    tie: s,
                    vertex: w,
                });
            }
        }
    }
    (dist, src)
}

/// Strict `(distance, id)` comparison.
#[inline]
fn precedes(d: f64, id: usize, other_d: f64, other_id: usize) -> bool {
    d < other_d || (d == other_d && id < other_id)
}

struct Scratch {
    dist: Vec<f64>,
    done: Vec<bool>,
    touched: Vec<usize>,
    heap: BinaryHeap<HeapKey>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            dist: vec![f64::INFINITY; n],
            done: vec![false; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    /// Dijkstra from `center` restricted to the vertices that see `center`
    /// strictly before their nearest next-level sample. Clusters are closed
    /// under shortest-path prefixes, so the restriction loses no distances.
    fn grow_cluster(
        &mut self,
        adj: &Adjacency,
        center: usize,
        next_dist: &[f64],
        next_src: &[usize],
        mut visit: impl FnMut(usize, f64),
    ) {
        self.dist[center] = 0.0;
        self.touched.push(center);
        self.heap.push(HeapKey {
            dist: 0.0,
            tie: center,
            vertex: center,
        });
        while let Some(HeapKey { dist: d, vertex: v, .. }) = self.heap.pop() {
            if self.done[v] {
                continue;
            }
            self.done[v] = true;
            visit(v, d);
            for &(w, c, _) in adj.neighbors(v) {
                let nd = d + c;
                if !self.done[w]
                    && nd < self.dist[w]
                    && precedes(nd, center, next_dist[w], next_src[w])
                {
                    if self.dist[w].is_infinite() {
                        self.touched.push(w);
                    }
                    self.dist[w] = nd;
                    self.heap.push(HeapKey {
                        dist: nd,
                        tie: w,
                        vertex: w,
                    });
                }
            }
        }
        for &v in &self.touched {
            self.dist[v] = f64::INFINITY;
            self.done[v] = false;
        }
        self.touched.clear();
    }
}

/// Chooses the nested samples deterministically.
///
/// Each `S^{j+1}` is a greedy hitting set for the sets `N_s(v)` of the `s`
/// nearest `S^j` members of every vertex, so every bundle piece has fewer
/// than `s` members. `s` starts near `2 n^{1/k}` and doubles until each
/// connected component shrinks by a factor `n^{1/k}` (or keeps one sample);
/// at `s = ⌈n^{1/k}(1 + ln n_i)⌉` the greedy bound makes that automatic.
pub fn sample_hierarchy(adj: &Adjacency, k: usize, n_input: usize) -> Result<Vec<usize>, OracleError> {
    let n = adj.len();
    if n == 0 {
        return Err(OracleError::DegenerateLayer);
    }
    let shrink = (n_input.max(2) as f64).powf(1.0 / k as f64);
    let cap = ((shrink * (1.0 + (n as f64).ln())).ceil() as usize).max(2);
    let start = ((2.0 * shrink).ceil() as usize).clamp(2, cap);
    let component = components(adj);
    let comp_count = component.iter().max().map_or(0, |&c| c + 1);

    let mut level = vec![0usize; n];
    let mut current: Vec<usize> = (0..n).collect();
    for j in 0..k.saturating_sub(1) {
        let mut s = start;
        let hitting = loop {
            let nearest = s_nearest(adj, &current, s);
            let hit = greedy_hitting_set(n, &nearest);
            if s >= cap || shrinks_enough(&current, &hit, &component, comp_count, shrink) {
                break hit;
            }
            s = (2 * s).min(cap);
        };
        for &w in &hitting {
            level[w] = j + 1;
        }
        current = hitting;
    }
    Ok(level)
}

fn shrinks_enough(
    current: &[usize],
    hit: &[usize],
    component: &[usize],
    comp_count: usize,
    shrink: f64,
) -> bool {
    let mut before = vec![0usize; comp_count];
    let mut after = vec![0usize; comp_count];
    for &v in current {
        before[component[v]] += 1;
    }
    for &v in hit {
        after[component[v]] += 1;
    }
    before
        .iter()
        .zip(&after)
        .all(|(&b, &a)| b == 0 || a as f64 <= (b as f64 / shrink).max(1.0))
}

fn components(adj: &Adjacency) -> Vec<usize> {
    let n = adj.len();
    let mut comp = vec![NONE; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != NONE {
            continue;
        }
        comp[s] = next;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for &(w, _, _) in adj.neighbors(v) {
                if comp[w] == NONE {
                    comp[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// For every vertex, the `s` nearest members of `sources` in `(distance, id)`
/// order. A truncated multi-source Dijkstra: each vertex accepts at most `s`
/// labels, one per source.
pub fn s_nearest(adj: &Adjacency, sources: &[usize], s: usize) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut heap = BinaryHeap::new();
    for &src in sources {
        heap.push(HeapKey {
            dist: 0.0,
            tie: src,
            vertex: src,
        });
    }
    while let Some(HeapKey { dist: d, tie: src, vertex: v }) = heap.pop() {
        if labels[v].len() >= s || labels[v].contains(&src) {
            continue;
        }
        labels[v].push(src);
        for &(w, c, _) in adj.neighbors(v) {
            if labels[w].len() < s {
                heap.push(HeapKey {
                    dist: d + c,
                    tie: src,
                    vertex: w,
                });
            }
        }
    }
    labels
}

/// Greedy hitting set: repeatedly take the candidate contained in the most
/// unhit sets, smallest id on ties. Returned ascending.
fn greedy_hitting_set(n: usize, sets: &[Vec<usize>]) -> Vec<usize> {
    let mut covers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, set) in sets.iter().enumerate() {
        for &w in set {
            covers[w].push(v);
        }
    }
    let mut count: Vec<usize> = covers.iter().map(Vec::len).collect();
    let mut heap: BinaryHeap<(usize, std::cmp::Reverse<usize>)> = count
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(w, &c)| (c, std::cmp::Reverse(w)))
        .collect();
    let mut hit = vec![false; n];
    let mut chosen = Vec::new();
    while let Some((c, std::cmp::Reverse(w))) = heap.pop() {
        if c != count[w] {
            if count[w] > 0 {
                heap.push((count[w], std::cmp::Reverse(w)));
            }
            continue;
        }
        chosen.push(w);
        for &v in &covers[w] {
            if !hit[v] {
                hit[v] = true;
                for &u in &sets[v] {
                    count[u] -= 1;
                }
            }
        }
    }
    chosen.sort_unstable();
    chosen
}
