//! Input model: undirected graphs with positive costs, demand vectors, flows,
//! shortest paths and minimum-spanning-tree routing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::ValidationError;

pub type VertexId = usize;

/// Relative tolerance used for properness and routing checks.
pub const ROUTING_TOL: f64 = 1e-9;
/// Absolute tolerance used when the demand vector is zero.
pub const ZERO_SCALE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub cost: f64,
}

/// Compressed adjacency over a fixed edge list. Each undirected edge is
/// listed once from each endpoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    arcs: Vec<(VertexId, f64, usize)>,
}

impl Adjacency {
    pub fn new(n: usize, edges: &[Edge]) -> Self {
        let mut degree = vec![0usize; n + 1];
        for e in edges {
            degree[e.tail] += 1;
            degree[e.head] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut arcs = vec![(0, 0.0, 0); offsets[n]];
        for (idx, e) in edges.iter().enumerate() {
            arcs[fill[e.tail]] = (e.head, e.cost, idx);
            fill[e.tail] += 1;
            arcs[fill[e.head]] = (e.tail, e.cost, idx);
            fill[e.head] += 1;
        }
        Adjacency { offsets, arcs }
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Neighbours of `v` as `(neighbour, cost, edge index)`.
    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64, usize)] {
        &self.arcs[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
}

/// A validated transshipment instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    edges: Vec<Edge>,
    demands: Vec<f64>,
    adjacency: Adjacency,
}

impl Instance {
    /// Checks the standing assumptions and builds the instance.
    pub fn new(n: usize, edges: Vec<Edge>, demands: Vec<f64>) -> Result<Self, ValidationError> {
        if n < 4 {
            return Err(ValidationError::TooSmall { n });
        }
        if demands.len() != n {
            return Err(ValidationError::DemandLength {
                expected: n,
                found: demands.len(),
            });
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (idx, e) in edges.iter().enumerate() {
            if e.tail >= n || e.head >= n {
                return Err(ValidationError::VertexOutOfRange {
                    edge: idx,
                    vertex: e.tail.max(e.head),
                    n,
                });
            }
            if e.tail == e.head || !seen.insert((e.tail.min(e.head), e.tail.max(e.head))) {
                return Err(ValidationError::ParallelEdgeOrLoop {
                    u: e.tail,
                    v: e.head,
                });
            }
            if !(e.cost > 0.0 && e.cost.is_finite()) {
                return Err(ValidationError::NonpositiveCost {
                    edge: idx,
                    cost: e.cost,
                });
            }
        }
        if let Some(bad) = demands.iter().position(|d| !d.is_finite()) {
            return Err(ValidationError::NonFiniteDemand { vertex: bad });
        }
        let adjacency = Adjacency::new(n, &edges);
        let components = count_components(n, &adjacency);
        if components != 1 {
            return Err(ValidationError::Disconnected { components });
        }
        let sum: f64 = demands.iter().sum();
        let scale: f64 = demands.iter().map(|d| d.abs()).sum();
        if sum.abs() > tolerance(scale) {
            return Err(ValidationError::ImproperDemands { sum });
        }
        Ok(Instance {
            n,
            edges,
            demands,
            adjacency,
        })
    }

    /// Same graph, different demand vector.
    pub fn with_demands(&self, demands: Vec<f64>) -> Result<Self, ValidationError> {
        if demands.len() != self.n {
            return Err(ValidationError::DemandLength {
                expected: self.n,
                found: demands.len(),
            });
        }
        if let Some(bad) = demands.iter().position(|d| !d.is_finite()) {
            return Err(ValidationError::NonFiniteDemand { vertex: bad });
        }
        let sum: f64 = demands.iter().sum();
        let scale: f64 = demands.iter().map(|d| d.abs()).sum();
        if sum.abs() > tolerance(scale) {
            return Err(ValidationError::ImproperDemands { sum });
        }
        Ok(Instance {
            demands,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn costs(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.iter().map(|e| e.cost)
    }

    pub fn max_cost(&self) -> f64 {
        self.costs().fold(0.0, f64::max)
    }

    /// Index of the edge joining `u` and `v`, if any.
    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<usize> {
        self.adjacency
            .neighbors(u)
            .iter()
            .find(|&&(w, _, _)| w == v)
            .map(|&(_, _, idx)| idx)
    }
}

/// Tolerance for a vector whose l1 norm is `scale`.
pub fn tolerance(scale: f64) -> f64 {
    if scale > 0.0 {
        ROUTING_TOL * scale
    } else {
        ZERO_SCALE_TOL
    }
}

fn count_components(n: usize, adj: &Adjacency) -> usize {
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    let mut components = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &(w, _, _) in adj.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    components
}

/// Signed per-edge flow. Positive values travel from `tail` to `head`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Flow {
    pub values: Vec<f64>,
}

impl Flow {
    pub fn zero(m: usize) -> Self {
        Flow {
            values: vec![0.0; m],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add_assign(&mut self, other: &Flow) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// `c(f) = Σ c(e)|f(e)|`.
pub fn flow_cost(flow: &Flow, edges: &[Edge]) -> f64 {
    edges
        .iter()
        .zip(&flow.values)
        .map(|(e, f)| e.cost * f.abs())
        .sum()
}

/// Net out-flow at every vertex, `I_G f`.
pub fn divergence(n: usize, edges: &[Edge], flow: &Flow) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (e, &f) in edges.iter().zip(&flow.values) {
        out[e.tail] += f;
        out[e.head] -= f;
    }
    out
}

/// `b - I_G f`.
pub fn residual(demands: &[f64], edges: &[Edge], flow: &Flow) -> Vec<f64> {
    let div = divergence(demands.len(), edges, flow);
    demands.iter().zip(div).map(|(b, d)| b - d).collect()
}

/// Largest absolute entry of `b - I_G f` together with the vertex attaining it.
pub fn max_violation(demands: &[f64], edges: &[Edge], flow: &Flow) -> (VertexId, f64) {
    residual(demands, edges, flow)
        .into_iter()
        .map(f64::abs)
        .enumerate()
        .fold((0, 0.0), |best, (v, x)| if x > best.1 { (v, x) } else { best })
}

/// True iff `||b - I_G f||_inf <= tol * ||b||_1` (absolute 1e-12 when b = 0).
pub fn is_routing(flow: &Flow, demands: &[f64], edges: &[Edge], tol: f64) -> bool {
    let scale: f64 = demands.iter().map(|d| d.abs()).sum();
    let limit = if scale > 0.0 { tol * scale } else { ZERO_SCALE_TOL };
    max_violation(demands, edges, flow).1 <= limit
}

/// Heap key ordered by `(distance, vertex)` so that ties resolve by id.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HeapKey {
    pub dist: f64,
    pub tie: usize,
    pub vertex: usize,
}

impl PartialEq for HeapKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.tie.cmp(&self.tie))
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Single-source shortest path tree.
#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub source: VertexId,
    pub dist: Vec<f64>,
    /// Predecessor vertex and the edge used to reach it.
    pub parent: Vec<Option<(VertexId, usize)>>,
    /// Vertices in settle order, i.e. increasing `(dist, id)`.
    pub order: Vec<VertexId>,
}

impl DistanceResult {
    /// Vertices from `source` to `target` along the parent tree.
    pub fn path_to(&self, target: VertexId) -> Option<Vec<VertexId>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while let Some((p, _)) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Binary-heap Dijkstra. Vertices settle in increasing `(distance, id)` order
/// and a parent is only replaced by a strictly shorter tentative distance.
pub fn dijkstra(adj: &Adjacency, source: VertexId) -> DistanceResult {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapKey {
        dist: 0.0,
        tie: source,
        vertex: source,
    });
    while let Some(HeapKey { dist: d, vertex: v, .. }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        order.push(v);
        for &(w, c, idx) in adj.neighbors(v) {
            let nd = d + c;
            if nd < dist[w] {
                dist[w] = nd;
                parent[w] = Some((v, idx));
                heap.push(HeapKey {
                    dist: nd,
                    tie: w,
                    vertex: w,
                });
            }
        }
    }
    DistanceResult {
        source,
        dist,
        parent,
        order,
    }
}

/// `δ(s, x) + δ(s, y)` for `s` the smallest vertex id and `x`, `y` the two
/// vertices farthest from it.
pub fn compute_delta0(instance: &Instance) -> f64 {
    let tree = dijkstra(instance.adjacency(), 0);
    let order = &tree.order;
    let x = order[order.len() - 1];
    let y = order[order.len() - 2];
    tree.dist[x] + tree.dist[y]
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Edge indices sorted by `(cost, index)`.
pub fn edges_by_cost(edges: &[Edge]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| edges[a].cost.total_cmp(&edges[b].cost).then(a.cmp(&b)));
    order
}

/// Kruskal minimum spanning tree, ties broken by edge index.
pub fn minimum_spanning_tree(n: usize, edges: &[Edge]) -> Vec<usize> {
    let mut sets = DisjointSets::new(n);
    edges_by_cost(edges)
        .into_iter()
        .filter(|&idx| sets.union(edges[idx].tail, edges[idx].head))
        .collect()
}

/// Routes `demands` along a minimum spanning tree: every tree edge carries
/// the net demand of the subtree hanging below it.
pub fn mst_route(instance: &Instance, demands: &[f64]) -> Flow {
    let n = instance.n();
    let edges = instance.edges();
    let tree = minimum_spanning_tree(n, edges);
    let mut tree_edges: Vec<Edge> = tree.iter().map(|&i| edges[i]).collect();
    // keep costs out of the traversal; only structure matters
    for e in &mut tree_edges {
        e.cost = 1.0;
    }
    let adj = Adjacency::new(n, &tree_edges);
    let mut flow = Flow::zero(edges.len());
    let mut parent_edge: Vec<Option<usize>> = vec![None; n];
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, _, local) in adj.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = Some(tree[local]);
                stack.push(w);
            }
        }
    }
    let mut subtree: Vec<f64> = demands.to_vec();
    for &v in order.iter().rev() {
        if let Some(idx) = parent_edge[v] {
            let e = edges[idx];
            let up = if e.tail == v { e.head } else { e.tail };
            // the subtree below v pushes its net supply out through this edge
            flow.values[idx] = if e.tail == v { subtree[v] } else { -subtree[v] };
            subtree[up] += subtree[v];
        }
    }
    flow
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(u: usize, v: usize, c: f64) -> Edge {
        Edge {
            tail: u,
            head: v,
            cost: c,
        }
    }

    fn path4() -> Instance {
        Instance::new(
            4,
            vec![edge(0, 1, 1.0), edge(1, 2, 1.0), edge(2, 3, 1.0)],
            vec![1.0, 0.0, 0.0, -1.0],
        )
        .unwrap()
    }

    #[test]
    fn validate_accepts_unit_cycle() {
        let edges = vec![edge(0, 1, 1.0), edge(1, 2, 1.0), edge(2, 3, 1.0), edge(3, 0, 1.0)];
        assert!(Instance::new(4, edges, vec![1.0, -1.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn validate_rejects_improper_demands() {
        let edges = vec![edge(0, 1, 1.0), edge(1, 2, 1.0), edge(2, 3, 1.0)];
        let err = Instance::new(4, edges, vec![1.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, ValidationError::ImproperDemands { .. }));
    }

    #[test]
    fn validate_rejects_disconnected() {
        let edges = vec![edge(0, 1, 1.0), edge(2, 3, 1.0)];
        let err = Instance::new(4, edges, vec![0.0; 4]).unwrap_err();
        assert!(matches!(err, ValidationError::Disconnected { components: 2 }));
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let loops = vec![edge(0, 0, 1.0), edge(0, 1, 1.0), edge(1, 2, 1.0), edge(2, 3, 1.0)];
        assert!(matches!(
            Instance::new(4, loops, vec![0.0; 4]).unwrap_err(),
            ValidationError::ParallelEdgeOrLoop { .. }
        ));
        let parallel = vec![edge(0, 1, 1.0), edge(1, 0, 2.0), edge(1, 2, 1.0), edge(2, 3, 1.0)];
        assert!(matches!(
            Instance::new(4, parallel, vec![0.0; 4]).unwrap_err(),
            ValidationError::ParallelEdgeOrLoop { .. }
        ));
        let free = vec![edge(0, 1, 0.0), edge(1, 2, 1.0), edge(2, 3, 1.0)];
        assert!(matches!(
            Instance::new(4, free, vec![0.0; 4]).unwrap_err(),
            ValidationError::NonpositiveCost { .. }
        ));
        let tiny = vec![edge(0, 1, 1.0), edge(1, 2, 1.0)];
        assert!(matches!(
            Instance::new(3, tiny, vec![0.0; 3]).unwrap_err(),
            ValidationError::TooSmall { n: 3 }
        ));
    }

    #[test]
    fn dijkstra_on_path_and_triangle() {
        let p = path4();
        assert_eq!(dijkstra(p.adjacency(), 0).dist, vec![0.0, 1.0, 2.0, 3.0]);

        let tri = vec![edge(0, 1, 1.0), edge(1, 2, 1.0), edge(0, 2, 3.0)];
        let adj = Adjacency::new(3, &tri);
        let res = dijkstra(&adj, 0);
        assert_eq!(res.dist[2], 2.0);
        assert_eq!(res.path_to(2).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn dijkstra_settles_ties_by_id() {
        // star: all leaves at distance 1
        let star = vec![edge(0, 3, 1.0), edge(0, 1, 1.0), edge(0, 2, 1.0)];
        let adj = Adjacency::new(4, &star);
        assert_eq!(dijkstra(&adj, 0).order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn delta0_examples() {
        assert_eq!(compute_delta0(&path4()), 5.0);
        let star = Instance::new(
            4,
            vec![edge(0, 1, 1.0), edge(0, 2, 1.0), edge(0, 3, 1.0)],
            vec![0.0; 4],
        )
        .unwrap();
        assert_eq!(compute_delta0(&star), 2.0);
    }

    #[test]
    fn residual_and_cost() {
        let p = path4();
        let zero = Flow::zero(3);
        assert_eq!(residual(p.demands(), p.edges(), &zero), p.demands().to_vec());
        assert_eq!(flow_cost(&zero, p.edges()), 0.0);

        let two = Instance::new(
            4,
            vec![edge(0, 1, 2.5), edge(1, 2, 1.0), edge(2, 3, 1.0)],
            vec![1.0, -1.0, 0.0, 0.0],
        )
        .unwrap();
        let f = Flow {
            values: vec![1.0, 0.0, 0.0],
        };
        assert_eq!(flow_cost(&f, two.edges()), 2.5);
        assert!(residual(two.demands(), two.edges(), &f).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mst_route_on_path() {
        let p = path4();
        let f = mst_route(&p, p.demands());
        assert_eq!(f.values, vec![1.0, 1.0, 1.0]);
        assert_eq!(flow_cost(&f, p.edges()), 3.0);
        assert!(is_routing(&f, p.demands(), p.edges(), ROUTING_TOL));

        let zero = mst_route(&p, &[0.0; 4]);
        assert!(zero.values.iter().all(|&x| x == 0.0));
        assert!(!is_routing(&zero, p.demands(), p.edges(), ROUTING_TOL));
    }

    #[test]
    fn mst_route_uses_tree_edges_only() {
        // 4-cycle with one expensive edge: the tree avoids it
        let edges = vec![edge(0, 1, 1.0), edge(1, 2, 1.0), edge(2, 3, 1.0), edge(3, 0, 10.0)];
        let inst = Instance::new(4, edges, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let f = mst_route(&inst, inst.demands());
        assert_eq!(f.values[3], 0.0);
        assert!(is_routing(&f, inst.demands(), inst.edges(), ROUTING_TOL));
        assert_eq!(flow_cost(&f, inst.edges()), 3.0);
    }
}
