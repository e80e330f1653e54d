//! The sequence of layer graphs (minors with reaches) and the laminar family
//! of contraction sets linking them.
//!
//! Layer `i` contracts every edge of cost at most `reach_i / n`, deletes every
//! edge of cost above `2 reach_i` and drops vertices left isolated. Contraction
//! components at any threshold are read off a Kruskal merge tree, so each
//! layer costs time proportional to the edges whose cost falls in its window.

use crate::graph::{edges_by_cost, Adjacency, DisjointSets, Edge, Instance, VertexId};

const NONE: usize = usize::MAX;

/// Binary merge tree produced by Kruskal's algorithm. Leaves are the input
/// vertices; every internal node records the cost of the edge that created it.
#[derive(Debug, Clone)]
pub struct MergeTree {
    n: usize,
    parent: Vec<usize>,
    merge_cost: Vec<f64>,
    min_vertex: Vec<VertexId>,
    kids: Vec<[usize; 2]>,
    lift: Vec<Vec<usize>>,
}

impl MergeTree {
    fn new(n: usize, edges: &[Edge], by_cost: &[usize]) -> Self {
        let mut sets = DisjointSets::new(n);
        // union-find root -> merge-tree node currently representing the set
        let mut top: Vec<usize> = (0..n).collect();
        let mut parent: Vec<usize> = (0..n).collect();
        let mut merge_cost = vec![f64::NEG_INFINITY; n];
        let mut min_vertex: Vec<VertexId> = (0..n).collect();
        let mut kids = vec![[NONE, NONE]; n];
        for &idx in by_cost {
            let e = edges[idx];
            let (ra, rb) = (sets.find(e.tail), sets.find(e.head));
            if ra == rb {
                continue;
            }
            let node = parent.len();
            let (ta, tb) = (top[ra], top[rb]);
            parent.push(node);
            merge_cost.push(e.cost);
            min_vertex.push(min_vertex[ta].min(min_vertex[tb]));
            kids.push([ta, tb]);
            parent[ta] = node;
            parent[tb] = node;
            sets.union(ra, rb);
            top[sets.find(ra)] = node;
        }
        let mut lift = vec![parent.clone()];
        let mut span = 1;
        while span < parent.len() {
            let prev = lift.last().unwrap();
            let next: Vec<usize> = prev.iter().map(|&p| prev[p]).collect();
            lift.push(next);
            span *= 2;
        }
        MergeTree {
            n,
            parent,
            merge_cost,
            min_vertex,
            kids,
            lift,
        }
    }

    /// Component of `v` after contracting every edge of cost `<= threshold`.
    pub fn component_at(&self, v: VertexId, threshold: f64) -> usize {
        let mut cur = v;
        for level in self.lift.iter().rev() {
            let up = level[cur];
            if up != cur && self.merge_cost[up] <= threshold {
                cur = up;
            }
        }
        cur
    }

    pub fn parent(&self, node: usize) -> usize {
        self.parent[node]
    }

    pub fn min_vertex(&self, node: usize) -> VertexId {
        self.min_vertex[node]
    }

    /// Input vertices below `node`, sorted.
    pub fn members(&self, node: usize) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < self.n {
                out.push(x);
            } else {
                stack.extend(self.kids[x]);
            }
        }
        out.sort_unstable();
        out
    }
}

/// An edge of a layer graph between two local vertex indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerEdge {
    pub a: usize,
    pub b: usize,
    pub cost: f64,
    /// Input edge realising this (cheapest) connection.
    pub origin: usize,
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub index: usize,
    pub reach: f64,
    /// Global supervertex id of local vertex 0.
    pub first: usize,
    /// Merge-tree node of each local vertex, ordered by representative.
    pub nodes: Vec<usize>,
    pub edges: Vec<LayerEdge>,
    adjacency: Adjacency,
}

impl Layer {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn global(&self, local: usize) -> usize {
        self.first + local
    }

    pub fn globals(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.n()
    }
}

/// Parent/child structure over all supervertices of all layers.
#[derive(Debug, Clone)]
pub struct LaminarFamily {
    pub layer_of: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    child_offsets: Vec<usize>,
    child_list: Vec<usize>,
    pub representative: Vec<VertexId>,
    pub node: Vec<usize>,
    /// Leaf supervertex `{v}` for every input vertex `v`.
    pub leaf_of: Vec<usize>,
}

impl LaminarFamily {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn children(&self, w: usize) -> &[usize] {
        &self.child_list[self.child_offsets[w]..self.child_offsets[w + 1]]
    }

    pub fn is_leaf(&self, w: usize) -> bool {
        self.children(w).is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct LayerSequence {
    n: usize,
    pub layers: Vec<Layer>,
    pub family: LaminarFamily,
    /// Supervertex of layer 0 containing vertex 0.
    pub root: usize,
    tree: MergeTree,
}

impl LayerSequence {
    pub fn build(instance: &Instance) -> Self {
        build_layers(instance)
    }

    pub fn input_n(&self) -> usize {
        self.n
    }

    /// Index `L` of the last layer.
    pub fn last(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn supervertex_count(&self) -> usize {
        self.family.len()
    }

    pub fn layer_of(&self, w: usize) -> &Layer {
        &self.layers[self.family.layer_of[w]]
    }

    pub fn local(&self, w: usize) -> usize {
        w - self.layer_of(w).first
    }

    pub fn reach_of(&self, w: usize) -> f64 {
        self.layer_of(w).reach
    }

    /// Smallest input vertex id contained in `w`.
    pub fn representative(&self, w: usize) -> VertexId {
        self.family.representative[w]
    }

    /// The contraction set `V(w)`, sorted.
    pub fn members(&self, w: usize) -> Vec<VertexId> {
        self.tree.members(self.family.node[w])
    }

    pub fn merge_tree(&self) -> &MergeTree {
        &self.tree
    }
}

/// Builds the layer sequence with its parents, children and leaves.
pub fn build_layers(instance: &Instance) -> LayerSequence {
    let n = instance.n();
    let nf = n as f64;
    let edges = instance.edges();
    let by_cost = edges_by_cost(edges);
    let sorted_costs: Vec<f64> = by_cost.iter().map(|&i| edges[i].cost).collect();
    let tree = MergeTree::new(n, edges, &by_cost);

    let mut layers: Vec<Layer> = Vec::new();
    let mut reach = crate::graph::compute_delta0(instance);
    let mut first = 0;
    loop {
        let index = layers.len();
        let threshold = reach / nf;
        let lo = sorted_costs.partition_point(|&c| c <= threshold);
        let hi = sorted_costs.partition_point(|&c| c <= 2.0 * reach);
        let mut raw: Vec<LayerEdge> = Vec::new();
        for &idx in &by_cost[lo..hi.max(lo)] {
            let e = edges[idx];
            let a = tree.component_at(e.tail, threshold);
            let b = tree.component_at(e.head, threshold);
            if a != b {
                raw.push(LayerEdge {
                    a: a.min(b),
                    b: a.max(b),
                    cost: e.cost,
                    origin: idx,
                });
            }
        }
        raw.sort_by(|x, y| {
            (x.a, x.b)
                .cmp(&(y.a, y.b))
                .then(x.cost.total_cmp(&y.cost))
                .then(x.origin.cmp(&y.origin))
        });
        raw.dedup_by(|later, kept| later.a == kept.a && later.b == kept.b);

        let mut nodes: Vec<usize> = raw.iter().flat_map(|e| [e.a, e.b]).collect();
        if index == 0 && nodes.is_empty() {
            // everything contracted: keep the lone supervertex as the root
            nodes.push(tree.component_at(0, threshold));
        }
        nodes.sort_unstable_by_key(|&x| tree.min_vertex(x));
        nodes.dedup();
        let local_of = |x: usize| {
            nodes
                .binary_search_by_key(&tree.min_vertex(x), |&y| tree.min_vertex(y))
                .expect("edge endpoint is a layer vertex")
        };
        let layer_edges: Vec<LayerEdge> = raw
            .iter()
            .map(|e| LayerEdge {
                a: local_of(e.a),
                b: local_of(e.b),
                cost: e.cost,
                origin: e.origin,
            })
            .collect();
        let as_edges: Vec<Edge> = layer_edges
            .iter()
            .map(|e| Edge {
                tail: e.a,
                head: e.b,
                cost: e.cost,
            })
            .collect();
        let adjacency = Adjacency::new(nodes.len(), &as_edges);
        let has_edges = !layer_edges.is_empty();
        let count = nodes.len();
        layers.push(Layer {
            index,
            reach,
            first,
            nodes,
            edges: layer_edges,
            adjacency,
        });
        first += count;

        if has_edges {
            reach /= 2.0;
        } else if lo > 0 {
            // costliest contracted edge decides the next reach
            reach = sorted_costs[lo - 1] * nf / 2.0;
        } else {
            break;
        }
    }

    let total = first;
    let mut layer_of = Vec::with_capacity(total);
    let mut node = Vec::with_capacity(total);
    for layer in &layers {
        layer_of.extend(std::iter::repeat_n(layer.index, layer.n()));
        node.extend_from_slice(&layer.nodes);
    }
    let representative: Vec<VertexId> = node.iter().map(|&x| tree.min_vertex(x)).collect();

    // nearest labelled ancestor in the merge tree, with path compression;
    // nodes skipped over are never components of a later layer
    let tree_nodes = tree.parent.len();
    let mut label = vec![NONE; tree_nodes];
    let mut skip: Vec<usize> = tree.parent.clone();
    let mut parent = vec![None; total];
    let mut walk = Vec::new();
    for layer in &layers {
        if layer.index > 0 {
            for (local, &x) in layer.nodes.iter().enumerate() {
                let mut cur = x;
                walk.clear();
                while label[cur] == NONE {
                    walk.push(cur);
                    let next = skip[cur];
                    debug_assert_ne!(next, cur, "layer 0 covers every vertex");
                    cur = next;
                }
                for &w in &walk {
                    skip[w] = cur;
                }
                parent[layer.global(local)] = Some(label[cur]);
            }
        }
        for (local, &x) in layer.nodes.iter().enumerate() {
            label[x] = layer.global(local);
        }
    }

    let mut child_offsets = vec![0usize; total + 1];
    for p in parent.iter().flatten() {
        child_offsets[p + 1] += 1;
    }
    for w in 0..total {
        child_offsets[w + 1] += child_offsets[w];
    }
    let mut fill = child_offsets.clone();
    let mut child_list = vec![0; child_offsets[total]];
    for (w, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            child_list[fill[p]] = w;
            fill[p] += 1;
        }
    }
    let mut leaf_of = vec![NONE; n];
    for w in 0..total {
        if child_offsets[w] == child_offsets[w + 1] {
            leaf_of[representative[w]] = w;
        }
    }
    debug_assert!(leaf_of.iter().all(|&w| w != NONE));

    let root = layers[0]
        .nodes
        .iter()
        .position(|&x| tree.min_vertex(x) == 0)
        .expect("layer 0 covers vertex 0");

    LayerSequence {
        n,
        layers,
        family: LaminarFamily {
            layer_of,
            parent,
            child_offsets,
            child_list,
            representative,
            node,
            leaf_of,
        },
        root,
        tree,
    }
}
