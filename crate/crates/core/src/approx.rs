//! The linear cost approximator `P = C R A`.
//!
//! `A` maps input demands to aggregate demands of every supervertex and is
//! never stored. `D` spreads the demand of each layer vertex over its bundle,
//! `R` pairs that spread with the spread of the parent and `C` scales every
//! pair by the reach it was routed at.

use crate::error::OracleError;
use crate::graph::{Flow, Instance, VertexId};
use crate::layers::LayerSequence;
use crate::oracle::{level_count, OracleData};

/// `H_n = 1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|q| 1.0 / q as f64).sum()
}

/// `α = 180 H_n (log₂ n)²`.
pub fn alpha(n: usize) -> f64 {
    let lg = (n as f64).log2();
    180.0 * harmonic(n) * lg * lg
}

/// Column-compressed sparse matrix with `u32` row indices.
#[derive(Debug, Clone, Default, PartialEq)]
struct Columns {
    offsets: Vec<usize>,
    rows: Vec<u32>,
    values: Vec<f64>,
}

impl Columns {
    fn column(&self, c: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[c]..self.offsets[c + 1];
        (&self.rows[r.clone()], &self.values[r])
    }

    fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// Summary numbers for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxStats {
    pub supervertices: usize,
    pub nnz_d: usize,
    pub nnz_r: usize,
    pub nnz_c: usize,
    pub rows: usize,
    pub alpha: f64,
    pub max_bundle: usize,
    pub d_column_deviation: f64,
    pub r_column_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct Approximator {
    layers: LayerSequence,
    oracles: Vec<Option<OracleData>>,
    d: Columns,
    /// `R` stored by column (supervertex), rows index `row_keys`.
    r: Columns,
    row_keys: Vec<(u32, u32)>,
    c: Vec<f64>,
    alpha: f64,
}

impl Approximator {
    /// Builds layers, oracles and the three explicit matrices.
    pub fn build(instance: &Instance) -> Result<Self, OracleError> {
        Self::from_layers(LayerSequence::build(instance))
    }

    pub fn from_layers(layers: LayerSequence) -> Result<Self, OracleError> {
        let n = layers.input_n();
        let k = level_count(n);
        let oracles = layers
            .layers
            .iter()
            .map(|layer| {
                if layer.is_empty() {
                    Ok(None)
                } else {
                    OracleData::build(layer.adjacency(), k, n).map(Some)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_oracles(layers, oracles))
    }

    /// Uses caller-supplied oracles, one per layer (`None` for empty layers).
    pub fn from_oracles(layers: LayerSequence, oracles: Vec<Option<OracleData>>) -> Self {
        assert_eq!(oracles.len(), layers.layers.len());
        assert!(
            layers.supervertex_count() < u32::MAX as usize,
            "supervertex ids must fit in 32 bits"
        );
        let d = build_d(&layers, &oracles);
        let (r, row_keys) = build_r(&layers, &d);
        let c = build_c(&layers, &row_keys);
        let alpha = alpha(layers.input_n());
        Approximator {
            layers,
            oracles,
            d,
            r,
            row_keys,
            c,
            alpha,
        }
    }

    pub fn layers(&self) -> &LayerSequence {
        &self.layers
    }

    pub fn oracle(&self, layer: usize) -> Option<&OracleData> {
        self.oracles[layer].as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.layers.input_n()
    }

    /// Number of rows of `P`.
    pub fn rows(&self) -> usize {
        self.row_keys.len()
    }

    /// Nonzeros `(w, D(w,v))` of column `v`, `w` ascending.
    pub fn d_column(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (rows, vals) = self.d.column(v);
        rows.iter().zip(vals).map(|(&w, &x)| (w as usize, x))
    }

    /// Nonzeros `(row, R(row,v))` of column `v`.
    pub fn r_column(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (rows, vals) = self.r.column(v);
        rows.iter().zip(vals).map(|(&r, &x)| (r as usize, x))
    }

    /// The pair `(w, w')` naming a row.
    pub fn row_key(&self, row: usize) -> (usize, usize) {
        let (w, wp) = self.row_keys[row];
        (w as usize, wp as usize)
    }

    /// Diagonal of `C`.
    pub fn c_diagonal(&self) -> &[f64] {
        &self.c
    }

    /// `(A b)(w) = Σ_{v ∈ V(w)} b(v)`, children before parents.
    pub fn apply_a(&self, b: &[f64]) -> Vec<f64> {
        let fam = &self.layers.family;
        assert_eq!(b.len(), self.n());
        let mut x = vec![0.0; fam.len()];
        for (v, &leaf) in fam.leaf_of.iter().enumerate() {
            x[leaf] = b[v];
        }
        for w in (0..fam.len()).rev() {
            if let Some(p) = fam.parent[w] {
                x[p] += x[w];
            }
        }
        x
    }

    /// `(Aᵀ y)(v) = Σ_{w ∋ v} y(w)`, parents before children.
    pub fn apply_a_transpose(&self, y: &[f64]) -> Vec<f64> {
        let fam = &self.layers.family;
        assert_eq!(y.len(), fam.len());
        let mut z = y.to_vec();
        for w in 0..fam.len() {
            if let Some(p) = fam.parent[w] {
                z[w] += z[p];
            }
        }
        fam.leaf_of.iter().map(|&leaf| z[leaf]).collect()
    }

    /// `R x` for a vector over supervertices.
    pub fn apply_r(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows()];
        for (v, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let (rows, vals) = self.r.column(v);
            for (&r, &val) in rows.iter().zip(vals) {
                y[r as usize] += val * xv;
            }
        }
        y
    }

    /// `Rᵀ y`.
    pub fn apply_r_transpose(&self, y: &[f64]) -> Vec<f64> {
        (0..self.layers.supervertex_count())
            .map(|v| {
                let (rows, vals) = self.r.column(v);
                rows.iter().zip(vals).map(|(&r, &val)| val * y[r as usize]).sum()
            })
            .collect()
    }

    pub fn apply_p(&self, b: &[f64]) -> Vec<f64> {
        let mut y = self.apply_r(&self.apply_a(b));
        for (yi, ci) in y.iter_mut().zip(&self.c) {
            *yi *= ci;
        }
        y
    }

    pub fn apply_p_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows());
        let scaled: Vec<f64> = y.iter().zip(&self.c).map(|(a, c)| a * c).collect();
        self.apply_a_transpose(&self.apply_r_transpose(&scaled))
    }

    /// Nonzeros of `P (e_u - e_v)`, rows ascending. Only supervertices that
    /// contain exactly one of `u`, `v` contribute.
    pub fn pair_column(&self, u: VertexId, v: VertexId) -> Vec<(usize, f64)> {
        let fam = &self.layers.family;
        let mut signed: Vec<(usize, f64)> = Vec::new();
        let (mut a, mut b) = (Some(fam.leaf_of[u]), Some(fam.leaf_of[v]));
        loop {
            match (a, b) {
                (Some(x), Some(y)) if x == y => break,
                (Some(x), Some(y)) => {
                    if fam.layer_of[x] >= fam.layer_of[y] {
                        signed.push((x, 1.0));
                        a = fam.parent[x];
                    } else {
                        signed.push((y, -1.0));
                        b = fam.parent[y];
                    }
                }
                (Some(x), None) => {
                    signed.push((x, 1.0));
                    a = fam.parent[x];
                }
                (None, Some(y)) => {
                    signed.push((y, -1.0));
                    b = fam.parent[y];
                }
                (None, None) => break,
            }
        }
        let mut out: Vec<(usize, f64)> = Vec::new();
        for (w, s) in signed {
            out.extend(self.r_column(w).map(|(r, x)| (r, s * x)));
        }
        out.sort_by_key(|&(r, _)| r);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
        for (r, x) in out {
            match merged.last_mut() {
                Some(last) if last.0 == r => last.1 += x,
                _ => merged.push((r, x)),
            }
        }
        merged.retain(|&(_, x)| x != 0.0);
        for (r, x) in &mut merged {
            *x *= self.c[*r];
        }
        merged
    }

    /// `||P b||₁`.
    pub fn norm(&self, b: &[f64]) -> f64 {
        self.apply_p(b).iter().map(|x| x.abs()).sum()
    }

    /// Flow sending, for every row `(w, w')`, the amount `(R A b)(w,w')` from
    /// `r(w)` to `r(w')` along the canonical shortest path. Routes `b`
    /// whenever `b` is proper, at cost at most `||P b||₁`.
    pub fn flow_from_p(&self, instance: &Instance, b: &[f64]) -> Flow {
        let amounts = self.apply_r(&self.apply_a(b));
        // group by the smaller representative: demand injected per source
        let mut by_source: Vec<(VertexId, VertexId, f64)> = Vec::new();
        for (row, &u) in amounts.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            let (w, wp) = self.row_key(row);
            let (from, to) = (self.layers.representative(w), self.layers.representative(wp));
            if from == to {
                continue;
            }
            if from < to {
                by_source.push((from, to, u));
            } else {
                by_source.push((to, from, -u));
            }
        }
        by_source.sort_by_key(|&(s, t, _)| (s, t));

        let adj = instance.adjacency();
        let edges = instance.edges();
        let n = instance.n();
        let mut flow = Flow::zero(instance.m());
        let mut excess = vec![0.0; n];
        let mut i = 0;
        while i < by_source.len() {
            let source = by_source[i].0;
            let mut j = i;
            while j < by_source.len() && by_source[j].0 == source {
                // positive amount travels source -> target
                let (_, t, u) = by_source[j];
                excess[source] += u;
                excess[t] -= u;
                j += 1;
            }
            let tree = crate::graph::dijkstra(adj, source);
            for &x in tree.order.iter().rev() {
                if let Some((p, e)) = tree.parent[x] {
                    // net supply of x's subtree leaves through the edge to p
                    let out = excess[x];
                    if out != 0.0 {
                        if edges[e].tail == x {
                            flow.values[e] += out;
                        } else {
                            flow.values[e] -= out;
                        }
                    }
                    excess[p] += excess[x];
                }
                excess[x] = 0.0;
            }
            excess[source] = 0.0;
            i = j;
        }
        flow
    }

    pub fn stats(&self) -> ApproxStats {
        let total = self.layers.supervertex_count();
        let mut d_dev: f64 = 0.0;
        let mut r_dev: f64 = 0.0;
        for v in 0..total {
            let ds: f64 = self.d_column(v).map(|(_, x)| x).sum();
            let rs: f64 = self.r_column(v).map(|(_, x)| x).sum();
            d_dev = d_dev.max((ds - 1.0).abs());
            r_dev = r_dev.max((rs - 1.0).abs());
        }
        ApproxStats {
            supervertices: total,
            nnz_d: self.d.nnz(),
            nnz_r: self.r.nnz(),
            nnz_c: self.c.iter().filter(|&&x| x != 0.0).count(),
            rows: self.rows(),
            alpha: self.alpha,
            max_bundle: self
                .oracles
                .iter()
                .flatten()
                .map(OracleData::max_bundle_size)
                .max()
                .unwrap_or(0),
            d_column_deviation: d_dev,
            r_column_deviation: r_dev,
        }
    }
}

/// Distribution weights of one layer vertex from its bundle.
///
/// Level `j` takes the members of `B^j(v)` within
/// `λ = min(δ(v, S^{j+1}), reach)` and hands them the share of a process that
/// grows a radius from 0 to `λ`, splitting mass evenly among the members
/// already reached.
pub fn distribution(oracle: &OracleData, v: usize, reach: f64) -> Vec<(usize, f64)> {
    let k = oracle.k();
    let mut out = Vec::new();
    let mut next = f64::INFINITY;
    let mut caps = vec![0.0; k];
    for j in (0..k).rev() {
        caps[j] = next.min(reach);
        if let Some(&(_, d)) = oracle.piece(v, j).first() {
            next = next.min(d);
        }
    }
    for (j, &lambda) in caps.iter().enumerate() {
        let piece = oracle.piece(v, j);
        let r = piece.partition_point(|&(_, d)| d <= lambda);
        if r == 0 {
            continue;
        }
        let mut acc = (lambda - piece[r - 1].1) / (r as f64 * reach);
        let start = out.len();
        out.push((piece[r - 1].0, acc));
        for l in (1..r).rev() {
            acc += (piece[l].1 - piece[l - 1].1) / (l as f64 * reach);
            out.push((piece[l - 1].0, acc));
        }
        out[start..].reverse();
    }
    out.retain(|&(_, x)| x != 0.0);
    out.sort_by_key(|&(w, _)| w);
    out
}

fn build_d(layers: &LayerSequence, oracles: &[Option<OracleData>]) -> Columns {
    let mut d = Columns {
        offsets: vec![0],
        ..Columns::default()
    };
    for (layer, oracle) in layers.layers.iter().zip(oracles) {
        let Some(oracle) = oracle else { continue };
        for v in 0..layer.n() {
            for (w, x) in distribution(oracle, v, layer.reach) {
                d.rows.push(layer.global(w) as u32);
                d.values.push(x);
            }
            d.offsets.push(d.rows.len());
        }
    }
    debug_assert_eq!(d.offsets.len(), layers.supervertex_count() + 1);
    d
}

/// Rows are the pairs `(w, w')` in lexicographic order; a root row pairs a
/// layer-0 bundle member with the root.
fn build_r(layers: &LayerSequence, d: &Columns) -> (Columns, Vec<(u32, u32)>) {
    let total = layers.supervertex_count();
    let root = layers.root as u32;
    let mut keys: Vec<(u32, u32)> = Vec::new();
    // (row key, column, value) for one layer at a time
    let mut layer_entries: Vec<((u32, u32), u32, f64)> = Vec::new();
    let mut triples: Vec<(u32, u32, f64)> = Vec::new();
    for layer in &layers.layers {
        layer_entries.clear();
        for v in layer.globals() {
            let (rows, vals) = d.column(v);
            match layers.family.parent[v] {
                None => {
                    for (&w, &x) in rows.iter().zip(vals) {
                        layer_entries.push(((w, root), v as u32, x));
                    }
                }
                Some(p) => {
                    let (prow, pval) = d.column(p);
                    for (&w, &x) in rows.iter().zip(vals) {
                        for (&wp, &y) in prow.iter().zip(pval) {
                            let xy = x * y;
                            if xy != 0.0 {
                                layer_entries.push(((w, wp), v as u32, xy));
                            }
                        }
                    }
                }
            }
        }
        layer_entries.sort_unstable_by_key(|&(key, v, _)| (key, v));
        for &(key, v, x) in &layer_entries {
            if keys.last() != Some(&key) {
                keys.push(key);
            }
            triples.push((v, (keys.len() - 1) as u32, x));
        }
    }
    assert!(keys.len() < u32::MAX as usize, "row count must fit in 32 bits");
    // rows were assigned in sorted order, so a stable column sort keeps rows ascending
    let mut offsets = vec![0usize; total + 1];
    for &(v, _, _) in &triples {
        offsets[v as usize + 1] += 1;
    }
    for i in 0..total {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut rows = vec![0u32; triples.len()];
    let mut values = vec![0.0; triples.len()];
    for (v, r, x) in triples {
        let slot = &mut fill[v as usize];
        rows[*slot] = r;
        values[*slot] = x;
        *slot += 1;
    }
    (
        Columns {
            offsets,
            rows,
            values,
        },
        keys,
    )
}

/// `3Δ_{i'}` when the parent layer sits exactly one scale up, `2Δ_i`
/// otherwise; root rows use `2Δ_0`.
fn build_c(layers: &LayerSequence, keys: &[(u32, u32)]) -> Vec<f64> {
    keys.iter()
        .map(|&(w, wp)| {
            let reach = layers.reach_of(w as usize);
            let i = layers.family.layer_of[w as usize];
            if i == 0 {
                return 2.0 * reach;
            }
            let parent_reach = layers.reach_of(wp as usize);
            if parent_reach == 2.0 * reach {
                3.0 * parent_reach
            } else {
                2.0 * reach
            }
        })
        .collect()
}
