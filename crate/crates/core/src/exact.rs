//! Exact transshipment for small instances, used as ground truth.
//!
//! Successive shortest paths from a super source over the supply vertices to a
//! super sink behind the deficit vertices, with Johnson potentials keeping
//! reduced costs nonnegative. Edges are uncapacitated in both directions, so a
//! residual arc either pushes at cost `c(e)` or cancels existing opposite flow
//! at cost `-c(e)`.

use std::collections::BinaryHeap;

use crate::approx::Approximator;
use crate::error::ExactError;
use crate::graph::{flow_cost, Flow, HeapKey, Instance};

pub const DEFAULT_LIMIT: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub opt_value: f64,
    pub flow: Flow,
}

/// `OPT(b)` for instances with at most [`DEFAULT_LIMIT`] vertices.
pub fn exact_opt(instance: &Instance) -> Result<OracleSolution, ExactError> {
    exact_opt_with_limit(instance, instance.demands(), DEFAULT_LIMIT)
}

/// `OPT(b)` for arbitrary demands on the instance graph.
pub fn exact_opt_for(instance: &Instance, demands: &[f64]) -> Result<OracleSolution, ExactError> {
    exact_opt_with_limit(instance, demands, DEFAULT_LIMIT)
}

pub fn exact_opt_with_limit(instance: &Instance, demands: &[f64], limit: usize) -> Result<OracleSolution, ExactError> {
    let n = instance.n();
    if n > limit {
        return Err(ExactError::TooLarge { n, limit });
    }
    let edges = instance.edges();
    let adj = instance.adjacency();
    let scale: f64 = demands.iter().map(|x| x.abs()).sum();
    let floor = 1e-15 * scale;
    let mut supply: Vec<f64> = demands.iter().map(|&x| x.max(0.0)).collect();
    let mut deficit: Vec<f64> = demands.iter().map(|&x| (-x).max(0.0)).collect();
    let mut x = vec![0.0f64; edges.len()];
    let mut potential = vec![0.0; n];

    loop {
        let left: f64 = supply.iter().sum();
        let need: f64 = deficit.iter().sum();
        if left <= floor || need <= floor {
            break;
        }
        // Dijkstra from a super source joined to every vertex with supply left;
        // the source keeps potential 0, so its arcs start at -potential[v]
        let mut dist = vec![f64::INFINITY; n];
        let mut via: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for v in 0..n {
            if supply[v] > floor {
                dist[v] = -potential[v];
                heap.push(HeapKey { dist: dist[v], tie: v, vertex: v });
            }
        }
        let mut sink = None;
        while let Some(HeapKey { dist: d, vertex: v, .. }) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            if deficit[v] > floor {
                sink = Some(v);
                break;
            }
            for &(w, c, e) in adj.neighbors(v) {
                // moving v -> w either cancels opposite flow or pushes more
                let forward = edges[e].tail == v;
                let opposite = if forward { x[e] < 0.0 } else { x[e] > 0.0 };
                let cost = if opposite { -c } else { c };
                let reduced = (cost + potential[v] - potential[w]).max(0.0);
                if d + reduced < dist[w] {
                    dist[w] = d + reduced;
                    via[w] = Some((v, e));
                    heap.push(HeapKey { dist: d + reduced, tie: w, vertex: w });
                }
            }
        }
        let sink = sink.expect("connected graph reaches a deficit vertex");
        let reach = dist[sink];
        for v in 0..n {
            potential[v] += dist[v].min(reach);
        }
        // bottleneck along the path
        let mut amount = deficit[sink];
        let mut v = sink;
        while let Some((u, e)) = via[v] {
            let forward = edges[e].tail == u;
            let opposite = if forward { x[e] < 0.0 } else { x[e] > 0.0 };
            if opposite {
                amount = amount.min(x[e].abs());
            }
            v = u;
        }
        let source = v;
        amount = amount.min(supply[source]);
        let mut v = sink;
        while let Some((u, e)) = via[v] {
            let forward = edges[e].tail == u;
            x[e] += if forward { amount } else { -amount };
            v = u;
        }
        supply[source] -= amount;
        deficit[sink] -= amount;
        if supply[source] <= floor {
            supply[source] = 0.0;
        }
        if deficit[sink] <= floor {
            deficit[sink] = 0.0;
        }
    }
    let flow = Flow { values: x };
    Ok(OracleSolution {
        opt_value: flow_cost(&flow, edges),
        flow,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub alpha: f64,
    pub checked: usize,
    pub skipped: usize,
    pub pass: bool,
}

/// Checks `OPT(b) ≤ ||P b||₁ ≤ α OPT(b)` on every demand vector with
/// `OPT(b) > 0`. The lower side allows relative rounding of `1e-9`.
pub fn verify_sandwich(instance: &Instance, ap: &Approximator, batch: &[Vec<f64>]) -> Result<SandwichReport, ExactError> {
    let mut report = SandwichReport {
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        alpha: ap.alpha(),
        checked: 0,
        skipped: 0,
        pass: true,
    };
    for b in batch {
        let opt = exact_opt_for(instance, b)?.opt_value;
        if opt <= 0.0 {
            report.skipped += 1;
            continue;
        }
        let ratio = ap.norm(b) / opt;
        report.checked += 1;
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
        if ratio < 1.0 - 1e-9 || ratio > report.alpha {
            report.pass = false;
        }
    }
    Ok(report)
}
