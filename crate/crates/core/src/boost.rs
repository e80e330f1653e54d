//! Boosting the cost approximator to a `(1+ε)`-approximate flow.
//!
//! Each round minimizes the penalized objective
//! `G(g) = c(g) + κ ||P (r - I g)||₁` with a diagonally preconditioned
//! primal-dual method. Since `OPT(r) ≤ c(g) + ||P(r - I g)||₁` for every `g`
//! and `G(f*) = OPT(r)`, the minimum of `G` is exactly `OPT(r)` for any
//! `κ ≥ 1`. Dual iterates `y` give potentials `Pᵀ y`; pushing them to the
//! nearest 1-Lipschitz potential with one Dijkstra pass yields a lower bound on
//! `OPT(r)`, and a round stops once the primal value is within the requested
//! factor of that bound. Rounds repeat on the residual until `||P r||₁` meets
//! the target, then the remainder is routed exactly.

use std::collections::BinaryHeap;
use std::time::Instant;

use log::{debug, info};

use crate::approx::Approximator;
use crate::error::SolveError;
use crate::graph::{divergence, flow_cost, mst_route, residual, Adjacency, Edge, Flow, HeapKey, Instance};

/// How the final residual is routed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualRouter {
    /// Along a minimum spanning tree.
    Mst,
    /// With the flow realized from the approximator.
    Approximator,
}

impl std::str::FromStr for ResidualRouter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mst" => Ok(ResidualRouter::Mst),
            "approximator" => Ok(ResidualRouter::Approximator),
            other => Err(format!("unknown residual router `{other}`")),
        }
    }
}

impl std::fmt::Display for ResidualRouter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ResidualRouter::Mst => "mst",
            ResidualRouter::Approximator => "approximator",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub eps: f64,
    /// Cap on residual rounds.
    pub max_outer_iters: usize,
    /// Cap on primal-dual iterations within one round.
    pub max_inner_iters: usize,
    /// Residual target as a multiple of `||P b||₁ / α`; `None` means `1/n²`.
    pub residual_target_factor: Option<f64>,
    pub residual_router: ResidualRouter,
    /// Penalty `κ > 1` on `||P r||₁` inside a round.
    pub penalty: f64,
    /// Iterations between certificate evaluations.
    pub check_every: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            eps: 0.1,
            max_outer_iters: 60,
            max_inner_iters: 100_000,
            residual_target_factor: None,
            residual_router: ResidualRouter::Mst,
            penalty: 2.0,
            check_every: 40,
        }
    }
}

impl SolveConfig {
    pub fn with_eps(eps: f64) -> Self {
        SolveConfig {
            eps,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidConfig(msg.to_string()));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 || self.check_every == 0 {
            return bad("iteration caps must be positive");
        }
        if !(self.penalty > 1.0 && self.penalty.is_finite()) {
            return bad("penalty must exceed 1");
        }
        if let Some(f) = self.residual_target_factor {
            if !(f > 0.0 && f.is_finite()) {
                return bad("residual target factor must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub flow: Flow,
    pub cost: f64,
    /// `||P b||₁`.
    pub approx_cost_bound: f64,
    /// `cost · α / ||P b||₁`, an upper bound on `cost / OPT`.
    pub certified_ratio: f64,
    /// Best dual lower bound on `OPT(b)`.
    pub lower_bound: f64,
    /// `cost / lower_bound`, also an upper bound on `cost / OPT`.
    pub dual_ratio: f64,
    /// Residual rounds performed.
    pub rounds: usize,
    /// Primal-dual iterations over all rounds.
    pub iterations: usize,
    /// `||P r||₁` of the residual handed to the router.
    pub residual_norm: f64,
    /// Residual target that was met (or missed).
    pub residual_target: f64,
    pub wall_time: f64,
}

/// Result of [`boost`]: a flow, the residual it leaves and the bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Boosted {
    pub flow: Flow,
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    pub target: f64,
    pub lower_bound: f64,
    pub rounds: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Full pipeline: approximator, boosting rounds, residual routing.
pub fn solve(instance: &Instance, config: &SolveConfig) -> Result<SolveReport, SolveError> {
    config.validate()?;
    let ap = Approximator::build(instance).expect("validated instances have a nonempty layer 0");
    solve_with(instance, &ap, config)
}

/// [`solve`] with a prebuilt approximator.
pub fn solve_with(instance: &Instance, ap: &Approximator, config: &SolveConfig) -> Result<SolveReport, SolveError> {
    config.validate()?;
    let start = Instant::now();
    let b = instance.demands();
    let norm_b = ap.norm(b);
    let boosted = boost(instance, ap, b, config)?;
    let mut flow = boosted.flow.clone();
    flow.add_assign(&route_residual(instance, ap, &boosted.residual, config));
    let cost = flow_cost(&flow, instance.edges());
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else if num == 0.0 { 1.0 } else { f64::INFINITY };
    let report = SolveReport {
        cost,
        approx_cost_bound: norm_b,
        certified_ratio: ratio(cost * ap.alpha(), norm_b),
        lower_bound: boosted.lower_bound,
        dual_ratio: ratio(cost, boosted.lower_bound),
        rounds: boosted.rounds,
        iterations: boosted.iterations,
        residual_norm: boosted.residual_norm,
        residual_target: boosted.target,
        wall_time: start.elapsed().as_secs_f64(),
        flow,
    };
    info!(
        "solve: cost {:e}, lower bound {:e}, rounds {}, iterations {}",
        report.cost, report.lower_bound, report.rounds, report.iterations
    );
    if boosted.converged {
        Ok(report)
    } else {
        Err(SolveError::NotConverged {
            iterations: boosted.iterations,
            residual_norm: boosted.residual_norm,
            target: boosted.target,
            partial: Box::new(report),
        })
    }
}

/// Routes a proper residual exactly with the configured router.
pub fn route_residual(instance: &Instance, ap: &Approximator, residual: &[f64], config: &SolveConfig) -> Flow {
    if residual.iter().all(|&x| x == 0.0) {
        return Flow::zero(instance.m());
    }
    match config.residual_router {
        ResidualRouter::Mst => mst_route(instance, residual),
        ResidualRouter::Approximator => ap.flow_from_p(instance, residual),
    }
}

/// Residual rounds until `||P r||₁ ≤ target`.
///
/// The first round is solved to within `1 + ε/2` of its lower bound, which
/// also bounds `OPT(b)`. With `κ ≥ 1 + δ` the cost of every later round is
/// paid for by the penalty the previous round left on its residual, so the
/// flow returned costs at most `(1 + ε/2) OPT(b)`. The routing budget for
/// the leftover residual is kept below `ε/4 · OPT(b)` for the tree router.
pub fn boost(instance: &Instance, ap: &Approximator, b: &[f64], config: &SolveConfig) -> Result<Boosted, SolveError> {
    config.validate()?;
    let n = instance.n();
    let m = instance.m();
    let norm_b = ap.norm(b);
    let factor = config.residual_target_factor.unwrap_or(1.0 / (n as f64 * n as f64));
    let mut target = factor * norm_b / ap.alpha();
    let mut out = Boosted {
        flow: Flow::zero(m),
        residual: b.to_vec(),
        residual_norm: norm_b,
        target,
        lower_bound: 0.0,
        rounds: 0,
        iterations: 0,
        converged: true,
    };
    if norm_b == 0.0 {
        return Ok(out);
    }
    let op = Operator::new(instance, ap);
    let later_delta = (config.penalty - 1.0).min(0.5);
    while out.residual_norm > target {
        if out.rounds == config.max_outer_iters {
            out.converged = false;
            break;
        }
        let delta = if out.rounds == 0 { config.eps / 2.0 } else { later_delta };
        let round = op.round(&out.residual, config.penalty, delta, config);
        out.iterations += round.iterations;
        if out.rounds == 0 {
            out.lower_bound = round.lower_bound;
            if config.residual_router == ResidualRouter::Mst {
                // leftover routed along a tree costs at most n · ||P r||₁
                target = target.min(config.eps * round.lower_bound / (4.0 * n as f64));
                out.target = target;
            }
        }
        out.rounds += 1;
        let next = residual(&out.residual, instance.edges(), &round.flow);
        let next_norm = ap.norm(&next);
        debug!(
            "round {}: {} iterations, gap {:.3e}, ||P r|| {:.3e} -> {:.3e}",
            out.rounds, round.iterations, round.gap, out.residual_norm, next_norm
        );
        if next_norm >= out.residual_norm {
            // a stalled round may not undo progress
            out.converged = false;
            break;
        }
        out.flow.add_assign(&round.flow);
        out.residual = next;
        out.residual_norm = next_norm;
        if !round.converged {
            out.converged = false;
            break;
        }
    }
    if out.residual_norm <= target {
        out.converged = true;
    }
    Ok(out)
}

struct Round {
    flow: Flow,
    lower_bound: f64,
    gap: f64,
    iterations: usize,
    converged: bool,
}

/// `K = P I` restricted to the edges, applied implicitly through `P`.
struct Operator<'a> {
    ap: &'a Approximator,
    edges: &'a [Edge],
    adj: &'a Adjacency,
    costs: Vec<f64>,
    n: usize,
    /// `1 / Σ_r |K(r,e)|` per edge.
    col_scale: Vec<f64>,
    /// `1 / Σ_e |K(r,e)|` per row, 0 for rows `K` never reaches.
    row_scale: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(instance: &'a Instance, ap: &'a Approximator) -> Self {
        let edges = instance.edges();
        let mut row_sum = vec![0.0; ap.rows()];
        let mut col_scale = Vec::with_capacity(edges.len());
        for e in edges {
            let col = ap.pair_column(e.tail, e.head);
            let mut s = 0.0;
            for &(r, x) in &col {
                row_sum[r] += x.abs();
                s += x.abs();
            }
            col_scale.push(if s > 0.0 { 1.0 / s } else { 0.0 });
        }
        let row_scale = row_sum.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 }).collect();
        Operator {
            ap,
            edges,
            adj: instance.adjacency(),
            costs: edges.iter().map(|e| e.cost).collect(),
            n: instance.n(),
            col_scale,
            row_scale,
        }
    }

    fn k(&self, g: &[f64]) -> Vec<f64> {
        let div = divergence(self.n, self.edges, &Flow { values: g.to_vec() });
        self.ap.apply_p(&div)
    }

    fn kt(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let phi = self.ap.apply_p_transpose(y);
        let per_edge = self.edges.iter().map(|e| phi[e.tail] - phi[e.head]).collect();
        (per_edge, phi)
    }

    fn objective(&self, g: &[f64], kg: &[f64], pb: &[f64], kappa: f64) -> f64 {
        let c: f64 = g.iter().zip(&self.costs).map(|(x, c)| x.abs() * c).sum();
        let pen: f64 = pb.iter().zip(kg).map(|(a, b)| (a - b).abs()).sum();
        c + kappa * pen
    }

    fn lower_bound(&self, y: &[f64], b: &[f64]) -> f64 {
        let (_, phi) = self.kt(y);
        lipschitz_lower_bound(self.adj, &phi, b)
    }

    /// One penalized round on demands `r`, preconditioned primal-dual with
    /// restarts to the running average whenever the certified gap halves.
    fn round(&self, r: &[f64], kappa: f64, delta: f64, config: &SolveConfig) -> Round {
        let m = self.edges.len();
        let rows = self.ap.rows();
        let scale: f64 = r.iter().map(|x| x.abs()).sum();
        let b: Vec<f64> = r.iter().map(|x| x / scale).collect();
        let pb = self.ap.apply_p(&b);

        let mut g = vec![0.0; m];
        let mut y = vec![0.0; rows];
        let mut kg = vec![0.0; rows];
        let mut best_g = g.clone();
        let mut best_obj = self.objective(&g, &kg, &pb, kappa);
        let mut best_lb = self.lower_bound(&y, &b).max(0.0);
        let mut weight = 1.0;
        let mut avg_g = vec![0.0; m];
        let mut avg_y = vec![0.0; rows];
        let mut avg_count = 0usize;
        let mut restart_gap = best_obj - best_lb;
        let mut anchor_g = g.clone();
        let mut anchor_y = y.clone();
        let mut iterations = 0;

        let done = |obj: f64, lb: f64| lb > 0.0 && obj <= (1.0 + delta) * lb;
        while iterations < config.max_inner_iters && !done(best_obj, best_lb) {
            let (kty, _) = self.kt(&y);
            let g_next: Vec<f64> = (0..m)
                .map(|e| {
                    let tau = self.col_scale[e] / weight;
                    shrink(g[e] + tau * kty[e], tau * self.costs[e])
                })
                .collect();
            let kg_next = self.k(&g_next);
            for i in 0..rows {
                let sigma = self.row_scale[i] * weight;
                let step = pb[i] - (2.0 * kg_next[i] - kg[i]);
                y[i] = (y[i] + sigma * step).clamp(-kappa, kappa);
            }
            g = g_next;
            kg = kg_next;
            iterations += 1;

            let obj = self.objective(&g, &kg, &pb, kappa);
            if obj < best_obj {
                best_obj = obj;
                best_g.clone_from(&g);
            }
            avg_count += 1;
            let w = 1.0 / avg_count as f64;
            for (a, x) in avg_g.iter_mut().zip(&g) {
                *a += (x - *a) * w;
            }
            for (a, x) in avg_y.iter_mut().zip(&y) {
                *a += (x - *a) * w;
            }

            if iterations % config.check_every == 0 {
                let lb_cur = self.lower_bound(&y, &b);
                let kg_avg = self.k(&avg_g);
                let obj_avg = self.objective(&avg_g, &kg_avg, &pb, kappa);
                let lb_avg = self.lower_bound(&avg_y, &b);
                if obj_avg < best_obj {
                    best_obj = obj_avg;
                    best_g.clone_from(&avg_g);
                }
                best_lb = best_lb.max(lb_cur).max(lb_avg);
                let gap_cur = obj - lb_cur;
                let gap_avg = obj_avg - lb_avg;
                let (cand_gap, use_avg) = if gap_avg < gap_cur { (gap_avg, true) } else { (gap_cur, false) };
                if cand_gap <= 0.5 * restart_gap {
                    if use_avg {
                        g.clone_from(&avg_g);
                        y.clone_from(&avg_y);
                        kg = kg_avg;
                    }
                    // rebalance primal and dual step sizes by their movement
                    let dx = norm2_diff(&g, &anchor_g);
                    let dy = norm2_diff(&y, &anchor_y);
                    if dx > 1e-12 && dy > 1e-12 {
                        weight = (0.5 * (dy / dx).ln() + 0.5 * weight.ln()).exp();
                    }
                    anchor_g.clone_from(&g);
                    anchor_y.clone_from(&y);
                    restart_gap = cand_gap;
                    avg_g.iter_mut().for_each(|x| *x = 0.0);
                    avg_y.iter_mut().for_each(|x| *x = 0.0);
                    avg_count = 0;
                }
            }
        }
        let converged = done(best_obj, best_lb);
        best_g.iter_mut().for_each(|x| *x *= scale);
        Round {
            flow: Flow { values: best_g },
            lower_bound: best_lb * scale,
            gap: if best_lb > 0.0 { best_obj / best_lb - 1.0 } else { f64::INFINITY },
            iterations,
            converged,
        }
    }
}

#[inline]
fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn norm2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest 1-Lipschitz potential below `phi`: `min_u phi(u) + δ(u, v)`.
pub fn lower_envelope(adj: &Adjacency, phi: &[f64]) -> Vec<f64> {
    let n = adj.len();
    let base = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let mut dist: Vec<f64> = phi.iter().map(|p| p - base).collect();
    let mut done = vec![false; n];
    let mut heap: BinaryHeap<HeapKey> = (0..n)
        .map(|v| HeapKey {
            dist: dist[v],
            tie: v,
            vertex: v,
        })
        .collect();
    while let Some(HeapKey { dist: d, vertex: v, .. }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &(w, c, _) in adj.neighbors(v) {
            if d + c < dist[w] {
                dist[w] = d + c;
                heap.push(HeapKey {
                    dist: d + c,
                    tie: w,
                    vertex: w,
                });
            }
        }
    }
    dist.iter().map(|d| d + base).collect()
}

/// Lower bound on `OPT(b)` from an arbitrary potential: the better of its
/// lower and upper 1-Lipschitz envelopes, paired with `b`.
pub fn lipschitz_lower_bound(adj: &Adjacency, phi: &[f64], b: &[f64]) -> f64 {
    let dot = |p: &[f64]| p.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let low = lower_envelope(adj, phi);
    let neg: Vec<f64> = phi.iter().map(|x| -x).collect();
    let high: Vec<f64> = lower_envelope(adj, &neg).iter().map(|x| -x).collect();
    dot(&low).max(dot(&high))
}
