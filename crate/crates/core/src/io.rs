//! Text formats for instances, flows, reports and diagnostic dumps.
//!
//! Instance files:
//!
//! ```text
//! c comment
//! p tship <n> <m>
//! e <u> <v> <cost>
//! d <v> <demand>
//! ```
//!
//! Vertex ids are 1-based, missing demands are 0. Flow files hold one line
//! `f <u> <v> <value>` per edge (value units from `u` to `v`) and a trailer
//! `s cost <value>`. Reals are written with 17 significant digits so every
//! double survives a round trip.

use std::fmt::Write;

use crate::approx::{ApproxStats, Approximator};
use crate::boost::SolveReport;
use crate::error::ParseError;
use crate::graph::{Edge, Flow, Instance};
use crate::layers::LayerSequence;

/// Lossless decimal rendering of a double.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tokens: &[&str], i: usize, line: usize, what: &str) -> Result<T, ParseError> {
    let tok = tokens
        .get(i)
        .ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

fn vertex(tokens: &[&str], i: usize, line: usize, n: usize) -> Result<usize, ParseError> {
    let v: usize = field(tokens, i, line, "vertex id")?;
    if v == 0 || v > n {
        return Err(syntax(line, format!("vertex {v} outside 1..={n}")));
    }
    Ok(v - 1)
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges: Vec<Edge> = Vec::new();
    let mut demands: Vec<Option<f64>> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(&kind) = tokens.first() else { continue };
        match kind {
            "c" => continue,
            "p" => {
                if header.is_some() {
                    return Err(syntax(line, "second header"));
                }
                if tokens.get(1) != Some(&"tship") {
                    return Err(syntax(line, "header must read `p tship <n> <m>`"));
                }
                let n = field(&tokens, 2, line, "vertex count")?;
                let m = field(&tokens, 3, line, "edge count")?;
                header = Some((n, m));
                demands = vec![None; n];
            }
            "e" | "d" => {
                let (n, _) = header.ok_or_else(|| syntax(line, "line before header"))?;
                if kind == "e" {
                    let u = vertex(&tokens, 1, line, n)?;
                    let v = vertex(&tokens, 2, line, n)?;
                    let cost: f64 = field(&tokens, 3, line, "cost")?;
                    edges.push(Edge { tail: u, head: v, cost });
                } else {
                    let v = vertex(&tokens, 1, line, n)?;
                    let value: f64 = field(&tokens, 2, line, "demand")?;
                    if demands[v].replace(value).is_some() {
                        return Err(syntax(line, format!("second demand for vertex {}", v + 1)));
                    }
                }
            }
            other => return Err(syntax(line, format!("unknown line type `{other}`"))),
        }
    }
    let (n, m) = header.ok_or_else(|| syntax(last_line, "missing header"))?;
    if edges.len() != m {
        return Err(syntax(last_line, format!("header promises {m} edges, found {}", edges.len())));
    }
    let demands = demands.into_iter().map(|d| d.unwrap_or(0.0)).collect();
    Ok(Instance::new(n, edges, demands)?)
}

pub fn render_instance(instance: &Instance) -> String {
    let mut out = String::new();
    writeln!(out, "p tship {} {}", instance.n(), instance.m()).unwrap();
    for e in instance.edges() {
        writeln!(out, "e {} {} {}", e.tail + 1, e.head + 1, real(e.cost)).unwrap();
    }
    for (v, &d) in instance.demands().iter().enumerate() {
        if d != 0.0 || d.is_sign_negative() {
            writeln!(out, "d {} {}", v + 1, real(d)).unwrap();
        }
    }
    out
}

/// Flow lines for every edge followed by the cost trailer.
pub fn render_flow(instance: &Instance, flow: &Flow) -> String {
    let mut out = String::new();
    for (e, &x) in instance.edges().iter().zip(&flow.values) {
        writeln!(out, "f {} {} {}", e.tail + 1, e.head + 1, real(x)).unwrap();
    }
    writeln!(out, "s cost {}", real(crate::graph::flow_cost(flow, instance.edges()))).unwrap();
    out
}

/// Parsed flow together with the cost stated in its trailer, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowFile {
    pub flow: Flow,
    pub stated_cost: Option<f64>,
}

pub fn parse_flow(text: &str, instance: &Instance) -> Result<FlowFile, ParseError> {
    let n = instance.n();
    let mut flow = Flow::zero(instance.m());
    let mut seen = vec![false; instance.m()];
    let mut stated_cost = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(&kind) = tokens.first() else { continue };
        match kind {
            "c" => continue,
            "f" => {
                let u = vertex(&tokens, 1, line, n)?;
                let v = vertex(&tokens, 2, line, n)?;
                let value: f64 = field(&tokens, 3, line, "flow value")?;
                let e = instance
                    .edge_between(u, v)
                    .ok_or_else(|| syntax(line, format!("no edge between {} and {}", u + 1, v + 1)))?;
                if std::mem::replace(&mut seen[e], true) {
                    return Err(syntax(line, format!("second flow line for edge {} {}", u + 1, v + 1)));
                }
                flow.values[e] = if instance.edges()[e].tail == u { value } else { -value };
            }
            "s" => {
                if tokens.get(1) != Some(&"cost") {
                    return Err(syntax(line, "trailer must read `s cost <value>`"));
                }
                stated_cost = Some(field(&tokens, 2, line, "cost")?);
            }
            other => return Err(syntax(line, format!("unknown line type `{other}`"))),
        }
    }
    Ok(FlowFile { flow, stated_cost })
}

/// One line per layer: `layer <i> <reach> <n_i> <m_i>`.
pub fn render_layers(layers: &LayerSequence) -> String {
    let mut out = String::new();
    for layer in &layers.layers {
        writeln!(out, "layer {} {} {} {}", layer.index, real(layer.reach), layer.n(), layer.m()).unwrap();
    }
    out
}

/// Per-layer sample sizes and bundle sizes, then a histogram of bundle sizes.
pub fn render_oracles(ap: &Approximator) -> String {
    let mut out = String::new();
    let mut hist: Vec<usize> = Vec::new();
    let mut max_bundle = 0;
    for layer in &ap.layers().layers {
        let Some(oracle) = ap.oracle(layer.index) else {
            writeln!(out, "oracle {} empty", layer.index).unwrap();
            continue;
        };
        let samples: Vec<String> = (0..oracle.k()).map(|j| oracle.sample(j).len().to_string()).collect();
        writeln!(
            out,
            "oracle {} k {} samples {} max_bundle {} total {}",
            layer.index,
            oracle.k(),
            samples.join(","),
            oracle.max_bundle_size(),
            oracle.total_size()
        )
        .unwrap();
        for v in 0..oracle.n() {
            let s = oracle.bundle_size(v);
            if hist.len() <= s {
                hist.resize(s + 1, 0);
            }
            hist[s] += 1;
        }
        max_bundle = max_bundle.max(oracle.max_bundle_size());
    }
    for (size, &count) in hist.iter().enumerate() {
        if count > 0 {
            writeln!(out, "bundle_size {size} {count}").unwrap();
        }
    }
    writeln!(out, "max_bundle {max_bundle}").unwrap();
    out
}

pub fn render_approx_stats(stats: &ApproxStats) -> String {
    let mut out = String::new();
    writeln!(out, "supervertices {}", stats.supervertices).unwrap();
    writeln!(out, "rows {}", stats.rows).unwrap();
    writeln!(out, "nnz_d {}", stats.nnz_d).unwrap();
    writeln!(out, "nnz_r {}", stats.nnz_r).unwrap();
    writeln!(out, "nnz_c {}", stats.nnz_c).unwrap();
    writeln!(out, "alpha {}", real(stats.alpha)).unwrap();
    writeln!(out, "max_bundle {}", stats.max_bundle).unwrap();
    writeln!(out, "d_column_sum_deviation {}", real(stats.d_column_deviation)).unwrap();
    writeln!(out, "r_column_sum_deviation {}", real(stats.r_column_deviation)).unwrap();
    out
}

/// Flat `key value` block. Wall time is the only nondeterministic line.
pub fn render_report(report: &SolveReport) -> String {
    let mut out = String::new();
    writeln!(out, "cost {}", real(report.cost)).unwrap();
    writeln!(out, "approx_cost_bound {}", real(report.approx_cost_bound)).unwrap();
    writeln!(out, "certified_ratio {}", real(report.certified_ratio)).unwrap();
    writeln!(out, "lower_bound {}", real(report.lower_bound)).unwrap();
    writeln!(out, "dual_ratio {}", real(report.dual_ratio)).unwrap();
    writeln!(out, "rounds {}", report.rounds).unwrap();
    writeln!(out, "iterations {}", report.iterations).unwrap();
    writeln!(out, "residual_norm {}", real(report.residual_norm)).unwrap();
    writeln!(out, "residual_target {}", real(report.residual_target)).unwrap();
    writeln!(out, "wall_time {}", real(report.wall_time)).unwrap();
    out
}
