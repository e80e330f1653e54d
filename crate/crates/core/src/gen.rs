//! Seeded instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{DisjointSets, Edge, Instance};

fn unit(u: usize, v: usize) -> Edge {
    Edge {
        tail: u,
        head: v,
        cost: 1.0,
    }
}

/// Path `0 - 1 - ... - n-1` with unit costs.
pub fn path_edges(n: usize) -> Vec<Edge> {
    (0..n.saturating_sub(1)).map(|i| unit(i, i + 1)).collect()
}

/// Cycle on `n` vertices with unit costs.
pub fn cycle_edges(n: usize) -> Vec<Edge> {
    let mut edges = path_edges(n);
    edges.push(unit(n - 1, 0));
    edges
}

/// `rows x cols` grid, vertex `r * cols + c`, unit costs.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<Edge> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push(unit(v, v + 1));
            }
            if r + 1 < rows {
                edges.push(unit(v, v + cols));
            }
        }
    }
    edges
}

/// `G(n, 3/n)` resampled until connected, costs log-uniform in `[1, 10⁶]`.
///
/// Pairs are visited with geometric skips so each attempt costs `O(n + m)`
/// draws; at `p = 3/n` most attempts for larger `n` are rejected.
pub fn random_edges(n: usize, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (3.0 / n as f64).min(1.0);
    let log_skip = (1.0 - p).ln();
    loop {
        let mut pairs = Vec::new();
        // enumerate pairs (u, v), u < v, as a flat index
        let total = n * (n - 1) / 2;
        let mut idx: i64 = -1;
        loop {
            let skip = if p >= 1.0 {
                0
            } else {
                let r: f64 = rng.gen::<f64>();
                ((1.0 - r).ln() / log_skip).floor() as i64
            };
            idx += skip + 1;
            if idx as usize >= total {
                break;
            }
            pairs.push(pair_from_index(n, idx as usize));
        }
        let mut sets = DisjointSets::new(n);
        let mut parts = n;
        for &(u, v) in &pairs {
            if sets.union(u, v) {
                parts -= 1;
            }
        }
        if parts == 1 {
            return pairs
                .into_iter()
                .map(|(u, v)| Edge {
                    tail: u,
                    head: v,
                    cost: (rng.gen::<f64>() * 1e6f64.ln()).exp(),
                })
                .collect();
        }
    }
}

fn pair_from_index(n: usize, mut idx: usize) -> (usize, usize) {
    let mut u = 0;
    while idx >= n - 1 - u {
        idx -= n - 1 - u;
        u += 1;
    }
    (u, u + 1 + idx)
}

/// Proper demands with entries uniform in `[-1, 1]` and the last entry
/// balancing the rest.
pub fn random_demands(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let head: f64 = b[..n - 1].iter().sum();
    b[n - 1] = -head;
    b
}

/// Family name plus size, as accepted by the bench harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Path,
    Cycle,
    Grid,
    Random,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "path" => Ok(Family::Path),
            "cycle" => Ok(Family::Cycle),
            "grid" => Ok(Family::Grid),
            "random" => Ok(Family::Random),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

/// Instance of roughly `n` vertices (grids round to a square) with seeded
/// random proper demands.
pub fn generate(family: Family, n: usize, seed: u64) -> Instance {
    let (n, edges) = match family {
        Family::Path => (n, path_edges(n)),
        Family::Cycle => (n, cycle_edges(n)),
        Family::Grid => {
            let side = ((n as f64).sqrt().round() as usize).max(2);
            (side * side, grid_edges(side, side))
        }
        Family::Random => (n, random_edges(n, seed)),
    };
    let demands = random_demands(n, seed.wrapping_add(1));
    Instance::new(n, edges, demands).expect("generated instances are valid")
}
