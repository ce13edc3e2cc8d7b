//! Exact discrete optimal transport by the transportation simplex method.

use std::collections::VecDeque;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Tolerance on the difference between total supply and total demand.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Pivot budget before declaring the solver stuck.
const PIVOT_CAP: usize = 1_000_000;

/// A basic feasible transport plan.
#[derive(Clone, Debug)]
pub struct Plan {
    /// Basic cells `(row, col, mass)`; exactly `m + n - 1` entries, some possibly zero.
    pub cells: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

impl Plan {
    /// Dense `m x n` coupling matrix.
    pub fn dense(&self, m: usize, n: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; n]; m];
        for &(i, j, x) in &self.cells {
            out[i][j] += x;
        }
        out
    }
}

fn check_marginals(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty marginal".into()));
    }
    if a.iter().chain(b).any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("marginals must be finite and nonnegative".into()));
    }
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    if (sa - sb).abs() > MARGINAL_TOL * sa.max(sb).max(1.0) {
        return Err(Error::MarginalMismatch(sa, sb));
    }
    Ok(())
}

/// North-west corner rule applied to the given row and column orders.
pub fn northwest_corner(a: &[f64], b: &[f64], rows: &[usize], cols: &[usize]) -> Vec<(usize, usize, f64)> {
    let mut ra: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
    let mut rb: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
    let (m, n) = (rows.len(), cols.len());
    let (mut r, mut c) = (0, 0);
    let mut cells = Vec::with_capacity(m + n - 1);
    while cells.len() < m + n - 1 {
        let x = ra[r].min(rb[c]).max(0.0);
        cells.push((rows[r], cols[c], x));
        ra[r] -= x;
        rb[c] -= x;
        if r == m - 1 || (c < n - 1 && ra[r] > rb[c]) {
            c += 1;
        } else {
            r += 1;
        }
    }
    cells
}

fn plan_cost(cells: &[(usize, usize, f64)], cost: &[Vec<f64>]) -> f64 {
    cells.iter().map(|&(i, j, x)| x * cost[i][j]).sum()
}

/// Minimizes `sum_ij pi_ij cost_ij` over couplings of `a` and `b`.
pub fn solve(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> Result<Plan> {
    check_marginals(a, b)?;
    let (m, n) = (a.len(), b.len());
    let rows: Vec<usize> = (0..m).collect();
    let cols: Vec<usize> = (0..n).collect();
    let mut cells = northwest_corner(a, b, &rows, &cols);
    let cmax = cost
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, c| acc.max(c.abs()));
    let eps = 1e-12 * cmax.max(1.0);
    let nodes = m + n;
    let mut degenerate_run = 0usize;
    for _ in 0..PIVOT_CAP {
        // Tree adjacency: node ids rows 0..m, cols m..m+n; edge id = cell index.
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (e, &(i, j, _)) in cells.iter().enumerate() {
            adj[i].push((m + j, e));
            adj[m + j].push((i, e));
        }
        let mut pot = vec![f64::NAN; nodes];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adj[u] {
                if pot[v].is_nan() {
                    let (i, j, _) = cells[e];
                    pot[v] = cost[i][j] - pot[u];
                    queue.push_back(v);
                }
            }
        }
        let bland = degenerate_run > 2 * nodes;
        let mut entering = None;
        let mut best = -eps;
        'price: for i in 0..m {
            for j in 0..n {
                let r = cost[i][j] - pot[i] - pot[m + j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'price;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(Plan {
                cost: plan_cost(&cells, cost),
                cells,
            });
        };
        // Path in the tree from column node ej to row node ei.
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes];
        let mut seen = vec![false; nodes];
        seen[m + ej] = true;
        let mut queue = VecDeque::from([m + ej]);
        while let Some(u) = queue.pop_front() {
            if u == ei {
                break;
            }
            for &(v, e) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((u, e));
                    queue.push_back(v);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = ei;
        while let Some((p, e)) = prev[node] {
            path.push(e);
            node = p;
        }
        path.reverse();
        // Edges alternate sign starting with a decrease next to the entering column.
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                let x = cells[e].2;
                let key = (cells[e].0, cells[e].1);
                if x < theta || (x == theta && key < (cells[leave].0, cells[leave].1)) {
                    theta = x;
                    leave = e;
                }
            }
        }
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                cells[e].2 = (cells[e].2 - theta).max(0.0);
            } else {
                cells[e].2 += theta;
            }
        }
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        cells[leave] = (ei, ej, theta);
    }
    Err(Error::NonConvergence { residual: f64::NAN })
}

/// Vertex couplings from shuffled north-west corner starts, `restarts` of them.
pub fn random_vertices(a: &[f64], b: &[f64], restarts: usize, seed: u64) -> Result<Vec<Vec<(usize, usize, f64)>>> {
    check_marginals(a, b)?;
    let mut r = rng::stream(seed, 0, tag::SAMPLER);
    let mut rows: Vec<usize> = (0..a.len()).collect();
    let mut cols: Vec<usize> = (0..b.len()).collect();
    let mut out = vec![northwest_corner(a, b, &rows, &cols)];
    for _ in 0..restarts {
        rows.shuffle(&mut r);
        cols.shuffle(&mut r);
        out.push(northwest_corner(a, b, &rows, &cols));
    }
    Ok(out)
}
