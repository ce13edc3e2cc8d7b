//! Edge-colored overlap graphs over replicas and their Ramsey-type clique structure.

use std::collections::BTreeMap;

use crate::combin::combinations;
use crate::error::{Error, Result};
use crate::pauli::ShadowState;
use crate::wasserstein::{product_w, CostMode};

/// Largest vertex count for the exhaustive admissibility check.
pub const ADMISSIBILITY_CAP: usize = 20;

/// Slack on the window endpoints absorbing rounding in irrational site costs.
const WINDOW_TOL: f64 = 1e-9;

/// A simple graph on vertices `0..vertices` whose edges carry a color.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OverlapGraph {
    pub vertices: usize,
    /// Edge `(u, v)` with `u < v` mapped to its color.
    pub edges: BTreeMap<(usize, usize), usize>,
}

impl OverlapGraph {
    pub fn new(vertices: usize) -> Self {
        Self {
            vertices,
            edges: BTreeMap::new(),
        }
    }

    /// Inserts an edge, keeping the smaller color if it already exists.
    pub fn add_edge(&mut self, u: usize, v: usize, color: usize) {
        let key = (u.min(v), u.max(v));
        let entry = self.edges.entry(key).or_insert(color);
        *entry = (*entry).min(color);
    }

    pub fn color(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.get(&(u.min(v), u.max(v))).copied()
    }

    /// Distinct colors in increasing order.
    pub fn colors(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.edges.values().copied().collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// Builds the overlap graph from shadow bundles indexed `bundles[t][q][r]`.
///
/// Replicas `t` and `t'` are joined by an edge colored with the smallest `q` at which the
/// bundle-averaged distance `(1/R) sum_r W(w_r^(t), w_r^(t'))` lies in
/// `[(1 - xi) n / 2, (1 - xi + eta) n / 2]`.
pub fn overlap_graph(bundles: &[Vec<Vec<ShadowState>>], xi: f64, eta: f64, mode: CostMode) -> Result<OverlapGraph> {
    let t_count = bundles.len();
    let mut graph = OverlapGraph::new(t_count);
    let Some(first) = bundles.first() else {
        return Ok(graph);
    };
    let q_count = first.len();
    let r = first.first().map(Vec::len).unwrap_or(0);
    if q_count == 0 || r == 0 {
        return Err(Error::Missing("empty shadow bundle".into()));
    }
    let n = first[0][0].n();
    for (t, per_q) in bundles.iter().enumerate() {
        if per_q.len() != q_count {
            return Err(Error::Missing(format!("replica {t} has {} of {q_count} bundles", per_q.len())));
        }
        if let Some(q) = per_q.iter().position(|b| b.len() != r) {
            return Err(Error::Missing(format!("bundle ({t}, {q}) does not hold {r} shadows")));
        }
    }
    let lo = (1.0 - xi) * n as f64 / 2.0;
    let hi = (1.0 - xi + eta) * n as f64 / 2.0;
    for t in 0..t_count {
        for u in t + 1..t_count {
            for q in 0..q_count {
                let mut total = 0.0;
                for (a, b) in bundles[t][q].iter().zip(&bundles[u][q]) {
                    total += product_w(a, b, mode)?;
                }
                let avg = total / r as f64;
                if avg >= lo - WINDOW_TOL && avg <= hi + WINDOW_TOL {
                    graph.add_edge(t, u, q);
                    break;
                }
            }
        }
    }
    Ok(graph)
}

/// Whether every `m`-subset of vertices spans at least one edge.
pub fn is_m_admissible(graph: &OverlapGraph, m: usize) -> Result<bool> {
    if graph.vertices > ADMISSIBILITY_CAP {
        return Err(Error::CapExceeded {
            what: "admissibility vertex",
            got: graph.vertices,
            cap: ADMISSIBILITY_CAP,
        });
    }
    if m > graph.vertices {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds {} vertices", graph.vertices)));
    }
    Ok(combinations(graph.vertices, m).iter().all(|subset| {
        subset
            .iter()
            .enumerate()
            .any(|(i, &u)| subset[i + 1..].iter().any(|&v| graph.color(u, v).is_some()))
    }))
}

/// Finds an `m`-clique whose edges all share one color, trying colors in increasing order.
pub fn find_monochromatic_clique(graph: &OverlapGraph, m: usize) -> Option<(usize, Vec<usize>)> {
    if m == 0 {
        return None;
    }
    for color in graph.colors() {
        let adj: Vec<Vec<bool>> = (0..graph.vertices)
            .map(|u| (0..graph.vertices).map(|v| u != v && graph.color(u, v) == Some(color)).collect())
            .collect();
        let mut clique = Vec::with_capacity(m);
        let candidates: Vec<usize> = (0..graph.vertices).collect();
        if grow(&adj, m, &mut clique, &candidates) {
            return Some((color, clique));
        }
    }
    None
}

fn grow(adj: &[Vec<bool>], m: usize, clique: &mut Vec<usize>, candidates: &[usize]) -> bool {
    if clique.len() == m {
        return true;
    }
    if clique.len() + candidates.len() < m {
        return false;
    }
    for (i, &v) in candidates.iter().enumerate() {
        if clique.len() + candidates.len() - i < m {
            return false;
        }
        let next: Vec<usize> = candidates[i + 1..].iter().copied().filter(|&u| adj[v][u]).collect();
        clique.push(v);
        if grow(adj, m, clique, &next) {
            return true;
        }
        clique.pop();
    }
    false
}

/// `log2` of the vertex count `T = 2^{Q^{4 m Q}}` guaranteeing a monochromatic clique.
pub fn ramsey_log2_vertices(q: usize, m: usize) -> f64 {
    (q as f64).powf(4.0 * (m * q) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(vertices: usize, color: usize) -> OverlapGraph {
        let mut g = OverlapGraph::new(vertices);
        for u in 0..vertices {
            for v in u + 1..vertices {
                g.add_edge(u, v, color);
            }
        }
        g
    }

    #[test]
    fn complete_monochromatic() {
        let g = complete(5, 1);
        assert!(is_m_admissible(&g, 3).unwrap());
        assert_eq!(find_monochromatic_clique(&g, 3), Some((1, vec![0, 1, 2])));
    }

    #[test]
    fn empty_graph_not_admissible() {
        let g = OverlapGraph::new(4);
        assert!(!is_m_admissible(&g, 2).unwrap());
        assert_eq!(find_monochromatic_clique(&g, 2), None);
    }

    #[test]
    fn single_replica_has_no_edges() {
        let w: ShadowState = "ZZ/00".parse().unwrap();
        let g = overlap_graph(&[vec![vec![w]]], 0.5, 0.5, CostMode::hamming()).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn identical_bundles_with_window_excluding_zero() {
        let w: ShadowState = "XZ/01".parse().unwrap();
        let bundle = vec![vec![w.clone()], vec![w.clone()]];
        let g = overlap_graph(&[bundle.clone(), bundle.clone(), bundle], 0.5, 0.5, CostMode::hamming()).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn hand_built_three_vertices() {
        // n = 4, window [(1-0.5)*2, (1-0.5+0.25)*2] = [1, 1.5]: only distance 1 qualifies.
        let s = |t: &str| -> ShadowState { t.parse().unwrap() };
        let a = vec![vec![s("ZZZZ/0000")], vec![s("ZZZZ/0000")], vec![s("ZZZZ/0000")]];
        let b = vec![vec![s("ZZZZ/1111")], vec![s("ZZZZ/0011")], vec![s("ZZZZ/0001")]];
        let c = vec![vec![s("XXXX/0000")], vec![s("XXXX/0000")], vec![s("XXXX/0000")]];
        let g = overlap_graph(&[a, b, c], 0.5, 0.25, CostMode::hamming()).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.color(0, 1), Some(2));
    }

    #[test]
    fn ramsey_threshold_for_single_color() {
        assert_eq!(ramsey_log2_vertices(1, 2), 1.0);
        let mut g = OverlapGraph::new(2);
        g.add_edge(0, 1, 1);
        assert!(is_m_admissible(&g, 2).unwrap());
        assert!(find_monochromatic_clique(&g, 2).is_some());
    }

    #[test]
    fn missing_bundle_rejected() {
        let w: ShadowState = "Z/0".parse().unwrap();
        let r = overlap_graph(&[vec![vec![w.clone()], vec![w.clone()]], vec![vec![w]]], 0.5, 0.5, CostMode::hamming());
        assert!(matches!(r, Err(Error::Missing(_))));
    }
}
