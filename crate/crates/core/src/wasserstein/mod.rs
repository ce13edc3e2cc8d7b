//! Quantum Wasserstein distances on Pauli-basis product states and their mixtures.

pub mod sdp;
pub mod transport;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand::seq::IndexedRandom;

use crate::error::{Error, Result};
use crate::ops::{hermitian_trace_norm, C64};
use crate::pauli::ShadowState;
use crate::rng::Rng;

pub use sdp::W1Solution;

/// Largest combined support accepted by [`ot_distance`].
pub const SUPPORT_CAP: usize = 10_000;

/// Number of shuffled north-west corner restarts used for the upper bound.
pub const UPPER_RESTARTS: usize = 16;

/// Tolerance on mixture weight normalization.
const WEIGHT_TOL: f64 = 1e-12;

/// Per-site cost convention between Pauli-basis letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// Cost 1 whenever the letters differ.
    Hamming6,
    /// Single-qubit trace distance: 1 for opposite outcomes, `1/sqrt 2` across frames.
    ExactSiteW1,
}

/// Cost convention together with its order `p >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostMode {
    pub kind: CostKind,
    pub order: f64,
}

impl CostMode {
    pub fn new(kind: CostKind, order: f64) -> Result<Self> {
        if !(order >= 1.0) {
            return Err(Error::InvalidArgument(format!("order must be >= 1, got {order}")));
        }
        Ok(Self { kind, order })
    }

    pub fn hamming() -> Self {
        Self {
            kind: CostKind::Hamming6,
            order: 1.0,
        }
    }

    pub fn exact() -> Self {
        Self {
            kind: CostKind::ExactSiteW1,
            order: 1.0,
        }
    }

    /// Per-site cost between two letters `2(b-1)+s`.
    pub fn site_cost(&self, a: u8, b: u8) -> f64 {
        if a == b {
            return 0.0;
        }
        match self.kind {
            CostKind::Hamming6 => 1.0,
            CostKind::ExactSiteW1 => {
                if a / 2 == b / 2 {
                    1.0
                } else {
                    std::f64::consts::FRAC_1_SQRT_2
                }
            }
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::Hamming6 => "hamming6",
            CostKind::ExactSiteW1 => "exact_site_w1",
        })
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming6" => Ok(CostKind::Hamming6),
            "exact_site_w1" => Ok(CostKind::ExactSiteW1),
            other => Err(Error::Parse(format!("unknown cost mode {other:?}"))),
        }
    }
}

/// `sum_i c_i^{1/p}` with the per-site costs of `mode`.
pub fn product_w(w1: &ShadowState, w2: &ShadowState, mode: CostMode) -> Result<f64> {
    if w1.n() != w2.n() {
        return Err(Error::LengthMismatch {
            expected: w1.n(),
            got: w2.n(),
        });
    }
    let inv = 1.0 / mode.order;
    Ok((0..w1.n())
        .map(|i| {
            let c = mode.site_cost(w1.letter(i), w2.letter(i));
            if c == 0.0 {
                0.0
            } else {
                c.powf(inv)
            }
        })
        .sum())
}

/// A probability distribution over distinct Pauli-basis product states.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMixture {
    support: Vec<ShadowState>,
    weights: Vec<f64>,
}

impl DiagonalMixture {
    pub fn new(support: Vec<ShadowState>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                got: weights.len(),
            });
        }
        if support.is_empty() {
            return Err(Error::InvalidArgument("empty mixture".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("negative mixture weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        let n = support[0].n();
        let mut seen = std::collections::HashSet::new();
        for s in &support {
            if s.n() != n {
                return Err(Error::LengthMismatch { expected: n, got: s.n() });
            }
            if !seen.insert(s.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate support point {s}")));
            }
        }
        Ok(Self { support, weights })
    }

    /// Point mass at one state.
    pub fn point(w: ShadowState) -> Self {
        Self {
            support: vec![w],
            weights: vec![1.0],
        }
    }

    /// Empirical distribution of a sample, merging repeated states.
    pub fn empirical(samples: &[ShadowState]) -> Result<Self> {
        let mut counts: BTreeMap<&ShadowState, usize> = BTreeMap::new();
        for s in samples {
            *counts.entry(s).or_default() += 1;
        }
        let total = samples.len() as f64;
        let (support, weights) = counts.into_iter().map(|(s, c)| (s.clone(), c as f64 / total)).unzip();
        Self::new(support, weights)
    }

    pub fn n(&self) -> usize {
        self.support[0].n()
    }

    pub fn support(&self) -> &[ShadowState] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Transport lower and upper bounds between two mixtures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OtBounds {
    pub lower: f64,
    pub upper: f64,
}

fn cost_matrix(p: &DiagonalMixture, q: &DiagonalMixture, mode: CostMode) -> Result<Vec<Vec<f64>>> {
    p.support
        .iter()
        .map(|a| q.support.iter().map(|b| product_w(a, b, mode)).collect())
        .collect()
}

/// Transport distance of order `alpha` between two diagonal mixtures.
///
/// `lower` is `(min_pi E_pi[cost^alpha])^{1/alpha}`, computed exactly. `upper` is the best
/// value of `sum pi^{1/alpha} cost` over a family of vertex couplings.
pub fn ot_distance(p: &DiagonalMixture, q: &DiagonalMixture, mode: CostMode, alpha: f64) -> Result<OtBounds> {
    if !(alpha >= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 1, got {alpha}")));
    }
    let points = p.support.len() + q.support.len();
    if points > SUPPORT_CAP {
        return Err(Error::CapExceeded {
            what: "transport support",
            got: points,
            cap: SUPPORT_CAP,
        });
    }
    if p.n() != q.n() {
        return Err(Error::LengthMismatch {
            expected: p.n(),
            got: q.n(),
        });
    }
    let cost = cost_matrix(p, q, mode)?;
    let powered: Vec<Vec<f64>> = cost
        .iter()
        .map(|r| r.iter().map(|c| c.powf(alpha)).collect())
        .collect();
    let optimal = transport::solve(&p.weights, &q.weights, &powered)?;
    let upper_value = |cells: &[(usize, usize, f64)]| -> f64 {
        cells
            .iter()
            .map(|&(i, j, x)| if x > 0.0 { x.powf(1.0 / alpha) * cost[i][j] } else { 0.0 })
            .sum()
    };
    let lower = if alpha == 1.0 {
        upper_value(&optimal.cells)
    } else {
        optimal.cost.max(0.0).powf(1.0 / alpha)
    };
    let mut upper = upper_value(&optimal.cells);
    if alpha != 1.0 {
        let linear = transport::solve(&p.weights, &q.weights, &cost)?;
        upper = upper.min(upper_value(&linear.cells));
        for v in transport::random_vertices(&p.weights, &q.weights, UPPER_RESTARTS, 0)? {
            upper = upper.min(upper_value(&v));
        }
    }
    Ok(OtBounds { lower, upper })
}

/// `(1/2 ||X||_*, n/2 ||X||_*)` for a traceless Hermitian `X` on `n` qubits.
pub fn trace_norm_sandwich(x: &DMatrix<C64>) -> Result<(f64, f64)> {
    let dim = x.nrows();
    if dim != x.ncols() || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument("matrix must be 2^n square".into()));
    }
    if dim > 1 << crate::pauli::DENSE_CAP {
        return Err(Error::CapExceeded {
            what: "dense qubit",
            got: dim.trailing_zeros() as usize,
            cap: crate::pauli::DENSE_CAP,
        });
    }
    let tr = x.trace();
    if tr.norm() > 1e-10 {
        return Err(Error::NotTraceless(tr.norm()));
    }
    let n = dim.trailing_zeros() as f64;
    let t = hermitian_trace_norm(x);
    Ok((0.5 * t, 0.5 * n * t))
}

/// Quantum W1 norm of `X` on at most three qubits with a certified duality gap.
pub fn exact_w1_small(x: &DMatrix<C64>, tol: f64) -> Result<W1Solution> {
    sdp::w1_norm(x, tol, sdp::DEFAULT_ITERS)
}

/// Checks `W_q^q <= W_p^p <= n^{p-q} W_q^q` for a pair of product states, `p >= q`.
pub fn order_equivalence_check(w1: &ShadowState, w2: &ShadowState, kind: CostKind, q: f64, p: f64) -> Result<bool> {
    let (q, p) = if q <= p { (q, p) } else { (p, q) };
    let wq = product_w(w1, w2, CostMode::new(kind, q)?)?.powf(q);
    let wp = product_w(w1, w2, CostMode::new(kind, p)?)?.powf(p);
    let n = w1.n() as f64;
    let slack = 1e-12 * wp.max(1.0);
    Ok(wq <= wp + slack && wp <= n.powf(p - q) * wq + slack)
}

/// A row-stochastic map on the six single-site letters.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteChannel {
    rows: [[f64; 6]; 6],
}

impl SiteChannel {
    pub fn new(rows: [[f64; 6]; 6]) -> Result<Self> {
        for (a, row) in rows.iter().enumerate() {
            if row.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::NotStochastic(format!("negative entry in row {a}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::NotStochastic(format!("row {a} sums to {s}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity() -> Self {
        let mut rows = [[0.0; 6]; 6];
        for (a, row) in rows.iter_mut().enumerate() {
            row[a] = 1.0;
        }
        Self { rows }
    }

    /// Replaces every input by a fixed letter distribution.
    pub fn replacement(dist: [f64; 6]) -> Result<Self> {
        Self::new([dist; 6])
    }

    pub fn rows(&self) -> &[[f64; 6]; 6] {
        &self.rows
    }
}

/// The 24 single-qubit Clifford actions on letters `2(b-1)+s`.
///
/// Each is a signed permutation of the three axes with determinant `+1`; the eigenstate
/// of `sigma^b` with eigenvalue `(-1)^s` maps to the eigenstate of `eps * sigma^{pi(b)}`.
pub fn clifford_letter_maps() -> Vec<[u8; 6]> {
    let perms: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let parity = [1i32, -1, -1, 1, 1, -1];
    let mut out = Vec::with_capacity(24);
    for (perm, par) in perms.iter().zip(parity) {
        for signs in 0..8u8 {
            let prod: i32 = (0..3).map(|b| if signs >> b & 1 == 1 { -1 } else { 1 }).product();
            if prod * par != 1 {
                continue;
            }
            let mut map = [0u8; 6];
            for b in 0..3 {
                for s in 0..2u8 {
                    let flip = signs >> b & 1;
                    map[2 * b + s as usize] = 2 * perm[b] as u8 + (s ^ flip);
                }
            }
            out.push(map);
        }
    }
    out
}

/// A random convex mixture of Clifford letter maps and replacement channels.
pub fn random_clifford_mixture(rng: &mut Rng) -> SiteChannel {
    let maps = clifford_letter_maps();
    let parts = rng.random_range(1..=3usize);
    let mut weights: Vec<f64> = (0..=parts).map(|_| rng.random::<f64>() + 1e-3).collect();
    if rng.random_bool(0.5) {
        weights[parts] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    let mut rows = [[0.0; 6]; 6];
    for w in weights.iter().take(parts) {
        let map = maps.choose(rng).expect("nonempty");
        for a in 0..6 {
            rows[a][map[a] as usize] += w / total;
        }
    }
    let mut dist: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
    let ds: f64 = dist.iter().sum();
    dist.iter_mut().for_each(|d| *d /= ds);
    for row in rows.iter_mut() {
        for (x, d) in row.iter_mut().zip(dist) {
            *x += weights[parts] / total * d;
        }
    }
    normalize_rows(rows)
}

/// A random row-stochastic map with independent uniform rows.
pub fn random_stochastic(rng: &mut Rng) -> SiteChannel {
    let mut rows = [[0.0; 6]; 6];
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.random::<f64>();
        }
    }
    normalize_rows(rows)
}

fn normalize_rows(mut rows: [[f64; 6]; 6]) -> SiteChannel {
    for row in rows.iter_mut() {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    SiteChannel { rows }
}

/// Pushes a mixture through a tensor product of site channels.
pub fn apply_channels(mix: &DiagonalMixture, channels: &[SiteChannel]) -> Result<DiagonalMixture> {
    let n = mix.n();
    if channels.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: channels.len(),
        });
    }
    let mut acc: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    for (state, &w) in mix.support.iter().zip(&mix.weights) {
        let mut partial: Vec<(Vec<u8>, f64)> = vec![(Vec::with_capacity(n), w)];
        for (i, ch) in channels.iter().enumerate() {
            let row = &ch.rows[state.letter(i) as usize];
            let mut next = Vec::with_capacity(partial.len() * 6);
            for (prefix, pw) in &partial {
                for (b, &x) in row.iter().enumerate() {
                    if x > 0.0 {
                        let mut l = prefix.clone();
                        l.push(b as u8);
                        next.push((l, pw * x));
                    }
                }
            }
            partial = next;
        }
        for (letters, x) in partial {
            *acc.entry(letters).or_default() += x;
        }
    }
    let total: f64 = acc.values().sum();
    let mut support = Vec::with_capacity(acc.len());
    let mut weights = Vec::with_capacity(acc.len());
    for (letters, x) in acc {
        support.push(ShadowState::from_letters(&letters)?);
        weights.push(x / total);
    }
    DiagonalMixture::new(support, weights)
}

/// Whether the order-one transport distance does not grow under the channels.
pub fn contraction_check(
    p: &DiagonalMixture,
    q: &DiagonalMixture,
    channels: &[SiteChannel],
    mode: CostMode,
) -> Result<bool> {
    let before = ot_distance(p, q, mode, 1.0)?.lower;
    let after = ot_distance(&apply_channels(p, channels)?, &apply_channels(q, channels)?, mode, 1.0)?.lower;
    Ok(after <= before + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> ShadowState {
        text.parse().unwrap()
    }

    #[test]
    fn product_w_examples() {
        let a = s("ZZZ/000");
        assert_eq!(product_w(&a, &a, CostMode::hamming()).unwrap(), 0.0);
        assert_eq!(product_w(&a, &s("ZZZ/111"), CostMode::hamming()).unwrap(), 3.0);
        let cross = product_w(&s("X/0"), &s("Z/0"), CostMode::exact()).unwrap();
        assert!((cross - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn site_metric_axioms() {
        for kind in [CostKind::Hamming6, CostKind::ExactSiteW1] {
            let m = CostMode { kind, order: 1.0 };
            for a in 0..6 {
                for b in 0..6 {
                    assert_eq!(m.site_cost(a, b), m.site_cost(b, a));
                    assert_eq!(m.site_cost(a, b) == 0.0, a == b);
                    for c in 0..6 {
                        assert!(m.site_cost(a, c) <= m.site_cost(a, b) + m.site_cost(b, c) + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn ot_examples() {
        let p = DiagonalMixture::new(vec![s("ZZ/00"), s("ZZ/11")], vec![0.5, 0.5]).unwrap();
        let q = DiagonalMixture::point(s("ZZ/00"));
        let b = ot_distance(&p, &q, CostMode::hamming(), 1.0).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-15 && (b.upper - 1.0).abs() < 1e-15);
        let z = ot_distance(&p, &p, CostMode::hamming(), 2.0).unwrap();
        assert_eq!((z.lower, z.upper), (0.0, 0.0));
        let (u, v) = (s("XYZ/010"), s("ZYX/110"));
        let d = product_w(&u, &v, CostMode::exact()).unwrap();
        for alpha in [1.0, 2.0, 3.5] {
            let b = ot_distance(&DiagonalMixture::point(u.clone()), &DiagonalMixture::point(v.clone()), CostMode::exact(), alpha)
                .unwrap();
            assert!((b.lower - d).abs() < 1e-12 && (b.upper - d).abs() < 1e-12);
        }
    }

    #[test]
    fn clifford_maps_are_geometric() {
        let maps = clifford_letter_maps();
        assert_eq!(maps.len(), 24);
        let mut distinct = maps.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 24);
        let m = CostMode::exact();
        for map in &maps {
            for a in 0..6u8 {
                for b in 0..6u8 {
                    assert_eq!(m.site_cost(a, b), m.site_cost(map[a as usize], map[b as usize]));
                }
            }
        }
    }

    #[test]
    fn channel_edge_cases() {
        let p = DiagonalMixture::new(vec![s("XZ/01"), s("YY/11")], vec![0.3, 0.7]).unwrap();
        let q = DiagonalMixture::point(s("ZZ/00"));
        let ident = vec![SiteChannel::identity(); 2];
        let before = ot_distance(&p, &q, CostMode::exact(), 1.0).unwrap().lower;
        let after = ot_distance(
            &apply_channels(&p, &ident).unwrap(),
            &apply_channels(&q, &ident).unwrap(),
            CostMode::exact(),
            1.0,
        )
        .unwrap()
        .lower;
        assert!((before - after).abs() < 1e-12);
        let fixed = vec![SiteChannel::replacement([0.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap(); 2];
        let pa = apply_channels(&p, &fixed).unwrap();
        let qa = apply_channels(&q, &fixed).unwrap();
        assert_eq!(ot_distance(&pa, &qa, CostMode::hamming(), 1.0).unwrap().lower, 0.0);
        let mut bad = [[0.0; 6]; 6];
        bad[0][0] = 1.0;
        assert!(matches!(SiteChannel::new(bad), Err(Error::NotStochastic(_))));
    }

    #[test]
    fn sandwich_examples() {
        let zero = DMatrix::from_element(2, 2, C64::new(0.0, 0.0));
        assert_eq!(trace_norm_sandwich(&zero).unwrap(), (0.0, 0.0));
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]));
        let (lo, hi) = trace_norm_sandwich(&x).unwrap();
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn order_chain_examples() {
        let a = s("XYZZ/0101");
        let b = s("XZZY/1100");
        for kind in [CostKind::Hamming6, CostKind::ExactSiteW1] {
            assert!(order_equivalence_check(&a, &b, kind, 1.0, 1.0).unwrap());
            assert!(order_equivalence_check(&a, &b, kind, 1.0, 2.0).unwrap());
            assert!(order_equivalence_check(&a, &a, kind, 1.0, 3.0).unwrap());
        }
    }
}
