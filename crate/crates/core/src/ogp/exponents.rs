//! Entropy and counting bounds, first-moment exponents and admissible parameter regions.

use std::f64::consts::LN_2;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Largest tuple space `6^{n m R}` enumerated by [`brute_cardinality`].
pub const BRUTE_CARDINALITY_CAP: f64 = 1e8;

/// Rejection budget of the admissible-tuple samplers.
pub const SAMPLER_ATTEMPTS: usize = 10_000_000;

/// Upper edge of the sampling box for `m` when the admissible range is unbounded.
pub const M_BOX: f64 = 1e6;

/// Slack on distance thresholds absorbing rounding.
const THRESHOLD_TOL: f64 = 1e-9;

/// Every scalar appearing in the hardness theorems and their corollaries.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentParams {
    /// Approximation ratio `gamma`.
    pub gamma: f64,
    /// Optimality threshold `gamma*` of the overlap-gap property.
    pub gamma_star: f64,
    /// Estimator accuracy `delta`.
    pub delta: f64,
    /// Tuple size `m`.
    pub m: f64,
    pub xi: f64,
    pub eta: f64,
    /// Chaos window `eta'`.
    pub eta_prime: f64,
    /// Correlation-set log-cardinality fraction `c`.
    pub c: f64,
    /// Overlap-depletion parameter `F`.
    pub depletion: f64,
    /// Repetition count `R`.
    pub r: usize,
    /// Locality `k`.
    pub k: usize,
    /// Limiting normalized ground-state energy `E*`.
    pub e_star: f64,
    /// Frame-set cardinality `|P|`.
    pub num_frames: usize,
    /// Largest fraction of entries on which two distinct frames agree.
    pub phi: f64,
    /// Covariance base `upsilon`.
    pub upsilon: f64,
    /// Interpolation length `Q`.
    pub q: usize,
    pub beta: f64,
    /// Degree cap of the stability definition.
    pub degree_cap: f64,
    pub kappa: f64,
    /// Stability offset `f`.
    pub f: f64,
    /// Lipschitz constant `L`.
    pub l: f64,
    pub p_st: f64,
    pub p_f: f64,
    pub p_est: f64,
    pub p_b: f64,
    pub d_max: f64,
    /// Qubit count, used by the finite-size stability inequality.
    pub n: usize,
}

impl Default for ExponentParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            gamma_star: 1.0,
            delta: 0.0,
            m: 2.0,
            xi: 1.0,
            eta: 0.0,
            eta_prime: 0.0,
            c: 0.0,
            depletion: 1.0,
            r: 1,
            k: 2,
            e_star: 1.0,
            num_frames: 1,
            phi: 0.0,
            upsilon: 0.0,
            q: 1,
            beta: 1.0,
            degree_cap: 0.0,
            kappa: 0.0,
            f: 0.0,
            l: 0.0,
            p_st: 0.0,
            p_f: 0.0,
            p_est: 0.0,
            p_b: 0.0,
            d_max: 0.0,
            n: 1,
        }
    }
}

/// `upsilon = ((1 + xi)/2) [R = 1] + (1 - F~) [R != 1]`.
pub fn upsilon(xi: f64, f_tilde: f64, r: usize) -> f64 {
    if r == 1 {
        (1.0 + xi) / 2.0
    } else {
        1.0 - f_tilde
    }
}

/// Binary entropy in bits with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("entropy argument {x} outside [0, 1]")));
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Whether `H(x) <= sqrt(2 x (1 - x))` holds at `x`.
pub fn entropy_bound_check(x: f64) -> Result<bool> {
    Ok(binary_entropy(x)? <= (2.0 * x * (1.0 - x)).sqrt())
}

/// Counting bound on the number of `m`-tuples of `R`-bundles of Pauli basis states at
/// small mutual distance, in bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CardinalityBound {
    /// `log2(6) R n + (H(x) + log2(5) x)(m - 1) R n` with `x = (1 - xi + eta)/2`.
    pub log2_bound: f64,
    /// Polynomial slack `(m - 1) log2(R n + 1)` kept separate from the bound.
    pub log2_slack: f64,
}

pub fn cardinality_bound(m: usize, xi: f64, eta: f64, r: usize, n: usize) -> Result<CardinalityBound> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let x = (1.0 - xi + eta) / 2.0;
    let rn = (r * n) as f64;
    let per_pair = binary_entropy(x)? + 5f64.log2() * x;
    Ok(CardinalityBound {
        log2_bound: 6f64.log2() * rn + per_pair * (m - 1) as f64 * rn,
        log2_slack: (m - 1) as f64 * (rn + 1.0).log2(),
    })
}

/// Exact number of `m`-tuples of strings in `{0..6}^{R n}` whose pairwise letter-Hamming
/// distances are all at most `(1 - xi + eta)/2 * R n`.
pub fn brute_cardinality(m: usize, xi: f64, eta: f64, r: usize, n: usize) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let sites = r * n;
    let space = 6f64.powi((sites * m) as i32);
    if space > BRUTE_CARDINALITY_CAP {
        return Err(Error::CapExceeded {
            what: "brute cardinality tuple space",
            got: space.min(usize::MAX as f64) as usize,
            cap: BRUTE_CARDINALITY_CAP as usize,
        });
    }
    let limit = (1.0 - xi + eta) / 2.0 * sites as f64 + THRESHOLD_TOL;
    let count = 6usize.pow(sites as u32);
    let words: Vec<Vec<u8>> = (0..count)
        .map(|mut idx| {
            let mut w = vec![0u8; sites];
            for s in (0..sites).rev() {
                w[s] = (idx % 6) as u8;
                idx /= 6;
            }
            w
        })
        .collect();
    let close = |a: usize, b: usize| {
        let d = words[a].iter().zip(&words[b]).filter(|(x, y)| x != y).count();
        d as f64 <= limit
    };
    fn rec(depth: usize, m: usize, count: usize, chosen: &mut Vec<usize>, close: &dyn Fn(usize, usize) -> bool) -> u64 {
        if depth == m {
            return 1;
        }
        let mut total = 0;
        for w in 0..count {
            if chosen.iter().all(|&p| close(p, w)) {
                chosen.push(w);
                total += rec(depth + 1, m, count, chosen, close);
                chosen.pop();
            }
        }
        total
    }
    Ok(rec(0, m, count, &mut Vec::with_capacity(m), &close))
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

fn check_m(m: f64) -> Result<()> {
    if !(m >= 1.0) {
        return Err(Error::InvalidArgument(format!("m = {m} must be at least 1")));
    }
    Ok(())
}

/// Chaos exponent of the quantum k-spin model:
/// `log2 6 + (H(eta/2) + log2(5) eta/2)(m - 1) - m gamma^2 E*^2 / (2 ln2 9^k R)`.
pub fn psi_chaos_kspin(p: &ExponentParams) -> Result<f64> {
    check_unit("eta", p.eta)?;
    check_m(p.m)?;
    let x = p.eta / 2.0;
    let gain = p.gamma.powi(2) * p.e_star.powi(2) / (2.0 * LN_2 * 9f64.powi(p.k as i32) * p.r as f64);
    Ok(6f64.log2() + (binary_entropy(x)? + 5f64.log2() * x) * (p.m - 1.0) - p.m * gain)
}

/// `upsilon^k + |P| phi^k`, the covariance bound between distinct replicas.
pub fn covariance_term(p: &ExponentParams) -> f64 {
    p.upsilon.powi(p.k as i32) + p.num_frames as f64 * p.phi.powi(p.k as i32)
}

/// First-moment exponent of the m-QOGP for the (P, k) spin glass.
pub fn psi_mqogp_pk(p: &ExponentParams) -> Result<f64> {
    if !(0.0 < p.eta && p.eta < p.xi && p.xi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eta < xi <= 1, got eta = {}, xi = {}",
            p.eta, p.xi
        )));
    }
    if p.c < 0.0 {
        return Err(Error::InvalidArgument(format!("c = {} must be nonnegative", p.c)));
    }
    check_m(p.m)?;
    Ok(psi_pk_raw(p, covariance_term(p)))
}

fn psi_pk_raw(p: &ExponentParams, cov: f64) -> f64 {
    let x = (1.0 - p.xi + p.eta) / 2.0;
    let r = p.r as f64;
    let h = binary_entropy(x).expect("x in [0, 1] by the xi, eta checks");
    6f64.log2() + (h + 5f64.log2() * x) * (p.m - 1.0) + p.c * p.m / r
        - p.m * p.gamma.powi(2) * p.e_star.powi(2) / (2.0 * LN_2 * (1.0 + (p.m - 1.0) * cov) * r)
}

/// Chaos exponent of the (P, k) spin glass:
/// `log2 6 + (H(eta'/2) + log2(5) eta'/2)(m - 1) - m gamma^2 E*^2 / (2 ln2 R)`.
pub fn psi_chaos_pk(p: &ExponentParams) -> Result<f64> {
    check_unit("eta'", p.eta_prime)?;
    check_m(p.m)?;
    let x = p.eta_prime / 2.0;
    Ok(6f64.log2() + (binary_entropy(x)? + 5f64.log2() * x) * (p.m - 1.0)
        - p.m * p.gamma.powi(2) * p.e_star.powi(2) / (2.0 * LN_2 * p.r as f64))
}

/// `gamma*^2 E*^2 / R`.
fn gain(p: &ExponentParams) -> f64 {
    p.gamma_star.powi(2) * p.e_star.powi(2) / p.r as f64
}

/// Lower end of the admissible `m` range of the k-spin chaos property.
pub fn theorem3_m_min(p: &ExponentParams) -> f64 {
    1.0 + 6.0 * 6f64.ln() * 9f64.powi(p.k as i32) / gain(p)
}

/// Upper limit on `eta` in the k-spin chaos property.
pub fn theorem3_eta_max(p: &ExponentParams) -> f64 {
    let g = gain(p) / 9f64.powi(p.k as i32);
    1f64.min((g / (6.0 * LN_2)).powi(2)).min(g / (3.0 * 5f64.ln()))
}

/// Whether `p` lies in the parameter region of the k-spin chaos property.
pub fn theorem3_admissible(p: &ExponentParams) -> bool {
    p.gamma_star > 0.0
        && p.gamma_star <= 1.0
        && p.r >= 1
        && p.m >= theorem3_m_min(p)
        && p.eta >= 0.0
        && p.eta <= theorem3_eta_max(p)
}

/// `max((g/(24 ln2))^2, g/(12 ln5))` with `g = gamma*^2 E*^2 / R`.
pub fn theorem4_scale(p: &ExponentParams) -> f64 {
    let g = gain(p);
    (g / (24.0 * LN_2)).powi(2).max(g / (12.0 * 5f64.ln()))
}

/// The admissible `m` interval `[1 + 8 ln6 R/(gamma*^2 E*^2), 1 + 1/(upsilon^k + |P| phi^k)]`.
pub fn theorem4_m_window(p: &ExponentParams) -> (f64, f64) {
    (1.0 + 8.0 * 6f64.ln() / gain(p), 1.0 + 1.0 / covariance_term(p))
}

/// Whether `p` lies in the parameter region of the (P, k) m-QOGP, with `F~ = F` and the
/// stored `upsilon` required to match its definition.
pub fn theorem4_admissible(p: &ExponentParams) -> bool {
    let s = theorem4_scale(p);
    let (lo, hi) = theorem4_m_window(p);
    let ups = upsilon(p.xi, p.depletion, p.r);
    p.gamma_star > 0.0
        && p.gamma_star <= 1.0
        && p.r >= 1
        && (0.0..1.0).contains(&p.phi)
        && p.depletion > 0.0
        && p.depletion <= 1.0
        && (p.upsilon - ups).abs() <= 1e-15
        && p.eta > 0.0
        && p.xi > p.eta
        && p.xi <= 1.0
        && p.xi - p.eta >= 1.0 - s
        && p.m >= lo
        && p.m <= hi
        && p.c >= 0.0
        && p.c <= 1.0 / 48.0
        && p.eta_prime > 1.0 - p.xi + p.eta
        && p.eta_prime < 3.0 * s
}

/// Draws a k-spin chaos tuple: `k in 1..=6`, `R in 1..=4`, `gamma* in (0, 1]`, `E* in (0, 2]`,
/// integer `m` uniform on `[ceil(m_min), 2 ceil(m_min)]`, `eta` uniform on `[0, eta_max]`.
pub fn sample_theorem3_tuple(rng: &mut Rng) -> ExponentParams {
    let mut p = ExponentParams {
        k: rng.random_range(1..=6),
        r: rng.random_range(1..=4),
        gamma_star: 1.0 - rng.random::<f64>(),
        e_star: 2.0 * (1.0 - rng.random::<f64>()),
        ..ExponentParams::default()
    };
    p.gamma = p.gamma_star;
    let m_min = theorem3_m_min(&p).ceil();
    p.m = (m_min + (rng.random::<f64>() * (m_min + 1.0)).floor()).min(2.0 * m_min);
    p.eta = rng.random::<f64>() * theorem3_eta_max(&p);
    p
}

/// Draws a (P, k) m-QOGP tuple by rejection: `k in 2..=2000`, `R in 1..=4`, `|P| in 1..=8`,
/// `phi in [0, 0.9)`, `gamma*, F~ in (0, 1]`, `E* in (0, 2]`, `m <= M_BOX`, then `xi - eta`, `eta`, integer `m`,
/// `c` and `eta'` uniform on their admissible ranges.
pub fn sample_theorem4_tuple(rng: &mut Rng) -> Result<ExponentParams> {
    for _ in 0..SAMPLER_ATTEMPTS {
        let mut p = ExponentParams {
            k: rng.random_range(2..=2000),
            r: rng.random_range(1..=4),
            num_frames: rng.random_range(1..=8),
            phi: 0.9 * rng.random::<f64>(),
            gamma_star: 1.0 - rng.random::<f64>(),
            e_star: 2.0 * (1.0 - rng.random::<f64>()),
            depletion: 1.0 - rng.random::<f64>(),
            ..ExponentParams::default()
        };
        p.gamma = p.gamma_star;
        let s = theorem4_scale(&p);
        let gap_lo = (1.0 - s).max(0.0);
        let gap = gap_lo + (1.0 - gap_lo) * rng.random::<f64>();
        if gap <= 0.0 {
            continue;
        }
        p.eta = (1.0 - gap) * (1.0 - rng.random::<f64>());
        p.xi = p.eta + gap;
        if !(p.eta > 0.0 && p.xi <= 1.0) {
            continue;
        }
        p.upsilon = upsilon(p.xi, p.depletion, p.r);
        let (lo, hi) = theorem4_m_window(&p);
        let (m_lo, m_hi) = (lo.ceil(), hi.floor().min(M_BOX));
        if !(m_lo <= m_hi) {
            continue;
        }
        p.m = (m_lo + (rng.random::<f64>() * (m_hi - m_lo + 1.0)).floor()).min(m_hi);
        p.c = rng.random::<f64>() / 48.0;
        let (e_lo, e_hi) = (1.0 - p.xi + p.eta, 3.0 * s);
        p.eta_prime = e_lo + (e_hi - e_lo) * rng.random::<f64>();
        if theorem4_admissible(&p) {
            return Ok(p);
        }
    }
    Err(Error::RejectionCap(SAMPLER_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, tag};

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn entropy_bound_near_endpoints() {
        assert!(entropy_bound_check(0.01).unwrap());
        assert!(entropy_bound_check(0.0).unwrap());
        assert!(!entropy_bound_check(0.5).unwrap());
    }

    #[test]
    fn single_element_cardinality() {
        let b = cardinality_bound(1, 0.3, 0.1, 2, 3).unwrap();
        assert_eq!(b.log2_bound, 6f64.log2() * 6.0);
        assert_eq!(brute_cardinality(1, 0.3, 0.1, 1, 3).unwrap(), 216);
    }

    #[test]
    fn zero_window_pairs_only_with_itself() {
        assert_eq!(brute_cardinality(2, 1.0, 0.0, 1, 3).unwrap(), 216);
    }

    #[test]
    fn brute_count_matches_ball_sizes() {
        // Radius floor(0.375 * 4) = 1 at n = 4: each word has 1 + 4*5 neighbours.
        assert_eq!(brute_cardinality(2, 0.5, 0.25, 1, 4).unwrap(), 1296 * 21);
    }

    #[test]
    fn chaos_pk_is_mqogp_without_covariance() {
        let p = ExponentParams {
            m: 7.0,
            xi: 1.0,
            eta: 0.05,
            eta_prime: 0.05,
            c: 0.0,
            r: 2,
            gamma: 0.8,
            e_star: 1.1,
            ..ExponentParams::default()
        };
        assert!((psi_pk_raw(&p, 0.0) - psi_chaos_pk(&p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn kspin_m_one_and_zero_gamma() {
        let p = ExponentParams {
            m: 1.0,
            eta: 0.3,
            gamma: 0.5,
            k: 2,
            ..ExponentParams::default()
        };
        let expect = 6f64.log2() - 0.25 / (2.0 * LN_2 * 81.0);
        assert!((psi_chaos_kspin(&p).unwrap() - expect).abs() < 1e-12);
        let zero = ExponentParams { gamma: 0.0, m: 5.0, ..p };
        assert!(psi_chaos_kspin(&zero).unwrap() >= 6f64.log2());
    }

    #[test]
    fn samplers_produce_admissible_tuples() {
        let mut r = rng::stream(1, 0, tag::SAMPLER);
        for _ in 0..50 {
            assert!(theorem3_admissible(&sample_theorem3_tuple(&mut r)));
            assert!(theorem4_admissible(&sample_theorem4_tuple(&mut r).unwrap()));
        }
    }
}
