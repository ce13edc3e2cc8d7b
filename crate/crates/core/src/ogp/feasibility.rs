//! Inequality audits for the hardness theorem and the parameter chains of its corollaries.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ogp::exponents::{
    psi_chaos_kspin, psi_chaos_pk, psi_mqogp_pk, theorem3_eta_max, theorem3_m_min, theorem4_m_window, theorem4_scale,
    upsilon, ExponentParams,
};
use crate::shadows::{p_est_derandomized, p_est_pauli};

/// Default finite-size surrogate for the `1 - exp(-o(n))` right-hand side.
pub const DEFAULT_SLACK: f64 = 1e-6;

/// Relative tolerance used when re-checking the `Q/beta^2 + Q p_est^R <= 3/4` design identity.
pub const DESIGN_TOL: f64 = 1e-12;

/// One evaluated inequality `lhs <= rhs` (or `<` where `strict`).
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub pass: bool,
    /// Set when a quantity overflowed and was saturated.
    pub saturated: bool,
}

impl Inequality {
    fn new(name: &'static str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        Self {
            name,
            lhs,
            rhs,
            strict,
            pass,
            saturated: false,
        }
    }

    /// `rhs - lhs`, positive when the inequality holds with room.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Per-inequality evaluation with the tightest (or most violated) constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub rows: Vec<Inequality>,
    /// Name of the row with the smallest margin.
    pub binding: Option<&'static str>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, name: &str) -> Option<&Inequality> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Evaluates every inequality of the hardness theorem on `p`.
///
/// The probability condition `Q 2^{Q^{4mQ}} (3Q p_st + 3 p_f + p_b) <= 1 - slack` is compared
/// in `log2` space; if `Q^{4mQ}` overflows it saturates to infinity and the row is flagged.
/// The threshold condition `gamma > gamma* + delta` is evaluated as `gamma* <= gamma - delta`, since the corollary
/// chains set `gamma* = gamma - delta` exactly.
pub fn feasibility_theorem2(p: &ExponentParams, slack: f64) -> FeasibilityReport {
    let q = p.q as f64;
    let mut rows = vec![
        Inequality::new("degree", p.d_max, p.degree_cap, false),
        Inequality::new("kappa", p.kappa, (1.0 - 1.001 / q).max(0.0), false),
        Inequality::new("depletion", p.depletion, 1.0 / q, false),
        Inequality::new("estimation", q / p.beta.powi(2) + q * p.p_est.powf(p.r as f64), 1.0, true),
        Inequality::new(
            "stability",
            p.beta * p.f / p.n as f64 + 6.0 * p.d_max * p.beta * p.l / q,
            p.eta / 8.0,
            false,
        ),
    ];
    let exponent = q.powf(4.0 * p.m * q);
    let mass = 3.0 * q * p.p_st + 3.0 * p.p_f + p.p_b;
    let lhs = if mass > 0.0 {
        q.log2() + exponent + mass.log2()
    } else {
        f64::NEG_INFINITY
    };
    let mut prob = Inequality::new("probability", lhs, (1.0 - slack).log2(), false);
    prob.saturated = exponent.is_infinite();
    rows.push(prob);
    rows.push(Inequality::new("threshold", p.gamma_star, p.gamma - p.delta, false));
    let binding = rows
        .iter()
        .filter(|r| r.margin().is_finite())
        .min_by(|a, b| a.margin().total_cmp(&b.margin()))
        .or_else(|| rows.iter().find(|r| !r.pass))
        .map(|r| r.name);
    FeasibilityReport { rows, binding }
}

/// Which corollary chain to follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainVariant {
    /// `Q = ceil(2 d_max^2 / eps^2)` with derandomized shadows.
    Pk,
    /// `Q = ceil(2 d_max^2 k^0.999 ln(k)^2 / eps^2)` with derandomized shadows.
    PkSparse,
    /// `Q = 1` with Pauli shadows and the chaos property.
    KSpin,
}

impl fmt::Display for ChainVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainVariant::Pk => "pk",
            ChainVariant::PkSparse => "pk_sparse",
            ChainVariant::KSpin => "kspin",
        })
    }
}

impl FromStr for ChainVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pk" => Ok(ChainVariant::Pk),
            "pk_sparse" => Ok(ChainVariant::PkSparse),
            "kspin" => Ok(ChainVariant::KSpin),
            other => Err(Error::Parse(format!("unknown corollary variant {other:?}"))),
        }
    }
}

/// Inputs of a corollary chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainInput {
    pub k: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub delta: f64,
    pub e_star: f64,
    pub num_frames: usize,
    pub phi: f64,
    pub d_max: f64,
    pub variant: ChainVariant,
}

/// Derived parameters, the admissible `m` window and the verdict of a corollary chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    pub params: ExponentParams,
    /// `(lower, upper)` limits on `m`.
    pub m_window: (f64, f64),
    /// Smallest integer in the window, if any.
    pub m_choice: Option<usize>,
    /// `Q/beta^2 + Q p_est^R`.
    pub design_value: f64,
    /// m-QOGP exponent (pk variants) or chaos exponent (k-spin).
    pub psi: Option<f64>,
    /// Chaos exponent of the pk variants.
    pub psi_chaos: Option<f64>,
    pub feasibility: FeasibilityReport,
    pub verdict: bool,
}

/// Follows the corollary proof from `(k, eps, gamma, delta)` to a full parameter set.
///
/// Algorithm-dependent inputs are set to the ideal values `f = L = kappa = p_st = p_f = p_b = 0`,
/// `degree_cap = d_max`, and the asymptotic `c = 0` is used.
pub fn corollary_chain(input: &ChainInput) -> Result<ChainReport> {
    let ChainInput {
        k,
        epsilon,
        gamma,
        delta,
        e_star,
        num_frames,
        phi,
        d_max,
        variant,
    } = *input;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < gamma) {
        return Err(Error::InvalidArgument(format!("need 0 < delta < gamma, got {delta}, {gamma}")));
    }
    if k == 0 || num_frames == 0 {
        return Err(Error::InvalidArgument("k and |P| must be positive".into()));
    }
    let gamma_star = gamma - delta;
    let q = match variant {
        ChainVariant::Pk => (2.0 * d_max * d_max / (epsilon * epsilon)).ceil(),
        ChainVariant::PkSparse => {
            let kf = k as f64;
            (2.0 * d_max * d_max * kf.powf(0.999) * kf.ln().powi(2) / (epsilon * epsilon)).ceil()
        }
        ChainVariant::KSpin => 1.0,
    }
    .max(1.0);
    let beta = (2.0 * q).sqrt();
    let p_est = match variant {
        ChainVariant::KSpin => p_est_pauli(k, delta),
        _ => p_est_derandomized(num_frames, delta),
    };
    let r = ((4.0 * q).ln() / (1.0 / p_est).ln()).ceil().max(1.0);
    let mut p = ExponentParams {
        gamma,
        gamma_star,
        delta,
        k,
        e_star,
        num_frames,
        phi,
        q: q as usize,
        beta,
        depletion: 1.0 / q,
        p_est,
        r: r as usize,
        d_max,
        degree_cap: d_max,
        n: 1,
        ..ExponentParams::default()
    };
    let design_value = q / (beta * beta) + q * p_est.powf(r);
    let (m_window, psi, psi_chaos) = match variant {
        ChainVariant::KSpin => {
            p.gamma = gamma_star;
            p.xi = 1.0;
            p.eta = theorem3_eta_max(&p);
            let lo = theorem3_m_min(&p);
            p.m = lo.ceil();
            let psi = psi_chaos_kspin(&p)?;
            p.gamma = gamma;
            ((lo, f64::INFINITY), Some(psi), None)
        }
        _ => {
            let g = gamma_star.powi(2) * e_star.powi(2) / r;
            let a = (g / (24.0 * std::f64::consts::LN_2)).powi(2);
            let b = g / (12.0 * 5f64.ln());
            p.xi = (1.0 - 0.5 * a).max(1.0 - 0.5 * b);
            p.eta = (0.5 * a).min(0.5 * b);
            p.upsilon = upsilon(p.xi, p.depletion, p.r);
            let window = theorem4_m_window(&p);
            let s = theorem4_scale(&p);
            p.eta_prime = 0.5 * ((1.0 - p.xi + p.eta) + 3.0 * s);
            p.m = window.0.ceil();
            let exps = if p.m <= window.1 {
                p.gamma = gamma_star;
                let out = (psi_mqogp_pk(&p)?, psi_chaos_pk(&p)?);
                p.gamma = gamma;
                (Some(out.0), Some(out.1))
            } else {
                (None, None)
            };
            (window, exps.0, exps.1)
        }
    };
    let m_choice = (m_window.0.ceil() <= m_window.1).then_some(m_window.0.ceil() as usize);
    let feasibility = feasibility_theorem2(&p, DEFAULT_SLACK);
    let verdict = m_choice.is_some()
        && psi.is_some_and(|v| v < 0.0)
        && psi_chaos.is_none_or(|v| v < 0.0)
        && design_value <= 0.75 * (1.0 + DESIGN_TOL)
        && feasibility.feasible();
    Ok(ChainReport {
        params: p,
        m_window,
        m_choice,
        design_value,
        psi,
        psi_chaos,
        feasibility,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ExponentParams {
        ExponentParams {
            q: 1,
            kappa: 0.0,
            depletion: 1.0,
            p_st: 1e-12,
            p_f: 1e-12,
            p_b: 1e-12,
            beta: 10.0,
            r: 40,
            p_est: 0.5,
            eta: 0.5,
            f: 0.0,
            l: 1e-4,
            d_max: 2.0,
            degree_cap: 2.0,
            n: 100,
            gamma: 0.9,
            gamma_star: 0.8,
            delta: 0.1,
            m: 2.0,
            ..ExponentParams::default()
        }
    }

    #[test]
    fn slack_toy_passes() {
        let rep = feasibility_theorem2(&toy(), DEFAULT_SLACK);
        assert!(rep.feasible(), "{rep:?}");
        assert_eq!(rep.rows.len(), 7);
    }

    #[test]
    fn large_lipschitz_violates_stability() {
        let p = ExponentParams { l: 10.0, ..toy() };
        let rep = feasibility_theorem2(&p, DEFAULT_SLACK);
        assert!(!rep.row("stability").unwrap().pass);
        assert_eq!(rep.binding, Some("stability"));
    }

    #[test]
    fn huge_exponent_saturates() {
        let p = ExponentParams { q: 40, m: 5.0, ..toy() };
        let rep = feasibility_theorem2(&p, DEFAULT_SLACK);
        let row = rep.row("probability").unwrap();
        assert!(row.saturated && !row.pass);
    }

    #[test]
    fn kspin_chain_has_trivial_kappa() {
        let rep = corollary_chain(&ChainInput {
            k: 2,
            epsilon: 0.5,
            gamma: 0.9,
            delta: 0.3,
            e_star: 1.0,
            num_frames: 1,
            phi: 0.0,
            d_max: 3.0,
            variant: ChainVariant::KSpin,
        })
        .unwrap();
        assert_eq!(rep.params.q, 1);
        assert_eq!(rep.feasibility.row("kappa").unwrap().rhs, 0.0);
        assert!(rep.design_value <= 0.75);
    }

    #[test]
    fn small_k_window_is_empty() {
        let rep = corollary_chain(&ChainInput {
            k: 2,
            epsilon: 0.5,
            gamma: 0.9,
            delta: 0.3,
            e_star: 1.0,
            num_frames: 8,
            phi: 0.5,
            d_max: 3.0,
            variant: ChainVariant::Pk,
        })
        .unwrap();
        assert!(rep.m_choice.is_none());
        assert!(!rep.verdict);
    }
}
