//! Brute-force search for tuples of near-optimal shadow states at constrained mutual distance.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{extreme_eigenvalue, Model};
use crate::ogp::correlation::{interpolated_instance, CorrelationSet, InterpolationPath};
use crate::pauli::{expectation_unchecked, ShadowState};
use crate::rng::{self, tag};
use crate::shadows::EstimatorSpec;
use crate::wasserstein::{product_w, CostMode};

/// Largest qubit count accepted by [`s_set_scan`].
pub const SCAN_N_CAP: usize = 6;

/// Largest product of optimal-set sizes enumerated per disorder draw.
pub const SCAN_TUPLE_CAP: usize = 1_000_000_000;

/// Number of witness tuples retained.
pub const WITNESS_CAP: usize = 10;

/// Slack on the window endpoints absorbing rounding in irrational site costs.
const WINDOW_TOL: f64 = 1e-9;

/// Source of the energy scale `E*` in the optimality threshold `gamma E* sqrt(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EStar {
    /// A caller-supplied constant.
    Fixed(f64),
    /// `max_q lambda_max(H^(t)(tau_q)) / sqrt(n)` separately for every replica `t`.
    PerReplica,
}

/// Parameters of an S-set scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub gamma: f64,
    /// Tuple size, 2 or 3.
    pub m: usize,
    pub xi: f64,
    pub eta: f64,
    pub trials: usize,
    pub seed: u64,
    pub e_star: EStar,
    pub mode: CostMode,
}

impl ScanConfig {
    /// The closed distance window `[(1 - xi) n / 2, (1 - xi + eta) n / 2]`.
    pub fn window(&self, n: usize) -> (f64, f64) {
        let n = n as f64;
        ((1.0 - self.xi) * n / 2.0, (1.0 - self.xi + self.eta) * n / 2.0)
    }
}

/// Result of scanning one disorder draw.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    /// Number of ordered tuples in the S-set.
    pub tuples: u64,
    /// Sizes of the per-replica optimal sets.
    pub optimal_sizes: Vec<usize>,
    /// Thresholds `gamma E* sqrt(n)` per replica.
    pub thresholds: Vec<f64>,
}

impl TrialOutcome {
    pub fn hit(&self) -> bool {
        self.tuples > 0
    }
}

/// A tuple found in the S-set of a given draw.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub trial: usize,
    pub states: Vec<ShadowState>,
}

/// Aggregated scan output.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub outcomes: Vec<TrialOutcome>,
    pub witnesses: Vec<Witness>,
}

impl ScanResult {
    /// Empirical `P[S != empty]`.
    pub fn probability(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().filter(|o| o.hit()).count() as f64 / self.outcomes.len() as f64
    }
}

fn validate(model: &Model, est: &EstimatorSpec, cfg: &ScanConfig) -> Result<()> {
    est.check_compatible(model)?;
    if model.n() > SCAN_N_CAP {
        return Err(Error::CapExceeded {
            what: "S-set scan qubit",
            got: model.n(),
            cap: SCAN_N_CAP,
        });
    }
    if !(2..=3).contains(&cfg.m) {
        return Err(Error::InvalidArgument(format!("m = {} must be 2 or 3", cfg.m)));
    }
    if let EStar::Fixed(e) = cfg.e_star {
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!("E* = {e} must be positive")));
        }
    }
    Ok(())
}

/// Scans `cfg.trials` independent disorder draws; draw `i` uses the path seed
/// `derive(cfg.seed, i, TRIAL)` with `cfg.m` replicas.
pub fn s_set_scan(model: &Arc<Model>, est: &EstimatorSpec, corr: &CorrelationSet, cfg: &ScanConfig) -> Result<ScanResult> {
    validate(model, est, cfg)?;
    let per_trial: Vec<(TrialOutcome, Vec<Vec<ShadowState>>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let path = InterpolationPath::new(model, cfg.m, corr.clone(), trial_seed(cfg.seed, i))?;
            scan_path(&path, est, cfg, i)
        })
        .collect::<Result<_>>()?;
    let mut outcomes = Vec::with_capacity(per_trial.len());
    let mut witnesses = Vec::new();
    for (o, w) in per_trial {
        for states in w {
            if witnesses.len() < WITNESS_CAP {
                witnesses.push(Witness { trial: o.trial, states });
            }
        }
        outcomes.push(o);
    }
    Ok(ScanResult { outcomes, witnesses })
}

/// Path seed of disorder draw `trial`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng::derive(seed, trial as u64, tag::TRIAL)
}

/// Scans a single interpolation path, returning its outcome and up to [`WITNESS_CAP`] tuples.
pub fn scan_path(
    path: &InterpolationPath,
    est: &EstimatorSpec,
    cfg: &ScanConfig,
    trial: usize,
) -> Result<(TrialOutcome, Vec<Vec<ShadowState>>)> {
    let model = path.model();
    validate(model, est, cfg)?;
    if path.replicas() < cfg.m {
        return Err(Error::InvalidArgument(format!(
            "path holds {} replicas, scan needs {}",
            path.replicas(),
            cfg.m
        )));
    }
    let n = model.n();
    let count = 6usize.pow(n as u32);
    let states: Vec<ShadowState> = (0..count).map(|i| ShadowState::from_index(n, i)).collect();
    let active: Vec<usize> = (0..model.num_terms()).filter(|&i| path.mask()[i]).collect();
    // Nonzero expectations of active terms per state.
    let signs: Vec<Vec<(usize, f64)>> = states
        .iter()
        .map(|w| {
            active
                .iter()
                .enumerate()
                .filter_map(|(a, &i)| {
                    let e = expectation_unchecked(w, &model.terms()[i]);
                    (e != 0).then_some((a, f64::from(e)))
                })
                .collect()
        })
        .collect();
    let scale = est.scale();
    let sqrt_n = (n as f64).sqrt();
    let masks = path.correlation_set().len();
    let mut optimal: Vec<Vec<usize>> = Vec::with_capacity(cfg.m);
    let mut thresholds = Vec::with_capacity(cfg.m);
    for t in 1..=cfg.m {
        let mut coefs = Vec::with_capacity(masks);
        let mut lambda = f64::NEG_INFINITY;
        for q in 0..masks {
            let inst = interpolated_instance(path, t, q)?;
            if cfg.e_star == EStar::PerReplica {
                lambda = lambda.max(extreme_eigenvalue(&inst)?.max);
            }
            coefs.push(active.iter().map(|&i| inst.coefficient(i)).collect::<Vec<f64>>());
        }
        let threshold = match cfg.e_star {
            EStar::Fixed(e) => cfg.gamma * e * sqrt_n,
            EStar::PerReplica => cfg.gamma * lambda,
        };
        let set: Vec<usize> = (0..count)
            .filter(|&w| {
                coefs.iter().any(|c| {
                    let e: f64 = signs[w].iter().map(|&(a, s)| c[a] * s).sum();
                    scale * e >= threshold
                })
            })
            .collect();
        optimal.push(set);
        thresholds.push(threshold);
    }
    let work = optimal.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len().max(1)));
    match work {
        Some(w) if w <= SCAN_TUPLE_CAP => {}
        _ => {
            return Err(Error::CapExceeded {
                what: "S-set tuple enumeration",
                got: work.unwrap_or(usize::MAX),
                cap: SCAN_TUPLE_CAP,
            })
        }
    }
    let (lo, hi) = cfg.window(n);
    let in_window = |a: usize, b: usize| -> Result<bool> {
        let d = product_w(&states[a], &states[b], cfg.mode)?;
        Ok(d >= lo - WINDOW_TOL && d <= hi + WINDOW_TOL)
    };
    let mut tuples = 0u64;
    let mut witnesses = Vec::new();
    let mut chosen = Vec::with_capacity(cfg.m);
    extend(&optimal, &in_window, &mut chosen, &mut tuples, &mut witnesses, &states)?;
    Ok((
        TrialOutcome {
            trial,
            tuples,
            optimal_sizes: optimal.iter().map(Vec::len).collect(),
            thresholds,
        },
        witnesses,
    ))
}

fn extend(
    optimal: &[Vec<usize>],
    in_window: &dyn Fn(usize, usize) -> Result<bool>,
    chosen: &mut Vec<usize>,
    tuples: &mut u64,
    witnesses: &mut Vec<Vec<ShadowState>>,
    states: &[ShadowState],
) -> Result<()> {
    let depth = chosen.len();
    if depth == optimal.len() {
        *tuples += 1;
        if witnesses.len() < WITNESS_CAP {
            witnesses.push(chosen.iter().map(|&w| states[w].clone()).collect());
        }
        return Ok(());
    }
    for &w in &optimal[depth] {
        let mut ok = true;
        for &prev in chosen.iter() {
            if !in_window(prev, w)? {
                ok = false;
                break;
            }
        }
        if ok {
            chosen.push(w);
            extend(optimal, in_window, chosen, tuples, witnesses, states)?;
            chosen.pop();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    fn setup() -> (Arc<Model>, EstimatorSpec, CorrelationSet) {
        let m = Arc::new(Model::new(ModelSpec::KSpin { n: 3, k: 2, p: 1.0 }).unwrap());
        let est = EstimatorSpec::for_model(&m);
        let corr = CorrelationSet::independent(&m);
        (m, est, corr)
    }

    fn cfg(gamma: f64, xi: f64, eta: f64) -> ScanConfig {
        ScanConfig {
            gamma,
            m: 2,
            xi,
            eta,
            trials: 6,
            seed: 5,
            e_star: EStar::PerReplica,
            mode: CostMode::hamming(),
        }
    }

    #[test]
    fn unreachable_threshold_gives_empty_sets() {
        let (m, est, corr) = setup();
        let r = s_set_scan(&m, &est, &corr, &cfg(1e6, 1.0, 1.0)).unwrap();
        assert_eq!(r.probability(), 0.0);
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn full_window_hits_shared_optimal_state() {
        let (m, est, corr) = setup();
        // A zero threshold makes every replica optimal set contain its best states,
        // and a window containing 0 admits any shared state.
        let r = s_set_scan(&m, &est, &corr, &cfg(0.0, 1.0, 1.0)).unwrap();
        assert_eq!(r.probability(), 1.0);
        for w in &r.witnesses {
            assert!(product_w(&w.states[0], &w.states[1], CostMode::hamming()).unwrap() <= 1.5);
        }
    }

    #[test]
    fn probability_nonincreasing_in_gamma() {
        let (m, est, corr) = setup();
        let mut last = 1.0;
        for g in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let p = s_set_scan(&m, &est, &corr, &cfg(g, 0.5, 0.5)).unwrap().probability();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn rejects_large_m() {
        let (m, est, corr) = setup();
        let mut c = cfg(0.5, 0.5, 0.5);
        c.m = 4;
        assert!(s_set_scan(&m, &est, &corr, &c).is_err());
    }
}
