//! Pauli classical shadows, the derandomized variant and estimator diagnostics.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{extreme_eigenvalue, sample_instance, DisorderInstance, Model};
use crate::ops::{hermitian_eigenvalues, norm, PauliSum, C64, ZERO};
use crate::pauli::{expectation_unchecked, site_vector, ShadowState};
use crate::rng::{self, tag, Rng};

/// Largest qubit count for statevector sampling.
pub const STATEVECTOR_CAP: usize = 20;

/// Largest qubit count for the exact shadow norm.
pub const EXACT_NORM_CAP: usize = 6;

/// Largest qubit count for the exhaustive basis supremum.
pub const SUP_BOUND_CAP: usize = 8;

/// Tolerance on the squared norm of an input state.
const NORM_TOL: f64 = 1e-9;

/// Which measurement channel produces the shadows.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorSpec {
    /// Independent uniform frame per site; the observable is rescaled by `3^k`.
    PauliUniform { k: usize },
    /// One global frame drawn uniformly from a fixed set; rescaled by `|P|`.
    Derandomized { frames: Vec<Vec<u8>> },
}

impl EstimatorSpec {
    /// The estimator naturally paired with a model.
    pub fn for_model(model: &Model) -> Self {
        match model.frames() {
            Some(frames) => EstimatorSpec::Derandomized {
                frames: frames.to_vec(),
            },
            None => EstimatorSpec::PauliUniform { k: model.k() },
        }
    }

    /// Rescaling factor applied to the shadow expectation.
    pub fn scale(&self) -> f64 {
        match self {
            EstimatorSpec::PauliUniform { k } => 3f64.powi(*k as i32),
            EstimatorSpec::Derandomized { frames } => frames.len() as f64,
        }
    }

    /// Checks that this estimator is unbiased for the given model.
    pub fn check_compatible(&self, model: &Model) -> Result<()> {
        match self {
            EstimatorSpec::PauliUniform { k } => {
                if let Some(t) = model.terms().iter().find(|t| t.locality() != *k) {
                    return Err(Error::IncompatibleEstimator(format!(
                        "term {t} has locality {} but the estimator assumes {k}",
                        t.locality()
                    )));
                }
                Ok(())
            }
            EstimatorSpec::Derandomized { frames } => match model.frames() {
                Some(f) if f == frames.as_slice() => Ok(()),
                _ => Err(Error::IncompatibleEstimator(
                    "derandomized frames differ from the model frame set".into(),
                )),
            },
        }
    }
}

/// Draws a Haar-random pure state on `n` qubits.
pub fn haar_state(n: usize, rng: &mut Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let s = norm(&v);
    v.iter_mut().for_each(|a| *a /= s);
    v
}

/// Measures the leading `frames.len()` sites of `state` one by one, collapsing after each.
///
/// Any trailing sites are left unmeasured, so the outcome law is that of the reduced state.
pub fn measure_in_frames(state: &[C64], frames: &[u8], rng: &mut Rng) -> Result<ShadowState> {
    let n = frames.len();
    if !state.len().is_power_of_two() || state.len() < 1usize << n {
        return Err(Error::LengthMismatch {
            expected: 1usize << n,
            got: state.len(),
        });
    }
    let sq: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    if (sq - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(sq));
    }
    let mut cur = state.to_vec();
    let mut outcomes = Vec::with_capacity(n);
    for &b in frames {
        let half = cur.len() / 2;
        let project = |s: u8| -> Vec<C64> {
            let e = site_vector(b, s);
            (0..half)
                .map(|r| e[0].conj() * cur[r] + e[1].conj() * cur[half + r])
                .collect()
        };
        let zero = project(0);
        let p0: f64 = zero.iter().map(|a| a.norm_sqr()).sum::<f64>();
        let total: f64 = cur.iter().map(|a| a.norm_sqr()).sum();
        let u: f64 = rng.random::<f64>() * total;
        let (s, branch, p) = if u < p0 {
            (0u8, zero, p0)
        } else {
            let one = project(1);
            let p1 = (total - p0).max(0.0);
            (1u8, one, p1)
        };
        outcomes.push(s);
        let scale = 1.0 / p.sqrt().max(f64::MIN_POSITIVE);
        cur = branch.into_iter().map(|a| a * scale).collect();
    }
    ShadowState::new(frames, &outcomes)
}

/// Samples one classical shadow of the first `n` qubits of a normalized state.
pub fn sample_shadow(state: &[C64], n: usize, est: &EstimatorSpec, rng: &mut Rng) -> Result<ShadowState> {
    if n > STATEVECTOR_CAP {
        return Err(Error::CapExceeded {
            what: "statevector qubit",
            got: n,
            cap: STATEVECTOR_CAP,
        });
    }
    let frames: Vec<u8> = match est {
        EstimatorSpec::PauliUniform { .. } => (0..n).map(|_| rng.random_range(1..=3u8)).collect(),
        EstimatorSpec::Derandomized { frames } => {
            if frames.is_empty() {
                return Err(Error::InvalidArgument("empty frame set".into()));
            }
            frames[rng.random_range(0..frames.len())].clone()
        }
    };
    measure_in_frames(state, &frames, rng)
}

/// `scale * sum_i c_i <w|P_i|w>` for a shadow `w`.
pub fn energy_estimate(inst: &DisorderInstance, est: &EstimatorSpec, w: &ShadowState) -> Result<f64> {
    est.check_compatible(inst.model())?;
    if w.n() != inst.n() {
        return Err(Error::LengthMismatch {
            expected: inst.n(),
            got: w.n(),
        });
    }
    Ok(estimate_terms(&inst.hamiltonian_terms_ref(), est.scale(), w))
}

/// Estimator over a pre-extracted term list; no compatibility check.
pub fn estimate_terms(terms: &[(f64, &crate::pauli::PauliString)], scale: f64, w: &ShadowState) -> f64 {
    scale
        * terms
            .iter()
            .map(|(c, p)| c * f64::from(expectation_unchecked(w, p)))
            .sum::<f64>()
}

/// Method used by [`shadow_norm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    /// Exhaustive enumeration of every shadow state.
    Exact,
    /// `scale * max |<b;s|O|b;s>|` over reachable shadow states.
    BasisSupBound,
}

/// Diagonal `<b;s|O|b;s>` of the rescaled observable for one shadow state.
fn rescaled_diagonal(h: &PauliSum, w: &ShadowState, est: &EstimatorSpec) -> f64 {
    match est {
        EstimatorSpec::PauliUniform { .. } => h
            .terms()
            .map(|(c, p)| c * 3f64.powi(p.locality() as i32) * f64::from(expectation_unchecked(w, p)))
            .sum(),
        EstimatorSpec::Derandomized { frames } => {
            frames.len() as f64
                * h.terms()
                    .map(|(c, p)| c * f64::from(expectation_unchecked(w, p)))
                    .sum::<f64>()
        }
    }
}

/// Every shadow state the estimator can produce, with its frame probability.
fn reachable_states(n: usize, est: &EstimatorSpec) -> Vec<(ShadowState, f64)> {
    match est {
        EstimatorSpec::PauliUniform { .. } => {
            let total = 6usize.pow(n as u32);
            let w = 3f64.powi(-(n as i32));
            (0..total).map(|i| (ShadowState::from_index(n, i), w)).collect()
        }
        EstimatorSpec::Derandomized { frames } => {
            let w = 1.0 / frames.len() as f64;
            let mut out = Vec::new();
            for f in frames {
                for bits in 0..1usize << n {
                    let s: Vec<u8> = (0..n).map(|i| ((bits >> (n - 1 - i)) & 1) as u8).collect();
                    out.push((ShadowState::new(f, &s).expect("frame length matches"), w));
                }
            }
            out
        }
    }
}

/// Shadow norm of the observable `h` under the given estimator.
pub fn shadow_norm(h: &PauliSum, est: &EstimatorSpec, method: NormMethod) -> Result<f64> {
    let n = h.n();
    match method {
        NormMethod::Exact => {
            if n > EXACT_NORM_CAP {
                return Err(Error::CapExceeded {
                    what: "exact shadow norm qubit",
                    got: n,
                    cap: EXACT_NORM_CAP,
                });
            }
            let dim = 1usize << n;
            let mut m = DMatrix::from_element(dim, dim, ZERO);
            for (w, weight) in reachable_states(n, est) {
                let v = rescaled_diagonal(h, &w, est);
                if v == 0.0 {
                    continue;
                }
                let psi = w.state_vector();
                let f = weight * v * v;
                for a in 0..dim {
                    if psi[a] == ZERO {
                        continue;
                    }
                    let pa = psi[a] * f;
                    for b in 0..dim {
                        m[(a, b)] += pa * psi[b].conj();
                    }
                }
            }
            let ev = hermitian_eigenvalues(&m);
            Ok(ev[ev.len() - 1].max(0.0).sqrt())
        }
        NormMethod::BasisSupBound => {
            if n > SUP_BOUND_CAP {
                return Err(Error::CapExceeded {
                    what: "basis supremum qubit",
                    got: n,
                    cap: SUP_BOUND_CAP,
                });
            }
            let scale = match est {
                EstimatorSpec::PauliUniform { k } => 3f64.powi(*k as i32),
                EstimatorSpec::Derandomized { frames } => frames.len() as f64,
            };
            let sup = reachable_states(n, est)
                .into_iter()
                .map(|(w, _)| {
                    h.terms()
                        .map(|(c, p)| c * f64::from(expectation_unchecked(&w, p)))
                        .sum::<f64>()
                        .abs()
                })
                .fold(0.0f64, f64::max);
            Ok(scale * sup)
        }
    }
}

/// Failure-probability formula `1/(1 + 0.99 * 9^{-k} * delta^2)` for Pauli shadows.
pub fn p_est_pauli(k: usize, delta: f64) -> f64 {
    1.0 / (1.0 + 0.99 * 9f64.powi(-(k as i32)) * delta * delta)
}

/// Failure-probability formula `1/(1 + 0.99 * delta^2 / |P|)` for derandomized shadows.
pub fn p_est_derandomized(num_frames: usize, delta: f64) -> f64 {
    1.0 / (1.0 + 0.99 * delta * delta / num_frames as f64)
}

/// Theoretical failure-probability bound for an estimator.
pub fn p_est_formula(est: &EstimatorSpec, delta: f64) -> f64 {
    match est {
        EstimatorSpec::PauliUniform { k } => p_est_pauli(*k, delta),
        EstimatorSpec::Derandomized { frames } => p_est_derandomized(frames.len(), delta),
    }
}

/// Settings for [`estimator_quality`].
#[derive(Clone, Debug)]
pub struct QualityConfig {
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Fixed `E*`; when absent each instance uses `lambda_max / sqrt(n)`.
    pub e_star: Option<f64>,
    /// Slack `t` in the shadow-norm tail event.
    pub t: f64,
}

/// Empirical estimator quality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    /// Fraction of single-shadow estimates below `Tr(H rho) - delta E* sqrt(n)`.
    pub p_est: f64,
    /// Fraction of instances whose shadow norm exceeds `(scale E* + t) sqrt(n)`.
    pub p_b: f64,
    /// The closed-form failure bound for this estimator and `delta`.
    pub p_est_formula: f64,
    pub trials: usize,
}

/// One trial of [`estimator_quality`]: `(failed, norm exceeded)`.
fn quality_trial(model: &Arc<Model>, est: &EstimatorSpec, cfg: &QualityConfig, t: u64) -> Result<(bool, bool)> {
    let inst = sample_instance(model, rng::derive(cfg.seed, t, tag::TRIAL));
    let n = inst.n();
    let h = inst.pauli_sum()?;
    let mut r_state = rng::stream(cfg.seed, t, tag::STATE);
    let psi = haar_state(n, &mut r_state);
    let mut r_shadow = rng::stream(cfg.seed, t, tag::SHADOW);
    let w = sample_shadow(&psi, n, est, &mut r_shadow)?;
    let estimate = energy_estimate(&inst, est, &w)?;
    let exact = h.expectation(&psi);
    let sqrt_n = (n as f64).sqrt();
    let e_star = match cfg.e_star {
        Some(e) => e,
        None => extreme_eigenvalue(&inst)?.max / sqrt_n,
    };
    let failed = estimate < exact - cfg.delta * e_star * sqrt_n;
    let method = if n <= EXACT_NORM_CAP {
        NormMethod::Exact
    } else {
        NormMethod::BasisSupBound
    };
    let sn = shadow_norm(&h, est, method)?;
    let exceeded = sn > (est.scale() * e_star + cfg.t) * sqrt_n;
    Ok((failed, exceeded))
}

/// Empirical `(p_est, p_b)` over fresh disorder draws and Haar-random states.
pub fn estimator_quality(model: &Arc<Model>, est: &EstimatorSpec, cfg: &QualityConfig) -> Result<QualityReport> {
    est.check_compatible(model)?;
    let results: Vec<(bool, bool)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| quality_trial(model, est, cfg, t))
        .collect::<Result<_>>()?;
    let trials = results.len().max(1) as f64;
    Ok(QualityReport {
        p_est: results.iter().filter(|r| r.0).count() as f64 / trials,
        p_b: results.iter().filter(|r| r.1).count() as f64 / trials,
        p_est_formula: p_est_formula(est, cfg.delta),
        trials: results.len(),
    })
}

/// Single-site reconstruction `3|b;s><b;s| - I` of one shadow at site `i`.
pub fn site_reconstruction(w: &ShadowState, i: usize) -> [[C64; 2]; 2] {
    let e = site_vector(w.frame(i), w.outcome(i));
    let mut m = [[ZERO; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            m[a][b] = e[a] * e[b].conj() * 3.0;
        }
        m[a][a] -= 1.0;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;
    use crate::pauli::PauliString;

    fn single_z(c: f64) -> DisorderInstance {
        let spec = ModelSpec::Generic {
            n: 1,
            p: 1.0,
            z: 1.0,
            terms: vec!["Z".parse().unwrap()],
        };
        let m = Arc::new(Model::new(spec).unwrap());
        DisorderInstance::from_parts(&m, 0, vec![true], vec![c]).unwrap()
    }

    #[test]
    fn eigenstate_is_deterministic() {
        let mut r = rng::stream(1, 0, tag::SHADOW);
        let mut psi = vec![ZERO; 8];
        psi[0] = C64::new(1.0, 0.0);
        for _ in 0..20 {
            let w = measure_in_frames(&psi, &[3, 3, 3], &mut r).unwrap();
            assert_eq!(w.outcomes(), vec![0, 0, 0]);
        }
    }

    #[test]
    fn plus_state_is_fair_in_z() {
        let mut r = rng::stream(2, 0, tag::SHADOW);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = vec![C64::new(s, 0.0), C64::new(s, 0.0)];
        let ones = (0..10_000)
            .filter(|_| measure_in_frames(&psi, &[3], &mut r).unwrap().outcome(0) == 1)
            .count() as f64;
        assert!((ones / 1e4 - 0.5).abs() <= 3.0 * 0.5 / 100.0);
    }

    #[test]
    fn unnormalized_rejected() {
        let mut r = rng::stream(0, 0, tag::SHADOW);
        let psi = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(
            sample_shadow(&psi, 1, &EstimatorSpec::PauliUniform { k: 1 }, &mut r),
            Err(Error::Unnormalized(_))
        ));
    }

    #[test]
    fn single_term_estimate() {
        let inst = single_z(0.4);
        let w: ShadowState = "Z/0".parse().unwrap();
        let e = energy_estimate(&inst, &EstimatorSpec::PauliUniform { k: 1 }, &w).unwrap();
        assert!((e - 1.2).abs() < 1e-15);
        let bad = energy_estimate(&inst, &EstimatorSpec::PauliUniform { k: 2 }, &w);
        assert!(matches!(bad, Err(Error::IncompatibleEstimator(_))));
    }

    #[test]
    fn sigma_z_norms() {
        let h = PauliSum::new(1, &[(1.0, PauliString::new(&[3]).unwrap())]).unwrap();
        let est = EstimatorSpec::PauliUniform { k: 1 };
        assert_eq!(shadow_norm(&h, &est, NormMethod::BasisSupBound).unwrap(), 3.0);
        let exact = shadow_norm(&h, &est, NormMethod::Exact).unwrap();
        assert!((exact - 3f64.sqrt()).abs() < 1e-12);
        let zero = PauliSum::new(2, &[]).unwrap();
        assert_eq!(shadow_norm(&zero, &est, NormMethod::Exact).unwrap(), 0.0);
        assert_eq!(shadow_norm(&zero, &est, NormMethod::BasisSupBound).unwrap(), 0.0);
    }

    #[test]
    fn formula_values() {
        assert!((p_est_pauli(1, 1.0) - 1.0 / (1.0 + 0.99 / 9.0)).abs() < 1e-15);
        assert!((p_est_pauli(1, 1.0) - 0.9009).abs() < 1e-4);
        assert!((p_est_derandomized(1, 1.0) - 0.5025).abs() < 1e-4);
    }

    #[test]
    fn reconstruction_recovers_reduced_state() {
        let mut r = rng::stream(5, 0, tag::STATE);
        let psi = haar_state(2, &mut r);
        let mut acc = [[ZERO; 2]; 2];
        let reps = 40_000;
        let est = EstimatorSpec::PauliUniform { k: 1 };
        for _ in 0..reps {
            let w = sample_shadow(&psi, 2, &est, &mut r).unwrap();
            let m = site_reconstruction(&w, 0);
            for a in 0..2 {
                for b in 0..2 {
                    acc[a][b] += m[a][b] / reps as f64;
                }
            }
        }
        let rho00 = psi[0].norm_sqr() + psi[1].norm_sqr();
        let rho01 = psi[0] * psi[2].conj() + psi[1] * psi[3].conj();
        assert!((acc[0][0].re - rho00).abs() < 0.03);
        assert!((acc[0][1] - rho01).norm() < 0.03);
    }
}
