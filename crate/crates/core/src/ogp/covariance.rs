//! Replica covariance of frame-restricted k-local Pauli products on Pauli basis states.

use crate::combin::{binomial, combinations};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::pauli::ShadowState;

/// Largest qubit count of [`covariance_pair`].
pub const COVARIANCE_N_CAP: usize = 14;

/// Largest locality of [`covariance_pair`].
pub const COVARIANCE_K_CAP: usize = 4;

/// Single-site expectation `<w|sigma^(c)|w>`.
fn site_sign(w: &ShadowState, i: usize, c: u8) -> i32 {
    if w.frame(i) == c {
        1 - 2 * i32::from(w.outcome(i))
    } else {
        0
    }
}

/// `J_Q(c, b1, b2) = (1/n) #{i in Q : c_i = b1_i = b2_i}`.
pub fn agreement_fraction(frame: &[u8], w1: &ShadowState, w2: &ShadowState, q_set: &[bool]) -> f64 {
    let n = frame.len();
    let count = (0..n)
        .filter(|&i| q_set[i] && frame[i] == w1.frame(i) && frame[i] == w2.frame(i))
        .count();
    count as f64 / n as f64
}

/// `d_{Q,c}`: sites of `Q` where `c_i = b1_i = b2_i` but the outcomes differ.
pub fn restricted_hamming(frame: &[u8], w1: &ShadowState, w2: &ShadowState, q_set: &[bool]) -> usize {
    (0..frame.len())
        .filter(|&i| q_set[i] && frame[i] == w1.frame(i) && frame[i] == w2.frame(i) && w1.outcome(i) != w2.outcome(i))
        .count()
}

/// Returns `(exact_sum, closed_form)` for a (P, k) model, where
/// `exact_sum = (1/C(n,k)) sum_{I ⊆ Q, |I| = k} sum_{c in P} prod_{i in I} <w1|sigma_i^(c_i)|w1><w2|sigma_i^(c_i)|w2>`
/// and `closed_form = sum_{c in P} ((n J_Q(c, b1, b2) - 2 d_{Q,c}) / n)^k`.
pub fn covariance_pair(w1: &ShadowState, w2: &ShadowState, q_set: &[bool], model: &Model) -> Result<(f64, f64)> {
    let frames = model
        .frames()
        .ok_or_else(|| Error::InvalidArgument("covariance identity needs a (P,k) model".into()))?;
    let n = model.n();
    let k = model.k();
    if n > COVARIANCE_N_CAP {
        return Err(Error::CapExceeded {
            what: "covariance qubit",
            got: n,
            cap: COVARIANCE_N_CAP,
        });
    }
    if k > COVARIANCE_K_CAP {
        return Err(Error::CapExceeded {
            what: "covariance locality",
            got: k,
            cap: COVARIANCE_K_CAP,
        });
    }
    for len in [w1.n(), w2.n(), q_set.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    let q_sites: Vec<usize> = (0..n).filter(|&i| q_set[i]).collect();
    let subsets = combinations(q_sites.len(), k);
    let mut exact = 0i64;
    let mut closed = 0.0;
    for frame in frames {
        for subset in &subsets {
            let mut prod = 1i32;
            for &j in subset {
                let i = q_sites[j];
                prod *= site_sign(w1, i, frame[i]) * site_sign(w2, i, frame[i]);
                if prod == 0 {
                    break;
                }
            }
            exact += i64::from(prod);
        }
        let inner = agreement_fraction(frame, w1, w2, q_set) * n as f64 - 2.0 * restricted_hamming(frame, w1, w2, q_set) as f64;
        closed += (inner / n as f64).powi(k as i32);
    }
    Ok((exact as f64 / binomial(n, k), closed))
}
