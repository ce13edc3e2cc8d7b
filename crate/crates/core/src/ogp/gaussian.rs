//! Equicorrelated covariance algebra and multivariate Gaussian orthant tails.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Samples per Monte Carlo chunk; each chunk owns its random stream.
const MC_CHUNK: usize = 1 << 16;

/// Closed forms for `Sigma = (1 - rho) I + rho 1 1^T` of size `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquicorrAlgebra {
    /// `(1 - rho)^{m-1} (1 + (m - 1) rho)`.
    pub det: f64,
    /// `(I - rho/(1 + (m-1) rho) 1 1^T) / (1 - rho)`.
    pub inverse: DMatrix<f64>,
    /// The common entry `1/(1 + (m-1) rho)` of `Sigma^{-1} 1`.
    pub inv_one: f64,
}

/// The equicorrelated matrix itself.
pub fn equicorr_matrix(m: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho })
}

pub fn equicorr_algebra(m: usize, rho: f64) -> Result<EquicorrAlgebra> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let lower = if m > 1 { -1.0 / (m - 1) as f64 } else { f64::NEG_INFINITY };
    if !(rho > lower && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho = {rho} makes the {m}x{m} matrix singular or indefinite")));
    }
    let mf = m as f64;
    let tail = (mf - 1.0).mul_add(rho, 1.0);
    let det = (1.0 - rho).powi(m as i32 - 1) * tail;
    let scale = tail * (1.0 - rho);
    let diag = (mf - 2.0).mul_add(rho, 1.0) / scale;
    let off = -rho / scale;
    let inverse = DMatrix::from_fn(m, m, |i, j| if i == j { diag } else { off });
    Ok(EquicorrAlgebra {
        det,
        inverse,
        inv_one: 1.0 / tail,
    })
}

/// Analytic and sampled estimates of `P[Y >= x]` for `Y ~ N(0, Sigma)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    /// `(lower, upper)` sandwich, or `None` when `Sigma^{-1} x` has a nonpositive entry.
    pub analytic: Option<(f64, f64)>,
    pub hits: u64,
    pub samples: u64,
}

impl TailReport {
    pub fn estimate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.hits as f64 / self.samples as f64
        }
    }

    /// Wilson score interval at `z` standard deviations.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.hits, self.samples, z)
    }
}

/// Wilson score interval for `hits` successes in `n` Bernoulli trials.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sandwich for the Gaussian orthant probability with `a = Sigma^{-1} x > 0` and `u = 1/a`:
/// `(1 - u^T Sigma u) / prod(a) <= det(2 pi Sigma)^{1/2} e^{x^T a / 2} P[Y >= x] <= 1 / prod(a)`,
/// together with a Monte Carlo estimate from `samples` draws.
pub fn gaussian_min_tail(sigma: &DMatrix<f64>, x: &[f64], samples: usize, seed: u64) -> Result<TailReport> {
    let m = x.len();
    if sigma.nrows() != m || sigma.ncols() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: sigma.nrows(),
        });
    }
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
    let xv = DVector::from_column_slice(x);
    let a = chol.solve(&xv);
    let analytic = if a.iter().all(|&v| v > 0.0) {
        let det: f64 = chol.l().diagonal().iter().map(|d| d * d).product();
        let norm = ((2.0 * PI).powi(m as i32) * det).sqrt() * (0.5 * xv.dot(&a)).exp();
        let prod: f64 = a.iter().product();
        let u = a.map(|v| 1.0 / v);
        let quad = u.dot(&(sigma * &u));
        Some(((1.0 - quad) / (prod * norm), 1.0 / (prod * norm)))
    } else {
        None
    };
    let l = chol.l();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, c as u64, tag::SAMPLER);
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut z = vec![0.0; m];
            let mut count = 0u64;
            for _ in 0..len {
                for zi in z.iter_mut() {
                    *zi = r.sample(StandardNormal);
                }
                let above = (0..m).all(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum::<f64>() >= x[i]);
                count += u64::from(above);
            }
            count
        })
        .sum();
    Ok(TailReport {
        analytic,
        hits,
        samples: samples as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncorrelated_is_identity() {
        let e = equicorr_algebra(4, 0.0).unwrap();
        assert_eq!(e.det, 1.0);
        assert_eq!(e.inverse, DMatrix::identity(4, 4));
        assert_eq!(e.inv_one, 1.0);
    }

    #[test]
    fn two_by_two_half() {
        let e = equicorr_algebra(2, 0.5).unwrap();
        assert!((e.det - 0.75).abs() < 1e-15);
        let prod = &e.inverse * equicorr_matrix(2, 0.5);
        assert!((prod - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn singular_rho_rejected() {
        assert!(equicorr_algebra(3, -0.5).is_err());
        assert!(equicorr_algebra(3, 1.0).is_err());
    }

    #[test]
    fn scalar_tail() {
        let s = DMatrix::from_element(1, 1, 1.0);
        let rep = gaussian_min_tail(&s, &[2.0], 200_000, 3).unwrap();
        let (lo, hi) = rep.analytic.unwrap();
        let phi2 = (-2.0f64).exp() / (2.0 * PI).sqrt();
        assert!((hi - phi2 / 2.0).abs() < 1e-15);
        assert!((lo - 0.75 * phi2 / 2.0).abs() < 1e-15);
        assert!((rep.estimate() - 0.02275).abs() < 2e-3);
    }

    #[test]
    fn precondition_flagged() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let rep = gaussian_min_tail(&s, &[1.0, -1.0], 1000, 1).unwrap();
        assert!(rep.analytic.is_none());
    }
}
