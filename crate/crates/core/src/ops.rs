//! Sparse Pauli-sum operators on amplitude vectors and small dense linear algebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pauli::{BasisAction, PauliString};
use crate::rng;

/// Largest qubit count accepted by matrix-free Pauli sums.
pub const SPARSE_CAP: usize = 20;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// A real linear combination of Pauli words acting on `2^n` amplitudes.
#[derive(Clone, Debug)]
pub struct PauliSum {
    n: usize,
    coefs: Vec<f64>,
    words: Vec<PauliString>,
    actions: Vec<BasisAction>,
}

impl PauliSum {
    pub fn new(n: usize, terms: &[(f64, PauliString)]) -> Result<Self> {
        if n > SPARSE_CAP {
            return Err(Error::CapExceeded {
                what: "sparse qubit",
                got: n,
                cap: SPARSE_CAP,
            });
        }
        for (_, p) in terms {
            if p.n() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: p.n(),
                });
            }
        }
        Ok(Self {
            n,
            coefs: terms.iter().map(|t| t.0).collect(),
            words: terms.iter().map(|t| t.1.clone()).collect(),
            actions: terms.iter().map(|t| t.1.basis_action()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn len(&self) -> usize {
        self.coefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, &PauliString)> {
        self.coefs.iter().copied().zip(self.words.iter())
    }

    /// Sum of absolute coefficients, an upper bound on the operator norm.
    pub fn one_norm(&self) -> f64 {
        self.coefs.iter().map(|c| c.abs()).sum()
    }

    /// `out = H v`.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for (&c, act) in self.coefs.iter().zip(&self.actions) {
            for (x, &a) in v.iter().enumerate() {
                if a != ZERO {
                    out[x ^ act.flip] += act.phase(x) * (c * a);
                }
            }
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; v.len()];
        self.apply_into(v, &mut out);
        out
    }

    /// `<v|H|v>` for a normalized `v`.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        inner(v, &self.apply(v)).re
    }

    /// Dense matrix assembled from the basis action of every term.
    pub fn dense(&self) -> Result<DMatrix<C64>> {
        if self.n > crate::pauli::DENSE_CAP {
            return Err(Error::CapExceeded {
                what: "dense qubit",
                got: self.n,
                cap: crate::pauli::DENSE_CAP,
            });
        }
        let dim = self.dim();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (&c, act) in self.coefs.iter().zip(&self.actions) {
            for x in 0..dim {
                m[(x ^ act.flip, x)] += act.phase(x) * c;
            }
        }
        Ok(m)
    }
}

/// `<u|v>`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Trace norm of a Hermitian matrix.
pub fn hermitian_trace_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|l| l.abs()).sum()
}

/// Operator norm of a Hermitian matrix.
pub fn hermitian_op_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m)
        .iter()
        .fold(0.0f64, |acc, l| acc.max(l.abs()))
}

/// `exp(-i t H) v` by scaled Taylor series.
pub fn expm_multiply(h: &PauliSum, t: f64, v: &[C64]) -> Vec<C64> {
    let bound = h.one_norm() * t.abs();
    if bound == 0.0 {
        return v.to_vec();
    }
    let steps = bound.ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut cur = v.to_vec();
    let mut term = vec![ZERO; v.len()];
    let mut next = vec![ZERO; v.len()];
    let scale = C64::new(0.0, -dt);
    for _ in 0..steps {
        term.copy_from_slice(&cur);
        let mut acc = cur.clone();
        let vnorm = norm(&cur).max(f64::MIN_POSITIVE);
        for j in 1..200 {
            h.apply_into(&term, &mut next);
            let f = scale / j as f64;
            for (t_, nx) in term.iter_mut().zip(&next) {
                *t_ = nx * f;
            }
            for (a, t_) in acc.iter_mut().zip(&term) {
                *a += t_;
            }
            if norm(&term) <= 1e-17 * vnorm {
                break;
            }
        }
        cur = acc;
    }
    cur
}

/// Extreme eigenvalues `(max, min)` with their residual norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremes {
    pub max: f64,
    pub min: f64,
    pub residual: f64,
}

/// Restarted Lanczos with full reorthogonalization for both spectrum ends.
///
/// Converged when both Ritz residuals fall below `rel_tol * max(|max|, |min|)`.
pub fn lanczos_extremes(h: &PauliSum, rel_tol: f64, seed: u64) -> Result<Extremes> {
    let dim = h.dim();
    let krylov = dim.min(if dim > 1 << 16 { 48 } else { 120 });
    let mut r = rng::stream(seed, 0, rng::tag::SAMPLER);
    let mut start: Vec<C64> = (0..dim)
        .map(|_| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
        .collect();
    let s = norm(&start);
    start.iter_mut().for_each(|a| *a /= s);
    let mut best = Extremes {
        max: 0.0,
        min: 0.0,
        residual: f64::INFINITY,
    };
    for _ in 0..60 {
        let mut basis: Vec<Vec<C64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![ZERO; dim];
        loop {
            let j = basis.len() - 1;
            h.apply_into(&basis[j], &mut w);
            let a = inner(&basis[j], &w).re;
            alpha.push(a);
            for q in &basis {
                let c = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
            for q in &basis {
                let c = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
            let b = norm(&w);
            if basis.len() == krylov || b <= 1e-13 * (a.abs() + 1.0) {
                beta.push(b);
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (mut imax, mut imin) = (0, 0);
        for i in 0..m {
            if eig.eigenvalues[i] > eig.eigenvalues[imax] {
                imax = i;
            }
            if eig.eigenvalues[i] < eig.eigenvalues[imin] {
                imin = i;
            }
        }
        let last = beta[m - 1];
        let res_max = (last * eig.eigenvectors[(m - 1, imax)]).abs();
        let res_min = (last * eig.eigenvectors[(m - 1, imin)]).abs();
        let lmax = eig.eigenvalues[imax];
        let lmin = eig.eigenvalues[imin];
        let scale = lmax.abs().max(lmin.abs());
        let residual = res_max.max(res_min);
        best = Extremes {
            max: lmax,
            min: lmin,
            residual,
        };
        if scale == 0.0 || residual <= rel_tol * scale || m == dim {
            return Ok(best);
        }
        let ymax: DVector<f64> = eig.eigenvectors.column(imax).into_owned();
        let ymin: DVector<f64> = eig.eigenvectors.column(imin).into_owned();
        let mut next = vec![ZERO; dim];
        for (k, q) in basis.iter().enumerate() {
            let c = ymax[k] + ymin[k];
            for (ni, qi) in next.iter_mut().zip(q) {
                *ni += qi * c;
            }
        }
        let s = norm(&next);
        next.iter_mut().for_each(|a| *a /= s);
        start = next;
    }
    Err(Error::NonConvergence {
        residual: best.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(n: usize, terms: &[(f64, &str)]) -> PauliSum {
        let t: Vec<(f64, PauliString)> = terms.iter().map(|(c, s)| (*c, s.parse().unwrap())).collect();
        PauliSum::new(n, &t).unwrap()
    }

    #[test]
    fn dense_matches_kronecker() {
        let h = sum(3, &[(0.3, "XYZ"), (-1.1, "ZIZ"), (0.7, "IYI")]);
        let d = h.dense().unwrap();
        let mut k = DMatrix::from_element(8, 8, ZERO);
        for (c, p) in h.terms() {
            k += crate::pauli::dense_matrix(p, 12).unwrap() * C64::new(c, 0.0);
        }
        assert!((d - k).norm() < 1e-12);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let h = sum(
            5,
            &[
                (0.3, "XYZII"),
                (-1.1, "ZIZII"),
                (0.7, "IYIXX"),
                (0.2, "IIIZY"),
                (-0.5, "XXXXX"),
            ],
        );
        let ev = hermitian_eigenvalues(&h.dense().unwrap());
        let e = lanczos_extremes(&h, 1e-10, 3).unwrap();
        assert!((e.max - ev[ev.len() - 1]).abs() < 1e-8);
        assert!((e.min - ev[0]).abs() < 1e-8);
    }

    #[test]
    fn expm_matches_rotation() {
        let h = sum(1, &[(1.0, "X")]);
        let v = vec![C64::new(1.0, 0.0), ZERO];
        let out = expm_multiply(&h, 0.4, &v);
        assert!((out[0] - C64::new(0.4f64.cos(), 0.0)).norm() < 1e-13);
        assert!((out[1] - C64::new(0.0, -0.4f64.sin())).norm() < 1e-13);
    }
}
