//! Quantum W1 norm of a small traceless Hermitian matrix by Douglas-Rachford splitting.
//!
//! A decomposition `X = sum_i X_i` with `Tr_i X_i = 0` is the same as an assignment of
//! every Pauli component of `X` to sites in its support, so the feasible set is an affine
//! subspace in Pauli coordinates and the proximal step is an eigenvalue soft-threshold.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ops::{C64, ZERO};
use crate::pauli::{BasisAction, PauliString};

/// Largest qubit count accepted by [`w1_norm`].
pub const W1_CAP: usize = 3;

/// Default duality-gap tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Default iteration cap.
pub const DEFAULT_ITERS: usize = 100_000;

/// Result of the splitting solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct W1Solution {
    /// Primal objective at a feasible decomposition.
    pub value: f64,
    /// Certified gap between `value` and a dual lower bound.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct PauliBasis {
    n: usize,
    dim: usize,
    actions: Vec<BasisAction>,
    support: Vec<Vec<bool>>,
}

impl PauliBasis {
    fn new(n: usize) -> Self {
        let count = 1usize << (2 * n);
        let mut actions = Vec::with_capacity(count);
        let mut support = Vec::with_capacity(count);
        for idx in 0..count {
            let codes: Vec<u8> = (0..n).map(|i| ((idx >> (2 * (n - 1 - i))) & 3) as u8).collect();
            let p = PauliString::new(&codes).expect("codes in range");
            actions.push(p.basis_action());
            support.push(codes.iter().map(|&c| c != 0).collect());
        }
        Self {
            n,
            dim: 1 << n,
            actions,
            support,
        }
    }

    /// Real coordinates `Tr(P Y) / d` of a Hermitian matrix.
    fn coords(&self, y: &DMatrix<C64>) -> Vec<f64> {
        self.actions
            .iter()
            .map(|a| {
                let tr: C64 = (0..self.dim).map(|x| a.phase(x) * y[(x, x ^ a.flip)]).sum();
                tr.re / self.dim as f64
            })
            .collect()
    }

    fn matrix(&self, c: &[f64]) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (a, &v) in self.actions.iter().zip(c) {
            if v != 0.0 {
                for x in 0..self.dim {
                    m[(x ^ a.flip, x)] += a.phase(x) * v;
                }
            }
        }
        m
    }
}

fn eigen_map(m: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut out = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
    for k in 0..eig.eigenvalues.len() {
        let w = f(eig.eigenvalues[k]);
        if w != 0.0 {
            let v = eig.eigenvectors.column(k);
            out += v * v.adjoint() * C64::new(w, 0.0);
        }
    }
    out
}

fn trace_norm(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|l| l.abs()).sum()
}

fn op_norm(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().fold(0.0f64, |a, l| a.max(l.abs()))
}

/// Projection of per-site coordinates onto the feasible affine set.
fn project(basis: &PauliBasis, target: &[f64], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; target.len()]; basis.n];
    for (p, supp) in basis.support.iter().enumerate() {
        let count = supp.iter().filter(|&&s| s).count();
        if count == 0 {
            continue;
        }
        let sum: f64 = (0..basis.n).filter(|&i| supp[i]).map(|i| y[i][p]).sum();
        let shift = (target[p] - sum) / count as f64;
        for i in 0..basis.n {
            if supp[i] {
                out[i][p] = y[i][p] + shift;
            }
        }
    }
    out
}

/// Quantum W1 norm of a traceless Hermitian `X` on at most three qubits.
pub fn w1_norm(x: &DMatrix<C64>, tol: f64, max_iters: usize) -> Result<W1Solution> {
    let dim = x.nrows();
    if dim != x.ncols() || !dim.is_power_of_two() || dim < 2 {
        return Err(Error::InvalidArgument(format!("matrix must be 2^n square, got {dim}x{}", x.ncols())));
    }
    let n = dim.trailing_zeros() as usize;
    if n > W1_CAP {
        return Err(Error::CapExceeded {
            what: "exact W1 qubit",
            got: n,
            cap: W1_CAP,
        });
    }
    let trace = x.trace();
    if trace.norm() > 1e-10 * x.norm().max(1.0) {
        return Err(Error::NotTraceless(trace.norm()));
    }
    let basis = PauliBasis::new(n);
    let mut target = basis.coords(x);
    target[0] = 0.0;
    if target.iter().all(|&c| c.abs() < 1e-15) {
        return Ok(W1Solution {
            value: 0.0,
            gap: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let scale = trace_norm(x).max(f64::MIN_POSITIVE);
    let step = 0.5 * scale / n as f64;
    let half_step = 0.5 * step;
    let zero = vec![vec![0.0; target.len()]; n];
    let mut z = project(&basis, &target, &zero);
    let mut best = W1Solution {
        value: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: 0,
        converged: false,
    };
    let mut best_lower = f64::NEG_INFINITY;
    for iter in 1..=max_iters {
        let xk = project(&basis, &target, &z);
        let reflected: Vec<Vec<f64>> = xk
            .iter()
            .zip(&z)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| 2.0 * u - v).collect())
            .collect();
        let mut yk = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for r in &reflected {
            let rm = basis.matrix(r);
            let ym = eigen_map(&rm, |l| l.signum() * (l.abs() - half_step).max(0.0));
            let yc = basis.coords(&ym);
            w.push(r.iter().zip(&yc).map(|(a, b)| (a - b) / step).collect::<Vec<f64>>());
            yk.push(yc);
        }
        for i in 0..n {
            for p in 0..target.len() {
                z[i][p] += yk[i][p] - xk[i][p];
            }
        }
        if iter % 10 != 0 && iter != max_iters {
            continue;
        }
        let upper: f64 = xk.iter().map(|c| 0.5 * trace_norm(&basis.matrix(c))).sum();
        let mut h = vec![0.0; target.len()];
        for (p, supp) in basis.support.iter().enumerate() {
            let sites: Vec<usize> = (0..n).filter(|&i| supp[i]).collect();
            if !sites.is_empty() {
                h[p] = sites.iter().map(|&i| w[i][p]).sum::<f64>() / sites.len() as f64;
            }
        }
        let mut dmax = 0.0f64;
        for i in 0..n {
            let d: Vec<f64> = (0..target.len())
                .map(|p| if basis.support[p][i] { h[p] } else { w[i][p] })
                .collect();
            dmax = dmax.max(op_norm(&basis.matrix(&d)));
        }
        let shrink = if dmax > 0.5 { 0.5 / dmax } else { 1.0 };
        let lower = dim as f64 * shrink * h.iter().zip(&target).map(|(a, b)| a * b).sum::<f64>();
        best_lower = best_lower.max(lower);
        if upper < best.value {
            best.value = upper;
        }
        best.gap = (best.value - best_lower).max(0.0);
        best.iterations = iter;
        if best.gap <= tol {
            best.converged = true;
            return Ok(best);
        }
    }
    Err(Error::NonConvergence { residual: best.gap })
}
