//! Correlation sets of interpolation masks and the interpolation paths built from them.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::models::{sample_instance, DisorderInstance, Model};
use crate::rng::{self, tag};

/// A family of interpolation masks `tau` over the candidate terms of a model.
///
/// Each mask comes with a qubit subset `q_set` such that a term is frozen (`tau_i = 0`)
/// exactly when its support lies inside the subset.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSet {
    /// One mask per element; entry `i` refers to candidate term `i`.
    pub taus: Vec<Vec<bool>>,
    /// Membership vectors of the frozen qubit subsets.
    pub q_sets: Vec<Vec<bool>>,
    /// Log-cardinality fraction: the set holds at most `2^{c n}` masks.
    pub c: f64,
    /// Overlap-depletion parameter.
    pub f: f64,
    /// Repetition count.
    pub r: usize,
}

/// Outcome of [`CorrelationSet::audit`].
#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub cardinality_ok: bool,
    /// `(mask index, term index)` pairs where `tau_i = 0` disagrees with `supp ⊆ Q_tau`.
    pub membership_violations: Vec<(usize, usize)>,
    /// Mask indices with `|Q_tau| > (1 - F) n` while `R != 1` and `tau != 0`.
    pub depletion_violations: Vec<usize>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.cardinality_ok && self.membership_violations.is_empty() && self.depletion_violations.is_empty()
    }
}

impl CorrelationSet {
    /// The single all-ones mask: every replica is drawn independently.
    pub fn independent(model: &Model) -> Self {
        let n = model.n();
        Self {
            taus: vec![vec![true; model.num_terms()]],
            q_sets: vec![vec![false; n]],
            c: 0.0,
            f: 1.0,
            r: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Checks the three defining conditions term by term against `model`.
    pub fn audit(&self, model: &Model) -> AuditReport {
        let n = model.n() as f64;
        let cardinality_ok = (self.taus.len() as f64).log2() <= self.c * n + 1e-12;
        let mut membership_violations = Vec::new();
        let mut depletion_violations = Vec::new();
        for (t, (tau, q)) in self.taus.iter().zip(&self.q_sets).enumerate() {
            for (i, term) in model.terms().iter().enumerate() {
                let frozen = !tau[i];
                if frozen != term.support_within(q) {
                    membership_violations.push((t, i));
                }
            }
            let size = q.iter().filter(|&&b| b).count() as f64;
            if self.r != 1 && tau.iter().any(|&b| b) && size > (1.0 - self.f) * n + 1e-12 {
                depletion_violations.push(t);
            }
        }
        AuditReport {
            cardinality_ok,
            membership_violations,
            depletion_violations,
        }
    }
}

/// Builds the masks `tau_0, ..., tau_Q` that unfreeze the first `min(n, q ceil(n/Q))` qubits.
///
/// The declared parameters are `c = log2(Q + 1) / n`, `F = 1/Q` and the given `r`;
/// the result is audited and an audit failure is returned as an error.
pub fn build_tau_sequence(model: &Model, q_count: usize, r: usize) -> Result<CorrelationSet> {
    if q_count == 0 {
        return Err(Error::InvalidArgument("Q must be at least 1".into()));
    }
    if r == 0 {
        return Err(Error::InvalidArgument("R must be at least 1".into()));
    }
    let n = model.n();
    let window = n.div_ceil(q_count);
    let mut taus = Vec::with_capacity(q_count + 1);
    let mut q_sets = Vec::with_capacity(q_count + 1);
    for q in 0..=q_count {
        let opened = n.min(q * window);
        let unfrozen: Vec<bool> = (0..n).map(|i| i < opened).collect();
        taus.push(model.terms().iter().map(|t| t.support_meets(&unfrozen)).collect());
        q_sets.push(unfrozen.iter().map(|&b| !b).collect());
    }
    let set = CorrelationSet {
        taus,
        q_sets,
        c: ((q_count + 1) as f64).log2() / n as f64,
        f: 1.0 / q_count as f64,
        r,
    };
    let report = set.audit(model);
    if !report.passed() {
        return Err(Error::AuditFailure(format!("{report:?}")));
    }
    Ok(set)
}

/// Shared sparsity mask, base couplings and replica couplings along a correlation set.
#[derive(Clone, Debug)]
pub struct InterpolationPath {
    model: Arc<Model>,
    seed: u64,
    mask: Vec<bool>,
    base: Vec<f64>,
    replicas: Vec<Vec<f64>>,
    corr: CorrelationSet,
}

impl InterpolationPath {
    /// Draws `S` and `J^(0)` as in [`sample_instance`] and `replicas` further coupling vectors.
    pub fn new(model: &Arc<Model>, replicas: usize, corr: CorrelationSet, seed: u64) -> Result<Self> {
        if corr.taus.iter().any(|t| t.len() != model.num_terms()) {
            return Err(Error::LengthMismatch {
                expected: model.num_terms(),
                got: corr.taus.iter().map(Vec::len).find(|&l| l != model.num_terms()).unwrap_or(0),
            });
        }
        let base = sample_instance(model, seed);
        let replicas = (1..=replicas as u64)
            .map(|t| {
                let mut r = rng::stream(seed, t, tag::REPLICA);
                (0..model.num_terms()).map(|_| r.sample(StandardNormal)).collect()
            })
            .collect();
        Ok(Self {
            model: Arc::clone(model),
            seed,
            mask: base.mask().to_vec(),
            base: base.couplings().to_vec(),
            replicas,
            corr,
        })
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    /// Number of replicas `T`.
    pub fn replicas(&self) -> usize {
        self.replicas.len()
    }

    pub fn correlation_set(&self) -> &CorrelationSet {
        &self.corr
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn base_couplings(&self) -> &[f64] {
        &self.base
    }

    /// Couplings `J^(t)` of replica `t` in `1..=T`.
    pub fn replica_couplings(&self, t: usize) -> Result<&[f64]> {
        self.check_replica(t)?;
        Ok(&self.replicas[t - 1])
    }

    fn check_replica(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.replicas.len() {
            return Err(Error::InvalidArgument(format!("replica {t} outside 1..={}", self.replicas.len())));
        }
        Ok(())
    }
}

/// The instance `(1 - tau_q) S J^(0) + tau_q S J^(t)` of replica `t` at mask index `q`.
pub fn interpolated_instance(path: &InterpolationPath, t: usize, q: usize) -> Result<DisorderInstance> {
    path.check_replica(t)?;
    let tau = path
        .corr
        .taus
        .get(q)
        .ok_or_else(|| Error::InvalidArgument(format!("mask index {q} outside 0..{}", path.corr.len())))?;
    let couplings = tau
        .iter()
        .zip(&path.base)
        .zip(&path.replicas[t - 1])
        .map(|((&on, &j0), &jt)| if on { jt } else { j0 })
        .collect();
    DisorderInstance::from_parts(
        &path.model,
        rng::derive(path.seed, (t * path.corr.len() + q) as u64, tag::REPLICA),
        path.mask.clone(),
        couplings,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    fn kspin(n: usize, k: usize) -> Arc<Model> {
        Arc::new(Model::new(ModelSpec::KSpin { n, k, p: 1.0 }).unwrap())
    }

    #[test]
    fn endpoints_of_tau_sequence() {
        let m = kspin(4, 2);
        let c = build_tau_sequence(&m, 2, 1).unwrap();
        assert!(c.taus[0].iter().all(|&b| !b));
        assert!(c.taus[2].iter().all(|&b| b));
        assert_eq!(c.q_sets[1], vec![false, false, true, true]);
    }

    #[test]
    fn audit_holds_with_repetitions() {
        let m = kspin(5, 2);
        for q in 1..=5 {
            let c = build_tau_sequence(&m, q, 3).unwrap();
            assert!(c.audit(&m).passed());
        }
    }

    #[test]
    fn audit_reports_membership_violation() {
        let m = kspin(3, 2);
        let mut c = build_tau_sequence(&m, 1, 1).unwrap();
        c.taus[1][0] = false;
        assert_eq!(c.audit(&m).membership_violations, vec![(1, 0)]);
    }

    #[test]
    fn interpolation_endpoints() {
        let m = kspin(4, 2);
        let c = build_tau_sequence(&m, 2, 1).unwrap();
        let path = InterpolationPath::new(&m, 3, c, 11).unwrap();
        let a = interpolated_instance(&path, 1, 0).unwrap();
        let b = interpolated_instance(&path, 3, 0).unwrap();
        assert_eq!(a.couplings(), b.couplings());
        let full = interpolated_instance(&path, 2, 2).unwrap();
        assert_eq!(full.couplings(), path.replica_couplings(2).unwrap());
        assert!(interpolated_instance(&path, 4, 0).is_err());
        assert!(interpolated_instance(&path, 1, 3).is_err());
    }
}
