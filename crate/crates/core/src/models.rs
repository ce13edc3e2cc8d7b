//! Disordered spin-glass Hamiltonians, their sampling and hypergraph statistics.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Bernoulli, StandardNormal};
use rayon::prelude::*;

use crate::combin::{binomial, combinations, tuples};
use crate::error::{Error, Result};
use crate::ops::{hermitian_eigenvalues, lanczos_extremes, Extremes, PauliSum, C64};
use crate::pauli::{PauliString, DENSE_CAP};
use crate::rng::{self, tag};

/// Largest qubit count handled by the dense eigensolver path.
pub const DENSE_EIGEN_MAX: usize = 8;

/// Maximum number of rejection-sampling attempts for degree conditioning.
pub const REJECTION_CAP: usize = 10_000;

/// Which disordered model to build.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    /// Quantum k-spin model: every k-subset carries all `3^k` Pauli words.
    KSpin { n: usize, k: usize, p: f64 },
    /// (P,k) spin glass: every k-subset carries one word per global frame.
    PkSpinGlass {
        n: usize,
        k: usize,
        p: f64,
        frames: Vec<Vec<u8>>,
    },
    /// Explicit term list with a fixed normalization `z`.
    Generic {
        n: usize,
        p: f64,
        z: f64,
        terms: Vec<PauliString>,
    },
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        match self {
            ModelSpec::KSpin { n, .. } | ModelSpec::PkSpinGlass { n, .. } | ModelSpec::Generic { n, .. } => *n,
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            ModelSpec::KSpin { p, .. } | ModelSpec::PkSpinGlass { p, .. } | ModelSpec::Generic { p, .. } => *p,
        }
    }
}

fn frame_string(f: &[u8]) -> String {
    f.iter().map(|&c| ['?', 'X', 'Y', 'Z'][c as usize]).collect()
}

fn parse_frame(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|ch| match ch {
            'X' => Ok(1),
            'Y' => Ok(2),
            'Z' => Ok(3),
            _ => Err(Error::Parse(format!("bad frame letter {ch:?}"))),
        })
        .collect()
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::KSpin { n, k, p } => write!(f, "kspin n={n} k={k} p={p}"),
            ModelSpec::PkSpinGlass { n, k, p, frames } => {
                let fr: Vec<String> = frames.iter().map(|x| frame_string(x)).collect();
                write!(f, "pk n={n} k={k} p={p} frames={}", fr.join(","))
            }
            ModelSpec::Generic { n, p, z, terms } => {
                let t: Vec<String> = terms.iter().map(|x| x.to_string()).collect();
                write!(f, "generic n={n} p={p} z={z} terms={}", t.join(","))
            }
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let kind = parts.next().ok_or_else(|| Error::Parse("empty model spec".into()))?;
        let mut kv = HashMap::new();
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
            kv.insert(k, v);
        }
        let get = |key: &str| -> Result<&str> {
            kv.get(key)
                .copied()
                .ok_or_else(|| Error::Parse(format!("model spec missing {key}")))
        };
        let num = |key: &str| -> Result<usize> { get(key)?.parse().map_err(|_| Error::Parse(format!("bad {key}"))) };
        let real = |key: &str| -> Result<f64> { get(key)?.parse().map_err(|_| Error::Parse(format!("bad {key}"))) };
        match kind {
            "kspin" => Ok(ModelSpec::KSpin {
                n: num("n")?,
                k: num("k")?,
                p: real("p")?,
            }),
            "pk" => Ok(ModelSpec::PkSpinGlass {
                n: num("n")?,
                k: num("k")?,
                p: real("p")?,
                frames: get("frames")?.split(',').map(parse_frame).collect::<Result<_>>()?,
            }),
            "generic" => Ok(ModelSpec::Generic {
                n: num("n")?,
                p: real("p")?,
                z: real("z")?,
                terms: get("terms")?
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<_>>()?,
            }),
            other => Err(Error::Parse(format!("unknown model kind {other:?}"))),
        }
    }
}

/// A validated model together with its enumerated term table.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    terms: Vec<PauliString>,
    z: f64,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let p = spec.p();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("sparsity p = {p} outside [0,1]")));
        }
        let (terms, z) = match &spec {
            ModelSpec::KSpin { n, k, p } => {
                if *k == 0 || k > n {
                    return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
                }
                let frames = tuples(&[1, 2, 3], *k);
                let mut terms = Vec::new();
                for subset in combinations(*n, *k) {
                    for fr in &frames {
                        terms.push(PauliString::on_sites(*n, &subset, fr)?);
                    }
                }
                (terms, p * binomial(*n, *k))
            }
            ModelSpec::PkSpinGlass { n, k, p, frames } => {
                if *k == 0 || k > n {
                    return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
                }
                if frames.is_empty() {
                    return Err(Error::InvalidArgument("empty frame set".into()));
                }
                for f in frames {
                    if f.len() != *n {
                        return Err(Error::LengthMismatch {
                            expected: *n,
                            got: f.len(),
                        });
                    }
                    if f.iter().any(|b| !(1..=3).contains(b)) {
                        return Err(Error::InvalidArgument("frame entries must be in 1..=3".into()));
                    }
                }
                let mut terms = Vec::new();
                for subset in combinations(*n, *k) {
                    for f in frames {
                        let codes: Vec<u8> = subset.iter().map(|&i| f[i]).collect();
                        terms.push(PauliString::on_sites(*n, &subset, &codes)?);
                    }
                }
                (terms, frames.len() as f64 * p * binomial(*n, *k))
            }
            ModelSpec::Generic { n, z, terms, .. } => {
                for t in terms {
                    if t.n() != *n {
                        return Err(Error::LengthMismatch {
                            expected: *n,
                            got: t.n(),
                        });
                    }
                }
                (terms.clone(), *z)
            }
        };
        Ok(Self { spec, terms, z })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn p(&self) -> f64 {
        self.spec.p()
    }

    /// Number of candidate terms `D`.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Normalization `Z(p, n)`.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    /// Locality `k` for the structured models, maximal locality otherwise.
    pub fn k(&self) -> usize {
        match &self.spec {
            ModelSpec::KSpin { k, .. } | ModelSpec::PkSpinGlass { k, .. } => *k,
            ModelSpec::Generic { terms, .. } => terms.iter().map(|t| t.locality()).max().unwrap_or(0),
        }
    }

    /// Frame set of a (P,k) model.
    pub fn frames(&self) -> Option<&[Vec<u8>]> {
        match &self.spec {
            ModelSpec::PkSpinGlass { frames, .. } => Some(frames),
            _ => None,
        }
    }

    /// Largest fraction of agreeing entries over pairs of distinct frames.
    pub fn phi(&self) -> Option<f64> {
        let frames = self.frames()?;
        let n = self.n() as f64;
        let mut phi = 0.0f64;
        for a in 0..frames.len() {
            for b in a + 1..frames.len() {
                let agree = frames[a].iter().zip(&frames[b]).filter(|(x, y)| x == y).count();
                phi = phi.max(agree as f64 / n);
            }
        }
        Some(phi)
    }
}

/// One draw of the disorder `(S, J)` for a model.
#[derive(Clone, Debug)]
pub struct DisorderInstance {
    model: Arc<Model>,
    seed: u64,
    mask: Vec<bool>,
    couplings: Vec<f64>,
}

fn draw_mask(model: &Model, seed: u64, attempt: u64) -> Vec<bool> {
    let p = model.p();
    let mut r = rng::stream(seed, attempt, tag::MASK);
    let bern = Bernoulli::new(p).expect("p validated in Model::new");
    (0..model.num_terms()).map(|_| r.sample(bern)).collect()
}

fn draw_couplings(model: &Model, seed: u64, trial: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, trial, tag::COUPLING);
    (0..model.num_terms()).map(|_| r.sample(StandardNormal)).collect()
}

/// Samples `S` i.i.d. Bernoulli(p) and `J` i.i.d. standard normal from `seed`.
pub fn sample_instance(model: &Arc<Model>, seed: u64) -> DisorderInstance {
    DisorderInstance {
        model: Arc::clone(model),
        seed,
        mask: draw_mask(model, seed, 0),
        couplings: draw_couplings(model, seed, 0),
    }
}

/// Samples an instance whose realized maximum degree is at most `degree_cap`.
///
/// The mask is redrawn from successive streams until the degree condition holds.
pub fn sample_conditioned(model: &Arc<Model>, seed: u64, degree_cap: f64) -> Result<DisorderInstance> {
    for attempt in 0..REJECTION_CAP as u64 {
        let mask = draw_mask(model, seed, attempt);
        if max_degree(model, &mask) as f64 <= degree_cap {
            return Ok(DisorderInstance {
                model: Arc::clone(model),
                seed,
                mask,
                couplings: draw_couplings(model, seed, 0),
            });
        }
    }
    Err(Error::RejectionCap(REJECTION_CAP))
}

/// Maximum over qubits of the number of active terms touching the qubit.
pub fn max_degree(model: &Model, mask: &[bool]) -> usize {
    let mut deg = vec![0usize; model.n()];
    for (t, &on) in model.terms().iter().zip(mask) {
        if on {
            for i in t.support() {
                deg[i] += 1;
            }
        }
    }
    deg.into_iter().max().unwrap_or(0)
}

impl DisorderInstance {
    /// Assembles an instance from explicit disorder vectors.
    pub fn from_parts(model: &Arc<Model>, seed: u64, mask: Vec<bool>, couplings: Vec<f64>) -> Result<Self> {
        let d = model.num_terms();
        if mask.len() != d || couplings.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                got: mask.len().min(couplings.len()),
            });
        }
        Ok(Self {
            model: Arc::clone(model),
            seed,
            mask,
            couplings,
        })
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Coefficient `S_i J_i / sqrt(Z)` of candidate term `i`.
    pub fn coefficient(&self, i: usize) -> f64 {
        if self.mask[i] && self.model.z > 0.0 {
            self.couplings[i] / self.model.z.sqrt()
        } else {
            0.0
        }
    }

    /// The disorder vector `X = S * J`.
    pub fn disorder(&self) -> Vec<f64> {
        self.mask
            .iter()
            .zip(&self.couplings)
            .map(|(&s, &j)| if s { j } else { 0.0 })
            .collect()
    }

    /// `||X - Y||_1` between the disorder vectors of two instances.
    pub fn l1_distance(&self, other: &DisorderInstance) -> f64 {
        self.disorder()
            .iter()
            .zip(other.disorder())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Active terms with their coefficients, in term order.
    pub fn hamiltonian_terms(&self) -> Vec<(f64, PauliString)> {
        (0..self.model.num_terms())
            .filter(|&i| self.mask[i])
            .map(|i| (self.coefficient(i), self.model.terms[i].clone()))
            .collect()
    }

    /// Active terms borrowing the model's term table.
    pub fn hamiltonian_terms_ref(&self) -> Vec<(f64, &PauliString)> {
        (0..self.model.num_terms())
            .filter(|&i| self.mask[i])
            .map(|i| (self.coefficient(i), &self.model.terms[i]))
            .collect()
    }

    pub fn pauli_sum(&self) -> Result<PauliSum> {
        PauliSum::new(self.n(), &self.hamiltonian_terms())
    }

    /// Text record holding the spec, seed, run-length encoded mask and exact couplings.
    pub fn to_record(&self) -> String {
        let mut rle = Vec::new();
        let mut i = 0;
        while i < self.mask.len() {
            let v = self.mask[i];
            let mut j = i;
            while j < self.mask.len() && self.mask[j] == v {
                j += 1;
            }
            rle.push(format!("{}:{}", u8::from(v), j - i));
            i = j;
        }
        let js: Vec<String> = self
            .couplings
            .iter()
            .map(|x| format!("{:016x}", x.to_bits()))
            .collect();
        format!(
            "qogp-instance v1\nspec {}\nseed {}\nmask {}\ncouplings {}\n",
            self.model.spec,
            self.seed,
            rle.join(","),
            js.join(" ")
        )
    }

    /// Parses a record written by [`DisorderInstance::to_record`].
    pub fn from_record(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("qogp-instance v1") {
            return Err(Error::Parse("missing instance header".into()));
        }
        let mut spec = None;
        let mut seed = None;
        let mut mask = None;
        let mut couplings = None;
        for line in lines {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "spec" => spec = Some(rest.parse::<ModelSpec>()?),
                "seed" => seed = Some(rest.trim().parse::<u64>().map_err(|_| Error::Parse("bad seed".into()))?),
                "mask" => {
                    let mut m = Vec::new();
                    for run in rest.split(',').filter(|r| !r.is_empty()) {
                        let (v, len) = run
                            .split_once(':')
                            .ok_or_else(|| Error::Parse(format!("bad mask run {run:?}")))?;
                        let len: usize = len.parse().map_err(|_| Error::Parse("bad run length".into()))?;
                        m.extend(std::iter::repeat_n(v == "1", len));
                    }
                    mask = Some(m);
                }
                "couplings" => {
                    couplings = Some(
                        rest.split_whitespace()
                            .map(|h| {
                                u64::from_str_radix(h, 16)
                                    .map(f64::from_bits)
                                    .map_err(|_| Error::Parse(format!("bad coupling {h:?}")))
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "" => {}
                other => return Err(Error::Parse(format!("unknown record key {other:?}"))),
            }
        }
        let model = Arc::new(Model::new(spec.ok_or_else(|| Error::Parse("missing spec".into()))?)?);
        Self::from_parts(
            &model,
            seed.ok_or_else(|| Error::Parse("missing seed".into()))?,
            mask.ok_or_else(|| Error::Parse("missing mask".into()))?,
            couplings.ok_or_else(|| Error::Parse("missing couplings".into()))?,
        )
    }
}

/// Interaction-hypergraph statistics of a model and one of its instances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypergraphStats {
    /// Maximum number of active terms touching a single qubit.
    pub d_max_observed: usize,
    /// Maximum number of terms sharing one hyperedge at `p = 1`.
    pub r_dense: usize,
    /// Maximum number of distinct hyperedges touching one qubit at `p = 1`.
    pub d_dense: usize,
    /// `r p d + b sqrt(r p d (1 - p))`.
    pub d_max_formula: f64,
}

/// The degree formula `r p d + b sqrt(r p d (1 - p))`.
pub fn d_max_formula(r_dense: usize, d_dense: usize, p: f64, b: f64) -> f64 {
    let mean = r_dense as f64 * p * d_dense as f64;
    mean + b * (mean * (1.0 - p)).sqrt()
}

/// Counts `(r_dense, d_dense)` by exhaustive enumeration of the full term table.
pub fn dense_counts(model: &Model) -> (usize, usize) {
    let mut per_edge: HashMap<Vec<usize>, usize> = HashMap::new();
    for t in model.terms() {
        *per_edge.entry(t.support()).or_default() += 1;
    }
    let r_dense = per_edge.values().copied().max().unwrap_or(0);
    let mut deg = vec![0usize; model.n()];
    for edge in per_edge.keys() {
        for &i in edge {
            deg[i] += 1;
        }
    }
    (r_dense, deg.into_iter().max().unwrap_or(0))
}

pub fn hypergraph_stats(inst: &DisorderInstance, b: f64) -> HypergraphStats {
    let model = inst.model();
    let (r_dense, d_dense) = dense_counts(model);
    HypergraphStats {
        d_max_observed: max_degree(model, inst.mask()),
        r_dense,
        d_dense,
        d_max_formula: d_max_formula(r_dense, d_dense, model.p(), b),
    }
}

/// Dense Hamiltonian matrix.
pub fn dense_hamiltonian(inst: &DisorderInstance, cap: usize) -> Result<DMatrix<C64>> {
    if inst.n() > cap.min(DENSE_CAP) {
        return Err(Error::CapExceeded {
            what: "dense qubit",
            got: inst.n(),
            cap: cap.min(DENSE_CAP),
        });
    }
    inst.pauli_sum()?.dense()
}

/// Extreme eigenvalues to relative tolerance `1e-8`.
pub fn extreme_eigenvalue(inst: &DisorderInstance) -> Result<Extremes> {
    let h = inst.pauli_sum()?;
    if h.is_empty() {
        return Ok(Extremes {
            max: 0.0,
            min: 0.0,
            residual: 0.0,
        });
    }
    if inst.n() <= DENSE_EIGEN_MAX {
        let ev = hermitian_eigenvalues(&h.dense()?);
        Ok(Extremes {
            max: ev[ev.len() - 1],
            min: ev[0],
            residual: 0.0,
        })
    } else {
        lanczos_extremes(&h, 1e-8, inst.seed())
    }
}

/// Operator norm divided by `sqrt(n)`.
pub fn normalized_op_norm(inst: &DisorderInstance) -> Result<f64> {
    let e = extreme_eigenvalue(inst)?;
    Ok(e.max.abs().max(e.min.abs()) / (inst.n() as f64).sqrt())
}

/// Mean and sample standard deviation of `||H||_op / sqrt(n)` over trials.
pub fn self_averaging_experiment(model: &Arc<Model>, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| normalized_op_norm(&sample_instance(model, rng::derive(seed, t, tag::TRIAL))))
        .collect::<Result<_>>()?;
    Ok(mean_std(&values))
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kspin(n: usize, k: usize, p: f64) -> Arc<Model> {
        Arc::new(Model::new(ModelSpec::KSpin { n, k, p }).unwrap())
    }

    #[test]
    fn degenerate_sparsity() {
        let m = kspin(4, 2, 1.0);
        assert!(sample_instance(&m, 3).mask().iter().all(|&s| s));
        let m0 = kspin(4, 2, 0.0);
        let inst = sample_instance(&m0, 3);
        assert!(inst.hamiltonian_terms().is_empty());
        assert_eq!(extreme_eigenvalue(&inst).unwrap().max, 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = kspin(5, 2, 0.5);
        let a = sample_instance(&m, 11);
        let b = sample_instance(&m, 11);
        assert_eq!(a.mask(), b.mask());
        assert_eq!(a.couplings(), b.couplings());
        let c = sample_instance(&m, 12);
        assert_ne!(a.couplings(), c.couplings());
    }

    #[test]
    fn two_site_expansion() {
        let m = kspin(2, 2, 1.0);
        let inst = sample_instance(&m, 1);
        let terms = inst.hamiltonian_terms();
        assert_eq!(terms.len(), 9);
        for (i, (c, _)) in terms.iter().enumerate() {
            assert_eq!(*c, inst.couplings()[i]);
        }
        assert_eq!(terms[0].1.to_string(), "XX");
        assert_eq!(terms[1].1.to_string(), "XY");
        assert_eq!(terms[8].1.to_string(), "ZZ");
    }

    #[test]
    fn single_frame_terms_commute() {
        let spec = ModelSpec::PkSpinGlass {
            n: 4,
            k: 2,
            p: 1.0,
            frames: vec![vec![1, 2, 3, 1]],
        };
        let m = Arc::new(Model::new(spec).unwrap());
        let terms = sample_instance(&m, 0).hamiltonian_terms();
        for a in &terms {
            for b in &terms {
                assert!(a.1.commutes(&b.1).unwrap());
            }
        }
    }

    #[test]
    fn normalization_identity() {
        let m = kspin(5, 3, 0.4);
        let inst = sample_instance(&m, 9);
        let lhs: f64 = inst.hamiltonian_terms().iter().map(|(c, _)| c * c).sum::<f64>() * m.z();
        let rhs: f64 = inst.disorder().iter().map(|x| x * x).sum();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn dense_counts_match_formulas() {
        for n in 2..=8 {
            for k in 1..=3.min(n) {
                let (r, d) = dense_counts(&kspin(n, k, 1.0));
                assert_eq!(r, 3usize.pow(k as u32));
                assert_eq!(d as f64, binomial(n - 1, k - 1));
            }
        }
        let spec = ModelSpec::PkSpinGlass {
            n: 5,
            k: 2,
            p: 1.0,
            frames: vec![vec![1, 1, 1, 1, 1], vec![3, 3, 3, 3, 3], vec![2, 1, 3, 2, 1]],
        };
        let (r, d) = dense_counts(&Model::new(spec).unwrap());
        assert_eq!((r, d), (3, 4));
    }

    #[test]
    fn hermitian_and_extremes() {
        let m = kspin(4, 2, 0.7);
        let inst = sample_instance(&m, 5);
        let h = dense_hamiltonian(&inst, 12).unwrap();
        assert!((h.adjoint() - &h).norm() < 1e-12);
        let single = ModelSpec::Generic {
            n: 1,
            p: 1.0,
            z: 1.0,
            terms: vec!["Z".parse().unwrap()],
        };
        let model = Arc::new(Model::new(single).unwrap());
        let inst = DisorderInstance::from_parts(&model, 0, vec![true], vec![-0.75]).unwrap();
        let e = extreme_eigenvalue(&inst).unwrap();
        assert!((e.max - 0.75).abs() < 1e-14 && (e.min + 0.75).abs() < 1e-14);
    }

    #[test]
    fn lanczos_path_agrees_with_dense() {
        let m = kspin(9, 2, 0.5);
        let inst = sample_instance(&m, 2);
        let ev = hermitian_eigenvalues(&dense_hamiltonian(&inst, 12).unwrap());
        let e = extreme_eigenvalue(&inst).unwrap();
        assert!((e.max - ev[ev.len() - 1]).abs() <= 1e-8 * e.max.abs());
        assert!((e.min - ev[0]).abs() <= 1e-8 * e.min.abs());
    }

    #[test]
    fn record_round_trip() {
        let spec = ModelSpec::PkSpinGlass {
            n: 4,
            k: 2,
            p: 0.3,
            frames: vec![vec![1, 2, 3, 1], vec![3, 3, 1, 2]],
        };
        let m = Arc::new(Model::new(spec).unwrap());
        let inst = sample_instance(&m, 77);
        let back = DisorderInstance::from_record(&inst.to_record()).unwrap();
        assert_eq!(back.mask(), inst.mask());
        assert_eq!(back.couplings(), inst.couplings());
        assert_eq!(back.seed(), 77);
        assert_eq!(back.model().spec(), m.spec());
    }

    #[test]
    fn conditioning_respects_cap() {
        let m = kspin(6, 2, 0.5);
        let inst = sample_conditioned(&m, 4, 20.0).unwrap();
        assert!(hypergraph_stats(&inst, 3.0).d_max_observed <= 20);
        assert!(sample_conditioned(&m, 4, 0.0).is_err() || m.p() == 0.0);
    }

    #[test]
    fn zero_sparsity_self_averaging() {
        let m = kspin(4, 2, 0.0);
        assert_eq!(self_averaging_experiment(&m, 5, 1).unwrap(), (0.0, 0.0));
    }
}
