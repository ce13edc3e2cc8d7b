//! Statevector simulation of stable algorithm families and the stability harness.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{sample_conditioned, DisorderInstance, Model};
use crate::ops::{expm_multiply, hermitian_eigenvalues, norm, PauliSum, C64, ZERO};
use crate::pauli::{BasisAction, PauliString};
use crate::rng::{self, tag, Rng};
use crate::shadows::measure_in_frames;
use crate::wasserstein::{ot_distance, CostMode, DiagonalMixture};

/// Largest combined register (system plus ancilla or bath) simulated.
pub const DYNAMICS_CAP: usize = 14;

/// Largest combined register for which the reduced density matrix is formed exactly.
pub const EXACT_TRACE_CAP: usize = 12;

/// Initial product state of the system register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// `|0...0>`.
    Zero,
    /// `|+...+>`, the top eigenstate of a positive transverse field.
    Plus,
}

impl InitialState {
    fn vector(self, n: usize) -> Vec<C64> {
        let dim = 1usize << n;
        match self {
            InitialState::Zero => {
                let mut v = vec![ZERO; dim];
                v[0] = C64::new(1.0, 0.0);
                v
            }
            InitialState::Plus => vec![C64::new((dim as f64).sqrt().recip(), 0.0); dim],
        }
    }
}

/// Angle schedule of a layered algorithm.
///
/// `gammas[l]` holds one angle per cost block, or a single angle shared by all blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub betas: Vec<f64>,
    pub gammas: Vec<Vec<f64>>,
}

impl Schedule {
    /// A depth-`p` schedule with constant angles.
    pub fn constant(p: usize, beta: f64, gamma: f64) -> Self {
        Self {
            betas: vec![beta; p],
            gammas: vec![vec![gamma]; p],
        }
    }

    pub fn depth(&self) -> usize {
        self.betas.len()
    }

    fn gamma(&self, layer: usize, block: usize) -> f64 {
        let g = &self.gammas[layer];
        if g.len() == 1 {
            g[0]
        } else {
            g[block]
        }
    }

    fn validate(&self, blocks: usize) -> Result<()> {
        if self.gammas.len() != self.betas.len() {
            return Err(Error::LengthMismatch {
                expected: self.betas.len(),
                got: self.gammas.len(),
            });
        }
        for g in &self.gammas {
            if g.len() != 1 && g.len() != blocks {
                return Err(Error::LengthMismatch {
                    expected: blocks,
                    got: g.len(),
                });
            }
        }
        Ok(())
    }

    fn theta_inf(&self) -> f64 {
        self.betas
            .iter()
            .chain(self.gammas.iter().flatten())
            .fold(0.0f64, |a, x| a.max(x.abs()))
    }
}

/// One of the simulated algorithm families.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmSpec {
    /// Layers of commuting cost-block rotations followed by a mixing evolution.
    TrotterAnnealing {
        schedule: Schedule,
        /// Mixing Hamiltonian on the system register.
        mixer: Vec<(f64, PauliString)>,
        initial: InitialState,
    },
    /// Coupled evolution `exp(-i H_C (x) H_A)` with `H_A = t sum_i 2^i |1><1|_i`, then a
    /// Fourier-basis measurement of the ancillas.
    PhaseEstimation {
        ancillas: usize,
        t: f64,
        initial: InitialState,
    },
    /// Cost blocks, a system-bath interaction and a bath evolution per layer.
    Lindbladian {
        bath: usize,
        /// Bath Hamiltonian on the bath register.
        bath_terms: Vec<(f64, PauliString)>,
        /// Interaction on the joint register, system sites first.
        interaction: Vec<(f64, PauliString)>,
        schedule: Schedule,
        deltas: Vec<f64>,
        initial: InitialState,
    },
}

impl AlgorithmSpec {
    /// Depth-`p` annealing with a unit transverse field and `|+>` start.
    pub fn transverse_annealing(n: usize, schedule: Schedule) -> Self {
        let mixer = (0..n)
            .map(|i| (1.0, PauliString::on_sites(n, &[i], &[1]).expect("site in range")))
            .collect();
        AlgorithmSpec::TrotterAnnealing {
            schedule,
            mixer,
            initial: InitialState::Plus,
        }
    }

    /// Registers beyond the system that the algorithm uses.
    pub fn extra_qubits(&self) -> usize {
        match self {
            AlgorithmSpec::TrotterAnnealing { .. } => 0,
            AlgorithmSpec::PhaseEstimation { ancillas, .. } => *ancillas,
            AlgorithmSpec::Lindbladian { bath, .. } => *bath,
        }
    }
}

/// Partition of the model's term table into mutually commuting blocks.
///
/// (P,k) models use one block per frame; other models use greedy first-fit colouring.
pub fn cost_blocks(model: &Model) -> Vec<Vec<usize>> {
    if let Some(frames) = model.frames() {
        let f = frames.len();
        let mut blocks = vec![Vec::new(); f];
        for i in 0..model.num_terms() {
            blocks[i % f].push(i);
        }
        return blocks;
    }
    let terms = model.terms();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        let slot = blocks
            .iter()
            .position(|b| b.iter().all(|&j| terms[j].commutes(t).unwrap_or(false)));
        match slot {
            Some(s) => blocks[s].push(i),
            None => blocks.push(vec![i]),
        }
    }
    blocks
}

fn check_blocks(model: &Model, blocks: &[Vec<usize>]) -> Result<()> {
    let terms = model.terms();
    for (bi, b) in blocks.iter().enumerate() {
        for (x, &i) in b.iter().enumerate() {
            for &j in &b[x + 1..] {
                if !terms[i].commutes(&terms[j])? {
                    return Err(Error::NonCommutingBlock(bi));
                }
            }
        }
    }
    Ok(())
}

/// Applies `exp(-i theta P)` in place.
pub fn apply_rotation(v: &mut [C64], act: &BasisAction, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let mis = C64::new(0.0, -s);
    if act.flip == 0 {
        for (x, a) in v.iter_mut().enumerate() {
            *a *= c + mis * act.phase(x);
        }
        return;
    }
    for x in 0..v.len() {
        let y = x ^ act.flip;
        if x < y {
            let (a, b) = (v[x], v[y]);
            v[x] = a * c + mis * act.phase(y) * b;
            v[y] = b * c + mis * act.phase(x) * a;
        }
    }
}

fn mutually_commuting(terms: &[(f64, PauliString)]) -> bool {
    terms
        .iter()
        .enumerate()
        .all(|(i, a)| terms[i + 1..].iter().all(|b| a.1.commutes(&b.1).unwrap_or(false)))
}

/// `exp(-i scale H) v` for a Pauli sum, by exact rotations when the terms commute.
fn evolve(v: &mut Vec<C64>, n: usize, terms: &[(f64, PauliString)], scale: f64) -> Result<()> {
    if scale == 0.0 || terms.is_empty() {
        return Ok(());
    }
    if mutually_commuting(terms) {
        for (c, p) in terms {
            apply_rotation(v, &p.basis_action(), scale * c);
        }
    } else {
        let h = PauliSum::new(n, terms)?;
        *v = expm_multiply(&h, scale, v);
    }
    Ok(())
}

fn check_cap(total: usize) -> Result<()> {
    if total > DYNAMICS_CAP {
        return Err(Error::CapExceeded {
            what: "simulated qubit",
            got: total,
            cap: DYNAMICS_CAP,
        });
    }
    Ok(())
}

/// Extends a system term to the joint register by padding identities on the right.
fn pad(p: &PauliString, total: usize) -> Result<PauliString> {
    let mut codes = p.codes();
    codes.resize(total, 0);
    PauliString::new(&codes)
}

/// Cost-block rotations `prod_i exp(-i gamma_i H_C^(i) / sqrt n)` for one layer.
fn cost_layer(
    v: &mut [C64],
    inst: &DisorderInstance,
    blocks: &[Vec<usize>],
    actions: &[BasisAction],
    schedule: &Schedule,
    layer: usize,
) {
    let sqrt_n = (inst.n() as f64).sqrt();
    for (bi, block) in blocks.iter().enumerate() {
        let g = schedule.gamma(layer, bi) / sqrt_n;
        if g == 0.0 {
            continue;
        }
        for &t in block {
            let c = inst.coefficient(t);
            if c != 0.0 {
                apply_rotation(v, &actions[t], g * c);
            }
        }
    }
}

/// Output state of p-Trotterized annealing on the system register.
pub fn run_trotter_annealing(inst: &DisorderInstance, spec: &AlgorithmSpec) -> Result<Vec<C64>> {
    let AlgorithmSpec::TrotterAnnealing {
        schedule,
        mixer,
        initial,
    } = spec
    else {
        return Err(Error::InvalidArgument("not a Trotter annealing spec".into()));
    };
    let n = inst.n();
    check_cap(n)?;
    let model = inst.model();
    let blocks = cost_blocks(model);
    check_blocks(model, &blocks)?;
    schedule.validate(blocks.len())?;
    let actions: Vec<BasisAction> = model.terms().iter().map(|t| t.basis_action()).collect();
    let mut v = initial.vector(n);
    for l in 0..schedule.depth() {
        cost_layer(&mut v, inst, &blocks, &actions, schedule, l);
        evolve(&mut v, n, mixer, schedule.betas[l])?;
    }
    Ok(v)
}

/// Outcome of phase estimation: the ancilla reading and the normalized system branch.
#[derive(Clone, Debug)]
pub struct PhaseEstimate {
    pub outcome: usize,
    pub probability: f64,
    pub state: Vec<C64>,
}

/// Phase estimation with a Fourier-basis ancilla measurement, sampling one branch.
pub fn run_phase_estimation(inst: &DisorderInstance, spec: &AlgorithmSpec, rng: &mut Rng) -> Result<PhaseEstimate> {
    let AlgorithmSpec::PhaseEstimation { ancillas, t, initial } = spec else {
        return Err(Error::InvalidArgument("not a phase estimation spec".into()));
    };
    let n = inst.n();
    check_cap(n + ancillas)?;
    let psi0 = initial.vector(n);
    let m = 1usize << ancillas;
    if *ancillas == 0 {
        return Ok(PhaseEstimate {
            outcome: 0,
            probability: 1.0,
            state: psi0,
        });
    }
    let h = inst.pauli_sum()?;
    let mut evolved = Vec::with_capacity(m);
    evolved.push(psi0.clone());
    for a in 1..m {
        let next = expm_multiply(&h, *t, &evolved[a - 1]);
        evolved.push(next);
    }
    let branches: Vec<Vec<C64>> = (0..m)
        .map(|k| {
            let mut b = vec![ZERO; psi0.len()];
            for (a, e) in evolved.iter().enumerate() {
                let ph = C64::from_polar(1.0 / m as f64, 2.0 * std::f64::consts::PI * (a * k) as f64 / m as f64);
                for (bi, ei) in b.iter_mut().zip(e) {
                    *bi += ph * ei;
                }
            }
            b
        })
        .collect();
    let probs: Vec<f64> = branches.iter().map(|b| norm(b).powi(2)).collect();
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut outcome = m - 1;
    for (k, p) in probs.iter().enumerate() {
        if u < *p {
            outcome = k;
            break;
        }
        u -= p;
    }
    let s = probs[outcome].sqrt();
    Ok(PhaseEstimate {
        outcome,
        probability: probs[outcome] / total,
        state: branches[outcome].iter().map(|x| x / s).collect(),
    })
}

/// Joint system-bath pure state produced by a Lindbladian evolution algorithm.
pub fn run_lindbladian_joint(inst: &DisorderInstance, spec: &AlgorithmSpec) -> Result<Vec<C64>> {
    let AlgorithmSpec::Lindbladian {
        bath,
        bath_terms,
        interaction,
        schedule,
        deltas,
        initial,
    } = spec
    else {
        return Err(Error::InvalidArgument("not a Lindbladian spec".into()));
    };
    let n = inst.n();
    let total = n + bath;
    check_cap(total)?;
    if deltas.len() != schedule.depth() {
        return Err(Error::LengthMismatch {
            expected: schedule.depth(),
            got: deltas.len(),
        });
    }
    for (_, p) in interaction {
        if p.n() != total {
            return Err(Error::LengthMismatch { expected: total, got: p.n() });
        }
        if p.locality() > 2 {
            return Err(Error::InvalidArgument(format!("interaction term {p} is not 2-local")));
        }
    }
    let bath_joint: Vec<(f64, PauliString)> = bath_terms
        .iter()
        .map(|(c, p)| {
            if p.n() != *bath {
                return Err(Error::LengthMismatch { expected: *bath, got: p.n() });
            }
            let mut codes = vec![0u8; n];
            codes.extend(p.codes());
            Ok((*c, PauliString::new(&codes)?))
        })
        .collect::<Result<_>>()?;
    let model = inst.model();
    let blocks = cost_blocks(model);
    check_blocks(model, &blocks)?;
    schedule.validate(blocks.len())?;
    let actions: Vec<BasisAction> = model
        .terms()
        .iter()
        .map(|t| pad(t, total).map(|p| p.basis_action()))
        .collect::<Result<_>>()?;
    let sys = initial.vector(n);
    let bath_dim = 1usize << bath;
    let mut v = vec![ZERO; 1usize << total];
    for (x, a) in sys.iter().enumerate() {
        v[x * bath_dim] = *a;
    }
    for l in 0..schedule.depth() {
        cost_layer(&mut v, inst, &blocks, &actions, schedule, l);
        evolve(&mut v, total, interaction, deltas[l])?;
        evolve(&mut v, total, &bath_joint, schedule.betas[l])?;
    }
    Ok(v)
}

/// System-register output of a Lindbladian evolution algorithm.
#[derive(Clone, Debug)]
pub enum SystemState {
    /// Exact reduced density matrix.
    Density(DMatrix<C64>),
    /// A pure system branch from measuring the bath in the computational basis.
    Branch(Vec<C64>),
}

/// Partial trace over the trailing `bath` qubits of a joint pure state.
pub fn trace_out_tail(joint: &[C64], bath: usize) -> DMatrix<C64> {
    let bath_dim = 1usize << bath;
    let sys_dim = joint.len() / bath_dim;
    DMatrix::from_fn(sys_dim, sys_dim, |a, b| {
        (0..bath_dim)
            .map(|e| joint[a * bath_dim + e] * joint[b * bath_dim + e].conj())
            .sum()
    })
}

/// Runs a Lindbladian evolution algorithm and traces out the bath.
pub fn run_lindbladian(inst: &DisorderInstance, spec: &AlgorithmSpec, rng: &mut Rng) -> Result<SystemState> {
    let joint = run_lindbladian_joint(inst, spec)?;
    let bath = spec.extra_qubits();
    if inst.n() + bath <= EXACT_TRACE_CAP {
        return Ok(SystemState::Density(trace_out_tail(&joint, bath)));
    }
    let bath_dim = 1usize << bath;
    let sys_dim = joint.len() / bath_dim;
    let weights: Vec<f64> = (0..bath_dim)
        .map(|e| (0..sys_dim).map(|a| joint[a * bath_dim + e].norm_sqr()).sum())
        .collect();
    let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut pick = bath_dim - 1;
    for (e, w) in weights.iter().enumerate() {
        if u < *w {
            pick = e;
            break;
        }
        u -= w;
    }
    let s = weights[pick].sqrt();
    Ok(SystemState::Branch(
        (0..sys_dim).map(|a| joint[a * bath_dim + pick] / s).collect(),
    ))
}

/// A pure register whose leading `n` qubits hold the algorithm output.
///
/// Shadows of the leading qubits follow the law of the reduced output state.
pub fn run_algorithm(inst: &DisorderInstance, spec: &AlgorithmSpec, seed: u64) -> Result<Vec<C64>> {
    match spec {
        AlgorithmSpec::TrotterAnnealing { .. } => run_trotter_annealing(inst, spec),
        AlgorithmSpec::PhaseEstimation { .. } => {
            let mut r = rng::stream(seed, 0, tag::ALGORITHM);
            Ok(run_phase_estimation(inst, spec, &mut r)?.state)
        }
        AlgorithmSpec::Lindbladian { .. } => run_lindbladian_joint(inst, spec),
    }
}

/// Geometry entering the Lipschitz formulas.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Geometry {
    /// Locality `d` of the cost terms and the mixing or bath Hamiltonian.
    pub d: usize,
    /// Degree cap of the interaction hypergraph.
    pub degree: f64,
    /// Number of commuting cost blocks `K`.
    pub blocks: usize,
    pub n: usize,
    /// Commutator Lipschitz constant, needed for phase estimation.
    pub l_tilde: Option<f64>,
}

/// Lipschitz constant of the stability guarantee for each algorithm family.
pub fn lipschitz_bound(spec: &AlgorithmSpec, g: &Geometry) -> Result<f64> {
    if g.n == 0 {
        return Err(Error::Missing("geometry n".into()));
    }
    let n = g.n as f64;
    match spec {
        AlgorithmSpec::TrotterAnnealing { schedule, .. } => {
            let base = 1.5 * g.d as f64 * g.degree;
            let exp = ((g.blocks + 1) * schedule.depth()) as i32;
            Ok(schedule.theta_inf() / (4.0 * (2.0 * n).sqrt()) * base.powi(exp))
        }
        AlgorithmSpec::Lindbladian { schedule, deltas, .. } => {
            let theta = deltas.iter().fold(schedule.theta_inf(), |a, x| a.max(x.abs()));
            let base = 1.5 * g.d.max(2) as f64 * g.degree;
            let exp = ((g.blocks + 2) * schedule.depth()) as i32;
            Ok(theta / (4.0 * (2.0 * n).sqrt()) * base.powi(exp))
        }
        AlgorithmSpec::PhaseEstimation { ancillas, t, .. } => {
            let l = g.l_tilde.ok_or_else(|| Error::Missing("commutator Lipschitz constant".into()))?;
            let a = *ancillas as f64;
            Ok(0.75 * a * t * (2f64.powf(a - 2.5) + 3.0 * 4f64.powf(a) * t * l * n.powf(1.5)))
        }
    }
}

/// `(Nielsen upper bound, Wasserstein complexity upper bound)` for a rotation generator.
pub fn complexity_bounds(coefs: &[f64]) -> (f64, f64) {
    let l1: f64 = coefs.iter().map(|c| c.abs()).sum();
    (l1, l1 / (4.0 * 2f64.sqrt()))
}

/// `||[H1, H2]||_op` by dense diagonalization of `i[H1, H2]`.
pub fn commutator_opnorm(h1: &PauliSum, h2: &PauliSum) -> Result<f64> {
    let a = h1.dense()?;
    let b = h2.dense()?;
    let c = (&a * &b - &b * &a) * C64::new(0.0, 1.0);
    let ev = hermitian_eigenvalues(&c);
    Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
}

/// `exp(-i t H)` for a dense Hermitian matrix.
pub fn hermitian_expm(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let d = h.nrows();
    let mut out = DMatrix::from_element(d, d, ZERO);
    for k in 0..d {
        let v = eig.eigenvectors.column(k);
        out += v * v.adjoint() * C64::from_polar(1.0, -t * eig.eigenvalues[k]);
    }
    out
}

/// A disorder pair `(X, Y)` sharing the mask and the couplings frozen inside `Q`.
#[derive(Clone, Debug)]
pub struct CorrelatedPair {
    pub x: DisorderInstance,
    pub y: DisorderInstance,
    /// Membership of each qubit in the preserved set `Q`.
    pub preserved: Vec<bool>,
    /// Terms whose coupling was redrawn for `Y`.
    pub resampled: Vec<bool>,
    pub kappa: f64,
    pub degree_cap: f64,
}

impl CorrelatedPair {
    /// `||X - Y||_1`.
    pub fn l1_diff(&self) -> f64 {
        self.x.l1_distance(&self.y)
    }
}

/// Samples a correlated pair with `Q` the first `floor(kappa n)` qubits.
pub fn sample_correlated_pair(model: &Arc<Model>, kappa: f64, degree_cap: f64, seed: u64) -> Result<CorrelatedPair> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} outside [0,1]")));
    }
    let x = sample_conditioned(model, seed, degree_cap)?;
    let n = model.n();
    let keep = ((kappa * n as f64) + 1e-12).floor() as usize;
    let preserved: Vec<bool> = (0..n).map(|i| i < keep.min(n)).collect();
    let resampled: Vec<bool> = model.terms().iter().map(|t| !t.support_within(&preserved)).collect();
    let mut r = rng::stream(seed, 0, tag::PAIR);
    let fresh: Vec<f64> = (0..model.num_terms())
        .map(|_| r.sample(rand_distr::StandardNormal))
        .collect();
    let couplings: Vec<f64> = x
        .couplings()
        .iter()
        .zip(&fresh)
        .zip(&resampled)
        .map(|((&old, &new), &re)| if re { new } else { old })
        .collect();
    let y = DisorderInstance::from_parts(model, seed, x.mask().to_vec(), couplings)?;
    Ok(CorrelatedPair {
        x,
        y,
        preserved,
        resampled,
        kappa,
        degree_cap,
    })
}

/// Settings for [`stability_experiment`].
#[derive(Clone, Debug)]
pub struct StabilityConfig {
    pub kappas: Vec<f64>,
    pub trials: usize,
    /// Shadows collected from each output.
    pub shadows: usize,
    pub degree_cap: f64,
    pub mode: CostMode,
    pub seed: u64,
    /// Reference line `(f, L)`; defaults to `(sqrt n, lipschitz_bound)`.
    pub line: Option<(f64, f64)>,
}

/// One correlated pair of the stability experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityRow {
    pub kappa: f64,
    pub trial: usize,
    pub l1_diff: f64,
    pub w1_alpha1: f64,
    pub w2_lower: f64,
    pub bound: f64,
    pub violated: bool,
}

/// Per-`kappa` least-squares line and violation rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityFit {
    pub kappa: f64,
    pub f: f64,
    pub l: f64,
    pub p_st: f64,
}

/// Least squares `y = f + L x` with the intercept constrained to be nonnegative.
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (my.max(0.0), 0.0);
    }
    let l = sxy / sxx;
    let f = my - l * mx;
    if f >= 0.0 {
        return (f, l);
    }
    let sxx0: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy0: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (0.0, sxy0 / sxx0)
}

/// Shadows of the leading `n` qubits with one stream per repetition.
fn collect_shadows(state: &[C64], n: usize, count: usize, seed: u64) -> Result<DiagonalMixture> {
    let mut out = Vec::with_capacity(count);
    for r in 0..count as u64 {
        let mut rg = rng::stream(seed, r, tag::SHADOW);
        let frames: Vec<u8> = (0..n).map(|_| rg.random_range(1..=3u8)).collect();
        out.push(measure_in_frames(state, &frames, &mut rg)?);
    }
    DiagonalMixture::empirical(&out)
}

/// Distances between shadow mixtures of the two outputs of one correlated pair.
///
/// Both runs share the algorithm seed and every shadow stream.
pub fn pair_distance(
    pair: &CorrelatedPair,
    alg: &AlgorithmSpec,
    shadows: usize,
    mode: CostMode,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = pair.x.n();
    let alg_seed = rng::derive(seed, 0, tag::ALGORITHM);
    let shadow_seed = rng::derive(seed, 0, tag::SHADOW);
    let ox = run_algorithm(&pair.x, alg, alg_seed)?;
    let oy = run_algorithm(&pair.y, alg, alg_seed)?;
    let mx = collect_shadows(&ox, n, shadows, shadow_seed)?;
    let my = collect_shadows(&oy, n, shadows, shadow_seed)?;
    if mx == my {
        return Ok((0.0, 0.0));
    }
    let w1 = ot_distance(&mx, &my, mode, 1.0)?.lower;
    let w2 = ot_distance(&mx, &my, mode, 2.0)?.lower;
    Ok((w1, w2))
}

/// Runs the stability experiment; rows are ordered by `(kappa, trial)`.
pub fn stability_experiment(
    alg: &AlgorithmSpec,
    model: &Arc<Model>,
    cfg: &StabilityConfig,
) -> Result<(Vec<StabilityRow>, Vec<StabilityFit>)> {
    let n = model.n();
    let (f_ref, l_ref) = match cfg.line {
        Some(line) => line,
        None => {
            let d = model.k().max(mixer_locality(alg));
            let geometry = Geometry {
                d,
                degree: cfg.degree_cap,
                blocks: cost_blocks(model).len(),
                n,
                l_tilde: None,
            };
            ((n as f64).sqrt(), lipschitz_bound(alg, &geometry)?)
        }
    };
    let jobs: Vec<(usize, usize)> = (0..cfg.kappas.len())
        .flat_map(|k| (0..cfg.trials).map(move |t| (k, t)))
        .collect();
    let rows: Vec<StabilityRow> = jobs
        .par_iter()
        .map(|&(ki, t)| {
            let kappa = cfg.kappas[ki];
            let pair_seed = rng::derive(cfg.seed, (ki * cfg.trials + t) as u64, tag::PAIR);
            let pair = sample_correlated_pair(model, kappa, cfg.degree_cap, pair_seed)?;
            let l1 = pair.l1_diff();
            let (w1, w2) = pair_distance(&pair, alg, cfg.shadows, cfg.mode, pair_seed)?;
            let bound = f_ref + l_ref * l1;
            Ok(StabilityRow {
                kappa,
                trial: t,
                l1_diff: l1,
                w1_alpha1: w1,
                w2_lower: w2,
                bound,
                violated: w1 > bound,
            })
        })
        .collect::<Result<_>>()?;
    let fits = cfg
        .kappas
        .iter()
        .map(|&kappa| {
            let sel: Vec<&StabilityRow> = rows.iter().filter(|r| r.kappa == kappa).collect();
            let pts: Vec<(f64, f64)> = sel.iter().map(|r| (r.l1_diff, r.w1_alpha1)).collect();
            let (f, l) = fit_line(&pts);
            let p_st = sel.iter().filter(|r| r.violated).count() as f64 / sel.len().max(1) as f64;
            StabilityFit { kappa, f, l, p_st }
        })
        .collect();
    Ok((rows, fits))
}

/// Locality of the mixing or bath Hamiltonian, zero for phase estimation.
pub fn mixer_locality(alg: &AlgorithmSpec) -> usize {
    match alg {
        AlgorithmSpec::TrotterAnnealing { mixer, .. } => mixer.iter().map(|t| t.1.locality()).max().unwrap_or(0),
        AlgorithmSpec::Lindbladian { bath_terms, .. } => bath_terms.iter().map(|t| t.1.locality()).max().unwrap_or(0),
        AlgorithmSpec::PhaseEstimation { .. } => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sample_instance, ModelSpec};

    fn kspin(n: usize, k: usize, p: f64) -> Arc<Model> {
        Arc::new(Model::new(ModelSpec::KSpin { n, k, p }).unwrap())
    }

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
    fn zero_angles_keep_initial_state() {
        let m = kspin(4, 2, 1.0);
        let inst = sample_instance(&m, 1);
        let alg = AlgorithmSpec::transverse_annealing(4, Schedule::constant(2, 0.0, 0.0));
        let v = run_trotter_annealing(&inst, &alg).unwrap();
        let plus = InitialState::Plus.vector(4);
        assert!(v.iter().zip(&plus).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn single_qubit_layer_matches_closed_form() {
        let inst = single_z(0.8);
        let (beta, gamma) = (0.3, 0.7);
        let alg = AlgorithmSpec::transverse_annealing(1, Schedule::constant(1, beta, gamma));
        let v = run_trotter_annealing(&inst, &alg).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let th = gamma * 0.8;
        let a0 = C64::from_polar(s, -th);
        let a1 = C64::from_polar(s, th);
        let (c, sn) = (beta.cos(), beta.sin());
        let i = C64::new(0.0, 1.0);
        let e0 = a0 * c - i * sn * a1;
        let e1 = a1 * c - i * sn * a0;
        assert!((v[0] - e0).norm() < 1e-12 && (v[1] - e1).norm() < 1e-12);
    }

    #[test]
    fn unitarity_and_block_order() {
        let m = kspin(5, 2, 0.8);
        let inst = sample_instance(&m, 3);
        let alg = AlgorithmSpec::transverse_annealing(5, Schedule::constant(2, 0.4, 1.3));
        let v = run_trotter_annealing(&inst, &alg).unwrap();
        assert!((norm(&v) - 1.0).abs() < 1e-10);
        let blocks = cost_blocks(&m);
        check_blocks(&m, &blocks).unwrap();
        let actions: Vec<BasisAction> = m.terms().iter().map(|t| t.basis_action()).collect();
        let reversed: Vec<Vec<usize>> = blocks.iter().map(|b| b.iter().rev().copied().collect()).collect();
        let AlgorithmSpec::TrotterAnnealing { schedule, mixer, .. } = &alg else { unreachable!() };
        let mut w = InitialState::Plus.vector(5);
        for l in 0..2 {
            cost_layer(&mut w, &inst, &reversed, &actions, schedule, l);
            evolve(&mut w, 5, mixer, schedule.betas[l]).unwrap();
        }
        assert!(v.iter().zip(&w).all(|(a, b)| (a - b).norm() < 1e-10));
    }

    #[test]
    fn pk_blocks_are_frames() {
        let spec = ModelSpec::PkSpinGlass {
            n: 4,
            k: 2,
            p: 1.0,
            frames: vec![vec![1, 2, 3, 1], vec![3, 3, 1, 2]],
        };
        let m = Model::new(spec).unwrap();
        let blocks = cost_blocks(&m);
        assert_eq!(blocks.len(), 2);
        check_blocks(&m, &blocks).unwrap();
    }

    #[test]
    fn phase_estimation_cases() {
        let inst = single_z(1.0);
        let none = AlgorithmSpec::PhaseEstimation {
            ancillas: 0,
            t: 1.0,
            initial: InitialState::Zero,
        };
        let mut r = rng::stream(0, 0, tag::ALGORITHM);
        let out = run_phase_estimation(&inst, &none, &mut r).unwrap();
        assert_eq!(out.state, InitialState::Zero.vector(1));
        let alg = AlgorithmSpec::PhaseEstimation {
            ancillas: 4,
            t: 0.9,
            initial: InitialState::Zero,
        };
        let out = run_phase_estimation(&inst, &alg, &mut r).unwrap();
        assert!((out.state[0].norm() - 1.0).abs() < 1e-10 && out.state[1].norm() < 1e-10);
    }

    #[test]
    fn lindbladian_cases() {
        let m = kspin(3, 2, 1.0);
        let inst = sample_instance(&m, 4);
        let schedule = Schedule::constant(2, 0.5, 0.9);
        let lind = AlgorithmSpec::Lindbladian {
            bath: 1,
            bath_terms: vec![(1.0, "X".parse().unwrap())],
            interaction: vec![],
            schedule: schedule.clone(),
            deltas: vec![0.0; 2],
            initial: InitialState::Plus,
        };
        let trot = AlgorithmSpec::TrotterAnnealing {
            schedule,
            mixer: vec![],
            initial: InitialState::Plus,
        };
        let mut r = rng::stream(0, 0, tag::ALGORITHM);
        let SystemState::Density(rho) = run_lindbladian(&inst, &lind, &mut r).unwrap() else { panic!() };
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        let v = run_trotter_annealing(&inst, &trot).unwrap();
        let col = DMatrix::from_column_slice(v.len(), 1, &v);
        assert!((rho - &col * col.adjoint()).norm() < 1e-10);
    }

    #[test]
    fn lipschitz_examples() {
        let alg = AlgorithmSpec::transverse_annealing(4, Schedule::constant(0, 0.0, 0.0));
        let g = Geometry {
            d: 2,
            degree: 9.0,
            blocks: 3,
            n: 4,
            l_tilde: None,
        };
        let AlgorithmSpec::TrotterAnnealing { mixer, initial, .. } = alg else { unreachable!() };
        let alg = AlgorithmSpec::TrotterAnnealing {
            schedule: Schedule {
                betas: vec![],
                gammas: vec![],
            },
            mixer,
            initial,
        };
        assert_eq!(lipschitz_bound(&alg, &g).unwrap(), 0.0);
        let pe = AlgorithmSpec::PhaseEstimation {
            ancillas: 1,
            t: 1.0,
            initial: InitialState::Zero,
        };
        let g_pe = Geometry { l_tilde: Some(0.0), ..g };
        assert!((lipschitz_bound(&pe, &g_pe).unwrap() - 0.75 * 2f64.powf(-1.5)).abs() < 1e-15);
        assert!(matches!(lipschitz_bound(&pe, &g), Err(Error::Missing(_))));
    }

    #[test]
    fn commutator_examples() {
        let x = PauliSum::new(1, &[(1.0, "X".parse().unwrap())]).unwrap();
        let z = PauliSum::new(1, &[(1.0, "Z".parse().unwrap())]).unwrap();
        assert!((commutator_opnorm(&x, &z).unwrap() - 2.0).abs() < 1e-12);
        assert!(commutator_opnorm(&x, &x).unwrap() < 1e-12);
        assert_eq!(complexity_bounds(&[]), (0.0, 0.0));
        let (nc, wc) = complexity_bounds(&[-0.3]);
        assert!((nc - 0.3).abs() < 1e-15 && (wc - 0.3 / (4.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn correlated_pair_structure() {
        let m = kspin(5, 2, 1.0);
        let full = sample_correlated_pair(&m, 1.0, 1e9, 7).unwrap();
        assert_eq!(full.x.couplings(), full.y.couplings());
        let half = sample_correlated_pair(&m, 0.5, 1e9, 7).unwrap();
        for (i, t) in m.terms().iter().enumerate() {
            let inside = t.support().iter().all(|&s| s < 2);
            assert_eq!(half.resampled[i], !inside);
            assert_eq!(half.x.couplings()[i] == half.y.couplings()[i], inside);
        }
        assert_eq!(half.x.mask(), half.y.mask());
    }

    #[test]
    fn identical_inputs_have_zero_distance() {
        let m = kspin(4, 2, 1.0);
        let pair = sample_correlated_pair(&m, 1.0, 1e9, 2).unwrap();
        let alg = AlgorithmSpec::transverse_annealing(4, Schedule::constant(1, 0.3, 0.8));
        let (w1, w2) = pair_distance(&pair, &alg, 50, CostMode::hamming(), 9).unwrap();
        assert_eq!((w1, w2), (0.0, 0.0));
    }

    #[test]
    fn line_fit() {
        let pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)];
        let (f, l) = fit_line(&pts);
        assert!((f - 1.0).abs() < 1e-12 && (l - 2.0).abs() < 1e-12);
        let (f, _) = fit_line(&[(1.0, 0.0), (2.0, 3.0)]);
        assert_eq!(f, 0.0);
    }
}
