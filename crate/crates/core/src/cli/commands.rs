//! Runners behind each [`Command`].

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng as _;
use rayon::prelude::*;

use super::{num, Artifact, Command, ExperimentConfig, RunOptions, RunOutput, Section, Table};
use crate::dynamics::{
    cost_blocks, lipschitz_bound, mixer_locality, run_algorithm, stability_experiment, AlgorithmSpec, Geometry,
    InitialState, Schedule, StabilityConfig,
};
use crate::error::{Error, Result};
use crate::models::{dense_counts, d_max_formula, hypergraph_stats, normalized_op_norm, sample_instance, Model, ModelSpec};
use crate::ogp::exponents::{sample_theorem3_tuple, sample_theorem4_tuple, upsilon};
use crate::ogp::feasibility::DEFAULT_SLACK;
use crate::ogp::graph::ADMISSIBILITY_CAP;
use crate::ogp::{
    build_tau_sequence, corollary_chain, feasibility_theorem2, find_monochromatic_clique, interpolated_instance,
    is_m_admissible, overlap_graph, psi_chaos_kspin, psi_chaos_pk, psi_mqogp_pk, s_set_scan, ChainInput,
    CorrelationSet, EStar, ExponentParams, FeasibilityReport, InterpolationPath, ScanConfig,
};
use crate::pauli::{PauliString, ShadowState};
use crate::rng::{self, tag};
use crate::shadows::{
    energy_estimate, estimator_quality, haar_state, sample_shadow, shadow_norm, EstimatorSpec, NormMethod,
    QualityConfig, EXACT_NORM_CAP, SUP_BOUND_CAP,
};
use crate::wasserstein::{
    exact_w1_small, ot_distance, product_w, trace_norm_sandwich, CostKind, CostMode, DiagonalMixture,
};

/// Solver tolerance of the exact W1 column in `distance`.
const W1_TOL: f64 = 1e-7;

/// Executes the configured command.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    match config.command {
        Command::Sample => cmd_sample(config, opts),
        Command::Estimate => cmd_estimate(config, opts),
        Command::Distance => cmd_distance(config, opts),
        Command::Stability => cmd_stability(config, opts),
        Command::OgpScan => cmd_ogp_scan(config, opts),
        Command::Graph => cmd_overlap_graph(config, opts),
        Command::Exponent => cmd_exponent(config),
        Command::Certify => cmd_certify(config),
    }
}

fn model_from(config: &ExperimentConfig) -> Result<Arc<Model>> {
    let spec: ModelSpec = config.section("model")?.str_req("spec")?.parse()?;
    Ok(Arc::new(Model::new(spec)?))
}

fn estimator_from(config: &ExperimentConfig, model: &Model) -> Result<EstimatorSpec> {
    let s = config.section("estimator")?;
    let est = match s.str_or("kind", "auto")? {
        "auto" => EstimatorSpec::for_model(model),
        "pauli" => EstimatorSpec::PauliUniform {
            k: s.usize_or("k", model.k())?,
        },
        "derandomized" => EstimatorSpec::Derandomized {
            frames: model
                .frames()
                .ok_or_else(|| Error::IncompatibleEstimator("derandomized shadows need a (P,k) model".into()))?
                .to_vec(),
        },
        other => return Err(Error::Parse(format!("unknown estimator kind {other:?}"))),
    };
    est.check_compatible(model)?;
    Ok(est)
}

fn cost_mode_from(s: &Section<'_>) -> Result<CostMode> {
    let kind: CostKind = s.str_or("mode", "hamming6")?.parse()?;
    CostMode::new(kind, s.f64_or("order", 1.0)?)
}

fn check_dense(qubits: usize, opts: &RunOptions) -> Result<()> {
    if qubits > opts.dense_cap {
        return Err(Error::CapExceeded {
            what: "dense qubit",
            got: qubits,
            cap: opts.dense_cap,
        });
    }
    Ok(())
}

/// The simulated algorithm and, for phase estimation, the commutator Lipschitz constant.
fn algorithm_from(config: &ExperimentConfig, n: usize) -> Result<(AlgorithmSpec, Option<f64>)> {
    let s = config.section("algorithm")?;
    let depth = s.usize_or("depth", 1)?;
    let schedule = Schedule::constant(depth, s.f64_or("beta", 0.3)?, s.f64_or("gamma", 0.2)?);
    let spec = match s.str_or("kind", "trotter")? {
        "trotter" => AlgorithmSpec::transverse_annealing(n, schedule),
        "phase" => AlgorithmSpec::PhaseEstimation {
            ancillas: s.usize_or("ancillas", 2)?,
            t: s.f64_or("t", 0.1)?,
            initial: InitialState::Plus,
        },
        "lindblad" => {
            let bath = s.usize_or("bath", 1)?;
            if bath == 0 {
                return Err(Error::InvalidArgument("lindblad needs at least one bath qubit".into()));
            }
            let bath_terms = (0..bath)
                .map(|j| Ok((1.0, PauliString::on_sites(bath, &[j], &[1])?)))
                .collect::<Result<_>>()?;
            let interaction = (0..n)
                .map(|i| Ok((1.0, PauliString::on_sites(n + bath, &[i, n + i % bath], &[1, 1])?)))
                .collect::<Result<_>>()?;
            AlgorithmSpec::Lindbladian {
                bath,
                bath_terms,
                interaction,
                deltas: vec![s.f64_or("delta", 0.1)?; depth],
                schedule,
                initial: InitialState::Plus,
            }
        }
        other => return Err(Error::Parse(format!("unknown algorithm kind {other:?}"))),
    };
    Ok((spec, s.opt_f64("l_tilde")?))
}

/// The correlation set selected by `run.q`: 0 means a single independent mask.
fn correlation_from(run: &Section<'_>, model: &Model) -> Result<CorrelationSet> {
    match run.usize_or("q", 0)? {
        0 => Ok(CorrelationSet::independent(model)),
        q => build_tau_sequence(model, q, run.usize_or("r", 1)?),
    }
}

/// Exponent inputs from `[params]`; `upsilon` defaults to its formula in `xi`, `depletion`, `r`.
fn params_from(config: &ExperimentConfig) -> Result<ExponentParams> {
    let s = config.section("params")?;
    let d = ExponentParams::default();
    let mut p = ExponentParams {
        gamma: s.f64_or("gamma", d.gamma)?,
        gamma_star: s.f64_or("gamma_star", d.gamma_star)?,
        delta: s.f64_or("delta", d.delta)?,
        m: s.f64_or("m", d.m)?,
        xi: s.f64_or("xi", d.xi)?,
        eta: s.f64_or("eta", d.eta)?,
        eta_prime: s.f64_or("eta_prime", d.eta_prime)?,
        c: s.f64_or("c", d.c)?,
        depletion: s.f64_or("depletion", d.depletion)?,
        r: s.usize_or("r", d.r)?,
        k: s.usize_or("k", d.k)?,
        e_star: s.f64_or("e_star", d.e_star)?,
        num_frames: s.usize_or("num_frames", d.num_frames)?,
        phi: s.f64_or("phi", d.phi)?,
        upsilon: 0.0,
        q: s.usize_or("q", d.q)?,
        beta: s.f64_or("beta", d.beta)?,
        degree_cap: s.f64_or("degree_cap", d.degree_cap)?,
        kappa: s.f64_or("kappa", d.kappa)?,
        f: s.f64_or("f", d.f)?,
        l: s.f64_or("l", d.l)?,
        p_st: s.f64_or("p_st", d.p_st)?,
        p_f: s.f64_or("p_f", d.p_f)?,
        p_est: s.f64_or("p_est", d.p_est)?,
        p_b: s.f64_or("p_b", d.p_b)?,
        d_max: s.f64_or("d_max", d.d_max)?,
        n: s.usize_or("n", d.n)?,
    };
    p.upsilon = match s.opt_f64("upsilon")? {
        Some(u) => u,
        None => upsilon(p.xi, p.depletion, p.r),
    };
    Ok(p)
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn joined<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// Disorder draws with hypergraph statistics and normalized operator norms.
fn cmd_sample(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let model = model_from(config)?;
    let run = config.section("run")?;
    let count = run.usize_or("instances", 1)?;
    let b = run.f64_or("b", 3.0)?;
    let with_norm = run.bool_or("op_norm", true)?;
    if with_norm {
        check_dense(model.n(), opts)?;
    }
    let rows: Vec<(String, Vec<String>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = rng::derive(config.seed, i as u64, tag::TRIAL);
            let inst = sample_instance(&model, seed);
            let stats = hypergraph_stats(&inst, b);
            let norm = if with_norm { Some(normalized_op_norm(&inst)?) } else { None };
            let row = vec![
                i.to_string(),
                seed.to_string(),
                inst.mask().iter().filter(|&&a| a).count().to_string(),
                stats.d_max_observed.to_string(),
                num(stats.d_max_formula),
                stats.r_dense.to_string(),
                stats.d_dense.to_string(),
                opt_num(norm),
            ];
            Ok((inst.to_record(), row))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "index",
        "seed",
        "active_terms",
        "d_max_observed",
        "d_max_formula",
        "r_dense",
        "d_dense",
        "op_norm",
    ]);
    let mut out = RunOutput::default();
    for (i, (record, row)) in rows.into_iter().enumerate() {
        table.push(row);
        out.files.push(super::OutputFile {
            name: format!("instance_{i:04}.txt"),
            artifact: Artifact::Record(record),
        });
    }
    out.csv("sample.csv", table);
    Ok(out)
}

/// Shadow energy estimates against exact expectations, with shadow norms and estimator quality.
fn cmd_estimate(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let model = model_from(config)?;
    let est = estimator_from(config, &model)?;
    let run = config.section("run")?;
    let n = model.n();
    check_dense(n, opts)?;
    let trials = run.usize_or("trials", 20)?;
    let shadows = run.usize_or("shadows", 1000)?;
    if shadows < 2 {
        return Err(Error::InvalidArgument("estimate needs at least two shadows per trial".into()));
    }
    let trace = run.bool_or("trace", false)?;
    let results: Vec<(Vec<String>, String)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let inst = sample_instance(&model, rng::derive(config.seed, t, tag::TRIAL));
            let h = inst.pauli_sum()?;
            let psi = haar_state(n, &mut rng::stream(config.seed, t, tag::STATE));
            let exact = h.expectation(&psi);
            let mut r = rng::stream(config.seed, t, tag::SHADOW);
            let mut values = Vec::with_capacity(shadows);
            let mut lines = String::new();
            for _ in 0..shadows {
                let w = sample_shadow(&psi, n, &est, &mut r)?;
                let e = energy_estimate(&inst, &est, &w)?;
                if trace {
                    lines.push_str(&format!("{t} {w} {}\n", num(e)));
                }
                values.push(e);
            }
            let m = values.len() as f64;
            let mean = values.iter().sum::<f64>() / m;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let se = (var / m).sqrt();
            let norm = if n <= EXACT_NORM_CAP {
                Some(shadow_norm(&h, &est, NormMethod::Exact)?)
            } else if n <= SUP_BOUND_CAP {
                Some(shadow_norm(&h, &est, NormMethod::BasisSupBound)?)
            } else {
                None
            };
            let z = if se > 0.0 { (mean - exact) / se } else { 0.0 };
            let row = vec![
                t.to_string(),
                num(exact),
                num(mean),
                num(se),
                num(z),
                opt_num(norm),
            ];
            Ok((row, lines))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["trial", "exact", "mean", "std_err", "z_score", "shadow_norm"]);
    let mut trace_text = String::new();
    for (row, lines) in results {
        table.push(row);
        trace_text.push_str(&lines);
    }
    let mut out = RunOutput::default();
    out.csv("estimate.csv", table);
    let quality_trials = run.usize_or("quality_trials", 0)?;
    if quality_trials > 0 {
        let mut q = Table::new(&["delta", "trials", "p_est", "p_est_formula", "p_b"]);
        for (i, delta) in run.f64_list_or("deltas", &[0.5])?.into_iter().enumerate() {
            let rep = estimator_quality(
                &model,
                &est,
                &QualityConfig {
                    delta,
                    trials: quality_trials,
                    seed: rng::derive(config.seed, i as u64, tag::SAMPLER),
                    e_star: run.opt_f64("e_star")?,
                    t: run.f64_or("t", 1.0)?,
                },
            )?;
            q.push(vec![
                num(delta),
                rep.trials.to_string(),
                num(rep.p_est),
                num(rep.p_est_formula),
                num(rep.p_b),
            ]);
        }
        out.csv("quality.csv", q);
    }
    if trace {
        out.text("shadows.txt", format!("# trial frames/outcomes estimate\n{trace_text}"));
    }
    Ok(out)
}

fn random_mixture(n: usize, support: usize, rng: &mut rng::Rng) -> Result<DiagonalMixture> {
    let total = 6usize.pow(n as u32);
    let mut points: BTreeMap<usize, f64> = BTreeMap::new();
    for _ in 0..support {
        *points.entry(rng.random_range(0..total)).or_default() += 1.0 - rng.random::<f64>();
    }
    let sum: f64 = points.values().sum();
    let states = points.keys().map(|&i| ShadowState::from_index(n, i)).collect();
    DiagonalMixture::new(states, points.values().map(|w| w / sum).collect())
}

fn density(mix: &DiagonalMixture) -> DMatrix<C64> {
    let dim = 1usize << mix.n();
    let mut rho = DMatrix::zeros(dim, dim);
    for (w, p) in mix.support().iter().zip(mix.weights()) {
        let v = w.state_vector();
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += v[i] * v[j].conj() * *p;
            }
        }
    }
    rho
}

/// Product-state and transport distances between random diagonal mixtures.
fn cmd_distance(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let run = config.section("run")?;
    let n = run.usize_or("n", 2)?;
    if n == 0 {
        return Err(Error::InvalidArgument("distance needs n >= 1".into()));
    }
    let pairs = run.usize_or("pairs", 10)?;
    let support = run.usize_or("support", 1)?.max(1);
    let alpha = run.f64_or("alpha", 1.0)?;
    let mode = cost_mode_from(&run)?;
    let exact = run.bool_or("exact_w1", false)?;
    if exact {
        check_dense(n, opts)?;
    }
    let rows: Vec<Vec<String>> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(config.seed, i, tag::SAMPLER);
            let p = random_mixture(n, support, &mut r)?;
            let q = random_mixture(n, support, &mut r)?;
            let pw = product_w(&p.support()[0], &q.support()[0], mode)?;
            let ot = ot_distance(&p, &q, mode, alpha)?;
            let (w1, gap, lo, hi) = if exact {
                let x = density(&p) - density(&q);
                let (lo, hi) = trace_norm_sandwich(&x)?;
                let sol = exact_w1_small(&x, W1_TOL)?;
                (Some(sol.value), Some(sol.gap), Some(lo), Some(hi))
            } else {
                (None, None, None, None)
            };
            Ok(vec![
                i.to_string(),
                mode.kind.to_string(),
                num(mode.order),
                num(alpha),
                num(pw),
                num(ot.lower),
                num(ot.upper),
                opt_num(w1),
                opt_num(gap),
                opt_num(lo),
                opt_num(hi),
            ])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "pair",
        "mode",
        "order",
        "alpha",
        "product_w",
        "lower",
        "upper",
        "exact_w1",
        "w1_gap",
        "trace_lower",
        "trace_upper",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    let mut out = RunOutput::default();
    out.csv("distance.csv", table);
    Ok(out)
}

/// Default degree cap: the hypergraph degree formula with `b = 3`.
fn default_degree_cap(model: &Model) -> f64 {
    let (r, d) = dense_counts(model);
    d_max_formula(r, d, model.p(), 3.0)
}

/// Correlated-pair stability rows with the Lipschitz reference line.
fn cmd_stability(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let model = model_from(config)?;
    let n = model.n();
    let (alg, l_tilde) = algorithm_from(config, n)?;
    check_dense(n + alg.extra_qubits(), opts)?;
    let run = config.section("run")?;
    let degree_cap = match run.opt_f64("degree_cap")? {
        Some(d) => d,
        None => default_degree_cap(&model),
    };
    let f_ref = run.f64_or("line_f", (n as f64).sqrt())?;
    let l_ref = match run.opt_f64("line_l")? {
        Some(l) => l,
        None => {
            let geometry = Geometry {
                d: model.k().max(mixer_locality(&alg)),
                degree: degree_cap,
                blocks: cost_blocks(&model).len(),
                n,
                l_tilde,
            };
            lipschitz_bound(&alg, &geometry)?
        }
    };
    let cfg = StabilityConfig {
        kappas: run.f64_list_or("kappas", &[0.0, 0.5])?,
        trials: run.usize_or("trials", 20)?,
        shadows: run.usize_or("shadows", 200)?,
        degree_cap,
        mode: cost_mode_from(&run)?,
        seed: config.seed,
        line: Some((f_ref, l_ref)),
    };
    let (rows, fits) = stability_experiment(&alg, &model, &cfg)?;
    let mut table = Table::new(&["kappa", "trial", "l1_diff", "w1_alpha1", "w2_lower", "bound", "violated"]);
    for r in rows {
        table.push(vec![
            num(r.kappa),
            r.trial.to_string(),
            num(r.l1_diff),
            num(r.w1_alpha1),
            num(r.w2_lower),
            num(r.bound),
            r.violated.to_string(),
        ]);
    }
    let mut fit = Table::new(&["kappa", "f", "l", "p_st", "line_f", "line_l"]);
    for f in fits {
        fit.push(vec![num(f.kappa), num(f.f), num(f.l), num(f.p_st), num(f_ref), num(l_ref)]);
    }
    let mut out = RunOutput::default();
    out.csv("stability.csv", table);
    out.csv("stability_fit.csv", fit);
    Ok(out)
}

/// Brute-force S-set scans over disorder draws, optionally over a grid of `gamma`.
fn cmd_ogp_scan(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let model = model_from(config)?;
    check_dense(model.n(), opts)?;
    let est = estimator_from(config, &model)?;
    let run = config.section("run")?;
    let params = config.section("params")?;
    let corr = correlation_from(&run, &model)?;
    let gammas = params.f64_list_or("gamma", &[0.5])?;
    let e_star = match params.opt_f64("e_star")? {
        Some(e) => EStar::Fixed(e),
        None => EStar::PerReplica,
    };
    let mut table = Table::new(&["gamma", "trial", "tuples", "hit", "optimal_sizes", "thresholds"]);
    let mut summary = Table::new(&["gamma", "trials", "probability"]);
    let mut witnesses = String::from("# gamma trial states\n");
    for gamma in gammas {
        let cfg = ScanConfig {
            gamma,
            m: run.usize_or("m", 2)?,
            xi: params.f64_or("xi", 1.0)?,
            eta: params.f64_or("eta", 0.0)?,
            trials: run.usize_or("trials", 20)?,
            seed: config.seed,
            e_star,
            mode: cost_mode_from(&run)?,
        };
        let res = s_set_scan(&model, &est, &corr, &cfg)?;
        for o in &res.outcomes {
            let th: Vec<String> = o.thresholds.iter().map(|&x| num(x)).collect();
            table.push(vec![
                num(gamma),
                o.trial.to_string(),
                o.tuples.to_string(),
                o.hit().to_string(),
                joined(&o.optimal_sizes),
                th.join(";"),
            ]);
        }
        summary.push(vec![num(gamma), res.outcomes.len().to_string(), num(res.probability())]);
        for w in &res.witnesses {
            witnesses.push_str(&format!("{} {} {}\n", num(gamma), w.trial, joined(&w.states).replace(';', " ")));
        }
    }
    let mut out = RunOutput::default();
    out.csv("scan.csv", table);
    out.csv("scan_summary.csv", summary);
    out.text("witnesses.txt", witnesses);
    Ok(out)
}

/// Runs the algorithm along one interpolation path, builds the overlap graph and searches
/// for a monochromatic clique.
fn cmd_overlap_graph(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let model = model_from(config)?;
    let n = model.n();
    let est = estimator_from(config, &model)?;
    let (alg, _) = algorithm_from(config, n)?;
    check_dense(n + alg.extra_qubits(), opts)?;
    let run = config.section("run")?;
    let params = config.section("params")?;
    let replicas = run.usize_or("replicas", 4)?;
    let m = run.usize_or("m", 2)?;
    let shadows = run.usize_or("shadows", 1)?.max(1);
    let mode = cost_mode_from(&run)?;
    let xi = params.f64_or("xi", 1.0)?;
    let eta = params.f64_or("eta", 0.0)?;
    let corr = correlation_from(&run, &model)?;
    let masks = corr.len();
    let path = InterpolationPath::new(&model, replicas, corr, config.seed)?;
    let alg_seed = rng::derive(config.seed, 0, tag::ALGORITHM);
    let jobs: Vec<(usize, usize)> = (1..=replicas).flat_map(|t| (0..masks).map(move |q| (t, q))).collect();
    let flat: Vec<Vec<ShadowState>> = jobs
        .par_iter()
        .map(|&(t, q)| {
            let inst = interpolated_instance(&path, t, q)?;
            let state = run_algorithm(&inst, &alg, alg_seed)?;
            (0..shadows as u64)
                .map(|s| sample_shadow(&state, n, &est, &mut rng::stream(config.seed, s, tag::SHADOW)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let bundles: Vec<Vec<Vec<ShadowState>>> = flat.chunks(masks).map(<[_]>::to_vec).collect();
    let graph = overlap_graph(&bundles, xi, eta, mode)?;
    let mut edges = Table::new(&["u", "v", "color"]);
    for (&(u, v), &c) in &graph.edges {
        edges.push(vec![u.to_string(), v.to_string(), c.to_string()]);
    }
    let admissible = if replicas <= ADMISSIBILITY_CAP && m <= replicas {
        Some(is_m_admissible(&graph, m)?)
    } else {
        None
    };
    let clique = find_monochromatic_clique(&graph, m);
    let mut verdict = Table::new(&["vertices", "edges", "colors", "m", "admissible", "clique_color", "clique"]);
    verdict.push(vec![
        graph.vertices.to_string(),
        graph.edges.len().to_string(),
        joined(&graph.colors()),
        m.to_string(),
        admissible.map(|a| a.to_string()).unwrap_or_default(),
        clique.as_ref().map(|c| c.0.to_string()).unwrap_or_default(),
        clique.as_ref().map(|c| joined(&c.1)).unwrap_or_default(),
    ]);
    let mut outputs = String::from("# replica q shadows\n");
    for (t, per_q) in bundles.iter().enumerate() {
        for (q, ws) in per_q.iter().enumerate() {
            outputs.push_str(&format!("{} {q} {}\n", t + 1, joined(ws).replace(';', " ")));
        }
    }
    let mut out = RunOutput::default();
    out.csv("graph_edges.csv", edges);
    out.csv("graph_verdict.csv", verdict);
    out.text("graph_shadows.txt", outputs);
    Ok(out)
}

/// Exponent evaluations, either at the `[params]` point or over sampled admissible tuples.
fn cmd_exponent(config: &ExperimentConfig) -> Result<RunOutput> {
    let run = config.section("run")?;
    let mut table = Table::new(&[
        "index", "theorem", "k", "r", "m", "xi", "eta", "eta_prime", "c", "gamma_star", "e_star", "num_frames", "phi",
        "upsilon", "psi", "psi_tilde", "negative",
    ]);
    let mut push = |i: usize, theorem: &str, p: &ExponentParams, psi: Option<f64>, tilde: Option<f64>| {
        let negative = psi.is_some_and(|x| x < 0.0) && tilde.is_none_or(|x| x < 0.0);
        table.push(vec![
            i.to_string(),
            theorem.into(),
            p.k.to_string(),
            p.r.to_string(),
            num(p.m),
            num(p.xi),
            num(p.eta),
            num(p.eta_prime),
            num(p.c),
            num(p.gamma_star),
            num(p.e_star),
            p.num_frames.to_string(),
            num(p.phi),
            num(p.upsilon),
            opt_num(psi),
            opt_num(tilde),
            negative.to_string(),
        ]);
    };
    match run.str_or("mode", "sample")? {
        "point" => {
            let p = params_from(config)?;
            push(0, "kspin", &p, psi_chaos_kspin(&p).ok(), None);
            push(1, "pk", &p, psi_mqogp_pk(&p).ok(), psi_chaos_pk(&p).ok());
        }
        "sample" => {
            let tuples = run.usize_or("tuples", 1000)?;
            let theorems: Vec<usize> = match run.opt_usize("theorem")? {
                Some(t) => vec![t],
                None => vec![3, 4],
            };
            for theorem in theorems {
                let rows: Vec<(ExponentParams, Option<f64>, Option<f64>)> = (0..tuples as u64)
                    .into_par_iter()
                    .map(|i| {
                        let mut r = rng::stream(config.seed, i, tag::SAMPLER ^ theorem as u64);
                        match theorem {
                            3 => {
                                let p = sample_theorem3_tuple(&mut r);
                                let psi = psi_chaos_kspin(&p)?;
                                Ok((p, Some(psi), None))
                            }
                            4 => {
                                let p = sample_theorem4_tuple(&mut r)?;
                                let psi = psi_mqogp_pk(&p)?;
                                let tilde = psi_chaos_pk(&p)?;
                                Ok((p, Some(psi), Some(tilde)))
                            }
                            other => Err(Error::InvalidArgument(format!("theorem must be 3 or 4, got {other}"))),
                        }
                    })
                    .collect::<Result<_>>()?;
                let label = if theorem == 3 { "kspin_chaos" } else { "pk_mqogp" };
                for (i, (p, psi, tilde)) in rows.iter().enumerate() {
                    push(i, label, p, *psi, *tilde);
                }
            }
        }
        other => return Err(Error::Parse(format!("unknown exponent mode {other:?}"))),
    }
    let mut out = RunOutput::default();
    out.csv("exponent.csv", table);
    Ok(out)
}

fn feasibility_table(rep: &FeasibilityReport) -> Table {
    let mut t = Table::new(&["name", "lhs", "rhs", "strict", "pass", "saturated", "binding"]);
    for row in &rep.rows {
        t.push(vec![
            row.name.into(),
            num(row.lhs),
            num(row.rhs),
            row.strict.to_string(),
            row.pass.to_string(),
            row.saturated.to_string(),
            (rep.binding == Some(row.name)).to_string(),
        ]);
    }
    t
}

/// Inequality rows for the `[params]` point and, when `[chain]` is present, a derived chain.
fn cmd_certify(config: &ExperimentConfig) -> Result<RunOutput> {
    let run = config.section("run")?;
    let slack = run.f64_or("slack", DEFAULT_SLACK)?;
    let mut out = RunOutput::default();
    out.csv("feasibility.csv", feasibility_table(&feasibility_theorem2(&params_from(config)?, slack)));
    if config.section("chain")?.opt_str("variant")?.is_some() {
        let s = config.section("chain")?;
        let input = ChainInput {
            k: s.usize_req("k")?,
            epsilon: s.f64_req("epsilon")?,
            gamma: s.f64_req("gamma")?,
            delta: s.f64_req("delta")?,
            e_star: s.f64_or("e_star", 1.0)?,
            num_frames: s.usize_or("num_frames", 1)?,
            phi: s.f64_or("phi", 0.0)?,
            d_max: s.f64_req("d_max")?,
            variant: s.str_req("variant")?.parse()?,
        };
        let rep = corollary_chain(&input)?;
        let p = &rep.params;
        let mut t = Table::new(&[
            "variant",
            "q",
            "beta",
            "depletion",
            "r",
            "p_est",
            "xi",
            "eta",
            "eta_prime",
            "m_lo",
            "m_hi",
            "m_choice",
            "design_value",
            "psi",
            "psi_chaos",
            "feasible",
            "verdict",
        ]);
        t.push(vec![
            input.variant.to_string(),
            p.q.to_string(),
            num(p.beta),
            num(p.depletion),
            p.r.to_string(),
            num(p.p_est),
            num(p.xi),
            num(p.eta),
            num(p.eta_prime),
            num(rep.m_window.0),
            num(rep.m_window.1),
            rep.m_choice.map(|m| m.to_string()).unwrap_or_default(),
            num(rep.design_value),
            opt_num(rep.psi),
            opt_num(rep.psi_chaos),
            rep.feasibility.feasible().to_string(),
            rep.verdict.to_string(),
        ]);
        out.csv("chain.csv", t);
        out.csv("chain_feasibility.csv", feasibility_table(&rep.feasibility));
    }
    Ok(out)
}
