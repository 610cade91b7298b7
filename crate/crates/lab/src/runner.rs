//! Study runners. Each runner materializes the configured scenario,
//! computes its comparison table and returns sorted rows; the CLI wraps
//! these in CSV emission. All heavy operator work happens in the
//! eigenbasis of `A`, where spectral-norm and vector errors coincide with
//! the original-basis ones.

use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use qhop_core::bounds::{
    commutator_branches, interaction_commutator_bound, qhop_local_error_bound,
    sampled_interaction_commutator_max, DEFAULT_GRID,
};
use qhop_core::hamiltonian::{
    wavepacket, Bounds, SplitBounds, SplitSystem, TimeDependentHamiltonian,
};
use qhop_core::operator::{commutator, operator_distance, spectral_norm};
use qhop_core::propagator::{
    dyson1_split_composition, exact_interaction_propagator, exact_split_in_basis, qhop_step,
    qhop_split_composition, reference_propagator, trotter2_split_composition, vector_error,
    StepPlan,
};
use qhop_core::quadrature::{QuadratureKind, QuadratureRule};
use qhop_core::random::random_hermitian_with_norm;
use qhop_core::resources::{
    baseline_queries, qhop_interaction_min_plan, qhop_interaction_plan, qhop_plan,
    BaselineMethod, CommutatorProfile, ResourceEstimate,
};

use crate::config::{
    build_split_system, scenario_label, Method, RunConfig, ScenarioConfig,
};
use crate::error::{LabError, Result};
use crate::report::{config_hash, Metric, ResultRow, RunMeta, RunOutput};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub timings: bool,
    /// Extend the commutator scan to N = 1024.
    pub include_large_n: bool,
}

impl RunOptions {
    fn effective_seed(&self, cfg: &RunConfig) -> u64 {
        self.seed.or(cfg.seed).unwrap_or(0)
    }
}

fn integer_segments(total_time: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !(total_time > 0.0) {
        return Err(LabError::Config(format!(
            "need positive T and h, got T={total_time}, h={h}"
        )));
    }
    let l = (total_time / h).round();
    if l < 1.0 || (l * h - total_time).abs() > 1e-9 * total_time.max(1.0) {
        return Err(LabError::Config(format!(
            "step size {h} does not divide the final time {total_time}"
        )));
    }
    Ok(l as usize)
}

fn composition_in_basis(
    sys: &SplitSystem,
    method: Method,
    plan: &StepPlan,
) -> Result<Array2<Complex64>> {
    Ok(match method {
        Method::Qhop => qhop_split_composition(sys, plan)?,
        Method::Trotter2 => trotter2_split_composition(sys, plan.segments(), plan.step_size())?,
        Method::Dyson1 => dyson1_split_composition(sys, plan)?,
    })
}

fn meta(cfg: &RunConfig, opts: &RunOptions, max_n: usize, started: Instant) -> RunMeta {
    RunMeta {
        config_hash: config_hash(cfg, opts.effective_seed(cfg)),
        reference_tolerance: cfg.reference_tolerance_for(max_n),
        walltime_s: started.elapsed().as_secs_f64(),
    }
}

fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| {
            let f = k as f64 / (points - 1).max(1) as f64;
            lo * (hi / lo).powf(f)
        })
        .collect()
}

/// Spectral norm of a commutator of Hermitian matrices. Such a matrix is
/// anti-Hermitian, so its singular values are the eigenvalue magnitudes of
/// the Hermitian matrix `iC`; above the SVD size cutoff the exact
/// eigenvalue route is both faster and more accurate than iterating on a
/// clustered top cluster.
fn anti_hermitian_norm(c: &Array2<Complex64>) -> Result<f64> {
    if c.nrows() <= 256 {
        return Ok(spectral_norm(c));
    }
    let herm =
        qhop_core::operator::HermitianOperator::new(c.mapv(|z| z * Complex64::new(0.0, 1.0)))?;
    let (vals, _) = herm.eigendecompose()?;
    Ok(vals.iter().fold(0.0f64, |acc, &l| acc.max(l.abs())))
}

/// Norm of `[B, e^{iAs} B e^{-iAs}]` over a log-spaced separation grid,
/// for each grid size. An explicit `s = 0` row anchors the scan.
pub fn run_commutator_scan(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    let scenario = cfg.scenario.clone().unwrap_or_default();
    let horizon = cfg.t_final.unwrap_or(1.0);
    let mut ns = cfg
        .n
        .as_ref()
        .map(|n| n.to_vec())
        .unwrap_or_else(|| vec![128, 256, 512]);
    if opts.include_large_n && !ns.contains(&1024) {
        ns.push(1024);
    }
    let [s_lo, s_hi] = cfg.s_range.unwrap_or([1e-3, 1.0]);
    if !(s_lo > 0.0 && s_hi > s_lo) {
        return Err(LabError::Config(format!(
            "separation range must satisfy 0 < lo < hi, got [{s_lo}, {s_hi}]"
        )));
    }
    let points = cfg.s_points.unwrap_or(25);
    let label = scenario_label(&scenario);

    let mut rows = Vec::new();
    for &n in &ns {
        let cell = Instant::now();
        let sys = build_split_system(&scenario, n, horizon)?;
        let b_basis = sys
            .b_in_a_basis()
            .ok_or_else(|| {
                LabError::Config("commutator scan needs a time-independent B".into())
            })?
            .clone();
        let mut push = |s: f64, value: f64, elapsed: f64| {
            rows.push(ResultRow {
                scenario: label.into(),
                method: "commutator".into(),
                n,
                h: s,
                m: 0,
                k: 0,
                metric: Metric::CommutatorNorm,
                value,
                walltime_s: elapsed,
            });
        };
        push(0.0, 0.0, 0.0);
        for &s in &log_spaced(s_lo, s_hi, points) {
            let twisted = sys.interaction_in_basis(s);
            let value = anti_hermitian_norm(&commutator(&b_basis, &twisted)?)?;
            push(s, value, cell.elapsed().as_secs_f64());
        }
    }
    let max_n = ns.iter().copied().max().unwrap_or(0);
    let mut out = RunOutput {
        rows,
        meta: meta(cfg, opts, max_n, started),
    };
    out.sort_rows();
    Ok(out)
}

/// Operator-norm error of each method against the closed-form reference,
/// over a list of step sizes.
pub fn run_convergence_h(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    let scenario = cfg.scenario.clone().unwrap_or_default();
    let t_final = cfg.t_final.unwrap_or(0.5);
    let n = single_n(cfg, 128)?;
    let hs = cfg
        .h
        .as_ref()
        .map(|h| h.to_vec())
        .unwrap_or_else(|| (3..=10).map(|p| 0.5f64.powi(p)).collect());
    let methods = parse_methods(cfg, &[Method::Qhop, Method::Trotter2, Method::Dyson1])?;
    let rule = cfg.quadrature_rule(QuadratureKind::Trapezoid, 512)?;
    let label = scenario_label(&scenario);

    let sys = build_split_system(&scenario, n, t_final)?;
    let reference = exact_split_in_basis(&sys, t_final)?;
    let mut rows = Vec::new();
    for &method in &methods {
        for &h in &hs {
            let cell = Instant::now();
            let l = integer_segments(t_final, h)?;
            let plan = StepPlan::new(t_final, l, rule)?;
            let approx = composition_in_basis(&sys, method, &plan)?;
            let value = operator_distance(&approx, &reference)?;
            rows.push(ResultRow {
                scenario: label.into(),
                method: method.name().into(),
                n,
                h,
                m: rule.node_count(),
                k: 0,
                metric: Metric::OperatorError,
                value,
                walltime_s: cell.elapsed().as_secs_f64(),
            });
        }
    }
    let mut out = RunOutput {
        rows,
        meta: meta(cfg, opts, n, started),
    };
    out.sort_rows();
    Ok(out)
}

/// Operator- and vector-norm errors at fixed `h` across grid sizes.
pub fn run_scale_n(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    let scenario = cfg.scenario.clone().unwrap_or_default();
    require_schrodinger(&scenario, "scale-n")?;
    let t_final = cfg.t_final.unwrap_or(0.5);
    let h = single_h(cfg, 1.0 / 64.0)?;
    let ns = cfg
        .n
        .as_ref()
        .map(|n| n.to_vec())
        .unwrap_or_else(|| vec![8, 16, 32, 64, 128, 256, 512]);
    let methods = parse_methods(cfg, &[Method::Qhop, Method::Trotter2, Method::Dyson1])?;
    let rule = cfg.quadrature_rule(QuadratureKind::Trapezoid, 512)?;
    let (center, width, freq) = match &cfg.wavepacket {
        Some(w) => (
            w.center,
            w.width,
            w.frequencies.as_ref().and_then(|f| f.first().copied()).unwrap_or(1),
        ),
        None => (-1.0, 4.0, 1),
    };
    let label = scenario_label(&scenario);

    let l = integer_segments(t_final, h)?;
    let mut rows = Vec::new();
    for &n in &ns {
        let sys = build_split_system(&scenario, n, t_final)?;
        let reference = exact_split_in_basis(&sys, t_final)?;
        let psi = sys.state_to_a_basis(&wavepacket(n, center, width, freq as f64)?);
        for &method in &methods {
            let cell = Instant::now();
            let plan = StepPlan::new(t_final, l, rule)?;
            let approx = composition_in_basis(&sys, method, &plan)?;
            let op_err = operator_distance(&approx, &reference)?;
            let vec_err = vector_error(&approx, &reference, &psi)?;
            let elapsed = cell.elapsed().as_secs_f64();
            for (metric, value) in [(Metric::OperatorError, op_err), (Metric::VectorError, vec_err)]
            {
                rows.push(ResultRow {
                    scenario: label.into(),
                    method: method.name().into(),
                    n,
                    h,
                    m: rule.node_count(),
                    k: freq,
                    metric,
                    value,
                    walltime_s: elapsed,
                });
            }
        }
    }
    let max_n = ns.iter().copied().max().unwrap_or(0);
    let mut out = RunOutput {
        rows,
        meta: meta(cfg, opts, max_n, started),
    };
    out.sort_rows();
    Ok(out)
}

/// Vector-norm errors for wavepackets of increasing frequency at fixed
/// grid size and step.
pub fn run_wavepacket_k(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    let scenario = cfg.scenario.clone().unwrap_or_default();
    require_schrodinger(&scenario, "wavepacket-k")?;
    let t_final = cfg.t_final.unwrap_or(0.5);
    let h = single_h(cfg, 1.0 / 64.0)?;
    let n = single_n(cfg, 512)?;
    let methods = parse_methods(cfg, &[Method::Qhop, Method::Trotter2])?;
    let rule = cfg.quadrature_rule(QuadratureKind::Trapezoid, 512)?;
    let (center, width, freqs) = match &cfg.wavepacket {
        Some(w) => (
            w.center,
            w.width,
            w.frequencies.clone().unwrap_or_else(default_frequencies),
        ),
        None => (-1.0, 20.0, default_frequencies()),
    };
    let label = scenario_label(&scenario);

    let l = integer_segments(t_final, h)?;
    let sys = build_split_system(&scenario, n, t_final)?;
    let reference = exact_split_in_basis(&sys, t_final)?;
    let mut rows = Vec::new();
    for &method in &methods {
        let cell = Instant::now();
        let plan = StepPlan::new(t_final, l, rule)?;
        let approx = composition_in_basis(&sys, method, &plan)?;
        let elapsed = cell.elapsed().as_secs_f64();
        for &k in &freqs {
            let psi = sys.state_to_a_basis(&wavepacket(n, center, width, k as f64)?);
            rows.push(ResultRow {
                scenario: label.into(),
                method: method.name().into(),
                n,
                h,
                m: rule.node_count(),
                k,
                metric: Metric::VectorError,
                value: vector_error(&approx, &reference, &psi)?,
                walltime_s: elapsed,
            });
        }
    }
    let mut out = RunOutput {
        rows,
        meta: meta(cfg, opts, n, started),
    };
    out.sort_rows();
    Ok(out)
}

fn default_frequencies() -> Vec<i64> {
    vec![0, 1, 4, 16, 64]
}

/// Empirical checks of the local error bound and the commutator branch
/// inequalities: random oscillatory instances plus the discretized
/// Schrödinger system. Emits `measured/bound` ratios; sampled maxima are
/// lower envelopes of the true suprema, so ratios carry a 1.05 slack.
pub fn run_bound_checks(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    let seed = opts.effective_seed(cfg);
    let instances = cfg.instances.unwrap_or(100);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = Vec::new();

    let dims = [2usize, 4, 6, 8, 12, 16];
    for inst in 0..instances {
        let dim = dims[rng.random_range(0..dims.len())];
        let h = 0.02 + 0.18 * rng.random::<f64>();
        let (rule, m_nodes) = random_rule(&mut rng)?;
        let segments = 1 + rng.random_range(0..4usize);
        let j = rng.random_range(0..segments);
        let horizon = h * segments as f64;
        let td = bounded_oscillatory(dim, horizon, 2.0 + 10.0 * rng.random::<f64>(), &mut rng)?;
        let plan = StepPlan::new(horizon, segments, rule)?;

        let cell = Instant::now();
        let step = qhop_step(&td, &plan, j)?;
        let tol = cfg.reference_tolerance_for(dim);
        let (reference, _) =
            reference_propagator(&td, j as f64 * h, (j + 1) as f64 * h, tol)?;
        let measured = operator_distance(step.matrix(), reference.matrix())?;
        let bound = qhop_local_error_bound(&td, j, h, m_nodes, DEFAULT_GRID)?;
        let elapsed = cell.elapsed().as_secs_f64();
        rows.push(ratio_row(
            "random", "qhop-local-bound", dim, h, m_nodes, inst as i64, measured, bound, elapsed,
        ));

        let branches = commutator_branches(&td, j, h, 17)?;
        rows.push(ratio_row(
            "random",
            "commutator-window",
            dim,
            h,
            m_nodes,
            inst as i64,
            branches.measured,
            branches.window_branch,
            elapsed,
        ));
        rows.push(ratio_row(
            "random",
            "commutator-derivative",
            dim,
            h,
            m_nodes,
            inst as i64,
            branches.measured,
            branches.derivative_branch,
            elapsed,
        ));
    }

    // Random split systems: interaction-picture branch inequalities.
    for inst in 0..10 {
        let dim = dims[rng.random_range(0..dims.len())];
        let a = random_hermitian_with_norm(dim, 5.0 + 15.0 * rng.random::<f64>(), &mut rng);
        let b = random_hermitian_with_norm(dim, 0.5 + rng.random::<f64>(), &mut rng);
        let b_td = TimeDependentHamiltonian::constant(b, 1.0)?;
        let sys = SplitSystem::new(a, b_td, SplitBounds::Measured)?;
        let h = 0.01 + 0.1 * rng.random::<f64>();
        let cell = Instant::now();
        let measured = sampled_interaction_commutator_max(&sys, h, 17)?;
        let (norm_branch, deriv_branch) = interaction_commutator_bound(&sys, h);
        let elapsed = cell.elapsed().as_secs_f64();
        rows.push(ratio_row(
            "random-split",
            "interaction-commutator-norm",
            dim,
            h,
            0,
            inst,
            measured,
            norm_branch,
            elapsed,
        ));
        rows.push(ratio_row(
            "random-split",
            "interaction-commutator-derivative",
            dim,
            h,
            0,
            inst,
            measured,
            deriv_branch,
            elapsed,
        ));
    }

    // Discretized Schrödinger system: single-step error bound on the
    // interaction Hamiltonian plus its branch inequalities.
    let scenario = cfg.scenario.clone().unwrap_or_default();
    let n = single_n(cfg, 64)?;
    let t_final = cfg.t_final.unwrap_or(0.5);
    let sys = build_split_system(&scenario, n, t_final)?;
    let hi = sys.interaction_picture();
    let rule = cfg.quadrature_rule(QuadratureKind::RiemannLeft, 64)?;
    let hs = cfg
        .h
        .as_ref()
        .map(|h| h.to_vec())
        .unwrap_or_else(|| vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]);
    for &h in &hs {
        let cell = Instant::now();
        let l = integer_segments(t_final, h)?;
        let plan = StepPlan::new(t_final, l, rule)?;
        let j = l / 2;
        let step = qhop_step(&hi, &plan, j)?;
        let reference =
            exact_interaction_propagator(&sys, j as f64 * h, (j + 1) as f64 * h)?;
        let measured = operator_distance(step.matrix(), reference.matrix())?;
        let bound = qhop_local_error_bound(&hi, j, h, rule.node_count(), DEFAULT_GRID)?;
        let elapsed = cell.elapsed().as_secs_f64();
        rows.push(ratio_row(
            scenario_label(&scenario),
            "qhop-local-bound",
            n,
            h,
            rule.node_count(),
            0,
            measured,
            bound,
            elapsed,
        ));

        let measured_comm = sampled_interaction_commutator_max(&sys, h, DEFAULT_GRID)?;
        let (norm_branch, deriv_branch) = interaction_commutator_bound(&sys, h);
        rows.push(ratio_row(
            scenario_label(&scenario),
            "interaction-commutator-norm",
            n,
            h,
            0,
            0,
            measured_comm,
            norm_branch,
            elapsed,
        ));
        rows.push(ratio_row(
            scenario_label(&scenario),
            "interaction-commutator-derivative",
            n,
            h,
            0,
            0,
            measured_comm,
            deriv_branch,
            elapsed,
        ));
    }

    let mut out = RunOutput {
        rows,
        meta: meta(cfg, opts, n, started),
    };
    out.sort_rows();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn ratio_row(
    scenario: &str,
    check: &str,
    n: usize,
    h: f64,
    m: usize,
    k: i64,
    measured: f64,
    bound: f64,
    walltime_s: f64,
) -> ResultRow {
    // A vanishing bound only happens when the measured value vanishes too
    // (commuting directions); report ratio 0 rather than 0/0.
    let value = if bound > 1e-13 { measured / bound } else { 0.0 };
    ResultRow {
        scenario: scenario.into(),
        method: check.into(),
        n,
        h,
        m,
        k,
        metric: Metric::BoundRatio,
        value,
        walltime_s,
    }
}

fn random_rule(rng: &mut ChaCha12Rng) -> Result<(QuadratureRule, usize)> {
    let m_choices = [1usize, 2, 4, 8];
    let m = m_choices[rng.random_range(0..m_choices.len())];
    let kind = match rng.random_range(0..4u8) {
        0 if m >= 2 => QuadratureKind::Trapezoid,
        1 => QuadratureKind::Midpoint,
        _ => QuadratureKind::RiemannLeft,
    };
    Ok((QuadratureRule::new(kind, m)?, m))
}

/// Oscillatory instance with unit-scale norms and an analytic derivative:
/// `H(t) = H0 + cos(ω1 t + φ) H1 + sin(ω2 t) H2`.
fn bounded_oscillatory(
    dim: usize,
    horizon: f64,
    frequency: f64,
    rng: &mut ChaCha12Rng,
) -> Result<TimeDependentHamiltonian> {
    let h0 = random_hermitian_with_norm(dim, 0.4 + 0.4 * rng.random::<f64>(), rng).into_matrix();
    let h1 = random_hermitian_with_norm(dim, 0.3 + 0.4 * rng.random::<f64>(), rng).into_matrix();
    let h2 = random_hermitian_with_norm(dim, 0.3 + 0.4 * rng.random::<f64>(), rng).into_matrix();
    let w1 = frequency * (0.5 + rng.random::<f64>());
    let w2 = frequency * (0.5 + rng.random::<f64>());
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let alpha = spectral_norm(&h0) + spectral_norm(&h1) + spectral_norm(&h2);
    let beta = w1 * spectral_norm(&h1) + w2 * spectral_norm(&h2);
    let (e1, e2) = (h1.clone(), h2.clone());
    let eval = move |t: f64| &h0 + &e1.mapv(|z| z * (w1 * t + phi).cos()) + &e2.mapv(|z| z * (w2 * t).sin());
    let deriv = move |t: f64| {
        h1.mapv(|z| z * (-w1 * (w1 * t + phi).sin())) + h2.mapv(|z| z * (w2 * (w2 * t).cos()))
    };
    Ok(TimeDependentHamiltonian::new(
        dim,
        horizon,
        eval,
        Some(Box::new(deriv)),
        Bounds::Declared { alpha: alpha * (1.0 + 1e-12), beta: beta * (1.0 + 1e-12) },
    )?)
}

/// One formula-level estimate per requested method.
pub fn run_estimate(cfg: &RunConfig) -> Result<Vec<(String, ResourceEstimate)>> {
    let est = cfg
        .estimate
        .clone()
        .ok_or_else(|| LabError::Config("estimate subcommand needs an \"estimate\" config block".into()))?;
    let need = |opt: Option<f64>, what: &str| {
        opt.ok_or_else(|| LabError::Config(format!("estimate: missing field {what:?}")))
    };
    let n_anc = est.n_ancilla.unwrap_or(1);
    let mut records = Vec::new();
    for m in &est.methods {
        let record = match m.as_str() {
            "qhop" => {
                let profile = CommutatorProfile::declared(
                    need(est.c_h, "c_h")?,
                    est.theta
                        .ok_or_else(|| LabError::Config("estimate: missing field \"theta\"".into()))?,
                )?;
                qhop_plan(
                    need(est.alpha, "alpha")?,
                    &profile,
                    need(est.max_h_prime, "max_h_prime")?,
                    est.total_time,
                    est.epsilon,
                    n_anc,
                )?
            }
            "qhop-interaction" => {
                let profile = CommutatorProfile::declared(
                    need(est.c_ab, "c_ab")?,
                    est.theta
                        .ok_or_else(|| LabError::Config("estimate: missing field \"theta\"".into()))?,
                )?;
                qhop_interaction_plan(
                    need(est.alpha_b, "alpha_b")?,
                    need(est.beta_b, "beta_b")?,
                    need(est.alpha_ab, "alpha_ab")?,
                    &profile,
                    est.total_time,
                    est.epsilon,
                    n_anc,
                )?
            }
            "qhop-interaction-min" => qhop_interaction_min_plan(
                need(est.alpha_b, "alpha_b")?,
                need(est.beta_b, "beta_b")?,
                need(est.alpha_ab, "alpha_ab")?,
                est.total_time,
                est.epsilon,
                n_anc,
            )?,
            "trotter1" => baseline_queries(
                BaselineMethod::Trotter1 {
                    commutator_ab: need(est.commutator_ab, "commutator_ab")?,
                },
                est.total_time,
                est.epsilon,
            )?,
            "trotter2" => baseline_queries(
                BaselineMethod::Trotter2 {
                    nested_aab: need(est.nested_aab, "nested_aab")?,
                    nested_bba: need(est.nested_bba, "nested_bba")?,
                },
                est.total_time,
                est.epsilon,
            )?,
            "qdrift" => baseline_queries(
                BaselineMethod::Qdrift {
                    l1_norm: need(est.l1_norm, "l1_norm")?,
                },
                est.total_time,
                est.epsilon,
            )?,
            "dyson1" => baseline_queries(
                BaselineMethod::Dyson1 {
                    alpha: need(est.alpha, "alpha")?,
                },
                est.total_time,
                est.epsilon,
            )?,
            other => {
                return Err(LabError::Config(format!(
                    "unknown estimate method {other:?}"
                )))
            }
        };
        records.push((m.clone(), record));
    }
    Ok(records)
}

fn parse_methods(cfg: &RunConfig, defaults: &[Method]) -> Result<Vec<Method>> {
    match &cfg.methods {
        None => Ok(defaults.to_vec()),
        Some(names) => Method::parse_list(names),
    }
}

fn single_n(cfg: &RunConfig, default: usize) -> Result<usize> {
    match &cfg.n {
        None => Ok(default),
        Some(list) => {
            let v = list.to_vec();
            if v.len() != 1 {
                return Err(LabError::Config(format!(
                    "this study uses a single grid size, got {v:?}"
                )));
            }
            Ok(v[0])
        }
    }
}

fn single_h(cfg: &RunConfig, default: f64) -> Result<f64> {
    match &cfg.h {
        None => Ok(default),
        Some(list) => {
            let v = list.to_vec();
            if v.len() != 1 {
                return Err(LabError::Config(format!(
                    "this study uses a single step size, got {v:?}"
                )));
            }
            Ok(v[0])
        }
    }
}

fn require_schrodinger(scenario: &ScenarioConfig, what: &str) -> Result<()> {
    match scenario {
        ScenarioConfig::Schrodinger { .. } => Ok(()),
        ScenarioConfig::CustomMatrixFile { .. } => Err(LabError::Config(format!(
            "{what} sweeps the grid size and requires the schrodinger scenario"
        ))),
    }
}

/// Fit a log-log slope over the `tail` data points nearest the asymptotic
/// limit (smallest abscissa). Convergence orders and growth exponents are
/// asymptotic statements; coarse points outside the asymptotic regime are
/// reported in the data but excluded from the fitted order.
pub fn tail_slope(points: &[(f64, f64)], tail: usize) -> f64 {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let take = tail.min(sorted.len());
    let xs: Vec<f64> = sorted[..take].iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = sorted[..take].iter().map(|p| p.1.ln()).collect();
    least_squares_slope(&xs, &ys)
}

/// Ordinary least-squares slope over all points.
pub fn full_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    least_squares_slope(&xs, &ys)
}

/// Intercept (as a prefactor) of the least-squares fit over the `tail`
/// smallest-abscissa points.
pub fn tail_prefactor(points: &[(f64, f64)], tail: usize) -> f64 {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let take = tail.min(sorted.len());
    let xs: Vec<f64> = sorted[..take].iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = sorted[..take].iter().map(|p| p.1.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let n = xs.len() as f64;
    let intercept = (ys.iter().sum::<f64>() - slope * xs.iter().sum::<f64>()) / n;
    intercept.exp()
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Deterministic qDRIFT convergence sweep used by the channel acceptance
/// check: composed channel error against the exact conjugation channel for
/// a list of segment counts.
pub fn qdrift_channel_errors(
    td: &TimeDependentHamiltonian,
    t_final: f64,
    segment_counts: &[usize],
    nodes: usize,
    tol: f64,
    probes: usize,
    seed: u64,
) -> Result<Vec<(usize, f64, f64)>> {
    use qhop_core::qdrift::{qdrift_channel, MixedUnitaryChannel};
    let (reference, _) = reference_propagator(td, 0.0, t_final, tol)?;
    let exact = MixedUnitaryChannel::unitary_conjugation(&reference);
    let mut out = Vec::new();
    for &l in segment_counts {
        let h = t_final / l as f64;
        // Compose per-segment channels through their superoperators.
        let mut sup: Option<Array2<Complex64>> = None;
        for j in 0..l {
            let seg = qdrift_channel(td, j as f64 * h, (j + 1) as f64 * h, nodes)?;
            let s = seg.superoperator();
            sup = Some(match sup {
                None => s,
                Some(prev) => s.dot(&prev),
            });
        }
        let sup = sup.expect("at least one segment");
        let exact_sup = exact.superoperator();
        let frobenius = qhop_core::operator::frobenius_norm(&(&sup - &exact_sup));
        // worst-case trace distance over random pure probes
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..probes {
            let psi = qhop_core::random::random_pure_state(td.dim(), &mut rng);
            let rho = qhop_core::qdrift::DensityMatrix::from_pure(&psi);
            let d = td.dim();
            let vec_rho =
                ndarray::Array1::from_shape_fn(d * d, |idx| rho.matrix()[[idx / d, idx % d]]);
            let out_vec = sup.dot(&vec_rho);
            let exact_vec = exact_sup.dot(&vec_rho);
            let diff = Array2::from_shape_fn((d, d), |(i, j)| {
                out_vec[i * d + j] - exact_vec[i * d + j]
            });
            worst = worst.max(qhop_core::qdrift::trace_norm(&diff));
        }
        out.push((l, worst, frobenius));
    }
    Ok(out)
}
