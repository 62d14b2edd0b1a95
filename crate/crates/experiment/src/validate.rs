//! Invariant checks on small instances. Each check reports a measured
//! margin; a failing check makes the suite fail, an unmet hypothesis does not.

use std::fmt::Write as _;
use std::sync::Arc;

use mosp::baselines::{odg_dual, odg_primal, run_odg, OdgInformation, OdgState};
use mosp::linalg::{self, Matrix};
use mosp::metrics::{
    bound_checks, constraint_variation, drift_check, drift_margin, dual_variation, dynamic_fit, measure_constants,
    minimizer_variation, optimality_gap, regret_bound, static_regret, CheckStatus,
};
use mosp::netalloc::{
    gen_case, gen_network, generate_instance, network_cost, network_cost_gradient, network_problems,
    queue_update, run_distributed, run_network_mosp, slater_margin, write_scenario, CaseTag, CloudNetwork,
    NetworkInstance, QueueState, ScenarioStream, SlotParams,
};
use mosp::oco::{horizon_stepsizes, mosp_dual_step, mosp_primal_step, run_mosp, LearnerState, RoundTrace};
use mosp::oracle::{Constraint, FnConstraint, SeparableQuadratic, SlotProblem};
use mosp::solvers::{
    best_static, dual_function_value, offline_optimum, per_slot_optimum, ProxSettings, SolverSettings,
};
use mosp::{DecisionVector, FeasibleBox, MospError, MultiplierVector, StepsizePair};

/// Deliberate corruptions used to confirm that the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// `λ_{t+1} = [λ_t − μ g_t]⁺`
    DualSignFlip,
}

impl std::str::FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dual-sign-flip" => Ok(Fault::DualSignFlip),
            other => Err(format!("unknown fault {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationOptions {
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { seed: 1, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: detail.into(),
        }
    }

    fn error(name: impl Into<String>, e: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Fail,
            detail: format!("error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(|c| c.status.is_failure())
    }

    pub fn find(&self, prefix: &str) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "[{}] {}: {}", c.status, c.name, c.detail);
        }
        let failed = self.checks.iter().filter(|c| c.status.is_failure()).count();
        let _ = writeln!(s, "{} checks, {} failed", self.checks.len(), failed);
        s
    }
}

/// Horizon of the small instances.
pub const SMALL_HORIZON: usize = 50;

/// A small network instance whose stream holds `T + 1` slots so that the
/// constraint variation has `T` terms.
pub struct SmallInstance {
    pub label: String,
    pub instance: NetworkInstance<f64>,
    pub horizon: usize,
}

impl SmallInstance {
    fn problems(&self) -> Result<Vec<SlotProblem<f64>>, MospError> {
        network_problems(&self.instance.network, &self.instance.stream, self.horizon + 1)
    }
}

/// Loads with amplitude 0.5 around 20 and prices around 2, drifting over a
/// 100-slot period; the Slater margin far exceeds the constraint variation.
fn calm_stream(j: usize, k: usize, slots: usize, seed: u64) -> ScenarioStream<f64> {
    let phase = (seed % 97) as f64 * 0.1;
    ScenarioStream {
        mapping_nodes: j,
        data_centers: k,
        seed,
        case: CaseTag::Custom,
        slots: (1..=slots)
            .map(|t| {
                let w = 2.0 * std::f64::consts::PI * t as f64 / 100.0 + phase;
                SlotParams {
                    prices: (0..k).map(|i| 2.0 + 0.3 * (w + i as f64).sin()).collect(),
                    loads: (0..j).map(|i| 20.0 + 0.5 * (w + i as f64).cos()).collect(),
                }
            })
            .collect(),
    }
}

pub fn calm_instance(j: usize, k: usize, horizon: usize, seed: u64) -> Result<NetworkInstance<f64>, MospError> {
    let network = gen_network(j, k, seed)?;
    let stream = calm_stream(j, k, horizon + 1, seed);
    let slater = slater_margin(&network, &stream, horizon + 1)?;
    Ok(NetworkInstance {
        network,
        stream,
        slater,
        effective_seed: seed,
        attempts: 1,
    })
}

/// Case 1 and Case 2 on `J = 2, K = 3` plus a calm instance on which the bound
/// hypotheses hold.
pub fn small_instances(seed: u64) -> Result<Vec<SmallInstance>, MospError> {
    let t = SMALL_HORIZON;
    let mut out = Vec::new();
    for case in [CaseTag::Case1, CaseTag::Case2] {
        out.push(SmallInstance {
            label: format!("{case} J=2 K=3 seed {seed}"),
            instance: generate_instance(case, 2, 3, t + 1, seed, 64)?,
            horizon: t,
        });
    }
    out.push(SmallInstance {
        label: format!("calm J=2 K=3 seed {seed}"),
        instance: calm_instance(2, 3, t, seed)?,
        horizon: t,
    });
    Ok(out)
}

/// `J = K = 1` instances with loads scaled under the link cap, for the
/// offline benchmark and the dual-variation grid (`m = 2`).
pub fn single_link_instances(seed: u64, horizon: usize) -> Result<Vec<SmallInstance>, MospError> {
    let mut out = Vec::new();
    for case in [CaseTag::Case1, CaseTag::Case2] {
        let network = gen_network::<f64>(1, 1, seed)?;
        let mut stream = gen_case::<f64>(case, 1, 1, horizon + 1, seed)?;
        let scale = 0.5 * network.link_caps()[0] / 151.0;
        for s in &mut stream.slots {
            s.loads.iter_mut().for_each(|b| *b *= scale);
        }
        stream.case = CaseTag::Custom;
        let slater = slater_margin(&network, &stream, horizon + 1)?;
        out.push(SmallInstance {
            label: format!("{case} scaled J=K=1 seed {seed}"),
            instance: NetworkInstance {
                network,
                stream,
                slater,
                effective_seed: seed,
                attempts: 1,
            },
            horizon,
        });
    }
    Ok(out)
}

/// The learner written out step by step so that a fault can replace the
/// dual update.
pub fn mosp_with_fault(
    problems: &[SlotProblem<f64>],
    bx: &FeasibleBox<f64>,
    steps: StepsizePair<f64>,
    x0: DecisionVector<f64>,
    fault: Option<Fault>,
) -> Result<Vec<RoundTrace<f64>>, MospError> {
    let m = problems.first().map(|p| p.constraint.dim_out()).unwrap_or(0);
    let mut state = LearnerState {
        x_prev: x0.clone(),
        lambda: MultiplierVector::zeros(m),
        t: 1,
        steps,
        restart_period: None,
    };
    let prox = ProxSettings::default();
    let mut out = Vec::with_capacity(problems.len());
    for (i, p) in problems.iter().enumerate() {
        let x = if i == 0 {
            x0.clone()
        } else {
            mosp_primal_step(&state, &problems[i - 1], bx, &prox)?
        };
        let g = p.constraint.value(&x);
        let lambda_next = match fault {
            None => mosp_dual_step(&state.lambda, &g, steps.mu())?,
            Some(Fault::DualSignFlip) => {
                let flipped: Vec<f64> = g.iter().map(|v| -v).collect();
                mosp_dual_step(&state.lambda, &flipped, steps.mu())?
            }
        };
        let drift = (linalg::norm_sq(&lambda_next) - linalg::norm_sq(&state.lambda)) / 2.0;
        out.push(RoundTrace {
            t: i + 1,
            loss: p.loss.value(&x),
            x: x.clone(),
            lambda: state.lambda.clone(),
            lambda_next: lambda_next.clone(),
            constraint: g,
            drift,
            queue: None,
        });
        state.x_prev = x;
        state.lambda = lambda_next;
        state.t += 1;
    }
    Ok(out)
}

fn default_steps(horizon: usize) -> Result<StepsizePair<f64>, MospError> {
    horizon_stepsizes(horizon, 1.0 / 3.0, 0.05, 50.0)
}

struct Runs {
    /// (label, trace, μ)
    traces: Vec<(String, Vec<RoundTrace<f64>>, f64)>,
}

fn learner_runs(inst: &SmallInstance, fault: Option<Fault>) -> Result<Runs, MospError> {
    let problems = &inst.problems()?[..inst.horizon];
    let bx = inst.instance.network.feasible_box();
    let steps = default_steps(inst.horizon)?;
    let mut traces = Vec::new();
    for (corner, x0) in [("x0=lower", bx.lower_corner()), ("x0=upper", DecisionVector::new(bx.upper().to_vec()))] {
        let tr = mosp_with_fault(problems, &bx, steps, x0, fault)?;
        traces.push((format!("mosp {corner}"), tr, steps.mu()));
    }
    for mu in [0.5, 1.0] {
        let tr = run_odg(&inst.instance.stream, &inst.instance.network, mu, inst.horizon, OdgInformation::Delayed)?;
        traces.push((format!("odg mu={mu}"), tr, mu));
    }
    Ok(Runs { traces })
}

/// Drift inequality and the multiplier/fit relation on every run.
pub fn trace_checks(instances: &[SmallInstance], fault: Option<Fault>) -> Vec<Check> {
    let mut out = Vec::new();
    for inst in instances {
        let runs = match learner_runs(inst, fault) {
            Ok(r) => r,
            Err(e) => {
                out.push(Check::error(format!("drift inequality [{}]", inst.label), e));
                continue;
            }
        };
        let mut bad = Vec::new();
        let mut worst = f64::NEG_INFINITY;
        let mut fit_bad = Vec::new();
        let mut fit_margin = f64::INFINITY;
        for (label, tr, mu) in &runs.traces {
            let ok = drift_check(tr, *mu);
            let fails = ok.iter().filter(|v| !**v).count();
            if fails > 0 {
                bad.push(format!("{label}: {fails} slots"));
            }
            worst = drift_margin(tr, *mu).into_iter().map(|m| -m).fold(worst, f64::max);
            let g: Vec<Vec<f64>> = tr.iter().map(|r| r.constraint.clone()).collect();
            let fit = *dynamic_fit(&g).unwrap_or_default().last().unwrap_or(&0.0);
            let lam = tr.last().map(|r| r.lambda_next.norm()).unwrap_or(0.0);
            let tol = 1e-9 * (1.0 + lam / mu);
            fit_margin = fit_margin.min(lam / mu - fit);
            if fit > lam / mu + tol {
                fit_bad.push(label.clone());
            }
        }
        out.push(Check::new(
            format!("drift inequality [{}]", inst.label),
            bad.is_empty(),
            if bad.is_empty() {
                format!("max drift − bound = {worst:.3e} over {} runs", runs.traces.len())
            } else {
                format!("violated in {}", bad.join(", "))
            },
        ));
        out.push(Check::new(
            format!("fit below final multiplier over mu [{}]", inst.label),
            fit_bad.is_empty(),
            format!("min ‖λ_T+1‖/μ − Fit_T = {fit_margin:.3e}"),
        ));
    }
    out
}

/// Measured inputs and outcome of the regret bound on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretBoundOutcome {
    pub label: String,
    pub epsilon: f64,
    pub v_g_max: f64,
    pub lambda_bar: Option<f64>,
    pub max_multiplier: f64,
    pub regret: f64,
    pub bound: Option<f64>,
}

/// Dual bound, fit bound and the dynamic regret bound (1 % slack).
pub fn bound_outcomes(instances: &[SmallInstance]) -> Result<Vec<RegretBoundOutcome>, MospError> {
    let settings = SolverSettings::default();
    let mut out = Vec::new();
    for inst in instances {
        let all = inst.problems()?;
        let t = inst.horizon;
        let problems = &all[..t];
        let net = &inst.instance.network;
        let bx = net.feasible_box();
        let steps = default_steps(t)?;
        let trace = run_network_mosp(net, &inst.instance.stream, t, steps, None)?;
        let constants = measure_constants(&all, &bx)?;
        let cv = constraint_variation(&all, &bx)?;
        let epsilon = slater_margin(net, &inst.instance.stream, t + 1)?.epsilon;
        let report = bound_checks(&trace, &constants, epsilon, cv.max, &steps)?;
        let opt: Vec<DecisionVector<f64>> = problems
            .iter()
            .map(|p| per_slot_optimum(p, &bx, &settings).map(|r| r.solution))
            .collect::<Result<_, _>>()?;
        let regret: f64 = trace
            .iter()
            .zip(problems.iter().zip(&opt))
            .map(|(r, (p, x))| r.loss - p.loss.value(x))
            .sum();
        let bound = report
            .lambda_bar
            .map(|bar| regret_bound(&constants, bar, minimizer_variation(&opt).unwrap_or(0.0), cv.total, &steps, t));
        out.push(RegretBoundOutcome {
            label: inst.label.clone(),
            epsilon,
            v_g_max: cv.max,
            lambda_bar: report.lambda_bar,
            max_multiplier: report.max_multiplier,
            regret,
            bound,
        });
    }
    Ok(out)
}

pub const REGRET_BOUND_SLACK: f64 = 0.01;

pub fn bound_check_list(instances: &[SmallInstance]) -> Vec<Check> {
    let outcomes = match bound_outcomes(instances) {
        Ok(o) => o,
        Err(e) => return vec![Check::error("bounds", e)],
    };
    let mut out = Vec::new();
    for o in outcomes {
        let hyp = format!("ε = {:.4}, V̄(g) = {:.4}", o.epsilon, o.v_g_max);
        match (o.lambda_bar, o.bound) {
            (Some(bar), Some(bound)) => {
                out.push(Check::new(
                    format!("dual bound [{}]", o.label),
                    o.max_multiplier <= bar,
                    format!("{hyp}; max ‖λ_t‖ = {:.4} ≤ λ̄ = {:.4}", o.max_multiplier, bar),
                ));
                out.push(Check::new(
                    format!("regret bound [{}]", o.label),
                    o.regret <= bound * (1.0 + REGRET_BOUND_SLACK),
                    format!("Reg_d = {:.4} vs bound {:.4}", o.regret, bound),
                ));
            }
            _ => {
                for name in ["dual bound", "regret bound"] {
                    out.push(Check {
                        name: format!("{name} [{}]", o.label),
                        status: CheckStatus::HypothesisUnmet,
                        detail: format!("{hyp}; ε ≤ V̄(g)"),
                    });
                }
            }
        }
    }
    out
}

pub fn distributed_checks(instances: &[SmallInstance]) -> Vec<Check> {
    instances
        .iter()
        .map(|inst| {
            let name = format!("distributed equals centralized [{}]", inst.label);
            let run = || -> Result<f64, MospError> {
                let net = &inst.instance.network;
                let steps = default_steps(inst.horizon)?;
                let cen = run_network_mosp(net, &inst.instance.stream, inst.horizon, steps, None)?;
                let dist = run_distributed(net, &inst.instance.stream.slots[..inst.horizon], steps, None)?;
                Ok(dist
                    .iter()
                    .zip(&cen)
                    .map(|(d, c)| {
                        linalg::norm_inf(&linalg::sub(&d.x, &c.x))
                            .max(linalg::norm_inf(&linalg::sub(&d.lambda_next, &c.lambda_next)))
                    })
                    .fold(0.0, f64::max))
            };
            match run() {
                Ok(dev) => Check::new(name, dev < 1e-9, format!("max deviation {dev:.3e}")),
                Err(e) => Check::error(name, e),
            }
        })
        .collect()
}

/// Queue relaxation, `μ q_t = λ_t`, restart with `Δ = T`, ODG/learner dual
/// update agreement.
pub fn queue_and_restart_checks(instances: &[SmallInstance]) -> Vec<Check> {
    let mut out = Vec::new();
    for inst in instances {
        let net = &inst.instance.network;
        let t = inst.horizon;
        let res = (|| -> Result<Vec<Check>, MospError> {
            let steps = default_steps(t)?;
            let tr = run_network_mosp(net, &inst.instance.stream, t, steps, None)?;
            let mut sum = vec![0.0; net.nodes()];
            let mut gap = f64::INFINITY;
            let mut q = QueueState::zeros(net.nodes());
            for (r, slot) in tr.iter().zip(&inst.instance.stream.slots) {
                q = queue_update(&q, &r.x, &slot.loads, net)?;
                for (s, g) in sum.iter_mut().zip(&r.constraint) {
                    *s += g;
                }
                for (qi, si) in q.as_slice().iter().zip(&sum) {
                    gap = gap.min(qi - si);
                }
            }
            let mut scaled = 0.0f64;
            for r in &tr {
                let q = r.queue.as_ref().expect("network runs carry queues");
                for (qi, li) in q.iter().zip(r.lambda_next.iter()) {
                    scaled = scaled.max((steps.mu() * qi - li).abs() / (1.0 + li.abs()));
                }
            }
            let problems = &inst.problems()?[..t];
            let bx = net.feasible_box();
            let plain = run_mosp(problems, &bx, steps, bx.lower_corner(), None)?;
            let restarted = run_mosp(problems, &bx, steps, bx.lower_corner(), Some(t))?;
            Ok(vec![
                Check::new(
                    format!("queue relaxation [{}]", inst.label),
                    gap >= -1e-9,
                    format!("min_t,i q_t+1 − Σ(Ax+b) = {gap:.3e}"),
                ),
                Check::new(
                    format!("queue equals multiplier over mu [{}]", inst.label),
                    scaled <= 1e-9,
                    format!("max relative |μq − λ| = {scaled:.3e}"),
                ),
                Check::new(
                    format!("restart with period T is a no-op [{}]", inst.label),
                    plain == restarted,
                    "traces compared bit for bit",
                ),
            ])
        })();
        match res {
            Ok(c) => out.extend(c),
            Err(e) => out.push(Check::error(format!("queue checks [{}]", inst.label), e)),
        }
    }
    let mut worst = 0.0f64;
    for i in 0..50 {
        let l: Vec<f64> = (0..3).map(|k| quasi(i * 3 + k) * 5.0).collect();
        let g: Vec<f64> = (0..3).map(|k| quasi(i * 7 + k + 1) * 8.0 - 4.0).collect();
        let lam = MultiplierVector::new(l).expect("non-negative");
        let a = mosp_dual_step(&lam, &g, 0.7).expect("lengths match");
        let b = odg_dual(&OdgState { lambda: lam, mu_odg: 0.7 }, &g).expect("lengths match");
        worst = worst.max(linalg::norm_inf(&linalg::sub(&a, &b)));
    }
    out.push(Check::new(
        "ODG and learner dual updates coincide",
        worst == 0.0,
        format!("max difference {worst:e} over 50 inputs"),
    ));
    out
}

/// Low-discrepancy points in `[0, 1)`.
fn quasi(i: usize) -> f64 {
    ((i as f64 + 1.0) * 0.618_033_988_749_894_9).fract()
}

/// Minimises `f` over a rectangle by repeated grid refinement: 201 points per
/// axis, then a window of ±3 cells around the best point, six times.
/// Infeasible points return `None`.
pub fn grid_min_2d(f: impl Fn(f64, f64) -> Option<f64>, lo: [f64; 2], hi: [f64; 2]) -> Option<(f64, [f64; 2])> {
    let (mut a, mut b) = (lo, hi);
    let mut best: Option<(f64, [f64; 2])> = None;
    for _ in 0..6 {
        let n = 200;
        let h = [(b[0] - a[0]) / n as f64, (b[1] - a[1]) / n as f64];
        for i in 0..=n {
            for j in 0..=n {
                let p = [a[0] + i as f64 * h[0], a[1] + j as f64 * h[1]];
                if let Some(v) = f(p[0], p[1]) {
                    if best.is_none_or(|(bv, _)| v < bv) {
                        best = Some((v, p));
                    }
                }
            }
        }
        let (_, p) = best?;
        for d in 0..2 {
            a[d] = (p[d] - 3.0 * h[d]).max(lo[d]);
            b[d] = (p[d] + 3.0 * h[d]).min(hi[d]);
        }
    }
    best
}

/// Value errors of the solvers and closed forms against grid or
/// finite-difference oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleErrors {
    pub per_slot: f64,
    pub offline: f64,
    pub static_: f64,
    pub odg_primal: f64,
    pub prox_general: f64,
    pub gradient: f64,
}

pub const SOLVER_VALUE_TOL: f64 = 1e-4;
pub const ODG_VALUE_TOL: f64 = 1e-3;
pub const PROX_TOL: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-6;

fn one_link(c: f64, cap_x: f64, cap_y: f64) -> CloudNetwork<f64> {
    CloudNetwork::new(1, 1, vec![cap_x], vec![c], vec![cap_y]).expect("positive tables")
}

pub fn oracle_errors() -> Result<OracleErrors, MospError> {
    let settings = SolverSettings::default();

    // per-slot: one link, optimum on the constraint boundary
    let net = one_link(1.3, 10.0, 8.0);
    let mut per_slot: f64 = 0.0;
    for (p, b) in [(2.0, 2.37), (0.7, 6.1), (3.0, 0.0)] {
        let params = SlotParams { prices: vec![p], loads: vec![b] };
        let prob = net.slot_problem(&params)?;
        let bx = net.feasible_box();
        let sol = per_slot_optimum(&prob, &bx, &settings)?;
        let value = prob.loss.value(&sol.solution);
        let (grid, _) = grid_min_2d(
            |x, y| {
                let g = prob.constraint.value(&[x, y]);
                (g.iter().all(|v| *v <= 0.0)).then(|| prob.loss.value(&[x, y]))
            },
            [0.0, 0.0],
            [10.0, 8.0],
        )
        .ok_or(MospError::Infeasible { margin: 0.0 })?;
        per_slot = per_slot.max((value - grid).abs());
    }

    // offline: two scalar slots coupled through Σ (a_t x_t + b_t) ≤ 0
    let slots = [(1.0, -1.0, -1.0, 2.0), (2.0, 0.5, -1.0, 1.5)];
    let one = Arc::new(Matrix::from_rows(&[vec![-1.0]]));
    let problems: Vec<SlotProblem<f64>> = slots
        .iter()
        .map(|&(w, q, _, b)| {
            SlotProblem::new(
                SeparableQuadratic::new(vec![w], vec![q]).expect("finite"),
                Constraint::affine(one.clone(), vec![b]).expect("shapes match"),
            )
        })
        .collect();
    let bx1 = FeasibleBox::uniform(1, 0.0, 3.0)?;
    let off = offline_optimum(&problems, &bx1, &settings)?;
    let off_value = off.total_cost(&problems);
    let f = |t: usize, x: f64| slots[t].0 * x * x + slots[t].1 * x;
    let (grid, _) = grid_min_2d(
        |x1, x2| (slots[0].3 - x1 + slots[1].3 - x2 <= 0.0).then(|| f(0, x1) + f(1, x2)),
        [0.0, 0.0],
        [3.0, 3.0],
    )
    .ok_or(MospError::Infeasible { margin: 0.0 })?;
    let offline = (off_value - grid).abs();

    // static: three one-link slots
    let params = [(2.0, 1.2), (1.0, 3.4), (2.5, 2.2)];
    let problems: Vec<SlotProblem<f64>> = params
        .iter()
        .map(|&(p, b)| net.slot_problem(&SlotParams { prices: vec![p], loads: vec![b] }))
        .collect::<Result<_, _>>()?;
    let bx = net.feasible_box();
    let st = best_static(&problems, &bx, &settings)?;
    let st_value: f64 = problems.iter().map(|p| p.loss.value(&st.solution)).sum();
    let (grid, _) = grid_min_2d(
        |x, y| {
            let feasible = problems.iter().all(|p| p.constraint.value(&[x, y]).iter().all(|v| *v <= 0.0));
            feasible.then(|| problems.iter().map(|p| p.loss.value(&[x, y])).sum())
        },
        [0.0, 0.0],
        [10.0, 8.0],
    )
    .ok_or(MospError::Infeasible { margin: 0.0 })?;
    let static_ = (st_value - grid).abs();

    // ODG closed form against the Lagrangian grid
    let mut odg: f64 = 0.0;
    for (lj, lk, p) in [(6.0, 2.0, 1.0), (1.0, 9.0, 0.5), (40.0, 3.0, 2.0), (0.0, 0.0, 1.0)] {
        let params = SlotParams { prices: vec![p], loads: vec![1.0] };
        let lam = MultiplierVector::new(vec![lj, lk])?;
        let x = odg_primal(&lam, &params, &net)?;
        let lag = |x: &[f64]| {
            network_cost(x, &params.prices, &net).expect("dims match")
                + linalg::dot(&lam, &net.constraint(&params.loads).expect("dims match").value(x))
        };
        let (grid, _) = grid_min_2d(|a, b| Some(lag(&[a, b])), [0.0, 0.0], [10.0, 8.0])
            .ok_or(MospError::Infeasible { margin: 0.0 })?;
        odg = odg.max((lag(&x) - grid).abs());
    }

    // general-path prox against the affine closed form on a J = K = 2 network
    let net2 = gen_network::<f64>(2, 2, 3)?;
    let bx2 = net2.feasible_box();
    let mut prox_err: f64 = 0.0;
    for i in 0..5 {
        let params = SlotParams {
            prices: vec![1.0 + quasi(i), 2.0 + quasi(i + 10)],
            loads: vec![30.0 * quasi(i + 20), 60.0 * quasi(i + 30)],
        };
        let affine = net2.slot_problem(&params)?;
        let (matrix, offset) = match &affine.constraint {
            Constraint::Affine { matrix, offset } => (matrix.clone(), offset.clone()),
            Constraint::General(_) => unreachable!("network constraints are affine"),
        };
        let (m2, o2) = (matrix.clone(), offset.clone());
        let general = SlotProblem {
            loss: affine.loss.clone(),
            constraint: Constraint::general(FnConstraint::new(
                matrix.rows(),
                move |x: &[f64]| {
                    let mut v = m2.mul_vec(x);
                    v.iter_mut().zip(&o2).for_each(|(a, b)| *a += b);
                    v
                },
                move |_x: &[f64], w: &[f64]| matrix.tr_mul_vec(w),
            )),
        };
        let _ = offset;
        let x_prev: Vec<f64> = bx2.upper().iter().enumerate().map(|(k, u)| u * quasi(i * 11 + k)).collect();
        let state = LearnerState {
            x_prev: DecisionVector::new(x_prev),
            lambda: MultiplierVector::new((0..4).map(|k| 50.0 * quasi(i * 5 + k + 3)).collect())?,
            t: 2,
            steps: StepsizePair::new(0.05, 1.0)?,
            restart_period: None,
        };
        let prox = ProxSettings {
            tolerance: 1e-12,
            max_iterations: 100_000,
        };
        let a = mosp_primal_step(&state, &affine, &bx2, &prox)?;
        let b = mosp_primal_step(&state, &general, &bx2, &prox)?;
        prox_err = prox_err.max(linalg::norm_inf(&linalg::sub(&a, &b)));
    }

    // analytic network gradient against central differences, h = 1e-5
    let mut gradient: f64 = 0.0;
    for i in 0..20 {
        let prices = vec![1.0 + 2.0 * quasi(i), 1.0 + 2.0 * quasi(i + 40)];
        let x: Vec<f64> = bx2.upper().iter().enumerate().map(|(k, u)| u * quasi(i * 13 + k)).collect();
        let g = network_cost_gradient(&x, &prices, &net2)?;
        let h = 1e-5;
        for k in 0..x.len() {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (network_cost(&up, &prices, &net2)? - network_cost(&down, &prices, &net2)?) / (2.0 * h);
            gradient = gradient.max((fd - g[k]).abs());
        }
    }

    Ok(OracleErrors {
        per_slot,
        offline,
        static_,
        odg_primal: odg,
        prox_general: prox_err,
        gradient,
    })
}

pub fn oracle_checks() -> Vec<Check> {
    match oracle_errors() {
        Ok(e) => vec![
            Check::new("per-slot solver vs grid", e.per_slot <= SOLVER_VALUE_TOL, format!("value error {:.3e}", e.per_slot)),
            Check::new("offline solver vs grid", e.offline <= SOLVER_VALUE_TOL, format!("value error {:.3e}", e.offline)),
            Check::new("static solver vs grid", e.static_ <= SOLVER_VALUE_TOL, format!("value error {:.3e}", e.static_)),
            Check::new("ODG primal vs grid", e.odg_primal <= ODG_VALUE_TOL, format!("value error {:.3e}", e.odg_primal)),
            Check::new(
                "general prox vs affine closed form",
                e.prox_general <= PROX_TOL,
                format!("max coordinate error {:.3e}", e.prox_general),
            ),
            Check::new(
                "cost gradient vs finite differences",
                e.gradient <= GRADIENT_TOL,
                format!("max error {:.3e}", e.gradient),
            ),
        ],
        Err(e) => vec![Check::error("oracles", e)],
    }
}

/// Optimality gap decomposition and its dual-variation bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GapOutcome {
    pub label: String,
    pub gap: f64,
    pub u1: f64,
    pub u2: f64,
    pub v_dual: f64,
    pub horizon: usize,
}

pub fn gap_outcomes(instances: &[SmallInstance]) -> Result<Vec<GapOutcome>, MospError> {
    let settings = SolverSettings::default();
    let mut out = Vec::new();
    for inst in instances {
        let t = inst.horizon;
        let problems = &inst.problems()?[..t];
        let net = &inst.instance.network;
        let bx = net.feasible_box();
        let steps = default_steps(t)?;
        let trace = run_network_mosp(net, &inst.instance.stream, t, steps, None)?;
        let online: Vec<f64> = trace.iter().map(|r| r.loss).collect();
        let per: Vec<_> = problems
            .iter()
            .map(|p| per_slot_optimum(p, &bx, &settings))
            .collect::<Result<_, _>>()?;
        let per_losses: Vec<f64> = per.iter().zip(problems).map(|(r, p)| p.loss.value(&r.solution)).collect();
        let off = offline_optimum(problems, &bx, &settings)?;
        let off_losses: Vec<f64> = off.decisions.iter().zip(problems).map(|(x, p)| p.loss.value(x)).collect();
        let gap = optimality_gap(&online, &per_losses, &off_losses)?;
        let extra: Vec<MultiplierVector<f64>> = per
            .iter()
            .map(|r| r.multiplier.clone())
            .chain(std::iter::once(off.multiplier.clone()))
            .collect();
        let cap = 2.0 * extra.iter().map(|l| linalg::norm_inf(l)).fold(1.0, f64::max);
        let v_dual = dual_variation(problems, &bx, cap, 41, &extra)?;
        out.push(GapOutcome {
            label: inst.label.clone(),
            gap: gap.gap,
            u1: gap.u1,
            u2: gap.u2,
            v_dual,
            horizon: t,
        });
    }
    Ok(out)
}

pub fn gap_checks(instances: &[SmallInstance]) -> Vec<Check> {
    match gap_outcomes(instances) {
        Ok(list) => list
            .into_iter()
            .flat_map(|g| {
                let ident = (g.gap - (g.u1 + g.u2)).abs();
                let rhs = 2.0 * g.horizon as f64 * g.v_dual;
                [
                    Check::new(
                        format!("gap identity [{}]", g.label),
                        ident <= 1e-9 * (1.0 + g.gap.abs()),
                        format!("|OptGap − U1 − U2| = {ident:.3e}"),
                    ),
                    Check::new(
                        format!("gap decomposition dual-variation bound [{}]", g.label),
                        g.u2 <= rhs,
                        format!("U2 = {:.4} ≤ 2T·V(D) = {:.4}", g.u2, rhs),
                    ),
                    Check::new(
                        format!("offline not worse than per-slot [{}]", g.label),
                        g.u2 >= -1e-4,
                        format!("U2 = {:.4e}", g.u2),
                    ),
                ]
            })
            .collect(),
        Err(e) => vec![Check::error("gap identity", e)],
    }
}

/// Static regret below dynamic regret, weak duality and scenario
/// determinism.
pub fn misc_checks(instances: &[SmallInstance], seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let settings = SolverSettings::default();
    for inst in instances {
        let res = (|| -> Result<Vec<Check>, MospError> {
            let t = inst.horizon;
            let problems = &inst.problems()?[..t];
            let net = &inst.instance.network;
            let bx = net.feasible_box();
            let trace = run_network_mosp(net, &inst.instance.stream, t, default_steps(t)?, None)?;
            let online: Vec<f64> = trace.iter().map(|r| r.loss).collect();
            let per: Vec<_> = problems
                .iter()
                .map(|p| per_slot_optimum(p, &bx, &settings))
                .collect::<Result<_, _>>()?;
            let dynamic: f64 = online
                .iter()
                .zip(per.iter().zip(problems))
                .map(|(o, (r, p))| o - p.loss.value(&r.solution))
                .sum();
            let mut checks = Vec::new();
            match static_regret(&online, problems, &bx, &settings)? {
                Some(s) => checks.push(Check::new(
                    format!("static regret below dynamic [{}]", inst.label),
                    s <= dynamic + 2e-4,
                    format!("Reg_s = {s:.4}, Reg_d = {dynamic:.4}"),
                )),
                None => checks.push(Check {
                    name: format!("static regret below dynamic [{}]", inst.label),
                    status: CheckStatus::HypothesisUnmet,
                    detail: "no fixed decision is feasible in every slot".into(),
                }),
            }
            let mut worst = f64::NEG_INFINITY;
            for (r, p) in per.iter().zip(problems).take(10) {
                for i in 0..5 {
                    let lam = MultiplierVector::new((0..net.nodes()).map(|k| 100.0 * quasi(i * 9 + k)).collect())?;
                    let d = dual_function_value(p, &lam, &bx)?.value;
                    worst = worst.max(d - p.loss.value(&r.solution));
                }
            }
            checks.push(Check::new(
                format!("weak duality [{}]", inst.label),
                worst <= 1e-6,
                format!("max D(λ) − f(x*) = {worst:.3e}"),
            ));
            Ok(checks)
        })();
        match res {
            Ok(c) => out.extend(c),
            Err(e) => out.push(Check::error(format!("static regret [{}]", inst.label), e)),
        }
    }
    let det = (|| -> Result<bool, MospError> {
        let a = gen_case::<f64>(CaseTag::Case2, 3, 2, 40, seed)?;
        let b = gen_case::<f64>(CaseTag::Case2, 3, 2, 40, seed)?;
        let long = gen_case::<f64>(CaseTag::Case2, 3, 2, 80, seed)?;
        Ok(write_scenario(&a) == write_scenario(&b) && long.slots[..40] == a.slots[..])
    })();
    out.push(match det {
        Ok(ok) => Check::new("scenario determinism", ok, "byte-identical export; longer horizon only appends"),
        Err(e) => Check::error("scenario determinism", e),
    });
    out
}

/// Runs every check. With a fault injected the learner runs inside the
/// drift and fit checks use the corrupted dual update.
pub fn validate_suite(opts: &ValidationOptions) -> ValidationReport {
    let mut checks = Vec::new();
    let small = match small_instances(opts.seed) {
        Ok(s) => s,
        Err(e) => {
            return ValidationReport {
                checks: vec![Check::error("instance generation", e)],
            }
        }
    };
    let single = match single_link_instances(opts.seed, 20) {
        Ok(s) => s,
        Err(e) => {
            return ValidationReport {
                checks: vec![Check::error("instance generation", e)],
            }
        }
    };
    checks.extend(trace_checks(&small, opts.fault));
    checks.extend(bound_check_list(&small));
    checks.extend(distributed_checks(&small));
    checks.extend(queue_and_restart_checks(&small));
    checks.extend(oracle_checks());
    checks.extend(gap_checks(&single));
    checks.extend(misc_checks(&small, opts.seed));
    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_refinement_finds_boundary_optimum() {
        // min x² + y² s.t. x + y ≥ 1 → 1/2 at (1/2, 1/2)
        let (v, p) = grid_min_2d(|x, y| (x + y >= 1.0).then(|| x * x + y * y), [0.0, 0.0], [3.0, 3.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-8);
        assert!((p[0] - 0.5).abs() < 1e-4 && (p[1] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn fault_parses() {
        assert_eq!("dual-sign-flip".parse::<Fault>().unwrap(), Fault::DualSignFlip);
        assert!("other".parse::<Fault>().is_err());
    }

    #[test]
    fn unfaulted_loop_matches_learner() {
        let inst = &small_instances(2).unwrap()[0];
        let problems = &inst.problems().unwrap()[..inst.horizon];
        let bx = inst.instance.network.feasible_box();
        let steps = default_steps(inst.horizon).unwrap();
        let a = mosp_with_fault(problems, &bx, steps, bx.lower_corner(), None).unwrap();
        let b = run_mosp(problems, &bx, steps, bx.lower_corner(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sign_flip_breaks_drift() {
        let small = small_instances(1).unwrap();
        let checks = trace_checks(&small, Some(Fault::DualSignFlip));
        assert!(checks
            .iter()
            .any(|c| c.name.starts_with("drift inequality") && c.status == CheckStatus::Fail));
    }
}
