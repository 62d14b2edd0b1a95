//! Seeded runs of the learner, ODG and the benchmarks on network instances.

use std::path::Path;

use mosp::baselines::{run_odg, OdgInformation};
use mosp::linalg;
use mosp::metrics::{drift_check, dynamic_fit, dynamic_regret};
use mosp::netalloc::{
    generate_instance, network_problems, queue_update, read_scenario, run_distributed, run_network_mosp,
    slater_margin, gen_network, CaseTag, NetworkInstance, QueueState,
};
use mosp::oco::{horizon_stepsizes, RoundTrace};
use mosp::oracle::SlotProblem;
use mosp::solvers::{best_static, offline_optimum, per_slot_optimum, SolverSettings};
use mosp::{DecisionVector, MospError, StepsizePair};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{CaseSpec, ExperimentConfig};
use crate::stats::median;

/// Re-seeding attempts allowed by the Slater guard.
pub const MAX_ATTEMPTS: usize = 64;

/// Largest allowed gap between the distributed and centralized traces.
pub const DISTRIBUTED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] MospError),
    #[error("distributed and centralized traces differ by {deviation:e} at slot {slot}")]
    Divergence { deviation: f64, slot: usize },
    #[error("scenario {path}: {message}")]
    Scenario { path: String, message: String },
}

/// One CSV row: algorithm `algorithm` in slot `t` of the run with `seed`.
/// Cumulative columns cover slots `1..=t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub algorithm: String,
    pub t: usize,
    pub cost: f64,
    pub cost_perslot: f64,
    pub cost_offline: Option<f64>,
    pub regret_d: f64,
    pub fit_d: f64,
    pub lambda_norm: Option<f64>,
    pub queue_norm: f64,
    pub avg_cost: f64,
}

pub const COLUMNS: [&str; 11] = [
    "seed",
    "algorithm",
    "t",
    "cost",
    "cost_perslot",
    "cost_offline",
    "regret_d",
    "fit_d",
    "lambda_norm",
    "queue_norm",
    "avg_cost",
];

pub const MOSP: &str = "mosp";
pub const PERSLOT: &str = "perslot";
pub const OFFLINE: &str = "offline";
pub const STATIC: &str = "static";

pub fn odg_name(mu: f64) -> String {
    format!("odg_{mu}")
}

/// Per-seed facts that are not part of the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedInfo {
    pub seed: u64,
    pub effective_seed: u64,
    pub epsilon: f64,
    pub steps: StepsizePair<f64>,
    pub distributed_deviation: f64,
    /// Slots failing the drift inequality, summed over MOSP and ODG traces.
    pub drift_violations: usize,
    /// Set when the static benchmark was requested but has no feasible point.
    pub static_infeasible: bool,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub info: SeedInfo,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub seeds: usize,
    pub median_avg_cost: f64,
    pub median_regret: f64,
    pub median_fit: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub runs: Vec<SeedInfo>,
    pub failures: Vec<SeedFailure>,
    pub summary: Vec<AlgorithmSummary>,
}

/// Network and stream for one seed.
pub fn load_instance(cfg: &ExperimentConfig, seed: u64) -> Result<NetworkInstance<f64>, RunError> {
    let (j, k, t) = (cfg.mapping_nodes, cfg.data_centers, cfg.horizon);
    match &cfg.case {
        CaseSpec::Case1 => Ok(generate_instance(CaseTag::Case1, j, k, t, seed, MAX_ATTEMPTS)?),
        CaseSpec::Case2 => Ok(generate_instance(CaseTag::Case2, j, k, t, seed, MAX_ATTEMPTS)?),
        CaseSpec::Custom(path) => {
            let err = |message: String| RunError::Scenario {
                path: path.display().to_string(),
                message,
            };
            let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
            let stream = read_scenario::<f64>(&text).map_err(|e| err(e.to_string()))?;
            if stream.mapping_nodes != j || stream.data_centers != k {
                return Err(err(format!(
                    "file has J={}, K={} but the config asks for J={j}, K={k}",
                    stream.mapping_nodes, stream.data_centers
                )));
            }
            if stream.horizon() < t {
                return Err(err(format!("file has {} slots, T={t}", stream.horizon())));
            }
            let network = gen_network(j, k, seed)?;
            let slater = slater_margin(&network, &stream, t)?;
            Ok(NetworkInstance {
                network,
                stream,
                slater,
                effective_seed: seed,
                attempts: 1,
            })
        }
    }
}

struct Series {
    name: String,
    losses: Vec<f64>,
    constraints: Vec<Vec<f64>>,
    lambda_norm: Option<Vec<f64>>,
    queue_norm: Vec<f64>,
}

impl Series {
    fn from_trace(name: String, trace: &[RoundTrace<f64>]) -> Self {
        Self {
            name,
            losses: trace.iter().map(|r| r.loss).collect(),
            constraints: trace.iter().map(|r| r.constraint.clone()).collect(),
            lambda_norm: Some(trace.iter().map(|r| r.lambda_next.norm()).collect()),
            queue_norm: trace
                .iter()
                .map(|r| r.queue.as_deref().map(linalg::norm).unwrap_or(f64::NAN))
                .collect(),
        }
    }

    fn from_decisions(
        name: &str,
        xs: &[DecisionVector<f64>],
        problems: &[SlotProblem<f64>],
        inst: &NetworkInstance<f64>,
    ) -> Result<Self, RunError> {
        let net = &inst.network;
        let mut q = QueueState::zeros(net.nodes());
        let mut queue_norm = Vec::with_capacity(xs.len());
        for (x, slot) in xs.iter().zip(&inst.stream.slots) {
            q = queue_update(&q, x, &slot.loads, net)?;
            queue_norm.push(linalg::norm(q.as_slice()));
        }
        Ok(Self {
            name: name.into(),
            losses: xs.iter().zip(problems).map(|(x, p)| p.loss.value(x)).collect(),
            constraints: xs.iter().zip(problems).map(|(x, p)| p.constraint.value(x)).collect(),
            lambda_norm: None,
            queue_norm,
        })
    }
}

fn max_deviation(
    dist: &[mosp::netalloc::DistributedRound<f64>],
    cen: &[RoundTrace<f64>],
) -> (f64, usize) {
    let mut worst = (0.0f64, 0usize);
    for (d, c) in dist.iter().zip(cen) {
        let dev = linalg::norm_inf(&linalg::sub(&d.x, &c.x))
            .max(linalg::norm_inf(&linalg::sub(&d.lambda_next, &c.lambda_next)));
        if dev > worst.0 {
            worst = (dev, c.t);
        }
    }
    worst
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun, RunError> {
    let t = cfg.horizon;
    let inst = load_instance(cfg, seed)?;
    let net = &inst.network;
    let problems = network_problems(net, &inst.stream, t)?;
    let bx = net.feasible_box();
    let steps = horizon_stepsizes(t, cfg.beta, cfg.alpha_scale, cfg.mu_scale)?;
    let settings = SolverSettings::default();

    let mosp = run_network_mosp(net, &inst.stream, t, steps, cfg.restart_delta)?;
    let dist = run_distributed(net, &inst.stream.slots[..t], steps, cfg.restart_delta)?;
    let (deviation, slot) = max_deviation(&dist, &mosp);
    if !(deviation < DISTRIBUTED_TOLERANCE) {
        return Err(RunError::Divergence { deviation, slot });
    }
    let mut drift_violations = drift_check(&mosp, steps.mu()).iter().filter(|ok| !**ok).count();

    let mut series = vec![Series::from_trace(MOSP.into(), &mosp)];
    for &mu in &cfg.mu_odg_list {
        let odg = run_odg(&inst.stream, net, mu, t, OdgInformation::Delayed)?;
        drift_violations += drift_check(&odg, mu).iter().filter(|ok| !**ok).count();
        series.push(Series::from_trace(odg_name(mu), &odg));
    }

    let per_slot: Vec<DecisionVector<f64>> = problems
        .iter()
        .map(|p| per_slot_optimum(p, &bx, &settings).map(|r| r.solution))
        .collect::<Result<_, _>>()?;
    let per_slot_losses: Vec<f64> = per_slot.iter().zip(&problems).map(|(x, p)| p.loss.value(x)).collect();
    if cfg.benchmarks.perslot {
        series.push(Series::from_decisions(PERSLOT, &per_slot, &problems, &inst)?);
    }
    let mut offline_losses = None;
    if cfg.benchmarks.offline {
        let off = offline_optimum(&problems, &bx, &settings)?;
        let s = Series::from_decisions(OFFLINE, &off.decisions, &problems, &inst)?;
        offline_losses = Some(s.losses.clone());
        series.push(s);
    }
    let mut static_infeasible = false;
    if cfg.benchmarks.static_ {
        match best_static(&problems, &bx, &settings) {
            Ok(r) => {
                let xs = vec![r.solution; t];
                series.push(Series::from_decisions(STATIC, &xs, &problems, &inst)?);
            }
            Err(MospError::Infeasible { .. }) => static_infeasible = true,
            Err(e) => return Err(e.into()),
        }
    }

    let mut rows = Vec::with_capacity(series.len() * t);
    for s in &series {
        let regret = dynamic_regret(&s.losses, &per_slot_losses)?;
        let fit = dynamic_fit(&s.constraints)?;
        let mut acc = 0.0;
        for i in 0..t {
            acc += s.losses[i];
            rows.push(ResultRow {
                seed,
                algorithm: s.name.clone(),
                t: i + 1,
                cost: s.losses[i],
                cost_perslot: per_slot_losses[i],
                cost_offline: offline_losses.as_ref().map(|o: &Vec<f64>| o[i]),
                regret_d: regret[i],
                fit_d: fit[i],
                lambda_norm: s.lambda_norm.as_ref().map(|l| l[i]),
                queue_norm: s.queue_norm[i],
                avg_cost: acc / (i + 1) as f64,
            });
        }
    }
    Ok(SeedRun {
        info: SeedInfo {
            seed,
            effective_seed: inst.effective_seed,
            epsilon: inst.slater.epsilon,
            steps,
            distributed_deviation: deviation,
            drift_violations,
            static_infeasible,
        },
        rows,
    })
}

/// Runs every seed on the rayon pool and merges the results in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> ExperimentOutput {
    let results: Vec<(u64, Result<SeedRun, RunError>)> =
        cfg.seeds.par_iter().map(|&s| (s, run_seed(cfg, s))).collect();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(run) => {
                rows.extend(run.rows);
                runs.push(run.info);
            }
            Err(e) => failures.push(SeedFailure {
                seed,
                message: e.to_string(),
            }),
        }
    }
    let summary = summarize(&rows);
    ExperimentOutput {
        rows,
        runs,
        failures,
        summary,
    }
}

/// Medians over seeds of each algorithm's final-slot values.
pub fn summarize(rows: &[ResultRow]) -> Vec<AlgorithmSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut last: std::collections::BTreeMap<(&str, u64), &ResultRow> = Default::default();
    for r in rows {
        if !order.contains(&r.algorithm.as_str()) {
            order.push(&r.algorithm);
        }
        let e = last.entry((r.algorithm.as_str(), r.seed)).or_insert(r);
        if r.t >= e.t {
            *e = r;
        }
    }
    order
        .into_iter()
        .map(|alg| {
            let finals: Vec<&ResultRow> = last
                .iter()
                .filter(|((a, _), _)| *a == alg)
                .map(|(_, r)| *r)
                .collect();
            let col = |f: fn(&ResultRow) -> f64| median(&finals.iter().map(|r| f(r)).collect::<Vec<_>>());
            AlgorithmSummary {
                algorithm: alg.to_string(),
                seeds: finals.len(),
                median_avg_cost: col(|r| r.avg_cost),
                median_regret: col(|r| r.regret_d),
                median_fit: col(|r| r.fit_d),
            }
        })
        .collect()
}

pub fn render_summary(cfg: &ExperimentConfig, out: &ExperimentOutput) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "case {}  J={} K={} T={}  seeds {}  failed {}",
        cfg.case,
        cfg.mapping_nodes,
        cfg.data_centers,
        cfg.horizon,
        cfg.seeds.len(),
        out.failures.len()
    );
    let _ = writeln!(
        s,
        "{:<12} {:>6} {:>18} {:>18} {:>14}",
        "algorithm", "seeds", "median_avg_cost", "median_regret", "median_fit"
    );
    for a in &out.summary {
        let _ = writeln!(
            s,
            "{:<12} {:>6} {:>18.4} {:>18.4} {:>14.4}",
            a.algorithm, a.seeds, a.median_avg_cost, a.median_regret, a.median_fit
        );
    }
    for f in &out.failures {
        let _ = writeln!(s, "seed {} failed: {}", f.seed, f.message);
    }
    s
}

pub fn summary_path(dir: &Path) -> std::path::PathBuf {
    dir.join("summary.txt")
}

pub fn results_path(dir: &Path) -> std::path::PathBuf {
    dir.join("results.csv")
}
