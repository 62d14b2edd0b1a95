//! Horizon sweep: dynamic regret and fit of the learner at several horizons,
//! with stepsizes recomputed for each horizon, and their log-log growth.

use std::fmt::Write as _;

use rayon::prelude::*;

use mosp::metrics::{dynamic_fit, dynamic_regret};
use mosp::netalloc::{network_problems, run_network_mosp, NetworkInstance};
use mosp::oco::horizon_stepsizes;
use mosp::oracle::SlotProblem;
use mosp::solvers::{per_slot_optimum, SolverSettings};

use crate::config::ExperimentConfig;
use crate::run::{load_instance, RunError, SeedFailure};
use crate::stats::{loglog_slope, median};

pub const FIT_SLOPE_LIMIT: f64 = 2.0 / 3.0 + 0.15;
pub const REGRET_SLOPE_LIMIT: f64 = 1.0 - 0.03;

/// Final regret and fit of one seed at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub horizon: usize,
    pub regret: f64,
    pub fit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub horizon: usize,
    pub median_regret: f64,
    pub median_fit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `(seed, points)` in seed order.
    pub per_seed: Vec<(u64, Vec<SweepPoint>)>,
    pub failures: Vec<SeedFailure>,
    /// Fitted on the horizons whose median is positive.
    pub fit_slope: Option<f64>,
    pub regret_slope: Option<f64>,
    /// Median regret at the largest horizon is `≤ 0`: growth is sublinear
    /// whatever the slope over the earlier, positive points.
    pub regret_final_nonpositive: bool,
    pub fit_final_nonpositive: bool,
}

impl SweepReport {
    /// `None` with fewer than two horizons.
    pub fn fit_ok(&self) -> Option<bool> {
        if self.rows.len() < 2 {
            return None;
        }
        Some(self.fit_final_nonpositive || self.fit_slope.is_some_and(|s| s <= FIT_SLOPE_LIMIT))
    }

    pub fn regret_ok(&self) -> Option<bool> {
        if self.rows.len() < 2 {
            return None;
        }
        Some(self.regret_final_nonpositive || self.regret_slope.is_some_and(|s| s <= REGRET_SLOPE_LIMIT))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>8} {:>16} {:>16}", "T", "median Reg_d", "median Fit_d");
        for r in &self.rows {
            let _ = writeln!(s, "{:>8} {:>16.4} {:>16.4}", r.horizon, r.median_regret, r.median_fit);
        }
        let slope = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            s,
            "fit slope {} (limit {:.4}), regret slope {} (limit {:.4})",
            slope(self.fit_slope),
            FIT_SLOPE_LIMIT,
            slope(self.regret_slope),
            REGRET_SLOPE_LIMIT
        );
        if self.regret_final_nonpositive {
            let _ = writeln!(s, "median regret is non-positive at the largest horizon");
        }
        let verdict = |v: Option<bool>| match v {
            None => "n/a",
            Some(true) => "pass",
            Some(false) => "FAIL",
        };
        let _ = writeln!(s, "fit growth: {}, regret growth: {}", verdict(self.fit_ok()), verdict(self.regret_ok()));
        for f in &self.failures {
            let _ = writeln!(s, "seed {} failed: {}", f.seed, f.message);
        }
        s
    }
}

/// Regret and fit at each horizon on one instance. The stream must cover the
/// largest horizon; smaller horizons use its prefix.
pub fn sweep_instance(
    inst: &NetworkInstance<f64>,
    horizons: &[usize],
    cfg: &ExperimentConfig,
) -> Result<Vec<SweepPoint>, RunError> {
    let max = horizons.iter().copied().max().unwrap_or(0);
    let problems: Vec<SlotProblem<f64>> = network_problems(&inst.network, &inst.stream, max)?;
    let bx = inst.network.feasible_box();
    let settings = SolverSettings::default();
    let optimal: Vec<f64> = problems
        .iter()
        .map(|p| per_slot_optimum(p, &bx, &settings).map(|r| p.loss.value(&r.solution)))
        .collect::<Result<_, _>>()?;
    horizons
        .iter()
        .map(|&t| {
            let steps = horizon_stepsizes(t, cfg.beta, cfg.alpha_scale, cfg.mu_scale)?;
            let trace = run_network_mosp(&inst.network, &inst.stream, t, steps, cfg.restart_delta)?;
            let losses: Vec<f64> = trace.iter().map(|r| r.loss).collect();
            let g: Vec<Vec<f64>> = trace.iter().map(|r| r.constraint.clone()).collect();
            let regret = dynamic_regret(&losses, &optimal[..t])?;
            let fit = dynamic_fit(&g)?;
            Ok(SweepPoint {
                horizon: t,
                regret: regret.last().copied().unwrap_or(0.0),
                fit: fit.last().copied().unwrap_or(0.0),
            })
        })
        .collect()
}

/// Medians over seeds of the final regret and fit at each horizon and the
/// fitted slopes. The config's `horizon` is ignored.
pub fn horizon_sweep(cfg: &ExperimentConfig, horizons: &[usize]) -> Result<SweepReport, RunError> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(RunError::Model(mosp::MospError::Argument(
            "horizons must be positive and strictly increasing".into(),
        )));
    }
    let max = *horizons.last().expect("non-empty");
    let mut big = cfg.clone();
    big.horizon = max;
    let results: Vec<(u64, Result<Vec<SweepPoint>, RunError>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| (seed, load_instance(&big, seed).and_then(|inst| sweep_instance(&inst, horizons, cfg))))
        .collect();
    let mut per_seed = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(points) => per_seed.push((seed, points)),
            Err(e) => failures.push(SeedFailure {
                seed,
                message: e.to_string(),
            }),
        }
    }
    let rows: Vec<SweepRow> = horizons
        .iter()
        .enumerate()
        .map(|(i, &h)| SweepRow {
            horizon: h,
            median_regret: median(&per_seed.iter().map(|(_, p)| p[i].regret).collect::<Vec<_>>()),
            median_fit: median(&per_seed.iter().map(|(_, p)| p[i].fit).collect::<Vec<_>>()),
        })
        .collect();
    let x: Vec<f64> = rows.iter().map(|r| r.horizon as f64).collect();
    let reg: Vec<f64> = rows.iter().map(|r| r.median_regret).collect();
    let fit: Vec<f64> = rows.iter().map(|r| r.median_fit).collect();
    let multi = rows.len() >= 2;
    Ok(SweepReport {
        fit_slope: if multi { loglog_slope(&x, &fit) } else { None },
        regret_slope: if multi { loglog_slope(&x, &reg) } else { None },
        regret_final_nonpositive: !per_seed.is_empty() && reg.last().is_some_and(|r| *r <= 0.0),
        fit_final_nonpositive: !per_seed.is_empty() && fit.last().is_some_and(|f| *f <= 0.0),
        rows,
        per_seed,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CaseSpec;
    use mosp::netalloc::{gen_network, slater_margin, CaseTag, ScenarioStream, SlotParams};

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            mapping_nodes: 2,
            data_centers: 3,
            case: CaseSpec::Case2,
            seeds: vec![1, 2, 3],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_horizon_has_no_slopes() {
        let r = horizon_sweep(&small_cfg(), &[40]).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.fit_slope, None);
        assert_eq!(r.regret_slope, None);
        assert_eq!(r.fit_ok(), None);
        assert!(r.render().contains("undefined"));
    }

    #[test]
    fn horizons_must_increase() {
        assert!(horizon_sweep(&small_cfg(), &[50, 40]).is_err());
        assert!(horizon_sweep(&small_cfg(), &[]).is_err());
    }

    #[test]
    fn prefix_points_match_direct_runs() {
        let cfg = small_cfg();
        let r = horizon_sweep(&cfg, &[30, 60]).unwrap();
        let mut c30 = cfg.clone();
        c30.horizon = 60;
        let inst = load_instance(&c30, 2).unwrap();
        let direct = sweep_instance(&inst, &[30], &cfg).unwrap();
        let seed2 = &r.per_seed.iter().find(|(s, _)| *s == 2).unwrap().1;
        assert_eq!(seed2[0], direct[0]);
    }

    /// With the same prices and loads in every slot the per-slot optimum is
    /// fixed and the learner settles, so regret stops growing.
    #[test]
    fn constant_stream_regret_is_flat() {
        let (j, k, max) = (2, 2, 2000);
        let network = gen_network::<f64>(j, k, 5).unwrap();
        let slot = SlotParams {
            prices: vec![1.5, 2.5],
            loads: vec![40.0, 30.0],
        };
        let stream = ScenarioStream {
            mapping_nodes: j,
            data_centers: k,
            seed: 5,
            case: CaseTag::Custom,
            slots: vec![slot; max],
        };
        let slater = slater_margin(&network, &stream, max).unwrap();
        assert!(slater.epsilon > 0.0);
        let inst = NetworkInstance {
            network,
            stream,
            slater,
            effective_seed: 5,
            attempts: 1,
        };
        let horizons = [250, 500, 1000, 2000];
        let pts = sweep_instance(&inst, &horizons, &ExperimentConfig::default()).unwrap();
        let x: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
        let reg: Vec<f64> = pts.iter().map(|p| p.regret.abs()).collect();
        let slope = loglog_slope(&x, &reg).unwrap();
        assert!(slope < 0.5, "slope {slope}, points {pts:?}");
    }
}
