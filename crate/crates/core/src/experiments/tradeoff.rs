use serde::Serialize;

use crate::ambiguity::{make_ambiguity_set, RadiusBreakdown, RadiusMode, RadiusSpec};
use crate::bootstrap::{bootstrap_ensemble, ensemble_to_distribution, BootstrapEnsemble, BootstrapOptions};
use crate::conic::{SolveStatus, Tolerances};
use crate::dro::{build_certainty_equivalent, build_dro, evaluate_true_violation, RobustLinearProblem};
use crate::error::Result;
use crate::par::{self, Exec};
use crate::regression::{ols_fit, OlsFit, RegressionDataset};
use crate::seed;
use crate::stats::{five_number, spearman, FiveNumber};

use super::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRecord {
    pub epsilon: f64,
    pub rep: usize,
    pub objective: f64,
    pub violation: f64,
    pub status: SolveStatus,
    /// Largest constraint residual of the returned point on the emitted program.
    #[serde(skip)]
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub epsilon: f64,
    pub metric: &'static str,
    pub count: usize,
    #[serde(flatten)]
    pub stats: Option<FiveNumber>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertaintyEquivalent {
    pub objective: f64,
    pub violation: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct TradeoffTrend {
    pub spearman_objective: f64,
    pub spearman_violation: f64,
    /// Largest increase between medians of neighbouring grid points.
    pub max_adjacent_objective_increase: f64,
    pub max_adjacent_violation_increase: f64,
    /// Median violation at the largest ε over the median at the smallest.
    pub violation_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TradeoffOutcome {
    pub grid: Vec<f64>,
    pub records: Vec<TradeoffRecord>,
    pub objective_summary: Vec<SummaryRow>,
    pub violation_summary: Vec<SummaryRow>,
    pub trend: TradeoffTrend,
    pub certainty_equivalent: CertaintyEquivalent,
    pub radius: Option<RadiusBreakdown>,
}

/// Seed of the bootstrap ensemble for repetition `rep`. The same ensemble is
/// reused across the ε grid, so per-repetition curves are comparable.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    seed::derive(master, seed::stream::TRIAL, rep as u64)
}

pub(crate) struct CellSolution {
    pub objective: f64,
    pub violation: f64,
    pub status: SolveStatus,
    pub residual: f64,
    pub x: Option<nalgebra::DVector<f64>>,
}

pub(crate) fn solve_cell(
    prob: &RobustLinearProblem,
    ensemble: &BootstrapEnsemble,
    epsilon: f64,
    beta_true: &nalgebra::DVector<f64>,
) -> Result<CellSolution> {
    let amb = make_ambiguity_set(ensemble_to_distribution(ensemble)?, RadiusSpec::Tuned(epsilon))?;
    let reform = build_dro(prob, ensemble, &amb)?;
    let sol = reform.solve(Tolerances::default())?;
    match (&sol.x, sol.status) {
        (Some(x), SolveStatus::Optimal) => {
            let violation = evaluate_true_violation(prob, x, beta_true, 0)?;
            let residual = reform.program.max_violation(sol.raw.v.as_deref().unwrap_or(&[]));
            Ok(CellSolution { objective: sol.objective, violation, status: sol.status, residual, x: sol.x.clone() })
        }
        _ => Ok(CellSolution { objective: f64::NAN, violation: f64::NAN, status: sol.status, residual: f64::NAN, x: None }),
    }
}

fn summarize(grid: &[f64], records: &[TradeoffRecord], metric: &'static str, pick: fn(&TradeoffRecord) -> f64) -> Vec<SummaryRow> {
    grid.iter()
        .map(|&eps| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.epsilon == eps && r.status == SolveStatus::Optimal)
                .map(pick)
                .collect();
            SummaryRow { epsilon: eps, metric, count: vals.len(), stats: five_number(&vals).ok() }
        })
        .collect()
}

fn trend(grid: &[f64], obj: &[SummaryRow], vio: &[SummaryRow]) -> TradeoffTrend {
    let med = |rows: &[SummaryRow]| rows.iter().map(|r| r.stats.map_or(f64::NAN, |s| s.median)).collect::<Vec<_>>();
    let (mo, mv) = (med(obj), med(vio));
    let max_inc = |m: &[f64]| m.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let first = mv.first().copied().unwrap_or(f64::NAN);
    let last = mv.last().copied().unwrap_or(f64::NAN);
    TradeoffTrend {
        spearman_objective: if grid.len() > 1 { spearman(grid, &mo) } else { f64::NAN },
        spearman_violation: if grid.len() > 1 { spearman(grid, &mv) } else { f64::NAN },
        max_adjacent_objective_increase: max_inc(&mo),
        max_adjacent_violation_increase: max_inc(&mv),
        violation_ratio: last / first,
    }
}

/// Runs the ε sweep on the configured dataset. Solver failures are recorded,
/// never fatal.
pub fn run_tradeoff(cfg: &ExperimentConfig, exec: Exec) -> Result<TradeoffOutcome> {
    cfg.validate()?;
    let data = cfg.dataset()?;
    let fit = ols_fit(&data)?;
    run_tradeoff_on(cfg, &data, &fit, exec)
}

pub fn run_tradeoff_on(cfg: &ExperimentConfig, data: &RegressionDataset, fit: &OlsFit, exec: Exec) -> Result<TradeoffOutcome> {
    let prob = cfg.problem();
    let beta_true = cfg.beta_true()?;

    let ce_sol = build_certainty_equivalent(&prob, &fit.beta_hat)?.solve(Tolerances::default())?;
    let certainty_equivalent = CertaintyEquivalent {
        objective: ce_sol.objective,
        violation: match &ce_sol.x {
            Some(x) => evaluate_true_violation(&prob, x, &beta_true, 0)?,
            None => f64::NAN,
        },
        status: ce_sol.status,
    };

    let (grid, radius) = match cfg.radius.mode {
        RadiusMode::Tuned => (cfg.epsilon_grid.clone(), None),
        RadiusMode::Theoretical => {
            let b = crate::ambiguity::theoretical_radius(&cfg.radius_inputs(fit)?)?;
            (vec![b.epsilon], Some(b))
        }
    };

    let opts = BootstrapOptions { exec: Exec::Sequential, ..Default::default() };
    let ensembles: Vec<Result<BootstrapEnsemble>> = par::map_indexed(exec, cfg.repetitions, |rep| {
        bootstrap_ensemble(fit, data.x(), cfg.k, repetition_seed(cfg.seed, rep), opts)
    });
    let ensembles = ensembles.into_iter().collect::<Result<Vec<_>>>()?;

    let cells = grid.len() * cfg.repetitions;
    let records = par::map_indexed(exec, cells, |c| {
        let (e, rep) = (c / cfg.repetitions, c % cfg.repetitions);
        let epsilon = grid[e];
        match solve_cell(&prob, &ensembles[rep], epsilon, &beta_true) {
            Ok(c) => TradeoffRecord {
                epsilon,
                rep,
                objective: c.objective,
                violation: c.violation,
                status: c.status,
                max_residual: c.residual,
            },
            Err(err) => {
                log::warn!("cell eps={epsilon} rep={rep}: {err}");
                TradeoffRecord {
                    epsilon,
                    rep,
                    objective: f64::NAN,
                    violation: f64::NAN,
                    status: SolveStatus::NumericalFailure,
                    max_residual: f64::NAN,
                }
            }
        }
    });

    let objective_summary = summarize(&grid, &records, "objective", |r| r.objective);
    let violation_summary = summarize(&grid, &records, "violation", |r| r.violation);
    let trend = trend(&grid, &objective_summary, &violation_summary);
    Ok(TradeoffOutcome { grid, records, objective_summary, violation_summary, trend, certainty_equivalent, radius })
}
