use nalgebra::DVector;
use serde::Serialize;

use crate::bootstrap::{bootstrap_ensemble, BootstrapOptions};
use crate::conic::SolveStatus;
use crate::dro::constraint_samples;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::regression::{gaussian_design, Design};
use crate::seed;
use crate::stats::{kendall_decreasing_p_value, kendall_tau_b, mean, wilson_interval};

use super::config::ExperimentConfig;
use super::tradeoff::solve_cell;

#[derive(Debug, Clone, Serialize)]
pub struct SafetyRow {
    pub epsilon: f64,
    pub trials: usize,
    pub optimal: usize,
    pub failures: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_objective: f64,
    pub mean_true_risk: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SafetyReport {
    pub risk_limit: f64,
    pub reference_draws: usize,
    pub confidence_level: f64,
    pub rows: Vec<SafetyRow>,
    /// Kendall τ_b of failure frequency against ε.
    pub kendall_tau: f64,
    /// Exact one-sided permutation p-value for a decreasing trend.
    pub kendall_p_value: f64,
    /// Largest constraint residual over all optimal solves.
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    status: SolveStatus,
    failed: bool,
    objective: f64,
    risk: f64,
    residual: f64,
}

/// Out-of-sample check of the risk constraint. Each trial draws fresh noise on
/// a fixed design, fits, bootstraps and solves the robust program for every
/// ε; the decision then fails if the risk functional of `g(x, β̂)` under the
/// true law of `β̂` (approximated by `reference_draws` samples of
/// `β + (XᵀX)⁻¹Xᵀε`) exceeds `Δ`.
pub fn run_safety_mc(cfg: &ExperimentConfig, exec: Exec) -> Result<SafetyReport> {
    cfg.validate()?;
    let s = &cfg.safety;
    if s.trials < 100 {
        return Err(Error::InvalidConfig(format!("safety Monte Carlo needs at least 100 trials, got {}", s.trials)));
    }
    if s.reference_draws == 0 {
        return Err(Error::InvalidConfig("reference_draws must be positive".into()));
    }
    let prob = cfg.problem();
    let beta = cfg.beta_true()?;
    let design = Design::new(gaussian_design(cfg.n, cfg.p, cfg.seed))?;
    let pinv = design.pseudoinverse_map().clone();

    let reference: Vec<DVector<f64>> = par::map_indexed(exec, s.reference_draws, |i| {
        let mut rng = seed::derived_rng(cfg.seed, seed::stream::REFERENCE, i as u64);
        cfg.noise.sample(&mut rng, cfg.n).map(|e| &beta + &pinv * e)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let grid = &s.epsilon_grid;
    let trials: Vec<Result<Vec<Cell>>> = par::map_indexed(exec, s.trials, |t| {
        let mut rng = seed::derived_rng(cfg.seed, seed::stream::TRIAL, t as u64);
        let eps = cfg.noise.sample(&mut rng, cfg.n)?;
        let y = design.x() * &beta + eps;
        let fit = design.fit(&y)?;
        let ens_seed = seed::derive(cfg.seed, seed::stream::VALIDATION, t as u64);
        let opts = BootstrapOptions { exec: Exec::Sequential, ..Default::default() };
        let ens = bootstrap_ensemble(&fit, design.x(), cfg.k, ens_seed, opts)?;
        grid.iter()
            .map(|&e| {
                let super::tradeoff::CellSolution { objective, status, residual, x, .. } = solve_cell(&prob, &ens, e, &beta)?;
                let (risk, failed) = match x {
                    Some(x) => {
                        let g = constraint_samples(&prob.constraints[0], &x, &reference);
                        let r = prob.risk.risk_of(&g)?;
                        (r, r > prob.risk.limits[0])
                    }
                    None => (f64::NAN, false),
                };
                Ok(Cell { status, failed, objective, risk, residual })
            })
            .collect()
    });
    let trials = trials.into_iter().collect::<Result<Vec<_>>>()?;

    let rows: Vec<SafetyRow> = grid
        .iter()
        .enumerate()
        .map(|(j, &epsilon)| {
            let cells: Vec<Cell> = trials.iter().map(|t| t[j]).collect();
            let ok: Vec<&Cell> = cells.iter().filter(|c| c.status == SolveStatus::Optimal).collect();
            let failures = cells.iter().filter(|c| c.failed).count();
            let (ci_low, ci_high) = wilson_interval(failures, s.trials, s.confidence_level);
            SafetyRow {
                epsilon,
                trials: s.trials,
                optimal: ok.len(),
                failures,
                frequency: failures as f64 / s.trials as f64,
                ci_low,
                ci_high,
                mean_objective: mean(&ok.iter().map(|c| c.objective).collect::<Vec<_>>()),
                mean_true_risk: mean(&ok.iter().map(|c| c.risk).collect::<Vec<_>>()),
            }
        })
        .collect();

    let freq: Vec<f64> = rows.iter().map(|r| r.frequency).collect();
    let (kendall_tau, kendall_p_value) = if grid.len() > 1 {
        (kendall_tau_b(grid, &freq), kendall_decreasing_p_value(grid, &freq).unwrap_or(f64::NAN))
    } else {
        (f64::NAN, f64::NAN)
    };
    let max_residual = trials
        .iter()
        .flatten()
        .filter(|c| c.status == SolveStatus::Optimal)
        .map(|c| c.residual)
        .fold(0.0, f64::max);
    Ok(SafetyReport {
        risk_limit: cfg.risk_limit,
        reference_draws: s.reference_draws,
        confidence_level: s.confidence_level,
        rows,
        kendall_tau,
        kendall_p_value,
        max_residual,
    })
}
