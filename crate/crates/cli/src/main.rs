use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use bootdro::ambiguity::{make_ambiguity_set, theoretical_radius, RadiusSpec};
use bootdro::bootstrap::{bootstrap_ensemble, ensemble_to_distribution, BootstrapEnsemble, BootstrapOptions};
use bootdro::dro::{build_certainty_equivalent, build_dro, evaluate_true_violation, RobustLinearProblem};
use bootdro::experiments::{self, output, ExperimentConfig};
use bootdro::io::{self, DatasetMeta};
use bootdro::par::{self, Exec};
use bootdro::regression::{ols_fit, RegressionDataset};

#[derive(Parser)]
#[command(name = "bootdro", version, about = "Bootstrap Wasserstein-robust decisions from linear regression")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (JSON). Missing fields take the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (1 runs sequentially).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or load) a dataset and fit OLS.
    Fit {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Draw a residual-bootstrap ensemble.
    Bootstrap {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Evaluate the finite-sample Wasserstein radius.
    Radius {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Build and solve one robust (or certainty-equivalent) program.
    Solve {
        /// Problem spec (JSON); defaults to the inner-product instance of the config.
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Ensemble CSV; drawn from the configured dataset when absent.
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Solve the certainty-equivalent program at β̂ instead.
        #[arg(long)]
        certainty_equivalent: bool,
    },
    /// Sweep the Wasserstein radius.
    Tradeoff,
    /// Out-of-sample safety Monte Carlo.
    SafetyMc {
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Numerical checks of the supporting inequalities.
    ValidateBounds,
}

fn load_config(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::from_json_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exec_for(jobs: Option<usize>) -> Exec {
    if jobs == Some(1) {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

/// Loads `data`, or generates the configured dataset and writes it to `out`.
fn dataset(cfg: &ExperimentConfig, data: Option<&Path>, out: &Path) -> Result<(RegressionDataset, PathBuf)> {
    if let Some(p) = data {
        let (d, _) = io::read_dataset(p).with_context(|| format!("reading {}", p.display()))?;
        return Ok((d, p.to_path_buf()));
    }
    let d = cfg.dataset()?;
    let path = out.join("dataset.csv");
    let meta = DatasetMeta {
        seed: cfg.seed,
        n: cfg.n,
        p: cfg.p,
        noise: cfg.noise.clone(),
        beta_true: d.beta_true().map(|b| b.iter().copied().collect()),
        scenario: Some(serde_json::to_value(&cfg.scenario)?),
    };
    io::write_dataset(&path, &d, &meta)?;
    println!("wrote {}", path.display());
    Ok((d, path))
}

fn write(path: PathBuf, value: &serde_json::Value) -> Result<()> {
    output::write_json(&path, value)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn draw_ensemble(cfg: &ExperimentConfig, data: &RegressionDataset, k: usize, exec: Exec) -> Result<BootstrapEnsemble> {
    let fit = ols_fit(data)?;
    let opts = BootstrapOptions { exec, ..Default::default() };
    Ok(bootstrap_ensemble(&fit, data.x(), k, cfg.seed, opts)?)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let out = &cli.global.out;
    fs::create_dir_all(out)?;
    let exec = exec_for(cli.global.jobs);

    match cli.command {
        Command::Fit { data } => {
            let (d, _) = dataset(&cfg, data.as_deref(), out)?;
            let fit = ols_fit(&d)?;
            let rss = fit.residuals_hat.norm_squared();
            write(
                out.join("fit.json"),
                &json!({
                    "n": d.n(),
                    "p": d.p(),
                    "beta_hat": fit.beta_hat.as_slice(),
                    "beta_true": d.beta_true().map(|b| b.as_slice().to_vec()),
                    "residual_sd": (rss / (d.n() - d.p()) as f64).sqrt(),
                    "L": fit.l,
                    "Lbar": fit.lbar,
                }),
            )?;
        }
        Command::Bootstrap { data, k } => {
            let (d, source) = dataset(&cfg, data.as_deref(), out)?;
            let ens = draw_ensemble(&cfg, &d, k.unwrap_or(cfg.k), exec)?;
            let path = out.join("ensemble.csv");
            io::write_ensemble(&path, &ens, &io::file_sha256(&source)?)?;
            println!("wrote {} ({} replicates)", path.display(), ens.k());
        }
        Command::Radius { data } => {
            let (d, _) = dataset(&cfg, data.as_deref(), out)?;
            let mut rcfg = cfg.clone();
            rcfg.n = d.n();
            rcfg.p = d.p();
            let inputs = rcfg.radius_inputs(&ols_fit(&d)?)?;
            let b = theoretical_radius(&inputs)?;
            println!("epsilon = {} (eps1 {}, eps2 {}, eps3 {})", b.epsilon, b.epsilon1, b.epsilon2, b.epsilon3);
            write(out.join("radius.json"), &json!({ "inputs": inputs, "breakdown": b }))?;
        }
        Command::Solve { problem, ensemble, epsilon, certainty_equivalent } => {
            let prob: RobustLinearProblem = match &problem {
                Some(p) => serde_json::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => cfg.problem(),
            };
            prob.validate()?;
            output::write_json(&out.join("problem.json"), &prob)?;
            let (ens, beta_true) = match &ensemble {
                Some(p) => (io::read_ensemble(p)?.0, None),
                None => {
                    let (d, _) = dataset(&cfg, None, out)?;
                    (draw_ensemble(&cfg, &d, cfg.k, exec)?, d.beta_true().cloned())
                }
            };
            let reform = if certainty_equivalent {
                build_certainty_equivalent(&prob, &ens.beta_hat)?
            } else {
                let amb = make_ambiguity_set(ensemble_to_distribution(&ens)?, RadiusSpec::Tuned(epsilon))?;
                build_dro(&prob, &ens, &amb)?
            };
            let dump = out.join("program.txt");
            fs::write(&dump, reform.program.to_text())?;
            println!("wrote {}", dump.display());
            let sol = reform.solve_default()?;
            let violation = match (&sol.x, &beta_true) {
                (Some(x), Some(b)) if b.len() == prob.p() => Some(evaluate_true_violation(&prob, x, b, 0)?),
                _ => None,
            };
            println!("status {} objective {}", sol.status, sol.objective);
            write(
                out.join("solution.json"),
                &json!({
                    "status": sol.status,
                    "epsilon": if certainty_equivalent { None } else { Some(epsilon) },
                    "objective": sol.objective,
                    "x": sol.x.as_ref().map(|x| x.as_slice().to_vec()),
                    "lambda": sol.lambda,
                    "tau": sol.tau,
                    "true_violation": violation,
                    "max_primal_residual": sol.raw.max_primal_residual,
                    "duality_gap": sol.raw.duality_gap,
                    "iterations": sol.raw.iterations,
                }),
            )?;
        }
        Command::Tradeoff => {
            let res = par::with_jobs(cli.global.jobs, || experiments::run_tradeoff(&cfg, exec))?;
            for p in output::write_tradeoff(out, &res)? {
                println!("wrote {}", p.display());
            }
            let ce = &res.certainty_equivalent;
            println!("certainty equivalent: objective {:.4}, true violation {:.4}", ce.objective, ce.violation);
            for (o, v) in res.objective_summary.iter().zip(&res.violation_summary) {
                if let (Some(o_s), Some(v_s)) = (o.stats, v.stats) {
                    println!("eps {:<10} median objective {:>10.4}  median violation {:>10.4}", o.epsilon, o_s.median, v_s.median);
                }
            }
        }
        Command::SafetyMc { trials } => {
            let mut cfg = cfg;
            if let Some(t) = trials {
                cfg.safety.trials = t;
            }
            let rep = par::with_jobs(cli.global.jobs, || experiments::run_safety_mc(&cfg, exec))?;
            for p in output::write_safety(out, &rep)? {
                println!("wrote {}", p.display());
            }
            for r in &rep.rows {
                println!("eps {:<8} failures {:>4}/{} ({:.3}, CI [{:.3}, {:.3}])", r.epsilon, r.failures, r.trials, r.frequency, r.ci_low, r.ci_high);
            }
            println!("kendall tau {:.3}, p = {:.3e}", rep.kendall_tau, rep.kendall_p_value);
        }
        Command::ValidateBounds => {
            let rep = par::with_jobs(cli.global.jobs, || experiments::run_bound_validation(&cfg, exec))?;
            println!("wrote {}", output::write_validation(out, &rep)?.display());
            for c in &rep.claims {
                println!("{:<22} {} trials {:>6} violations {:>3} margin {:.3e}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.trials, c.violations, c.margin);
            }
            if !rep.all_passed {
                bail!("some bound checks failed");
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(Cli::parse())
}
