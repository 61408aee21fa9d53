//! Certainty-equivalent versus robust decisions on one adversarial dataset.

use bootdro::ambiguity::{make_ambiguity_set, RadiusSpec};
use bootdro::bootstrap::{bootstrap_ensemble, ensemble_to_distribution, BootstrapOptions};
use bootdro::dro::{build_certainty_equivalent, build_dro, evaluate_true_violation};
use bootdro::experiments::ExperimentConfig;
use bootdro::regression::ols_fit;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::default();
    let data = cfg.dataset()?;
    let beta = cfg.beta_true()?;
    let fit = ols_fit(&data)?;
    let prob = cfg.problem();

    let ce = build_certainty_equivalent(&prob, &fit.beta_hat)?.solve_default()?;
    let x = ce.x.ok_or("certainty equivalent not solved")?;
    println!("certainty equivalent: objective {:>9.4}  violation {:>9.4}", ce.objective, evaluate_true_violation(&prob, &x, &beta, 0)?);

    let ens = bootstrap_ensemble(&fit, data.x(), cfg.k, cfg.seed, BootstrapOptions::default())?;
    for eps in [0.0, 0.01, 0.05] {
        let amb = make_ambiguity_set(ensemble_to_distribution(&ens)?, RadiusSpec::Tuned(eps))?;
        let sol = build_dro(&prob, &ens, &amb)?.solve_default()?;
        let x = sol.x.ok_or("robust program not solved")?;
        println!("eps = {eps:<5}          objective {:>9.4}  violation {:>9.4}", sol.objective, evaluate_true_violation(&prob, &x, &beta, 0)?);
    }
    Ok(())
}
