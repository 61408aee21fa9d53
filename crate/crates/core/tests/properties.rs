use bootdro::ambiguity::{make_ambiguity_set, RadiusSpec};
use bootdro::bootstrap::{bootstrap_ensemble, center_residuals, ensemble_to_distribution, resample_indices, BootstrapEnsemble, BootstrapOptions, Route};
use bootdro::conic::SolveStatus;
use bootdro::dro::{build_dro, constraint_samples, empirical_cvar, RiskMeasure, RobustLinearProblem};
use bootdro::empirical::EmpiricalDistribution;
use bootdro::par::Exec;
use bootdro::regression::{gaussian_design, ols_fit, NoiseSpec, RegressionDataset};
use bootdro::seed;
use bootdro::wasserstein::w1;
use nalgebra::DVector;
use proptest::prelude::*;

fn cloud(m: usize, p: usize) -> impl Strategy<Value = EmpiricalDistribution> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, p), m)
        .prop_map(|v| EmpiricalDistribution::new(v.into_iter().map(DVector::from_vec).collect()).unwrap())
}

fn shifted(d: &EmpiricalDistribution, a: &DVector<f64>) -> EmpiricalDistribution {
    d.map(|x| x + a).unwrap()
}

fn ensemble(betas: Vec<Vec<f64>>) -> BootstrapEnsemble {
    let beta_stars: Vec<DVector<f64>> = betas.into_iter().map(DVector::from_vec).collect();
    BootstrapEnsemble { beta_hat: beta_stars[0].clone(), beta_stars, resamples: None, seed: 0 }
}

fn solve(prob: &RobustLinearProblem, ens: &BootstrapEnsemble, eps: f64) -> (f64, DVector<f64>) {
    let amb = make_ambiguity_set(ensemble_to_distribution(ens).unwrap(), RadiusSpec::Tuned(eps)).unwrap();
    let sol = build_dro(prob, ens, &amb).unwrap().solve_default().unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    (sol.objective, sol.x.unwrap())
}

fn betas(p: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.05..1.0f64, p), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn w1_symmetric_and_triangle((mu, nu, xi) in (1usize..6, 1usize..4).prop_flat_map(|(m, p)| (cloud(m, p), cloud(m, p), cloud(m, p)))) {
        let ab = w1(&mu, &nu).unwrap();
        prop_assert!((ab - w1(&nu, &mu).unwrap()).abs() <= 1e-9);
        prop_assert!(ab <= w1(&mu, &xi).unwrap() + w1(&xi, &nu).unwrap() + 1e-9);
        prop_assert!(w1(&mu, &mu).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn w1_translation((mu, nu, a) in (1usize..6, 1usize..4).prop_flat_map(|(m, p)| (cloud(m, p), cloud(m, p), prop::collection::vec(-2.0..2.0f64, p)))) {
        let a = DVector::from_vec(a);
        prop_assert!((w1(&shifted(&mu, &a), &shifted(&nu, &a)).unwrap() - w1(&mu, &nu).unwrap()).abs() <= 1e-9);
        prop_assert!((w1(&mu, &shifted(&mu, &a)).unwrap() - a.norm()).abs() <= 1e-9);
    }

    #[test]
    fn cvar_between_mean_and_max(z in prop::collection::vec(-5.0..5.0f64, 1..40), g1 in 0.01..=1.0f64, g2 in 0.01..=1.0f64) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let c_lo = empirical_cvar(&z, lo).unwrap();
        let c_hi = empirical_cvar(&z, hi).unwrap();
        prop_assert!(c_hi >= mean - 1e-9 && c_lo <= max + 1e-9);
        prop_assert!(c_lo >= c_hi - 1e-9);
        prop_assert!((empirical_cvar(&z, 1.0).unwrap() - mean).abs() <= 1e-9);
    }

    #[test]
    fn centered_residuals_sum_to_zero(r in prop::collection::vec(-100.0..100.0f64, 1..60)) {
        let c = center_residuals(&DVector::from_vec(r)).unwrap().scalars().unwrap();
        prop_assert!(c.iter().sum::<f64>().abs() <= 1e-9);
    }

    #[test]
    fn objective_non_increasing_in_radius(b in betas(3), gamma in 0.05..=1.0f64, eps in prop::collection::vec(0.0..0.2f64, 4)) {
        let prob = RobustLinearProblem::inner_product_instance(3, gamma, 0.1);
        let ens = ensemble(b);
        let mut eps = eps;
        eps.sort_by(f64::total_cmp);
        let objs: Vec<f64> = eps.iter().map(|&e| solve(&prob, &ens, e).0).collect();
        for w in objs.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-6 * (1.0 + w[0].abs()), "{objs:?}");
        }
    }

    #[test]
    fn objective_scales_with_cost(b in betas(2), s in 0.1..10.0f64, eps in 0.0..0.1f64) {
        let prob = RobustLinearProblem::inner_product_instance(2, 0.2, 0.1);
        let mut scaled = prob.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= s);
        let ens = ensemble(b);
        let (f, _) = solve(&prob, &ens, eps);
        let (fs, _) = solve(&scaled, &ens, eps);
        prop_assert!((fs - s * f).abs() <= 1e-6 * (1.0 + fs.abs()));
    }

    #[test]
    fn solution_meets_worst_case_budget(b in betas(3), gamma in 0.05..=1.0f64, eps in 0.0..0.3f64, expectation in any::<bool>()) {
        let mut prob = RobustLinearProblem::inner_product_instance(3, gamma, 0.1);
        if expectation {
            prob.risk.measure = RiskMeasure::Expectation;
        }
        let ens = ensemble(b);
        let (_, x) = solve(&prob, &ens, eps);
        let c = &prob.constraints[0];
        let risk = prob.risk.risk_of(&constraint_samples(c, &x, &ens.beta_stars)).unwrap();
        prop_assert!(risk + eps * c.beta_gradient(&x).norm() <= 0.1 + 1e-6);
    }

    #[test]
    fn bootstrap_routes_agree(seed in any::<u64>(), k in 1usize..8) {
        let x = gaussian_design(25, 3, seed);
        let eps = NoiseSpec::gaussian(1.0).sample(&mut seed::derived_rng(seed, seed::stream::NOISE, 0), 25).unwrap();
        let data = RegressionDataset::from_truth(x, DVector::from_element(3, 0.5), eps).unwrap();
        let fit = ols_fit(&data).unwrap();
        let refit = bootstrap_ensemble(&fit, data.x(), k, seed, BootstrapOptions::default()).unwrap();
        let short = bootstrap_ensemble(&fit, data.x(), k, seed, BootstrapOptions { route: Route::Shortcut, ..Default::default() }).unwrap();
        for (a, b) in refit.beta_stars.iter().zip(&short.beta_stars) {
            prop_assert!((a - b).amax() <= 1e-10);
        }
    }
}

#[test]
fn bootstrap_mean_tracks_estimate() {
    let x = gaussian_design(60, 4, 3);
    let eps = NoiseSpec::uniform(1.0).sample(&mut seed::derived_rng(3, seed::stream::NOISE, 0), 60).unwrap();
    let data = RegressionDataset::from_truth(x, DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]), eps).unwrap();
    let fit = ols_fit(&data).unwrap();
    let k = 4000;
    let ens = bootstrap_ensemble(&fit, data.x(), k, 11, BootstrapOptions { exec: Exec::default(), ..Default::default() }).unwrap();
    for j in 0..4 {
        let v: Vec<f64> = ens.beta_stars.iter().map(|b| b[j]).collect();
        let mean = v.iter().sum::<f64>() / k as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt();
        assert!((mean - fit.beta_hat[j]).abs() <= 3.0 * sd / (k as f64).sqrt(), "component {j}");
    }
}

#[test]
fn resample_frequencies_are_uniform() {
    let (len, m) = (10, 100_000);
    let mut counts = [0usize; 10];
    for i in resample_indices(len, m, &mut seed::rng(5)) {
        counts[i] += 1;
    }
    let expected = m as f64 / len as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of χ² with 9 degrees of freedom.
    assert!(chi2 < 27.88, "chi2 = {chi2}");
}
