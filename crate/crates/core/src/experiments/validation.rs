//! Numerical checks of the deterministic and Monte Carlo inequalities behind
//! the finite-sample radius.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;
use serde_json::json;

use crate::ambiguity::theoretical_radius;
use crate::bootstrap::{bootstrap_ensemble, ensemble_to_distribution, BootstrapOptions};
use crate::empirical::EmpiricalDistribution;
use crate::error::Result;
use crate::par::{self, Exec};
use crate::regression::{gaussian_design, Design, NoiseSpec};
use crate::seed::{self, Rng64};
use crate::stats::{mean, standard_error};
use crate::wasserstein::{push_forward, w1, wq_1d_values};

use super::config::ExperimentConfig;

const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct ClaimResult {
    pub name: String,
    pub statement: String,
    pub trials: usize,
    pub violations: usize,
    /// Smallest slack `rhs − lhs` observed (negative when violated).
    pub margin: f64,
    pub passed: bool,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub claims: Vec<ClaimResult>,
    pub all_passed: bool,
}

impl ValidationReport {
    pub fn claim(&self, name: &str) -> Option<&ClaimResult> {
        self.claims.iter().find(|c| c.name == name)
    }
}

fn cell_rng(master: u64, cell: u64, draw: usize) -> Rng64 {
    seed::derived_rng(seed::derive(master, seed::stream::VALIDATION, cell), seed::stream::VALIDATION, draw as u64)
}

/// `d₂(Fₙ, F̂ₙ)` between the noise sample and the centered residuals, and
/// the bound `(1/√n) ‖((1/n)11ᵀ + Π)^{1/2} ε‖₂ = √(ε̄² + ‖Πε‖²/n)`.
pub fn residual_distance_and_bound(design: &Design, eps: &DVector<f64>) -> Result<(f64, f64)> {
    let n = eps.len() as f64;
    let proj = design.project(eps);
    let resid = eps - &proj;
    let centre = resid.mean();
    let centered: Vec<f64> = resid.iter().map(|r| r - centre).collect();
    let d2 = wq_1d_values(eps.as_slice(), &centered, 2)?;
    let bound = (eps.mean().powi(2) + proj.norm_squared() / n).sqrt();
    Ok((d2, bound))
}

pub fn residual_inequality(cfg: &ExperimentConfig, exec: Exec) -> Result<ClaimResult> {
    let v = &cfg.validation;
    let mut cells = Vec::new();
    let (mut trials, mut violations, mut margin) = (0, 0, f64::INFINITY);
    for (ci, &n) in v.sizes.iter().enumerate() {
        let p = v.p.min(n - 1);
        let design = Design::new(gaussian_design(n, p, seed::derive(cfg.seed, seed::stream::DESIGN, n as u64)))?;
        for (ni, (label, noise)) in [("gaussian", NoiseSpec::gaussian(1.0)), ("uniform", NoiseSpec::uniform(1.0))].iter().enumerate() {
            let cell = (ci * 2 + ni) as u64;
            let out: Vec<Result<(f64, f64)>> = par::map_indexed(exec, v.draws, |d| {
                let eps = noise.sample(&mut cell_rng(cfg.seed, cell, d), n)?;
                residual_distance_and_bound(&design, &eps)
            });
            let out = out.into_iter().collect::<Result<Vec<_>>>()?;
            let bad = out.iter().filter(|(d, b)| *d > b + SLACK).count();
            let m = out.iter().map(|(d, b)| b - d).fold(f64::INFINITY, f64::min);
            cells.push(json!({ "n": n, "p": p, "noise": label, "draws": out.len(), "violations": bad, "margin": m }));
            trials += out.len();
            violations += bad;
            margin = margin.min(m);
        }
    }
    Ok(ClaimResult {
        name: "residual_inequality".into(),
        statement: "d2(F_n, F^_n) <= n^-1/2 ||((1/n)11' + Pi)^1/2 eps||_2".into(),
        trials,
        violations,
        margin,
        passed: violations == 0,
        details: json!({ "cells": cells }),
    })
}

/// `(mean d₂, standard error, σ√((p+1)/n))` over `draws` Gaussian noise vectors.
pub fn expected_residual_distance(n: usize, p: usize, sigma: f64, draws: usize, master: u64, exec: Exec) -> Result<(f64, f64, f64)> {
    let design = Design::new(gaussian_design(n, p, seed::derive(master, seed::stream::DESIGN, (n * 1000 + p) as u64)))?;
    let noise = NoiseSpec::gaussian(sigma);
    let cell = 100 + (n * 1000 + p) as u64;
    let out: Vec<Result<f64>> = par::map_indexed(exec, draws, |d| {
        let eps = noise.sample(&mut cell_rng(master, cell, d), n)?;
        Ok(residual_distance_and_bound(&design, &eps)?.0)
    });
    let d: Vec<f64> = out.into_iter().collect::<Result<_>>()?;
    Ok((mean(&d), standard_error(&d), sigma * ((p + 1) as f64 / n as f64).sqrt()))
}

pub fn expected_residual_bound(cfg: &ExperimentConfig, exec: Exec) -> Result<ClaimResult> {
    let mut cells = Vec::new();
    let (mut violations, mut margin) = (0, f64::INFINITY);
    for (n, p, sigma) in [(100, 10, 1.0), (50, 5, 0.5)] {
        let (m, se, bound) = expected_residual_distance(n, p, sigma, cfg.validation.draws, cfg.seed, exec)?;
        let slack = bound + 3.0 * se - m;
        violations += usize::from(slack < 0.0);
        margin = margin.min(slack);
        cells.push(json!({ "n": n, "p": p, "sigma": sigma, "mean": m, "se": se, "bound": bound }));
    }
    Ok(ClaimResult {
        name: "expected_residual_bound".into(),
        statement: "E d2(F_n, F^_n) <= sigma sqrt((p+1)/n), checked as mean <= bound + 3 SE".into(),
        trials: 2 * cfg.validation.draws,
        violations,
        margin,
        passed: violations == 0,
        details: json!({ "cells": cells }),
    })
}

pub fn additive_probability(cfg: &ExperimentConfig, exec: Exec) -> Result<ClaimResult> {
    let draws = cfg.validation.draws;
    // a ≤ b + c pointwise.
    let triples: Vec<(f64, f64, f64)> = par::map_indexed(exec, draws, |d| {
        let mut rng = cell_rng(cfg.seed, 200, d);
        let b: f64 = rng.sample(Exp1);
        let z: f64 = rng.sample(StandardNormal);
        let c = z * z;
        let a = b + c - 0.5 * rng.random::<f64>();
        (a, b, c)
    });
    let mut cells = Vec::new();
    let (mut violations, mut margin) = (0, f64::INFINITY);
    for (eb, ec) in [(0.5, 0.5), (1.0, 0.25), (2.0, 1.0), (0.1, 3.0)] {
        let freq = |f: &dyn Fn(&(f64, f64, f64)) -> bool| triples.iter().filter(|t| f(t)).count() as f64 / draws as f64;
        let pa = freq(&|t| t.0 >= eb + ec);
        let pb = freq(&|t| t.1 >= eb);
        let pc = freq(&|t| t.2 >= ec);
        let se = ((pa * (1.0 - pa) + pb * (1.0 - pb) + pc * (1.0 - pc)) / draws as f64).sqrt();
        let slack = pb + pc + 3.0 * se - pa;
        violations += usize::from(slack < 0.0);
        margin = margin.min(pb + pc - pa);
        cells.push(json!({ "eps_b": eb, "eps_c": ec, "p_a": pa, "p_b": pb, "p_c": pc, "se": se }));
    }
    Ok(ClaimResult {
        name: "additive_probability".into(),
        statement: "a <= b + c implies P(a >= ea + eb) <= P(b >= eb) + P(c >= ec)".into(),
        trials: draws,
        violations,
        margin,
        passed: violations == 0,
        details: json!({ "thresholds": cells }),
    })
}

fn random_cloud(rng: &mut Rng64, atoms: usize, dim: usize) -> Result<EmpiricalDistribution> {
    let scale = 0.2 + 2.0 * rng.random::<f64>();
    EmpiricalDistribution::new((0..atoms).map(|_| DVector::from_fn(dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal))).collect())
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().max()
}

/// `d₁(Aμ, Aν) ≤ ‖A‖₂ d₁(μ, ν)` for random matrices and point clouds.
pub fn affine_contraction(cfg: &ExperimentConfig, exec: Exec) -> Result<ClaimResult> {
    let triples = cfg.validation.affine_triples;
    let out: Vec<Result<f64>> = par::map_indexed(exec, triples, |t| {
        let mut rng = cell_rng(cfg.seed, 300, t);
        let p = rng.random_range(1..=4);
        let q = rng.random_range(1..=4);
        let (m1, m2) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let mu = random_cloud(&mut rng, m1, p)?;
        let nu = random_cloud(&mut rng, m2, p)?;
        let a = DMatrix::from_fn(q, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lhs = w1(&push_forward(&mu, &a)?, &push_forward(&nu, &a)?)?;
        Ok(spectral_norm(&a) * w1(&mu, &nu)? - lhs)
    });
    let slack: Vec<f64> = out.into_iter().collect::<Result<_>>()?;
    let violations = slack.iter().filter(|s| **s < -SLACK).count();
    Ok(ClaimResult {
        name: "affine_contraction".into(),
        statement: "d1(A mu, A nu) <= ||A||_2 d1(mu, nu)".into(),
        trials: triples,
        violations,
        margin: slack.iter().copied().fold(f64::INFINITY, f64::min),
        passed: violations == 0,
        details: json!({}),
    })
}

/// All `m^n` equally likely tuples of a product measure, mapped through `map`.
fn product_pushforward(atoms: &[f64], n: usize, map: &DMatrix<f64>) -> Result<EmpiricalDistribution> {
    let m = atoms.len();
    let total = m.pow(n as u32);
    let pts = (0..total)
        .map(|mut code| {
            let v = DVector::from_fn(n, |_, _| {
                let a = atoms[code % m];
                code /= m;
                a
            });
            map * v
        })
        .collect();
    EmpiricalDistribution::new(pts)
}

/// End-to-end chain: `d₁(Φ(F), Φ(G)) ≤ √n L d₂(F, G)` where `Φ` pushes the
/// product measure `Fⁿ` through the least-squares map and `L` is its norm.
/// Product measures are enumerated exactly.
pub fn product_affine_chain(cfg: &ExperimentConfig, exec: Exec) -> Result<ClaimResult> {
    let trials = cfg.validation.chain_trials;
    let out: Vec<Result<(f64, f64)>> = par::map_indexed(exec, trials, |t| {
        let mut rng = cell_rng(cfg.seed, 400, t);
        let n = rng.random_range(3..=4);
        let p = rng.random_range(1..n);
        let m = rng.random_range(2..=if n == 3 { 5 } else { 4 });
        let f: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let g: Vec<f64> = (0..m).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal) + 0.3).collect();
        let design = Design::new(DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal)))?;
        let map = design.pseudoinverse_map();
        let lhs = w1(&product_pushforward(&f, n, map)?, &product_pushforward(&g, n, map)?)?;
        let rhs = (n as f64).sqrt() * design.l() * wq_1d_values(&f, &g, 2)?;
        Ok((lhs, rhs))
    });
    let pairs: Vec<(f64, f64)> = out.into_iter().collect::<Result<_>>()?;
    let violations = pairs.iter().filter(|(l, r)| *l > r + SLACK).count();
    Ok(ClaimResult {
        name: "product_affine_chain".into(),
        statement: "d1(Phi(F), Phi(G)) <= sqrt(n) L d2(F, G) for the least-squares map".into(),
        trials,
        violations,
        margin: pairs.iter().map(|(l, r)| r - l).fold(f64::INFINITY, f64::min),
        passed: violations == 0,
        details: json!({}),
    })
}

/// Samples of `β + (XᵀX)⁻¹Xᵀε` with `ε ~ noise`.
fn estimator_sample(design: &Design, beta: &DVector<f64>, noise: &NoiseSpec, size: usize, master: u64, cell: u64) -> Result<EmpiricalDistribution> {
    let pinv = design.pseudoinverse_map();
    let atoms = (0..size)
        .map(|d| noise.sample(&mut cell_rng(master, cell, d), design.n()).map(|e| beta + pinv * e))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalDistribution::new(atoms)
}

/// `d₁(Φ̂, boot) ≤ d₁(Φ̂, R) + d₁(R, boot)` with `Φ̂` an estimator sample,
/// `R` a large resample of `Φ(F̂ₙ)` and `boot` the size-k ensemble.
pub fn triangle_split(cfg: &ExperimentConfig, exec: Exec) -> Result<ClaimResult> {
    let trials = cfg.validation.triangle_trials;
    let beta = cfg.beta_true()?;
    let design = Design::new(gaussian_design(cfg.n, cfg.p, cfg.seed))?;
    let out: Vec<Result<(f64, f64, f64)>> = par::map_indexed(exec, trials, |t| {
        let mut rng = cell_rng(cfg.seed, 500, t);
        let eps = cfg.noise.sample(&mut rng, cfg.n)?;
        let fit = design.fit(&(design.x() * &beta + eps))?;
        let opts = BootstrapOptions { exec: Exec::Sequential, ..Default::default() };
        let boot = ensemble_to_distribution(&bootstrap_ensemble(&fit, design.x(), cfg.k, rng.random(), opts)?)?;
        let middle = ensemble_to_distribution(&bootstrap_ensemble(&fit, design.x(), 100, rng.random(), opts)?)?;
        let reference = estimator_sample(&design, &beta, &cfg.noise, 100, cfg.seed, 10_000 + t as u64)?;
        Ok((w1(&reference, &boot)?, w1(&reference, &middle)?, w1(&middle, &boot)?))
    });
    let legs: Vec<(f64, f64, f64)> = out.into_iter().collect::<Result<_>>()?;
    let violations = legs.iter().filter(|(d, a, b)| *d > a + b + SLACK).count();
    Ok(ClaimResult {
        name: "triangle_split".into(),
        statement: "d1(Phi, Phi*_k) <= d1(Phi, Phi(F^_n)) + d1(Phi(F^_n), Phi*_k)".into(),
        trials,
        violations,
        margin: legs.iter().map(|(d, a, b)| a + b - d).fold(f64::INFINITY, f64::min),
        passed: violations == 0,
        details: json!({
            "mean_direct": mean(&legs.iter().map(|l| l.0).collect::<Vec<_>>()),
            "mean_first_leg": mean(&legs.iter().map(|l| l.1).collect::<Vec<_>>()),
            "mean_second_leg": mean(&legs.iter().map(|l| l.2).collect::<Vec<_>>()),
        }),
    })
}

/// Coverage of the finite-sample radius and decay of `d₁(Φ̂, Φ*_k)` in `k`,
/// with `Φ̂` a `reference_size`-atom estimator sample.
pub fn radius_coverage(cfg: &ExperimentConfig, exec: Exec) -> Result<ClaimResult> {
    let v = &cfg.validation;
    let beta = cfg.beta_true()?;
    let design = Design::new(gaussian_design(cfg.n, cfg.p, cfg.seed))?;
    let reference = estimator_sample(&design, &beta, &cfg.noise, v.reference_size, cfg.seed, 600)?;
    let ks = [5usize, 20, 80];
    let out: Vec<Result<(f64, Vec<f64>)>> = par::map_indexed(exec, v.coverage_trials, |t| {
        let mut rng = cell_rng(cfg.seed, 700, t);
        let eps = cfg.noise.sample(&mut rng, cfg.n)?;
        let fit = design.fit(&(design.x() * &beta + eps))?;
        let radius = theoretical_radius(&cfg.radius_inputs(&fit)?)?.epsilon;
        let opts = BootstrapOptions { exec: Exec::Sequential, ..Default::default() };
        let dists = ks
            .iter()
            .map(|&k| w1(&reference, &ensemble_to_distribution(&bootstrap_ensemble(&fit, design.x(), k, rng.random(), opts)?)?))
            .collect::<Result<Vec<_>>>()?;
        Ok((radius, dists))
    });
    let rows: Vec<(f64, Vec<f64>)> = out.into_iter().collect::<Result<_>>()?;
    let at_k = ks.iter().position(|&k| k == cfg.k);
    let (covered, margin) = rows.iter().fold((0, f64::INFINITY), |(c, m), (r, d)| {
        let dk = at_k.map_or(d[1], |i| d[i]);
        (c + usize::from(dk <= *r), m.min(r - dk))
    });
    let means: Vec<f64> = (0..ks.len()).map(|i| mean(&rows.iter().map(|(_, d)| d[i]).collect::<Vec<_>>())).collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let coverage = covered as f64 / rows.len().max(1) as f64;
    Ok(ClaimResult {
        name: "radius_coverage".into(),
        statement: "P(d1(Phi(F), Phi*_k(F^_n)) <= eps) >= 1 - delta, and mean distance decays in k".into(),
        trials: rows.len(),
        violations: rows.len() - covered,
        margin,
        passed: coverage >= 1.0 - cfg.radius.confidence && decreasing,
        details: json!({
            "reference_size": v.reference_size,
            "coverage": coverage,
            "mean_radius": mean(&rows.iter().map(|r| r.0).collect::<Vec<_>>()),
            "k": ks,
            "mean_distance": means,
        }),
    })
}

pub fn run_bound_validation(cfg: &ExperimentConfig, exec: Exec) -> Result<ValidationReport> {
    cfg.validate()?;
    let claims = vec![
        residual_inequality(cfg, exec)?,
        expected_residual_bound(cfg, exec)?,
        additive_probability(cfg, exec)?,
        affine_contraction(cfg, exec)?,
        product_affine_chain(cfg, exec)?,
        triangle_split(cfg, exec)?,
        radius_coverage(cfg, exec)?,
    ];
    let all_passed = claims.iter().all(|c| c.passed);
    Ok(ValidationReport { seed: cfg.seed, claims, all_passed })
}
