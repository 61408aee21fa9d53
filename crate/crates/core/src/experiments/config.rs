use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{RadiusConstants, RadiusInputs, RadiusMode};
use crate::dro::RobustLinearProblem;
use crate::error::{Error, Result};
use crate::regression::{construct_adversarial_with_residuals, gaussian_design, NoiseSpec, OlsFit, RegressionDataset};
use crate::seed;

/// How the true parameter is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BetaRule {
    /// `β_i = step · i` for `i = 1..p`.
    Linear { step: f64 },
    Explicit { values: Vec<f64> },
}

impl BetaRule {
    pub fn beta(&self, p: usize) -> Result<DVector<f64>> {
        match self {
            BetaRule::Linear { step } => Ok(DVector::from_fn(p, |i, _| step * (i + 1) as f64)),
            BetaRule::Explicit { values } if values.len() == p => Ok(DVector::from_column_slice(values)),
            BetaRule::Explicit { values } => Err(Error::InvalidConfig(format!("{} beta values for p = {p}", values.len()))),
        }
    }
}

/// Which noise realization the trade-off sweep is run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Noise constructed so that `β̂` equals `β` except component
    /// `target_index` (zero-based, default `p − 1`) which equals `target_value`.
    /// The part of a regular noise draw orthogonal to the design is kept as residual.
    Adversarial {
        target_value: f64,
        #[serde(default)]
        target_index: Option<usize>,
    },
    /// A plain draw from the noise spec.
    Natural,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadiusConfig {
    pub mode: RadiusMode,
    /// Confidence parameter δ of the finite-sample radius.
    pub confidence: f64,
    pub constants: RadiusConstants,
}

impl Default for RadiusConfig {
    fn default() -> Self {
        Self { mode: RadiusMode::Tuned, confidence: 0.05, constants: RadiusConstants::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyConfig {
    pub trials: usize,
    /// Size of the Monte Carlo sample standing in for the law of `β̂`.
    pub reference_draws: usize,
    pub epsilon_grid: Vec<f64>,
    pub confidence_level: f64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            trials: 500,
            reference_draws: 20_000,
            epsilon_grid: vec![0.0, 0.001, 0.002, 0.003, 0.004, 0.006, 0.008, 0.01, 0.02, 0.05],
            confidence_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    /// Draws per (n, noise) cell.
    pub draws: usize,
    pub sizes: Vec<usize>,
    pub p: usize,
    pub affine_triples: usize,
    pub chain_trials: usize,
    pub triangle_trials: usize,
    pub coverage_trials: usize,
    /// Atoms in the reference sample standing in for the law of `β̂`.
    pub reference_size: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            draws: 10_000,
            sizes: vec![20, 50, 100],
            p: 5,
            affine_triples: 500,
            chain_trials: 40,
            triangle_trials: 50,
            coverage_trials: 40,
            reference_size: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub beta: BetaRule,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub k: usize,
    pub gamma: f64,
    #[serde(rename = "Delta")]
    pub risk_limit: f64,
    pub epsilon_grid: Vec<f64>,
    pub repetitions: usize,
    pub radius: RadiusConfig,
    pub scenario: Scenario,
    pub safety: SafetyConfig,
    pub validation: ValidationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 100,
            p: 10,
            beta: BetaRule::Linear { step: 0.1 },
            noise: NoiseSpec::uniform(1.0),
            seed: 2024,
            k: 30,
            gamma: 0.05,
            risk_limit: 0.1,
            epsilon_grid: vec![0.0, 0.00625, 0.0125, 0.01875, 0.025, 0.03125, 0.0375, 0.04375, 0.05],
            repetitions: 20,
            radius: RadiusConfig::default(),
            scenario: Scenario::Adversarial { target_value: 0.006, target_index: None },
            safety: SafetyConfig::default(),
            validation: ValidationConfig::default(),
        }
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} is empty")));
    }
    if grid.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative")));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(format!("{name} must be sorted")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n <= self.p {
            return Err(Error::InvalidConfig(format!("need n > p >= 1, got n = {}, p = {}", self.n, self.p)));
        }
        if self.k == 0 || self.repetitions == 0 {
            return Err(Error::InvalidConfig("k and repetitions must be >= 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        check_grid("epsilon_grid", &self.epsilon_grid)?;
        check_grid("safety.epsilon_grid", &self.safety.epsilon_grid)?;
        if let Scenario::Adversarial { target_index: Some(i), .. } = self.scenario {
            if i >= self.p {
                return Err(Error::InvalidConfig(format!("target_index {i} out of range for p = {}", self.p)));
            }
        }
        self.beta.beta(self.p)?;
        self.noise.validate()
    }

    pub fn beta_true(&self) -> Result<DVector<f64>> {
        self.beta.beta(self.p)
    }

    /// The single-constraint inner-product problem: maximize `1ᵀx` s.t. `βᵀx ≤ 1`, `x ≥ 0`.
    pub fn problem(&self) -> RobustLinearProblem {
        RobustLinearProblem::inner_product_instance(self.p, self.gamma, self.risk_limit)
    }

    /// Dataset for the configured scenario; the design and base noise derive from `seed`.
    pub fn dataset(&self) -> Result<RegressionDataset> {
        let beta = self.beta_true()?;
        let x = gaussian_design(self.n, self.p, self.seed);
        let mut rng = seed::derived_rng(self.seed, seed::stream::NOISE, 0);
        let noise = self.noise.sample(&mut rng, self.n)?;
        match &self.scenario {
            Scenario::Natural => RegressionDataset::from_truth(x, beta, noise),
            Scenario::Adversarial { target_value, target_index } => {
                construct_adversarial_with_residuals(&x, &beta, &noise, target_index.unwrap_or(self.p - 1), *target_value)
            }
        }
    }

    pub fn radius_inputs(&self, fit: &OlsFit) -> Result<RadiusInputs> {
        Ok(RadiusInputs {
            n: self.n,
            k: self.k,
            p: self.p,
            delta: self.radius.confidence,
            alpha: self.noise.alpha,
            sigma: self.noise.sigma(),
            psi_alpha: self.noise.orlicz_psi_alpha()?,
            l: fit.l,
            lbar: fit.lbar,
            constants: self.radius.constants,
        })
    }
}
