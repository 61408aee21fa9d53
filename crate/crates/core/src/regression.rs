//! Linear regression layer: `y = X β + ε` with a fixed design.
//!
//! [`Design`] factors the design matrix once (thin QR) and caches everything
//! downstream code needs repeatedly: the pseudoinverse map `(XᵀX)⁻¹Xᵀ`, the
//! hat matrix `Π`, and the two Lipschitz constants `L` and `L̄` that enter
//! the ambiguity radius. [`ols_fit`] is the one-shot convenience over it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_ALPHA: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    beta_true: Option<DVector<f64>>,
    eps_true: Option<DVector<f64>>,
}

impl RegressionDataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!("y has {} entries, X has {n} rows", y.len())));
        }
        if p == 0 || n <= p {
            return Err(Error::DimensionMismatch(format!("need n > p >= 1, got n = {n}, p = {p}")));
        }
        Ok(Self { x, y, beta_true: None, eps_true: None })
    }

    /// Synthetic dataset with known ground truth; `y` is assembled as `Xβ + ε`.
    pub fn from_truth(x: DMatrix<f64>, beta_true: DVector<f64>, eps_true: DVector<f64>) -> Result<Self> {
        if beta_true.len() != x.ncols() || eps_true.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "X is {}x{}, beta has {}, eps has {}",
                x.nrows(),
                x.ncols(),
                beta_true.len(),
                eps_true.len()
            )));
        }
        let y = &x * &beta_true + &eps_true;
        let mut d = Self::new(x, y)?;
        d.beta_true = Some(beta_true);
        d.eps_true = Some(eps_true);
        Ok(d)
    }

    pub fn with_beta_true(mut self, beta_true: DVector<f64>) -> Result<Self> {
        if beta_true.len() != self.p() {
            return Err(Error::DimensionMismatch("beta_true length".into()));
        }
        self.beta_true = Some(beta_true);
        Ok(self)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
    pub fn beta_true(&self) -> Option<&DVector<f64>> {
        self.beta_true.as_ref()
    }
    pub fn eps_true(&self) -> Option<&DVector<f64>> {
        self.eps_true.as_ref()
    }
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Residual distribution family. All families are mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    Uniform { low: f64, high: f64 },
    Gaussian { sigma: f64 },
    /// Draws uniformly (with replacement) from the listed values.
    CustomSamples { samples: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub family: NoiseFamily,
    /// Tail exponent of the α-sub-exponential assumption (α > 2).
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Orlicz norm ‖ε‖_Ψα. Required for unbounded families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_alpha: Option<f64>,
    /// Exponential-moment constant γ with E exp(γ|ε|^α) < ∞.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily) -> Self {
        Self { family, alpha: DEFAULT_ALPHA, psi_alpha: None, gamma: None }
    }

    pub fn uniform(bound: f64) -> Self {
        Self::new(NoiseFamily::Uniform { low: -bound, high: bound })
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self::new(NoiseFamily::Gaussian { sigma })
    }

    pub fn zero() -> Self {
        Self::new(NoiseFamily::CustomSamples { samples: vec![0.0] })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidNoiseSpec(m));
        if !(self.alpha > 2.0) {
            return bad(format!("alpha must exceed 2, got {}", self.alpha));
        }
        if let Some(psi) = self.psi_alpha {
            if !(psi > 0.0) {
                return bad(format!("psi_alpha must be positive, got {psi}"));
            }
        }
        match &self.family {
            NoiseFamily::Uniform { low, high } => {
                if !(high > low) || !low.is_finite() || !high.is_finite() {
                    return bad(format!("uniform bounds [{low}, {high}]"));
                }
                if (low + high).abs() > 1e-12 * (high - low) {
                    return bad(format!("uniform [{low}, {high}] is not mean zero"));
                }
            }
            NoiseFamily::Gaussian { sigma } => {
                if !(*sigma > 0.0) || !sigma.is_finite() {
                    return bad(format!("gaussian sigma must be positive, got {sigma}"));
                }
            }
            // A degenerate (all-zero) sample list is allowed: it encodes noiseless data.
            NoiseFamily::CustomSamples { samples } => {
                if samples.is_empty() || samples.iter().any(|s| !s.is_finite()) {
                    return bad("custom samples must be non-empty and finite".into());
                }
                let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
                let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                if mean.abs() > 1e-9 * scale.max(1.0) {
                    return bad(format!("custom samples have mean {mean}, expected zero"));
                }
            }
        }
        Ok(())
    }

    /// Standard deviation of the family.
    pub fn sigma(&self) -> f64 {
        match &self.family {
            NoiseFamily::Uniform { low, high } => (high - low) / 12f64.sqrt(),
            NoiseFamily::Gaussian { sigma } => *sigma,
            NoiseFamily::CustomSamples { samples } => {
                let m = samples.len() as f64;
                (samples.iter().map(|s| s * s).sum::<f64>() / m).sqrt()
            }
        }
    }

    /// Largest absolute value the noise can take, if bounded.
    pub fn bound(&self) -> Option<f64> {
        match &self.family {
            NoiseFamily::Uniform { low, high } => Some(low.abs().max(high.abs())),
            NoiseFamily::Gaussian { .. } => None,
            NoiseFamily::CustomSamples { samples } => Some(samples.iter().fold(0.0, |m: f64, s| m.max(s.abs()))),
        }
    }

    /// ‖ε‖_Ψα. For a family bounded by `b`, `E exp((|ε|/t)^α) ≤ exp((b/t)^α)`,
    /// which equals 2 at `t = b / (ln 2)^{1/α}`; that value is used when no
    /// explicit norm was supplied.
    pub fn orlicz_psi_alpha(&self) -> Result<f64> {
        if let Some(psi) = self.psi_alpha {
            return Ok(psi);
        }
        match self.bound() {
            Some(b) if b > 0.0 => Ok(b / std::f64::consts::LN_2.powf(1.0 / self.alpha)),
            _ => Err(Error::InvalidNoiseSpec(
                "psi_alpha must be supplied for unbounded or degenerate noise".into(),
            )),
        }
    }

    /// γ such that E exp(γ|ε|^α) ≤ 2, i.e. `ψ^{-α}`, unless supplied.
    pub fn orlicz_gamma(&self) -> Result<f64> {
        match self.gamma {
            Some(g) => Ok(g),
            None => Ok(self.orlicz_psi_alpha()?.powf(-self.alpha)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<DVector<f64>> {
        self.validate()?;
        Ok(match &self.family {
            NoiseFamily::Uniform { low, high } => {
                let u = Uniform::new(*low, *high).map_err(|e| Error::InvalidNoiseSpec(e.to_string()))?;
                DVector::from_iterator(n, (0..n).map(|_| u.sample(rng)))
            }
            NoiseFamily::Gaussian { sigma } => {
                let g = Normal::new(0.0, *sigma).map_err(|e| Error::InvalidNoiseSpec(e.to_string()))?;
                DVector::from_iterator(n, (0..n).map(|_| g.sample(rng)))
            }
            NoiseFamily::CustomSamples { samples } => {
                DVector::from_iterator(n, (0..n).map(|_| samples[rng.random_range(0..samples.len())]))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta_hat: DVector<f64>,
    pub residuals_hat: DVector<f64>,
    /// `(XᵀX)⁻¹Xᵀ`, p×n.
    pub pseudoinverse_map: DMatrix<f64>,
    /// Hat matrix `Π = X(XᵀX)⁻¹Xᵀ`, n×n.
    pub projection: DMatrix<f64>,
    pub l: f64,
    pub lbar: f64,
}

/// A factored fixed design. Cheap to reuse across many response vectors.
#[derive(Debug, Clone)]
pub struct Design {
    x: DMatrix<f64>,
    q: DMatrix<f64>,
    pinv: DMatrix<f64>,
    sigma_min: f64,
    sigma_max: f64,
    lbar: f64,
}

impl Design {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        Self::with_rank_tol(x, DEFAULT_RANK_TOL)
    }

    pub fn with_rank_tol(x: DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        let (n, p) = x.shape();
        if p == 0 || n < p {
            return Err(Error::DimensionMismatch(format!("design must have n >= p >= 1, got {n}x{p}")));
        }
        let sv = x.clone().svd(false, false).singular_values;
        let sigma_max = sv.max();
        let sigma_min = sv.min();
        if !(sigma_min > rank_tol * sigma_max) {
            return Err(Error::RankDeficient { sigma_min, sigma_max });
        }
        let qr = x.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let pinv = r
            .solve_upper_triangular(&q.transpose())
            .ok_or(Error::RankDeficient { sigma_min, sigma_max })?;
        // Nonzero spectrum of (1/n)11ᵀ + QQᵀ equals that of the Gram matrix of
        // [1/√n, Q], i.e. [[1, bᵀ], [b, I]] with b = Qᵀ1/√n: {1 ± ‖b‖, 1}.
        let nf = n as f64;
        let b = q.transpose() * DVector::from_element(n, 1.0 / nf.sqrt());
        let lambda_max = 1.0 + b.norm();
        let lbar = lambda_max.sqrt() / nf.sqrt();
        Ok(Self { x, q, pinv, sigma_min, sigma_max, lbar })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn pseudoinverse_map(&self) -> &DMatrix<f64> {
        &self.pinv
    }
    /// Spectral norm of the pseudoinverse map, `1 / σ_min(X)`.
    pub fn l(&self) -> f64 {
        1.0 / self.sigma_min
    }
    pub fn lbar(&self) -> f64 {
        self.lbar
    }
    pub fn condition_number(&self) -> f64 {
        self.sigma_max / self.sigma_min
    }

    pub fn projection(&self) -> DMatrix<f64> {
        &self.q * self.q.transpose()
    }

    /// `Π v` without forming Π.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.q * (self.q.transpose() * v)
    }

    pub fn estimate(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.pinv * y
    }

    pub fn fit(&self, y: &DVector<f64>) -> Result<OlsFit> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch(format!("y has {} entries, X has {} rows", y.len(), self.n())));
        }
        let beta_hat = self.estimate(y);
        let residuals_hat = y - &self.x * &beta_hat;
        Ok(OlsFit {
            beta_hat,
            residuals_hat,
            pseudoinverse_map: self.pinv.clone(),
            projection: self.projection(),
            l: self.l(),
            lbar: self.lbar,
        })
    }
}

pub fn ols_fit(data: &RegressionDataset) -> Result<OlsFit> {
    Design::new(data.x().clone())?.fit(data.y())
}

/// `(L, L̄)` for a full-column-rank design.
pub fn compute_lipschitz_constants(x: &DMatrix<f64>) -> Result<(f64, f64)> {
    let d = Design::new(x.clone())?;
    Ok((d.l(), d.lbar()))
}

/// Standard-normal design, `n × p`.
pub fn gaussian_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seed::derived_rng(seed, seed::stream::DESIGN, 0);
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Gaussian design plus noise drawn from `noise`; both streams derive from `seed`.
pub fn generate_synthetic(
    n: usize,
    p: usize,
    beta_true: &DVector<f64>,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<RegressionDataset> {
    if n <= p || p == 0 {
        return Err(Error::DimensionMismatch(format!("need n > p >= 1, got n = {n}, p = {p}")));
    }
    if beta_true.len() != p {
        return Err(Error::DimensionMismatch(format!("beta_true has {} entries, p = {p}", beta_true.len())));
    }
    noise.validate()?;
    let x = gaussian_design(n, p, seed);
    let mut rng = seed::derived_rng(seed, seed::stream::NOISE, 0);
    let eps = noise.sample(&mut rng, n)?;
    RegressionDataset::from_truth(x, beta_true.clone(), eps)
}

/// Builds a noise realization for which the OLS estimate equals `beta_true`
/// except that component `target` equals `target_value`.
///
/// The noise is `X (β̂_target − β)`, which lies in the column space of `X`,
/// so the fitted residuals are zero. `target` is zero-based.
pub fn construct_adversarial_realization(
    x: &DMatrix<f64>,
    beta_true: &DVector<f64>,
    target: usize,
    target_value: f64,
) -> Result<RegressionDataset> {
    let zero = DVector::zeros(x.nrows());
    construct_adversarial_with_residuals(x, beta_true, &zero, target, target_value)
}

/// Like [`construct_adversarial_realization`], but keeps the part of
/// `base_noise` orthogonal to the column space of `X` as the residual vector:
/// `ε = (I − Π) ε₀ + X (β̂_target − β)`. The OLS estimate still hits the
/// target exactly while the residuals (and therefore the bootstrap) stay
/// non-degenerate.
pub fn construct_adversarial_with_residuals(
    x: &DMatrix<f64>,
    beta_true: &DVector<f64>,
    base_noise: &DVector<f64>,
    target: usize,
    target_value: f64,
) -> Result<RegressionDataset> {
    let p = x.ncols();
    if target >= p {
        return Err(Error::InvalidInputs(format!("target component {target} out of range for p = {p}")));
    }
    if base_noise.len() != x.nrows() || beta_true.len() != p {
        return Err(Error::DimensionMismatch("base noise / beta_true length".into()));
    }
    let design = Design::new(x.clone())?;
    let mut shift = DVector::zeros(p);
    shift[target] = target_value - beta_true[target];
    let orth = base_noise - design.project(base_noise);
    let eps = orth + x * shift;
    RegressionDataset::from_truth(x.clone(), beta_true.clone(), eps)
}
