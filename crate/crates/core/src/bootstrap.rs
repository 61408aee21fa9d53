//! Residual bootstrap.
//!
//! Replicate `i` draws `n` indices into the centered residuals with its own
//! ChaCha8 stream seeded by `seed::derive(master, BOOTSTRAP, i)`, builds
//! `y*ⁱ = X β̂ + ε*ⁱ` and re-fits `β̂*ⁱ = (XᵀX)⁻¹Xᵀ y*ⁱ`. Because each replicate
//! owns its stream, replicates can be generated in parallel and the ensemble
//! is identical for any thread count.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::empirical::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::regression::OlsFit;
use crate::seed;

/// Centered residual distribution `F̂ₙ`: atoms `ε̂ᵢ − mean(ε̂)`.
pub fn center_residuals(residuals_hat: &DVector<f64>) -> Result<EmpiricalDistribution> {
    if residuals_hat.is_empty() {
        return Err(Error::InvalidInputs("no residuals to center".into()));
    }
    let mean = residuals_hat.mean();
    let centered: Vec<f64> = residuals_hat.iter().map(|r| r - mean).collect();
    EmpiricalDistribution::from_scalars(&centered)
}

/// `m` iid atom indices, uniform over `0..len`.
pub fn resample_indices<R: Rng + ?Sized>(len: usize, m: usize, rng: &mut R) -> Vec<usize> {
    (0..m).map(|_| rng.random_range(0..len)).collect()
}

/// `m` iid draws from an empirical distribution.
pub fn resample<R: Rng + ?Sized>(dist: &EmpiricalDistribution, m: usize, rng: &mut R) -> Vec<DVector<f64>> {
    resample_indices(dist.len(), m, rng)
        .into_iter()
        .map(|i| dist.atoms()[i].clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Build `y*` and re-fit.
    #[default]
    Refit,
    /// `β̂* = β̂ + (XᵀX)⁻¹Xᵀ ε*`.
    Shortcut,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BootstrapOptions {
    pub store_resamples: bool,
    pub route: Route,
    pub exec: Exec,
}

#[derive(Debug, Clone)]
pub struct BootstrapEnsemble {
    pub beta_stars: Vec<DVector<f64>>,
    pub beta_hat: DVector<f64>,
    /// The residual resamples `ε*ⁱ`, kept only when requested.
    pub resamples: Option<Vec<DVector<f64>>>,
    pub seed: u64,
}

impl BootstrapEnsemble {
    pub fn k(&self) -> usize {
        self.beta_stars.len()
    }

    pub fn p(&self) -> usize {
        self.beta_hat.len()
    }

    /// Largest deviation from `β̂*ⁱ = β̂ + (XᵀX)⁻¹Xᵀ ε*ⁱ` over the stored resamples.
    pub fn shortcut_deviation(&self, pseudoinverse_map: &DMatrix<f64>) -> Option<f64> {
        let res = self.resamples.as_ref()?;
        Some(
            self.beta_stars
                .iter()
                .zip(res)
                .map(|(b, e)| (b - &self.beta_hat - pseudoinverse_map * e).amax())
                .fold(0.0, f64::max),
        )
    }
}

pub fn bootstrap_ensemble(
    fit: &OlsFit,
    x: &DMatrix<f64>,
    k: usize,
    master_seed: u64,
    opts: BootstrapOptions,
) -> Result<BootstrapEnsemble> {
    if k == 0 {
        return Err(Error::InvalidInputs("bootstrap needs k >= 1".into()));
    }
    let n = x.nrows();
    if fit.residuals_hat.len() != n || fit.pseudoinverse_map.shape() != (x.ncols(), n) {
        return Err(Error::DimensionMismatch("fit does not match the design".into()));
    }
    let centered = center_residuals(&fit.residuals_hat)?.scalars()?;
    let fitted = x * &fit.beta_hat;

    let draws = par::map_indexed(opts.exec, k, |i| {
        let mut rng = seed::derived_rng(master_seed, seed::stream::BOOTSTRAP, i as u64);
        let idx = resample_indices(n, n, &mut rng);
        let eps_star = DVector::from_iterator(n, idx.into_iter().map(|j| centered[j]));
        let beta_star = match opts.route {
            Route::Refit => &fit.pseudoinverse_map * (&fitted + &eps_star),
            Route::Shortcut => &fit.beta_hat + &fit.pseudoinverse_map * &eps_star,
        };
        (beta_star, eps_star)
    });

    let (beta_stars, resamples): (Vec<_>, Vec<_>) = draws.into_iter().unzip();
    Ok(BootstrapEnsemble {
        beta_stars,
        beta_hat: fit.beta_hat.clone(),
        resamples: opts.store_resamples.then_some(resamples),
        seed: master_seed,
    })
}

/// `Φ*ₖ(F̂ₙ)`: the ensemble as an equal-weight distribution on ℝᵖ.
pub fn ensemble_to_distribution(ens: &BootstrapEnsemble) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(ens.beta_stars.clone())
}
