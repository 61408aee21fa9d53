use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};

/// Equal-weight atoms in ℝᵈ. Each atom carries mass `1 / len`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    atoms: Vec<DVector<f64>>,
    dim: usize,
}

impl EmpiricalDistribution {
    pub fn new(atoms: Vec<DVector<f64>>) -> Result<Self> {
        let dim = atoms
            .first()
            .map(|a| a.len())
            .ok_or_else(|| Error::InvalidInputs("empirical distribution needs at least one atom".into()))?;
        if dim == 0 {
            return Err(Error::InvalidInputs("atoms must have dimension >= 1".into()));
        }
        if let Some(bad) = atoms.iter().find(|a| a.len() != dim) {
            return Err(Error::DimensionMismatch(format!("atom of dimension {} in a {dim}-dimensional set", bad.len())));
        }
        Ok(Self { atoms, dim })
    }

    /// One-dimensional distribution from scalar atoms.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| DVector::from_element(1, v)).collect())
    }

    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<DVector<f64>> {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }

    /// Scalar atom values of a one-dimensional distribution.
    pub fn scalars(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch(format!("expected 1-D atoms, got dimension {}", self.dim)));
        }
        Ok(self.atoms.iter().map(|a| a[0]).collect())
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for a in &self.atoms {
            m += a;
        }
        m / self.atoms.len() as f64
    }

    /// Pushforward under a map; exact for empirical measures.
    pub fn map<F: Fn(&DVector<f64>) -> DVector<f64>>(&self, f: F) -> Result<Self> {
        Self::new(self.atoms.iter().map(f).collect())
    }

    /// Uniform index draw; ties among atom values are irrelevant.
    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.atoms.len())
    }
}
