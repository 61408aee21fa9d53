//! Wasserstein ambiguity ball around the bootstrap distribution.
//!
//! The finite-sample radius is `ε = ε₁ + ε₂ + ε₃`:
//!
//! ```text
//! ε₁ = (ln(3c₁/δ) / (c₂k))^{1/max(p,2)}        if k ≥ ln(3c₁/δ)/c₂
//!      (ln(3c₁/δ) / (c₂k))^{1/α}               otherwise
//! ε₂ = √n L (L̄ ‖ε‖_Ψα ln(6/δ) / c)^{1/α} + √n L σ √((p+1)/n)
//! ε₃ = √n L · ln(3c₃/δ) / (c₄n)                 if n ≥ ln(3c₃/δ)/c₄
//!      √n L · (ln(3c₃/δ) / (c₄n))^{2/α}         otherwise
//! ```
//!
//! `ε₁` bounds the bootstrap sampling error, `ε₂ + ε₃` the residual
//! estimation error pushed through the estimator. The second branch of `ε₃`
//! uses `c₄` in the denominator, the same constant as its gate.

use serde::{Deserialize, Serialize};

use crate::empirical::EmpiricalDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c: f64,
}

impl Default for RadiusConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0, c3: 1.0, c4: 1.0, c: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusInputs {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub delta: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub psi_alpha: f64,
    pub l: f64,
    pub lbar: f64,
    #[serde(default)]
    pub constants: RadiusConstants,
}

impl RadiusInputs {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInputs(m));
        if self.n == 0 || self.k == 0 || self.p == 0 {
            return bad(format!("n, k, p must be positive (n={}, k={}, p={})", self.n, self.k, self.p));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.alpha > 2.0) {
            return bad(format!("alpha must exceed 2, got {}", self.alpha));
        }
        let c = &self.constants;
        for (name, v) in [
            ("sigma", self.sigma),
            ("psi_alpha", self.psi_alpha),
            ("L", self.l),
            ("Lbar", self.lbar),
            ("c1", c.c1),
            ("c2", c.c2),
            ("c3", c.c3),
            ("c4", c.c4),
            ("c", c.c),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Sample size at or beyond the gate.
    Large,
    /// Sample size below the gate.
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusBreakdown {
    pub epsilon: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub epsilon3: f64,
    pub branch1: Branch,
    pub branch3: Branch,
}

fn log_term(c: f64, scale: f64, delta: f64) -> Result<f64> {
    let t = (scale * c / delta).ln();
    if !(t > 0.0) {
        return Err(Error::InvalidInputs(format!("ln({scale}·{c}/{delta}) = {t} must be positive")));
    }
    Ok(t)
}

/// Bootstrap sampling term and the branch that fired.
pub fn epsilon1(inputs: &RadiusInputs) -> Result<(f64, Branch)> {
    inputs.validate()?;
    let c = &inputs.constants;
    let t = log_term(c.c1, 3.0, inputs.delta)?;
    let base = t / (c.c2 * inputs.k as f64);
    Ok(if inputs.k as f64 >= t / c.c2 {
        (base.powf(1.0 / inputs.p.max(2) as f64), Branch::Large)
    } else {
        (base.powf(1.0 / inputs.alpha), Branch::Small)
    })
}

pub fn epsilon2(inputs: &RadiusInputs) -> Result<f64> {
    inputs.validate()?;
    let n = inputs.n as f64;
    let scale = n.sqrt() * inputs.l;
    let tail = (inputs.lbar * inputs.psi_alpha * (6.0 / inputs.delta).ln() / inputs.constants.c).powf(1.0 / inputs.alpha);
    let variance = inputs.sigma * ((inputs.p as f64 + 1.0) / n).sqrt();
    Ok(scale * tail + scale * variance)
}

pub fn epsilon3(inputs: &RadiusInputs) -> Result<(f64, Branch)> {
    inputs.validate()?;
    let c = &inputs.constants;
    let n = inputs.n as f64;
    let scale = n.sqrt() * inputs.l;
    let t = log_term(c.c3, 3.0, inputs.delta)?;
    let base = t / (c.c4 * n);
    Ok(if n >= t / c.c4 {
        (scale * base, Branch::Large)
    } else {
        (scale * base.powf(2.0 / inputs.alpha), Branch::Small)
    })
}

pub fn theoretical_radius(inputs: &RadiusInputs) -> Result<RadiusBreakdown> {
    let (e1, b1) = epsilon1(inputs)?;
    let e2 = epsilon2(inputs)?;
    let (e3, b3) = epsilon3(inputs)?;
    Ok(RadiusBreakdown { epsilon: e1 + e2 + e3, epsilon1: e1, epsilon2: e2, epsilon3: e3, branch1: b1, branch3: b3 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMode {
    Theoretical,
    Tuned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadiusSpec {
    Theoretical(RadiusInputs),
    Tuned(f64),
}

/// `{ μ : d₁(center, μ) ≤ radius }`.
#[derive(Debug, Clone)]
pub struct AmbiguitySet {
    pub center: EmpiricalDistribution,
    pub radius: f64,
    /// Wasserstein order; always 1.
    pub q: u32,
    pub mode: RadiusMode,
    pub breakdown: Option<RadiusBreakdown>,
}

pub fn make_ambiguity_set(center: EmpiricalDistribution, spec: RadiusSpec) -> Result<AmbiguitySet> {
    let (radius, mode, breakdown) = match spec {
        RadiusSpec::Tuned(r) => {
            if r < 0.0 || r.is_nan() {
                return Err(Error::NegativeRadius(r));
            }
            (r, RadiusMode::Tuned, None)
        }
        RadiusSpec::Theoretical(inputs) => {
            let b = theoretical_radius(&inputs)?;
            log::debug!("theoretical radius {b:?}");
            (b.epsilon, RadiusMode::Theoretical, Some(b))
        }
    };
    Ok(AmbiguitySet { center, radius, q: 1, mode, breakdown })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    /// δ = 0.5 with c₁ = c₃ = eδ/3 makes both `ln(3c/δ)` terms equal 1.
    fn unit_log_inputs() -> RadiusInputs {
        let delta = 0.5;
        RadiusInputs {
            n: 100,
            k: 16,
            p: 2,
            delta,
            alpha: 3.0,
            sigma: 1.0,
            psi_alpha: 1.0,
            l: 0.1,
            lbar: 0.1,
            constants: RadiusConstants { c1: E * delta / 3.0, c2: 1.0, c3: E * delta / 3.0, c4: 1.0, c: 1.0 },
        }
    }

    #[test]
    fn epsilon1_examples() {
        let mut i = unit_log_inputs();
        i.k = 1;
        let (v, b) = epsilon1(&i).unwrap();
        assert_eq!(b, Branch::Large);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        i.k = 16;
        assert_abs_diff_eq!(epsilon1(&i).unwrap().0, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn epsilon3_examples() {
        let mut i = unit_log_inputs();
        i.n = 1;
        i.l = 0.7;
        let (v, b) = epsilon3(&i).unwrap();
        assert_eq!(b, Branch::Large);
        assert_abs_diff_eq!(v, 0.7, epsilon = 1e-12);
        i.n = 100;
        i.l = 0.1;
        assert_abs_diff_eq!(epsilon3(&i).unwrap().0, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn small_branches_fire_below_gates() {
        let mut i = unit_log_inputs();
        i.constants.c2 = 0.25; // gate at k = 4
        i.k = 2;
        let (v, b) = epsilon1(&i).unwrap();
        assert_eq!(b, Branch::Small);
        assert_abs_diff_eq!(v, (1.0f64 / 0.5).powf(1.0 / 3.0), epsilon = 1e-12);
        i.constants.c4 = 0.1; // gate at n = 10
        i.n = 4;
        i.l = 0.5;
        let (v, b) = epsilon3(&i).unwrap();
        assert_eq!(b, Branch::Small);
        assert_abs_diff_eq!(v, 2.0 * 0.5 * (1.0f64 / 0.4).powf(2.0 / 3.0), epsilon = 1e-12);
    }

    #[test]
    fn epsilon2_examples() {
        let mut i = unit_log_inputs();
        i.p = 10;
        i.psi_alpha = 1e-300;
        assert_abs_diff_eq!(epsilon2(&i).unwrap(), (11.0f64 / 100.0).sqrt(), epsilon = 1e-9);
        // ln(6/δ)/c = 1 and L̄ψ = 1 with L = 1/√n: first term is 1.
        i.constants.c = (6.0 / i.delta).ln();
        i.lbar = 0.5;
        i.psi_alpha = 2.0;
        i.sigma = 1e-300;
        assert_abs_diff_eq!(epsilon2(&i).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn radius_is_the_sum_and_decreases_in_k() {
        let i = unit_log_inputs();
        let b = theoretical_radius(&i).unwrap();
        assert_abs_diff_eq!(b.epsilon, b.epsilon1 + b.epsilon2 + b.epsilon3, epsilon = 1e-15);
        let mut prev = f64::INFINITY;
        for k in [1, 2, 5, 10, 100, 1000, 100_000] {
            let r = theoretical_radius(&RadiusInputs { k, ..i }).unwrap().epsilon;
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let i = unit_log_inputs();
        assert!(epsilon1(&RadiusInputs { delta: 1.2, ..i }).is_err());
        assert!(epsilon2(&RadiusInputs { alpha: 2.0, ..i }).is_err());
        assert!(epsilon3(&RadiusInputs { sigma: 0.0, ..i }).is_err());
        let mut tiny = i;
        tiny.constants.c1 = 0.01;
        tiny.delta = 0.9; // 3c₁/δ < 1
        assert!(epsilon1(&tiny).is_err());
    }

    #[test]
    fn ambiguity_set_modes() {
        let center = EmpiricalDistribution::from_scalars(&[1.0, 2.0]).unwrap();
        let a = make_ambiguity_set(center.clone(), RadiusSpec::Tuned(0.0)).unwrap();
        assert_eq!((a.radius, a.q, a.mode), (0.0, 1, RadiusMode::Tuned));
        let a = make_ambiguity_set(center.clone(), RadiusSpec::Tuned(0.05)).unwrap();
        assert_eq!(a.radius, 0.05);
        assert!(matches!(make_ambiguity_set(center.clone(), RadiusSpec::Tuned(-1.0)), Err(Error::NegativeRadius(_))));
        let i = unit_log_inputs();
        let a = make_ambiguity_set(center, RadiusSpec::Theoretical(i)).unwrap();
        assert_eq!(a.radius, theoretical_radius(&i).unwrap().epsilon);
        assert_eq!(a.mode, RadiusMode::Theoretical);
    }
}
