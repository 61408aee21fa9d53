//! Decision layer: nominal, certainty-equivalent and distributionally robust
//! programs whose constraints are affine in the regression parameter.
//!
//! Constraint `j` is `g_j(x, β) = a_j(β)ᵀx − b_j(β) ≤ 0` with
//!
//! ```text
//! a_j(β) = A_jᵀβ + a0_j      (A_j is p×d)
//! b_j(β) = D_jᵀβ + e_j
//! ```
//!
//! so `g_j` is affine in β with gradient `A_j x − D_j`. Under a 1-Wasserstein
//! ball with the Euclidean ground norm the worst case of any risk built from
//! `g_j` pays `ε ‖A_j x − D_j‖₂`, which is the cone constraint `‖·‖ ≤ λ_j`.
//!
//! The CVaR program is emitted exactly in the form
//!
//! ```text
//! ε λ_j + (1/k) Σᵢ s_ji ≤ Δ_j
//! g_j(x, β̂*ⁱ) − (1 − γ) τ_j ≤ s_ji      i = 1..k
//! γ τ_j ≤ s_ji                          i = 1..k
//! ‖A_j x − D_j‖₂ ≤ λ_j
//! ```
//!
//! Minimizing over `s, τ` gives `(1/k) Σᵢ max(g_ji − (1−γ)τ, γτ) = γ·CVaR_γ`,
//! so the constraint bounds the *scaled* CVaR `γ·CVaR_γ(g_j)` by `Δ_j`
//! (the ball adds at most `ε‖A_j x − D_j‖₂` to that scaled quantity).
//! [`RiskSpec::risk_of`] evaluates the same functional on samples, and is
//! what out-of-sample checks compare against `Δ_j`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguitySet;
use crate::bootstrap::BootstrapEnsemble;
use crate::conic::{self, ConicProgram, SocBlock, SolveResult, SolveStatus, Tolerances};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `g(x, β) = xᵀ(A_jᵀβ + a0) − (Dᵀβ + e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    /// `p` rows of length `d`.
    pub a: Vec<Vec<f64>>,
    pub a0: Vec<f64>,
    pub d: Vec<f64>,
    pub e: f64,
}

impl AffineConstraint {
    /// `a(β) = β`, `b(β) = rhs`: the constraint `βᵀx ≤ rhs`.
    pub fn inner_product(p: usize, rhs: f64) -> Self {
        let a = (0..p).map(|r| (0..p).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
        Self { a, a0: vec![0.0; p], d: vec![0.0; p], e: rhs }
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn dim_x(&self) -> usize {
        self.a0.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p(), self.dim_x(), |r, c| self.a[r][c])
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.a0.len() != d || self.a.iter().any(|row| row.len() != d) || self.d.len() != self.a.len() || self.a.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "constraint blocks must be p×{d} / {d} / p with p >= 1"
            )));
        }
        Ok(())
    }

    /// `a(β)`, length `d`.
    pub fn coefficients(&self, beta: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::from_column_slice(&self.a0);
        for (r, row) in self.a.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                out[c] += v * beta[r];
            }
        }
        out
    }

    /// `b(β)`.
    pub fn rhs(&self, beta: &DVector<f64>) -> f64 {
        self.d.iter().zip(beta.iter()).map(|(d, b)| d * b).sum::<f64>() + self.e
    }

    pub fn value(&self, x: &DVector<f64>, beta: &DVector<f64>) -> f64 {
        self.coefficients(beta).dot(x) - self.rhs(beta)
    }

    /// `∇_β g = A x − D`, length `p`.
    pub fn beta_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.p(),
            self.a.iter().zip(&self.d).map(|(row, d)| row.iter().zip(x.iter()).map(|(a, x)| a * x).sum::<f64>() - d),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "snake_case")]
pub enum RiskMeasure {
    Expectation,
    Cvar { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSpec {
    #[serde(flatten)]
    pub measure: RiskMeasure,
    /// Risk limit per constraint.
    #[serde(rename = "Delta")]
    pub limits: Vec<f64>,
}

impl RiskSpec {
    pub fn validate(&self) -> Result<()> {
        if let RiskMeasure::Cvar { gamma } = self.measure {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(Error::InvalidInputs(format!("CVaR level must lie in (0, 1], got {gamma}")));
            }
        }
        if self.limits.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidInputs("risk limits must be finite".into()));
        }
        Ok(())
    }

    /// The functional the reformulations bound by `Δ`: the sample mean for
    /// expectation, `γ · CVaR_γ` for CVaR.
    pub fn risk_of(&self, samples: &[f64]) -> Result<f64> {
        match self.measure {
            RiskMeasure::Expectation => {
                if samples.is_empty() {
                    return Err(Error::InvalidInputs("no samples".into()));
                }
                Ok(samples.iter().sum::<f64>() / samples.len() as f64)
            }
            RiskMeasure::Cvar { gamma } => Ok(gamma * empirical_cvar(samples, gamma)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustLinearProblem {
    pub sense: Sense,
    /// `c` in `f(x) = cᵀx`.
    pub objective: Vec<f64>,
    pub constraints: Vec<AffineConstraint>,
    #[serde(default)]
    pub nonneg_x: bool,
    pub risk: RiskSpec,
}

impl RobustLinearProblem {
    /// maximize `1ᵀx` s.t. `βᵀx ≤ 1`, `x ≥ 0`, with a CVaR limit.
    pub fn inner_product_instance(p: usize, gamma: f64, limit: f64) -> Self {
        Self {
            sense: Sense::Maximize,
            objective: vec![1.0; p],
            constraints: vec![AffineConstraint::inner_product(p, 1.0)],
            nonneg_x: true,
            risk: RiskSpec { measure: RiskMeasure::Cvar { gamma }, limits: vec![limit] },
        }
    }

    pub fn d(&self) -> usize {
        self.objective.len()
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    /// Parameter dimension (shared by all constraints).
    pub fn p(&self) -> usize {
        self.constraints.first().map_or(0, |c| c.p())
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d();
        if d == 0 || self.constraints.is_empty() {
            return Err(Error::DimensionMismatch("need d >= 1 and m >= 1".into()));
        }
        for c in &self.constraints {
            c.validate(d)?;
            if c.p() != self.p() {
                return Err(Error::DimensionMismatch("constraints disagree on p".into()));
            }
        }
        if self.risk.limits.len() != self.m() {
            return Err(Error::DimensionMismatch(format!("{} risk limits for {} constraints", self.risk.limits.len(), self.m())));
        }
        self.risk.validate()
    }

    fn min_objective(&self) -> Vec<f64> {
        match self.sense {
            Sense::Minimize => self.objective.clone(),
            Sense::Maximize => self.objective.iter().map(|c| -c).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableMap {
    pub x: Range<usize>,
    pub s: Vec<Range<usize>>,
    pub tau: Vec<usize>,
    pub lambda: Vec<usize>,
}

impl VariableMap {
    pub fn len(&self) -> usize {
        self.x.len() + self.s.iter().map(|r| r.len()).sum::<usize>() + self.tau.len() + self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct ReformulatedProgram {
    pub program: ConicProgram,
    pub map: VariableMap,
    pub sense: Sense,
}

#[derive(Debug, Clone)]
pub struct DecisionSolution {
    pub status: SolveStatus,
    pub x: Option<DVector<f64>>,
    /// `f(x)` in the problem's own sense (NaN unless optimal).
    pub objective: f64,
    pub lambda: Vec<f64>,
    pub tau: Vec<f64>,
    pub raw: SolveResult,
}

impl ReformulatedProgram {
    pub fn solve(&self, tol: Tolerances) -> Result<DecisionSolution> {
        let raw = conic::solve(&self.program, tol)?;
        let (x, lambda, tau) = match &raw.v {
            Some(v) => (
                Some(DVector::from_column_slice(&v[self.map.x.clone()])),
                self.map.lambda.iter().map(|&i| v[i]).collect(),
                self.map.tau.iter().map(|&i| v[i]).collect(),
            ),
            None => (None, vec![], vec![]),
        };
        let objective = match (&x, self.sense) {
            (Some(_), Sense::Minimize) => raw.objective_value,
            (Some(_), Sense::Maximize) => -raw.objective_value,
            (None, _) => f64::NAN,
        };
        Ok(DecisionSolution { status: raw.status, x, objective, lambda, tau, raw })
    }

    pub fn solve_default(&self) -> Result<DecisionSolution> {
        self.solve(Tolerances::default())
    }
}

fn base_program(prob: &RobustLinearProblem, nvars: usize) -> ConicProgram {
    let mut prog = ConicProgram::new(nvars);
    prog.objective[..prob.d()].copy_from_slice(&prob.min_objective());
    if prob.nonneg_x {
        for i in 0..prob.d() {
            prog.set_lower_bound(i, 0.0);
        }
    }
    prog
}

fn x_row(coeffs: &DVector<f64>) -> Vec<(usize, f64)> {
    coeffs.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(i, &a)| (i, a)).collect()
}

fn lipschitz_cone(c: &AffineConstraint, lambda: usize) -> SocBlock {
    SocBlock {
        f: c.a.iter().map(|row| row.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(i, &a)| (i, a)).collect()).collect(),
        g: c.d.iter().map(|d| -d).collect(),
        h: vec![(lambda, 1.0)],
        r: 0.0,
    }
}

fn check_ensemble(prob: &RobustLinearProblem, ensemble: &BootstrapEnsemble, amb: &AmbiguitySet) -> Result<()> {
    prob.validate()?;
    if amb.q != 1 {
        return Err(Error::UnsupportedOrder(amb.q));
    }
    if ensemble.k() == 0 || ensemble.beta_stars.iter().any(|b| b.len() != prob.p()) {
        return Err(Error::DimensionMismatch(format!("ensemble atoms must have dimension p = {}", prob.p())));
    }
    if !(amb.radius >= 0.0) {
        return Err(Error::NegativeRadius(amb.radius));
    }
    Ok(())
}

/// `g_j(x, β̂) ≤ 0` for every `j`.
pub fn build_certainty_equivalent(prob: &RobustLinearProblem, beta_hat: &DVector<f64>) -> Result<ReformulatedProgram> {
    prob.validate()?;
    if beta_hat.len() != prob.p() {
        return Err(Error::DimensionMismatch(format!("beta has {} entries, p = {}", beta_hat.len(), prob.p())));
    }
    let d = prob.d();
    let mut prog = base_program(prob, d);
    for c in &prob.constraints {
        prog.add_ineq(x_row(&c.coefficients(beta_hat)), c.rhs(beta_hat));
    }
    Ok(ReformulatedProgram {
        program: prog,
        map: VariableMap { x: 0..d, s: vec![], tau: vec![], lambda: vec![] },
        sense: prob.sense,
    })
}

/// Exact conic reformulation of the worst-case CVaR constraints.
/// Variable layout: `x`, then per constraint `s_j (k)`, `τ_j`, `λ_j`.
pub fn build_dro_cvar(prob: &RobustLinearProblem, ensemble: &BootstrapEnsemble, amb: &AmbiguitySet) -> Result<ReformulatedProgram> {
    check_ensemble(prob, ensemble, amb)?;
    let gamma = match prob.risk.measure {
        RiskMeasure::Cvar { gamma } => gamma,
        RiskMeasure::Expectation => return Err(Error::UnsupportedRisk("expectation (use build_dro_expectation)".into())),
    };
    let (d, m, k) = (prob.d(), prob.m(), ensemble.k());
    let nvars = d + m * (k + 2);
    let mut prog = base_program(prob, nvars);
    let mut map = VariableMap { x: 0..d, s: vec![], tau: vec![], lambda: vec![] };
    let eps = amb.radius;

    for (j, c) in prob.constraints.iter().enumerate() {
        let start = d + j * (k + 2);
        let s = start..start + k;
        let tau = start + k;
        let lambda = start + k + 1;

        let mut budget: Vec<(usize, f64)> = s.clone().map(|i| (i, 1.0 / k as f64)).collect();
        budget.push((lambda, eps));
        prog.add_ineq(budget, prob.risk.limits[j]);

        for (i, beta) in ensemble.beta_stars.iter().enumerate() {
            let mut row = x_row(&c.coefficients(beta));
            row.push((tau, -(1.0 - gamma)));
            row.push((s.start + i, -1.0));
            prog.add_ineq(row, c.rhs(beta));
            prog.add_ineq(vec![(tau, gamma), (s.start + i, -1.0)], 0.0);
        }
        prog.add_soc(lipschitz_cone(c, lambda));

        map.s.push(s);
        map.tau.push(tau);
        map.lambda.push(lambda);
    }
    Ok(ReformulatedProgram { program: prog, map, sense: prob.sense })
}

/// Worst-case expectation over the ball:
/// `(1/k) Σᵢ g_j(x, β̂*ⁱ) + ε λ_j ≤ Δ_j`, `‖A_j x − D_j‖₂ ≤ λ_j`.
pub fn build_dro_expectation(
    prob: &RobustLinearProblem,
    ensemble: &BootstrapEnsemble,
    amb: &AmbiguitySet,
) -> Result<ReformulatedProgram> {
    check_ensemble(prob, ensemble, amb)?;
    if prob.risk.measure != RiskMeasure::Expectation {
        return Err(Error::UnsupportedRisk("CVaR (use build_dro_cvar)".into()));
    }
    let (d, m, k) = (prob.d(), prob.m(), ensemble.k() as f64);
    let mut prog = base_program(prob, d + m);
    let mut map = VariableMap { x: 0..d, s: vec![], tau: vec![], lambda: vec![] };
    for (j, c) in prob.constraints.iter().enumerate() {
        let lambda = d + j;
        let mut coeffs = DVector::zeros(d);
        let mut rhs = 0.0;
        for beta in &ensemble.beta_stars {
            coeffs += c.coefficients(beta);
            rhs += c.rhs(beta);
        }
        let mut row = x_row(&(coeffs / k));
        row.push((lambda, amb.radius));
        prog.add_ineq(row, prob.risk.limits[j] + rhs / k);
        prog.add_soc(lipschitz_cone(c, lambda));
        map.lambda.push(lambda);
    }
    Ok(ReformulatedProgram { program: prog, map, sense: prob.sense })
}

/// Dispatches on the problem's risk measure.
pub fn build_dro(prob: &RobustLinearProblem, ensemble: &BootstrapEnsemble, amb: &AmbiguitySet) -> Result<ReformulatedProgram> {
    match prob.risk.measure {
        RiskMeasure::Cvar { .. } => build_dro_cvar(prob, ensemble, amb),
        RiskMeasure::Expectation => build_dro_expectation(prob, ensemble, amb),
    }
}

/// `CVaR_γ` of the empirical distribution of `z`:
/// the mean of the worst `γ` fraction of mass, splitting the boundary atom.
pub fn empirical_cvar(z: &[f64], gamma: f64) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::InvalidInputs("no samples".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidInputs(format!("CVaR level must lie in (0, 1], got {gamma}")));
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = sorted.len();
    let mass = gamma * k as f64;
    let whole = (mass.floor() as usize).min(k);
    let mut total: f64 = sorted[..whole].iter().sum();
    if whole < k {
        total += (mass - whole as f64) * sorted[whole];
    }
    Ok(total / mass)
}

/// `g_j(x, β)`; positive means the true constraint is violated.
pub fn evaluate_true_violation(prob: &RobustLinearProblem, x: &DVector<f64>, beta_true: &DVector<f64>, j: usize) -> Result<f64> {
    let c = prob
        .constraints
        .get(j)
        .ok_or_else(|| Error::InvalidInputs(format!("constraint {j} out of range")))?;
    if x.len() != c.dim_x() || beta_true.len() != c.p() {
        return Err(Error::DimensionMismatch("x or beta length".into()));
    }
    Ok(c.value(x, beta_true))
}

/// Values `g_j(x, βᵢ)` over a set of parameter samples.
pub fn constraint_samples(c: &AffineConstraint, x: &DVector<f64>, betas: &[DVector<f64>]) -> Vec<f64> {
    betas.iter().map(|b| c.value(x, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::{make_ambiguity_set, RadiusSpec};
    use crate::bootstrap::ensemble_to_distribution;
    use approx::assert_abs_diff_eq;

    fn ensemble(betas: Vec<DVector<f64>>) -> BootstrapEnsemble {
        let beta_hat = betas[0].clone();
        BootstrapEnsemble { beta_stars: betas, beta_hat, resamples: None, seed: 0 }
    }

    fn ball(ens: &BootstrapEnsemble, eps: f64) -> AmbiguitySet {
        make_ambiguity_set(ensemble_to_distribution(ens).unwrap(), RadiusSpec::Tuned(eps)).unwrap()
    }

    fn linear_beta(p: usize) -> DVector<f64> {
        DVector::from_fn(p, |i, _| 0.1 * (i + 1) as f64)
    }

    #[test]
    fn cvar_examples() {
        assert_abs_diff_eq!(empirical_cvar(&[1.0, 2.0, 3.0, 4.0], 1.0).unwrap(), 2.5);
        assert_abs_diff_eq!(empirical_cvar(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap(), 3.5);
        for g in [0.05, 0.3, 0.77, 1.0] {
            assert_abs_diff_eq!(empirical_cvar(&[1.7; 9], g).unwrap(), 1.7, epsilon = 1e-12);
        }
        assert!(empirical_cvar(&[], 0.5).is_err());
        assert!(empirical_cvar(&[1.0], 0.0).is_err());
    }

    #[test]
    fn cvar_matches_grid_minimization() {
        // inf_τ τ + E[max(z − τ, 0)]/γ over a fine grid of τ.
        let z = [0.3, -1.2, 2.5, 0.9, 1.1, -0.4, 3.3];
        for gamma in [0.1, 0.25, 0.5, 0.9] {
            let obj = |t: f64| t + z.iter().map(|v| (v - t).max(0.0)).sum::<f64>() / (gamma * z.len() as f64);
            let grid_min = (0..=60_000).map(|i| -2.0 + i as f64 * 1e-4).map(obj).fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(empirical_cvar(&z, gamma).unwrap(), grid_min, epsilon = 1e-8);
        }
    }

    #[test]
    fn certainty_equivalent_known_beta() {
        let prob = RobustLinearProblem::inner_product_instance(10, 0.05, 0.1);
        let beta = linear_beta(10);
        let sol = build_certainty_equivalent(&prob, &beta).unwrap().solve_default().unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective, 10.0, epsilon = 1e-6);
        let x = sol.x.unwrap();
        assert_abs_diff_eq!(x[0], 10.0, epsilon = 1e-5);
        assert!(evaluate_true_violation(&prob, &x, &beta, 0).unwrap().abs() < 1e-6);
    }

    #[test]
    fn certainty_equivalent_catastrophe() {
        let prob = RobustLinearProblem::inner_product_instance(10, 0.05, 0.1);
        let beta = linear_beta(10);
        let mut beta_hat = beta.clone();
        beta_hat[9] = 0.006;
        let sol = build_certainty_equivalent(&prob, &beta_hat).unwrap().solve_default().unwrap();
        let x = sol.x.unwrap();
        assert_abs_diff_eq!(x[9], 1.0 / 0.006, epsilon = 1e-4);
        let v = evaluate_true_violation(&prob, &x, &beta, 0).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 0.006 - 1.0, epsilon = 1e-4);
        assert_eq!(evaluate_true_violation(&prob, &DVector::zeros(10), &beta, 0).unwrap(), -1.0);
    }

    #[test]
    fn default_cvar_program_has_42_variables() {
        let prob = RobustLinearProblem::inner_product_instance(10, 0.05, 0.1);
        let betas = (0..30).map(|i| linear_beta(10).map(|b| b + 0.01 * (i as f64 - 15.0))).collect();
        let ens = ensemble(betas);
        let r = build_dro_cvar(&prob, &ens, &ball(&ens, 0.05)).unwrap();
        assert_eq!(r.program.nvars, 42);
        assert_eq!(r.map.len(), 42);
        let sol = r.solve_default().unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn point_mass_cvar_reduces_to_shifted_certainty_equivalent() {
        // k = 1, ε = 0: γ·CVaR of a point mass is γ g, so the constraint is g ≤ Δ/γ.
        let (gamma, limit) = (0.2, 0.1);
        let prob = RobustLinearProblem::inner_product_instance(3, gamma, limit);
        let beta = DVector::from_vec(vec![0.5, 0.25, 1.0]);
        let ens = ensemble(vec![beta.clone()]);
        let dro = build_dro_cvar(&prob, &ens, &ball(&ens, 0.0)).unwrap().solve_default().unwrap();
        let mut shifted = prob.clone();
        shifted.constraints[0].e = 1.0 + limit / gamma;
        let ce = build_certainty_equivalent(&shifted, &beta).unwrap().solve_default().unwrap();
        assert_abs_diff_eq!(dro.objective, ce.objective, epsilon = 1e-6);
    }

    #[test]
    fn gamma_one_matches_expectation() {
        let p = 3;
        let betas: Vec<_> = (0..8)
            .map(|i| DVector::from_fn(p, |r, _| 0.4 + 0.05 * ((i * (r + 2)) % 5) as f64))
            .collect();
        let ens = ensemble(betas);
        for eps in [0.0, 0.1] {
            let cvar = RobustLinearProblem::inner_product_instance(p, 1.0, 0.1);
            let mut expect = cvar.clone();
            expect.risk.measure = RiskMeasure::Expectation;
            let a = build_dro_cvar(&cvar, &ens, &ball(&ens, eps)).unwrap().solve_default().unwrap();
            let b = build_dro_expectation(&expect, &ens, &ball(&ens, eps)).unwrap().solve_default().unwrap();
            assert_abs_diff_eq!(a.objective, b.objective, epsilon = 1e-6);
        }
    }

    #[test]
    fn expectation_at_zero_radius_uses_the_mean() {
        let p = 2;
        let betas = vec![DVector::from_vec(vec![0.2, 0.6]), DVector::from_vec(vec![0.6, 0.2])];
        let ens = ensemble(betas);
        let mut prob = RobustLinearProblem::inner_product_instance(p, 1.0, 0.0);
        prob.risk.measure = RiskMeasure::Expectation;
        let sol = build_dro_expectation(&prob, &ens, &ball(&ens, 0.0)).unwrap().solve_default().unwrap();
        // Mean β = (0.4, 0.4): maximize x₁ + x₂ s.t. 0.4(x₁ + x₂) ≤ 1.
        assert_abs_diff_eq!(sol.objective, 2.5, epsilon = 1e-6);

        let single = ensemble(vec![DVector::from_vec(vec![0.25, 0.5])]);
        let a = build_dro_expectation(&prob, &single, &ball(&single, 0.0)).unwrap().solve_default().unwrap();
        let b = build_certainty_equivalent(&prob, &single.beta_stars[0]).unwrap().solve_default().unwrap();
        assert_abs_diff_eq!(a.objective, b.objective, epsilon = 1e-6);
    }

    #[test]
    fn worst_case_expectation_is_mean_plus_radius_times_norm() {
        // Brute-force inner sup: moving atoms by a total mass-weighted distance ε
        // changes the mean of g(x, ·) by at most ε‖x‖, attained by moving one atom
        // a distance kε along x/‖x‖.
        let p = 3;
        let k = 5;
        let betas: Vec<_> = (0..k).map(|i| DVector::from_fn(p, |r, _| 0.1 * (1 + i + r) as f64)).collect();
        let c = AffineConstraint::inner_product(p, 1.0);
        let x = DVector::from_vec(vec![0.7, 0.2, 1.1]);
        let eps = 0.05;
        let mean = constraint_samples(&c, &x, &betas).iter().sum::<f64>() / k as f64;
        let dir = &x / x.norm();
        let mut best = f64::NEG_INFINITY;
        let mut rng = crate::seed::rng(3);
        use rand::Rng;
        for trial in 0..2000 {
            let mut moved = betas.clone();
            if trial < k {
                moved[trial] += &dir * (k as f64 * eps);
            } else {
                // Random split of the transport budget over atoms and directions.
                let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                let total: f64 = w.iter().sum();
                for (i, wi) in w.iter().enumerate() {
                    let u = DVector::from_fn(p, |_, _| rng.random::<f64>() - 0.5);
                    moved[i] += u.normalize() * (k as f64 * eps * wi / total);
                }
            }
            let v = constraint_samples(&c, &x, &moved).iter().sum::<f64>() / k as f64;
            assert!(v <= mean + eps * x.norm() + 1e-12);
            best = best.max(v);
        }
        assert_abs_diff_eq!(best, mean + eps * x.norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.beta_gradient(&x).norm(), x.norm(), epsilon = 1e-15);
    }

    #[test]
    fn errors() {
        let prob = RobustLinearProblem::inner_product_instance(2, 0.1, 0.1);
        let ens = ensemble(vec![DVector::from_vec(vec![1.0, 1.0])]);
        let mut amb = ball(&ens, 0.1);
        let mut expect = prob.clone();
        expect.risk.measure = RiskMeasure::Expectation;
        assert!(matches!(build_dro_cvar(&expect, &ens, &amb), Err(Error::UnsupportedRisk(_))));
        assert!(matches!(build_dro_expectation(&prob, &ens, &amb), Err(Error::UnsupportedRisk(_))));
        amb.q = 2;
        assert!(matches!(build_dro_cvar(&prob, &ens, &amb), Err(Error::UnsupportedOrder(2))));
        assert!(matches!(
            build_certainty_equivalent(&prob, &DVector::zeros(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
