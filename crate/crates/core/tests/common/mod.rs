#![allow(dead_code)]

use bootdro::conic::ConicProgram;
use bootdro::seed::{self, Rng64};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn combinations(n: usize, r: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == r {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, r, cur, f);
            cur.pop();
        }
    }
    go(0, n, r, &mut Vec::with_capacity(r), f);
}

/// Minimum of a bounded LP (inequalities and lower bounds only) by
/// enumerating every basic solution. `None` when no vertex is feasible.
pub fn vertex_enumeration(prog: &ConicProgram) -> Option<(f64, Vec<f64>)> {
    assert!(prog.soc_blocks.is_empty() && prog.linear_eq.is_empty());
    let n = prog.nvars;
    let mut rows: Vec<(Vec<f64>, f64)> = prog
        .linear_ineq
        .iter()
        .map(|c| {
            let mut a = vec![0.0; n];
            for &(j, v) in &c.coeffs {
                a[j] += v;
            }
            (a, c.rhs)
        })
        .collect();
    for (j, lb) in prog.lower_bounds.iter().enumerate() {
        if let Some(l) = lb {
            let mut a = vec![0.0; n];
            a[j] = -1.0;
            rows.push((a, -l));
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    combinations(rows.len(), n, &mut |idx| {
        let a = DMatrix::from_fn(n, n, |i, j| rows[idx[i]].0[j]);
        let b = DVector::from_fn(n, |i, _| rows[idx[i]].1);
        let Some(v) = a.lu().solve(&b) else { return };
        if v.iter().any(|x| !x.is_finite()) {
            return;
        }
        let scale = 1.0 + v.amax();
        let feasible = rows.iter().all(|(r, rhs)| r.iter().zip(v.iter()).map(|(x, y)| x * y).sum::<f64>() <= rhs + 1e-9 * scale);
        if !feasible {
            return;
        }
        let obj: f64 = prog.objective.iter().zip(v.iter()).map(|(c, x)| c * x).sum();
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, v.iter().copied().collect()));
        }
    });
    best
}

/// Random bounded LP: `0 ≤ v ≤ u` plus a few random cuts.
pub fn random_box_lp(rng: &mut Rng64) -> ConicProgram {
    let n = rng.random_range(1..=4);
    let mut prog = ConicProgram::new(n);
    for j in 0..n {
        prog.objective[j] = rng.random_range(-1.0..1.0);
        prog.set_lower_bound(j, 0.0);
        prog.add_ineq(vec![(j, 1.0)], rng.random_range(0.5..2.0));
    }
    for _ in 0..rng.random_range(0..=3) {
        let row = (0..n).map(|j| (j, rng.random_range(-1.0..1.0))).collect();
        prog.add_ineq(row, rng.random_range(0.1..1.5));
    }
    prog
}

/// Scenario LP for `maximize cᵀx` s.t. `γ·CVaR_γ(βᵢᵀx − 1) ≤ Δ`, `x ≥ 0`,
/// written with the one-sided form `γτ + (1/k)Σ uᵢ`, `uᵢ ≥ βᵢᵀx − 1 − τ`, `uᵢ ≥ 0`.
/// Variables: `x (d)`, `τ`, `u (k)`.
pub fn saa_scenario_lp(c: &[f64], betas: &[Vec<f64>], gamma: f64, delta: f64) -> ConicProgram {
    let d = c.len();
    let k = betas.len();
    let tau = d;
    let u = |i: usize| d + 1 + i;
    let mut prog = ConicProgram::new(d + 1 + k);
    for (j, cj) in c.iter().enumerate() {
        prog.objective[j] = -cj;
        prog.set_lower_bound(j, 0.0);
    }
    let mut budget = vec![(tau, gamma)];
    for (i, b) in betas.iter().enumerate() {
        prog.set_lower_bound(u(i), 0.0);
        let mut row: Vec<(usize, f64)> = b.iter().enumerate().map(|(j, v)| (j, *v)).collect();
        row.push((tau, -1.0));
        row.push((u(i), -1.0));
        prog.add_ineq(row, 1.0);
        budget.push((u(i), 1.0 / k as f64));
    }
    prog.add_ineq(budget, delta);
    prog
}

pub struct SaaInstance {
    pub c: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub gamma: f64,
    pub delta: f64,
}

pub fn random_saa_instance(master: u64, index: u64) -> SaaInstance {
    let mut rng = seed::derived_rng(master, 77, index);
    let p = rng.random_range(1..=5);
    let k = rng.random_range(1..=20);
    SaaInstance {
        c: (0..p).map(|_| rng.random_range(0.2..1.0)).collect(),
        betas: (0..k).map(|_| (0..p).map(|_| rng.random_range(0.2..1.0)).collect()).collect(),
        gamma: rng.random_range(0.05..=1.0),
        delta: rng.random_range(0.0..0.3),
    }
}
