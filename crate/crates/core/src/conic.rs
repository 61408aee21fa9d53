//! Linear and second-order cone programs.
//!
//! A [`ConicProgram`] is a value object in the canonical form
//!
//! ```text
//! minimize    cᵀv
//! subject to  aᵢᵀv ≤ bᵢ                 (linear_ineq)
//!             aᵢᵀv = bᵢ                 (linear_eq)
//!             ‖F v + g‖₂ ≤ hᵀv + r      (soc_blocks)
//!             v_j ≥ l_j                 (lower_bounds, optional per variable)
//! ```
//!
//! [`solve`] hands it to the Clarabel interior-point solver and then
//! re-checks the returned point against the original data; a point that does
//! not satisfy every constraint within `tol_feas` is never reported as
//! optimal.
//!
//! # Text form
//!
//! [`ConicProgram::to_text`] writes a line-oriented dump for external
//! cross-checking; [`ConicProgram::from_text`] reads it back. Sparse rows are
//! `index:value` pairs.
//!
//! ```text
//! conic-program v1
//! nvars <n>
//! objective <c_0> ... <c_{n-1}>
//! ineq <rhs> <i:a> <i:a> ...
//! eq <rhs> <i:a> ...
//! soc <rows> <r> <i:h> ...        # cone head hᵀv + r
//! socrow <g> <i:f> ...            # one per F row, `rows` of them
//! lb <index> <value>
//! end
//! ```

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const DEFAULT_TOL_FEAS: f64 = 1e-8;
pub const DEFAULT_TOL_OPT: f64 = 1e-7;

/// Sparse row: `(variable index, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

fn dot(row: &[(usize, f64)], v: &[f64]) -> f64 {
    row.iter().map(|&(i, a)| a * v[i]).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: SparseRow,
    pub rhs: f64,
}

/// `‖F v + g‖₂ ≤ hᵀv + r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocBlock {
    pub f: Vec<SparseRow>,
    pub g: Vec<f64>,
    pub h: SparseRow,
    pub r: f64,
}

impl SocBlock {
    pub fn violation(&self, v: &[f64]) -> f64 {
        let lhs = self
            .f
            .iter()
            .zip(&self.g)
            .map(|(row, g)| {
                let t = dot(row, v) + g;
                t * t
            })
            .sum::<f64>()
            .sqrt();
        (lhs - dot(&self.h, v) - self.r).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConicProgram {
    pub nvars: usize,
    pub objective: Vec<f64>,
    pub linear_ineq: Vec<LinearConstraint>,
    pub linear_eq: Vec<LinearConstraint>,
    pub soc_blocks: Vec<SocBlock>,
    pub lower_bounds: Vec<Option<f64>>,
}

impl ConicProgram {
    pub fn new(nvars: usize) -> Self {
        Self {
            nvars,
            objective: vec![0.0; nvars],
            lower_bounds: vec![None; nvars],
            ..Default::default()
        }
    }

    pub fn add_ineq(&mut self, coeffs: SparseRow, rhs: f64) {
        self.linear_ineq.push(LinearConstraint { coeffs, rhs });
    }

    pub fn add_eq(&mut self, coeffs: SparseRow, rhs: f64) {
        self.linear_eq.push(LinearConstraint { coeffs, rhs });
    }

    pub fn add_soc(&mut self, block: SocBlock) {
        self.soc_blocks.push(block);
    }

    pub fn set_lower_bound(&mut self, var: usize, bound: f64) {
        self.lower_bounds[var] = Some(bound);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProgram(m));
        if self.objective.len() != self.nvars || self.lower_bounds.len() != self.nvars {
            return bad("objective / bounds length differs from nvars".into());
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return bad("non-finite objective".into());
        }
        let check_row = |row: &SparseRow| row.iter().all(|&(i, a)| i < self.nvars && a.is_finite());
        for c in self.linear_ineq.iter().chain(&self.linear_eq) {
            if !check_row(&c.coeffs) || !c.rhs.is_finite() {
                return bad("linear row references an unknown variable or has non-finite data".into());
            }
        }
        for b in &self.soc_blocks {
            if b.f.len() != b.g.len() || b.f.is_empty() {
                return bad("cone block needs matching, non-empty F rows and g".into());
            }
            if !b.f.iter().all(check_row) || !check_row(&b.h) || !b.r.is_finite() || b.g.iter().any(|g| !g.is_finite()) {
                return bad("cone block references an unknown variable or has non-finite data".into());
            }
        }
        if self.lower_bounds.iter().flatten().any(|l| !l.is_finite()) {
            return bad("non-finite lower bound".into());
        }
        Ok(())
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Largest absolute violation of any constraint at `v`.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let ineq = self.linear_ineq.iter().map(|c| (dot(&c.coeffs, v) - c.rhs).max(0.0));
        let eq = self.linear_eq.iter().map(|c| (dot(&c.coeffs, v) - c.rhs).abs());
        let soc = self.soc_blocks.iter().map(|b| b.violation(v));
        let lb = self
            .lower_bounds
            .iter()
            .zip(v)
            .filter_map(|(l, x)| l.map(|l| (l - x).max(0.0)));
        ineq.chain(eq).chain(soc).chain(lb).fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, r: &SparseRow| {
            for (i, a) in r {
                write!(s, " {i}:{a:e}").unwrap();
            }
        };
        writeln!(s, "conic-program v1").unwrap();
        writeln!(s, "nvars {}", self.nvars).unwrap();
        write!(s, "objective").unwrap();
        for c in &self.objective {
            write!(s, " {c:e}").unwrap();
        }
        s.push('\n');
        for (tag, rows) in [("ineq", &self.linear_ineq), ("eq", &self.linear_eq)] {
            for c in rows {
                write!(s, "{tag} {:e}", c.rhs).unwrap();
                row(&mut s, &c.coeffs);
                s.push('\n');
            }
        }
        for b in &self.soc_blocks {
            write!(s, "soc {} {:e}", b.f.len(), b.r).unwrap();
            row(&mut s, &b.h);
            s.push('\n');
            for (f, g) in b.f.iter().zip(&b.g) {
                write!(s, "socrow {g:e}").unwrap();
                row(&mut s, f);
                s.push('\n');
            }
        }
        for (i, l) in self.lower_bounds.iter().enumerate() {
            if let Some(l) = l {
                writeln!(s, "lb {i} {l:e}").unwrap();
            }
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, m: &str| Error::Parse(format!("line {}: {m}", line + 1));
        let num = |line: usize, t: &str| t.parse::<f64>().map_err(|_| err(line, &format!("bad number {t:?}")));
        let pair = |line: usize, t: &str| -> Result<(usize, f64)> {
            let (i, a) = t.split_once(':').ok_or_else(|| err(line, "expected index:value"))?;
            Ok((i.parse().map_err(|_| err(line, "bad index"))?, num(line, a)?))
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "conic-program v1" => {}
            _ => return Err(Error::Parse("missing `conic-program v1` header".into())),
        }
        let mut prog: Option<ConicProgram> = None;
        let mut pending_soc: Option<(usize, SocBlock)> = None;
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            let tag = toks.next().unwrap_or("");
            if let Some((rows, block)) = pending_soc.as_mut() {
                if tag != "socrow" {
                    return Err(err(ln, "expected socrow"));
                }
                let g = num(ln, toks.next().ok_or_else(|| err(ln, "missing g"))?)?;
                block.g.push(g);
                block.f.push(toks.map(|t| pair(ln, t)).collect::<Result<_>>()?);
                if block.f.len() == *rows {
                    let (_, b) = pending_soc.take().unwrap();
                    prog.as_mut().unwrap().soc_blocks.push(b);
                }
                continue;
            }
            if tag == "nvars" {
                let n = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(ln, "bad nvars"))?;
                prog = Some(ConicProgram::new(n));
                continue;
            }
            if tag == "end" {
                break;
            }
            let p = prog.as_mut().ok_or_else(|| err(ln, "nvars must come first"))?;
            match tag {
                "objective" => p.objective = toks.map(|t| num(ln, t)).collect::<Result<_>>()?,
                "ineq" | "eq" => {
                    let rhs = num(ln, toks.next().ok_or_else(|| err(ln, "missing rhs"))?)?;
                    let coeffs = toks.map(|t| pair(ln, t)).collect::<Result<_>>()?;
                    let c = LinearConstraint { coeffs, rhs };
                    if tag == "ineq" {
                        p.linear_ineq.push(c)
                    } else {
                        p.linear_eq.push(c)
                    }
                }
                "soc" => {
                    let rows: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(ln, "bad soc rows"))?;
                    let r = num(ln, toks.next().ok_or_else(|| err(ln, "missing r"))?)?;
                    let h = toks.map(|t| pair(ln, t)).collect::<Result<_>>()?;
                    pending_soc = Some((rows, SocBlock { f: vec![], g: vec![], h, r }));
                }
                "lb" => {
                    let i: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(ln, "bad lb index"))?;
                    let v = num(ln, toks.next().ok_or_else(|| err(ln, "missing lb value"))?)?;
                    *p.lower_bounds.get_mut(i).ok_or_else(|| err(ln, "lb index out of range"))? = Some(v);
                }
                other => return Err(err(ln, &format!("unknown tag {other:?}"))),
            }
        }
        let p = prog.ok_or_else(|| Error::Parse("missing nvars".into()))?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal point; present only when optimal.
    pub v: Option<Vec<f64>>,
    /// `cᵀv` at the returned point (NaN unless optimal).
    pub objective_value: f64,
    pub max_primal_residual: f64,
    pub duality_gap: f64,
    pub iterations: u32,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feas: f64,
    pub opt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { feas: DEFAULT_TOL_FEAS, opt: DEFAULT_TOL_OPT }
    }
}

pub fn solve(prog: &ConicProgram, tol: Tolerances) -> Result<SolveResult> {
    prog.validate()?;
    if !(tol.feas > 0.0 && tol.feas <= 1e-2 && tol.opt > 0.0 && tol.opt <= 1e-2) {
        return Err(Error::InvalidInputs(format!("tolerances must lie in (0, 1e-2], got {tol:?}")));
    }
    let n = prog.nvars;

    // Row layout: equalities (zero cone), inequalities then bounds
    // (nonnegative cone), then one second-order cone per block.
    let (mut ri, mut cj, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut row = 0usize;
    let mut push_row = |coeffs: &[(usize, f64)], scale: f64, rhs: f64, row: &mut usize| {
        for &(j, a) in coeffs {
            ri.push(*row);
            cj.push(j);
            vals.push(scale * a);
        }
        b.push(rhs);
        *row += 1;
    };
    for c in &prog.linear_eq {
        push_row(&c.coeffs, 1.0, c.rhs, &mut row);
    }
    let n_eq = row;
    for c in &prog.linear_ineq {
        push_row(&c.coeffs, 1.0, c.rhs, &mut row);
    }
    for (j, l) in prog.lower_bounds.iter().enumerate() {
        if let Some(l) = l {
            push_row(&[(j, 1.0)], -1.0, -l, &mut row);
        }
    }
    let n_nonneg = row - n_eq;
    let mut cones = Vec::new();
    if n_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_eq));
    }
    if n_nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
    }
    for blk in &prog.soc_blocks {
        // s = (hᵀv + r, F v + g) ∈ SOC  ⇔  A v + s = b with A = [-hᵀ; -F], b = [r; g].
        push_row(&blk.h, -1.0, blk.r, &mut row);
        for (f, g) in blk.f.iter().zip(&blk.g) {
            push_row(f, -1.0, *g, &mut row);
        }
        cones.push(SupportedConeT::SecondOrderConeT(1 + blk.f.len()));
    }
    log::debug!(
        "conic translation: {n} vars, {n_eq} eq rows, {n_nonneg} nonneg rows ({} ineq + {} bounds), {} soc blocks, {} rows total",
        prog.linear_ineq.len(),
        n_nonneg - prog.linear_ineq.len(),
        prog.soc_blocks.len(),
        row
    );

    let a = CscMatrix::new_from_triplets(row, n, ri, cj, vals);
    let p = CscMatrix::zeros((n, n));
    let settings = DefaultSettings::<f64> {
        verbose: false,
        tol_feas: (0.1 * tol.feas).max(1e-12),
        tol_gap_abs: (0.1 * tol.opt).max(1e-12),
        tol_gap_rel: (0.1 * tol.opt).max(1e-12),
        max_iter: 200,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &prog.objective, &a, &b, &cones, settings)
        .map_err(|e| Error::InvalidProgram(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;

    let failed = |status| SolveResult {
        status,
        v: None,
        objective_value: f64::NAN,
        max_primal_residual: f64::NAN,
        duality_gap: f64::NAN,
        iterations: sol.iterations,
    };
    let result = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            let v = sol.x.clone();
            let resid = prog.max_violation(&v);
            let gap = (sol.obj_val - sol.obj_val_dual).abs();
            if resid <= tol.feas && v.iter().all(|x| x.is_finite()) {
                SolveResult {
                    status: SolveStatus::Optimal,
                    objective_value: prog.objective_value(&v),
                    v: Some(v),
                    max_primal_residual: resid,
                    duality_gap: gap,
                    iterations: sol.iterations,
                }
            } else {
                log::warn!("solver reported {:?} but residual {resid:e} exceeds {:e}", sol.status, tol.feas);
                SolveResult { max_primal_residual: resid, ..failed(SolveStatus::NumericalFailure) }
            }
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => failed(SolveStatus::Infeasible),
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => failed(SolveStatus::Unbounded),
        _ => failed(SolveStatus::NumericalFailure),
    };
    Ok(result)
}

pub fn solve_default(prog: &ConicProgram) -> Result<SolveResult> {
    solve(prog, Tolerances::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimize_single_bound() {
        let mut p = ConicProgram::new(1);
        p.objective[0] = 1.0;
        p.add_ineq(vec![(0, -1.0)], -1.0);
        let r = solve_default(&p).unwrap();
        assert!(r.is_optimal());
        assert_abs_diff_eq!(r.objective_value, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r.v.unwrap()[0], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn maximize_over_the_unit_disc() {
        let mut p = ConicProgram::new(2);
        p.objective = vec![-1.0, -1.0];
        p.add_soc(SocBlock { f: vec![vec![(0, 1.0)], vec![(1, 1.0)]], g: vec![0.0, 0.0], h: vec![], r: 1.0 });
        let r = solve_default(&p).unwrap();
        assert!(r.is_optimal());
        let v = r.v.unwrap();
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(v[0], h, epsilon = 1e-6);
        assert_abs_diff_eq!(v[1], h, epsilon = 1e-6);
        assert_abs_diff_eq!(-r.objective_value, 2f64.sqrt(), epsilon = 1e-7);
        assert!(r.max_primal_residual <= DEFAULT_TOL_FEAS);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut p = ConicProgram::new(1);
        p.add_ineq(vec![(0, 1.0)], 0.0);
        p.add_ineq(vec![(0, -1.0)], -1.0);
        assert_eq!(solve_default(&p).unwrap().status, SolveStatus::Infeasible);

        let mut p = ConicProgram::new(1);
        p.objective[0] = -1.0;
        p.set_lower_bound(0, 0.0);
        assert_eq!(solve_default(&p).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_and_bounds() {
        // min x + 2y s.t. x + y = 1, x,y >= 0 → (1, 0).
        let mut p = ConicProgram::new(2);
        p.objective = vec![1.0, 2.0];
        p.add_eq(vec![(0, 1.0), (1, 1.0)], 1.0);
        p.set_lower_bound(0, 0.0);
        p.set_lower_bound(1, 0.0);
        let r = solve_default(&p).unwrap();
        assert_abs_diff_eq!(r.objective_value, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn rejects_bad_programs_and_tolerances() {
        let mut p = ConicProgram::new(1);
        p.add_ineq(vec![(3, 1.0)], 0.0);
        assert!(matches!(solve_default(&p), Err(Error::InvalidProgram(_))));
        let p = ConicProgram::new(1);
        assert!(solve(&p, Tolerances { feas: 0.5, opt: 1e-7 }).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut p = ConicProgram::new(3);
        p.objective = vec![1.0, -2.5, 0.125];
        p.add_ineq(vec![(0, 1.0), (2, -3.0)], 4.0);
        p.add_eq(vec![(1, 2.0)], 1.0);
        p.add_soc(SocBlock { f: vec![vec![(0, 1.0)], vec![(1, 0.3), (2, 1.0)]], g: vec![0.1, -0.2], h: vec![(2, 1.0)], r: 0.5 });
        p.set_lower_bound(1, -1.0);
        let back = ConicProgram::from_text(&p.to_text()).unwrap();
        assert_eq!(back, p);
        assert!(ConicProgram::from_text("nonsense").is_err());
    }
}
