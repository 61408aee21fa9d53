//! Exact Wasserstein distances between empirical distributions.
//!
//! * One dimension: the quantile (monotone) coupling is optimal for every
//!   `q >= 1`, so [`wq_1d`] merges the two CDFs and integrates
//!   `|F⁻¹ − G⁻¹|^q` exactly.
//! * Higher dimensions: [`w1_discrete`] solves the transportation problem on
//!   the Euclidean cost matrix with successive shortest paths. Masses are
//!   scaled to integers (`|ν|/g` units per source atom, `|μ|/g` per target
//!   atom, `g = gcd`) so the combinatorial part is exact.

use nalgebra::{DMatrix, DVector};

use crate::empirical::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::par::{self, Exec};

pub const MAX_ATOMS: usize = 5000;
pub const MAX_BRUTE_FORCE_ATOMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundNorm {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
}

#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub cost: f64,
    /// `plan[(i, j)]` is the mass moved from source atom `i` to target atom `j`.
    pub plan: DMatrix<f64>,
}

impl TransportPlan {
    /// Largest deviation of the row / column sums from the uniform marginals.
    pub fn marginal_error(&self) -> f64 {
        let (m, k) = self.plan.shape();
        let rows = (0..m).map(|i| (self.plan.row(i).sum() - 1.0 / m as f64).abs());
        let cols = (0..k).map(|j| (self.plan.column(j).sum() - 1.0 / k as f64).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }
}

fn check_1d(mu: &EmpiricalDistribution, nu: &EmpiricalDistribution) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((mu.scalars()?, nu.scalars()?))
}

/// Exact `d_q` between two 1-D empirical distributions, `q ∈ {1, 2}`.
pub fn wq_1d(mu: &EmpiricalDistribution, nu: &EmpiricalDistribution, q: u32) -> Result<f64> {
    let (a, b) = check_1d(mu, nu)?;
    wq_1d_values(&a, &b, q)
}

/// [`wq_1d`] on raw scalar samples.
pub fn wq_1d_values(a: &[f64], b: &[f64], q: u32) -> Result<f64> {
    if !(q == 1 || q == 2) {
        return Err(Error::UnsupportedOrder(q));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInputs("empty distribution".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (m, k) = (a.len(), b.len());
    let pow = |d: f64| if q == 1 { d.abs() } else { d * d };

    let acc = if m == k {
        a.iter().zip(&b).map(|(x, y)| pow(x - y)).sum::<f64>() / m as f64
    } else {
        // Integer mass units: each a-atom holds k units, each b-atom m units.
        let (mut i, mut j) = (0usize, 0usize);
        let (mut ra, mut rb) = (k as u64, m as u64);
        let mut total = 0.0;
        while i < m && j < k {
            let mass = ra.min(rb);
            total += mass as f64 * pow(a[i] - b[j]);
            ra -= mass;
            rb -= mass;
            if ra == 0 {
                i += 1;
                ra = k as u64;
            }
            if rb == 0 {
                j += 1;
                rb = m as u64;
            }
        }
        total / (m as f64 * k as f64)
    };
    Ok(if q == 1 { acc } else { acc.sqrt() })
}

fn check_pair(mu: &EmpiricalDistribution, nu: &EmpiricalDistribution) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(format!("atom dimensions {} and {}", mu.dim(), nu.dim())));
    }
    Ok(())
}

pub fn cost_matrix(mu: &EmpiricalDistribution, nu: &EmpiricalDistribution, exec: Exec) -> DMatrix<f64> {
    let rows = par::map_slice(exec, mu.atoms(), |a| {
        nu.atoms().iter().map(|b| (a - b).norm()).collect::<Vec<_>>()
    });
    DMatrix::from_fn(mu.len(), nu.len(), |i, j| rows[i][j])
}

/// Exact 1-Wasserstein distance with the Euclidean ground metric.
pub fn w1_discrete(mu: &EmpiricalDistribution, nu: &EmpiricalDistribution, norm: GroundNorm) -> Result<TransportPlan> {
    w1_discrete_with(mu, nu, norm, Exec::default())
}

pub fn w1_discrete_with(
    mu: &EmpiricalDistribution,
    nu: &EmpiricalDistribution,
    norm: GroundNorm,
    exec: Exec,
) -> Result<TransportPlan> {
    if norm != GroundNorm::Euclidean {
        return Err(Error::InvalidInputs(format!("{norm:?} ground norm is not supported; bounds use the 2-norm")));
    }
    check_pair(mu, nu)?;
    for d in [mu, nu] {
        if d.len() > MAX_ATOMS {
            return Err(Error::SizeLimitExceeded { size: d.len(), limit: MAX_ATOMS });
        }
    }
    let cost = cost_matrix(mu, nu, exec);
    let (m, k) = (mu.len(), nu.len());
    let g = gcd(m, k);
    let flow = transport(&cost, &vec![(k / g) as u64; m], &vec![(m / g) as u64; k]);
    let total = (m * (k / g)) as f64;
    let plan = DMatrix::from_fn(m, k, |i, j| flow[i * k + j] as f64 / total);
    let value = plan.component_mul(&cost).sum();
    Ok(TransportPlan { cost: value, plan })
}

/// Convenience: the `d₁` value only.
pub fn w1(mu: &EmpiricalDistribution, nu: &EmpiricalDistribution) -> Result<f64> {
    Ok(w1_discrete(mu, nu, GroundNorm::Euclidean)?.cost)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer-supply transportation problem by successive shortest paths with
/// node potentials (dense Dijkstra). Returns the row-major flow matrix.
fn transport(cost: &DMatrix<f64>, supply: &[u64], demand: &[u64]) -> Vec<u64> {
    let (m, k) = cost.shape();
    let nodes = m + k;
    let mut flow = vec![0u64; m * k];
    let mut supply = supply.to_vec();
    let mut demand = demand.to_vec();
    let mut pot = vec![0.0f64; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    while supply.iter().any(|&s| s > 0) {
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        for i in 0..m {
            if supply[i] > 0 {
                dist[i] = 0.0;
            }
        }
        let mut target = None;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= m && demand[u - m] > 0 {
                target = Some(u);
                break;
            }
            if u < m {
                for j in 0..k {
                    let v = m + j;
                    if done[v] {
                        continue;
                    }
                    let rc = (cost[(u, j)] + pot[u] - pot[v]).max(0.0);
                    if dist[u] + rc < dist[v] {
                        dist[v] = dist[u] + rc;
                        prev[v] = u;
                    }
                }
            } else {
                let j = u - m;
                for i in 0..m {
                    if done[i] || flow[i * k + j] == 0 {
                        continue;
                    }
                    let rc = (-cost[(i, j)] + pot[u] - pot[i]).max(0.0);
                    if dist[u] + rc < dist[i] {
                        dist[i] = dist[u] + rc;
                        prev[i] = u;
                    }
                }
            }
        }
        let t = target.expect("transportation problem is balanced, a sink is always reachable");
        let dt = dist[t];
        for v in 0..nodes {
            pot[v] += dist[v].min(dt);
        }

        // Walk back to the originating source and find the bottleneck.
        let mut bottleneck = demand[t - m];
        let mut v = t;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= m {
                bottleneck = bottleneck.min(flow[v * k + (u - m)]);
            }
            v = u;
        }
        bottleneck = bottleneck.min(supply[v]);
        supply[v] -= bottleneck;
        demand[t - m] -= bottleneck;
        let mut v = t;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < m {
                flow[u * k + (v - m)] += bottleneck;
            } else {
                flow[v * k + (u - m)] -= bottleneck;
            }
            v = u;
        }
    }
    flow
}

/// Minimum over all matchings of the average matched Euclidean distance.
/// Test oracle for equal-size sets of at most eight atoms.
pub fn brute_force_w1(mu: &EmpiricalDistribution, nu: &EmpiricalDistribution) -> Result<f64> {
    check_pair(mu, nu)?;
    let m = mu.len();
    if nu.len() != m {
        return Err(Error::DimensionMismatch(format!("brute force needs equal sizes, got {m} and {}", nu.len())));
    }
    if m > MAX_BRUTE_FORCE_ATOMS {
        return Err(Error::SizeLimitExceeded { size: m, limit: MAX_BRUTE_FORCE_ATOMS });
    }
    let cost = cost_matrix(mu, nu, Exec::Sequential);
    let mut perm: Vec<usize> = (0..m).collect();
    let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>();
    let mut best = eval(&perm);
    // Heap's algorithm.
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best / m as f64)
}

/// Pushforward of every atom through `x ↦ A x`.
pub fn push_forward(dist: &EmpiricalDistribution, a: &DMatrix<f64>) -> Result<EmpiricalDistribution> {
    if a.ncols() != dist.dim() {
        return Err(Error::DimensionMismatch(format!("map has {} columns, atoms have dimension {}", a.ncols(), dist.dim())));
    }
    dist.map(|v: &DVector<f64>| a * v)
}
