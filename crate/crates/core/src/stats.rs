//! Small descriptive statistics used by the experiment drivers.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Linear-interpolation quantile (type 7) of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn five_number(values: &[f64]) -> Result<FiveNumber> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInputs("quartiles need non-empty, NaN-free data".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(FiveNumber {
        min: s[0],
        q1: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q3: quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean (sample standard deviation over √n).
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, level: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            out[t] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (average ranks for ties). NaN if either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Kendall's τ_b. NaN if either side is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let s = (conc - disc) as f64;
    s / (((conc + disc + tx) as f64) * ((conc + disc + ty) as f64)).sqrt()
}

/// One-sided exact permutation p-value for `τ_b ≤ observed` (a decreasing
/// trend), enumerating every permutation of `y`. Limited to `n ≤ 10`.
pub fn kendall_decreasing_p_value(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = y.len();
    if n > 10 {
        return Err(Error::SizeLimitExceeded { size: n, limit: 10 });
    }
    let observed = kendall_tau_b(x, y);
    if observed.is_nan() {
        return Ok(1.0);
    }
    let mut perm = y.to_vec();
    let (mut hits, mut total) = (0u64, 0u64);
    let mut c = vec![0usize; n];
    let mut visit = |p: &[f64]| {
        total += 1;
        if kendall_tau_b(x, p) <= observed + 1e-12 {
            hits += 1;
        }
    };
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quartiles() {
        let f = five_number(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((f.min, f.q1, f.median, f.q3, f.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let f = five_number(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(f.q1, 1.75);
        assert_abs_diff_eq!(f.median, 2.5);
        assert!(five_number(&[]).is_err());
    }

    #[test]
    fn wilson_known_value() {
        let (lo, hi) = wilson_interval(5, 20, 0.95);
        assert_abs_diff_eq!(lo, 0.1119, epsilon = 1e-4);
        assert_abs_diff_eq!(hi, 0.4687, epsilon = 1e-4);
        let (lo, _) = wilson_interval(0, 50, 0.95);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn rank_correlations() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_abs_diff_eq!(spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]), -1.0);
        assert_abs_diff_eq!(kendall_tau_b(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]), -1.0);
        assert_abs_diff_eq!(kendall_tau_b(&x, &[1.0, 3.0, 2.0, 4.0, 5.0]), 0.8);
        // Ties: pairs (1,2) tie on y.
        let t = kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]);
        assert_abs_diff_eq!(t, 2.0 / (3.0f64 * 2.0).sqrt(), epsilon = 1e-12);
        assert!(kendall_tau_b(&x, &[1.0; 5]).is_nan());
    }

    #[test]
    fn permutation_p_value() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let p = kendall_decreasing_p_value(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p, 1.0 / 120.0, epsilon = 1e-12);
        let p = kendall_decreasing_p_value(&x, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_abs_diff_eq!(p, 1.0);
        assert!(kendall_decreasing_p_value(&[0.0; 11], &[0.0; 11]).is_err());
    }
}
