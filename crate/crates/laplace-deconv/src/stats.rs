//! Small statistical helpers shared by tests and the experiment harness:
//! least-squares slope fits, empirical quantiles, a two-sample
//! Kolmogorov-Smirnov check, Spearman rank correlation, Wilson intervals,
//! and log-binomial coefficients.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ordinary least squares `y = intercept + slope x` with a normal-theory
/// 95% confidence interval on the slope.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Least-squares line fit. Zero variance in `x` is an error (no line
/// exists); zero variance in `y` yields slope 0 with `r2 = 0`.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<FitSummary> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("need at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid("regressor has zero variance"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| {
            let e = v - (intercept + slope * u);
            e * e
        })
        .sum();
    let r2 = if syy <= 0.0 { 0.0 } else { 1.0 - ss_res / syy };
    let dof = (x.len().saturating_sub(2)).max(1) as f64;
    let se = (ss_res / dof / sxx).sqrt();
    Ok(FitSummary {
        slope,
        intercept,
        r2,
        ci_lo: slope - 1.96 * se,
        ci_hi: slope + 1.96 * se,
    })
}

/// Nearest-rank empirical quantile: the `ceil(p n)`-th smallest value.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("quantile of empty sample"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("quantile level {p} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_n - G_m|`.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("KS needs non-empty samples"));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|u, v| u.partial_cmp(v).expect("finite"));
    b.sort_by(|u, v| u.partial_cmp(v).expect("finite"));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = a[i].min(b[j]);
        while i < n && a[i] <= t {
            i += 1;
        }
        while j < m && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    Ok(d.max(1.0 - (i.min(n) as f64 / n as f64)).max(1.0 - j.min(m) as f64 / m as f64))
}

/// Two-sample KS test at the 5% level using the large-sample critical value
/// `1.358 sqrt((n+m)/(n m))`. Returns `(statistic, critical, pass)`.
pub fn ks_test_5pct(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, bool)> {
    let d = ks_statistic(xs, ys)?;
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let crit = 1.358 * ((n + m) / (n * m)).sqrt();
    Ok((d, crit, d <= crit))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite"));
    let mut out = vec![0.0; values.len()];
    let mut pos = 0;
    while pos < idx.len() {
        let mut end = pos;
        while end + 1 < idx.len() && values[idx[end + 1]] == values[idx[pos]] {
            end += 1;
        }
        // Average rank over the tie run (1-based ranks).
        let avg = (pos + end) as f64 / 2.0 + 1.0;
        for &k in &idx[pos..=end] {
            out[k] = avg;
        }
        pos = end + 1;
    }
    out
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("need at least two paired points"));
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (u, v) in rx.iter().zip(&ry) {
        sxy += (u - mx) * (v - my);
        sxx += (u - mx) * (u - mx);
        syy += (v - my) * (v - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::invalid("constant ranks; correlation undefined"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::invalid("no trials"));
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The boundary cases are exactly 0 and 1; don't let rounding leak past.
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (center + half).min(1.0) };
    Ok((lo, hi))
}

/// `ln C(n, k)` computed as a sum of logs (exact enough for net sizes).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
        .sum()
}

/// `C(n, k)` when it fits in u128.
pub fn choose_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul((n - k + i) as u128)?;
        acc /= i as u128;
    }
    Some(acc)
}
