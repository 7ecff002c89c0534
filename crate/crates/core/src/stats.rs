//! Summary statistics and scaling fits for hop-count samples.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub stddev: f64,
    /// Standard error of the mean.
    pub stderr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = if count > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        let stddev = var.sqrt();
        Self { count, mean, median: median(values), stddev, stderr: stddev / (count as f64).sqrt() }
    }

    /// Normal-approximation 95% confidence interval for the mean.
    pub fn interval95(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Summary of the union of the samples behind `parts`. Mean, deviation and
/// standard error are exact; the median is the median of the part medians.
pub fn pool(parts: &[Summary]) -> Summary {
    let count: usize = parts.iter().map(|p| p.count).sum();
    if count == 0 {
        return Summary::default();
    }
    let mean = parts.iter().map(|p| p.mean * p.count as f64).sum::<f64>() / count as f64;
    let ss: f64 = parts
        .iter()
        .filter(|p| p.count > 0)
        .map(|p| p.stddev.powi(2) * (p.count - 1) as f64 + p.count as f64 * (p.mean - mean).powi(2))
        .sum();
    let stddev = if count > 1 { (ss / (count - 1) as f64).sqrt() } else { 0.0 };
    let medians: Vec<f64> = parts.iter().filter(|p| p.count > 0).map(|p| p.median).collect();
    Summary { count, mean, median: median(&medians), stddev, stderr: stddev / (count as f64).sqrt() }
}

/// Whether two 95% intervals are disjoint with `a` entirely below `b`.
pub fn clearly_below(a: &Summary, b: &Summary) -> bool {
    a.interval95().1 < b.interval95().0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    /// `c` in `hops ≈ c (ln n)²`, least squares through the origin.
    pub log2_coefficient: f64,
    /// Residual sum of squares of that fit, in hops².
    pub log2_residual: f64,
    /// Slope of `ln hops` against `ln n`.
    pub loglog_slope: f64,
    pub loglog_intercept: f64,
    /// Residual sum of squares of the log-log line, in (ln hops)².
    pub loglog_residual: f64,
    /// Residual sum of squares, in hops², of the least-squares power law
    /// `a n^b`.
    pub power_residual: f64,
    pub power_coefficient: f64,
    pub power_exponent: f64,
}

/// Fits `(n, hops)` points; needs at least three distinct sizes.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let mut sizes: Vec<f64> = points.iter().map(|p| p.0).collect();
    sizes.sort_unstable_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::InvalidParameter(format!("scaling fit needs at least 3 sizes, got {}", sizes.len())));
    }
    if points.iter().any(|&(n, h)| !(n > 1.0 && h > 0.0)) {
        return Err(Error::InvalidParameter("scaling fit needs n > 1 and positive hop counts".into()));
    }

    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(n, h) in points {
        let l = n.ln().powi(2);
        sxy += l * h;
        sxx += l * l;
    }
    let c = sxy / sxx;
    let log2_residual = points.iter().map(|&(n, h)| (h - c * n.ln().powi(2)).powi(2)).sum();

    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, h)| (n.ln(), h.ln())).collect();
    let (slope, intercept) = ols(&logs);
    let loglog_residual = logs.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();

    let (a, b) = power_fit(points, intercept.exp(), slope);
    let power_residual = power_rss(points, a, b);

    Ok(ScalingFit {
        log2_coefficient: c,
        log2_residual,
        loglog_slope: slope,
        loglog_intercept: intercept,
        loglog_residual,
        power_residual,
        power_coefficient: a,
        power_exponent: b,
    })
}

fn ols(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn power_rss(points: &[(f64, f64)], a: f64, b: f64) -> f64 {
    points.iter().map(|&(n, h)| (h - a * n.powf(b)).powi(2)).sum()
}

/// Least squares for `a n^b` in linear space. For fixed `b` the optimal `a`
/// is closed-form, so only `b` is searched (golden section around the
/// log-log estimate, widened until bracketed).
fn power_fit(points: &[(f64, f64)], a0: f64, b0: f64) -> (f64, f64) {
    let best_a = |b: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for &(n, h) in points {
            let f = n.powf(b);
            num += h * f;
            den += f * f;
        }
        num / den
    };
    let rss = |b: f64| power_rss(points, best_a(b), b);

    let (mut lo, mut hi) = (b0 - 1.0, b0 + 1.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if rss(m1) <= rss(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let b = (lo + hi) / 2.0;
    let a = best_a(b);
    if power_rss(points, a, b) <= power_rss(points, a0, b0) {
        (a, b)
    } else {
        (a0, b0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.stddev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.stderr - s.stddev / 2.0).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).stddev, 0.0);
    }

    #[test]
    fn recovers_log_squared_coefficient() {
        let pts: Vec<(f64, f64)> = [1e3, 4e3, 1.6e4, 6.4e4].iter().map(|&n: &f64| (n, 2.5 * n.ln().powi(2))).collect();
        let f = fit_scaling(&pts).unwrap();
        assert!((f.log2_coefficient - 2.5).abs() < 1e-12);
        assert!(f.log2_residual < 1e-18);
    }

    #[test]
    fn recovers_power_slope() {
        let pts: Vec<(f64, f64)> = [1e3, 4e3, 1.6e4, 6.4e4].iter().map(|&n: &f64| (n, n.powf(1.0 / 3.0))).collect();
        let f = fit_scaling(&pts).unwrap();
        assert!((f.loglog_slope - 1.0 / 3.0).abs() < 1e-9);
        assert!((f.power_exponent - 1.0 / 3.0).abs() < 1e-6);
        assert!(f.power_residual < 1e-12);
    }

    #[test]
    fn needs_three_sizes() {
        assert!(fit_scaling(&[(10.0, 1.0), (20.0, 2.0), (20.0, 2.5)]).is_err());
    }

    #[test]
    fn pooling_matches_direct_summary() {
        let a = [1.0, 4.0, 2.0];
        let b = [7.0, 3.0, 5.0, 5.0, 9.0];
        let all: Vec<f64> = a.iter().chain(&b).copied().collect();
        let direct = Summary::of(&all);
        let pooled = pool(&[Summary::of(&a), Summary::of(&b)]);
        assert_eq!(pooled.count, 8);
        assert!((pooled.mean - direct.mean).abs() < 1e-12);
        assert!((pooled.stddev - direct.stddev).abs() < 1e-12);
        assert!((pooled.stderr - direct.stderr).abs() < 1e-12);
    }

    #[test]
    fn interval_separation() {
        let a = Summary::of(&[1.0, 1.1, 0.9, 1.0]);
        let b = Summary::of(&[2.0, 2.1, 1.9, 2.0]);
        assert!(clearly_below(&a, &b));
        assert!(!clearly_below(&b, &a));
    }
}
