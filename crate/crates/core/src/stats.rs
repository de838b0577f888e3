//! Small statistical helpers shared by the estimator and the experiment harness.

use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal quantile Φ⁻¹(q).
pub fn normal_quantile(q: f64) -> f64 {
    Normal::standard().inverse_cdf(q)
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Two-sided critical value z_{α/2}, the (1 − α/2) standard normal quantile.
pub fn z_critical(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n − 1 denominator; 0 for a single value.
pub fn variance(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let mu = mean(xs);
            xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64
        }
    }
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and a continuous CDF. Tied samples are handled as one jump.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// KS distance to the standard normal.
pub fn ks_standard_normal(samples: &[f64]) -> f64 {
    ks_distance(samples, normal_cdf)
}

/// KS distance to a normal with the samples' own mean and standard deviation.
pub fn ks_fitted_normal(samples: &[f64]) -> f64 {
    let mu = mean(samples);
    let sd = std_dev(samples);
    if !(sd > 0.0) {
        return f64::NAN;
    }
    ks_distance(samples, |x| normal_cdf((x - mu) / sd))
}

/// Wilson score interval for a binomial proportion at level 1 − α.
pub fn wilson_interval(successes: usize, trials: usize, alpha: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z = z_critical(alpha);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// One histogram bin `[lo, hi)`; the last bin is closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

const MAX_BINS: usize = 10_000;

/// Histogram with Freedman–Diaconis bin width 2·IQR·n^(−1/3). Non-finite
/// values are ignored. Degenerate spreads collapse to a single bin.
pub fn freedman_diaconis(samples: &[f64]) -> Vec<Bin> {
    let mut xs: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    if xs.is_empty() {
        return Vec::new();
    }
    xs.sort_by(f64::total_cmp);
    let (min, max) = (xs[0], xs[xs.len() - 1]);
    let iqr = quantile_sorted(&xs, 0.75) - quantile_sorted(&xs, 0.25);
    let width = 2.0 * iqr / (xs.len() as f64).cbrt();
    if !(width > 0.0) || max <= min {
        return vec![Bin {
            lo: min,
            hi: max,
            count: xs.len(),
        }];
    }
    let nbins = (((max - min) / width).ceil() as usize).clamp(1, MAX_BINS);
    let width = (max - min) / nbins as f64;
    let mut bins: Vec<Bin> = (0..nbins)
        .map(|i| Bin {
            lo: min + i as f64 * width,
            hi: if i + 1 == nbins {
                max
            } else {
                min + (i + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for x in xs {
        let idx = (((x - min) / width) as usize).min(nbins - 1);
        bins[idx].count += 1;
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((z_critical(0.05) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((normal_quantile(0.995) - 2.575_829_303_548_901).abs() < 1e-9);
        assert!((normal_quantile(0.841_344_746_068_542_9) - 1.0).abs() < 1e-9);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-8);
        assert_eq!(normal_quantile(0.5), 0.0);
    }

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(variance(&[7.0]), 0.0);
    }

    #[test]
    fn ks_on_perfect_grid() {
        // midpoints of n equal-probability cells: D = 1/(2n)
        let n = 1000;
        let xs: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64))
            .collect();
        assert!((ks_standard_normal(&xs) - 0.5 / n as f64).abs() < 1e-9);
    }

    #[test]
    fn ks_groups_ties() {
        let d = ks_distance(&[0.0, 0.0], |x| if x < 0.0 { 0.0 } else { 0.5 });
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wilson_contains_phat() {
        let (lo, hi) = wilson_interval(950, 1000, 0.05);
        assert!(lo < 0.95 && 0.95 < hi);
        assert!((lo - 0.935).abs() < 0.002 && (hi - 0.962).abs() < 0.002);
        assert_eq!(wilson_interval(10, 10, 0.05).1, 1.0);
    }

    #[test]
    fn histogram_counts_everything() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let bins = freedman_diaconis(&xs);
        assert!(bins.len() > 1);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 1000);
        assert_eq!(freedman_diaconis(&[3.0; 5]).len(), 1);
        assert!(freedman_diaconis(&[]).is_empty());
    }
}
