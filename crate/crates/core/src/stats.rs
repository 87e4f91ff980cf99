//! Estimators and tests used by the verification experiments.

use crate::error::{Result, SimError};

fn need(n: usize, needed: usize) -> Result<()> {
    if n < needed {
        Err(SimError::InsufficientSamples { needed, got: n })
    } else {
        Ok(())
    }
}

/// Point estimate with standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Whether `target` lies within `k` standard errors.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }
}

pub fn mean(x: &[f64]) -> Result<Estimate> {
    need(x.len(), 2)?;
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    Ok(Estimate {
        value: m,
        se: (v / x.len() as f64).sqrt(),
    })
}

/// Unbiased variance with the delta-method standard error
/// `sqrt((m4 - s^4 (M-3)/(M-1)) / M)`.
pub fn variance(x: &[f64]) -> Result<Estimate> {
    need(x.len(), 2)?;
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let s2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let var_s2 = ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    Ok(Estimate {
        value: s2,
        se: var_s2.sqrt(),
    })
}

/// Unbiased covariance; the standard error comes from the sample variance of
/// the centred products.
pub fn covariance(x: &[f64], y: &[f64]) -> Result<Estimate> {
    assert_eq!(x.len(), y.len());
    need(x.len(), 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let c = prods.iter().sum::<f64>() / (n - 1.0);
    let pm = prods.iter().sum::<f64>() / n;
    let pv = prods.iter().map(|p| (p - pm).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Estimate {
        value: c,
        se: (pv / n).sqrt(),
    })
}

/// Median (averaging the middle pair for even length).
pub fn median(x: &[f64]) -> Result<f64> {
    need(x.len(), 1)?;
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

/// Kolmogorov survival function `Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, en: f64) -> f64 {
    let sq = en.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    need(x.len(), 2)?;
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &xi) in v.iter().enumerate() {
        let f = cdf(xi);
        d = d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n);
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    })
}

/// Two-sample Kolmogorov-Smirnov test. Ties are stepped through together, so
/// the test stays valid (conservative) for discrete data.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    need(x.len(), 2)?;
    need(y.len(), 2)?;
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, n1 * n2 / (n1 + n2)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Ordinary least squares `y = intercept + slope x`. Three points minimum so
/// the residual variance has a degree of freedom.
pub fn slope_fit(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    assert_eq!(x.len(), y.len());
    need(x.len(), 3)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(SimError::Numeric("slope fit with constant abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        slope_se: (rss / (n - 2.0) / sxx).sqrt(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    slope_fit(&lx, &ly)
}

/// Statistic selector for [`summarize_stats`].
pub enum StatKind<'a> {
    Mean,
    Variance,
    Covariance(&'a [f64]),
    KsOneSample(&'a dyn Fn(f64) -> f64),
    KsTwoSample(&'a [f64]),
    /// Log-log slope with the samples as ordinates against these abscissae.
    SlopeFit(&'a [f64]),
}

/// Uniform summary: estimate plus standard error, or statistic plus p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Summary {
    Estimate(Estimate),
    Ks(KsResult),
    Slope(SlopeFit),
}

pub fn summarize_stats(samples: &[f64], kind: StatKind<'_>) -> Result<Summary> {
    Ok(match kind {
        StatKind::Mean => Summary::Estimate(mean(samples)?),
        StatKind::Variance => Summary::Estimate(variance(samples)?),
        StatKind::Covariance(other) => Summary::Estimate(covariance(samples, other)?),
        StatKind::KsOneSample(cdf) => Summary::Ks(ks_one_sample(samples, cdf)?),
        StatKind::KsTwoSample(other) => Summary::Ks(ks_two_sample(samples, other)?),
        StatKind::SlopeFit(x) => Summary::Slope(loglog_slope(x, samples)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_sample_has_zero_variance() {
        let v = variance(&[3.0; 10]).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.se, 0.0);
    }

    #[test]
    fn insufficient_samples() {
        assert!(matches!(
            mean(&[1.0]),
            Err(SimError::InsufficientSamples { needed: 2, got: 1 })
        ));
        assert!(slope_fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_power_law_slope() {
        let n = [8.0, 16.0, 32.0, 64.0];
        let y: Vec<f64> = n.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        let f = loglog_slope(&n, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.0) and Q(1.36) from standard tables
        assert!((kolmogorov_q(1.0) - 0.269_999_671_4).abs() < 1e-8);
        assert!((kolmogorov_q(1.358_1) - 0.05).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn two_sample_identical_and_disjoint() {
        let x: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let r = ks_two_sample(&x, &x).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let y: Vec<f64> = (100..150).map(|k| k as f64).collect();
        let r = ks_two_sample(&x, &y).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn one_sample_uniform_grid() {
        let x: Vec<f64> = (0..100).map(|k| (k as f64 + 0.5) / 100.0).collect();
        let r = ks_one_sample(&x, |v| v.clamp(0.0, 1.0)).unwrap();
        assert!((r.statistic - 0.005).abs() < 1e-12);
        assert!(r.p_value > 0.99);
    }

    proptest! {
        #[test]
        fn variance_shift_invariant(xs in prop::collection::vec(-100.0f64..100.0, 2..40), c in -1e3f64..1e3) {
            let v1 = variance(&xs).unwrap().value;
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let v2 = variance(&shifted).unwrap().value;
            prop_assert!((v1 - v2).abs() <= 1e-8 * (1.0 + v1.abs()));
            prop_assert!(v1 >= 0.0);
        }

        #[test]
        fn ks_p_in_unit_interval(xs in prop::collection::vec(0.0f64..1.0, 2..60)) {
            let r = ks_one_sample(&xs, |v| v).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            prop_assert!((0.0..=1.0).contains(&r.statistic));
        }
    }
}
