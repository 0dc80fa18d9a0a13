//! Diagonal Gaussian priors: densities, the 1-D CDF used by the analytic
//! metrics, scale-adjusted sampling, and isotropy diagnostics.

use crate::error::{Error, Result};
use crate::rng::Rng;

const LN_2PI: f64 = 1.8378770664093453;

/// A diagonal-covariance Gaussian, one per attribute in prior space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: std.len(),
            });
        }
        if mean.is_empty() {
            return Err(Error::InvalidParameter(
                "gaussian needs dimension >= 1".into(),
            ));
        }
        if let Some(&bad) = std.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::NonPositiveSigma(bad));
        }
        Ok(Self { mean, std })
    }

    /// Standard normal of the given dimension.
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// Standard deviation of the 1-D marginal along a unit direction.
    pub fn projected_std(&self, unit: &[f64]) -> f64 {
        self.std
            .iter()
            .zip(unit)
            .map(|(s, u)| (s * u).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Exact log density of a diagonal Gaussian.
pub fn gaussian_log_pdf(g: &DiagonalGaussian, z: &[f64]) -> Result<f64> {
    if z.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: z.len(),
        });
    }
    let mut acc = 0.0;
    for ((zi, mu), sigma) in z.iter().zip(&g.mean).zip(&g.std) {
        let u = (zi - mu) / sigma;
        acc += -0.5 * LN_2PI - sigma.ln() - 0.5 * u * u;
    }
    Ok(acc)
}

/// Standard-normal CDF via the complementary error function; keeps full
/// precision in both tails.
fn standard_normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / std::f64::consts::SQRT_2)
}

/// CDF of a 1-D Gaussian at `t`.
pub fn gaussian_cdf_1d(mu: f64, sigma: f64, t: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    Ok(standard_normal_cdf((t - mu) / sigma))
}

/// Draw `z = mu + sigma * eps` with `eps ~ N(0, lambda^2 I)`. A scale of zero
/// collapses onto the mean exactly.
pub fn sample(g: &DiagonalGaussian, lambda: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sampling scale must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(g.mean
        .iter()
        .zip(&g.std)
        .map(|(mu, sigma)| mu + sigma * lambda * rng.normal())
        .collect())
}

/// Per-dimension statistics of the sigma vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyStats {
    pub max: f64,
    pub min: f64,
    pub avg: f64,
    /// Population standard deviation: sigma is a fixed parameter vector, not
    /// a sample from anything.
    pub std: f64,
}

pub fn isotropy_stats(g: &DiagonalGaussian) -> IsotropyStats {
    let n = g.std.len() as f64;
    let max = g.std.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = g.std.iter().cloned().fold(f64::INFINITY, f64::min);
    let avg = g.std.iter().sum::<f64>() / n;
    let var = g.std.iter().map(|s| (s - avg).powi(2)).sum::<f64>() / n;
    IsotropyStats {
        max,
        min,
        avg,
        std: var.sqrt(),
    }
}

/// Kolmogorov-Smirnov statistic of samples against a reference CDF. Used by
/// the verification suite to confirm samplers follow their stated law.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max((f - (i as f64 + 1.0) / n).abs());
    }
    d
}

/// Critical value of the one-sample KS statistic at the 1% level for large n.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.62762 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_at_mode() {
        let g = DiagonalGaussian::standard(1);
        let lp = gaussian_log_pdf(&g, &[0.0]).unwrap();
        assert!((lp - (-0.9189385332046727)).abs() < 1e-12);
        // Dimension 2 doubles it.
        let g2 = DiagonalGaussian::standard(2);
        let lp2 = gaussian_log_pdf(&g2, &[0.0, 0.0]).unwrap();
        assert!((lp2 - (-LN_2PI)).abs() < 1e-12);
    }

    #[test]
    fn density_value_from_scalar_formula() {
        let g = DiagonalGaussian::standard(1);
        let lp = gaussian_log_pdf(&g, &[1.5]).unwrap();
        assert!((lp - 0.12952_f64.ln()).abs() < 1e-4);
        // The same value straight from the closed form.
        let direct = (-0.5 * LN_2PI - 0.5 * 1.5 * 1.5).exp();
        assert!((lp.exp() - direct).abs() < 1e-15);
    }

    #[test]
    fn density_symmetric_about_mean() {
        let g = DiagonalGaussian::new(vec![0.7, -1.1], vec![0.9, 2.0]).unwrap();
        let d = [0.3, -0.8];
        let plus: Vec<f64> = g.mean().iter().zip(&d).map(|(m, di)| m + di).collect();
        let minus: Vec<f64> = g.mean().iter().zip(&d).map(|(m, di)| m - di).collect();
        let lp = gaussian_log_pdf(&g, &plus).unwrap();
        let lm = gaussian_log_pdf(&g, &minus).unwrap();
        assert!((lp - lm).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = DiagonalGaussian::standard(2);
        assert!(matches!(
            gaussian_log_pdf(&g, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(DiagonalGaussian::new(vec![0.0], vec![1.0, 1.0]).is_err());
        assert!(DiagonalGaussian::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn cdf_at_mean_is_half() {
        assert_eq!(gaussian_cdf_1d(2.5, 0.7, 2.5).unwrap(), 0.5);
    }

    #[test]
    fn cdf_matches_reference_surpass_values() {
        // Phi(0.75) and Phi(0.95).
        let p = gaussian_cdf_1d(0.0, 1.0, 0.75).unwrap();
        assert!((p - 0.7734).abs() < 5e-4, "{p}");
        let p = gaussian_cdf_1d(-0.2, 1.0, 0.75).unwrap();
        assert!((p - 0.829).abs() < 5e-4, "{p}");
    }

    #[test]
    fn cdf_rejects_bad_sigma() {
        assert!(gaussian_cdf_1d(0.0, 0.0, 1.0).is_err());
        assert!(gaussian_cdf_1d(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn cdf_limits_and_monotonicity() {
        assert!(gaussian_cdf_1d(0.0, 1.0, -12.0).unwrap() < 1e-7);
        assert!(gaussian_cdf_1d(0.0, 1.0, 12.0).unwrap() > 1.0 - 1e-7);
        let mut prev = 0.0;
        let mut t = -8.0;
        while t <= 8.0 {
            let p = gaussian_cdf_1d(0.3, 1.7, t).unwrap();
            assert!(p >= prev, "not monotone at t={t}");
            prev = p;
            t += 0.05;
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // Simpson quadrature oracle, local to the test.
        let g = DiagonalGaussian::new(vec![0.4], vec![1.3]).unwrap();
        let (lo, hi) = (0.4 - 10.0 * 1.3, 0.4 + 10.0 * 1.3);
        let n = 4000; // intervals, even
        let h = (hi - lo) / n as f64;
        let f = |x: f64| gaussian_log_pdf(&g, &[x]).unwrap().exp();
        let mut total = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            total += w * f(lo + i as f64 * h);
        }
        total *= h / 3.0;
        assert!((total - 1.0).abs() < 1e-4, "integral {total}");
    }

    #[test]
    fn sample_with_zero_scale_returns_mean_exactly() {
        let g = DiagonalGaussian::new(vec![1.0, -2.0, 0.5], vec![0.8, 1.2, 2.0]).unwrap();
        let mut rng = Rng::new(0);
        for _ in 0..10 {
            assert_eq!(sample(&g, 0.0, &mut rng).unwrap(), g.mean().to_vec());
        }
    }

    #[test]
    fn sample_moments_at_unit_scale() {
        let g = DiagonalGaussian::standard(1);
        let mut rng = Rng::new(123);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample(&g, 1.0, &mut rng).unwrap()[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let std = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((std - 1.0).abs() < 0.02, "std {std}");
    }

    #[test]
    fn sample_scale_shrinks_std() {
        let g = DiagonalGaussian::new(vec![0.0, 3.0], vec![1.0, 0.5]).unwrap();
        let mut rng = Rng::new(77);
        let n = 100_000;
        let mut sums = [0.0f64; 2];
        let mut sq = [0.0f64; 2];
        for _ in 0..n {
            let z = sample(&g, 0.8, &mut rng).unwrap();
            for d in 0..2 {
                sums[d] += z[d];
                sq[d] += z[d] * z[d];
            }
        }
        for d in 0..2 {
            let mean = sums[d] / n as f64;
            let std = (sq[d] / n as f64 - mean * mean).sqrt();
            let expected = 0.8 * g.std()[d];
            assert!(
                (std - expected).abs() / expected < 0.03,
                "dim {d}: std {std} vs {expected}"
            );
        }
    }

    #[test]
    fn sampler_distribution_passes_ks() {
        let g = DiagonalGaussian::new(vec![0.3], vec![1.1]).unwrap();
        let lambda = 0.7;
        let mut rng = Rng::new(9);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample(&g, lambda, &mut rng).unwrap()[0])
            .collect();
        let d = ks_statistic(&draws, |x| gaussian_cdf_1d(0.3, lambda * 1.1, x).unwrap());
        assert!(d < ks_critical_1pct(n), "KS {d}");
    }

    #[test]
    fn isotropy_uniform_sigma() {
        let g = DiagonalGaussian::new(vec![0.0; 3], vec![0.8; 3]).unwrap();
        let s = isotropy_stats(&g);
        assert_eq!(s.max, 0.8);
        assert_eq!(s.min, 0.8);
        assert!((s.avg - 0.8).abs() < 1e-15);
        assert!(s.std.abs() < 1e-15);
    }

    #[test]
    fn isotropy_mixed_sigma_stats() {
        let g = DiagonalGaussian::new(vec![0.0; 3], vec![0.756, 0.800, 0.886]).unwrap();
        let s = isotropy_stats(&g);
        assert_eq!(s.max, 0.886);
        assert_eq!(s.min, 0.756);
        assert!((s.avg - 0.814).abs() < 1e-12);
        assert!(s.min <= s.avg && s.avg <= s.max);
        assert!(s.std >= 0.0);
    }
}
