//! Analytic anti-interference metrics for a pair of mutually exclusive
//! attributes, plus the sweep tables built on them.
//!
//! Given a target attribute and an interferer, both 1-D Gaussians in prior
//! space, the surpass probability is the mass the sampler places on the
//! target's side of their intersection center, and the difference expectation
//! integrates the sampler-weighted density gap up to that center. Both are
//! exact up to a CDF evaluation and a 1-D quadrature.

use crate::control::{controlled_sample, intersection_center_1d, ControlSpec};
use crate::error::{Error, Result};
use crate::flow::FlowModel;
use crate::priors::gaussian_cdf_1d;
use crate::rng::Rng;

/// A 1-D Gaussian given by mean and standard deviation. The sampler may be
/// degenerate (sigma = 0): a point mass at its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1d {
    pub mu: f64,
    pub sigma: f64,
}

impl Gaussian1d {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    fn pdf(&self, z: f64) -> f64 {
        let u = (z - self.mu) / self.sigma;
        (-0.5 * u * u).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// The measurement setup: target and interferer densities plus the
/// distribution actually sampled from (possibly shifted or rescaled).
#[derive(Debug, Clone, Copy)]
pub struct ExclusivePair {
    pub target: Gaussian1d,
    pub interferer: Gaussian1d,
    pub sampler: Gaussian1d,
}

impl ExclusivePair {
    pub fn new(target: Gaussian1d, interferer: Gaussian1d, sampler: Gaussian1d) -> Result<Self> {
        if !(target.sigma > 0.0) {
            return Err(Error::NonPositiveSigma(target.sigma));
        }
        if !(interferer.sigma > 0.0) {
            return Err(Error::NonPositiveSigma(interferer.sigma));
        }
        if !(sampler.sigma >= 0.0) {
            return Err(Error::NonPositiveSigma(sampler.sigma));
        }
        if target == interferer {
            return Err(Error::IdenticalDistributions);
        }
        Ok(Self {
            target,
            interferer,
            sampler,
        })
    }

    /// Sampling the target itself at unit scale.
    pub fn baseline(target: Gaussian1d, interferer: Gaussian1d) -> Result<Self> {
        Self::new(target, interferer, target)
    }

    fn intersection(&self) -> Result<f64> {
        Ok(intersection_center_1d(
            (self.target.mu, self.target.sigma),
            (self.interferer.mu, self.interferer.sigma),
        )?
        .z_hat)
    }
}

/// Probability that a sampled point lands on the target's side of the
/// intersection center: the sampler's CDF at that center. A degenerate
/// sampler reduces to the indicator of its mean lying below the center.
pub fn surpass_probability(pair: &ExclusivePair) -> Result<f64> {
    let z_star = pair.intersection()?;
    if pair.sampler.sigma == 0.0 {
        return Ok(if pair.sampler.mu < z_star { 1.0 } else { 0.0 });
    }
    gaussian_cdf_1d(pair.sampler.mu, pair.sampler.sigma, z_star)
}

/// Quadrature controls for the difference expectation.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Simpson node count; odd, at least 3.
    pub nodes: usize,
    /// How many standard deviations below the lowest mean to truncate.
    pub tail_sigmas: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes: 20_001,
            tail_sigmas: 10.0,
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, nodes: usize) -> f64 {
    let intervals = nodes - 1;
    let h = (hi - lo) / intervals as f64;
    let mut total = f(lo) + f(hi);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * f(lo + i as f64 * h);
    }
    total * h / 3.0
}

/// Sampler-weighted expectation of the target-minus-interferer density gap up
/// to the intersection center. A degenerate sampler evaluates the gap at its
/// mean directly.
pub fn difference_expectation(pair: &ExclusivePair, quad: &QuadratureConfig) -> Result<f64> {
    if quad.nodes < 3 || quad.nodes.is_multiple_of(2) {
        return Err(Error::QuadratureResolution(quad.nodes));
    }
    if !(quad.tail_sigmas > 0.0) {
        return Err(Error::InvalidParameter(
            "tail sigmas must be positive".into(),
        ));
    }
    let z_star = pair.intersection()?;
    if pair.sampler.sigma == 0.0 {
        return Ok(pair.target.pdf(pair.sampler.mu) - pair.interferer.pdf(pair.sampler.mu));
    }
    let lo = [pair.sampler, pair.target, pair.interferer]
        .iter()
        .map(|g| g.mu - quad.tail_sigmas * g.sigma)
        .fold(f64::INFINITY, f64::min)
        .min(z_star - 1.0);
    let integrand = |z: f64| pair.sampler.pdf(z) * (pair.target.pdf(z) - pair.interferer.pdf(z));
    Ok(simpson(integrand, lo, z_star, quad.nodes))
}

/// One row of a sweep table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub surpass_prob: f64,
    pub diff_expectation: f64,
}

/// Sweep the sampling scale: for each lambda the sampler is the target with
/// its sigma multiplied by lambda.
pub fn lambda_sweep(base: &ExclusivePair, lambdas: &[f64]) -> Result<Vec<SweepRow>> {
    let quad = QuadratureConfig::default();
    lambdas
        .iter()
        .map(|&lambda| {
            if !(lambda >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lambda must be >= 0, got {lambda}"
                )));
            }
            let pair = ExclusivePair {
                sampler: Gaussian1d::new(base.target.mu, lambda * base.target.sigma),
                ..*base
            };
            Ok(SweepRow {
                param: lambda,
                surpass_prob: surpass_probability(&pair)?,
                diff_expectation: difference_expectation(&pair, &quad)?,
            })
        })
        .collect()
}

/// Render sweep rows as delimiter-separated text, three decimals per value.
pub fn format_sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,surpass_prob,diff_expectation\n");
    for row in rows {
        out.push_str(&format!(
            "{:.3},{:.3},{:.3}\n",
            row.param, row.surpass_prob, row.diff_expectation
        ));
    }
    out
}

/// One row of the interpolation-strength sweep on a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRow {
    pub alpha: f64,
    /// Mean of log p(x|target) - log p(x|other) over the controlled samples.
    pub margin: f64,
}

/// For each weight alpha, draw controlled samples with weights
/// (alpha, 1 - alpha) and report the mean log-density margin between the two
/// attributes. No monotonicity in alpha is promised.
pub fn alpha_sweep(
    model: &FlowModel,
    attr_target: &str,
    attr_other: &str,
    alphas: &[f64],
    lambda: f64,
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<AlphaRow>> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let spec = ControlSpec::new(
                vec![
                    (attr_target.to_string(), alpha),
                    (attr_other.to_string(), 1.0 - alpha),
                ],
                lambda,
                None,
            )?;
            let samples = controlled_sample(model, &spec, count, rng)?;
            let mut margin = 0.0;
            for x in &samples {
                margin += model.log_prob(attr_target, x)? - model.log_prob(attr_other, x)?;
            }
            Ok(AlphaRow {
                alpha,
                margin: margin / count as f64,
            })
        })
        .collect()
}

pub fn format_alpha_table(rows: &[AlphaRow]) -> String {
    let mut out = String::from("alpha,margin\n");
    for row in rows {
        out.push_str(&format!("{:.3},{:.3}\n", row.alpha, row.margin));
    }
    out
}

/// The default scale grid: 1.0 down to 0.0 in steps of 0.1.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).rev().map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{FlowModel, FlowShape};
    use crate::priors::DiagonalGaussian;

    fn reference_pair() -> ExclusivePair {
        ExclusivePair::baseline(Gaussian1d::new(0.0, 1.0), Gaussian1d::new(1.5, 1.0)).unwrap()
    }

    #[test]
    fn surpass_probability_baseline() {
        let p = surpass_probability(&reference_pair()).unwrap();
        assert!((p - 0.773).abs() < 1e-3, "{p}");
    }

    #[test]
    fn surpass_probability_shifted_sampler() {
        let pair = ExclusivePair {
            sampler: Gaussian1d::new(-0.2, 1.0),
            ..reference_pair()
        };
        let p = surpass_probability(&pair).unwrap();
        assert!((p - 0.829).abs() < 1e-3, "{p}");
    }

    #[test]
    fn surpass_probability_scaled_sampler() {
        let pair = ExclusivePair {
            sampler: Gaussian1d::new(0.0, 0.8),
            ..reference_pair()
        };
        let p = surpass_probability(&pair).unwrap();
        assert!((p - 0.826).abs() < 1e-3, "{p}");
    }

    #[test]
    fn difference_expectation_baseline() {
        let e = difference_expectation(&reference_pair(), &QuadratureConfig::default()).unwrap();
        assert!((e - 0.161).abs() < 1e-3, "{e}");
    }

    #[test]
    fn difference_expectation_scaled() {
        let pair = ExclusivePair {
            sampler: Gaussian1d::new(0.0, 0.8),
            ..reference_pair()
        };
        let e = difference_expectation(&pair, &QuadratureConfig::default()).unwrap();
        assert!((e - 0.181).abs() < 1e-3, "{e}");
    }

    #[test]
    fn difference_expectation_point_sampler() {
        let pair = ExclusivePair {
            sampler: Gaussian1d::new(0.0, 0.0),
            ..reference_pair()
        };
        let e = difference_expectation(&pair, &QuadratureConfig::default()).unwrap();
        // Closed form: N(0;0,1) - N(0;1.5,1).
        let expected = 0.3989422804014327 * (1.0 - (-1.125f64).exp());
        assert!((e - expected).abs() < 1e-12, "{e}");
        assert!((e - 0.269).abs() < 1e-3);
    }

    #[test]
    fn lambda_sweep_matches_reference_columns() {
        let rows = lambda_sweep(&reference_pair(), &default_lambda_grid()).unwrap();
        let expected = [
            (1.0, 0.773, 0.161),
            (0.9, 0.798, 0.171),
            (0.8, 0.826, 0.181),
            (0.7, 0.858, 0.192),
            (0.6, 0.894, 0.205),
            (0.5, 0.933, 0.218),
            (0.4, 0.970, 0.232),
            (0.3, 0.994, 0.246),
            (0.2, 0.999, 0.259),
            (0.1, 1.000, 0.267),
            (0.0, 1.000, 0.269),
        ];
        assert_eq!(rows.len(), expected.len());
        for (row, (lambda, p, e)) in rows.iter().zip(expected) {
            assert_eq!(row.param, lambda);
            assert!(
                (row.surpass_prob - p).abs() <= 0.002,
                "lambda {lambda}: P {} vs {p}",
                row.surpass_prob
            );
            assert!(
                (row.diff_expectation - e).abs() <= 0.002,
                "lambda {lambda}: E {} vs {e}",
                row.diff_expectation
            );
        }
    }

    #[test]
    fn surpass_probability_strictly_increases_as_lambda_decreases() {
        let rows = lambda_sweep(&reference_pair(), &default_lambda_grid()).unwrap();
        for pair in rows.windows(2) {
            assert!(
                pair[1].surpass_prob > pair[0].surpass_prob,
                "not strictly ordered at lambda {}",
                pair[1].param
            );
        }
    }

    #[test]
    fn metric_bounds_over_random_pairs() {
        let mut rng = Rng::new(3);
        let quad = QuadratureConfig::default();
        for _ in 0..200 {
            let target = Gaussian1d::new(rng.uniform_range(-2.0, 2.0), rng.uniform_range(0.2, 2.0));
            let interferer =
                Gaussian1d::new(rng.uniform_range(-2.0, 2.0), rng.uniform_range(0.2, 2.0));
            if target == interferer {
                continue;
            }
            let sampler =
                Gaussian1d::new(rng.uniform_range(-2.0, 2.0), rng.uniform_range(0.0, 1.5));
            let pair = ExclusivePair::new(target, interferer, sampler).unwrap();
            let p = surpass_probability(&pair).unwrap();
            assert!((0.0..=1.0).contains(&p), "P out of range: {p}");
            let e = difference_expectation(&pair, &quad).unwrap();
            let sup = target.pdf(target.mu).max(interferer.pdf(interferer.mu));
            assert!(e.abs() <= sup + 1e-12, "E {e} exceeds bound {sup}");
        }
    }

    #[test]
    fn quadrature_converges_under_step_halving() {
        let pair = reference_pair();
        let coarse = difference_expectation(
            &pair,
            &QuadratureConfig {
                nodes: 20_001,
                tail_sigmas: 10.0,
            },
        )
        .unwrap();
        let fine = difference_expectation(
            &pair,
            &QuadratureConfig {
                nodes: 40_001,
                tail_sigmas: 10.0,
            },
        )
        .unwrap();
        assert!((coarse - fine).abs() < 1e-5, "{coarse} vs {fine}");
    }

    #[test]
    fn identical_target_and_interferer_rejected() {
        assert!(matches!(
            ExclusivePair::baseline(Gaussian1d::new(0.0, 1.0), Gaussian1d::new(0.0, 1.0)),
            Err(Error::IdenticalDistributions)
        ));
    }

    #[test]
    fn quadrature_config_validation() {
        let pair = reference_pair();
        for nodes in [0, 1, 2, 4] {
            assert!(matches!(
                difference_expectation(
                    &pair,
                    &QuadratureConfig {
                        nodes,
                        tail_sigmas: 10.0
                    }
                ),
                Err(Error::QuadratureResolution(_))
            ));
        }
    }

    #[test]
    fn sweep_table_formatting() {
        let rows = vec![
            SweepRow {
                param: 1.0,
                surpass_prob: 0.7733,
                diff_expectation: 0.1609,
            },
            SweepRow {
                param: 0.5,
                surpass_prob: 0.9332,
                diff_expectation: 0.2185,
            },
        ];
        let text = format_sweep_table(&rows);
        assert_eq!(
            text,
            "param,surpass_prob,diff_expectation\n1.000,0.773,0.161\n0.500,0.933,0.218\n"
        );
    }

    #[test]
    fn alpha_sweep_on_identity_flow() {
        // Identity flow with well-separated equal-sigma priors: the margin is
        // positive at alpha = 1, negative at alpha = 0, and smallest in
        // magnitude at the intersection weight 0.5.
        let shape = FlowShape::new(2);
        let mut model = FlowModel::identity_init(&shape).unwrap();
        model
            .register_attribute(
                "a",
                DiagonalGaussian::new(vec![-2.0, 0.0], vec![1.0, 1.0]).unwrap(),
            )
            .unwrap();
        model
            .register_attribute(
                "b",
                DiagonalGaussian::new(vec![2.0, 0.0], vec![1.0, 1.0]).unwrap(),
            )
            .unwrap();
        let alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let mut rng = Rng::new(5);
        let rows = alpha_sweep(&model, "a", "b", &alphas, 1.0, 2000, &mut rng).unwrap();
        assert!(rows.first().unwrap().margin < 0.0);
        assert!(rows.last().unwrap().margin > 0.0);
        let min_abs = rows
            .iter()
            .min_by(|x, y| x.margin.abs().partial_cmp(&y.margin.abs()).unwrap())
            .unwrap();
        assert_eq!(
            min_abs.alpha, 0.5,
            "min |margin| at alpha {}",
            min_abs.alpha
        );
    }
}
