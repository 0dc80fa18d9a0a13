//! Control strategies in prior space and their feedback into latent space:
//! weighted interpolation between attribute priors, intersection centers of
//! density pairs, and controlled sampling through the inverse map.
//!
//! The 1-D intersection solves the quadratic obtained from equating two
//! Gaussian log densities. With equal sigmas the equation degenerates to the
//! midpoint of the means. With unequal sigmas there are two roots and the one
//! between the means is the usable center; when both roots fall outside that
//! interval (means too close relative to the sigma gap) the condition is
//! reported rather than treated as an error, and callers fall back to the
//! midpoint.

use crate::error::{Error, Result};
use crate::flow::FlowModel;
use crate::priors::{sample, DiagonalGaussian};
use crate::rng::Rng;
use crate::Vector;

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A control request: attribute weights (summing to 1, possibly outside
/// [0, 1] for extended control), the sampling scale, and an optional shift of
/// the sampling center away from interference.
#[derive(Debug, Clone)]
pub struct ControlSpec {
    pub terms: Vec<(String, f64)>,
    pub lambda: f64,
    pub center_offset: Option<Vector>,
}

impl ControlSpec {
    pub fn new(
        terms: Vec<(String, f64)>,
        lambda: f64,
        center_offset: Option<Vector>,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyControlSpec);
        }
        let sum: f64 = terms.iter().map(|(_, w)| w).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum { sum });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self {
            terms,
            lambda,
            center_offset,
        })
    }

    /// Parse `attr=weight` pairs, e.g. `pos=0.7,neg=0.3`.
    pub fn parse_weights(text: &str) -> Result<Vec<(String, f64)>> {
        let mut terms = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (attr, weight) = part.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("expected attr=weight, got `{part}`"))
            })?;
            let weight: f64 = weight.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("invalid weight `{}` for `{}`", weight, attr))
            })?;
            if attr.trim().is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "empty attribute name in `{part}`"
                )));
            }
            terms.push((attr.trim().to_string(), weight));
        }
        if terms.is_empty() {
            return Err(Error::EmptyControlSpec);
        }
        Ok(terms)
    }

    /// Canonical `attr=weight` rendering, used to tag controlled samples.
    pub fn weights_tag(&self) -> String {
        self.terms
            .iter()
            .map(|(a, w)| format!("{a}={w}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// More attributes than `dim + 1` cannot intersect at a common center in
    /// general position; callers warn on this but proceed.
    pub fn exceeds_intersection_bound(&self, dim: usize) -> bool {
        self.terms.len() > dim + 1
    }
}

/// Closed-form interpolation of diagonal Gaussians: weighting independent
/// samples `z_i ~ N(mu_i, sigma_i^2)` by `alpha_i` yields
/// `N(sum alpha_i mu_i, sum (alpha_i sigma_i)^2)`.
pub fn interpolate_distribution(
    priors: &[&DiagonalGaussian],
    weights: &[f64],
) -> Result<DiagonalGaussian> {
    if priors.is_empty() || priors.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "need matching priors and weights, got {} and {}",
            priors.len(),
            weights.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::WeightSum { sum });
    }
    let dim = priors[0].dim();
    for p in priors {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
    }
    let mut mean = vec![0.0; dim];
    let mut var = vec![0.0; dim];
    for (p, &w) in priors.iter().zip(weights) {
        for d in 0..dim {
            mean[d] += w * p.mean()[d];
            var[d] += (w * p.std()[d]).powi(2);
        }
    }
    DiagonalGaussian::new(mean, var.iter().map(|v| v.sqrt()).collect())
}

/// How the 1-D intersection was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntersectionCase {
    EqualVariance,
    TwoRoots,
    NoRootInInterval,
}

/// Where two 1-D Gaussians have equal density along the line through their
/// means. `alpha_star` expresses the center as `z = alpha* mu_a + (1 - alpha*) mu_b`.
#[derive(Debug, Clone)]
pub struct IntersectionResult {
    pub z_hat: f64,
    pub alpha_star: f64,
    pub case: IntersectionCase,
    pub both_roots: Option<(f64, f64)>,
}

/// Equal-density point of two 1-D Gaussians.
pub fn intersection_center_1d(g_a: (f64, f64), g_b: (f64, f64)) -> Result<IntersectionResult> {
    let (mu_a, sigma_a) = g_a;
    let (mu_b, sigma_b) = g_b;
    if !(sigma_a > 0.0) {
        return Err(Error::NonPositiveSigma(sigma_a));
    }
    if !(sigma_b > 0.0) {
        return Err(Error::NonPositiveSigma(sigma_b));
    }
    if mu_a == mu_b && sigma_a == sigma_b {
        return Err(Error::IdenticalDistributions);
    }

    let alpha_of = |z: f64| {
        if mu_a == mu_b {
            0.5
        } else {
            (mu_b - z) / (mu_b - mu_a)
        }
    };

    if sigma_a == sigma_b {
        let z = 0.5 * (mu_a + mu_b);
        return Ok(IntersectionResult {
            z_hat: z,
            alpha_star: alpha_of(z),
            case: IntersectionCase::EqualVariance,
            both_roots: None,
        });
    }

    let va = sigma_a * sigma_a;
    let vb = sigma_b * sigma_b;
    let a = -1.0 / va + 1.0 / vb;
    let b = 2.0 * (mu_a / va - mu_b / vb);
    // Discriminant in its provably nonnegative form: both terms are products
    // of factors with matching signs.
    let delta = 4.0 / (va * vb) * ((mu_a - mu_b).powi(2) + (va - vb) * (va / vb).ln());
    // Numerically stable quadratic roots.
    let sqrt_delta = delta.max(0.0).sqrt();
    let q = -0.5 * (b + b.signum() * sqrt_delta);
    let c = (vb / va).ln() - mu_a * mu_a / va + mu_b * mu_b / vb;
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { -b / a - r1 };
    let (lo, hi) = (mu_a.min(mu_b), mu_a.max(mu_b));
    let inside: Vec<f64> = [r1, r2]
        .into_iter()
        .filter(|r| (lo..=hi).contains(r))
        .collect();
    let roots = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    match inside.as_slice() {
        [] => {
            // Means too close for the sigma gap; report it and expose the
            // midpoint as the alpha = 0.5 fallback.
            let z = 0.5 * (mu_a + mu_b);
            Ok(IntersectionResult {
                z_hat: z,
                alpha_star: alpha_of(z),
                case: IntersectionCase::NoRootInInterval,
                both_roots: Some(roots),
            })
        }
        rs => {
            // At most one root lies strictly between the means; equal floats
            // at the boundary could admit both, so prefer the more central.
            let mid = 0.5 * (lo + hi);
            let z = rs
                .iter()
                .copied()
                .min_by(|x, y| (x - mid).abs().partial_cmp(&(y - mid).abs()).unwrap())
                .unwrap();
            Ok(IntersectionResult {
                z_hat: z,
                alpha_star: alpha_of(z),
                case: IntersectionCase::TwoRoots,
                both_roots: Some(roots),
            })
        }
    }
}

/// Interpolation weight landing on the intersection center of two priors.
///
/// The multi-dimensional problem is reduced to 1-D along the segment joining
/// the means; each prior contributes its direction-projected sigma.
pub fn intersection_alpha(g_a: &DiagonalGaussian, g_b: &DiagonalGaussian) -> Result<f64> {
    if g_a.dim() != g_b.dim() {
        return Err(Error::DimensionMismatch {
            expected: g_a.dim(),
            got: g_b.dim(),
        });
    }
    let diff: Vec<f64> = g_b
        .mean()
        .iter()
        .zip(g_a.mean())
        .map(|(b, a)| b - a)
        .collect();
    let dist = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    if dist == 0.0 {
        return Err(Error::CoincidentMeans);
    }
    let unit: Vec<f64> = diff.iter().map(|d| d / dist).collect();
    let result = intersection_center_1d(
        (0.0, g_a.projected_std(&unit)),
        (dist, g_b.projected_std(&unit)),
    )?;
    Ok(1.0 - result.z_hat / dist)
}

/// A point on the segment between the two means where the full n-dimensional
/// densities coincide, if one exists there. The difference of log densities
/// restricted to the segment is an exact quadratic in the interpolation
/// parameter; a Newton polish removes the last floating-point residue.
pub fn equal_density_point_on_segment(
    g_a: &DiagonalGaussian,
    g_b: &DiagonalGaussian,
) -> Result<Option<Vector>> {
    if g_a.dim() != g_b.dim() {
        return Err(Error::DimensionMismatch {
            expected: g_a.dim(),
            got: g_b.dim(),
        });
    }
    let dim = g_a.dim();
    // g(t) = log pi_a(z(t)) - log pi_b(z(t)) with z(t) = (1-t) mu_a + t mu_b.
    let mut qa = 0.0; // t^2
    let mut qb = 0.0; // t
    let mut qc = 0.0; // const
    for d in 0..dim {
        let diff = g_b.mean()[d] - g_a.mean()[d];
        let va = g_a.std()[d] * g_a.std()[d];
        let vb = g_b.std()[d] * g_b.std()[d];
        qa += 0.5 * diff * diff * (1.0 / vb - 1.0 / va);
        qb += -diff * diff / vb;
        qc += 0.5 * diff * diff / vb + (g_b.std()[d] / g_a.std()[d]).ln();
    }
    let point_at = |t: f64| -> Vector {
        (0..dim)
            .map(|d| (1.0 - t) * g_a.mean()[d] + t * g_b.mean()[d])
            .collect()
    };
    let g = |t: f64| qa * t * t + qb * t + qc;
    let g_prime = |t: f64| 2.0 * qa * t + qb;

    let mut candidates = Vec::new();
    if qa.abs() < 1e-14 {
        if qb != 0.0 {
            candidates.push(-qc / qb);
        }
    } else {
        let delta = qb * qb - 4.0 * qa * qc;
        if delta >= 0.0 {
            let sq = delta.sqrt();
            let q = -0.5 * (qb + qb.signum() * sq);
            candidates.push(q / qa);
            if q != 0.0 {
                candidates.push(qc / q);
            }
        }
    }
    // Prefer a root between the means, otherwise the one closest to the
    // segment; polish with one Newton step.
    candidates.retain(|t| t.is_finite());
    if candidates.is_empty() {
        return Ok(None);
    }
    candidates.sort_by(|x, y| {
        let dx = if (0.0..=1.0).contains(x) {
            0.0
        } else {
            x.clamp(0.0, 1.0) - x
        };
        let dy = if (0.0..=1.0).contains(y) {
            0.0
        } else {
            y.clamp(0.0, 1.0) - y
        };
        dx.abs().partial_cmp(&dy.abs()).unwrap()
    });
    let mut t = candidates[0];
    for _ in 0..2 {
        let gp = g_prime(t);
        if gp != 0.0 {
            t -= g(t) / gp;
        }
    }
    Ok(Some(point_at(t)))
}

/// Draw controlled latent samples: build the interpolated prior-space
/// distribution, shift its center if requested, sample at the given scale,
/// and map every point back through the inverse flow.
pub fn controlled_sample(
    model: &FlowModel,
    spec: &ControlSpec,
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<Vector>> {
    let priors: Vec<&DiagonalGaussian> = spec
        .terms
        .iter()
        .map(|(attr, _)| model.prior(attr))
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = spec.terms.iter().map(|(_, w)| *w).collect();
    let mut dist = interpolate_distribution(&priors, &weights)?;
    if let Some(offset) = &spec.center_offset {
        if offset.len() != dist.dim() {
            return Err(Error::DimensionMismatch {
                expected: dist.dim(),
                got: offset.len(),
            });
        }
        let mean: Vec<f64> = dist.mean().iter().zip(offset).map(|(m, o)| m + o).collect();
        dist = DiagonalGaussian::new(mean, dist.std().to_vec())?;
    }
    (0..count)
        .map(|_| {
            let z = sample(&dist, spec.lambda, rng)?;
            model.inverse(&z)
        })
        .collect()
}
