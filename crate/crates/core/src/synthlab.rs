//! Synthetic latent-space laboratory: per-attribute ground-truth
//! distributions with exact densities and exact samplers, plus the labeled
//! dataset type and its line-delimited file format. The families are
//! deliberately asymmetric and non-convex so the flow has something real to
//! learn, and every family knows its own log density so trained models can be
//! checked against the truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{gaussian_log_pdf, DiagonalGaussian};
use crate::rng::Rng;
use crate::Vector;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One mixture component: a diagonal Gaussian with a positive weight.
#[derive(Debug, Clone)]
pub struct MixtureComponent {
    pub weight: f64,
    pub gaussian: DiagonalGaussian,
}

/// Families of ground-truth attribute distributions.
#[derive(Debug, Clone)]
pub enum DistributionKind {
    /// Weighted sum of diagonal Gaussians; weights positive, summing to 1.
    GaussianMixture { components: Vec<MixtureComponent> },
    /// A base Gaussian sheared along dimension 1 by `curvature * x0^2`.
    /// The shear is volume preserving, so the density stays exact.
    BananaWarp {
        base: DiagonalGaussian,
        curvature: f64,
    },
    /// Radius `N(radius, radial_std^2)` at an angle uniform over the arc,
    /// around `center`. Two-dimensional.
    RingArc {
        center: [f64; 2],
        radius: f64,
        radial_std: f64,
        arc_start: f64,
        arc_span: f64,
    },
}

/// A named ground-truth latent distribution.
#[derive(Debug, Clone)]
pub struct AttributeDistribution {
    pub id: String,
    pub kind: DistributionKind,
    dim: usize,
}

impl AttributeDistribution {
    pub fn new(id: impl Into<String>, kind: DistributionKind) -> Result<Self> {
        let dim = match &kind {
            DistributionKind::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidParameter("mixture needs components".into()));
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if components.iter().any(|c| c.weight <= 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "mixture weights must be positive and sum to 1 (sum {total})"
                    )));
                }
                let dim = components[0].gaussian.dim();
                if components.iter().any(|c| c.gaussian.dim() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: components
                            .iter()
                            .find(|c| c.gaussian.dim() != dim)
                            .unwrap()
                            .gaussian
                            .dim(),
                    });
                }
                dim
            }
            DistributionKind::BananaWarp { base, .. } => {
                if base.dim() < 2 {
                    return Err(Error::InvalidParameter(
                        "banana warp needs dimension >= 2".into(),
                    ));
                }
                base.dim()
            }
            DistributionKind::RingArc {
                radius,
                radial_std,
                arc_span,
                ..
            } => {
                if !(*radius > 0.0) || !(*radial_std > 0.0) {
                    return Err(Error::InvalidParameter(
                        "ring needs positive radius and radial std".into(),
                    ));
                }
                if !(*arc_span > 0.0 && *arc_span <= TWO_PI) {
                    return Err(Error::InvalidParameter(
                        "arc span must lie in (0, 2*pi]".into(),
                    ));
                }
                2
            }
        };
        Ok(Self {
            id: id.into(),
            kind,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Angle wrapped into `[0, 2*pi)`.
fn wrap_angle(theta: f64) -> f64 {
    let t = theta % TWO_PI;
    if t < 0.0 {
        t + TWO_PI
    } else {
        t
    }
}

/// Whether `theta` falls inside the arc `[start, start + span)` on the circle.
fn in_arc(theta: f64, start: f64, span: f64) -> bool {
    let rel = wrap_angle(theta - start);
    rel < span || (span >= TWO_PI && rel < TWO_PI)
}

/// Exact log density of the family at `x`.
pub fn synth_log_density(dist: &AttributeDistribution, x: &[f64]) -> Result<f64> {
    if x.len() != dist.dim {
        return Err(Error::DimensionMismatch {
            expected: dist.dim,
            got: x.len(),
        });
    }
    match &dist.kind {
        DistributionKind::GaussianMixture { components } => {
            let terms: Vec<f64> = components
                .iter()
                .map(|c| Ok(c.weight.ln() + gaussian_log_pdf(&c.gaussian, x)?))
                .collect::<Result<_>>()?;
            Ok(log_sum_exp(&terms))
        }
        DistributionKind::BananaWarp { base, curvature } => {
            // Invert the shear; its Jacobian determinant is exactly 1.
            let mut pre = x.to_vec();
            pre[1] = x[1] - curvature * x[0] * x[0];
            gaussian_log_pdf(base, &pre)
        }
        DistributionKind::RingArc {
            center,
            radius,
            radial_std,
            arc_start,
            arc_span,
        } => {
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            let rho = (dx * dx + dy * dy).sqrt();
            if rho == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            let theta = dy.atan2(dx);
            // The polar map (r, theta) -> x has two preimages per point:
            // (rho, theta) and (-rho, theta + pi); keep those inside the arc.
            let radial = DiagonalGaussian::new(vec![*radius], vec![*radial_std])?;
            let mut terms = Vec::new();
            if in_arc(theta, *arc_start, *arc_span) {
                terms.push(gaussian_log_pdf(&radial, &[rho])?);
            }
            if in_arc(theta + std::f64::consts::PI, *arc_start, *arc_span) {
                terms.push(gaussian_log_pdf(&radial, &[-rho])?);
            }
            if terms.is_empty() {
                return Ok(f64::NEG_INFINITY);
            }
            Ok(log_sum_exp(&terms) - arc_span.ln() - rho.ln())
        }
    }
}

/// Exact sampler matching [`synth_log_density`]; deterministic per seed.
pub fn synth_sample(dist: &AttributeDistribution, count: usize, rng: &mut Rng) -> Vec<Vector> {
    (0..count)
        .map(|_| match &dist.kind {
            DistributionKind::GaussianMixture { components } => {
                let mut u = rng.uniform();
                let mut chosen = &components[components.len() - 1];
                for c in components {
                    if u < c.weight {
                        chosen = c;
                        break;
                    }
                    u -= c.weight;
                }
                chosen
                    .gaussian
                    .mean()
                    .iter()
                    .zip(chosen.gaussian.std())
                    .map(|(m, s)| m + s * rng.normal())
                    .collect()
            }
            DistributionKind::BananaWarp { base, curvature } => {
                let mut x: Vector = base
                    .mean()
                    .iter()
                    .zip(base.std())
                    .map(|(m, s)| m + s * rng.normal())
                    .collect();
                x[1] += curvature * x[0] * x[0];
                x
            }
            DistributionKind::RingArc {
                center,
                radius,
                radial_std,
                arc_start,
                arc_span,
            } => {
                let theta = arc_start + arc_span * rng.uniform();
                let r = radius + radial_std * rng.normal();
                vec![center[0] + r * theta.cos(), center[1] + r * theta.sin()]
            }
        })
        .collect()
}

/// Labeled latent points with a fixed dimension and balanced attribute counts.
#[derive(Debug, Clone)]
pub struct LatentDataset {
    dim: usize,
    records: Vec<(Vector, String)>,
}

impl LatentDataset {
    /// Validates dimension consistency, finiteness, non-emptiness, and the
    /// 10% per-attribute balance bound.
    pub fn from_records(records: Vec<(Vector, String)>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = records[0].0.len();
        for (x, _) in &records {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "dataset contains non-finite coordinates".into(),
                ));
            }
        }
        let ds = Self { dim, records };
        ds.check_balance()?;
        Ok(ds)
    }

    fn check_balance(&self) -> Result<()> {
        let counts = self.attribute_counts();
        let min = *counts.values().min().unwrap();
        let max = *counts.values().max().unwrap();
        if (max - min) as f64 > 0.1 * max as f64 {
            return Err(Error::UnbalancedAttributes { min, max });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(Vector, String)] {
        &self.records
    }

    pub fn attribute_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for (_, attr) in &self.records {
            *counts.entry(attr.clone()).or_insert(0) += 1;
        }
        counts
    }
}

/// Balanced labeled dataset drawn from the given ground-truth distributions.
pub fn generate_dataset(
    dists: &[AttributeDistribution],
    per_attr_count: usize,
    seed: u64,
) -> Result<LatentDataset> {
    if dists.is_empty() || per_attr_count == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = Rng::new(seed);
    let mut records = Vec::with_capacity(dists.len() * per_attr_count);
    for dist in dists {
        for x in synth_sample(dist, per_attr_count, &mut rng) {
            records.push((x, dist.id.clone()));
        }
    }
    LatentDataset::from_records(records)
}

#[derive(Serialize, Deserialize)]
struct Record {
    x: Vec<f64>,
    attr: String,
}

/// One dataset record as a line of text.
pub fn record_to_string(x: &[f64], attr: &str) -> String {
    serde_json::to_string(&Record {
        x: x.to_vec(),
        attr: attr.to_string(),
    })
    .unwrap()
}

/// Serialize one record per line; comment lines start with `#`.
pub fn dataset_to_string(ds: &LatentDataset) -> String {
    let mut out = String::new();
    for (x, attr) in ds.records() {
        writeln!(out, "{}", record_to_string(x, attr)).unwrap();
    }
    out
}

pub fn save_dataset(ds: &LatentDataset, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(dataset_to_string(ds).as_bytes())?;
    Ok(())
}

/// Parse line-delimited records. Blank lines and `#` comments are skipped;
/// the dimension is inferred from the first record and enforced afterwards.
pub fn dataset_from_reader(reader: impl BufRead) -> Result<LatentDataset> {
    let mut records = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record: Record = serde_json::from_str(trimmed).map_err(|e| Error::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        if record.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedRecord {
                line: line_no,
                reason: "non-finite coordinate".into(),
            });
        }
        match dim {
            None => dim = Some(record.x.len()),
            Some(d) if record.x.len() != d => {
                return Err(Error::MalformedRecord {
                    line: line_no,
                    reason: format!(
                        "dimension {} does not match first record ({d})",
                        record.x.len()
                    ),
                });
            }
            _ => {}
        }
        records.push((record.x, record.attr));
    }
    LatentDataset::from_records(records)
}

pub fn load_dataset(path: &Path) -> Result<LatentDataset> {
    let file = std::fs::File::open(path)?;
    dataset_from_reader(BufReader::new(file))
}

/// The default benchmark scene: two skewed, partially overlapping mixtures on
/// the left/right and two opposed banana warps above and below. Dimensions
/// beyond the second are independent standard normal.
pub fn default_scene(dim: usize) -> Result<Vec<AttributeDistribution>> {
    if dim < 2 {
        return Err(Error::InvalidParameter("scene needs dimension >= 2".into()));
    }
    let pad = |head: [f64; 2], fill: f64| -> Vec<f64> {
        let mut v = vec![fill; dim];
        v[0] = head[0];
        v[1] = head[1];
        v
    };
    let gauss = |mean: [f64; 2], std: [f64; 2]| {
        DiagonalGaussian::new(pad(mean, 0.0), {
            let mut s = vec![1.0; dim];
            s[0] = std[0];
            s[1] = std[1];
            s
        })
    };
    let mixture =
        |id: &str, parts: [(f64, [f64; 2], [f64; 2]); 2]| -> Result<AttributeDistribution> {
            let components = parts
                .iter()
                .map(|(w, m, s)| {
                    Ok(MixtureComponent {
                        weight: *w,
                        gaussian: gauss(*m, *s)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            AttributeDistribution::new(id, DistributionKind::GaussianMixture { components })
        };
    Ok(vec![
        mixture(
            "pos",
            [
                (0.6, [1.2, 0.6], [0.55, 0.75]),
                (0.4, [2.1, -0.7], [0.8, 0.4]),
            ],
        )?,
        mixture(
            "neg",
            [
                (0.55, [-1.3, 0.5], [0.6, 0.7]),
                (0.45, [-2.2, -0.6], [0.85, 0.45]),
            ],
        )?,
        AttributeDistribution::new(
            "topic1",
            DistributionKind::BananaWarp {
                base: gauss([0.0, -2.2], [1.0, 0.35])?,
                curvature: 0.35,
            },
        )?,
        AttributeDistribution::new(
            "topic2",
            DistributionKind::BananaWarp {
                base: gauss([0.0, 2.2], [1.0, 0.35])?,
                curvature: -0.35,
            },
        )?,
    ])
}
