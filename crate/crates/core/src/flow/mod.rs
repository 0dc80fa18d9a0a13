//! The invertible map between latent space and prior space: a stack of affine
//! coupling layers with exact inverses and exact log-determinants, plus one
//! diagonal-Gaussian prior per attribute.
//!
//! A coupling layer passes half the coordinates through unchanged and applies
//! `y = x * exp(s) + t` to the rest, where `s` and `t` are subnets of the
//! pass-through half. The Jacobian is triangular, so the log-determinant is
//! just the sum of the `s` outputs. `s` is squashed to
//! `clamp * tanh(s / clamp)` to keep `exp(s)` tame.

mod io;
mod train;

pub use io::{load_model, model_from_str, model_to_string, save_model};
pub use train::{objective_gradient_fd_error, train, PriorMode, TrainConfig, TrainOutcome};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::{
    mlp_forward, mlp_forward_cached, mlp_gradient_from_cache, Activation, MlpForwardCache,
    MlpParams,
};
use crate::priors::{gaussian_log_pdf, DiagonalGaussian};
use crate::rng::Rng;
use crate::Vector;

pub const DEFAULT_NUM_LAYERS: usize = 6;
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];
pub const DEFAULT_SCALE_CLAMP: f64 = 2.0;

/// One affine coupling layer. `mask[d] == true` marks a pass-through
/// dimension; the rest are transformed conditioned on the pass-through half.
#[derive(Debug, Clone)]
pub struct CouplingLayer {
    pub(crate) mask: Vec<bool>,
    pub(crate) scale_net: MlpParams,
    pub(crate) translate_net: MlpParams,
    pub(crate) scale_clamp: f64,
}

impl CouplingLayer {
    pub fn new(
        mask: Vec<bool>,
        scale_net: MlpParams,
        translate_net: MlpParams,
        scale_clamp: f64,
    ) -> Result<Self> {
        let n_pass = mask.iter().filter(|&&m| m).count();
        let n_trans = mask.len() - n_pass;
        if n_pass == 0 || n_trans == 0 {
            return Err(Error::InvalidParameter(
                "coupling mask needs at least one pass-through and one transformed dimension"
                    .into(),
            ));
        }
        for (name, net) in [("scale", &scale_net), ("translate", &translate_net)] {
            if net.input_width() != n_pass || net.output_width() != n_trans {
                return Err(Error::InvalidParameter(format!(
                    "{name} net must map {n_pass} -> {n_trans}, got {} -> {}",
                    net.input_width(),
                    net.output_width()
                )));
            }
        }
        if !(scale_clamp > 0.0) {
            return Err(Error::InvalidParameter(
                "scale clamp must be positive".into(),
            ));
        }
        Ok(Self {
            mask,
            scale_net,
            translate_net,
            scale_clamp,
        })
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    fn pass_values(&self, v: &[f64]) -> Vec<f64> {
        self.mask
            .iter()
            .zip(v)
            .filter_map(|(&m, &x)| m.then_some(x))
            .collect()
    }

    #[inline]
    fn squash(&self, s_raw: f64) -> f64 {
        self.scale_clamp * (s_raw / self.scale_clamp).tanh()
    }

    /// Scale and translation conditioned on the pass-through half; the scale
    /// is already squashed.
    fn subnet_outputs(&self, pass: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let s_raw = mlp_forward(&self.scale_net, pass)?;
        let t = mlp_forward(&self.translate_net, pass)?;
        let s = s_raw.iter().map(|&v| self.squash(v)).collect();
        Ok((s, t))
    }

    /// Forward transform: returns `z` and the log-determinant of the forward
    /// Jacobian (the sum of the squashed scales).
    pub fn forward(&self, x: &[f64]) -> Result<(Vector, f64)> {
        self.check_dim(x)?;
        let (s, t) = self.subnet_outputs(&self.pass_values(x))?;
        let mut z = x.to_vec();
        let mut log_det = 0.0;
        let mut j = 0;
        for (d, &m) in self.mask.iter().enumerate() {
            if !m {
                z[d] = x[d] * s[j].exp() + t[j];
                log_det += s[j];
                j += 1;
            }
        }
        if !log_det.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "coupling forward".into(),
            });
        }
        Ok((z, log_det))
    }

    /// Exact algebraic inverse; the returned log-determinant is that of the
    /// inverse map (the negated forward one).
    pub fn inverse(&self, z: &[f64]) -> Result<(Vector, f64)> {
        self.check_dim(z)?;
        // Pass-through values are identical on both sides.
        let (s, t) = self.subnet_outputs(&self.pass_values(z))?;
        let mut x = z.to_vec();
        let mut log_det = 0.0;
        let mut j = 0;
        for (d, &m) in self.mask.iter().enumerate() {
            if !m {
                x[d] = (z[d] - t[j]) * (-s[j]).exp();
                log_det -= s[j];
                j += 1;
            }
        }
        if !log_det.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "coupling inverse".into(),
            });
        }
        Ok((x, log_det))
    }
}

/// Everything the backward pass needs from a forward evaluation: the layer
/// input, both subnet caches, and the squashed scales.
pub(crate) struct CouplingCache {
    pub input: Vector,
    pub scale_cache: MlpForwardCache,
    pub translate_cache: MlpForwardCache,
    pub s: Vector,
}

impl CouplingLayer {
    pub(crate) fn forward_cached(&self, x: &[f64]) -> Result<(Vector, f64, CouplingCache)> {
        self.check_dim(x)?;
        let pass = self.pass_values(x);
        let scale_cache = mlp_forward_cached(&self.scale_net, &pass)?;
        let translate_cache = mlp_forward_cached(&self.translate_net, &pass)?;
        let s: Vec<f64> = scale_cache
            .output()
            .iter()
            .map(|&v| self.squash(v))
            .collect();
        let t = translate_cache.output();
        let mut z = x.to_vec();
        let mut log_det = 0.0;
        let mut j = 0;
        for (d, &m) in self.mask.iter().enumerate() {
            if !m {
                z[d] = x[d] * s[j].exp() + t[j];
                log_det += s[j];
                j += 1;
            }
        }
        if !log_det.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "coupling forward".into(),
            });
        }
        let cache = CouplingCache {
            input: x.to_vec(),
            scale_cache,
            translate_cache,
            s,
        };
        Ok((z, log_det, cache))
    }

    /// Reverse-mode step for the training objective. `upstream` is the
    /// gradient on this layer's output; `log_det_weight` is the direct weight
    /// of this layer's log-determinant in the objective (-1 for an NLL).
    /// Returns the gradient on the layer input and accumulates parameter
    /// gradients into the given buffers.
    pub(crate) fn backward(
        &self,
        cache: &CouplingCache,
        upstream: &[f64],
        log_det_weight: f64,
        scale_grads: &mut crate::numerics::MlpGrads,
        translate_grads: &mut crate::numerics::MlpGrads,
    ) -> Result<Vector> {
        let mut d_s = Vec::with_capacity(cache.s.len());
        let mut d_t = Vec::with_capacity(cache.s.len());
        let mut input_grad = vec![0.0; self.dim()];
        let mut j = 0;
        for (d, &m) in self.mask.iter().enumerate() {
            if m {
                input_grad[d] = upstream[d];
            } else {
                let e = cache.s[j].exp();
                input_grad[d] = upstream[d] * e;
                d_t.push(upstream[d]);
                d_s.push(upstream[d] * cache.input[d] * e + log_det_weight);
                j += 1;
            }
        }
        // Through the squash: d/du (clamp * tanh(u / clamp)) = sech^2(u / clamp),
        // and tanh(u / clamp) is just s / clamp.
        let d_s_raw: Vec<f64> = d_s
            .iter()
            .zip(&cache.s)
            .map(|(g, &s)| {
                let th = s / self.scale_clamp;
                g * (1.0 - th * th)
            })
            .collect();
        let (sg, pass_grad_s) =
            mlp_gradient_from_cache(&self.scale_net, &cache.scale_cache, &d_s_raw)?;
        let (tg, pass_grad_t) =
            mlp_gradient_from_cache(&self.translate_net, &cache.translate_cache, &d_t)?;
        scale_grads.accumulate(&sg);
        translate_grads.accumulate(&tg);
        let mut j = 0;
        for (d, &m) in self.mask.iter().enumerate() {
            if m {
                input_grad[d] += pass_grad_s[j] + pass_grad_t[j];
                j += 1;
            }
        }
        Ok(input_grad)
    }
}

/// The full invertible model: an ordered layer stack sharing one dimension,
/// plus per-attribute priors in the mapped space.
#[derive(Debug, Clone)]
pub struct FlowModel {
    pub(crate) dim: usize,
    pub(crate) layers: Vec<CouplingLayer>,
    pub(crate) priors: BTreeMap<String, DiagonalGaussian>,
}

/// Shape of the coupling stack, shared by the random and identity builders.
#[derive(Debug, Clone)]
pub struct FlowShape {
    pub dim: usize,
    pub num_layers: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub scale_clamp: f64,
}

impl FlowShape {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            num_layers: DEFAULT_NUM_LAYERS,
            hidden: DEFAULT_HIDDEN.to_vec(),
            activation: Activation::Tanh,
            scale_clamp: DEFAULT_SCALE_CLAMP,
        }
    }

    fn subnet_widths(&self, n_in: usize, n_out: usize) -> Vec<usize> {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(n_in);
        widths.extend_from_slice(&self.hidden);
        widths.push(n_out);
        widths
    }

    fn masks(&self) -> Vec<Vec<bool>> {
        // Even dimensions pass through on even layers, odd on odd layers.
        (0..self.num_layers)
            .map(|l| {
                (0..self.dim)
                    .map(|d| (d % 2 == 0) == (l % 2 == 0))
                    .collect()
            })
            .collect()
    }
}

impl FlowModel {
    pub fn new(dim: usize, layers: Vec<CouplingLayer>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(
                "coupling flows need dimension >= 2".into(),
            ));
        }
        for layer in &layers {
            if layer.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: layer.dim(),
                });
            }
        }
        Ok(Self {
            dim,
            layers,
            priors: BTreeMap::new(),
        })
    }

    /// Alternating-mask stack with seeded random subnets.
    pub fn random_init(shape: &FlowShape, seed: u64) -> Result<Self> {
        let mut rng = Rng::new(seed);
        let layers = shape
            .masks()
            .into_iter()
            .map(|mask| {
                let n_pass = mask.iter().filter(|&&m| m).count();
                let n_trans = mask.len() - n_pass;
                let widths = shape.subnet_widths(n_pass, n_trans);
                let scale_net = MlpParams::random_init(&widths, shape.activation, &mut rng)?;
                let translate_net = MlpParams::random_init(&widths, shape.activation, &mut rng)?;
                CouplingLayer::new(mask, scale_net, translate_net, shape.scale_clamp)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shape.dim, layers)
    }

    /// Zero-parameter stack: every layer is the identity map.
    pub fn identity_init(shape: &FlowShape) -> Result<Self> {
        let layers = shape
            .masks()
            .into_iter()
            .map(|mask| {
                let n_pass = mask.iter().filter(|&&m| m).count();
                let n_trans = mask.len() - n_pass;
                let widths = shape.subnet_widths(n_pass, n_trans);
                let scale_net = MlpParams::zeros(&widths, shape.activation)?;
                let translate_net = MlpParams::zeros(&widths, shape.activation)?;
                CouplingLayer::new(mask, scale_net, translate_net, shape.scale_clamp)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shape.dim, layers)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layers(&self) -> &[CouplingLayer] {
        &self.layers
    }

    pub fn register_attribute(
        &mut self,
        id: impl Into<String>,
        prior: DiagonalGaussian,
    ) -> Result<()> {
        if prior.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: prior.dim(),
            });
        }
        self.priors.insert(id.into(), prior);
        Ok(())
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.priors.keys().map(String::as_str)
    }

    pub fn priors(&self) -> &BTreeMap<String, DiagonalGaussian> {
        &self.priors
    }

    pub fn prior(&self, attr: &str) -> Result<&DiagonalGaussian> {
        self.priors
            .get(attr)
            .ok_or_else(|| Error::UnknownAttribute(attr.to_string()))
    }

    /// `z = F(x)` with the summed log-determinant of the forward Jacobian.
    pub fn forward(&self, x: &[f64]) -> Result<(Vector, f64)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut current = x.to_vec();
        let mut total = 0.0;
        for (i, layer) in self.layers.iter().enumerate() {
            let (z, ld) = layer.forward(&current).map_err(|e| at_layer(e, i))?;
            current = z;
            total += ld;
        }
        Ok((current, total))
    }

    /// `x = F^{-1}(z)`: layer inverses applied in reverse order.
    pub fn inverse(&self, z: &[f64]) -> Result<Vector> {
        Ok(self.inverse_with_log_det(z)?.0)
    }

    /// Inverse together with the log-determinant of the inverse Jacobian.
    pub fn inverse_with_log_det(&self, z: &[f64]) -> Result<(Vector, f64)> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        let mut current = z.to_vec();
        let mut total = 0.0;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (x, ld) = layer.inverse(&current).map_err(|e| at_layer(e, i))?;
            current = x;
            total += ld;
        }
        Ok((current, total))
    }

    /// `log p(x|a)` by change of variables against the attribute's prior.
    pub fn log_prob(&self, attr: &str, x: &[f64]) -> Result<f64> {
        let prior = self.prior(attr)?;
        let (z, log_det) = self.forward(x)?;
        Ok(gaussian_log_pdf(prior, &z)? + log_det)
    }

    /// Latent point and latent log density for a point given in prior space.
    ///
    /// Evaluating several attributes at the same `z` through this path keeps
    /// the Jacobian factor literally shared, so density ratios between
    /// attributes are exact.
    pub fn log_prob_at_prior_point(&self, attr: &str, z: &[f64]) -> Result<(Vector, f64)> {
        let prior = self.prior(attr)?;
        let (x, log_det_inv) = self.inverse_with_log_det(z)?;
        Ok((x, gaussian_log_pdf(prior, z)? - log_det_inv))
    }
}

fn at_layer(e: Error, index: usize) -> Error {
    match e {
        Error::NonFinite { context } => Error::NonFinite {
            context: format!("{context} (layer {index})"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single affine net that outputs a constant regardless of input. The
    /// bias pre-compensates the squash so the effective output is exact.
    fn constant_net(n_in: usize, n_out: usize, value: f64, pre_squash: Option<f64>) -> MlpParams {
        let mut net = MlpParams::zeros(&[n_in, n_out], Activation::Tanh).unwrap();
        let bias = match pre_squash {
            Some(clamp) => clamp * (value / clamp).atanh(),
            None => value,
        };
        for b in net.biases[0].iter_mut() {
            *b = bias;
        }
        net
    }

    fn identity_layer(mask: Vec<bool>) -> CouplingLayer {
        let n_pass = mask.iter().filter(|&&m| m).count();
        let n_trans = mask.len() - n_pass;
        CouplingLayer::new(
            mask,
            MlpParams::zeros(&[n_pass, n_trans], Activation::Tanh).unwrap(),
            MlpParams::zeros(&[n_pass, n_trans], Activation::Tanh).unwrap(),
            DEFAULT_SCALE_CLAMP,
        )
        .unwrap()
    }

    /// s = log 2, t = 1, passing dimension 0 of a 2-D space.
    fn log2_layer() -> CouplingLayer {
        let clamp = DEFAULT_SCALE_CLAMP;
        CouplingLayer::new(
            vec![true, false],
            constant_net(1, 1, std::f64::consts::LN_2, Some(clamp)),
            constant_net(1, 1, 1.0, None),
            clamp,
        )
        .unwrap()
    }

    #[test]
    fn identity_coupling_is_identity() {
        let layer = identity_layer(vec![true, false]);
        let x = [0.3, -1.7];
        let (z, ld) = layer.forward(&x).unwrap();
        assert_eq!(z, x.to_vec());
        assert_eq!(ld, 0.0);
        let (back, ld_inv) = layer.inverse(&z).unwrap();
        assert_eq!(back, x.to_vec());
        assert_eq!(ld_inv, 0.0);
    }

    #[test]
    fn constant_coupling_hand_evaluation() {
        let layer = log2_layer();
        let (z, ld) = layer.forward(&[1.0, 1.0]).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12);
        assert!((z[1] - 3.0).abs() < 1e-12);
        assert!((ld - std::f64::consts::LN_2).abs() < 1e-12);

        let (x, ld_inv) = layer.inverse(&[1.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
        assert!((ld_inv + std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn mask_needs_both_halves() {
        let net = MlpParams::zeros(&[1, 1], Activation::Tanh).unwrap();
        assert!(CouplingLayer::new(vec![true, true], net.clone(), net, 2.0).is_err());
    }

    /// log |det J| from a central-difference Jacobian, LU-factorized. Test
    /// oracle only; shares nothing with the analytic path.
    fn numerical_log_abs_det(model_forward: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> f64 {
        let n = x.len();
        let h = 1e-6;
        let mut jac = vec![vec![0.0; n]; n];
        for col in 0..n {
            let mut plus = x.to_vec();
            plus[col] += h;
            let mut minus = x.to_vec();
            minus[col] -= h;
            let fp = model_forward(&plus);
            let fm = model_forward(&minus);
            for row in 0..n {
                jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        // LU with partial pivoting.
        let mut det: f64 = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| jac[a][col].abs().partial_cmp(&jac[b][col].abs()).unwrap())
                .unwrap();
            if pivot != col {
                jac.swap(pivot, col);
                det = -det;
            }
            det *= jac[col][col];
            for row in col + 1..n {
                let factor = jac[row][col] / jac[col][col];
                for k in col..n {
                    let v = jac[col][k];
                    jac[row][k] -= factor * v;
                }
            }
        }
        det.abs().ln()
    }

    #[test]
    fn log_det_matches_numerical_jacobian() {
        let mut rng = Rng::new(4);
        for trial in 0..20 {
            let shape = FlowShape {
                dim: 2 + trial % 3,
                num_layers: 1,
                hidden: vec![8],
                activation: Activation::Tanh,
                scale_clamp: 2.0,
            };
            let model = FlowModel::random_init(&shape, 100 + trial as u64).unwrap();
            let layer = &model.layers()[0];
            let x: Vec<f64> = (0..shape.dim).map(|_| rng.normal()).collect();
            let (_, analytic) = layer.forward(&x).unwrap();
            let numeric = numerical_log_abs_det(|v| layer.forward(v).unwrap().0, &x);
            let rel = (analytic - numeric).abs() / numeric.abs().max(1e-3);
            assert!(rel <= 1e-3, "trial {trial}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn flow_of_identity_layers_is_identity() {
        let shape = FlowShape::new(2);
        let model = FlowModel::identity_init(&shape).unwrap();
        let x = [0.25, -3.0];
        let (z, ld) = model.forward(&x).unwrap();
        assert_eq!(z, x.to_vec());
        assert_eq!(ld, 0.0);
        assert_eq!(model.inverse(&z).unwrap(), x.to_vec());
    }

    #[test]
    fn two_constant_layers_compose_by_hand() {
        // Layer 1 passes dim 0, layer 2 passes dim 1, both s = log 2, t = 1.
        let clamp = DEFAULT_SCALE_CLAMP;
        let l1 = log2_layer();
        let l2 = CouplingLayer::new(
            vec![false, true],
            constant_net(1, 1, std::f64::consts::LN_2, Some(clamp)),
            constant_net(1, 1, 1.0, None),
            clamp,
        )
        .unwrap();
        let model = FlowModel::new(2, vec![l1, l2]).unwrap();
        // (1,1) -> (1, 1*2+1) = (1,3) -> (1*2+1, 3) = (3,3).
        let (z, ld) = model.forward(&[1.0, 1.0]).unwrap();
        assert!((z[0] - 3.0).abs() < 1e-12);
        assert!((z[1] - 3.0).abs() < 1e-12);
        assert!((ld - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        // And back.
        let x = model.inverse(&z).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_log_det_is_sum_of_layer_log_dets() {
        let shape = FlowShape {
            dim: 2,
            num_layers: 4,
            hidden: vec![8],
            activation: Activation::Tanh,
            scale_clamp: 2.0,
        };
        let model = FlowModel::random_init(&shape, 5).unwrap();
        let x = [0.4, -0.9];
        let (_, total) = model.forward(&x).unwrap();
        let mut current = x.to_vec();
        let mut sum = 0.0;
        for layer in model.layers() {
            let (z, ld) = layer.forward(&current).unwrap();
            current = z;
            sum += ld;
        }
        assert!((total - sum).abs() < 1e-12);
    }

    #[test]
    fn random_round_trips_are_tight() {
        let shape = FlowShape {
            dim: 2,
            num_layers: 6,
            hidden: vec![16],
            activation: Activation::Tanh,
            scale_clamp: 2.0,
        };
        let model = FlowModel::random_init(&shape, 21).unwrap();
        let mut rng = Rng::new(6);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..2).map(|_| 2.0 * rng.normal()).collect();
            let (z, _) = model.forward(&x).unwrap();
            let back = model.inverse(&z).unwrap();
            for (a, b) in x.iter().zip(&back) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst <= 1e-6, "round-trip error {worst}");
    }

    #[test]
    fn log_prob_standard_normal_at_origin() {
        let shape = FlowShape::new(2);
        let mut model = FlowModel::identity_init(&shape).unwrap();
        model
            .register_attribute("a", DiagonalGaussian::standard(2))
            .unwrap();
        let lp = model.log_prob("a", &[0.0, 0.0]).unwrap();
        assert!((lp - (-(2.0 * std::f64::consts::PI).ln())).abs() < 1e-12);
    }

    #[test]
    fn log_prob_identity_flow_matches_prior() {
        let shape = FlowShape::new(2);
        let mut model = FlowModel::identity_init(&shape).unwrap();
        let prior = DiagonalGaussian::new(vec![0.5, -1.0], vec![0.7, 1.4]).unwrap();
        model.register_attribute("a", prior.clone()).unwrap();
        let x = [0.2, 0.9];
        let lp = model.log_prob("a", &x).unwrap();
        assert!((lp - gaussian_log_pdf(&prior, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn unknown_attribute_is_an_error() {
        let shape = FlowShape::new(2);
        let model = FlowModel::identity_init(&shape).unwrap();
        assert!(matches!(
            model.log_prob("ghost", &[0.0, 0.0]),
            Err(Error::UnknownAttribute(_))
        ));
    }

    #[test]
    fn density_ratio_between_attributes_is_jacobian_free() {
        let shape = FlowShape {
            dim: 2,
            num_layers: 4,
            hidden: vec![8],
            activation: Activation::Tanh,
            scale_clamp: 2.0,
        };
        let mut model = FlowModel::random_init(&shape, 99).unwrap();
        let g1 = DiagonalGaussian::new(vec![-1.0, 0.0], vec![0.8, 0.9]).unwrap();
        let g2 = DiagonalGaussian::new(vec![1.5, 0.5], vec![1.1, 0.7]).unwrap();
        model.register_attribute("a1", g1.clone()).unwrap();
        model.register_attribute("a2", g2.clone()).unwrap();
        let mut rng = Rng::new(8);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| rng.normal()).collect();
            let diff = model.log_prob("a1", &x).unwrap() - model.log_prob("a2", &x).unwrap();
            let (z, _) = model.forward(&x).unwrap();
            let prior_diff =
                gaussian_log_pdf(&g1, &z).unwrap() - gaussian_log_pdf(&g2, &z).unwrap();
            assert!((diff - prior_diff).abs() <= 1e-10, "{diff} vs {prior_diff}");
        }
    }
}
