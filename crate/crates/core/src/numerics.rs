//! Small dense feed-forward networks with exact reverse-mode gradients, plus
//! the adaptive-moment optimizer that trains them. These are the scale and
//! translation subnets inside coupling layers; nothing here is a general
//! tensor library.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Activation applied to hidden layers. The output layer is always affine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation value.
    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::InvalidParameter(format!(
                "unknown activation: {other}"
            ))),
        }
    }
}

/// Parameters of a feed-forward net: `layer_widths` gives the width of every
/// layer including input and output; `weights[l]` is the row-major
/// `widths[l+1] x widths[l]` matrix of layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer_widths: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
}

/// Gradients (or any accumulator) shaped exactly like the parameters they track.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    /// All-zero parameters. A zero net maps every input to the zero vector.
    pub fn zeros(layer_widths: &[usize], activation: Activation) -> Result<Self> {
        if layer_widths.len() < 2 || layer_widths.contains(&0) {
            return Err(Error::InvalidParameter(
                "layer widths need at least input and output, all positive".into(),
            ));
        }
        let weights = layer_widths
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = layer_widths[1..].iter().map(|&w| vec![0.0; w]).collect();
        Ok(Self {
            layer_widths: layer_widths.to_vec(),
            weights,
            biases,
            activation,
        })
    }

    /// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    pub fn random_init(
        layer_widths: &[usize],
        activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut params = Self::zeros(layer_widths, activation)?;
        for (l, w) in params.weights.iter_mut().enumerate() {
            let bound = 1.0 / (layer_widths[l] as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.uniform_range(-bound, bound);
            }
        }
        Ok(params)
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Parameters flattened in a fixed order (weights then bias, per layer).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    /// Inverse of [`flatten`]; consumes `flat[offset..]` and advances the offset.
    pub fn assign_from_flat(&mut self, flat: &[f64], offset: &mut usize) {
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let len = w.len();
            w.copy_from_slice(&flat[*offset..*offset + len]);
            *offset += len;
            let len = b.len();
            b.copy_from_slice(&flat[*offset..*offset + len]);
            *offset += len;
        }
    }
}

impl MlpGrads {
    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            for x in w.iter_mut() {
                *x *= factor;
            }
        }
        for b in &mut self.biases {
            for x in b.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn squared_norm(&self) -> f64 {
        let w: f64 = self
            .weights
            .iter()
            .flat_map(|w| w.iter())
            .map(|x| x * x)
            .sum();
        let b: f64 = self
            .biases
            .iter()
            .flat_map(|b| b.iter())
            .map(|x| x * x)
            .sum();
        w + b
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

#[inline]
fn affine(weights: &[f64], bias: &[f64], input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let in_w = input.len();
    for (row, b) in bias.iter().enumerate() {
        let w_row = &weights[row * in_w..(row + 1) * in_w];
        let dot: f64 = w_row.iter().zip(input).map(|(w, x)| w * x).sum();
        out.push(dot + b);
    }
}

/// Deterministic forward pass. Hidden layers get the activation, the final
/// layer stays affine.
pub fn mlp_forward(params: &MlpParams, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != params.input_width() {
        return Err(Error::DimensionMismatch {
            expected: params.input_width(),
            got: input.len(),
        });
    }
    let last = params.weights.len() - 1;
    let mut current = input.to_vec();
    let mut next = Vec::new();
    for (l, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        affine(w, b, &current, &mut next);
        if l < last {
            for v in next.iter_mut() {
                *v = params.activation.apply(*v);
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

/// Intermediate state of a forward pass, kept so a backward pass can run
/// without re-evaluating the net.
#[derive(Debug, Clone)]
pub struct MlpForwardCache {
    layer_inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl MlpForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// Forward pass that retains what the backward pass needs.
pub fn mlp_forward_cached(params: &MlpParams, input: &[f64]) -> Result<MlpForwardCache> {
    if input.len() != params.input_width() {
        return Err(Error::DimensionMismatch {
            expected: params.input_width(),
            got: input.len(),
        });
    }
    let n_layers = params.weights.len();
    let last = n_layers - 1;
    let mut layer_inputs: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
    let mut pre_activations: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
    let mut current = input.to_vec();
    for (l, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let mut pre = Vec::new();
        affine(w, b, &current, &mut pre);
        layer_inputs.push(std::mem::take(&mut current));
        current = if l < last {
            pre.iter().map(|&v| params.activation.apply(v)).collect()
        } else {
            pre.clone()
        };
        pre_activations.push(pre);
    }
    Ok(MlpForwardCache {
        layer_inputs,
        pre_activations,
        output: current,
    })
}

/// Backward pass over a cached forward evaluation.
pub fn mlp_gradient_from_cache(
    params: &MlpParams,
    cache: &MlpForwardCache,
    output_cotangent: &[f64],
) -> Result<(MlpGrads, Vec<f64>)> {
    if output_cotangent.len() != params.output_width() {
        return Err(Error::DimensionMismatch {
            expected: params.output_width(),
            got: output_cotangent.len(),
        });
    }
    let n_layers = params.weights.len();
    let last = n_layers - 1;
    let mut grads = params.zero_grads();
    let mut delta = output_cotangent.to_vec();
    for l in (0..n_layers).rev() {
        if l < last {
            for (d, pre) in delta.iter_mut().zip(&cache.pre_activations[l]) {
                *d *= params.activation.derivative(*pre);
            }
        }
        let inp = &cache.layer_inputs[l];
        let in_w = inp.len();
        for (row, d) in delta.iter().enumerate() {
            grads.biases[l][row] = *d;
            let w_row = &mut grads.weights[l][row * in_w..(row + 1) * in_w];
            for (g, x) in w_row.iter_mut().zip(inp) {
                *g = d * x;
            }
        }
        // Propagate: delta_prev = W^T delta.
        let mut prev = vec![0.0; in_w];
        for (row, d) in delta.iter().enumerate() {
            let w_row = &params.weights[l][row * in_w..(row + 1) * in_w];
            for (p, w) in prev.iter_mut().zip(w_row) {
                *p += w * d;
            }
        }
        delta = prev;
    }
    Ok((grads, delta))
}

/// Reverse-mode gradients of the scalar `<output, cotangent>` with respect to
/// every parameter and to the input.
pub fn mlp_gradient(
    params: &MlpParams,
    input: &[f64],
    output_cotangent: &[f64],
) -> Result<(MlpGrads, Vec<f64>)> {
    let cache = mlp_forward_cached(params, input)?;
    mlp_gradient_from_cache(params, &cache, output_cotangent)
}

/// Hyperparameters of the adaptive-moment update.
#[derive(Debug, Clone, Copy)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected moment update over a flat parameter slice. Shared by the
/// MLP optimizer and by the prior-parameter updates during flow training.
pub fn adam_update_slice(
    hyper: &AdamHyper,
    step: u64,
    m: &mut [f64],
    v: &mut [f64],
    params: &mut [f64],
    grads: &[f64],
) {
    let b1 = hyper.beta1;
    let b2 = hyper.beta2;
    let bc1 = 1.0 - b1.powi(step as i32);
    let bc2 = 1.0 - b2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
    }
}

/// Optimizer state for one net: moment accumulators mirror the parameter shape.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub step: u64,
    pub hyper: AdamHyper,
    first_moment: MlpGrads,
    second_moment: MlpGrads,
}

impl OptimizerState {
    pub fn new(params: &MlpParams, hyper: AdamHyper) -> Self {
        Self {
            step: 0,
            hyper,
            first_moment: params.zero_grads(),
            second_moment: params.zero_grads(),
        }
    }
}

/// One optimizer step. Parameters move opposite the bias-corrected moment
/// ratio. Non-finite gradients are reported and the step is skipped, leaving
/// both state and parameters untouched.
pub fn optimizer_step(
    state: &mut OptimizerState,
    params: &mut MlpParams,
    grads: &MlpGrads,
) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    state.step += 1;
    for l in 0..params.weights.len() {
        adam_update_slice(
            &state.hyper,
            state.step,
            &mut state.first_moment.weights[l],
            &mut state.second_moment.weights[l],
            &mut params.weights[l],
            &grads.weights[l],
        );
        adam_update_slice(
            &state.hyper,
            state.step,
            &mut state.first_moment.biases[l],
            &mut state.second_moment.biases[l],
            &mut params.biases[l],
            &grads.biases[l],
        );
    }
    Ok(())
}
