//! Minimal single-hidden-layer perceptron with Adam training.
//!
//! The hidden layer is always tanh; the output layer is sigmoid or linear.
//! Weight initialization, minibatch shuffling and dropout all draw from a
//! seeded ChaCha generator, so training is bitwise reproducible for a fixed
//! seed. Callers own input/target normalization.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Adam moment decay rates, the usual defaults.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Sigmoid,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub output_activation: OutputActivation,
    pub seed: u64,
}

/// Network parameters. Matrices are row-major: `w1` is hidden x input,
/// `w2` is output x hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub config: MlpConfig,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub learning_rate: f64,
    pub minibatch_size: usize,
    pub epochs: usize,
    pub l2_penalty: f64,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            learning_rate: 0.001,
            minibatch_size: 100,
            epochs: 200,
            l2_penalty: 1e-4,
            dropout_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("weights are untrained or malformed")]
    Untrained,
}

/// Seeded uniform initialization scaled by 1/sqrt(fan_in).
pub fn init_weights(config: &MlpConfig) -> MlpWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lim1 = 1.0 / (config.input_dim as f64).sqrt();
    let lim2 = 1.0 / (config.hidden_dim as f64).sqrt();
    let draw = |n: usize, lim: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-lim..lim)).collect()
    };
    let w1 = draw(config.hidden_dim * config.input_dim, lim1, &mut rng);
    let b1 = draw(config.hidden_dim, lim1, &mut rng);
    let w2 = draw(config.output_dim * config.hidden_dim, lim2, &mut rng);
    let b2 = draw(config.output_dim, lim2, &mut rng);
    MlpWeights {
        config: config.clone(),
        w1,
        b1,
        w2,
        b2,
    }
}

impl MlpWeights {
    fn check(&self) -> Result<(), NeuralError> {
        let c = &self.config;
        if self.w1.len() != c.hidden_dim * c.input_dim
            || self.b1.len() != c.hidden_dim
            || self.w2.len() != c.output_dim * c.hidden_dim
            || self.b2.len() != c.output_dim
        {
            return Err(NeuralError::Untrained);
        }
        let finite = self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .all(|v| v.is_finite());
        if !finite {
            return Err(NeuralError::Untrained);
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hidden activations and outputs for one input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Forward pass returning intermediate activations, for callers that
/// backpropagate a custom loss through the output layer.
pub fn forward_with_cache(weights: &MlpWeights, input: &[f64]) -> Result<ForwardCache, NeuralError> {
    let c = &weights.config;
    if input.len() != c.input_dim {
        return Err(NeuralError::Dimension {
            expected: c.input_dim,
            got: input.len(),
        });
    }
    let mut hidden = vec![0.0; c.hidden_dim];
    for h in 0..c.hidden_dim {
        let mut acc = weights.b1[h];
        let row = &weights.w1[h * c.input_dim..(h + 1) * c.input_dim];
        for (w, x) in row.iter().zip(input) {
            acc += w * x;
        }
        hidden[h] = acc.tanh();
    }
    let mut output = vec![0.0; c.output_dim];
    for o in 0..c.output_dim {
        let mut acc = weights.b2[o];
        let row = &weights.w2[o * c.hidden_dim..(o + 1) * c.hidden_dim];
        for (w, h) in row.iter().zip(&hidden) {
            acc += w * h;
        }
        output[o] = match c.output_activation {
            OutputActivation::Sigmoid => sigmoid(acc),
            OutputActivation::Linear => acc,
        };
    }
    Ok(ForwardCache { hidden, output })
}

/// Plain inference forward pass.
pub fn forward(weights: &MlpWeights, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
    Ok(forward_with_cache(weights, input)?.output)
}

/// Parameter gradients in the same layout as [`MlpWeights`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    pub fn zeros(config: &MlpConfig) -> Self {
        Self {
            w1: vec![0.0; config.hidden_dim * config.input_dim],
            b1: vec![0.0; config.hidden_dim],
            w2: vec![0.0; config.output_dim * config.hidden_dim],
            b2: vec![0.0; config.output_dim],
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self
            .w1
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2)
            .chain(&mut self.b2)
        {
            *v *= s;
        }
    }
}

/// Accumulate parameter gradients for one sample given `dL/d(output)` taken
/// after the output activation. `hidden_mask` applies dropout scaling to
/// hidden units (use `None` for inference-style passes).
pub fn accumulate_gradients(
    weights: &MlpWeights,
    input: &[f64],
    cache: &ForwardCache,
    output_grad: &[f64],
    hidden_mask: Option<&[f64]>,
    grads: &mut Gradients,
) {
    let c = &weights.config;
    let masked_hidden: Vec<f64> = match hidden_mask {
        Some(mask) => cache.hidden.iter().zip(mask).map(|(h, m)| h * m).collect(),
        None => cache.hidden.clone(),
    };
    // output pre-activation gradient
    let mut dz2 = vec![0.0; c.output_dim];
    for o in 0..c.output_dim {
        let g = match c.output_activation {
            OutputActivation::Sigmoid => {
                let y = cache.output[o];
                output_grad[o] * y * (1.0 - y)
            }
            OutputActivation::Linear => output_grad[o],
        };
        dz2[o] = g;
        grads.b2[o] += g;
        let row = &mut grads.w2[o * c.hidden_dim..(o + 1) * c.hidden_dim];
        for (gw, h) in row.iter_mut().zip(&masked_hidden) {
            *gw += g * h;
        }
    }
    // hidden gradient through tanh (and dropout mask)
    for h in 0..c.hidden_dim {
        let mut acc = 0.0;
        for o in 0..c.output_dim {
            acc += dz2[o] * weights.w2[o * c.hidden_dim + h];
        }
        if let Some(mask) = hidden_mask {
            acc *= mask[h];
        }
        let g = acc * (1.0 - cache.hidden[h] * cache.hidden[h]);
        grads.b1[h] += g;
        let row = &mut grads.w1[h * c.input_dim..(h + 1) * c.input_dim];
        for (gw, x) in row.iter_mut().zip(input) {
            *gw += g * x;
        }
    }
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
}

impl AdamState {
    pub fn new(n_params: usize, beta1: f64, beta2: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1,
            beta2,
        }
    }

    /// One Adam update over (params, grads) pairs flattened in a fixed order.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut idx = 0;
        for (p_block, g_block) in params.iter_mut().zip(grads) {
            for (p, &g) in p_block.iter_mut().zip(g_block.iter()) {
                self.m[idx] = self.beta1 * self.m[idx] + (1.0 - self.beta1) * g;
                self.v[idx] = self.beta2 * self.v[idx] + (1.0 - self.beta2) * g * g;
                let mh = self.m[idx] / bc1;
                let vh = self.v[idx] / bc2;
                *p -= lr * mh / (vh.sqrt() + ADAM_EPSILON);
                idx += 1;
            }
        }
    }
}

fn param_count(c: &MlpConfig) -> usize {
    c.hidden_dim * c.input_dim + c.hidden_dim + c.output_dim * c.hidden_dim + c.output_dim
}

/// Apply one Adam step to a weight set from accumulated gradients, adding the
/// L2 term `l2 * w` to the weight-matrix gradients.
pub fn adam_step(
    weights: &mut MlpWeights,
    grads: &mut Gradients,
    adam: &mut AdamState,
    lr: f64,
    l2: f64,
) {
    if l2 > 0.0 {
        for (g, w) in grads.w1.iter_mut().zip(&weights.w1) {
            *g += l2 * w;
        }
        for (g, w) in grads.w2.iter_mut().zip(&weights.w2) {
            *g += l2 * w;
        }
    }
    adam.step(
        &mut [&mut weights.w1, &mut weights.b1, &mut weights.w2, &mut weights.b2],
        &[&grads.w1, &grads.b1, &grads.w2, &grads.b2],
        lr,
    );
}

/// Train on (input, target) pairs with minibatch Adam minimizing the mean
/// per-sample squared error `sum((y - t)^2)`.
pub fn train_adam(
    config: &MlpConfig,
    train: &TrainConfig,
    dataset: &[(Vec<f64>, Vec<f64>)],
) -> Result<MlpWeights, NeuralError> {
    if dataset.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    for (x, y) in dataset {
        if x.len() != config.input_dim {
            return Err(NeuralError::Dimension {
                expected: config.input_dim,
                got: x.len(),
            });
        }
        if y.len() != config.output_dim {
            return Err(NeuralError::Dimension {
                expected: config.output_dim,
                got: y.len(),
            });
        }
    }

    let mut weights = init_weights(config);
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut adam = AdamState::new(param_count(config), train.beta1, train.beta2);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let batch = train.minibatch_size.max(1);

    for _ in 0..train.epochs {
        shuffle(&mut order, &mut rng);
        for chunk in order.chunks(batch) {
            let mut grads = Gradients::zeros(config);
            let mask: Option<Vec<f64>> = if train.dropout_rate > 0.0 {
                Some(
                    (0..config.hidden_dim)
                        .map(|_| {
                            if rng.gen_range(0.0..1.0) < train.dropout_rate {
                                0.0
                            } else {
                                1.0 / (1.0 - train.dropout_rate)
                            }
                        })
                        .collect(),
                )
            } else {
                None
            };
            for &i in chunk {
                let (x, y) = &dataset[i];
                let mut cache = forward_with_cache(&weights, x)?;
                if let Some(mask) = &mask {
                    // recompute outputs with dropped hidden units
                    apply_mask_to_output(&weights, &mut cache, mask);
                }
                let output_grad: Vec<f64> = cache
                    .output
                    .iter()
                    .zip(y)
                    .map(|(o, t)| 2.0 * (o - t) / chunk.len() as f64)
                    .collect();
                accumulate_gradients(&weights, x, &cache, &output_grad, mask.as_deref(), &mut grads);
            }
            adam_step(&mut weights, &mut grads, &mut adam, train.learning_rate, train.l2_penalty);
        }
    }
    Ok(weights)
}

/// Recompute the output layer after masking hidden activations.
fn apply_mask_to_output(weights: &MlpWeights, cache: &mut ForwardCache, mask: &[f64]) {
    let c = &weights.config;
    for o in 0..c.output_dim {
        let mut acc = weights.b2[o];
        let row = &weights.w2[o * c.hidden_dim..(o + 1) * c.hidden_dim];
        for ((w, h), m) in row.iter().zip(&cache.hidden).zip(mask) {
            acc += w * h * m;
        }
        cache.output[o] = match c.output_activation {
            OutputActivation::Sigmoid => sigmoid(acc),
            OutputActivation::Linear => acc,
        };
    }
}

/// Fisher-Yates shuffle using the provided generator.
fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}

/// Mean squared error of a weight set over a dataset.
pub fn mse(weights: &MlpWeights, dataset: &[(Vec<f64>, Vec<f64>)]) -> Result<f64, NeuralError> {
    if dataset.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let mut acc = 0.0;
    for (x, y) in dataset {
        let out = forward(weights, x)?;
        acc += out.iter().zip(y).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
    }
    Ok(acc / dataset.len() as f64)
}

/// Compare analytic gradients of `sum((y - t)^2)` against central finite
/// differences with step 1e-5. Returns the maximum relative error, where
/// the denominator floors at 1e-2 to keep near-zero components meaningful.
pub fn gradient_check(weights: &MlpWeights, input: &[f64], target: &[f64]) -> Result<f64, NeuralError> {
    weights.check()?;
    let cache = forward_with_cache(weights, input)?;
    let output_grad: Vec<f64> = cache
        .output
        .iter()
        .zip(target)
        .map(|(o, t)| 2.0 * (o - t))
        .collect();
    let mut grads = Gradients::zeros(&weights.config);
    accumulate_gradients(weights, input, &cache, &output_grad, None, &mut grads);

    let loss = |w: &MlpWeights| -> f64 {
        let out = forward(w, input).unwrap();
        out.iter().zip(target).map(|(o, t)| (o - t) * (o - t)).sum()
    };

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let analytic = [&grads.w1, &grads.b1, &grads.w2, &grads.b2];
    for (block, ga_block) in [0usize, 1, 2, 3].iter().zip(analytic) {
        for i in 0..ga_block.len() {
            let mut plus = weights.clone();
            let mut minus = weights.clone();
            {
                let (p, m) = match block {
                    0 => (&mut plus.w1[i], &mut minus.w1[i]),
                    1 => (&mut plus.b1[i], &mut minus.b1[i]),
                    2 => (&mut plus.w2[i], &mut minus.w2[i]),
                    _ => (&mut plus.b2[i], &mut minus.b2[i]),
                };
                *p += h;
                *m -= h;
            }
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let ga = ga_block[i];
            let rel = (ga - numeric).abs() / ga.abs().max(numeric.abs()).max(1e-2);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
