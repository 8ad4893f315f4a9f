//! Fully-connected feed-forward network trained one example at a time.
//!
//! Hidden layers use LeakyReLU, the output layer uses ReLU, so forecasts are
//! never negative. Weights start He-Normal, biases at zero, and every update
//! is an Adam step on the mean squared error of a single example.

mod adam;
mod checkpoint;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::adaptive::MemoryQueue;
use crate::error::{Error, Result};

pub use adam::AdamState;
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z >= 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation; at exactly zero the
    /// non-negative branch is used.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Relu => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub leaky_slope: f64,
    /// Passes over the memory per incremental update.
    pub epochs_per_step: usize,
    /// L2 penalty added to weight gradients. Zero disables it.
    pub weight_decay: f64,
    pub seed: u64,
    /// Let the forecaster flip output units that start dead on its first input.
    pub orient_outputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            leaky_slope: 0.01,
            epochs_per_step: 1,
            weight_decay: 0.0,
            seed: 0,
            orient_outputs: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.learning_rate) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::config(name, "must lie strictly between 0 and 1"));
            }
        }
        if !positive(self.epsilon) {
            return Err(Error::config("epsilon", "must be positive"));
        }
        if !positive(self.leaky_slope) {
            return Err(Error::config("leaky_slope", "must be positive"));
        }
        if self.epochs_per_step == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay", "must be non-negative"));
        }
        Ok(())
    }
}

/// Weights and biases of one layer, or anything shaped like them
/// (gradients, Adam moments).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Row-major `[fan_out x fan_in]`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LayerParams {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.biases)
    }
}

/// Per-layer gradients of the loss.
pub type Gradients = Vec<LayerParams>;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub params: LayerParams,
    pub activation: Activation,
}

impl Layer {
    fn affine(&self, input: &[f64]) -> Vec<f64> {
        self.params
            .weights
            .chunks_exact(self.fan_in)
            .zip(&self.params.biases)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
    adam: AdamState,
}

/// Pre-activations and activations of every layer for one input.
struct Trace {
    /// `activations[0]` is the input, `activations[k+1]` the output of layer k.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

/// Mean squared error over the horizon.
pub fn mse_loss(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::Shape {
            expected: target.len(),
            actual: predicted.len(),
        });
    }
    if target.is_empty() {
        return Err(Error::Shape {
            expected: 1,
            actual: 0,
        });
    }
    Ok(predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / target.len() as f64)
}

impl MlpModel {
    /// `arch` lists layer widths from input to output, e.g. `[7, 64, 1]`.
    pub fn init(arch: &[usize], cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if arch.len() < 2 {
            return Err(Error::config("arch", "need at least an input and an output size"));
        }
        if arch.contains(&0) {
            return Err(Error::config("arch", "layer sizes must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n_layers = arch.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for (k, pair) in arch.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                .map_err(|e| Error::Numeric(e.to_string()))?;
            let weights = (0..fan_in * fan_out).map(|_| normal.sample(&mut rng)).collect();
            let activation = if k + 1 == n_layers {
                Activation::Relu
            } else {
                Activation::LeakyRelu(cfg.leaky_slope)
            };
            layers.push(Layer {
                fan_in,
                fan_out,
                params: LayerParams {
                    weights,
                    biases: vec![0.0; fan_out],
                },
                activation,
            });
        }
        Ok(Self::from_layers(layers))
    }

    /// Wraps explicit layers with fresh optimizer state.
    pub fn from_layers(layers: Vec<Layer>) -> Self {
        let adam = AdamState::new(&layers);
        Self { layers, adam }
    }

    pub(crate) fn from_parts(layers: Vec<Layer>, adam: AdamState) -> Self {
        Self { layers, adam }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    /// Number of optimizer updates applied so far.
    pub fn step(&self) -> u64 {
        self.adam.step
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").fan_out
    }

    /// Layer widths from input to output.
    pub fn arch(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.fan_out))
            .collect()
    }

    fn trace(&self, x: &[f64]) -> Result<Trace> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite model input".into()));
        }
        let mut activations = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = layer.affine(activations.last().expect("non-empty"));
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("non-finite pre-activation".into()));
            }
            activations.push(z.iter().map(|v| layer.activation.apply(*v)).collect());
            pre.push(z);
        }
        Ok(Trace { activations, pre })
    }

    /// Negates the incoming weights of every output unit whose pre-activation
    /// on `x` is negative, so no ReLU output starts out dead on that input.
    /// With zero biases this maps one weight draw to an equally likely one.
    /// Returns the number of units flipped.
    pub fn orient_outputs(&mut self, x: &[f64]) -> Result<usize> {
        let trace = self.trace(x)?;
        let z = trace.pre.last().expect("at least one layer");
        let last = self.layers.last_mut().expect("at least one layer");
        let mut flipped = 0;
        for (j, zj) in z.iter().enumerate() {
            if *zj < 0.0 {
                let row = j * last.fan_in..(j + 1) * last.fan_in;
                last.params.weights[row].iter_mut().for_each(|w| *w = -*w);
                last.params.biases[j] = -last.params.biases[j];
                flipped += 1;
            }
        }
        Ok(flipped)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.activations.pop().expect("output layer"))
    }

    /// Exact gradients of the squared-error loss for one `(x, y)` pair.
    pub fn backward(&self, x: &[f64], y: &[f64]) -> Result<Gradients> {
        if y.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: self.output_dim(),
                actual: y.len(),
            });
        }
        let trace = self.trace(x)?;
        let out = trace.activations.last().expect("output layer");
        let scale = 2.0 / y.len() as f64;
        let mut delta: Vec<f64> = out.iter().zip(y).map(|(o, t)| scale * (o - t)).collect();

        let mut grads: Gradients = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate().rev() {
            for (d, z) in delta.iter_mut().zip(&trace.pre[k]) {
                *d *= layer.activation.derivative(*z);
            }
            let input = &trace.activations[k];
            let mut g = LayerParams::zeros(layer.fan_in, layer.fan_out);
            for (j, d) in delta.iter().enumerate() {
                let row = &mut g.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw = d * a;
                }
                g.biases[j] = *d;
            }
            if k > 0 {
                let mut prev = vec![0.0; layer.fan_in];
                for (j, d) in delta.iter().enumerate() {
                    let row = &layer.params.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                delta = prev;
            }
            grads.push(g);
        }
        grads.reverse();
        if grads.iter().flat_map(LayerParams::iter).any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        Ok(grads)
    }

    /// One Adam update with bias correction.
    pub fn adam_step(&mut self, grads: &Gradients, cfg: &TrainConfig) -> Result<()> {
        self.adam.apply(&mut self.layers, grads, cfg)
    }

    /// Passes over the memory `epochs_per_step` times, oldest example first,
    /// taking one optimizer step per example.
    pub fn train_increment(&mut self, memory: &MemoryQueue, cfg: &TrainConfig) -> Result<()> {
        if memory.is_empty() {
            return Err(Error::Precondition("incremental training needs a non-empty memory".into()));
        }
        for _ in 0..cfg.epochs_per_step {
            for example in memory.iter() {
                let mut grads = self.backward(&example.x, &example.y)?;
                if cfg.weight_decay > 0.0 {
                    for (g, layer) in grads.iter_mut().zip(&self.layers) {
                        for (gw, w) in g.weights.iter_mut().zip(&layer.params.weights) {
                            *gw += cfg.weight_decay * w;
                        }
                    }
                }
                self.adam_step(&grads, cfg)?;
            }
        }
        Ok(())
    }

    /// FNV-1a digest of every parameter's bit pattern.
    pub fn checksum(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325_u64;
        for v in self.layers.iter().flat_map(|l| l.params.iter()) {
            for byte in v.to_bits().to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        }
        hash
    }
}
