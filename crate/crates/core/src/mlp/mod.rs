//! Fully connected sigmoid network used as the glyph recognizer.

mod model_file;
mod train;

pub use model_file::{decode_model, encode_model, read_model, write_model, Model, MODEL_HEADER};
pub use train::{
    accuracy, one_hot, train, Example, TrainMethod, TrainReport, TrainSpec, Trainer, TARGET_HIGH,
    TARGET_LOW,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpConfig {
    pub input_len: usize,
    pub hidden_lens: Vec<usize>,
    pub output_len: usize,
}

impl MlpConfig {
    /// One hidden layer 1.5 times the input length.
    pub fn with_default_hidden(input_len: usize, output_len: usize) -> Self {
        Self::with_hidden_layers(input_len, output_len, 1)
    }

    /// `layers` hidden layers: the first 1.5 times the input length, each
    /// later one half the previous.
    pub fn with_hidden_layers(input_len: usize, output_len: usize, layers: usize) -> Self {
        let mut hidden_lens = Vec::with_capacity(layers);
        let mut len = ((1.5 * input_len as f64).round() as usize).max(1);
        for _ in 0..layers {
            hidden_lens.push(len);
            len = (len / 2).max(1);
        }
        Self {
            input_len,
            hidden_lens,
            output_len,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || self.output_len == 0 || self.hidden_lens.contains(&0) {
            return Err(Error::Config("layer lengths must be >= 1".into()));
        }
        if !(1..=4).contains(&self.hidden_lens.len()) {
            return Err(Error::Config(format!(
                "{} hidden layers requested, expected 1 to 4",
                self.hidden_lens.len()
            )));
        }
        Ok(())
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_lens.len() + 2);
        sizes.push(self.input_len);
        sizes.extend(&self.hidden_lens);
        sizes.push(self.output_len);
        sizes
    }
}

/// Dense layer; `weights` is `fan_out × fan_in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    config: MlpConfig,
    layers: Vec<Layer>,
}

/// Gradient with the same layout as the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

impl Gradient {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.fan_in, l.fan_out))
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.biases.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    /// Parameters flattened in layer order, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w *= factor);
            l.biases.iter_mut().for_each(|b| *b *= factor);
        }
    }
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Mlp {
    /// Uniform weights in `[-1/√fan_in, 1/√fan_in]`, zero biases.
    pub fn init(config: MlpConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = config.layer_sizes();
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut layer = Layer::zeros(fan_in, fan_out);
                for v in &mut layer.weights {
                    *v = rng.gen_range(-bound..=bound);
                }
                layer
            })
            .collect();
        Ok(Self { config, layers })
    }

    /// Builds a network from explicit layers, checking that shapes chain.
    pub fn from_layers(config: MlpConfig, layers: Vec<Layer>) -> Result<Self> {
        config.validate()?;
        let sizes = config.layer_sizes();
        if layers.len() != sizes.len() - 1 {
            return Err(Error::Shape(format!(
                "{} layers supplied, configuration needs {}",
                layers.len(),
                sizes.len() - 1
            )));
        }
        for (i, (l, w)) in layers.iter().zip(sizes.windows(2)).enumerate() {
            if l.fan_in != w[0]
                || l.fan_out != w[1]
                || l.weights.len() != w[0] * w[1]
                || l.biases.len() != w[1]
            {
                return Err(Error::Shape(format!(
                    "layer {i} does not match {}->{}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Flat parameter view, in the order of [`Gradient::flatten`].
    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_param(&mut self, mut index: usize, value: f64) {
        for l in &mut self.layers {
            if index < l.weights.len() {
                l.weights[index] = value;
                return;
            }
            index -= l.weights.len();
            if index < l.biases.len() {
                l.biases[index] = value;
                return;
            }
            index -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.config.input_len {
            return Err(Error::Shape(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.config.input_len
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for layer in &self.layers {
            let prev = acts.last().expect("input present");
            let next = layer
                .weights
                .chunks_exact(layer.fan_in)
                .zip(&layer.biases)
                .map(|(row, b)| sigmoid(b + dot(row, prev)))
                .collect();
            acts.push(next);
        }
        acts
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.activations(input).pop().expect("output layer"))
    }

    /// Arg-max label and its output value; the lowest index wins ties.
    pub fn classify(&self, input: &[f64]) -> Result<(usize, f64)> {
        Ok(argmax(&self.forward(input)?))
    }

    /// Analytic gradient of the per-example squared error
    /// `Σ_k (y_k − t_k)²` with respect to every weight and bias.
    pub fn gradient(&self, input: &[f64], target: &[f64]) -> Result<Gradient> {
        self.check_input(input)?;
        if target.len() != self.config.output_len {
            return Err(Error::Shape(format!(
                "target has {} values, network has {} outputs",
                target.len(),
                self.config.output_len
            )));
        }
        let acts = self.activations(input);
        let mut grad = Gradient::zeros_like(self);
        let out = acts.last().expect("output");
        let mut delta: Vec<f64> = out
            .iter()
            .zip(target)
            .map(|(&y, &t)| 2.0 * (y - t) * y * (1.0 - y))
            .collect();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let prev = &acts[li];
            let g = &mut grad.layers[li];
            for (j, &d) in delta.iter().enumerate() {
                g.biases[j] += d;
                let row = &mut g.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                for (gw, &a) in row.iter_mut().zip(prev) {
                    *gw += d * a;
                }
            }
            if li > 0 {
                let mut next = vec![0.0; layer.fan_in];
                for (j, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                    for (n, &w) in next.iter_mut().zip(row) {
                        *n += d * w;
                    }
                }
                for (n, &a) in next.iter_mut().zip(prev) {
                    *n *= a * (1.0 - a);
                }
                delta = next;
            }
        }
        Ok(grad)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
}
