//! Full-batch back-propagation with four update rules: plain gradient
//! descent, momentum, adaptive learning rate, and momentum with adaptive
//! learning rate.

use std::fmt;
use std::str::FromStr;

use super::{argmax, sigmoid, Gradient, Mlp};
use crate::error::{Error, Result};

/// One-hot targets use these levels to keep the sigmoid out of saturation.
pub const TARGET_HIGH: f64 = 0.9;
pub const TARGET_LOW: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrainMethod {
    /// Plain gradient descent.
    Gdbp,
    /// Gradient descent with momentum.
    Gdmbp,
    /// Gradient descent with adaptive learning rate.
    Gdalbp,
    /// Momentum and adaptive learning rate.
    Gdmalrbp,
}

impl TrainMethod {
    pub const ALL: [TrainMethod; 4] = [
        TrainMethod::Gdbp,
        TrainMethod::Gdmbp,
        TrainMethod::Gdalbp,
        TrainMethod::Gdmalrbp,
    ];

    pub fn uses_momentum(self) -> bool {
        matches!(self, TrainMethod::Gdmbp | TrainMethod::Gdmalrbp)
    }

    pub fn adapts_rate(self) -> bool {
        matches!(self, TrainMethod::Gdalbp | TrainMethod::Gdmalrbp)
    }

    pub fn name(self) -> &'static str {
        match self {
            TrainMethod::Gdbp => "GDBP",
            TrainMethod::Gdmbp => "GDMBP",
            TrainMethod::Gdalbp => "GDALBP",
            TrainMethod::Gdmalrbp => "GDMALRBP",
        }
    }
}

impl fmt::Display for TrainMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrainMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrainMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown training method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub method: TrainMethod,
    pub learning_rate: f64,
    pub momentum: f64,
    pub lr_increase: f64,
    pub lr_decrease: f64,
    /// A step whose MSE exceeds the previous MSE by more than this ratio is
    /// rejected (adaptive methods only).
    pub err_ratio_cap: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            method: TrainMethod::Gdmalrbp,
            learning_rate: 0.4,
            momentum: 0.9,
            lr_increase: 1.05,
            lr_decrease: 0.7,
            err_ratio_cap: 1.04,
            epochs: 1000,
            seed: 0,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.lr_increase >= 1.0) || !(self.lr_decrease > 0.0 && self.lr_decrease < 1.0) {
            return bad("rate factors need lr_increase >= 1 and 0 < lr_decrease < 1");
        }
        if !(self.err_ratio_cap >= 1.0) {
            return bad("err_ratio_cap must be >= 1");
        }
        if !(1..=10_000).contains(&self.epochs) {
            return bad("epochs must lie in 1..=10000");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// MSE of the kept weights after each epoch.
    pub mse_per_epoch: Vec<f64>,
    pub final_mse: f64,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub label: usize,
}

/// Target vector for `label`. A single-output network encodes a binary
/// label as the level of its one output.
pub fn one_hot(label: usize, classes: usize) -> Vec<f64> {
    if classes == 1 {
        return vec![if label == 1 { TARGET_HIGH } else { TARGET_LOW }];
    }
    (0..classes)
        .map(|k| if k == label { TARGET_HIGH } else { TARGET_LOW })
        .collect()
}

/// Training set with inputs' nonzero positions precomputed; glyph inputs
/// are mostly background, so the first layer only touches ink.
struct Batch {
    inputs: Vec<Vec<f64>>,
    nonzero: Vec<Vec<usize>>,
    targets: Vec<Vec<f64>>,
}

/// Reusable buffers for one batch pass. The first layer's weights and
/// gradient are kept input-major so each ink pixel touches one contiguous
/// column.
struct Scratch {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    first_t: Vec<f64>,
    first_grad_t: Vec<f64>,
}

impl Scratch {
    fn new(net: &Mlp) -> Self {
        let mut sizes = vec![net.config.input_len];
        sizes.extend(net.layers.iter().map(|l| l.fan_out));
        let first = net.layers[0].weights.len();
        Self {
            acts: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            deltas: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            first_t: vec![0.0; first],
            first_grad_t: vec![0.0; first],
        }
    }
}

/// Mean squared error over all examples and outputs, plus its gradient
/// written into `grad`. Examples are reduced in input order.
fn batch_pass(net: &Mlp, batch: &Batch, grad: &mut Gradient, scratch: &mut Scratch) -> f64 {
    grad.fill_zero();
    let n_layers = net.layers.len();
    let first = &net.layers[0];
    let (fan_in, hidden) = (first.fan_in, first.fan_out);
    for j in 0..hidden {
        for i in 0..fan_in {
            scratch.first_t[i * hidden + j] = first.weights[j * fan_in + i];
        }
    }
    scratch.first_grad_t.iter_mut().for_each(|v| *v = 0.0);
    let mut sse = 0.0;
    for ((input, nz), target) in batch.inputs.iter().zip(&batch.nonzero).zip(&batch.targets) {
        // Forward.
        {
            let out = &mut scratch.acts[1];
            out.copy_from_slice(&first.biases);
            for &i in nz {
                let x = input[i];
                let col = &scratch.first_t[i * hidden..(i + 1) * hidden];
                for (o, &w) in out.iter_mut().zip(col) {
                    *o += w * x;
                }
            }
            out.iter_mut().for_each(|o| *o = sigmoid(*o));
        }
        for li in 1..n_layers {
            let layer = &net.layers[li];
            let (lower, upper) = scratch.acts.split_at_mut(li + 1);
            let prev = &lower[li];
            for (j, o) in upper[0].iter_mut().enumerate() {
                let row = &layer.weights[j * layer.fan_in..(j + 1) * layer.fan_in];
                let z: f64 = row.iter().zip(prev.iter()).map(|(w, a)| w * a).sum();
                *o = sigmoid(layer.biases[j] + z);
            }
        }
        // Output error.
        {
            let out = &scratch.acts[n_layers];
            let delta = &mut scratch.deltas[n_layers];
            for k in 0..out.len() {
                let e = out[k] - target[k];
                sse += e * e;
                delta[k] = 2.0 * e * out[k] * (1.0 - out[k]);
            }
        }
        // Backward.
        for li in (0..n_layers).rev() {
            let layer = &net.layers[li];
            let g = &mut grad.layers[li];
            let (dl, du) = scratch.deltas.split_at_mut(li + 1);
            let delta = &du[0];
            if li == 0 {
                for (b, &d) in g.biases.iter_mut().zip(delta.iter()) {
                    *b += d;
                }
                for &i in nz {
                    let x = input[i];
                    let col = &mut scratch.first_grad_t[i * hidden..(i + 1) * hidden];
                    for (c, &d) in col.iter_mut().zip(delta.iter()) {
                        *c += d * x;
                    }
                }
            } else {
                let prev = &scratch.acts[li];
                let below = &mut dl[li];
                below.iter_mut().for_each(|v| *v = 0.0);
                for (j, &d) in delta.iter().enumerate() {
                    g.biases[j] += d;
                    let off = j * layer.fan_in;
                    let grow = &mut g.weights[off..off + layer.fan_in];
                    let wrow = &layer.weights[off..off + layer.fan_in];
                    for i in 0..layer.fan_in {
                        grow[i] += d * prev[i];
                        below[i] += d * wrow[i];
                    }
                }
                for (b, &a) in below.iter_mut().zip(prev.iter()) {
                    *b *= a * (1.0 - a);
                }
            }
        }
    }
    let g0 = &mut grad.layers[0].weights;
    for j in 0..hidden {
        for i in 0..fan_in {
            g0[j * fan_in + i] = scratch.first_grad_t[i * hidden + j];
        }
    }
    let count = (batch.inputs.len() * net.config.output_len) as f64;
    grad.scale(1.0 / count);
    sse / count
}

/// Incremental trainer; keeps learning-rate and momentum state between
/// calls to [`Trainer::run`], so a long run can be sampled at checkpoints.
pub struct Trainer {
    net: Mlp,
    trial: Mlp,
    batch: Batch,
    spec: TrainSpec,
    lr: f64,
    velocity: Gradient,
    grad: Gradient,
    trial_grad: Gradient,
    scratch: Scratch,
    mse: f64,
    history: Vec<f64>,
}

impl Trainer {
    pub fn new(net: Mlp, data: &[Example], spec: &TrainSpec) -> Result<Self> {
        spec.validate()?;
        if data.is_empty() {
            return Err(Error::Config("training set is empty".into()));
        }
        let classes = net.config.output_len;
        let mut batch = Batch {
            inputs: Vec::with_capacity(data.len()),
            nonzero: Vec::with_capacity(data.len()),
            targets: Vec::with_capacity(data.len()),
        };
        for ex in data {
            net.check_input(&ex.input)?;
            if ex.label >= classes.max(2) {
                return Err(Error::Config(format!(
                    "label {} does not fit {classes} outputs",
                    ex.label
                )));
            }
            batch.nonzero.push(
                (0..ex.input.len())
                    .filter(|&i| ex.input[i] != 0.0)
                    .collect(),
            );
            batch.inputs.push(ex.input.clone());
            batch.targets.push(one_hot(ex.label, classes));
        }
        let mut grad = Gradient::zeros_like(&net);
        let mut scratch = Scratch::new(&net);
        let mse = batch_pass(&net, &batch, &mut grad, &mut scratch);
        if !mse.is_finite() {
            return Err(Error::Divergence { epoch: 0, mse });
        }
        Ok(Self {
            trial: net.clone(),
            velocity: Gradient::zeros_like(&net),
            trial_grad: grad.clone(),
            net,
            batch,
            lr: spec.learning_rate,
            spec: spec.clone(),
            grad,
            scratch,
            mse,
            history: Vec::new(),
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn mse(&self) -> f64 {
        self.mse
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }

    pub fn report(&self) -> TrainReport {
        TrainReport {
            mse_per_epoch: self.history.clone(),
            final_mse: self.mse,
            epochs_run: self.history.len(),
        }
    }

    pub fn into_parts(self) -> (Mlp, TrainReport) {
        let report = self.report();
        (self.net, report)
    }

    /// Runs `epochs` more full-batch epochs.
    pub fn run(&mut self, epochs: usize) -> Result<()> {
        let method = self.spec.method;
        for _ in 0..epochs {
            // Propose a step from the kept weights.
            for ((t, w), (g, v)) in self
                .trial
                .layers
                .iter_mut()
                .zip(&self.net.layers)
                .zip(self.grad.layers.iter().zip(self.velocity.layers.iter_mut()))
            {
                let params = t.weights.iter_mut().chain(t.biases.iter_mut());
                let kept = w.weights.iter().chain(&w.biases);
                let grads = g.weights.iter().chain(&g.biases);
                let vels = v.weights.iter_mut().chain(v.biases.iter_mut());
                for (((p, &k), &gv), vel) in params.zip(kept).zip(grads).zip(vels) {
                    if method.uses_momentum() {
                        *vel = self.spec.momentum * *vel - self.lr * gv;
                        *p = k + *vel;
                    } else {
                        *p = k - self.lr * gv;
                    }
                }
            }
            let new_mse = batch_pass(
                &self.trial,
                &self.batch,
                &mut self.trial_grad,
                &mut self.scratch,
            );
            let epoch = self.history.len() + 1;
            if !new_mse.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    mse: new_mse,
                });
            }
            let accept = if method.adapts_rate() {
                if new_mse > self.spec.err_ratio_cap * self.mse {
                    self.lr *= self.spec.lr_decrease;
                    self.velocity.fill_zero();
                    false
                } else {
                    if new_mse < self.mse {
                        self.lr *= self.spec.lr_increase;
                    }
                    true
                }
            } else {
                true
            };
            if accept {
                std::mem::swap(&mut self.net, &mut self.trial);
                std::mem::swap(&mut self.grad, &mut self.trial_grad);
                self.mse = new_mse;
            }
            self.history.push(self.mse);
        }
        Ok(())
    }
}

/// Trains a copy of `net` for `spec.epochs` epochs.
pub fn train(net: &Mlp, data: &[Example], spec: &TrainSpec) -> Result<(Mlp, TrainReport)> {
    let mut trainer = Trainer::new(net.clone(), data, spec)?;
    trainer.run(spec.epochs)?;
    Ok(trainer.into_parts())
}

/// Fraction of examples whose arg-max output matches the label.
pub fn accuracy(net: &Mlp, data: &[Example]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("accuracy needs at least one example"));
    }
    let mut correct = 0;
    for ex in data {
        if argmax(&net.forward(&ex.input)?).0 == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::MlpConfig;

    fn xor() -> Vec<Example> {
        [
            ([0.0, 0.0], 0),
            ([0.0, 1.0], 1),
            ([1.0, 0.0], 1),
            ([1.0, 1.0], 0),
        ]
        .into_iter()
        .map(|(x, l)| Example {
            input: x.to_vec(),
            label: l,
        })
        .collect()
    }

    fn xor_net(seed: u64) -> Mlp {
        Mlp::init(
            MlpConfig {
                input_len: 2,
                hidden_lens: vec![4],
                output_len: 2,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn batch_gradient_matches_per_example_mean() {
        let net = xor_net(3);
        let data = xor();
        let spec = TrainSpec::default();
        let trainer = Trainer::new(net.clone(), &data, &spec).unwrap();
        let mut expected = Gradient::zeros_like(&net);
        for ex in &data {
            let g = net.gradient(&ex.input, &one_hot(ex.label, 2)).unwrap();
            for (e, l) in expected.layers.iter_mut().zip(&g.layers) {
                for (a, b) in e.weights.iter_mut().zip(&l.weights) {
                    *a += b;
                }
                for (a, b) in e.biases.iter_mut().zip(&l.biases) {
                    *a += b;
                }
            }
        }
        expected.scale(1.0 / 8.0);
        for (a, b) in trainer.grad.flatten().iter().zip(expected.flatten()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicated_examples_do_not_change_gradient() {
        let net = xor_net(8);
        let one = vec![xor()[1].clone()];
        let two = vec![xor()[1].clone(), xor()[1].clone()];
        let spec = TrainSpec::default();
        let a = Trainer::new(net.clone(), &one, &spec).unwrap();
        let b = Trainer::new(net, &two, &spec).unwrap();
        for (x, y) in a.grad.flatten().iter().zip(b.grad.flatten()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_rate_freezes_weights() {
        let net = xor_net(1);
        for method in TrainMethod::ALL {
            let spec = TrainSpec {
                method,
                learning_rate: 0.0,
                epochs: 20,
                ..Default::default()
            };
            let (trained, report) = train(&net, &xor(), &spec).unwrap();
            assert_eq!(trained, net);
            assert!(report
                .mse_per_epoch
                .iter()
                .all(|&m| m == report.mse_per_epoch[0]));
        }
    }

    #[test]
    fn xor_converges_with_plain_descent() {
        let data: Vec<Example> = xor();
        let mut solved = 0;
        let mut finals = Vec::new();
        for seed in 0..5 {
            let net = Mlp::init(
                MlpConfig {
                    input_len: 2,
                    hidden_lens: vec![4],
                    output_len: 1,
                },
                seed,
            )
            .unwrap();
            let spec = TrainSpec {
                method: TrainMethod::Gdbp,
                epochs: 4000,
                seed,
                ..Default::default()
            };
            let (_, report) = train(&net, &data, &spec).unwrap();
            finals.push(report.final_mse);
            if report.final_mse < 0.05 {
                solved += 1;
            }
        }
        assert!(solved >= 4, "solved {solved} of 5: {finals:?}");
    }

    #[test]
    fn training_is_deterministic() {
        let spec = TrainSpec {
            epochs: 200,
            ..Default::default()
        };
        let a = train(&xor_net(2), &xor(), &spec).unwrap();
        let b = train(&xor_net(2), &xor(), &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn report_invariants_and_adaptive_rules() {
        for method in TrainMethod::ALL {
            let spec = TrainSpec {
                method,
                epochs: 300,
                ..Default::default()
            };
            let mut trainer = Trainer::new(xor_net(4), &xor(), &spec).unwrap();
            let mut prev = trainer.mse();
            for _ in 0..300 {
                trainer.run(1).unwrap();
                assert!(trainer.learning_rate() > 0.0);
                if method.adapts_rate() {
                    assert!(trainer.mse() <= spec.err_ratio_cap * prev);
                }
                prev = trainer.mse();
            }
            let report = trainer.report();
            assert_eq!(report.epochs_run, 300);
            assert_eq!(report.final_mse, *report.mse_per_epoch.last().unwrap());
            assert!(report.mse_per_epoch.iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn checkpointed_run_equals_single_run() {
        let spec = TrainSpec {
            epochs: 120,
            method: TrainMethod::Gdmalrbp,
            ..Default::default()
        };
        let (whole, _) = train(&xor_net(6), &xor(), &spec).unwrap();
        let mut t = Trainer::new(xor_net(6), &xor(), &spec).unwrap();
        t.run(50).unwrap();
        t.run(70).unwrap();
        assert_eq!(t.net(), &whole);
    }

    #[test]
    fn trained_net_recognizes_training_exemplars() {
        let spec = TrainSpec {
            epochs: 2000,
            ..Default::default()
        };
        let (net, _) = train(&xor_net(0), &xor(), &spec).unwrap();
        for ex in xor() {
            let (label, conf) = net.classify(&ex.input).unwrap();
            assert_eq!(label, ex.label);
            assert!(conf > 0.8);
        }
        assert_eq!(accuracy(&net, &xor()).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        let spec = TrainSpec::default();
        assert!(matches!(
            Trainer::new(xor_net(0), &[], &spec),
            Err(Error::Config(_))
        ));
        let bad = vec![Example {
            input: vec![0.0, 1.0],
            label: 5,
        }];
        assert!(matches!(
            Trainer::new(xor_net(0), &bad, &spec),
            Err(Error::Config(_))
        ));
        let huge = TrainSpec {
            method: TrainMethod::Gdbp,
            learning_rate: 1e300,
            epochs: 10,
            ..Default::default()
        };
        let data = vec![Example {
            input: vec![1e300, 1e300],
            label: 0,
        }];
        // Either divergence or a finite result; never a silent NaN.
        if let Ok((_, r)) = train(&xor_net(0), &data, &huge) {
            assert!(r.final_mse.is_finite());
        }
        for bad in [
            TrainSpec {
                epochs: 0,
                ..Default::default()
            },
            TrainSpec {
                momentum: 1.0,
                ..Default::default()
            },
            TrainSpec {
                learning_rate: -1.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in TrainMethod::ALL {
            assert_eq!(m.name().parse::<TrainMethod>().unwrap(), m);
        }
        assert!("sgd".parse::<TrainMethod>().is_err());
    }
}
