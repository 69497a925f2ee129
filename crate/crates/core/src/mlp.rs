//! Small fully connected regression network: ReLU hidden layers, identity
//! output, mean-squared-error loss, mini-batch SGD with momentum.
//!
//! Everything runs in `f64` and single-threaded so that a `(rows, config)`
//! pair always yields bit-identical weights.

use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{read_file, write_file};

const MAGIC: &[u8; 8] = b"MLPWv001";

/// Layer widths from input to output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::usage(
                "an MLP needs at least an input and an output layer, all non-empty",
            ));
        }
        Ok(Self { layer_sizes })
    }

    /// `input -> hidden... -> 1`
    pub fn regressor(input: usize, hidden: &[usize]) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self { layer_sizes: sizes }
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.layer_sizes[1..self.layer_sizes.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out x in`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Network weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Train against standardized targets and fold the scaling back into the
    /// output layer afterwards.
    pub normalize_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 256,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 42,
            normalize_targets: true,
        }
    }
}

/// Trained network plus per-epoch mean mini-batch loss (in target units when
/// targets were normalized: the loss is rescaled by the target variance).
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub mlp: Mlp,
    pub epoch_loss: Vec<f64>,
}

impl Mlp {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| Layer {
                weights: Array2::zeros((w[1], w[0])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Self {
            spec: spec.clone(),
            layers,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: &MlpSpec, rng: &mut impl Rng) -> Self {
        let mut mlp = Self::zeros(spec);
        for layer in &mut mlp.layers {
            let (fan_out, fan_in) = layer.weights.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            layer
                .weights
                .iter_mut()
                .for_each(|w| *w = rng.random_range(-limit..limit));
        }
        mlp
    }

    pub fn from_layers(spec: MlpSpec, layers: Vec<Layer>) -> Result<Self> {
        if layers.len() != spec.layer_sizes.len() - 1 {
            return Err(Error::usage("layer count does not match spec"));
        }
        for (l, w) in layers.iter().zip(spec.layer_sizes.windows(2)) {
            if l.weights.dim() != (w[1], w[0]) || l.bias.len() != w[1] {
                return Err(Error::usage("layer shape does not match spec"));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|x| !x.is_finite()) {
                return Err(Error::usage("non-finite weight"));
            }
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Single-sample forward pass; the first output unit is returned.
    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.spec.input_size() {
            return Err(Error::usage(format!(
                "input has {} features, network expects {}",
                input.len(),
                self.spec.input_size()
            )));
        }
        let mut act = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(layer.bias.len());
            for (row, &b) in layer.weights.outer_iter().zip(layer.bias.iter()) {
                let z = row.iter().zip(&act).fold(b, |acc, (w, a)| acc + w * a);
                next.push(if i < last { z.max(0.0) } else { z });
            }
            act = next;
        }
        Ok(act[0])
    }

    /// Batched forward pass; returns the first output column.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Array1<f64> {
        let (_, acts) = self.forward_cached(inputs);
        acts.last().expect("at least one layer").column(0).to_owned()
    }

    /// Pre-activations and activations of every layer (`acts[0]` is the input).
    fn forward_cached(&self, inputs: ArrayView2<f64>) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
        let last = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut acts = vec![inputs.to_owned()];
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&layer.weights.t());
            z += &layer.bias;
            let a = if i < last { z.mapv(|v| v.max(0.0)) } else { z.clone() };
            pre.push(z);
            acts.push(a);
        }
        (pre, acts)
    }

    /// Mean squared error over a batch.
    pub fn loss(&self, inputs: ArrayView2<f64>, targets: ArrayView1<f64>) -> f64 {
        let y = self.forward_batch(inputs);
        (&y - &targets).mapv(|d| d * d).mean().unwrap_or(0.0)
    }

    /// Loss and its gradient with respect to every layer's weights and bias.
    pub fn gradients(&self, inputs: ArrayView2<f64>, targets: ArrayView1<f64>) -> (f64, Vec<Layer>) {
        let b = inputs.nrows() as f64;
        let (pre, acts) = self.forward_cached(inputs);
        let y = acts.last().expect("output").column(0).to_owned();
        let diff = &y - &targets;
        let loss = diff.mapv(|d| d * d).sum() / b;
        let mut delta: Array2<f64> = (diff * (2.0 / b)).insert_axis(Axis(1));
        let mut grads = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let gw = delta.t().dot(&acts[l]);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut prev = delta.dot(&self.layers[l].weights);
                Zip::from(&mut prev).and(&pre[l - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = prev;
            }
            grads.push(Layer {
                weights: gw,
                bias: gb,
            });
        }
        grads.reverse();
        (loss, grads)
    }

    /// Hidden pre-activations for one sample, used to screen samples away
    /// from the ReLU kink before gradient checks.
    pub fn hidden_preactivations(&self, input: &[f64]) -> Vec<f64> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row shape");
        let (pre, _) = self.forward_cached(x);
        pre[..pre.len() - 1]
            .iter()
            .flat_map(|z| z.iter().copied().collect::<Vec<_>>())
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.write_u32::<LittleEndian>(self.spec.layer_sizes.len() as u32)
            .expect("vec write");
        for &s in &self.spec.layer_sizes {
            out.write_u32::<LittleEndian>(s as u32).expect("vec write");
        }
        for layer in &self.layers {
            for &w in layer.weights.iter().chain(layer.bias.iter()) {
                out.write_f64::<LittleEndian>(w).expect("vec write");
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::format(path, msg);
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(bad("not an MLP weight file"));
        }
        let mut cur = &bytes[MAGIC.len()..];
        let n = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))? as usize;
        if !(2..=64).contains(&n) {
            return Err(bad("implausible layer count"));
        }
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            sizes.push(cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))? as usize);
        }
        let spec = MlpSpec::new(sizes).map_err(|e| bad(&e.to_string()))?;
        let expected: usize = spec.layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        if cur.len() != expected * 8 {
            return Err(bad("weight block size does not match layer sizes"));
        }
        let mut layers = Vec::with_capacity(n - 1);
        for w in spec.layer_sizes.windows(2) {
            let weights: Vec<f64> = (0..w[0] * w[1])
                .map(|_| cur.read_f64::<LittleEndian>().expect("length checked"))
                .collect();
            let bias: Vec<f64> = (0..w[1])
                .map(|_| cur.read_f64::<LittleEndian>().expect("length checked"))
                .collect();
            layers.push(Layer {
                weights: Array2::from_shape_vec((w[1], w[0]), weights).expect("shape"),
                bias: Array1::from(bias),
            });
        }
        Mlp::from_layers(spec, layers).map_err(|e| bad(&e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?, path)
    }
}

/// Mini-batch MSE training with seeded initialization and shuffling.
pub fn train(
    spec: &MlpSpec,
    inputs: ArrayView2<f64>,
    targets: &[f64],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let n = inputs.nrows();
    if n == 0 || targets.len() != n {
        return Err(Error::usage("training needs a non-empty, matching set of rows"));
    }
    if inputs.ncols() != spec.input_size() {
        return Err(Error::usage("input width does not match the network"));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::usage("non-finite training target"));
    }
    if config.epochs == 0 || config.batch_size == 0 || config.batch_size > n {
        return Err(Error::usage(format!(
            "batch size {} must be in 1..={n} and epochs positive",
            config.batch_size
        )));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::usage("learning rate must be positive"));
    }

    let (t_mean, t_scale) = if config.normalize_targets {
        let mean = targets.iter().sum::<f64>() / n as f64;
        let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64;
        (mean, if var > 1e-24 { var.sqrt() } else { 1.0 })
    } else {
        (0.0, 1.0)
    };
    let scaled: Array1<f64> = targets.iter().map(|t| (t - t_mean) / t_scale).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mlp = Mlp::init(spec, &mut rng);
    let mut velocity = Mlp::zeros(spec);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut xb = Array2::<f64>::zeros((config.batch_size, inputs.ncols()));
    let mut tb = Array1::<f64>::zeros(config.batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let len = chunk.len();
            for (r, &i) in chunk.iter().enumerate() {
                xb.row_mut(r).assign(&inputs.row(i));
                tb[r] = scaled[i];
            }
            let (loss, grads) = mlp.gradients(xb.slice(s![..len, ..]), tb.slice(s![..len]));
            if !loss.is_finite() {
                return Err(Error::Training { epoch, loss });
            }
            total += loss * len as f64;
            for ((layer, vel), g) in mlp.layers.iter_mut().zip(&mut velocity.layers).zip(&grads) {
                Zip::from(&mut vel.weights)
                    .and(&mut layer.weights)
                    .and(&g.weights)
                    .for_each(|v, w, &g| {
                        *v = config.momentum * *v - config.learning_rate * g;
                        *w += *v;
                    });
                Zip::from(&mut vel.bias)
                    .and(&mut layer.bias)
                    .and(&g.bias)
                    .for_each(|v, w, &g| {
                        *v = config.momentum * *v - config.learning_rate * g;
                        *w += *v;
                    });
            }
        }
        let mean_loss = total / n as f64 * t_scale * t_scale;
        if !mean_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                loss: mean_loss,
            });
        }
        log::debug!("epoch {epoch} loss {mean_loss:.6e}");
        epoch_loss.push(mean_loss);
    }

    if config.normalize_targets {
        let out = mlp.layers.last_mut().expect("at least one layer");
        out.weights.mapv_inplace(|w| w * t_scale);
        out.bias.mapv_inplace(|b| b * t_scale + t_mean);
    }
    Ok(TrainOutcome { mlp, epoch_loss })
}

/// Largest relative error between backprop gradients and central finite
/// differences of the batch loss, over every parameter. Relative errors use
/// `max(|analytic| + |numeric|, 1e-6)` as the denominator so that vanishing
/// gradients compare absolutely.
pub fn gradient_check(mlp: &Mlp, inputs: ArrayView2<f64>, targets: ArrayView1<f64>, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(Error::usage("epsilon must be in (0, 1e-3]"));
    }
    let (_, grads) = mlp.gradients(inputs, targets);
    let mut probe = mlp.clone();
    let mut worst = 0.0f64;
    for l in 0..mlp.layers.len() {
        let (rows, cols) = mlp.layers[l].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let orig = mlp.layers[l].weights[[r, c]];
                probe.layers[l].weights[[r, c]] = orig + epsilon;
                let up = probe.loss(inputs, targets);
                probe.layers[l].weights[[r, c]] = orig - epsilon;
                let down = probe.loss(inputs, targets);
                probe.layers[l].weights[[r, c]] = orig;
                worst = worst.max(rel_err(grads[l].weights[[r, c]], (up - down) / (2.0 * epsilon)));
            }
        }
        for r in 0..rows {
            let orig = mlp.layers[l].bias[r];
            probe.layers[l].bias[r] = orig + epsilon;
            let up = probe.loss(inputs, targets);
            probe.layers[l].bias[r] = orig - epsilon;
            let down = probe.loss(inputs, targets);
            probe.layers[l].bias[r] = orig;
            worst = worst.max(rel_err(grads[l].bias[r], (up - down) / (2.0 * epsilon)));
        }
    }
    Ok(worst)
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

/// Per-feature mean and standard deviation, applied before a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Fits on the rows of `data`. Constant features keep a unit scale.
    pub fn fit(data: ArrayView2<f64>) -> Self {
        let n = data.nrows().max(1) as f64;
        let mean: Vec<f64> = data.mean_axis(Axis(0)).map_or_else(
            || vec![0.0; data.ncols()],
            |m| m.to_vec(),
        );
        let std = (0..data.ncols())
            .map(|j| {
                let var = data
                    .column(j)
                    .iter()
                    .map(|x| (x - mean[j]).powi(2))
                    .sum::<f64>()
                    / n;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply<T: crate::distance::Scalar>(&self, x: &[T]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v.to_f64() - m) / s)
            .collect()
    }

    pub fn apply_rows(&self, data: ArrayView2<f64>) -> Array2<f64> {
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }
}
