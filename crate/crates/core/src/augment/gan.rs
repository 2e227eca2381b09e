//! A small fully-connected GAN for one-dimensional spectra.
//!
//! Generator: noise → ReLU hidden layers → linear output. Discriminator:
//! spectrum → ReLU hidden layers → one logit (sigmoid gives D(x)). Both are
//! trained with momentum SGD. The discriminator minimizes the binary
//! cross-entropy of the minimax objective; the generator uses the
//! non-saturating loss −E[log D(G(Z))].
//!
//! Training data are standardized per channel and the generator learns in
//! that space; [`Generator::sample`] maps back to the original scale.

use std::io::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::RngSeed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: RngSeed,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            noise_dim: 32,
            generator_hidden: vec![64, 128],
            discriminator_hidden: vec![128, 64],
            learning_rate: 1e-3,
            momentum: 0.9,
            epochs: 2000,
            batch_size: 32,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// outputs × inputs
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Multi-layer perceptron with ReLU hidden units and a linear last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

pub struct ForwardCache {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
}

pub type Gradients = Vec<(Array2<f64>, Array1<f64>)>;

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Mlp {
    /// He-uniform initialization.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..limit)),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Mlp { layers })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].weights.ncols()];
        s.extend(self.layers.iter().map(|l| l.weights.nrows()));
        s
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> (Array2<f64>, ForwardCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weights.t()) + &layer.bias;
            inputs.push(a);
            a = if i == last { z.clone() } else { z.mapv(relu) };
            pre.push(z);
        }
        (a, ForwardCache { inputs, pre })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(x).0
    }

    /// Backpropagates `d_out` (gradient w.r.t. the linear output); returns
    /// parameter gradients and the gradient w.r.t. the input.
    pub fn backward(&self, cache: &ForwardCache, d_out: Array2<f64>) -> (Gradients, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d = d_out;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let dw = d.t().dot(&cache.inputs[i]);
            let db = d.sum_axis(Axis(0));
            let mut dx = d.dot(&layer.weights);
            if i > 0 {
                dx.zip_mut_with(&cache.pre[i - 1], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                });
            }
            grads.push((dw, db));
            d = dx;
        }
        grads.reverse();
        (grads, d)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.parameter_count());
        let mut it = p.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = *it.next().unwrap();
            }
        }
    }

    pub fn flatten(grads: &Gradients) -> Vec<f64> {
        grads
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

/// Momentum SGD state for one network.
struct Momentum {
    velocity: Gradients,
    lr: f64,
    mu: f64,
}

impl Momentum {
    fn new(net: &Mlp, lr: f64, mu: f64) -> Self {
        Momentum {
            velocity: net
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
                .collect(),
            lr,
            mu,
        }
    }

    fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        for ((layer, (vw, vb)), (gw, gb)) in net.layers.iter_mut().zip(&mut self.velocity).zip(grads) {
            vw.zip_mut_with(gw, |v, g| *v = self.mu * *v - self.lr * g);
            vb.zip_mut_with(gb, |v, g| *v = self.mu * *v - self.lr * g);
            layer.weights += &*vw;
            layer.bias += &*vb;
        }
    }
}

fn add_into(acc: &mut Gradients, other: &Gradients) {
    for ((aw, ab), (ow, ob)) in acc.iter_mut().zip(other) {
        *aw += ow;
        *ab += ob;
    }
}

/// Discriminator cross-entropy `mean softplus(−l_real) + mean softplus(l_fake)`
/// and its parameter gradients.
pub fn discriminator_loss_and_grad(d: &Mlp, real: ArrayView2<f64>, fake: ArrayView2<f64>) -> (f64, Gradients) {
    let (lr, cr) = d.forward(real);
    let (lf, cf) = d.forward(fake);
    let nr = real.nrows() as f64;
    let nf = fake.nrows() as f64;
    let loss = lr.iter().map(|&l| softplus(-l)).sum::<f64>() / nr + lf.iter().map(|&l| softplus(l)).sum::<f64>() / nf;
    let (mut g, _) = d.backward(&cr, lr.mapv(|l| (sigmoid(l) - 1.0) / nr));
    let (gf, _) = d.backward(&cf, lf.mapv(|l| sigmoid(l) / nf));
    add_into(&mut g, &gf);
    (loss, g)
}

/// Non-saturating generator loss `mean softplus(−D_logit(G(z)))` and the
/// generator's parameter gradients (the discriminator is held fixed).
pub fn generator_loss_and_grad(g: &Mlp, d: &Mlp, z: ArrayView2<f64>) -> (f64, Gradients, Array2<f64>) {
    let (fake, cg) = g.forward(z);
    let (lf, cd) = d.forward(fake.view());
    let n = z.nrows() as f64;
    let loss = lf.iter().map(|&l| softplus(-l)).sum::<f64>() / n;
    let (_, dx) = d.backward(&cd, lf.mapv(|l| (sigmoid(l) - 1.0) / n));
    let (grads, _) = g.backward(&cg, dx);
    (loss, grads, lf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// −(E[log D(x)] + E[log(1 − D(G(Z)))]), the discriminator's objective.
    pub d_loss: f64,
    /// E[log(1 − D(G(Z)))], the generator's term of the minimax objective.
    pub g_loss: f64,
}

pub fn write_training_log(log: &[EpochLoss], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("epoch,d_loss,g_loss\n");
    for e in log {
        out.push_str(&format!("{},{},{}\n", e.epoch, e.d_loss, e.g_loss));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub net: Mlp,
    pub channel_mean: Array1<f64>,
    pub channel_scale: Array1<f64>,
}

impl Generator {
    pub fn noise_dim(&self) -> usize {
        self.net.input_width()
    }

    pub fn output_width(&self) -> usize {
        self.net.output_width()
    }

    /// Maps noise rows to spectra on the original scale.
    pub fn generate(&self, z: ArrayView2<f64>) -> Array2<f64> {
        let mut out = self.net.predict(z);
        for mut row in out.rows_mut() {
            row.zip_mut_with(&self.channel_scale, |v, s| *v *= s);
            row += &self.channel_mean;
        }
        out
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Array2<f64> {
        let z = Array2::from_shape_simple_fn((n, self.noise_dim()), || rng.sample(StandardNormal));
        self.generate(z.view())
    }

    pub fn to_params(&self) -> GeneratorParams {
        GeneratorParams {
            noise_dim: self.noise_dim(),
            layer_sizes: self.net.sizes(),
            weights: self
                .net
                .layers
                .iter()
                .map(|l| l.weights.iter().copied().collect())
                .collect(),
            biases: self.net.layers.iter().map(|l| l.bias.to_vec()).collect(),
            channel_mean: self.channel_mean.to_vec(),
            channel_scale: self.channel_scale.to_vec(),
        }
    }

    pub fn from_params(p: &GeneratorParams) -> Result<Self> {
        let sizes = &p.layer_sizes;
        if sizes.len() < 2
            || sizes[0] != p.noise_dim
            || p.weights.len() != sizes.len() - 1
            || p.biases.len() != sizes.len() - 1
        {
            return Err(Error::invalid("inconsistent generator layer description"));
        }
        let layers = sizes
            .windows(2)
            .zip(p.weights.iter().zip(&p.biases))
            .map(|(w, (weights, bias))| {
                let weights = Array2::from_shape_vec((w[1], w[0]), weights.clone())
                    .map_err(|_| Error::invalid("generator weight array has the wrong length"))?;
                if bias.len() != w[1] {
                    return Err(Error::invalid("generator bias array has the wrong length"));
                }
                Ok(Dense {
                    weights,
                    bias: Array1::from(bias.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let out = *sizes.last().unwrap();
        if p.channel_mean.len() != out || p.channel_scale.len() != out {
            return Err(Error::invalid(
                "generator scaling vectors do not match the output width",
            ));
        }
        Ok(Generator {
            net: Mlp { layers },
            channel_mean: Array1::from(p.channel_mean.clone()),
            channel_scale: Array1::from(p.channel_scale.clone()),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(&self.to_params()).expect("generator serializes");
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(json.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: GeneratorParams = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::from_params(&p)
    }
}

/// Serialized generator: layer sizes plus row-major (outputs × inputs)
/// weight arrays per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub noise_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub channel_mean: Vec<f64>,
    pub channel_scale: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedGan {
    pub generator: Generator,
    pub discriminator: Mlp,
    pub log: Vec<EpochLoss>,
}

impl TrainedGan {
    /// D(x) for each row of `x` on the original scale.
    pub fn discriminate(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let mut s = x.to_owned();
        for mut row in s.rows_mut() {
            row -= &self.generator.channel_mean;
            row.zip_mut_with(&self.generator.channel_scale, |v, sc| *v /= sc);
        }
        self.discriminator
            .predict(s.view())
            .iter()
            .map(|&l| sigmoid(l))
            .collect()
    }
}

fn check_config(config: &GanConfig) -> Result<()> {
    if config.noise_dim == 0 || config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::invalid("noise_dim, batch_size and epochs must be at least 1"));
    }
    if config.generator_hidden.contains(&0) || config.discriminator_hidden.contains(&0) {
        return Err(Error::invalid("hidden layer widths must be at least 1"));
    }
    if !(config.learning_rate > 0.0) || !(0.0..1.0).contains(&config.momentum) {
        return Err(Error::invalid("learning rate must be positive and momentum in [0, 1)"));
    }
    Ok(())
}

/// Trains a GAN on the rows of `real` (one spectrum per row).
pub fn train_gan(real: ArrayView2<f64>, config: &GanConfig) -> Result<TrainedGan> {
    check_config(config)?;
    let (n, width) = real.dim();
    if n < 2 * config.batch_size {
        return Err(Error::invalid(format!(
            "GAN training needs at least {} samples (2 × batch size), got {n}",
            2 * config.batch_size
        )));
    }
    let mut rng = config.seed.rng();

    let channel_mean = real.mean_axis(Axis(0)).unwrap();
    let channel_scale = real.std_axis(Axis(0), 1.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
    let mut data = real.to_owned();
    for mut row in data.rows_mut() {
        row -= &channel_mean;
        row.zip_mut_with(&channel_scale, |v, s| *v /= s);
    }

    let mut g_sizes = vec![config.noise_dim];
    g_sizes.extend(&config.generator_hidden);
    g_sizes.push(width);
    let mut d_sizes = vec![width];
    d_sizes.extend(&config.discriminator_hidden);
    d_sizes.push(1);
    let mut gen = Mlp::new(&g_sizes, &mut rng)?;
    let mut disc = Mlp::new(&d_sizes, &mut rng)?;
    let mut g_opt = Momentum::new(&gen, config.learning_rate, config.momentum);
    let mut d_opt = Momentum::new(&disc, config.learning_rate, config.momentum);

    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut d_sum, mut g_sum, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            let b = chunk.len();
            let real_batch = data.select(Axis(0), chunk);
            let z = Array2::from_shape_simple_fn((b, config.noise_dim), || rng.sample(StandardNormal));
            let fake = gen.predict(z.view());
            let (d_loss, d_grads) = discriminator_loss_and_grad(&disc, real_batch.view(), fake.view());
            d_opt.step(&mut disc, &d_grads);

            let z = Array2::from_shape_simple_fn((b, config.noise_dim), || rng.sample(StandardNormal));
            let (_, g_grads, logits) = generator_loss_and_grad(&gen, &disc, z.view());
            g_opt.step(&mut gen, &g_grads);

            // log(1 − σ(l)) = −softplus(l)
            let g_term = -logits.iter().map(|&l| softplus(l)).sum::<f64>() / b as f64;
            d_sum += d_loss;
            g_sum += g_term;
            batches += 1;
        }
        let d_loss = d_sum / batches as f64;
        let g_loss = g_sum / batches as f64;
        if !d_loss.is_finite() || !g_loss.is_finite() {
            return Err(Error::ConvergenceFailure(format!(
                "GAN losses diverged at epoch {epoch}"
            )));
        }
        log.push(EpochLoss { epoch, d_loss, g_loss });
    }

    Ok(TrainedGan {
        generator: Generator {
            net: gen,
            channel_mean,
            channel_scale,
        },
        discriminator: disc,
        log,
    })
}
