use std::borrow::Cow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Architecture, Network, Scalar, OUTPUTS};
use super::{encode_target, EstimatorModel};
use crate::error::{invalid, Result};
use crate::features::FeatureBatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub dropout: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub schedule: Schedule,
    /// Also train on every sample with its ears swapped.
    pub mirror: bool,
}

/// Learning-rate schedule over the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Schedule {
    #[default]
    Constant,
    /// Half-cosine from the base rate down to `final_fraction` of it.
    Cosine { final_fraction: f64 },
}

impl Schedule {
    /// Multiplier on the base rate at `step` of `total`.
    pub fn factor(self, step: usize, total: usize) -> f64 {
        match self {
            Schedule::Constant => 1.0,
            Schedule::Cosine { final_fraction } => {
                let t = if total > 1 { step as f64 / (total - 1) as f64 } else { 0.0 };
                final_fraction + (1.0 - final_fraction) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 50,
            learning_rate: 5e-4,
            epochs: 30,
            seed: 0,
            dropout: 0.3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            schedule: Schedule::Constant,
            mirror: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return invalid("batch_size must be at least 1 and learning_rate positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return invalid("dropout must lie in [0, 1)");
        }
        if let Schedule::Cosine { final_fraction } = self.schedule {
            if !(0.0..=1.0).contains(&final_fraction) {
                return invalid("final learning-rate fraction must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// Mean training loss of every epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    step: i32,
}

impl<T: Scalar> Adam<T> {
    fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [T], grad: &[T], cfg: &TrainConfig, rate: f64) {
        self.step += 1;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let one = T::one();
        let c1 = one - b1.powi(self.step);
        let c2 = one - b2.powi(self.step);
        let lr = T::of(rate);
        let eps = T::of(cfg.epsilon);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            *p = *p - lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

/// Initializes a network from `cfg.seed`, fits its input standardization
/// on `data` and trains it.
pub fn train(data: &FeatureBatch, arch: Architecture, cfg: &TrainConfig) -> Result<(EstimatorModel, TrainLog)> {
    cfg.validate()?;
    if data.is_empty() {
        return invalid("training set is empty");
    }
    let arch = Architecture {
        dropout: cfg.dropout,
        ..arch
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::<f32>::init(arch, &mut rng)?;
    let data = augmented(data, cfg)?;
    net.fit_standardization(&data.data, data.count())?;
    let log = train_generic(&mut net, &data, cfg)?;
    Ok((net, log))
}

/// Continues training an existing model; its standardization is kept.
pub fn fine_tune(model: &mut EstimatorModel, data: &FeatureBatch, cfg: &TrainConfig) -> Result<TrainLog> {
    let mut c = cfg.clone();
    c.dropout = model.arch.dropout;
    train_generic(model, &*augmented(data, cfg)?, &c)
}

fn augmented<'a>(data: &'a FeatureBatch, cfg: &TrainConfig) -> Result<Cow<'a, FeatureBatch>> {
    if !cfg.mirror {
        return Ok(Cow::Borrowed(data));
    }
    let mut both = data.clone();
    both.append(&data.mirrored()?)?;
    Ok(Cow::Owned(both))
}

/// Minibatch Adam on mean squared error of the sin/cos targets. Shuffling
/// and dropout draw from a stream seeded by `cfg.seed`.
pub fn train_generic<T: Scalar>(net: &mut Network<T>, data: &FeatureBatch, cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    let n = data.count();
    if n == 0 {
        return invalid("training set is empty");
    }
    let d = data.sample_size();
    if d != net.input_size() || net.arch.outputs() != OUTPUTS {
        return invalid("training data does not match the model input");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = Adam::new(net.params.len());
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = TrainLog::default();
    let mut x = Vec::with_capacity(cfg.batch_size * d);
    let mut targets = Vec::with_capacity(cfg.batch_size * OUTPUTS);
    let total_steps = cfg.epochs * n.div_ceil(cfg.batch_size);
    let mut step = 0;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            x.clear();
            targets.clear();
            for &i in idx {
                x.extend(data.sample(i).iter().map(|&v| T::of(v as f64)));
                let (a, b) = data.labels[i];
                targets.extend(encode_target(a, b).map(T::of));
            }
            let (l, grad) = loss_and_grad(net, &x, &targets, idx.len(), Some(&mut rng))?;
            total += l * idx.len() as f64;
            let rate = cfg.learning_rate * cfg.schedule.factor(step, total_steps);
            adam.update(&mut net.params, &grad, cfg, rate);
            step += 1;
        }
        log.epoch_loss.push(total / n as f64);
    }
    if !net.all_finite() {
        return Err(crate::error::Error::Numerical("training diverged".into()));
    }
    Ok(log)
}

/// Batch-mean squared error over all outputs and its parameter gradient.
pub fn loss_and_grad<T: Scalar>(
    net: &Network<T>,
    x: &[T],
    targets: &[T],
    count: usize,
    rng: Option<&mut dyn rand::RngCore>,
) -> Result<(f64, Vec<T>)> {
    let cache = net.forward(x, count, rng)?;
    if targets.len() != cache.output.len() {
        return invalid("target shape does not match the outputs");
    }
    let scale = T::of(2.0 / targets.len() as f64);
    let mut loss = 0.0;
    let d_out: Vec<T> = cache
        .output
        .iter()
        .zip(targets)
        .map(|(&o, &t)| {
            let e = o - t;
            loss += e.to_f64().unwrap_or(f64::NAN).powi(2);
            e * scale
        })
        .collect();
    let grad = net.backward(&cache, &d_out)?;
    Ok((loss / targets.len() as f64, grad))
}
