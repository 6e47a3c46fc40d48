//! Minibatch AdamW training of the context-aware model on MSE.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::aware::{AwarePredictorModel, TrainingSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Fraction of all optimizer steps spent in linear warmup.
    pub warmup_fraction: f64,
    pub seed: u64,
    /// Fraction of samples used for training; the rest is validation.
    pub train_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            hidden: 32,
            learning_rate: 1e-3,
            batch_size: 32,
            weight_decay: 0.01,
            epochs: 200,
            warmup_fraction: 0.02,
            seed: 0,
            train_fraction: 0.98,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction must be in [0, 1)");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must be in (0, 1)");
        }
        if self.batch_size == 0 || self.epochs == 0 || self.hidden == 0 {
            return bad("batch_size, epochs and hidden must be positive");
        }
        if self.weight_decay < 0.0 {
            return bad("weight_decay must be non-negative");
        }
        Ok(())
    }
}

/// Linear warmup to the peak rate, then linear decay to zero.
#[derive(Debug, Clone, Copy)]
pub struct LinearSchedule {
    pub peak: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
}

impl LinearSchedule {
    pub fn new(peak: f64, total_steps: usize, warmup_fraction: f64) -> Self {
        LinearSchedule {
            peak,
            warmup_steps: (warmup_fraction * total_steps as f64).ceil() as usize,
            total_steps,
        }
    }

    pub fn rate(&self, step: usize) -> f64 {
        if step < self.warmup_steps {
            self.peak * step as f64 / self.warmup_steps as f64
        } else {
            let remaining = self.total_steps.saturating_sub(step) as f64;
            let span = (self.total_steps - self.warmup_steps).max(1) as f64;
            self.peak * (remaining / span).max(0.0)
        }
    }
}

/// Adam with decoupled weight decay: `θ ← θ·(1 − lr·λ) − lr·m̂/(√v̂ + ε)`.
#[derive(Debug, Clone)]
pub struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamW {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamW {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, weight_decay: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] *= 1.0 - lr * weight_decay;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_ppe: Option<f64>,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    /// Validation PPE of the returned model, or training MSE when there is no
    /// validation split.
    pub best_score: f64,
    pub initial_train_mse: f64,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

/// Mean squared error of context-level predictions over every (sample, ratio) pair.
pub fn dataset_mse(model: &AwarePredictorModel, samples: &[&TrainingSample]) -> f64 {
    let mut sq = 0.0;
    let mut count = 0usize;
    for s in samples {
        let preds = super::predict_context_with(model, &s.chunks, &s.ratios)
            .expect("training samples are validated");
        for (p, y) in preds.iter().zip(&s.retentions) {
            sq += (p - y) * (p - y);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sq / count as f64
    }
}

fn validate_dataset(dataset: &[TrainingSample], feature_dim: usize) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("training dataset"));
    }
    for s in dataset {
        if s.chunks.is_empty() {
            return Err(Error::EmptyInput("training sample chunks"));
        }
        if s.ratios.len() != s.retentions.len() {
            return Err(Error::LengthMismatch {
                what: "retentions",
                expected: s.ratios.len(),
                actual: s.retentions.len(),
            });
        }
        for c in &s.chunks {
            if c.features.0.len() != feature_dim {
                return Err(Error::LengthMismatch {
                    what: "feature vector",
                    expected: feature_dim,
                    actual: c.features.0.len(),
                });
            }
            if !c.features.is_finite() || !c.weight.is_finite() || c.weight <= 0.0 {
                return Err(Error::NonFinite("training features"));
            }
        }
        if let Some(v) = s.ratios.iter().chain(&s.retentions).find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidRatio(*v));
        }
    }
    Ok(())
}

/// Trains from a fresh seeded initialization and returns the model with the
/// best validation PPE seen at the end of any epoch.
pub fn train_aware(
    dataset: &[TrainingSample],
    config: &TrainingConfig,
) -> Result<(AwarePredictorModel, TrainingLog)> {
    config.validate()?;
    let mut model = AwarePredictorModel::init(config.hidden, config.seed);
    validate_dataset(dataset, model.feature_dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let n_train = ((config.train_fraction * dataset.len() as f64).round() as usize)
        .clamp(1, dataset.len());
    let mut train_idx = order[..n_train].to_vec();
    let val_idx = order[n_train..].to_vec();
    let val: Vec<&TrainingSample> = val_idx.iter().map(|&i| &dataset[i]).collect();
    model.fit_standardization(
        train_idx
            .iter()
            .flat_map(|&i| dataset[i].chunks.iter().map(|c| c.features.as_slice())),
    );

    let steps_per_epoch = n_train.div_ceil(config.batch_size);
    let schedule = LinearSchedule::new(
        config.learning_rate,
        steps_per_epoch * config.epochs,
        config.warmup_fraction,
    );

    let mut params = model.params();
    let mut opt = AdamW::new(params.len(), config.beta1, config.beta2, config.eps);

    let train_all: Vec<&TrainingSample> = train_idx.iter().map(|&i| &dataset[i]).collect();
    let initial_train_mse = dataset_mse(&model, &train_all);
    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        train_idx.shuffle(&mut rng);
        let mut lr = 0.0;
        for batch_idx in train_idx.chunks(config.batch_size) {
            let batch: Vec<&TrainingSample> = batch_idx.iter().map(|&i| &dataset[i]).collect();
            let (loss, grad) = model.loss_and_grad(&batch);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, step, loss });
            }
            lr = schedule.rate(step);
            opt.step(&mut params, &grad, lr, config.weight_decay);
            model.set_params(&params);
            step += 1;
        }
        let train_all: Vec<&TrainingSample> = train_idx.iter().map(|&i| &dataset[i]).collect();
        let train_mse = dataset_mse(&model, &train_all);
        if !train_mse.is_finite() {
            return Err(Error::Diverged {
                epoch,
                step,
                loss: train_mse,
            });
        }
        let validation_ppe = (!val.is_empty()).then(|| dataset_mse(&model, &val));
        let score = validation_ppe.unwrap_or(train_mse);
        if score < best.0 {
            best = (score, epoch, model.clone());
        }
        log::debug!("epoch {epoch}: train mse {train_mse:.6}, val ppe {validation_ppe:?}");
        epochs.push(EpochLog {
            epoch,
            train_mse,
            validation_ppe,
            learning_rate: lr,
        });
    }

    let mut train_indices: Vec<usize> = order[..n_train].to_vec();
    train_indices.sort_unstable();
    let mut validation_indices = val_idx;
    validation_indices.sort_unstable();
    Ok((
        best.2,
        TrainingLog {
            epochs,
            best_epoch: best.1,
            best_score: best.0,
            initial_train_mse,
            train_indices,
            validation_indices,
        },
    ))
}
