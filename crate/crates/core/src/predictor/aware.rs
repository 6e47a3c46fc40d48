//! Context-aware retention regressor.
//!
//! One tanh hidden layer over `[features ⊕ r]` followed by a linear unit and
//! a sigmoid. The feature half of the first layer is evaluated once per
//! chunk and shared by every queried ratio.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, FeatureVector, FEATURE_DIM};
use super::{PredictorKind, RetentionPredictor};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwarePredictorModel {
    pub format_version: u32,
    pub feature_dim: usize,
    pub hidden: usize,
    pub activation: String,
    /// Per-feature offset and scale applied before the first layer; fixed
    /// from training-set statistics, not learned.
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    /// `hidden × (feature_dim + 1)`, row-major; the last column multiplies `r`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub feature_hash: String,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl AwarePredictorModel {
    pub fn zeros(hidden: usize) -> Self {
        let input = FEATURE_DIM + 1;
        AwarePredictorModel {
            format_version: MODEL_FORMAT_VERSION,
            feature_dim: FEATURE_DIM,
            hidden,
            activation: "tanh".into(),
            feature_mean: vec![0.0; FEATURE_DIM],
            feature_scale: vec![1.0; FEATURE_DIM],
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            feature_hash: FeatureConfig::default().hash(),
        }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(hidden);
        let input = m.input_dim();
        let a1 = (6.0 / (input + hidden) as f64).sqrt();
        m.w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..a1));
        let a2 = (6.0 / (hidden + 1) as f64).sqrt();
        m.w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..a2));
        m
    }

    pub fn input_dim(&self) -> usize {
        self.feature_dim + 1
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flattened parameters: `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend(&self.w1);
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count());
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, rest) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }

    /// Sets the input standardization to the mean and standard deviation of
    /// `rows`. Constant features keep a scale of 1.
    pub fn fit_standardization<'a>(&mut self, rows: impl IntoIterator<Item = &'a [f64]>) {
        let mut n = 0.0;
        let mut sum = vec![0.0; self.feature_dim];
        let mut sq = vec![0.0; self.feature_dim];
        for row in rows {
            n += 1.0;
            for ((s, q), x) in sum.iter_mut().zip(&mut sq).zip(row) {
                *s += x;
                *q += x * x;
            }
        }
        if n == 0.0 {
            return;
        }
        for i in 0..self.feature_dim {
            let mean = sum[i] / n;
            let std = (sq[i] / n - mean * mean).max(0.0).sqrt();
            self.feature_mean[i] = mean;
            self.feature_scale[i] = if std > 1e-9 { 1.0 / std } else { 1.0 };
        }
    }

    fn standardize(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_scale)
            .map(|((x, m), s)| (x - m) * s)
            .collect()
    }

    /// `b1 + W1[:, ..feature_dim] · x`, the ratio-independent part, where `x`
    /// is already standardized.
    fn feature_preactivation(&self, features: &[f64]) -> Vec<f64> {
        let input = self.input_dim();
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * input..j * input + self.feature_dim];
                self.b1[j] + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    fn head(&self, pre: &[f64], r: f64, hidden_out: &mut [f64]) -> f64 {
        let input = self.input_dim();
        let mut z = self.b2;
        for j in 0..self.hidden {
            let h = (pre[j] + self.w1[j * input + self.feature_dim] * r).tanh();
            hidden_out[j] = h;
            z += self.w2[j] * h;
        }
        sigmoid(z)
    }

    fn check_features(&self, features: &FeatureVector) -> Result<()> {
        if features.0.len() != self.feature_dim {
            return Err(Error::LengthMismatch {
                what: "feature vector",
                expected: self.feature_dim,
                actual: features.0.len(),
            });
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("features"));
        }
        Ok(())
    }

    /// Predicted retention for each ratio, in order.
    pub fn predict_ratios(&self, features: &FeatureVector, ratios: &[f64]) -> Result<Vec<f64>> {
        self.check_features(features)?;
        if let Some(&r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidRatio(r));
        }
        let pre = self.feature_preactivation(&self.standardize(&features.0));
        let mut scratch = vec![0.0; self.hidden];
        Ok(ratios.iter().map(|&r| self.head(&pre, r, &mut scratch)).collect())
    }

    /// Mean squared error of context-level predictions and its gradient with
    /// respect to [`params`](Self::params).
    pub fn loss_and_grad(&self, batch: &[&TrainingSample]) -> (f64, Vec<f64>) {
        let input = self.input_dim();
        let n_w1 = self.w1.len();
        let n_b1 = self.b1.len();
        let n_w2 = self.w2.len();
        let mut grad = vec![0.0; self.param_count()];
        let mut loss = 0.0;
        let targets: usize = batch.iter().map(|s| s.ratios.len()).sum();
        if targets == 0 {
            return (0.0, grad);
        }
        let scale = 1.0 / targets as f64;

        let mut hidden = vec![0.0; self.hidden];
        for sample in batch {
            let total_w: f64 = sample.chunks.iter().map(|c| c.weight).sum();
            let xs: Vec<Vec<f64>> = sample.chunks.iter().map(|c| self.standardize(&c.features.0)).collect();
            let pres: Vec<Vec<f64>> = xs.iter().map(|x| self.feature_preactivation(x)).collect();
            for (&r, &y) in sample.ratios.iter().zip(&sample.retentions) {
                let pred: f64 = sample
                    .chunks
                    .iter()
                    .zip(&pres)
                    .map(|(c, pre)| c.weight * self.head(pre, r, &mut hidden))
                    .sum::<f64>()
                    / total_w;
                let err = pred - y;
                loss += err * err * scale;
                let d_pred = 2.0 * err * scale;
                for ((c, pre), x) in sample.chunks.iter().zip(&pres).zip(&xs) {
                    let p = self.head(pre, r, &mut hidden);
                    let dz = d_pred * c.weight / total_w * p * (1.0 - p);
                    grad[n_w1 + n_b1 + n_w2] += dz;
                    for j in 0..self.hidden {
                        let h = hidden[j];
                        grad[n_w1 + n_b1 + j] += dz * h;
                        let da = dz * self.w2[j] * (1.0 - h * h);
                        grad[n_w1 + j] += da;
                        let row = &mut grad[j * input..(j + 1) * input];
                        for (g, x) in row[..self.feature_dim].iter_mut().zip(x) {
                            *g += da * x;
                        }
                        row[self.feature_dim] += da * r;
                    }
                }
            }
        }
        (loss, grad)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Loads a model and checks it against the runtime feature extractor.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &FeatureConfig::default().hash())
    }

    pub fn from_json(text: &str, expected_hash: &str) -> Result<Self> {
        let model: AwarePredictorModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Version {
                expected: MODEL_FORMAT_VERSION,
                found: model.format_version,
            });
        }
        if model.feature_hash != expected_hash {
            return Err(Error::HashMismatch {
                expected: expected_hash.to_owned(),
                found: model.feature_hash,
            });
        }
        let input = model.feature_dim + 1;
        if model.feature_mean.len() != model.feature_dim
            || model.feature_scale.len() != model.feature_dim
            || model.w1.len() != model.hidden * input
            || model.b1.len() != model.hidden
            || model.w2.len() != model.hidden
        {
            return Err(Error::LengthMismatch {
                what: "model weights",
                expected: model.hidden * (input + 2) + 1,
                actual: model.param_count(),
            });
        }
        if !model.is_finite() || model.feature_mean.iter().chain(&model.feature_scale).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model weights"));
        }
        Ok(model)
    }
}

impl RetentionPredictor for AwarePredictorModel {
    fn kind(&self) -> PredictorKind {
        PredictorKind::Aware
    }

    fn predict(&self, features: &FeatureVector, ratios: &[f64]) -> Result<Vec<f64>> {
        self.predict_ratios(features, ratios)
    }
}

/// A chunk's features and its share of the context's tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedFeatures {
    pub features: FeatureVector,
    pub weight: f64,
}

/// One context: its chunks, the sampled ratios and the measured retentions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub chunks: Vec<WeightedFeatures>,
    pub ratios: Vec<f64>,
    pub retentions: Vec<f64>,
}
