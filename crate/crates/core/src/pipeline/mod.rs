//! Datasets, calibration records, readers and the end-to-end compression
//! driver.

pub mod collect;
pub mod poc;
pub mod reader;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use collect::{collect_calibration, measure_record, CollectConfig, CollectSummary, RatioSampler};
pub use poc::{poc_compress, ChunkDecision, PocReport, PreparedContext};
pub use reader::{HttpReader, ReaderConfig, ReaderError, ReaderKind, ReaderOracle};

use crate::bench::synth::TrueCurve;
use crate::error::{Error, Result};
use crate::predictor::{FeatureVector, TrainingSample, WeightedFeatures};
use crate::scoring::Metric;

pub const CALIBRATION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Qa,
    Summarization,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Qa => "qa",
            TaskKind::Summarization => "summarization",
        })
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "qa" => Ok(TaskKind::Qa),
            "summarization" => Ok(TaskKind::Summarization),
            other => Err(format!("unknown task kind `{other}`")),
        }
    }
}

/// One evaluation example: context, instruction and reference answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub context: String,
    pub instruction: String,
    pub answer: String,
    pub task_kind: TaskKind,
    /// Groups records for per-dataset curve output.
    #[serde(default)]
    pub tag: String,
    /// Analytic retention curve, present for generated records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TrueCurve>,
}

/// Retentions of one context measured at several ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub schema_version: u32,
    pub record_id: String,
    pub dataset_tag: String,
    pub metric_name: Metric,
    pub chunk_features: Vec<FeatureVector>,
    pub chunk_token_counts: Vec<usize>,
    pub ratios: Vec<f64>,
    pub retentions: Vec<f64>,
    /// Unnormalized task scores at each ratio.
    pub raw_scores: Vec<f64>,
    pub baseline_score: f64,
}

impl CalibrationRecord {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CALIBRATION_SCHEMA_VERSION {
            return Err(Error::Version {
                expected: CALIBRATION_SCHEMA_VERSION,
                found: self.schema_version,
            });
        }
        let n = self.ratios.len();
        for (what, len) in [
            ("retentions", self.retentions.len()),
            ("raw_scores", self.raw_scores.len()),
        ] {
            if len != n {
                return Err(Error::LengthMismatch {
                    what,
                    expected: n,
                    actual: len,
                });
            }
        }
        if self.chunk_features.len() != self.chunk_token_counts.len() {
            return Err(Error::LengthMismatch {
                what: "chunk_token_counts",
                expected: self.chunk_features.len(),
                actual: self.chunk_token_counts.len(),
            });
        }
        if let Some(v) = self
            .ratios
            .iter()
            .chain(&self.retentions)
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidRatio(*v));
        }
        Ok(())
    }

    /// Retention at `r`, if that ratio was sampled.
    pub fn retention_at(&self, r: f64) -> Option<f64> {
        self.ratios
            .iter()
            .position(|x| (x - r).abs() <= 1e-12)
            .map(|i| self.retentions[i])
    }

    pub fn to_training_sample(&self) -> TrainingSample {
        TrainingSample {
            chunks: self
                .chunk_features
                .iter()
                .zip(&self.chunk_token_counts)
                .map(|(f, &n)| WeightedFeatures {
                    features: f.clone(),
                    weight: n as f64,
                })
                .collect(),
            ratios: self.ratios.clone(),
            retentions: self.retentions.clone(),
        }
    }
}

/// Checks that every record uses the same metric.
pub fn check_metric_consistency(records: &[CalibrationRecord]) -> Result<()> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.metric_name != first.metric_name) {
            return Err(Error::MetricMismatch {
                left: first.metric_name.to_string(),
                right: other.metric_name.to_string(),
            });
        }
    }
    Ok(())
}
