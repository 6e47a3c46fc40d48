//! Retention predictors.
//!
//! Two variants share the [`RetentionPredictor`] interface: a
//! context-agnostic spline through the mean calibration curve, and a
//! context-aware regressor over chunk features. Predictions are per chunk; a
//! context-level prediction is the token-weighted mean over its chunks.

pub mod aware;
pub mod features;
pub mod spline;
pub mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use aware::{AwarePredictorModel, TrainingSample, WeightedFeatures};
pub use features::{extract_features, FeatureConfig, FeatureVector, FEATURE_DIM};
pub use spline::{fit_spline, PerformanceCurve};
pub use train::{train_aware, TrainingConfig, TrainingLog};

use crate::error::{Error, Result};
use crate::pipeline::CalibrationRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Agnostic,
    Aware,
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictorKind::Agnostic => "agnostic",
            PredictorKind::Aware => "aware",
        })
    }
}

impl FromStr for PredictorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "agnostic" => Ok(PredictorKind::Agnostic),
            "aware" => Ok(PredictorKind::Aware),
            other => Err(format!("unknown predictor `{other}` (expected agnostic or aware)")),
        }
    }
}

/// Predicts performance retention of one chunk at each requested ratio.
pub trait RetentionPredictor: Send + Sync {
    fn kind(&self) -> PredictorKind;

    fn predict(&self, features: &FeatureVector, ratios: &[f64]) -> Result<Vec<f64>>;
}

/// Token-weighted mean of per-chunk predictions.
pub fn predict_context_with(
    predictor: &dyn RetentionPredictor,
    chunks: &[WeightedFeatures],
    ratios: &[f64],
) -> Result<Vec<f64>> {
    if chunks.is_empty() {
        return Err(Error::EmptyInput("chunk features"));
    }
    let total: f64 = chunks.iter().map(|c| c.weight).sum();
    let mut out = vec![0.0; ratios.len()];
    for c in chunks {
        let p = predictor.predict(&c.features, ratios)?;
        for (o, v) in out.iter_mut().zip(p) {
            *o += c.weight * v;
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMeta {
    pub dataset_id: String,
    pub sample_count: usize,
    pub knot_count: usize,
}

/// Mean calibration curve; its prediction depends on the ratio alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgnosticPredictor {
    pub format_version: u32,
    pub curve: PerformanceCurve,
    pub calibration_meta: CalibrationMeta,
}

impl AgnosticPredictor {
    pub fn from_curve(curve: PerformanceCurve, meta: CalibrationMeta) -> Self {
        AgnosticPredictor {
            format_version: aware::MODEL_FORMAT_VERSION,
            curve,
            calibration_meta: meta,
        }
    }

    pub fn predict_ratios(&self, ratios: &[f64]) -> Result<Vec<f64>> {
        ratios
            .iter()
            .map(|&r| self.curve.eval(r).map(|v| v.value()))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: AgnosticPredictor = serde_json::from_str(&text)?;
        if p.format_version != aware::MODEL_FORMAT_VERSION {
            return Err(Error::Version {
                expected: aware::MODEL_FORMAT_VERSION,
                found: p.format_version,
            });
        }
        Ok(p)
    }
}

impl RetentionPredictor for AgnosticPredictor {
    fn kind(&self) -> PredictorKind {
        PredictorKind::Agnostic
    }

    fn predict(&self, _features: &FeatureVector, ratios: &[f64]) -> Result<Vec<f64>> {
        self.predict_ratios(ratios)
    }
}

const KNOT_MATCH_TOL: f64 = 1e-12;

/// Knot value = mean retention across records at that ratio; a natural
/// spline through the means.
pub fn calibrate_agnostic(
    records: &[CalibrationRecord],
    knot_ratios: &[f64],
    dataset_id: &str,
) -> Result<AgnosticPredictor> {
    if records.is_empty() {
        return Err(Error::EmptyInput("calibration records"));
    }
    let mut means = Vec::with_capacity(knot_ratios.len());
    for &knot in knot_ratios {
        let mut sum = 0.0;
        for rec in records {
            let idx = rec
                .ratios
                .iter()
                .position(|r| (r - knot).abs() <= KNOT_MATCH_TOL)
                .ok_or(Error::MissingKnot(knot))?;
            sum += rec.retentions[idx];
        }
        means.push(sum / records.len() as f64);
    }
    let curve = fit_spline(knot_ratios, &means)?;
    Ok(AgnosticPredictor::from_curve(
        curve,
        CalibrationMeta {
            dataset_id: dataset_id.to_owned(),
            sample_count: records.len(),
            knot_count: knot_ratios.len(),
        },
    ))
}

/// Ratios sampled by every record, in increasing order.
pub fn common_ratios(records: &[CalibrationRecord]) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let mut knots: Vec<f64> = first
        .ratios
        .iter()
        .copied()
        .filter(|&k| {
            records[1..]
                .iter()
                .all(|r| r.ratios.iter().any(|x| (x - k).abs() <= KNOT_MATCH_TOL))
        })
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::Metric;

    fn record(id: &str, ratios: &[f64], retentions: &[f64]) -> CalibrationRecord {
        CalibrationRecord {
            schema_version: crate::pipeline::CALIBRATION_SCHEMA_VERSION,
            record_id: id.into(),
            dataset_tag: "t".into(),
            metric_name: Metric::F1,
            chunk_features: vec![FeatureVector(vec![0.0; FEATURE_DIM])],
            chunk_token_counts: vec![10],
            ratios: ratios.to_vec(),
            retentions: retentions.to_vec(),
            raw_scores: retentions.to_vec(),
            baseline_score: 1.0,
        }
    }

    #[test]
    fn single_record_is_interpolated() {
        let ks = [0.0, 0.5, 1.0];
        let p = calibrate_agnostic(&[record("a", &ks, &[0.0, 0.7, 1.0])], &ks, "d").unwrap();
        assert!((p.predict_ratios(&[0.5]).unwrap()[0] - 0.7).abs() < 1e-12);
        assert_eq!(p.calibration_meta.sample_count, 1);
    }

    #[test]
    fn opposite_records_average_to_flat() {
        let ks = [0.0, 0.25, 0.5, 0.75, 1.0];
        let recs = [record("a", &ks, &[0.0; 5]), record("b", &ks, &[1.0; 5])];
        let p = calibrate_agnostic(&recs, &ks, "d").unwrap();
        for r in [0.0, 0.1, 0.33, 0.9, 1.0] {
            assert!((p.predict_ratios(&[r]).unwrap()[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn context_independent() {
        let ks = [0.0, 0.5, 1.0];
        let p = calibrate_agnostic(&[record("a", &ks, &[0.1, 0.6, 1.0])], &ks, "d").unwrap();
        let f1 = FeatureVector(vec![0.2; FEATURE_DIM]);
        let f2 = FeatureVector(vec![0.9; FEATURE_DIM]);
        assert_eq!(p.predict(&f1, &[0.3]).unwrap(), p.predict(&f2, &[0.3]).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(calibrate_agnostic(&[], &[0.0, 1.0], "d"), Err(Error::EmptyInput(_))));
        let rec = record("a", &[0.0, 1.0], &[0.0, 1.0]);
        assert!(matches!(
            calibrate_agnostic(&[rec], &[0.0, 0.5, 1.0], "d"),
            Err(Error::MissingKnot(_))
        ));
    }

    #[test]
    fn common_ratio_intersection() {
        let a = record("a", &[1.0, 0.0, 0.5], &[1.0, 0.0, 0.5]);
        let b = record("b", &[0.0, 0.5, 0.25, 1.0], &[0.0; 4]);
        assert_eq!(common_ratios(&[a, b]), [0.0, 0.5, 1.0]);
    }

    #[test]
    fn weighted_context_prediction() {
        let ks = [0.0, 1.0];
        let p = calibrate_agnostic(&[record("a", &ks, &[0.0, 1.0])], &ks, "d").unwrap();
        let chunks = vec![
            WeightedFeatures { features: FeatureVector(vec![0.0; FEATURE_DIM]), weight: 3.0 },
            WeightedFeatures { features: FeatureVector(vec![1.0; FEATURE_DIM]), weight: 1.0 },
        ];
        let out = predict_context_with(&p, &chunks, &[0.4]).unwrap();
        assert!((out[0] - 0.4).abs() < 1e-12);
    }
}
