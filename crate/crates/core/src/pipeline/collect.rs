//! Calibration data collection: measure each record's retention at a set of
//! ratios and append the results to a JSONL file.

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::poc::PreparedContext;
use super::reader::ReaderOracle;
use super::{CalibrationRecord, DatasetRecord, CALIBRATION_SCHEMA_VERSION};
use crate::compressor::Compressor;
use crate::error::{Error, Result};
use crate::io::{read_jsonl, JsonlWriter, OutputMeta};
use crate::scoring::{retention, Metric};
use crate::text::tokenize;
use crate::workers::ordered_map;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RatioSampler {
    /// `{1/n, 2/n, ..., 1}`.
    Grid { n: usize },
    /// `n` draws from U[0, 1), seeded per record.
    Uniform { n: usize, seed: u64 },
}

impl Default for RatioSampler {
    fn default() -> Self {
        RatioSampler::Grid { n: 10 }
    }
}

impl RatioSampler {
    pub fn sample(&self, record_id: &str) -> Vec<f64> {
        match *self {
            RatioSampler::Grid { n } => (1..=n).map(|i| i as f64 / n as f64).collect(),
            RatioSampler::Uniform { n, seed } => {
                let digest = Sha256::digest(record_id.as_bytes());
                let mut bytes = [0u8; 8];
                bytes.copy_from_slice(&digest[..8]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from_le_bytes(bytes));
                (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
            }
        }
    }

    /// Sampled ratios plus `r = 1` (and `r = 0` if asked), sorted and unique.
    pub fn ratios(&self, record_id: &str, anchor_zero: bool) -> Vec<f64> {
        let mut rs = self.sample(record_id);
        rs.push(1.0);
        if anchor_zero {
            rs.push(0.0);
        }
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        rs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    pub sampler: RatioSampler,
    /// Also measure `r = 0`, so calibration curves span the whole unit interval.
    pub anchor_zero: bool,
    pub metric: Metric,
    pub workers: usize,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            sampler: RatioSampler::default(),
            anchor_zero: true,
            metric: Metric::F1,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollectSummary {
    pub written: usize,
    pub skipped_existing: usize,
    /// `(record id, error)` for records whose reader calls failed.
    pub failed: Vec<(String, String)>,
}

/// Measures one record. The uncompressed score is obtained once and reused
/// as the `r = 1` measurement.
pub fn measure_record(
    record: &DatasetRecord,
    ratios: &[f64],
    compressor: &dyn Compressor,
    reader: &dyn ReaderOracle,
    metric: Metric,
) -> Result<CalibrationRecord> {
    let ctx = tokenize(&record.context);
    if ctx.is_empty() {
        return Err(Error::EmptyInput("record context"));
    }
    let prepared = PreparedContext::new(compressor, ctx)?;
    let full = reader.read(&prepared.context.joined(), &record.instruction)?;
    let baseline = metric.score(&full, &record.answer);

    let mut raw_scores = Vec::with_capacity(ratios.len());
    let mut retentions = Vec::with_capacity(ratios.len());
    for &r in ratios {
        let score = if r == 1.0 {
            baseline
        } else {
            let compressed = prepared.compress_uniform(compressor, r)?;
            let out = reader.read(&compressed.text(), &record.instruction)?;
            metric.score(&out, &record.answer)
        };
        raw_scores.push(score.value);
        retentions.push(retention(score, baseline)?.value());
    }

    Ok(CalibrationRecord {
        schema_version: CALIBRATION_SCHEMA_VERSION,
        record_id: record.id.clone(),
        dataset_tag: record.tag.clone(),
        metric_name: metric,
        chunk_token_counts: prepared.chunk_token_counts(),
        chunk_features: prepared.features,
        ratios: ratios.to_vec(),
        retentions,
        raw_scores,
        baseline_score: baseline.value,
    })
}

/// Collects calibration records into `out`, appending to whatever an earlier
/// run left there. Records are processed and written in id order; records
/// already present are skipped, and reader failures are reported rather than
/// aborting the run.
pub fn collect_calibration(
    dataset: &[DatasetRecord],
    config: &CollectConfig,
    compressor: &dyn Compressor,
    reader: &dyn ReaderOracle,
    out: &Path,
    meta: &OutputMeta,
) -> Result<CollectSummary> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let done: HashSet<String> = if out.exists() {
        read_jsonl::<CalibrationRecord>(out)?
            .into_iter()
            .map(|r| r.record_id)
            .collect()
    } else {
        HashSet::new()
    };

    let mut todo: Vec<&DatasetRecord> = dataset.iter().collect();
    todo.sort_by(|a, b| a.id.cmp(&b.id));
    let mut summary = CollectSummary::default();
    todo.retain(|r| {
        let keep = !done.contains(&r.id);
        if !keep {
            summary.skipped_existing += 1;
        }
        keep
    });

    let mut writer = JsonlWriter::append_or_create(out, meta)?;
    let workers = config.workers.max(1);
    for batch in todo.chunks(workers * 4) {
        let results = ordered_map(batch, workers, |rec| {
            let ratios = config.sampler.ratios(&rec.id, config.anchor_zero);
            measure_record(rec, &ratios, compressor, reader, config.metric)
        });
        for (rec, res) in batch.iter().zip(results) {
            match res {
                Ok(cal) => {
                    writer.write(&cal)?;
                    summary.written += 1;
                }
                Err(Error::Reader(e)) => {
                    log::warn!("record {} skipped: {e}", rec.id);
                    summary.failed.push((rec.id.clone(), e.to_string()));
                }
                Err(e) => return Err(e),
            }
        }
        writer.flush()?;
    }
    Ok(summary)
}
