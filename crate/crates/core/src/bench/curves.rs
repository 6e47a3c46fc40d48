//! CSV export of performance-compression curves.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::par::ParResult;
use crate::error::{Error, Result};
use crate::io::OutputMeta;
use crate::pipeline::CalibrationRecord;
use crate::predictor::common_ratios;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub ratio: f64,
    /// Score normalized by the uncompressed score and clipped to `[0, 1]`.
    pub retention: f64,
    pub raw_score: f64,
}

pub fn write_curve_csv(path: &Path, rows: &[CurveRow], meta: &OutputMeta) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "{}", meta.comment_line()).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let body: String = BufReader::new(file)
        .lines()
        .map(|l| l.map_err(|e| Error::io(path, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l + "\n")
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn record_rows(rec: &CalibrationRecord) -> Vec<CurveRow> {
    (0..rec.ratios.len())
        .map(|i| CurveRow {
            ratio: rec.ratios[i],
            retention: rec.retentions[i],
            raw_score: rec.raw_scores[i],
        })
        .collect()
}

/// Mean retention and raw score over records, at the ratios all of them share.
pub fn mean_curve(records: &[CalibrationRecord]) -> Result<Vec<CurveRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("calibration records"));
    }
    let n = records.len() as f64;
    common_ratios(records)
        .into_iter()
        .map(|r| {
            let mut ret = 0.0;
            let mut raw = 0.0;
            for rec in records {
                let i = rec
                    .ratios
                    .iter()
                    .position(|x| (x - r).abs() <= 1e-12)
                    .ok_or(Error::MissingKnot(r))?;
                ret += rec.retentions[i];
                raw += rec.raw_scores[i];
            }
            Ok(CurveRow {
                ratio: r,
                retention: ret / n,
                raw_score: raw / n,
            })
        })
        .collect()
}

/// Per dataset tag: one `{tag}_mean.csv` plus `{tag}_sample_{id}.csv` for
/// up to `samples` records picked with `seed`. Returns the written paths.
pub fn emit_record_curves(
    records: &[CalibrationRecord],
    dir: &Path,
    samples: usize,
    seed: u64,
    meta: &OutputMeta,
) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("calibration records"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut by_tag: BTreeMap<&str, Vec<&CalibrationRecord>> = BTreeMap::new();
    for r in records {
        by_tag.entry(r.dataset_tag.as_str()).or_default().push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut written = Vec::new();
    for (tag, mut recs) in by_tag {
        recs.sort_by(|a, b| a.record_id.cmp(&b.record_id));
        let tag_name = if tag.is_empty() { "dataset".to_owned() } else { sanitize(tag) };
        let owned: Vec<CalibrationRecord> = recs.iter().map(|r| (*r).clone()).collect();
        let path = dir.join(format!("{tag_name}_mean.csv"));
        write_curve_csv(&path, &mean_curve(&owned)?, meta)?;
        written.push(path);

        let mut picks = sample(&mut rng, recs.len(), samples.min(recs.len())).into_vec();
        picks.sort_unstable();
        for i in picks {
            let rec = recs[i];
            let path = dir.join(format!("{tag_name}_sample_{}.csv", sanitize(&rec.record_id)));
            write_curve_csv(&path, &record_rows(rec), meta)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Sweep points of a P@R run, anchors included, sorted by ratio. Retention
/// is relative to the `r = 1` anchor.
pub fn par_rows(result: &ParResult) -> Vec<CurveRow> {
    let full = result
        .anchors
        .iter()
        .find(|a| a.avg_ratio == 1.0)
        .map_or(0.0, |a| a.avg_performance);
    let mut rows: Vec<CurveRow> = result
        .anchors
        .iter()
        .chain(&result.points)
        .map(|p| CurveRow {
            ratio: p.avg_ratio,
            retention: if full > 0.0 {
                (p.avg_performance / full).clamp(0.0, 1.0)
            } else {
                1.0
            },
            raw_score: p.avg_performance,
        })
        .collect();
    rows.sort_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.raw_score.total_cmp(&b.raw_score)));
    rows
}

pub fn emit_par_curve(result: &ParResult, dir: &Path, tag: &str, meta: &OutputMeta) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{}_par_{}.csv", sanitize(tag), sanitize(&result.policy)));
    write_curve_csv(&path, &par_rows(result), meta)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::CALIBRATION_SCHEMA_VERSION;
    use crate::predictor::{FeatureVector, FEATURE_DIM};
    use crate::scoring::Metric;
    use proptest::prelude::*;

    fn rec(id: &str, tag: &str, vals: &[f64]) -> CalibrationRecord {
        let ratios: Vec<f64> = (0..vals.len()).map(|i| i as f64 / (vals.len() - 1) as f64).collect();
        CalibrationRecord {
            schema_version: CALIBRATION_SCHEMA_VERSION,
            record_id: id.into(),
            dataset_tag: tag.into(),
            metric_name: Metric::F1,
            chunk_features: vec![FeatureVector(vec![0.0; FEATURE_DIM])],
            chunk_token_counts: vec![512],
            ratios,
            retentions: vals.to_vec(),
            raw_scores: vals.iter().map(|v| v * 0.8).collect(),
            baseline_score: 0.8,
        }
    }

    #[test]
    fn three_samples_plus_mean() {
        let dir = tempfile::tempdir().unwrap();
        let recs: Vec<_> = (0..6)
            .map(|i| rec(&format!("r{i}"), "needle-qa", &[0.0, 0.1 * i as f64, 1.0]))
            .collect();
        let meta = OutputMeta::new("h", Some(1));
        let files = emit_record_curves(&recs, dir.path(), 3, 0, &meta).unwrap();
        assert_eq!(files.len(), 4);
        let mean = read_curve_csv(&dir.path().join("needle-qa_mean.csv")).unwrap();
        assert_eq!(mean.last().unwrap().retention, 1.0);
        assert_eq!(mean.len(), 3);
    }

    #[test]
    fn empty_input_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let meta = OutputMeta::new("h", None);
        assert!(emit_record_curves(&[], dir.path(), 3, 0, &meta).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, -5.0f64..5.0), 1..30)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("c.csv");
            let rows: Vec<CurveRow> = rows
                .into_iter()
                .map(|(ratio, retention, raw_score)| CurveRow { ratio, retention, raw_score })
                .collect();
            write_curve_csv(&path, &rows, &OutputMeta::new("h", None)).unwrap();
            prop_assert_eq!(read_curve_csv(&path).unwrap(), rows);
        }
    }
}
