//! Floor sweeps and the area under the resulting performance-compression
//! curve.

use serde::{Deserialize, Serialize};

use crate::compressor::Compressor;
use crate::error::{Error, Result};
use crate::pipeline::poc::{poc_compress_prepared, PreparedContext};
use crate::pipeline::{DatasetRecord, ReaderOracle};
use crate::predictor::{fit_spline, PerformanceCurve, RetentionPredictor};
use crate::scoring::Metric;
use crate::text::tokenize;
use crate::workers::ordered_map;

/// Average ratios closer than this are merged before fitting.
pub const MERGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy)]
pub enum Policy<'a> {
    /// Floor-driven compression with the given predictor.
    Poc(&'a dyn RetentionPredictor),
    /// Every grid value is used directly as a uniform ratio.
    FixedRatio,
}

impl Policy<'_> {
    pub fn name(&self) -> String {
        match self {
            Policy::Poc(p) => format!("poc-{}", p.kind()),
            Policy::FixedRatio => "fixed-ratio".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParPoint {
    /// Floor (or fixed ratio) that produced the point; `None` for anchors.
    pub floor: Option<f64>,
    pub avg_ratio: f64,
    pub avg_performance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParResult {
    pub policy: String,
    pub metric: Metric,
    pub floors: Vec<f64>,
    pub points: Vec<ParPoint>,
    pub anchors: Vec<ParPoint>,
    pub curve: PerformanceCurve,
    pub par_value: f64,
}

pub struct EvalSetup<'a> {
    pub compressor: &'a dyn Compressor,
    pub reader: &'a dyn ReaderOracle,
    pub metric: Metric,
    pub workers: usize,
}

/// Sorts points by ratio, merges near-duplicates by averaging, fits a
/// natural spline and integrates it over `[0, 1]`.
pub fn par_from_points(points: &[(f64, f64)]) -> Result<(PerformanceCurve, f64)> {
    let mut pts = points.to_vec();
    if pts.iter().any(|(r, p)| !r.is_finite() || !p.is_finite()) {
        return Err(Error::NonFinite("sweep points"));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let mut j = i + 1;
        while j < pts.len() && pts[j].0 - pts[i].0 <= MERGE_TOL {
            j += 1;
        }
        let group = &pts[i..j];
        let n = group.len() as f64;
        xs.push(group.iter().map(|p| p.0).sum::<f64>() / n);
        ys.push(group.iter().map(|p| p.1).sum::<f64>() / n);
        i = j;
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateSweep(xs.first().copied().unwrap_or(f64::NAN)));
    }
    let curve = fit_spline(&xs, &ys)?;
    let (lo, hi) = curve.domain();
    let value = curve.integrate(lo.max(0.0), hi.min(1.0))?;
    Ok((curve, value))
}

struct Prepared<'a> {
    record: &'a DatasetRecord,
    context: PreparedContext,
}

fn score_at(
    p: &Prepared<'_>,
    setup: &EvalSetup<'_>,
    policy: Policy<'_>,
    value: f64,
) -> Result<(f64, f64)> {
    let compressed = match policy {
        Policy::Poc(pred) => poc_compress_prepared(&p.context, value, pred, setup.compressor)?.0,
        Policy::FixedRatio => p.context.compress_uniform(setup.compressor, value)?,
    };
    let out = setup.reader.read(&compressed.text(), &p.record.instruction)?;
    let score = setup.metric.score(&out, &p.record.answer);
    Ok((compressed.overall_ratio(), score.value))
}

fn sweep_point(
    prepared: &[Prepared<'_>],
    setup: &EvalSetup<'_>,
    policy: Policy<'_>,
    value: f64,
) -> Result<(f64, f64)> {
    let results = ordered_map(prepared, setup.workers, |p| score_at(p, setup, policy, value));
    let mut ratio = 0.0;
    let mut perf = 0.0;
    for r in results {
        let (a, b) = r?;
        ratio += a;
        perf += b;
    }
    let n = prepared.len() as f64;
    Ok((ratio / n, perf / n))
}

/// Runs the policy at every floor over the dataset and integrates the
/// resulting (average ratio, average performance) curve. Uniform
/// compression at `r = 0` and `r = 1` anchors both ends.
pub fn evaluate_par(
    policy: Policy<'_>,
    dataset: &[DatasetRecord],
    floor_grid: &[f64],
    setup: &EvalSetup<'_>,
) -> Result<ParResult> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if floor_grid.is_empty() {
        return Err(Error::EmptyInput("floor grid"));
    }
    if let Some(&f) = floor_grid.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(match policy {
            Policy::Poc(_) => Error::InvalidFloor(f),
            Policy::FixedRatio => Error::InvalidRatio(f),
        });
    }
    let mut floors = floor_grid.to_vec();
    floors.sort_by(f64::total_cmp);

    let mut records: Vec<&DatasetRecord> = dataset.iter().collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let prepared: Vec<Prepared<'_>> = ordered_map(&records, setup.workers, |rec| {
        PreparedContext::new(setup.compressor, tokenize(&rec.context)).map(|context| Prepared {
            record: rec,
            context,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(floors.len());
    for &f in &floors {
        let (avg_ratio, avg_performance) = sweep_point(&prepared, setup, policy, f)?;
        points.push(ParPoint {
            floor: Some(f),
            avg_ratio,
            avg_performance,
        });
    }
    let first = points[0].avg_ratio;
    if points.iter().all(|p| (p.avg_ratio - first).abs() <= MERGE_TOL) {
        return Err(Error::DegenerateSweep(first));
    }

    let mut anchors = Vec::with_capacity(2);
    for r in [0.0, 1.0] {
        let (avg_ratio, avg_performance) = sweep_point(&prepared, setup, Policy::FixedRatio, r)?;
        anchors.push(ParPoint {
            floor: None,
            avg_ratio,
            avg_performance,
        });
    }

    let all: Vec<(f64, f64)> = anchors
        .iter()
        .chain(&points)
        .map(|p| (p.avg_ratio, p.avg_performance))
        .collect();
    let (curve, par_value) = par_from_points(&all)?;
    Ok(ParResult {
        policy: policy.name(),
        metric: setup.metric,
        floors,
        points,
        anchors,
        curve,
        par_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curve_integrates_to_constant() {
        let pts: Vec<(f64, f64)> = [0.0, 0.2, 0.2 + 1e-12, 0.55, 1.0].iter().map(|&r| (r, 0.4)).collect();
        let (curve, v) = par_from_points(&pts).unwrap();
        assert_eq!(curve.knot_ratios().len(), 4);
        assert!((v - 0.4).abs() < 1e-12);
    }

    #[test]
    fn duplicates_are_averaged() {
        let (curve, _) = par_from_points(&[(0.0, 0.0), (0.5, 0.2), (0.5, 0.6), (1.0, 1.0)]).unwrap();
        assert_eq!(curve.knot_values(), [0.0, 0.4, 1.0]);
    }

    #[test]
    fn order_does_not_matter() {
        let a = par_from_points(&[(0.0, 0.1), (0.3, 0.5), (0.7, 0.8), (1.0, 0.9)]).unwrap().1;
        let b = par_from_points(&[(0.7, 0.8), (1.0, 0.9), (0.0, 0.1), (0.3, 0.5)]).unwrap().1;
        assert_eq!(a, b);
    }

    #[test]
    fn collapse_is_an_error() {
        assert!(matches!(
            par_from_points(&[(0.5, 0.1), (0.5, 0.3)]),
            Err(Error::DegenerateSweep(r)) if r == 0.5
        ));
    }
}
