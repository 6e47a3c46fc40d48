//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line each; exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use poc_core::bench::{
    emit_record_curves, evaluate_par, gen_corpus, latency_bench, par_from_points, read_curve_csv,
    BenchComponent, EvalSetup, Policy, SyntheticKind, SyntheticTaskConfig, TrueCurve,
};
use poc_core::compressor::TopKCompressor;
use poc_core::io::OutputMeta;
use poc_core::pipeline::reader::{ReaderError, SyntheticNeedleReader};
use poc_core::pipeline::{
    measure_record, poc_compress, CalibrationRecord, DatasetRecord, RatioSampler, ReaderKind,
    ReaderOracle, TaskKind,
};
use poc_core::predictor::{
    calibrate_agnostic, common_ratios, fit_spline, predict_context_with, train_aware,
    AwarePredictorModel, RetentionPredictor, TrainingConfig, TrainingSample,
};
use poc_core::scoring::{ppe, retention, Metric, TaskScore};
use poc_core::search::{stage1_grid, stage2_grid, two_stage_search};
use poc_core::text::{tokenize, ImportanceScorer, CHUNK_TOKENS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() < limit_s,
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

fn compressor() -> TopKCompressor {
    TopKCompressor::new(ImportanceScorer::default(), CHUNK_TOKENS)
}

/// Monotone curve that first reaches `floor` exactly at `r_opt`.
fn threshold_curve(r_opt: f64, floor: f64, shape: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| {
        if r >= r_opt {
            floor + (1.0 - floor) * ((r - r_opt) / (1.0 - r_opt + 1e-9)).powf(shape)
        } else {
            floor * 0.999 * (r / r_opt).powf(shape)
        }
    }
}

fn batch<F: Fn(f64) -> f64>(f: &F) -> impl FnMut(&[f64]) -> poc_core::Result<Vec<f64>> + '_ {
    move |rs: &[f64]| Ok(rs.iter().map(|&r| f(r)).collect())
}

fn c1_search_precision() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bound = 1.0 / 361.0 + 1e-12;
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let r_opt = match i % 10 {
            0 => rng.gen_range(1..=19) as f64 / 19.0,
            1 => rng.gen_range(1..=361) as f64 / 361.0,
            _ => rng.gen_range(0.0..=1.0),
        };
        let floor = rng.gen_range(0.05..=1.0);
        let curve = threshold_curve(r_opt, floor, rng.gen_range(0.3..3.0));
        let res = two_stage_search(batch(&curve), floor).map_err(|e| e.to_string())?;
        check(res.feasible, format!("curve {i} reported infeasible"))?;
        check(res.r_star >= r_opt, format!("curve {i}: r_star {} < r_opt {r_opt}", res.r_star))?;
        let gap = res.r_star - r_opt;
        check(gap <= bound, format!("curve {i}: gap {gap} exceeds 1/361"))?;
        worst = worst.max(gap);
    }
    within(t.elapsed(), 5.0)?;
    Ok(format!("1000 curves, max r_star - r_opt = {worst:.6} <= 1/361 = {:.6}", 1.0 / 361.0))
}

fn random_monotone(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let n = rng.gen_range(2..8);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    let mut ys: Vec<f64> = (0..xs.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    ys.sort_by(f64::total_cmp);
    move |r: f64| {
        let i = xs.partition_point(|&x| x <= r).clamp(1, xs.len() - 1);
        let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
        if x1 > x0 {
            y0 + (y1 - y0) * ((r - x0) / (x1 - x0)).clamp(0.0, 1.0)
        } else {
            y1
        }
    }
}

fn c2_search_brute_force() -> Outcome {
    let t = Instant::now();
    let mut ends = stage1_grid();
    ends.push(1.0);
    let mut grid = Vec::new();
    let mut lo = 0.0;
    for &hi in &ends {
        grid.extend(stage2_grid(lo, hi));
        grid.push(hi);
        lo = hi;
    }
    check(grid.len() == 361, format!("implicit grid has {} points", grid.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut infeasible = 0;
    for i in 0..1000 {
        let curve = random_monotone(&mut rng);
        let floor = rng.gen_range(0.0..=1.0);
        let res = two_stage_search(batch(&curve), floor).map_err(|e| e.to_string())?;
        let best = grid
            .iter()
            .copied()
            .filter(|&r| curve(r) >= floor)
            .fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            check(res.feasible && res.r_star == best, format!("curve {i}: {} vs {best}", res.r_star))?;
        } else {
            infeasible += 1;
            check(!res.feasible && res.r_star == 1.0, format!("curve {i}: expected fallback"))?;
        }
    }
    within(t.elapsed(), 10.0)?;
    Ok(format!("1000 curves exact ({infeasible} infeasible fallbacks)"))
}

fn c3_spline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_knot: f64 = 0.0;
    let mut worst_int: f64 = 0.0;
    for i in 0..10_000 {
        let n = rng.gen_range(2..=12);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        if xs.len() < 2 {
            continue;
        }
        let ys: Vec<f64> = xs.iter().map(|_| rng.gen_range(-1.0..=2.0)).collect();
        let c = fit_spline(&xs, &ys).map_err(|e| e.to_string())?;
        for (x, y) in xs.iter().zip(&ys) {
            worst_knot = worst_knot.max((c.eval_raw(*x).unwrap() - y).abs());
        }
        if i % 500 == 0 {
            let (a, b) = (xs[0], xs[xs.len() - 1]);
            let m = 1_000_000;
            let h = (b - a) / m as f64;
            let mut trap = 0.5 * (c.eval_raw(a).unwrap() + c.eval_raw(b).unwrap());
            for k in 1..m {
                trap += c.eval_raw(a + k as f64 * h).unwrap();
            }
            trap *= h;
            worst_int = worst_int.max((trap - c.integrate(a, b).unwrap()).abs());
        }
    }
    check(worst_knot <= 1e-9, format!("knot error {worst_knot}"))?;
    check(worst_int <= 1e-6, format!("integral error {worst_int}"))?;
    let hat = fit_spline(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]).unwrap();
    let e = hat.eval_raw(0.25).unwrap();
    let i = hat.integrate(0.0, 1.0).unwrap();
    check((e - 0.6875).abs() <= 1e-9, format!("eval(0.25) = {e}"))?;
    check((i - 0.625).abs() <= 1e-6, format!("integral = {i}"))?;
    Ok(format!(
        "knot error {worst_knot:.1e}, trapezoid gap {worst_int:.1e}, hat eval {e} / integral {i}"
    ))
}

fn c4_retention_ppe() -> Outcome {
    let s = |v: f64| TaskScore {
        value: v,
        metric: Metric::F1,
    };
    let clipped = retention(s(0.9), s(0.6)).unwrap().value();
    check(clipped == 1.0, format!("retention(0.9, 0.6) = {clipped}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let x = rng.gen_range(1e-6..=1.0);
        let r = retention(s(x), s(x)).unwrap().value();
        check(r == 1.0, format!("retention({x}, {x}) = {r}"))?;
    }
    let v = ppe(&[0.5, 0.9], &[0.7, 0.6]).unwrap();
    check((v - 0.065).abs() < 1e-15, format!("PPE = {v}"))?;
    Ok(format!("clip 1.0, identity 1.0 on 1000 draws, PPE {v}"))
}

fn c5_gradients() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let h = 1e-5;
    for m in 0..10 {
        let model = AwarePredictorModel::init(rng.gen_range(4..=32), rng.gen());
        let samples: Vec<TrainingSample> = (0..rng.gen_range(2..8))
            .map(|_| {
                let chunks = (0..rng.gen_range(1..4))
                    .map(|_| poc_core::predictor::WeightedFeatures {
                        features: poc_core::predictor::FeatureVector(
                            (0..poc_core::predictor::FEATURE_DIM).map(|_| rng.gen_range(0.0..1.0)).collect(),
                        ),
                        weight: rng.gen_range(1.0..512.0),
                    })
                    .collect();
                let ratios: Vec<f64> = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(0.0..=1.0)).collect();
                let retentions = ratios.iter().map(|_| rng.gen_range(0.0..=1.0)).collect();
                TrainingSample {
                    chunks,
                    ratios,
                    retentions,
                }
            })
            .collect();
        let refs: Vec<&TrainingSample> = samples.iter().collect();
        let (_, grad) = model.loss_and_grad(&refs);
        let params = model.params();
        for _ in 0..10 {
            let k = rng.gen_range(0..params.len());
            let mut plus = model.clone();
            let mut p = params.clone();
            p[k] += h;
            plus.set_params(&p);
            let mut minus = model.clone();
            p[k] -= 2.0 * h;
            minus.set_params(&p);
            let numeric = (plus.loss_and_grad(&refs).0 - minus.loss_and_grad(&refs).0) / (2.0 * h);
            let denom = grad[k].abs().max(numeric.abs()).max(1e-6);
            let rel = (grad[k] - numeric).abs() / denom;
            check(rel < 1e-4, format!("model {m} param {k}: analytic {} numeric {numeric}", grad[k]))?;
            worst = worst.max(rel);
        }
    }
    within(t.elapsed(), 30.0)?;
    Ok(format!("100 coordinates over 10 models, max relative error {worst:.2e}"))
}

fn collect_all(
    data: &[DatasetRecord],
    ratios: &[f64],
    c: &TopKCompressor,
    reader: &dyn ReaderOracle,
) -> Result<Vec<CalibrationRecord>, String> {
    data.iter()
        .map(|d| measure_record(d, ratios, c, reader, Metric::F1).map_err(|e| e.to_string()))
        .collect()
}

fn records_ppe(p: &dyn RetentionPredictor, recs: &[&CalibrationRecord]) -> f64 {
    let mut pred = Vec::new();
    let mut actual = Vec::new();
    for r in recs {
        let s = r.to_training_sample();
        pred.extend(predict_context_with(p, &s.chunks, &s.ratios).unwrap());
        actual.extend(s.retentions);
    }
    ppe(&pred, &actual).unwrap()
}

fn c6_aware_beats_agnostic() -> Outcome {
    let t = Instant::now();
    let base = SyntheticTaskConfig {
        context_length: 3 * CHUNK_TOKENS,
        ..SyntheticTaskConfig::new(SyntheticKind::NeedleQa)
    };
    let data = gen_corpus(&base, 2000, 6).map_err(|e| e.to_string())?;
    let c = compressor();
    let reader = SyntheticNeedleReader;
    let ratios = RatioSampler::Grid { n: 10 }.ratios("", true);
    let records = collect_all(&data, &ratios, &c, &reader)?;

    let samples: Vec<TrainingSample> = records.iter().map(|r| r.to_training_sample()).collect();
    let (model, log) = train_aware(&samples, &TrainingConfig::default()).map_err(|e| e.to_string())?;
    let train: Vec<CalibrationRecord> = log.train_indices.iter().map(|&i| records[i].clone()).collect();
    let val: Vec<&CalibrationRecord> = log.validation_indices.iter().map(|&i| &records[i]).collect();
    let agnostic = calibrate_agnostic(&train, &common_ratios(&train), "needle-qa").map_err(|e| e.to_string())?;
    let ppe_aware = records_ppe(&model, &val);
    let ppe_agnostic = records_ppe(&agnostic, &val);
    let reduction = 1.0 - ppe_aware / ppe_agnostic;

    let test = gen_corpus(&base, 300, 66).map_err(|e| e.to_string())?;
    let setup = EvalSetup {
        compressor: &c,
        reader: &reader,
        metric: Metric::F1,
        workers: 1,
    };
    let floors: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let par_aware = evaluate_par(Policy::Poc(&model), &test, &floors, &setup).map_err(|e| e.to_string())?;
    let par_agnostic = evaluate_par(Policy::Poc(&agnostic), &test, &floors, &setup).map_err(|e| e.to_string())?;
    let detail = format!(
        "validation PPE aware {ppe_aware:.4} vs agnostic {ppe_agnostic:.4} ({:.1}% lower); P@R aware {:.4} vs agnostic {:.4}",
        100.0 * reduction,
        par_aware.par_value,
        par_agnostic.par_value
    );
    check(reduction >= 0.2, format!("PPE reduction too small: {detail}"))?;
    check(par_aware.par_value > par_agnostic.par_value, format!("P@R not higher: {detail}"))?;
    within(t.elapsed(), 300.0)?;
    Ok(detail)
}

fn reader_for(kind: SyntheticKind) -> Box<dyn ReaderOracle> {
    poc_core::pipeline::ReaderConfig {
        kind: kind.reader(),
        ..Default::default()
    }
    .build()
    .unwrap()
}

fn c7_generator_truth() -> Outcome {
    let c = compressor();
    let mut ratios = RatioSampler::Grid { n: 10 }.ratios("", true);
    ratios.extend((1..=361).map(|k| k as f64 / 361.0));
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let mut checked = 0;
    let mut worst_cov: f64 = 0.0;
    for kind in [SyntheticKind::NeedleQa, SyntheticKind::CoverageSumm, SyntheticKind::Distractor] {
        for (len, seed) in [(512, 70), (1500, 71), (300, 72)] {
            let base = SyntheticTaskConfig {
                context_length: len,
                ..SyntheticTaskConfig::new(kind)
            };
            let data = gen_corpus(&base, 40, seed).map_err(|e| e.to_string())?;
            let reader = reader_for(kind);
            let recs = collect_all(&data, &ratios, &c, reader.as_ref())?;
            for (d, rec) in data.iter().zip(&recs) {
                let truth: &TrueCurve = d.truth.as_ref().unwrap();
                for (r, got) in rec.ratios.iter().zip(&rec.retentions) {
                    let want = truth.retention(*r);
                    match kind {
                        SyntheticKind::NeedleQa => {
                            check(*got == want, format!("{} at r={r}: {got} vs {want}", d.id))?
                        }
                        _ => {
                            worst_cov = worst_cov.max((got - want).abs());
                            check((got - want).abs() <= 1e-9, format!("{} at r={r}: {got} vs {want}", d.id))?
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "{checked} (sample, ratio) pairs match; needle exact, coverage/distractor max gap {worst_cov:.1e}"
    ))
}

/// Scores every answer against the fixed output `alpha beta gamma gamma`.
struct ConstantReader;

impl ReaderOracle for ConstantReader {
    fn kind(&self) -> ReaderKind {
        ReaderKind::Http
    }

    fn read(&self, _context: &str, _instruction: &str) -> Result<String, ReaderError> {
        Ok("alpha beta gamma gamma".into())
    }
}

fn c8_par_sanity() -> Outcome {
    let data: Vec<DatasetRecord> = (0..20)
        .map(|i| DatasetRecord {
            id: format!("c{i:02}"),
            context: (0..300 + 37 * i).map(|k| format!("w{}", k % 17)).collect::<Vec<_>>().join(" "),
            instruction: "name them".into(),
            answer: "alpha beta".into(),
            task_kind: TaskKind::Qa,
            tag: "const".into(),
            truth: None,
        })
        .collect();
    let c = compressor();
    let setup = EvalSetup {
        compressor: &c,
        reader: &ConstantReader,
        metric: Metric::F1,
        workers: 2,
    };
    let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let res = evaluate_par(Policy::FixedRatio, &data, &grid, &setup).map_err(|e| e.to_string())?;
    let c_val = 2.0 / 3.0;
    check((res.par_value - c_val).abs() <= 1e-6, format!("constant P@R {}", res.par_value))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut min_gap = f64::INFINITY;
    for pair in 0..100 {
        let n = rng.gen_range(4..=20);
        let mut xs: Vec<f64> = (1..n - 1)
            .map(|i| (i as f64 + rng.gen_range(-0.3..0.3)) / (n - 1) as f64)
            .collect();
        xs.push(0.0);
        xs.push(1.0);
        xs.sort_by(f64::total_cmp);
        let f: Vec<(f64, f64)> = xs.iter().map(|&x| (x, rng.gen_range(0.0..0.7))).collect();
        let g: Vec<(f64, f64)> = f.iter().map(|&(x, y)| (x, y + rng.gen_range(0.01..0.3))).collect();
        let pf = par_from_points(&f).map_err(|e| e.to_string())?.1;
        let pg = par_from_points(&g).map_err(|e| e.to_string())?.1;
        check(pg > pf, format!("pair {pair}: dominating {pg} <= dominated {pf}"))?;
        min_gap = min_gap.min(pg - pf);
    }
    Ok(format!(
        "constant policy P@R {:.9} (c = 2/3); 100 dominating pairs ordered, min gap {min_gap:.4}",
        res.par_value
    ))
}

fn c9_non_monotone() -> Outcome {
    let base = SyntheticTaskConfig::new(SyntheticKind::Distractor);
    let data = gen_corpus(&base, 300, 9).map_err(|e| e.to_string())?;
    let c = compressor();
    let reader = SyntheticNeedleReader;
    let ratios = RatioSampler::Grid { n: 10 }.ratios("", true);
    let records = collect_all(&data, &ratios, &c, &reader)?;

    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&CalibrationRecord, usize) -> f64| -> Vec<f64> {
        (0..ratios.len()).map(|i| records.iter().map(|r| f(r, i)).sum::<f64>() / n).collect()
    };
    let raw = mean(&|r, i| r.raw_scores[i]);
    let ret = mean(&|r, i| r.retentions[i]);
    let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    let peak = argmax(&raw);
    let last = ratios.len() - 1;
    check(peak > 0 && peak < last, format!("raw peak at r = {}", ratios[peak]))?;
    check(raw[peak] > raw[last], "raw peak does not exceed the r = 1 score")?;
    let ret_max = ret.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let interior_max = ret[1..last].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    check(interior_max >= ret_max, "retention maximum is not attained inside (0, 1)")?;

    let agnostic = calibrate_agnostic(&records, &common_ratios(&records), "distractor").map_err(|e| e.to_string())?;
    let samples: Vec<TrainingSample> = records.iter().map(|r| r.to_training_sample()).collect();
    let cfg = TrainingConfig {
        epochs: 20,
        ..TrainingConfig::default()
    };
    let (model, _) = train_aware(&samples, &cfg).map_err(|e| e.to_string())?;
    for d in data.iter().take(20) {
        for f in [0.0, 0.5, 0.9, 1.0] {
            poc_compress(&tokenize(&d.context), f, &agnostic, &c).map_err(|e| e.to_string())?;
            poc_compress(&tokenize(&d.context), f, &model, &c).map_err(|e| e.to_string())?;
        }
    }
    let setup = EvalSetup {
        compressor: &c,
        reader: &reader,
        metric: Metric::F1,
        workers: 1,
    };
    let floors: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let par = evaluate_par(Policy::Poc(&model), &data[..100], &floors, &setup).map_err(|e| e.to_string())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    emit_record_curves(&records, dir.path(), 3, 0, &OutputMeta::new("acceptance", Some(9)))
        .map_err(|e| e.to_string())?;
    let rows = read_curve_csv(&dir.path().join("distractor_mean.csv")).map_err(|e| e.to_string())?;
    let csv_peak = rows
        .iter()
        .fold(&rows[0], |b, r| if r.raw_score > b.raw_score { r } else { b })
        .ratio;

    // Peak of the analytic mean curve on a fine grid.
    let fine: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let truth_mean: Vec<f64> = fine
        .iter()
        .map(|&r| data.iter().map(|d| d.truth.as_ref().unwrap().raw(r)).sum::<f64>() / n)
        .collect();
    let true_peak = fine[argmax(&truth_mean)];
    check(
        (csv_peak - true_peak).abs() <= 0.1 + 1e-12,
        format!("CSV peak {csv_peak} vs analytic peak {true_peak}"),
    )?;
    Ok(format!(
        "mean raw score peaks at r = {} ({:.3} vs {:.3} at r = 1); CSV peak {csv_peak} vs analytic {true_peak:.3}; P@R {:.4}",
        ratios[peak], raw[peak], raw[last], par.par_value
    ))
}

fn c10_latency() -> Outcome {
    let task = SyntheticTaskConfig {
        seed: 10,
        ..SyntheticTaskConfig::new(SyntheticKind::NeedleQa)
    };
    let ctx = tokenize(&poc_core::bench::gen_synthetic(&task).unwrap().context);
    let model = AwarePredictorModel::init(32, 10);
    let c = compressor();
    let run = |comp, runs| latency_bench(comp, &ctx, runs, &model, &c, 0.9).map_err(|e| e.to_string());
    let pred = run(BenchComponent::Predictor, 100)?;
    let comp = run(BenchComponent::Compressor, 100)?;
    let pipe = run(BenchComponent::Pipeline, 100)?;
    check(pred.runs == 100 && pred.warmup == 10, "wrong run counts")?;
    check(run(BenchComponent::Predictor, 1)?.std_ms == 0.0, "runs = 1 must give std 0")?;
    check(
        pred.mean_ms < comp.mean_ms,
        format!("predictor {:.4} ms not below compressor {:.4} ms", pred.mean_ms, comp.mean_ms),
    )?;
    Ok(format!(
        "per 512-token chunk: predictor {:.4} ± {:.4} ms, compressor {:.4} ± {:.4} ms, pipeline {:.4} ± {:.4} ms",
        pred.mean_ms, pred.std_ms, comp.mean_ms, comp.std_ms, pipe.mean_ms, pipe.std_ms
    ))
}

fn poc(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_poc"))
        .args(args)
        .current_dir(dir)
        .env_remove("POC_READER_ENDPOINT")
        .output()
        .map_err(|e| e.to_string())?;
    check(
        out.status.success(),
        format!("poc {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)),
    )
}

fn c11_determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run_in = |name: &str, workers: &str| -> Result<std::path::PathBuf, String> {
        let d = root.path().join(name);
        std::fs::create_dir_all(&d).map_err(|e| e.to_string())?;
        poc(&d, &["gen", "--kind", "needle-qa", "--seed", "11", "--count", "150", "--out", "data.jsonl"])?;
        poc(&d, &["collect", "--dataset", "data.jsonl", "--out", "cal.jsonl", "--workers", workers])?;
        poc(&d, &["train", "--calibration", "cal.jsonl", "--out", "model.json", "--epochs", "30", "--seed", "11"])?;
        poc(&d, &["calibrate", "--calibration", "cal.jsonl", "--out", "agnostic.json"])?;
        poc(
            &d,
            &[
                "evaluate", "--dataset", "data.jsonl", "--predictor", "aware", "--model", "model.json",
                "--out", "eval.json", "--workers", workers,
            ],
        )?;
        Ok(d)
    };
    let a = run_in("a", "1")?;
    let b = run_in("b", "4")?;
    let files = ["data.jsonl", "cal.jsonl", "model.json", "eval.json"];
    for f in files {
        let x = std::fs::read(a.join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(f)).map_err(|e| e.to_string())?;
        check(x == y, format!("{f} differs between runs"))?;
    }
    Ok(format!("{} byte-identical across two runs (1 vs 4 workers)", files.join(", ")))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("search precision", c1_search_precision),
        ("search equals brute force", c2_search_brute_force),
        ("spline correctness", c3_spline),
        ("retention and PPE formulas", c4_retention_ppe),
        ("gradient correctness", c5_gradients),
        ("context-aware beats context-agnostic", c6_aware_beats_agnostic),
        ("generator ground truth", c7_generator_truth),
        ("P@R sanity", c8_par_sanity),
        ("non-monotone curves", c9_non_monotone),
        ("latency methodology", c10_latency),
        ("determinism", c11_determinism),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.2}s]"),
            Err(reason) => {
                failures += 1;
                println!("criterion {n:>2} FAIL  {name}: {reason} [{secs:.2}s]");
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
