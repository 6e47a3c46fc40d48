//! Synthetic tasks, P@R evaluation, curve export and latency measurement.

pub mod curves;
pub mod latency;
pub mod par;
pub mod synth;

pub use curves::{emit_par_curve, emit_record_curves, mean_curve, read_curve_csv, CurveRow};
pub use latency::{latency_bench, time_runs, BenchComponent, LatencyStats};
pub use par::{evaluate_par, par_from_points, EvalSetup, ParPoint, ParResult, Policy};
pub use synth::{gen_corpus, gen_synthetic, NoiseProfile, SyntheticKind, SyntheticTaskConfig, TrueCurve};
