//! Wall-clock latency of the predictor, the compressor and the full pipeline
//! on one chunk.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::compressor::{CompressionRatio, Compressor};
use crate::error::Result;
use crate::pipeline::poc::poc_compress;
use crate::predictor::{extract_features, RetentionPredictor};
use crate::search::two_stage_search;
use crate::text::{chunk_context, TokenizedContext};

pub const WARMUP_RUNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchComponent {
    /// Feature extraction plus ratio search, given importance scores.
    Predictor,
    /// Importance scoring plus top-k selection.
    Compressor,
    Pipeline,
}

impl fmt::Display for BenchComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchComponent::Predictor => "predictor",
            BenchComponent::Compressor => "compressor",
            BenchComponent::Pipeline => "pipeline",
        })
    }
}

impl FromStr for BenchComponent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "predictor" => Ok(BenchComponent::Predictor),
            "compressor" => Ok(BenchComponent::Compressor),
            "pipeline" => Ok(BenchComponent::Pipeline),
            other => Err(format!("unknown component `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub component: Option<BenchComponent>,
    pub runs: usize,
    pub warmup: usize,
    pub mean_ms: f64,
    /// Population standard deviation.
    pub std_ms: f64,
}

/// Times `runs` calls of `f` after `warmup` untimed ones.
pub fn time_runs<F: FnMut()>(runs: usize, warmup: usize, mut f: F) -> LatencyStats {
    for _ in 0..warmup {
        f();
    }
    let samples: Vec<f64> = (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    LatencyStats {
        component: None,
        runs,
        warmup,
        mean_ms: mean,
        std_ms: var.sqrt(),
    }
}

/// Benchmarks one component on the first chunk of `context`.
pub fn latency_bench(
    component: BenchComponent,
    context: &TokenizedContext,
    runs: usize,
    predictor: &dyn RetentionPredictor,
    compressor: &dyn Compressor,
    floor: f64,
) -> Result<LatencyStats> {
    let chunks = chunk_context(context, compressor.chunk_size());
    let chunk = chunks.first().ok_or(crate::error::Error::EmptyChunk)?;
    let scores = compressor.importance(chunk)?;
    let ratio = CompressionRatio::new(0.5)?;
    let single = TokenizedContext {
        id: context.id.clone(),
        tokens: chunk.tokens.to_vec(),
        source_text: String::new(),
        token_count: chunk.len(),
    };
    // One checked call so the timed loop can ignore results.
    match component {
        BenchComponent::Predictor => {
            let f = extract_features(chunk, &scores)?;
            two_stage_search(|rs| predictor.predict(&f, rs), floor)?;
        }
        BenchComponent::Compressor => {
            compressor.compress(chunk, ratio)?;
        }
        BenchComponent::Pipeline => {
            poc_compress(&single, floor, predictor, compressor)?;
        }
    }
    let mut stats = match component {
        BenchComponent::Predictor => time_runs(runs, WARMUP_RUNS, || {
            let f = extract_features(chunk, &scores).expect("checked");
            black_box(two_stage_search(|rs| predictor.predict(&f, rs), floor).expect("checked"));
        }),
        BenchComponent::Compressor => time_runs(runs, WARMUP_RUNS, || {
            black_box(compressor.compress(chunk, ratio).expect("checked"));
        }),
        BenchComponent::Pipeline => time_runs(runs, WARMUP_RUNS, || {
            black_box(poc_compress(&single, floor, predictor, compressor).expect("checked"));
        }),
    };
    stats.component = Some(component);
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_has_zero_spread() {
        let s = time_runs(1, 0, || {
            black_box((0..100).sum::<u64>());
        });
        assert_eq!(s.std_ms, 0.0);
        assert_eq!(s.runs, 1);
    }

    #[test]
    fn warmup_calls_are_made() {
        let mut calls = 0;
        time_runs(5, 3, || calls += 1);
        assert_eq!(calls, 8);
    }
}
