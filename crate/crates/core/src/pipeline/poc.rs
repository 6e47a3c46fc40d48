//! Floor-driven compression: per chunk, predict, search, compress.

use serde::{Deserialize, Serialize};

use crate::compressor::{CompressedContext, CompressionRatio, Compressor};
use crate::error::{Error, Result};
use crate::predictor::{extract_features, FeatureVector, PredictorKind, RetentionPredictor, WeightedFeatures};
use crate::search::two_stage_search;
use crate::text::{chunk_context, tokenize, Chunk, ImportanceScores, TokenizedContext};

/// A tokenized context with importance scores and features computed once per
/// chunk, reusable across floors and ratios.
#[derive(Debug, Clone)]
pub struct PreparedContext {
    pub context: TokenizedContext,
    pub chunk_size: usize,
    pub scores: Vec<ImportanceScores>,
    pub features: Vec<FeatureVector>,
}

impl PreparedContext {
    pub fn new(compressor: &dyn Compressor, context: TokenizedContext) -> Result<Self> {
        let chunk_size = compressor.chunk_size();
        let mut scores = Vec::new();
        let mut features = Vec::new();
        for chunk in chunk_context(&context, chunk_size) {
            let s = compressor.importance(&chunk)?;
            features.push(extract_features(&chunk, &s)?);
            scores.push(s);
        }
        Ok(PreparedContext {
            context,
            chunk_size,
            scores,
            features,
        })
    }

    pub fn from_text(compressor: &dyn Compressor, text: &str) -> Result<Self> {
        Self::new(compressor, tokenize(text))
    }

    pub fn chunks(&self) -> Vec<Chunk<'_>> {
        chunk_context(&self.context, self.chunk_size)
    }

    pub fn chunk_token_counts(&self) -> Vec<usize> {
        self.chunks().iter().map(Chunk::len).collect()
    }

    pub fn weighted_features(&self) -> Vec<WeightedFeatures> {
        self.features
            .iter()
            .zip(self.chunk_token_counts())
            .map(|(f, n)| WeightedFeatures {
                features: f.clone(),
                weight: n as f64,
            })
            .collect()
    }

    /// Compresses chunk `i` at `ratios[i]`.
    pub fn compress(&self, compressor: &dyn Compressor, ratios: &[f64]) -> Result<CompressedContext> {
        let chunks = self.chunks();
        if ratios.len() != chunks.len() {
            return Err(Error::LengthMismatch {
                what: "per-chunk ratios",
                expected: chunks.len(),
                actual: ratios.len(),
            });
        }
        let mut out = CompressedContext {
            tokens: Vec::new(),
            chunks: Vec::with_capacity(chunks.len()),
            total_tokens: self.context.token_count,
        };
        for ((chunk, scores), &r) in chunks.iter().zip(&self.scores).zip(ratios) {
            let c = compressor.compress_scored(chunk, scores, CompressionRatio::new(r)?)?;
            out.tokens.extend(c.tokens.iter().cloned());
            out.chunks.push(c);
        }
        Ok(out)
    }

    pub fn compress_uniform(&self, compressor: &dyn Compressor, r: f64) -> Result<CompressedContext> {
        self.compress(compressor, &vec![r; self.scores.len()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkDecision {
    pub index: usize,
    pub token_count: usize,
    pub ratio: f64,
    pub predicted_retention: f64,
    pub feasible: bool,
    pub kept_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocReport {
    pub floor: f64,
    pub predictor_kind: PredictorKind,
    pub chunks: Vec<ChunkDecision>,
    pub total_tokens: usize,
    pub kept_tokens: usize,
    pub overall_ratio: f64,
}

/// Compresses each chunk at the smallest ratio whose predicted retention
/// meets `floor`.
pub fn poc_compress(
    ctx: &TokenizedContext,
    floor: f64,
    predictor: &dyn RetentionPredictor,
    compressor: &dyn Compressor,
) -> Result<(CompressedContext, PocReport)> {
    if !(0.0..=1.0).contains(&floor) {
        return Err(Error::InvalidFloor(floor));
    }
    let prepared = PreparedContext::new(compressor, ctx.clone())?;
    poc_compress_prepared(&prepared, floor, predictor, compressor)
}

pub fn poc_compress_prepared(
    prepared: &PreparedContext,
    floor: f64,
    predictor: &dyn RetentionPredictor,
    compressor: &dyn Compressor,
) -> Result<(CompressedContext, PocReport)> {
    let mut searches = Vec::with_capacity(prepared.features.len());
    for f in &prepared.features {
        searches.push(two_stage_search(|rs| predictor.predict(f, rs), floor)?);
    }
    let ratios: Vec<f64> = searches.iter().map(|s| s.r_star).collect();
    let compressed = prepared.compress(compressor, &ratios)?;
    let chunks = searches
        .iter()
        .zip(&compressed.chunks)
        .enumerate()
        .map(|(index, (s, c))| ChunkDecision {
            index,
            token_count: c.source_len,
            ratio: s.r_star,
            predicted_retention: s.predicted_retention,
            feasible: s.feasible,
            kept_tokens: c.tokens.len(),
        })
        .collect();
    let report = PocReport {
        floor,
        predictor_kind: predictor.kind(),
        chunks,
        total_tokens: compressed.total_tokens,
        kept_tokens: compressed.kept(),
        overall_ratio: compressed.overall_ratio(),
    };
    Ok((compressed, report))
}
