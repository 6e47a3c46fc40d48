//! Budget-driven hard compression.
//!
//! A chunk of `n` tokens compressed at ratio `r` keeps the `⌈r·n⌉` most
//! important tokens (ties go to the earlier position) and emits them in their
//! original order. Because the ranking does not depend on `r`, the kept sets
//! are nested: a smaller ratio always keeps a subset of a larger one.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{chunk_context, Chunk, ImportanceScorer, ImportanceScores, TokenizedContext};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CompressionRatio(f64);

impl CompressionRatio {
    pub const NONE: CompressionRatio = CompressionRatio(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(CompressionRatio(value))
        } else {
            Err(Error::InvalidRatio(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CompressionRatio {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<CompressionRatio> for f64 {
    fn from(r: CompressionRatio) -> f64 {
        r.0
    }
}

/// Number of tokens kept out of `n` at ratio `r`: `⌈r·n⌉`.
///
/// Products that land within 1e-9 above an integer are treated as that
/// integer, so `0.7 * 10` keeps 7 tokens rather than 8. A nonzero ratio on a
/// nonempty chunk always keeps at least one token.
pub fn kept_count(n: usize, r: f64) -> usize {
    if r <= 0.0 || n == 0 {
        return 0;
    }
    let x = r * n as f64;
    let mut k = x.ceil();
    if k - x > 1.0 - 1e-9 && k > 1.0 {
        k -= 1.0;
    }
    (k as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedChunk {
    pub kept_indices: Vec<usize>,
    pub tokens: Vec<String>,
    pub source_len: usize,
    pub achieved_ratio: f64,
}

/// Importance ranking: descending score, then ascending index.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

pub fn compress_chunk(
    chunk: &Chunk<'_>,
    scores: &ImportanceScores,
    r: CompressionRatio,
) -> Result<CompressedChunk> {
    let n = chunk.len();
    if scores.len() != n {
        return Err(Error::LengthMismatch {
            what: "importance scores",
            expected: n,
            actual: scores.len(),
        });
    }
    let k = kept_count(n, r.value());
    let kept_indices: Vec<usize> = if k == n {
        (0..n).collect()
    } else {
        let mut top = ranking(&scores.scores);
        top.truncate(k);
        top.sort_unstable();
        top
    };
    let tokens = kept_indices.iter().map(|&i| chunk.tokens[i].clone()).collect();
    Ok(CompressedChunk {
        achieved_ratio: if n == 0 { 1.0 } else { k as f64 / n as f64 },
        kept_indices,
        tokens,
        source_len: n,
    })
}

/// Any budget-driven compressor: given a chunk and a ratio, keep a subsequence.
pub trait Compressor: Send + Sync {
    /// Per-token importance, shared with the feature extractor.
    fn importance(&self, chunk: &Chunk<'_>) -> Result<ImportanceScores>;

    fn compress_scored(
        &self,
        chunk: &Chunk<'_>,
        scores: &ImportanceScores,
        r: CompressionRatio,
    ) -> Result<CompressedChunk>;

    fn compress(&self, chunk: &Chunk<'_>, r: CompressionRatio) -> Result<CompressedChunk> {
        let scores = self.importance(chunk)?;
        self.compress_scored(chunk, &scores, r)
    }

    fn chunk_size(&self) -> usize {
        crate::text::CHUNK_TOKENS
    }
}

/// The built-in importance-ranked compressor.
#[derive(Debug, Clone)]
pub struct TopKCompressor {
    scorer: ImportanceScorer,
    chunk_size: usize,
}

impl Default for TopKCompressor {
    fn default() -> Self {
        TopKCompressor {
            scorer: ImportanceScorer::default(),
            chunk_size: crate::text::CHUNK_TOKENS,
        }
    }
}

impl TopKCompressor {
    pub fn new(scorer: ImportanceScorer, chunk_size: usize) -> Self {
        assert!(chunk_size >= 1);
        TopKCompressor { scorer, chunk_size }
    }

    pub fn scorer(&self) -> &ImportanceScorer {
        &self.scorer
    }
}

impl Compressor for TopKCompressor {
    fn importance(&self, chunk: &Chunk<'_>) -> Result<ImportanceScores> {
        self.scorer.score(chunk)
    }

    fn compress_scored(
        &self,
        chunk: &Chunk<'_>,
        scores: &ImportanceScores,
        r: CompressionRatio,
    ) -> Result<CompressedChunk> {
        compress_chunk(chunk, scores, r)
    }

    fn chunk_size(&self) -> usize {
        self.chunk_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedContext {
    pub tokens: Vec<String>,
    pub chunks: Vec<CompressedChunk>,
    pub total_tokens: usize,
}

impl CompressedContext {
    pub fn kept(&self) -> usize {
        self.tokens.len()
    }

    /// Σ kept / Σ total; 1 for an empty context.
    pub fn overall_ratio(&self) -> f64 {
        if self.total_tokens == 0 {
            1.0
        } else {
            self.kept() as f64 / self.total_tokens as f64
        }
    }

    pub fn text(&self) -> String {
        crate::text::join_tokens(&self.tokens)
    }
}

/// Compresses every chunk of `ctx` at its own ratio and concatenates the results.
pub fn compress_context(
    compressor: &dyn Compressor,
    ctx: &TokenizedContext,
    per_chunk_ratios: &[CompressionRatio],
) -> Result<CompressedContext> {
    let chunks = chunk_context(ctx, compressor.chunk_size());
    if chunks.len() != per_chunk_ratios.len() {
        return Err(Error::LengthMismatch {
            what: "per-chunk ratios",
            expected: chunks.len(),
            actual: per_chunk_ratios.len(),
        });
    }
    let mut out = CompressedContext {
        tokens: Vec::new(),
        chunks: Vec::with_capacity(chunks.len()),
        total_tokens: ctx.token_count,
    };
    for (chunk, &r) in chunks.iter().zip(per_chunk_ratios) {
        let compressed = compressor.compress(chunk, r)?;
        out.tokens.extend(compressed.tokens.iter().cloned());
        out.chunks.push(compressed);
    }
    Ok(out)
}

/// Compresses every chunk at the same ratio.
pub fn compress_uniform(
    compressor: &dyn Compressor,
    ctx: &TokenizedContext,
    r: CompressionRatio,
) -> Result<CompressedContext> {
    let n_chunks = ctx.token_count.div_ceil(compressor.chunk_size());
    compress_context(compressor, ctx, &vec![r; n_chunks])
}
