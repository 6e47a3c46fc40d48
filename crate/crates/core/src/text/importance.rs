//! Deterministic per-token importance heuristic.
//!
//! Each token gets `base + length + digit + capital + rarity + position - stopword`,
//! clamped to `[0, 1]`. Every feature except position and rarity is a
//! function of the token string alone. Weights are versioned by
//! [`IMPORTANCE_VERSION`]; golden tests pin the defaults.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::{is_punctuation, Chunk};
use crate::error::{Error, Result};

pub const IMPORTANCE_VERSION: &str = "importance-v1";

const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "could", "did", "do", "for", "from", "had", "has", "have", "he", "her",
    "his", "i", "if", "in", "into", "is", "it", "its", "me", "my", "no", "not", "of", "on", "or",
    "our", "she", "so", "than", "that", "the", "their", "them", "then", "there", "they", "this",
    "to", "up", "us", "was", "we", "were", "what", "when", "which", "who", "will", "with",
    "would", "you", "your",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceConfig {
    pub version: String,
    pub base: f64,
    /// Weight of `min(chars, length_cap) / length_cap`.
    pub length_weight: f64,
    pub length_cap: usize,
    pub digit_boost: f64,
    /// Applied when the first character is uppercase.
    pub capital_boost: f64,
    /// Applied to stopwords and to pure-punctuation tokens.
    pub stopword_penalty: f64,
    /// Weight of normalized inverse corpus frequency; only used with corpus stats.
    pub rarity_weight: f64,
    /// Weight of `1 - i / n` for the token at chunk offset `i`.
    pub position_weight: f64,
    pub stopwords: Vec<String>,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig {
            version: IMPORTANCE_VERSION.to_owned(),
            base: 0.2,
            length_weight: 0.35,
            length_cap: 12,
            digit_boost: 0.1,
            capital_boost: 0.15,
            stopword_penalty: 0.3,
            rarity_weight: 0.2,
            position_weight: 0.0,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Token → count table. Keys are lowercased on construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    counts: HashMap<String, u64>,
    max_count: u64,
}

impl CorpusStats {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut merged: HashMap<String, u64> = HashMap::new();
        for (token, count) in counts {
            *merged.entry(token.as_ref().to_lowercase()).or_default() += count;
        }
        let max_count = merged.values().copied().max().unwrap_or(0);
        CorpusStats {
            counts: merged,
            max_count,
        }
    }

    /// Loads a JSON object mapping token to count.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: HashMap<String, u64> = serde_json::from_str(&text)?;
        Ok(Self::from_counts(raw))
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(&token.to_lowercase()).copied().unwrap_or(0)
    }

    /// `1 - ln(1 + count) / ln(1 + max_count)`: 1 for unseen tokens, 0 for the most frequent.
    pub fn rarity(&self, token: &str) -> f64 {
        if self.max_count == 0 {
            return 1.0;
        }
        1.0 - (self.count(token) as f64).ln_1p() / (self.max_count as f64).ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScores {
    pub scores: Vec<f64>,
}

impl ImportanceScores {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ImportanceScorer {
    config: ImportanceConfig,
    stopwords: HashSet<String>,
    stats: Option<CorpusStats>,
}

impl Default for ImportanceScorer {
    fn default() -> Self {
        Self::new(ImportanceConfig::default())
    }
}

impl ImportanceScorer {
    pub fn new(config: ImportanceConfig) -> Self {
        let stopwords = config.stopwords.iter().map(|s| s.to_lowercase()).collect();
        ImportanceScorer {
            config,
            stopwords,
            stats: None,
        }
    }

    pub fn with_stats(mut self, stats: CorpusStats) -> Self {
        self.stats = Some(stats);
        self
    }

    pub fn config(&self) -> &ImportanceConfig {
        &self.config
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        token.chars().all(is_punctuation) || self.stopwords.contains(&token.to_lowercase())
    }

    /// Score of a single token, ignoring position.
    pub fn token_score(&self, token: &str) -> f64 {
        self.raw_score(token, self.stats.as_ref()).clamp(0.0, 1.0)
    }

    fn raw_score(&self, token: &str, stats: Option<&CorpusStats>) -> f64 {
        let c = &self.config;
        let chars = token.chars().count().min(c.length_cap);
        let mut s = c.base + c.length_weight * chars as f64 / c.length_cap as f64;
        if token.chars().any(|ch| ch.is_numeric()) {
            s += c.digit_boost;
        }
        if token.chars().next().is_some_and(char::is_uppercase) {
            s += c.capital_boost;
        }
        if self.is_stopword(token) {
            s -= c.stopword_penalty;
        }
        if let Some(stats) = stats {
            s += c.rarity_weight * stats.rarity(token);
        }
        s
    }

    pub fn score(&self, chunk: &Chunk<'_>) -> Result<ImportanceScores> {
        self.score_with(chunk, self.stats.as_ref())
    }

    pub fn score_with(
        &self,
        chunk: &Chunk<'_>,
        stats: Option<&CorpusStats>,
    ) -> Result<ImportanceScores> {
        if chunk.is_empty() {
            return Err(Error::EmptyChunk);
        }
        let n = chunk.len() as f64;
        let scores = chunk
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut s = self.raw_score(t, stats);
                if self.config.position_weight != 0.0 {
                    s += self.config.position_weight * (1.0 - i as f64 / n);
                }
                s.clamp(0.0, 1.0)
            })
            .collect();
        Ok(ImportanceScores { scores })
    }
}

static DEFAULT_SCORER: LazyLock<ImportanceScorer> = LazyLock::new(ImportanceScorer::default);

/// Scores a chunk with the default weights.
pub fn score_importance(chunk: &Chunk<'_>, corpus_stats: Option<&CorpusStats>) -> Result<ImportanceScores> {
    DEFAULT_SCORER.score_with(chunk, corpus_stats)
}
