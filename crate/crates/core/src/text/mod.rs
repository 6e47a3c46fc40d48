//! Tokenization and chunking.
//!
//! Tokens are whitespace-separated words with every punctuation character
//! split off as its own token. The join rule is a single space, so
//! `tokenize(text).joined()` is the canonical form of `text`.

mod importance;

pub use importance::{
    score_importance, CorpusStats, ImportanceConfig, ImportanceScorer, ImportanceScores,
    IMPORTANCE_VERSION,
};

use serde::{Deserialize, Serialize};

/// Default chunk length in tokens.
pub const CHUNK_TOKENS: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedContext {
    pub id: String,
    pub tokens: Vec<String>,
    pub source_text: String,
    pub token_count: usize,
}

impl TokenizedContext {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn joined(&self) -> String {
        join_tokens(&self.tokens)
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A contiguous run of at most `chunk_size` tokens borrowed from its context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk<'a> {
    pub context_ref: &'a str,
    pub index: usize,
    pub start_index: usize,
    pub end_index: usize,
    pub tokens: &'a [String],
}

impl<'a> Chunk<'a> {
    /// A free-standing chunk, mostly useful in tests and benchmarks.
    pub fn standalone(tokens: &'a [String]) -> Self {
        Chunk {
            context_ref: "",
            index: 0,
            start_index: 0,
            end_index: tokens.len(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || ('\u{2010}'..='\u{205E}').contains(&c)
        || matches!(c, '«' | '»' | '¡' | '¿' | '、' | '。' | '，' | '：' | '；' | '！' | '？')
}

pub fn tokenize(text: &str) -> TokenizedContext {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenizedContext {
        id: String::new(),
        token_count: tokens.len(),
        tokens,
        source_text: text.to_owned(),
    }
}

pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::with_capacity(tokens.iter().map(|t| t.as_ref().len() + 1).sum());
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

/// Splits the context into `⌈token_count / chunk_size⌉` chunks. An empty
/// context yields no chunks at all.
///
/// # Panics
/// If `chunk_size` is zero.
pub fn chunk_context(ctx: &TokenizedContext, chunk_size: usize) -> Vec<Chunk<'_>> {
    assert!(chunk_size >= 1, "chunk_size must be positive");
    ctx.tokens
        .chunks(chunk_size)
        .enumerate()
        .map(|(index, tokens)| {
            let start_index = index * chunk_size;
            Chunk {
                context_ref: &ctx.id,
                index,
                start_index,
                end_index: start_index + tokens.len(),
                tokens,
            }
        })
        .collect()
}
