//! Synthetic tasks whose retention curves are known in closed form.
//!
//! Every token is drawn from one of a few shape classes. Under the default
//! importance heuristic the classes occupy disjoint score bands:
//!
//! | class      | shape                               | score          |
//! |------------|-------------------------------------|----------------|
//! | competitor | capitalized word, 10-12 letters     | 0.642 to 0.700 |
//! | needle     | `Ab1234`                            | 0.625          |
//! | salient    | capitalized word, 8-12 letters      | 0.583 to 0.700 |
//! | filler     | lowercase word, 5-10 letters        | 0.346 to 0.492 |
//! | decoy      | single digit                        | 0.329          |
//! | stop       | stopword or punctuation             | at most 0.046  |
//!
//! Top-k pruning therefore removes whole classes in a fixed order, and the
//! synthetic readers' scores follow from counting class members per chunk.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::compressor::kept_count;
use crate::error::{Error, Result};
use crate::pipeline::reader::ReaderKind;
use crate::pipeline::{DatasetRecord, TaskKind};
use crate::scoring::f_measure;
use crate::text::{ImportanceScorer, CHUNK_TOKENS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    NeedleQa,
    CoverageSumm,
    Distractor,
}

impl SyntheticKind {
    pub fn reader(self) -> ReaderKind {
        match self {
            SyntheticKind::NeedleQa | SyntheticKind::Distractor => ReaderKind::SyntheticNeedle,
            SyntheticKind::CoverageSumm => ReaderKind::SyntheticCoverage,
        }
    }

    pub fn default_noise(self) -> NoiseProfile {
        match self {
            SyntheticKind::NeedleQa => NoiseProfile {
                competitor_fraction: [0.0, 0.6],
                stop_fraction: [0.1, 0.3],
            },
            SyntheticKind::CoverageSumm => NoiseProfile {
                competitor_fraction: [0.0, 0.0],
                stop_fraction: [0.1, 0.3],
            },
            SyntheticKind::Distractor => NoiseProfile {
                competitor_fraction: [0.0, 0.3],
                stop_fraction: [0.3, 0.6],
            },
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::NeedleQa => "needle-qa",
            SyntheticKind::CoverageSumm => "coverage-summ",
            SyntheticKind::Distractor => "distractor",
        })
    }
}

impl FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "needle-qa" => Ok(SyntheticKind::NeedleQa),
            "coverage-summ" => Ok(SyntheticKind::CoverageSumm),
            "distractor" => Ok(SyntheticKind::Distractor),
            other => Err(format!(
                "unknown task kind `{other}` (expected needle-qa, coverage-summ or distractor)"
            )),
        }
    }
}

/// Per-sample class proportions, each drawn uniformly from its `[lo, hi]`
/// range. Tokens not assigned to a class are filler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    /// High-importance words that outrank the needle. Needle tasks only.
    pub competitor_fraction: [f64; 2],
    pub stop_fraction: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskConfig {
    pub kind: SyntheticKind,
    pub context_length: usize,
    pub chunk_size: usize,
    pub needle_tokens: usize,
    /// Token offset of the needle; uniform over all offsets where it fits in
    /// one chunk when absent.
    pub needle_position: Option<usize>,
    pub salient_fraction: f64,
    /// Single-digit tokens planted next to the needle (distractor kind).
    pub decoys: usize,
    pub noise: NoiseProfile,
    pub seed: u64,
}

impl SyntheticTaskConfig {
    pub fn new(kind: SyntheticKind) -> Self {
        SyntheticTaskConfig {
            kind,
            context_length: CHUNK_TOKENS,
            chunk_size: CHUNK_TOKENS,
            needle_tokens: 5,
            needle_position: None,
            salient_fraction: 0.5,
            decoys: 10,
            noise: kind.default_noise(),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTask(m));
        if self.context_length == 0 || self.chunk_size == 0 {
            return bad("context_length and chunk_size must be positive".into());
        }
        for (name, [lo, hi]) in [
            ("competitor_fraction", self.noise.competitor_fraction),
            ("stop_fraction", self.noise.stop_fraction),
        ] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return bad(format!("{name} range [{lo}, {hi}] is not within [0, 1]"));
            }
        }
        if self.noise.competitor_fraction[1] + self.noise.stop_fraction[1] > 1.0 {
            return bad("competitor and stop fractions may exceed 1 together".into());
        }
        match self.kind {
            SyntheticKind::NeedleQa | SyntheticKind::Distractor => {
                let l = self.needle_tokens;
                if l == 0 {
                    return bad("needle must have at least one token".into());
                }
                if l > self.context_length {
                    return bad(format!(
                        "needle of {l} tokens is longer than the {}-token context",
                        self.context_length
                    ));
                }
                if l > self.chunk_size.min(self.context_length) {
                    return bad(format!("needle of {l} tokens does not fit in one chunk"));
                }
            }
            SyntheticKind::CoverageSumm => {
                if !(self.salient_fraction > 0.0 && self.salient_fraction <= 1.0) {
                    return bad(format!("salient_fraction {} outside (0, 1]", self.salient_fraction));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageChunk {
    pub len: usize,
    pub salient: usize,
}

/// Closed-form retention of a generated record under uniform compression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum TrueCurve {
    /// Full score iff the top `threshold` tokens of the needle chunk are kept.
    Step { chunk_len: usize, threshold: usize },
    /// Score = fraction of salient tokens kept, summed over chunks.
    Coverage { chunks: Vec<CoverageChunk>, salient_total: usize },
    /// Step on the needle, then precision loss once decoys start surviving
    /// (after `decoy_rank` tokens are kept).
    Distractor {
        chunk_len: usize,
        threshold: usize,
        decoy_rank: usize,
        decoys: usize,
        needle_len: usize,
    },
}

impl TrueCurve {
    /// Unnormalized F1 at ratio `r`.
    pub fn raw(&self, r: f64) -> f64 {
        match self {
            TrueCurve::Step { chunk_len, threshold } => {
                if kept_count(*chunk_len, r) >= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            TrueCurve::Coverage { chunks, salient_total } => {
                let m: usize = chunks
                    .iter()
                    .map(|c| kept_count(c.len, r).min(c.salient))
                    .sum();
                f_measure(m, *salient_total, *salient_total)
            }
            TrueCurve::Distractor {
                chunk_len,
                threshold,
                decoy_rank,
                decoys,
                needle_len,
            } => {
                let k = kept_count(*chunk_len, r);
                if k < *threshold {
                    return 0.0;
                }
                let d = k.saturating_sub(*decoy_rank).min(*decoys);
                f_measure(*needle_len, needle_len + d, *needle_len)
            }
        }
    }

    pub fn baseline(&self) -> f64 {
        self.raw(1.0)
    }

    /// `min(raw(r) / raw(1), 1)`, or 1 when the baseline is zero.
    pub fn retention(&self, r: f64) -> f64 {
        let b = self.baseline();
        if b <= 0.0 {
            1.0
        } else {
            (self.raw(r) / b).min(1.0).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Needle(usize),
    Competitor,
    Salient,
    Filler,
    Decoy,
    Stop,
}

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";
const VOWELS: &[u8] = b"aeiou";
const STOP_TOKENS: &[&str] = &[
    "the", "of", "and", "to", "in", "a", "is", "was", "for", "on", "with", "as", "by", "at",
    "from", "that", "this", "it", ",", ".", ";", "(", ")",
];

fn pseudo_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    let mut w = String::with_capacity(len + 1);
    while w.len() < len {
        w.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
    }
    w.truncate(len);
    w
}

fn capitalized(mut w: String) -> String {
    w[..1].make_ascii_uppercase();
    w
}

struct Vocab {
    scorer: ImportanceScorer,
}

impl Vocab {
    fn filler(&self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let len = rng.gen_range(5..=10);
            let w = pseudo_word(rng, len);
            if !self.scorer.is_stopword(&w) && w != crate::pipeline::reader::UNKNOWN_ANSWER {
                return w;
            }
        }
    }

    fn competitor(&self, rng: &mut ChaCha8Rng) -> String {
        let len = rng.gen_range(10..=12);
        capitalized(pseudo_word(rng, len))
    }

    fn salient(&self, rng: &mut ChaCha8Rng) -> String {
        let len = rng.gen_range(8..=12);
        capitalized(pseudo_word(rng, len))
    }

    fn needle(&self, rng: &mut ChaCha8Rng) -> String {
        let upper = (b'A' + rng.gen_range(0..26)) as char;
        let lower = (b'a' + rng.gen_range(0..26)) as char;
        format!("{upper}{lower}{:04}", rng.gen_range(0..10_000))
    }

    fn decoy(&self, rng: &mut ChaCha8Rng) -> String {
        rng.gen_range(0..10).to_string()
    }

    fn stop(&self, rng: &mut ChaCha8Rng) -> String {
        STOP_TOKENS[rng.gen_range(0..STOP_TOKENS.len())].to_owned()
    }
}

fn chunk_bounds(n: usize, size: usize) -> Vec<(usize, usize)> {
    (0..n).step_by(size).map(|a| (a, (a + size).min(n))).collect()
}

fn draw_fraction(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Generates one record. The record id is `{kind}-{seed}`.
pub fn gen_synthetic(config: &SyntheticTaskConfig) -> Result<DatasetRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.context_length;
    let bounds = chunk_bounds(n, config.chunk_size);
    let vocab = Vocab {
        scorer: ImportanceScorer::default(),
    };
    let mut slots: Vec<Option<Slot>> = vec![None; n];

    let competitor_p = match config.kind {
        SyntheticKind::CoverageSumm => 0.0,
        _ => draw_fraction(&mut rng, config.noise.competitor_fraction),
    };
    let stop_p = draw_fraction(&mut rng, config.noise.stop_fraction);

    let l = config.needle_tokens;
    let mut needle_chunk = None;
    match config.kind {
        SyntheticKind::NeedleQa | SyntheticKind::Distractor => {
            let start = match config.needle_position {
                Some(p) => {
                    if p + l > n || p / config.chunk_size != (p + l - 1) / config.chunk_size {
                        return Err(Error::InvalidTask(format!(
                            "needle at {p} does not fit inside one chunk"
                        )));
                    }
                    p
                }
                None => {
                    let starts: usize = bounds
                        .iter()
                        .map(|&(a, b)| (b - a + 1).saturating_sub(l))
                        .sum();
                    let mut pick = rng.gen_range(0..starts);
                    let mut start = 0;
                    for &(a, b) in &bounds {
                        let here = (b - a + 1).saturating_sub(l);
                        if pick < here {
                            start = a + pick;
                            break;
                        }
                        pick -= here;
                    }
                    start
                }
            };
            for (i, s) in slots[start..start + l].iter_mut().enumerate() {
                *s = Some(Slot::Needle(i));
            }
            let c = start / config.chunk_size;
            needle_chunk = Some(c);

            if config.kind == SyntheticKind::Distractor {
                let (a, b) = bounds[c];
                let free: Vec<usize> = (a..b).filter(|&i| slots[i].is_none()).collect();
                if free.len() < config.decoys {
                    return Err(Error::InvalidTask(format!(
                        "{} decoys do not fit beside the needle in a {}-token chunk",
                        config.decoys,
                        b - a
                    )));
                }
                for j in sample(&mut rng, free.len(), config.decoys) {
                    slots[free[j]] = Some(Slot::Decoy);
                }
            }
        }
        SyntheticKind::CoverageSumm => {
            let s = ((config.salient_fraction * n as f64).round() as usize).clamp(1, n);
            for i in sample(&mut rng, n, s) {
                slots[i] = Some(Slot::Salient);
            }
        }
    }

    let slots: Vec<Slot> = slots
        .into_iter()
        .map(|s| {
            s.unwrap_or_else(|| {
                let u: f64 = rng.gen();
                if u < competitor_p {
                    Slot::Competitor
                } else if u < competitor_p + stop_p {
                    Slot::Stop
                } else {
                    Slot::Filler
                }
            })
        })
        .collect();

    let mut needle = vec![String::new(); l];
    let mut salient = Vec::new();
    let tokens: Vec<String> = slots
        .iter()
        .map(|s| match *s {
            Slot::Needle(i) => {
                needle[i] = vocab.needle(&mut rng);
                needle[i].clone()
            }
            Slot::Competitor => vocab.competitor(&mut rng),
            Slot::Salient => {
                let w = vocab.salient(&mut rng);
                salient.push(w.clone());
                w
            }
            Slot::Filler => vocab.filler(&mut rng),
            Slot::Decoy => vocab.decoy(&mut rng),
            Slot::Stop => vocab.stop(&mut rng),
        })
        .collect();

    let count = |range: (usize, usize), class: Slot| {
        slots[range.0..range.1].iter().filter(|&&s| s == class).count()
    };
    let (truth, instruction, answer, task_kind) = match config.kind {
        SyntheticKind::NeedleQa | SyntheticKind::Distractor => {
            let c = needle_chunk.expect("needle placed");
            let range = bounds[c];
            let threshold = count(range, Slot::Competitor) + l;
            let truth = if config.kind == SyntheticKind::NeedleQa {
                TrueCurve::Step {
                    chunk_len: range.1 - range.0,
                    threshold,
                }
            } else {
                TrueCurve::Distractor {
                    chunk_len: range.1 - range.0,
                    threshold,
                    decoy_rank: threshold + count(range, Slot::Filler),
                    decoys: config.decoys,
                    needle_len: l,
                }
            };
            (
                truth,
                format!("What is the {l}-part passkey hidden in the text?"),
                needle.join(" "),
                TaskKind::Qa,
            )
        }
        SyntheticKind::CoverageSumm => {
            let chunks: Vec<CoverageChunk> = bounds
                .iter()
                .map(|&r| CoverageChunk {
                    len: r.1 - r.0,
                    salient: count(r, Slot::Salient),
                })
                .collect();
            let s = salient.len();
            (
                TrueCurve::Coverage {
                    chunks,
                    salient_total: s,
                },
                format!("List the {s} key names mentioned in the text."),
                salient.join(" "),
                TaskKind::Summarization,
            )
        }
    };

    Ok(DatasetRecord {
        id: format!("{}-{}", config.kind, config.seed),
        context: tokens.join(" "),
        instruction,
        answer,
        task_kind,
        tag: config.kind.to_string(),
        truth: Some(truth),
    })
}

/// `count` records from `base`, each with its own seed drawn from `seed`.
/// Ids are `{kind}-{index:06}`.
pub fn gen_corpus(base: &SyntheticTaskConfig, count: usize, seed: u64) -> Result<Vec<DatasetRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let cfg = SyntheticTaskConfig {
                seed: rng.next_u64(),
                ..base.clone()
            };
            let mut rec = gen_synthetic(&cfg)?;
            rec.id = format!("{}-{i:06}", base.kind);
            Ok(rec)
        })
        .collect()
}
