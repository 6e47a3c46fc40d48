//! Task scorers (F1, exact match, ROUGE) and the retention / PPE formulas.
//!
//! All scorers normalize both strings the same way: lowercase, punctuation
//! characters removed, whitespace-split. Articles are not stripped.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::is_punctuation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    F1,
    Em,
    RougeGeo,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::Em => "em",
            Metric::RougeGeo => "rouge_geo",
        }
    }

    pub fn score(self, prediction: &str, gold: &str) -> TaskScore {
        match self {
            Metric::F1 => f1_score(prediction, gold),
            Metric::Em => exact_match(prediction, gold),
            Metric::RougeGeo => rouge_geo(prediction, gold),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "f1" => Ok(Metric::F1),
            "em" => Ok(Metric::Em),
            "rouge_geo" | "rouge" => Ok(Metric::RougeGeo),
            other => Err(format!("unknown metric `{other}` (expected f1, em or rouge_geo)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub value: f64,
    pub metric: Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RetentionValue(f64);

impl RetentionValue {
    /// Clamps into `[0, 1]`.
    pub fn new(value: f64) -> Self {
        RetentionValue(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn normalize_answer(s: &str) -> String {
    let stripped: String = s
        .chars()
        .filter(|c| !is_punctuation(*c))
        .flat_map(char::to_lowercase)
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalized_tokens(s: &str) -> Vec<String> {
    normalize_answer(s)
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

fn counts<T: std::hash::Hash + Eq>(items: impl IntoIterator<Item = T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(it).or_insert(0) += 1;
    }
    m
}

fn clipped_overlap<T: std::hash::Hash + Eq>(a: &HashMap<T, usize>, b: &HashMap<T, usize>) -> usize {
    a.iter()
        .map(|(k, &ca)| b.get(k).map_or(0, |&cb| ca.min(cb)))
        .sum()
}

pub(crate) fn f_measure(overlap: usize, pred_len: usize, gold_len: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / pred_len as f64;
    let r = overlap as f64 / gold_len as f64;
    2.0 * p * r / (p + r)
}

/// Multiset token-overlap F1.
pub fn f1_score(prediction: &str, gold: &str) -> TaskScore {
    let pred = normalized_tokens(prediction);
    let gold = normalized_tokens(gold);
    let value = match (pred.is_empty(), gold.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => f_measure(
            clipped_overlap(&counts(pred.iter()), &counts(gold.iter())),
            pred.len(),
            gold.len(),
        ),
    };
    TaskScore {
        value,
        metric: Metric::F1,
    }
}

pub fn exact_match(prediction: &str, gold: &str) -> TaskScore {
    let value = if normalize_answer(prediction) == normalize_answer(gold) {
        1.0
    } else {
        0.0
    };
    TaskScore {
        value,
        metric: Metric::Em,
    }
}

fn rouge_n(pred: &[String], gold: &[String], n: usize) -> f64 {
    let grams = |t: &[String]| -> Vec<Vec<String>> {
        if t.len() < n {
            Vec::new()
        } else {
            t.windows(n).map(|w| w.to_vec()).collect()
        }
    };
    let (pg, gg) = (grams(pred), grams(gold));
    if pg.is_empty() || gg.is_empty() {
        // Too short to carry n-grams: only an exact match counts.
        return if pg.is_empty() && gg.is_empty() && pred == gold { 1.0 } else { 0.0 };
    }
    f_measure(clipped_overlap(&counts(pg.iter()), &counts(gg.iter())), pg.len(), gg.len())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeScores {
    pub rouge_1: f64,
    pub rouge_2: f64,
    pub rouge_l: f64,
}

impl RougeScores {
    /// `(R1 · R2 · RL)^(1/3)`.
    pub fn geometric_mean(&self) -> f64 {
        (self.rouge_1 * self.rouge_2 * self.rouge_l).cbrt()
    }
}

pub fn rouge(prediction: &str, gold: &str) -> RougeScores {
    let pred = normalized_tokens(prediction);
    let gold = normalized_tokens(gold);
    let rouge_l = if pred.is_empty() || gold.is_empty() {
        if pred.is_empty() && gold.is_empty() { 1.0 } else { 0.0 }
    } else {
        f_measure(lcs_len(&pred, &gold), pred.len(), gold.len())
    };
    RougeScores {
        rouge_1: rouge_n(&pred, &gold, 1),
        rouge_2: rouge_n(&pred, &gold, 2),
        rouge_l,
    }
}

pub fn rouge_geo(prediction: &str, gold: &str) -> TaskScore {
    TaskScore {
        value: rouge(prediction, gold).geometric_mean(),
        metric: Metric::RougeGeo,
    }
}

static ZERO_BASELINES: AtomicU64 = AtomicU64::new(0);

/// How many times [`retention`] has seen an uncompressed score of zero in
/// this process.
pub fn zero_baseline_events() -> u64 {
    ZERO_BASELINES.load(Ordering::Relaxed)
}

/// `min(m_r / m_full, 1)`. A zero baseline yields 1: nothing could be lost.
pub fn retention(m_r: TaskScore, m_full: TaskScore) -> Result<RetentionValue> {
    if m_r.metric != m_full.metric {
        return Err(Error::MetricMismatch {
            left: m_r.metric.to_string(),
            right: m_full.metric.to_string(),
        });
    }
    if m_full.value <= 0.0 {
        ZERO_BASELINES.fetch_add(1, Ordering::Relaxed);
        log::debug!("zero uncompressed score; retention defined as 1");
        return Ok(RetentionValue::new(1.0));
    }
    Ok(RetentionValue::new((m_r.value / m_full.value).min(1.0)))
}

/// Mean squared error between predicted and actual retentions.
pub fn ppe(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::EmptyInput("retention list"));
    }
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            what: "actual retentions",
            expected: predicted.len(),
            actual: actual.len(),
        });
    }
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(metric: Metric, value: f64) -> TaskScore {
        TaskScore { value, metric }
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score("blue whale", "blue whale").value, 1.0);
        assert_eq!(f1_score("a b", "b c").value, 0.5);
        assert_eq!(f1_score("", "x").value, 0.0);
        assert_eq!(f1_score("x", "").value, 0.0);
        assert_eq!(f1_score("", "").value, 1.0);
        // clipped counts: pred has "a" twice, gold once
        let v = f1_score("a a", "a").value;
        assert!((v - 2.0 * 0.5 * 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn exact_match_examples() {
        assert_eq!(exact_match("Paris", "paris.").value, 1.0);
        assert_eq!(exact_match("Paris", "London").value, 0.0);
        assert_eq!(exact_match("the Paris", "Paris").value, 0.0);
        assert_eq!(exact_match("  New   York ", "new york").value, 1.0);
    }

    #[test]
    fn rouge_examples() {
        let id = rouge("the cat sat", "the cat sat");
        assert_eq!((id.rouge_1, id.rouge_2, id.rouge_l), (1.0, 1.0, 1.0));
        assert_eq!(rouge_geo("the cat sat", "the cat sat").value, 1.0);

        let swapped = rouge("a b c", "a c b");
        assert_eq!(swapped.rouge_1, 1.0);
        assert_eq!(swapped.rouge_2, 0.0);
        assert_eq!(rouge_geo("a b c", "a c b").value, 0.0);

        let lcs = rouge("a b c d", "a b x d");
        assert!((lcs.rouge_l - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_token_rouge() {
        assert_eq!(rouge_geo("yes", "Yes.").value, 1.0);
        assert_eq!(rouge_geo("yes", "no").value, 0.0);
    }

    /// Brute-force LCS over all subsequences of the shorter input.
    fn lcs_brute(a: &[String], b: &[String]) -> usize {
        let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let mut best = 0;
        for mask in 0u32..(1 << short.len()) {
            let sub: Vec<&String> = (0..short.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| &short[i])
                .collect();
            let mut it = long.iter();
            if sub.iter().all(|s| it.any(|x| x == *s)) {
                best = best.max(sub.len());
            }
        }
        best
    }

    #[test]
    fn retention_examples() {
        let r = |a, b| retention(s(Metric::F1, a), s(Metric::F1, b)).unwrap().value();
        assert_eq!(r(0.8, 0.8), 1.0);
        assert_eq!(r(0.9, 0.6), 1.0);
        assert_eq!(r(0.3, 0.6), 0.5);
        let before = zero_baseline_events();
        assert_eq!(r(0.0, 0.0), 1.0);
        assert!(zero_baseline_events() > before);
        assert!(matches!(
            retention(s(Metric::F1, 0.5), s(Metric::Em, 1.0)),
            Err(Error::MetricMismatch { .. })
        ));
    }

    #[test]
    fn ppe_examples() {
        assert_eq!(ppe(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(ppe(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!((ppe(&[0.5, 0.9], &[0.7, 0.6]).unwrap() - 0.065).abs() < 1e-15);
        assert!(matches!(ppe(&[], &[]), Err(Error::EmptyInput(_))));
        assert!(matches!(ppe(&[0.1], &[0.1, 0.2]), Err(Error::LengthMismatch { .. })));
    }

    proptest! {
        #[test]
        fn lcs_matches_brute_force(
            a in prop::collection::vec(0u8..3, 0..9),
            b in prop::collection::vec(0u8..3, 0..9),
        ) {
            let a: Vec<String> = a.iter().map(|x| x.to_string()).collect();
            let b: Vec<String> = b.iter().map(|x| x.to_string()).collect();
            prop_assert_eq!(lcs_len(&a, &b), lcs_brute(&a, &b));
        }

        #[test]
        fn scorers_are_reflexive(words in prop::collection::vec("[a-z]{1,6}", 1..12)) {
            let text = words.join(" ");
            prop_assert_eq!(f1_score(&text, &text).value, 1.0);
            prop_assert_eq!(rouge_geo(&text, &text).value, 1.0);
            prop_assert_eq!(exact_match(&text, &text).value, 1.0);
        }

        #[test]
        fn retention_in_unit_interval(a in 0.0f64..2.0, b in 0.0f64..2.0) {
            let v = retention(s(Metric::F1, a), s(Metric::F1, b)).unwrap().value();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn ppe_nonnegative_and_permutation_invariant(
            pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..40),
            seed in any::<u64>(),
        ) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let base = ppe(&p, &a).unwrap();
            prop_assert!(base >= 0.0);
            prop_assert_eq!(ppe(&p, &p).unwrap(), 0.0);
            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            idx.rotate_left((seed as usize) % pairs.len());
            let p2: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
            let a2: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
            prop_assert!((ppe(&p2, &a2).unwrap() - base).abs() < 1e-12);
        }
    }
}
