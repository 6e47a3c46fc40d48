//! Order-free summary features of a chunk's importance distribution.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text::{Chunk, ImportanceScores, CHUNK_TOKENS, IMPORTANCE_VERSION};

pub const FEATURE_DIM: usize = 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub version: String,
    /// Quantile levels of the score distribution (ten of them).
    pub quantiles: Vec<f64>,
    pub histogram_bins: usize,
    /// Chunk length that maps to a length fraction of 1.
    pub reference_length: usize,
    /// Top-token fractions for the cumulative importance mass features.
    pub top_fractions: Vec<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            version: "features-v1".into(),
            quantiles: (0..10).map(|j| (j as f64 + 0.5) / 10.0).collect(),
            histogram_bins: 10,
            reference_length: CHUNK_TOKENS,
            top_fractions: vec![0.1, 0.25, 0.5],
        }
    }
}

impl FeatureConfig {
    /// Hex SHA-256 over this config and the importance weights version.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).expect("config serializes"));
        hasher.update(IMPORTANCE_VERSION.as_bytes());
        hex::encode(hasher.finalize())
    }

    fn dim(&self) -> usize {
        self.quantiles.len() + 4 + 1 + self.top_fractions.len()
    }
}

/// Layout: quantiles (10), mean, max, normalized histogram entropy, Gini,
/// length fraction, top-{10,25,50}% importance mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn extract_features(chunk: &Chunk<'_>, scores: &ImportanceScores) -> Result<FeatureVector> {
    extract_features_with(&FeatureConfig::default(), chunk, scores)
}

pub fn extract_features_with(
    config: &FeatureConfig,
    chunk: &Chunk<'_>,
    scores: &ImportanceScores,
) -> Result<FeatureVector> {
    if chunk.is_empty() {
        return Err(Error::EmptyChunk);
    }
    if scores.len() != chunk.len() {
        return Err(Error::LengthMismatch {
            what: "importance scores",
            expected: chunk.len(),
            actual: scores.len(),
        });
    }
    from_scores(config, &scores.scores)
}

pub(crate) fn from_scores(config: &FeatureConfig, scores: &[f64]) -> Result<FeatureVector> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("importance scores"));
    }
    let n = scores.len();
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();

    let mut out = Vec::with_capacity(config.dim());
    out.extend(config.quantiles.iter().map(|&p| quantile(&sorted, p)));

    out.push(total / n as f64);
    out.push(sorted[n - 1]);

    let bins = config.histogram_bins;
    let mut hist = vec![0usize; bins];
    for &s in &sorted {
        hist[((s * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let entropy: f64 = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n as f64;
            -q * q.ln()
        })
        .sum();
    out.push(entropy / (bins as f64).ln());

    let gini = if total > 0.0 {
        let weighted: f64 = sorted
            .iter()
            .enumerate()
            .map(|(i, x)| (2.0 * (i + 1) as f64 - n as f64 - 1.0) * x)
            .sum();
        weighted / (n as f64 * total)
    } else {
        0.0
    };
    out.push(gini);

    out.push(n as f64 / config.reference_length as f64);

    for &f in &config.top_fractions {
        let k = ((f * n as f64).ceil() as usize).clamp(1, n);
        let mass = if total > 0.0 {
            sorted[n - k..].iter().sum::<f64>() / total
        } else {
            k as f64 / n as f64
        };
        out.push(mass);
    }
    Ok(FeatureVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feats(scores: &[f64]) -> FeatureVector {
        let toks: Vec<String> = (0..scores.len()).map(|i| i.to_string()).collect();
        extract_features(
            &Chunk::standalone(&toks),
            &ImportanceScores {
                scores: scores.to_vec(),
            },
        )
        .unwrap()
    }

    #[test]
    fn degenerate_distribution() {
        let f = feats(&[0.5; 20]);
        assert_eq!(f.0.len(), FEATURE_DIM);
        assert!(f.0[..10].iter().all(|&q| q == 0.5));
        assert_eq!(f.0[10], 0.5); // mean
        assert_eq!(f.0[11], 0.5); // max
        assert_eq!(f.0[12], 0.0); // entropy
        assert_eq!(f.0[13], 0.0); // gini
    }

    #[test]
    fn order_free() {
        let a = [0.1, 0.9, 0.3, 0.3, 0.75, 0.0, 1.0];
        let mut b = a;
        b.reverse();
        b.swap(1, 4);
        assert_eq!(feats(&a), feats(&b));
    }

    #[test]
    fn empty_and_misaligned() {
        let none: Vec<String> = vec![];
        let err = extract_features(&Chunk::standalone(&none), &ImportanceScores { scores: vec![] });
        assert!(matches!(err, Err(Error::EmptyChunk)));
        let toks = vec!["a".to_string()];
        let err = extract_features(&Chunk::standalone(&toks), &ImportanceScores { scores: vec![0.1, 0.2] });
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn all_zero_scores_are_finite() {
        let f = feats(&[0.0; 7]);
        assert!(f.is_finite());
        assert_eq!(f.0[13], 0.0);
    }

    /// Values computed independently with numpy (linear quantiles, np.histogram
    /// entropy over 10 bins, sorted-rank Gini) and frozen here.
    #[test]
    fn golden_sixteen_tokens() {
        let scores = [
            0.05, 0.9, 0.35, 0.35, 0.6, 0.0, 0.12, 0.77, 0.5, 0.5, 0.98, 0.21, 0.44, 0.66, 0.3, 0.8,
        ];
        let expected = [
            0.037500000000000006,
            0.1425,
            0.27749999999999997,
            0.35,
            0.4175,
            0.5,
            0.575,
            0.6875,
            0.7925,
            0.92,
            0.470625,
            0.98,
            0.9641447495639973,
            0.35317065073041165,
            0.03125,
            0.24966799468791498,
            0.45816733067729076,
            0.7583001328021248,
        ];
        let f = feats(&scores);
        for (i, (got, want)) in f.0.iter().zip(expected.iter()).enumerate() {
            assert!((got - want).abs() < 1e-12, "feature {i}: {got} vs {want}");
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = FeatureConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.histogram_bins = 12;
        assert_ne!(a.hash(), b.hash());
    }
}
