//! Run configuration: a sectioned TOML file, overridden by command-line
//! flags, overridden by `POC_<SECTION>_<KEY>` environment variables.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::SyntheticKind;
use crate::pipeline::{ReaderConfig, ReaderKind, RatioSampler};
use crate::predictor::{PredictorKind, TrainingConfig};
use crate::scoring::Metric;
use crate::text::CHUNK_TOKENS;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSection {
    pub kind: SyntheticKind,
    pub count: usize,
    pub context_length: usize,
    pub needle_tokens: usize,
    pub needle_position: Option<usize>,
    pub salient_fraction: f64,
    pub decoys: usize,
    /// Defaults depend on `kind` when absent.
    pub competitor_fraction: Option<[f64; 2]>,
    pub stop_fraction: Option<[f64; 2]>,
}

impl Default for GenSection {
    fn default() -> Self {
        GenSection {
            kind: SyntheticKind::NeedleQa,
            count: 100,
            context_length: CHUNK_TOKENS,
            needle_tokens: 5,
            needle_position: None,
            salient_fraction: 0.5,
            decoys: 10,
            competitor_fraction: None,
            stop_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressorSection {
    pub chunk_size: usize,
    pub position_weight: f64,
}

impl Default for CompressorSection {
    fn default() -> Self {
        CompressorSection {
            chunk_size: CHUNK_TOKENS,
            position_weight: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerLaw {
    Grid,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectSection {
    pub sampler: SamplerLaw,
    pub ratios: usize,
    pub anchor_zero: bool,
    pub metric: Metric,
}

impl Default for CollectSection {
    fn default() -> Self {
        CollectSection {
            sampler: SamplerLaw::Grid,
            ratios: 10,
            anchor_zero: true,
            metric: Metric::F1,
        }
    }
}

impl CollectSection {
    pub fn sampler(&self, seed: u64) -> RatioSampler {
        match self.sampler {
            SamplerLaw::Grid => RatioSampler::Grid { n: self.ratios },
            SamplerLaw::Uniform => RatioSampler::Uniform {
                n: self.ratios,
                seed,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReaderSection {
    /// Inferred from the dataset tag when absent.
    pub kind: Option<ReaderKind>,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for ReaderSection {
    fn default() -> Self {
        let d = ReaderConfig::default();
        ReaderSection {
            kind: None,
            endpoint: None,
            timeout_ms: d.timeout_ms,
            max_attempts: d.max_attempts,
            backoff_ms: d.backoff_ms,
        }
    }
}

impl ReaderSection {
    pub fn to_config(&self, kind: ReaderKind) -> ReaderConfig {
        ReaderConfig {
            kind,
            endpoint: self.endpoint.clone(),
            timeout_ms: self.timeout_ms,
            max_attempts: self.max_attempts,
            backoff_ms: self.backoff_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorSection {
    pub kind: PredictorKind,
    pub floor: Option<f64>,
}

impl Default for PredictorSection {
    fn default() -> Self {
        PredictorSection {
            kind: PredictorKind::Agnostic,
            floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Poc,
    FixedRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub policy: PolicyKind,
    pub floors: Vec<f64>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            policy: PolicyKind::Poc,
            floors: (0..=20).map(|i| i as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesSection {
    pub samples: usize,
}

impl Default for CurvesSection {
    fn default() -> Self {
        CurvesSection { samples: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub runs: usize,
    pub floor: f64,
    pub chunk_tokens: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            runs: 100,
            floor: 0.9,
            chunk_tokens: CHUNK_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: usize,
    pub paths: Paths,
    pub gen: GenSection,
    pub compressor: CompressorSection,
    pub collect: CollectSection,
    pub reader: ReaderSection,
    pub predictor: PredictorSection,
    pub train: TrainingConfig,
    pub evaluate: EvaluateSection,
    pub curves: CurvesSection,
    pub bench: BenchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            workers: 1,
            paths: Paths::default(),
            gen: GenSection::default(),
            compressor: CompressorSection::default(),
            collect: CollectSection::default(),
            reader: ReaderSection::default(),
            predictor: PredictorSection::default(),
            train: TrainingConfig::default(),
            evaluate: EvaluateSection::default(),
            curves: CurvesSection::default(),
            bench: BenchSection::default(),
        }
    }
}

impl RunConfig {
    /// Short digest of everything that can change an output. File paths and
    /// the worker count are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        c.workers = 1;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

/// A dotted-path override such as `("reader.timeout_ms", 500)`.
pub type Override = (String, toml::Value);

fn set_path(root: &mut toml::Table, path: &str, value: toml::Value) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("non-empty path");
    let mut table = root;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("config sections are tables");
    }
    table.insert(last.to_owned(), value);
}

/// Interprets an environment value as a TOML literal, falling back to a string.
fn parse_env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

/// Every settable dotted key, from the serialized default configuration.
fn known_keys() -> Vec<String> {
    let v = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    let mut keys = Vec::new();
    for (k, v) in v.as_object().expect("object") {
        match v.as_object() {
            Some(section) => keys.extend(section.keys().map(|s| format!("{k}.{s}"))),
            None => keys.push(k.clone()),
        }
    }
    keys
}

pub fn env_var_name(key: &str) -> String {
    format!("POC_{}", key.replace('.', "_").to_uppercase())
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
}

/// Builds the effective configuration. `env` supplies variable lookups so
/// tests need not touch the process environment.
pub fn load_config<E>(file: Option<&Path>, flags: &[Override], env: E) -> Result<RunConfig, ConfigError>
where
    E: Fn(&str) -> Option<String>,
{
    let mut root = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_owned(),
                source,
            })?;
            toml::from_str::<toml::Table>(&text).map_err(|e| ConfigError::Parse(e.to_string()))?
        }
        None => toml::Table::new(),
    };
    for (k, v) in flags {
        set_path(&mut root, k, v.clone());
    }
    for key in known_keys() {
        if let Some(raw) = env(&env_var_name(&key)) {
            set_path(&mut root, &key, parse_env_value(&raw));
        }
    }
    toml::Value::Table(root)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
}
