//! Readers: anything that turns (compressed context, instruction) into an
//! answer.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{join_tokens, tokenize};

#[derive(Debug, Error)]
pub enum ReaderError {
    #[error("reader request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },

    #[error("reader returned HTTP {status} after {attempts} attempt(s)")]
    Status { status: u16, attempts: u32 },

    #[error("malformed reader response: {0}")]
    Malformed(String),

    #[error("reader transport error after {attempts} attempt(s): {msg}")]
    Transport { msg: String, attempts: u32 },

    #[error("reader misconfigured: {0}")]
    Config(String),

    #[error("synthetic reader cannot parse instruction: {0}")]
    Instruction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReaderKind {
    SyntheticNeedle,
    SyntheticCoverage,
    Http,
}

impl fmt::Display for ReaderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReaderKind::SyntheticNeedle => "synthetic-needle",
            ReaderKind::SyntheticCoverage => "synthetic-coverage",
            ReaderKind::Http => "http",
        })
    }
}

impl FromStr for ReaderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synthetic-needle" => Ok(ReaderKind::SyntheticNeedle),
            "synthetic-coverage" => Ok(ReaderKind::SyntheticCoverage),
            "http" => Ok(ReaderKind::Http),
            other => Err(format!(
                "unknown reader `{other}` (expected synthetic-needle, synthetic-coverage or http)"
            )),
        }
    }
}

pub trait ReaderOracle: Send + Sync {
    fn kind(&self) -> ReaderKind;

    fn read(&self, context: &str, instruction: &str) -> Result<String, ReaderError>;
}

/// First token of the instruction that parses as an unsigned integer.
fn instruction_count(instruction: &str) -> Result<usize, ReaderError> {
    tokenize(instruction)
        .tokens
        .iter()
        .find_map(|t| t.parse::<usize>().ok())
        .ok_or_else(|| ReaderError::Instruction(instruction.to_owned()))
}

pub const UNKNOWN_ANSWER: &str = "unknown";

/// Answers with every digit-bearing token in the context, provided at least
/// as many survive as the instruction asks for.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticNeedleReader;

impl ReaderOracle for SyntheticNeedleReader {
    fn kind(&self) -> ReaderKind {
        ReaderKind::SyntheticNeedle
    }

    fn read(&self, context: &str, instruction: &str) -> Result<String, ReaderError> {
        let expected = instruction_count(instruction)?;
        let ctx = tokenize(context);
        let found: Vec<&String> = ctx
            .tokens
            .iter()
            .filter(|t| t.chars().any(|c| c.is_ascii_digit()))
            .collect();
        if found.len() < expected {
            Ok(UNKNOWN_ANSWER.to_owned())
        } else {
            Ok(join_tokens(&found))
        }
    }
}

/// Lists the capitalized tokens of the context, padded with `unknown` up to
/// the count the instruction asks for.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticCoverageReader;

impl ReaderOracle for SyntheticCoverageReader {
    fn kind(&self) -> ReaderKind {
        ReaderKind::SyntheticCoverage
    }

    fn read(&self, context: &str, instruction: &str) -> Result<String, ReaderError> {
        let expected = instruction_count(instruction)?;
        let ctx = tokenize(context);
        let mut out: Vec<&str> = ctx
            .tokens
            .iter()
            .filter(|t| t.chars().next().is_some_and(|c| c.is_uppercase()))
            .map(String::as_str)
            .collect();
        while out.len() < expected {
            out.push(UNKNOWN_ANSWER);
        }
        Ok(join_tokens(&out))
    }
}

/// JSON-over-HTTP reader with bounded retries.
#[derive(Debug)]
pub struct HttpReader {
    endpoint: String,
    client: reqwest::blocking::Client,
    max_attempts: u32,
    backoff: Duration,
}

#[derive(Serialize)]
struct ReadRequest<'a> {
    context: &'a str,
    instruction: &'a str,
}

enum Attempt {
    Retry(ReaderError),
    Fatal(ReaderError),
}

impl HttpReader {
    pub fn new(
        endpoint: impl Into<String>,
        timeout: Duration,
        max_attempts: u32,
        backoff: Duration,
    ) -> Result<Self, ReaderError> {
        let endpoint = endpoint.into();
        if endpoint.is_empty() {
            return Err(ReaderError::Config("http reader needs an endpoint".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ReaderError::Config(e.to_string()))?;
        Ok(HttpReader {
            endpoint,
            client,
            max_attempts: max_attempts.max(1),
            backoff,
        })
    }

    fn attempt(&self, body: &ReadRequest<'_>, n: u32) -> Result<String, Attempt> {
        let resp = self.client.post(&self.endpoint).json(body).send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(ReaderError::Timeout { attempts: n })
            } else {
                Attempt::Retry(ReaderError::Transport {
                    msg: e.to_string(),
                    attempts: n,
                })
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let err = ReaderError::Status {
                status: status.as_u16(),
                attempts: n,
            };
            return Err(if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        let value: serde_json::Value = resp.json().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(ReaderError::Timeout { attempts: n })
            } else {
                Attempt::Fatal(ReaderError::Malformed(e.to_string()))
            }
        })?;
        match value.get("output").and_then(|v| v.as_str()) {
            Some(s) => Ok(s.to_owned()),
            None => Err(Attempt::Fatal(ReaderError::Malformed(
                "response lacks a string `output` field".into(),
            ))),
        }
    }
}

impl ReaderOracle for HttpReader {
    fn kind(&self) -> ReaderKind {
        ReaderKind::Http
    }

    fn read(&self, context: &str, instruction: &str) -> Result<String, ReaderError> {
        let body = ReadRequest {
            context,
            instruction,
        };
        let mut n = 1;
        loop {
            match self.attempt(&body, n) {
                Ok(s) => return Ok(s),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) if n >= self.max_attempts => return Err(e),
                Err(Attempt::Retry(e)) => {
                    log::warn!("reader attempt {n} failed: {e}; retrying");
                    std::thread::sleep(self.backoff * 2u32.pow(n - 1));
                    n += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReaderConfig {
    pub kind: ReaderKind,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    /// Total attempts per query, including the first.
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for ReaderConfig {
    fn default() -> Self {
        ReaderConfig {
            kind: ReaderKind::SyntheticNeedle,
            endpoint: None,
            timeout_ms: 30_000,
            max_attempts: 3,
            backoff_ms: 200,
        }
    }
}

impl ReaderConfig {
    pub fn build(&self) -> Result<Box<dyn ReaderOracle>, ReaderError> {
        Ok(match self.kind {
            ReaderKind::SyntheticNeedle => Box::new(SyntheticNeedleReader),
            ReaderKind::SyntheticCoverage => Box::new(SyntheticCoverageReader),
            ReaderKind::Http => Box::new(HttpReader::new(
                self.endpoint.clone().unwrap_or_default(),
                Duration::from_millis(self.timeout_ms),
                self.max_attempts,
                Duration::from_millis(self.backoff_ms),
            )?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needle_reader() {
        let r = SyntheticNeedleReader;
        let q = "What is the 2 - part passkey ?";
        assert_eq!(r.read("a Kq1234 b Zz9876 c", q).unwrap(), "Kq1234 Zz9876");
        assert_eq!(r.read("a Kq1234 b", q).unwrap(), UNKNOWN_ANSWER);
        assert_eq!(r.read("7 Kq1234 b Zz9876", q).unwrap(), "7 Kq1234 Zz9876");
        assert!(matches!(r.read("x", "no count"), Err(ReaderError::Instruction(_))));
    }

    #[test]
    fn coverage_reader_pads() {
        let r = SyntheticCoverageReader;
        let q = "List the 3 key names .";
        assert_eq!(r.read("the Alpha and Beta", q).unwrap(), "Alpha Beta unknown");
        assert_eq!(r.read("", q).unwrap(), "unknown unknown unknown");
    }

    #[test]
    fn reader_kind_names() {
        for k in [ReaderKind::SyntheticNeedle, ReaderKind::SyntheticCoverage, ReaderKind::Http] {
            assert_eq!(k.to_string().parse::<ReaderKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{k}\""));
        }
    }

    #[test]
    fn http_needs_endpoint() {
        let cfg = ReaderConfig {
            kind: ReaderKind::Http,
            ..ReaderConfig::default()
        };
        assert!(matches!(cfg.build(), Err(ReaderError::Config(_))));
    }
}
