//! Performance-constrained context compression.
//!
//! Instead of asking for a compression ratio, callers state the fraction of
//! task performance they are willing to keep. Each 512-token chunk gets the
//! smallest ratio whose predicted retention meets that floor, and is then
//! pruned to its highest-importance tokens.

pub mod bench;
pub mod cli;
pub mod compressor;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod predictor;
pub mod scoring;
pub mod search;
pub mod text;
pub mod workers;

pub use error::{Error, Result};
