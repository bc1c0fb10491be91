//! Batch front end for idslab experiments: strict TOML configs, a rayon
//! realization runner, CSV/JSON reports and a config-hash result cache.
//!
//! The numerics live in [`idslab_core`]; this crate only orchestrates them.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod record;
pub mod selftest;

pub use commands::{run, RunOptions};
pub use config::{parse_config, Command, RunConfig};
pub use error::RunError;
pub use record::RunRecord;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
