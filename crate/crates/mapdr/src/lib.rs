//! File formats, parallel evaluation and the `mapdr` command line on top
//! of [`mapdr_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod cli;
pub mod config;
pub mod error;
pub mod osm;
pub mod records;
pub mod trips;

pub use config::{Config, ConfigError};
pub use error::FileError;
