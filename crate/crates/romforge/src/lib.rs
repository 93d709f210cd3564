//! File formats, configuration, the offline/online pipeline, reports and the
//! `romforge` command line on top of [`romforge_core`].

pub use romforge_core as core;

pub mod cache;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
