//! File formats, experiment configuration and the command-line front end
//! for [`hetverify_core`].

pub mod checkpoint;
pub mod cli;
pub mod codec;
pub mod config;
pub mod dataset;
mod error;
pub mod fsio;
pub mod report;

pub use error::{Error, Result};
