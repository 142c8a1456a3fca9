//! Batch CLI and HTTP service around the `sdgmap-core` classifier.

pub mod cli;
pub mod config;
pub mod pipeline;
pub mod server;
