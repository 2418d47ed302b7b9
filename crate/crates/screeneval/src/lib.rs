//! File formats, parallel drivers and the command-line tool built on
//! `screeneval-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod features;
pub mod formats;
pub mod manifest;
pub mod output;
pub mod pipeline;
pub mod wav;
