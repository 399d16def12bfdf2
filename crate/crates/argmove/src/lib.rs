//! File formats, reports, the remote classifier client and the command line
//! around [`argmove_core`].

pub mod backend;
pub mod cli;
pub mod config;
pub mod format;
pub mod remote;
pub mod report;
pub mod run;

pub use argmove_core as core;
