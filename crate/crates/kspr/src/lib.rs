//! Files, configuration, thread pools and the `kspr` command line on top of
//! [`kspr_core`].

pub mod bench;
pub mod commands;
pub mod config;
pub mod container;
pub mod diagnose;
pub mod error;
pub mod runner;
pub mod select;

pub use config::RunConfig;
pub use error::{KsprError, Result};
