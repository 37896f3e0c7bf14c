//! Clean-sample selection for noisy labels by penalized mean-shift regression.
//!
//! A linear model `Y = Xβ + γ + ε` is fitted to one-hot labels where each
//! sample carries a mean-shift row `γ_i`. A group-lasso path on `γ` ranks
//! samples by how early their row activates; early rows are likely noisy.
//!
//! * [`spr`] keeps a fixed fraction of the latest-activating samples.
//! * [`knockoff`] compares every sample against a permuted-label copy and
//!   chooses a data-adaptive cutoff that bounds the false-selection rate.
//! * [`splitter`] cuts large datasets into class-balanced pieces.
//! * [`synth`], [`metrics`] and [`diagnostics`] support benchmarking.
//!
//! The crate is `no_std` and only needs an allocator. Threading, file formats
//! and the command line live in the `kspr` crate.
#![no_std]

extern crate alloc;

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod knockoff;
pub mod metrics;
pub mod numerics;
pub mod path;
pub mod seed;
pub mod splitter;
pub mod spr;
pub mod synth;

pub use dataset::{LabeledDataset, OneHotLabels};
pub use error::{Error, Result};
pub use knockoff::{KnockoffConfig, Mode, PermutationStrategy};
pub use spr::SelectionOutcome;

pub use nalgebra::DMatrix;
