//! Run configuration: a TOML manifest whose values command-line flags
//! override.
//!
//! ```toml
//! seed = 7
//! parallelism = 8
//!
//! [selector]
//! mode = "theorem"
//! q = 0.2
//!
//! [data]
//! n = 1000
//! noise_rate = 0.4
//!
//! [bench]
//! repeats = 50
//! noise_rates = [0.2, 0.4]
//! targets = [0.1, 0.2, 0.3]
//! ```

use std::fs;
use std::path::Path;

use kspr_core::knockoff::{EntryTimeRule, KnockoffConfig, Mode, PermutationStrategy};
use kspr_core::path::PathOptions;
use kspr_core::splitter::{DEFAULT_GROUP_SIZE, DEFAULT_PIECE_SIZE};
use kspr_core::spr::SprConfig;
use kspr_core::synth::{NoiseKind, SyntheticSpec};
use serde::{Deserialize, Serialize};

use crate::error::{KsprError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Nominal,
    Theorem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PermuteArg {
    Random,
    Confident,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NoiseArg {
    Symmetric,
    Asymmetric,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Symmetric => NoiseKind::Symmetric,
            NoiseArg::Asymmetric => NoiseKind::Asymmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorSection {
    pub mode: ModeArg,
    /// Highest level of the threshold sweep.
    pub q: f64,
    pub per_class: bool,
    pub permute: PermuteArg,
    /// Plain fixed-fraction selection instead of the knockoff filter.
    pub spr: bool,
    /// Fraction kept by plain selection and by the cleaning pass.
    pub keep: f64,
    pub group_size: usize,
    pub piece_size: usize,
    /// Grid length for the paired paths; `0` uses exact entry times.
    pub knockoff_grid: usize,
    pub grid_len: usize,
    pub grid_floor: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SelectorSection {
    fn default() -> Self {
        let spr = SprConfig::default();
        Self {
            mode: ModeArg::Nominal,
            q: 0.5,
            per_class: true,
            permute: PermuteArg::Random,
            spr: false,
            keep: spr.keep_fraction,
            group_size: DEFAULT_GROUP_SIZE,
            piece_size: DEFAULT_PIECE_SIZE,
            knockoff_grid: 0,
            grid_len: spr.grid_len,
            grid_floor: spr.grid_floor,
            tol: spr.path.tol,
            max_iter: spr.path.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub n: usize,
    pub p: usize,
    pub c: usize,
    pub noise_rate: f64,
    pub noise_kind: NoiseArg,
    pub sigma: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        Self { n: s.n, p: s.p, c: s.c, noise_rate: s.noise_rate, noise_kind: NoiseArg::Symmetric, sigma: s.sigma }
    }
}

/// Parameter grid swept by `bench`; empty lists fall back to the `[data]`
/// and `[selector]` values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub repeats: Option<usize>,
    pub noise_rates: Vec<f64>,
    pub targets: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub noise_kinds: Vec<NoiseArg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSection {
    pub lambda: f64,
    pub eta: f64,
    pub sigma: f64,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self { lambda: 1.0, eta: 0.5, sigma: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub parallelism: usize,
    pub selector: SelectorSection,
    pub data: DataSection,
    pub bench: BenchSection,
    pub diagnose: DiagnoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            parallelism: 1,
            selector: SelectorSection::default(),
            data: DataSection::default(),
            bench: BenchSection::default(),
            diagnose: DiagnoseSection::default(),
        }
    }
}

pub const DEFAULT_REPEATS: usize = 10;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| KsprError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| KsprError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.selector;
        let bad = |msg: String| Err(KsprError::Config(msg));
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if !(s.q > 0.0 && s.q <= 1.0) {
            return bad(format!("q must lie in (0, 1], got {}", s.q));
        }
        if !(s.keep > 0.0 && s.keep < 1.0) {
            return bad(format!("keep must lie in (0, 1), got {}", s.keep));
        }
        if s.group_size == 0 {
            return bad("group_size must be at least 1".into());
        }
        if s.piece_size < 2 {
            return bad(format!("piece_size must be at least 2, got {}", s.piece_size));
        }
        if s.grid_len < 2 || !(s.grid_floor > 0.0 && s.grid_floor < 1.0) {
            return bad("grid_len must be at least 2 and grid_floor in (0, 1)".into());
        }
        if !(s.tol > 0.0) || s.max_iter == 0 {
            return bad("tol and max_iter must be positive".into());
        }
        if s.knockoff_grid == 1 {
            return bad("knockoff_grid must be 0 (exact) or at least 2".into());
        }
        let d = &self.data;
        if !(0.0..1.0).contains(&d.noise_rate) || !(d.sigma >= 0.0) {
            return bad("noise_rate must lie in [0, 1) and sigma be non-negative".into());
        }
        if self.bench.repeats.is_some_and(|r| r < 2) {
            return bad("bench repeats must be at least 2".into());
        }
        if self.bench.noise_rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return bad("bench noise rates must lie in [0, 1)".into());
        }
        if self.bench.targets.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return bad("bench targets must lie in (0, 1]".into());
        }
        let g = &self.diagnose;
        if !(g.lambda > 0.0) || !(g.eta > 0.0 && g.eta <= 1.0) || !(g.sigma >= 0.0) {
            return bad("diagnose needs lambda > 0, eta in (0, 1] and sigma >= 0".into());
        }
        Ok(())
    }

    pub fn spr_config(&self) -> SprConfig {
        let s = &self.selector;
        SprConfig {
            keep_fraction: s.keep,
            grid_len: s.grid_len,
            grid_floor: s.grid_floor,
            path: PathOptions { tol: s.tol, max_iter: s.max_iter },
        }
    }

    pub fn knockoff_config(&self) -> KnockoffConfig {
        let s = &self.selector;
        KnockoffConfig {
            mode: match s.mode {
                ModeArg::Nominal => Mode::Nominal,
                ModeArg::Theorem => Mode::TheoremCorrected,
            },
            q: s.q,
            per_class: s.per_class,
            permutation: match s.permute {
                PermuteArg::Random => PermutationStrategy::Random,
                PermuteArg::Confident => PermutationStrategy::MostConfident,
            },
            entry_times: match s.knockoff_grid {
                0 => EntryTimeRule::Exact,
                len => EntryTimeRule::Grid { len, floor: s.grid_floor },
            },
            spr: self.spr_config(),
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        let d = &self.data;
        SyntheticSpec {
            n: d.n,
            p: d.p,
            c: d.c,
            noise_rate: d.noise_rate,
            noise_kind: d.noise_kind.into(),
            sigma: d.sigma,
            seed: self.seed,
        }
    }
}
