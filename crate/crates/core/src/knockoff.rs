//! Knockoff-calibrated selection with false-selection-rate control.
//!
//! The data are halved. Coefficients fitted on one half (after a
//! fixed-fraction cleaning pass) predict the other half, where every sample
//! is compared with a copy of itself carrying a permuted label. The entry
//! time `Z` of the observed label and `Z̃` of the permuted one give
//! `W = Z · sign(Z − Z̃)`: clean samples tend to small negative `W`, noisy
//! samples to large `W` of either sign. The selected set is
//! `{j : −T ≤ W_j < 0}` for the largest `T` whose knockoff ratio stays below
//! the test level.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{LabeledDataset, OneHotLabels};
use crate::error::{Error, Result};
use crate::numerics::ols_fit;
use crate::path::{self, Design, LambdaGrid, PathOptions};
use crate::seed::{self, Stream};
use crate::spr::{self, keep_count, SelectionOutcome, SprConfig};

/// Increment of the level sweep.
pub const Q_STEP: f64 = 0.02;
/// The sweep stops below this level; selection then falls back to the most
/// clean-looking half.
pub const Q_CAP: f64 = 0.5;

/// How the per-half test level relates to the swept level `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Test at `q` directly.
    #[default]
    Nominal,
    /// Test at `(c − 2)/(2c) · q`, the level under which the union of both
    /// halves has false-selection rate at most `q`. Requires `c ≥ 3`.
    TheoremCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermutationStrategy {
    /// Uniform over the classes other than the observed one.
    #[default]
    Random,
    /// The highest-scoring class other than the observed one.
    MostConfident,
}

/// How entry times are read off the decoupled paths.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EntryTimeRule {
    /// With identity design the path of row `i` is `γ_i(λ) = (1 − λ/‖R_i‖)₊ R_i`,
    /// so `sup{λ : γ_i(λ) ≠ 0} = ‖R_i‖` exactly.
    #[default]
    Exact,
    /// Solve both paths on a shared log-spaced grid and take the first grid
    /// value at which each row is nonzero.
    Grid { len: usize, floor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnockoffConfig {
    pub mode: Mode,
    /// Highest level the sweep may reach.
    pub q: f64,
    /// Threshold each observed class separately.
    pub per_class: bool,
    pub permutation: PermutationStrategy,
    pub entry_times: EntryTimeRule,
    /// Cleaning pass on the fitting half.
    pub spr: SprConfig,
}

impl Default for KnockoffConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Nominal,
            q: Q_CAP,
            per_class: true,
            permutation: PermutationStrategy::Random,
            entry_times: EntryTimeRule::Exact,
            spr: SprConfig::default(),
        }
    }
}

impl KnockoffConfig {
    pub fn validate(&self, classes: usize) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidConfig(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if self.mode == Mode::TheoremCorrected && classes < 3 {
            return Err(Error::InvalidConfig(format!(
                "theorem-corrected level needs at least 3 classes, got {classes}"
            )));
        }
        if !(self.spr.keep_fraction > 0.0 && self.spr.keep_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "keep fraction must lie in (0, 1), got {}",
                self.spr.keep_fraction
            )));
        }
        Ok(())
    }

    /// Threshold test level used when the sweep is at `q`.
    pub fn test_level(&self, q: f64, classes: usize) -> f64 {
        match self.mode {
            Mode::Nominal => q,
            Mode::TheoremCorrected => theorem_factor(classes) * q,
        }
    }
}

/// `(c − 2) / (2c)`.
pub fn theorem_factor(classes: usize) -> f64 {
    let c = classes as f64;
    (c - 2.0) / (2.0 * c)
}

/// Levels visited by the sweep: multiples of [`Q_STEP`] strictly below
/// [`Q_CAP`] and not above `target`. A target below the first step is tested
/// on its own.
pub fn sweep_levels(target: f64) -> Vec<f64> {
    let steps = libm::round(1.0 / Q_STEP) as usize;
    let levels: Vec<f64> = (1..)
        .map(|k| k as f64 / steps as f64)
        .take_while(|&q| q < Q_CAP && q <= target + 1e-12)
        .collect();
    if levels.is_empty() {
        vec![target.min(Q_CAP)]
    } else {
        levels
    }
}

/// Permuted labels for a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationPlan {
    pub strategy: PermutationStrategy,
    pub permuted: Vec<usize>,
    pub seed: u64,
}

/// Draws a knockoff label different from the observed label for every sample.
///
/// `scores` (`m × c`, typically `X·β̂`) is required for
/// [`PermutationStrategy::MostConfident`]; ties go to the lower class index.
pub fn permute_labels(
    labels: &OneHotLabels,
    scores: Option<&DMatrix<f64>>,
    strategy: PermutationStrategy,
    seed: u64,
) -> Result<PermutationPlan> {
    let c = labels.classes();
    if c < 2 {
        return Err(Error::InvalidLabels("a single class admits no permutation".into()));
    }
    let permuted = match strategy {
        PermutationStrategy::Random => {
            let mut rng = seed::rng(seed, Stream::Permutation, 0);
            labels
                .labels()
                .iter()
                .map(|&y| {
                    let k = rng.random_range(0..c - 1);
                    if k >= y {
                        k + 1
                    } else {
                        k
                    }
                })
                .collect()
        }
        PermutationStrategy::MostConfident => {
            let scores = scores.ok_or_else(|| {
                Error::InvalidConfig("most-confident permutation needs model scores".into())
            })?;
            if scores.shape() != (labels.len(), c) {
                return Err(Error::Dimension(format!(
                    "scores are {}x{}, expected {}x{c}",
                    scores.nrows(),
                    scores.ncols(),
                    labels.len()
                )));
            }
            labels
                .labels()
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let mut best = if y == 0 { 1 } else { 0 };
                    for k in 0..c {
                        if k != y && scores[(i, k)] > scores[(i, best)] {
                            best = k;
                        }
                    }
                    best
                })
                .collect()
        }
    };
    Ok(PermutationPlan { strategy, permuted, seed })
}

/// Paired entry times and comparison statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct KnockoffStatistics {
    pub z: Vec<f64>,
    pub z_tilde: Vec<f64>,
    pub w: Vec<f64>,
}

impl KnockoffStatistics {
    /// `W_i = Z_i · sign(Z_i − Z̃_i)` with `sign(0) = 0`.
    pub fn from_entry_times(z: Vec<f64>, z_tilde: Vec<f64>) -> Self {
        let w = z
            .iter()
            .zip(&z_tilde)
            .map(|(&a, &b)| {
                if a > b {
                    a
                } else if a < b {
                    -a
                } else {
                    0.0
                }
            })
            .collect();
        Self { z, z_tilde, w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Entry times of the observed and permuted labels of the selection half,
/// with the coefficients fixed from the fitting half.
///
/// With `β̂` fixed the objective is `½‖R − γ‖²_F + λΣ‖γ_i‖₂` with offset
/// residual `R = Y − Xβ̂`, which separates over samples.
pub fn paired_paths(
    x: &DMatrix<f64>,
    labels: &OneHotLabels,
    permuted: &OneHotLabels,
    beta: &DMatrix<f64>,
    rule: EntryTimeRule,
) -> Result<KnockoffStatistics> {
    if labels.len() != x.nrows() || permuted.len() != x.nrows() {
        return Err(Error::Dimension("label count does not match feature rows".into()));
    }
    if beta.nrows() != x.ncols() || beta.ncols() != labels.classes() || permuted.classes() != labels.classes() {
        return Err(Error::Dimension(format!(
            "coefficients {}x{} incompatible with {} features and {} classes",
            beta.nrows(),
            beta.ncols(),
            x.ncols(),
            labels.classes()
        )));
    }
    let fitted = x * beta;
    let r = labels.to_matrix() - &fitted;
    let r_tilde = permuted.to_matrix() - &fitted;
    match rule {
        EntryTimeRule::Exact => {
            let z = r.row_iter().map(|row| row.norm()).collect();
            let zt = r_tilde.row_iter().map(|row| row.norm()).collect();
            Ok(KnockoffStatistics::from_entry_times(z, zt))
        }
        EntryTimeRule::Grid { len, floor } => {
            let m = x.nrows();
            let design = Design::Identity(m);
            let top = path::lambda_max(&design, &r).max(path::lambda_max(&design, &r_tilde));
            let top = if top > 0.0 { top } else { 1.0 };
            let grid = LambdaGrid::log_spaced(top, len, floor)?;
            let opts = PathOptions::default();
            let p = path::solve_path(&design, &r, &grid, &opts)?;
            let pt = path::solve_path(&design, &r_tilde, &grid, &opts)?;
            Ok(KnockoffStatistics::from_entry_times(p.entry_times, pt.entry_times))
        }
    }
}

/// `(1 + #{0 < W ≤ t}) / (#{−t ≤ W < 0} ∨ 1)`.
pub fn knockoff_ratio(w: &[f64], t: f64) -> f64 {
    let pos = w.iter().filter(|&&v| v > 0.0 && v <= t).count();
    let neg = w.iter().filter(|&&v| v < 0.0 && v >= -t).count();
    (1 + pos) as f64 / neg.max(1) as f64
}

/// Largest `t ∈ {|W_j| : W_j ≠ 0}` with knockoff ratio at most `level`, or 0
/// when no candidate qualifies.
pub fn adaptive_threshold(w: &[f64], level: f64) -> f64 {
    let mut mags: Vec<(f64, bool)> = w.iter().filter(|&&v| v != 0.0).map(|&v| (v.abs(), v > 0.0)).collect();
    mags.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut pos, mut neg) = (0usize, 0usize);
    let mut best = 0.0;
    let mut i = 0;
    while i < mags.len() {
        let t = mags[i].0;
        while i < mags.len() && mags[i].0 == t {
            if mags[i].1 {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        if (1 + pos) as f64 / neg.max(1) as f64 <= level {
            best = t;
        }
    }
    best
}

/// Threshold outcome for one group of the selection half (a class, or all
/// samples).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupThreshold {
    /// Observed class of the group when thresholding per class.
    pub class: Option<usize>,
    /// Local indices into the selection half.
    pub members: Vec<usize>,
    pub threshold: f64,
    /// Swept level at which `threshold > 0` was found; `None` on fallback.
    pub accepted_q: Option<f64>,
    /// Level actually tested against the knockoff ratio at `accepted_q`.
    pub test_level: Option<f64>,
    pub fallback: bool,
    /// Local indices selected as clean.
    pub selected: Vec<usize>,
}

/// Order from most to least clean-looking used by the fallback: negative `W`
/// closest to zero first, then `W = 0`, then positive `W` from small to large.
pub fn fallback_order(w: &[f64], members: &[usize]) -> Vec<usize> {
    let rank = |v: f64| -> (u8, f64) {
        if v < 0.0 {
            (0, -v)
        } else if v == 0.0 {
            (1, 0.0)
        } else {
            (2, v)
        }
    };
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (rank(w[a]), rank(w[b]));
        ra.0.cmp(&rb.0).then(ra.1.total_cmp(&rb.1)).then(a.cmp(&b))
    });
    order
}

/// Level sweep, threshold and clean set for one group.
pub fn select_group(w: &[f64], members: &[usize], class: Option<usize>, cfg: &KnockoffConfig, classes: usize) -> GroupThreshold {
    let group_w: Vec<f64> = members.iter().map(|&j| w[j]).collect();
    for q in sweep_levels(cfg.q) {
        let level = cfg.test_level(q, classes);
        let t = adaptive_threshold(&group_w, level);
        if t > 0.0 {
            let selected = members.iter().copied().filter(|&j| w[j] < 0.0 && w[j] >= -t).collect();
            return GroupThreshold {
                class,
                members: members.to_vec(),
                threshold: t,
                accepted_q: Some(q),
                test_level: Some(level),
                fallback: false,
                selected,
            };
        }
    }
    let k = keep_count(0.5, members.len());
    let mut selected: Vec<usize> = fallback_order(w, members).into_iter().take(k).collect();
    selected.sort_unstable();
    GroupThreshold {
        class,
        members: members.to_vec(),
        threshold: 0.0,
        accepted_q: None,
        test_level: None,
        fallback: true,
        selected,
    }
}

/// Everything produced while selecting on one half.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSelection {
    /// Indices local to the selection half.
    pub outcome: SelectionOutcome,
    pub beta: DMatrix<f64>,
    pub plan: PermutationPlan,
    pub stats: KnockoffStatistics,
    pub groups: Vec<GroupThreshold>,
}

/// Coefficients from the fitting half: fixed-fraction cleaning, then least
/// squares on the retained samples.
pub fn fit_coefficients(fit: &LabeledDataset, cfg: &SprConfig) -> Result<DMatrix<f64>> {
    let y = fit.labels.to_matrix();
    let cleaned = spr::spr_select_response(&fit.features, &y, cfg)?;
    ols_fit(&fit.features, &y, &cleaned.clean)
}

/// Knockoff selection on `select` with coefficients estimated on the
/// disjoint `fit` half.
pub fn knockoff_spr_half(fit: &LabeledDataset, select: &LabeledDataset, cfg: &KnockoffConfig, seed: u64) -> Result<HalfSelection> {
    let classes = select.classes();
    cfg.validate(classes)?;
    if fit.classes() != classes || fit.dim() != select.dim() {
        return Err(Error::Dimension("fitting and selection halves differ in shape".into()));
    }
    let beta = fit_coefficients(fit, &cfg.spr)?;
    let scores = match cfg.permutation {
        PermutationStrategy::MostConfident => Some(&select.features * &beta),
        PermutationStrategy::Random => None,
    };
    let plan = permute_labels(&select.labels, scores.as_ref(), cfg.permutation, seed)?;
    let permuted = OneHotLabels::new(plan.permuted.clone(), classes)?;
    let stats = paired_paths(&select.features, &select.labels, &permuted, &beta, cfg.entry_times)?;

    let m = select.len();
    let groups: Vec<GroupThreshold> = if cfg.per_class {
        (0..classes)
            .filter_map(|k| {
                let members: Vec<usize> = (0..m).filter(|&j| select.labels.labels()[j] == k).collect();
                (!members.is_empty()).then(|| select_group(&stats.w, &members, Some(k), cfg, classes))
            })
            .collect()
    } else {
        let all: Vec<usize> = (0..m).collect();
        vec![select_group(&stats.w, &all, None, cfg, classes)]
    };

    let mut outcome = SelectionOutcome::from_clean(m, groups.iter().flat_map(|g| g.selected.iter().copied()));
    outcome.fallback_used = groups.iter().any(|g| g.fallback);
    outcome.realized_t = Some(groups.iter().map(|g| g.threshold).fold(0.0, f64::max));
    outcome.realized_q = Some(
        groups
            .iter()
            .map(|g| g.accepted_q.unwrap_or(Q_CAP))
            .fold(0.0, f64::max),
    );
    Ok(HalfSelection { outcome, beta, plan, stats, groups })
}

/// Seeded class-stratified split into two halves. Within each class the
/// shuffled samples alternate between halves, with odd leftovers assigned
/// alternately so the half sizes differ by at most one.
pub fn split_halves(labels: &OneHotLabels, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seed::rng(seed, Stream::Partition, 0);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut odd_to_a = true;
    for k in 0..labels.classes() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels.labels()[i] == k).collect();
        members.shuffle(&mut rng);
        let half = members.len() / 2;
        let extra = members.len() % 2 == 1;
        let cut = if extra && odd_to_a { half + 1 } else { half };
        if extra {
            odd_to_a = !odd_to_a;
        }
        a.extend_from_slice(&members[..cut]);
        b.extend_from_slice(&members[cut..]);
    }
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Both directions of a two-half run.
#[derive(Debug, Clone, PartialEq)]
pub struct KnockoffRun {
    pub outcome: SelectionOutcome,
    pub halves: [Vec<usize>; 2],
    /// `selections[0]` selects on `halves[1]` fitting on `halves[0]`;
    /// `selections[1]` the reverse.
    pub selections: [HalfSelection; 2],
}

/// Seeds used by [`knockoff_spr`] for the half split and for the permutation
/// of each direction.
pub fn run_seeds(seed: u64) -> (u64, [u64; 2]) {
    (
        seed::derive(seed, Stream::Partition, 0),
        [seed::derive(seed, Stream::Permutation, 0), seed::derive(seed, Stream::Permutation, 1)],
    )
}

/// Checks the preconditions of a two-half run and splits the data.
pub fn prepare_run(data: &LabeledDataset, cfg: &KnockoffConfig, seed: u64) -> Result<[Vec<usize>; 2]> {
    cfg.validate(data.classes())?;
    let (split_seed, _) = run_seeds(seed);
    let (a, b) = split_halves(&data.labels, split_seed);
    // the cleaning pass keeps ⌈keep·n⌉ rows and least squares needs p of them
    let min_fit = data.dim();
    for half in [&a, &b] {
        if keep_count(cfg.spr.keep_fraction, half.len()) < min_fit || half.len() <= min_fit {
            return Err(Error::Dimension(format!(
                "half of {} samples is too small to fit {} coefficients",
                half.len(),
                data.dim()
            )));
        }
    }
    Ok([a, b])
}

/// Merges the two directions into an outcome over the full dataset.
pub fn merge_run(n: usize, halves: [Vec<usize>; 2], selections: [HalfSelection; 2]) -> KnockoffRun {
    let clean = selections[0]
        .outcome
        .clean
        .iter()
        .map(|&j| halves[1][j])
        .chain(selections[1].outcome.clean.iter().map(|&j| halves[0][j]));
    let mut outcome = SelectionOutcome::from_clean(n, clean);
    outcome.fallback_used = selections.iter().any(|s| s.outcome.fallback_used);
    outcome.realized_t = selections.iter().filter_map(|s| s.outcome.realized_t).reduce(f64::max);
    outcome.realized_q = selections.iter().filter_map(|s| s.outcome.realized_q).reduce(f64::max);
    KnockoffRun { outcome, halves, selections }
}

/// Two-half knockoff selection over `data`, whose features must already have
/// full column rank (see [`crate::numerics::pca_reduce`]).
pub fn knockoff_spr(data: &LabeledDataset, cfg: &KnockoffConfig, seed: u64) -> Result<KnockoffRun> {
    let halves = prepare_run(data, cfg, seed)?;
    let (_, perm) = run_seeds(seed);
    let first = data.subset(&halves[0]);
    let second = data.subset(&halves[1]);
    let s0 = knockoff_spr_half(&first, &second, cfg, perm[0])?;
    let s1 = knockoff_spr_half(&second, &first, cfg, perm[1])?;
    Ok(merge_run(data.len(), halves, [s0, s1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let w = [-1.0, -2.0, -3.0, -4.0, 5.0];
        assert_eq!(adaptive_threshold(&w, 0.5), 5.0);
        assert_eq!(adaptive_threshold(&w, 0.2), 0.0);
        assert_eq!(adaptive_threshold(&[1.0, 2.0, 3.0], 1.0), 0.0);
        assert_eq!(adaptive_threshold(&[], 0.5), 0.0);
    }

    #[test]
    fn w_sign_law() {
        let s = KnockoffStatistics::from_entry_times(vec![0.0, 2.0, 1.0, 3.0], vec![5.0, 1.0, 4.0, 3.0]);
        assert_eq!(s.w, vec![0.0, 2.0, -1.0, 0.0]);
    }

    #[test]
    fn sweep_levels_follow_algorithm() {
        let full = sweep_levels(Q_CAP);
        assert_eq!(full.len(), 24);
        assert_eq!(full[0], 0.02);
        assert_eq!(*full.last().unwrap(), 0.48);
        assert_eq!(sweep_levels(0.1), vec![0.02, 0.04, 0.06, 0.08, 0.1]);
        assert_eq!(sweep_levels(0.01), vec![0.01]);
        assert_eq!(sweep_levels(1.0).len(), 24);
    }

    #[test]
    fn theorem_level_arithmetic() {
        let cfg = KnockoffConfig { mode: Mode::TheoremCorrected, ..KnockoffConfig::default() };
        assert!((cfg.test_level(0.25, 10) - 0.1).abs() < 1e-15);
        assert!(cfg.validate(2).is_err());
        assert!(cfg.validate(3).is_ok());
        assert_eq!(KnockoffConfig::default().test_level(0.25, 10), 0.25);
    }

    #[test]
    fn binary_permutation_is_forced() {
        let labels = OneHotLabels::new(vec![0, 1, 1, 0, 1], 2).unwrap();
        let scores = DMatrix::from_fn(5, 2, |i, k| (i + k) as f64);
        for strategy in [PermutationStrategy::Random, PermutationStrategy::MostConfident] {
            let plan = permute_labels(&labels, Some(&scores), strategy, 3).unwrap();
            assert_eq!(plan.permuted, vec![1, 0, 0, 1, 0]);
        }
    }

    #[test]
    fn most_confident_excludes_observed() {
        let labels = OneHotLabels::new(vec![1], 3).unwrap();
        let scores = DMatrix::from_row_slice(1, 3, &[0.1, 0.9, 0.5]);
        let plan = permute_labels(&labels, Some(&scores), PermutationStrategy::MostConfident, 0).unwrap();
        assert_eq!(plan.permuted, vec![2]);
        assert!(permute_labels(&labels, None, PermutationStrategy::MostConfident, 0).is_err());
    }

    #[test]
    fn random_permutation_is_reproducible_and_valid() {
        let labels = OneHotLabels::new((0..200).map(|i| i % 7).collect(), 7).unwrap();
        let a = permute_labels(&labels, None, PermutationStrategy::Random, 11).unwrap();
        let b = permute_labels(&labels, None, PermutationStrategy::Random, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.permuted.iter().zip(labels.labels()).all(|(p, y)| p != y));
    }

    #[test]
    fn fallback_prefers_small_negative_w() {
        let w = [3.0, -0.5, 0.0, -2.0, 1.0];
        assert_eq!(fallback_order(&w, &[0, 1, 2, 3, 4]), vec![1, 3, 2, 4, 0]);
    }

    #[test]
    fn group_selection_uses_closed_interval() {
        let w = [-1.0, -2.0, -3.0, -4.0, 5.0, 0.0];
        let cfg = KnockoffConfig { q: 0.5, ..KnockoffConfig::default() };
        let g = select_group(&w, &[0, 1, 2, 3, 4, 5], None, &cfg, 10);
        // first level whose ratio admits a threshold: t = 4 needs 1/4 <= q
        assert_eq!(g.accepted_q, Some(0.26));
        assert_eq!(g.threshold, 4.0);
        assert_eq!(g.selected, vec![0, 1, 2, 3]);
        assert!(!g.fallback);
    }

    #[test]
    fn all_positive_w_falls_back_to_half() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0];
        let g = select_group(&w, &[0, 1, 2, 3, 4], None, &KnockoffConfig::default(), 10);
        assert!(g.fallback);
        assert_eq!(g.selected, vec![0, 1, 2]);
        assert_eq!(g.threshold, 0.0);
    }

    #[test]
    fn split_is_disjoint_cover_and_balanced() {
        let labels = OneHotLabels::new((0..41).map(|i| i % 4).collect(), 4).unwrap();
        let (a, b) = split_halves(&labels, 5);
        assert!((a.len() as i64 - b.len() as i64).abs() <= 1);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..41).collect::<Vec<_>>());
        for k in 0..4 {
            let ca = a.iter().filter(|&&i| i % 4 == k).count() as i64;
            let cb = b.iter().filter(|&&i| i % 4 == k).count() as i64;
            assert!((ca - cb).abs() <= 1);
        }
    }
}
