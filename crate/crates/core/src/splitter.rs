//! Class-balanced pieces for large datasets.
//!
//! Classes are grouped by prototype similarity, each group is cut into pieces
//! holding `m` samples of every class in the group, and two-half knockoff
//! selection runs independently on every piece. Short classes are padded by
//! reusing samples, so a sample may appear in several pieces; it counts as
//! clean if any of its copies is selected.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::dataset::{LabeledDataset, OneHotLabels};
use crate::error::{Error, Result};
use crate::knockoff::{self, KnockoffConfig};
use crate::seed::{self, Stream};
use crate::spr::SelectionOutcome;

pub const DEFAULT_GROUP_SIZE: usize = 10;
pub const DEFAULT_PIECE_SIZE: usize = 75;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrototypes {
    /// `c × p`, one mean feature vector per class.
    pub prototypes: DMatrix<f64>,
    /// Samples averaged per class.
    pub support_counts: Vec<usize>,
    /// Classes with no clean sample, averaged over all their samples instead.
    pub fallback_classes: Vec<usize>,
}

/// Per-class mean features over `clean` (or all samples when `None`).
pub fn compute_prototypes(x: &DMatrix<f64>, labels: &OneHotLabels, clean: Option<&[bool]>) -> Result<ClassPrototypes> {
    let (n, p) = x.shape();
    if labels.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} rows", labels.len())));
    }
    if let Some(mask) = clean {
        if mask.len() != n {
            return Err(Error::Dimension(format!("clean mask has {} entries for {n} rows", mask.len())));
        }
    }
    let c = labels.classes();
    let mut sums = DMatrix::zeros(c, p);
    let mut counts = vec![0usize; c];
    let mut all_sums = DMatrix::zeros(c, p);
    let mut all_counts = vec![0usize; c];
    for (i, &k) in labels.labels().iter().enumerate() {
        let row = x.row(i);
        let mut target = all_sums.row_mut(k);
        target += row;
        all_counts[k] += 1;
        if clean.is_none_or(|m| m[i]) {
            let mut target = sums.row_mut(k);
            target += row;
            counts[k] += 1;
        }
    }
    let mut fallback_classes = Vec::new();
    for k in 0..c {
        if counts[k] == 0 && all_counts[k] > 0 {
            log::warn!("class {k} has no clean samples; prototype uses all of its samples");
            fallback_classes.push(k);
            sums.set_row(k, &all_sums.row(k));
            counts[k] = all_counts[k];
        }
        if counts[k] > 0 {
            let mut row = sums.row_mut(k);
            row /= counts[k] as f64;
        }
    }
    Ok(ClassPrototypes { prototypes: sums, support_counts: counts, fallback_classes })
}

/// Greedy grouping by prototype inner product: the lowest-index unassigned
/// class seeds a group and pulls in the `group_size − 1` unassigned classes
/// most similar to it, ties broken by lower index.
pub fn group_classes(protos: &ClassPrototypes, group_size: usize) -> Result<Vec<Vec<usize>>> {
    if group_size == 0 {
        return Err(Error::InvalidConfig("group size must be positive".into()));
    }
    let c = protos.prototypes.nrows();
    if c <= group_size {
        return Ok(vec![(0..c).collect()]);
    }
    let p = &protos.prototypes;
    let mut assigned = vec![false; c];
    let mut groups = Vec::new();
    for s in 0..c {
        if assigned[s] {
            continue;
        }
        assigned[s] = true;
        let mut candidates: Vec<(usize, f64)> =
            (0..c).filter(|&j| !assigned[j]).map(|j| (j, p.row(s).dot(&p.row(j)))).collect();
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut group = vec![s];
        for &(j, _) in candidates.iter().take(group_size - 1) {
            assigned[j] = true;
            group.push(j);
        }
        group.sort_unstable();
        groups.push(group);
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    /// Index into [`PiecePlan::groups`].
    pub group: usize,
    /// Dataset indices, `m` per class of the group, classes in group order.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecePlan {
    pub groups: Vec<Vec<usize>>,
    pub pieces: Vec<Piece>,
    /// Number of piece slots holding each sample.
    pub multiplicity: Vec<usize>,
    pub piece_size: usize,
}

/// Cuts every group into pieces with exactly `m` samples per class present
/// in the group.
///
/// Each class is shuffled and cut into runs of `m`; the group gets as many
/// pieces as its largest class needs. A class that runs short is padded with
/// samples it already contributed to earlier pieces, drawn without
/// replacement, and only repeats a sample inside one piece when it has fewer
/// than `m` samples in total.
pub fn make_pieces(labels: &OneHotLabels, groups: &[Vec<usize>], m: usize, seed: u64) -> Result<PiecePlan> {
    if m < 2 {
        return Err(Error::InvalidConfig(format!("piece size must be at least 2, got {m}")));
    }
    let n = labels.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); labels.classes()];
    for (i, &k) in labels.labels().iter().enumerate() {
        by_class[k].push(i);
    }
    let mut pieces = Vec::new();
    let mut multiplicity = vec![0usize; n];
    for (g, group) in groups.iter().enumerate() {
        let mut rng = seed::rng(seed, Stream::Pieces, g as u64);
        let mut members: Vec<(usize, Vec<usize>)> = Vec::new();
        for &k in group {
            if by_class[k].is_empty() {
                log::warn!("class {k} has no samples; skipped in group {g}");
                continue;
            }
            let mut list = by_class[k].clone();
            list.shuffle(&mut rng);
            members.push((k, list));
        }
        let count = members.iter().map(|(_, l)| l.len().div_ceil(m)).max().unwrap_or(0);
        let mut group_pieces = vec![Vec::with_capacity(m * members.len()); count];
        for (_, list) in &members {
            for (j, slots) in group_pieces.iter_mut().enumerate() {
                let start = (j * m).min(list.len());
                let end = ((j + 1) * m).min(list.len());
                let mut chosen: Vec<usize> = list[start..end].to_vec();
                let need = m - chosen.len();
                if need > 0 {
                    // reuse samples from earlier runs first, then the fresh ones
                    let used = &list[..start];
                    let take = need.min(used.len());
                    chosen.extend(index::sample(&mut rng, used.len(), take).into_iter().map(|t| used[t]));
                    while chosen.len() < m {
                        chosen.push(list[rng.random_range(0..list.len())]);
                    }
                }
                slots.extend_from_slice(&chosen);
            }
        }
        for indices in group_pieces {
            for &i in &indices {
                multiplicity[i] += 1;
            }
            pieces.push(Piece { group: g, indices });
        }
    }
    Ok(PiecePlan { groups: groups.to_vec(), pieces, multiplicity, piece_size: m })
}

/// Result of one piece in dataset coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceResult {
    pub clean: Vec<usize>,
    pub fallback_used: bool,
    pub realized_t: Option<f64>,
    pub realized_q: Option<f64>,
}

/// Seed of piece `index` below the root seed.
pub fn piece_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed, Stream::PieceHalves, index as u64)
}

/// The piece as a standalone dataset. Groups of at least three classes are
/// relabelled to `0..group.len()` so permutations stay inside the group;
/// smaller groups keep the full class space.
pub fn piece_dataset(data: &LabeledDataset, plan: &PiecePlan, index: usize) -> Result<LabeledDataset> {
    let piece = &plan.pieces[index];
    let group = &plan.groups[piece.group];
    let sub = data.subset(&piece.indices);
    if group.len() < 3 {
        return Ok(sub);
    }
    let mut local = vec![usize::MAX; data.classes()];
    for (j, &k) in group.iter().enumerate() {
        local[k] = j;
    }
    let relabel = |l: usize| -> Result<usize> {
        match local[l] {
            usize::MAX => Err(Error::InvalidLabels(format!("label {l} outside group {}", piece.group))),
            j => Ok(j),
        }
    };
    let labels = sub.labels.labels().iter().map(|&l| relabel(l)).collect::<Result<Vec<_>>>()?;
    let classes = group.len();
    // a true label outside the group is mapped to a local class other than
    // the observed one, so the sample still scores as noisy
    let truth = sub.true_labels.as_ref().map(|t| {
        t.iter()
            .zip(&labels)
            .map(|(&l, &obs)| if local[l] == usize::MAX { (obs + 1) % classes } else { local[l] })
            .collect::<Vec<_>>()
    });
    let features = sub.features;
    LabeledDataset::new(features, OneHotLabels::new(labels, classes)?, truth)
}

/// Runs two-half knockoff selection on one piece.
pub fn run_piece(data: &LabeledDataset, plan: &PiecePlan, index: usize, cfg: &KnockoffConfig, seed: u64) -> Result<PieceResult> {
    let local = piece_dataset(data, plan, index)?;
    let run = knockoff::knockoff_spr(&local, cfg, piece_seed(seed, index))?;
    let indices = &plan.pieces[index].indices;
    let mut clean: Vec<usize> = run.outcome.clean.iter().map(|&j| indices[j]).collect();
    clean.sort_unstable();
    clean.dedup();
    Ok(PieceResult {
        clean,
        fallback_used: run.outcome.fallback_used,
        realized_t: run.outcome.realized_t,
        realized_q: run.outcome.realized_q,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PieceRunSummary {
    pub outcome: SelectionOutcome,
    /// `(piece index, error message)` for pieces that failed.
    pub failed: Vec<(usize, String)>,
    pub pieces_with_fallback: usize,
}

/// Merges per-piece results in piece order. A sample is clean if any of its
/// copies was selected; failed pieces contribute nothing.
pub fn merge_pieces(n: usize, results: &[Result<PieceResult>]) -> PieceRunSummary {
    let mut mask = vec![false; n];
    let mut failed = Vec::new();
    let mut fallback = 0;
    let mut realized_t: Option<f64> = None;
    let mut realized_q: Option<f64> = None;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(piece) => {
                for &j in &piece.clean {
                    mask[j] = true;
                }
                if piece.fallback_used {
                    fallback += 1;
                }
                realized_t = max_opt(realized_t, piece.realized_t);
                realized_q = max_opt(realized_q, piece.realized_q);
            }
            Err(e) => failed.push((i, e.to_string())),
        }
    }
    let mut outcome = SelectionOutcome::from_clean(n, (0..n).filter(|&i| mask[i]));
    outcome.fallback_used = fallback > 0;
    outcome.realized_t = realized_t;
    outcome.realized_q = realized_q;
    PieceRunSummary { outcome, failed, pieces_with_fallback: fallback }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Runs every piece in order on the current thread.
pub fn run_pieces_sequential(data: &LabeledDataset, plan: &PiecePlan, cfg: &KnockoffConfig, seed: u64) -> PieceRunSummary {
    let results: Vec<Result<PieceResult>> = (0..plan.pieces.len()).map(|i| run_piece(data, plan, i, cfg, seed)).collect();
    merge_pieces(data.len(), &results)
}

/// Prototypes from all data, greedy groups and the piece plan.
pub fn plan_pieces(data: &LabeledDataset, group_size: usize, piece_size: usize, seed: u64) -> Result<PiecePlan> {
    let protos = compute_prototypes(&data.features, &data.labels, None)?;
    let groups = group_classes(&protos, group_size)?;
    make_pieces(&data.labels, &groups, piece_size, seed)
}
