//! Thread-pool execution of pieces and halves.
//!
//! Work items only read shared data and return owned results collected in
//! index order, so outcomes do not depend on the pool size.

use kspr_core::knockoff::{self, KnockoffConfig, KnockoffRun};
use kspr_core::splitter::{self, PiecePlan, PieceResult, PieceRunSummary};
use kspr_core::{LabeledDataset, Result as CoreResult};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{KsprError, Result};

pub fn pool(parallelism: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| KsprError::Config(format!("thread pool: {e}")))
}

/// Two-half knockoff selection with both directions run concurrently.
pub fn knockoff_spr(data: &LabeledDataset, cfg: &KnockoffConfig, seed: u64) -> CoreResult<KnockoffRun> {
    let halves = knockoff::prepare_run(data, cfg, seed)?;
    let (_, perm) = knockoff::run_seeds(seed);
    let first = data.subset(&halves[0]);
    let second = data.subset(&halves[1]);
    let (s0, s1) = rayon::join(
        || knockoff::knockoff_spr_half(&first, &second, cfg, perm[0]),
        || knockoff::knockoff_spr_half(&second, &first, cfg, perm[1]),
    );
    Ok(knockoff::merge_run(data.len(), halves, [s0?, s1?]))
}

/// Every piece of `plan`, in piece order.
pub fn piece_results(
    pool: &ThreadPool,
    data: &LabeledDataset,
    plan: &PiecePlan,
    cfg: &KnockoffConfig,
    seed: u64,
) -> Vec<CoreResult<PieceResult>> {
    pool.install(|| {
        (0..plan.pieces.len())
            .into_par_iter()
            .map(|i| splitter::run_piece(data, plan, i, cfg, seed))
            .collect()
    })
}

pub fn run_pieces(pool: &ThreadPool, data: &LabeledDataset, plan: &PiecePlan, cfg: &KnockoffConfig, seed: u64) -> PieceRunSummary {
    splitter::merge_pieces(data.len(), &piece_results(pool, data, plan, cfg, seed))
}
