//! Selection over a whole dataset: PCA reduction, then either plain
//! fixed-fraction selection or the piecewise knockoff filter.

use kspr_core::metrics::{self, QualityReport};
use kspr_core::numerics::Pca;
use kspr_core::splitter::{self, PiecePlan, PieceResult};
use kspr_core::spr;
use kspr_core::{LabeledDataset, SelectionOutcome};
use rayon::ThreadPool;

use crate::config::RunConfig;
use crate::error::Result;
use crate::runner;

/// Features projected onto the leading `min(c, p, n)` principal directions,
/// centered with whole-dataset means.
pub fn reduce_features(data: &LabeledDataset) -> Result<LabeledDataset> {
    let k = data.classes().min(data.dim()).min(data.len());
    let pca = Pca::fit(&data.features, k)?;
    let features = pca.project(&data.features)?;
    Ok(LabeledDataset { features, ..data.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PieceRow {
    pub piece: usize,
    pub group: usize,
    pub size: usize,
    pub outcome: std::result::Result<PieceResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectReport {
    pub outcome: SelectionOutcome,
    /// Empty for plain selection.
    pub pieces: Vec<PieceRow>,
    pub plan: Option<PiecePlan>,
    pub quality: Option<QualityReport>,
}

impl SelectReport {
    pub fn failed_pieces(&self) -> usize {
        self.pieces.iter().filter(|p| p.outcome.is_err()).count()
    }
}

pub fn select(pool: &ThreadPool, data: &LabeledDataset, cfg: &RunConfig) -> Result<SelectReport> {
    cfg.validate()?;
    let reduced = reduce_features(data)?;
    let (outcome, pieces, plan) = if cfg.selector.spr {
        let outcome = spr::spr_select(&reduced.features, &reduced.labels, &cfg.spr_config())?;
        (outcome, Vec::new(), None)
    } else {
        let s = &cfg.selector;
        let plan = splitter::plan_pieces(&reduced, s.group_size, s.piece_size, cfg.seed)?;
        let results = runner::piece_results(pool, &reduced, &plan, &cfg.knockoff_config(), cfg.seed);
        let summary = splitter::merge_pieces(reduced.len(), &results);
        let rows = results
            .into_iter()
            .enumerate()
            .map(|(i, r)| PieceRow {
                piece: i,
                group: plan.pieces[i].group,
                size: plan.pieces[i].indices.len(),
                outcome: r.map_err(|e| e.to_string()),
            })
            .collect();
        for (i, msg) in &summary.failed {
            log::warn!("piece {i} failed: {msg}");
        }
        (summary.outcome, rows, Some(plan))
    };
    let quality = match data.clean_mask() {
        Some(mask) => Some(metrics::quality(&outcome.clean, &mask)?),
        None => None,
    };
    Ok(SelectReport { outcome, pieces, plan, quality })
}
