//! Recovery-condition report for every piece of a dataset with ground truth.

use kspr_core::diagnostics::{self, TheoremOneDiagnostics};
use kspr_core::splitter::{self, PiecePlan};
use kspr_core::LabeledDataset;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{KsprError, Result};
use crate::select::reduce_features;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub piece: usize,
    pub group: usize,
    pub n: usize,
    pub noisy: usize,
    pub c_min: Option<f64>,
    pub irr_max: Option<f64>,
    pub irr_median: Option<f64>,
    pub gamma_min: Option<f64>,
    pub mu: Option<f64>,
    pub h_value: Option<f64>,
    pub lambda: f64,
    pub eta: f64,
    pub lambda_floor: Option<f64>,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    /// Empty when the conditions were evaluated.
    pub note: String,
}

fn row(piece: usize, group: usize, local: &LabeledDataset, cfg: &RunConfig) -> DiagnosticRow {
    let g = &cfg.diagnose;
    let truth = local.true_labels.as_deref().unwrap_or_default();
    let noisy: Vec<usize> = (0..local.len()).filter(|&i| truth[i] != local.labels.labels()[i]).collect();
    let mut out = DiagnosticRow {
        piece,
        group,
        n: local.len(),
        noisy: noisy.len(),
        c_min: None,
        irr_max: None,
        irr_median: None,
        gamma_min: None,
        mu: None,
        h_value: None,
        lambda: g.lambda,
        eta: g.eta,
        lambda_floor: None,
        c1: false,
        c2: false,
        c3: false,
        note: String::new(),
    };
    if noisy.is_empty() {
        out.note = "no noisy samples".into();
        return out;
    }
    let y = local.labels.to_matrix();
    match diagnostics::theorem1_diagnostics(&local.features, &y, &noisy, None, g.lambda, g.eta, g.sigma) {
        Ok(d) => fill(&mut out, &d),
        Err(e) => out.note = e.to_string(),
    }
    out
}

fn fill(out: &mut DiagnosticRow, d: &TheoremOneDiagnostics) {
    out.c_min = Some(d.c_min);
    out.irr_max = d.irr_max;
    out.irr_median = d.irr_median;
    out.gamma_min = Some(d.gamma_min);
    out.mu = Some(d.mu);
    out.h_value = d.h_value;
    out.lambda_floor = Some(d.lambda_floor);
    [out.c1, out.c2, out.c3] = d.conditions_hold;
    if !d.evaluable() {
        out.note = "singular support block".into();
    }
}

/// One row per piece, using the same reduction and pieces as `select`.
pub fn diagnose(pool: &ThreadPool, data: &LabeledDataset, cfg: &RunConfig) -> Result<(PiecePlan, Vec<DiagnosticRow>)> {
    cfg.validate()?;
    if data.true_labels.is_none() {
        return Err(KsprError::Config("diagnose needs a dataset with true labels".into()));
    }
    let reduced = reduce_features(data)?;
    let s = &cfg.selector;
    let plan = splitter::plan_pieces(&reduced, s.group_size, s.piece_size, cfg.seed)?;
    let rows = pool.install(|| {
        (0..plan.pieces.len())
            .into_par_iter()
            .map(|i| -> Result<DiagnosticRow> {
                let local = splitter::piece_dataset(&reduced, &plan, i)?;
                Ok(row(i, plan.pieces[i].group, &local, cfg))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((plan, rows))
}
