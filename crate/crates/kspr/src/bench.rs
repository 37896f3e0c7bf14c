//! Monte-Carlo false-selection-rate experiments on synthetic data.

use std::time::Instant;

use kspr_core::knockoff::{self, KnockoffConfig, Mode};
use kspr_core::metrics::{self, mean_sd_sem};
use kspr_core::synth::{self, SyntheticSpec};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::error::{KsprError, Result};

/// One CSV row: a single seed, or the mean over a cell when `seed` is
/// `"mean"`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub seed: String,
    pub n: usize,
    pub p: usize,
    pub c: usize,
    pub noise_kind: &'static str,
    pub rho: f64,
    pub sigma: f64,
    pub mode: &'static str,
    pub target_q: f64,
    pub realized_q: Option<f64>,
    pub fsr: f64,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// 0/1 per seed; the fallback rate in a mean row.
    pub fallback_used: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub p: usize,
    pub c: usize,
    pub noise_kind: &'static str,
    pub rho: f64,
    pub sigma: f64,
    pub mode: &'static str,
    pub target_q: f64,
    pub repeats: usize,
    pub fsr_mean: f64,
    pub fsr_sd: f64,
    pub fsr_sem: f64,
    /// `fsr_mean ≤ target_q + 2·fsr_sem`.
    pub fsr_within_bound: bool,
    pub realized_q_mean: Option<f64>,
    pub recall_mean: Option<f64>,
    pub recall_sd: Option<f64>,
    pub f1_mean: Option<f64>,
    pub f1_sd: Option<f64>,
    pub fallback_rate: f64,
    pub wall_ms_mean: f64,
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Nominal => "nominal",
        Mode::TheoremCorrected => "theorem",
    }
}

/// Seed `r` of a cell whose root seed is `root`.
pub fn repeat_seed(root: u64, r: usize) -> u64 {
    root.wrapping_add(r as u64)
}

fn run_seed(spec: &SyntheticSpec, cfg: &KnockoffConfig, seed: u64) -> Result<BenchRow> {
    let start = Instant::now();
    let data = synth::generate(&SyntheticSpec { seed, ..*spec })?;
    let run = knockoff::knockoff_spr(&data, cfg, seed)?;
    let mask = data.clean_mask().expect("synthetic data carries ground truth");
    let q = metrics::quality(&run.outcome.clean, &mask)?;
    Ok(BenchRow {
        seed: seed.to_string(),
        n: spec.n,
        p: spec.p,
        c: spec.c,
        noise_kind: spec.noise_kind.as_str(),
        rho: spec.noise_rate,
        sigma: spec.sigma,
        mode: mode_name(cfg.mode),
        target_q: cfg.q,
        realized_q: run.outcome.realized_q,
        fsr: q.fsr,
        recall: q.recall,
        f1: q.f1,
        fallback_used: if run.outcome.fallback_used { 1.0 } else { 0.0 },
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        return (None, None);
    }
    let (m, sd, _) = mean_sd_sem(&v);
    (Some(m), Some(sd))
}

pub fn summarize(rows: &[BenchRow]) -> CellSummary {
    let first = &rows[0];
    let fsr: Vec<f64> = rows.iter().map(|r| r.fsr).collect();
    let (fsr_mean, fsr_sd, fsr_sem) = mean_sd_sem(&fsr);
    let (recall_mean, recall_sd) = mean_of(rows.iter().map(|r| r.recall));
    let (f1_mean, f1_sd) = mean_of(rows.iter().map(|r| r.f1));
    let count = rows.len() as f64;
    CellSummary {
        n: first.n,
        p: first.p,
        c: first.c,
        noise_kind: first.noise_kind,
        rho: first.rho,
        sigma: first.sigma,
        mode: first.mode,
        target_q: first.target_q,
        repeats: rows.len(),
        fsr_mean,
        fsr_sd,
        fsr_sem,
        fsr_within_bound: fsr_mean <= first.target_q + 2.0 * fsr_sem,
        realized_q_mean: mean_of(rows.iter().map(|r| r.realized_q)).0,
        recall_mean,
        recall_sd,
        f1_mean,
        f1_sd,
        fallback_rate: rows.iter().map(|r| r.fallback_used).sum::<f64>() / count,
        wall_ms_mean: rows.iter().map(|r| r.wall_ms).sum::<f64>() / count,
    }
}

/// The mean row appended after the per-seed rows of a cell.
pub fn summary_row(s: &CellSummary) -> BenchRow {
    BenchRow {
        seed: "mean".into(),
        n: s.n,
        p: s.p,
        c: s.c,
        noise_kind: s.noise_kind,
        rho: s.rho,
        sigma: s.sigma,
        mode: s.mode,
        target_q: s.target_q,
        realized_q: s.realized_q_mean,
        fsr: s.fsr_mean,
        recall: s.recall_mean,
        f1: s.f1_mean,
        fallback_used: s.fallback_rate,
        wall_ms: s.wall_ms_mean,
    }
}

/// Runs `repeats` seeds `spec.seed, spec.seed + 1, …` of one cell.
pub fn fsr_experiment(pool: &ThreadPool, spec: &SyntheticSpec, cfg: &KnockoffConfig, repeats: usize) -> Result<(Vec<BenchRow>, CellSummary)> {
    if repeats < 2 {
        return Err(KsprError::Config(format!("repeats must be at least 2, got {repeats}")));
    }
    let rows: Vec<BenchRow> = pool.install(|| {
        (0..repeats)
            .into_par_iter()
            .map(|r| run_seed(spec, cfg, repeat_seed(spec.seed, r)))
            .collect::<Result<_>>()
    })?;
    let summary = summarize(&rows);
    Ok((rows, summary))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub spec: SyntheticSpec,
    pub selector: KnockoffConfig,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchTable {
    /// Per-seed rows, each cell followed by its mean row.
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<CellSummary>,
}

pub fn run_grid(pool: &ThreadPool, cells: &[BenchCell], repeats: usize) -> Result<BenchTable> {
    let mut table = BenchTable::default();
    for cell in cells {
        let (rows, summary) = fsr_experiment(pool, &cell.spec, &cell.selector, repeats)?;
        log::info!(
            "rho={} q={} mode={}: fsr {:.4} ± {:.4}",
            summary.rho,
            summary.target_q,
            summary.mode,
            summary.fsr_mean,
            summary.fsr_sem
        );
        table.rows.extend(rows);
        table.rows.push(summary_row(&summary));
        table.summaries.push(summary);
    }
    Ok(table)
}

pub fn to_csv<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| KsprError::Config(format!("csv buffer: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: &str, fsr: f64, fallback: f64) -> BenchRow {
        BenchRow {
            seed: seed.into(),
            n: 10,
            p: 2,
            c: 3,
            noise_kind: "symmetric",
            rho: 0.4,
            sigma: 0.1,
            mode: "nominal",
            target_q: 0.2,
            realized_q: Some(0.02),
            fsr,
            recall: None,
            f1: Some(0.5),
            fallback_used: fallback,
            wall_ms: 1.0,
        }
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[row("0", 0.1, 1.0), row("1", 0.3, 0.0)]);
        assert!((s.fsr_mean - 0.2).abs() < 1e-15);
        assert!((s.fsr_sd - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((s.fsr_sem - 0.1).abs() < 1e-15);
        assert!(s.fsr_within_bound);
        assert_eq!(s.fallback_rate, 0.5);
        assert_eq!(s.recall_mean, None);
    }

    #[test]
    fn csv_has_header_and_empty_missing_values() {
        let text = String::from_utf8(to_csv(&[row("0", 0.1, 0.0)]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "seed,n,p,c,noise_kind,rho,sigma,mode,target_q,realized_q,fsr,recall,f1,fallback_used,wall_ms"
        );
        assert_eq!(lines.next().unwrap(), "0,10,2,3,symmetric,0.4,0.1,nominal,0.2,0.02,0.1,,0.5,0.0,1.0");
    }
}
