//! The four subcommands as library functions over a resolved [`RunConfig`].
//!
//! Output files are written atomically and never replace existing files
//! unless `force` is set.

use std::fs;
use std::path::{Path, PathBuf};

use kspr_core::synth;
use serde::Serialize;

use crate::bench::{self, BenchCell};
use crate::config::{RunConfig, DEFAULT_REPEATS};
use crate::container::{self, write_atomic};
use crate::diagnose;
use crate::error::{KsprError, Result};
use crate::runner;
use crate::select::{self, SelectReport};

pub const CLEAN_FILE: &str = "clean.txt";
pub const QUALITY_FILE: &str = "quality.csv";
pub const PIECES_FILE: &str = "pieces.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

/// Creates `dir` and checks that none of `files` exists inside it unless
/// `force`.
fn prepare_dir(dir: &Path, files: &[&str], force: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| KsprError::io(dir, e))?;
    let paths: Vec<PathBuf> = files.iter().map(|f| dir.join(f)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(KsprError::Exists(p.clone()));
        }
    }
    Ok(paths)
}

pub fn cmd_generate(cfg: &RunConfig, out: &Path, force: bool) -> Result<()> {
    cfg.validate()?;
    let data = synth::generate(&cfg.synthetic_spec())?;
    container::write_dataset(out, &data, force)
}

#[derive(Debug, Serialize)]
struct QualityRecord {
    fsr: f64,
    recall: Option<f64>,
    f1: Option<f64>,
    selected: usize,
    selected_clean: usize,
    selected_noisy: usize,
    total_clean: usize,
    total_noisy: usize,
    fallback_used: bool,
    realized_t: Option<f64>,
    realized_q: Option<f64>,
    failed_pieces: usize,
}

#[derive(Debug, Serialize)]
struct PieceRecord {
    piece: usize,
    group: usize,
    size: usize,
    status: &'static str,
    selected: Option<usize>,
    fallback_used: Option<bool>,
    realized_t: Option<f64>,
    realized_q: Option<f64>,
    error: String,
}

/// Runs selection on the dataset at `data_path` and writes `clean.txt`,
/// `pieces.csv` and, with ground truth, `quality.csv` into `out`.
pub fn cmd_select(cfg: &RunConfig, data_path: &Path, out: &Path, force: bool) -> Result<SelectReport> {
    cfg.validate()?;
    let data = container::read_dataset(data_path)?;
    let files = [CLEAN_FILE, QUALITY_FILE, PIECES_FILE];
    let paths = prepare_dir(out, &files, force)?;
    let pool = runner::pool(cfg.parallelism)?;
    let report = select::select(&pool, &data, cfg)?;

    let mut clean = String::with_capacity(8 * report.outcome.clean.len());
    for i in &report.outcome.clean {
        clean.push_str(&i.to_string());
        clean.push('\n');
    }
    write_atomic(&paths[0], clean.as_bytes(), force)?;

    if let Some(q) = &report.quality {
        let record = QualityRecord {
            fsr: q.fsr,
            recall: q.recall,
            f1: q.f1,
            selected: q.selected,
            selected_clean: q.selected_clean,
            selected_noisy: q.selected_noisy,
            total_clean: q.total_clean,
            total_noisy: q.total_noisy,
            fallback_used: report.outcome.fallback_used,
            realized_t: report.outcome.realized_t,
            realized_q: report.outcome.realized_q,
            failed_pieces: report.failed_pieces(),
        };
        write_atomic(&paths[1], &bench::to_csv(&[record])?, force)?;
    } else if paths[1].exists() {
        // a stale report from an earlier dataset would be misleading
        fs::remove_file(&paths[1]).map_err(|e| KsprError::io(&paths[1], e))?;
    }

    let records: Vec<PieceRecord> = report
        .pieces
        .iter()
        .map(|p| match &p.outcome {
            Ok(r) => PieceRecord {
                piece: p.piece,
                group: p.group,
                size: p.size,
                status: "ok",
                selected: Some(r.clean.len()),
                fallback_used: Some(r.fallback_used),
                realized_t: r.realized_t,
                realized_q: r.realized_q,
                error: String::new(),
            },
            Err(e) => PieceRecord {
                piece: p.piece,
                group: p.group,
                size: p.size,
                status: "failed",
                selected: None,
                fallback_used: None,
                realized_t: None,
                realized_q: None,
                error: e.clone(),
            },
        })
        .collect();
    let header = "piece,group,size,status,selected,fallback_used,realized_t,realized_q,error\n";
    let body = if records.is_empty() { header.as_bytes().to_vec() } else { bench::to_csv(&records)? };
    write_atomic(&paths[2], &body, force)?;
    Ok(report)
}

/// The bench grid: every combination of noise kind, noise rate, sigma and
/// target level, each falling back to the `[data]`/`[selector]` value when
/// its list is empty.
pub fn bench_cells(cfg: &RunConfig) -> Vec<BenchCell> {
    let b = &cfg.bench;
    let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let kinds = if b.noise_kinds.is_empty() { vec![cfg.data.noise_kind] } else { b.noise_kinds.clone() };
    let mut cells = Vec::new();
    for kind in kinds {
        for rho in or(&b.noise_rates, cfg.data.noise_rate) {
            for sigma in or(&b.sigmas, cfg.data.sigma) {
                for q in or(&b.targets, cfg.selector.q) {
                    let mut spec = cfg.synthetic_spec();
                    spec.noise_kind = kind.into();
                    spec.noise_rate = rho;
                    spec.sigma = sigma;
                    let mut selector = cfg.knockoff_config();
                    selector.q = q;
                    cells.push(BenchCell { spec, selector });
                }
            }
        }
    }
    cells
}

/// Writes `runs.csv` (per-seed rows plus one mean row per cell) and
/// `summary.csv` (one row per cell).
pub fn cmd_bench(cfg: &RunConfig, out: &Path, force: bool) -> Result<bench::BenchTable> {
    cfg.validate()?;
    let paths = prepare_dir(out, &[RUNS_FILE, SUMMARY_FILE], force)?;
    let pool = runner::pool(cfg.parallelism)?;
    let table = bench::run_grid(&pool, &bench_cells(cfg), cfg.bench.repeats.unwrap_or(DEFAULT_REPEATS))?;
    write_atomic(&paths[0], &bench::to_csv(&table.rows)?, force)?;
    write_atomic(&paths[1], &bench::to_csv(&table.summaries)?, force)?;
    Ok(table)
}

pub fn cmd_diagnose(cfg: &RunConfig, data_path: &Path, out: &Path, force: bool) -> Result<Vec<diagnose::DiagnosticRow>> {
    cfg.validate()?;
    let data = container::read_dataset(data_path)?;
    let paths = prepare_dir(out, &[DIAGNOSTICS_FILE], force)?;
    let pool = runner::pool(cfg.parallelism)?;
    let (_, rows) = diagnose::diagnose(&pool, &data, cfg)?;
    write_atomic(&paths[0], &bench::to_csv(&rows)?, force)?;
    Ok(rows)
}
