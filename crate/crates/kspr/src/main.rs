use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use kspr::commands;
use kspr::config::{ModeArg, NoiseArg, PermuteArg};
use kspr::RunConfig;

/// Clean-sample selection for noisy labels.
#[derive(Parser)]
#[command(name = "kspr", version)]
struct Cli {
    /// Log progress to stderr (`RUST_LOG` refines this).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic noisy-label dataset.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Select clean samples from a dataset.
    Select {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        selector: SelectorArgs,
    },
    /// Monte-Carlo false-selection-rate experiments on synthetic data.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        selector: SelectorArgs,
        #[command(flatten)]
        data: DataArgs,
        /// Seeds per grid cell.
        #[arg(long)]
        repeats: Option<usize>,
        /// Noise rates to sweep, comma separated.
        #[arg(long, value_delimiter = ',')]
        rhos: Option<Vec<f64>>,
        /// Target levels to sweep, comma separated.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<f64>>,
    },
    /// Report the exact-recovery conditions for every piece.
    Diagnose {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        selector: SelectorArgs,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Noise scale used for the smallest admissible lambda.
        #[arg(long)]
        sigma: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output file for `generate`, output directory otherwise.
    #[arg(long)]
    out: PathBuf,
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SelectorArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Highest level of the threshold sweep.
    #[arg(long)]
    q: Option<f64>,
    /// Keep a fixed fraction by path order instead of the knockoff filter.
    #[arg(long)]
    spr: bool,
    #[arg(long)]
    keep: Option<f64>,
    #[arg(long, value_enum)]
    permute: Option<PermuteArg>,
    #[arg(long, action = clap::ArgAction::Set)]
    per_class: Option<bool>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    piece_size: Option<usize>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    noise_rate: Option<f64>,
    #[arg(long, value_enum)]
    noise_kind: Option<NoiseArg>,
    /// Scale of the score perturbation behind the true labels.
    #[arg(long)]
    sigma: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn base_config(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, common.seed);
    set(&mut cfg.parallelism, common.parallelism);
    Ok(cfg)
}

impl SelectorArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let s = &mut cfg.selector;
        set(&mut s.mode, self.mode);
        set(&mut s.q, self.q);
        s.spr |= self.spr;
        set(&mut s.keep, self.keep);
        set(&mut s.permute, self.permute);
        set(&mut s.per_class, self.per_class);
        set(&mut s.group_size, self.group_size);
        set(&mut s.piece_size, self.piece_size);
    }
}

impl DataArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let d = &mut cfg.data;
        set(&mut d.n, self.n);
        set(&mut d.p, self.p);
        set(&mut d.c, self.c);
        set(&mut d.noise_rate, self.noise_rate);
        set(&mut d.noise_kind, self.noise_kind);
        set(&mut d.sigma, self.sigma);
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Generate { common, data } => {
            let mut cfg = base_config(&common)?;
            data.apply(&mut cfg);
            commands::cmd_generate(&cfg, &common.out, common.force)
                .with_context(|| format!("writing {}", common.out.display()))?;
        }
        Command::Select { dataset, common, selector } => {
            let mut cfg = base_config(&common)?;
            selector.apply(&mut cfg);
            let report = commands::cmd_select(&cfg, &dataset, &common.out, common.force)?;
            print_selection(&report, &common.out);
            if report.failed_pieces() > 0 {
                eprintln!("error: {} of {} pieces failed; see pieces.csv", report.failed_pieces(), report.pieces.len());
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bench { common, selector, data, repeats, rhos, targets } => {
            let mut cfg = base_config(&common)?;
            selector.apply(&mut cfg);
            data.apply(&mut cfg);
            set(&mut cfg.bench.repeats, repeats.map(Some));
            set(&mut cfg.bench.noise_rates, rhos);
            set(&mut cfg.bench.targets, targets);
            let table = commands::cmd_bench(&cfg, &common.out, common.force)?;
            for s in &table.summaries {
                println!(
                    "{} rho={} sigma={} mode={} q={}: fsr {:.4} (sem {:.4}) fallback {:.2}{}",
                    s.noise_kind,
                    s.rho,
                    s.sigma,
                    s.mode,
                    s.target_q,
                    s.fsr_mean,
                    s.fsr_sem,
                    s.fallback_rate,
                    if s.fsr_within_bound { "" } else { "  above q + 2 sem" }
                );
            }
        }
        Command::Diagnose { dataset, common, selector, lambda, eta, sigma } => {
            let mut cfg = base_config(&common)?;
            selector.apply(&mut cfg);
            set(&mut cfg.diagnose.lambda, lambda);
            set(&mut cfg.diagnose.eta, eta);
            set(&mut cfg.diagnose.sigma, sigma);
            let rows = commands::cmd_diagnose(&cfg, &dataset, &common.out, common.force)?;
            let holding = rows.iter().filter(|r| r.c1 && r.c2 && r.c3).count();
            println!("{holding} of {} pieces satisfy all three conditions", rows.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_selection(report: &kspr::select::SelectReport, out: &Path) {
    let o = &report.outcome;
    print!("selected {} of {}", o.clean.len(), o.clean.len() + o.noisy.len());
    if let Some(q) = &report.quality {
        print!(", fsr {:.4}", q.fsr);
        if let Some(r) = q.recall {
            print!(", recall {r:.4}");
        }
    }
    println!(" -> {}", out.join(commands::CLEAN_FILE).display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
