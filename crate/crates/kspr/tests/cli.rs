use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kspr::commands::{CLEAN_FILE, DIAGNOSTICS_FILE, PIECES_FILE, QUALITY_FILE, RUNS_FILE, SUMMARY_FILE};
use kspr::container::{self, HEADER_LEN};
use kspr_core::synth::{generate, SyntheticSpec};
use tempfile::TempDir;

fn kspr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kspr")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = kspr(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn dataset(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut args = vec!["generate", "--out", path_str(&path)];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

fn clean_indices(dir: &Path) -> Vec<usize> {
    fs::read_to_string(dir.join(CLEAN_FILE)).unwrap().lines().map(|l| l.parse().unwrap()).collect()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

fn column(path: &Path, name: &str) -> usize {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn generated_file_matches_library_and_layout() {
    let dir = TempDir::new().unwrap();
    let path = dataset(&dir, "d.kspr", &["--n", "1000", "--p", "10", "--c", "10", "--seed", "4"]);
    assert_eq!(fs::metadata(&path).unwrap().len() as usize, HEADER_LEN + 8 * (10_000 + 1000 + 1000));
    let loaded = container::read_dataset(&path).unwrap();
    let direct = generate(&SyntheticSpec { n: 1000, p: 10, c: 10, seed: 4, ..SyntheticSpec::default() }).unwrap();
    assert_eq!(loaded.features, direct.features);
    assert_eq!(loaded.labels, direct.labels);
    assert_eq!(loaded.true_labels, direct.true_labels);
}

#[test]
fn existing_output_needs_force() {
    let dir = TempDir::new().unwrap();
    let path = dataset(&dir, "d.kspr", &["--n", "200"]);
    let again = kspr(&["generate", "--n", "200", "--seed", "1", "--out", path_str(&path)]);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let before = fs::read(&path).unwrap();
    ok(&["generate", "--n", "200", "--seed", "1", "--force", "--out", path_str(&path)]);
    assert_ne!(fs::read(&path).unwrap(), before);
}

#[test]
fn corrupted_container_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dataset(&dir, "d.kspr", &["--n", "200"]);
    let mut bytes = fs::read(&path).unwrap();
    bytes[1] = b'X';
    fs::write(&path, &bytes).unwrap();
    let out_dir = dir.path().join("sel");
    let out = kspr(&["select", path_str(&path), "--out", path_str(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}

#[test]
fn fixed_fraction_keeps_the_requested_count() {
    let dir = TempDir::new().unwrap();
    let path = dataset(&dir, "d.kspr", &["--n", "301"]);
    let out = dir.path().join("sel");
    ok(&["select", path_str(&path), "--spr", "--keep", "0.5", "--out", path_str(&out)]);
    let clean = clean_indices(&out);
    assert_eq!(clean.len(), 151);
    assert!(clean.windows(2).all(|w| w[0] < w[1]) && *clean.last().unwrap() < 301);
}

#[test]
fn select_is_reproducible_and_reports_true_fsr() {
    let dir = TempDir::new().unwrap();
    let path = dataset(&dir, "d.kspr", &["--n", "1000", "--noise-rate", "0.3", "--seed", "9"]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["select", path_str(&path), "--q", "0.2", "--seed", "5", "--out", path_str(out)]);
    }
    for f in [CLEAN_FILE, PIECES_FILE, QUALITY_FILE] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }

    let data = container::read_dataset(&path).unwrap();
    let truth = data.true_labels.as_ref().unwrap();
    let clean = clean_indices(&a);
    let wrong = clean.iter().filter(|&&i| truth[i] != data.labels.labels()[i]).count();
    let fsr = wrong as f64 / clean.len().max(1) as f64;
    let quality = a.join(QUALITY_FILE);
    let reported: f64 = csv_rows(&quality)[0][column(&quality, "fsr")].parse().unwrap();
    assert!((reported - fsr).abs() < 1e-12);

    let pieces = csv_rows(&a.join(PIECES_FILE));
    assert!(!pieces.is_empty());
    assert!(pieces.iter().all(|r| &r[3] == "ok"));
}

#[test]
fn bench_writes_seed_rows_and_a_mean_row() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench");
    ok(&["bench", "--n", "300", "--repeats", "2", "--q", "0.2", "--out", path_str(&out)]);
    let runs = csv_rows(&out.join(RUNS_FILE));
    assert_eq!(runs.len(), 3);
    assert_eq!(&runs[0][0], "0");
    assert_eq!(&runs[1][0], "1");
    assert_eq!(&runs[2][0], "mean");
    assert_eq!(csv_rows(&out.join(SUMMARY_FILE)).len(), 1);
}

#[test]
fn bench_noise_sweep_has_zero_fsr_without_noise() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench");
    ok(&["bench", "--n", "300", "--repeats", "2", "--rhos", "0,0.2,0.4", "--out", path_str(&out)]);
    let summary = out.join(SUMMARY_FILE);
    let rows = csv_rows(&summary);
    assert_eq!(rows.len(), 3);
    let (rho, fsr) = (column(&summary, "rho"), column(&summary, "fsr_mean"));
    for r in &rows {
        let v: f64 = r[fsr].parse().unwrap();
        assert!(v >= 0.0);
        if r[rho].parse::<f64>().unwrap() == 0.0 {
            assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 3\n[selector]\nqq = 0.1\n").unwrap();
    let out = kspr(&["generate", "--config", path_str(&cfg), "--out", path_str(&dir.path().join("d"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qq"));
}

#[test]
fn config_values_apply_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 3\n[data]\nn = 120\np = 4\nc = 3\n").unwrap();
    let a = dir.path().join("a");
    ok(&["generate", "--config", path_str(&cfg), "--out", path_str(&a)]);
    let d = container::read_dataset(&a).unwrap();
    assert_eq!((d.len(), d.dim(), d.classes()), (120, 4, 3));
    let b = dir.path().join("b");
    ok(&["generate", "--config", path_str(&cfg), "--n", "90", "--out", path_str(&b)]);
    assert_eq!(container::read_dataset(&b).unwrap().len(), 90);
}

#[test]
fn diagnose_reports_every_piece() {
    let dir = TempDir::new().unwrap();
    let path = dataset(&dir, "d.kspr", &["--n", "300", "--c", "4", "--noise-rate", "0.2"]);
    let out = dir.path().join("diag");
    ok(&["diagnose", path_str(&path), "--piece-size", "30", "--out", path_str(&out)]);
    let file = out.join(DIAGNOSTICS_FILE);
    let rows = csv_rows(&file);
    assert!(!rows.is_empty());
    let c_min = column(&file, "c_min");
    assert!(rows.iter().all(|r| r[c_min].parse::<f64>().unwrap() >= 0.0));
}
