//! Fixed-fraction selection: residualize, solve the path, keep the samples
//! whose mean-shift rows activate last.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::dataset::OneHotLabels;
use crate::error::{Error, Result};
use crate::numerics::Annihilator;
use crate::path::{self, Design, LambdaGrid, PathOptions, SolutionPath};

/// Selected clean samples and the bookkeeping of how they were chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// Ascending.
    pub clean: Vec<usize>,
    /// Ascending complement of `clean`.
    pub noisy: Vec<usize>,
    /// Knockoff threshold; `None` for fixed-fraction selection.
    pub realized_t: Option<f64>,
    /// Level at which the threshold was accepted; `None` for fixed-fraction
    /// selection.
    pub realized_q: Option<f64>,
    pub fallback_used: bool,
}

impl SelectionOutcome {
    /// Builds an outcome over `0..n` from an arbitrary clean index list.
    pub fn from_clean(n: usize, clean: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = alloc::vec![false; n];
        for i in clean {
            mask[i] = true;
        }
        let clean = (0..n).filter(|&i| mask[i]).collect();
        let noisy = (0..n).filter(|&i| !mask[i]).collect();
        Self { clean, noisy, realized_t: None, realized_q: None, fallback_used: false }
    }

    pub fn clean_mask(&self) -> Vec<bool> {
        let n = self.clean.len() + self.noisy.len();
        let mut mask = alloc::vec![false; n];
        for &i in &self.clean {
            mask[i] = true;
        }
        mask
    }
}

/// Relative size below which the residualized response counts as zero.
const DEGENERATE_RESPONSE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprConfig {
    pub keep_fraction: f64,
    pub grid_len: usize,
    pub grid_floor: f64,
    pub path: PathOptions,
}

impl Default for SprConfig {
    fn default() -> Self {
        Self {
            keep_fraction: 0.5,
            grid_len: path::DEFAULT_GRID_LEN,
            grid_floor: path::DEFAULT_GRID_FLOOR,
            path: PathOptions::default(),
        }
    }
}

/// `⌈fraction · n⌉`, robust to representation error in `fraction`.
pub fn keep_count(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    let count = libm::ceil(raw - 1e-9 * raw.max(1.0)) as usize;
    count.min(n)
}

/// Regularization path of the residualized problem for a real-valued
/// response `y` (`n × c`).
pub fn spr_path(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &SprConfig) -> Result<SolutionPath> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!("{} feature rows but {} response rows", x.nrows(), y.nrows())));
    }
    let h = Annihilator::from_features(x)?;
    let response = h.apply(y);
    let design = Design::Annihilator(&h);
    let lmax = path::lambda_max(&design, &response);
    let scale = y.row_iter().map(|r| r.norm()).fold(0.0, f64::max).max(1.0);
    // a response inside the column space of x (up to rounding) has the
    // all-zero path; a grid at the response scale keeps it exactly zero
    let top = if lmax > DEGENERATE_RESPONSE * scale { lmax } else { scale };
    let grid = LambdaGrid::log_spaced(top, cfg.grid_len, cfg.grid_floor)?;
    path::solve_path(&design, &response, &grid, &cfg.path)
}

/// Samples ordered from most to least likely clean: later entry first, then
/// smaller final `‖γ_i‖₂`, then smaller index.
pub fn clean_order(path: &SolutionPath) -> Vec<usize> {
    let norms = path.final_norms();
    let mut order: Vec<usize> = (0..path.len()).collect();
    order.sort_by(|&a, &b| {
        path.entry_times[a]
            .total_cmp(&path.entry_times[b])
            .then(norms[a].total_cmp(&norms[b]))
            .then(a.cmp(&b))
    });
    order
}

/// Keeps the `⌈keep_fraction · n⌉` samples that come first in [`clean_order`].
pub fn select_from_path(path: &SolutionPath, keep_fraction: f64) -> Result<SelectionOutcome> {
    if !(keep_fraction > 0.0 && keep_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("keep fraction must lie in (0, 1), got {keep_fraction}")));
    }
    let k = keep_count(keep_fraction, path.len());
    let order = clean_order(path);
    Ok(SelectionOutcome::from_clean(path.len(), order.into_iter().take(k)))
}

/// Fixed-fraction selection for a real-valued response.
pub fn spr_select_response(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &SprConfig) -> Result<SelectionOutcome> {
    if !(cfg.keep_fraction > 0.0 && cfg.keep_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("keep fraction must lie in (0, 1), got {}", cfg.keep_fraction)));
    }
    let path = spr_path(x, y, cfg)?;
    select_from_path(&path, cfg.keep_fraction)
}

/// Fixed-fraction selection for one-hot labels. `x` must have full column
/// rank; reduce it with [`crate::numerics::pca_reduce`] first.
pub fn spr_select(x: &DMatrix<f64>, labels: &OneHotLabels, cfg: &SprConfig) -> Result<SelectionOutcome> {
    spr_select_response(x, &labels.to_matrix(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn keep_count_rounds_up() {
        assert_eq!(keep_count(0.5, 10), 5);
        assert_eq!(keep_count(0.5, 11), 6);
        assert_eq!(keep_count(0.9, 10), 9);
        assert_eq!(keep_count(0.7, 10), 7);
        assert_eq!(keep_count(0.01, 10), 1);
    }

    #[test]
    fn perfect_fit_keeps_first_half_by_index() {
        // labels lie in the column space of x, so the residualized response is 0
        let labels = OneHotLabels::new(vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0], 3).unwrap();
        let x = labels.to_matrix();
        let out = spr_select(&x, &labels, &SprConfig::default()).unwrap();
        assert_eq!(out.clean, vec![0, 1, 2, 3, 4]);
        assert_eq!(out.noisy, vec![5, 6, 7, 8, 9]);
        assert!(!out.fallback_used && out.realized_q.is_none() && out.realized_t.is_none());
    }

    fn orthogonal_instance() -> (DMatrix<f64>, Vec<bool>) {
        // rows 2, 5, 8 carry residual norm 10, the rest 0.1
        let mut r = DMatrix::zeros(10, 2);
        let mut clean = vec![true; 10];
        for i in 0..10 {
            let (norm, angle) = if [2, 5, 8].contains(&i) { (10.0, 0.3 * i as f64) } else { (0.1, 0.7 * i as f64) };
            r[(i, 0)] = norm * libm::cos(angle);
            r[(i, 1)] = norm * libm::sin(angle);
            if norm > 1.0 {
                clean[i] = false;
            }
        }
        (r, clean)
    }

    fn identity_path(r: &DMatrix<f64>) -> SolutionPath {
        let d = Design::Identity(r.nrows());
        let grid = LambdaGrid::log_spaced(path::lambda_max(&d, r), 100, 1e-3).unwrap();
        path::solve_path(&d, r, &grid, &PathOptions::default()).unwrap()
    }

    #[test]
    fn orthogonal_instance_keeps_small_residuals() {
        let (r, clean) = orthogonal_instance();
        let out = select_from_path(&identity_path(&r), 0.5).unwrap();
        assert_eq!(out.clean.len(), 5);
        assert!(out.clean.iter().all(|&i| clean[i]));
    }

    #[test]
    fn orthogonal_instance_high_keep_counts_false_selections() {
        let (r, clean) = orthogonal_instance();
        let out = select_from_path(&identity_path(&r), 0.9).unwrap();
        assert_eq!(out.clean.len(), 9);
        let false_sel = out.clean.iter().filter(|&&i| !clean[i]).count();
        assert_eq!(false_sel, 2);
        assert!((false_sel as f64 / 9.0 - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_keep_fraction_outside_unit_interval() {
        let labels = OneHotLabels::new(vec![0, 1, 0, 1], 2).unwrap();
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        for keep in [0.0, 1.0, -0.2] {
            let cfg = SprConfig { keep_fraction: keep, ..SprConfig::default() };
            assert!(matches!(spr_select(&x, &labels, &cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
