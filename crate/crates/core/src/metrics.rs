//! Selection quality against ground truth.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// Fraction of selected samples that are noisy; 0 for an empty selection.
    pub fsr: f64,
    /// Fraction of clean samples that were selected; `None` without clean
    /// samples.
    pub recall: Option<f64>,
    /// Harmonic mean of `1 − fsr` and recall.
    pub f1: Option<f64>,
    pub selected: usize,
    pub selected_clean: usize,
    pub selected_noisy: usize,
    pub total_clean: usize,
    pub total_noisy: usize,
}

/// Scores a selection; duplicate indices count once.
pub fn quality(selected: &[usize], clean_mask: &[bool]) -> Result<QualityReport> {
    let n = clean_mask.len();
    let mut chosen = vec![false; n];
    for &i in selected {
        if i >= n {
            return Err(Error::Dimension(format!("selected index {i} out of range for {n} samples")));
        }
        chosen[i] = true;
    }
    let selected_clean = (0..n).filter(|&i| chosen[i] && clean_mask[i]).count();
    let selected_noisy = (0..n).filter(|&i| chosen[i] && !clean_mask[i]).count();
    let total_clean = clean_mask.iter().filter(|&&c| c).count();
    let selected = selected_clean + selected_noisy;
    let fsr = selected_noisy as f64 / selected.max(1) as f64;
    let recall = (total_clean > 0).then(|| selected_clean as f64 / total_clean as f64);
    let f1 = recall.and_then(|r| {
        let precision = 1.0 - fsr;
        (precision + r > 0.0).then(|| 2.0 * precision * r / (precision + r))
    });
    Ok(QualityReport {
        fsr,
        recall,
        f1,
        selected,
        selected_clean,
        selected_noisy,
        total_clean,
        total_noisy: n - total_clean,
    })
}

/// Mean, sample standard deviation and standard error of the mean.
pub fn mean_sd_sem(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = libm::sqrt(var);
    (mean, sd, sd / libm::sqrt(n as f64))
}

/// Median of a non-empty slice; `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_count() {
        let mask = [true, true, true, false, true];
        let q = quality(&[1, 2, 3], &mask).unwrap();
        assert!((q.fsr - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(q.selected_noisy, 1);
    }

    #[test]
    fn empty_selection_has_zero_fsr() {
        let q = quality(&[], &[true, false]).unwrap();
        assert_eq!(q.fsr, 0.0);
        assert_eq!(q.recall, Some(0.0));
        assert_eq!(q.f1, Some(0.0));
    }

    #[test]
    fn select_everything() {
        let mask: Vec<bool> = (0..10).map(|i| i >= 4).collect();
        let all: Vec<usize> = (0..10).collect();
        let q = quality(&all, &mask).unwrap();
        assert!((q.fsr - 0.4).abs() < 1e-15);
        assert_eq!(q.recall, Some(1.0));
        assert!((q.f1.unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn recall_undefined_without_clean_samples() {
        let q = quality(&[0], &[false, false]).unwrap();
        assert_eq!(q.recall, None);
        assert_eq!(q.f1, None);
        assert_eq!(q.fsr, 1.0);
    }

    #[test]
    fn out_of_range_index() {
        assert!(quality(&[3], &[true; 3]).is_err());
    }

    #[test]
    fn summary_statistics() {
        let (m, sd, sem) = mean_sd_sem(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd - libm::sqrt(5.0 / 3.0)).abs() < 1e-15);
        assert!((sem - sd / 2.0).abs() < 1e-15);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
