use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One-hot indicator matrix `n × c` built from integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotLabels {
    labels: Vec<usize>,
    classes: usize,
}

impl OneHotLabels {
    pub fn new(labels: Vec<usize>, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidLabels(format!("need at least 2 classes, got {classes}")));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidLabels(format!("label {bad} out of range for {classes} classes")));
        }
        Ok(Self { labels, classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.labels.len(), self.classes);
        for (i, &l) in self.labels.iter().enumerate() {
            y[(i, l)] = 1.0;
        }
        y
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }
}

/// Features, observed labels and, for synthetic or audited data, the
/// ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: DMatrix<f64>,
    pub labels: OneHotLabels,
    pub true_labels: Option<Vec<usize>>,
}

impl LabeledDataset {
    pub fn new(features: DMatrix<f64>, labels: OneHotLabels, true_labels: Option<Vec<usize>>) -> Result<Self> {
        let n = features.nrows();
        if n == 0 || features.ncols() == 0 {
            return Err(Error::Dimension(format!("empty feature matrix {}x{}", n, features.ncols())));
        }
        if labels.len() != n {
            return Err(Error::Dimension(format!("{} labels for {} feature rows", labels.len(), n)));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite feature entry".into()));
        }
        if let Some(t) = &true_labels {
            if t.len() != n {
                return Err(Error::Dimension(format!("{} true labels for {} rows", t.len(), n)));
            }
            if t.iter().any(|&l| l >= labels.classes()) {
                return Err(Error::InvalidLabels("true label out of range".into()));
            }
        }
        Ok(Self { features, labels, true_labels })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn classes(&self) -> usize {
        self.labels.classes()
    }

    /// `true` where the observed label equals the ground truth.
    pub fn clean_mask(&self) -> Option<Vec<bool>> {
        self.true_labels
            .as_ref()
            .map(|t| t.iter().zip(self.labels.labels()).map(|(a, b)| a == b).collect())
    }

    /// Rows in the given order; indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: self.labels.subset(indices),
            true_labels: self.true_labels.as_ref().map(|t| indices.iter().map(|&i| t[i]).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn one_hot_rows_sum_to_one() {
        let y = OneHotLabels::new(vec![0, 2, 1, 2], 3).unwrap().to_matrix();
        for i in 0..4 {
            assert_eq!(y.row(i).sum(), 1.0);
        }
        assert_eq!(y[(1, 2)], 1.0);
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(OneHotLabels::new(vec![0, 0], 1).is_err());
        assert!(OneHotLabels::new(vec![0, 3], 3).is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let x = DMatrix::zeros(3, 2);
        let y = OneHotLabels::new(vec![0, 1], 2).unwrap();
        assert!(matches!(LabeledDataset::new(x, y, None), Err(Error::Dimension(_))));
    }
}
