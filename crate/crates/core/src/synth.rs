//! Synthetic noisy-label data following the linear mean-shift model.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{LabeledDataset, OneHotLabels};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    /// Corrupted label uniform over the other `c − 1` classes.
    #[default]
    Symmetric,
    /// Corrupted label is the next class, `(y + 1) mod c`.
    Asymmetric,
}

impl NoiseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseKind::Symmetric => "symmetric",
            NoiseKind::Asymmetric => "asymmetric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub c: usize,
    /// Fraction of samples whose label is corrupted, in `[0, 1)`.
    pub noise_rate: f64,
    pub noise_kind: NoiseKind,
    /// Scale of the Gaussian perturbation added to the class scores before
    /// the true label is taken.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { n: 1000, p: 10, c: 10, noise_rate: 0.4, noise_kind: NoiseKind::Symmetric, sigma: 0.1, seed: 0 }
    }
}

/// Draws `X ~ N(0, 1)`, `β* ~ N(0, 1/p)` and takes the true label as the
/// argmax of `x_iᵀβ* + σ ε_i`. Exactly `⌊ρ n⌋` samples, chosen uniformly,
/// receive a corrupted label.
pub fn generate(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    let SyntheticSpec { n, p, c, noise_rate, noise_kind, sigma, seed } = *spec;
    if !(0.0..1.0).contains(&noise_rate) {
        return Err(Error::InvalidConfig(format!("noise rate must lie in [0, 1), got {noise_rate}")));
    }
    if c < 2 || p == 0 || n < c {
        return Err(Error::InvalidConfig(format!("need c >= 2, p >= 1 and n >= c, got n={n} p={p} c={c}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be non-negative, got {sigma}")));
    }
    let mut rng = seed::rng(seed, Stream::Dataset, 0);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = DMatrix::from_fn(n, p, |_, _| normal());
    let scale = 1.0 / libm::sqrt(p as f64);
    let beta = DMatrix::from_fn(p, c, |_, _| normal() * scale);
    let mut scores = &x * &beta;
    for v in scores.iter_mut() {
        *v += sigma * normal();
    }
    let true_labels: Vec<usize> = scores
        .row_iter()
        .map(|r| {
            let mut best = 0;
            for k in 1..c {
                if r[k] > r[best] {
                    best = k;
                }
            }
            best
        })
        .collect();

    let mut observed = true_labels.clone();
    let corrupt = libm::floor(noise_rate * n as f64 + 1e-9) as usize;
    let mut rng = seed::rng(seed, Stream::Dataset, 1);
    for i in index::sample(&mut rng, n, corrupt) {
        let t = true_labels[i];
        observed[i] = match noise_kind {
            NoiseKind::Symmetric => {
                let k = rng.random_range(0..c - 1);
                if k >= t {
                    k + 1
                } else {
                    k
                }
            }
            NoiseKind::Asymmetric => (t + 1) % c,
        };
    }
    LabeledDataset::new(x, OneHotLabels::new(observed, c)?, Some(true_labels))
}
