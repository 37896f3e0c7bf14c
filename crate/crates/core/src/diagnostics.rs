//! Recovery conditions for the noisy set.
//!
//! The vectorized problem uses the block design `I_c ⊗ D` where `D` is the
//! design acting on `γ` (the annihilator for SPR). Its restriction to the
//! support splits into one block per class, so every quantity below is
//! assembled from per-class blocks of the Gram matrix `G = DᵀD` instead of
//! forming the `nc × nc` matrix:
//!
//! * restricted eigenvalue `C_min = min_k λ_min(G[S_k, S_k])`,
//! * irrepresentability values `‖G[j, S_k] G[S_k, S_k]⁻¹‖₁` for `j ∉ S_k`,
//! * the error floor `h = λη/√(C_min μ) + λ max_k ‖G[S_k,S_k]⁻¹ sign(γ*_{S_k,k})‖_∞`
//!   with `μ = max ‖column‖²` over the off-support columns.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::median;
use crate::numerics::Annihilator;

/// Smallest eigenvalue accepted as positive when inverting support blocks.
const MIN_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremOneDiagnostics {
    /// Restricted eigenvalue (C1); 0 when a support block is singular.
    pub c_min: f64,
    /// `(sample, value)` for every off-support sample: the largest
    /// irrepresentability row norm over its class coordinates.
    pub irr_values: Vec<(usize, f64)>,
    /// Irrepresentability norm over all off-support coordinates (C2).
    pub irr_max: Option<f64>,
    pub irr_median: Option<f64>,
    pub gamma_min: f64,
    pub mu: f64,
    /// Error floor of C3.
    pub h_value: Option<f64>,
    pub lambda: f64,
    pub eta: f64,
    /// Smallest `λ` covered by the high-probability bound,
    /// `2σ√μ/η · √ln(cn)`.
    pub lambda_floor: f64,
    /// C1, C2, C3.
    pub conditions_hold: [bool; 3],
}

impl TheoremOneDiagnostics {
    pub fn evaluable(&self) -> bool {
        self.h_value.is_some()
    }

    pub fn all_hold(&self) -> bool {
        self.conditions_hold.iter().all(|&b| b)
    }

    pub fn lambda_admissible(&self) -> bool {
        self.lambda >= self.lambda_floor
    }
}

/// Mean shift implied by a known noisy set: least squares of the response on
/// the support columns, `γ_S = G_SS⁻¹ D_Sᵀ R`, zero elsewhere.
pub fn estimate_mean_shift(design: &DMatrix<f64>, response: &DMatrix<f64>, noisy: &[usize]) -> Result<DMatrix<f64>> {
    let (n, c) = (design.ncols(), response.ncols());
    let ds = design.select_columns(noisy);
    let gram = ds.transpose() * &ds;
    let rhs = ds.transpose() * response;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("support Gram matrix is not positive definite".into()))?;
    let g = chol.solve(&rhs);
    let mut gamma = DMatrix::zeros(n, c);
    for (row, &i) in noisy.iter().enumerate() {
        gamma.set_row(i, &g.row(row));
    }
    Ok(gamma)
}

fn validate(n: usize, noisy: &[usize], lambda: f64, eta: f64, sigma: f64) -> Result<()> {
    if noisy.is_empty() {
        return Err(Error::InvalidConfig("noisy set must be nonempty".into()));
    }
    if let Some(&i) = noisy.iter().find(|&&i| i >= n) {
        return Err(Error::Dimension(format!("noisy index {i} out of range for {n} samples")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidConfig(format!("eta must lie in (0, 1], got {eta}")));
    }
    if !(lambda > 0.0) || !(sigma >= 0.0) {
        return Err(Error::InvalidConfig("lambda must be positive and sigma non-negative".into()));
    }
    Ok(())
}

/// Diagnostics for an explicit square design `D` and mean shift `gamma_star`
/// whose nonzero entries define the support.
pub fn diagnostics_for_design(
    design: &DMatrix<f64>,
    gamma_star: &DMatrix<f64>,
    lambda: f64,
    eta: f64,
    sigma: f64,
) -> Result<TheoremOneDiagnostics> {
    let n = design.ncols();
    let c = gamma_star.ncols();
    if gamma_star.nrows() != n {
        return Err(Error::Dimension(format!("design has {n} columns, mean shift has {} rows", gamma_star.nrows())));
    }
    let noisy: Vec<usize> = (0..n).filter(|&i| gamma_star.row(i).iter().any(|&v| v != 0.0)).collect();
    validate(n, &noisy, lambda, eta, sigma)?;

    let gram = design.transpose() * design;
    let supports: Vec<Vec<usize>> = (0..c)
        .map(|k| noisy.iter().copied().filter(|&i| gamma_star[(i, k)] != 0.0).collect())
        .collect();

    let mut mu: f64 = 0.0;
    for s in &supports {
        for i in (0..n).filter(|i| !s.contains(i)) {
            mu = mu.max(gram[(i, i)]);
        }
    }
    let gamma_min = supports
        .iter()
        .enumerate()
        .flat_map(|(k, s)| s.iter().map(move |&i| (i, k)))
        .map(|(i, k)| gamma_star[(i, k)].abs())
        .fold(f64::INFINITY, f64::min);
    let lambda_floor = 2.0 * sigma * libm::sqrt(mu) / eta * libm::sqrt(libm::log((c * n) as f64));

    let mut c_min = f64::INFINITY;
    let mut inverses: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(c);
    for s in &supports {
        if s.is_empty() {
            inverses.push(None);
            continue;
        }
        let block = gram.select_rows(s).select_columns(s);
        let eig = block.clone().symmetric_eigen().eigenvalues.min();
        c_min = c_min.min(eig);
        if eig <= MIN_EIGENVALUE {
            inverses.push(None);
        } else {
            let inv = block
                .cholesky()
                .ok_or_else(|| Error::Singular("support block is not positive definite".into()))?
                .inverse();
            inverses.push(Some(inv));
        }
    }

    if c_min <= MIN_EIGENVALUE {
        return Ok(TheoremOneDiagnostics {
            c_min: c_min.max(0.0),
            irr_values: Vec::new(),
            irr_max: None,
            irr_median: None,
            gamma_min,
            mu,
            h_value: None,
            lambda,
            eta,
            lambda_floor,
            conditions_hold: [false, false, false],
        });
    }

    let mut per_sample = vec![f64::NEG_INFINITY; n];
    let mut irr_max: f64 = 0.0;
    let mut sign_term: f64 = 0.0;
    for (k, s) in supports.iter().enumerate() {
        let Some(inv) = &inverses[k] else { continue };
        let cross = gram.select_columns(s) * inv;
        for j in 0..n {
            if s.contains(&j) {
                continue;
            }
            let v: f64 = cross.row(j).iter().map(|x| x.abs()).sum();
            irr_max = irr_max.max(v);
            per_sample[j] = per_sample[j].max(v);
        }
        let signs = DMatrix::from_fn(s.len(), 1, |r, _| libm::copysign(1.0, gamma_star[(s[r], k)]));
        let term = (inv * signs).abs().max();
        sign_term = sign_term.max(term);
    }
    let irr_values: Vec<(usize, f64)> = (0..n)
        .filter(|i| !noisy.contains(i))
        // a class without support contributes zero cross terms
        .map(|i| (i, per_sample[i].max(0.0)))
        .collect();
    let vals: Vec<f64> = irr_values.iter().map(|&(_, v)| v).collect();
    let h = lambda * eta / libm::sqrt(c_min * mu) + lambda * sign_term;

    Ok(TheoremOneDiagnostics {
        c_min,
        irr_median: (!vals.is_empty()).then(|| median(&vals)),
        irr_values,
        irr_max: Some(irr_max),
        gamma_min,
        mu,
        h_value: Some(h),
        lambda,
        eta,
        lambda_floor,
        conditions_hold: [true, irr_max <= 1.0 - eta, gamma_min > h],
    })
}

/// Diagnostics for the residualized problem of features `x` and response
/// `y`. The mean shift is `gamma_star` when planted, otherwise the least
/// squares estimate on the known `noisy` rows.
///
/// Forms the dense `n × n` annihilator; intended for piece-sized `n`.
pub fn theorem1_diagnostics(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    noisy: &[usize],
    gamma_star: Option<&DMatrix<f64>>,
    lambda: f64,
    eta: f64,
    sigma: f64,
) -> Result<TheoremOneDiagnostics> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!("{} feature rows but {} response rows", x.nrows(), y.nrows())));
    }
    validate(x.nrows(), noisy, lambda, eta, sigma)?;
    let h = Annihilator::from_features(x)?;
    let design = h.to_dense();
    let gamma = match gamma_star {
        Some(g) => g.clone(),
        None => match estimate_mean_shift(&design, &h.apply(y), noisy) {
            Ok(g) => g,
            Err(Error::Singular(_)) => {
                // singular support: report C1 = 0 with every row flagged
                let mut g = DMatrix::zeros(x.nrows(), y.ncols());
                for &i in noisy {
                    g.row_mut(i).fill(1.0);
                }
                g
            }
            Err(e) => return Err(e),
        },
    };
    diagnostics_for_design(&design, &gamma, lambda, eta, sigma)
}
