//! Dense linear algebra used by the selectors: PCA, least squares and the
//! annihilator of a feature matrix's column space.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Principal directions of a column-centered feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// Column means of the fitting data, subtracted before projecting.
    pub mean: DVector<f64>,
    /// `p × k` orthonormal loadings, ordered by decreasing variance.
    pub components: DMatrix<f64>,
    /// Singular values of the centered data for the retained directions.
    pub singular_values: DVector<f64>,
}

impl Pca {
    pub fn fit(x: &DMatrix<f64>, target_dim: usize) -> Result<Self> {
        let (n, p) = x.shape();
        if target_dim == 0 || target_dim > n.min(p) {
            return Err(Error::Dimension(format!(
                "target dimension {target_dim} outside 1..={} for a {n}x{p} matrix",
                n.min(p)
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite feature entry".into()));
        }
        let mean = x.row_mean().transpose();
        let mut centered = x.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        if centered.iter().all(|&v| v == 0.0) {
            return Err(Error::Degenerate("feature matrix has no variance".into()));
        }

        let svd = centered.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

        let mut components = DMatrix::zeros(p, target_dim);
        let mut singular_values = DVector::zeros(target_dim);
        for (k, &idx) in order.iter().take(target_dim).enumerate() {
            let mut dir = v_t.row(idx).transpose();
            // sign convention: largest-magnitude loading is positive
            let pivot = dir.iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if pivot < 0.0 {
                dir.neg_mut();
            }
            components.set_column(k, &dir);
            singular_values[k] = svd.singular_values[idx];
        }
        Ok(Self { mean, components, singular_values })
    }

    /// Centers `x` with the fitted mean and projects onto the components.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Dimension(format!("expected {} columns, got {}", self.mean.len(), x.ncols())));
        }
        let mut centered = x.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        Ok(centered * &self.components)
    }

    /// Variance captured per component (`s_k² / (n − 1)`).
    pub fn explained_variance(&self, n: usize) -> DVector<f64> {
        let denom = (n.max(2) - 1) as f64;
        self.singular_values.map(|s| s * s / denom)
    }
}

/// Projects `x` onto its top `target_dim` principal directions.
pub fn pca_reduce(x: &DMatrix<f64>, target_dim: usize) -> Result<DMatrix<f64>> {
    Pca::fit(x, target_dim)?.project(x)
}

/// Least-squares coefficients of `y` on `x` over the rows in `subset`.
///
/// Solved through a Householder QR of the restricted design. A diagonal entry
/// of `R` below [`RANK_TOLERANCE`] times the largest one is reported as a
/// singular system.
pub fn ols_fit(x: &DMatrix<f64>, y: &DMatrix<f64>, subset: &[usize]) -> Result<DMatrix<f64>> {
    let p = x.ncols();
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!("{} feature rows but {} response rows", x.nrows(), y.nrows())));
    }
    if subset.len() < p {
        return Err(Error::Dimension(format!("{} rows cannot determine {p} coefficients", subset.len())));
    }
    let xs = x.select_rows(subset);
    let ys = y.select_rows(subset);
    let qr = xs.qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..p).any(|i| r[(i, i)].abs() <= RANK_TOLERANCE * max_diag) {
        return Err(Error::Singular("rank-deficient design on fitting subset; reduce dimension first".into()));
    }
    let qty = qr.q().transpose() * ys;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))
}

/// The projection `I − X(XᵀX)⁺Xᵀ` onto the orthogonal complement of `X`'s
/// column space, held as an orthonormal basis `Q` of that column space so the
/// `n × n` matrix is never needed by the path solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Annihilator {
    basis: DMatrix<f64>,
    diag: Vec<f64>,
}

impl Annihilator {
    /// Requires `x` to have full column rank.
    pub fn from_features(x: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(Error::Dimension(format!("empty feature matrix {n}x{p}")));
        }
        if p > n {
            return Err(Error::Singular(format!("{p} columns exceed {n} rows")));
        }
        let svd = x.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let s_max = svd.singular_values.max();
        if s_max == 0.0 || svd.singular_values.iter().any(|&s| s <= RANK_TOLERANCE * s_max) {
            return Err(Error::Singular("feature matrix is not of full column rank".into()));
        }
        let diag = (0..n).map(|i| 1.0 - u.row(i).norm_squared()).collect();
        Ok(Self { basis: u, diag })
    }

    pub fn len(&self) -> usize {
        self.basis.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.nrows() == 0
    }

    /// Orthonormal basis of the annihilated column space.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Diagonal entry `H_ii`, also the squared norm of column `i`.
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// `H · m`.
    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m - &self.basis * (self.basis.transpose() * m)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::identity(n, n) - &self.basis * self.basis.transpose()
    }
}

/// Dense annihilator `H` and residualized response `H·Y`.
///
/// Materializes an `n × n` matrix; intended for piece-sized `n`.
pub fn residualize(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!("{} feature rows but {} response rows", x.nrows(), y.nrows())));
    }
    let h = Annihilator::from_features(x)?;
    let response = h.apply(y);
    Ok((h.to_dense(), response))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    fn orthonormal(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let q = gaussian(n, p, seed).qr().q();
        q.columns(0, p).into_owned()
    }

    #[test]
    fn pca_rejects_oversized_target() {
        let x = gaussian(5, 3, 1);
        assert!(matches!(pca_reduce(&x, 4), Err(Error::Dimension(_))));
        assert!(matches!(pca_reduce(&x, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn pca_rejects_zero_matrix() {
        let x = DMatrix::zeros(6, 3);
        assert!(matches!(pca_reduce(&x, 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn pca_identity_subspace_keeps_gram_spectrum() {
        // centered orthonormal columns: projection is a rotation of X
        let mut x = orthonormal(12, 3, 2);
        let ones = DVector::from_element(12, 1.0 / (12.0_f64).sqrt());
        let proj = DMatrix::identity(12, 12) - &ones * ones.transpose();
        x = orthonormal_from(&(proj * x));
        let z = pca_reduce(&x, 3).unwrap();
        let a = (x.transpose() * &x).symmetric_eigen().eigenvalues;
        let b = (z.transpose() * &z).symmetric_eigen().eigenvalues;
        let mut a: Vec<f64> = a.iter().copied().collect();
        let mut b: Vec<f64> = b.iter().copied().collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    fn orthonormal_from(m: &DMatrix<f64>) -> DMatrix<f64> {
        let p = m.ncols();
        m.clone().qr().q().columns(0, p).into_owned()
    }

    #[test]
    fn pca_exact_plane_reconstructs() {
        let coeffs = gaussian(30, 2, 3);
        let plane = gaussian(2, 5, 4);
        let offset = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0]);
        let mut x = coeffs * plane;
        for mut row in x.row_iter_mut() {
            row += offset.transpose();
        }
        let pca = Pca::fit(&x, 2).unwrap();
        let z = pca.project(&x).unwrap();
        let mut recon = z * pca.components.transpose();
        for mut row in recon.row_iter_mut() {
            row += pca.mean.transpose();
        }
        assert!((recon - x).abs().max() < 1e-10);
    }

    #[test]
    fn pca_variance_is_non_increasing() {
        let x = gaussian(40, 6, 5);
        let pca = Pca::fit(&x, 6).unwrap();
        let var = pca.explained_variance(40);
        for k in 1..6 {
            assert!(var[k] <= var[k - 1]);
        }
    }

    #[test]
    fn ols_noiseless_recovers_coefficients() {
        let x = gaussian(20, 4, 6);
        let beta = gaussian(4, 3, 7);
        let y = &x * &beta;
        let all: Vec<usize> = (0..20).collect();
        let got = ols_fit(&x, &y, &all).unwrap();
        assert!((got - beta).abs().max() < 1e-8);
    }

    #[test]
    fn ols_identity_design_returns_rows() {
        let x = DMatrix::<f64>::identity(4, 4);
        let y = gaussian(4, 3, 8);
        let got = ols_fit(&x, &y, &[0, 1, 2, 3]).unwrap();
        assert!((got - &y).abs().max() < 1e-12);
    }

    #[test]
    fn ols_reports_singular_design() {
        let mut x = gaussian(10, 3, 9);
        let c0 = x.column(0).into_owned();
        x.set_column(2, &(c0 * 2.0));
        let y = gaussian(10, 2, 10);
        let all: Vec<usize> = (0..10).collect();
        assert!(matches!(ols_fit(&x, &y, &all), Err(Error::Singular(_))));
        assert!(matches!(ols_fit(&x, &y, &[0, 1]), Err(Error::Dimension(_))));
    }

    #[test]
    fn ols_normal_equations_and_local_optimality() {
        let x = gaussian(50, 5, 11);
        let y = gaussian(50, 3, 12);
        let subset: Vec<usize> = (0..50).filter(|i| i % 3 != 0).collect();
        let beta = ols_fit(&x, &y, &subset).unwrap();
        let xs = x.select_rows(&subset);
        let ys = y.select_rows(&subset);
        let normal = xs.transpose() * (&xs * &beta - &ys);
        assert!(normal.norm() <= 1e-8 * (xs.transpose() * &ys).norm());
        let loss = |b: &DMatrix<f64>| (&ys - &xs * b).norm_squared();
        let base = loss(&beta);
        for s in 0..20 {
            let dir = gaussian(5, 3, 100 + s);
            assert!(loss(&(&beta + dir * 1e-3)) >= base);
        }
    }

    #[test]
    fn residualize_full_span_is_zero() {
        let x = gaussian(5, 5, 13);
        let y = gaussian(5, 2, 14);
        let (h, r) = residualize(&x, &y).unwrap();
        assert!(h.abs().max() < 1e-10);
        assert!(r.abs().max() < 1e-10);
    }

    #[test]
    fn residualize_orthonormal_matches_formula() {
        let x = orthonormal(9, 3, 15);
        let y = gaussian(9, 2, 16);
        let (h, r) = residualize(&x, &y).unwrap();
        let expected = DMatrix::identity(9, 9) - &x * x.transpose();
        assert!((&h - &expected).abs().max() < 1e-12);
        assert!((r - expected * y).abs().max() < 1e-12);
    }

    #[test]
    fn residualize_is_idempotent_annihilator() {
        let x = gaussian(15, 4, 17) * 3.0;
        let y = gaussian(15, 3, 18);
        let (h, _) = residualize(&x, &y).unwrap();
        assert!((&h * &h - &h).norm() <= 1e-8 * 15.0);
        for col in (&h * &x).column_iter() {
            assert!(col.norm() <= 1e-8);
        }
        assert!((&h - h.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn residualize_rejects_rank_deficiency() {
        let mut x = gaussian(8, 3, 19);
        let c = x.column(1).into_owned();
        x.set_column(0, &c);
        let y = gaussian(8, 2, 20);
        assert!(matches!(residualize(&x, &y), Err(Error::Singular(_))));
    }

    #[test]
    fn annihilator_apply_matches_dense() {
        let x = gaussian(11, 3, 21);
        let h = Annihilator::from_features(&x).unwrap();
        let m = gaussian(11, 4, 22);
        let dense = h.to_dense();
        assert!((h.apply(&m) - &dense * &m).abs().max() < 1e-12);
        for i in 0..11 {
            assert!((h.diag(i) - dense[(i, i)]).abs() < 1e-12);
        }
    }
}
