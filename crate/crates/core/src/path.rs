//! Group-lasso regularization path for the mean-shift matrix `γ`.
//!
//! Minimizes `½‖R − Dγ‖²_F + λ Σ_i ‖γ_i‖₂` over a decreasing grid of `λ` by
//! cyclic block coordinate descent, warm-starting each `λ` from the previous
//! solution. Each block is one row of `γ`; the exact block minimizer is a
//! group soft-threshold because the row shares one design column across all
//! response columns.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::Annihilator;

pub const DEFAULT_GRID_LEN: usize = 100;
pub const DEFAULT_GRID_FLOOR: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Columns with squared norm at or below this carry no information; their rows
/// of `γ` stay at zero.
const NULL_COLUMN: f64 = 1e-14;

/// Sweeps between null-space steps of the annihilator solver.
const NULL_STEP_PERIOD: usize = 4;

/// `(1 − t/‖v‖₂)₊ · v`.
pub fn group_soft_threshold(v: &[f64], threshold: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    group_soft_threshold_in_place(&mut out, threshold);
    out
}

pub fn group_soft_threshold_in_place(v: &mut [f64], threshold: f64) {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if norm <= threshold {
        v.iter_mut().for_each(|x| *x = 0.0);
    } else {
        let scale = 1.0 - threshold / norm;
        v.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Strictly decreasing positive penalty levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("empty lambda grid".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("lambda grid values must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig("lambda grid must be strictly decreasing".into()));
        }
        Ok(Self { values })
    }

    /// `len` log-spaced values from `lambda_max` down to `lambda_max · floor`.
    pub fn log_spaced(lambda_max: f64, len: usize, floor: f64) -> Result<Self> {
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::InvalidConfig(format!("lambda_max must be positive, got {lambda_max}")));
        }
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::InvalidConfig(format!("grid floor must lie in (0, 1), got {floor}")));
        }
        if len < 2 {
            return Err(Error::InvalidConfig("lambda grid needs at least 2 values".into()));
        }
        let log_floor = libm::log(floor);
        let values = (0..len)
            .map(|k| {
                if k == 0 {
                    lambda_max
                } else if k == len - 1 {
                    lambda_max * floor
                } else {
                    lambda_max * libm::exp(log_floor * k as f64 / (len - 1) as f64)
                }
            })
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }
}

/// Stopping rule for each `λ` on the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Relative change of `γ` between sweeps, and KKT slack relative to `λ`.
    pub tol: f64,
    /// Sweeps allowed per `λ`.
    pub max_iter: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// The linear operator multiplying `γ` in the data-fit term.
#[derive(Debug, Clone, Copy)]
pub enum Design<'a> {
    /// Explicit `n × n` matrix.
    Dense(&'a DMatrix<f64>),
    /// `γ` enters the fit directly; rows decouple.
    Identity(usize),
    /// `I − QQᵀ` held through the basis `Q`.
    Annihilator(&'a Annihilator),
}

impl Design<'_> {
    pub fn nrows(&self) -> usize {
        match self {
            Design::Dense(d) => d.nrows(),
            Design::Identity(n) => *n,
            Design::Annihilator(h) => h.len(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            Design::Dense(d) => d.ncols(),
            _ => self.nrows(),
        }
    }

    fn col_norm_sq(&self, i: usize) -> f64 {
        match self {
            Design::Dense(d) => d.column(i).norm_squared(),
            Design::Identity(_) => 1.0,
            Design::Annihilator(h) => h.diag(i),
        }
    }

    /// `D · m`.
    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Design::Dense(d) => *d * m,
            Design::Identity(_) => m.clone(),
            Design::Annihilator(h) => h.apply(m),
        }
    }

    /// `Dᵀ · m`.
    pub fn apply_transpose(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Design::Dense(d) => d.transpose() * m,
            Design::Identity(_) => m.clone(),
            Design::Annihilator(h) => h.apply(m),
        }
    }
}

/// Smallest `λ` at which `γ ≡ 0` is optimal: `maxᵢ ‖(Dᵀ R)ᵢ‖₂`.
pub fn lambda_max(design: &Design<'_>, response: &DMatrix<f64>) -> f64 {
    let corr = design.apply_transpose(response);
    corr.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

/// Incrementally maintained quantities needed for `d_iᵀ(R − Dγ)`.
enum Workspace {
    /// Full residual `R − Dγ`.
    Dense(DMatrix<f64>),
    Identity,
    /// `u = Qᵀγ` and the constant `QᵀR`.
    Annihilator { u: DMatrix<f64>, qt_r: DMatrix<f64> },
}

struct Solver<'a> {
    design: Design<'a>,
    response: &'a DMatrix<f64>,
    col_norms: Vec<f64>,
    work: Workspace,
    c: usize,
}

impl<'a> Solver<'a> {
    fn new(design: Design<'a>, response: &'a DMatrix<f64>, gamma: &DMatrix<f64>) -> Self {
        let n = design.nrows();
        let col_norms = (0..n).map(|i| design.col_norm_sq(i)).collect();
        let work = match design {
            Design::Dense(d) => Workspace::Dense(response - d * gamma),
            Design::Identity(_) => Workspace::Identity,
            Design::Annihilator(h) => Workspace::Annihilator {
                u: h.basis().transpose() * gamma,
                qt_r: h.basis().transpose() * response,
            },
        };
        Self { design, response, col_norms, work, c: response.ncols() }
    }

    /// Writes `d_iᵀ(R − Dγ)` into `out`.
    fn correlation(&self, gamma: &DMatrix<f64>, i: usize, out: &mut [f64]) {
        match (&self.work, self.design) {
            (Workspace::Dense(r), Design::Dense(d)) => {
                let col = d.column(i);
                for (k, o) in out.iter_mut().enumerate() {
                    *o = col.dot(&r.column(k));
                }
            }
            (Workspace::Identity, _) => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = self.response[(i, k)] - gamma[(i, k)];
                }
            }
            (Workspace::Annihilator { u, qt_r }, Design::Annihilator(h)) => {
                // (H(R − Hγ))_i = R_i − γ_i + q_i(u − QᵀR), since HᵀH = H
                let q = h.basis().row(i);
                for (k, o) in out.iter_mut().enumerate() {
                    let mut acc = self.response[(i, k)] - gamma[(i, k)];
                    for j in 0..q.len() {
                        acc += q[j] * (u[(j, k)] - qt_r[(j, k)]);
                    }
                    *o = acc;
                }
            }
            _ => unreachable!("workspace matches design"),
        }
    }

    fn apply_update(&mut self, i: usize, delta: &[f64]) {
        match (&mut self.work, self.design) {
            (Workspace::Dense(r), Design::Dense(d)) => {
                let col = d.column(i);
                for (k, &dk) in delta.iter().enumerate() {
                    if dk != 0.0 {
                        let mut rk = r.column_mut(k);
                        rk.axpy(-dk, &col, 1.0);
                    }
                }
            }
            (Workspace::Identity, _) => {}
            (Workspace::Annihilator { u, .. }, Design::Annihilator(h)) => {
                let q = h.basis().row(i);
                for (k, &dk) in delta.iter().enumerate() {
                    for j in 0..q.len() {
                        u[(j, k)] += q[j] * dk;
                    }
                }
            }
            _ => unreachable!("workspace matches design"),
        }
    }

    /// One cyclic sweep; returns `‖Δγ‖²_F`.
    fn sweep(&mut self, gamma: &mut DMatrix<f64>, lambda: f64, g: &mut [f64], v: &mut [f64], delta: &mut [f64]) -> f64 {
        let mut change = 0.0;
        for i in 0..gamma.nrows() {
            let l = self.col_norms[i];
            if l <= NULL_COLUMN {
                continue;
            }
            self.correlation(gamma, i, g);
            for k in 0..self.c {
                v[k] = gamma[(i, k)] + g[k] / l;
            }
            group_soft_threshold_in_place(v, lambda / l);
            let mut moved = false;
            for k in 0..self.c {
                delta[k] = v[k] - gamma[(i, k)];
                if delta[k] != 0.0 {
                    moved = true;
                }
            }
            if moved {
                for k in 0..self.c {
                    gamma[(i, k)] = v[k];
                    change += delta[k] * delta[k];
                }
                self.apply_update(i, delta);
            }
        }
        change
    }

    /// Moves `γ` along `Q b`, which leaves the loss unchanged, by a damped
    /// Newton step on `b ↦ Σᵢ ‖γ_i + q_i b‖`. Block updates barely move
    /// along this subspace once `λ` is small.
    fn null_step(&mut self, gamma: &mut DMatrix<f64>) {
        let (Workspace::Annihilator { u, .. }, Design::Annihilator(h)) = (&mut self.work, self.design) else {
            return;
        };
        let q = h.basis();
        let (n, p, c) = (gamma.nrows(), q.ncols(), self.c);
        let norms: Vec<f64> = gamma.row_iter().map(|r| r.norm()).collect();
        let active: Vec<usize> = (0..n).filter(|&i| norms[i] > 0.0).collect();
        if active.is_empty() || p == 0 {
            return;
        }
        let mut unit = DMatrix::zeros(n, c);
        let mut weighted_q = DMatrix::zeros(n, p);
        let mut z = DMatrix::zeros(active.len(), p * c);
        for (row, &i) in active.iter().enumerate() {
            let w = 1.0 / norms[i];
            let sw = libm::sqrt(w);
            for k in 0..c {
                unit[(i, k)] = gamma[(i, k)] / norms[i];
            }
            for j in 0..p {
                weighted_q[(i, j)] = w * q[(i, j)];
                for k in 0..c {
                    z[(row, j * c + k)] = sw * q[(i, j)] * unit[(i, k)];
                }
            }
        }
        let grad = q.transpose() * &unit;
        let a = q.transpose() * &weighted_q;
        let mut hess = z.transpose() * &z;
        hess.neg_mut();
        for j in 0..p {
            for jj in 0..p {
                for k in 0..c {
                    hess[(j * c + k, jj * c + k)] += a[(j, jj)];
                }
            }
        }
        let ridge = 1e-12 * hess.trace().abs().max(f64::MIN_POSITIVE) / (p * c) as f64;
        for d in 0..p * c {
            hess[(d, d)] += ridge;
        }
        let Some(chol) = hess.cholesky() else { return };
        let rhs = DMatrix::from_fn(p * c, 1, |d, _| -grad[(d / c, d % c)]);
        let step = chol.solve(&rhs);
        let b = DMatrix::from_fn(p, c, |j, k| step[(j * c + k, 0)]);
        let qb = q * &b;
        let penalty = |t: f64| -> f64 {
            (0..n)
                .map(|i| libm::sqrt((0..c).map(|k| (gamma[(i, k)] + t * qb[(i, k)]).powi(2)).sum::<f64>()))
                .sum()
        };
        let base = penalty(0.0);
        let mut t = 1.0;
        for _ in 0..12 {
            if penalty(t) < base {
                *gamma += &qb * t;
                *u += &b * t;
                return;
            }
            t *= 0.5;
        }
    }

    /// Recomputes the dense residual, shedding the rounding drift of
    /// incremental updates.
    fn refresh(&mut self, gamma: &DMatrix<f64>) {
        if let (Workspace::Dense(r), Design::Dense(d)) = (&mut self.work, self.design) {
            *r = self.response - d * gamma;
        }
    }

    fn kkt_holds(&mut self, gamma: &DMatrix<f64>, lambda: f64, tol: f64, g: &mut [f64]) -> bool {
        self.refresh(gamma);
        (0..gamma.nrows()).all(|i| {
            self.correlation(gamma, i, g);
            row_kkt_holds(g, gamma.row(i).iter().copied(), lambda, tol)
        })
    }

    fn solve(&mut self, gamma: &mut DMatrix<f64>, lambda: f64, opts: &PathOptions) -> Result<usize> {
        let mut g = vec![0.0; self.c];
        let mut v = vec![0.0; self.c];
        let mut delta = vec![0.0; self.c];
        for iter in 1..=opts.max_iter {
            let change = self.sweep(gamma, lambda, &mut g, &mut v, &mut delta);
            // λ floors the scale so rounding dither on a barely active row
            // cannot hold off the KKT check
            let scale = gamma.norm().max(lambda);
            let settled = change == 0.0 || libm::sqrt(change) <= opts.tol * scale;
            if settled && self.kkt_holds(gamma, lambda, opts.tol, &mut g) {
                return Ok(iter);
            }
            if iter % NULL_STEP_PERIOD == 0 {
                self.null_step(gamma);
            }
        }
        Err(Error::Convergence { lambda, iterations: opts.max_iter })
    }
}

/// KKT test for one row, given `g = d_iᵀ(R − Dγ)`.
fn row_kkt_holds(g: &[f64], row: impl Iterator<Item = f64> + Clone, lambda: f64, tol: f64) -> bool {
    let norm = libm::sqrt(row.clone().map(|x| x * x).sum::<f64>());
    if norm == 0.0 {
        libm::sqrt(g.iter().map(|x| x * x).sum::<f64>()) <= lambda * (1.0 + tol)
    } else {
        let resid: f64 = row.zip(g).map(|(x, gk)| {
            let e = -gk + lambda * x / norm;
            e * e
        }).sum();
        libm::sqrt(resid) <= tol * lambda
    }
}

/// Checks the group-lasso optimality conditions of `gamma` at `lambda`.
///
/// Active rows need `‖−d_iᵀr + λγ_i/‖γ_i‖‖ ≤ tol·λ`; zero rows need
/// `‖d_iᵀr‖ ≤ λ(1 + tol)`, with `r = R − Dγ`.
pub fn kkt_certificate(design: &Design<'_>, response: &DMatrix<f64>, gamma: &DMatrix<f64>, lambda: f64, tol: f64) -> bool {
    let resid = response - design.apply(gamma);
    let corr = design.apply_transpose(&resid);
    (0..gamma.nrows()).all(|i| {
        let g: Vec<f64> = corr.row(i).iter().copied().collect();
        row_kkt_holds(&g, gamma.row(i).iter().copied(), lambda, tol)
    })
}

fn check_shapes(design: &Design<'_>, response: &DMatrix<f64>) -> Result<()> {
    let n = design.nrows();
    if design.ncols() != n {
        return Err(Error::Dimension(format!("design must be square, got {}x{}", n, design.ncols())));
    }
    if response.nrows() != n {
        return Err(Error::Dimension(format!("design has {n} rows, response has {}", response.nrows())));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite response entry".into()));
    }
    Ok(())
}

/// Solves a single `λ` starting from `init`; returns the solution and the
/// number of sweeps used.
pub fn solve_at(
    design: &Design<'_>,
    response: &DMatrix<f64>,
    lambda: f64,
    init: &DMatrix<f64>,
    opts: &PathOptions,
) -> Result<(DMatrix<f64>, usize)> {
    check_shapes(design, response)?;
    let mut gamma = init.clone();
    let mut solver = Solver::new(*design, response, &gamma);
    let iters = solver.solve(&mut gamma, lambda, opts)?;
    Ok((gamma, iters))
}

/// `γ(λ)` over a grid together with per-sample entry times.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub grid: LambdaGrid,
    /// One `n × c` matrix per grid value.
    pub gammas: Vec<DMatrix<f64>>,
    /// First grid `λ` at which row `i` became nonzero, or 0 if it never did.
    pub entry_times: Vec<f64>,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.entry_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entry_times.is_empty()
    }

    /// `‖γ_i‖₂` at the smallest grid `λ`.
    pub fn final_norms(&self) -> Vec<f64> {
        let last = self.gammas.last().expect("path has at least one grid value");
        last.row_iter().map(|r| r.norm()).collect()
    }
}

/// Solves the path over `grid` with warm starts.
pub fn solve_path(design: &Design<'_>, response: &DMatrix<f64>, grid: &LambdaGrid, opts: &PathOptions) -> Result<SolutionPath> {
    check_shapes(design, response)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let (n, c) = response.shape();
    let mut gamma = DMatrix::zeros(n, c);
    let mut solver = Solver::new(*design, response, &gamma);
    let mut entry_times = vec![0.0; n];
    let mut gammas = Vec::with_capacity(grid.len());
    for &lambda in grid.values() {
        solver.solve(&mut gamma, lambda, opts)?;
        for (i, z) in entry_times.iter_mut().enumerate() {
            if *z == 0.0 && gamma.row(i).iter().any(|&x| x != 0.0) {
                *z = lambda;
            }
        }
        gammas.push(gamma.clone());
    }
    Ok(SolutionPath { grid: grid.clone(), gammas, entry_times })
}

/// Sample indices ordered by decreasing entry time; ties go to the larger
/// final `‖γ_i‖₂`, then to the smaller index.
pub fn entry_rank(path: &SolutionPath) -> Vec<usize> {
    let norms = path.final_norms();
    let mut order: Vec<usize> = (0..path.len()).collect();
    order.sort_by(|&a, &b| {
        path.entry_times[b]
            .total_cmp(&path.entry_times[a])
            .then(norms[b].total_cmp(&norms[a]))
            .then(a.cmp(&b))
    });
    order
}
