//! Lagged least squares under an ellipsoid constraint.
//!
//! The penalized fit minimizes `(1/n)|Y - Xb|² + τ b'Λ²b`, whose normal
//! equations are `(X'X + τ n Λ²) b = X'Y`. The constrained fit over
//! `{b : |b|_E ≤ B}` is the penalized fit at the multiplier `τ_B` that puts
//! the solution on the boundary, or the plain least-squares fit when that
//! already lies inside.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{rkhs_norm, CoefficientVector, EllipsoidSpec, WeightSequence};
use crate::simulate::SeriesSample;

/// Relative tolerance on the boundary equation used by default.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Number of radii in the default B grid.
pub const B_GRID_POINTS: usize = 15;
/// Penalty used in place of zero when `X'X` is singular.
pub const SINGULAR_TAU: f64 = 1e-12;
/// Weight exponent used when a fit has no explicit weight sequence.
pub const DEFAULT_WEIGHT_EXPONENT: f64 = 0.501;

const MAX_DOUBLINGS: usize = 1000;
const MAX_BISECTIONS: usize = 5000;
// Cholesky pivots below this fraction of the largest diagonal entry mean rank loss.
const PIVOT_RATIO: f64 = 1e-13;

/// Design `X[t, k] = Y_{t-k}` and response `Y_t` for `t = 1..n`, `k = 1..K`.
#[derive(Debug, Clone)]
pub struct RegressionData {
    design: DMatrix<f64>,
    response: DVector<f64>,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
}

impl RegressionData {
    /// Regression of `Y_t` on its first `order` lags over the window `t = 1..n`
    /// of `s`. `order` may be smaller than the sample's lag budget, in which
    /// case the oldest presample values are unused.
    pub fn from_sample(s: &SeriesSample, order: usize) -> Result<Self> {
        if order == 0 || order > s.lags() {
            return Err(Error::Dimension(format!(
                "lag order {order} must lie in 1..={}",
                s.lags()
            )));
        }
        if s.len() != s.n() + s.lags() {
            return Err(Error::Dimension("sample length differs from n + K".into()));
        }
        let n = s.n();
        let design =
            DMatrix::from_fn(n, order, |row, col| s.at(row as i64 + 1 - (col as i64 + 1)));
        let response = DVector::from_fn(n, |row, _| s.at(row as i64 + 1));
        Ok(Self::from_parts(design, response))
    }

    pub fn from_parts(design: DMatrix<f64>, response: DVector<f64>) -> Self {
        assert_eq!(design.nrows(), response.len(), "design and response row counts differ");
        let gram = design.tr_mul(&design);
        let cross = design.tr_mul(&response);
        Self { design, response, gram, cross }
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn order(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    /// `X'X`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `X'Y`.
    pub fn cross(&self) -> &DVector<f64> {
        &self.cross
    }

    /// Restriction to the first `order` regressors on the same rows.
    pub fn leading(&self, order: usize) -> Result<Self> {
        if order == 0 || order > self.order() {
            return Err(Error::Dimension(format!(
                "cannot keep {order} of {} regressors",
                self.order()
            )));
        }
        Ok(Self {
            design: self.design.columns(0, order).into_owned(),
            response: self.response.clone(),
            gram: self.gram.view((0, 0), (order, order)).into_owned(),
            cross: self.cross.rows(0, order).into_owned(),
        })
    }
}

pub fn build_design(s: &SeriesSample) -> Result<RegressionData> {
    RegressionData::from_sample(s, s.lags())
}

/// Fitted coefficients plus the solver state needed for model selection.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coeffs: CoefficientVector,
    pub tau: f64,
    pub binding: bool,
    pub df: f64,
    pub resid_var: f64,
    pub rkhs_norm_value: f64,
    /// `X'X` was singular and the fit used [`SINGULAR_TAU`] instead of zero.
    pub singular_fallback: bool,
    pub n: usize,
}

impl FitResult {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }
}

fn check_weights(data: &RegressionData, w: &WeightSequence) -> Result<()> {
    if w.max_index() < data.order() {
        return Err(Error::Dimension(format!(
            "weights cover {} lags but the design has {}",
            w.max_index(),
            data.order()
        )));
    }
    Ok(())
}

fn penalized_system(data: &RegressionData, w: &WeightSequence, tau: f64) -> DMatrix<f64> {
    let mut a = data.gram().clone();
    let scale = tau * data.n() as f64;
    if scale != 0.0 {
        for k in 0..data.order() {
            let lam = w.weight(k + 1);
            a[(k, k)] += scale * lam * lam;
        }
    }
    a
}

fn factor(a: DMatrix<f64>, tau: f64) -> Result<Cholesky<f64, Dyn>> {
    let max_diag = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let chol = Cholesky::new(a)
        .ok_or_else(|| Error::Rank(format!("penalized Gram matrix not positive definite at τ = {tau}")))?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if !(max_diag > 0.0) || min_pivot < PIVOT_RATIO * max_diag {
        return Err(Error::Rank(format!("penalized Gram matrix is numerically singular at τ = {tau}")));
    }
    Ok(chol)
}

fn validate_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("penalty τ must be finite and nonnegative, got {tau}")));
    }
    Ok(())
}

/// Penalized least squares `(X'X + τ n Λ²)⁻¹ X'Y`.
pub fn ridge_solve(data: &RegressionData, w: &WeightSequence, tau: f64) -> Result<FitResult> {
    validate_tau(tau)?;
    check_weights(data, w)?;
    let chol = factor(penalized_system(data, w, tau), tau)?;
    let b = chol.solve(data.cross());
    let df = chol.solve(data.gram()).trace();
    let resid = data.response() - data.design() * &b;
    let n = data.n();
    let coeffs = CoefficientVector::new(b.iter().copied().collect());
    let rkhs_norm_value = rkhs_norm(&coeffs, w)?;
    Ok(FitResult {
        coeffs,
        tau,
        binding: false,
        df,
        resid_var: resid.norm_squared() / n as f64,
        rkhs_norm_value,
        singular_fallback: false,
        n,
    })
}

/// `Trace((X'X + τ n Λ²)⁻¹ X'X)`.
pub fn degrees_of_freedom(data: &RegressionData, w: &WeightSequence, tau: f64) -> Result<f64> {
    validate_tau(tau)?;
    check_weights(data, w)?;
    let chol = factor(penalized_system(data, w, tau), tau)?;
    Ok(chol.solve(data.gram()).trace())
}

/// Squared RKHS norm of the penalized fit as a function of `τ`, evaluated in
/// the eigenbasis of `Λ⁻¹ X'X Λ⁻¹`: `Σ c_i² / (d_i + τ n)²`.
struct SpectralPath {
    eigenvalues: Vec<f64>,
    loadings: Vec<f64>,
    n: f64,
}

impl SpectralPath {
    fn new(data: &RegressionData, w: &WeightSequence) -> Self {
        let k = data.order();
        let inv_lam: Vec<f64> = (1..=k).map(|i| 1.0 / w.weight(i)).collect();
        let scaled = DMatrix::from_fn(k, k, |i, j| data.gram()[(i, j)] * inv_lam[i] * inv_lam[j]);
        let rhs = DVector::from_fn(k, |i, _| data.cross()[i] * inv_lam[i]);
        let eig = SymmetricEigen::new(scaled);
        let loadings = eig.eigenvectors.tr_mul(&rhs);
        Self {
            eigenvalues: eig.eigenvalues.iter().map(|d| d.max(0.0)).collect(),
            loadings: loadings.iter().copied().collect(),
            n: data.n() as f64,
        }
    }

    fn squared_norm(&self, tau: f64) -> f64 {
        let shift = tau * self.n;
        self.eigenvalues
            .iter()
            .zip(&self.loadings)
            .map(|(d, c)| {
                let r = c / (d + shift);
                r * r
            })
            .sum()
    }
}

/// Finds `τ` with `g(τ) ∈ [target (1 - tol), target]` for a decreasing `g`,
/// given `g(lo) ≥ target > g(hi)`. Returns the upper end of the final bracket.
fn bisect_decreasing(
    g: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    mut g_hi: f64,
    target: f64,
    tol: f64,
) -> Result<f64> {
    for _ in 0..MAX_BISECTIONS {
        if g_hi >= target * (1.0 - tol) {
            return Ok(hi);
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if !(mid > lo && mid < hi) {
            break;
        }
        let g_mid = g(mid)?;
        if g_mid >= target {
            lo = mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    Err(Error::SolverFailure(format!(
        "bisection stalled on [{lo:e}, {hi:e}] with relative gap {:e}",
        (target - g_hi) / target
    )))
}

/// Reusable solver for a fixed design and weight sequence; caches the
/// unpenalized fit and the spectral decomposition across radii.
pub struct ConstrainedSolver<'a> {
    data: &'a RegressionData,
    weights: WeightSequence,
    unpenalized: FitResult,
    spectral: Option<SpectralPath>,
}

impl<'a> ConstrainedSolver<'a> {
    pub fn new(data: &'a RegressionData, w: &WeightSequence) -> Result<Self> {
        check_weights(data, w)?;
        let weights = w.truncated(data.order())?;
        let unpenalized = match ridge_solve(data, &weights, 0.0) {
            Ok(fit) => fit,
            Err(Error::Rank(_)) => {
                log::warn!("X'X is singular; using τ = {SINGULAR_TAU:e} as the unpenalized limit");
                let mut fit = ridge_solve(data, &weights, SINGULAR_TAU)?;
                fit.singular_fallback = true;
                fit
            }
            Err(e) => return Err(e),
        };
        Ok(Self { data, weights, unpenalized, spectral: None })
    }

    /// Least-squares (or minimum-penalty) fit the constraint is tested against.
    pub fn unpenalized(&self) -> &FitResult {
        &self.unpenalized
    }

    pub fn solve(&mut self, radius: f64, tol: f64) -> Result<FitResult> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::Domain(format!("tolerance must lie in (0, 1), got {tol}")));
        }
        if self.unpenalized.rkhs_norm_value <= radius {
            return Ok(self.unpenalized.clone());
        }
        let target = radius * radius;
        let floor = if self.unpenalized.singular_fallback { SINGULAR_TAU } else { 0.0 };
        let spectral = self.spectral.get_or_insert_with(|| SpectralPath::new(self.data, &self.weights));
        let g = |tau: f64| Ok(spectral.squared_norm(tau));

        let mut hi = 1.0;
        let mut g_hi = g(hi)?;
        let mut doublings = 0;
        while g_hi >= target {
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::SolverFailure(format!(
                    "no upper bracket after {MAX_DOUBLINGS} doublings"
                )));
            }
            hi *= 2.0;
            g_hi = g(hi)?;
        }
        let outer_hi = hi;
        let mut lo = if doublings > 0 { hi / 2.0 } else { hi };
        while lo > floor && g(lo)? < target {
            hi = lo;
            lo /= 2.0;
            if lo < f64::MIN_POSITIVE {
                lo = floor;
            }
        }
        lo = lo.max(floor);
        if lo == floor && g(lo)? < target {
            // The radius sits within rounding of the unpenalized norm, below
            // the resolution of the spectral path.
            let mut fit = self.factored_bisection(floor, outer_hi, target, tol)?;
            fit.binding = true;
            fit.singular_fallback = self.unpenalized.singular_fallback;
            return Ok(fit);
        }
        g_hi = g(hi)?;
        let tau = bisect_decreasing(g, lo, hi, g_hi, target, tol)?;

        let mut fit = ridge_solve(self.data, &self.weights, tau)?;
        let sq = fit.rkhs_norm_value * fit.rkhs_norm_value;
        if !(sq <= target && sq >= target * (1.0 - tol)) {
            fit = self.polish(tau, floor, target, tol)?;
        }
        fit.binding = true;
        fit.singular_fallback = self.unpenalized.singular_fallback;
        Ok(fit)
    }

    fn factored_norm_sq(&self, tau: f64) -> Result<f64> {
        let fit = ridge_solve(self.data, &self.weights, tau)?;
        Ok(fit.rkhs_norm_value * fit.rkhs_norm_value)
    }

    /// Bisection on the Cholesky path over `[lo, hi]`, where the unpenalized
    /// fit guarantees `g(floor) ≥ target`.
    fn factored_bisection(&self, lo: f64, hi: f64, target: f64, tol: f64) -> Result<FitResult> {
        let mut hi = hi;
        let mut g_hi = self.factored_norm_sq(hi)?;
        for _ in 0..MAX_DOUBLINGS {
            if g_hi < target {
                break;
            }
            hi *= 2.0;
            g_hi = self.factored_norm_sq(hi)?;
        }
        let tau = bisect_decreasing(|t| self.factored_norm_sq(t), lo, hi, g_hi, target, tol)?;
        ridge_solve(self.data, &self.weights, tau)
    }

    /// Re-solves near the spectral estimate `tau` when the factorized
    /// solution disagrees with it at the requested precision.
    fn polish(&self, tau: f64, floor: f64, target: f64, tol: f64) -> Result<FitResult> {
        let mut lo = tau * (1.0 - 1e-6);
        while lo > floor && self.factored_norm_sq(lo)? < target {
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                lo = floor;
            }
        }
        self.factored_bisection(lo.max(floor), tau * (1.0 + 1e-6), target, tol)
    }
}

/// Least squares over `E_K(B)` via the Lagrange multiplier `τ_B`.
pub fn constrained_solve(data: &RegressionData, e: &EllipsoidSpec, tol: f64) -> Result<FitResult> {
    ConstrainedSolver::new(data, &e.weights)?.solve(e.radius(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    BGrid,
    Aic,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::BGrid => "b_grid",
            Criterion::Aic => "aic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub chosen: FitResult,
    /// `(B or p, criterion value)` per candidate, in evaluation order.
    pub grid: Vec<(f64, f64)>,
    pub criterion: Criterion,
}

impl SelectionResult {
    /// Radius or order of the chosen candidate.
    pub fn chosen_parameter(&self) -> f64 {
        argmin_smallest(&self.grid).map(|i| self.grid[i].0).unwrap_or(f64::NAN)
    }
}

/// Index of the minimal criterion value; ties go to the smallest parameter.
fn argmin_smallest(grid: &[(f64, f64)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(param, crit)) in grid.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(j) => {
                let (bp, bc) = grid[j];
                if crit < bc || (crit == bc && param < bp) {
                    Some(i)
                } else {
                    Some(j)
                }
            }
        };
    }
    best
}

/// `ln σ̂² + 2 df / n`.
pub fn information_criterion(resid_var: f64, df: f64, n: usize) -> f64 {
    resid_var.ln() + 2.0 * df / n as f64
}

/// Picks `B` from `grid` by minimizing `ln σ̂²_B + 2 df(B) / n`.
pub fn select_b(data: &RegressionData, w: &WeightSequence, grid: &[f64]) -> Result<SelectionResult> {
    select_b_with_tol(data, w, grid, DEFAULT_TOL)
}

pub fn select_b_with_tol(
    data: &RegressionData,
    w: &WeightSequence,
    grid: &[f64],
    tol: f64,
) -> Result<SelectionResult> {
    if grid.is_empty() {
        return Err(Error::Domain("B grid is empty".into()));
    }
    let mut solver = ConstrainedSolver::new(data, w)?;
    let mut fits = Vec::with_capacity(grid.len());
    let mut scores = Vec::with_capacity(grid.len());
    for &radius in grid {
        let fit = solver
            .solve(radius, tol)
            .map_err(|e| Error::AtRadius { radius, source: Box::new(e) })?;
        scores.push((radius, information_criterion(fit.resid_var, fit.df, fit.n)));
        fits.push(fit);
    }
    let best = argmin_smallest(&scores).expect("grid is nonempty");
    Ok(SelectionResult { chosen: fits.swap_remove(best), grid: scores, criterion: Criterion::BGrid })
}

/// Log-spaced radii spanning `[0.1 r, 10 r]` where `r` is the RKHS norm of
/// the unpenalized (or minimum-penalty) fit.
pub fn default_b_grid(data: &RegressionData, w: &WeightSequence) -> Result<Vec<f64>> {
    let solver = ConstrainedSolver::new(data, w)?;
    let r = solver.unpenalized().rkhs_norm_value;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("cannot centre a B grid on an unpenalized norm of {r}")));
    }
    Ok(log_grid(0.1 * r, 10.0 * r, B_GRID_POINTS))
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// [`select_b`] over [`default_b_grid`].
pub fn select_b_default(data: &RegressionData, w: &WeightSequence) -> Result<SelectionResult> {
    let grid = default_b_grid(data, w)?;
    select_b(data, w, &grid)
}

/// Unpenalized AR(p) fit over the window `t = 1..n` of `s`.
pub fn fit_ols_ar(s: &SeriesSample, p: usize) -> Result<FitResult> {
    let data = RegressionData::from_sample(s, p)?;
    let w = WeightSequence::with_exponent(DEFAULT_WEIGHT_EXPONENT, p)?;
    ridge_solve(&data, &w, 0.0)
}

/// `⌊10 log₁₀ n⌋`, capped at `n / 4`, at least 1.
pub fn default_p_max(n: usize) -> usize {
    let by_log = (10.0 * (n.max(1) as f64).log10()).floor() as usize;
    by_log.min(n / 4).max(1)
}

/// Lag order minimizing `ln σ̂²_p + 2p/n` over `p = 1..=p_max`, all orders
/// sharing the window that drops the first `p_max` observations.
pub fn select_aic_order(s: &SeriesSample, p_max: usize) -> Result<SelectionResult> {
    if p_max == 0 {
        return Err(Error::Domain("p_max must be at least 1".into()));
    }
    if s.len() <= p_max + 1 {
        return Err(Error::Dimension(format!(
            "series of length {} is too short for p_max = {p_max}",
            s.len()
        )));
    }
    let common = s.relagged(p_max)?;
    let full = RegressionData::from_sample(&common, p_max)?;
    let w = WeightSequence::with_exponent(DEFAULT_WEIGHT_EXPONENT, p_max)?;
    let mut fits = Vec::with_capacity(p_max);
    let mut scores = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let data = if p == p_max { full.clone() } else { full.leading(p)? };
        let fit = ridge_solve(&data, &w, 0.0)?;
        scores.push((p as f64, information_criterion(fit.resid_var, p as f64, fit.n)));
        fits.push(fit);
    }
    let best = argmin_smallest(&scores).expect("p_max ≥ 1");
    Ok(SelectionResult { chosen: fits.swap_remove(best), grid: scores, criterion: Criterion::Aic })
}
