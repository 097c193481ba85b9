//! Data-generating processes: finite-order AR driven by Gaussian noise and
//! an ARFIMA variant whose noise is a fractionally integrated MA(L).
//!
//! All simulators start from zero initial conditions, run a warm-up segment
//! that is discarded, and are fully determined by their seed.

use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::CoefficientVector;

/// Default number of retained terms of `(1 - L)^{-d}`.
pub const DEFAULT_FRAC_TRUNCATION: usize = 1000;
/// Default fractional integration order of the long-memory design.
pub const DEFAULT_FRAC_D: f64 = 0.49;
/// Margin separating roots from the unit circle in [`char_root_check`].
pub const ROOT_MARGIN: f64 = 1e-8;
/// Tail tolerance enforced by [`autocovariance`].
pub const MA_TAIL_TOL: f64 = 1e-10;

/// AR design with `φ_k ∝ k^{-1/2}` for `k ≤ K₀`, normalized so `Σ φ_k = φ̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortMemorySpec {
    pub total_mass: f64,
    pub true_order: usize,
    pub innovation_sd: f64,
}

impl ShortMemorySpec {
    pub fn new(total_mass: f64, true_order: usize, innovation_sd: f64) -> Result<Self> {
        if !(total_mass > 0.0) || !total_mass.is_finite() {
            return Err(Error::Domain(format!("total AR mass must be positive, got {total_mass}")));
        }
        if true_order == 0 {
            return Err(Error::Domain("true AR order must be at least 1".into()));
        }
        if !(innovation_sd >= 0.0) || !innovation_sd.is_finite() {
            return Err(Error::Domain(format!(
                "innovation standard deviation must be nonnegative, got {innovation_sd}"
            )));
        }
        Ok(Self { total_mass, true_order, innovation_sd })
    }

    pub fn coefficients(&self) -> CoefficientVector {
        short_memory_coeffs(self)
    }
}

/// AR part from a [`ShortMemorySpec`] driven by `(1 - L)^{-d} θ(L) ε_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArfimaSpec {
    pub ar: ShortMemorySpec,
    pub ma_coeffs: Vec<f64>,
    pub frac_d: f64,
    pub frac_truncation: usize,
}

impl ArfimaSpec {
    pub fn new(
        ar: ShortMemorySpec,
        ma_coeffs: Vec<f64>,
        frac_d: f64,
        frac_truncation: usize,
    ) -> Result<Self> {
        if !(frac_d.abs() < 0.5) {
            return Err(Error::Domain(format!("|d| must be below 1/2, got {frac_d}")));
        }
        if ma_coeffs.is_empty() {
            return Err(Error::Domain("MA polynomial needs at least θ_0".into()));
        }
        let ma_order = ma_coeffs.len() - 1;
        if frac_truncation < ma_order {
            return Err(Error::Domain(format!(
                "fractional truncation {frac_truncation} is shorter than the MA order {ma_order}"
            )));
        }
        Ok(Self { ar, ma_coeffs, frac_d, frac_truncation })
    }

    /// `θ_l = 1 - 0.1 l` for `l = 0..=5`, `d = 0.49`, `J = 1000`.
    pub fn long_memory(ar: ShortMemorySpec) -> Self {
        Self::new(ar, default_ma_coeffs(), DEFAULT_FRAC_D, DEFAULT_FRAC_TRUNCATION)
            .expect("default long-memory parameters are valid")
    }
}

/// `θ_l = 1 - 0.1 l`, `l = 0..=5`.
pub fn default_ma_coeffs() -> Vec<f64> {
    (0..=5).map(|l| 1.0 - 0.1 * l as f64).collect()
}

/// Source of i.i.d. innovations.
pub trait Innovation {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64;
}

/// `Normal(0, sd²)`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub sd: f64,
}

impl Innovation for Gaussian {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.sd * z
    }
}

/// Observed series `Y_{-(K-1)}, ..., Y_0, Y_1, ..., Y_n` (length `n + K`).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSample {
    values: Vec<f64>,
    n: usize,
    lags: usize,
    pub rng_seed: u64,
}

impl SeriesSample {
    /// Splits `values` into `lags` presample points and `values.len() - lags`
    /// effective observations.
    pub fn from_values(values: Vec<f64>, lags: usize, rng_seed: u64) -> Result<Self> {
        if lags == 0 {
            return Err(Error::Dimension("lag budget K must be at least 1".into()));
        }
        if values.len() <= lags {
            return Err(Error::Dimension(format!(
                "series of length {} leaves no observations after {lags} lags",
                values.len()
            )));
        }
        let n = values.len() - lags;
        Ok(Self { values, n, lags, rng_seed })
    }

    /// Same underlying values, re-split for a different lag budget.
    pub fn relagged(&self, lags: usize) -> Result<Self> {
        Self::from_values(self.values.clone(), lags, self.rng_seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the first observation `Y_{-(K-1)}`.
    pub fn first_index(&self) -> i64 {
        1 - self.lags as i64
    }

    /// `Y_t` for `t ∈ -(K-1)..=n`.
    pub fn at(&self, t: i64) -> f64 {
        self.values[(t - self.first_index()) as usize]
    }

    /// CSV with header `t,value`; values carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 28 + 8);
        out.push_str("t,value\n");
        let start = self.first_index();
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{:.16e}", start + i as i64, v).unwrap();
        }
        out
    }

    /// Reads the `t,value` layout written by [`to_csv`](Self::to_csv). The lag
    /// budget is recovered from the first time index.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("t,value") => {}
            other => {
                return Err(Error::Usage {
                    key: "csv header".into(),
                    reason: format!("expected `t,value`, found {other:?}"),
                })
            }
        }
        let mut first_t = None;
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let bad = |reason: String| Error::Usage { key: format!("csv row {}", row + 1), reason };
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("expected two fields in {line:?}")))?;
            let t: i64 = t.trim().parse().map_err(|e| bad(format!("time index: {e}")))?;
            let v: f64 = v.trim().parse().map_err(|e| bad(format!("value: {e}")))?;
            let expected = first_t.map(|f: i64| f + row as i64).unwrap_or(t);
            if t != expected {
                return Err(bad(format!("time index {t} is not consecutive (expected {expected})")));
            }
            first_t.get_or_insert(t);
            values.push(v);
        }
        let first = first_t.ok_or_else(|| Error::Dimension("empty series".into()))?;
        if first > 0 {
            return Err(Error::Dimension(format!("first time index must be ≤ 0, got {first}")));
        }
        Self::from_values(values, (1 - first) as usize, 0)
    }
}

/// `φ_k = φ̄ k^{-1/2} / Σ_{j ≤ K₀} j^{-1/2}`.
pub fn short_memory_coeffs(spec: &ShortMemorySpec) -> CoefficientVector {
    let raw: Vec<f64> = (1..=spec.true_order).map(|k| (k as f64).powf(-0.5)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| spec.total_mass * r / total).collect::<Vec<_>>().into()
}

/// Coefficients `π_0..=π_J` of `(1 - L)^{-d}` by the binomial recursion
/// `π_j = π_{j-1} (j - 1 + d) / j`.
pub fn fractional_coeffs(d: f64, terms: usize) -> Result<Vec<f64>> {
    if !(d.abs() < 0.5) {
        return Err(Error::Domain(format!("|d| must be below 1/2, got {d}")));
    }
    let mut pi = Vec::with_capacity(terms + 1);
    pi.push(1.0);
    for j in 1..=terms {
        let prev = pi[j - 1];
        pi.push(prev * (j as f64 - 1.0 + d) / j as f64);
    }
    Ok(pi)
}

/// `len` i.i.d. draws from a fresh stream seeded with `seed`.
pub fn innovations<I: Innovation>(law: &I, len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| law.draw(&mut rng)).collect()
}

/// `Y_t = Σ_k φ_k Y_{t-k} + drive_t` from zero initial conditions.
pub fn ar_filter(phi: &[f64], drive: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(drive.len());
    for (t, &e) in drive.iter().enumerate() {
        let depth = phi.len().min(t);
        let mut acc = e;
        for k in 1..=depth {
            acc += phi[k - 1] * y[t - k];
        }
        y.push(acc);
    }
    y
}

/// Causal FIR filter `out_t = Σ_j h_j x_{t-j}` with zero presample.
pub fn fir_filter(h: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            let depth = (h.len() - 1).min(t);
            (0..=depth).map(|j| h[j] * x[t - j]).sum()
        })
        .collect()
}

/// ARFIMA noise `u_t = Σ_j π_j v_{t-j}`, `v_t = Σ_l θ_l ε_{t-l}` over the
/// first `len` innovations of the stream for `seed`.
pub fn arfima_noise(spec: &ArfimaSpec, len: usize, seed: u64) -> Result<Vec<f64>> {
    let eps = innovations(&Gaussian { sd: spec.ar.innovation_sd }, len, seed);
    arfima_noise_from(spec, &eps)
}

fn arfima_noise_from(spec: &ArfimaSpec, eps: &[f64]) -> Result<Vec<f64>> {
    let pi = fractional_coeffs(spec.frac_d, spec.frac_truncation)?;
    let v = fir_filter(&spec.ma_coeffs, eps);
    Ok(fir_filter(&pi, &v))
}

/// Short-memory path of `warmup + len` steps with the warm-up dropped.
pub fn short_memory_path(spec: &ShortMemorySpec, len: usize, warmup: usize, seed: u64) -> Vec<f64> {
    let eps = innovations(&Gaussian { sd: spec.innovation_sd }, warmup + len, seed);
    let mut y = ar_filter(spec.coefficients().as_slice(), &eps);
    y.drain(..warmup);
    y
}

/// Long-memory path of `warmup + len` steps with the warm-up dropped.
pub fn arfima_path(spec: &ArfimaSpec, len: usize, warmup: usize, seed: u64) -> Result<Vec<f64>> {
    let eps = innovations(&Gaussian { sd: spec.ar.innovation_sd }, warmup + len, seed);
    let u = arfima_noise_from(spec, &eps)?;
    let mut y = ar_filter(spec.ar.coefficients().as_slice(), &u);
    y.drain(..warmup);
    Ok(y)
}

pub fn simulate_short_memory(
    spec: &ShortMemorySpec,
    n: usize,
    lags: usize,
    warmup: usize,
    seed: u64,
) -> Result<SeriesSample> {
    check_sizes(n, lags)?;
    SeriesSample::from_values(short_memory_path(spec, n + lags, warmup, seed), lags, seed)
}

pub fn simulate_arfima(
    spec: &ArfimaSpec,
    n: usize,
    lags: usize,
    warmup: usize,
    seed: u64,
) -> Result<SeriesSample> {
    check_sizes(n, lags)?;
    SeriesSample::from_values(arfima_path(spec, n + lags, warmup, seed)?, lags, seed)
}

fn check_sizes(n: usize, lags: usize) -> Result<()> {
    if n == 0 || lags == 0 {
        return Err(Error::Dimension(format!("need n ≥ 1 and K ≥ 1, got n = {n}, K = {lags}")));
    }
    Ok(())
}

/// Result of locating the roots of `1 - Σ φ_k z^k`.
#[derive(Debug, Clone)]
pub struct RootCheck {
    /// Every root lies strictly outside the circle of radius `1 + margin`.
    pub stationary: bool,
    /// Smallest root modulus (`+∞` for a constant polynomial).
    pub min_modulus: f64,
    pub roots: Vec<Complex<f64>>,
}

pub fn char_root_check(phi: &CoefficientVector) -> RootCheck {
    char_root_check_with_margin(phi, ROOT_MARGIN)
}

/// Roots come from the eigenvalues `w` of the companion matrix of
/// `w^p - φ_1 w^{p-1} - ... - φ_p`, mapped back by `z = 1 / w`.
pub fn char_root_check_with_margin(phi: &CoefficientVector, margin: f64) -> RootCheck {
    let coeffs = phi.as_slice();
    let degree = coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
    if degree == 0 {
        return RootCheck { stationary: true, min_modulus: f64::INFINITY, roots: Vec::new() };
    }
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for (j, &c) in coeffs[..degree].iter().enumerate() {
        companion[(0, j)] = c;
    }
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    let eig = companion.complex_eigenvalues();
    let roots: Vec<Complex<f64>> = eig.iter().map(|w| Complex::new(1.0, 0.0) / w).collect();
    let min_modulus = roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    RootCheck { stationary: min_modulus > 1.0 + margin, min_modulus, roots }
}

/// MA(∞) weights `ψ_0..=ψ_{n_terms}` with `ψ_0 = 1`,
/// `ψ_s = Σ_{k ≤ min(s, K)} φ_k ψ_{s-k}`.
pub fn ar_to_ma(phi: &CoefficientVector, n_terms: usize) -> Result<Vec<f64>> {
    let check = char_root_check(phi);
    if !check.stationary {
        return Err(Error::NonStationary { min_modulus: check.min_modulus });
    }
    Ok(ma_weights(phi.as_slice(), n_terms))
}

fn ma_weights(phi: &[f64], n_terms: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n_terms + 1);
    psi.push(1.0);
    for s in 1..=n_terms {
        let depth = phi.len().min(s);
        psi.push((1..=depth).map(|k| phi[k - 1] * psi[s - k]).sum());
    }
    psi
}

/// `γ(k) = σ² Σ_s ψ_s ψ_{s+k}` for `k = 0..=max_lag` from the truncated MA
/// expansion. Fails unless the last `max(K, 1)` weights sum (in absolute
/// value) below [`MA_TAIL_TOL`].
pub fn autocovariance(
    phi: &CoefficientVector,
    sigma: f64,
    max_lag: usize,
    n_terms: usize,
) -> Result<Vec<f64>> {
    let psi = ar_to_ma(phi, n_terms)?;
    let window = phi.len().max(1).min(psi.len());
    let tail: f64 = psi[psi.len() - window..].iter().map(|p| p.abs()).sum();
    if tail >= MA_TAIL_TOL {
        return Err(Error::Truncation { n_terms, tail });
    }
    let var = sigma * sigma;
    Ok((0..=max_lag)
        .map(|k| {
            if k >= psi.len() {
                return 0.0;
            }
            var * psi.iter().zip(&psi[k..]).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect())
}
