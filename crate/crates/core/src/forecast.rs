//! One-step-ahead prediction and test-set scoring.

use crate::error::{Error, Result};
use crate::model::{rkhs_norm, CoefficientVector, WeightSequence};
use crate::simulate::SeriesSample;

/// `Σ_k b_k Y_{t-k}` where `history` is ordered oldest to newest and its last
/// element is `Y_{t-1}`.
pub fn predict(b: &CoefficientVector, history: &[f64]) -> Result<f64> {
    if history.len() < b.len() {
        return Err(Error::Dimension(format!(
            "{} lags requested but only {} past values available",
            b.len(),
            history.len()
        )));
    }
    let end = history.len();
    Ok(b.as_slice().iter().enumerate().map(|(i, bk)| bk * history[end - 1 - i]).sum())
}

/// Test-set comparison of a candidate model against a benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationReport {
    pub mse_candidate: f64,
    pub mse_benchmark: f64,
    /// `mse_candidate / mse_benchmark` (1 when both are zero).
    pub relative_improvement: f64,
    pub n_test: usize,
}

fn mse(b: &CoefficientVector, test: &SeriesSample) -> Result<f64> {
    let values = test.values();
    let start = test.lags();
    let mut total = 0.0;
    for idx in start..values.len() {
        let e = values[idx] - predict(b, &values[..idx])?;
        total += e * e;
    }
    Ok(total / test.n() as f64)
}

/// Scores both models on the targets `Y_1..Y_n` of `test`; the `K` presample
/// values only serve as history, so `test.lags()` must cover both orders.
pub fn evaluate(
    candidate: &CoefficientVector,
    benchmark: &CoefficientVector,
    test: &SeriesSample,
) -> Result<EvaluationReport> {
    let needed = candidate.len().max(benchmark.len());
    if test.lags() < needed {
        return Err(Error::Dimension(format!(
            "test sample holds {} presample values but the models need {needed}",
            test.lags()
        )));
    }
    let mse_candidate = mse(candidate, test)?;
    let mse_benchmark = mse(benchmark, test)?;
    let relative_improvement = if mse_candidate == 0.0 && mse_benchmark == 0.0 {
        1.0
    } else {
        mse_candidate / mse_benchmark
    };
    Ok(EvaluationReport { mse_candidate, mse_benchmark, relative_improvement, n_test: test.n() })
}

/// Both sides of the Cauchy–Schwarz bound on the uniform prediction gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformBound {
    /// `|φ - b|_E · max_{t, sample} (Σ_k (Y_{t-k} / λ_k)²)^{1/2}`.
    pub bound: f64,
    /// `max_{t, sample} |Σ_k (φ_k - b_k) Y_{t-k}|`.
    pub observed_sup: f64,
}

impl UniformBound {
    pub fn holds(&self) -> bool {
        self.observed_sup <= self.bound * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }
}

/// Evaluates the uniform bound over `t = 1..n` of every sample. Weights are
/// the exact `λ_k` of `w`, so the inequality holds with constant one.
pub fn uniform_bound_diagnostic(
    b: &CoefficientVector,
    phi_ref: &CoefficientVector,
    w: &WeightSequence,
    samples: &[SeriesSample],
) -> Result<UniformBound> {
    let k = w.max_index();
    if b.len() > k || phi_ref.len() > k {
        return Err(Error::Dimension(format!("coefficient vectors exceed K = {k}")));
    }
    let diff = phi_ref.sub(b).resized(k);
    let gap_norm = rkhs_norm(&diff, w)?;
    let lambdas = w.weights();
    let mut max_weighted = 0.0f64;
    let mut observed_sup = 0.0f64;
    for s in samples {
        if s.lags() < k {
            return Err(Error::Dimension(format!(
                "sample has {} presample values, K = {k} required",
                s.lags()
            )));
        }
        let values = s.values();
        for idx in s.lags()..values.len() {
            let mut weighted = 0.0;
            let mut gap = 0.0;
            for lag in 1..=k {
                let y = values[idx - lag];
                let r = y / lambdas[lag - 1];
                weighted += r * r;
                gap += diff.lag(lag) * y;
            }
            max_weighted = max_weighted.max(weighted.sqrt());
            observed_sup = observed_sup.max(gap.abs());
        }
    }
    Ok(UniformBound { bound: gap_norm * max_weighted, observed_sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_short_memory, ShortMemorySpec};
    use proptest::prelude::*;

    #[test]
    fn predict_examples() {
        assert_eq!(predict(&CoefficientVector::zeros(2), &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(predict(&vec![1.0].into(), &[9.0, 3.5]).unwrap(), 3.5);
        assert_eq!(predict(&vec![0.5, 0.25].into(), &[7.0, 2.0, 4.0]).unwrap(), 2.5);
        assert!(predict(&vec![1.0, 1.0].into(), &[1.0]).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let spec = ShortMemorySpec::new(0.75, 3, 1.0).unwrap();
        let test = simulate_short_memory(&spec, 200, 5, 50, 1).unwrap();
        let b: CoefficientVector = vec![0.2, 0.1].into();
        let r = evaluate(&b, &b, &test).unwrap();
        assert_eq!(r.relative_improvement, 1.0);
        assert_eq!(r.n_test, 200);

        let values: Vec<f64> = (0..40).map(|t| 0.8f64.powi(t)).collect();
        let noiseless = SeriesSample::from_values(values, 2, 0).unwrap();
        let r = evaluate(&vec![0.8].into(), &CoefficientVector::zeros(1), &noiseless).unwrap();
        assert!(r.mse_candidate < 1e-30);
        assert!(r.mse_benchmark > 0.0);
        assert!(r.relative_improvement < 1e-28);

        assert!(evaluate(&CoefficientVector::zeros(6), &b, &test).is_err());
    }

    #[test]
    fn evaluate_swap_inverts_ratio() {
        let spec = ShortMemorySpec::new(0.75, 3, 1.0).unwrap();
        let test = simulate_short_memory(&spec, 300, 4, 50, 2).unwrap();
        let a: CoefficientVector = vec![0.3, 0.2, 0.1].into();
        let c: CoefficientVector = vec![0.5].into();
        let ab = evaluate(&a, &c, &test).unwrap();
        let ba = evaluate(&c, &a, &test).unwrap();
        assert_eq!(ab.mse_candidate, ba.mse_benchmark);
        assert!((ab.relative_improvement * ba.relative_improvement - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_bound_examples() {
        let spec = ShortMemorySpec::new(0.75, 3, 1.0).unwrap();
        let s = simulate_short_memory(&spec, 100, 1, 50, 4).unwrap();
        let w = WeightSequence::with_exponent(0.7, 1).unwrap();
        let phi: CoefficientVector = vec![0.6].into();
        let same = uniform_bound_diagnostic(&phi, &phi, &w, std::slice::from_ref(&s)).unwrap();
        assert_eq!(same.bound, 0.0);

        let b: CoefficientVector = vec![0.2].into();
        let got = uniform_bound_diagnostic(&b, &phi, &w, std::slice::from_ref(&s)).unwrap();
        let max_abs = s.values()[..s.len() - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let direct = (w.weight(1) * 0.4).abs() * max_abs / w.weight(1);
        assert!((got.bound - direct).abs() < 1e-12 * direct);
        assert!(got.holds());
    }

    proptest! {
        #[test]
        fn predict_is_linear(a in prop::collection::vec(-2.0f64..2.0, 4),
                             b in prop::collection::vec(-2.0f64..2.0, 4),
                             h in prop::collection::vec(-5.0f64..5.0, 6)) {
            let a = CoefficientVector::new(a);
            let b = CoefficientVector::new(b);
            let lhs = predict(&a.add(&b), &h).unwrap();
            let rhs = predict(&a, &h).unwrap() + predict(&b, &h).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
