//! Coefficient geometry: the weight sequence `λ_k = scale · k^exponent`,
//! the ellipsoid `{b : Σ λ_k² b_k² ≤ B²}` and the two norms used to measure
//! coefficient vectors.

use crate::error::{Error, Result};

/// Penalty weights `λ_k = scale · k^exponent` for `k = 1..=max_index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSequence {
    exponent: f64,
    scale: f64,
    max_index: usize,
}

impl WeightSequence {
    /// Smallest admissible exponent (exclusive).
    pub const MIN_EXPONENT: f64 = 0.5;

    pub fn new(exponent: f64, scale: f64, max_index: usize) -> Result<Self> {
        if !(exponent > Self::MIN_EXPONENT) || !exponent.is_finite() {
            return Err(Error::Domain(format!(
                "weight exponent must exceed 1/2, got {exponent}"
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!("weight scale must be positive, got {scale}")));
        }
        if max_index == 0 {
            return Err(Error::Domain("weight sequence needs at least one index".into()));
        }
        Ok(Self { exponent, scale, max_index })
    }

    /// Unit-scale weights `k^exponent`.
    pub fn with_exponent(exponent: f64, max_index: usize) -> Result<Self> {
        Self::new(exponent, 1.0, max_index)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// Same geometry over a different lag budget.
    pub fn truncated(&self, max_index: usize) -> Result<Self> {
        Self::new(self.exponent, self.scale, max_index)
    }

    /// `λ_k` for a 1-based lag `k`.
    pub fn weight(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        self.scale * (k as f64).powf(self.exponent)
    }

    /// `(λ_1, ..., λ_K)`.
    pub fn weights(&self) -> Vec<f64> {
        (1..=self.max_index).map(|k| self.weight(k)).collect()
    }
}

/// Finite coefficient vector `(b_1, ..., b_K)`; all entries past `K` are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Entry at 1-based lag `k`, zero beyond the stored length.
    pub fn lag(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.0.get(k - 1).copied().unwrap_or(0.0)
    }

    /// Copy zero-padded (or truncated) to `len` entries.
    pub fn resized(&self, len: usize) -> Self {
        let mut v = self.0.clone();
        v.resize(len, 0.0);
        Self(v)
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.0.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    /// Entrywise difference over the longer of the two supports.
    pub fn sub(&self, other: &Self) -> Self {
        let len = self.len().max(other.len());
        Self((1..=len).map(|k| self.lag(k) - other.lag(k)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.len().max(other.len());
        Self((1..=len).map(|k| self.lag(k) + other.lag(k)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|b| c * b).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, b| m.max(b.abs()))
    }
}

impl From<Vec<f64>> for CoefficientVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// The ellipsoid `E_K(B)` with `K = weights.max_index()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidSpec {
    pub weights: WeightSequence,
    radius: f64,
}

impl EllipsoidSpec {
    pub fn new(weights: WeightSequence, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("ellipsoid radius must be positive, got {radius}")));
        }
        Ok(Self { weights, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// `(Σ λ_k² b_k²)^{1/2}`.
pub fn rkhs_norm(b: &CoefficientVector, w: &WeightSequence) -> Result<f64> {
    if b.len() > w.max_index() {
        return Err(Error::Dimension(format!(
            "coefficient vector has {} entries but weights stop at {}",
            b.len(),
            w.max_index()
        )));
    }
    Ok(b
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, bk)| {
            let v = w.weight(i + 1) * bk;
            v * v
        })
        .sum::<f64>()
        .sqrt())
}

/// Exact membership test, no tolerance. Vectors longer than the ellipsoid's
/// `K` are members only if their extra entries are zero.
pub fn in_ellipsoid(b: &CoefficientVector, e: &EllipsoidSpec) -> bool {
    let k_max = e.weights.max_index();
    if b.as_slice().iter().skip(k_max).any(|&x| x != 0.0) {
        return false;
    }
    let head = CoefficientVector::new(b.as_slice().iter().take(k_max).copied().collect());
    match rkhs_norm(&head, &e.weights) {
        Ok(norm) => norm <= e.radius(),
        Err(_) => false,
    }
}

/// Checks `|b_k| ≤ B / λ_k` for every stored lag.
pub fn decay_envelope_check(b: &CoefficientVector, w: &WeightSequence, radius: f64) -> bool {
    b.as_slice()
        .iter()
        .enumerate()
        .all(|(i, bk)| bk.abs() * w.weight(i + 1) <= radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_norm(b: &[f64], exponent: f64) -> f64 {
        let mut s = 0.0;
        for (i, x) in b.iter().enumerate() {
            let lam = ((i + 1) as f64).powf(exponent);
            s += lam * lam * x * x;
        }
        s.sqrt()
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(WeightSequence::with_exponent(0.5, 3).is_err());
        assert!(WeightSequence::with_exponent(-0.501, 3).is_err());
        assert!(WeightSequence::with_exponent(0.501, 3).is_ok());
        assert!(WeightSequence::new(1.0, 0.0, 3).is_err());
        assert!(WeightSequence::new(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn weights_increase() {
        let w = WeightSequence::new(0.501, 2.0, 200).unwrap();
        let v = w.weights();
        assert!(v[0] > 0.0);
        assert!(v.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn rkhs_norm_examples() {
        let w = WeightSequence::with_exponent(0.501, 3).unwrap();
        assert_eq!(rkhs_norm(&CoefficientVector::zeros(3), &w).unwrap(), 0.0);
        assert_eq!(rkhs_norm(&vec![1.0].into(), &w).unwrap(), 1.0);

        let w1 = WeightSequence::with_exponent(1.0, 2).unwrap();
        let b: CoefficientVector = vec![0.5, 0.25].into();
        let got = rkhs_norm(&b, &w1).unwrap();
        assert!((got - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((got - direct_norm(&[0.5, 0.25], 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rkhs_norm_dimension_error() {
        let w = WeightSequence::with_exponent(1.0, 2).unwrap();
        let b: CoefficientVector = vec![1.0, 2.0, 3.0].into();
        assert!(matches!(rkhs_norm(&b, &w), Err(Error::Dimension(_))));
    }

    #[test]
    fn membership_examples() {
        let w1 = WeightSequence::with_exponent(1.0, 2).unwrap();
        let small = EllipsoidSpec::new(w1, 0.5).unwrap();
        assert!(in_ellipsoid(&CoefficientVector::zeros(2), &small));
        assert!(!in_ellipsoid(&vec![1.0].into(), &small));
        let e = EllipsoidSpec::new(w1, 0.8).unwrap();
        assert!(in_ellipsoid(&vec![0.5, 0.25].into(), &e));
        assert!(!in_ellipsoid(&vec![0.0, 0.0, 0.1].into(), &e));
        assert!(EllipsoidSpec::new(w1, 0.0).is_err());
    }

    #[test]
    fn envelope_boundary_and_zero() {
        let w = WeightSequence::with_exponent(0.75, 4).unwrap();
        let b_radius = 1.3;
        assert!(decay_envelope_check(&CoefficientVector::zeros(4), &w, b_radius));
        let edge: CoefficientVector = vec![b_radius / w.weight(1), 0.0, 0.0, 0.0].into();
        assert!(decay_envelope_check(&edge, &w, b_radius));
    }

    #[test]
    fn envelope_holds_under_rejection_sampling() {
        let w = WeightSequence::with_exponent(0.501, 6).unwrap();
        let radius = 0.9;
        let e = EllipsoidSpec::new(w, radius).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut accepted = 0;
        while accepted < 1000 {
            let b: CoefficientVector = (0..6)
                .map(|_| rng.random_range(-radius..radius))
                .collect::<Vec<_>>()
                .into();
            if in_ellipsoid(&b, &e) {
                accepted += 1;
                assert!(decay_envelope_check(&b, &w, radius));
            }
        }
    }

    fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, len)
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous(b in coeffs(8), c in -5.0f64..5.0) {
            let w = WeightSequence::with_exponent(0.8, 8).unwrap();
            let b = CoefficientVector::new(b);
            let lhs = rkhs_norm(&b.scaled(c), &w).unwrap();
            let rhs = c.abs() * rkhs_norm(&b, &w).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn norm_triangle_inequality(a in coeffs(8), b in coeffs(8)) {
            let w = WeightSequence::with_exponent(1.3, 8).unwrap();
            let a = CoefficientVector::new(a);
            let b = CoefficientVector::new(b);
            let lhs = rkhs_norm(&a.add(&b), &w).unwrap();
            let rhs = rkhs_norm(&a, &w).unwrap() + rkhs_norm(&b, &w).unwrap();
            prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn norm_dominates_euclidean(b in coeffs(8), scale in 1.0f64..3.0, exponent in 0.51f64..2.0) {
            let w = WeightSequence::new(exponent, scale, 8).unwrap();
            let b = CoefficientVector::new(b);
            prop_assert!(rkhs_norm(&b, &w).unwrap() >= b.euclidean_norm());
        }
    }
}
