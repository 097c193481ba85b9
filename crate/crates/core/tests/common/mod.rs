//! Test-only reference computations, independent of the library's solver.
#![allow(dead_code)]

use ellipsar::simulate::{simulate_short_memory, ShortMemorySpec};
use ellipsar::{build_design, RegressionData, SeriesSample};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random stationary AR series turned into a regression problem.
pub fn random_instance(rng: &mut ChaCha8Rng, k_max: usize, n_min: usize, n_max: usize) -> (SeriesSample, RegressionData) {
    let k = rng.random_range(1..=k_max);
    let n = rng.random_range(n_min..=n_max);
    let mass = rng.random_range(0.05..0.95);
    let order = rng.random_range(1..=12);
    let spec = ShortMemorySpec::new(mass, order, rng.random_range(0.2..3.0)).unwrap();
    let s = simulate_short_memory(&spec, n, k, 200, rng.random()).unwrap();
    let d = build_design(&s).unwrap();
    (s, d)
}

/// Minimizer of `(1/n)|Y - Xb|²` over `{Σ λ_k² b_k² ≤ B²}` for `K ≤ 3`.
///
/// The unconstrained minimizer comes from an SVD least-squares solve. When
/// it lies outside, the boundary is parametrized by angles, searched on a
/// dense grid and refined by a shrinking pattern search.
pub fn ellipsoid_oracle(x: &DMatrix<f64>, y: &DVector<f64>, lambdas: &[f64], radius: f64) -> Vec<f64> {
    let k = x.ncols();
    assert!(k <= 3 && lambdas.len() == k);
    let n = x.nrows() as f64;
    let svd = x.clone().svd(true, true);
    let free = svd.solve(y, 1e-14).unwrap();
    let norm: f64 = free.iter().zip(lambdas).map(|(b, l)| (b * l).powi(2)).sum::<f64>().sqrt();
    if norm <= radius {
        return free.iter().copied().collect();
    }
    let gram = x.tr_mul(x);
    let cross = x.tr_mul(y);
    let yy = y.norm_squared();
    let objective = |b: &[f64]| {
        let bv = DVector::from_column_slice(b);
        (yy - 2.0 * bv.dot(&cross) + (gram.clone() * &bv).dot(&bv)) / n
    };
    let point = |angles: &[f64]| -> Vec<f64> {
        match k {
            1 => vec![angles[0].signum() * radius / lambdas[0]],
            2 => vec![radius * angles[0].cos() / lambdas[0], radius * angles[0].sin() / lambdas[1]],
            _ => {
                let (t, p) = (angles[0], angles[1]);
                vec![
                    radius * t.cos() / lambdas[0],
                    radius * t.sin() * p.cos() / lambdas[1],
                    radius * t.sin() * p.sin() / lambdas[2],
                ]
            }
        }
    };
    if k == 1 {
        let plus = point(&[1.0]);
        let minus = point(&[-1.0]);
        return if objective(&plus) <= objective(&minus) { plus } else { minus };
    }
    let pi = std::f64::consts::PI;
    let (mut best, mut best_val, mut step) = if k == 2 {
        let m = 20_000;
        let mut best = (vec![0.0], f64::INFINITY);
        for i in 0..m {
            let a = [2.0 * pi * i as f64 / m as f64];
            let v = objective(&point(&a));
            if v < best.1 {
                best = (a.to_vec(), v);
            }
        }
        (best.0, best.1, 2.0 * pi / m as f64)
    } else {
        let m = 600;
        let mut best = (vec![0.0, 0.0], f64::INFINITY);
        for i in 0..=m {
            for j in 0..2 * m {
                let a = [pi * i as f64 / m as f64, pi * j as f64 / m as f64];
                let v = objective(&point(&a));
                if v < best.1 {
                    best = (a.to_vec(), v);
                }
            }
        }
        (best.0, best.1, pi / m as f64)
    };
    while step > 1e-13 {
        let mut improved = false;
        for dim in 0..best.len() {
            for dir in [-1.0, 1.0] {
                let mut cand = best.clone();
                cand[dim] += dir * step;
                let v = objective(&point(&cand));
                if v < best_val {
                    best = cand;
                    best_val = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    point(&best)
}

/// `Y'X A⁻¹ Λ² A⁻¹ X'Y` with `A = X'X + τ n Λ²`, through an explicit inverse.
pub fn weighted_multiplier_equation(data: &RegressionData, lambdas: &[f64], tau: f64) -> f64 {
    let k = data.order();
    let lam2 = DMatrix::from_diagonal(&DVector::from_iterator(k, lambdas.iter().map(|l| l * l)));
    let a = data.gram() + lam2.clone() * (tau * data.n() as f64);
    let inv = a.try_inverse().unwrap();
    let v = &inv * data.cross();
    (lam2 * &v).dot(&v)
}
