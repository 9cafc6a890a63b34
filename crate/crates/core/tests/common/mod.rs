#![allow(dead_code)]

use fincompare::model::Model;
use fincompare::{CentralMoments, DerivBundle};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

/// Mean and batch standard error of `f(x)` over `xs`, using `batches`
/// contiguous batches.
pub fn batch_mean(values: &[f64], batches: usize) -> (f64, f64) {
    let size = values.len() / batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    mean_se(&means)
}

/// Unbiased sample variance per batch; returns the mean of the batch
/// variances and its standard error.
pub fn batch_variance(values: &[f64], batches: usize) -> (f64, f64) {
    let size = values.len() / batches;
    let vars: Vec<f64> = values
        .chunks_exact(size)
        .map(|c| {
            let m = c.iter().sum::<f64>() / c.len() as f64;
            c.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (c.len() - 1) as f64
        })
        .collect();
    mean_se(&vars)
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0);
    (m, (v / k).sqrt())
}

/// Random valid symmetric moment set: either a Gaussian scale mixture or a
/// symmetric discrete distribution on `+-a_j`.
pub fn random_symmetric_moments(rng: &mut impl Rng) -> CentralMoments {
    let k = rng.random_range(1..=4);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let scales: Vec<f64> = (0..k).map(|_| rng.random_range(0.1f64..3.0)).collect();
    let gaussian = rng.random_bool(0.5);
    let mut m = [0.0; 4];
    for (w, s) in weights.iter().zip(&scales) {
        let w = w / total;
        for (j, mj) in m.iter_mut().enumerate() {
            let order = 2 * (j as i32 + 1);
            let base = s.powi(order);
            *mj += w * if gaussian {
                fincompare::double_factorial(order as u64 - 1) as f64 * base
            } else {
                base
            };
        }
    }
    CentralMoments::symmetric(m[0], m[1], m[2], m[3]).expect("mixture moments are valid")
}

pub fn random_bundle(rng: &mut impl Rng) -> DerivBundle {
    let mut normal = || -> f64 { StandardNormal.sample(&mut *rng) };
    DerivBundle {
        g0: normal(),
        g1: normal(),
        g2: normal(),
        h0: normal(),
        h1: normal(),
        h2: normal(),
    }
}

/// A bundle biased towards satisfying the four sufficient conditions.
pub fn random_bundle_near_situation_one(rng: &mut impl Rng) -> DerivBundle {
    let mut d = random_bundle(rng);
    if rng.random_bool(0.7) {
        d.g2 = d.g2.abs() * d.g0.signum();
    }
    let q = d.g1 * d.g1 + d.g0 * d.g2;
    let c1_edge = 2.0 * (d.g0 * d.g1).abs();
    let c2_edge = 2.0 * q.abs();
    d.h1 = c1_edge * rng.random_range(-1.2..1.2);
    d.h2 = c2_edge * rng.random_range(-1.2..1.2);
    d
}

/// Model with a single fixed bundle and moment set, for exercising the
/// condition checker. Densities are not available.
pub struct SyntheticModel {
    pub bundle: DerivBundle,
    pub moments: CentralMoments,
    pub n: usize,
}

impl Model for SyntheticModel {
    fn theta(&self) -> f64 {
        0.0
    }
    fn n_obs(&self) -> usize {
        self.n
    }
    fn is_symmetric(&self) -> bool {
        self.moments.is_symmetric()
    }
    fn is_iid(&self) -> bool {
        true
    }
    fn mean(&self, _i: usize) -> f64 {
        0.0
    }
    fn moments(&self, _i: usize) -> CentralMoments {
        self.moments
    }
    fn log_density(&self, _i: usize, _z: f64, _t: f64) -> f64 {
        f64::NAN
    }
    fn score(&self, _i: usize, _z: f64, _t: f64) -> f64 {
        f64::NAN
    }
    fn hessian(&self, _i: usize, _z: f64, _t: f64) -> f64 {
        f64::NAN
    }
    fn score_z_derivs(&self, _i: usize) -> [f64; 3] {
        [self.bundle.g0, self.bundle.g1, self.bundle.g2]
    }
    fn hessian_z_derivs(&self, _i: usize) -> [f64; 3] {
        [self.bundle.h0, self.bundle.h1, self.bundle.h2]
    }
    fn draw(&self, _i: usize, _rng: &mut dyn RngCore) -> f64 {
        f64::NAN
    }
}

/// The six-term symmetric form of var[g^2], written out independently of the
/// library.
pub fn symmetric_var_g2(d: &DerivBundle, m: &CentralMoments) -> f64 {
    let q = d.g1 * d.g1 + d.g0 * d.g2;
    4.0 * d.g0 * d.g0 * d.g1 * d.g1 * m.m2
        + q * q * (m.m4 - m.m2 * m.m2)
        + d.g2.powi(4) / 16.0 * (m.m8 - m.m4 * m.m4)
        + d.g1 * d.g1 * d.g2 * d.g2 * m.m6
        + 4.0 * d.g0 * d.g1 * d.g1 * d.g2 * m.m4
        + 0.5 * d.g2 * d.g2 * q * (m.m6 - m.m2 * m.m4)
}

pub fn symmetric_var_h(d: &DerivBundle, m: &CentralMoments) -> f64 {
    d.h1 * d.h1 * m.m2 + 0.25 * d.h2 * d.h2 * (m.m4 - m.m2 * m.m2)
}

/// Absolute magnitude of the terms entering the var[g^2] and var[H] sums,
/// used as the scale for relative comparisons that may cancel.
pub fn term_scale(d: &DerivBundle, m: &CentralMoments) -> f64 {
    let q = d.g1 * d.g1 + d.g0 * d.g2;
    [
        4.0 * d.g0 * d.g0 * d.g1 * d.g1 * m.m2,
        q * q * (m.m4 - m.m2 * m.m2),
        d.g2.powi(4) / 16.0 * (m.m8 - m.m4 * m.m4),
        d.g1 * d.g1 * d.g2 * d.g2 * m.m6,
        4.0 * d.g0 * d.g1 * d.g1 * d.g2 * m.m4,
        0.5 * d.g2 * d.g2 * q * (m.m6 - m.m2 * m.m4),
        d.h1 * d.h1 * m.m2,
        0.25 * d.h2 * d.h2 * (m.m4 - m.m2 * m.m2),
    ]
    .iter()
    .map(|t| t.abs())
    .sum::<f64>()
    .max(f64::MIN_POSITIVE)
}
