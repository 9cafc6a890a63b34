//! One-sample one-sided t-test and the Student t tail it needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    const MAX_ITER: usize = 10_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
///
/// Computed directly from the incomplete beta function on the tail side, so
/// very small p-values keep their relative accuracy.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Student t CDF.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    1.0 - student_t_sf(t, df)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub mean: f64,
    pub std_dev: f64,
    pub t_statistic: f64,
    pub df: f64,
    /// `P(T >= t)` under `H0: mean <= 0`.
    pub p_value: f64,
}

/// One-sample one-sided t-test of `H0: mean <= 0` against `H1: mean > 0`.
pub fn one_sided_t_test(diffs: &[f64]) -> Result<TTest> {
    let m = diffs.len();
    if m < 2 {
        return Err(Error::InsufficientData { needed: 2, got: m });
    }
    let mean = diffs.iter().sum::<f64>() / m as f64;
    let var = super::sample_variance(diffs)?;
    if var == 0.0 {
        return Err(Error::Degenerate(
            "t-test on values with zero sample variance".into(),
        ));
    }
    let std_dev = var.sqrt();
    let t_statistic = mean / (std_dev / (m as f64).sqrt());
    let df = (m - 1) as f64;
    Ok(TTest {
        mean,
        std_dev,
        t_statistic,
        df,
        p_value: student_t_sf(t_statistic, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for k in 1..20 {
            assert!((ln_gamma(k as f64) - fact.ln()).abs() < 1e-12, "k={k}");
            fact *= k as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn beta_edges_and_symmetry() {
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 1.0), 1.0);
        // I_x(1, 1) = x
        assert!((regularized_incomplete_beta(1.0, 1.0, 0.3) - 0.3).abs() < 1e-14);
        // I_x(a, b) = 1 - I_{1-x}(b, a)
        let l = regularized_incomplete_beta(2.5, 4.0, 0.35);
        let r = 1.0 - regularized_incomplete_beta(4.0, 2.5, 0.65);
        assert!((l - r).abs() < 1e-13);
    }

    #[test]
    fn t_tail_known_values() {
        assert_eq!(student_t_sf(0.0, 7.0), 0.5);
        // df = 1 is Cauchy: P(T > 1) = 1/4
        assert!((student_t_sf(1.0, 1.0) - 0.25).abs() < 1e-13);
        // df = 2 closed form: P(T > t) = (1 - t / sqrt(2 + t^2)) / 2
        for t in [-3.0, -0.4, 0.9, 2.0, 10.0] {
            let exact = 0.5 * (1.0 - t / (2.0f64 + t * t).sqrt());
            assert!((student_t_sf(t, 2.0) - exact).abs() < 1e-13, "t={t}");
        }
        assert!((student_t_cdf(1.0, 1.0) - 0.75).abs() < 1e-13);
    }

    #[test]
    fn t_test_examples() {
        let mut diffs = vec![1.0; 50];
        diffs[17] = 1.0001;
        let r = one_sided_t_test(&diffs).unwrap();
        assert!(r.p_value < 1e-10);

        let xs = [0.3, 1.2, 2.5, 0.01, 4.0];
        let sym: Vec<f64> = xs.iter().flat_map(|&x| [x, -x]).collect();
        let r = one_sided_t_test(&sym).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 0.5);
    }

    #[test]
    fn t_test_degenerate() {
        assert!(matches!(
            one_sided_t_test(&[2.0; 10]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            one_sided_t_test(&[2.0]),
            Err(Error::InsufficientData { .. })
        ));
    }
}
