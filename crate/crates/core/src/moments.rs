//! Central moments of a scalar observation.
//!
//! Everything in the Taylor variance machinery is expressed through the
//! central moments `E[(z - mu)^k]` for `k = 2..=8`. Order 8 only enters via
//! `var[(z - mu)^4] = m8 - m4^2`; nothing beyond it is ever needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest central moment order carried by [`CentralMoments`].
pub const MAX_ORDER: usize = 8;

/// Central moments `m2..=m8` of one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralMoments {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
    pub m7: f64,
    pub m8: f64,
}

impl CentralMoments {
    /// Builds a moment set from `[m2, m3, ..., m8]`, checking the
    /// non-negativity and Jensen-type invariants.
    pub fn new(m: [f64; 7]) -> Result<Self> {
        let out = Self {
            m2: m[0],
            m3: m[1],
            m4: m[2],
            m5: m[3],
            m6: m[4],
            m7: m[5],
            m8: m[6],
        };
        out.validate()?;
        Ok(out)
    }

    /// Symmetric moment set: odd moments are zero.
    pub fn symmetric(m2: f64, m4: f64, m6: f64, m8: f64) -> Result<Self> {
        Self::new([m2, 0.0, m4, 0.0, m6, 0.0, m8])
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.as_array();
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("central moments must be finite".into()));
        }
        for (k, v) in [(2, self.m2), (4, self.m4), (6, self.m6), (8, self.m8)] {
            if v < 0.0 {
                return Err(Error::Domain(format!("even moment m{k} = {v} is negative")));
            }
        }
        // Relative slack so that moments computed in floating point from an
        // exact distribution are not rejected for rounding.
        let check = |lhs: f64, rhs: f64, what: &str| {
            if lhs < rhs - 1e-12 * rhs.abs().max(lhs.abs()) {
                Err(Error::Domain(format!("{what}: {lhs} < {rhs}")))
            } else {
                Ok(())
            }
        };
        check(self.m4, self.m2 * self.m2, "m4 >= m2^2")?;
        check(self.m6, self.m3 * self.m3, "m6 >= m3^2")?;
        check(self.m8, self.m4 * self.m4, "m8 >= m4^2")?;
        Ok(())
    }

    /// Moment of order `k` (2..=8).
    pub fn order(&self, k: usize) -> Result<f64> {
        match k {
            2 => Ok(self.m2),
            3 => Ok(self.m3),
            4 => Ok(self.m4),
            5 => Ok(self.m5),
            6 => Ok(self.m6),
            7 => Ok(self.m7),
            8 => Ok(self.m8),
            _ => Err(Error::Domain(format!(
                "central moment order {k} outside 2..={MAX_ORDER}"
            ))),
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.m2, self.m3, self.m4, self.m5, self.m6, self.m7, self.m8,
        ]
    }

    pub fn is_symmetric(&self) -> bool {
        self.m3 == 0.0 && self.m5 == 0.0 && self.m7 == 0.0
    }

    /// `var[(z - mu)^k] = m_{2k} - m_k^2` for `k` in 2..=4.
    pub fn var_of_centered_power(&self, k: usize) -> Result<f64> {
        if !(2..=4).contains(&k) {
            return Err(Error::Domain(format!(
                "var[(z - mu)^k] is available for k in 2..=4, got {k}"
            )));
        }
        let mk = self.order(k)?;
        Ok(self.order(2 * k)? - mk * mk)
    }
}

/// `a!! = a (a - 2) (a - 4) ...`, with `0!! = 1!! = 1`.
pub fn double_factorial(a: u64) -> u64 {
    (1..=a).rev().step_by(2).product()
}

/// Closed-form central moments of `N(mu, sigma2)`:
/// `m_{2k} = (2k - 1)!! sigma2^k`, odd moments zero.
pub fn gaussian_moments(sigma2: f64) -> Result<CentralMoments> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!(
            "variance must be positive and finite, got {sigma2}"
        )));
    }
    let even = |k: i32| double_factorial(2 * k as u64 - 1) as f64 * sigma2.powi(k);
    Ok(CentralMoments {
        m2: even(1),
        m3: 0.0,
        m4: even(2),
        m5: 0.0,
        m6: even(3),
        m7: 0.0,
        m8: even(4),
    })
}

/// Sample central moments around the sample mean.
///
/// `m2` uses the `1/(n-1)` divisor; orders 3 and up use `1/n`. Intended as a
/// verification oracle for the closed forms.
pub fn empirical_moments(samples: &[f64]) -> Result<CentralMoments> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut sums = [0.0f64; 7];
    for &x in samples {
        let d = x - mean;
        let mut p = d;
        for s in sums.iter_mut() {
            p *= d;
            *s += p;
        }
    }
    let nf = n as f64;
    Ok(CentralMoments {
        m2: sums[0] / (nf - 1.0),
        m3: sums[1] / nf,
        m4: sums[2] / nf,
        m5: sums[3] / nf,
        m6: sums[4] / nf,
        m7: sums[5] / nf,
        m8: sums[6] / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid-rule integral of `(z - mu)^k` against the N(mu, sigma2)
    /// density over +-12 standard deviations.
    fn integrate_gaussian_moment(sigma2: f64, k: i32) -> f64 {
        let sd = sigma2.sqrt();
        let steps = 200_000;
        let lo = -12.0 * sd;
        let h = 24.0 * sd / steps as f64;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma2).sqrt();
        let f = |u: f64| u.powi(k) * norm * (-u * u / (2.0 * sigma2)).exp();
        let mut acc = 0.5 * (f(lo) + f(-lo));
        for j in 1..steps {
            acc += f(lo + j as f64 * h);
        }
        acc * h
    }

    #[test]
    fn double_factorial_values() {
        assert_eq!(double_factorial(0), 1);
        assert_eq!(double_factorial(1), 1);
        assert_eq!(double_factorial(5), 15);
        assert_eq!(double_factorial(7), 105);
        assert_eq!(double_factorial(8), 384);
    }

    #[test]
    fn gaussian_unit_variance() {
        let m = gaussian_moments(1.0).unwrap();
        assert_eq!(m.m2, 1.0);
        assert_eq!(m.m4, 3.0);
        assert_eq!(m.m6, 15.0);
        assert_eq!(m.m8, 105.0);
        assert_eq!((m.m3, m.m5, m.m7), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gaussian_matches_quadrature() {
        // frozen from the quadrature oracle: sigma2 = 4 gives m4 = 48, m6 = 960
        assert!((integrate_gaussian_moment(4.0, 4) - 48.0).abs() < 1e-8);
        assert!((integrate_gaussian_moment(4.0, 6) - 960.0).abs() < 1e-6);
        let m = gaussian_moments(4.0).unwrap();
        assert_eq!(m.m4, 48.0);
        assert_eq!(m.m6, 960.0);
        for k in 2..=8 {
            let q = integrate_gaussian_moment(2.5, k as i32);
            let c = gaussian_moments(2.5).unwrap().order(k).unwrap();
            assert!(
                (q - c).abs() <= 1e-9 * c.abs().max(1.0),
                "k={k}: {q} vs {c}"
            );
        }
    }

    #[test]
    fn gaussian_rejects_bad_variance() {
        assert!(matches!(gaussian_moments(0.0), Err(Error::Domain(_))));
        assert!(matches!(gaussian_moments(-1.0), Err(Error::Domain(_))));
        assert!(gaussian_moments(f64::NAN).is_err());
    }

    #[test]
    fn var_of_powers() {
        let m = gaussian_moments(1.0).unwrap();
        assert_eq!(m.var_of_centered_power(2).unwrap(), 2.0);
        assert_eq!(m.var_of_centered_power(3).unwrap(), 15.0);
        assert_eq!(m.var_of_centered_power(4).unwrap(), 96.0);
        assert!(m.var_of_centered_power(1).is_err());
        assert!(m.var_of_centered_power(5).is_err());
    }

    #[test]
    fn symmetric_third_power_is_m6() {
        let m = CentralMoments::symmetric(2.0, 10.0, 70.0, 600.0).unwrap();
        assert_eq!(m.var_of_centered_power(3).unwrap(), 70.0);
    }

    #[test]
    fn order_cap() {
        let m = gaussian_moments(1.0).unwrap();
        assert!(m.order(9).is_err());
        assert!(m.order(1).is_err());
    }

    #[test]
    fn invariants_rejected() {
        assert!(CentralMoments::symmetric(-1.0, 3.0, 15.0, 105.0).is_err());
        assert!(CentralMoments::symmetric(2.0, 3.0, 15.0, 105.0).is_err()); // m4 < m2^2
        assert!(CentralMoments::symmetric(1.0, 3.0, 15.0, 8.0).is_err()); // m8 < m4^2
        assert!(CentralMoments::new([1.0, 5.0, 3.0, 0.0, 15.0, 0.0, 105.0]).is_err());
        // m6 < m3^2
    }

    #[test]
    fn empirical_constant_and_two_point() {
        let m = empirical_moments(&[3.5; 10]).unwrap();
        assert!(m.as_array().iter().all(|&v| v == 0.0));
        let m = empirical_moments(&[-1.0, 1.0]).unwrap();
        assert_eq!(m.m2, 2.0);
        assert_eq!(m.m4, 1.0);
        assert!(matches!(
            empirical_moments(&[1.0]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }
}
