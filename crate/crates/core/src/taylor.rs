//! Second-order Taylor approximations of `var[g^2(z)]` and `var[H(z)]`.
//!
//! Both the score `g` and the Hessian `H` are expanded to second order in `z`
//! around the observation mean. The score expansion is squared before taking
//! the variance, so `var[g^2]` needs central moments up to order 8. The
//! resulting formulas are exact whenever `g` and `H` are polynomials of degree
//! at most two in `z`, which covers all builtin families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::moments::CentralMoments;

/// Score and Hessian values and their first two z-derivatives at the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DerivBundle {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
}

impl DerivBundle {
    fn check(&self) -> Result<()> {
        let all = [self.g0, self.g1, self.g2, self.h0, self.h1, self.h2];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "derivative bundle is not finite: {self:?}"
            )))
        }
    }

    /// `g'^2 + g g''`, the coefficient of `(z - mu)^2` in the expansion of `g^2`.
    pub fn quad_coeff(&self) -> f64 {
        self.g1 * self.g1 + self.g0 * self.g2
    }
}

/// Approximate variances for one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsVariances {
    pub var_g2: f64,
    pub var_h: f64,
    pub diff: f64,
}

/// Per-observation and aggregated approximate variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorVariances {
    pub per_obs: Vec<ObsVariances>,
    /// `sum_i var[g_i^2]`, `sum_i var[H_i]` and their difference.
    pub aggregate: ObsVariances,
}

impl TaylorVariances {
    /// Finite-n analogues of the limiting variances: aggregate divided by `n`.
    pub fn per_observation_average(&self) -> ObsVariances {
        let n = self.per_obs.len() as f64;
        ObsVariances {
            var_g2: self.aggregate.var_g2 / n,
            var_h: self.aggregate.var_h / n,
            diff: self.aggregate.diff / n,
        }
    }
}

fn prepared(d: &DerivBundle, m: &CentralMoments) -> Result<()> {
    d.check()?;
    m.validate()
}

/// The ten terms of the general `var[g^2(z)]` expansion, in line order.
pub fn var_g2_terms(d: &DerivBundle, m: &CentralMoments) -> Result<[f64; 10]> {
    prepared(d, m)?;
    let (g, g1, g2) = (d.g0, d.g1, d.g2);
    let q = d.quad_coeff();
    let s2 = m.m2;
    Ok([
        4.0 * g * g * g1 * g1 * s2,
        q * q * m.var_of_centered_power(2)?,
        g2.powi(4) / 16.0 * m.var_of_centered_power(4)?,
        g1 * g1 * g2 * g2 * m.var_of_centered_power(3)?,
        4.0 * g * g1 * q * m.m3,
        g * g1 * g2 * g2 * m.m5,
        4.0 * g * g1 * g1 * g2 * m.m4,
        0.5 * g2 * g2 * q * (m.m6 - s2 * m.m4),
        2.0 * g1 * g2 * q * (m.m5 - s2 * m.m3),
        0.5 * g1 * g2.powi(3) * (m.m7 - m.m4 * m.m3),
    ])
}

/// Approximate `var[g^2(z)]` (general, asymmetric form).
pub fn taylor_var_g2(d: &DerivBundle, m: &CentralMoments) -> Result<f64> {
    Ok(var_g2_terms(d, m)?.iter().sum())
}

/// Approximate `var[H(z)]`:
/// `H'^2 s2 + H''^2 var[(z-mu)^2] / 4 + H' H'' m3`.
pub fn taylor_var_h(d: &DerivBundle, m: &CentralMoments) -> Result<f64> {
    prepared(d, m)?;
    Ok(d.h1 * d.h1 * m.m2 + 0.25 * d.h2 * d.h2 * m.var_of_centered_power(2)? + d.h1 * d.h2 * m.m3)
}

/// The six terms of `var[g^2] - var[H]` for a symmetric density.
///
/// Terms three and four are squares times variances and so never negative.
pub fn symmetric_diff_terms(d: &DerivBundle, m: &CentralMoments) -> Result<[f64; 6]> {
    prepared(d, m)?;
    let (g, g1, g2) = (d.g0, d.g1, d.g2);
    let q = d.quad_coeff();
    let s2 = m.m2;
    Ok([
        (4.0 * g * g * g1 * g1 - d.h1 * d.h1) * s2,
        (q * q - 0.25 * d.h2 * d.h2) * m.var_of_centered_power(2)?,
        g2.powi(4) / 16.0 * m.var_of_centered_power(4)?,
        g1 * g1 * g2 * g2 * m.var_of_centered_power(3)?,
        4.0 * g * g1 * g1 * g2 * m.m4,
        0.5 * g2 * g2 * q * (m.m6 - s2 * m.m4),
    ])
}

/// Approximate `var[g^2(z)] - var[H(z)]`.
///
/// With `symmetric` set, the moments must have vanishing odd orders and the
/// six-term symmetric form is used; it is checked against the plain
/// subtraction of the two general expansions.
pub fn taylor_diff(d: &DerivBundle, m: &CentralMoments, symmetric: bool) -> Result<f64> {
    let general = taylor_var_g2(d, m)? - taylor_var_h(d, m)?;
    if !symmetric {
        return Ok(general);
    }
    if !m.is_symmetric() {
        return Err(Error::Domain(
            "symmetric form requested but odd central moments are nonzero".into(),
        ));
    }
    let sym: f64 = symmetric_diff_terms(d, m)?.iter().sum();
    let scale = var_g2_terms(d, m)?
        .iter()
        .map(|t| t.abs())
        .sum::<f64>()
        .max(taylor_var_h(d, m)?.abs());
    debug_assert!(
        (sym - general).abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE),
        "symmetric form {sym} disagrees with subtraction {general}"
    );
    Ok(sym)
}

/// Per-observation approximate variances and their sums over the model.
pub fn taylor_aggregate<M: Model + ?Sized>(model: &M) -> Result<TaylorVariances> {
    let symmetric = model.is_symmetric();
    let one = |i: usize| -> Result<ObsVariances> {
        let d = model.bundle(i);
        let m = model.moments(i);
        let var_g2 = taylor_var_g2(&d, &m)?;
        let var_h = taylor_var_h(&d, &m)?;
        let diff = if symmetric {
            taylor_diff(&d, &m, true)?
        } else {
            var_g2 - var_h
        };
        Ok(ObsVariances {
            var_g2,
            var_h,
            diff,
        })
    };
    let n = model.n_obs();
    let per_obs: Vec<ObsVariances> = if model.is_iid() {
        let v = one(0)?;
        vec![v; n]
    } else {
        (0..n).map(one).collect::<Result<_>>()?
    };
    let aggregate = if model.is_iid() {
        let nf = n as f64;
        let v = per_obs[0];
        ObsVariances {
            var_g2: nf * v.var_g2,
            var_h: nf * v.var_h,
            diff: nf * v.diff,
        }
    } else {
        per_obs.iter().fold(
            ObsVariances {
                var_g2: 0.0,
                var_h: 0.0,
                diff: 0.0,
            },
            |acc, v| ObsVariances {
                var_g2: acc.var_g2 + v.var_g2,
                var_h: acc.var_h + v.var_h,
                diff: acc.diff + v.diff,
            },
        )
    };
    Ok(TaylorVariances { per_obs, aggregate })
}

/// Diagnostic only: variance of the second-order expansion of `g^2` taken
/// directly, rather than expanding `g` and squaring.
///
/// Uses `(g^2)' = 2 g g'` and `(g^2)'' = 2 (g'^2 + g g'')` in the three-term
/// form of the Hessian formula. Drops the quartic part of the squared
/// expansion and so underestimates `var[g^2]` whenever `g'' != 0`. Not used by
/// the condition checker or any recommendation.
pub fn taylor_var_g2_naive(d: &DerivBundle, m: &CentralMoments) -> Result<f64> {
    prepared(d, m)?;
    let first = 2.0 * d.g0 * d.g1;
    let second = 2.0 * d.quad_coeff();
    Ok(first * first * m.m2
        + 0.25 * second * second * m.var_of_centered_power(2)?
        + first * second * m.m3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::gaussian_moments;

    fn nv_bundle(s2: f64) -> DerivBundle {
        DerivBundle {
            g0: -0.5 / s2,
            g1: 0.0,
            g2: 1.0 / (s2 * s2),
            h0: 0.5 / (s2 * s2),
            h1: 0.0,
            h2: -2.0 / (s2 * s2 * s2),
        }
    }

    #[test]
    fn normal_variance_unit() {
        let m = gaussian_moments(1.0).unwrap();
        let d = nv_bundle(1.0);
        // 1/2 + 6 - 3 from the symmetric six-term form
        assert_eq!(taylor_var_g2(&d, &m).unwrap(), 3.5);
        assert_eq!(taylor_var_h(&d, &m).unwrap(), 2.0);
        assert_eq!(taylor_diff(&d, &m, true).unwrap(), 1.5);
        assert_eq!(taylor_diff(&d, &m, false).unwrap(), 1.5);
    }

    #[test]
    fn normal_variance_other_scales() {
        // 3 / (2 sigma^8) with sigma^8 = sigma2^4
        for (s2, expect) in [(2.0, 0.09375), (4.0, 0.005859375)] {
            let m = gaussian_moments(s2).unwrap();
            let v = taylor_diff(&nv_bundle(s2), &m, true).unwrap();
            assert!((v - expect).abs() <= 1e-12 * expect, "sigma2={s2}: {v}");
        }
    }

    #[test]
    fn zero_bundle() {
        let m = gaussian_moments(3.0).unwrap();
        let d = DerivBundle::default();
        assert_eq!(taylor_var_g2(&d, &m).unwrap(), 0.0);
        assert_eq!(taylor_var_g2_naive(&d, &m).unwrap(), 0.0);
    }

    #[test]
    fn normal_mean_unit() {
        let m = gaussian_moments(1.0).unwrap();
        let d = DerivBundle {
            g0: 0.0,
            g1: 1.0,
            g2: 0.0,
            h0: -1.0,
            h1: 0.0,
            h2: 0.0,
        };
        assert_eq!(taylor_var_g2(&d, &m).unwrap(), 2.0);
        assert_eq!(taylor_var_h(&d, &m).unwrap(), 0.0);
        assert_eq!(taylor_var_g2_naive(&d, &m).unwrap(), 2.0);
    }

    #[test]
    fn var_h_first_term_only() {
        let m = CentralMoments::symmetric(7.0, 147.0, 5145.0, 252105.0).unwrap();
        let d = DerivBundle {
            h1: 1.0,
            ..Default::default()
        };
        assert_eq!(taylor_var_h(&d, &m).unwrap(), 7.0);
    }

    #[test]
    fn naive_underestimates() {
        let m = gaussian_moments(1.0).unwrap();
        assert_eq!(taylor_var_g2_naive(&nv_bundle(1.0), &m).unwrap(), 0.5);
    }

    #[test]
    fn asymmetric_needs_general_path() {
        let m = CentralMoments::new([1.0, 0.5, 3.5, 2.0, 20.0, 10.0, 200.0]).unwrap();
        let d = nv_bundle(1.0);
        assert!(taylor_diff(&d, &m, true).is_err());
        let general = taylor_diff(&d, &m, false).unwrap();
        let expect = taylor_var_g2(&d, &m).unwrap() - taylor_var_h(&d, &m).unwrap();
        assert_eq!(general, expect);
    }

    #[test]
    fn non_finite_bundle_rejected() {
        let m = gaussian_moments(1.0).unwrap();
        let d = DerivBundle {
            g0: f64::NAN,
            ..Default::default()
        };
        assert!(taylor_var_g2(&d, &m).is_err());
        assert!(taylor_var_h(&d, &m).is_err());
    }
}
