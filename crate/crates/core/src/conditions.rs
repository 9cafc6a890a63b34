//! Sufficient conditions for the negated-Hessian estimator to have no larger
//! asymptotic variance than the squared-score estimator.
//!
//! For a symmetric density the variance difference splits into six terms.
//! Two are always non-negative; the other four are non-negative when, for
//! every observation,
//!
//! 1. `4 g^2 g'^2 - H'^2 >= 0`
//! 2. `(g'^2 + g g'')^2 - H''^2 / 4 >= 0`
//! 3. `g g'' >= 0`
//! 4. `g'^2 + g g''` and `m6 - s2 m4` have the same sign (product `>= 0`)
//!
//! When all four hold the verdict is [`Verdict::SituationI`]. Otherwise the
//! checker evaluates the Taylor difference itself and decides on its sign.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::Model;
use crate::taylor::taylor_aggregate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SituationI,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recommendation {
    NegativeHessian,
    GradientSquared,
    Undecided,
}

/// The four condition values for one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsConditions {
    pub index: usize,
    pub c1: f64,
    pub c1_holds: bool,
    pub c2: f64,
    pub c2_holds: bool,
    pub c3: f64,
    pub c3_holds: bool,
    /// `g'^2 + g g''`
    pub c4_coeff: f64,
    /// `m6 - s2 m4`
    pub c4_moment: f64,
    pub c4_holds: bool,
}

impl ObsConditions {
    pub fn all_hold(&self) -> bool {
        self.c1_holds && self.c2_holds && self.c3_holds && self.c4_holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub per_obs: Vec<ObsConditions>,
    pub verdict: Verdict,
    /// Aggregate Taylor difference `sum_i var[g_i^2] - sum_i var[H_i]`.
    pub taylor_diff_value: f64,
    pub recommendation: Recommendation,
    pub notes: Vec<String>,
}

/// Evaluates the four conditions for every observation of `model`.
pub fn check_conditions<M: Model + ?Sized>(model: &M) -> Result<ConditionReport> {
    let mut notes = Vec::new();
    let mut per_obs = Vec::with_capacity(model.n_obs());
    let mut zero_score = false;
    for i in 0..model.n_obs() {
        let d = model.bundle(i);
        let m = model.moments(i);
        let q = d.quad_coeff();
        let c1 = 4.0 * d.g0 * d.g0 * d.g1 * d.g1 - d.h1 * d.h1;
        let c2 = q * q - 0.25 * d.h2 * d.h2;
        let c3 = d.g0 * d.g2;
        let c4_moment = m.m6 - m.m2 * m.m4;
        zero_score |= d.g0 == 0.0;
        per_obs.push(ObsConditions {
            index: i,
            c1,
            c1_holds: c1 >= 0.0,
            c2,
            c2_holds: c2 >= 0.0,
            c3,
            c3_holds: c3 >= 0.0,
            c4_coeff: q,
            c4_moment,
            c4_holds: q * c4_moment >= 0.0,
        });
    }

    let taylor_diff_value = taylor_aggregate(model)?.aggregate.diff;
    let symmetric = model.is_symmetric();
    let verdict = if symmetric && per_obs.iter().all(ObsConditions::all_hold) {
        Verdict::SituationI
    } else {
        Verdict::Indeterminate
    };
    if !symmetric {
        notes.push(
            "model is not symmetric: the sufficient conditions do not apply; \
             decision taken from the general Taylor difference"
                .to_string(),
        );
    }
    if zero_score {
        notes.push(
            "score vanishes at the observation mean, so 4 g^2 g'^2 = 0 and condition 1 \
             holds only through H' = 0"
                .to_string(),
        );
    }
    let recommendation = match verdict {
        Verdict::SituationI => Recommendation::NegativeHessian,
        Verdict::Indeterminate => {
            if let Some(first) = per_obs.iter().find(|c| !c.all_hold()) {
                if symmetric {
                    notes.push(format!(
                        "observation {} fails a sufficient condition; sign decided by the Taylor difference",
                        first.index
                    ));
                }
            }
            if taylor_diff_value > 0.0 {
                Recommendation::NegativeHessian
            } else if taylor_diff_value < 0.0 {
                Recommendation::GradientSquared
            } else {
                Recommendation::Undecided
            }
        }
    };
    Ok(ConditionReport {
        per_obs,
        verdict,
        taylor_diff_value,
        recommendation,
        notes,
    })
}
