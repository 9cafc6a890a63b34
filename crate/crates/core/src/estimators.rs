//! The two Fisher information estimators, both evaluated at the model's
//! parameter value and averaged over observations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `(1/n) sum_i g_i(z_i)^2`
    GradientSquared,
    /// `-(1/n) sum_i H_i(z_i)`
    NegativeHessian,
}

impl EstimatorKind {
    pub fn evaluate<M: Model + ?Sized>(self, model: &M, data: &[f64]) -> Result<f64> {
        match self {
            Self::GradientSquared => g_bar(model, data),
            Self::NegativeHessian => h_bar(model, data),
        }
    }
}

fn check_len<M: Model + ?Sized>(model: &M, data: &[f64]) -> Result<()> {
    if data.len() != model.n_obs() {
        return Err(Error::Shape {
            expected: model.n_obs(),
            got: data.len(),
        });
    }
    Ok(())
}

/// Averaged squared score. Never negative.
pub fn g_bar<M: Model + ?Sized>(model: &M, data: &[f64]) -> Result<f64> {
    check_len(model, data)?;
    let theta = model.theta();
    let sum: f64 = data
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let g = model.score(i, z, theta);
            g * g
        })
        .sum();
    Ok(sum / data.len() as f64)
}

/// Averaged negated Hessian. No sign guarantee in general.
pub fn h_bar<M: Model + ?Sized>(model: &M, data: &[f64]) -> Result<f64> {
    check_len(model, data)?;
    let theta = model.theta();
    let sum: f64 = data
        .iter()
        .enumerate()
        .map(|(i, &z)| model.hessian(i, z, theta))
        .sum();
    Ok(-sum / data.len() as f64)
}
