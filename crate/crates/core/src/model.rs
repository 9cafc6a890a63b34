//! Scalar-parameter models with independent observations.
//!
//! A [`Model`] exposes, for every observation `i` (0-based), the log-density,
//! the score `g_i = d log p_i / d theta`, the Hessian `H_i = d^2 log p_i /
//! d theta^2`, the values and first two z-derivatives of both at the
//! observation mean, the central moments of `z_i`, and a sampler.
//!
//! The three builtin families are the Gaussian location model, the Gaussian
//! scale model and a signal-plus-noise model whose observation variances cycle
//! through `sigma2 + q_i` with `q_i = 0.1 * (i mod 10)` (1-based `i`).

use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{gaussian_moments, CentralMoments};
use crate::taylor::DerivBundle;

/// A scalar-parameter model over `n_obs` independent observations.
///
/// Observation indices are 0-based. All derivative bundles are evaluated at
/// `theta()` and at the observation mean `mean(i)`.
pub trait Model: Send + Sync {
    /// The parameter value at which every quantity is evaluated.
    fn theta(&self) -> f64;
    fn n_obs(&self) -> usize;
    /// All odd central moments vanish for every observation.
    fn is_symmetric(&self) -> bool;
    /// Every observation shares one distribution.
    fn is_iid(&self) -> bool;

    fn mean(&self, i: usize) -> f64;
    fn moments(&self, i: usize) -> CentralMoments;

    fn log_density(&self, i: usize, z: f64, theta: f64) -> f64;
    fn score(&self, i: usize, z: f64, theta: f64) -> f64;
    fn hessian(&self, i: usize, z: f64, theta: f64) -> f64;

    /// `(g_i(mu_i), g_i'(mu_i), g_i''(mu_i))`, derivatives taken in `z`.
    fn score_z_derivs(&self, i: usize) -> [f64; 3];
    /// `(H_i(mu_i), H_i'(mu_i), H_i''(mu_i))`, derivatives taken in `z`.
    fn hessian_z_derivs(&self, i: usize) -> [f64; 3];

    /// Draws `z_i` from the i-th observation's distribution.
    fn draw(&self, i: usize, rng: &mut dyn RngCore) -> f64;

    /// Closed-form Fisher information number `F_n(theta)`, when known.
    fn true_fin(&self) -> Result<f64> {
        Err(Error::Unsupported(
            "no closed-form Fisher information for this model".into(),
        ))
    }

    fn bundle(&self, i: usize) -> DerivBundle {
        let [g0, g1, g2] = self.score_z_derivs(i);
        let [h0, h1, h2] = self.hessian_z_derivs(i);
        DerivBundle {
            g0,
            g1,
            g2,
            h0,
            h1,
            h2,
        }
    }
}

/// The builtin model families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BuiltinFamily {
    /// `z ~ N(mu, sigma2)`, parameter `theta = mu`, `sigma2` known.
    NormalMean { mu: f64, sigma2: f64 },
    /// `z ~ N(mu, sigma2)`, parameter `theta = sigma2`, `mu` known.
    NormalVariance { mu: f64, sigma2: f64 },
    /// `z_i ~ N(0, sigma2 + q_i)`, parameter `theta = sigma2`.
    SignalPlusNoise { sigma2: f64 },
}

impl BuiltinFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NormalMean { .. } => "normal_mean",
            Self::NormalVariance { .. } => "normal_variance",
            Self::SignalPlusNoise { .. } => "signal_plus_noise",
        }
    }

    pub fn sigma2(&self) -> f64 {
        match *self {
            Self::NormalMean { sigma2, .. }
            | Self::NormalVariance { sigma2, .. }
            | Self::SignalPlusNoise { sigma2 } => sigma2,
        }
    }

    fn validate(&self) -> Result<()> {
        let sigma2 = self.sigma2();
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "sigma2 must be positive and finite, got {sigma2}"
            )));
        }
        if let Self::NormalMean { mu, .. } | Self::NormalVariance { mu, .. } = *self {
            if !mu.is_finite() {
                return Err(Error::Domain(format!("mu must be finite, got {mu}")));
            }
        }
        Ok(())
    }
}

/// Nuisance offset of the signal-plus-noise model for the 1-based index `i`:
/// `q_i = 0.1 * (i - 10 * floor(i / 10))`.
pub fn signal_noise_offset(i: usize) -> f64 {
    (i % 10) as f64 / 10.0
}

/// A builtin family instantiated over `n_obs` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinModel {
    family: BuiltinFamily,
    n_obs: usize,
    // per-observation variance, only populated for signal-plus-noise
    variances: Vec<f64>,
}

/// Builds one of the builtin families over `n_obs` observations.
pub fn build_model(family: BuiltinFamily, n_obs: usize) -> Result<BuiltinModel> {
    family.validate()?;
    if n_obs == 0 {
        return Err(Error::Domain("n_obs must be at least 1".into()));
    }
    let variances = match family {
        BuiltinFamily::SignalPlusNoise { sigma2 } => (1..=n_obs)
            .map(|i| sigma2 + signal_noise_offset(i))
            .collect(),
        _ => Vec::new(),
    };
    Ok(BuiltinModel {
        family,
        n_obs,
        variances,
    })
}

impl BuiltinModel {
    pub fn family(&self) -> BuiltinFamily {
        self.family
    }

    /// Variance of observation `i`.
    pub fn variance(&self, i: usize) -> f64 {
        match self.family {
            BuiltinFamily::SignalPlusNoise { .. } => self.variances[i],
            f => f.sigma2(),
        }
    }
}

fn gaussian_log_density(z: f64, mu: f64, var: f64) -> f64 {
    let u = z - mu;
    -0.5 * (2.0 * PI).ln() - 0.5 * var.ln() - u * u / (2.0 * var)
}

impl Model for BuiltinModel {
    fn theta(&self) -> f64 {
        match self.family {
            BuiltinFamily::NormalMean { mu, .. } => mu,
            BuiltinFamily::NormalVariance { sigma2, .. }
            | BuiltinFamily::SignalPlusNoise { sigma2 } => sigma2,
        }
    }

    fn n_obs(&self) -> usize {
        self.n_obs
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn is_iid(&self) -> bool {
        !matches!(self.family, BuiltinFamily::SignalPlusNoise { .. }) || self.n_obs == 1
    }

    fn mean(&self, _i: usize) -> f64 {
        match self.family {
            BuiltinFamily::NormalMean { mu, .. } | BuiltinFamily::NormalVariance { mu, .. } => mu,
            BuiltinFamily::SignalPlusNoise { .. } => 0.0,
        }
    }

    fn moments(&self, i: usize) -> CentralMoments {
        gaussian_moments(self.variance(i)).expect("variance validated at build time")
    }

    fn log_density(&self, i: usize, z: f64, theta: f64) -> f64 {
        match self.family {
            BuiltinFamily::NormalMean { sigma2, .. } => gaussian_log_density(z, theta, sigma2),
            BuiltinFamily::NormalVariance { mu, .. } => gaussian_log_density(z, mu, theta),
            BuiltinFamily::SignalPlusNoise { .. } => {
                gaussian_log_density(z, 0.0, theta + signal_noise_offset(i + 1))
            }
        }
    }

    fn score(&self, i: usize, z: f64, theta: f64) -> f64 {
        match self.family {
            BuiltinFamily::NormalMean { sigma2, .. } => (z - theta) / sigma2,
            BuiltinFamily::NormalVariance { mu, .. } => {
                let u = z - mu;
                -0.5 / theta + u * u / (2.0 * theta * theta)
            }
            BuiltinFamily::SignalPlusNoise { .. } => {
                let v = theta + signal_noise_offset(i + 1);
                -0.5 / v + z * z / (2.0 * v * v)
            }
        }
    }

    fn hessian(&self, i: usize, z: f64, theta: f64) -> f64 {
        match self.family {
            BuiltinFamily::NormalMean { sigma2, .. } => -1.0 / sigma2,
            BuiltinFamily::NormalVariance { mu, .. } => {
                let u = z - mu;
                0.5 / (theta * theta) - u * u / (theta * theta * theta)
            }
            BuiltinFamily::SignalPlusNoise { .. } => {
                let v = theta + signal_noise_offset(i + 1);
                0.5 / (v * v) - z * z / (v * v * v)
            }
        }
    }

    fn score_z_derivs(&self, i: usize) -> [f64; 3] {
        let s2 = self.variance(i);
        match self.family {
            BuiltinFamily::NormalMean { .. } => [0.0, 1.0 / s2, 0.0],
            _ => [-0.5 / s2, 0.0, 1.0 / (s2 * s2)],
        }
    }

    fn hessian_z_derivs(&self, i: usize) -> [f64; 3] {
        let s2 = self.variance(i);
        match self.family {
            BuiltinFamily::NormalMean { .. } => [-1.0 / s2, 0.0, 0.0],
            _ => [0.5 / (s2 * s2), 0.0, -2.0 / (s2 * s2 * s2)],
        }
    }

    fn draw(&self, i: usize, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean(i) + self.variance(i).sqrt() * z
    }

    fn true_fin(&self) -> Result<f64> {
        let n = self.n_obs as f64;
        Ok(match self.family {
            BuiltinFamily::NormalMean { sigma2, .. } => n / sigma2,
            BuiltinFamily::NormalVariance { sigma2, .. } => n / (2.0 * sigma2 * sigma2),
            BuiltinFamily::SignalPlusNoise { .. } => {
                self.variances.iter().map(|v| 0.5 / (v * v)).sum()
            }
        })
    }
}

/// Draws one dataset `z_1..z_n` from `model`.
pub fn sample<M: Model + ?Sized>(model: &M, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut out = vec![0.0; model.n_obs()];
    sample_into(model, rng, &mut out);
    out
}

/// Fills `out` (length `n_obs`) with one dataset, drawn in index order.
pub fn sample_into<M: Model + ?Sized>(model: &M, rng: &mut dyn RngCore, out: &mut [f64]) {
    for (i, z) in out.iter_mut().enumerate() {
        *z = model.draw(i, rng);
    }
}

/// Model configuration file as consumed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: FamilyName,
    #[serde(default)]
    pub mu: f64,
    pub sigma2: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    NormalMean,
    NormalVariance,
    SignalPlusNoise,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn family(&self) -> Result<BuiltinFamily> {
        let (mu, sigma2) = (self.mu, self.sigma2);
        let family = match self.family {
            FamilyName::NormalMean => BuiltinFamily::NormalMean { mu, sigma2 },
            FamilyName::NormalVariance => BuiltinFamily::NormalVariance { mu, sigma2 },
            FamilyName::SignalPlusNoise => {
                if mu != 0.0 {
                    return Err(Error::Config(
                        "signal_plus_noise has zero-mean observations; mu must be 0".into(),
                    ));
                }
                BuiltinFamily::SignalPlusNoise { sigma2 }
            }
        };
        family.validate()?;
        Ok(family)
    }

    pub fn build(&self) -> Result<BuiltinModel> {
        build_model(self.family()?, self.n)
    }
}

/// One row of a derivative verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub quantity: String,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub z_probe: f64,
    pub tol: f64,
    pub checks: Vec<DerivativeCheck>,
}

impl DerivativeReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const FIRST_STEP: f64 = 1e-5;
const SECOND_STEP: f64 = 1e-3;

fn step(rel: f64, scale: f64) -> Result<f64> {
    let h = rel * scale;
    if !(h > 0.0) || !h.is_finite() || scale + h == scale {
        return Err(Error::StepUnderflow(scale));
    }
    Ok(h)
}

fn central_first(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn central_second(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Relative error with a unit floor on the denominator, so exact analytic
/// zeros are compared absolutely.
fn rel_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / analytic.abs().max(1.0)
}

/// Checks every analytic derivative of `model` against central finite
/// differences.
///
/// In `theta`: the derivative of `log_density` must reproduce the score at
/// `z_probe`, and the derivative of the score must reproduce the Hessian. In
/// `z` at each observation mean: first and second differences of the score and
/// Hessian must reproduce the derivative bundles. First-derivative steps are
/// `1e-5` times the point's scale, second-derivative steps `1e-3` times it.
pub fn verify_derivatives<M: Model + ?Sized>(
    model: &M,
    z_probe: f64,
    tol: f64,
) -> Result<DerivativeReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let theta = model.theta();
    let theta_scale = if theta != 0.0 { theta.abs() } else { 1.0 };
    let h_theta = step(FIRST_STEP, theta_scale)?;
    let indices: Vec<usize> = if model.is_iid() {
        vec![0]
    } else {
        (0..model.n_obs()).collect()
    };

    let names = [
        "score", "hessian", "g'", "g''", "H'", "H''", "g(mu)", "H(mu)",
    ];
    let mut worst = [0.0f64; 8];
    for &i in &indices {
        let fd_score = central_first(|t| model.log_density(i, z_probe, t), theta, h_theta);
        let fd_hess = central_first(|t| model.score(i, z_probe, t), theta, h_theta);

        let mu = model.mean(i);
        let z_scale = mu.abs().max(model.moments(i).m2.sqrt());
        let h1 = step(FIRST_STEP, z_scale)?;
        let h2 = step(SECOND_STEP, z_scale)?;
        let g = |z: f64| model.score(i, z, theta);
        let hs = |z: f64| model.hessian(i, z, theta);
        let [g0, g1, g2] = model.score_z_derivs(i);
        let [k0, k1, k2] = model.hessian_z_derivs(i);

        let errs = [
            rel_error(fd_score, model.score(i, z_probe, theta)),
            rel_error(fd_hess, model.hessian(i, z_probe, theta)),
            rel_error(central_first(g, mu, h1), g1),
            rel_error(central_second(g, mu, h2), g2),
            rel_error(central_first(hs, mu, h1), k1),
            rel_error(central_second(hs, mu, h2), k2),
            rel_error(g(mu), g0),
            rel_error(hs(mu), k0),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            // NaN must fail, so it overrides any finite value
            if e.is_nan() || *w < e {
                *w = e;
            }
        }
    }
    let checks = names
        .iter()
        .zip(worst)
        .map(|(name, e)| DerivativeCheck {
            quantity: (*name).to_string(),
            max_rel_error: e,
            passed: e <= tol,
        })
        .collect();
    Ok(DerivativeReport {
        z_probe,
        tol,
        checks,
    })
}
