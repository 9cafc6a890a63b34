//! Seeded Monte Carlo comparison of the two estimators.
//!
//! One *trial* simulates `n_replicates` datasets of `n` observations and
//! reports sample variances of the gradient-squared and Hessian quantities.
//! A full experiment repeats the trial `n_trials` times with independent
//! seeds and runs a one-sided t-test on the per-trial variance differences.
//!
//! Seeds form a tree: trial `k` uses `derive_seed(master_seed, k)` and
//! replicate `r` of a trial uses `derive_seed(trial_seed, r)`. Every unit of
//! work owns its stream, so results do not depend on scheduling.

mod ttest;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{g_bar, h_bar};
use crate::model::{sample_into, Model};

pub use ttest::{
    ln_gamma, one_sided_t_test, regularized_incomplete_beta, student_t_cdf, student_t_sf, TTest,
};

/// Which sample variance a trial reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceTarget {
    /// Pool all `n * N` evaluations of `g_i^2(z)` and `H_i(z)`.
    #[default]
    PerObservation,
    /// Variance of the two estimators across the `N` replicates, times `n`.
    EstimatorAcrossReplicates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub n_replicates: usize,
    pub n_trials: usize,
    pub master_seed: u64,
    pub variance_target: VarianceTarget,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n: 100,
            n_replicates: 200,
            n_trials: 50,
            master_seed: 0,
            variance_target: VarianceTarget::PerObservation,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n", self.n),
            ("n_replicates", self.n_replicates),
            ("n_trials", self.n_trials),
        ] {
            if v < 2 {
                return Err(Error::Domain(format!("{name} must be at least 2, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub variance_target: VarianceTarget,
    pub n: usize,
    pub n_replicates: usize,
    pub n_trials: usize,
    pub master_seed: u64,
    /// Sample variance for the gradient-squared quantity (mean over trials).
    pub var_e_g2: f64,
    /// Sample variance for the Hessian quantity (mean over trials).
    pub var_e_h: f64,
    pub diff: f64,
    /// `var_e_g2 / var_e_h`; absent when `var_e_h` is exactly zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_statistic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub per_trial_diffs: Vec<f64>,
    /// Seed of every trial, in trial order.
    pub seeds_used: Vec<u64>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed `index` of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// Unbiased sample variance with divisor `n - 1`.
///
/// Values are shifted by the first element before the two-pass sum, so a
/// constant sequence yields exactly zero.
pub fn sample_variance(xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let shift = xs[0];
    let mean = xs.iter().map(|x| x - shift).sum::<f64>() / n as f64;
    let ss: f64 = xs
        .iter()
        .map(|x| {
            let d = (x - shift) - mean;
            d * d
        })
        .sum();
    Ok(ss / (n - 1) as f64)
}

#[derive(Debug, Clone, Copy)]
struct TrialStats {
    var_g2: f64,
    var_h: f64,
}

fn run_trial<M: Model + ?Sized>(
    model: &M,
    cfg: &SimulationConfig,
    trial_seed: u64,
) -> Result<TrialStats> {
    let n = cfg.n;
    let theta = model.theta();
    match cfg.variance_target {
        VarianceTarget::PerObservation => {
            let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, r as u64));
                    let mut z = vec![0.0; n];
                    sample_into(model, &mut rng, &mut z);
                    let g2 = z
                        .iter()
                        .enumerate()
                        .map(|(i, &zi)| {
                            let g = model.score(i, zi, theta);
                            g * g
                        })
                        .collect();
                    let h = z
                        .iter()
                        .enumerate()
                        .map(|(i, &zi)| model.hessian(i, zi, theta))
                        .collect();
                    (g2, h)
                })
                .collect();
            let mut g2 = Vec::with_capacity(n * cfg.n_replicates);
            let mut h = Vec::with_capacity(n * cfg.n_replicates);
            for (a, b) in chunks {
                g2.extend(a);
                h.extend(b);
            }
            Ok(TrialStats {
                var_g2: sample_variance(&g2)?,
                var_h: sample_variance(&h)?,
            })
        }
        VarianceTarget::EstimatorAcrossReplicates => {
            let est: Vec<(f64, f64)> = (0..cfg.n_replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, r as u64));
                    let mut z = vec![0.0; n];
                    sample_into(model, &mut rng, &mut z);
                    Ok((g_bar(model, &z)?, h_bar(model, &z)?))
                })
                .collect::<Result<_>>()?;
            let (gs, hs): (Vec<f64>, Vec<f64>) = est.into_iter().unzip();
            let nf = n as f64;
            Ok(TrialStats {
                var_g2: nf * sample_variance(&gs)?,
                var_h: nf * sample_variance(&hs)?,
            })
        }
    }
}

fn check_shape<M: Model + ?Sized>(model: &M, cfg: &SimulationConfig) -> Result<()> {
    cfg.validate()?;
    if model.n_obs() != cfg.n {
        return Err(Error::Shape {
            expected: model.n_obs(),
            got: cfg.n,
        });
    }
    Ok(())
}

fn assemble(cfg: &SimulationConfig, trials: &[TrialStats], seeds: Vec<u64>) -> SimulationResult {
    let k = trials.len() as f64;
    let var_e_g2 = trials.iter().map(|t| t.var_g2).sum::<f64>() / k;
    let var_e_h = trials.iter().map(|t| t.var_h).sum::<f64>() / k;
    SimulationResult {
        variance_target: cfg.variance_target,
        n: cfg.n,
        n_replicates: cfg.n_replicates,
        n_trials: trials.len(),
        master_seed: cfg.master_seed,
        var_e_g2,
        var_e_h,
        diff: var_e_g2 - var_e_h,
        ratio: (var_e_h != 0.0).then(|| var_e_g2 / var_e_h),
        t_statistic: None,
        p_value: None,
        per_trial_diffs: trials.iter().map(|t| t.var_g2 - t.var_h).collect(),
        seeds_used: seeds,
    }
}

/// A single trial seeded directly with `cfg.master_seed`. `n_trials` is
/// ignored and no t-test is run.
pub fn run_simulation<M: Model + ?Sized>(
    model: &M,
    cfg: &SimulationConfig,
) -> Result<SimulationResult> {
    check_shape(model, cfg)?;
    let stats = run_trial(model, cfg, cfg.master_seed)?;
    Ok(assemble(cfg, &[stats], vec![cfg.master_seed]))
}

/// `n_trials` independent trials plus a one-sided t-test of the per-trial
/// differences `var_e_g2 - var_e_h` against zero.
///
/// The reported variances are means over trials.
pub fn run_full_experiment<M: Model + ?Sized>(
    model: &M,
    cfg: &SimulationConfig,
) -> Result<SimulationResult> {
    check_shape(model, cfg)?;
    let seeds: Vec<u64> = (0..cfg.n_trials as u64)
        .map(|k| derive_seed(cfg.master_seed, k))
        .collect();
    let trials = seeds
        .par_iter()
        .map(|&s| run_trial(model, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let mut out = assemble(cfg, &trials, seeds);
    let test = one_sided_t_test(&out.per_trial_diffs).map_err(|e| match e {
        Error::Degenerate(msg) => Error::Degenerate(format!(
            "{msg}: all {} per-trial variance differences are identical",
            cfg.n_trials
        )),
        other => other,
    })?;
    out.t_statistic = Some(test.t_statistic);
    out.p_value = Some(test.p_value);
    Ok(out)
}
