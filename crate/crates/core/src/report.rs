//! Report assembly and rendering for the command-line tool.
//!
//! Every report serializes to JSON (full precision), CSV (fixed header,
//! full precision) and a human-readable table rounded to six significant
//! figures. JSON and CSV carry [`FORMAT_VERSION`].

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{check_conditions, ConditionReport, Recommendation};
use crate::error::{Error, Result};
use crate::model::{
    sample_into, verify_derivatives, BuiltinModel, DerivativeReport, Model, ModelConfig,
};
use crate::montecarlo::{derive_seed, SimulationResult};
use crate::taylor::{taylor_aggregate, taylor_var_g2_naive, TaylorVariances};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
    Csv,
}

/// Echo of the analysed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEcho {
    #[serde(flatten)]
    pub config: ModelConfig,
    pub theta: f64,
    pub iid: bool,
    pub symmetric: bool,
}

impl ModelEcho {
    fn new(config: &ModelConfig, model: &BuiltinModel) -> Self {
        Self {
            config: config.clone(),
            theta: model.theta(),
            iid: model.is_iid(),
            symmetric: model.is_symmetric(),
        }
    }
}

/// Expand-then-square versus square-then-expand, aggregated over observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveContrast {
    pub var_g2: f64,
    pub var_g2_naive: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format_version: String,
    pub model: ModelEcho,
    pub true_fin: f64,
    pub taylor: TaylorVariances,
    pub conditions: ConditionReport,
    pub recommendation: Recommendation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naive_contrast: Option<NaiveContrast>,
}

pub fn analyze(config: &ModelConfig, with_naive: bool) -> Result<AnalysisReport> {
    let model = config.build()?;
    let taylor = taylor_aggregate(&model)?;
    let conditions = check_conditions(&model)?;
    let naive_contrast = if with_naive {
        let mut naive = 0.0;
        for i in 0..model.n_obs() {
            naive += taylor_var_g2_naive(&model.bundle(i), &model.moments(i))?;
        }
        Some(NaiveContrast {
            var_g2: taylor.aggregate.var_g2,
            var_g2_naive: naive,
            gap: taylor.aggregate.var_g2 - naive,
        })
    } else {
        None
    };
    Ok(AnalysisReport {
        format_version: FORMAT_VERSION.to_string(),
        model: ModelEcho::new(config, &model),
        true_fin: model.true_fin()?,
        recommendation: conditions.recommendation,
        taylor,
        conditions,
        naive_contrast,
    })
}

/// Simulation output together with the model it was run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub format_version: String,
    pub model: ModelEcho,
    #[serde(flatten)]
    pub result: SimulationResult,
}

impl SimulationReport {
    pub fn new(config: &ModelConfig, model: &BuiltinModel, result: SimulationResult) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            model: ModelEcho::new(config, model),
            result,
        }
    }
}

/// A Monte Carlo check that an estimate lies within `4` standard errors of a
/// target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub passed: bool,
}

impl McCheck {
    const SE_BOUND: f64 = 4.0;

    fn new(estimate: f64, target: f64, std_error: f64) -> Self {
        let slack = 1e-9 * target.abs().max(estimate.abs());
        Self {
            estimate,
            target,
            std_error,
            passed: (estimate - target).abs() <= Self::SE_BOUND * std_error + slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub format_version: String,
    pub model: ModelEcho,
    pub derivatives: Vec<DerivativeReport>,
    /// Mean of `sum_i g_i(z_i)` against zero.
    pub score_zero_mean: McCheck,
    /// Mean of `sum_i g_i(z_i)^2` against the closed-form information.
    pub info_from_score: McCheck,
    /// Mean of `-sum_i H_i(z_i)` against the closed-form information.
    pub info_from_hessian: McCheck,
    /// Paired difference of the two information estimates against zero.
    pub info_identity: McCheck,
    pub draws: usize,
    pub passed: bool,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = crate::montecarlo::sample_variance(xs).unwrap_or(0.0);
    (mean, (var / n).sqrt())
}

pub const VERIFY_TOL: f64 = 1e-6;
pub const VERIFY_DRAWS: usize = 100_000;

/// Finite-difference checks at five probe points, then Monte Carlo checks of
/// the zero-mean score and the information identity.
pub fn verify(config: &ModelConfig, seed: u64) -> Result<VerifyReport> {
    let model = config.build()?;
    verify_model(&model, config, seed)
}

pub fn verify_model(model: &BuiltinModel, config: &ModelConfig, seed: u64) -> Result<VerifyReport> {
    let mu = model.mean(0);
    let sd = model.moments(0).m2.sqrt();
    let derivatives = [-2.0, -1.0, 0.0, 0.5, 2.0]
        .iter()
        .map(|k| verify_derivatives(model, mu + k * sd, VERIFY_TOL))
        .collect::<Result<Vec<_>>>()?;

    let n = model.n_obs();
    let reps = VERIFY_DRAWS.div_ceil(n).max(2);
    let theta = model.theta();
    let mut sum_g = Vec::with_capacity(reps);
    let mut sum_g2 = Vec::with_capacity(reps);
    let mut sum_neg_h = Vec::with_capacity(reps);
    let mut z = vec![0.0; n];
    for r in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        sample_into(model, &mut rng, &mut z);
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (i, &zi) in z.iter().enumerate() {
            let g = model.score(i, zi, theta);
            a += g;
            b += g * g;
            c -= model.hessian(i, zi, theta);
        }
        sum_g.push(a);
        sum_g2.push(b);
        sum_neg_h.push(c);
    }
    let fin = model.true_fin()?;
    let (mg, seg) = mean_and_se(&sum_g);
    let (mg2, seg2) = mean_and_se(&sum_g2);
    let (mh, seh) = mean_and_se(&sum_neg_h);
    let paired: Vec<f64> = sum_g2.iter().zip(&sum_neg_h).map(|(a, b)| a - b).collect();
    let (md, sed) = mean_and_se(&paired);

    let score_zero_mean = McCheck::new(mg, 0.0, seg);
    let info_from_score = McCheck::new(mg2, fin, seg2);
    let info_from_hessian = McCheck::new(mh, fin, seh);
    let info_identity = McCheck::new(md, 0.0, sed);
    let passed = derivatives.iter().all(DerivativeReport::passed)
        && [
            score_zero_mean,
            info_from_score,
            info_from_hessian,
            info_identity,
        ]
        .iter()
        .all(|c| c.passed);
    Ok(VerifyReport {
        format_version: FORMAT_VERSION.to_string(),
        model: ModelEcho::new(config, model),
        derivatives,
        score_zero_mean,
        info_from_score,
        info_from_hessian,
        info_identity,
        draws: reps * n,
        passed,
    })
}

/// Six significant figures, switching to scientific notation for very large
/// or very small magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        format!("{x:.5e}")
    } else {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const ANALYSIS_CSV_HEADER: [&str; 14] = [
    "format_version",
    "family",
    "mu",
    "sigma2",
    "n",
    "observation",
    "var_g2",
    "var_h",
    "diff",
    "conditions_hold",
    "verdict",
    "recommendation",
    "true_fin",
    "var_g2_naive",
];

pub const SIMULATION_CSV_HEADER: [&str; 16] = [
    "format_version",
    "family",
    "mu",
    "sigma2",
    "n",
    "replicates",
    "trials",
    "seed",
    "mode",
    "var_e_g2",
    "var_e_h",
    "diff",
    "ratio",
    "t_statistic",
    "p_value",
    "per_trial_diffs",
];

fn family_str(c: &ModelConfig) -> String {
    serde_json::to_value(c.family)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl AnalysisReport {
    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Table => Ok(self.to_table()),
        }
    }

    fn to_csv(&self) -> Result<String> {
        let c = &self.model.config;
        let verdict = format!("{:?}", self.conditions.verdict);
        let rec = format!("{:?}", self.recommendation);
        let prefix = |obs: String| {
            vec![
                FORMAT_VERSION.to_string(),
                family_str(c),
                c.mu.to_string(),
                c.sigma2.to_string(),
                c.n.to_string(),
                obs,
            ]
        };
        let mut rows = vec![ANALYSIS_CSV_HEADER.iter().map(|s| s.to_string()).collect()];
        for (i, v) in self.taylor.per_obs.iter().enumerate() {
            let mut row = prefix(i.to_string());
            row.extend([
                v.var_g2.to_string(),
                v.var_h.to_string(),
                v.diff.to_string(),
                self.conditions.per_obs[i].all_hold().to_string(),
                verdict.clone(),
                rec.clone(),
                self.true_fin.to_string(),
                String::new(),
            ]);
            rows.push(row);
        }
        let a = self.taylor.aggregate;
        let mut row = prefix("aggregate".to_string());
        row.extend([
            a.var_g2.to_string(),
            a.var_h.to_string(),
            a.diff.to_string(),
            (self.conditions.verdict == crate::conditions::Verdict::SituationI).to_string(),
            verdict,
            rec,
            self.true_fin.to_string(),
            opt(self.naive_contrast.map(|n| n.var_g2_naive)),
        ]);
        rows.push(row);
        csv_string(rows)
    }

    fn to_table(&self) -> String {
        let c = &self.model.config;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model: {} (mu = {}, sigma2 = {}, n = {}, theta = {})",
            family_str(c),
            sig6(c.mu),
            sig6(c.sigma2),
            c.n,
            sig6(self.model.theta)
        );
        let _ = writeln!(s, "true FIN: {}", sig6(self.true_fin));
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:>12} {:>14} {:>14} {:>14}  conditions",
            "observation", "var[g^2]", "var[H]", "diff"
        );
        let show: Vec<usize> = if self.model.iid {
            vec![0]
        } else {
            (0..self.taylor.per_obs.len()).collect()
        };
        for i in show {
            let v = self.taylor.per_obs[i];
            let label = if self.model.iid {
                "each".to_string()
            } else {
                i.to_string()
            };
            let _ = writeln!(
                s,
                "{:>12} {:>14} {:>14} {:>14}  {}",
                label,
                sig6(v.var_g2),
                sig6(v.var_h),
                sig6(v.diff),
                if self.conditions.per_obs[i].all_hold() {
                    "hold"
                } else {
                    "fail"
                }
            );
        }
        let a = self.taylor.aggregate;
        let _ = writeln!(
            s,
            "{:>12} {:>14} {:>14} {:>14}",
            "aggregate",
            sig6(a.var_g2),
            sig6(a.var_h),
            sig6(a.diff)
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "verdict: {:?}", self.conditions.verdict);
        let _ = writeln!(
            s,
            "taylor diff: {}",
            sig6(self.conditions.taylor_diff_value)
        );
        let _ = writeln!(s, "recommendation: {:?}", self.recommendation);
        if let Some(nc) = self.naive_contrast {
            let _ = writeln!(
                s,
                "naive var[g^2]: {} (expanded-then-squared {}, gap {})",
                sig6(nc.var_g2_naive),
                sig6(nc.var_g2),
                sig6(nc.gap)
            );
        }
        for note in &self.conditions.notes {
            let _ = writeln!(s, "note: {note}");
        }
        s
    }
}

impl SimulationReport {
    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Table => Ok(self.to_table()),
        }
    }

    fn to_csv(&self) -> Result<String> {
        let c = &self.model.config;
        let r = &self.result;
        let mode = serde_json::to_value(r.variance_target)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let diffs = r
            .per_trial_diffs
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(";");
        csv_string(vec![
            SIMULATION_CSV_HEADER
                .iter()
                .map(|s| s.to_string())
                .collect(),
            vec![
                FORMAT_VERSION.to_string(),
                family_str(c),
                c.mu.to_string(),
                c.sigma2.to_string(),
                r.n.to_string(),
                r.n_replicates.to_string(),
                r.n_trials.to_string(),
                r.master_seed.to_string(),
                mode,
                r.var_e_g2.to_string(),
                r.var_e_h.to_string(),
                r.diff.to_string(),
                opt(r.ratio),
                opt(r.t_statistic),
                opt(r.p_value),
                diffs,
            ],
        ])
    }

    fn to_table(&self) -> String {
        let c = &self.model.config;
        let r = &self.result;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model: {} (mu = {}, sigma2 = {})  n = {}, replicates = {}, trials = {}, seed = {}, mode = {:?}",
            family_str(c),
            sig6(c.mu),
            sig6(c.sigma2),
            r.n,
            r.n_replicates,
            r.n_trials,
            r.master_seed,
            r.variance_target
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "var_e[g^2]           {}", sig6(r.var_e_g2));
        let _ = writeln!(s, "var_e[H]             {}", sig6(r.var_e_h));
        let _ = writeln!(s, "difference           {}", sig6(r.diff));
        if let Some(ratio) = r.ratio {
            let _ = writeln!(s, "ratio                {}", sig6(ratio));
        }
        if let Some(t) = r.t_statistic {
            let _ = writeln!(s, "t statistic          {}", sig6(t));
        }
        if let Some(p) = r.p_value {
            let _ = writeln!(s, "one-sided p-value    {}", sig6(p));
        }
        s
    }
}

impl VerifyReport {
    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Table => Ok(self.to_table()),
        }
    }

    fn checks(&self) -> Vec<(String, f64, f64, bool)> {
        let mut out = Vec::new();
        for d in &self.derivatives {
            for c in &d.checks {
                out.push((
                    format!("fd {} @ z={}", c.quantity, sig6(d.z_probe)),
                    c.max_rel_error,
                    d.tol,
                    c.passed,
                ));
            }
        }
        for (name, c) in [
            ("score zero mean", self.score_zero_mean),
            ("info from score", self.info_from_score),
            ("info from hessian", self.info_from_hessian),
            ("info identity", self.info_identity),
        ] {
            out.push((
                name.to_string(),
                c.estimate - c.target,
                McCheck::SE_BOUND * c.std_error,
                c.passed,
            ));
        }
        out
    }

    fn to_csv(&self) -> Result<String> {
        let mut rows = vec![vec![
            "format_version".to_string(),
            "check".to_string(),
            "error".to_string(),
            "bound".to_string(),
            "passed".to_string(),
        ]];
        for (name, err, bound, ok) in self.checks() {
            rows.push(vec![
                FORMAT_VERSION.to_string(),
                name,
                err.to_string(),
                bound.to_string(),
                ok.to_string(),
            ]);
        }
        csv_string(rows)
    }

    fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model: {} ({} Monte Carlo draws)",
            family_str(&self.model.config),
            self.draws
        );
        for (name, err, bound, ok) in self.checks() {
            let _ = writeln!(
                s,
                "{:<28} {:>14} {:>14}  {}",
                name,
                sig6(err),
                sig6(bound),
                if ok { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "result: {}", if self.passed { "pass" } else { "FAIL" });
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(1.6222), "1.62220");
        assert_eq!(sig6(1.5), "1.50000");
        assert_eq!(sig6(150.0), "150.000");
        assert_eq!(sig6(3.2146e-5), "3.21460e-5");
        assert_eq!(sig6(3.1188e8), "3.11880e8");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.296296296), "-0.296296");
    }

    #[test]
    fn analysis_json_round_trip() {
        let cfg =
            ModelConfig::from_json(r#"{"family":"signal_plus_noise","sigma2":1,"n":12}"#).unwrap();
        let r = analyze(&cfg, true).unwrap();
        let text = r.render(OutputFormat::Json).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.recommendation, back.conditions.recommendation);
    }

    #[test]
    fn analysis_csv_header() {
        let cfg = ModelConfig::from_json(r#"{"family":"normal_mean","sigma2":1,"n":3}"#).unwrap();
        let text = analyze(&cfg, false)
            .unwrap()
            .render(OutputFormat::Csv)
            .unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), ANALYSIS_CSV_HEADER.join(","));
        assert_eq!(lines.count(), 4);
    }
}
