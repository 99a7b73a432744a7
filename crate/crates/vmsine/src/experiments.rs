//! Monte Carlo benchmarking of the estimators: simulate, contaminate, fit,
//! and score parameter recovery.
//!
//! Each trial derives its own seed by counter, so the trial table is
//! bit-identical across runs and thread counts. MLE0 is the oracle baseline:
//! plain maximum likelihood on the data before contamination.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{mle_fit, wle_fit, FitResult, WleConfig};
use crate::model::SineModelParams;
use crate::sampling::{contaminate, sample_sine_model, ContaminationSpec, GibbsConfig};
use crate::seeding::derive_seed;
use crate::torus::{Angle, TorusSample};

/// Which estimator produced a trial record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorTag {
    Mle,
    Mle0,
    Wle,
}

impl EstimatorTag {
    pub const ALL: [EstimatorTag; 3] = [EstimatorTag::Mle, EstimatorTag::Mle0, EstimatorTag::Wle];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorTag::Mle => "MLE",
            EstimatorTag::Mle0 => "MLE0",
            EstimatorTag::Wle => "WLE",
        }
    }
}

impl std::fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A data-generating process: true parameters, genuine sample size, and an
/// optional contamination recipe. Block structure, when given, must assemble
/// to the stated true parameters.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub true_params: SineModelParams,
    pub n: usize,
    pub contamination: Option<ContaminationSpec>,
    pub blocks: Option<Vec<SineModelParams>>,
}

impl ScenarioSpec {
    pub fn new(
        true_params: SineModelParams,
        n: usize,
        contamination: Option<ContaminationSpec>,
    ) -> Result<Self> {
        let spec = Self {
            true_params,
            n,
            contamination,
            blocks: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Assembles the true parameters from independent blocks laid out over
    /// consecutive dimensions.
    pub fn from_blocks(
        blocks: Vec<SineModelParams>,
        n: usize,
        contamination: Option<ContaminationSpec>,
    ) -> Result<Self> {
        let true_params = SineModelParams::block_diagonal(&blocks)?;
        let spec = Self {
            true_params,
            n,
            contamination,
            blocks: Some(blocks),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn p(&self) -> usize {
        self.true_params.dim()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig(
                "scenario needs a positive sample size".into(),
            ));
        }
        if let Some(blocks) = &self.blocks {
            let total: usize = blocks.iter().map(|b| b.dim()).sum();
            if total != self.p() {
                return Err(Error::InvalidConfig(format!(
                    "block dimensions sum to {total}, expected {}",
                    self.p()
                )));
            }
        }
        if let Some(c) = &self.contamination {
            c.validate(self.p())?;
        }
        Ok(())
    }
}

/// Parameter-recovery metrics of one estimator in one trial. Failed fits
/// carry NaN metrics and are excluded from summaries.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub estimator: EstimatorTag,
    pub as_mu: f64,
    pub rmse_kappa: f64,
    pub rmse_lambda: f64,
    pub failed: bool,
}

/// Mean angle separation (1/p) sum_j (1 - cos(mu_hat_j - mu_true_j)), in [0, 2].
pub fn angle_separation(mu_hat: &[Angle], mu_true: &[Angle]) -> f64 {
    assert_eq!(mu_hat.len(), mu_true.len(), "location vectors differ in length");
    let p = mu_hat.len() as f64;
    mu_hat
        .iter()
        .zip(mu_true)
        .map(|(a, b)| 1.0 - (a.radians() - b.radians()).cos())
        .sum::<f64>()
        / p
}

/// Euclidean norm of the estimation error vector.
pub fn rmse(v_hat: &[f64], v_true: &[f64]) -> f64 {
    assert_eq!(v_hat.len(), v_true.len(), "vectors differ in length");
    v_hat
        .iter()
        .zip(v_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn metrics_of(fit: &FitResult, truth: &SineModelParams) -> (f64, f64, f64) {
    (
        angle_separation(fit.params.mu(), truth.mu()),
        rmse(fit.params.kappa(), truth.kappa()),
        rmse(
            &fit.params.lambda_upper_triangle(),
            &truth.lambda_upper_triangle(),
        ),
    )
}

fn record(
    trial: usize,
    seed: u64,
    estimator: EstimatorTag,
    outcome: &Result<FitResult>,
    truth: &SineModelParams,
) -> TrialRecord {
    match outcome {
        Ok(fit) => {
            let (as_mu, rmse_kappa, rmse_lambda) = metrics_of(fit, truth);
            TrialRecord {
                trial,
                seed,
                estimator,
                as_mu,
                rmse_kappa,
                rmse_lambda,
                failed: false,
            }
        }
        Err(_) => TrialRecord {
            trial,
            seed,
            estimator,
            as_mu: f64::NAN,
            rmse_kappa: f64::NAN,
            rmse_lambda: f64::NAN,
            failed: true,
        },
    }
}

/// Runs `n_trials` independent trials: simulate genuine data, fit MLE0 on it,
/// contaminate, fit MLE and WLE on the contaminated data. Three records per
/// trial, in trial order.
pub fn run_trials(
    scenario: &ScenarioSpec,
    config: &WleConfig,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    scenario.validate()?;
    let truth = &scenario.true_params;
    let records: Vec<Vec<TrialRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = derive_seed(seed, trial as u64);
            let gibbs = GibbsConfig::with_seed(derive_seed(trial_seed, 0));
            let genuine = sample_sine_model(truth, scenario.n, &gibbs)
                .expect("validated scenario produces a sample");
            let mle0 = mle_fit(&genuine);
            let data: TorusSample = match &scenario.contamination {
                Some(spec) => {
                    let (contaminated, _mask) =
                        contaminate(&genuine, spec, truth.mu(), derive_seed(trial_seed, 1))
                            .expect("validated contamination spec");
                    contaminated
                }
                None => genuine.clone(),
            };
            let mle = mle_fit(&data);
            let wle_config = WleConfig {
                seed: derive_seed(trial_seed, 2),
                ..config.clone()
            };
            let wle = wle_fit(&data, &wle_config);
            vec![
                record(trial, trial_seed, EstimatorTag::Mle, &mle, truth),
                record(trial, trial_seed, EstimatorTag::Mle0, &mle0, truth),
                record(trial, trial_seed, EstimatorTag::Wle, &wle, truth),
            ]
        })
        .collect();
    Ok(records.into_iter().flatten().collect())
}

/// Five-number summary of one metric for one estimator.
#[derive(Debug, Clone)]
pub struct MetricSummary {
    pub estimator: EstimatorTag,
    pub metric: &'static str,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub n_used: usize,
    pub n_failed: usize,
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub const METRIC_NAMES: [&str; 3] = ["as_mu", "rmse_kappa", "rmse_lambda"];

/// Per-estimator quartiles of each metric; failed records are counted and
/// excluded. Empty input yields an empty summary.
pub fn summarize(records: &[TrialRecord]) -> Vec<MetricSummary> {
    let mut out = Vec::new();
    for estimator in EstimatorTag::ALL {
        let mine: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.estimator == estimator)
            .collect();
        if mine.is_empty() {
            continue;
        }
        let n_failed = mine.iter().filter(|r| r.failed).count();
        for (idx, metric) in METRIC_NAMES.iter().enumerate() {
            let mut values: Vec<f64> = mine
                .iter()
                .filter(|r| !r.failed)
                .map(|r| match idx {
                    0 => r.as_mu,
                    1 => r.rmse_kappa,
                    _ => r.rmse_lambda,
                })
                .collect();
            if values.is_empty() {
                continue;
            }
            values.sort_by(f64::total_cmp);
            out.push(MetricSummary {
                estimator,
                metric,
                min: values[0],
                q1: quantile(&values, 0.25),
                median: quantile(&values, 0.5),
                q3: quantile(&values, 0.75),
                max: values[values.len() - 1],
                n_used: values.len(),
                n_failed,
            });
        }
    }
    out
}

/// Writes the trial table as CSV: trial, estimator, AS_mu, rmse_kappa,
/// rmse_lambda, failed. Failed rows carry empty metric cells.
pub fn write_trial_csv<W: std::io::Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trial", "estimator", "AS_mu", "rmse_kappa", "rmse_lambda", "failed"])
        .map_err(|e| Error::Parse(e.to_string()))?;
    for r in records {
        let fmt = |v: f64| {
            if v.is_nan() {
                String::new()
            } else {
                format!("{v}")
            }
        };
        w.write_record([
            r.trial.to_string(),
            r.estimator.to_string(),
            fmt(r.as_mu),
            fmt(r.rmse_kappa),
            fmt(r.rmse_lambda),
            if r.failed { "1" } else { "0" }.to_string(),
        ])
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
