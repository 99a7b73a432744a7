//! Pearson residuals, residual adjustment functions, and the unit-capped
//! weight map.
//!
//! A residual adjustment function A must satisfy A(0) = 0, A'(0) = 1, and be
//! increasing on the residual range; the induced weight is clipped to [0, 1]
//! and held at exactly 1 on [-1, 0], so inliers are never down-weighted.
//! Construction verifies the axioms numerically, so swapping in a different
//! member of a family is safe.

use crate::error::{Error, Result};
use crate::kde::TorusKde;
use crate::model::{log_density_batch, NormalizationStrategy, SineModelParams};
use crate::torus::TorusSample;

/// Cap on log density ratios before exponentiation; keeps extreme outlier
/// residuals finite so every weight formula stays NaN-free.
const LOG_RATIO_CAP: f64 = 700.0;

/// Residual adjustment function families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RafSpec {
    /// Symmetric chi-squared divergence: A(d) = d(d+4)/(d+2)^2.
    Schi,
    /// Generalized Kullback-Leibler with tau in (0, 1]: A(d) = ln(tau d + 1)/tau.
    Gkl { tau: f64 },
    /// Power divergence with exponent > 0: A(d) = ((d+1)^lambda - 1)/lambda.
    Pwd { lambda: f64 },
}

impl RafSpec {
    pub const DEFAULT_GKL_TAU: f64 = 1.0;
    pub const DEFAULT_PWD_EXPONENT: f64 = 0.5;

    pub fn schi() -> Result<Self> {
        let spec = Self::Schi;
        spec.verify_axioms()?;
        Ok(spec)
    }

    pub fn gkl(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "GKL tau must be in (0, 1], got {tau}"
            )));
        }
        let spec = Self::Gkl { tau };
        spec.verify_axioms()?;
        Ok(spec)
    }

    pub fn pwd(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "power divergence exponent must be > 0, got {lambda}"
            )));
        }
        let spec = Self::Pwd { lambda };
        spec.verify_axioms()?;
        Ok(spec)
    }

    /// A(delta) for delta >= -1.
    pub fn raf_value(&self, delta: f64) -> f64 {
        debug_assert!(delta >= -1.0 - 1e-12);
        match *self {
            RafSpec::Schi => {
                // d(d+4)/(d+2)^2 rewritten to stay finite for huge d.
                let t = delta + 2.0;
                1.0 - 4.0 / (t * t)
            }
            RafSpec::Gkl { tau } => {
                let arg = tau * delta + 1.0;
                if arg <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    arg.ln() / tau
                }
            }
            RafSpec::Pwd { lambda } => ((delta + 1.0).powf(lambda) - 1.0) / lambda,
        }
    }

    /// The modified weight: exactly 1 on [-1, 0], otherwise
    /// min(1, [A(delta) + 1]^+ / (delta + 1)).
    pub fn weight(&self, delta: f64) -> f64 {
        debug_assert!(delta >= -1.0 - 1e-12);
        if delta <= 0.0 {
            return 1.0;
        }
        let ratio = (self.raf_value(delta) + 1.0).max(0.0) / (delta + 1.0);
        if ratio.is_nan() {
            // Only reachable through inf/inf in the far tail; the cap in
            // residual computation avoids it, but stay safe.
            return 0.0;
        }
        ratio.min(1.0)
    }

    /// Numeric check of A(0) = 0, A'(0) = 1, and monotonicity.
    fn verify_axioms(&self) -> Result<()> {
        if self.raf_value(0.0) != 0.0 {
            return Err(Error::InvalidConfig(format!(
                "RAF violates A(0) = 0: {self:?}"
            )));
        }
        let h = 1e-6;
        let slope = (self.raf_value(h) - self.raf_value(-h)) / (2.0 * h);
        if (slope - 1.0).abs() > 1e-4 {
            return Err(Error::InvalidConfig(format!(
                "RAF violates A'(0) = 1, slope {slope}: {self:?}"
            )));
        }
        let mut prev = self.raf_value(-0.99);
        for i in 1..=60 {
            // Geometric grid from near -1 out to large residuals.
            let delta = -0.99 + (i as f64 / 60.0).powi(2) * 101.0;
            let v = self.raf_value(delta);
            if v < prev - 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "RAF not increasing at delta = {delta}: {self:?}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

impl std::fmt::Display for RafSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RafSpec::Schi => write!(f, "schi"),
            RafSpec::Gkl { tau } => write!(f, "gkl(tau={tau})"),
            RafSpec::Pwd { lambda } => write!(f, "pwd(lambda={lambda})"),
        }
    }
}

/// Pearson residual delta = fhat / m - 1 for strictly positive densities.
pub fn pearson_residual(fhat: f64, model_density: f64) -> Result<f64> {
    if !(fhat > 0.0) || !fhat.is_finite() {
        return Err(Error::NonPositiveDensity(fhat));
    }
    if !(model_density > 0.0) || !model_density.is_finite() {
        return Err(Error::NonPositiveDensity(model_density));
    }
    Ok(fhat / model_density - 1.0)
}

/// Per-observation residuals and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ResidualReport {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum_weights(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean_weight(&self) -> f64 {
        self.sum_weights() / self.len() as f64
    }

    /// 1 - (sum of weights) / n.
    pub fn downweighting_level(&self) -> f64 {
        1.0 - self.mean_weight()
    }
}

/// Residuals and weights from precomputed log densities. Ratios are formed
/// in log space so neither density magnitude can overflow the quotient.
pub fn residual_report_from_logs(
    log_fhat: &[f64],
    log_model: &[f64],
    raf: &RafSpec,
) -> Result<ResidualReport> {
    if log_fhat.len() != log_model.len() {
        return Err(Error::DimensionMismatch {
            expected: log_fhat.len(),
            got: log_model.len(),
        });
    }
    let mut residuals = Vec::with_capacity(log_fhat.len());
    let mut weights = Vec::with_capacity(log_fhat.len());
    for (&lf, &lm) in log_fhat.iter().zip(log_model) {
        if !lf.is_finite() || !lm.is_finite() {
            return Err(Error::NonPositiveDensity(if lf.is_finite() {
                lm
            } else {
                lf
            }));
        }
        let delta = (lf - lm).min(LOG_RATIO_CAP).exp() - 1.0;
        residuals.push(delta);
        weights.push(raf.weight(delta));
    }
    Ok(ResidualReport { residuals, weights })
}

/// Full pipeline: evaluate the kernel estimate and the model density at every
/// observation, then map Pearson residuals through the weight function.
pub fn residual_report(
    sample: &TorusSample,
    params: &SineModelParams,
    kde: &TorusKde,
    strategy: &NormalizationStrategy,
    raf: &RafSpec,
) -> Result<ResidualReport> {
    let log_fhat = kde.log_eval_batch(sample)?;
    let log_model = log_density_batch(sample, params, strategy)?;
    residual_report_from_logs(&log_fhat, &log_model, raf)
}
