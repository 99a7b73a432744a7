//! Plain-text fit reports: one datum per line, followed by weight and
//! residual blocks.
//!
//! Numbers are printed in the shortest decimal form that round-trips, so
//! parsing a report reproduces the exact values that were written.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimator::FitResult;
use crate::model::SineModelParams;
use crate::torus::Angle;

pub const REPORT_FORMAT: &str = "v1";

/// Everything a fit prints: estimates, dispersion matrix, diagnostics, and
/// the per-observation weight and residual vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub method: String,
    pub p: usize,
    pub n: usize,
    pub seed: u64,
    pub kstar: Option<f64>,
    pub raf: Option<String>,
    pub converged: bool,
    pub iterations: usize,
    pub mu: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Strict upper triangle of Lambda, row-major.
    pub lambda: Vec<f64>,
    /// Rows of the dispersion matrix Sigma.
    pub sigma: Vec<Vec<f64>>,
    pub pd_flag: bool,
    pub condition_number: f64,
    pub sum_weights: f64,
    pub downweighting_level: f64,
    pub root_score: f64,
    pub weights: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl FitReport {
    pub fn from_fit(
        method: &str,
        fit: &FitResult,
        seed: u64,
        kstar: Option<f64>,
        raf: Option<String>,
    ) -> Self {
        let p = fit.params.dim();
        let sigma = (0..p)
            .map(|i| (0..p).map(|j| fit.sigma_hat.matrix()[(i, j)]).collect())
            .collect();
        Self {
            method: method.to_string(),
            p,
            n: fit.n(),
            seed,
            kstar,
            raf,
            converged: fit.converged,
            iterations: fit.iterations,
            mu: fit.params.mu().iter().map(|a| a.radians()).collect(),
            kappa: fit.params.kappa().to_vec(),
            lambda: fit.params.lambda_upper_triangle(),
            sigma,
            pd_flag: fit.pd_flag,
            condition_number: fit.sigma_hat.condition_number(),
            sum_weights: fit.sum_weights,
            downweighting_level: fit.downweighting_level(),
            root_score: fit.root_score,
            weights: fit.weights.clone(),
            residuals: fit.residuals.clone(),
        }
    }

    /// Model parameters carried by the report.
    pub fn params(&self) -> Result<SineModelParams> {
        let mu: Vec<Angle> = self
            .mu
            .iter()
            .map(|&x| Angle::wrap(x))
            .collect::<Result<Vec<_>>>()?;
        SineModelParams::from_upper_triangle(mu, self.kappa.clone(), &self.lambda)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "vmsine_fit_report: {REPORT_FORMAT}");
        let _ = writeln!(out, "method: {}", self.method);
        let _ = writeln!(out, "p: {}", self.p);
        let _ = writeln!(out, "n: {}", self.n);
        let _ = writeln!(out, "seed: {}", self.seed);
        if let Some(k) = self.kstar {
            let _ = writeln!(out, "kstar: {k}");
        }
        if let Some(raf) = &self.raf {
            let _ = writeln!(out, "raf: {raf}");
        }
        let _ = writeln!(out, "converged: {}", self.converged);
        let _ = writeln!(out, "iterations: {}", self.iterations);
        let _ = writeln!(out, "mu: {}", join(&self.mu));
        let _ = writeln!(out, "kappa: {}", join(&self.kappa));
        let _ = writeln!(out, "lambda: {}", join(&self.lambda));
        for (i, row) in self.sigma.iter().enumerate() {
            let _ = writeln!(out, "sigma_row_{i}: {}", join(row));
        }
        let _ = writeln!(out, "pd_flag: {}", self.pd_flag);
        let _ = writeln!(out, "condition_number: {}", self.condition_number);
        let _ = writeln!(out, "sum_weights: {}", self.sum_weights);
        let _ = writeln!(out, "downweighting_level: {}", self.downweighting_level);
        let _ = writeln!(out, "root_score: {}", self.root_score);
        let _ = writeln!(out, "weights:");
        for w in &self.weights {
            let _ = writeln!(out, "{w}");
        }
        let _ = writeln!(out, "residuals:");
        for r in &self.residuals {
            let _ = writeln!(out, "{r}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut fields: Vec<(String, String)> = Vec::new();
        let mut weights = Vec::new();
        let mut residuals = Vec::new();
        let mut section = 0; // 0 = key-value, 1 = weights, 2 = residuals

        for (i, line) in &mut lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match section {
                0 => {
                    if line == "weights:" {
                        section = 1;
                        continue;
                    }
                    let (key, value) = line.split_once(':').ok_or_else(|| {
                        Error::Parse(format!("line {}: expected 'key: value'", i + 1))
                    })?;
                    fields.push((key.trim().to_string(), value.trim().to_string()));
                }
                1 => {
                    if line == "residuals:" {
                        section = 2;
                        continue;
                    }
                    weights.push(line.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: bad weight '{line}'", i + 1))
                    })?);
                }
                _ => {
                    residuals.push(line.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: bad residual '{line}'", i + 1))
                    })?);
                }
            }
        }

        let get = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Parse(format!("missing field '{key}'")))
        };
        let get_opt = |key: &str| fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
        let parse_f64 = |key: &str, v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Parse(format!("field '{key}': bad number '{v}'")))
        };
        let parse_vec = |key: &str| -> Result<Vec<f64>> {
            get(key)?
                .split_whitespace()
                .map(|t| parse_f64(key, t))
                .collect()
        };

        let version = get("vmsine_fit_report")?;
        if version != REPORT_FORMAT {
            return Err(Error::Parse(format!(
                "unsupported report format '{version}'"
            )));
        }
        let p: usize = get("p")?
            .parse()
            .map_err(|_| Error::Parse("bad p".into()))?;
        let mut sigma = Vec::with_capacity(p);
        for i in 0..p {
            sigma.push(parse_vec(&format!("sigma_row_{i}"))?);
        }
        let report = Self {
            method: get("method")?.to_string(),
            p,
            n: get("n")?
                .parse()
                .map_err(|_| Error::Parse("bad n".into()))?,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Parse("bad seed".into()))?,
            kstar: get_opt("kstar")
                .map(|v| parse_f64("kstar", &v))
                .transpose()?,
            raf: get_opt("raf"),
            converged: get("converged")?
                .parse()
                .map_err(|_| Error::Parse("bad converged flag".into()))?,
            iterations: get("iterations")?
                .parse()
                .map_err(|_| Error::Parse("bad iterations".into()))?,
            mu: parse_vec("mu")?,
            kappa: parse_vec("kappa")?,
            lambda: get("lambda")?
                .split_whitespace()
                .map(|t| parse_f64("lambda", t))
                .collect::<Result<Vec<_>>>()?,
            sigma,
            pd_flag: get("pd_flag")?
                .parse()
                .map_err(|_| Error::Parse("bad pd_flag".into()))?,
            condition_number: parse_f64("condition_number", get("condition_number")?)?,
            sum_weights: parse_f64("sum_weights", get("sum_weights")?)?,
            downweighting_level: parse_f64("downweighting_level", get("downweighting_level")?)?,
            root_score: parse_f64("root_score", get("root_score")?)?,
            weights,
            residuals,
        };
        if report.mu.len() != report.p || report.kappa.len() != report.p {
            return Err(Error::Parse("mu/kappa length does not match p".into()));
        }
        if report.weights.len() != report.n || report.residuals.len() != report.n {
            return Err(Error::Parse(format!(
                "weight/residual blocks have {} / {} entries, expected n = {}",
                report.weights.len(),
                report.residuals.len(),
                report.n
            )));
        }
        Ok(report)
    }
}
