//! Random generation: univariate von Mises draws, a Gibbs sampler for the
//! sine model, and the clustered-outlier contamination generator.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::SineModelParams;
use crate::seeding::rng_from_seed;
use crate::torus::{wrap_raw, Angle, TorusSample};

pub const DEFAULT_OUTLIER_SHIFT: f64 = PI;
pub const DEFAULT_OUTLIER_CONCENTRATION: f64 = 20.0;

/// One von Mises draw by the Best-Fisher wrapped-Cauchy rejection scheme.
///
/// kappa = 0 yields a uniform angle; very large kappa falls back to the
/// Gaussian limit with standard deviation 1/sqrt(kappa).
pub(crate) fn draw_von_mises<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    debug_assert!(kappa >= 0.0);
    if kappa == 0.0 {
        return rng.random::<f64>() * TAU;
    }
    if kappa > 700.0 {
        // Box-Muller on two uniforms keeps the generator dependency-free.
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        let z = (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos();
        return wrap_raw(mu + z / kappa.sqrt());
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    let f = loop {
        let (t, u) = loop {
            let d = (rng.random::<f64>() - 0.5).powi(2);
            let e = (rng.random::<f64>() - 0.5).powi(2);
            let s = d + e;
            if s <= 0.25 && e > 0.0 {
                break (d / e, 4.0 * s);
            }
        };
        let z = (1.0 - t) / (1.0 + t);
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u > 0.0 || (c / u).ln() + 1.0 - c >= 0.0 {
            break f;
        }
    };
    let angle = f.clamp(-1.0, 1.0).acos();
    if rng.random::<bool>() {
        wrap_raw(mu + angle)
    } else {
        wrap_raw(mu - angle)
    }
}

/// n independent von Mises draws.
pub fn sample_univariate_vm(mu: Angle, kappa: f64, n: usize, seed: u64) -> Result<Vec<Angle>> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidParams(format!(
            "kappa must be finite and >= 0, got {kappa}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..n)
        .map(|_| Angle::wrap(draw_von_mises(&mut rng, mu.radians(), kappa)).expect("finite draw"))
        .collect())
}

/// Gibbs chain settings. Burn-in sweeps are discarded, then every
/// `thinning`-th sweep is recorded.
#[derive(Debug, Clone, Copy)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl GibbsConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            burn_in: 1000,
            thinning: 10,
            seed,
        }
    }
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

/// Full conditional law of coordinate `j` given the rest of `state`:
/// von Mises with center `mu_j + atan2(b_j, kappa_j)` and concentration
/// `sqrt(kappa_j^2 + b_j^2)`, where `b_j = sum_{l != j} lambda_jl
/// sin(state_l - mu_l)`.
pub fn gibbs_full_conditional(params: &SineModelParams, state: &[f64], j: usize) -> (Angle, f64) {
    let p = params.dim();
    assert_eq!(state.len(), p);
    assert!(j < p);
    let kappa_j = params.kappa()[j];
    let lambda = params.lambda();
    let mut b = 0.0;
    for l in 0..p {
        if l != j {
            b += lambda[(j, l)] * (state[l] - params.mu()[l].radians()).sin();
        }
    }
    let concentration = (kappa_j * kappa_j + b * b).sqrt();
    let center = params.mu()[j].radians() + b.atan2(kappa_j);
    (Angle::wrap(center).expect("finite center"), concentration)
}

/// n draws from the sine model by systematic-scan Gibbs sampling.
/// Deterministic given the seed in `config`.
pub fn sample_sine_model(
    params: &SineModelParams,
    n: usize,
    config: &GibbsConfig,
) -> Result<TorusSample> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if config.thinning == 0 {
        return Err(Error::InvalidConfig("thinning must be >= 1".into()));
    }
    let p = params.dim();
    let mut rng = rng_from_seed(config.seed);
    let mut state: Vec<f64> = params.mu().iter().map(|a| a.radians()).collect();
    let sweep = |state: &mut Vec<f64>, rng: &mut rand_chacha::ChaCha12Rng| {
        for j in 0..p {
            let (center, conc) = gibbs_full_conditional(params, state, j);
            state[j] = draw_von_mises(rng, center.radians(), conc);
        }
    };
    for _ in 0..config.burn_in {
        sweep(&mut state, &mut rng);
    }
    let mut out = Vec::with_capacity(n * p);
    for _ in 0..n {
        for _ in 0..config.thinning {
            sweep(&mut state, &mut rng);
        }
        out.extend_from_slice(&state);
    }
    TorusSample::from_radians(n, p, &out)
}

/// Whether outliers are appended as new rows or overwrite coordinates of the
/// trailing rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminationMode {
    Append,
    ReplaceDims,
}

/// Recipe for a cluster of outliers: shifted, independent von Mises
/// coordinates in the contaminated dimensions.
#[derive(Debug, Clone)]
pub struct ContaminationSpec {
    pub n_outliers: usize,
    pub mode: ContaminationMode,
    /// Dimensions receiving the shift; must be non-empty and in range.
    pub contaminated_dims: Vec<usize>,
    /// Radians added to the genuine location, aligned with `contaminated_dims`.
    pub shift: Vec<f64>,
    /// Outlier concentration per contaminated dimension.
    pub concentration: Vec<f64>,
}

impl ContaminationSpec {
    /// Tight antipodal cluster: shift pi, concentration 20 in every listed
    /// dimension.
    pub fn clustered(n_outliers: usize, mode: ContaminationMode, dims: Vec<usize>) -> Self {
        let k = dims.len();
        Self {
            n_outliers,
            mode,
            contaminated_dims: dims,
            shift: vec![DEFAULT_OUTLIER_SHIFT; k],
            concentration: vec![DEFAULT_OUTLIER_CONCENTRATION; k],
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.contaminated_dims.is_empty() {
            return Err(Error::InvalidConfig(
                "contaminated_dims must be non-empty".into(),
            ));
        }
        let mut seen = vec![false; p];
        for &d in &self.contaminated_dims {
            if d >= p {
                return Err(Error::InvalidConfig(format!(
                    "contaminated dimension {d} out of range for p = {p}"
                )));
            }
            if seen[d] {
                return Err(Error::InvalidConfig(format!(
                    "contaminated dimension {d} listed twice"
                )));
            }
            seen[d] = true;
        }
        if self.shift.len() != self.contaminated_dims.len()
            || self.concentration.len() != self.contaminated_dims.len()
        {
            return Err(Error::InvalidConfig(
                "shift and concentration must align with contaminated_dims".into(),
            ));
        }
        if self.concentration.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidConfig(
                "outlier concentrations must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Plants outliers around the genuine location `mu`. Returns the new sample
/// and the ground-truth outlier mask.
///
/// Append mode adds `n_outliers` fresh rows; uncontaminated coordinates of
/// those rows are drawn around the genuine location without a shift.
/// Replace mode overwrites only the contaminated coordinates of the last
/// `n_outliers` rows and leaves every other value bit-identical.
pub fn contaminate(
    sample: &TorusSample,
    spec: &ContaminationSpec,
    mu: &[Angle],
    seed: u64,
) -> Result<(TorusSample, Vec<bool>)> {
    let p = sample.dim();
    spec.validate(p)?;
    if mu.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: mu.len(),
        });
    }
    let n = sample.n();
    if spec.n_outliers == 0 {
        return Ok((sample.clone(), vec![false; n]));
    }
    let mut rng = rng_from_seed(seed);
    let mut center = vec![0.0; p];
    let mut conc = vec![DEFAULT_OUTLIER_CONCENTRATION; p];
    for j in 0..p {
        center[j] = mu[j].radians();
    }
    for (slot, &d) in spec.contaminated_dims.iter().enumerate() {
        center[d] = mu[d].radians() + spec.shift[slot];
        conc[d] = spec.concentration[slot];
    }
    match spec.mode {
        ContaminationMode::Append => {
            let total = n + spec.n_outliers;
            let mut flat = Vec::with_capacity(total * p);
            for row in sample.rows() {
                flat.extend_from_slice(row);
            }
            for _ in 0..spec.n_outliers {
                for j in 0..p {
                    flat.push(draw_von_mises(&mut rng, center[j], conc[j]));
                }
            }
            let mut mask = vec![false; total];
            for m in mask.iter_mut().skip(n) {
                *m = true;
            }
            Ok((TorusSample::from_radians(total, p, &flat)?, mask))
        }
        ContaminationMode::ReplaceDims => {
            if spec.n_outliers > n {
                return Err(Error::InvalidConfig(format!(
                    "cannot replace {} rows in a sample of {n}",
                    spec.n_outliers
                )));
            }
            let mut flat = Vec::with_capacity(n * p);
            for row in sample.rows() {
                flat.extend_from_slice(row);
            }
            let start = n - spec.n_outliers;
            for i in start..n {
                for (slot, &d) in spec.contaminated_dims.iter().enumerate() {
                    flat[i * p + d] =
                        draw_von_mises(&mut rng, center[d], spec.concentration[slot]);
                }
            }
            let mut mask = vec![false; n];
            for m in mask.iter_mut().skip(start) {
                *m = true;
            }
            Ok((TorusSample::from_radians(n, p, &flat)?, mask))
        }
    }
}
