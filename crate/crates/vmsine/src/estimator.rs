//! Moment-based maximum likelihood for the sine model and its weighted
//! likelihood counterpart.
//!
//! The location estimate is the componentwise (weighted) mean direction; the
//! covariance-role matrix takes sine cross-moments off the diagonal and the
//! 2(1 - cos) dispersion moment on it; concentrations and interactions come
//! from its inverse. The weighted fit iterates this map with weights driven
//! by Pearson residuals against a fixed kernel density estimate, starting
//! from many small random subsamples, and keeps the root that leaves the
//! fewest observations with a very negative residual.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kde::TorusKde;
use crate::model::{
    log_density_batch, params_from_precision, precision_from_params, NormalizationStrategy,
    PrecisionForm, SineModelParams,
};
use crate::numeric::symmetrize;
use crate::seeding::{derive_seed, rng_from_seed};
use crate::torus::{
    angular_difference, circular_correlation, mean_direction, mean_resultant_length, Angle,
    TorusSample, DEGENERACY_THRESHOLD,
};
use crate::weights::{residual_report_from_logs, RafSpec, ResidualReport};

/// Roots whose parameters differ by less than this are the same root.
const ROOT_DEDUP_TOL: f64 = 1e-3;
/// Resultant lengths this close to 0 or 1 make a subsample unusable.
const SUBSAMPLE_RHO_TOL: f64 = 1e-10;
/// Attempts to replace a degenerate initial subsample before a start fails.
const MAX_SUBSAMPLE_REDRAWS: usize = 50;
/// Halvings toward the previous iterate when an update loses positivity.
const MAX_DAMPINGS: usize = 10;

/// Settings of the weighted likelihood fit.
#[derive(Debug, Clone)]
pub struct WleConfig {
    /// Concentration bandwidth of the kernel estimate (> 0).
    pub kstar: f64,
    pub raf: RafSpec,
    pub max_iter: usize,
    /// Convergence threshold on the largest parameter change per iteration;
    /// angular changes are measured as 1 - cos(delta).
    pub tol: f64,
    pub n_starts: usize,
    pub subsample_size: usize,
    /// Residuals at or below this value count against a root (in (-1, 0)).
    pub root_threshold: f64,
    pub seed: u64,
    /// Use the uncorrected product form for initial off-diagonal entries.
    pub literal_init_offdiag: bool,
}

impl WleConfig {
    pub fn new(kstar: f64, raf: RafSpec, seed: u64) -> Self {
        Self {
            kstar,
            raf,
            max_iter: 200,
            tol: 1e-6,
            n_starts: 100,
            subsample_size: 10,
            root_threshold: -0.9,
            seed,
            literal_init_offdiag: false,
        }
    }

    pub fn validate(&self, sample: &TorusSample) -> Result<()> {
        let p = sample.dim();
        if !(self.kstar.is_finite() && self.kstar > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kstar must be finite and > 0, got {}",
                self.kstar
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iter == 0 || self.n_starts == 0 {
            return Err(Error::InvalidConfig(
                "max_iter and n_starts must be >= 1".into(),
            ));
        }
        if self.subsample_size < p + 1 {
            return Err(Error::InvalidConfig(format!(
                "subsample_size must be at least p + 1 = {}",
                p + 1
            )));
        }
        if self.subsample_size > sample.n() {
            return Err(Error::InvalidConfig(
                "subsample_size exceeds the sample size".into(),
            ));
        }
        if !(self.root_threshold > -1.0 && self.root_threshold < 0.0) {
            return Err(Error::InvalidConfig(
                "root_threshold must lie in (-1, 0)".into(),
            ));
        }
        Ok(())
    }
}

/// Output of a fit: parameter estimates plus per-observation diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: SineModelParams,
    pub sigma_hat: PrecisionForm,
    pub weights: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub sum_weights: f64,
    pub pd_flag: bool,
    pub root_score: f64,
}

impl FitResult {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn mean_weight(&self) -> f64 {
        self.sum_weights / self.n() as f64
    }

    /// Fraction of total weight removed from the sample.
    pub fn downweighting_level(&self) -> f64 {
        1.0 - self.mean_weight()
    }
}

/// Weighted mean directions and the weighted dispersion matrix: sine
/// cross-moments off the diagonal, 2(1 - cos) moments on it, normalized by
/// the weight total. Unit weights reduce this to the plain moment estimator.
pub fn weighted_moment_estimates(
    sample: &TorusSample,
    weights: &[f64],
) -> Result<(Vec<Angle>, DMatrix<f64>)> {
    let n = sample.n();
    let p = sample.dim();
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParams(
            "weights must be finite and non-negative".into(),
        ));
    }
    let sum_w: f64 = weights.iter().sum();
    if sum_w <= 0.0 {
        return Err(Error::StepFailure("total weight is zero".into()));
    }

    let mut cos_sum = vec![0.0; p];
    let mut sin_sum = vec![0.0; p];
    for (row, &w) in sample.rows().zip(weights) {
        for j in 0..p {
            let (s, c) = row[j].sin_cos();
            cos_sum[j] += w * c;
            sin_sum[j] += w * s;
        }
    }
    let mut mu = Vec::with_capacity(p);
    for j in 0..p {
        let (cb, sb) = (cos_sum[j] / sum_w, sin_sum[j] / sum_w);
        let resultant = (cb * cb + sb * sb).sqrt();
        if resultant < DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateDirection { dim: j, resultant });
        }
        mu.push(Angle::wrap(sb.atan2(cb)).expect("finite atan2"));
    }

    let mut sigma = DMatrix::zeros(p, p);
    let mut sines = vec![0.0; p];
    for (row, &w) in sample.rows().zip(weights) {
        for j in 0..p {
            let dev = row[j] - mu[j].radians();
            let (s, c) = dev.sin_cos();
            sines[j] = s;
            sigma[(j, j)] += 2.0 * w * (1.0 - c);
        }
        for i in 0..p {
            for j in (i + 1)..p {
                sigma[(i, j)] += w * sines[i] * sines[j];
            }
        }
    }
    for i in 0..p {
        sigma[(i, i)] /= sum_w;
        for j in (i + 1)..p {
            sigma[(i, j)] /= sum_w;
            sigma[(j, i)] = sigma[(i, j)];
        }
    }
    Ok((mu, sigma))
}

fn params_from_sigma(mu: Vec<Angle>, sigma: &DMatrix<f64>) -> Result<SineModelParams> {
    let precision = sigma.clone().try_inverse().ok_or_else(|| {
        Error::SingularMatrix(format!(
            "dispersion matrix is singular (diagonal {:?})",
            sigma.diagonal().iter().collect::<Vec<_>>()
        ))
    })?;
    let precision = symmetrize(&precision);
    let (kappa, lambda) = params_from_precision(&precision)?;
    SineModelParams::new(mu, kappa, lambda)
}

/// Plain moment-based fit with unit weights.
pub fn mle_fit(sample: &TorusSample) -> Result<FitResult> {
    let n = sample.n();
    let p = sample.dim();
    if n < p + 1 {
        return Err(Error::EstimationFailure(format!(
            "need at least p + 1 = {} observations, got {n}",
            p + 1
        )));
    }
    let weights = vec![1.0; n];
    let (mu, sigma) = weighted_moment_estimates(sample, &weights)?;
    let params = params_from_sigma(mu, &sigma)
        .map_err(|e| Error::EstimationFailure(format!("moment equations unsolvable: {e}")))?;
    let (_, pd) = precision_from_params(&params);
    Ok(FitResult {
        params,
        sigma_hat: PrecisionForm::new(sigma)?,
        weights,
        residuals: vec![0.0; n],
        iterations: 1,
        converged: true,
        sum_weights: n as f64,
        pd_flag: pd,
        root_score: 0.0,
    })
}

/// One fixed-point update of the weighted estimating equations.
#[derive(Debug, Clone)]
pub struct WleStep {
    pub mu: Vec<Angle>,
    pub sigma: DMatrix<f64>,
    pub report: ResidualReport,
}

fn wle_step_from_logs(
    sample: &TorusSample,
    current: &SineModelParams,
    log_fhat: &[f64],
    strategy: &NormalizationStrategy,
    raf: &RafSpec,
) -> Result<WleStep> {
    let log_model = log_density_batch(sample, current, strategy)?;
    let report = residual_report_from_logs(log_fhat, &log_model, raf)?;
    let effective = report.sum_weights();
    if effective <= (sample.dim() + 1) as f64 {
        return Err(Error::StepFailure(format!(
            "effective sample collapsed: total weight {effective:.3} <= p + 1"
        )));
    }
    let (mu, sigma) = weighted_moment_estimates(sample, &report.weights)?;
    Ok(WleStep { mu, sigma, report })
}

/// Residuals against the kernel estimate at the current parameters, the
/// induced weights, and the reweighted moment update.
pub fn wle_step(
    sample: &TorusSample,
    current: &SineModelParams,
    kde: &TorusKde,
    strategy: &NormalizationStrategy,
    raf: &RafSpec,
) -> Result<WleStep> {
    let log_fhat = kde.log_eval_batch(sample)?;
    wle_step_from_logs(sample, current, &log_fhat, strategy, raf)
}

/// Starting values from a small subsample: circular means, diagonal
/// dispersion -2 log(rho_hat), off-diagonal entries from the circular
/// correlation. Off-diagonals are halved until the implied concentrations
/// are positive.
pub fn init_from_subsample(sub: &TorusSample, literal_offdiag: bool) -> Result<SineModelParams> {
    let p = sub.dim();
    let rho = mean_resultant_length(sub);
    for (j, &r) in rho.iter().enumerate() {
        if r <= SUBSAMPLE_RHO_TOL || r >= 1.0 - SUBSAMPLE_RHO_TOL {
            return Err(Error::DegenerateSubsample(format!(
                "resultant length {r:.3e} in dimension {j}"
            )));
        }
    }
    let mu = mean_direction(sub)
        .map_err(|e| Error::DegenerateSubsample(format!("mean direction: {e}")))?;
    let mut sigma = DMatrix::zeros(p, p);
    for j in 0..p {
        sigma[(j, j)] = -2.0 * rho[j].ln();
    }
    for r in 0..p {
        for s in (r + 1)..p {
            let rc = circular_correlation(&sub.column(r), &sub.column(s))
                .map_err(|e| Error::DegenerateSubsample(format!("correlation: {e}")))?;
            let off = if literal_offdiag {
                rc * sigma[(r, r)] * sigma[(s, s)]
            } else {
                rc * (sigma[(r, r)] * sigma[(s, s)]).sqrt()
            };
            sigma[(r, s)] = off;
            sigma[(s, r)] = off;
        }
    }
    for _ in 0..64 {
        if let Ok(params) = params_from_sigma(mu.clone(), &sigma) {
            return Ok(params);
        }
        for r in 0..p {
            for s in 0..p {
                if r != s {
                    sigma[(r, s)] *= 0.5;
                }
            }
        }
    }
    Err(Error::DegenerateSubsample(
        "initial dispersion matrix could not be made valid".into(),
    ))
}

/// Largest parameter movement between iterates; angles enter as 1 - cos.
fn convergence_gap(a: &SineModelParams, b: &SineModelParams) -> f64 {
    let mut gap = 0.0f64;
    for (x, y) in a.mu().iter().zip(b.mu()) {
        gap = gap.max(1.0 - (x.radians() - y.radians()).cos());
    }
    for (x, y) in a.kappa().iter().zip(b.kappa()) {
        gap = gap.max((x - y).abs());
    }
    let (la, lb) = (a.lambda(), b.lambda());
    for i in 0..a.dim() {
        for j in (i + 1)..a.dim() {
            gap = gap.max((la[(i, j)] - lb[(i, j)]).abs());
        }
    }
    gap
}

/// Plain parameter distance used to merge equivalent roots.
fn param_distance(a: &SineModelParams, b: &SineModelParams) -> f64 {
    let mut d = 0.0f64;
    for (x, y) in a.mu().iter().zip(b.mu()) {
        d = d.max(angular_difference(x.radians(), y.radians()).abs());
    }
    for (x, y) in a.kappa().iter().zip(b.kappa()) {
        d = d.max((x - y).abs());
    }
    let (la, lb) = (a.lambda(), b.lambda());
    for i in 0..a.dim() {
        for j in (i + 1)..a.dim() {
            d = d.max((la[(i, j)] - lb[(i, j)]).abs());
        }
    }
    d
}

fn sample_indices(rng: &mut rand_chacha::ChaCha12Rng, n: usize, m: usize) -> Vec<usize> {
    use rand::Rng;
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx
}

struct Root {
    params: SineModelParams,
    sigma: DMatrix<f64>,
    report: ResidualReport,
    iterations: usize,
    score: f64,
    chain: usize,
}

fn run_chain(
    sample: &TorusSample,
    config: &WleConfig,
    log_fhat: &[f64],
    chain: usize,
) -> std::result::Result<Root, String> {
    let mut rng = rng_from_seed(derive_seed(config.seed, chain as u64));
    let mut start = None;
    for _ in 0..MAX_SUBSAMPLE_REDRAWS {
        let idx = sample_indices(&mut rng, sample.n(), config.subsample_size);
        let sub = sample.select_rows(&idx).expect("non-empty index set");
        if let Ok(params) = init_from_subsample(&sub, config.literal_init_offdiag) {
            let (pm, _) = precision_from_params(&params);
            if let Some(s0) = pm.try_inverse() {
                start = Some((params, symmetrize(&s0)));
                break;
            }
        }
    }
    let Some((mut params, mut sigma_prev)) = start else {
        return Err(format!(
            "no usable initial subsample in {MAX_SUBSAMPLE_REDRAWS} draws"
        ));
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let strategy = NormalizationStrategy::auto(&params);
        let step = wle_step_from_logs(sample, &params, log_fhat, &strategy, &config.raf)
            .map_err(|e| format!("iteration {iterations}: {e}"))?;
        let mut sigma = step.sigma;
        let mut next = None;
        for _ in 0..=MAX_DAMPINGS {
            match params_from_sigma(step.mu.clone(), &sigma) {
                Ok(p) => {
                    next = Some((p, sigma));
                    break;
                }
                Err(_) => sigma = 0.5 * (&sigma + &sigma_prev),
            }
        }
        let Some((new_params, new_sigma)) = next else {
            return Err(format!(
                "iteration {iterations}: update kept losing positivity after {MAX_DAMPINGS} dampings"
            ));
        };
        let gap = convergence_gap(&params, &new_params);
        params = new_params;
        sigma_prev = new_sigma;
        if gap < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(format!("no convergence within {} iterations", config.max_iter));
    }

    let strategy = NormalizationStrategy::auto(&params);
    let log_model =
        log_density_batch(sample, &params, &strategy).map_err(|e| format!("final report: {e}"))?;
    let report = residual_report_from_logs(log_fhat, &log_model, &config.raf)
        .map_err(|e| format!("final report: {e}"))?;
    let score = report
        .residuals
        .iter()
        .filter(|&&d| d <= config.root_threshold)
        .count() as f64
        / sample.n() as f64;
    Ok(Root {
        params,
        sigma: sigma_prev,
        report,
        iterations,
        score,
        chain,
    })
}

/// Multi-start weighted likelihood fit.
///
/// The kernel estimate is built once; each start draws its own subsample,
/// iterates to a root, and the distinct roots are ranked by the fraction of
/// observations with residuals at or below the root threshold (fewer is
/// better; ties favor the larger weight total).
pub fn wle_fit(sample: &TorusSample, config: &WleConfig) -> Result<FitResult> {
    config.validate(sample)?;
    if sample.n() < sample.dim() + 1 {
        return Err(Error::EstimationFailure(format!(
            "need at least p + 1 = {} observations, got {}",
            sample.dim() + 1,
            sample.n()
        )));
    }
    let kde = TorusKde::new(sample.clone(), config.kstar)?;
    let log_fhat = kde.log_eval_at_data();

    let outcomes: Vec<std::result::Result<Root, String>> = (0..config.n_starts)
        .into_par_iter()
        .map(|chain| run_chain(sample, config, &log_fhat, chain))
        .collect();

    let mut roots: Vec<Root> = Vec::new();
    let mut failures: Vec<(usize, String)> = Vec::new();
    for (chain, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(root) => {
                if !roots
                    .iter()
                    .any(|r| param_distance(&r.params, &root.params) < ROOT_DEDUP_TOL)
                {
                    roots.push(root);
                }
            }
            Err(cause) => failures.push((chain, cause)),
        }
    }
    if roots.is_empty() {
        let mut msg = format!("all {} starts failed", config.n_starts);
        for (chain, cause) in failures.iter().take(5) {
            msg.push_str(&format!("; start {chain}: {cause}"));
        }
        if failures.len() > 5 {
            msg.push_str(&format!("; ... {} more", failures.len() - 5));
        }
        return Err(Error::EstimationFailure(msg));
    }

    let best = roots
        .iter()
        .min_by(|a, b| {
            a.score
                .total_cmp(&b.score)
                .then(b.report.sum_weights().total_cmp(&a.report.sum_weights()))
                .then(a.chain.cmp(&b.chain))
        })
        .expect("non-empty root set");

    let (_, pd) = precision_from_params(&best.params);
    Ok(FitResult {
        params: best.params.clone(),
        sigma_hat: PrecisionForm::new(best.sigma.clone())?,
        weights: best.report.weights.clone(),
        residuals: best.report.residuals.clone(),
        iterations: best.iterations,
        converged: true,
        sum_weights: best.report.sum_weights(),
        pd_flag: pd,
        root_score: best.score,
    })
}

/// Fit at one bandwidth of a monitoring sweep.
#[derive(Debug, Clone)]
pub struct MonitorEntry {
    pub kstar: f64,
    pub outcome: std::result::Result<FitResult, String>,
}

/// Results of a bandwidth sweep, one entry per grid value.
#[derive(Debug, Clone)]
pub struct MonitorResult {
    pub entries: Vec<MonitorEntry>,
}

/// Runs an independent fit for every bandwidth in the grid, sharing the seed
/// so the sweeps are comparable. Per-point failures are recorded, not fatal.
pub fn monitor(sample: &TorusSample, kstar_grid: &[f64], base: &WleConfig) -> Result<MonitorResult> {
    if kstar_grid.is_empty() {
        return Err(Error::InvalidConfig("bandwidth grid is empty".into()));
    }
    if kstar_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(
            "bandwidth grid must be strictly increasing".into(),
        ));
    }
    if kstar_grid.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(Error::InvalidConfig(
            "bandwidth grid values must be finite and > 0".into(),
        ));
    }
    let entries: Vec<MonitorEntry> = kstar_grid
        .par_iter()
        .map(|&kstar| {
            let config = WleConfig {
                kstar,
                raf: base.raf,
                ..base.clone()
            };
            MonitorEntry {
                kstar,
                outcome: wle_fit(sample, &config).map_err(|e| e.to_string()),
            }
        })
        .collect();
    Ok(MonitorResult { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{
        contaminate, sample_sine_model, ContaminationMode, ContaminationSpec, GibbsConfig,
    };
    use crate::torus::wrap;
    use approx::assert_abs_diff_eq;

    fn ang(x: f64) -> Angle {
        wrap(x).unwrap()
    }

    fn small_contaminated() -> (TorusSample, Vec<bool>, SineModelParams) {
        let params = SineModelParams::bivariate([ang(0.0), ang(0.0)], [10.0, 20.0], 15.0).unwrap();
        let genuine = sample_sine_model(&params, 150, &GibbsConfig::with_seed(31)).unwrap();
        let spec = ContaminationSpec::clustered(30, ContaminationMode::Append, vec![0, 1]);
        let (data, mask) = contaminate(&genuine, &spec, params.mu(), 32).unwrap();
        (data, mask, params)
    }

    #[test]
    fn mle_matches_unit_weight_moments_exactly() {
        let params =
            SineModelParams::independent(vec![ang(1.0), ang(2.0)], vec![50.0, 100.0]).unwrap();
        let sample = sample_sine_model(&params, 200, &GibbsConfig::with_seed(33)).unwrap();
        let fit = mle_fit(&sample).unwrap();
        let (mu, sigma) = weighted_moment_estimates(&sample, &vec![1.0; 200]).unwrap();
        for (a, b) in fit.params.mu().iter().zip(&mu) {
            assert_eq!(a.radians(), b.radians());
        }
        assert_eq!(fit.sigma_hat.matrix(), &sigma);
        assert!(fit.pd_flag);
        assert_eq!(fit.sum_weights, 200.0);
    }

    #[test]
    fn wle_step_with_flat_kernel_reduces_to_mle() {
        // A nearly uniform kernel estimate stays far below the concentrated
        // model density at every observation, so all weights are exactly one
        // and the update reproduces the plain moment fit bit for bit.
        let params =
            SineModelParams::independent(vec![ang(1.0), ang(2.0)], vec![50.0, 100.0]).unwrap();
        let sample = sample_sine_model(&params, 150, &GibbsConfig::with_seed(34)).unwrap();
        let kde = TorusKde::new(sample.clone(), 0.05).unwrap();
        let raf = RafSpec::schi().unwrap();
        let step = wle_step(
            &sample,
            &params,
            &kde,
            &NormalizationStrategy::quadrature(),
            &raf,
        )
        .unwrap();
        assert!(step.report.weights.iter().all(|&w| w == 1.0));
        let mle = mle_fit(&sample).unwrap();
        for (a, b) in step.mu.iter().zip(mle.params.mu()) {
            assert_eq!(a.radians(), b.radians());
        }
        assert_eq!(&step.sigma, mle.sigma_hat.matrix());
    }

    #[test]
    fn duplicated_observation_with_split_weight_changes_nothing() {
        let params = SineModelParams::bivariate([ang(0.3), ang(4.0)], [5.0, 10.0], 5.0).unwrap();
        let sample = sample_sine_model(&params, 40, &GibbsConfig::with_seed(35)).unwrap();
        let mut rows: Vec<Vec<f64>> = sample.rows().map(|r| r.to_vec()).collect();
        rows.push(rows[0].clone());
        let doubled = TorusSample::from_rows(&rows).unwrap();
        let mut w = vec![1.0; 41];
        w[0] = 0.5;
        w[40] = 0.5;
        let (mu_a, sigma_a) = weighted_moment_estimates(&sample, &vec![1.0; 40]).unwrap();
        let (mu_b, sigma_b) = weighted_moment_estimates(&doubled, &w).unwrap();
        for (a, b) in mu_a.iter().zip(&mu_b) {
            assert_abs_diff_eq!(a.radians(), b.radians(), epsilon = 1e-13);
        }
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(sigma_a[(i, j)], sigma_b[(i, j)], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn degenerate_samples_error() {
        let one_point = TorusSample::from_radians(5, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0])
            .unwrap();
        assert!(matches!(
            mle_fit(&one_point),
            Err(Error::EstimationFailure(_))
        ));

        let tiny = TorusSample::from_radians(2, 2, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(mle_fit(&tiny).is_err());
    }

    #[test]
    fn concentrated_limit_matches_linear_covariance() {
        // With a tiny angular spread the circular moments agree with ordinary
        // covariance arithmetic on the deviations.
        let params =
            SineModelParams::independent(vec![ang(1.0), ang(4.0)], vec![400.0, 900.0]).unwrap();
        let sample = sample_sine_model(&params, 4000, &GibbsConfig::with_seed(36)).unwrap();
        let fit = mle_fit(&sample).unwrap();
        let mu: Vec<f64> = fit.params.mu().iter().map(|a| a.radians()).collect();
        let mut cov = DMatrix::zeros(2, 2);
        for row in sample.rows() {
            let d = [
                angular_difference(row[0], mu[0]),
                angular_difference(row[1], mu[1]),
            ];
            for i in 0..2 {
                for j in 0..2 {
                    cov[(i, j)] += d[i] * d[j];
                }
            }
        }
        cov /= sample.n() as f64;
        for i in 0..2 {
            for j in 0..2 {
                let s = fit.sigma_hat.matrix()[(i, j)];
                if i == j {
                    assert!((s - cov[(i, j)]).abs() / cov[(i, j)] < 0.05);
                } else {
                    assert!((s - cov[(i, j)]).abs() < 0.05 * (cov[(0, 0)] * cov[(1, 1)]).sqrt());
                }
            }
        }
    }

    #[test]
    fn init_univariate_chain_of_definitions() {
        let draws: Vec<f64> = crate::sampling::sample_univariate_vm(ang(2.0), 8.0, 20, 37)
            .unwrap()
            .iter()
            .map(|a| a.radians())
            .collect();
        let sub = TorusSample::from_radians(20, 1, &draws).unwrap();
        let rho = mean_resultant_length(&sub)[0];
        let init = init_from_subsample(&sub, false).unwrap();
        assert_abs_diff_eq!(
            init.kappa()[0],
            1.0 / (-2.0 * rho.ln()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn init_rejects_degenerate_subsamples() {
        let same = TorusSample::from_radians(4, 1, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            init_from_subsample(&same, false),
            Err(Error::DegenerateSubsample(_))
        ));
        let antipodal = TorusSample::from_radians(4, 1, &[0.0, std::f64::consts::PI, 0.0, std::f64::consts::PI])
            .unwrap();
        assert!(matches!(
            init_from_subsample(&antipodal, false),
            Err(Error::DegenerateSubsample(_))
        ));
    }

    #[test]
    fn init_lands_within_factor_two_of_subsample_mle() {
        let params = SineModelParams::bivariate([ang(0.0), ang(0.0)], [10.0, 20.0], 15.0).unwrap();
        let sample = sample_sine_model(&params, 250, &GibbsConfig::with_seed(38)).unwrap();
        let mut rng = rng_from_seed(39);
        let mut checked = 0;
        for _ in 0..20 {
            let idx = sample_indices(&mut rng, 250, 10);
            let sub = sample.select_rows(&idx).unwrap();
            let (Ok(init), Ok(mle)) = (init_from_subsample(&sub, false), mle_fit(&sub)) else {
                continue;
            };
            for (a, b) in init.kappa().iter().zip(mle.params.kappa()) {
                let ratio = a / b;
                assert!(
                    (0.5..=2.0).contains(&ratio),
                    "kappa ratio {ratio} (init {a}, mle {b})"
                );
            }
            checked += 1;
        }
        assert!(checked >= 10, "only {checked} usable subsamples");
    }

    #[test]
    fn wle_fit_downweights_planted_outliers() {
        let (data, mask, _) = small_contaminated();
        let config = WleConfig {
            n_starts: 30,
            ..WleConfig::new(5.0, RafSpec::gkl(1.0).unwrap(), 40)
        };
        let fit = wle_fit(&data, &config).unwrap();
        let (mut out_sum, mut out_n, mut gen_sum, mut gen_n) = (0.0, 0, 0.0, 0);
        for (i, &w) in fit.weights.iter().enumerate() {
            if mask[i] {
                out_sum += w;
                out_n += 1;
            } else {
                gen_sum += w;
                gen_n += 1;
            }
        }
        let (out_mean, gen_mean) = (out_sum / out_n as f64, gen_sum / gen_n as f64);
        assert!(out_mean < 0.2, "outlier mean weight {out_mean}");
        assert!(out_mean < gen_mean, "{out_mean} vs {gen_mean}");
        assert!(fit.converged);
    }

    #[test]
    fn converged_fit_is_a_fixed_point() {
        let (data, _, _) = small_contaminated();
        let config = WleConfig {
            n_starts: 20,
            ..WleConfig::new(10.0, RafSpec::schi().unwrap(), 41)
        };
        let fit = wle_fit(&data, &config).unwrap();
        let kde = TorusKde::new(data.clone(), config.kstar).unwrap();
        let step = wle_step(
            &data,
            &fit.params,
            &kde,
            &NormalizationStrategy::auto(&fit.params),
            &config.raf,
        )
        .unwrap();
        let next = params_from_sigma(step.mu, &step.sigma).unwrap();
        assert!(convergence_gap(&fit.params, &next) < config.tol * 2.0);
    }

    #[test]
    fn fit_is_rotation_equivariant() {
        let (data, _, _) = small_contaminated();
        let config = WleConfig {
            n_starts: 12,
            ..WleConfig::new(10.0, RafSpec::schi().unwrap(), 42)
        };
        let base = wle_fit(&data, &config).unwrap();
        let c = [0.9, -1.7];
        let rotated_rows: Vec<Vec<f64>> = data
            .rows()
            .map(|r| vec![r[0] + c[0], r[1] + c[1]])
            .collect();
        let rotated = TorusSample::from_rows(&rotated_rows).unwrap();
        let fit2 = wle_fit(&rotated, &config).unwrap();
        for j in 0..2 {
            let want = base.params.mu()[j].radians() + c[j];
            let got = fit2.params.mu()[j].radians();
            assert!(angular_difference(got, want).abs() < 1e-8);
            assert!((fit2.params.kappa()[j] - base.params.kappa()[j]).abs() < 1e-8);
        }
        assert!(
            (fit2.params.lambda()[(0, 1)] - base.params.lambda()[(0, 1)]).abs() < 1e-8
        );
        for (a, b) in base.weights.iter().zip(&fit2.weights) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn row_order_does_not_change_selected_root() {
        let (data, _, _) = small_contaminated();
        let config = WleConfig {
            n_starts: 20,
            ..WleConfig::new(10.0, RafSpec::schi().unwrap(), 43)
        };
        let base = wle_fit(&data, &config).unwrap();
        let order: Vec<usize> = (0..data.n()).rev().collect();
        let permuted = data.select_rows(&order).unwrap();
        let fit2 = wle_fit(&permuted, &config).unwrap();
        assert!(param_distance(&base.params, &fit2.params) < 1e-4);
    }

    #[test]
    fn more_starts_never_select_a_worse_root() {
        let (data, _, _) = small_contaminated();
        let single = WleConfig {
            n_starts: 1,
            ..WleConfig::new(10.0, RafSpec::schi().unwrap(), 44)
        };
        let many = WleConfig {
            n_starts: 8,
            ..single.clone()
        };
        let a = wle_fit(&data, &single).unwrap();
        let b = wle_fit(&data, &many).unwrap();
        assert!(b.root_score <= a.root_score);
    }

    #[test]
    fn all_starts_failing_reports_causes() {
        let flat: Vec<f64> = std::iter::repeat([1.0, 2.0]).take(30).flatten().collect();
        let constant = TorusSample::from_radians(30, 2, &flat).unwrap();
        let config = WleConfig {
            n_starts: 4,
            ..WleConfig::new(5.0, RafSpec::schi().unwrap(), 45)
        };
        match wle_fit(&constant, &config) {
            Err(Error::EstimationFailure(msg)) => {
                assert!(msg.contains("all 4 starts failed"), "{msg}");
                assert!(msg.contains("start 0"), "{msg}");
            }
            other => panic!("expected estimation failure, got {other:?}"),
        }
    }

    #[test]
    fn monitor_singleton_equals_single_fit() {
        let (data, _, _) = small_contaminated();
        let config = WleConfig {
            n_starts: 8,
            ..WleConfig::new(5.0, RafSpec::schi().unwrap(), 46)
        };
        let single = wle_fit(&data, &config).unwrap();
        let swept = monitor(&data, &[5.0], &config).unwrap();
        assert_eq!(swept.entries.len(), 1);
        let fit = swept.entries[0].outcome.as_ref().unwrap();
        assert_eq!(fit.params, single.params);
        assert_eq!(fit.root_score, single.root_score);
    }

    #[test]
    fn monitor_rejects_bad_grids() {
        let (data, _, _) = small_contaminated();
        let config = WleConfig::new(5.0, RafSpec::schi().unwrap(), 47);
        assert!(monitor(&data, &[], &config).is_err());
        assert!(monitor(&data, &[2.0, 2.0], &config).is_err());
        assert!(monitor(&data, &[3.0, 1.0], &config).is_err());
        assert!(monitor(&data, &[0.0, 1.0], &config).is_err());
    }
}
