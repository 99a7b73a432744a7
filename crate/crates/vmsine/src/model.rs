//! The multivariate von Mises sine model on the torus.
//!
//! The density is proportional to
//!
//! ```text
//! exp( sum_j kappa_j cos(theta_j - mu_j) + 1/2 sin(theta - mu)^T Lambda sin(theta - mu) )
//! ```
//!
//! with concentrations `kappa_j > 0` and a symmetric interaction matrix
//! `Lambda` with zero diagonal. The matrix `P` with `P_jj = kappa_j` and
//! `P_ij = -lambda_ij` plays the role of an inverse covariance: for
//! concentrated data the model is approximately Gaussian with covariance
//! `Sigma = P^{-1}`, which is the basis of the moment estimator and of the
//! closed-form approximation to the normalizing constant.
//!
//! The normalizing constant has no closed form for p > 2. Three strategies
//! are provided: exact quadrature (p <= 2, with the inner axis integrated
//! analytically through a Bessel identity), the concentrated approximation
//! `(2 pi)^{p/2} |Sigma|^{1/2} exp(sum kappa_j)` (requires positive definite
//! `P`), and self-normalized importance sampling from the product von Mises
//! proposal matched to `(mu, kappa)`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::bessel;
use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, symmetrize};
use crate::sampling::draw_von_mises;
use crate::seeding::rng_from_seed;
use crate::torus::{Angle, TorusSample};

/// Relative asymmetry tolerated in matrices that arrive from numerical
/// inversion before they are symmetrized exactly.
const SYMMETRY_RTOL: f64 = 1e-8;

/// Parameters (mu, kappa, Lambda) of the sine model.
#[derive(Debug, Clone, PartialEq)]
pub struct SineModelParams {
    mu: Vec<Angle>,
    kappa: Vec<f64>,
    lambda: DMatrix<f64>,
}

impl SineModelParams {
    pub fn new(mu: Vec<Angle>, kappa: Vec<f64>, lambda: DMatrix<f64>) -> Result<Self> {
        let p = mu.len();
        if p == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        if kappa.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: kappa.len(),
            });
        }
        if lambda.nrows() != p || lambda.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: lambda.nrows().max(lambda.ncols()),
            });
        }
        for (j, &k) in kappa.iter().enumerate() {
            if !k.is_finite() || k <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "kappa[{j}] must be finite and > 0, got {k}"
                )));
            }
        }
        for i in 0..p {
            if lambda[(i, i)] != 0.0 {
                return Err(Error::InvalidParams(format!(
                    "lambda[{i},{i}] must be exactly 0"
                )));
            }
            for j in 0..p {
                if !lambda[(i, j)].is_finite() {
                    return Err(Error::InvalidParams(format!("lambda[{i},{j}] not finite")));
                }
                if lambda[(i, j)] != lambda[(j, i)] {
                    return Err(Error::InvalidParams(format!(
                        "lambda must be exactly symmetric, mismatch at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { mu, kappa, lambda })
    }

    /// Independent product of univariate von Mises components (Lambda = 0).
    pub fn independent(mu: Vec<Angle>, kappa: Vec<f64>) -> Result<Self> {
        let p = mu.len();
        Self::new(mu, kappa, DMatrix::zeros(p, p))
    }

    /// Bivariate model with a single interaction term.
    pub fn bivariate(mu: [Angle; 2], kappa: [f64; 2], lambda: f64) -> Result<Self> {
        let l = DMatrix::from_row_slice(2, 2, &[0.0, lambda, lambda, 0.0]);
        Self::new(mu.to_vec(), kappa.to_vec(), l)
    }

    /// Builds the interaction matrix from its strict upper triangle in
    /// row-major order: (0,1), (0,2), ..., (1,2), ...
    pub fn from_upper_triangle(mu: Vec<Angle>, kappa: Vec<f64>, tri: &[f64]) -> Result<Self> {
        let p = mu.len();
        let expected = p * (p - 1) / 2;
        if tri.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: tri.len(),
            });
        }
        let mut lambda = DMatrix::zeros(p, p);
        let mut k = 0;
        for i in 0..p {
            for j in (i + 1)..p {
                lambda[(i, j)] = tri[k];
                lambda[(j, i)] = tri[k];
                k += 1;
            }
        }
        Self::new(mu, kappa, lambda)
    }

    /// Joins independent blocks into one model with block-diagonal Lambda.
    pub fn block_diagonal(blocks: &[SineModelParams]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParams("no blocks given".into()));
        }
        let p: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut mu = Vec::with_capacity(p);
        let mut kappa = Vec::with_capacity(p);
        let mut lambda = DMatrix::zeros(p, p);
        let mut off = 0;
        for b in blocks {
            mu.extend_from_slice(&b.mu);
            kappa.extend_from_slice(&b.kappa);
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    lambda[(off + i, off + j)] = b.lambda[(i, j)];
                }
            }
            off += b.dim();
        }
        Self::new(mu, kappa, lambda)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[Angle] {
        &self.mu
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    /// Strict upper triangle of Lambda, row-major.
    pub fn lambda_upper_triangle(&self) -> Vec<f64> {
        let p = self.dim();
        let mut out = Vec::with_capacity(p * (p - 1) / 2);
        for i in 0..p {
            for j in (i + 1)..p {
                out.push(self.lambda[(i, j)]);
            }
        }
        out
    }
}

/// The covariance-role matrix Sigma of a fit, with its inverse carrying the
/// concentrations on the diagonal and the negated interactions off it.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionForm {
    sigma: DMatrix<f64>,
}

impl PrecisionForm {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&sigma)?;
        Ok(Self {
            sigma: symmetrize(&sigma),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.sigma
            .clone()
            .try_inverse()
            .map(|m| symmetrize(&m))
            .ok_or_else(|| Error::SingularMatrix("sigma is not invertible".into()))
    }

    pub fn is_positive_definite(&self) -> bool {
        is_positive_definite(&self.sigma)
    }

    /// Ratio of the extreme absolute eigenvalues; infinite when singular.
    pub fn condition_number(&self) -> f64 {
        let eig = self.sigma.clone().symmetric_eigen().eigenvalues;
        let max = eig.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let min = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()));
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let scale = m.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                return Err(Error::InvalidParams(format!(
                    "matrix not symmetric at ({i},{j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .all(|&v| v > 0.0)
}

/// Extracts (kappa, Lambda) from an inverse-covariance matrix:
/// `kappa_j = P_jj`, `lambda_ij = -P_ij`.
///
/// Small numerical asymmetry is averaged away; a genuinely non-symmetric
/// input or a non-positive diagonal is an error.
pub fn params_from_precision(p_matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_symmetric(p_matrix)?;
    let m = symmetrize(p_matrix);
    let p = m.nrows();
    let mut kappa = Vec::with_capacity(p);
    for j in 0..p {
        let d = m[(j, j)];
        if !d.is_finite() || d <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "precision diagonal [{j}] must be > 0, got {d}"
            )));
        }
        kappa.push(d);
    }
    let mut lambda = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            if i != j {
                lambda[(i, j)] = -m[(i, j)];
            }
        }
    }
    Ok((kappa, lambda))
}

/// Inverse-covariance matrix of the parameters plus its positive-definite
/// flag: diagonal kappa, off-diagonal -lambda.
pub fn precision_from_params(params: &SineModelParams) -> (DMatrix<f64>, bool) {
    let p = params.dim();
    let mut m = DMatrix::zeros(p, p);
    for i in 0..p {
        m[(i, i)] = params.kappa[i];
        for j in 0..p {
            if i != j {
                m[(i, j)] = -params.lambda[(i, j)];
            }
        }
    }
    let pd = is_positive_definite(&m);
    (m, pd)
}

/// How to compute the normalizing constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationStrategy {
    /// Deterministic quadrature, only valid for p <= 2.
    ExactQuadrature { points_per_axis: usize },
    /// Closed form for concentrated, positive-definite models.
    ConcentratedApproximation,
    /// Self-normalized importance sampling with a fixed seed.
    ImportanceSampling { draws: usize, seed: u64 },
}

impl NormalizationStrategy {
    pub const DEFAULT_QUADRATURE_POINTS: usize = 512;
    pub const DEFAULT_IS_DRAWS: usize = 200_000;
    pub const DEFAULT_IS_SEED: u64 = 0x5eed_cafe;

    pub fn quadrature() -> Self {
        Self::ExactQuadrature {
            points_per_axis: Self::DEFAULT_QUADRATURE_POINTS,
        }
    }

    pub fn importance_sampling() -> Self {
        Self::ImportanceSampling {
            draws: Self::DEFAULT_IS_DRAWS,
            seed: Self::DEFAULT_IS_SEED,
        }
    }

    /// Default selection: quadrature for p <= 2, the concentrated
    /// approximation for larger positive-definite models, importance
    /// sampling otherwise.
    pub fn auto(params: &SineModelParams) -> Self {
        if params.dim() <= 2 {
            Self::quadrature()
        } else {
            let (_, pd) = precision_from_params(params);
            if pd {
                Self::ConcentratedApproximation
            } else {
                Self::importance_sampling()
            }
        }
    }
}

/// The exponent of the sine density at `theta`; finite for all inputs.
pub fn log_unnormalized_density(theta: &[f64], params: &SineModelParams) -> Result<f64> {
    let p = params.dim();
    if theta.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: theta.len(),
        });
    }
    let mut cos_term = 0.0;
    let mut sines = [0.0f64; 8];
    let mut sines_vec;
    let s: &mut [f64] = if p <= 8 {
        &mut sines[..p]
    } else {
        sines_vec = vec![0.0; p];
        &mut sines_vec
    };
    for j in 0..p {
        let (sj, cj) = (theta[j] - params.mu[j].radians()).sin_cos();
        cos_term += params.kappa[j] * cj;
        s[j] = sj;
    }
    let mut quad = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            quad += params.lambda[(i, j)] * s[i] * s[j];
        }
    }
    Ok(cos_term + quad)
}

/// Log normalizing constant `log C` such that the density integrates to one
/// (exactly up to grid error for quadrature, approximately otherwise).
pub fn log_norm_const(params: &SineModelParams, strategy: &NormalizationStrategy) -> Result<f64> {
    match *strategy {
        NormalizationStrategy::ExactQuadrature { points_per_axis } => {
            if params.dim() > 2 {
                return Err(Error::StrategyInvalid(format!(
                    "exact quadrature is only available for p <= 2, got p = {}",
                    params.dim()
                )));
            }
            if points_per_axis < 8 {
                return Err(Error::StrategyInvalid(
                    "quadrature needs at least 8 points per axis".into(),
                ));
            }
            Ok(log_norm_const_quadrature(params, points_per_axis))
        }
        NormalizationStrategy::ConcentratedApproximation => {
            let (p_matrix, pd) = precision_from_params(params);
            if !pd {
                return Err(Error::StrategyInvalid(
                    "concentrated approximation requires a positive-definite precision matrix"
                        .into(),
                ));
            }
            let chol = p_matrix
                .cholesky()
                .ok_or_else(|| Error::SingularMatrix("precision not factorizable".into()))?;
            let log_det_p: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
            let kappa_sum: f64 = params.kappa.iter().sum();
            Ok(0.5 * params.dim() as f64 * TAU.ln() - 0.5 * log_det_p + kappa_sum)
        }
        NormalizationStrategy::ImportanceSampling { draws, seed } => {
            if draws == 0 {
                return Err(Error::StrategyInvalid(
                    "importance sampling needs at least one draw".into(),
                ));
            }
            Ok(log_norm_const_importance(params, draws, seed))
        }
    }
}

/// Periodic-rectangle quadrature. For p = 2 the first axis is integrated
/// analytically: the integral of exp(a cos u + b sin u) over one period is
/// 2 pi I0(sqrt(a^2 + b^2)), leaving a one-dimensional smooth integrand.
fn log_norm_const_quadrature(params: &SineModelParams, n_points: usize) -> f64 {
    let step = TAU / n_points as f64;
    match params.dim() {
        1 => {
            let kappa = params.kappa[0];
            let vals: Vec<f64> = (0..n_points)
                .map(|k| kappa * (step * k as f64).cos())
                .collect();
            log_sum_exp(&vals) + step.ln()
        }
        2 => {
            let (k1, k2) = (params.kappa[0], params.kappa[1]);
            let lam = params.lambda[(0, 1)];
            let vals: Vec<f64> = (0..n_points)
                .map(|k| {
                    let v = step * k as f64;
                    let (sv, cv) = v.sin_cos();
                    let tilt = (k1 * k1 + lam * lam * sv * sv).sqrt();
                    k2 * cv + bessel::log_i0(tilt)
                })
                .collect();
            TAU.ln() + log_sum_exp(&vals) + step.ln()
        }
        _ => unreachable!("quadrature is gated to p <= 2"),
    }
}

/// Self-normalized importance sampling from the product von Mises proposal
/// q = prod_j VM(mu_j, kappa_j). The cosine part of the exponent cancels
/// against the proposal, leaving the bounded weight
/// exp(1/2 s^T Lambda s) * prod_j 2 pi I0(kappa_j).
fn log_norm_const_importance(params: &SineModelParams, draws: usize, seed: u64) -> f64 {
    let p = params.dim();
    let mut rng = rng_from_seed(seed);
    let mut log_weights = Vec::with_capacity(draws);
    let mut sines = vec![0.0f64; p];
    for _ in 0..draws {
        for (j, s) in sines.iter_mut().enumerate() {
            let u = draw_von_mises(&mut rng, 0.0, params.kappa[j]);
            *s = u.sin();
        }
        let mut quad = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                quad += params.lambda[(i, j)] * sines[i] * sines[j];
            }
        }
        log_weights.push(quad);
    }
    let log_proposal_const: f64 = params
        .kappa
        .iter()
        .map(|&k| TAU.ln() + bessel::log_i0(k))
        .sum();
    log_proposal_const + log_sum_exp(&log_weights) - (draws as f64).ln()
}

/// Normalized log-density at a single point.
pub fn log_density(
    theta: &[f64],
    params: &SineModelParams,
    strategy: &NormalizationStrategy,
) -> Result<f64> {
    Ok(log_unnormalized_density(theta, params)? - log_norm_const(params, strategy)?)
}

/// Normalized log-density at every row of `points`, computing the
/// normalizing constant once.
pub fn log_density_batch(
    points: &TorusSample,
    params: &SineModelParams,
    strategy: &NormalizationStrategy,
) -> Result<Vec<f64>> {
    let log_c = log_norm_const(params, strategy)?;
    points
        .rows()
        .map(|row| Ok(log_unnormalized_density(row, params)? - log_c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::wrap;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn ang(x: f64) -> Angle {
        wrap(x).unwrap()
    }

    /// Independent series oracle for I0.
    fn i0_oracle(x: f64) -> f64 {
        let q = 0.25 * x * x;
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for k in 1..400 {
            term *= q / ((k * k) as f64);
            sum += term;
        }
        sum
    }

    /// Full tensor-grid quadrature of the *normalized* density, independent
    /// of the reduction used inside log_norm_const.
    fn integrate_density_2d(params: &SineModelParams, strategy: &NormalizationStrategy) -> f64 {
        let n = 512;
        let step = TAU / n as f64;
        let log_c = log_norm_const(params, strategy).unwrap();
        let mut total = 0.0;
        for a in 0..n {
            for b in 0..n {
                let theta = [step * a as f64, step * b as f64];
                let e = log_unnormalized_density(&theta, params).unwrap();
                total += (e - log_c).exp();
            }
        }
        total * step * step
    }

    #[test]
    fn precision_mapping_examples() {
        let p1 = DMatrix::from_row_slice(1, 1, &[2.0]);
        let (kappa, lambda) = params_from_precision(&p1).unwrap();
        assert_eq!(kappa, vec![2.0]);
        assert_eq!(lambda[(0, 0)], 0.0);

        let p2 = DMatrix::from_row_slice(2, 2, &[10.0, -15.0, -15.0, 20.0]);
        let (kappa, lambda) = params_from_precision(&p2).unwrap();
        assert_eq!(kappa, vec![10.0, 20.0]);
        assert_eq!(lambda[(0, 1)], 15.0);

        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 2.0]);
        assert!(params_from_precision(&bad).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 2.0]);
        assert!(params_from_precision(&asym).is_err());
    }

    #[test]
    fn precision_round_trip_is_exact() {
        let p = DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.5, -1.0, 6.0, -2.0, 0.5, -2.0, 9.0]);
        let (kappa, lambda) = params_from_precision(&p).unwrap();
        let params =
            SineModelParams::new(vec![ang(0.0), ang(0.0), ang(0.0)], kappa, lambda).unwrap();
        let (back, _) = precision_from_params(&params);
        assert_eq!(back, p);
    }

    #[test]
    fn pd_flags_match_determinants() {
        let m = SineModelParams::bivariate([ang(0.0), ang(0.0)], [5.0, 10.0], 5.0).unwrap();
        let (p, pd) = precision_from_params(&m);
        assert!(pd);
        assert_abs_diff_eq!(p.determinant(), 25.0, epsilon = 1e-9);

        let m = SineModelParams::bivariate([ang(0.0), ang(0.0)], [10.0, 20.0], 15.0).unwrap();
        let (p, pd) = precision_from_params(&m);
        assert!(!pd);
        assert_abs_diff_eq!(p.determinant(), -25.0, epsilon = 1e-9);

        let m =
            SineModelParams::independent(vec![ang(0.0), ang(1.0)], vec![1.0, 2.0]).unwrap();
        let (_, pd) = precision_from_params(&m);
        assert!(pd);
    }

    #[test]
    fn exponent_values() {
        // At the mode the exponent is the sum of concentrations.
        let m = SineModelParams::bivariate([ang(0.4), ang(1.2)], [10.0, 20.0], 15.0).unwrap();
        let theta = [0.4, 1.2];
        assert_abs_diff_eq!(
            log_unnormalized_density(&theta, &m).unwrap(),
            30.0,
            epsilon = 1e-12
        );

        let m1 = SineModelParams::independent(vec![ang(0.0)], vec![1.0]).unwrap();
        assert_abs_diff_eq!(
            log_unnormalized_density(&[PI], &m1).unwrap(),
            -1.0,
            epsilon = 1e-12
        );

        // Quadratic interaction at a quarter turn in both coordinates.
        let m = SineModelParams::bivariate([ang(0.0), ang(0.0)], [10.0, 20.0], 15.0).unwrap();
        let v = log_unnormalized_density(&[PI / 2.0, PI / 2.0], &m).unwrap();
        assert_abs_diff_eq!(v, 15.0, epsilon = 1e-12);

        assert!(log_unnormalized_density(&[0.1], &m).is_err());
    }

    #[test]
    fn univariate_norm_const_matches_bessel() {
        let strategy = NormalizationStrategy::quadrature();
        for &k in &[0.5, 1.0, 5.0, 20.0] {
            let m = SineModelParams::independent(vec![ang(0.0)], vec![k]).unwrap();
            let got = log_norm_const(&m, &strategy).unwrap();
            let want = (TAU * i0_oracle(k)).ln();
            assert!(
                (got - want).abs() / want.abs() < 1e-10,
                "kappa={k}: {got} vs {want}"
            );
        }
        // Frozen reference for kappa = 1.
        let m = SineModelParams::independent(vec![ang(0.0)], vec![1.0]).unwrap();
        assert_abs_diff_eq!(
            log_norm_const(&m, &strategy).unwrap(),
            2.073_791_424_916_524,
            epsilon = 1e-10
        );
    }

    #[test]
    fn near_uniform_limit() {
        let m = SineModelParams::independent(vec![ang(0.0)], vec![1e-4]).unwrap();
        let got = log_norm_const(&m, &NormalizationStrategy::quadrature()).unwrap();
        assert_abs_diff_eq!(got, TAU.ln(), epsilon = 1e-4);
    }

    #[test]
    fn concentrated_approximation_close_to_quadrature() {
        let m = SineModelParams::bivariate([ang(0.0), ang(0.0)], [5.0, 10.0], 5.0).unwrap();
        let quad = log_norm_const(&m, &NormalizationStrategy::quadrature()).unwrap();
        let conc = log_norm_const(&m, &NormalizationStrategy::ConcentratedApproximation).unwrap();
        // Frozen quadrature value for this parameter set.
        assert_abs_diff_eq!(quad, 15.163_618_947_017_897, epsilon = 1e-9);
        assert!((conc - quad).abs() / quad.abs() < 0.05);
    }

    #[test]
    fn concentrated_rejects_non_pd() {
        let m = SineModelParams::bivariate([ang(0.0), ang(0.0)], [10.0, 20.0], 15.0).unwrap();
        assert!(matches!(
            log_norm_const(&m, &NormalizationStrategy::ConcentratedApproximation),
            Err(Error::StrategyInvalid(_))
        ));
        // Auto selection falls back to importance sampling for p > 2 non-PD.
        let blocks = [
            m.clone(),
            SineModelParams::independent(vec![ang(0.0)], vec![30.0]).unwrap(),
        ];
        let joined = SineModelParams::block_diagonal(&blocks).unwrap();
        assert!(matches!(
            NormalizationStrategy::auto(&joined),
            NormalizationStrategy::ImportanceSampling { .. }
        ));
    }

    #[test]
    fn importance_sampling_close_to_quadrature() {
        let m = SineModelParams::bivariate([ang(0.3), ang(2.0)], [5.0, 10.0], 5.0).unwrap();
        let quad = log_norm_const(&m, &NormalizationStrategy::quadrature()).unwrap();
        let is = log_norm_const(
            &m,
            &NormalizationStrategy::ImportanceSampling {
                draws: 100_000,
                seed: 9,
            },
        )
        .unwrap();
        assert!((is - quad).abs() < 0.01, "is={is} quad={quad}");
        // Deterministic given the seed.
        let is2 = log_norm_const(
            &m,
            &NormalizationStrategy::ImportanceSampling {
                draws: 100_000,
                seed: 9,
            },
        )
        .unwrap();
        assert_eq!(is, is2);
    }

    #[test]
    fn log_density_reference_value() {
        let m = SineModelParams::independent(vec![ang(0.0)], vec![1.0]).unwrap();
        let v = log_density(&[0.0], &m, &NormalizationStrategy::quadrature()).unwrap();
        assert_abs_diff_eq!(v, 1.0 - 2.073_791_424_916_524, epsilon = 1e-10);
    }

    #[test]
    fn density_even_around_mode_without_interaction() {
        let m = SineModelParams::independent(vec![ang(1.0), ang(2.0)], vec![3.0, 7.0]).unwrap();
        let s = NormalizationStrategy::quadrature();
        for d in [0.3, 1.1, 2.9] {
            let plus = log_density(&[1.0 + d, 2.0 + d], &m, &s).unwrap();
            let minus = log_density(&[1.0 - d, 2.0 - d], &m, &s).unwrap();
            assert_abs_diff_eq!(plus, minus, epsilon = 1e-12);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let cases = [
            SineModelParams::bivariate([ang(0.0), ang(0.0)], [5.0, 10.0], 5.0).unwrap(),
            SineModelParams::bivariate([ang(1.0), ang(4.0)], [10.0, 20.0], 15.0).unwrap(),
        ];
        for m in &cases {
            let mass = integrate_density_2d(m, &NormalizationStrategy::quadrature());
            assert!((mass - 1.0).abs() < 1e-4, "mass = {mass}");
        }
    }

    #[test]
    fn concentrated_error_shrinks_with_concentration() {
        let mut gaps = Vec::new();
        for scale in [1.0, 4.0, 16.0] {
            let m = SineModelParams::bivariate(
                [ang(0.0), ang(0.0)],
                [5.0 * scale, 10.0 * scale],
                5.0 * scale,
            )
            .unwrap();
            let quad = log_norm_const(&m, &NormalizationStrategy::quadrature()).unwrap();
            let conc =
                log_norm_const(&m, &NormalizationStrategy::ConcentratedApproximation).unwrap();
            gaps.push((conc - quad).abs());
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps = {gaps:?}");
    }

    #[test]
    fn shift_equivariance() {
        let m = SineModelParams::bivariate([ang(0.5), ang(1.5)], [4.0, 6.0], 2.0).unwrap();
        let s = NormalizationStrategy::quadrature();
        let c = [0.7, -1.3];
        let shifted = SineModelParams::bivariate(
            [ang(0.5 + c[0]), ang(1.5 + c[1])],
            [4.0, 6.0],
            2.0,
        )
        .unwrap();
        for theta in [[0.0, 0.0], [2.0, 5.0], [3.9, 1.1]] {
            let a = log_density(&theta, &m, &s).unwrap();
            let moved = [theta[0] + c[0], theta[1] + c[1]];
            let b = log_density(&moved, &shifted, &s).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn batch_matches_scalar() {
        let m = SineModelParams::bivariate([ang(0.0), ang(0.0)], [5.0, 10.0], 5.0).unwrap();
        let s = NormalizationStrategy::quadrature();
        let pts = TorusSample::from_radians(3, 2, &[0.0, 0.0, 1.0, 2.0, 4.0, 5.5]).unwrap();
        let batch = log_density_batch(&pts, &m, &s).unwrap();
        for (i, row) in pts.rows().enumerate() {
            assert_eq!(batch[i], log_density(row, &m, &s).unwrap());
        }
    }
}
