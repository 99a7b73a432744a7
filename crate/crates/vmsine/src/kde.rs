//! Kernel density estimation on the torus with product von Mises kernels.
//!
//! A single concentration bandwidth `k*` indexes every axis. All evaluation
//! is done in log space: the weight machinery divides by these densities, and
//! monitoring sweeps push `k*` far into the range where naive exponentials
//! overflow.

use std::f64::consts::TAU;

use crate::bessel;
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::torus::TorusSample;

/// Product von Mises kernel estimator over a fixed reference sample.
#[derive(Debug, Clone)]
pub struct TorusKde {
    data: TorusSample,
    kstar: f64,
    log_axis_norm: f64,
}

impl TorusKde {
    /// `kstar = 0` is allowed and gives the uniform kernel.
    pub fn new(data: TorusSample, kstar: f64) -> Result<Self> {
        if !kstar.is_finite() || kstar < 0.0 {
            return Err(Error::InvalidParams(format!(
                "bandwidth concentration must be finite and >= 0, got {kstar}"
            )));
        }
        let log_axis_norm = TAU.ln() + bessel::log_i0(kstar);
        Ok(Self {
            data,
            kstar,
            log_axis_norm,
        })
    }

    pub fn kstar(&self) -> f64 {
        self.kstar
    }

    pub fn data(&self) -> &TorusSample {
        &self.data
    }

    /// log f_hat(theta); finite for every theta and finite k*.
    pub fn log_eval(&self, theta: &[f64]) -> Result<f64> {
        let p = self.data.dim();
        if theta.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: theta.len(),
            });
        }
        let mut contributions = Vec::with_capacity(self.data.n());
        for row in self.data.rows() {
            let mut cos_sum = 0.0;
            for j in 0..p {
                cos_sum += (theta[j] - row[j]).cos();
            }
            contributions.push(self.kstar * cos_sum);
        }
        Ok(log_sum_exp(&contributions)
            - (self.data.n() as f64).ln()
            - p as f64 * self.log_axis_norm)
    }

    /// f_hat(theta). May underflow to zero for extreme bandwidths; internal
    /// consumers use [`TorusKde::log_eval`] instead.
    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.log_eval(theta)?.exp())
    }

    pub fn log_eval_batch(&self, points: &TorusSample) -> Result<Vec<f64>> {
        points.rows().map(|row| self.log_eval(row)).collect()
    }

    pub fn eval_batch(&self, points: &TorusSample) -> Result<Vec<f64>> {
        points.rows().map(|row| self.eval(row)).collect()
    }

    /// log f_hat at the reference points themselves, the values entering the
    /// per-observation Pearson residuals.
    pub fn log_eval_at_data(&self) -> Vec<f64> {
        self.data
            .rows()
            .map(|row| self.log_eval(row).expect("dimensions match by construction"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn two_point_kde(kstar: f64) -> TorusKde {
        let data = TorusSample::from_radians(2, 1, &[0.0, PI]).unwrap();
        TorusKde::new(data, kstar).unwrap()
    }

    #[test]
    fn zero_bandwidth_is_uniform() {
        let data = TorusSample::from_radians(3, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let kde = TorusKde::new(data, 0.0).unwrap();
        for theta in [[0.0, 0.0], [1.0, 4.0], [6.0, 2.0]] {
            assert_abs_diff_eq!(
                kde.eval(&theta).unwrap(),
                1.0 / (TAU * TAU),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn reference_value_two_points() {
        // (e + 1/e) / (2 * 2 pi * I0(1)) at theta = 0.
        let kde = two_point_kde(1.0);
        assert_abs_diff_eq!(
            kde.eval(&[0.0]).unwrap(),
            0.193_977_987_193_120_4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn integrates_to_one() {
        let data = TorusSample::from_radians(4, 2, &[0.1, 0.2, 2.0, 1.0, 4.0, 6.0, 3.0, 3.0])
            .unwrap();
        let kde = TorusKde::new(data, 7.0).unwrap();
        let n = 512;
        let step = TAU / n as f64;
        let mut mass = 0.0;
        for a in 0..n {
            for b in 0..n {
                mass += kde.eval(&[step * a as f64, step * b as f64]).unwrap();
            }
        }
        mass *= step * step;
        assert!((mass - 1.0).abs() < 1e-4, "mass = {mass}");
    }

    #[test]
    fn batch_matches_scalar_and_permutes() {
        let data = TorusSample::from_radians(3, 1, &[0.5, 1.5, 2.5]).unwrap();
        let kde = TorusKde::new(data, 3.0).unwrap();
        let pts = TorusSample::from_radians(3, 1, &[0.1, 4.0, 2.2]).unwrap();
        let batch = kde.eval_batch(&pts).unwrap();
        assert_eq!(batch[0], kde.eval(&[0.1]).unwrap());
        let permuted = TorusSample::from_radians(3, 1, &[2.2, 0.1, 4.0]).unwrap();
        let batch2 = kde.eval_batch(&permuted).unwrap();
        assert_eq!(batch2, vec![batch[2], batch[0], batch[1]]);
    }

    #[test]
    fn data_order_does_not_matter() {
        let a = TorusSample::from_radians(3, 1, &[0.5, 1.5, 2.5]).unwrap();
        let b = TorusSample::from_radians(3, 1, &[2.5, 0.5, 1.5]).unwrap();
        let ka = TorusKde::new(a, 4.0).unwrap();
        let kb = TorusKde::new(b, 4.0).unwrap();
        for theta in [0.0, 1.0, 3.3, 6.1] {
            assert_abs_diff_eq!(
                ka.log_eval(&[theta]).unwrap(),
                kb.log_eval(&[theta]).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn self_evaluation_matches_batch_on_data() {
        let data = TorusSample::from_radians(4, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 0.5, 2.5])
            .unwrap();
        let kde = TorusKde::new(data.clone(), 2.0).unwrap();
        assert_eq!(kde.log_eval_at_data(), kde.log_eval_batch(&data).unwrap());
    }

    #[test]
    fn concentration_sharpens_contrast() {
        // Ratio of on-point to far-point density grows with k*.
        let mut last = 0.0;
        for &k in &[1.0, 5.0, 10.0, 50.0] {
            let kde = two_point_kde(k);
            let ratio =
                kde.log_eval(&[0.0]).unwrap() - kde.log_eval(&[PI / 2.0]).unwrap();
            assert!(ratio > last, "k={k}");
            last = ratio;
        }
    }

    #[test]
    fn log_eval_finite_for_huge_bandwidth() {
        let kde = two_point_kde(5000.0);
        let v = kde.log_eval(&[PI / 2.0]).unwrap();
        assert!(v.is_finite());
        assert!(v < -1000.0);
    }
}
