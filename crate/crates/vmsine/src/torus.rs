//! Angles, samples on the p-dimensional torus, and classical circular
//! summary statistics.
//!
//! All angles are kept in the canonical interval [0, 2pi). Figures and file
//! exports that prefer [-pi, pi) convert at the presentation boundary only.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Resultant lengths below this are treated as a degenerate direction.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// An angle in canonical form: 0 <= radians < 2pi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(f64);

impl Angle {
    /// Wraps an arbitrary finite value into [0, 2pi).
    pub fn wrap(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::NonFiniteAngle(radians));
        }
        Ok(Self(wrap_raw(radians)))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// The same angle expressed in [-pi, pi), for presentation.
    pub fn signed(self) -> f64 {
        if self.0 >= PI {
            self.0 - TAU
        } else {
            self.0
        }
    }
}

pub(crate) fn wrap_raw(radians: f64) -> f64 {
    debug_assert!(radians.is_finite());
    let r = radians.rem_euclid(TAU);
    // rem_euclid can return exactly 2pi when the argument is a tiny negative.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed angular difference a - b wrapped into [-pi, pi).
pub fn angular_difference(a: f64, b: f64) -> f64 {
    let d = wrap_raw(a - b);
    if d >= PI {
        d - TAU
    } else {
        d
    }
}

/// Wraps an arbitrary finite value into [0, 2pi) (free-function form).
pub fn wrap(radians: f64) -> Result<Angle> {
    Angle::wrap(radians)
}

/// An n x p matrix of angles: n observations on the torus T^p.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSample {
    n: usize,
    p: usize,
    angles: Vec<f64>, // row-major, wrapped
}

impl TorusSample {
    /// Builds a sample from row-major radians, wrapping every entry.
    pub fn from_radians(n: usize, p: usize, values: &[f64]) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::EmptySample);
        }
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                got: values.len(),
            });
        }
        let mut angles = Vec::with_capacity(n * p);
        for &v in values {
            if !v.is_finite() {
                return Err(Error::NonFiniteAngle(v));
            }
            angles.push(wrap_raw(v));
        }
        Ok(Self { n, p, angles })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        let p = rows[0].len();
        let mut flat = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_radians(rows.len(), p, &flat)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.angles[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.angles.chunks_exact(self.p)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.angles[i * self.p + j]).collect()
    }

    /// Sample restricted to the given observation indices, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut flat = Vec::with_capacity(indices.len() * self.p);
        for &i in indices {
            flat.extend_from_slice(self.row(i));
        }
        Self::from_radians(indices.len(), self.p, &flat)
    }
}

/// Per-dimension mean direction: atan2 of the sine mean over the cosine mean.
///
/// Errors with a degenerate-direction report when the mean resultant length
/// of some dimension falls below [`DEGENERACY_THRESHOLD`].
pub fn mean_direction(sample: &TorusSample) -> Result<Vec<Angle>> {
    let (dirs, lens) = trig_moments(sample);
    for (j, &len) in lens.iter().enumerate() {
        if len < DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateDirection {
                dim: j,
                resultant: len,
            });
        }
    }
    Ok(dirs)
}

/// Per-dimension mean resultant length, in [0, 1].
pub fn mean_resultant_length(sample: &TorusSample) -> Vec<f64> {
    trig_moments(sample).1
}

fn trig_moments(sample: &TorusSample) -> (Vec<Angle>, Vec<f64>) {
    let n = sample.n() as f64;
    let p = sample.dim();
    let mut cos_sum = vec![0.0; p];
    let mut sin_sum = vec![0.0; p];
    for row in sample.rows() {
        for j in 0..p {
            let (s, c) = row[j].sin_cos();
            cos_sum[j] += c;
            sin_sum[j] += s;
        }
    }
    let mut dirs = Vec::with_capacity(p);
    let mut lens = Vec::with_capacity(p);
    for j in 0..p {
        let (cb, sb) = (cos_sum[j] / n, sin_sum[j] / n);
        dirs.push(Angle(wrap_raw(sb.atan2(cb))));
        lens.push((cb * cb + sb * sb).sqrt().min(1.0));
    }
    (dirs, lens)
}

/// Jammalamadaka-SenGupta circular correlation coefficient of two columns.
pub fn circular_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::EmptySample);
    }
    let col = |v: &[f64]| -> Result<TorusSample> { TorusSample::from_radians(v.len(), 1, v) };
    let abar = mean_direction(&col(a)?)?[0].radians();
    let bbar = mean_direction(&col(b)?)?[0].radians();
    let mut num = 0.0;
    let mut da2 = 0.0;
    let mut db2 = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let sa = (x - abar).sin();
        let sb = (y - bbar).sin();
        num += sa * sb;
        da2 += sa * sa;
        db2 += sb * sb;
    }
    let denom = (da2 * db2).sqrt();
    if denom < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateCorrelation);
    }
    Ok((num / denom).clamp(-1.0, 1.0))
}
