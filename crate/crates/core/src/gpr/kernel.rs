use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn-5/2 covariance with one lengthscale per input dimension.
///
/// `k(x, x') = s2 (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r)` with
/// `r^2 = sum_d (x_d - x'_d)^2 / l_d^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaternKernel {
    lengthscales: Vec<f64>,
    signal_variance: f64,
}

impl MaternKernel {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::InvalidArgument("kernel needs at least one input dimension".into()));
        }
        if lengthscales.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument(format!("lengthscales must be positive: {lengthscales:?}")));
        }
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "signal variance must be positive, got {signal_variance}"
            )));
        }
        Ok(Self {
            lengthscales,
            signal_variance,
        })
    }

    /// Isotropic kernel: the same lengthscale on all `dim` inputs.
    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(vec![lengthscale; dim], signal_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        check_len("kernel input", self.dim(), x.len())?;
        check_len("kernel input", self.dim(), x2.len())?;
        Ok(self.eval_unchecked(x, x2))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        self.signal_variance * matern52(self.scaled_sq_dist(x, x2).sqrt())
    }

    pub(crate) fn scaled_sq_dist(&self, x: &[f64], x2: &[f64]) -> f64 {
        x.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum()
    }
}

/// Unit-variance Matérn-5/2 as a function of scaled distance.
#[inline]
pub(crate) fn matern52(r: f64) -> f64 {
    let s = SQRT5 * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// `-(1/r) dk/dr` for the unit-variance kernel, finite at `r = 0`.
///
/// The derivative of `k` with respect to `log l_d` is this factor times
/// `(x_d - x'_d)^2 / l_d^2`.
#[inline]
pub(crate) fn matern52_lengthscale_factor(r: f64) -> f64 {
    let s = SQRT5 * r;
    (5.0 / 3.0) * (1.0 + s) * (-s).exp()
}
