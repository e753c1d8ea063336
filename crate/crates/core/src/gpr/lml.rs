//! Log marginal likelihood of a zero-mean GP on residual targets, and its
//! gradient with respect to log-hyperparameters.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{matern52, matern52_lengthscale_factor};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Factorizes `K` (which already includes the noise on its diagonal),
/// escalating diagonal jitter from `1e-10` to `1e-4` times the mean diagonal.
/// Returns the factor and the jitter that was added.
pub(crate) fn factorize(mut k: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    if let Some(c) = k.clone().cholesky() {
        return Ok((c, 0.0));
    }
    let base = k.trace() / n as f64;
    let mut jitter = 1e-10 * base;
    let mut added = 0.0;
    while jitter <= 1e-4 * base * (1.0 + 1e-9) {
        for i in 0..n {
            k[(i, i)] += jitter - added;
        }
        added = jitter;
        if let Some(c) = k.clone().cholesky() {
            log::debug!("Gram matrix needed jitter {jitter:e}");
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::Factorization { jitter: added })
}

/// `K^-1` from the lower Cholesky factor of `K`; only the lower triangle of
/// `l` is read. Both passes work on contiguous column slices.
pub(crate) fn inverse_from_factor(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    // m = L^-1, lower triangular, built column by column.
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = m.column_mut(j);
        let x = col.as_mut_slice();
        x[j] = 1.0;
        for k in j..n {
            let lk = l.column(k);
            let lk = lk.as_slice();
            x[k] /= lk[k];
            let xk = x[k];
            for (xi, li) in x[k + 1..].iter_mut().zip(&lk[k + 1..]) {
                *xi -= xk * li;
            }
        }
    }
    // K^-1 = m^T m; entry (i, j) is a dot product of columns from max(i, j) down.
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        let cj = m.column(j);
        let cj = cj.as_slice();
        for i in 0..=j {
            let ci = m.column(i);
            let ci = ci.as_slice();
            let v: f64 = ci[j..].iter().zip(&cj[j..]).map(|(a, b)| a * b).sum();
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    inv
}

/// Everything needed to evaluate the likelihood for one input set.
/// `points` is D x n: column `j` is the (standardized) feature vector of
/// training point `j`.
pub(crate) struct LikelihoodProblem<'a> {
    pub points: &'a DMatrix<f64>,
    pub residuals: &'a DVector<f64>,
    /// Per-dimension lengthscales when true, one shared lengthscale otherwise.
    pub ard: bool,
}

impl LikelihoodProblem<'_> {
    pub fn n_lengthscales(&self) -> usize {
        if self.ard {
            self.points.nrows()
        } else {
            1
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_lengthscales() + 2
    }

    /// Expands a log-lengthscale block into one lengthscale per dimension.
    pub fn lengthscales(&self, log_params: &[f64]) -> Vec<f64> {
        let d = self.points.nrows();
        if self.ard {
            log_params[..d].iter().map(|v| v.exp()).collect()
        } else {
            vec![log_params[0].exp(); d]
        }
    }

    fn gram(&self, inv_l: &[f64], signal: f64, noise: f64) -> DMatrix<f64> {
        let n = self.points.ncols();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n {
            let pj = self.points.column(j);
            for i in 0..j {
                let pi = self.points.column(i);
                let r2: f64 = pi
                    .iter()
                    .zip(pj.iter())
                    .zip(inv_l)
                    .map(|((a, b), il)| {
                        let d = (a - b) * il;
                        d * d
                    })
                    .sum();
                let v = signal * matern52(r2.sqrt());
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(j, j)] = signal + noise;
        }
        k
    }

    /// Returns `(lml, d lml / d log_params)`. Parameter layout:
    /// log-lengthscales, then log signal variance, then log noise variance.
    pub fn evaluate(&self, log_params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = self.points.nrows();
        let n = self.points.ncols();
        let nl = self.n_lengthscales();
        let lengthscales = self.lengthscales(log_params);
        let inv_l: Vec<f64> = lengthscales.iter().map(|l| 1.0 / l).collect();
        let signal = log_params[nl].exp();
        let noise = log_params[nl + 1].exp();

        let (chol, _) = factorize(self.gram(&inv_l, signal, noise))?;
        let alpha = chol.solve(self.residuals);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
        let lml = -0.5 * self.residuals.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * LN_2PI;

        // d lml / d theta = 0.5 tr(W dK/dtheta), W = alpha alpha^T - K^-1.
        let k_inv = inverse_from_factor(chol.l_dirty());
        let mut grad_l = vec![0.0; d];
        let mut grad_signal = 0.0;
        let mut diag_w = 0.0;
        for j in 0..n {
            let pj = self.points.column(j);
            for i in 0..j {
                let w = alpha[i] * alpha[j] - k_inv[(i, j)];
                let pi = self.points.column(i);
                let mut r2 = 0.0;
                for ((a, b), il) in pi.iter().zip(pj.iter()).zip(&inv_l) {
                    let t = (a - b) * il;
                    r2 += t * t;
                }
                let r = r2.sqrt();
                grad_signal += w * signal * matern52(r);
                let wf = w * signal * matern52_lengthscale_factor(r);
                for ((g, (a, b)), il) in grad_l.iter_mut().zip(pi.iter().zip(pj.iter())).zip(&inv_l) {
                    let t = (a - b) * il;
                    *g += wf * t * t;
                }
            }
            diag_w += alpha[j] * alpha[j] - k_inv[(j, j)];
        }
        grad_signal += 0.5 * diag_w * signal;
        let grad_noise = 0.5 * diag_w * noise;

        let mut grad = if self.ard { grad_l } else { vec![grad_l.iter().sum()] };
        grad.push(grad_signal);
        grad.push(grad_noise);
        Ok((lml, grad))
    }
}
