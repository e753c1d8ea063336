//! Exact Gaussian-process regression with a Matérn-5/2 ARD kernel, arbitrary
//! prior means and multi-restart type-II maximum likelihood.

mod kernel;
mod lml;
mod mean;
mod model;
pub mod optimize;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use lml::LikelihoodProblem;
use optimize::{minimize_bounded, StopRule, Termination};

pub use kernel::MaternKernel;
pub use mean::{MeanFunction, RbdInputs, RbdMean};
pub use model::{GPModel, Prediction, Standardizer, GP_FORMAT};

/// Box on every log-hyperparameter.
pub const LOG_BOUND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub grad_tol: f64,
    pub objective_change_tol: f64,
    pub rng_seed: u64,
    /// Per-dimension lengthscales; a single shared one when false.
    pub ard: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            max_iterations: 500,
            grad_tol: 1e-5,
            objective_change_tol: 2e-9,
            rng_seed: 0,
            ard: true,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidArgument("restarts must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) || !(self.objective_change_tol > 0.0) {
            return Err(Error::InvalidArgument("optimizer tolerances must be positive".into()));
        }
        Ok(())
    }

    fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iterations: self.max_iterations,
            grad_tol: self.grad_tol,
            objective_change_tol: self.objective_change_tol,
        }
    }
}

/// Outcome of one optimizer restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRun {
    pub iterations: usize,
    pub evaluations: usize,
    /// `None` when the restart failed to evaluate at its starting point.
    pub log_marginal_likelihood: Option<f64>,
    pub termination: Option<Termination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub runs: Vec<FitRun>,
    pub best_run: usize,
}

impl FitReport {
    pub fn mean_iterations(&self) -> f64 {
        self.runs.iter().map(|r| r.iterations as f64).sum::<f64>() / self.runs.len() as f64
    }

    pub fn mean_evaluations(&self) -> f64 {
        self.runs.iter().map(|r| r.evaluations as f64).sum::<f64>() / self.runs.len() as f64
    }
}

/// Log marginal likelihood of `targets - mean(inputs)` under a zero-mean GP
/// with the given kernel, evaluated on `inputs` as given (no
/// standardization). The gradient is taken with respect to
/// `[log l_1.., log s2, log sn2]`.
pub fn log_marginal_likelihood(
    inputs: &DMatrix<f64>,
    targets: &DVector<f64>,
    kernel: &MaternKernel,
    noise_variance: f64,
    mean: &MeanFunction,
) -> Result<(f64, DVector<f64>)> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::DegenerateDataset { got: 0, need: 1 });
    }
    check_len("training targets", n, targets.len())?;
    check_len("kernel dimension", inputs.ncols(), kernel.dim())?;
    if !(noise_variance > 0.0) {
        return Err(Error::InvalidArgument("noise variance must be positive".into()));
    }
    let residuals = targets - model::mean_vector(mean, inputs, &DMatrix::zeros(n, 0));
    let points = inputs.transpose();
    let problem = LikelihoodProblem {
        points: &points,
        residuals: &residuals,
        ard: true,
    };
    let mut theta: Vec<f64> = kernel.lengthscales().iter().map(|l| l.ln()).collect();
    theta.push(kernel.signal_variance().ln());
    theta.push(noise_variance.ln());
    let (v, g) = problem.evaluate(&theta)?;
    Ok((v, DVector::from_vec(g)))
}

/// Fits hyperparameters by maximizing the log marginal likelihood and
/// returns the conditioned model.
pub fn fit(inputs: &DMatrix<f64>, targets: &DVector<f64>, mean: MeanFunction, config: &OptConfig) -> Result<GPModel> {
    fit_with_aux(inputs, &DMatrix::zeros(inputs.nrows(), 0), targets, mean, config)
}

/// As [`fit`], with auxiliary columns that only the mean function reads.
pub fn fit_with_aux(
    inputs: &DMatrix<f64>,
    aux: &DMatrix<f64>,
    targets: &DVector<f64>,
    mean: MeanFunction,
    config: &OptConfig,
) -> Result<GPModel> {
    config.validate()?;
    let n = inputs.nrows();
    if n == 0 || inputs.ncols() == 0 {
        return Err(Error::DegenerateDataset { got: n, need: 1 });
    }
    check_len("training targets", n, targets.len())?;
    check_len("auxiliary rows", n, aux.nrows())?;
    check_finite("training inputs", inputs.as_slice())?;
    check_finite("training targets", targets.as_slice())?;

    let standardizer = Standardizer::fit(inputs);
    let points = standardizer.points(inputs);
    let residuals = targets - model::mean_vector(&mean, inputs, aux);
    let problem = LikelihoodProblem {
        points: &points,
        residuals: &residuals,
        ard: config.ard,
    };

    let theta0 = initial_log_params(&residuals, targets, problem.n_lengthscales());
    let np = problem.n_params();
    let lower = vec![-LOG_BOUND; np];
    let upper = vec![LOG_BOUND; np];
    let rule = config.stop_rule();

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let starts: Vec<Vec<f64>> = (0..config.restarts)
        .map(|r| {
            theta0
                .iter()
                .map(|v| {
                    let offset = if r == 0 { 0.0 } else { rng.random_range(-2.0..=2.0) };
                    (v + offset).clamp(-LOG_BOUND, LOG_BOUND)
                })
                .collect()
        })
        .collect();

    let mut runs = Vec::with_capacity(starts.len());
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut last_error = String::new();
    for (r, start) in starts.iter().enumerate() {
        let objective = |theta: &[f64]| match problem.evaluate(theta) {
            Ok((v, g)) => Some((-v, g.into_iter().map(|x| -x).collect())),
            Err(e) => {
                last_error = e.to_string();
                None
            }
        };
        match minimize_bounded(objective, start, &lower, &upper, &rule) {
            Some(m) => {
                let lml = -m.value;
                runs.push(FitRun {
                    iterations: m.iterations,
                    evaluations: m.evaluations,
                    log_marginal_likelihood: Some(lml),
                    termination: Some(m.termination),
                });
                if best.as_ref().is_none_or(|(_, b, _)| lml > *b) {
                    best = Some((r, lml, m.x));
                }
            }
            None => runs.push(FitRun {
                iterations: 0,
                evaluations: 1,
                log_marginal_likelihood: None,
                termination: None,
            }),
        }
    }

    let Some((best_run, _, theta)) = best else {
        return Err(Error::AllRestartsFailed {
            restarts: config.restarts,
            last: last_error,
        });
    };
    let nl = problem.n_lengthscales();
    let kernel = MaternKernel::new(problem.lengthscales(&theta), theta[nl].exp())?;
    GPModel::condition_with(
        inputs,
        aux,
        targets,
        kernel,
        theta[nl + 1].exp(),
        mean,
        standardizer,
        Some(FitReport { runs, best_run }),
    )
}

/// Lengthscales 1 on standardized inputs, signal variance = residual
/// variance, noise = 1% of it. Residuals that vanish (an exact prior mean)
/// fall back to a tiny fraction of the target variance.
fn initial_log_params(residuals: &DVector<f64>, targets: &DVector<f64>, n_lengthscales: usize) -> Vec<f64> {
    let var = |v: &DVector<f64>| {
        let m = v.mean();
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    let floor = 1e-8 * var(targets).max(1.0);
    let signal = var(residuals).max(floor);
    let mut theta = vec![0.0; n_lengthscales];
    theta.push(signal.ln().clamp(-LOG_BOUND, LOG_BOUND));
    theta.push((0.01 * signal).ln().clamp(-LOG_BOUND, LOG_BOUND));
    theta
}
