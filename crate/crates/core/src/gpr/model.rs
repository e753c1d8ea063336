use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::{matern52, MaternKernel};
use super::lml::factorize;
use super::mean::MeanFunction;
use super::FitReport;
use crate::error::{check_finite, check_len, Error, Result};

pub const GP_FORMAT: &str = "cascade-gp-gp/1";

/// Per-dimension affine map fitted on the training inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Zero mean, unit (population) variance per column. Constant columns
    /// keep scale 1.
    pub fn fit(inputs: &DMatrix<f64>) -> Self {
        let n = inputs.nrows().max(1) as f64;
        let (shift, scale) = inputs
            .column_iter()
            .map(|c| {
                let mean = c.sum() / n;
                let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                (mean, if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 })
            })
            .unzip();
        Self { shift, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// D x n matrix of standardized points, one per column.
    pub fn points(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = inputs.transpose();
        for (mut row, (m, s)) in out.row_iter_mut().zip(self.shift.iter().zip(&self.scale)) {
            row.iter_mut().for_each(|v| *v = (*v - m) / s);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// A conditioned Gaussian process for one scalar output.
///
/// Input rows are the kernel features (`input_dim` columns) optionally
/// followed by auxiliary slots that only the mean function reads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GPModel {
    format: String,
    train_inputs: DMatrix<f64>,
    train_aux: DMatrix<f64>,
    train_targets: DVector<f64>,
    kernel: MaternKernel,
    noise_variance: f64,
    /// Diagonal jitter added on top of the noise during factorization.
    jitter: f64,
    mean: MeanFunction,
    standardizer: Standardizer,
    train_mean: DVector<f64>,
    chol_factor: DMatrix<f64>,
    alpha: DVector<f64>,
    fit_report: Option<FitReport>,
    #[serde(skip)]
    points: OnceLock<DMatrix<f64>>,
    #[serde(skip)]
    negative_variance_clamps: Arc<AtomicUsize>,
}

impl GPModel {
    /// Conditions a GP on data at fixed hyperparameters. `kernel` acts on
    /// standardized inputs.
    pub fn condition(
        inputs: &DMatrix<f64>,
        aux: &DMatrix<f64>,
        targets: &DVector<f64>,
        kernel: MaternKernel,
        noise_variance: f64,
        mean: MeanFunction,
    ) -> Result<Self> {
        Self::condition_with(inputs, aux, targets, kernel, noise_variance, mean, Standardizer::fit(inputs), None)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn condition_with(
        inputs: &DMatrix<f64>,
        aux: &DMatrix<f64>,
        targets: &DVector<f64>,
        kernel: MaternKernel,
        noise_variance: f64,
        mean: MeanFunction,
        standardizer: Standardizer,
        fit_report: Option<FitReport>,
    ) -> Result<Self> {
        let n = inputs.nrows();
        if n == 0 {
            return Err(Error::DegenerateDataset { got: 0, need: 1 });
        }
        check_len("training targets", n, targets.len())?;
        check_len("auxiliary rows", n, aux.nrows())?;
        check_len("kernel dimension", inputs.ncols(), kernel.dim())?;
        check_finite("training inputs", inputs.as_slice())?;
        check_finite("training targets", targets.as_slice())?;
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance must be positive, got {noise_variance}")));
        }

        let train_mean = mean_vector(&mean, inputs, aux);
        let residuals = targets - &train_mean;
        let points = standardizer.points(inputs);

        let s2 = kernel.signal_variance();
        let inv_l: Vec<f64> = kernel.lengthscales().iter().map(|l| 1.0 / l).collect();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..j {
                let r2: f64 = points
                    .column(i)
                    .iter()
                    .zip(points.column(j).iter())
                    .zip(&inv_l)
                    .map(|((a, b), il)| ((a - b) * il).powi(2))
                    .sum();
                let v = s2 * matern52(r2.sqrt());
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(j, j)] = s2 + noise_variance;
        }
        let (chol, jitter) = factorize(k)?;
        let alpha = chol.solve(&residuals);
        let chol_factor = chol.l();

        let model = Self {
            format: GP_FORMAT.into(),
            train_inputs: inputs.clone(),
            train_aux: aux.clone(),
            train_targets: targets.clone(),
            kernel,
            noise_variance,
            jitter,
            mean,
            standardizer,
            train_mean,
            chol_factor,
            alpha,
            fit_report,
            points: OnceLock::new(),
            negative_variance_clamps: Arc::default(),
        };
        let _ = model.points.set(points);
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.train_inputs.ncols()
    }

    pub fn aux_dim(&self) -> usize {
        self.train_aux.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.train_inputs.nrows()
    }

    pub fn kernel(&self) -> &MaternKernel {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn mean_function(&self) -> &MeanFunction {
        &self.mean
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol_factor
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn train_inputs(&self) -> &DMatrix<f64> {
        &self.train_inputs
    }

    pub fn train_targets(&self) -> &DVector<f64> {
        &self.train_targets
    }

    pub fn fit_report(&self) -> Option<&FitReport> {
        self.fit_report.as_ref()
    }

    /// How many predictions had a slightly negative variance clamped to 0.
    pub fn negative_variance_clamps(&self) -> usize {
        self.negative_variance_clamps.load(Ordering::Relaxed)
    }

    /// Log hyperparameters `[log l_1.., log s2, log sn2]`.
    pub fn log_hyperparameters(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.kernel.lengthscales().iter().map(|l| l.ln()).collect();
        v.push(self.kernel.signal_variance().ln());
        v.push(self.noise_variance.ln());
        v
    }

    fn points(&self) -> &DMatrix<f64> {
        self.points.get_or_init(|| self.standardizer.points(&self.train_inputs))
    }

    fn split<'a>(&self, row: &'a [f64]) -> Result<&'a [f64]> {
        let d = self.input_dim();
        let a = self.aux_dim();
        if row.len() != d + a {
            return Err(Error::dim("query row", d + a, row.len()));
        }
        check_finite("query row", row)?;
        Ok(&row[..d])
    }

    fn cross_covariance(&self, x: &[f64]) -> DVector<f64> {
        let z = self.standardizer.apply(x);
        let points = self.points();
        let s2 = self.kernel.signal_variance();
        let inv_l: Vec<f64> = self.kernel.lengthscales().iter().map(|l| 1.0 / l).collect();
        DVector::from_iterator(
            points.ncols(),
            points.column_iter().map(|p| {
                let r2: f64 = p
                    .iter()
                    .zip(&z)
                    .zip(&inv_l)
                    .map(|((a, b), il)| ((a - b) * il).powi(2))
                    .sum();
                s2 * matern52(r2.sqrt())
            }),
        )
    }

    /// Posterior mean only; `row` is the kernel features followed by any
    /// auxiliary slots.
    pub fn predict_mean(&self, row: &[f64]) -> Result<f64> {
        let x = self.split(row)?;
        Ok(self.mean.eval(row) + self.cross_covariance(x).dot(&self.alpha))
    }

    /// Posterior mean and predictive variance (including observation noise).
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        let x = self.split(row)?;
        let ks = self.cross_covariance(x);
        let mean = self.mean.eval(row) + ks.dot(&self.alpha);
        let v = self
            .chol_factor
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor has a positive diagonal");
        let mut variance = self.kernel.signal_variance() - v.norm_squared() + self.noise_variance;
        if variance < 0.0 {
            self.negative_variance_clamps.fetch_add(1, Ordering::Relaxed);
            log::warn!("clamping negative predictive variance {variance:e} to 0");
            variance = 0.0;
        }
        Ok(Prediction { mean, variance })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let model: Self = serde_json::from_reader(file)?;
        if model.format != GP_FORMAT {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("unsupported GP format `{}`", model.format),
            });
        }
        Ok(model)
    }
}

pub(crate) fn mean_vector(mean: &MeanFunction, inputs: &DMatrix<f64>, aux: &DMatrix<f64>) -> DVector<f64> {
    if mean.is_zero() {
        return DVector::zeros(inputs.nrows());
    }
    let mut row = Vec::with_capacity(inputs.ncols() + aux.ncols());
    DVector::from_iterator(
        inputs.nrows(),
        (0..inputs.nrows()).map(|i| {
            row.clear();
            row.extend(inputs.row(i).iter());
            row.extend(aux.row(i).iter());
            mean.eval(&row)
        }),
    )
}
