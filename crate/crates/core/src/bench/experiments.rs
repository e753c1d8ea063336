use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::metrics::{nrmse, spearman_matrix};
use crate::datasets::RawTrajectory;
use crate::error::{Error, Result};
use crate::gpr::OptConfig;
use crate::kinchain::KinematicChain;
use crate::learner::{self, ModelVariant, TrainOptions, TrainingSet};

/// One trained model evaluated on one joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurvePoint {
    pub variant: String,
    pub subset_id: usize,
    pub duration_s: f64,
    pub joint: usize,
    pub nrmse: f64,
    pub n_train: usize,
    /// Optimizer iterations averaged over restarts.
    pub fit_iterations: f64,
    pub fit_evaluations: f64,
    /// Wall time of training the whole model.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub variant: String,
    pub duration_s: f64,
    pub joint: usize,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<LearningCurvePoint>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

impl ResultTable {
    /// Mean and sample standard deviation across subsets for every
    /// (variant, duration, joint), in first-appearance order.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(String, f64, usize)> = Vec::new();
        for r in &self.rows {
            let k = (r.variant.clone(), r.duration_s, r.joint);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(variant, duration_s, joint)| {
                let cell: Vec<&LearningCurvePoint> = self
                    .rows
                    .iter()
                    .filter(|r| r.variant == variant && r.duration_s == duration_s && r.joint == joint)
                    .collect();
                let errs: Vec<f64> = cell.iter().map(|r| r.nrmse).collect();
                let (mean, std) = mean_std(&errs);
                let mean_iterations = cell.iter().map(|r| r.fit_iterations).sum::<f64>() / cell.len() as f64;
                AggregateRow {
                    variant,
                    duration_s,
                    joint,
                    mean,
                    std,
                    count: cell.len(),
                    mean_iterations,
                }
            })
            .collect()
    }

    /// Mean nRMSE per (variant, joint) over points with duration in
    /// `[t - 1, t]`, or `None` where the window is empty.
    pub fn summary_at(&self, t: f64, variant: &str, joint: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.variant == variant && r.joint == joint && r.duration_s >= t - 1.0 - 1e-9 && r.duration_s <= t + 1e-9)
            .map(|r| r.nrmse)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn variants(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.variant) {
                out.push(r.variant.clone());
            }
        }
        out
    }

    pub fn joints(&self) -> Vec<usize> {
        let mut j: Vec<usize> = self.rows.iter().map(|r| r.joint).collect();
        j.sort_unstable();
        j.dedup();
        j
    }
}

/// `count` durations spaced logarithmically from `from` to `to` seconds.
pub fn log_durations(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count <= 1 || to <= from {
        return vec![to];
    }
    (0..count)
        .map(|k| from * (to / from).powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// Per-cell seed derived from the experiment seed and the cell coordinates.
pub fn cell_seed(seed: u64, subset: usize, duration_index: usize) -> u64 {
    seed.wrapping_add(1_000_003u64.wrapping_mul(subset as u64 + 1))
        .wrapping_add(7_919u64.wrapping_mul(duration_index as u64))
}

/// Per-joint nRMSE of `model` on `test`.
pub fn evaluate(model: &learner::InverseDynamicsModel, test: &RawTrajectory) -> Result<Vec<f64>> {
    let pred = model.predict_trajectory(test)?;
    (0..test.dof())
        .map(|j| {
            let p: Vec<f64> = pred.row(j).iter().copied().collect();
            let t: Vec<f64> = test.tau.column(j).iter().copied().collect();
            nrmse(&p, &t)
        })
        .collect()
}

/// Trains `variant` on the first `d * rate` rows of every subset for each
/// duration `d` and scores every joint on `test`.
pub fn learning_curve(
    variant: &ModelVariant,
    subsets: &[RawTrajectory],
    durations: &[f64],
    test: &RawTrajectory,
    chain: Option<&KinematicChain>,
    opts: &TrainOptions,
) -> Result<ResultTable> {
    if durations.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("durations must be sorted ascending".into()));
    }
    let history = learner::required_history(variant, opts.df_mean);
    let mut table = ResultTable::default();
    for (subset_id, subset) in subsets.iter().enumerate() {
        for (k, &d) in durations.iter().enumerate() {
            let rows = (d * subset.rate).round() as usize;
            if rows > subset.len() {
                return Err(Error::InvalidArgument(format!(
                    "duration {d} s needs {rows} rows but subset {subset_id} has {}",
                    subset.len()
                )));
            }
            let prefix = subset.rows(0..rows);
            let set = TrainingSet::from_trajectory(&prefix, history)?;
            let cell_opts = TrainOptions {
                gp: OptConfig {
                    rng_seed: cell_seed(opts.gp.rng_seed, subset_id, k),
                    ..opts.gp.clone()
                },
                ..opts.clone()
            };
            let started = Instant::now();
            let model = learner::train(variant, &set, chain, &cell_opts)?;
            let wall = started.elapsed().as_secs_f64();
            let scores = evaluate(&model, test)?;
            for (j, jm) in model.joint_models.iter().enumerate() {
                let report = jm.gp.fit_report();
                table.rows.push(LearningCurvePoint {
                    variant: variant.to_string(),
                    subset_id,
                    duration_s: d,
                    joint: j + 1,
                    nrmse: scores[j],
                    n_train: jm.gp.n_train(),
                    fit_iterations: report.map_or(0.0, |r| r.mean_iterations()),
                    fit_evaluations: report.map_or(0.0, |r| r.mean_evaluations()),
                    wall_time_s: wall,
                });
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationsRow {
    pub variant: String,
    pub joint: usize,
    pub mean_iterations: f64,
    pub mean_evaluations: f64,
    pub restarts: usize,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationsConfig {
    pub n_points: usize,
    pub restarts: usize,
    pub grad_tol: f64,
    pub objective_change_tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// 1-based joints to fit; all when empty.
    pub joints: Vec<usize>,
}

impl Default for IterationsConfig {
    fn default() -> Self {
        Self {
            n_points: 500,
            restarts: 10,
            grad_tol: 1e-5,
            objective_change_tol: 2e-9,
            max_iterations: 1000,
            seed: 0,
            joints: Vec::new(),
        }
    }
}

/// Mean optimizer iterations (and objective evaluations) over restarts for
/// every requested joint of every variant, fitted on the first `n_points`
/// usable rows of `data`.
pub fn iterations_report(
    variants: &[ModelVariant],
    data: &RawTrajectory,
    chain: Option<&KinematicChain>,
    cfg: &IterationsConfig,
) -> Result<Vec<IterationsRow>> {
    let mut out = Vec::new();
    for variant in variants {
        let history = learner::required_history(variant, Default::default());
        let rows = (cfg.n_points + history.saturating_sub(1)).min(data.len());
        let set = TrainingSet::from_trajectory(&data.rows(0..rows), history)?;
        let opts = TrainOptions {
            gp: OptConfig {
                restarts: cfg.restarts,
                max_iterations: cfg.max_iterations,
                grad_tol: cfg.grad_tol,
                objective_change_tol: cfg.objective_change_tol,
                rng_seed: cfg.seed,
                ard: true,
            },
            max_points: cfg.n_points.max(1),
            ..TrainOptions::default()
        };
        let joints: Vec<usize> = if cfg.joints.is_empty() {
            (1..=data.dof()).collect()
        } else {
            cfg.joints.clone()
        };
        for joint in joints {
            let jm = learner::train_joint_min(variant, &set, chain, &opts, joint, 1)?;
            let report = jm.gp.fit_report().expect("fitted models carry a report");
            out.push(IterationsRow {
                variant: variant.to_string(),
                joint,
                mean_iterations: report.mean_iterations(),
                mean_evaluations: report.mean_evaluations(),
                restarts: report.runs.len(),
                n_points: jm.gp.n_train(),
            });
        }
    }
    Ok(out)
}

/// Column names and `|rho|` matrix over every position, velocity,
/// acceleration and torque column.
pub fn trajectory_spearman(traj: &RawTrajectory) -> Result<(Vec<String>, DMatrix<f64>)> {
    let names: Vec<String> = traj.column_names().into_iter().skip(1).take(4 * traj.dof()).collect();
    let mut columns = Vec::with_capacity(names.len());
    for m in [&traj.q, &traj.qd, &traj.qdd, &traj.tau] {
        for j in 0..traj.dof() {
            columns.push(m.column(j).iter().copied().collect());
        }
    }
    let m = spearman_matrix(&columns, &names)?;
    Ok((names, m))
}
