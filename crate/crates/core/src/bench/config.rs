//! Experiment configuration file.
//!
//! ```toml
//! [dataset]
//! source = "synthetic"      # synthetic | sarcos | trajectory
//! chain = "arm6"            # preset name or chain file
//! n_subsets = 5
//! test_fraction = 0.2
//!
//! [variant]
//! names = ["NP", "NP-Inward-Cascaded"]
//!
//! [experiment]
//! seed = 7
//! ```
//!
//! Every key is optional; unknown keys are rejected by name. Relative paths
//! resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::experiments::{log_durations, IterationsConfig};
use crate::ctrlsim::{ControllerConfig, Feedforward, MinJerkPath, Reference, SimSettings};
use crate::datasets::{self, RawTrajectory, SineExcitationSpec, SineMotion, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{DerivativeMode, DfTransform};
use crate::gpr::OptConfig;
use crate::kinchain::{self, presets, KinematicChain};
use crate::learner::{DfMeanSource, InverseDynamicsModel, ModelVariant, TrainOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    #[default]
    Synthetic,
    Sarcos,
    /// A file written by `save_trajectory`.
    Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelerationSource {
    /// Use the recorded `qdd` columns as they are.
    #[default]
    Measured,
    /// Replace `qdd` with the commanded accelerations.
    Desired,
    /// Recompute `qd` and `qdd` from positions.
    Differentiated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub source: DataSource,
    pub path: Option<PathBuf>,
    /// Separate test file; implies `test_fraction = 0`.
    pub test_path: Option<PathBuf>,
    /// Preset name (`planar2r`, `pendulum`, `arm6`, `arm7`) or chain file.
    pub chain: Option<String>,
    pub subsample_hz: Option<f64>,
    pub n_subsets: usize,
    pub test_fraction: f64,
    pub acceleration: AccelerationSource,
    pub smoothing_window: usize,
    pub sine: SineExcitationSpec,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            path: None,
            test_path: None,
            chain: Some("arm6".into()),
            subsample_hz: None,
            n_subsets: 5,
            test_fraction: 0.2,
            acceleration: AccelerationSource::Measured,
            smoothing_window: 5,
            sine: SineExcitationSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariantSection {
    pub names: Vec<String>,
    /// History length of derivative-free features.
    pub df_m: usize,
    /// Explicit `k x (df_m + 1)` transform, row by row; identity when absent.
    pub df_r: Option<Vec<Vec<f64>>>,
    pub df_mean: DfMeanSource,
}

impl Default for VariantSection {
    fn default() -> Self {
        Self {
            names: vec!["NP".into(), "NP-Inward-Cascaded".into()],
            df_m: 2,
            df_r: None,
            df_mean: DfMeanSource::FiniteDifference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpSection {
    pub restarts: usize,
    pub max_iterations: usize,
    pub grad_tol: f64,
    pub objective_change_tol: f64,
    pub ard: bool,
    pub max_points: usize,
    pub chain_predictions: bool,
}

impl Default for GpSection {
    fn default() -> Self {
        let o = OptConfig::default();
        let t = TrainOptions::default();
        Self {
            restarts: o.restarts,
            max_iterations: o.max_iterations,
            grad_tol: o.grad_tol,
            objective_change_tol: o.objective_change_tol,
            ard: o.ard,
            max_points: t.max_points,
            chain_predictions: t.chain_predictions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub seed: u64,
    /// Explicit learning-curve durations (s); a log grid when empty.
    pub durations: Vec<f64>,
    pub n_durations: usize,
    pub min_duration: f64,
    /// Durations at which summaries average the preceding second.
    pub summary_points: Vec<f64>,
    pub iterations: IterationsConfig,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: 0,
            durations: Vec::new(),
            n_durations: 10,
            min_duration: 1.0,
            summary_points: vec![2.0, 5.0, 10.0],
            iterations: IterationsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedforwardKind {
    None,
    #[default]
    Rbd,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Sine,
    PickTiltReturn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathSection {
    /// Zeros when absent.
    pub home: Option<Vec<f64>>,
    pub lift: Option<Vec<f64>>,
    pub tilt: f64,
    pub segment_duration: f64,
}

impl Default for PathSection {
    fn default() -> Self {
        Self {
            home: None,
            lift: None,
            tilt: 0.8,
            segment_duration: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// Plant chain; the dataset chain when absent.
    pub plant: Option<String>,
    pub payload_mass: f64,
    /// 1-based link carrying the payload; the last link when absent.
    pub payload_link: Option<usize>,
    pub payload_com: [f64; 3],
    /// One value per joint, or one for all. Leave both empty to tune them
    /// on the plant along the reference from `bandwidth_hz` and `damping`.
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    pub bandwidth_hz: f64,
    pub damping: f64,
    pub dt: f64,
    pub control_period: f64,
    pub duration: f64,
    pub feedforward: FeedforwardKind,
    /// Chain used by rigid-body feedforward; the bare plant when absent.
    pub feedforward_chain: Option<String>,
    /// Model bundle for learned feedforward.
    pub model: Option<PathBuf>,
    pub reference: ReferenceKind,
    pub sine: SineExcitationSpec,
    pub path: PathSection,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimSettings::default();
        Self {
            plant: None,
            payload_mass: 0.0,
            payload_link: None,
            payload_com: [0.05, 0.0, 0.05],
            kp: Vec::new(),
            kd: Vec::new(),
            bandwidth_hz: 1.0,
            damping: 0.7,
            dt: s.dt,
            control_period: s.control_period,
            duration: s.duration,
            feedforward: FeedforwardKind::Rbd,
            feedforward_chain: None,
            model: None,
            reference: ReferenceKind::Sine,
            sine: SineExcitationSpec::default(),
            path: PathSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    pub variant: VariantSection,
    pub gp: GpSection,
    pub experiment: ExperimentSection,
    pub sim: SimSection,
    #[serde(skip)]
    base_dir: PathBuf,
}

/// Training region split into subsets, the test set, and the chain.
#[derive(Debug, Clone)]
pub struct PreparedData {
    /// The whole training region (all subsets, in order).
    pub train: RawTrajectory,
    pub subsets: Vec<RawTrajectory>,
    pub test: RawTrajectory,
    pub chain: Option<KinematicChain>,
}

/// Resolves a chain preset name or file path.
pub fn resolve_chain(spec: &str, base_dir: &Path) -> Result<KinematicChain> {
    if let Some(c) = presets::by_name(spec) {
        return Ok(c);
    }
    let p = base_dir.join(spec);
    if p.exists() {
        return kinchain::load_chain(p);
    }
    Err(Error::Config(format!(
        "chain `{spec}` is neither a preset (planar2r, pendulum, arm6, arm7) nor an existing file"
    )))
}

fn per_joint(name: &str, v: &[f64], n: usize) -> Result<DVector<f64>> {
    match v.len() {
        1 => Ok(DVector::from_element(n, v[0])),
        l if l == n => Ok(DVector::from_column_slice(v)),
        l => Err(Error::Config(format!("sim.{name} has {l} values; expected 1 or {n}"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if d.n_subsets < 1 || !(0.0..1.0).contains(&d.test_fraction) {
            return Err(Error::Config("dataset.n_subsets must be >= 1 and dataset.test_fraction in [0, 1)".into()));
        }
        if d.test_path.is_some() && d.test_fraction != 0.0 {
            return Err(Error::Config("dataset.test_path requires dataset.test_fraction = 0".into()));
        }
        if d.source != DataSource::Synthetic && d.path.is_none() {
            return Err(Error::Config("dataset.path is required for this dataset.source".into()));
        }
        if d.subsample_hz.is_some_and(|h| !(h > 0.0)) {
            return Err(Error::Config("dataset.subsample_hz must be positive".into()));
        }
        if self.variant.names.is_empty() {
            return Err(Error::Config("variant.names is empty".into()));
        }
        self.variants()?;
        if self.gp.restarts < 1 || self.gp.max_points < 1 {
            return Err(Error::Config("gp.restarts and gp.max_points must be >= 1".into()));
        }
        let e = &self.experiment;
        if e.durations.iter().any(|d| !(*d > 0.0)) || e.durations.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("experiment.durations must be positive and ascending".into()));
        }
        let s = &self.sim;
        if s.kp.iter().chain(&s.kd).any(|g| !(*g >= 0.0)) {
            return Err(Error::Config("sim gains must be non-negative".into()));
        }
        if s.kp.is_empty() != s.kd.is_empty() {
            return Err(Error::Config("give both sim.kp and sim.kd, or neither".into()));
        }
        if s.kp.is_empty() && !(s.bandwidth_hz > 0.0 && s.damping >= 0.0) {
            return Err(Error::Config("sim.bandwidth_hz must be > 0 and sim.damping >= 0".into()));
        }
        if s.feedforward == FeedforwardKind::Model && s.model.is_none() {
            return Err(Error::Config("sim.feedforward = \"model\" needs sim.model".into()));
        }
        Ok(())
    }

    /// Hex sha256 of the canonical (defaults filled) serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn df_transform(&self) -> Result<DfTransform> {
        match &self.variant.df_r {
            None => Ok(DfTransform::identity(self.variant.df_m)),
            Some(rows) => {
                let cols = self.variant.df_m + 1;
                if rows.is_empty() || rows.iter().any(|r| r.len() != cols) {
                    return Err(Error::Config(format!("variant.df_r rows must each have df_m + 1 = {cols} entries")));
                }
                DfTransform::new(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
            }
        }
    }

    pub fn variants(&self) -> Result<Vec<ModelVariant>> {
        let t = self.df_transform()?;
        self.variant
            .names
            .iter()
            .map(|n| {
                let mut v: ModelVariant = n.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
                if v.derivative_mode.is_free() {
                    v.derivative_mode = DerivativeMode::DerivativeFree(t.clone());
                }
                Ok(v)
            })
            .collect()
    }

    pub fn train_options(&self) -> TrainOptions {
        let g = &self.gp;
        TrainOptions {
            gp: OptConfig {
                restarts: g.restarts,
                max_iterations: g.max_iterations,
                grad_tol: g.grad_tol,
                objective_change_tol: g.objective_change_tol,
                rng_seed: self.experiment.seed,
                ard: g.ard,
            },
            max_points: g.max_points,
            df_mean: self.variant.df_mean,
            chain_predictions: g.chain_predictions,
        }
    }

    pub fn iterations_config(&self) -> IterationsConfig {
        IterationsConfig {
            seed: self.experiment.seed,
            ..self.experiment.iterations.clone()
        }
    }

    pub fn chain(&self) -> Result<Option<KinematicChain>> {
        self.dataset.chain.as_deref().map(|c| resolve_chain(c, &self.base_dir)).transpose()
    }

    fn load_one(&self, path: &Path) -> Result<RawTrajectory> {
        let p = self.resolve(path);
        let raw = match self.dataset.source {
            DataSource::Sarcos => datasets::load_sarcos(&p)?,
            _ => datasets::load_trajectory(&p)?,
        };
        self.preprocess(raw)
    }

    fn preprocess(&self, raw: RawTrajectory) -> Result<RawTrajectory> {
        let raw = match self.dataset.acceleration {
            AccelerationSource::Measured => raw,
            AccelerationSource::Desired => raw.with_desired_accelerations()?,
            AccelerationSource::Differentiated => raw.with_numerical_derivatives(self.dataset.smoothing_window)?,
        };
        match self.dataset.subsample_hz {
            Some(hz) => datasets::subsample(&raw, hz),
            None => Ok(raw),
        }
    }

    /// The full, preprocessed dataset before splitting.
    pub fn load_dataset(&self) -> Result<RawTrajectory> {
        match (&self.dataset.source, &self.dataset.path) {
            (DataSource::Synthetic, None) => {
                let chain = self.chain()?.ok_or_else(|| Error::Config("a synthetic dataset needs dataset.chain".into()))?;
                let raw = datasets::generate_sine_dataset(&chain, &self.dataset.sine)?;
                self.preprocess(raw)
            }
            (DataSource::Synthetic, Some(p)) => {
                let raw = datasets::load_trajectory(self.resolve(p))?;
                self.preprocess(raw)
            }
            (_, Some(p)) => self.load_one(p),
            (_, None) => Err(Error::Config("dataset.path is required for this dataset.source".into())),
        }
    }

    pub fn prepare(&self) -> Result<PreparedData> {
        let full = self.load_dataset()?;
        let spec = SplitSpec {
            n_subsets: self.dataset.n_subsets,
            test_fraction: self.dataset.test_fraction,
        };
        let (subsets, tail) = datasets::split(&full, &spec)?;
        let test = match &self.dataset.test_path {
            Some(p) => self.load_one(p)?,
            None => tail,
        };
        let n_train = subsets.iter().map(RawTrajectory::len).sum();
        Ok(PreparedData {
            train: full.rows(0..n_train),
            subsets,
            test,
            chain: self.chain()?,
        })
    }

    /// Learning-curve durations: the explicit list, or a log grid from
    /// `min_duration` to the shortest subset.
    pub fn durations(&self, subsets: &[RawTrajectory]) -> Vec<f64> {
        if !self.experiment.durations.is_empty() {
            return self.experiment.durations.clone();
        }
        let shortest = subsets
            .iter()
            .map(|s| s.len() as f64 / s.rate)
            .fold(f64::INFINITY, f64::min);
        // snap to whole rows so each duration maps to an exact prefix
        let rate = subsets.first().map_or(1.0, |s| s.rate);
        let mut d: Vec<f64> = log_durations(self.experiment.min_duration, shortest, self.experiment.n_durations)
            .into_iter()
            .map(|x| ((x * rate).round().max(1.0)) / rate)
            .collect();
        d.dedup();
        d
    }

    /// Plant for the `sim` scenario, with the payload attached.
    pub fn plant(&self) -> Result<KinematicChain> {
        let bare = self.bare_plant()?;
        if self.sim.payload_mass == 0.0 {
            return Ok(bare);
        }
        let link = self.sim.payload_link.unwrap_or(bare.dof());
        if link < 1 || link > bare.dof() {
            return Err(Error::Config(format!("sim.payload_link {link} is outside 1..={}", bare.dof())));
        }
        let c = self.sim.payload_com;
        bare.attach_payload(link - 1, self.sim.payload_mass, Vector3::new(c[0], c[1], c[2]))
    }

    fn bare_plant(&self) -> Result<KinematicChain> {
        match &self.sim.plant {
            Some(p) => resolve_chain(p, &self.base_dir),
            None => self.chain()?.ok_or_else(|| Error::Config("sim needs sim.plant or dataset.chain".into())),
        }
    }

    pub fn controller(&self, dof: usize) -> Result<ControllerConfig> {
        let feedforward = match self.sim.feedforward {
            FeedforwardKind::None => Feedforward::None,
            FeedforwardKind::Rbd => Feedforward::Rbd(match &self.sim.feedforward_chain {
                Some(c) => resolve_chain(c, &self.base_dir)?,
                None => self.bare_plant()?,
            }),
            FeedforwardKind::Model => {
                let dir = self.sim.model.as_ref().expect("validated");
                Feedforward::Learned(Box::new(InverseDynamicsModel::load(self.resolve(dir))?))
            }
        };
        if self.sim.kp.is_empty() {
            let reference = self.reference(dof)?;
            let postures = ControllerConfig::postures(reference.as_ref(), self.sim.duration, 0.1);
            return ControllerConfig::tuned(&self.bare_plant()?, &postures, self.sim.bandwidth_hz, self.sim.damping, feedforward);
        }
        Ok(ControllerConfig {
            kp: per_joint("kp", &self.sim.kp, dof)?,
            kd: per_joint("kd", &self.sim.kd, dof)?,
            feedforward,
        })
    }

    pub fn sim_settings(&self) -> SimSettings {
        SimSettings {
            dt: self.sim.dt,
            control_period: self.sim.control_period,
            duration: self.sim.duration,
        }
    }

    pub fn reference(&self, dof: usize) -> Result<Box<dyn Reference>> {
        match self.sim.reference {
            ReferenceKind::Sine => Ok(Box::new(SineMotion::random(dof, &self.sim.sine)?)),
            ReferenceKind::PickTiltReturn => {
                let p = &self.sim.path;
                let home = p.home.clone().unwrap_or_else(|| vec![0.0; dof]);
                let lift = p.lift.clone().unwrap_or_else(|| {
                    let mut l = home.clone();
                    if dof > 1 {
                        l[1] += 0.5;
                    }
                    l
                });
                if home.len() != dof || lift.len() != dof {
                    return Err(Error::Config(format!("sim.path postures need {dof} entries")));
                }
                Ok(Box::new(MinJerkPath::pick_tilt_return(&home, &lift, p.tilt, p.segment_duration)?))
            }
        }
    }
}
