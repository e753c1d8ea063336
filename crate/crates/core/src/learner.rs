//! Per-joint GP inverse-dynamics models for every combination of
//! non-parametric / semi-parametric, standard / inward / outward cascade, and
//! derivative-based / derivative-free features.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datasets::RawTrajectory;
use crate::error::{Error, Result};
use crate::features::{build_features, DerivativeMode, DfTransform, FeatureSpec, Sample, Scheme, Slot};
use crate::gpr::{self, GPModel, MeanFunction, OptConfig, RbdInputs, RbdMean};
use crate::kinchain::KinematicChain;

pub const BUNDLE_FORMAT: &str = "cascade-gp-bundle/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametricMode {
    NonParametric,
    SemiParametric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub parametric: ParametricMode,
    pub scheme: Scheme,
    pub derivative_mode: DerivativeMode,
}

impl ModelVariant {
    pub fn new(parametric: ParametricMode, scheme: Scheme, derivative_free: bool) -> Self {
        Self {
            parametric,
            scheme,
            derivative_mode: if derivative_free {
                DerivativeMode::DerivativeFree(DfTransform::default())
            } else {
                DerivativeMode::DerivativeBased
            },
        }
    }

    /// All twelve combinations, derivative-based first.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(12);
        for df in [false, true] {
            for p in [ParametricMode::NonParametric, ParametricMode::SemiParametric] {
                for s in [Scheme::Inward, Scheme::Outward, Scheme::Standard] {
                    out.push(Self::new(p, s, df));
                }
            }
        }
        out
    }

    pub fn is_semi_parametric(&self) -> bool {
        self.parametric == ParametricMode::SemiParametric
    }

    /// Joints (1-based) in evaluation order.
    pub fn cascade_order(&self, n: usize) -> Vec<usize> {
        match self.scheme {
            Scheme::Inward => (1..=n).rev().collect(),
            Scheme::Standard | Scheme::Outward => (1..=n).collect(),
        }
    }

    pub fn feature_spec(&self, joint: usize) -> FeatureSpec {
        FeatureSpec {
            scheme: self.scheme,
            joint_index: joint,
            derivative_mode: self.derivative_mode.clone(),
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.parametric {
            ParametricMode::NonParametric => "NP",
            ParametricMode::SemiParametric => "SP",
        };
        let s = match self.scheme {
            Scheme::Standard => "",
            Scheme::Inward => "-Inward-Cascaded",
            Scheme::Outward => "-Outward-Cascaded",
        };
        let d = if self.derivative_mode.is_free() { "-DF" } else { "" };
        write!(f, "{p}{s}{d}")
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    /// Parses names such as `NP`, `SP-DF`, `NP-Inward-Cascaded`,
    /// `SP-Outward-Cascaded-DF` (case-insensitive).
    fn from_str(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let mut parts: Vec<&str> = lower.split('-').collect();
        let bad = || Error::InvalidArgument(format!("unknown model variant `{name}`"));
        let parametric = match parts.first().copied() {
            Some("np") => ParametricMode::NonParametric,
            Some("sp") => ParametricMode::SemiParametric,
            _ => return Err(bad()),
        };
        parts.remove(0);
        let df = parts.last() == Some(&"df");
        if df {
            parts.pop();
        }
        let scheme = match parts.as_slice() {
            [] => Scheme::Standard,
            ["inward", "cascaded"] | ["inward"] => Scheme::Inward,
            ["outward", "cascaded"] | ["outward"] => Scheme::Outward,
            _ => return Err(bad()),
        };
        Ok(Self::new(parametric, scheme, df))
    }
}

/// Where the rigid-body mean of a derivative-free semi-parametric model
/// finds velocities and accelerations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfMeanSource {
    /// Backward differences over the three newest positions.
    #[default]
    FiniteDifference,
    /// The sample's own velocity and acceleration columns.
    DatasetColumns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptions {
    pub gp: OptConfig,
    /// Per-joint training-set cap; larger sets are thinned uniformly in time.
    pub max_points: usize,
    pub df_mean: DfMeanSource,
    /// Feed neighbor predictions instead of measured torques while training.
    pub chain_predictions: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            gp: OptConfig::default(),
            max_points: 500,
            df_mean: DfMeanSource::default(),
            chain_predictions: false,
        }
    }
}

/// Time-ordered samples from one source.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    samples: Vec<Sample>,
    source: String,
    sample_rate: f64,
}

impl TrainingSet {
    /// Sorts by timestamp, then checks strict ordering and uniform spacing
    /// (within 1% of `1 / sample_rate`).
    pub fn new(mut samples: Vec<Sample>, source: impl Into<String>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::DegenerateDataset { got: 0, need: 1 });
        }
        if !(sample_rate > 0.0) {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        let period = 1.0 / sample_rate;
        for w in samples.windows(2) {
            let gap = w[1].t - w[0].t;
            if !(gap > 0.0) || (gap - period).abs() > 0.01 * period {
                return Err(Error::InvalidArgument(format!(
                    "samples at t = {} and {} are not spaced {period} s apart",
                    w[0].t, w[1].t
                )));
            }
        }
        let n = samples[0].dof();
        if samples.iter().any(|s| s.dof() != n) {
            return Err(Error::InvalidArgument("samples disagree on the number of joints".into()));
        }
        Ok(Self {
            samples,
            source: source.into(),
            sample_rate,
        })
    }

    /// Every row of `traj` with up to `history_len` past positions attached.
    pub fn from_trajectory(traj: &RawTrajectory, history_len: usize) -> Result<Self> {
        traj.validate()?;
        Self::new(traj.samples(history_len), traj.meta.clone(), traj.rate)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn dof(&self) -> usize {
        self.samples[0].dof()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Extra input slots read only by a rigid-body mean. Joints are 1-based;
/// `Hist(j, b)` is the position `b` samples back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxSlot {
    Q(usize),
    Qd(usize),
    Qdd(usize),
    Hist(usize, usize),
}

impl AuxSlot {
    fn value(&self, s: &Sample) -> Result<f64> {
        Ok(match *self {
            AuxSlot::Q(j) => s.q[j - 1],
            AuxSlot::Qd(j) => s.qd[j - 1],
            AuxSlot::Qdd(j) => s.qdd[j - 1],
            AuxSlot::Hist(j, b) => *s
                .q_history
                .get(j - 1)
                .and_then(|h| h.get(b))
                .ok_or(Error::MissingHistory)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct JointModel {
    /// 1-based.
    pub joint: usize,
    pub spec: FeatureSpec,
    pub aux: Vec<AuxSlot>,
    pub gp: GPModel,
}

impl JointModel {
    fn row(&self, sample: &Sample, neighbor: Option<f64>) -> Result<Vec<f64>> {
        input_row(&self.spec, &self.aux, sample, neighbor)
    }
}

/// Kernel features followed by auxiliary slots.
fn input_row(spec: &FeatureSpec, aux: &[AuxSlot], sample: &Sample, neighbor: Option<f64>) -> Result<Vec<f64>> {
    let mut row = build_features(spec, sample, neighbor)?.values;
    for a in aux {
        row.push(a.value(sample)?);
    }
    Ok(row)
}

fn has_history(s: &Sample, len: usize) -> bool {
    len == 0 || !s.q_history.is_empty() && s.q_history.iter().all(|h| h.len() >= len)
}

#[derive(Debug, Clone)]
pub struct InverseDynamicsModel {
    pub variant: ModelVariant,
    /// Indexed by joint - 1.
    pub joint_models: Vec<JointModel>,
    pub chain: Option<KinematicChain>,
    /// 1-based joints in evaluation order.
    pub cascade_order: Vec<usize>,
    /// Positions per joint that a query sample must carry.
    pub history_len: usize,
    pub sample_rate: f64,
    pub dataset_fingerprint: Option<String>,
    pub seed: u64,
}

/// Positions per joint the variant reads from a sample's history.
pub fn required_history(variant: &ModelVariant, df_mean: DfMeanSource) -> usize {
    match &variant.derivative_mode {
        DerivativeMode::DerivativeBased => 0,
        DerivativeMode::DerivativeFree(t) => {
            let own = t.m() + 1;
            if variant.is_semi_parametric() && df_mean == DfMeanSource::FiniteDifference {
                own.max(3)
            } else {
                own
            }
        }
    }
}

/// Decides where the rigid-body mean reads each joint's state: a kernel
/// feature slot when the layout already holds it, an appended auxiliary slot
/// otherwise.
fn rbd_wiring(
    variant: &ModelVariant,
    layout: &[Slot],
    n: usize,
    df_mean: DfMeanSource,
    dt: f64,
) -> (Vec<AuxSlot>, RbdInputs) {
    let d = layout.len();
    let mut aux = Vec::new();
    let locate = |slot: Option<Slot>, fallback: AuxSlot, aux: &mut Vec<AuxSlot>| -> usize {
        if let Some(i) = slot.and_then(|s| layout.iter().position(|l| *l == s)) {
            return i;
        }
        aux.push(fallback);
        d + aux.len() - 1
    };
    match &variant.derivative_mode {
        DerivativeMode::DerivativeFree(t) if df_mean == DfMeanSource::FiniteDifference => {
            // Xi slots are the raw history only when R is the identity.
            let raw = t.is_identity();
            let slots = (1..=n)
                .map(|j| {
                    let mut triple = [0; 3];
                    for (b, s) in triple.iter_mut().enumerate() {
                        let feature = (raw && b < t.k()).then_some(Slot::Xi(j, b + 1));
                        *s = locate(feature, AuxSlot::Hist(j, b), &mut aux);
                    }
                    triple
                })
                .collect();
            (aux, RbdInputs::History { slots, dt })
        }
        mode => {
            let based = !mode.is_free();
            let mut q = Vec::with_capacity(n);
            let mut qd = Vec::with_capacity(n);
            let mut qdd = Vec::with_capacity(n);
            for j in 1..=n {
                q.push(locate(based.then_some(Slot::Q(j)), AuxSlot::Q(j), &mut aux));
            }
            for j in 1..=n {
                qd.push(locate(based.then_some(Slot::Qd(j)), AuxSlot::Qd(j), &mut aux));
            }
            for j in 1..=n {
                qdd.push(locate(based.then_some(Slot::Qdd(j)), AuxSlot::Qdd(j), &mut aux));
            }
            (aux, RbdInputs::State { q, qd, qdd })
        }
    }
}

/// Indices of at most `cap` points spread uniformly over `0..n`.
fn thin(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    (0..cap).map(|k| k * n / cap).collect()
}

/// Measured torque of joint `i` minus its rigid-body prediction, per sample.
pub fn residual_targets(chain: &KinematicChain, set: &TrainingSet, joint: usize) -> Result<DVector<f64>> {
    let n = chain.dof();
    if set.dof() != n {
        return Err(Error::dim("training set joints", n, set.dof()));
    }
    if joint < 1 || joint > n {
        return Err(Error::InvalidArgument(format!("joint {joint} outside 1..={n}")));
    }
    let g = chain.gravity();
    Ok(DVector::from_iterator(
        set.len(),
        set.samples().iter().map(|s| {
            let rbd = chain.rnea_unchecked(s.q.as_slice(), s.qd.as_slice(), s.qdd.as_slice(), &g);
            s.tau[joint - 1] - rbd[joint - 1]
        }),
    ))
}

/// Validates inputs and returns the samples every joint trains on.
fn training_samples<'a>(
    variant: &ModelVariant,
    set: &'a TrainingSet,
    chain: Option<&KinematicChain>,
    opts: &TrainOptions,
    min_points: usize,
) -> Result<Vec<&'a Sample>> {
    let n = set.dof();
    if variant.is_semi_parametric() && chain.is_none() {
        return Err(Error::MissingChain);
    }
    if let Some(c) = chain {
        if c.dof() != n {
            return Err(Error::dim("chain joints", n, c.dof()));
        }
    }
    if opts.max_points < 1 {
        return Err(Error::InvalidArgument("max_points must be >= 1".into()));
    }
    let history_len = required_history(variant, opts.df_mean);
    let usable: Vec<&Sample> = set.samples().iter().filter(|s| has_history(s, history_len)).collect();
    if usable.len() < min_points.max(1) {
        return Err(Error::DegenerateDataset {
            got: usable.len(),
            need: min_points.max(1),
        });
    }
    Ok(thin(usable.len(), opts.max_points).into_iter().map(|i| usable[i]).collect())
}

/// Fits the GP of one joint. `neighbor_values` holds the cascade input for
/// each sample when the scheme needs one.
fn fit_joint(
    variant: &ModelVariant,
    picked: &[&Sample],
    sample_rate: f64,
    chain: Option<&KinematicChain>,
    opts: &TrainOptions,
    joint: usize,
    neighbor_values: Option<&[f64]>,
) -> Result<JointModel> {
    let n = picked[0].dof();
    let spec = variant.feature_spec(joint);
    let neighbor = |r: usize| neighbor_values.map(|v| v[r]);
    let first = build_features(&spec, picked[0], neighbor(0))?;
    let (aux, mean) = match (variant.is_semi_parametric(), chain) {
        (true, Some(c)) => {
            let (aux, inputs) = rbd_wiring(variant, &first.layout, n, opts.df_mean, 1.0 / sample_rate);
            let mean = MeanFunction::Rbd(RbdMean {
                chain: c.clone(),
                joint: joint - 1,
                inputs,
            });
            (aux, mean)
        }
        _ => (Vec::new(), MeanFunction::Zero),
    };
    let (m, d, a) = (picked.len(), first.dim(), aux.len());
    let mut x = DMatrix::zeros(m, d);
    let mut xa = DMatrix::zeros(m, a);
    let mut y = DVector::zeros(m);
    for (r, s) in picked.iter().enumerate() {
        let row = input_row(&spec, &aux, s, neighbor(r))?;
        for c in 0..d {
            x[(r, c)] = row[c];
        }
        for c in 0..a {
            xa[(r, c)] = row[d + c];
        }
        y[r] = s.tau[joint - 1];
    }
    let cfg = OptConfig {
        rng_seed: opts.gp.rng_seed.wrapping_add(joint as u64),
        ..opts.gp.clone()
    };
    Ok(JointModel {
        joint,
        spec,
        aux,
        gp: gpr::fit_with_aux(&x, &xa, &y, mean, &cfg)?,
    })
}

/// Fits the GP of a single joint (1-based) exactly as [`train`] would with
/// measured cascade inputs.
pub fn train_joint(
    variant: &ModelVariant,
    set: &TrainingSet,
    chain: Option<&KinematicChain>,
    opts: &TrainOptions,
    joint: usize,
) -> Result<JointModel> {
    train_joint_min(variant, set, chain, opts, joint, 2)
}

/// As [`train_joint`], accepting sets down to `min_points` usable samples.
pub(crate) fn train_joint_min(
    variant: &ModelVariant,
    set: &TrainingSet,
    chain: Option<&KinematicChain>,
    opts: &TrainOptions,
    joint: usize,
    min_points: usize,
) -> Result<JointModel> {
    let n = set.dof();
    if joint < 1 || joint > n {
        return Err(Error::InvalidArgument(format!("joint {joint} outside 1..={n}")));
    }
    let picked = training_samples(variant, set, chain, opts, min_points)?;
    let measured: Option<Vec<f64>> = variant
        .feature_spec(joint)
        .neighbor(n)
        .map(|k| picked.iter().map(|s| s.tau[k - 1]).collect());
    fit_joint(variant, &picked, set.sample_rate(), chain, opts, joint, measured.as_deref())
}

/// Fits one GP per joint. During training the cascade input is the measured
/// torque of the neighbor joint unless `chain_predictions` is set.
pub fn train(
    variant: &ModelVariant,
    set: &TrainingSet,
    chain: Option<&KinematicChain>,
    opts: &TrainOptions,
) -> Result<InverseDynamicsModel> {
    let n = set.dof();
    let picked = training_samples(variant, set, chain, opts, 2)?;
    let history_len = required_history(variant, opts.df_mean);
    let order = variant.cascade_order(n);

    let mut slots: Vec<Option<JointModel>> = vec![None; n];
    // Per joint, the torque its cascade successor consumes while training.
    let mut fed: Vec<Option<Vec<f64>>> = vec![None; n];
    for &joint in &order {
        let neighbor_values: Option<Vec<f64>> = variant.feature_spec(joint).neighbor(n).map(|k| {
            if opts.chain_predictions {
                fed[k - 1].clone().expect("cascade order visits neighbors first")
            } else {
                picked.iter().map(|s| s.tau[k - 1]).collect()
            }
        });
        let jm = fit_joint(variant, &picked, set.sample_rate(), chain, opts, joint, neighbor_values.as_deref())?;
        if opts.chain_predictions {
            let preds = picked
                .iter()
                .enumerate()
                .map(|(r, s)| jm.gp.predict_mean(&jm.row(s, neighbor_values.as_ref().map(|v| v[r]))?))
                .collect::<Result<Vec<f64>>>()?;
            fed[joint - 1] = Some(preds);
        }
        slots[joint - 1] = Some(jm);
    }

    Ok(InverseDynamicsModel {
        variant: variant.clone(),
        joint_models: slots.into_iter().map(|s| s.expect("every joint trained")).collect(),
        chain: chain.cloned(),
        cascade_order: order,
        history_len,
        sample_rate: set.sample_rate(),
        dataset_fingerprint: None,
        seed: opts.gp.rng_seed,
    })
}

/// Repeats the oldest known position so every joint carries `len` entries.
fn pad_history(sample: &Sample, len: usize) -> Result<Sample> {
    if has_history(sample, len) {
        return Ok(sample.clone());
    }
    let mut s = sample.clone();
    if s.q_history.is_empty() {
        s.q_history = s.q.iter().map(|&q| vec![q]).collect();
    }
    for h in &mut s.q_history {
        let last = *h.last().ok_or(Error::MissingHistory)?;
        h.resize(len, last);
    }
    Ok(s)
}

impl InverseDynamicsModel {
    pub fn dof(&self) -> usize {
        self.joint_models.len()
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Predicted torque of every joint for one sample, evaluated in cascade
    /// order with each neighbor input taken from its own prediction.
    pub fn predict_sample(&self, sample: &Sample) -> Result<DVector<f64>> {
        let n = self.dof();
        if sample.dof() != n {
            return Err(Error::dim("sample joints", n, sample.dof()));
        }
        if !has_history(sample, self.history_len) {
            return Err(Error::MissingHistory);
        }
        let mut tau = DVector::from_element(n, f64::NAN);
        for &joint in &self.cascade_order {
            let jm = &self.joint_models[joint - 1];
            let neighbor = jm.spec.neighbor(n).map(|k| tau[k - 1]);
            tau[joint - 1] = jm.gp.predict_mean(&jm.row(sample, neighbor)?)?;
        }
        Ok(tau)
    }

    /// `N x T` predicted torques. Rows too early to have a full position
    /// history reuse their oldest available position.
    pub fn predict_trajectory(&self, traj: &RawTrajectory) -> Result<DMatrix<f64>> {
        if traj.dof() != self.dof() {
            return Err(Error::dim("trajectory joints", self.dof(), traj.dof()));
        }
        let mut out = DMatrix::zeros(self.dof(), traj.len());
        for i in 0..traj.len() {
            let s = pad_history(&traj.sample(i, self.history_len), self.history_len)?;
            out.set_column(i, &self.predict_sample(&s)?);
        }
        Ok(out)
    }

    /// Writes `manifest.json` and one `joint_<i>.json` per joint into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut joints = Vec::with_capacity(self.dof());
        for jm in &self.joint_models {
            let file = format!("joint_{}.json", jm.joint);
            jm.gp.save(dir.join(&file))?;
            joints.push(JointEntry {
                joint: jm.joint,
                spec: jm.spec.clone(),
                aux: jm.aux.clone(),
                file,
            });
        }
        let manifest = Manifest {
            format: BUNDLE_FORMAT.into(),
            variant: self.variant.to_string(),
            variant_detail: self.variant.clone(),
            cascade_order: self.cascade_order.clone(),
            history_len: self.history_len,
            sample_rate: self.sample_rate,
            dataset_fingerprint: self.dataset_fingerprint.clone(),
            seed: self.seed,
            chain: self.chain.clone(),
            joints,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("manifest.json");
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
        if manifest.format != BUNDLE_FORMAT {
            return Err(Error::Parse {
                path,
                line: 1,
                msg: format!("unsupported bundle format `{}`", manifest.format),
            });
        }
        let joint_models = manifest
            .joints
            .into_iter()
            .map(|e| {
                Ok(JointModel {
                    joint: e.joint,
                    spec: e.spec,
                    aux: e.aux,
                    gp: GPModel::load(dir.join(&e.file))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            variant: manifest.variant_detail,
            joint_models,
            chain: manifest.chain,
            cascade_order: manifest.cascade_order,
            history_len: manifest.history_len,
            sample_rate: manifest.sample_rate,
            dataset_fingerprint: manifest.dataset_fingerprint,
            seed: manifest.seed,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointEntry {
    joint: usize,
    spec: FeatureSpec,
    aux: Vec<AuxSlot>,
    file: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    variant: String,
    variant_detail: ModelVariant,
    cascade_order: Vec<usize>,
    history_len: usize,
    sample_rate: f64,
    dataset_fingerprint: Option<String>,
    seed: u64,
    chain: Option<KinematicChain>,
    joints: Vec<JointEntry>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        let names: Vec<String> = ModelVariant::all().iter().map(ToString::to_string).collect();
        assert_eq!(names.len(), 12);
        assert!(names.contains(&"NP-Inward-Cascaded".to_string()));
        assert!(names.contains(&"SP-Outward-Cascaded-DF".to_string()));
        assert!(names.contains(&"NP-DF".to_string()));
        for name in &names {
            assert_eq!(&name.parse::<ModelVariant>().unwrap().to_string(), name);
        }
        assert!("XP-Inward".parse::<ModelVariant>().is_err());
        assert!("NP-Sideways".parse::<ModelVariant>().is_err());
    }

    #[test]
    fn cascade_orders() {
        let v = |s| ModelVariant::new(ParametricMode::NonParametric, s, false);
        assert_eq!(v(Scheme::Inward).cascade_order(4), vec![4, 3, 2, 1]);
        assert_eq!(v(Scheme::Outward).cascade_order(4), vec![1, 2, 3, 4]);
    }

    #[test]
    fn thinning_is_uniform_and_capped() {
        assert_eq!(thin(5, 10), vec![0, 1, 2, 3, 4]);
        assert_eq!(thin(10, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(thin(1000, 500).len(), 500);
    }
}
