//! GP input vectors for the standard, inward-cascaded and outward-cascaded
//! schemes, each in derivative-based or derivative-free form.
//!
//! Joints are numbered 1..=N in specs and slot names; the vectors inside a
//! [`Sample`] are indexed from 0.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// One time step of joint data.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
    pub tau: DVector<f64>,
    /// Per joint, the most recent positions newest first: `q(t), q(t - dt), ..`.
    /// Empty when no history is available.
    pub q_history: Vec<Vec<f64>>,
}

impl Sample {
    pub fn dof(&self) -> usize {
        self.q.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.dof();
        check_len("sample qd", n, self.qd.len())?;
        check_len("sample qdd", n, self.qdd.len())?;
        check_len("sample tau", n, self.tau.len())?;
        if !self.q_history.is_empty() {
            check_len("sample q_history", n, self.q_history.len())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Standard,
    #[serde(alias = "inward_cascade")]
    Inward,
    #[serde(alias = "outward_cascade")]
    Outward,
}

/// `xi = R q_history` with `R` of shape `k x (M + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfTransform {
    r: DMatrix<f64>,
}

impl DfTransform {
    pub fn new(r: DMatrix<f64>) -> Result<Self> {
        if r.nrows() == 0 || r.ncols() == 0 {
            return Err(Error::InvalidArgument("derivative-free R must be non-empty".into()));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("derivative-free R"));
        }
        Ok(Self { r })
    }

    /// `R = I` over an `M + 1` sample window, so `k = M + 1`.
    pub fn identity(m: usize) -> Self {
        Self {
            r: DMatrix::identity(m + 1, m + 1),
        }
    }

    /// History length beyond the current sample.
    pub fn m(&self) -> usize {
        self.r.ncols() - 1
    }

    pub fn k(&self) -> usize {
        self.r.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn is_identity(&self) -> bool {
        self.r.is_square() && self.r == DMatrix::identity(self.k(), self.k())
    }
}

impl Default for DfTransform {
    fn default() -> Self {
        Self::identity(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    DerivativeBased,
    DerivativeFree(DfTransform),
}

impl DerivativeMode {
    pub fn is_free(&self) -> bool {
        matches!(self, DerivativeMode::DerivativeFree(_))
    }

    /// Features contributed by one joint.
    pub fn per_joint(&self) -> usize {
        match self {
            DerivativeMode::DerivativeBased => 3,
            DerivativeMode::DerivativeFree(t) => t.k(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub scheme: Scheme,
    /// 1-based.
    pub joint_index: usize,
    pub derivative_mode: DerivativeMode,
}

impl FeatureSpec {
    /// Joints (1-based, ascending) whose states appear in the vector, and the
    /// neighbor torque slot if any.
    pub fn joints(&self, n: usize) -> Result<(std::ops::RangeInclusive<usize>, Option<Slot>)> {
        let i = self.joint_index;
        if i < 1 || i > n {
            return Err(Error::InvalidArgument(format!("joint index {i} outside 1..={n}")));
        }
        Ok(match self.scheme {
            Scheme::Standard => (1..=n, None),
            Scheme::Inward if i == n => (1..=n, None),
            Scheme::Inward => (1..=i, Some(Slot::TauNext)),
            Scheme::Outward if i == 1 => (1..=n, None),
            Scheme::Outward => (i..=n, Some(Slot::TauPrev)),
        })
    }

    pub fn needs_neighbor(&self, n: usize) -> bool {
        matches!(self.joints(n), Ok((_, Some(_))))
    }

    /// 1-based joint whose torque feeds this one, if any.
    pub fn neighbor(&self, n: usize) -> Option<usize> {
        match self.joints(n).ok()?.1? {
            Slot::TauNext => Some(self.joint_index + 1),
            _ => Some(self.joint_index - 1),
        }
    }

    pub fn dim(&self, n: usize) -> Result<usize> {
        let (joints, tau) = self.joints(n)?;
        Ok(joints.count() * self.derivative_mode.per_joint() + usize::from(tau.is_some()))
    }
}

/// Physical meaning of one feature slot. Joint numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    TauNext,
    TauPrev,
    Q(usize),
    Qd(usize),
    Qdd(usize),
    /// Component `c` (1-based) of the derivative-free feature of a joint.
    Xi(usize, usize),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::TauNext => write!(f, "tau_next"),
            Slot::TauPrev => write!(f, "tau_prev"),
            Slot::Q(j) => write!(f, "q_{j}"),
            Slot::Qd(j) => write!(f, "qd_{j}"),
            Slot::Qdd(j) => write!(f, "qdd_{j}"),
            Slot::Xi(j, c) => write!(f, "xi_{j}_{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<Slot>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn index_of(&self, slot: Slot) -> Option<usize> {
        self.layout.iter().position(|s| *s == slot)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.layout.iter().position(|s| s.to_string() == name).map(|i| self.values[i])
    }

    pub fn names(&self) -> Vec<String> {
        self.layout.iter().map(Slot::to_string).collect()
    }
}

/// Derivative-based block for a contiguous range of joints: all positions,
/// then all velocities, then all accelerations.
fn state_block(sample: &Sample, joints: std::ops::RangeInclusive<usize>, out: &mut FeatureVector) {
    for (pick, slot) in [
        (&sample.q, Slot::Q as fn(usize) -> Slot),
        (&sample.qd, Slot::Qd),
        (&sample.qdd, Slot::Qdd),
    ] {
        for j in joints.clone() {
            out.values.push(pick[j - 1]);
            out.layout.push(slot(j));
        }
    }
}

fn check_joint(i: usize, n: usize) -> Result<()> {
    if i < 1 || i > n {
        return Err(Error::InvalidArgument(format!("joint index {i} outside 1..={n}")));
    }
    Ok(())
}

/// `[q_1..q_N, qd_1..qd_N, qdd_1..qdd_N]`.
pub fn standard_features(sample: &Sample) -> Result<FeatureVector> {
    sample.check()?;
    let mut out = FeatureVector {
        values: Vec::with_capacity(3 * sample.dof()),
        layout: Vec::with_capacity(3 * sample.dof()),
    };
    state_block(sample, 1..=sample.dof(), &mut out);
    Ok(out)
}

/// `[tau_{i+1}, q_1..q_i, qd_1..qd_i, qdd_1..qdd_i]`; the last joint gets the
/// standard vector and ignores `tau_next`.
pub fn inward_features(sample: &Sample, i: usize, tau_next: f64) -> Result<FeatureVector> {
    sample.check()?;
    let n = sample.dof();
    check_joint(i, n)?;
    if i == n {
        return standard_features(sample);
    }
    let mut out = FeatureVector {
        values: vec![tau_next],
        layout: vec![Slot::TauNext],
    };
    state_block(sample, 1..=i, &mut out);
    Ok(out)
}

/// `[tau_{i-1}, q_i..q_N, qd_i..qd_N, qdd_i..qdd_N]`; the first joint gets the
/// standard vector and ignores `tau_prev`.
pub fn outward_features(sample: &Sample, i: usize, tau_prev: f64) -> Result<FeatureVector> {
    sample.check()?;
    let n = sample.dof();
    check_joint(i, n)?;
    if i == 1 {
        return standard_features(sample);
    }
    let mut out = FeatureVector {
        values: vec![tau_prev],
        layout: vec![Slot::TauPrev],
    };
    state_block(sample, i..=n, &mut out);
    Ok(out)
}

/// `xi = R q_history`.
pub fn derivative_free_transform(q_history: &[f64], transform: &DfTransform) -> Result<Vec<f64>> {
    check_len("position history", transform.m() + 1, q_history.len())?;
    let h = DVector::from_column_slice(q_history);
    Ok((transform.matrix() * h).iter().copied().collect())
}

/// Dispatches on `spec`. In derivative-free mode each joint's
/// `(q, qd, qdd)` triple is replaced by its `xi` in place.
pub fn build_features(spec: &FeatureSpec, sample: &Sample, neighbor_tau: Option<f64>) -> Result<FeatureVector> {
    let n = sample.dof();
    let (joints, tau_slot) = spec.joints(n)?;
    let tau = match (tau_slot, neighbor_tau) {
        (Some(_), Some(v)) => v,
        (Some(_), None) => return Err(Error::MissingNeighborTorque { joint: spec.joint_index }),
        (None, _) => 0.0,
    };
    let based = match spec.scheme {
        Scheme::Standard => standard_features(sample)?,
        Scheme::Inward => inward_features(sample, spec.joint_index, tau)?,
        Scheme::Outward => outward_features(sample, spec.joint_index, tau)?,
    };
    let DerivativeMode::DerivativeFree(transform) = &spec.derivative_mode else {
        return Ok(based);
    };

    let mut out = FeatureVector {
        values: Vec::with_capacity(spec.dim(n)?),
        layout: Vec::with_capacity(spec.dim(n)?),
    };
    if let Some(slot) = tau_slot {
        out.values.push(tau);
        out.layout.push(slot);
    }
    if sample.q_history.len() != n {
        return Err(Error::MissingHistory);
    }
    for j in joints {
        let hist = &sample.q_history[j - 1];
        if hist.len() < transform.m() + 1 {
            return Err(Error::MissingHistory);
        }
        let xi = derivative_free_transform(&hist[..transform.m() + 1], transform)?;
        for (c, v) in xi.into_iter().enumerate() {
            out.values.push(v);
            out.layout.push(Slot::Xi(j, c + 1));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Sample {
        let v = |k: f64| DVector::from_fn(n, |i, _| k + i as f64);
        Sample {
            t: 0.0,
            q: v(0.1),
            qd: v(10.1),
            qdd: v(20.1),
            tau: v(30.1),
            q_history: (0..n).map(|i| vec![i as f64, i as f64 - 0.5, i as f64 - 0.75]).collect(),
        }
    }

    #[test]
    fn layout_slots_point_back_to_their_source() {
        let s = sample(6);
        let f = standard_features(&s).unwrap();
        assert_eq!(f.get("qd_3"), Some(s.qd[2]));
        assert_eq!(f.get("qdd_6"), Some(s.qdd[5]));
        assert_eq!(f.get("q_1"), Some(s.q[0]));
        let inward = inward_features(&s, 3, -4.25).unwrap();
        assert_eq!(inward.get("tau_next"), Some(-4.25));
        assert_eq!(inward.names()[..4], ["tau_next", "q_1", "q_2", "q_3"]);
        let outward = outward_features(&s, 6, 1.5).unwrap();
        assert_eq!(outward.names(), ["tau_prev", "q_6", "qd_6", "qdd_6"]);
    }

    #[test]
    fn zero_state_gives_zero_vector() {
        let z = DVector::zeros(4);
        let s = Sample {
            t: 0.0,
            q: z.clone(),
            qd: z.clone(),
            qdd: z.clone(),
            tau: z,
            q_history: vec![],
        };
        assert_eq!(standard_features(&s).unwrap().values, vec![0.0; 12]);
    }

    #[test]
    fn identity_transform_copies_the_history() {
        let xi = derivative_free_transform(&[1.0, 0.9, 0.7], &DfTransform::identity(2)).unwrap();
        assert_eq!(xi, vec![1.0, 0.9, 0.7]);
        let zero = DfTransform::new(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(derivative_free_transform(&[1.0, 0.9, 0.7], &zero).unwrap(), vec![0.0; 3]);
        let r = DfTransform::new(DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.0, 1.0])).unwrap();
        assert_eq!(derivative_free_transform(&[2.0, 2.0, 2.0], &r).unwrap(), vec![12.0, 0.0]);
        assert!(derivative_free_transform(&[1.0, 2.0], &r).is_err());
    }

    #[test]
    fn derivative_free_replaces_triples_in_place() {
        let s = sample(6);
        let spec = FeatureSpec {
            scheme: Scheme::Inward,
            joint_index: 2,
            derivative_mode: DerivativeMode::DerivativeFree(DfTransform::default()),
        };
        let f = build_features(&spec, &s, Some(7.0)).unwrap();
        assert_eq!(f.dim(), 7);
        assert_eq!(f.values, vec![7.0, 0.0, -0.5, -0.75, 1.0, 0.5, 0.25]);
        assert_eq!(f.names()[1], "xi_1_1");
    }

    #[test]
    fn missing_inputs_are_reported() {
        let mut s = sample(3);
        let spec = |scheme, joint_index, derivative_mode| FeatureSpec {
            scheme,
            joint_index,
            derivative_mode,
        };
        let based = DerivativeMode::DerivativeBased;
        assert!(matches!(
            build_features(&spec(Scheme::Outward, 2, based.clone()), &s, None),
            Err(Error::MissingNeighborTorque { joint: 2 })
        ));
        assert!(build_features(&spec(Scheme::Outward, 1, based.clone()), &s, None).is_ok());
        assert!(build_features(&spec(Scheme::Standard, 4, based), &s, None).is_err());
        s.q_history.clear();
        let free = DerivativeMode::DerivativeFree(DfTransform::default());
        assert!(matches!(
            build_features(&spec(Scheme::Standard, 1, free), &s, None),
            Err(Error::MissingHistory)
        ));
    }

    #[test]
    fn neighbors_follow_the_recursion() {
        let spec = |scheme, joint_index| FeatureSpec {
            scheme,
            joint_index,
            derivative_mode: DerivativeMode::DerivativeBased,
        };
        assert_eq!(spec(Scheme::Inward, 3).neighbor(6), Some(4));
        assert_eq!(spec(Scheme::Inward, 6).neighbor(6), None);
        assert_eq!(spec(Scheme::Outward, 3).neighbor(6), Some(2));
        assert_eq!(spec(Scheme::Outward, 1).neighbor(6), None);
        assert_eq!(spec(Scheme::Standard, 3).neighbor(6), None);
    }
}
