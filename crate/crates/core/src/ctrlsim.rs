//! PD feedback plus inverse-dynamics feedforward, closed around a fixed-step
//! RK4 forward-dynamics plant.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datasets::SineMotion;
use crate::error::{check_len, Error, Result};
use crate::features::Sample;
use crate::kinchain::{JointState, KinematicChain};
use crate::learner::InverseDynamicsModel;

/// Where the feedforward torque comes from.
#[derive(Debug, Clone)]
pub enum Feedforward {
    None,
    Rbd(KinematicChain),
    Learned(Box<InverseDynamicsModel>),
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub kp: DVector<f64>,
    pub kd: DVector<f64>,
    pub feedforward: Feedforward,
}

impl ControllerConfig {
    /// Gains that give each joint a second-order response at `bandwidth_hz`
    /// with damping ratio `damping`. A joint's inertia is taken as the
    /// largest `1 / (H^-1)_jj`, the inertia it sees with every other joint
    /// free, over `postures`. The proportional gain also covers the largest
    /// gravity stiffness `sum_k |dg_j/dq_k|` seen over the same postures, so
    /// gravity cannot pull the arm away from the reference. Keep the bandwidth
    /// well below the controller rate.
    pub fn tuned(
        chain: &KinematicChain,
        postures: &[DVector<f64>],
        bandwidth_hz: f64,
        damping: f64,
        feedforward: Feedforward,
    ) -> Result<Self> {
        if !(bandwidth_hz > 0.0) || !(damping >= 0.0) || postures.is_empty() {
            return Err(Error::InvalidArgument(
                "tuning needs postures, a positive bandwidth and non-negative damping".into(),
            ));
        }
        let n = chain.dof();
        let mut inertia = DVector::zeros(n);
        let mut stiffness = DVector::<f64>::zeros(n);
        let eps = 1e-6;
        for q in postures {
            let mut row_sum = DVector::<f64>::zeros(n);
            for k in 0..n {
                let (mut up, mut down) = (q.clone(), q.clone());
                up[k] += eps;
                down[k] -= eps;
                let dg = (chain.gravity_torques(&up)? - chain.gravity_torques(&down)?) / (2.0 * eps);
                row_sum += dg.abs();
            }
            stiffness = stiffness.sup(&row_sum);
            let h = chain.mass_matrix(q)?;
            let h_inv = h
                .cholesky()
                .ok_or_else(|| Error::NotPositiveDefinite { q: q.iter().copied().collect() })?
                .inverse();
            inertia = inertia.zip_map(&h_inv.diagonal(), |a: f64, v: f64| a.max(1.0 / v));
        }
        let w = 2.0 * std::f64::consts::PI * bandwidth_hz;
        Ok(Self {
            kp: inertia.map(|i| i * w * w) + stiffness,
            kd: inertia.map(|i| 2.0 * damping * i * w),
            feedforward,
        })
    }

    /// Postures visited by `reference` every `step` seconds up to `duration`.
    pub fn postures(reference: &dyn Reference, duration: f64, step: f64) -> Vec<DVector<f64>> {
        let n = (duration / step).floor() as usize;
        (0..=n).map(|k| DVector::from_vec(reference.at(k as f64 * step).0)).collect()
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        check_len("kp", dof, self.kp.len())?;
        check_len("kd", dof, self.kd.len())?;
        if self.kp.iter().chain(self.kd.iter()).any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument("controller gains must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// A desired joint trajectory defined for `t >= 0`.
pub trait Reference {
    fn dof(&self) -> usize;
    /// `(q, qd, qdd)` at `t`.
    fn at(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>);
}

impl Reference for SineMotion {
    fn dof(&self) -> usize {
        SineMotion::dof(self)
    }

    fn at(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        SineMotion::at(self, t)
    }
}

/// Rest-to-rest minimum-jerk segments through waypoints, holding the last
/// waypoint afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinJerkPath {
    pub waypoints: Vec<Vec<f64>>,
    pub segment_duration: f64,
}

impl MinJerkPath {
    pub fn new(waypoints: Vec<Vec<f64>>, segment_duration: f64) -> Result<Self> {
        let n = waypoints.first().map_or(0, Vec::len);
        if waypoints.len() < 2 || n == 0 || waypoints.iter().any(|w| w.len() != n) {
            return Err(Error::InvalidArgument("a path needs two or more waypoints of equal length".into()));
        }
        if !(segment_duration > 0.0) {
            return Err(Error::InvalidArgument("segment duration must be positive".into()));
        }
        Ok(Self {
            waypoints,
            segment_duration,
        })
    }

    /// Lift, tilt the last two joints, tilt back, return.
    pub fn pick_tilt_return(home: &[f64], lift: &[f64], tilt: f64, segment_duration: f64) -> Result<Self> {
        let n = home.len();
        let mut tilted = lift.to_vec();
        for v in tilted.iter_mut().skip(n.saturating_sub(2)) {
            *v += tilt;
        }
        Self::new(
            vec![home.to_vec(), lift.to_vec(), tilted, lift.to_vec(), home.to_vec()],
            segment_duration,
        )
    }

    pub fn duration(&self) -> f64 {
        (self.waypoints.len() - 1) as f64 * self.segment_duration
    }
}

impl Reference for MinJerkPath {
    fn dof(&self) -> usize {
        self.waypoints[0].len()
    }

    fn at(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.dof();
        let segments = self.waypoints.len() - 1;
        let seg = ((t / self.segment_duration).floor().max(0.0) as usize).min(segments - 1);
        let tau_t = (t - seg as f64 * self.segment_duration) / self.segment_duration;
        let s = tau_t.clamp(0.0, 1.0);
        let moving = (0.0..1.0).contains(&tau_t);
        let (p, v, a) = if moving || (tau_t < 0.0) {
            let pos = 10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5);
            let vel = (30.0 * s.powi(2) - 60.0 * s.powi(3) + 30.0 * s.powi(4)) / self.segment_duration;
            let acc = (60.0 * s - 180.0 * s.powi(2) + 120.0 * s.powi(3)) / self.segment_duration.powi(2);
            (pos, vel, acc)
        } else {
            (1.0, 0.0, 0.0)
        };
        let (from, to) = (&self.waypoints[seg], &self.waypoints[seg + 1]);
        let mut q = vec![0.0; n];
        let mut qd = vec![0.0; n];
        let mut qdd = vec![0.0; n];
        for j in 0..n {
            let d = to[j] - from[j];
            q[j] = from[j] + p * d;
            qd[j] = v * d;
            qdd[j] = a * d;
        }
        (q, qd, qdd)
    }
}

/// Desired state at `t` as a sample, with a position history spaced
/// `period` apart when `history_len > 0` and enough time has elapsed.
pub fn desired_sample(reference: &dyn Reference, t: f64, history_len: usize, period: f64) -> Sample {
    let n = reference.dof();
    let (q, qd, qdd) = reference.at(t);
    let available = if period > 0.0 {
        ((t / period + 1e-9).floor() as usize + 1).min(history_len)
    } else {
        0
    };
    let q_history = if history_len > 0 && available >= history_len {
        let past: Vec<Vec<f64>> = (0..history_len).map(|b| reference.at(t - b as f64 * period).0).collect();
        (0..n).map(|j| past.iter().map(|p| p[j]).collect()).collect()
    } else {
        Vec::new()
    };
    Sample {
        t,
        q: DVector::from_vec(q),
        qd: DVector::from_vec(qd),
        qdd: DVector::from_vec(qdd),
        tau: DVector::zeros(n),
        q_history,
    }
}

/// Feedforward torque at the desired state. A learned model whose position
/// history is not yet available falls back to its own rigid-body chain, or
/// to zero without one.
pub fn feedforward(ff: &Feedforward, desired: &Sample) -> Result<DVector<f64>> {
    let rbd = |chain: &KinematicChain| chain.rnea(&JointState::new(desired.q.clone(), desired.qd.clone(), desired.qdd.clone()));
    match ff {
        Feedforward::None => Ok(DVector::zeros(desired.dof())),
        Feedforward::Rbd(chain) => rbd(chain),
        Feedforward::Learned(model) => match model.predict_sample(desired) {
            Err(Error::MissingHistory) => {
                log::warn!("feedforward history not filled at t = {}; using the rigid-body model", desired.t);
                match &model.chain {
                    Some(c) => rbd(c),
                    None => Ok(DVector::zeros(desired.dof())),
                }
            }
            other => other,
        },
    }
}

/// `tau = FF(desired) + Kp (q_d - q) + Kd (qd_d - qd)`.
pub fn control_torque(cfg: &ControllerConfig, desired: &Sample, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
    let n = desired.dof();
    cfg.validate(n)?;
    check_len("actual q", n, q.len())?;
    check_len("actual qd", n, qd.len())?;
    let ff = feedforward(&cfg.feedforward, desired)?;
    Ok(ff + cfg.kp.component_mul(&(&desired.q - q)) + cfg.kd.component_mul(&(&desired.qd - qd)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    /// Integration step (s).
    pub dt: f64,
    /// Zero-order-hold period of the controller (s).
    pub control_period: f64,
    pub duration: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            control_period: 0.025,
            duration: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub t: Vec<f64>,
    /// `T x N` blocks.
    pub q_desired: DMatrix<f64>,
    pub qd_desired: DMatrix<f64>,
    pub qdd_desired: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub qd: DMatrix<f64>,
    pub tau: DMatrix<f64>,
    pub diverged: bool,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `q_desired - q`.
    pub fn tracking_error(&self) -> DMatrix<f64> {
        &self.q_desired - &self.q
    }

    /// Root-mean-square position error per joint.
    pub fn rms_error(&self) -> Vec<f64> {
        let e = self.tracking_error();
        (0..e.ncols())
            .map(|j| (e.column(j).norm_squared() / e.nrows().max(1) as f64).sqrt())
            .collect()
    }
}

/// Runs the closed loop from the reference's initial state. The controller
/// is evaluated every `control_period` and held in between; the plant is
/// integrated with RK4 at `dt`. A non-finite state stops the run with
/// `diverged` set.
pub fn simulate(plant: &KinematicChain, cfg: &ControllerConfig, reference: &dyn Reference, settings: &SimSettings) -> Result<SimTrace> {
    let n = plant.dof();
    check_len("reference joints", n, reference.dof())?;
    cfg.validate(n)?;
    if !(settings.dt > 0.0) || !(settings.duration > 0.0) || !(settings.control_period >= settings.dt) {
        return Err(Error::InvalidArgument(
            "need dt > 0, duration > 0 and control_period >= dt".into(),
        ));
    }
    let hold = (settings.control_period / settings.dt).round().max(1.0) as usize;
    let steps = (settings.duration / settings.dt).round() as usize;
    let (history_len, period) = match &cfg.feedforward {
        Feedforward::Learned(m) => (m.history_len, m.sample_period()),
        _ => (0, 0.0),
    };

    let (q0, qd0, _) = reference.at(0.0);
    let mut q = DVector::from_vec(q0);
    let mut qd = DVector::from_vec(qd0);
    let mut tau = DVector::zeros(n);
    let mut rows: Vec<[Vec<f64>; 6]> = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut diverged = false;

    let accel = |q: &DVector<f64>, qd: &DVector<f64>, tau: &DVector<f64>| plant.forward_dynamics(q, qd, tau);
    for k in 0..=steps {
        let t = k as f64 * settings.dt;
        let desired = desired_sample(reference, t, history_len, period);
        if k % hold == 0 {
            tau = control_torque(cfg, &desired, &q, &qd)?;
        }
        rows.push([
            desired.q.iter().copied().collect(),
            desired.qd.iter().copied().collect(),
            desired.qdd.iter().copied().collect(),
            q.iter().copied().collect(),
            qd.iter().copied().collect(),
            tau.iter().copied().collect(),
        ]);
        times.push(t);
        if k == steps {
            break;
        }
        let h = settings.dt;
        let step = (|| -> Result<(DVector<f64>, DVector<f64>)> {
            let a1 = accel(&q, &qd, &tau)?;
            let (q2, v2) = (&q + &qd * (h / 2.0), &qd + &a1 * (h / 2.0));
            let a2 = accel(&q2, &v2, &tau)?;
            let (q3, v3) = (&q + &v2 * (h / 2.0), &qd + &a2 * (h / 2.0));
            let a3 = accel(&q3, &v3, &tau)?;
            let (q4, v4) = (&q + &v3 * h, &qd + &a3 * h);
            let a4 = accel(&q4, &v4, &tau)?;
            let qn = &q + (&qd + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
            let vn = &qd + (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (h / 6.0);
            Ok((qn, vn))
        })();
        match step {
            Ok((qn, vn)) if qn.iter().chain(vn.iter()).all(|v| v.is_finite()) => {
                q = qn;
                qd = vn;
            }
            Ok(_) | Err(Error::NonFinite(_)) | Err(Error::NotPositiveDefinite { .. }) => {
                log::warn!("simulation diverged at t = {t}");
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let block = |b: usize| DMatrix::from_fn(rows.len(), n, |i, j| rows[i][b][j]);
    Ok(SimTrace {
        t: times,
        q_desired: block(0),
        qd_desired: block(1),
        qdd_desired: block(2),
        q: block(3),
        qd: block(4),
        tau: block(5),
        diverged,
    })
}
