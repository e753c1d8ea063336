use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::kinchain::KinematicChain;

/// Prior mean of a GP. Evaluated on the raw (unstandardized) input row, which
/// is the kernel feature vector followed by any auxiliary slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanFunction {
    Zero,
    Constant { value: f64 },
    Rbd(RbdMean),
}

/// Rigid-body torque of one joint as a GP prior mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbdMean {
    pub chain: KinematicChain,
    /// Zero-based joint whose torque is returned.
    pub joint: usize,
    pub inputs: RbdInputs,
}

/// Where the mean finds the joint state inside an input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RbdInputs {
    /// Direct slot indices for every joint's position, velocity, acceleration.
    State {
        q: Vec<usize>,
        qd: Vec<usize>,
        qdd: Vec<usize>,
    },
    /// Three-point position histories (newest first) sampled `dt` apart;
    /// velocity and acceleration come from backward differences.
    History { slots: Vec<[usize; 3]>, dt: f64 },
}

impl MeanFunction {
    pub fn eval(&self, row: &[f64]) -> f64 {
        match self {
            MeanFunction::Zero => 0.0,
            MeanFunction::Constant { value } => *value,
            MeanFunction::Rbd(rbd) => rbd.eval(row),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, MeanFunction::Zero)
    }
}

impl RbdMean {
    pub fn eval(&self, row: &[f64]) -> f64 {
        let n = self.chain.dof();
        let (q, qd, qdd) = match &self.inputs {
            RbdInputs::State { q, qd, qdd } => {
                let pick = |idx: &[usize]| idx.iter().map(|&i| row[i]).collect::<Vec<_>>();
                (pick(q), pick(qd), pick(qdd))
            }
            RbdInputs::History { slots, dt } => {
                let mut q = Vec::with_capacity(n);
                let mut qd = Vec::with_capacity(n);
                let mut qdd = Vec::with_capacity(n);
                for s in slots {
                    let (p0, p1, p2) = (row[s[0]], row[s[1]], row[s[2]]);
                    q.push(p0);
                    qd.push((3.0 * p0 - 4.0 * p1 + p2) / (2.0 * dt));
                    qdd.push((p0 - 2.0 * p1 + p2) / (dt * dt));
                }
                (q, qd, qdd)
            }
        };
        let tau: DVector<f64> = self.chain.rnea_unchecked(&q, &qd, &qdd, &self.chain.gravity());
        tau[self.joint]
    }
}
