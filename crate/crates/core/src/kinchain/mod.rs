//! Rigid-body model of a serial, all-revolute manipulator.
//!
//! Every link frame coincides with its joint frame. Joint `i` sits at
//! `origin_translation` in the frame of link `i - 1` (or the base), is rotated
//! by `origin_rotation`, and then spins about `axis` by `q[i]`. All link
//! quantities (COM, inertia) are expressed in the link's own frame.
//!
//! Inverse dynamics is computed with the recursive Newton-Euler algorithm:
//! an outward pass propagates angular velocity, angular acceleration and
//! linear acceleration from the base, then an inward pass balances forces and
//! moments on each link and projects the moment onto the joint axis. Gravity
//! enters as a fictitious upward acceleration of the base.

mod model_file;
pub mod presets;

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, SymmetricEigen, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};

pub use model_file::{load_chain, parse_chain, write_chain};

const SYMMETRY_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidLink {
    /// kg
    pub mass: f64,
    /// Centre of mass in the link frame (m).
    pub com: Vector3<f64>,
    /// Inertia about the COM, link frame (kg m^2).
    pub inertia_com: Matrix3<f64>,
}

impl RigidLink {
    pub fn point_mass(mass: f64, com: Vector3<f64>) -> Self {
        Self {
            mass,
            com,
            inertia_com: Matrix3::zeros(),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.mass >= 0.0) || !self.mass.is_finite() {
            return Err(format!("mass must be finite and >= 0, got {}", self.mass));
        }
        if self.com.iter().chain(self.inertia_com.iter()).any(|v| !v.is_finite()) {
            return Err("non-finite COM or inertia".into());
        }
        let i = &self.inertia_com;
        let scale = i.abs().max().max(1.0);
        if (i - i.transpose()).abs().max() > SYMMETRY_TOL * scale {
            return Err("inertia is not symmetric".into());
        }
        let eig = SymmetricEigen::new(*i).eigenvalues;
        let tol = 1e-12 * scale;
        if eig.iter().any(|&l| l < -tol) {
            return Err(format!("inertia is not positive semi-definite: {:?}", eig.as_slice()));
        }
        let (a, b, c) = (eig[0], eig[1], eig[2]);
        if a + b < c - tol || a + c < b - tol || b + c < a - tol {
            return Err("principal moments violate the triangle inequality".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    /// `None` for the first joint (attached to the base).
    pub parent: Option<usize>,
    pub origin_rotation: Matrix3<f64>,
    /// Joint origin in the parent frame (m).
    pub origin_translation: Vector3<f64>,
    /// Unit rotation axis in the joint frame.
    pub axis: Vector3<f64>,
}

impl JointSpec {
    pub fn new(
        parent: Option<usize>,
        origin_rotation: Matrix3<f64>,
        origin_translation: Vector3<f64>,
        axis: Vector3<f64>,
    ) -> Self {
        Self {
            parent,
            origin_rotation,
            origin_translation,
            axis,
        }
    }

    fn validate(&self, index: usize) -> std::result::Result<(), String> {
        let expected_parent = index.checked_sub(1);
        if self.parent != expected_parent {
            return Err(format!(
                "parent must be {expected_parent:?} in a serial chain, got {:?}",
                self.parent
            ));
        }
        let r = &self.origin_rotation;
        if r.iter().chain(self.origin_translation.iter()).chain(self.axis.iter()).any(|v| !v.is_finite()) {
            return Err("non-finite origin or axis".into());
        }
        if (r.transpose() * r - Matrix3::identity()).abs().max() > ORTHO_TOL {
            return Err("origin rotation is not orthonormal".into());
        }
        if (r.determinant() - 1.0).abs() > ORTHO_TOL {
            return Err("origin rotation has det != +1".into());
        }
        if (self.axis.norm() - 1.0).abs() > ORTHO_TOL {
            return Err(format!("axis is not unit length (|axis| = {})", self.axis.norm()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    links: Vec<RigidLink>,
    joints: Vec<JointSpec>,
    /// Base frame, m/s^2.
    gravity: Vector3<f64>,
    /// Reflected actuator inertia per joint (kg m^2), added to the diagonal
    /// of the mass matrix. Empty means none.
    #[serde(default)]
    armature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>, qd: DVector<f64>, qdd: DVector<f64>) -> Self {
        Self { q, qd, qdd }
    }

    pub fn from_slices(q: &[f64], qd: &[f64], qdd: &[f64]) -> Self {
        Self::new(
            DVector::from_column_slice(q),
            DVector::from_column_slice(qd),
            DVector::from_column_slice(qdd),
        )
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(n), DVector::zeros(n))
    }

    fn check(&self, n: usize) -> Result<()> {
        check_len("q", n, self.q.len())?;
        check_len("qd", n, self.qd.len())?;
        check_len("qdd", n, self.qdd.len())?;
        check_finite("q", self.q.as_slice())?;
        check_finite("qd", self.qd.as_slice())?;
        check_finite("qdd", self.qdd.as_slice())
    }
}

impl KinematicChain {
    pub fn new(links: Vec<RigidLink>, joints: Vec<JointSpec>, gravity: Vector3<f64>) -> Result<Self> {
        let chain = Self {
            links,
            joints,
            gravity,
            armature: Vec::new(),
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Checks every type invariant and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.links.is_empty() {
            return Err(Error::InvalidChain {
                joint: 0,
                reason: "chain has no links".into(),
            });
        }
        if self.links.len() != self.joints.len() {
            return Err(Error::InvalidChain {
                joint: self.links.len().min(self.joints.len()),
                reason: format!("{} links but {} joints", self.links.len(), self.joints.len()),
            });
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gravity"));
        }
        if !self.armature.is_empty() && self.armature.len() != self.links.len() {
            return Err(Error::dim("armature", self.links.len(), self.armature.len()));
        }
        if let Some(i) = self.armature.iter().position(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidChain {
                joint: i,
                reason: format!("armature must be finite and >= 0, got {}", self.armature[i]),
            });
        }
        for (i, (link, joint)) in self.links.iter().zip(&self.joints).enumerate() {
            joint
                .validate(i)
                .and_then(|_| link.validate())
                .map_err(|reason| Error::InvalidChain { joint: i, reason })?;
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[RigidLink] {
        &self.links
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn gravity(&self) -> Vector3<f64> {
        self.gravity
    }

    /// Returns a copy with the given reflected actuator inertias.
    pub fn with_armature(&self, armature: Vec<f64>) -> Result<Self> {
        let chain = Self {
            armature,
            ..self.clone()
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Reflected actuator inertia of each joint, zero when none was set.
    pub fn armature(&self) -> Vec<f64> {
        (0..self.dof()).map(|i| self.armature.get(i).copied().unwrap_or(0.0)).collect()
    }

    pub fn with_gravity(&self, gravity: Vector3<f64>) -> Self {
        Self {
            gravity,
            ..self.clone()
        }
    }

    /// Joint torques `H(q) qdd + C(q, qd) qd + tau_g(q)`.
    pub fn rnea(&self, state: &JointState) -> Result<DVector<f64>> {
        state.check(self.dof())?;
        Ok(self.rnea_unchecked(
            state.q.as_slice(),
            state.qd.as_slice(),
            state.qdd.as_slice(),
            &self.gravity,
        ))
    }

    pub fn gravity_torques(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dof();
        self.rnea(&JointState::new(q.clone(), DVector::zeros(n), DVector::zeros(n)))
    }

    /// Column `j` is the torque produced by a unit acceleration of joint `j`
    /// with the arm at rest and gravity switched off.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dof();
        check_len("q", n, q.len())?;
        check_finite("q", q.as_slice())?;
        Ok(self.mass_matrix_unchecked(q.as_slice()))
    }

    /// Coriolis, centrifugal and gravity torques (`rnea` with `qdd = 0`).
    pub fn bias_forces(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
        self.rnea(&JointState::new(q.clone(), qd.clone(), DVector::zeros(self.dof())))
    }

    /// Solves `H(q) qdd = tau - bias(q, qd)` with a Cholesky factorization.
    pub fn forward_dynamics(
        &self,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        tau: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n = self.dof();
        check_len("tau", n, tau.len())?;
        check_finite("tau", tau.as_slice())?;
        let bias = self.bias_forces(q, qd)?;
        let h = self.mass_matrix_unchecked(q.as_slice());
        let chol = h.cholesky().ok_or_else(|| Error::NotPositiveDefinite {
            q: q.as_slice().to_vec(),
        })?;
        Ok(chol.solve(&(tau - bias)))
    }

    /// Returns a copy with a point mass rigidly attached to `link_index`.
    /// `com_offset` is the payload position in that link's frame.
    pub fn attach_payload(&self, link_index: usize, mass: f64, com_offset: Vector3<f64>) -> Result<Self> {
        if link_index >= self.dof() {
            return Err(Error::InvalidArgument(format!(
                "link index {link_index} out of range for a {}-link chain",
                self.dof()
            )));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::InvalidArgument(format!("payload mass must be >= 0, got {mass}")));
        }
        check_finite("com_offset", com_offset.as_slice())?;
        if mass == 0.0 {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        let link = &mut out.links[link_index];
        let total = link.mass + mass;
        let com = (link.com * link.mass + com_offset * mass) / total;
        let shift = |m: f64, d: Vector3<f64>| (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * m;
        link.inertia_com = link.inertia_com + shift(link.mass, link.com - com) + shift(mass, com_offset - com);
        link.inertia_com = (link.inertia_com + link.inertia_com.transpose()) * 0.5;
        link.mass = total;
        link.com = com;
        Ok(out)
    }

    pub(crate) fn mass_matrix_unchecked(&self, q: &[f64]) -> DMatrix<f64> {
        let n = self.dof();
        let zero = vec![0.0; n];
        let mut unit = vec![0.0; n];
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            unit[j] = 1.0;
            let col = self.rnea_unchecked(q, &zero, &unit, &Vector3::zeros());
            h.set_column(j, &col);
            unit[j] = 0.0;
        }
        // Columns agree with the rows up to rounding; symmetrize exactly.
        (&h + h.transpose()) * 0.5
    }

    pub(crate) fn rnea_unchecked(&self, q: &[f64], qd: &[f64], qdd: &[f64], gravity: &Vector3<f64>) -> DVector<f64> {
        let n = self.dof();
        // Rotation taking link-i coordinates to parent coordinates.
        let mut rot: Vec<Matrix3<f64>> = Vec::with_capacity(n);
        let mut force: Vec<Vector3<f64>> = Vec::with_capacity(n);
        let mut moment: Vec<Vector3<f64>> = Vec::with_capacity(n);

        let mut w = Vector3::zeros();
        let mut dw = Vector3::zeros();
        let mut a = -gravity;

        for i in 0..n {
            let joint = &self.joints[i];
            let link = &self.links[i];
            let z = joint.axis;
            let spin = Rotation3::from_axis_angle(&Unit::new_unchecked(z), q[i]);
            let r = joint.origin_rotation * spin.matrix();
            let rt = r.transpose();
            let p = joint.origin_translation;

            let a_origin = rt * (a + dw.cross(&p) + w.cross(&w.cross(&p)));
            let w_in = rt * w;
            let w_i = w_in + z * qd[i];
            let dw_i = rt * dw + z * qdd[i] + w_in.cross(&(z * qd[i]));

            let c = link.com;
            let a_com = a_origin + dw_i.cross(&c) + w_i.cross(&w_i.cross(&c));
            force.push(a_com * link.mass);
            moment.push(link.inertia_com * dw_i + w_i.cross(&(link.inertia_com * w_i)));
            rot.push(r);

            w = w_i;
            dw = dw_i;
            a = a_origin;
        }

        let mut tau = DVector::zeros(n);
        let mut f_next = Vector3::zeros();
        let mut n_next = Vector3::zeros();
        for i in (0..n).rev() {
            let (f_child, n_child) = if i + 1 < n {
                let r = &rot[i + 1];
                let f = r * f_next;
                (f, r * n_next + self.joints[i + 1].origin_translation.cross(&f))
            } else {
                (Vector3::zeros(), Vector3::zeros())
            };
            let f_i = force[i] + f_child;
            let n_i = moment[i] + self.links[i].com.cross(&force[i]) + n_child;
            tau[i] = self.joints[i].axis.dot(&n_i) + self.armature.get(i).map_or(0.0, |a| a * qdd[i]);
            f_next = f_i;
            n_next = n_i;
        }
        tau
    }

    /// Kinetic energy `0.5 qd^T H(q) qd`.
    pub fn kinetic_energy(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<f64> {
        let h = self.mass_matrix(q)?;
        check_len("qd", self.dof(), qd.len())?;
        Ok(0.5 * qd.dot(&(h * qd)))
    }
}
