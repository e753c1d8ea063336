//! Independent closed-form models shared by integration tests.

#![allow(dead_code)]

use nalgebra::{Matrix2, Vector2};

/// Planar 2R arm with point masses at the link tips, gravity `g` along -y.
pub struct Planar2R {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
}

impl Planar2R {
    pub fn mass_matrix(&self, q: [f64; 2]) -> Matrix2<f64> {
        let c2 = q[1].cos();
        let (m1, m2, l1, l2) = (self.m1, self.m2, self.l1, self.l2);
        let h11 = m1 * l1 * l1 + m2 * (l1 * l1 + 2.0 * l1 * l2 * c2 + l2 * l2);
        let h12 = m2 * (l1 * l2 * c2 + l2 * l2);
        let h22 = m2 * l2 * l2;
        Matrix2::new(h11, h12, h12, h22)
    }

    pub fn coriolis(&self, q: [f64; 2], qd: [f64; 2]) -> Vector2<f64> {
        let h = self.m2 * self.l1 * self.l2 * q[1].sin();
        Vector2::new(
            -h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]),
            h * qd[0] * qd[0],
        )
    }

    pub fn gravity(&self, q: [f64; 2]) -> Vector2<f64> {
        let (c1, c12) = (q[0].cos(), (q[0] + q[1]).cos());
        Vector2::new(
            (self.m1 + self.m2) * self.g * self.l1 * c1 + self.m2 * self.g * self.l2 * c12,
            self.m2 * self.g * self.l2 * c12,
        )
    }

    pub fn torque(&self, q: [f64; 2], qd: [f64; 2], qdd: [f64; 2]) -> Vector2<f64> {
        self.mass_matrix(q) * Vector2::from(qdd) + self.coriolis(q, qd) + self.gravity(q)
    }
}
