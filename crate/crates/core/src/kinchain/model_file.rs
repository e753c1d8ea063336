//! Human-writable TOML description of a serial chain.
//!
//! ```toml
//! format = "cascade-gp-chain/1"
//! gravity = [0.0, 0.0, -9.81]
//!
//! [[joint]]
//! rpy = [0.0, 0.0, 0.0]         # origin rotation, fixed-axis roll/pitch/yaw
//! xyz = [0.0, 0.0, 0.15]        # origin translation in the parent frame
//! axis = [0.0, 0.0, 1.0]
//! mass = 0.75
//! com = [0.0, 0.005, 0.06]
//! inertia = [0.0017, 0.0017, 0.0006, 0.0, 0.0, 0.0]  # ixx iyy izz ixy ixz iyz
//! armature = 0.3                # optional reflected actuator inertia
//! ```

use std::path::Path;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{JointSpec, KinematicChain, RigidLink};
use crate::error::{Error, Result};

pub const CHAIN_FORMAT: &str = "cascade-gp-chain/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainDoc {
    format: String,
    gravity: [f64; 3],
    joint: Vec<JointDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    #[serde(default)]
    rpy: [f64; 3],
    xyz: [f64; 3],
    axis: [f64; 3],
    mass: f64,
    com: [f64; 3],
    inertia: [f64; 6],
    #[serde(default, skip_serializing_if = "is_zero")]
    armature: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

pub fn load_chain(path: impl AsRef<Path>) -> Result<KinematicChain> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_chain(&text).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        },
        other => other,
    })
}

pub fn parse_chain(text: &str) -> Result<KinematicChain> {
    let doc: ChainDoc = toml::from_str(text).map_err(|e| Error::Parse {
        path: "<chain>".into(),
        line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
        msg: e.message().to_string(),
    })?;
    if doc.format != CHAIN_FORMAT {
        return Err(Error::Parse {
            path: "<chain>".into(),
            line: 1,
            msg: format!("unsupported format `{}`, expected `{CHAIN_FORMAT}`", doc.format),
        });
    }
    let mut links = Vec::with_capacity(doc.joint.len());
    let mut joints = Vec::with_capacity(doc.joint.len());
    for (i, j) in doc.joint.iter().enumerate() {
        let [r, p, y] = j.rpy;
        let [ixx, iyy, izz, ixy, ixz, iyz] = j.inertia;
        links.push(RigidLink {
            mass: j.mass,
            com: Vector3::from(j.com),
            inertia_com: Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz),
        });
        joints.push(JointSpec::new(
            i.checked_sub(1),
            *Rotation3::from_euler_angles(r, p, y).matrix(),
            Vector3::from(j.xyz),
            Vector3::from(j.axis),
        ));
    }
    let chain = KinematicChain::new(links, joints, Vector3::from(doc.gravity))?;
    if doc.joint.iter().any(|j| j.armature != 0.0) {
        return chain.with_armature(doc.joint.iter().map(|j| j.armature).collect());
    }
    Ok(chain)
}

pub fn write_chain(chain: &KinematicChain) -> String {
    let joint = chain
        .links()
        .iter()
        .zip(chain.joints())
        .zip(chain.armature())
        .map(|((l, j), armature)| {
            let (r, p, y) = Rotation3::from_matrix_unchecked(j.origin_rotation).euler_angles();
            let i = &l.inertia_com;
            JointDoc {
                rpy: [r, p, y],
                xyz: j.origin_translation.into(),
                axis: j.axis.into(),
                mass: l.mass,
                com: l.com.into(),
                inertia: [i[(0, 0)], i[(1, 1)], i[(2, 2)], i[(0, 1)], i[(0, 2)], i[(1, 2)]],
                armature,
            }
        })
        .collect();
    let doc = ChainDoc {
        format: CHAIN_FORMAT.into(),
        gravity: chain.gravity().into(),
        joint,
    };
    toml::to_string(&doc).expect("chain document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinchain::presets::synthetic_6dof;
    use crate::kinchain::JointState;
    use nalgebra::DVector;

    #[test]
    fn written_chain_reloads_with_same_dynamics() {
        let chain = synthetic_6dof();
        let reloaded = parse_chain(&write_chain(&chain)).unwrap();
        let s = JointState::new(
            DVector::from_fn(6, |i, _| 0.2 * i as f64),
            DVector::from_element(6, 0.3),
            DVector::from_element(6, -0.4),
        );
        let d = chain.rnea(&s).unwrap() - reloaded.rnea(&s).unwrap();
        assert!(d.amax() < 1e-12);
    }

    #[test]
    fn loader_names_offending_joint() {
        let text = r#"
format = "cascade-gp-chain/1"
gravity = [0.0, 0.0, -9.81]
[[joint]]
xyz = [0.0, 0.0, 0.0]
axis = [0.0, 0.0, 1.0]
mass = 1.0
com = [0.0, 0.0, 0.1]
inertia = [0.01, 0.01, 0.01, 0.0, 0.0, 0.0]
[[joint]]
xyz = [0.0, 0.0, 0.2]
axis = [0.0, 0.5, 1.0]
mass = 1.0
com = [0.0, 0.0, 0.1]
inertia = [0.01, 0.01, 0.01, 0.0, 0.0, 0.0]
"#;
        let err = parse_chain(text).unwrap_err();
        assert!(matches!(err, Error::InvalidChain { joint: 1, .. }), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "format = \"cascade-gp-chain/1\"\ngravity = [0.0, 0.0, 0.0]\nfoo = 1\n";
        let err = parse_chain(text).unwrap_err().to_string();
        assert!(err.contains("foo"), "{err}");
    }
}
