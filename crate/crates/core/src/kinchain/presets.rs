//! Built-in chains used by tests, the synthetic datasets and the CLI.

use nalgebra::{Matrix3, Rotation3, Vector3};

use super::{JointSpec, KinematicChain, RigidLink};

const G: f64 = 9.81;

/// Solid cylinder with its long axis along the link z axis.
fn rod(mass: f64, length: f64, radius: f64, com: Vector3<f64>) -> RigidLink {
    let transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
    let axial = 0.5 * mass * radius * radius;
    RigidLink {
        mass,
        com,
        inertia_com: Matrix3::from_diagonal(&Vector3::new(transverse, transverse, axial)),
    }
}

fn serial(links: Vec<RigidLink>, origins: Vec<(Matrix3<f64>, Vector3<f64>, Vector3<f64>)>, gravity: Vector3<f64>) -> KinematicChain {
    let joints = origins
        .into_iter()
        .enumerate()
        .map(|(i, (rot, trans, axis))| JointSpec::new(i.checked_sub(1), rot, trans, axis))
        .collect();
    KinematicChain::new(links, joints, gravity).expect("preset chain is valid")
}

/// Planar two-link arm moving in the x-y plane, point masses at the link
/// tips, gravity along -y. `q = 0` stretches the arm along +x.
pub fn planar_2r(m1: f64, m2: f64, l1: f64, l2: f64) -> KinematicChain {
    let z = Vector3::z();
    serial(
        vec![
            RigidLink::point_mass(m1, Vector3::new(l1, 0.0, 0.0)),
            RigidLink::point_mass(m2, Vector3::new(l2, 0.0, 0.0)),
        ],
        vec![
            (Matrix3::identity(), Vector3::zeros(), z),
            (Matrix3::identity(), Vector3::new(l1, 0.0, 0.0), z),
        ],
        Vector3::new(0.0, -G, 0.0),
    )
}

/// Point-mass pendulum hanging along -y at `q = 0`, swinging about z.
pub fn pendulum(mass: f64, length: f64) -> KinematicChain {
    serial(
        vec![RigidLink::point_mass(mass, Vector3::new(0.0, -length, 0.0))],
        vec![(Matrix3::identity(), Vector3::zeros(), Vector3::z())],
        Vector3::new(0.0, -G, 0.0),
    )
}

/// Six-joint arm loosely proportioned after a light assistive manipulator:
/// base yaw, two pitch joints, forearm roll, a wrist pitch mounted with a
/// 60 degree twist, and a final roll. Gravity along -z. Each joint carries
/// the reflected rotor inertia of a geared actuator.
pub fn synthetic_6dof() -> KinematicChain {
    let (y, z) = (Vector3::y(), Vector3::z());
    let twist = *Rotation3::from_euler_angles(0.0, 0.0, 60f64.to_radians()).matrix();
    let id = Matrix3::identity();
    serial(
        vec![
            rod(0.75, 0.15, 0.04, Vector3::new(0.0, 0.005, 0.06)),
            rod(0.99, 0.41, 0.035, Vector3::new(0.01, 0.0, 0.2)),
            rod(0.67, 0.21, 0.03, Vector3::new(0.0, 0.01, 0.1)),
            rod(0.43, 0.10, 0.03, Vector3::new(0.005, 0.0, 0.05)),
            rod(0.43, 0.10, 0.03, Vector3::new(0.0, 0.005, 0.05)),
            rod(0.73, 0.12, 0.04, Vector3::new(0.01, 0.0, 0.06)),
        ],
        vec![
            (id, Vector3::new(0.0, 0.0, 0.15), z),
            (id, Vector3::new(0.0, 0.0, 0.12), y),
            (id, Vector3::new(0.0, 0.0, 0.41), y),
            (id, Vector3::new(0.0, 0.0, 0.21), z),
            (twist, Vector3::new(0.0, 0.0, 0.10), y),
            (id, Vector3::new(0.0, 0.0, 0.10), z),
        ],
        Vector3::new(0.0, 0.0, -G),
    )
    .with_armature(vec![0.3, 0.3, 0.3, 0.1, 0.1, 0.1])
    .expect("preset armature is valid")
}

/// Seven-joint anthropomorphic arm hanging along -z: shoulder flexion,
/// abduction and rotation, elbow, wrist rotation, flexion and abduction.
pub fn synthetic_7dof() -> KinematicChain {
    let (x, y, z) = (Vector3::x(), Vector3::y(), Vector3::z());
    let id = Matrix3::identity();
    serial(
        vec![
            rod(5.0, 0.10, 0.06, Vector3::new(0.0, 0.0, -0.05)),
            rod(4.0, 0.05, 0.06, Vector3::new(0.0, 0.01, -0.02)),
            rod(3.0, 0.30, 0.05, Vector3::new(0.01, 0.0, -0.15)),
            rod(2.5, 0.05, 0.05, Vector3::new(0.0, 0.0, -0.02)),
            rod(1.5, 0.25, 0.04, Vector3::new(0.0, 0.01, -0.12)),
            rod(1.0, 0.05, 0.03, Vector3::new(0.0, 0.0, -0.02)),
            rod(0.5, 0.08, 0.03, Vector3::new(0.01, 0.0, -0.04)),
        ],
        vec![
            (id, Vector3::zeros(), y),
            (id, Vector3::new(0.0, 0.0, -0.10), x),
            (id, Vector3::new(0.0, 0.0, -0.05), z),
            (id, Vector3::new(0.0, 0.0, -0.30), y),
            (id, Vector3::new(0.0, 0.0, -0.05), z),
            (id, Vector3::new(0.0, 0.0, -0.25), y),
            (id, Vector3::new(0.0, 0.0, -0.05), x),
        ],
        Vector3::new(0.0, 0.0, -G),
    )
}

/// Looks a preset up by name (`planar2r`, `pendulum`, `arm6`, `arm7`).
pub fn by_name(name: &str) -> Option<KinematicChain> {
    match name {
        "planar2r" => Some(planar_2r(1.0, 1.0, 1.0, 1.0)),
        "pendulum" => Some(pendulum(1.0, 1.0)),
        "arm6" => Some(synthetic_6dof()),
        "arm7" => Some(synthetic_7dof()),
        _ => None,
    }
}
