//! Joint ranges, the single-joint muscle geometry, and the serial-chain
//! surrogate of a humanoid arm and head used to synthesize babbling data.

use nalgebra::{Matrix3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named degree of freedom with its angular range in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    pub min_deg: f64,
    pub max_deg: f64,
}

impl JointSpec {
    pub fn new(name: impl Into<String>, min_deg: f64, max_deg: f64) -> Result<Self> {
        let spec = JointSpec {
            name: name.into(),
            min_deg,
            max_deg,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_deg.is_finite() && self.max_deg.is_finite() && self.min_deg < self.max_deg) {
            return Err(Error::InvalidArgument(format!(
                "joint {}: range [{}, {}] must satisfy min < max",
                self.name, self.min_deg, self.max_deg
            )));
        }
        Ok(())
    }

    pub fn range(&self) -> f64 {
        self.max_deg - self.min_deg
    }

    pub fn contains(&self, deg: f64) -> bool {
        deg >= self.min_deg && deg <= self.max_deg
    }

    pub fn clamp(&self, deg: f64) -> f64 {
        deg.clamp(self.min_deg, self.max_deg)
    }

    /// Maps the range affinely onto [0, 1].
    pub fn normalize(&self, deg: f64) -> f64 {
        (deg - self.min_deg) / self.range()
    }

    pub fn denormalize(&self, unit: f64) -> f64 {
        self.min_deg + unit * self.range()
    }
}

/// Two segments hinged at a joint: `a` is the upper segment, `b` the forearm.
/// The muscle spans the free ends, so its length depends only on the angle
/// between the segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmGeometry {
    pub a: f64,
    pub b: f64,
}

impl ArmGeometry {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "segment lengths must be positive, got a={a}, b={b}"
            )));
        }
        Ok(ArmGeometry { a, b })
    }

    /// Shortest and longest attainable muscle length.
    pub fn length_band(&self) -> (f64, f64) {
        ((self.a - self.b).abs(), self.a + self.b)
    }
}

/// Muscle length for the angle `theta_deg` between the two segments (law of
/// cosines). `theta_deg` is the supplement of the anatomical joint angle.
pub fn muscle_length(geom: ArmGeometry, theta_deg: f64) -> Result<f64> {
    if !(0.0..=180.0).contains(&theta_deg) {
        return Err(Error::Domain {
            what: "theta_deg",
            value: theta_deg,
            domain: "[0, 180]".into(),
        });
    }
    let ArmGeometry { a, b } = geom;
    let sq = a * a + b * b - 2.0 * a * b * theta_deg.to_radians().cos();
    // cancellation at theta = 0 with a = b can leave a tiny negative
    Ok(sq.max(0.0).sqrt())
}

/// Inverse of [`muscle_length`].
pub fn joint_angle_from_length(geom: ArmGeometry, lambda_m: f64) -> Result<f64> {
    let (lo, hi) = geom.length_band();
    let slack = 1e-12 * hi;
    if !(lambda_m >= lo - slack && lambda_m <= hi + slack) {
        return Err(Error::Domain {
            what: "lambda_m",
            value: lambda_m,
            domain: format!("[{lo}, {hi}]"),
        });
    }
    let ArmGeometry { a, b } = geom;
    let cos_theta = (a * a + b * b - lambda_m * lambda_m) / (2.0 * a * b);
    Ok(cos_theta.clamp(-1.0, 1.0).acos().to_degrees())
}

/// One revolute joint of a serial chain: translate by `origin` (in the parent
/// frame), then rotate about `axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainJoint {
    pub name: String,
    pub origin: [f64; 3],
    pub axis: [f64; 3],
}

/// Serial chain of revolute joints. Frames are x forward, y left, z up,
/// measured in meters from the torso origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialChain {
    pub base: [f64; 3],
    pub joints: Vec<ChainJoint>,
    /// End-effector offset in the last joint frame.
    pub tool: [f64; 3],
}

/// Joint and end-effector positions of one chain configuration.
#[derive(Debug, Clone)]
pub struct ChainPose {
    /// World position of every joint, in chain order.
    pub joint_positions: Vec<Vector3<f64>>,
    /// World rotation axis of every joint.
    pub joint_axes: Vec<Vector3<f64>>,
    pub end: Vector3<f64>,
}

impl SerialChain {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn forward(&self, q_deg: &[f64]) -> ChainPose {
        assert_eq!(q_deg.len(), self.joints.len(), "chain configuration width");
        let mut pos = Vector3::from(self.base);
        let mut rot = UnitQuaternion::identity();
        let mut joint_positions = Vec::with_capacity(self.joints.len());
        let mut joint_axes = Vec::with_capacity(self.joints.len());
        for (joint, &q) in self.joints.iter().zip(q_deg) {
            pos += rot * Vector3::from(joint.origin);
            let axis = Unit::new_normalize(Vector3::from(joint.axis));
            joint_positions.push(pos);
            joint_axes.push(rot * axis.into_inner());
            rot *= UnitQuaternion::from_axis_angle(&axis, q.to_radians());
        }
        let end = pos + rot * Vector3::from(self.tool);
        ChainPose {
            joint_positions,
            joint_axes,
            end,
        }
    }

    /// Positional Jacobian of the end effector, columns per joint in m/rad.
    pub fn jacobian(&self, pose: &ChainPose) -> Vec<Vector3<f64>> {
        pose.joint_axes
            .iter()
            .zip(&pose.joint_positions)
            .map(|(axis, p)| axis.cross(&(pose.end - p)))
            .collect()
    }
}

/// Damped-least-squares position IK settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkConfig {
    pub damping: f64,
    /// Position tolerance in meters.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Task-space step clamp per iteration, meters.
    pub max_step: f64,
}

impl Default for IkConfig {
    fn default() -> Self {
        IkConfig {
            damping: 0.1,
            tolerance: 1e-3,
            max_iterations: 200,
            max_step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IkSolution {
    pub q_deg: Vec<f64>,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped least squares from `q_start` toward `target`, projecting onto the
/// joint ranges after every step. Each step is the minimum-norm joint
/// displacement for the damped problem.
pub fn solve_ik(
    chain: &SerialChain,
    joints: &[JointSpec],
    q_start: &[f64],
    target: &Vector3<f64>,
    cfg: &IkConfig,
) -> IkSolution {
    let mut q: Vec<f64> = q_start
        .iter()
        .zip(joints)
        .map(|(&v, j)| j.clamp(v))
        .collect();
    let lambda2 = cfg.damping * cfg.damping;
    let mut iterations = 0;
    loop {
        let pose = chain.forward(&q);
        let err = target - pose.end;
        let norm = err.norm();
        if norm <= cfg.tolerance || iterations >= cfg.max_iterations {
            return IkSolution {
                q_deg: q,
                error: norm,
                iterations,
                converged: norm <= cfg.tolerance,
            };
        }
        let step = if norm > cfg.max_step {
            err * (cfg.max_step / norm)
        } else {
            err
        };
        let jac = chain.jacobian(&pose);
        let mut jjt = Matrix3::identity() * lambda2;
        for col in &jac {
            jjt += col * col.transpose();
        }
        // (J J^T + lambda^2 I) is symmetric positive definite
        let Some(chol) = jjt.cholesky() else {
            return IkSolution {
                q_deg: q,
                error: norm,
                iterations,
                converged: false,
            };
        };
        let y = chol.solve(&step);
        for ((qi, col), joint) in q.iter_mut().zip(&jac).zip(joints) {
            *qi = joint.clamp(*qi + col.dot(&y).to_degrees());
        }
        iterations += 1;
    }
}

/// Placement of the neck pivot and the eyes for analytic gaze.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadGeometry {
    pub neck_pivot: [f64; 3],
    /// Cyclopean eye point relative to the neck pivot.
    pub eye_offset: [f64; 3],
    pub interocular: f64,
    /// Fraction of gaze pitch and yaw carried by the neck; the eyes take the rest.
    pub neck_share: f64,
    /// Neck roll per degree of gaze yaw.
    pub roll_coupling: f64,
}

impl Default for HeadGeometry {
    fn default() -> Self {
        HeadGeometry {
            neck_pivot: [0.0, 0.0, 0.16],
            eye_offset: [0.06, 0.0, 0.06],
            interocular: 0.068,
            neck_share: 0.6,
            roll_coupling: -0.15,
        }
    }
}

/// Neck pitch/roll/yaw and eye tilt/version/vergence, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeAngles {
    pub neck_pitch: f64,
    pub neck_roll: f64,
    pub neck_yaw: f64,
    pub eyes_tilt: f64,
    pub eyes_version: f64,
    pub eyes_vergence: f64,
}

impl GazeAngles {
    pub fn to_array(self) -> [f64; 6] {
        [
            self.neck_pitch,
            self.neck_roll,
            self.neck_yaw,
            self.eyes_tilt,
            self.eyes_version,
            self.eyes_vergence,
        ]
    }

    pub fn total_pitch(&self) -> f64 {
        self.neck_pitch + self.eyes_tilt
    }

    pub fn total_yaw(&self) -> f64 {
        self.neck_yaw + self.eyes_version
    }
}

impl HeadGeometry {
    pub fn eye_center(&self) -> Vector3<f64> {
        Vector3::from(self.neck_pivot) + Vector3::from(self.eye_offset)
    }

    /// Fixates `target` with both eyes.
    pub fn gaze_at(&self, target: &Vector3<f64>) -> GazeAngles {
        let v = target - self.eye_center();
        let yaw = v.y.atan2(v.x).to_degrees();
        let pitch = v.z.atan2(v.x.hypot(v.y)).to_degrees();
        let neck_yaw = self.neck_share * yaw;
        let neck_pitch = self.neck_share * pitch;
        let vergence = 2.0 * (0.5 * self.interocular).atan2(v.norm()).to_degrees();
        GazeAngles {
            neck_pitch,
            neck_roll: self.roll_coupling * yaw,
            neck_yaw,
            eyes_tilt: pitch - neck_pitch,
            eyes_version: yaw - neck_yaw,
            eyes_vergence: vergence,
        }
    }
}

/// The 7-DoF left arm (3 shoulder, 2 elbow, 2 wrist) hanging along -z at zero.
pub fn default_arm_chain() -> SerialChain {
    let j = |name: &str, origin: [f64; 3], axis: [f64; 3]| ChainJoint {
        name: name.into(),
        origin,
        axis,
    };
    SerialChain {
        base: [0.0, 0.11, 0.0],
        joints: vec![
            j("l_shoulder_pitch", [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            j("l_shoulder_roll", [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            j("l_shoulder_yaw", [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
            j("l_elbow", [0.0, 0.0, -0.15], [0.0, -1.0, 0.0]),
            j("l_wrist_prosup", [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
            j("l_wrist_pitch", [0.0, 0.0, -0.15], [0.0, 1.0, 0.0]),
            j("l_wrist_yaw", [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        ],
        tool: [0.0, 0.0, -0.08],
    }
}

pub const ARM_DOF: usize = 7;
pub const HEAD_DOF: usize = 6;

/// Shipped joint ranges: 7 arm joints followed by neck pitch/roll/yaw and eye
/// tilt/version/vergence.
pub const DEFAULT_JOINTS_CSV: &str = include_str!("../data/default_joints.csv");

pub fn default_joints() -> Vec<JointSpec> {
    crate::dataset::parse_joint_specs(DEFAULT_JOINTS_CSV.as_bytes(), "default_joints.csv")
        .expect("shipped joint spec parses")
}
