//! Synthetic reach-and-gaze babbling.
//!
//! The hand visits random targets inside a box in front of the face. Each
//! target is solved with damped least squares from the current posture, the
//! arm moves there along a minimum-jerk profile in joint space, and the head
//! and eyes fixate the hand at every sample.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use crate::kinematics::{
    default_arm_chain, default_joints, solve_ik, HeadGeometry, IkConfig, JointSpec, SerialChain,
    ARM_DOF, HEAD_DOF,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BabbleConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub box_center: [f64; 3],
    pub box_extent: [f64; 3],
    pub arm: SerialChain,
    pub head: HeadGeometry,
    pub ik: IkConfig,
    /// 7 arm joints then 6 neck/eye joints.
    pub joints: Vec<JointSpec>,
    pub home_posture: [f64; ARM_DOF],
    pub transit_min_s: f64,
    pub transit_max_s: f64,
    pub dwell_min_s: f64,
    pub dwell_max_s: f64,
    /// deg/s; transits are stretched so no joint exceeds it.
    pub max_joint_velocity: f64,
    pub max_target_retries: usize,
}

impl Default for BabbleConfig {
    fn default() -> Self {
        BabbleConfig {
            seed: 0,
            duration_s: 60.0,
            box_center: [0.22, 0.05, 0.06],
            box_extent: [0.20, 0.15, 0.15],
            arm: default_arm_chain(),
            head: HeadGeometry::default(),
            ik: IkConfig::default(),
            joints: default_joints(),
            home_posture: [-45.0, 20.0, 0.0, 60.0, 0.0, 0.0, 0.0],
            transit_min_s: 0.8,
            transit_max_s: 1.6,
            dwell_min_s: 0.1,
            dwell_max_s: 0.5,
            max_joint_velocity: 120.0,
            max_target_retries: 100,
        }
    }
}

impl BabbleConfig {
    pub fn with_seed(seed: u64, duration_s: f64) -> Self {
        BabbleConfig {
            seed,
            duration_s,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if self.box_extent.iter().any(|&e| !(e > 0.0)) {
            return bad(format!("box extent must be positive, got {:?}", self.box_extent));
        }
        if self.arm.dof() != ARM_DOF {
            return bad(format!("arm chain must have {ARM_DOF} joints"));
        }
        if self.joints.len() != ARM_DOF + HEAD_DOF {
            return bad(format!("expected {} joint specs", ARM_DOF + HEAD_DOF));
        }
        for j in &self.joints {
            j.validate()?;
        }
        if !(self.transit_min_s > 0.0 && self.transit_min_s <= self.transit_max_s) {
            return bad("transit times must satisfy 0 < min <= max".into());
        }
        if !(self.dwell_min_s >= 0.0 && self.dwell_min_s <= self.dwell_max_s) {
            return bad("dwell times must satisfy 0 <= min <= max".into());
        }
        if !(self.max_joint_velocity > 0.0) {
            return bad("max_joint_velocity must be positive".into());
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        ((self.duration_s * SAMPLE_RATE_HZ).round() as usize).max(1)
    }

    /// Full 13-joint posture for an arm configuration: gaze fixates the hand.
    pub fn posture(&self, arm_q: &[f64]) -> Vec<f64> {
        let hand = self.arm.forward(arm_q).end;
        let gaze = self.head.gaze_at(&hand).to_array();
        arm_q
            .iter()
            .chain(gaze.iter())
            .zip(&self.joints)
            .map(|(&v, j)| j.clamp(v))
            .collect()
    }

    fn random_target(&self, rng: &mut impl Rng) -> Vector3<f64> {
        let c = Vector3::from(self.box_center);
        let e = Vector3::from(self.box_extent);
        Vector3::from_fn(|i, _| c[i] + e[i] * (rng.random::<f64>() - 0.5))
    }
}

/// Position along a minimum-jerk profile, `tau` in [0, 1].
pub fn minimum_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Peak of d/dtau of [`minimum_jerk`], reached at tau = 1/2.
pub const MINIMUM_JERK_PEAK_RATE: f64 = 1.875;

pub fn generate_babble(cfg: &BabbleConfig) -> Result<Dataset> {
    cfg.validate()?;
    let total = cfg.sample_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arm_joints = &cfg.joints[..ARM_DOF];

    let mut q: Vec<f64> = cfg
        .home_posture
        .iter()
        .zip(arm_joints)
        .map(|(&v, j)| j.clamp(v))
        .collect();
    let mut rows = Vec::with_capacity(total + 256);
    rows.push(cfg.posture(&q));

    let v_allowed = 0.8 * cfg.max_joint_velocity;
    while rows.len() < total {
        let goal = next_goal(cfg, &q, &mut rng)?;
        let start_posture = cfg.posture(&q);
        let goal_posture = cfg.posture(&goal);
        let max_delta = start_posture
            .iter()
            .zip(&goal_posture)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let requested = rng.random_range(cfg.transit_min_s..=cfg.transit_max_s);
        let transit = requested.max(MINIMUM_JERK_PEAK_RATE * max_delta / v_allowed);
        let steps = (transit * SAMPLE_RATE_HZ).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let s = minimum_jerk(k as f64 / steps as f64);
            let qk: Vec<f64> = q.iter().zip(&goal).map(|(a, b)| a + s * (b - a)).collect();
            rows.push(cfg.posture(&qk));
        }
        let dwell = rng.random_range(cfg.dwell_min_s..=cfg.dwell_max_s);
        let dwell_steps = (dwell * SAMPLE_RATE_HZ).round() as usize;
        for _ in 0..dwell_steps {
            rows.push(goal_posture.clone());
        }
        q = goal;
    }
    rows.truncate(total);
    Dataset::new(cfg.joints.clone(), rows, SAMPLE_RATE_HZ)
}

fn next_goal(cfg: &BabbleConfig, q: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
    for _ in 0..cfg.max_target_retries.max(1) {
        let target = cfg.random_target(rng);
        let sol = solve_ik(&cfg.arm, &cfg.joints[..ARM_DOF], q, &target, &cfg.ik);
        if sol.converged {
            return Ok(sol.q_deg);
        }
        log::trace!("target {target:?} unreachable, residual {:.4} m", sol.error);
    }
    Err(Error::Unreachable {
        attempts: cfg.max_target_retries.max(1),
    })
}
