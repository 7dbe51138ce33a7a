//! Simulated claw environments: a valve to rotate, a box lid to flip,
//! and a door to pull open.
//!
//! The hand is F two-link planar fingers arranged around the workpiece
//! (plus a 1-D arm rail for the door task). Joints are damped unit-mass
//! double integrators driven through one of four actuation schemes; the
//! workpiece is coupled to fingertips through a velocity-level friction
//! model. All integration is semi-implicit Euler at a fixed timestep.
//!
//! Episodes are fully reproducible: the per-episode physics draw is part
//! of the flat state vector, so `reset_to` on a recorded state replays an
//! episode exactly, step for step.

mod reward;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use sha2::{Digest, Sha256};

pub use reward::{
    door_reward, door_success, spin_reward, spin_success, RewardVariant, BONUS_INNER, BONUS_OUTER,
    DOOR_SUCCESS_ANGLE, SUCCESS_TOL,
};

use crate::error::{Error, Result};
use crate::numkit::DenseVec;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Valve,
    BoxFlip,
    Door,
}

impl Task {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "valve" => Some(Task::Valve),
            "box" => Some(Task::BoxFlip),
            "door" => Some(Task::Door),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Valve => "valve",
            Task::BoxFlip => "box",
            Task::Door => "door",
        }
    }
}

/// How policy actions in [-1, 1] become joint torques.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actuation {
    /// Action is a position target, tracked by a PD loop.
    PositionTarget,
    /// Action is integrated into a persistent position target.
    PositionDelta,
    /// Action is a torque.
    Torque,
    /// Action is integrated into a persistent torque command.
    TorqueDelta,
}

impl Actuation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "position" => Some(Actuation::PositionTarget),
            "position_delta" => Some(Actuation::PositionDelta),
            "torque" => Some(Actuation::Torque),
            "torque_delta" => Some(Actuation::TorqueDelta),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Actuation::PositionTarget => "position",
            Actuation::PositionDelta => "position_delta",
            Actuation::Torque => "torque",
            Actuation::TorqueDelta => "torque_delta",
        }
    }

    pub fn is_position(self) -> bool {
        matches!(self, Actuation::PositionTarget | Actuation::PositionDelta)
    }

    pub fn is_delta(self) -> bool {
        matches!(self, Actuation::PositionDelta | Actuation::TorqueDelta)
    }

    pub fn all() -> [Actuation; 4] {
        [
            Actuation::PositionTarget,
            Actuation::PositionDelta,
            Actuation::Torque,
            Actuation::TorqueDelta,
        ]
    }
}

/// Physics randomization variants.
///
/// `A` trains on nominal physics. `B` redraws PD gains and contact
/// friction every episode. `C` is the same draw as `B` and exists as a
/// separate label because observations already carry the previous action
/// for every variant here, which is the extra signal `C` is meant to add;
/// the variant study reports it as its own arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomizationVariant {
    A,
    B,
    C,
}

impl RandomizationVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A" => Some(RandomizationVariant::A),
            "B" => Some(RandomizationVariant::B),
            "C" => Some(RandomizationVariant::C),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RandomizationVariant::A => "A",
            RandomizationVariant::B => "B",
            RandomizationVariant::C => "C",
        }
    }

    pub fn randomizes(self) -> bool {
        !matches!(self, RandomizationVariant::A)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationConfig {
    pub variant: RandomizationVariant,
    pub gain_lo: f64,
    pub gain_hi: f64,
    pub friction_lo: f64,
    pub friction_hi: f64,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        RandomizationConfig {
            variant: RandomizationVariant::A,
            gain_lo: 0.7,
            gain_hi: 1.3,
            friction_lo: 0.7,
            friction_hi: 1.3,
        }
    }
}

/// Per-episode physics draw. Scales multiply the nominal PD gains and
/// contact friction; all ones on nominal physics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynParams {
    pub kp_scale: f64,
    pub kd_scale: f64,
    pub friction_scale: f64,
}

impl Default for DynParams {
    fn default() -> Self {
        DynParams {
            kp_scale: 1.0,
            kd_scale: 1.0,
            friction_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub task: Task,
    /// Fingers on the claw: 3 or 4 (door is built for 3).
    pub fingers: usize,
    pub actuation: Actuation,
    pub randomization: RandomizationConfig,
    pub reward: RewardVariant,
    /// Door only: use |arm_x - door_x| instead of the signed arm term.
    pub abs_door_term: bool,
    /// Spin tasks: draw the initial workpiece angle from [-pi/4, pi/4]
    /// instead of starting at zero.
    pub wide_init: bool,
    pub horizon: usize,
    pub dt: f64,
    pub gamma: f64,
}

impl EnvConfig {
    pub fn new(task: Task) -> Self {
        EnvConfig {
            task,
            fingers: 3,
            actuation: Actuation::PositionTarget,
            randomization: RandomizationConfig::default(),
            reward: RewardVariant::R2,
            abs_door_term: false,
            wide_init: false,
            horizon: 100,
            dt: 0.05,
            gamma: 0.995,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.fingers, 3 | 4) {
            return Err(Error::Config(format!(
                "fingers must be 3 or 4, got {}",
                self.fingers
            )));
        }
        if self.task == Task::Door && self.fingers != 3 {
            return Err(Error::Config("door task is built for 3 fingers".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        let r = &self.randomization;
        for (name, lo, hi) in [
            ("gain", r.gain_lo, r.gain_hi),
            ("friction", r.friction_lo, r.friction_hi),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} range [{lo}, {hi}] must satisfy 0 < lo <= hi"
                )));
            }
        }
        Ok(())
    }

    /// Canonical one-line rendering of every field that changes the
    /// dynamics or reward. The initial-state distribution (`wide_init`)
    /// is deliberately left out: data recorded under a wider init replays
    /// on the same physics.
    pub fn canonical_string(&self) -> String {
        let r = &self.randomization;
        format!(
            "task={} fingers={} actuation={} randomization={} gain_lo={} gain_hi={} friction_lo={} friction_hi={} reward={} abs_door_term={} horizon={} dt={} gamma={}",
            self.task.as_str(),
            self.fingers,
            self.actuation.as_str(),
            r.variant.as_str(),
            r.gain_lo,
            r.gain_hi,
            r.friction_lo,
            r.friction_hi,
            self.reward.as_str(),
            self.abs_door_term,
            self.horizon,
            self.dt,
            self.gamma,
        )
    }

    /// 16-hex-digit digest of [`canonical_string`](Self::canonical_string);
    /// stamped into demo files and artifact metadata so mismatched
    /// environments are caught at load time.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Fixed physical constants of the rig. Not exposed through config; the
/// per-episode [`DynParams`] scales are the only thing randomization
/// touches.
#[derive(Debug, Clone)]
pub(crate) struct DynConsts {
    pub mass: f64,
    /// Intrinsic viscous damping on every joint, N m s/rad.
    pub damping: f64,
    pub kp: f64,
    pub kd: f64,
    /// Motor torque limit, applied to every scheme's output.
    pub torque_limit: f64,
    /// Delta schemes: command slew rate in full-scale units per second.
    pub delta_rate: f64,
    pub joint_limit: f64,
    pub link1: f64,
    pub link2: f64,
    pub valve_radius: f64,
    /// Radius of the circle the finger bases sit on; chosen so a straight
    /// finger touches the workpiece rim.
    pub base_radius: f64,
    pub contact_radius: f64,
    /// Velocity-level contact friction: workpiece angular acceleration
    /// per unit of tangential slip.
    pub coupling: f64,
    pub obj_damping: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    pub arm_lo: f64,
    pub arm_hi: f64,
    pub door_x: f64,
    pub grasp_radius: f64,
    /// A finger only counts as gripping when curled this far in; straight
    /// fingers brushing past the handle never latch.
    pub grasp_reach_max: f64,
    /// Door angle per meter of arm pull-back once latched.
    pub door_gain: f64,
    pub door_max: f64,
    pub arm_init: f64,
}

impl Default for DynConsts {
    fn default() -> Self {
        let link1 = 0.15;
        let link2 = 0.10;
        let valve_radius = 0.06;
        DynConsts {
            mass: 1.0,
            damping: 2.0,
            kp: 10.0,
            kd: 1.0,
            torque_limit: 2.0,
            delta_rate: 1.0,
            joint_limit: PI / 2.0,
            link1,
            link2,
            valve_radius,
            base_radius: link1 + link2 + valve_radius,
            contact_radius: 0.035,
            coupling: 60.0,
            obj_damping: 0.8,
            box_lo: -PI / 4.0,
            box_hi: 5.0 * PI / 4.0,
            arm_lo: 0.0,
            arm_hi: 0.4,
            door_x: 0.35,
            grasp_radius: 0.03,
            grasp_reach_max: 0.15,
            door_gain: 4.0,
            door_max: PI / 2.0,
            arm_init: 0.3,
        }
    }
}

/// Shape summary of the decision process an environment presents.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSpec {
    pub task: Task,
    pub state_dim: usize,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub init: InitDescriptor,
}

/// Named initial-state distribution with its parameter range.
#[derive(Debug, Clone, PartialEq)]
pub struct InitDescriptor {
    pub name: &'static str,
    pub angle_lo: f64,
    pub angle_hi: f64,
}

/// Result of one control step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: DenseVec,
    pub reward: f64,
    pub done: bool,
}

/// Optional reset overrides used by the analysis tooling.
#[derive(Debug, Clone, Default)]
pub struct ResetOverrides {
    /// Spin tasks: force this initial workpiece angle.
    pub init_angle: Option<f64>,
    /// Force this physics draw instead of sampling one.
    pub dyn_params: Option<DynParams>,
}

/// Field offsets into the flat state vector; see [`EnvModel::state_flat`].
#[derive(Debug, Clone, Copy)]
pub struct StateLayout {
    pub q: usize,
    pub qv: usize,
    pub arm_x: usize,
    pub arm_v: usize,
    pub obj_angle: usize,
    pub obj_vel: usize,
    pub latched: usize,
    pub latch_x: usize,
    pub goal: usize,
    pub cmd: usize,
    pub last_action: usize,
    pub kp_scale: usize,
    pub kd_scale: usize,
    pub friction_scale: usize,
    pub step_idx: usize,
    pub len: usize,
}

impl StateLayout {
    fn new(hand_joints: usize, action_dim: usize) -> Self {
        let q = 0;
        let qv = q + hand_joints;
        let arm_x = qv + hand_joints;
        let arm_v = arm_x + 1;
        let obj_angle = arm_v + 1;
        let obj_vel = obj_angle + 1;
        let latched = obj_vel + 1;
        let latch_x = latched + 1;
        let goal = latch_x + 1;
        let cmd = goal + 1;
        let last_action = cmd + action_dim;
        let kp_scale = last_action + action_dim;
        let kd_scale = kp_scale + 1;
        let friction_scale = kd_scale + 1;
        let step_idx = friction_scale + 1;
        StateLayout {
            q,
            qv,
            arm_x,
            arm_v,
            obj_angle,
            obj_vel,
            latched,
            latch_x,
            goal,
            cmd,
            last_action,
            kp_scale,
            kd_scale,
            friction_scale,
            step_idx,
            len: step_idx + 1,
        }
    }
}

/// One claw environment instance. Holds the current episode's state;
/// cheap to clone.
#[derive(Debug, Clone)]
pub struct EnvModel {
    cfg: EnvConfig,
    consts: DynConsts,
    hash: String,
    q: Vec<f64>,
    qv: Vec<f64>,
    arm_x: f64,
    arm_v: f64,
    /// Workpiece angle; for the door this is the door opening.
    obj_angle: f64,
    obj_vel: f64,
    latched: bool,
    latch_x: f64,
    goal: f64,
    cmd: Vec<f64>,
    last_action: Vec<f64>,
    dyn_params: DynParams,
    step_idx: usize,
    /// Per-step success quantity (angle error, or door angle); episode
    /// bookkeeping, not part of the replayable state.
    success_track: Vec<f64>,
}

impl EnvModel {
    pub fn create(cfg: EnvConfig) -> Result<EnvModel> {
        cfg.validate()?;
        let hash = cfg.config_hash();
        let hand_joints = 2 * cfg.fingers;
        let action_dim = hand_joints + usize::from(cfg.task == Task::Door);
        let mut env = EnvModel {
            consts: DynConsts::default(),
            hash,
            q: vec![0.0; hand_joints],
            qv: vec![0.0; hand_joints],
            arm_x: 0.0,
            arm_v: 0.0,
            obj_angle: 0.0,
            obj_vel: 0.0,
            latched: false,
            latch_x: 0.0,
            goal: 0.0,
            cmd: vec![0.0; action_dim],
            last_action: vec![0.0; action_dim],
            dyn_params: DynParams::default(),
            step_idx: 0,
            success_track: Vec::with_capacity(cfg.horizon),
            cfg,
        };
        env.apply_reset(DynParams::default(), 0.0);
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn hand_joints(&self) -> usize {
        2 * self.cfg.fingers
    }

    pub fn action_dim(&self) -> usize {
        self.cmd.len()
    }

    pub fn obs_dim(&self) -> usize {
        match self.cfg.task {
            Task::Valve | Task::BoxFlip => 2 * self.hand_joints() + 2,
            Task::Door => self.hand_joints() + 3 + self.action_dim(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.layout().len
    }

    pub fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout::new(self.hand_joints(), self.action_dim())
    }

    pub fn spec(&self) -> MdpSpec {
        let wide = self.cfg.wide_init && self.cfg.task != Task::Door;
        MdpSpec {
            task: self.cfg.task,
            state_dim: self.state_dim(),
            obs_dim: self.obs_dim(),
            action_dim: self.action_dim(),
            horizon: self.cfg.horizon,
            gamma: self.cfg.gamma,
            init: InitDescriptor {
                name: if wide { "wide" } else { "fixed" },
                angle_lo: if wide { -PI / 4.0 } else { 0.0 },
                angle_hi: if wide { PI / 4.0 } else { 0.0 },
            },
        }
    }

    pub fn obj_angle(&self) -> f64 {
        self.obj_angle
    }

    pub fn obj_vel(&self) -> f64 {
        self.obj_vel
    }

    pub fn goal(&self) -> f64 {
        self.goal
    }

    pub fn arm_x(&self) -> f64 {
        self.arm_x
    }

    pub fn latched(&self) -> bool {
        self.latched
    }

    pub fn joint_positions(&self) -> &[f64] {
        &self.q
    }

    pub fn joint_velocities(&self) -> &[f64] {
        &self.qv
    }

    pub fn dyn_params(&self) -> DynParams {
        self.dyn_params
    }

    pub fn step_idx(&self) -> usize {
        self.step_idx
    }

    /// Starts a fresh episode, drawing the physics scales and (under a
    /// wide init) the initial workpiece angle from `rng`. The draw order
    /// is fixed: kp, kd, friction, then the init angle.
    pub fn reset(&mut self, rng: &mut impl Rng) {
        self.reset_with(&ResetOverrides::default(), rng);
    }

    pub fn reset_with(&mut self, overrides: &ResetOverrides, rng: &mut impl Rng) {
        let r = &self.cfg.randomization;
        let drawn = if r.variant.randomizes() {
            DynParams {
                kp_scale: rng.gen_range(r.gain_lo..=r.gain_hi),
                kd_scale: rng.gen_range(r.gain_lo..=r.gain_hi),
                friction_scale: rng.gen_range(r.friction_lo..=r.friction_hi),
            }
        } else {
            DynParams::default()
        };
        let init_angle = if self.cfg.wide_init && self.cfg.task != Task::Door {
            rng.gen_range(-PI / 4.0..=PI / 4.0)
        } else {
            0.0
        };
        let params = overrides.dyn_params.unwrap_or(drawn);
        let angle = overrides.init_angle.unwrap_or(init_angle);
        self.apply_reset(params, angle);
    }

    fn apply_reset(&mut self, params: DynParams, init_angle: f64) {
        self.q.fill(0.0);
        self.qv.fill(0.0);
        self.arm_v = 0.0;
        self.latched = false;
        self.latch_x = 0.0;
        self.obj_vel = 0.0;
        self.step_idx = 0;
        self.success_track.clear();
        self.dyn_params = params;
        self.last_action.fill(0.0);
        match self.cfg.task {
            Task::Valve | Task::BoxFlip => {
                self.arm_x = 0.0;
                self.obj_angle = init_angle;
                self.goal = PI;
            }
            Task::Door => {
                self.arm_x = self.consts.arm_init;
                self.obj_angle = 0.0;
                self.goal = self.consts.door_max;
            }
        }
        // Commands start consistent with the pose: under position control
        // a zero action holds the reset posture exactly.
        self.cmd.fill(0.0);
        if self.cfg.actuation.is_position() && self.cfg.task == Task::Door {
            let c = &self.consts;
            let arm_cmd = 2.0 * (self.arm_x - c.arm_lo) / (c.arm_hi - c.arm_lo) - 1.0;
            *self.cmd.last_mut().unwrap() = arm_cmd;
        }
    }

    /// Restores a state produced by [`state_flat`](Self::state_flat).
    /// Success bookkeeping restarts, so episode-level success is only
    /// meaningful when replaying from a step-zero state.
    pub fn reset_to(&mut self, flat: &[f64]) -> Result<()> {
        let lay = self.layout();
        if flat.len() != lay.len {
            return Err(Error::DimMismatch {
                context: "reset_to state",
                expected: lay.len,
                got: flat.len(),
            });
        }
        if !flat.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "reset_to state".into(),
            });
        }
        let j = self.hand_joints();
        let a = self.action_dim();
        self.q.copy_from_slice(&flat[lay.q..lay.q + j]);
        self.qv.copy_from_slice(&flat[lay.qv..lay.qv + j]);
        self.arm_x = flat[lay.arm_x];
        self.arm_v = flat[lay.arm_v];
        self.obj_angle = flat[lay.obj_angle];
        self.obj_vel = flat[lay.obj_vel];
        self.latched = flat[lay.latched] != 0.0;
        self.latch_x = flat[lay.latch_x];
        self.goal = flat[lay.goal];
        self.cmd.copy_from_slice(&flat[lay.cmd..lay.cmd + a]);
        self.last_action
            .copy_from_slice(&flat[lay.last_action..lay.last_action + a]);
        self.dyn_params = DynParams {
            kp_scale: flat[lay.kp_scale],
            kd_scale: flat[lay.kd_scale],
            friction_scale: flat[lay.friction_scale],
        };
        self.step_idx = flat[lay.step_idx] as usize;
        self.success_track.clear();
        Ok(())
    }

    /// Flat snapshot of everything the next `step` depends on, including
    /// the episode's physics draw. Layout per [`layout`](Self::layout):
    /// `[q | qv | arm_x arm_v | obj_angle obj_vel | latched latch_x |
    /// goal | cmd | last_action | kp kd friction scales | step]`.
    pub fn state_flat(&self) -> DenseVec {
        let lay = self.layout();
        let mut out = vec![0.0; lay.len];
        out[lay.q..lay.q + self.q.len()].copy_from_slice(&self.q);
        out[lay.qv..lay.qv + self.qv.len()].copy_from_slice(&self.qv);
        out[lay.arm_x] = self.arm_x;
        out[lay.arm_v] = self.arm_v;
        out[lay.obj_angle] = self.obj_angle;
        out[lay.obj_vel] = self.obj_vel;
        out[lay.latched] = f64::from(self.latched);
        out[lay.latch_x] = self.latch_x;
        out[lay.goal] = self.goal;
        out[lay.cmd..lay.cmd + self.cmd.len()].copy_from_slice(&self.cmd);
        out[lay.last_action..lay.last_action + self.last_action.len()]
            .copy_from_slice(&self.last_action);
        out[lay.kp_scale] = self.dyn_params.kp_scale;
        out[lay.kd_scale] = self.dyn_params.kd_scale;
        out[lay.friction_scale] = self.dyn_params.friction_scale;
        out[lay.step_idx] = self.step_idx as f64;
        DenseVec::from_vec(out)
    }

    /// Current observation. Spin tasks: `[q | obj_angle | obj_angle -
    /// goal | last_action]`. Door: `[q | arm_x | door_angle | arm_x -
    /// door_x | last_action]`. Velocities are deliberately absent.
    pub fn observation(&self) -> DenseVec {
        let mut obs = Vec::with_capacity(self.obs_dim());
        obs.extend_from_slice(&self.q);
        match self.cfg.task {
            Task::Valve | Task::BoxFlip => {
                obs.push(self.obj_angle);
                obs.push(self.obj_angle - self.goal);
            }
            Task::Door => {
                obs.push(self.arm_x);
                obs.push(self.obj_angle);
                obs.push(self.arm_x - self.consts.door_x);
            }
        }
        obs.extend_from_slice(&self.last_action);
        DenseVec::from_vec(obs)
    }

    /// Advances one control step. Actions are clamped to [-1, 1]
    /// entrywise; the clamped action is what the next observation echoes.
    /// Returns the new observation, the reward of the new state, and
    /// whether the episode just hit the horizon.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if action.len() != self.action_dim() {
            return Err(Error::DimMismatch {
                context: "env step action",
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        if !action.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("env step action at step {}", self.step_idx),
            });
        }
        let c = self.consts.clone();
        let dt = self.cfg.dt;
        let kp = c.kp * self.dyn_params.kp_scale;
        let kd = c.kd * self.dyn_params.kd_scale;
        let mu = c.coupling * self.dyn_params.friction_scale;

        // Command update.
        for (i, &raw) in action.iter().enumerate() {
            let a = raw.clamp(-1.0, 1.0);
            if self.cfg.actuation.is_delta() {
                self.cmd[i] = (self.cmd[i] + a * c.delta_rate * dt).clamp(-1.0, 1.0);
            } else {
                self.cmd[i] = a;
            }
            self.last_action[i] = a;
        }

        // Hand joints: PD or direct torque, then semi-implicit Euler with
        // hard limits.
        let j = self.hand_joints();
        for i in 0..j {
            // Torque modes go through the +-torque_limit command range;
            // the position-mode PD loop is a servo and exerts whatever
            // kp demands.
            let tau = if self.cfg.actuation.is_position() {
                let target = self.cmd[i] * c.joint_limit;
                kp * (target - self.q[i]) - kd * self.qv[i]
            } else {
                self.cmd[i] * c.torque_limit
            };
            self.qv[i] += dt * (tau - c.damping * self.qv[i]) / c.mass;
            self.q[i] += dt * self.qv[i];
            if self.q[i].abs() > c.joint_limit {
                self.q[i] = self.q[i].clamp(-c.joint_limit, c.joint_limit);
                self.qv[i] = 0.0;
            }
        }

        // Door arm rail.
        if self.cfg.task == Task::Door {
            let cmd = *self.cmd.last().unwrap();
            let force = if self.cfg.actuation.is_position() {
                let target = c.arm_lo + (cmd + 1.0) / 2.0 * (c.arm_hi - c.arm_lo);
                kp * (target - self.arm_x) - kd * self.arm_v
            } else {
                cmd * c.torque_limit
            };
            self.arm_v += dt * (force - c.damping * self.arm_v) / c.mass;
            self.arm_x += dt * self.arm_v;
            if self.arm_x < c.arm_lo || self.arm_x > c.arm_hi {
                self.arm_x = self.arm_x.clamp(c.arm_lo, c.arm_hi);
                self.arm_v = 0.0;
            }
        }

        // Workpiece.
        match self.cfg.task {
            Task::Valve => {
                let accel = self.contact_accel(self.cfg.fingers, mu) - c.obj_damping * self.obj_vel;
                self.obj_vel += dt * accel;
                self.obj_angle += dt * self.obj_vel;
            }
            Task::BoxFlip => {
                let accel = self.contact_accel(2, mu) - c.obj_damping * self.obj_vel;
                self.obj_vel += dt * accel;
                self.obj_angle += dt * self.obj_vel;
                if self.obj_angle < c.box_lo || self.obj_angle > c.box_hi {
                    self.obj_angle = self.obj_angle.clamp(c.box_lo, c.box_hi);
                    self.obj_vel = 0.0;
                }
            }
            Task::Door => {
                if !self.latched {
                    let gripping = (0..self.cfg.fingers)
                        .filter(|&f| {
                            let reach = self.finger_reach(f);
                            reach < c.grasp_reach_max
                                && (self.arm_x + reach - c.door_x).abs() < c.grasp_radius
                        })
                        .count();
                    if gripping >= 2 {
                        self.latched = true;
                        self.latch_x = self.arm_x;
                    }
                }
                let prev = self.obj_angle;
                self.obj_angle = if self.latched {
                    (c.door_gain * (self.latch_x - self.arm_x)).clamp(0.0, c.door_max)
                } else {
                    0.0
                };
                self.obj_vel = (self.obj_angle - prev) / dt;
            }
        }

        self.step_idx += 1;
        self.success_track.push(match self.cfg.task {
            Task::Valve | Task::BoxFlip => (self.obj_angle - self.goal).abs(),
            Task::Door => self.obj_angle,
        });

        let reward = match self.cfg.task {
            Task::Valve | Task::BoxFlip => {
                spin_reward(self.cfg.reward, (self.obj_angle - self.goal).abs())
            }
            Task::Door => door_reward(
                self.obj_angle - self.goal,
                self.arm_x,
                c.door_x,
                self.cfg.abs_door_term,
            ),
        };
        Ok(StepResult {
            observation: self.observation(),
            reward,
            done: self.step_idx >= self.cfg.horizon,
        })
    }

    /// Success of the episode stepped so far (on the steps since the last
    /// reset).
    pub fn episode_success(&self) -> bool {
        match self.cfg.task {
            Task::Valve | Task::BoxFlip => spin_success(&self.success_track, self.cfg.horizon),
            Task::Door => door_success(&self.success_track),
        }
    }

    /// Angular acceleration imparted by fingertips dragging on the
    /// workpiece rim. `paddles` contact points sit on the rim, evenly
    /// spaced starting at the workpiece angle; a fingertip within the
    /// contact radius of one drives the rim through viscous friction.
    /// The coupling is one-way: fingers feel no reaction.
    fn contact_accel(&self, paddles: usize, mu: f64) -> f64 {
        let c = &self.consts;
        let mut accel = 0.0;
        for f in 0..self.cfg.fingers {
            let (pos, vel) = self.finger_tip(f);
            let mut engaged = false;
            for p in 0..paddles {
                let pa = self.obj_angle + TAU * p as f64 / paddles as f64;
                let px = c.valve_radius * pa.cos();
                let py = c.valve_radius * pa.sin();
                let d2 = (pos.0 - px).powi(2) + (pos.1 - py).powi(2);
                if d2 < c.contact_radius * c.contact_radius {
                    engaged = true;
                    break;
                }
            }
            if !engaged {
                continue;
            }
            let r = (pos.0 * pos.0 + pos.1 * pos.1).sqrt();
            if r < 1e-9 {
                continue;
            }
            let tangent = (-pos.1 / r, pos.0 / r);
            let v_tan = vel.0 * tangent.0 + vel.1 * tangent.1;
            accel += mu * (v_tan - c.valve_radius * self.obj_vel);
        }
        accel
    }

    /// Planar fingertip position and velocity for spin tasks. Finger `f`
    /// is rooted on the base circle at angle `2 pi f / F`, pointing at
    /// the workpiece; joint angles deflect it from that ray.
    fn finger_tip(&self, f: usize) -> ((f64, f64), (f64, f64)) {
        let c = &self.consts;
        let base_angle = TAU * f as f64 / self.cfg.fingers as f64;
        let inward = base_angle + PI;
        let (q1, q2) = (self.q[2 * f], self.q[2 * f + 1]);
        let (v1, v2) = (self.qv[2 * f], self.qv[2 * f + 1]);
        let a1 = inward + q1;
        let a2 = a1 + q2;
        let bx = c.base_radius * base_angle.cos();
        let by = c.base_radius * base_angle.sin();
        let px = bx + c.link1 * a1.cos() + c.link2 * a2.cos();
        let py = by + c.link1 * a1.sin() + c.link2 * a2.sin();
        let vx = -c.link1 * a1.sin() * v1 - c.link2 * a2.sin() * (v1 + v2);
        let vy = c.link1 * a1.cos() * v1 + c.link2 * a2.cos() * (v1 + v2);
        ((px, py), (vx, vy))
    }

    /// Door task: how far finger `f`'s tip extends beyond the arm
    /// carriage along the rail axis.
    fn finger_reach(&self, f: usize) -> f64 {
        let c = &self.consts;
        let (q1, q2) = (self.q[2 * f], self.q[2 * f + 1]);
        c.link1 * q1.cos() + c.link2 * (q1 + q2).cos()
    }
}

/// Runs one full episode, asking `act` for an action and its behavior
/// log-density at every observation. The environment must be freshly
/// reset; its state going in is recorded as the trajectory's init state.
pub fn rollout(
    env: &mut EnvModel,
    mut act: impl FnMut(&DenseVec) -> Result<(DenseVec, f64)>,
) -> Result<Trajectory> {
    let horizon = env.horizon();
    let init_state = env.state_flat();
    let mut observations = Vec::with_capacity(horizon);
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let mut log_probs = Vec::with_capacity(horizon);
    let mut obs = env.observation();
    for _ in 0..horizon {
        let (action, logp) = act(&obs)?;
        let result = env.step(&action)?;
        observations.push(obs);
        actions.push(action);
        rewards.push(result.reward);
        log_probs.push(logp);
        obs = result.observation;
    }
    Ok(Trajectory {
        init_state,
        observations,
        actions,
        rewards,
        log_probs,
        success: env.episode_success(),
    })
}

/// Episode under uniform random actions in [-1, 1]; the floor used for
/// score normalization and the probe signal for the oscillation study.
pub fn random_policy_rollout(env: &mut EnvModel, rng: &mut impl Rng) -> Result<Trajectory> {
    let dim = env.action_dim();
    rollout(env, |_| {
        let action: DenseVec = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Ok((action, 0.0))
    })
}
