use rand::Rng;
use rand_distr::StandardNormal;

use crate::envsuite::{rollout, Actuation, EnvModel, Task};
use crate::error::{Error, Result};
use crate::numkit::DenseVec;
use crate::trajectory::Trajectory;

/// Tuning knobs for the scripted expert.
#[derive(Debug, Clone)]
pub struct ExpertKnobs {
    /// Stretch factor on the gait period; larger is slower and smoother.
    pub slowdown: f64,
    /// Std of Gaussian noise added to each action dimension.
    pub action_noise: f64,
    /// Keep episodes that fail the success predicate instead of
    /// rejecting them.
    pub allow_failed: bool,
}

impl Default for ExpertKnobs {
    fn default() -> Self {
        ExpertKnobs {
            slowdown: 2.0,
            action_noise: 0.05,
            allow_failed: false,
        }
    }
}

impl ExpertKnobs {
    pub fn validate(&self) -> Result<()> {
        if !(self.slowdown > 0.0 && self.slowdown.is_finite()) {
            return Err(Error::Argument(format!(
                "expert slowdown must be positive, got {}",
                self.slowdown
            )));
        }
        if !(self.action_noise >= 0.0 && self.action_noise.is_finite()) {
            return Err(Error::Argument(format!(
                "expert action noise must be non-negative, got {}",
                self.action_noise
            )));
        }
        Ok(())
    }
}

/// Label stamped into demo metadata by this expert implementation.
pub const EXPERT_LABEL: &str = "scripted-gait-v1";

// Joint-space waypoints of one paddling cycle, radians (sweep, bend).
// The cycle is a loop: drag the fingertip across the rim (curling
// through the stroke tail, which keeps pushing while starting the
// lift), finish curling clear of the contact shell, carry back outside
// it, then drop onto the rim. The carry posture puts the tip at the
// same tangential station as the drive start, so the descent is nearly
// radial and drags nothing backward.
const DRIVE_START: (f64, f64) = (0.22, 0.0);
const DRIVE_END: (f64, f64) = (-0.22, -0.55);
const LIFTED: (f64, f64) = (-0.10, -1.45);
const CARRIED: (f64, f64) = (0.78, -1.45);
// Phase fractions: drive, lift, carry, descend.
const DRIVE_FRAC: f64 = 0.40;
const LIFT_FRAC: f64 = 0.12;
const CARRY_FRAC: f64 = 0.28;
// Spin servo: command a spin proportional to the spin still needed
// after free coasting (the workpiece spins down at OBJ_DAMPING once
// released, so err + vel / OBJ_DAMPING is what coasting leaves behind)
// and pace the drive strokes to match it. The workpiece velocity-
// matches the fingertips within a few steps of contact and the
// coupling is symmetric, so a paced stroke drives or brakes as needed,
// and a stroke paced to zero parks the tips on the rim and pins the
// workpiece. The coast brake below caps overshoot, so the gain leans
// hot to keep the final approach short.
const VSTAR_GAIN: f64 = 1.3;
const VSTAR_CAP: f64 = 1.8;
const OBJ_DAMPING: f64 = 0.8;
// Rim travel of one full-rate drive stroke, in rim radians; dividing
// the spin command by the full-rate stroke spin gives the clock rate.
const STROKE_TRAVEL: f64 = 1.73;
// The stroke clock waits for the fingers: it only advances while every
// joint tracks its target this closely, which bounds how far corners
// get cut. Strokes hold a tight tolerance because contact depth is the
// drive force; the reposition legs run over wide clearances and only
// need a loose one.
const LAG_STROKE: f64 = 0.3;
const LAG_REPOSITION: f64 = 1.4;
// Repositioning runs hotter than the nominal period; the legs cross
// wide clearances where corner-cutting is harmless, and the sooner the
// fingers are back on the rim the sooner the next stroke can correct.
const REPOS_RATE: f64 = 1.25;
// A spin command this far against the current stroke direction turns
// the gait around; smaller reversals just park.
const FLIP_MARGIN: f64 = 0.15;
// A stroke freezes whenever the predicted free-coast landing point is
// this far past the goal, so the pinned tips bleed off spin. A healthy
// approach coasts slightly past the goal by design, so braking at zero
// would bleed away the drive; braking at this margin only catches
// genuine overspeed.
const BRAKE_MARGIN: f64 = 0.25;

/// Hand-written cyclic paddling policy for the spin tasks.
///
/// All fingers stroke drive / lift / carry / descend in unison. The
/// finger-to-paddle offsets are evenly spaced around the rim on both
/// spin rigs, so every stroke engages at least one paddle solidly no
/// matter where the workpiece sits. The workpiece angle is the only
/// feedback used: the expert estimates spin from successive
/// observations, paddles in whichever direction closes the error, and
/// brakes by straightening onto the rim once the predicted slide-out
/// lands within tolerance of the goal.
pub struct ScriptedExpert {
    fingers: usize,
    period: f64,
    noise: f64,
    clock: f64,
    prev_angle: Option<f64>,
    est_vel: f64,
    dt: f64,
    /// +1 drives the workpiece angle up, -1 down.
    direction: f64,
}

impl ScriptedExpert {
    pub fn new(task: Task, fingers: usize, dt: f64, knobs: &ExpertKnobs) -> Result<ScriptedExpert> {
        knobs.validate()?;
        if task == Task::Door {
            return Err(Error::ExpertUnsupported("door".into()));
        }
        Ok(ScriptedExpert {
            fingers,
            period: (24.0 * knobs.slowdown).max(8.0),
            noise: knobs.action_noise,
            clock: 0.0,
            prev_angle: None,
            est_vel: 0.0,
            dt,
            direction: 1.0,
        })
    }

    /// Next action for a spin-task observation `[q | angle | angle_err |
    /// last_action]`.
    pub fn action(&mut self, obs: &[f64], rng: &mut impl Rng) -> DenseVec {
        let joints = 2 * self.fingers;
        let angle = obs[joints];
        let err = obs[joints + 1];
        if let Some(prev) = self.prev_angle {
            self.est_vel = (angle - prev) / self.dt;
        }
        self.prev_angle = Some(angle);

        // Commanded spin closes the remaining error.
        let vstar = (-VSTAR_GAIN * err).clamp(-VSTAR_CAP, VSTAR_CAP);
        // Spin the current coast still owes us, in the stroke direction.
        let owed = -(err + self.est_vel / OBJ_DAMPING) * self.direction;
        if vstar * self.direction < -FLIP_MARGIN {
            // Turn the gait around at the top of a drive stroke; riding
            // out the old cycle would waste its reposition legs.
            self.clock = 1.0 - DRIVE_FRAC / 2.0;
            self.direction = -self.direction;
        }

        // The half-drive start phase puts the first target at the reset
        // posture (straight, mid-stroke), so the episode opens with a
        // clean forward drag instead of a chase.
        let phase = (self.clock + DRIVE_FRAC / 2.0).fract();
        let (sweep, bend) = gait_targets(phase);
        let mut action = vec![0.0; joints];
        let mut lag: f64 = 0.0;
        for f in 0..self.fingers {
            let ts = self.direction * sweep;
            let tb = self.direction * bend;
            action[2 * f] = ts / std::f64::consts::FRAC_PI_2;
            action[2 * f + 1] = tb / std::f64::consts::FRAC_PI_2;
            lag = lag.max((ts - obs[2 * f]).abs());
            lag = lag.max((tb - obs[2 * f + 1]).abs());
        }
        let lag_max = if phase < DRIVE_FRAC { LAG_STROKE } else { LAG_REPOSITION };
        if lag < lag_max {
            // Drive strokes pace themselves to the spin still wanted.
            // On predicted overspeed they drop to the coast-matching
            // speed instead, so the dragged workpiece relaxes onto the
            // envelope that lands it on the goal; a stroke paced to
            // zero pins the rim outright.
            let rate = if phase >= DRIVE_FRAC {
                REPOS_RATE
            } else {
                let pace = if -owed > BRAKE_MARGIN {
                    OBJ_DAMPING * err.abs()
                } else {
                    (vstar * self.direction).max(0.0)
                };
                let full_spin = STROKE_TRAVEL / (DRIVE_FRAC * self.period * self.dt);
                (pace / full_spin).min(1.0)
            };
            self.clock += rate / self.period;
        }
        if self.noise > 0.0 {
            for a in &mut action {
                let eps: f64 = rng.sample(StandardNormal);
                *a += self.noise * eps;
            }
        }
        DenseVec::from_vec(action)
    }
}

fn lerp(a: (f64, f64), b: (f64, f64), t: f64) -> (f64, f64) {
    (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
}

/// Piecewise-linear gait profile: sweep and bend targets in radians at a
/// phase in [0, 1). The drive stroke runs with the fingertip extended
/// onto the rim; lift, carry, and descend all happen outside the
/// contact shell.
#[doc(hidden)]
pub fn gait_probe(phase: f64) -> (f64, f64) {
    gait_targets(phase)
}

fn gait_targets(phase: f64) -> (f64, f64) {
    let lift_end = DRIVE_FRAC + LIFT_FRAC;
    let carry_end = lift_end + CARRY_FRAC;
    if phase < DRIVE_FRAC {
        lerp(DRIVE_START, DRIVE_END, phase / DRIVE_FRAC)
    } else if phase < lift_end {
        lerp(DRIVE_END, LIFTED, (phase - DRIVE_FRAC) / LIFT_FRAC)
    } else if phase < carry_end {
        lerp(LIFTED, CARRIED, (phase - lift_end) / CARRY_FRAC)
    } else {
        lerp(CARRIED, DRIVE_START, (phase - carry_end) / (1.0 - carry_end))
    }
}

/// One expert episode on a freshly reset environment.
pub fn expert_rollout(
    env: &mut EnvModel,
    knobs: &ExpertKnobs,
    rng: &mut impl Rng,
) -> Result<Trajectory> {
    if env.config().actuation != Actuation::PositionTarget {
        return Err(Error::ExpertUnsupported(format!(
            "scripted expert drives position targets, not {}",
            env.config().actuation.as_str()
        )));
    }
    let mut expert = ScriptedExpert::new(
        env.config().task,
        env.config().fingers,
        env.config().dt,
        knobs,
    )?;
    rollout(env, |obs| Ok((expert.action(obs, rng), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envsuite::EnvConfig;
    use crate::rngs::substream;

    #[test]
    fn gait_profile_is_continuous_and_bounded() {
        let mut prev = gait_targets(0.0);
        for i in 1..=1000 {
            let cur = gait_targets(i as f64 / 1000.0 % 1.0);
            assert!((cur.0 - prev.0).abs() < 0.01);
            assert!((cur.1 - prev.1).abs() < 0.02);
            assert!(cur.0.abs() < std::f64::consts::FRAC_PI_2);
            assert!(cur.1.abs() < std::f64::consts::FRAC_PI_2);
            prev = cur;
        }
        // The cycle closes on itself.
        let start = gait_targets(0.0);
        assert!((start.0 - DRIVE_START.0).abs() < 1e-9);
        assert!((start.1 - DRIVE_START.1).abs() < 1e-9);
    }

    #[test]
    fn gait_return_path_clears_the_rim() {
        // Mirror of the rig geometry: links 0.15 and 0.10 rooted 0.31
        // from the hub, workpiece rim at 0.06. The drive stroke must
        // ride the rim; the rest of the cycle must keep the fingertip
        // clear of it, except for the very end of the descent, which
        // drops onto the rim with almost no tangential motion.
        let (l1, l2, base, rim) = (0.15, 0.10, 0.31, 0.06);
        let tip = |s: f64, b: f64| {
            let x = base - l1 * s.cos() - l2 * (s + b).cos();
            let y = -l1 * s.sin() - l2 * (s + b).sin();
            (x, y)
        };
        let mut descend_entry_y = None;
        for i in 0..1000 {
            let phase = i as f64 / 1000.0;
            let (s, b) = gait_targets(phase);
            let (x, y) = tip(s, b);
            let gap = (x * x + y * y).sqrt() - rim;
            if phase < DRIVE_FRAC {
                assert!(gap.abs() < 0.04, "drive stroke off the rim at {phase}: {gap}");
            } else if phase < DRIVE_FRAC + LIFT_FRAC {
                // Climbing out; fingertip motion is still forward here,
                // so residual contact only helps.
                assert!(gap > -0.001);
            } else if phase < 0.9 {
                assert!(gap > 0.045, "carry path grazes the rim at {phase}: {gap}");
            } else if gap <= 0.045 && descend_entry_y.is_none() {
                descend_entry_y = Some(y);
            }
        }
        // Tangential drift between entering the shell and touching down.
        let (s, b) = gait_targets(0.0);
        let down_y = tip(s, b).1;
        let entry_y = descend_entry_y.expect("descent never re-entered the shell");
        assert!(
            (entry_y - down_y).abs() < 0.01,
            "descent drags sideways: {entry_y} vs {down_y}"
        );
    }

    #[test]
    fn door_has_no_expert() {
        let knobs = ExpertKnobs::default();
        assert!(matches!(
            ScriptedExpert::new(Task::Door, 3, 0.05, &knobs),
            Err(Error::ExpertUnsupported(_))
        ));
    }

    #[test]
    fn torque_mode_is_rejected() {
        let mut cfg = EnvConfig::new(Task::Valve);
        cfg.actuation = Actuation::Torque;
        let mut env = EnvModel::create(cfg).unwrap();
        env.reset(&mut substream(0, "env", &[0]));
        assert!(expert_rollout(&mut env, &ExpertKnobs::default(), &mut substream(0, "e", &[0]))
            .is_err());
    }

    #[test]
    fn bad_knobs_are_rejected() {
        let knobs = ExpertKnobs {
            slowdown: 0.0,
            ..ExpertKnobs::default()
        };
        assert!(knobs.validate().is_err());
        let knobs = ExpertKnobs {
            action_noise: -0.1,
            ..ExpertKnobs::default()
        };
        assert!(knobs.validate().is_err());
    }
}
