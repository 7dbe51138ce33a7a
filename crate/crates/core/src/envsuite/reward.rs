//! Reward functions and success predicates, kept as pure functions so
//! they can be checked against hand-computed values.

use std::f64::consts::PI;

/// Angular tolerance that counts as "at the goal" for the success
/// predicate: 20 degrees.
pub const SUCCESS_TOL: f64 = PI / 9.0;
/// Door success threshold: opened past 30 degrees at any point.
pub const DOOR_SUCCESS_ANGLE: f64 = PI / 6.0;
/// Inner/outer bonus bands of the shaped spin reward, in radians.
pub const BONUS_OUTER: f64 = 0.1;
pub const BONUS_INNER: f64 = 0.05;

/// Reward variants for the spin tasks (valve and box flip). `R2` is the
/// default used everywhere outside the reward study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardVariant {
    /// Distance term only: `-|dtheta|`.
    R1,
    /// Distance plus goal-proximity bonuses: `-|dtheta| + 10 [|dtheta| <
    /// 0.1] + 50 [|dtheta| < 0.05]`.
    R2,
    /// Bonuses only, no distance shaping.
    R3,
}

impl RewardVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "r1" => Some(RewardVariant::R1),
            "r2" => Some(RewardVariant::R2),
            "r3" => Some(RewardVariant::R3),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RewardVariant::R1 => "r1",
            RewardVariant::R2 => "r2",
            RewardVariant::R3 => "r3",
        }
    }
}

/// Per-step reward for valve and box flip, as a function of the absolute
/// angular error to the goal.
pub fn spin_reward(variant: RewardVariant, angle_err_abs: f64) -> f64 {
    let dist = -angle_err_abs;
    let bonus = 10.0 * f64::from(angle_err_abs < BONUS_OUTER)
        + 50.0 * f64::from(angle_err_abs < BONUS_INNER);
    match variant {
        RewardVariant::R1 => dist,
        RewardVariant::R2 => dist + bonus,
        RewardVariant::R3 => bonus,
    }
}

/// Per-step reward for the door task. `theta_err` is the door angle minus
/// the open goal. The arm term is `-(arm_x - door_x)` by default, which
/// pays for pulling the arm back; with `abs_term` it becomes
/// `-|arm_x - door_x|`, penalizing distance from the handle instead.
pub fn door_reward(theta_err: f64, arm_x: f64, door_x: f64, abs_term: bool) -> f64 {
    let arm = if abs_term {
        (arm_x - door_x).abs()
    } else {
        arm_x - door_x
    };
    -theta_err * theta_err - arm
}

/// Success for the spin tasks: within [`SUCCESS_TOL`] of the goal for at
/// least 20% of the episode. Inclusive at exactly 20%.
pub fn spin_success(angle_errs_abs: &[f64], horizon: usize) -> bool {
    let in_tol = angle_errs_abs.iter().filter(|&&e| e < SUCCESS_TOL).count();
    5 * in_tol >= horizon
}

/// Success for the door task: opened past [`DOOR_SUCCESS_ANGLE`] at any
/// step.
pub fn door_success(door_angles: &[f64]) -> bool {
    door_angles.iter().any(|&a| a > DOOR_SUCCESS_ANGLE)
}
