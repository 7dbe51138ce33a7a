//! Demonstration recording, storage, and replay.

mod expert;
mod format;

pub use expert::{expert_rollout, ExpertKnobs, ScriptedExpert, EXPERT_LABEL};
#[doc(hidden)]
pub use expert::gait_probe;
pub use format::{load_demos, save_demos};

use crate::envsuite::{EnvConfig, EnvModel, Task};
use crate::error::{Error, Result};
use crate::rngs::substream;
use crate::trajectory::Trajectory;

/// Provenance carried alongside a batch of demonstrations.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoMeta {
    pub task: Task,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub state_dim: usize,
    pub horizon: usize,
    pub count: usize,
    /// Dynamics hash of the recording environment.
    pub config_hash: String,
    /// Label of the policy that produced the actions.
    pub expert: String,
    pub seed: u64,
    pub wide_init: bool,
}

/// A batch of demonstrations plus the metadata needed to validate them
/// against a training environment.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    pub meta: DemoMeta,
    pub trajectories: Vec<Trajectory>,
}

impl DemoSet {
    /// Error unless these demos were recorded on dynamics matching
    /// `cfg` and with the dimensions the caller expects.
    pub fn check_compatible(&self, cfg: &EnvConfig) -> Result<()> {
        let want = cfg.config_hash();
        if self.meta.config_hash != want {
            return Err(Error::DemoConfigMismatch {
                file_hash: self.meta.config_hash.clone(),
                want_hash: want,
            });
        }
        Ok(())
    }
}

/// Roll out the scripted expert until `count` episodes pass the success
/// predicate (or, with `allow_failed`, until `count` episodes exist).
///
/// Each attempt draws its own environment and noise streams indexed by
/// a global attempt counter, so the accepted set depends only on
/// `(cfg, count, knobs, seed)`. Gives up after `10 * count` attempts.
pub fn collect_demos(
    cfg: &EnvConfig,
    count: usize,
    knobs: &ExpertKnobs,
    seed: u64,
) -> Result<DemoSet> {
    if count == 0 {
        return Err(Error::Argument("demo count must be positive".into()));
    }
    knobs.validate()?;
    let mut env = EnvModel::create(cfg.clone())?;
    let spec = env.spec();
    let mut trajectories = Vec::with_capacity(count);
    let max_attempts = 10 * count;
    let mut attempt = 0;
    while trajectories.len() < count {
        if attempt >= max_attempts {
            return Err(Error::ExpertFailed {
                task: cfg.task.as_str().to_string(),
                attempts: max_attempts,
            });
        }
        env.reset(&mut substream(seed, "demo-env", &[attempt as u64]));
        let mut noise = substream(seed, "demo-act", &[attempt as u64]);
        let traj = expert_rollout(&mut env, knobs, &mut noise)?;
        attempt += 1;
        if traj.success || knobs.allow_failed {
            trajectories.push(traj);
        }
    }
    Ok(DemoSet {
        meta: DemoMeta {
            task: cfg.task,
            obs_dim: spec.obs_dim,
            action_dim: spec.action_dim,
            state_dim: spec.state_dim,
            horizon: spec.horizon,
            count,
            config_hash: cfg.config_hash(),
            expert: EXPERT_LABEL.to_string(),
            seed,
            wide_init: cfg.wide_init,
        },
        trajectories,
    })
}

/// Outcome of replaying a demo set against a live environment.
#[derive(Debug, Clone, Copy)]
pub struct VerifyReport {
    pub replayed: usize,
    pub total_steps: usize,
}

/// Re-run every stored action sequence from its stored initial state
/// and insist the environment reproduces the recorded observations,
/// rewards, and success flags bit for bit.
pub fn verify_demos(set: &DemoSet, cfg: &EnvConfig) -> Result<VerifyReport> {
    set.check_compatible(cfg)?;
    let mut env = EnvModel::create(cfg.clone())?;
    let mut total_steps = 0;
    for (i, traj) in set.trajectories.iter().enumerate() {
        let diverged = |step: usize| Error::DemoReplay { index: i, step };
        env.reset_to(&traj.init_state)?;
        if env.observation() != traj.observations[0] {
            return Err(diverged(0));
        }
        for t in 0..traj.len() {
            let step = env.step(&traj.actions[t])?;
            if step.observation != traj.observations[t + 1]
                || step.reward.to_bits() != traj.rewards[t].to_bits()
            {
                return Err(diverged(t));
            }
        }
        if env.episode_success() != traj.success {
            return Err(diverged(traj.len()));
        }
        total_steps += traj.len();
    }
    Ok(VerifyReport {
        replayed: set.trajectories.len(),
        total_steps,
    })
}
