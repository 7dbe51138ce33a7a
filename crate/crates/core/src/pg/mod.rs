//! Policy-gradient algorithms: the likelihood-ratio gradient, its
//! demo-augmented variant, the truncated natural-gradient update,
//! behavior cloning, and the full training loop that ties them to the
//! environments.

mod bc;
mod grad;
mod npg;
mod train;

pub use bc::{behavior_cloning, BcReport};
pub use grad::{dapg_gradient, reinforce_gradient};
pub use npg::{npg_update, npg_update_guarded, GuardedStep, NpgStep, KL_BUDGET_FACTOR};
pub use train::{evaluate_policy, train, AlgoSpec, EvalSummary, TrainOutcome, UpdateReport};

use crate::error::{Error, Result};

/// Hyperparameters of the natural-gradient learner. `Default` carries
/// the settings every experiment starts from; configs override fields
/// individually.
#[derive(Debug, Clone, PartialEq)]
pub struct NpgConfig {
    /// Per-update KL budget; the step size is chosen so the quadratic
    /// model of the KL equals this.
    pub delta: f64,
    pub cg_iters: usize,
    pub cg_damping: f64,
    pub trajectories_per_iter: usize,
    pub max_iters: usize,
    pub gae_lambda: f64,
    pub normalize_advantages: bool,
    pub init_log_std: f64,
    pub hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub value_epochs: usize,
    pub value_step: f64,
    pub eval_rollouts: usize,
    /// Training stops early once the evaluation success rate reaches
    /// this level; 1.0 demands every evaluation episode succeed.
    pub stop_success_rate: f64,
}

impl Default for NpgConfig {
    fn default() -> Self {
        NpgConfig {
            delta: 0.05,
            cg_iters: 10,
            cg_damping: 1e-4,
            trajectories_per_iter: 40,
            max_iters: 150,
            gae_lambda: 0.97,
            normalize_advantages: true,
            init_log_std: -0.5,
            hidden: vec![64, 64],
            value_hidden: vec![32, 32],
            value_epochs: 40,
            value_step: 0.1,
            eval_rollouts: 10,
            stop_success_rate: 1.0,
        }
    }
}

impl NpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("npg delta must be positive, got {}", self.delta));
        }
        if self.cg_iters == 0 {
            return bad("npg cg_iters must be at least 1".into());
        }
        if !(self.cg_damping >= 0.0 && self.cg_damping.is_finite()) {
            return bad(format!(
                "npg cg_damping must be non-negative, got {}",
                self.cg_damping
            ));
        }
        if self.trajectories_per_iter == 0 {
            return bad("npg trajectories_per_iter must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad(format!(
                "npg gae_lambda must lie in [0, 1], got {}",
                self.gae_lambda
            ));
        }
        if self.hidden.is_empty() || self.value_hidden.is_empty() {
            return bad("npg hidden layer lists must be non-empty".into());
        }
        if self.eval_rollouts == 0 {
            return bad("npg eval_rollouts must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.stop_success_rate) {
            return bad(format!(
                "npg stop_success_rate must lie in [0, 1], got {}",
                self.stop_success_rate
            ));
        }
        Ok(())
    }
}

/// Behavior-cloning pretraining hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BcConfig {
    pub epochs: usize,
    pub step_size: f64,
    pub momentum: f64,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig {
            epochs: 100,
            step_size: 0.1,
            momentum: 0.9,
        }
    }
}

/// Demo-augmented training: behavior cloning up front, then the
/// on-policy gradient with a decaying demonstration term.
#[derive(Debug, Clone, PartialEq)]
pub struct DapgConfig {
    /// Initial demo-term weight; zero disables the demo term entirely.
    pub lambda0: f64,
    /// Per-iteration decay of the demo term.
    pub lambda1: f64,
    pub bc: BcConfig,
    pub npg: NpgConfig,
}

impl Default for DapgConfig {
    fn default() -> Self {
        DapgConfig {
            lambda0: 0.1,
            lambda1: 0.95,
            bc: BcConfig::default(),
            npg: NpgConfig::default(),
        }
    }
}

impl DapgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::Config(format!(
                "dapg lambda0 must be non-negative, got {}",
                self.lambda0
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda1) {
            return Err(Error::Config(format!(
                "dapg lambda1 must lie in [0, 1], got {}",
                self.lambda1
            )));
        }
        self.npg.validate()
    }
}
