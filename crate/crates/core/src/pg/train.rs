use std::time::Instant;

use crate::demos::DemoSet;
use crate::envsuite::{rollout, EnvConfig, EnvModel};
use crate::error::{Error, Result};
use crate::policy::{compute_advantages, FisherProbe, GaussianPolicy, ValueBaseline};
use crate::rngs::substream;
use crate::trajectory::Trajectory;

use super::{behavior_cloning, dapg_gradient, npg_update_guarded, reinforce_gradient};
use super::{BcReport, DapgConfig, NpgConfig};

/// Which learner to run.
pub enum AlgoSpec<'a> {
    /// Natural policy gradient from a random initialization.
    Scratch(&'a NpgConfig),
    /// Behavior cloning on the demos, then the demo-augmented gradient.
    Dapg {
        cfg: &'a DapgConfig,
        demos: &'a DemoSet,
    },
}

impl AlgoSpec<'_> {
    fn npg(&self) -> &NpgConfig {
        match self {
            AlgoSpec::Scratch(cfg) => cfg,
            AlgoSpec::Dapg { cfg, .. } => &cfg.npg,
        }
    }
}

/// Per-iteration diagnostics. `mean_return` and `success_rate` come
/// from deterministic evaluation with the mean action; `batch_return`
/// is the stochastic training batch. `wall_clock_s` is real elapsed
/// time and is the one field that varies between identical runs.
#[derive(Debug, Clone)]
pub struct UpdateReport {
    pub iteration: usize,
    pub batch_return: f64,
    pub mean_return: f64,
    pub success_rate: f64,
    pub grad_norm: f64,
    pub step_norm: f64,
    pub kl: f64,
    /// Times the step was halved to keep `kl` inside the trust budget.
    pub backtracks: usize,
    pub demo_weight: f64,
    /// True when the update was skipped for degenerate curvature.
    pub skipped: bool,
    /// Cumulative training environment steps (evaluation excluded).
    pub env_steps: usize,
    pub wall_clock_s: f64,
}

/// Deterministic evaluation outcome.
#[derive(Debug, Clone, Copy)]
pub struct EvalSummary {
    pub mean_return: f64,
    pub success_rate: f64,
}

/// Everything a finished run hands back.
pub struct TrainOutcome {
    pub reports: Vec<UpdateReport>,
    /// Policy at the last iteration.
    pub policy: GaussianPolicy,
    /// Policy at the best evaluation, ranked by success rate then
    /// mean return.
    pub best_policy: GaussianPolicy,
    pub best_iteration: usize,
    /// First iteration whose evaluation reached the stop threshold.
    pub iterations_to_success: Option<usize>,
    pub env_steps: usize,
    pub bc: Option<BcReport>,
}

/// Roll the mean action from fixed evaluation seeds; the draw index
/// pairs `(iteration, rollout)` so evaluations never share streams with
/// training or with each other.
pub fn evaluate_policy(
    env: &mut EnvModel,
    policy: &GaussianPolicy,
    rollouts: usize,
    seed: u64,
    iteration: usize,
) -> Result<EvalSummary> {
    if rollouts == 0 {
        return Err(Error::EmptyBatch("evaluation rollouts"));
    }
    let mut total = 0.0;
    let mut successes = 0usize;
    for j in 0..rollouts {
        env.reset(&mut substream(seed, "eval", &[iteration as u64, j as u64]));
        let traj = rollout(env, |obs| Ok((policy.mean_action(obs)?, 0.0)))?;
        total += traj.total_return();
        successes += usize::from(traj.success);
    }
    Ok(EvalSummary {
        mean_return: total / rollouts as f64,
        success_rate: successes as f64 / rollouts as f64,
    })
}

/// Run one training job to its stop condition.
///
/// All randomness flows through substreams of `seed` keyed by purpose
/// and iteration, so a run is reproducible regardless of how the work
/// is scheduled, and two algorithms that consume the same streams make
/// identical draws. The observer, when given, sees every report as it
/// is produced together with the current policy.
pub fn train(
    env_cfg: &EnvConfig,
    algo: &AlgoSpec<'_>,
    seed: u64,
    mut observer: Option<&mut dyn FnMut(&UpdateReport, &GaussianPolicy)>,
) -> Result<TrainOutcome> {
    let npg = algo.npg();
    npg.validate()?;
    let mut env = EnvModel::create(env_cfg.clone())?;
    let spec = env.spec();
    let gamma = env_cfg.gamma;

    let mut policy = GaussianPolicy::new(
        spec.obs_dim,
        spec.action_dim,
        &npg.hidden,
        npg.init_log_std,
        &mut substream(seed, "pinit", &[]),
    )?;
    let mut baseline = ValueBaseline::new(
        spec.obs_dim,
        &npg.value_hidden,
        npg.value_epochs,
        npg.value_step,
        &mut substream(seed, "vinit", &[]),
    )?;

    let mut bc_report = None;
    if let AlgoSpec::Dapg { cfg, demos } = algo {
        cfg.validate()?;
        demos.check_compatible(env_cfg)?;
        if demos.meta.obs_dim != spec.obs_dim || demos.meta.action_dim != spec.action_dim {
            return Err(Error::DemoDimMismatch {
                context: "training",
                file_obs: demos.meta.obs_dim,
                file_act: demos.meta.action_dim,
                want_obs: spec.obs_dim,
                want_act: spec.action_dim,
            });
        }
        if cfg.bc.epochs > 0 {
            bc_report = Some(behavior_cloning(&mut policy, &demos.trajectories, &cfg.bc)?);
        }
    }

    let mut reports = Vec::new();
    let mut env_steps = 0usize;
    let started = Instant::now();

    let eval = evaluate_policy(&mut env, &policy, npg.eval_rollouts, seed, 0)?;
    let mut best_key = (eval.success_rate, eval.mean_return);
    let mut best_policy = policy.clone();
    let mut best_iteration = 0;
    let mut iterations_to_success =
        (eval.success_rate >= npg.stop_success_rate).then_some(0);
    let report = UpdateReport {
        iteration: 0,
        batch_return: 0.0,
        mean_return: eval.mean_return,
        success_rate: eval.success_rate,
        grad_norm: 0.0,
        step_norm: 0.0,
        kl: 0.0,
        backtracks: 0,
        demo_weight: 0.0,
        skipped: false,
        env_steps: 0,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    if let Some(obs) = observer.as_deref_mut() {
        obs(&report, &policy);
    }
    reports.push(report);

    let mut k = 0usize;
    while iterations_to_success.is_none() && k < npg.max_iters {
        k += 1;
        let iter_start = Instant::now();

        let mut trajectories = Vec::with_capacity(npg.trajectories_per_iter);
        for i in 0..npg.trajectories_per_iter {
            env.reset(&mut substream(seed, "env", &[k as u64, i as u64]));
            let mut act_rng = substream(seed, "act", &[k as u64, i as u64]);
            let traj = rollout(&mut env, |obs| policy.sample_action(obs, &mut act_rng))?;
            env_steps += traj.len();
            trajectories.push(traj);
        }
        let batch_return = trajectories.iter().map(Trajectory::total_return).sum::<f64>()
            / trajectories.len() as f64;

        baseline.fit(&trajectories, gamma)?;
        let advantages = compute_advantages(
            &trajectories,
            Some(&baseline),
            gamma,
            npg.gae_lambda,
            npg.normalize_advantages,
        )?;

        let (grad, demo_weight) = match algo {
            AlgoSpec::Scratch(_) => (
                reinforce_gradient(&policy, &trajectories, &advantages)?,
                0.0,
            ),
            AlgoSpec::Dapg { cfg, demos } => dapg_gradient(
                &policy,
                &trajectories,
                &advantages,
                &demos.trajectories,
                k - 1,
                cfg.lambda0,
                cfg.lambda1,
            )?,
        };

        let visited = trajectories
            .iter()
            .flat_map(|t| &t.observations[..t.len()]);
        let probe = FisherProbe::over_states(&policy, visited)?;
        let step = npg_update_guarded(
            &mut policy,
            &grad,
            |v| probe.fvp(v, npg.cg_damping),
            npg.delta,
            npg.cg_iters,
            probe.states(),
        );
        let (step_norm, kl, backtracks, skipped) = match step {
            Ok(g) => (g.step.step_norm, g.kl, g.backtracks, false),
            Err(Error::DegenerateCurvature { .. }) => (0.0, 0.0, 0, true),
            Err(e) => return Err(e),
        };

        let eval = evaluate_policy(&mut env, &policy, npg.eval_rollouts, seed, k)?;
        if (eval.success_rate, eval.mean_return) > best_key {
            best_key = (eval.success_rate, eval.mean_return);
            best_policy = policy.clone();
            best_iteration = k;
        }
        if iterations_to_success.is_none() && eval.success_rate >= npg.stop_success_rate {
            iterations_to_success = Some(k);
        }

        let report = UpdateReport {
            iteration: k,
            batch_return,
            mean_return: eval.mean_return,
            success_rate: eval.success_rate,
            grad_norm: grad.norm(),
            step_norm,
            kl,
            backtracks,
            demo_weight,
            skipped,
            env_steps,
            wall_clock_s: iter_start.elapsed().as_secs_f64(),
        };
        if let Some(obs) = observer.as_deref_mut() {
            obs(&report, &policy);
        }
        reports.push(report);
    }

    Ok(TrainOutcome {
        reports,
        policy,
        best_policy,
        best_iteration,
        iterations_to_success,
        env_steps,
        bc: bc_report,
    })
}
