use crate::error::{Error, Result};
use crate::numkit::DenseVec;
use crate::pg::BcConfig;
use crate::policy::GaussianPolicy;
use crate::trajectory::Trajectory;

/// Regression error before and after cloning.
#[derive(Debug, Clone, Copy)]
pub struct BcReport {
    pub initial_mse: f64,
    pub final_mse: f64,
    pub steps: usize,
}

/// Behavior cloning: fits the mean network to demonstrated actions by
/// full-batch momentum gradient descent on the mean squared error
/// (averaged over steps and action dimensions). The exploration noise
/// block is left untouched; a rejected step halves the rate and drops
/// the accumulated momentum.
pub fn behavior_cloning(
    policy: &mut GaussianPolicy,
    demos: &[Trajectory],
    cfg: &BcConfig,
) -> Result<BcReport> {
    let mut inputs: Vec<&DenseVec> = Vec::new();
    let mut targets: Vec<&DenseVec> = Vec::new();
    for traj in demos {
        for (obs, action) in traj.observations.iter().zip(&traj.actions) {
            if obs.len() != policy.obs_dim() || action.len() != policy.action_dim() {
                return Err(Error::DemoDimMismatch {
                    context: "behavior cloning",
                    file_obs: obs.len(),
                    file_act: action.len(),
                    want_obs: policy.obs_dim(),
                    want_act: policy.action_dim(),
                });
            }
            inputs.push(obs);
            targets.push(action);
        }
    }
    if inputs.is_empty() {
        return Err(Error::EmptyBatch("behavior cloning"));
    }
    let m = inputs.len();
    let denom = (m * policy.action_dim()) as f64;

    let mse = |p: &GaussianPolicy| -> Result<f64> {
        let mut acc = 0.0;
        for (obs, target) in inputs.iter().zip(&targets) {
            let mu = p.mean_action(obs)?;
            for (o, t) in mu.iter().zip(target.iter()) {
                acc += (o - t) * (o - t);
            }
        }
        Ok(acc / denom)
    };

    let initial_mse = mse(policy)?;
    let mut loss = initial_mse;
    let mut params = policy.mean_net().flatten();
    let mut velocity = DenseVec::zeros(params.len());
    let mut lr = cfg.step_size;
    for _ in 0..cfg.epochs {
        let mut grad = DenseVec::zeros(params.len());
        for (obs, target) in inputs.iter().zip(&targets) {
            let mu = policy.mean_action(obs)?;
            let out_grad: Vec<f64> = mu
                .iter()
                .zip(target.iter())
                .map(|(o, t)| 2.0 * (o - t) / denom)
                .collect();
            let (g, _) = policy.mean_net().backward(obs, &out_grad)?;
            grad.axpy(1.0, &g)?;
        }
        velocity.scale(cfg.momentum);
        velocity.axpy(1.0, &grad)?;
        let mut candidate = params.clone();
        candidate.axpy(-lr, &velocity)?;
        policy.mean_net_mut().set_from_flat(&candidate)?;
        let new_loss = mse(policy)?;
        if new_loss <= loss {
            params = candidate;
            loss = new_loss;
        } else {
            policy.mean_net_mut().set_from_flat(&params)?;
            lr *= 0.5;
            velocity.scale(0.0);
        }
    }
    Ok(BcReport {
        initial_mse,
        final_mse: loss,
        steps: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::substream;
    use rand::Rng;

    fn demo_from_teacher(
        teacher: &GaussianPolicy,
        trajs: usize,
        steps: usize,
        seed: u64,
    ) -> Vec<Trajectory> {
        let mut rng = substream(seed, "demo", &[]);
        (0..trajs)
            .map(|_| {
                let observations: Vec<DenseVec> = (0..steps)
                    .map(|_| {
                        (0..teacher.obs_dim())
                            .map(|_| rng.gen_range(-1.0..1.0))
                            .collect()
                    })
                    .collect();
                let actions: Vec<DenseVec> = observations
                    .iter()
                    .map(|o| teacher.mean_action(o).unwrap())
                    .collect();
                Trajectory {
                    init_state: DenseVec::zeros(1),
                    rewards: vec![0.0; steps],
                    log_probs: vec![0.0; steps],
                    success: true,
                    observations,
                    actions,
                }
            })
            .collect()
    }

    #[test]
    fn realizable_targets_fit_tightly() {
        // Teacher and student share an architecture, so zero error is
        // attainable; cloning should get close.
        let teacher = GaussianPolicy::new(3, 2, &[16], -0.5, &mut substream(0, "t", &[])).unwrap();
        let mut student =
            GaussianPolicy::new(3, 2, &[16], -0.5, &mut substream(1, "s", &[])).unwrap();
        let demos = demo_from_teacher(&teacher, 10, 30, 0);
        let report = behavior_cloning(&mut student, &demos, &BcConfig::default()).unwrap();
        assert!(report.final_mse < report.initial_mse);
        assert!(report.final_mse < 1e-3, "final mse {}", report.final_mse);
        assert_eq!(report.steps, 300);
    }

    #[test]
    fn log_std_is_untouched() {
        let teacher = GaussianPolicy::new(2, 2, &[8], -0.5, &mut substream(2, "t", &[])).unwrap();
        let mut student =
            GaussianPolicy::new(2, 2, &[8], -0.7, &mut substream(3, "s", &[])).unwrap();
        let before = student.log_std().to_vec();
        behavior_cloning(&mut student, &demo_from_teacher(&teacher, 4, 10, 2), &BcConfig::default())
            .unwrap();
        assert_eq!(student.log_std(), &before[..]);
    }

    #[test]
    fn zero_epochs_changes_nothing() {
        let teacher = GaussianPolicy::new(2, 1, &[4], -0.5, &mut substream(4, "t", &[])).unwrap();
        let mut student =
            GaussianPolicy::new(2, 1, &[4], -0.5, &mut substream(5, "s", &[])).unwrap();
        let before = student.theta();
        let cfg = BcConfig {
            epochs: 0,
            ..BcConfig::default()
        };
        let report =
            behavior_cloning(&mut student, &demo_from_teacher(&teacher, 2, 5, 3), &cfg).unwrap();
        assert_eq!(&*student.theta(), &*before);
        assert_eq!(report.initial_mse, report.final_mse);
    }

    #[test]
    fn empty_and_mismatched_demos_are_errors() {
        let mut student =
            GaussianPolicy::new(2, 1, &[4], -0.5, &mut substream(6, "s", &[])).unwrap();
        assert!(matches!(
            behavior_cloning(&mut student, &[], &BcConfig::default()),
            Err(Error::EmptyBatch(_))
        ));
        let other = GaussianPolicy::new(3, 2, &[4], -0.5, &mut substream(7, "t", &[])).unwrap();
        let demos = demo_from_teacher(&other, 1, 3, 4);
        assert!(matches!(
            behavior_cloning(&mut student, &demos, &BcConfig::default()),
            Err(Error::DemoDimMismatch { .. })
        ));
    }
}
