use crate::error::{Error, Result};
use crate::numkit::DenseVec;
use crate::policy::{AdvantageEstimate, GaussianPolicy};
use crate::trajectory::Trajectory;

/// Likelihood-ratio policy gradient: the advantage-weighted score
/// gradients of the batch, averaged over its total step count. Ascent
/// direction.
pub fn reinforce_gradient(
    policy: &GaussianPolicy,
    trajectories: &[Trajectory],
    advantages: &AdvantageEstimate,
) -> Result<DenseVec> {
    if trajectories.len() != advantages.per_traj.len() {
        return Err(Error::DimMismatch {
            context: "reinforce advantages",
            expected: trajectories.len(),
            got: advantages.per_traj.len(),
        });
    }
    let mut grad = DenseVec::zeros(policy.param_count());
    let mut steps = 0usize;
    for (traj, adv) in trajectories.iter().zip(&advantages.per_traj) {
        if traj.len() != adv.len() {
            return Err(Error::DimMismatch {
                context: "reinforce advantage steps",
                expected: traj.len(),
                got: adv.len(),
            });
        }
        for ((obs, action), &a) in traj.observations.iter().zip(&traj.actions).zip(adv) {
            let score = policy.log_prob_grad(obs, action)?;
            grad.axpy(a, &score)?;
            steps += 1;
        }
    }
    if steps == 0 {
        return Err(Error::EmptyBatch("reinforce gradient"));
    }
    grad.scale(1.0 / steps as f64);
    Ok(grad)
}

/// Demo-augmented gradient: the on-policy gradient plus a decaying
/// pull toward the demonstrated actions,
///
/// `g = g_on + w * mean over demo steps of score`, with
/// `w = lambda0 * lambda1^k * max batch advantage` at iteration `k`.
/// Each sum is averaged over its own step count before mixing.
///
/// With `lambda0 = 0` the demo term is skipped outright and the result
/// is bit-identical to [`reinforce_gradient`]. Returns the gradient and
/// the weight `w` actually applied.
pub fn dapg_gradient(
    policy: &GaussianPolicy,
    trajectories: &[Trajectory],
    advantages: &AdvantageEstimate,
    demos: &[Trajectory],
    iteration: usize,
    lambda0: f64,
    lambda1: f64,
) -> Result<(DenseVec, f64)> {
    let on_policy = reinforce_gradient(policy, trajectories, advantages)?;
    if lambda0 == 0.0 {
        return Ok((on_policy, 0.0));
    }
    let mut demo_grad = DenseVec::zeros(policy.param_count());
    let mut steps = 0usize;
    for traj in demos {
        for (obs, action) in traj.observations.iter().zip(&traj.actions) {
            let score = policy.log_prob_grad(obs, action)?;
            demo_grad.axpy(1.0, &score)?;
            steps += 1;
        }
    }
    if steps == 0 {
        return Err(Error::EmptyBatch("demo batch"));
    }
    let w = lambda0 * lambda1.powi(iteration as i32) * advantages.max();
    let mut grad = on_policy;
    grad.axpy(w / steps as f64, &demo_grad)?;
    Ok((grad, w))
}
