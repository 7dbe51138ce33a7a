use crate::error::{Error, Result};
use crate::policy::ValueBaseline;
use crate::trajectory::Trajectory;

/// Per-step advantages, generalized-advantage style: an exponentially
/// weighted sum of one-step temporal-difference residuals.
#[derive(Debug, Clone)]
pub struct AdvantageEstimate {
    /// One vector per trajectory, aligned with its steps.
    pub per_traj: Vec<Vec<f64>>,
    /// Whether the batch was normalized to zero mean, unit variance.
    pub normalized: bool,
}

impl AdvantageEstimate {
    pub fn total_steps(&self) -> usize {
        self.per_traj.iter().map(|a| a.len()).sum()
    }

    pub fn max(&self) -> f64 {
        self.per_traj
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |m, &a| m.max(a))
    }
}

/// Computes advantages for a batch of trajectories.
///
/// `baseline = None` means a zero value function. The value beyond the
/// final step is zero (episodes end at the horizon). With `lambda = 1`
/// this reduces to discounted return-to-go minus the value; with
/// `lambda = 0` to the one-step residual.
///
/// `normalize` standardizies the flattened batch to zero mean and unit
/// variance, which fixes the scale that downstream step-size heuristics
/// see.
pub fn compute_advantages(
    trajectories: &[Trajectory],
    baseline: Option<&ValueBaseline>,
    gamma: f64,
    lambda: f64,
    normalize: bool,
) -> Result<AdvantageEstimate> {
    if trajectories.iter().all(|t| t.is_empty()) {
        return Err(Error::EmptyBatch("advantage estimation"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Argument(format!("lambda must be in [0, 1], got {lambda}")));
    }
    let mut per_traj = Vec::with_capacity(trajectories.len());
    for traj in trajectories {
        let t_len = traj.len();
        let mut values = Vec::with_capacity(t_len + 1);
        for obs in &traj.observations {
            values.push(match baseline {
                Some(b) => b.value(obs)?,
                None => 0.0,
            });
        }
        values.push(0.0);
        let mut adv = vec![0.0; t_len];
        let mut acc = 0.0;
        for t in (0..t_len).rev() {
            let delta = traj.rewards[t] + gamma * values[t + 1] - values[t];
            acc = delta + gamma * lambda * acc;
            adv[t] = acc;
        }
        per_traj.push(adv);
    }
    if normalize {
        let n = per_traj.iter().map(|a| a.len()).sum::<usize>() as f64;
        let mean = per_traj.iter().flatten().sum::<f64>() / n;
        let var = per_traj
            .iter()
            .flatten()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        let scale = 1.0 / (var.sqrt() + 1e-8);
        for adv in &mut per_traj {
            for a in adv {
                *a = (*a - mean) * scale;
            }
        }
    }
    Ok(AdvantageEstimate {
        per_traj,
        normalized: normalize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::DenseVec;
    use crate::rngs::substream;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn traj_with(rewards: Vec<f64>, obs_dim: usize) -> Trajectory {
        let n = rewards.len();
        Trajectory {
            init_state: DenseVec::zeros(1),
            observations: (0..n)
                .map(|i| (0..obs_dim).map(|d| (i * 7 + d) as f64 * 0.01).collect())
                .collect(),
            actions: vec![DenseVec::zeros(1); n],
            rewards,
            log_probs: vec![0.0; n],
            success: false,
        }
    }

    #[test]
    fn hand_computed_example() {
        // Unit rewards, no baseline, gamma = 1, lambda = 0.5:
        // A2 = 1, A1 = 1 + 0.5, A0 = 1 + 0.5 * 1.5.
        let trajs = vec![traj_with(vec![1.0, 1.0, 1.0], 2)];
        let est = compute_advantages(&trajs, None, 1.0, 0.5, false).unwrap();
        let a = &est.per_traj[0];
        assert_relative_eq!(a[0], 1.75);
        assert_relative_eq!(a[1], 1.5);
        assert_relative_eq!(a[2], 1.0);
    }

    #[test]
    fn lambda_one_telescopes_to_return_minus_value() {
        let mut rng = substream(0, "adv", &[]);
        let trajs: Vec<Trajectory> = (0..4)
            .map(|_| traj_with((0..25).map(|_| rng.gen_range(-2.0..2.0)).collect(), 3))
            .collect();
        let mut baseline = ValueBaseline::new(3, &[8], 10, 0.1, &mut rng).unwrap();
        baseline.fit(&trajs, 0.9).unwrap();
        let est = compute_advantages(&trajs, Some(&baseline), 0.9, 1.0, false).unwrap();
        for traj in trajs.iter().zip(&est.per_traj) {
            let (t, adv) = traj;
            let mut ret = 0.0;
            for i in (0..t.len()).rev() {
                ret = t.rewards[i] + 0.9 * ret;
                let v = baseline.value(&t.observations[i]).unwrap();
                assert_relative_eq!(adv[i], ret - v, max_relative = 1e-9, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lambda_zero_is_the_one_step_residual() {
        let mut rng = substream(1, "adv", &[]);
        let trajs = vec![traj_with((0..10).map(|_| rng.gen_range(-1.0..1.0)).collect(), 3)];
        let mut baseline = ValueBaseline::new(3, &[8], 10, 0.1, &mut rng).unwrap();
        baseline.fit(&trajs, 0.95).unwrap();
        let est = compute_advantages(&trajs, Some(&baseline), 0.95, 0.0, false).unwrap();
        let t = &trajs[0];
        for i in 0..t.len() {
            let v = baseline.value(&t.observations[i]).unwrap();
            let v_next = if i + 1 < t.len() {
                baseline.value(&t.observations[i + 1]).unwrap()
            } else {
                0.0
            };
            assert_relative_eq!(
                est.per_traj[0][i],
                t.rewards[i] + 0.95 * v_next - v,
                max_relative = 1e-9,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn normalization_hits_zero_mean_unit_variance() {
        let mut rng = substream(2, "adv", &[]);
        let trajs: Vec<Trajectory> = (0..5)
            .map(|_| traj_with((0..40).map(|_| rng.gen_range(-3.0..3.0)).collect(), 2))
            .collect();
        let est = compute_advantages(&trajs, None, 0.99, 0.97, true).unwrap();
        let n = est.total_steps() as f64;
        let mean = est.per_traj.iter().flatten().sum::<f64>() / n;
        let var = est
            .per_traj
            .iter()
            .flatten()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        assert!(mean.abs() < 1e-6, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 1e-6, "std {}", var.sqrt());
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        assert!(compute_advantages(&[], None, 0.9, 0.9, false).is_err());
        let trajs = vec![traj_with(vec![1.0], 2)];
        assert!(compute_advantages(&trajs, None, 0.9, 1.5, false).is_err());
    }
}
