use rand::Rng;

use crate::error::{Error, Result};
use crate::numkit::{DenseVec, MlpParams};
use crate::trajectory::Trajectory;

/// Fitted state-value baseline: a small MLP regressed onto discounted
/// returns-to-go each iteration.
///
/// Targets are standardized before fitting and predictions are mapped
/// back, so the net always works on roughly unit-scale values no matter
/// what the reward magnitudes are.
#[derive(Debug, Clone)]
pub struct ValueBaseline {
    net: MlpParams,
    target_mean: f64,
    target_std: f64,
    epochs: usize,
    step_size: f64,
}

/// What a fit did to the (standardized) mean squared error.
#[derive(Debug, Clone, Copy)]
pub struct BaselineFit {
    pub initial_mse: f64,
    pub final_mse: f64,
    pub samples: usize,
}

impl ValueBaseline {
    pub fn new(
        obs_dim: usize,
        hidden: &[usize],
        epochs: usize,
        step_size: f64,
        rng: &mut impl Rng,
    ) -> Result<ValueBaseline> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(obs_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(ValueBaseline {
            net: MlpParams::xavier(&sizes, 1.0, rng)?,
            target_mean: 0.0,
            target_std: 1.0,
            epochs,
            step_size,
        })
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.net.forward(obs)?[0] * self.target_std + self.target_mean)
    }

    /// Full-batch gradient descent on the standardized regression loss,
    /// halving the step whenever a step would increase it. With zero
    /// epochs the baseline is left completely untouched.
    pub fn fit(&mut self, trajectories: &[Trajectory], gamma: f64) -> Result<BaselineFit> {
        let mut inputs: Vec<&DenseVec> = Vec::new();
        let mut targets: Vec<f64> = Vec::new();
        for traj in trajectories {
            let mut ret = 0.0;
            let mut rev = Vec::with_capacity(traj.len());
            for &r in traj.rewards.iter().rev() {
                ret = r + gamma * ret;
                rev.push(ret);
            }
            rev.reverse();
            targets.extend(rev);
            inputs.extend(traj.observations.iter());
        }
        if inputs.is_empty() {
            return Err(Error::EmptyBatch("baseline fit"));
        }
        let m = targets.len() as f64;
        if self.epochs == 0 {
            let mse = self.mse(&inputs, &targets)?;
            return Ok(BaselineFit {
                initial_mse: mse,
                final_mse: mse,
                samples: targets.len(),
            });
        }

        let mean = targets.iter().sum::<f64>() / m;
        let var = targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / m;
        self.target_mean = mean;
        self.target_std = var.sqrt().max(1e-8);
        let std_targets: Vec<f64> = targets
            .iter()
            .map(|t| (t - self.target_mean) / self.target_std)
            .collect();

        let mut params = self.net.flatten();
        let mut lr = self.step_size;
        let mut loss = self.std_mse(&inputs, &std_targets)?;
        let initial_mse = loss;
        for _ in 0..self.epochs {
            let mut grad = DenseVec::zeros(params.len());
            for (obs, &t) in inputs.iter().zip(&std_targets) {
                let pred = self.net.forward(obs)?[0];
                let (g, _) = self.net.backward(obs, &[2.0 * (pred - t) / m])?;
                grad.axpy(1.0, &g)?;
            }
            let mut candidate = params.clone();
            candidate.axpy(-lr, &grad)?;
            self.net.set_from_flat(&candidate)?;
            let new_loss = self.std_mse(&inputs, &std_targets)?;
            if new_loss <= loss {
                params = candidate;
                loss = new_loss;
            } else {
                self.net.set_from_flat(&params)?;
                lr *= 0.5;
            }
        }
        Ok(BaselineFit {
            initial_mse,
            final_mse: loss,
            samples: targets.len(),
        })
    }

    fn std_mse(&self, inputs: &[&DenseVec], std_targets: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (obs, &t) in inputs.iter().zip(std_targets) {
            let d = self.net.forward(obs)?[0] - t;
            acc += d * d;
        }
        Ok(acc / std_targets.len() as f64)
    }

    fn mse(&self, inputs: &[&DenseVec], targets: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (obs, &t) in inputs.iter().zip(targets) {
            let d = self.value(obs)? - t;
            acc += d * d;
        }
        Ok(acc / targets.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::substream;
    use rand::Rng;

    fn synth_traj(rewards: Vec<f64>, obs_dim: usize, rng: &mut impl Rng) -> Trajectory {
        let n = rewards.len();
        Trajectory {
            init_state: DenseVec::zeros(1),
            observations: (0..n)
                .map(|_| (0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
            actions: vec![DenseVec::zeros(1); n],
            rewards,
            log_probs: vec![0.0; n],
            success: false,
        }
    }

    #[test]
    fn constant_returns_are_fit_almost_exactly() {
        let mut rng = substream(0, "bl", &[]);
        // gamma = 1 and constant rewards give every state the same
        // return-to-go within a trajectory position... use a single-step
        // horizon so all targets are identical.
        let trajs: Vec<Trajectory> = (0..10)
            .map(|_| synth_traj(vec![7.5], 3, &mut rng))
            .collect();
        let mut baseline = ValueBaseline::new(3, &[8], 20, 0.1, &mut rng).unwrap();
        baseline.fit(&trajs, 0.99).unwrap();
        for traj in &trajs {
            let v = baseline.value(&traj.observations[0]).unwrap();
            assert!((v - 7.5).abs() / 7.5 < 0.05, "value {v} misses 7.5");
        }
    }

    #[test]
    fn fitting_reduces_error_on_structured_targets() {
        let mut rng = substream(1, "bl", &[]);
        let trajs: Vec<Trajectory> = (0..20)
            .map(|_| {
                let rewards: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
                synth_traj(rewards, 4, &mut rng)
            })
            .collect();
        let mut baseline = ValueBaseline::new(4, &[16, 16], 30, 0.1, &mut rng).unwrap();
        let report = baseline.fit(&trajs, 0.995).unwrap();
        assert!(report.final_mse < report.initial_mse);
        assert_eq!(report.samples, 600);
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let mut rng = substream(2, "bl", &[]);
        let trajs = vec![synth_traj(vec![1.0, 2.0, 3.0], 3, &mut rng)];
        let mut baseline = ValueBaseline::new(3, &[8], 0, 0.1, &mut rng).unwrap();
        let before = baseline.clone();
        baseline.fit(&trajs, 0.9).unwrap();
        assert_eq!(before.net, baseline.net);
        assert_eq!(before.target_mean, baseline.target_mean);
        assert_eq!(before.target_std, baseline.target_std);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let mut rng = substream(3, "bl", &[]);
        let mut baseline = ValueBaseline::new(3, &[8], 10, 0.1, &mut rng).unwrap();
        assert!(matches!(
            baseline.fit(&[], 0.99),
            Err(Error::EmptyBatch(_))
        ));
    }
}
