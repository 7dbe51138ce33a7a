//! Episode container shared by rollouts, demonstrations, and training.

use crate::numkit::DenseVec;

/// One complete episode. Stored struct-of-arrays; all step vectors have
/// equal length. `init_state` is the flat environment state captured
/// right after reset, sufficient to replay the episode action-for-action
/// (it embeds the episode's physics draw).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub init_state: DenseVec,
    pub observations: Vec<DenseVec>,
    pub actions: Vec<DenseVec>,
    pub rewards: Vec<f64>,
    /// Behavior log-density of each action; zero for demonstrations and
    /// other off-policy data.
    pub log_probs: Vec<f64>,
    pub success: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn total_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        self.rewards
            .iter()
            .rev()
            .fold(0.0, |acc, r| r + gamma * acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(rewards: Vec<f64>) -> Trajectory {
        let n = rewards.len();
        Trajectory {
            init_state: DenseVec::zeros(1),
            observations: vec![DenseVec::zeros(1); n],
            actions: vec![DenseVec::zeros(1); n],
            rewards,
            log_probs: vec![0.0; n],
            success: false,
        }
    }

    #[test]
    fn returns_sum_and_discount() {
        let t = traj(vec![1.0, 2.0, 4.0]);
        assert_eq!(t.total_return(), 7.0);
        assert_eq!(t.discounted_return(0.5), 1.0 + 0.5 * 2.0 + 0.25 * 4.0);
        assert_eq!(t.discounted_return(1.0), 7.0);
    }

    #[test]
    fn empty_trajectory_is_zero_return() {
        let t = traj(vec![]);
        assert!(t.is_empty());
        assert_eq!(t.discounted_return(0.9), 0.0);
    }
}
