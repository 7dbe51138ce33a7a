//! Diagonal Gaussian policy over continuous actions, plus the pieces a
//! natural-gradient learner needs around it: score-function gradients,
//! Fisher-vector products, a fitted value baseline, and advantage
//! estimation.

mod advantage;
mod baseline;
mod fisher;

pub use advantage::{compute_advantages, AdvantageEstimate};
pub use baseline::{BaselineFit, ValueBaseline};
pub use fisher::FisherProbe;

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numkit::{DenseVec, MlpParams};

/// Bounds on the per-dimension log standard deviation. Updates clamp
/// into this range so exploration can neither collapse nor blow up.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Gaussian policy: an MLP maps observations to the action mean, and a
/// state-independent log-std vector sets per-dimension exploration noise.
///
/// The flat parameter vector `theta` is the mean network's parameters
/// followed by the log-std block; every gradient in this module uses
/// that layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    mean: MlpParams,
    log_std: DenseVec,
}

impl GaussianPolicy {
    /// Fresh policy with Xavier-initialized hidden layers and the final
    /// layer scaled down a hundredfold, so initial actions hover near
    /// zero while exploration noise dominates.
    pub fn new(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        init_log_std: f64,
        rng: &mut impl Rng,
    ) -> Result<GaussianPolicy> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(obs_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        let mean = MlpParams::xavier(&sizes, 0.01, rng)?;
        let ls = init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX);
        Ok(GaussianPolicy {
            mean,
            log_std: DenseVec::from_vec(vec![ls; action_dim]),
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.mean.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.mean.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.mean.param_count() + self.action_dim()
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn theta(&self) -> DenseVec {
        let mut out = self.mean.flatten().into_vec();
        out.extend_from_slice(&self.log_std);
        DenseVec::from_vec(out)
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::DimMismatch {
                context: "policy set_theta",
                expected: self.param_count(),
                got: theta.len(),
            });
        }
        let split = self.mean.param_count();
        self.mean.set_from_flat(&theta[..split])?;
        for (dst, &src) in self.log_std.iter_mut().zip(&theta[split..]) {
            *dst = src.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
        Ok(())
    }

    /// theta += alpha * direction, clamping the log-std block.
    pub fn apply_step(&mut self, direction: &[f64], alpha: f64) -> Result<()> {
        if direction.len() != self.param_count() {
            return Err(Error::DimMismatch {
                context: "policy apply_step",
                expected: self.param_count(),
                got: direction.len(),
            });
        }
        let split = self.mean.param_count();
        self.mean.add_scaled(&direction[..split], alpha)?;
        for (ls, &d) in self.log_std.iter_mut().zip(&direction[split..]) {
            *ls = (*ls + alpha * d).clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
        Ok(())
    }

    /// Deterministic action: the mean network's output.
    pub fn mean_action(&self, obs: &[f64]) -> Result<DenseVec> {
        self.mean.forward(obs)
    }

    pub fn mean_net(&self) -> &MlpParams {
        &self.mean
    }

    pub(crate) fn mean_net_mut(&mut self) -> &mut MlpParams {
        &mut self.mean
    }

    /// Draws an action and returns it with its log-density.
    pub fn sample_action(&self, obs: &[f64], rng: &mut impl Rng) -> Result<(DenseVec, f64)> {
        let mu = self.mean.forward(obs)?;
        let mut action = Vec::with_capacity(mu.len());
        for (m, ls) in mu.iter().zip(self.log_std.iter()) {
            let eps: f64 = rng.sample(StandardNormal);
            action.push(m + ls.exp() * eps);
        }
        let action = DenseVec::from_vec(action);
        let logp = log_density(&mu, &self.log_std, &action);
        Ok((action, logp))
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.action_dim() {
            return Err(Error::DimMismatch {
                context: "policy log_prob action",
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        let mu = self.mean.forward(obs)?;
        Ok(log_density(&mu, &self.log_std, action))
    }

    /// Score gradient d log pi(action | obs) / d theta, flat layout.
    pub fn log_prob_grad(&self, obs: &[f64], action: &[f64]) -> Result<DenseVec> {
        if action.len() != self.action_dim() {
            return Err(Error::DimMismatch {
                context: "policy log_prob_grad action",
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        let mu = self.mean.forward(obs)?;
        // d logp / d mu_j = (a_j - mu_j) / sigma_j^2
        let mut out_grad = Vec::with_capacity(mu.len());
        let mut std_grad = Vec::with_capacity(mu.len());
        for ((m, ls), a) in mu.iter().zip(self.log_std.iter()).zip(action.iter()) {
            let inv_var = (-2.0 * ls).exp();
            let z = (a - m) * inv_var;
            out_grad.push(z);
            // d logp / d log sigma_j = (a_j - mu_j)^2 / sigma_j^2 - 1
            std_grad.push((a - m) * (a - m) * inv_var - 1.0);
        }
        let (mean_grad, _) = self.mean.backward(obs, &out_grad)?;
        let mut flat = mean_grad.into_vec();
        flat.extend_from_slice(&std_grad);
        Ok(DenseVec::from_vec(flat))
    }

    /// Mean KL(self || other) over a set of observations, in closed form
    /// for diagonal Gaussians.
    pub fn kl_to<'a>(
        &self,
        other: &GaussianPolicy,
        observations: impl IntoIterator<Item = &'a DenseVec>,
    ) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for obs in observations {
            let mu_p = self.mean.forward(obs)?;
            let mu_q = other.mean.forward(obs)?;
            for j in 0..mu_p.len() {
                let (lp, lq) = (self.log_std[j], other.log_std[j]);
                let var_p = (2.0 * lp).exp();
                let var_q = (2.0 * lq).exp();
                let dm = mu_p[j] - mu_q[j];
                total += lq - lp + (var_p + dm * dm) / (2.0 * var_q) - 0.5;
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::EmptyBatch("kl_to"));
        }
        Ok(total / count as f64)
    }

    /// Writes a text checkpoint. Values print in shortest round-trip
    /// form, so a reload is bit-identical.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "CLAWPOL v1").unwrap();
        let sizes: Vec<String> = self.mean.layer_sizes().iter().map(|s| s.to_string()).collect();
        writeln!(out, "layers {}", sizes.join(",")).unwrap();
        let theta = self.theta();
        writeln!(out, "params {}", theta.len()).unwrap();
        for v in theta.iter() {
            writeln!(out, "{v:?}").unwrap();
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<GaussianPolicy> {
        let fail = |detail: &str| Error::Checkpoint {
            path: path.display().to_string(),
            detail: detail.to_string(),
        };
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        match lines.next() {
            Some("CLAWPOL v1") => {}
            Some(other) => {
                return Err(fail(&format!("unsupported header {other:?}")));
            }
            None => return Err(fail("empty file")),
        }
        let layers_line = lines.next().ok_or_else(|| fail("missing layers line"))?;
        let sizes: Vec<usize> = layers_line
            .strip_prefix("layers ")
            .ok_or_else(|| fail("malformed layers line"))?
            .split(',')
            .map(|s| s.parse().map_err(|_| fail("bad layer size")))
            .collect::<Result<_>>()?;
        let count_line = lines.next().ok_or_else(|| fail("missing params line"))?;
        let count: usize = count_line
            .strip_prefix("params ")
            .ok_or_else(|| fail("malformed params line"))?
            .parse()
            .map_err(|_| fail("bad param count"))?;
        let mean = MlpParams::zeros(&sizes).map_err(|e| fail(&e.to_string()))?;
        let action_dim = mean.output_dim();
        if count != mean.param_count() + action_dim {
            return Err(fail(&format!(
                "param count {count} does not match layers {sizes:?}"
            )));
        }
        let mut theta = Vec::with_capacity(count);
        for line in lines {
            let v: f64 = line.trim().parse().map_err(|_| fail("bad parameter value"))?;
            theta.push(v);
        }
        if theta.len() != count {
            return Err(fail(&format!(
                "expected {count} parameters, found {}",
                theta.len()
            )));
        }
        let mut policy = GaussianPolicy {
            mean,
            log_std: DenseVec::zeros(action_dim),
        };
        policy.set_theta(&theta).map_err(|e| fail(&e.to_string()))?;
        Ok(policy)
    }
}

fn log_density(mu: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((m, ls), a) in mu.iter().zip(log_std).zip(action) {
        let z = (a - m) / ls.exp();
        total += -0.5 * TAU.ln() - ls - 0.5 * z * z;
    }
    total
}
