use crate::error::{Error, Result};
use crate::numkit::{DenseMat, DenseVec};
use crate::policy::GaussianPolicy;

/// Fisher information operator of the policy over a batch of states.
///
/// The Fisher matrix is the expected outer product of score gradients.
/// For a diagonal Gaussian the expectation over actions has closed
/// form: per state, `J^T diag(1/sigma^2) J` on the mean parameters
/// (with `J` the Jacobian of the mean network) plus a constant `2 I`
/// block on the log-std parameters, and no cross terms. Only the state
/// average remains Monte Carlo. Using the exact conditional form
/// instead of sampled score outer products matters: a solve against
/// the sampled estimate walks into directions whose curvature the
/// samples understate, and the resulting steps break the quadratic KL
/// model the step size is derived from.
///
/// The probe snapshots the policy at construction, so every product
/// during an iterative solve sees one fixed symmetric PSD operator.
pub struct FisherProbe {
    net: crate::numkit::MlpParams,
    inv_var: Vec<f64>,
    states: Vec<DenseVec>,
    mean_params: usize,
    dim: usize,
}

impl FisherProbe {
    pub fn over_states<'a>(
        policy: &GaussianPolicy,
        states: impl IntoIterator<Item = &'a DenseVec>,
    ) -> Result<FisherProbe> {
        let states: Vec<DenseVec> = states.into_iter().cloned().collect();
        if states.is_empty() {
            return Err(Error::EmptyBatch("fisher probe"));
        }
        for s in &states {
            if s.len() != policy.obs_dim() {
                return Err(Error::DimMismatch {
                    context: "fisher probe state",
                    expected: policy.obs_dim(),
                    got: s.len(),
                });
            }
        }
        let net = policy.mean_net().clone();
        Ok(FisherProbe {
            mean_params: net.param_count(),
            inv_var: policy.log_std().iter().map(|ls| (-2.0 * ls).exp()).collect(),
            net,
            states,
            dim: policy.param_count(),
        })
    }

    /// The states the curvature is averaged over.
    pub fn states(&self) -> &[DenseVec] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// (F + damping I) v without forming F. Mean block: average of
    /// `J^T diag(1/sigma^2) (J v)` over states, via one forward- and one
    /// reverse-mode pass each; log-std block: exactly `2 v`.
    pub fn fvp(&self, v: &DenseVec, damping: f64) -> Result<DenseVec> {
        if v.len() != self.dim {
            return Err(Error::DimMismatch {
                context: "fvp vector",
                expected: self.dim,
                got: v.len(),
            });
        }
        let (v_mean, v_ls) = v.split_at(self.mean_params);
        let mut out = DenseVec::zeros(self.dim);
        let scale = 1.0 / self.states.len() as f64;
        for s in &self.states {
            let mut jv = self.net.param_jvp(s, v_mean)?;
            for (j, iv) in jv.iter_mut().zip(&self.inv_var) {
                *j *= iv;
            }
            let (jtjv, _) = self.net.backward(s, &jv)?;
            for (o, g) in out.iter_mut().zip(jtjv.iter()) {
                *o += scale * g;
            }
        }
        for (o, &vi) in out[self.mean_params..].iter_mut().zip(v_ls) {
            *o = 2.0 * vi;
        }
        for (o, vi) in out.iter_mut().zip(v.iter()) {
            *o += damping * vi;
        }
        Ok(out)
    }

    /// Dense F + damping I, for small parameter counts: the mean block
    /// is assembled row by row from Jacobians, the log-std block is
    /// diagonal. Reference path for verifying [`fvp`](Self::fvp).
    pub fn explicit_matrix(&self, damping: f64) -> Result<DenseMat> {
        let n = self.dim;
        let out_dim = self.net.output_dim();
        let mut f = DenseMat::zeros(n, n);
        let scale = 1.0 / self.states.len() as f64;
        for s in &self.states {
            // Rows of J via reverse passes against unit output vectors.
            let mut jac = Vec::with_capacity(out_dim);
            for k in 0..out_dim {
                let mut unit = vec![0.0; out_dim];
                unit[k] = 1.0;
                let (row, _) = self.net.backward(s, &unit)?;
                jac.push(row);
            }
            for k in 0..out_dim {
                let w = self.inv_var[k] * scale;
                for i in 0..self.mean_params {
                    let ji = jac[k][i];
                    if ji == 0.0 {
                        continue;
                    }
                    let row = f.row_mut(i);
                    for (fij, jj) in row[..self.mean_params].iter_mut().zip(jac[k].iter()) {
                        *fij += w * ji * jj;
                    }
                }
            }
        }
        for i in self.mean_params..n {
            f.set(i, i, 2.0);
        }
        for i in 0..n {
            f.set(i, i, f.get(i, i) + damping);
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::substream;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn probe_setup(param_seed: u64) -> (GaussianPolicy, Vec<DenseVec>) {
        // [2, 3, 1] mean net: 13 mean parameters + 1 log-std = 14 total.
        let policy =
            GaussianPolicy::new(2, 1, &[3], -0.3, &mut substream(param_seed, "p", &[])).unwrap();
        let mut rng = substream(param_seed, "s", &[]);
        let states: Vec<DenseVec> = (0..40)
            .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        (policy, states)
    }

    #[test]
    fn fvp_matches_explicit_matrix_product() {
        let (policy, states) = probe_setup(0);
        let probe = FisherProbe::over_states(&policy, &states).unwrap();
        let f = probe.explicit_matrix(1e-4).unwrap();
        let mut rng = substream(0, "v", &[]);
        for _ in 0..20 {
            let v: DenseVec = (0..probe.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = probe.fvp(&v, 1e-4).unwrap();
            let slow = f.matvec(&v).unwrap();
            for (a, b) in fast.iter().zip(slow.iter()) {
                assert!((a - b).abs() <= 1e-10, "fvp deviates: {a} vs {b}");
            }
        }
    }

    #[test]
    fn operator_is_symmetric_and_psd() {
        let (policy, states) = probe_setup(1);
        let probe = FisherProbe::over_states(&policy, &states).unwrap();
        let mut rng = substream(1, "v", &[]);
        for _ in 0..100 {
            let u: DenseVec = (0..probe.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: DenseVec = (0..probe.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fu = probe.fvp(&u, 1e-4).unwrap();
            let fw = probe.fvp(&w, 1e-4).unwrap();
            // Symmetry: u . F w == w . F u; PSD: u . F u >= 0.
            assert_relative_eq!(
                u.dot(&fw).unwrap(),
                w.dot(&fu).unwrap(),
                max_relative = 1e-9,
                epsilon = 1e-12
            );
            assert!(u.dot(&fu).unwrap() >= 0.0);
        }
    }

    #[test]
    fn repeated_products_see_the_same_operator() {
        let (policy, states) = probe_setup(2);
        let probe = FisherProbe::over_states(&policy, &states).unwrap();
        let v: DenseVec = (0..probe.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = probe.fvp(&v, 1e-4).unwrap();
        let b = probe.fvp(&v, 1e-4).unwrap();
        assert_eq!(&*a, &*b);
    }

    /// With a single bias parameter feeding a unit-variance Gaussian,
    /// the Fisher information is exactly 1.
    #[test]
    fn scalar_fisher_is_exact() {
        let mut policy = GaussianPolicy::new(1, 1, &[], 0.0, &mut substream(3, "p", &[])).unwrap();
        let theta = vec![0.0; 3];
        policy.set_theta(&theta).unwrap();
        let states = vec![DenseVec::from_vec(vec![0.0]); 5];
        let probe = FisherProbe::over_states(&policy, &states).unwrap();
        let f = probe.explicit_matrix(0.0).unwrap();
        // Parameters: [weight, bias, log_std]. With obs = 0 the weight
        // contributes nothing; the bias row of the Jacobian is 1, and
        // sigma = 1, so that entry is exactly 1. The log-std curvature
        // of a Gaussian is exactly 2.
        assert!(f.get(0, 0).abs() < 1e-15);
        assert_relative_eq!(f.get(1, 1), 1.0, epsilon = 1e-15);
        assert_relative_eq!(f.get(2, 2), 2.0, epsilon = 1e-15);
        // And the matrix-free path agrees.
        let v = DenseVec::from_vec(vec![0.3, -0.2, 0.5]);
        let fv = probe.fvp(&v, 0.0).unwrap();
        assert_relative_eq!(fv[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(fv[1], -0.2, epsilon = 1e-15);
        assert_relative_eq!(fv[2], 1.0, epsilon = 1e-15);
    }

    /// The closed-form operator agrees with a large-sample Monte Carlo
    /// average of score outer products, tying it back to the defining
    /// expectation.
    #[test]
    fn matches_sampled_outer_products_in_expectation() {
        let policy = GaussianPolicy::new(1, 1, &[2], -0.2, &mut substream(4, "p", &[])).unwrap();
        let state = DenseVec::from_vec(vec![0.7]);
        let probe = FisherProbe::over_states(&policy, std::iter::once(&state)).unwrap();
        let exact = probe.explicit_matrix(0.0).unwrap();

        let n = policy.param_count();
        let mut mc = DenseMat::zeros(n, n);
        let mut rng = substream(4, "mc", &[]);
        let draws = 200_000;
        for _ in 0..draws {
            let (action, _) = policy.sample_action(&state, &mut rng).unwrap();
            let g = policy.log_prob_grad(&state, &action).unwrap();
            for i in 0..n {
                let gi = g[i] / draws as f64;
                if gi == 0.0 {
                    continue;
                }
                let row = mc.row_mut(i);
                for (mij, gj) in row.iter_mut().zip(g.iter()) {
                    *mij += gi * gj;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_relative_eq!(mc.get(i, j), exact.get(i, j), epsilon = 0.03);
            }
        }
    }

    #[test]
    fn empty_probe_is_an_error() {
        let (policy, _) = probe_setup(5);
        let states: Vec<DenseVec> = Vec::new();
        assert!(FisherProbe::over_states(&policy, &states).is_err());
    }

    #[test]
    fn wrong_vector_length_is_an_error() {
        let (policy, states) = probe_setup(6);
        let probe = FisherProbe::over_states(&policy, &states).unwrap();
        assert!(probe.fvp(&DenseVec::zeros(3), 0.0).is_err());
    }
}
