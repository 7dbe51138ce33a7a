use crate::error::{Error, Result};
use crate::numkit::{conjugate_gradient, DenseVec};
use crate::policy::GaussianPolicy;

/// What one natural-gradient update did.
#[derive(Debug, Clone, Copy)]
pub struct NpgStep {
    /// Step size along the natural direction.
    pub alpha: f64,
    /// g . F^-1 g as estimated by the truncated solve.
    pub quad: f64,
    pub grad_norm: f64,
    /// Norm of the applied parameter change, alpha * ||F^-1 g||.
    pub step_norm: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
}

/// Preconditions the ascent gradient with the (damped) Fisher operator
/// and steps so the quadratic KL model equals `delta`:
///
///   x ~= F^-1 g  by `cg_iters` conjugate-gradient iterations,
///   alpha = sqrt(2 delta / (g . x + 1e-12)),  theta += alpha x.
///
/// `fvp` must already include its damping. A non-positive `g . x`
/// means the curvature estimate cannot size a step; the policy is left
/// untouched and a degenerate-curvature error is returned for the
/// caller to skip the iteration.
pub fn npg_update(
    policy: &mut GaussianPolicy,
    grad: &DenseVec,
    fvp: impl FnMut(&DenseVec) -> Result<DenseVec>,
    delta: f64,
    cg_iters: usize,
) -> Result<NpgStep> {
    if grad.len() != policy.param_count() {
        return Err(Error::DimMismatch {
            context: "npg gradient",
            expected: policy.param_count(),
            got: grad.len(),
        });
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Argument(format!("delta must be positive, got {delta}")));
    }
    let solution = conjugate_gradient(fvp, grad, cg_iters, 1e-10)?;
    let quad = grad.dot(&solution.x)?;
    if !quad.is_finite() || quad <= 0.0 {
        return Err(Error::DegenerateCurvature { value: quad });
    }
    let alpha = (2.0 * delta / (quad + 1e-12)).sqrt();
    policy.apply_step(&solution.x, alpha)?;
    Ok(NpgStep {
        alpha,
        quad,
        grad_norm: grad.norm(),
        step_norm: alpha * solution.x.norm(),
        cg_iterations: solution.iterations,
        cg_residual: solution.residual_norm,
    })
}

/// Measured KL may exceed the quadratic target `delta` by at most this
/// factor; past it the applied step gets cut back.
pub const KL_BUDGET_FACTOR: f64 = 4.0;

const MAX_BACKTRACKS: usize = 60;

/// A natural-gradient update with its trust region actually checked.
#[derive(Debug, Clone, Copy)]
pub struct GuardedStep {
    pub step: NpgStep,
    /// Mean KL(old || new) over the visited states, after any cuts.
    pub kl: f64,
    /// Times the parameter change was halved to fit the KL budget.
    pub backtracks: usize,
}

/// `npg_update` followed by a line search on the trust region. The
/// step size trusts a quadratic model of the KL, and that model is
/// only as good as the curvature along the step: near-flat directions
/// (vanishing layers, ill-conditioned batches) let a nominal step
/// travel far while the model still predicts `delta`. This wrapper
/// measures the true KL(old || new) over `states` in closed form and
/// halves the parameter change until it is within
/// `KL_BUDGET_FACTOR * delta`.
pub fn npg_update_guarded(
    policy: &mut GaussianPolicy,
    grad: &DenseVec,
    fvp: impl FnMut(&DenseVec) -> Result<DenseVec>,
    delta: f64,
    cg_iters: usize,
    states: &[DenseVec],
) -> Result<GuardedStep> {
    let old = policy.clone();
    let mut step = npg_update(policy, grad, fvp, delta, cg_iters)?;
    let mut kl = old.kl_to(policy, states)?;
    let old_theta = old.theta();
    let mut dtheta: Vec<f64> = policy
        .theta()
        .iter()
        .zip(old_theta.iter())
        .map(|(new, base)| new - base)
        .collect();
    let mut backtracks = 0;
    while !(kl <= KL_BUDGET_FACTOR * delta) && backtracks < MAX_BACKTRACKS {
        for d in &mut dtheta {
            *d *= 0.5;
        }
        let theta: Vec<f64> = old_theta.iter().zip(&dtheta).map(|(base, d)| base + d).collect();
        policy.set_theta(&theta)?;
        kl = old.kl_to(policy, states)?;
        backtracks += 1;
    }
    let scale = 0.5f64.powi(backtracks as i32);
    step.alpha *= scale;
    step.step_norm *= scale;
    Ok(GuardedStep { step, kl, backtracks })
}
