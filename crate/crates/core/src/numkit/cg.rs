use crate::error::{Error, Result};
use crate::numkit::DenseVec;

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: DenseVec,
    /// Iterations actually performed (may stop early on the tolerance).
    pub iterations: usize,
    /// Final residual norm ||b - A x||.
    pub residual_norm: f64,
}

/// Solves A x = b for symmetric positive definite A, given only the map
/// `v -> A v`. Starts from x = 0 and runs at most `max_iters` iterations,
/// stopping early once the residual norm drops to `tol * ||b||`.
///
/// The operator is trusted to be SPD; what is verified is finiteness.
/// Any NaN or infinity in the iterates aborts with an error naming the
/// iteration, rather than letting garbage propagate into a policy update.
pub fn conjugate_gradient(
    mut apply_a: impl FnMut(&DenseVec) -> Result<DenseVec>,
    b: &DenseVec,
    max_iters: usize,
    tol: f64,
) -> Result<CgSolution> {
    let n = b.len();
    let mut x = DenseVec::zeros(n);
    let mut r = b.clone();
    let b_norm = b.norm();
    if !b_norm.is_finite() {
        return Err(Error::NonFinite {
            context: "cg: right-hand side".into(),
        });
    }
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x,
            iterations: 0,
            residual_norm: 0.0,
        });
    }
    let threshold = tol * b_norm;
    let mut p = r.clone();
    let mut rs = r.dot(&r)?;
    let mut iterations = 0;
    for iter in 0..max_iters {
        if rs.sqrt() <= threshold {
            break;
        }
        let ap = apply_a(&p)?;
        let pap = p.dot(&ap)?;
        if !pap.is_finite() || pap <= 0.0 {
            return Err(Error::NonFinite {
                context: format!("cg iteration {iter}: p^T A p = {pap}"),
            });
        }
        let alpha = rs / pap;
        x.axpy(alpha, &p)?;
        r.axpy(-alpha, &ap)?;
        let rs_new = r.dot(&r)?;
        if !rs_new.is_finite() {
            return Err(Error::NonFinite {
                context: format!("cg iteration {iter}: residual"),
            });
        }
        let beta = rs_new / rs;
        for (pj, rj) in p.iter_mut().zip(r.iter()) {
            *pj = rj + beta * *pj;
        }
        rs = rs_new;
        iterations = iter + 1;
    }
    Ok(CgSolution {
        x,
        iterations,
        residual_norm: rs.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::DenseMat;
    use crate::rngs::substream;
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Well-conditioned SPD test matrix: M M^T + n I.
    fn spd(n: usize, rng: &mut impl Rng) -> DenseMat {
        let m = DenseMat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mt = DenseMat::from_fn(n, n, |i, j| m.get(j, i));
        let mut a = m.matmul(&mt).unwrap();
        for i in 0..n {
            a.set(i, i, a.get(i, i) + n as f64);
        }
        a
    }

    #[test]
    fn full_run_matches_dense_solve() {
        let mut rng = substream(5, "test-cg", &[0]);
        for trial in 0..10 {
            let n = 2 + trial;
            let a = spd(n, &mut rng);
            let b: DenseVec = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sol = conjugate_gradient(|v| a.matvec(v), &b, n + 5, 1e-14).unwrap();
            let dense = a.solve(&b).unwrap();
            for i in 0..n {
                assert_relative_eq!(sol.x[i], dense[i], max_relative = 1e-8, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let a = DenseMat::eye(4);
        let sol = conjugate_gradient(|v| a.matvec(v), &DenseVec::zeros(4), 10, 1e-12).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn truncation_returns_partial_solution() {
        let mut rng = substream(5, "test-cg", &[1]);
        let n = 40;
        let a = spd(n, &mut rng);
        let b: DenseVec = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let partial = conjugate_gradient(|v| a.matvec(v), &b, 3, 0.0).unwrap();
        let full = conjugate_gradient(|v| a.matvec(v), &b, n + 5, 1e-14).unwrap();
        assert_eq!(partial.iterations, 3);
        assert!(partial.residual_norm > full.residual_norm);
        assert!(full.residual_norm <= 1e-10 * b.norm() + 1e-12);
    }

    #[test]
    fn residual_norm_decreases_on_well_conditioned_systems() {
        let mut rng = substream(5, "test-cg", &[2]);
        for trial in 0..5 {
            let n = 10 + 5 * trial;
            let a = spd(n, &mut rng);
            let b: DenseVec = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut residuals = Vec::new();
            for iters in 0..=8 {
                let sol = conjugate_gradient(|v| a.matvec(v), &b, iters, 0.0).unwrap();
                let mut r = b.clone();
                r.axpy(-1.0, &a.matvec(&sol.x).unwrap()).unwrap();
                residuals.push(r.norm());
            }
            for w in residuals.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-12,
                    "residual rose from {} to {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn non_finite_operator_is_reported() {
        let b = DenseVec::from_vec(vec![1.0, 2.0]);
        let err = conjugate_gradient(
            |_| Ok(DenseVec::from_vec(vec![f64::NAN, 0.0])),
            &b,
            5,
            1e-12,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }
}
