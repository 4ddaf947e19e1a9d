//! Dense primal-dual interior-point solver for small semidefinite programs.
//!
//! Solves `max <C, Y>` subject to `<A_i, Y> = b_i` and `Y >= 0` over real
//! symmetric matrices, using the HKM direction with a Mehrotra
//! predictor-corrector. Problem sizes here never exceed a few dozen rows and
//! a couple hundred constraints, so everything is dense and factored from
//! scratch each iteration.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::GkpError;
use crate::Result;

/// Sparse symmetric constraint: entries `(row, col, coeff)` of `A_i`; both
/// `(r, c)` and `(c, r)` must be listed for off-diagonal support.
pub type SparseSym = Vec<(usize, usize, f64)>;

/// Solver tolerances and limits.
#[derive(Debug, Clone)]
pub struct IpmOptions {
    /// Target on primal/dual infeasibility and relative gap.
    pub tol: f64,
    /// Newton iteration cap.
    pub max_iter: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Solution of the embedded real SDP.
#[derive(Debug, Clone)]
pub struct IpmSolution {
    /// Optimal primal matrix.
    pub y_mat: DMatrix<f64>,
    /// Objective `<C, Y>` at the optimum.
    pub objective: f64,
    /// Final duality gap `<Y, Z>`.
    pub gap: f64,
    /// Final KKT residual (max of infeasibilities and gap).
    pub kkt_residual: f64,
    /// Iterations used.
    pub iterations: usize,
    /// Whether tolerances were met.
    pub converged: bool,
}

fn apply_constraints(constraints: &[SparseSym], y: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(constraints.len(), |i, _| {
        constraints[i].iter().map(|&(r, c, w)| w * y[(r, c)]).sum()
    })
}

fn assemble_dual(constraints: &[SparseSym], y: &DVector<f64>, s: usize) -> DMatrix<f64> {
    let mut out = DMatrix::<f64>::zeros(s, s);
    for (i, cons) in constraints.iter().enumerate() {
        let yi = y[i];
        if yi == 0.0 {
            continue;
        }
        for &(r, c, w) in cons {
            out[(r, c)] += yi * w;
        }
    }
    out
}

/// Largest step `alpha` in `[0, 1]` keeping `m + alpha d` positive definite,
/// found by Cholesky bisection with a safety backoff.
fn max_step(m: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let psd = |alpha: f64| Cholesky::new(m + d.scale(alpha)).is_some();
    if psd(1.0) {
        return 1.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if psd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Solves `max <C, Y> : <A_i, Y> = b_i, Y >= 0`.
pub fn solve_sdp(
    c_obj: &DMatrix<f64>,
    constraints: &[SparseSym],
    b: &DVector<f64>,
    options: &IpmOptions,
) -> Result<IpmSolution> {
    let s = c_obj.nrows();
    let m = constraints.len();
    if m != b.len() {
        return Err(GkpError::SdpInfeasible(
            "constraint/right-hand-side arity mismatch".into(),
        ));
    }
    // internally minimize <Cmin, Y> with Cmin = -C
    let c_min = -c_obj;
    let data_scale = b
        .iter()
        .fold(1.0_f64, |acc, v| acc.max(v.abs()))
        .max(c_min.amax());
    let mut x = DMatrix::<f64>::identity(s, s).scale(data_scale.max(1.0));
    let mut z = DMatrix::<f64>::identity(s, s).scale(data_scale.max(1.0));
    let mut y = DVector::<f64>::zeros(m);

    let mut iterations = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    for iter in 0..options.max_iter {
        iterations = iter + 1;
        let rp = b - apply_constraints(constraints, &x);
        let rd = &c_min - assemble_dual(constraints, &y, s) - &z;
        let gap = (&x * &z).trace();
        let mu = gap / s as f64;
        let obj = (c_obj.transpose() * &x).trace();
        let rel_gap = gap.abs() / (1.0 + obj.abs());
        let p_inf = rp.norm() / (1.0 + b.norm());
        let d_inf = rd.norm() / (1.0 + c_min.norm());
        kkt = rel_gap.max(p_inf).max(d_inf);
        if kkt < options.tol {
            converged = true;
            break;
        }

        let z_chol = match Cholesky::new(z.clone()) {
            Some(ch) => ch,
            None => break,
        };
        // W_j = Z^{-1} A_j X per constraint
        let w_mats: Vec<DMatrix<f64>> = constraints
            .iter()
            .map(|cons| {
                let mut ax = DMatrix::<f64>::zeros(s, s);
                for &(r, c, w) in cons {
                    for k in 0..s {
                        ax[(r, k)] += w * x[(c, k)];
                    }
                }
                z_chol.solve(&ax)
            })
            .collect();
        // Schur complement M_ij = <A_i, Z^{-1} A_j X>
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for &(r, c, w) in &constraints[i] {
                    acc += w * w_mats[j][(r, c)];
                }
                schur[(i, j)] = acc;
            }
        }
        // symmetrize against roundoff before factoring
        let schur = (&schur + schur.transpose()).scale(0.5);
        let schur_chol = match Cholesky::new(schur.clone()) {
            Some(ch) => ch,
            None => {
                return Err(GkpError::SdpInfeasible(
                    "schur complement not positive definite (dependent constraints?)".into(),
                ))
            }
        };

        let zinv_rd_x = z_chol.solve(&(&rd * &x));
        // predictor: M dy = b + A(Z^{-1} Rd X)
        let rhs_aff = b + apply_constraints(constraints, &zinv_rd_x);
        let dy_aff = schur_chol.solve(&rhs_aff);
        let dz_aff = &rd - assemble_dual(constraints, &dy_aff, s);
        let dx_aff_raw = -&x - z_chol.solve(&(&dz_aff * &x));
        let dx_aff = (&dx_aff_raw + dx_aff_raw.transpose()).scale(0.5);
        let alpha_p_aff = max_step(&x, &dx_aff);
        let alpha_d_aff = max_step(&z, &dz_aff);
        let gap_aff = ((&x + dx_aff.scale(0.95 * alpha_p_aff))
            * (&z + dz_aff.scale(0.95 * alpha_d_aff)))
        .trace();
        let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);

        // corrector: M dy = b + A(Z^{-1} Rd X) - sigma mu A(Z^{-1}) + A(Z^{-1} dZ_a dX_a)
        let zinv = z_chol.solve(&DMatrix::<f64>::identity(s, s));
        let cross = z_chol.solve(&(&dz_aff * &dx_aff));
        let rhs = &rhs_aff - apply_constraints(constraints, &zinv).scale(sigma * mu)
            + apply_constraints(constraints, &cross);
        let dy = schur_chol.solve(&rhs);
        let dz = &rd - assemble_dual(constraints, &dy, s);
        let dx_raw = zinv.scale(sigma * mu) - &x - z_chol.solve(&(&dz * &x)) - &cross;
        let dx = (&dx_raw + dx_raw.transpose()).scale(0.5);

        let tau = 0.97;
        let alpha_p = (tau * max_step(&x, &dx)).min(1.0);
        let alpha_d = (tau * max_step(&z, &dz)).min(1.0);
        x += dx.scale(alpha_p);
        z += dz.scale(alpha_d);
        y += dy.scale(alpha_d);

        // stagnation guard
        if alpha_p < 1e-10 && alpha_d < 1e-10 {
            break;
        }
    }

    let gap = (&x * &z).trace();
    Ok(IpmSolution {
        objective: (c_obj.transpose() * &x).trace(),
        y_mat: x,
        gap,
        kkt_residual: kkt,
        iterations,
        converged,
    })
}
