use std::time::Instant;

use super::{norm2, relative_residual, CsrMatrix, LinalgError, SolverReport};

/// MINRES (Paige and Saunders) for symmetric, possibly indefinite systems,
/// from a zero initial guess. Stops when the estimated residual norm drops
/// below `tol ||b||`.
pub fn minres(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolverReport), LinalgError> {
    let start = Instant::now();
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(LinalgError::Dimension(format!(
            "minres on {}x{} with rhs {}",
            n,
            a.ncols(),
            b.len()
        )));
    }
    let mut x = vec![0.0; n];
    let beta1 = norm2(b);
    if beta1 == 0.0 {
        return Ok((
            x,
            SolverReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
                wall_time: start.elapsed(),
            },
        ));
    }

    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < maxit {
        iterations += 1;
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        a.matvec_into(&v, &mut y);
        if iterations >= 2 {
            let f = beta / oldb;
            for i in 0..n {
                y[i] -= f * r1[i];
            }
        }
        let alfa = super::dot(&v, &y);
        let f = alfa / beta;
        for i in 0..n {
            y[i] -= f * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm2(&r2);

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        if phibar <= tol * beta1 {
            converged = true;
            break;
        }
        if beta == 0.0 {
            // invariant subspace found; the iterate is exact
            converged = true;
            break;
        }
    }
    let relative_residual = relative_residual(a, &x, b);
    Ok((
        x,
        SolverReport {
            iterations,
            relative_residual,
            converged,
            wall_time: start.elapsed(),
        },
    ))
}
