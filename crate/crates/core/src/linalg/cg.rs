use std::time::Instant;

use super::{axpy, dot, norm2, relative_residual, CsrMatrix, LinalgError, SolverReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Stops when the recursive residual satisfies `||r|| <= tol ||b||`. A
/// non-positive curvature `p^T A p <= 0` aborts with [`LinalgError::Breakdown`].
pub fn cg(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
    preconditioner: Preconditioner,
) -> Result<(Vec<f64>, SolverReport), LinalgError> {
    let start = Instant::now();
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(LinalgError::Dimension(format!(
            "cg on {}x{} with rhs {}",
            n,
            a.ncols(),
            b.len()
        )));
    }
    let inv_diag: Vec<f64> = match preconditioner {
        Preconditioner::None => vec![1.0; n],
        Preconditioner::Jacobi => a
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect(),
    };
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
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
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < maxit {
        a.matvec_into(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(LinalgError::Breakdown {
                iteration: iterations,
                curvature,
            });
        }
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        iterations += 1;
        if norm2(&r) <= tol * bnorm {
            converged = true;
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
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
