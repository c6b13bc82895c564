use super::{dot, DenseMatrix, LinalgError};

#[derive(Clone, Debug, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest eigenvalue of the pencil `A x = lambda D x` (`A` SPD, `D` a
/// positive diagonal metric) by inverse iteration in the `D` inner product,
/// with a Rayleigh quotient estimate. Stops when successive estimates agree
/// to `tol` relative.
pub fn smallest_eigenvalue_estimate(
    a: &DenseMatrix,
    metric: &[f64],
    maxit: usize,
    tol: f64,
) -> Result<EigenEstimate, LinalgError> {
    let n = a.rows();
    if a.cols() != n || metric.len() != n {
        return Err(LinalgError::Dimension(format!(
            "eigen estimate of {}x{} with metric {}",
            n,
            a.cols(),
            metric.len()
        )));
    }
    let lu = a.lu()?;
    // deterministic start with components along every eigenvector in practice
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
    let dnorm = |x: &[f64]| x.iter().zip(metric).map(|(v, d)| v * v * d).sum::<f64>().sqrt();
    let s = dnorm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut value = f64::INFINITY;
    for it in 1..=maxit {
        let dx: Vec<f64> = x.iter().zip(metric).map(|(v, d)| v * d).collect();
        let mut y = lu.solve(&dx);
        let s = dnorm(&y);
        y.iter_mut().for_each(|v| *v /= s);
        let rq = dot(&y, &a.matvec(&y));
        x = y;
        if (rq - value).abs() <= tol * rq.abs() {
            return Ok(EigenEstimate {
                value: rq,
                iterations: it,
                converged: true,
            });
        }
        value = rq;
    }
    Ok(EigenEstimate {
        value,
        iterations: maxit,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 5.0]]);
        let e = smallest_eigenvalue_estimate(&a, &[1.0, 1.0], 200, 1e-14).unwrap();
        assert!((e.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn identity() {
        let e = smallest_eigenvalue_estimate(&DenseMatrix::identity(5), &[1.0; 5], 50, 1e-14).unwrap();
        assert!((e.value - 1.0).abs() < 1e-14);
        assert!(e.converged);
    }

    #[test]
    fn metric_scales_the_pencil() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 5.0]]);
        let e = smallest_eigenvalue_estimate(&a, &[4.0, 1.0], 200, 1e-14).unwrap();
        assert!((e.value - 0.5).abs() < 1e-8);
    }
}
