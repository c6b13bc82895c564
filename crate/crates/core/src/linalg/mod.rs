//! In-repo linear algebra: small dense matrices with pivoted elimination,
//! CSR sparse matrices, preconditioned CG, MINRES and an inverse-iteration
//! eigenvalue estimate.

mod cg;
mod dense;
mod eigen;
mod minres;
mod sparse;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

pub use cg::{cg, Preconditioner};
pub use dense::{dense_solve, DenseMatrix, Lu};
pub use eigen::{smallest_eigenvalue_estimate, EigenEstimate};
pub use minres::minres;
pub use sparse::{CsrMatrix, TripletBuilder};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("CG breakdown at iteration {iteration}: p^T A p = {curvature:e} (operator not positive definite)")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverReport {
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`, recomputed from the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    #[serde(skip)]
    pub wall_time: Duration,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = a.matvec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}
