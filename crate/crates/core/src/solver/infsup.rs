use serde::{Deserialize, Serialize};

use crate::linalg::{smallest_eigenvalue_estimate, DenseMatrix, EigenEstimate, Lu};
use crate::mfd::SaddleSystem;

use super::SolverError;

/// Largest number of unknown face values for which the dense estimate runs.
pub const MAX_DENSE_FACES: usize = 4000;

/// Pressure metric `D` of the eigenproblem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PressureMetric {
    /// `D = diag(|c| kbar_c)`
    #[default]
    Weighted,
    /// `D = diag(|c|)`
    Area,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfSup {
    /// `beta_h = sqrt(lambda_min)`
    pub beta: f64,
    pub lambda_min: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Discrete inf-sup constant: the square root of the smallest eigenvalue of
/// `B M^{-1} B^T x = lambda D x` over the non-essential face values.
pub fn infsup_estimate(system: &SaddleSystem, metric: PressureMetric) -> Result<InfSup, SolverError> {
    if system.mean_constraint {
        return Err(SolverError::Unsupported(
            "inf-sup estimate needs at least one Dirichlet boundary face".into(),
        ));
    }
    let nf = system.num_faces();
    let nc = system.num_cells();
    let mut index = vec![None; nf];
    let mut free = 0;
    for fi in 0..nf {
        if system.essential[fi].is_none() {
            index[fi] = Some(free);
            free += 1;
        }
    }
    if free > MAX_DENSE_FACES {
        return Err(SolverError::Unsupported(format!(
            "inf-sup estimate is dense; {free} face unknowns exceed the limit of {MAX_DENSE_FACES}"
        )));
    }
    let mut m = DenseMatrix::zeros(free, free);
    for fi in 0..nf {
        let Some(i) = index[fi] else { continue };
        for (fj, v) in system.mass.row(fi) {
            if let Some(j) = index[fj] {
                m[(i, j)] = v;
            }
        }
    }
    let mut bt = DenseMatrix::zeros(free, nc);
    for ci in 0..nc {
        for (fj, v) in system.div.row(ci) {
            if let Some(j) = index[fj] {
                bt[(j, ci)] = v;
            }
        }
    }
    let x = Lu::factor(&m)?.solve_matrix(&bt);
    let mut s = bt.transpose().matmul(&x);
    for i in 0..nc {
        for j in i + 1..nc {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let metric: Vec<f64> = match metric {
        PressureMetric::Weighted => system.area.iter().zip(&system.kbar).map(|(a, k)| a * k).collect(),
        PressureMetric::Area => system.area.clone(),
    };
    let EigenEstimate {
        value,
        iterations,
        converged,
    } = smallest_eigenvalue_estimate(&s, &metric, 1000, 1e-12)?;
    Ok(InfSup {
        beta: value.max(0.0).sqrt(),
        lambda_min: value,
        iterations,
        converged,
    })
}
