//! Two independent routes to the discrete solution: MINRES on the indefinite
//! saddle system, and hybridization to an SPD interface system solved by PCG.
//! Their agreement is itself a check.

mod hybrid;
mod infsup;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hybrid::{solve_hybrid, HybridSystem};
pub use infsup::{infsup_estimate, InfSup, PressureMetric, MAX_DENSE_FACES};

use crate::field::{face_values, CellRule, CoefficientField, FaceStrategy, FieldError, FluxHint, StaggeredCoefficient};
use crate::linalg::{minres, LinalgError, Preconditioner, SolverReport};
use crate::mesh::Mesh;
use crate::mfd::{assemble, BoundarySpec, MfdError, MfdOptions, ProblemData, SaddleSystem};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Mfd(#[from] MfdError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{path} solver did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged {
        path: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error(
        "hybrid system lost positive definiteness at CG iteration {iteration} (p^T S p = {curvature:e}); \
         smallest stabilization gamma {min_gamma:e} in cell {min_gamma_cell}, smallest diagonal of S {min_diag:e}"
    )]
    Positivity {
        iteration: usize,
        curvature: f64,
        min_gamma_cell: usize,
        min_gamma: f64,
        min_diag: f64,
    },
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub tol: f64,
    pub maxit: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            maxit: 20_000,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

/// Discrete solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// `p_c`
    pub pressure: Vec<f64>,
    /// One gradient value per face. On a face where the hybrid path keeps
    /// two different side values, this is their mean.
    pub face: Vec<f64>,
    /// Gradient dofs per cell in local face order.
    pub local: Vec<Vec<f64>>,
    /// Face pressures on interior and Dirichlet faces (hybrid path only).
    pub multipliers: Option<Vec<Option<f64>>>,
    pub report: SolverReport,
}

/// Solves the block system with MINRES.
pub fn solve_saddle(system: &SaddleSystem, options: &SolverOptions) -> Result<Solution, SolverError> {
    let a = system.block_matrix();
    let b = system.block_rhs();
    let (x, report) = minres(&a, &b, options.tol, options.maxit)?;
    if !report.converged {
        return Err(SolverError::NotConverged {
            path: "saddle MINRES",
            iterations: report.iterations,
            residual: report.relative_residual,
        });
    }
    let nf = system.num_faces();
    let nc = system.num_cells();
    let face = x[..nf].to_vec();
    let local = (0..nc).map(|ci| system.gather(ci, &face)).collect();
    Ok(Solution {
        pressure: x[nf..nf + nc].to_vec(),
        face,
        local,
        multipliers: None,
        report,
    })
}

/// Face fluxes `-k_f v_f` along the global normals, from a solution computed
/// with side-equal face values.
pub fn face_fluxes(mesh: &Mesh, coef: &StaggeredCoefficient, solution: &Solution) -> Vec<f64> {
    (0..mesh.num_faces())
        .map(|fi| {
            let (k1, _) = coef.face_sides(mesh, fi);
            -k1 * solution.face[fi]
        })
        .collect()
}

/// Everything needed to discretize one problem.
pub struct Discretization<'a> {
    pub mesh: &'a Mesh,
    pub coefficient: &'a CoefficientField,
    pub data: &'a dyn ProblemData,
    pub bc: &'a BoundarySpec,
    pub cell_rule: CellRule,
    pub mfd: MfdOptions,
}

impl Discretization<'_> {
    /// Staggered coefficient under `strategy`. Upwind runs a preliminary
    /// hybrid solve with arithmetic face values to obtain the flux direction.
    pub fn staggered(
        &self,
        strategy: FaceStrategy,
        solver: &SolverOptions,
    ) -> Result<StaggeredCoefficient, SolverError> {
        if strategy != FaceStrategy::Upwind {
            return Ok(face_values(self.coefficient, self.mesh, strategy, None, self.cell_rule)?);
        }
        let provisional = face_values(
            self.coefficient,
            self.mesh,
            FaceStrategy::Arithmetic,
            None,
            self.cell_rule,
        )?;
        let system = self.assemble(&provisional)?;
        let solution = solve_hybrid(self.mesh, &system, self.data, solver)?;
        let hint = FluxHint::Faces(face_fluxes(self.mesh, &provisional, &solution));
        Ok(face_values(
            self.coefficient,
            self.mesh,
            FaceStrategy::Upwind,
            Some(&hint),
            self.cell_rule,
        )?)
    }

    pub fn assemble(&self, coef: &StaggeredCoefficient) -> Result<SaddleSystem, SolverError> {
        Ok(assemble(self.mesh, coef, self.data, self.bc, &self.mfd)?)
    }
}
