//! Manufactured solutions, discrete error norms and convergence studies.

mod study;

use serde::Serialize;
use thiserror::Error;

pub use study::{
    compare_strategies, convergence_study, least_squares_rate, Comparison, ConvergenceReport, LevelResult,
    SolvePath, StudyOptions, EXACT_ERROR,
};

use crate::expr::{BinOp, DiffError, EvalError, Expr, ParseError, Var};
use crate::field::{cell_quadrature, nudge, CellRule, CoefficientField, FieldError, Piece};
use crate::mesh::{Mesh, MeshError, Point};
use crate::mfd::{ProblemData, SaddleSystem};
use crate::solver::{Solution, SolverError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("level n = {level}: {source}")]
    Level { level: usize, source: Box<VerifyError> },
    #[error("{0}")]
    Levels(String),
}

impl From<EvalError> for VerifyError {
    fn from(e: EvalError) -> Self {
        VerifyError::Field(FieldError::Eval(e))
    }
}

/// Smooth piece of a manufactured solution with its derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemPiece {
    /// Active where `region > 0`; absent means everywhere.
    pub region: Option<Expr>,
    pub pressure: Expr,
    pub coefficient: Expr,
    pub gradient: [Expr; 2],
    /// `-div(k grad p)`
    pub forcing: Expr,
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Box::new(a), Box::new(b))
}

impl ProblemPiece {
    pub fn new(region: Option<Expr>, pressure: Expr, coefficient: Expr) -> Result<ProblemPiece, VerifyError> {
        let gradient = pressure.gradient()?;
        let fx = bin(BinOp::Mul, coefficient.clone(), gradient[0].clone()).differentiate(Var::X)?;
        let fy = bin(BinOp::Mul, coefficient.clone(), gradient[1].clone()).differentiate(Var::Y)?;
        let forcing = Expr::Neg(Box::new(bin(BinOp::Add, fx, fy)));
        Ok(ProblemPiece {
            region,
            pressure,
            coefficient,
            gradient,
            forcing,
        })
    }
}

/// Exact pressure and coefficient, piecewise smooth, with forcing, gradient
/// and boundary data derived symbolically.
#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedProblem {
    pieces: Vec<ProblemPiece>,
}

impl ManufacturedProblem {
    pub fn new(pressure: Expr, coefficient: Expr) -> Result<ManufacturedProblem, VerifyError> {
        Ok(ManufacturedProblem {
            pieces: vec![ProblemPiece::new(None, pressure, coefficient)?],
        })
    }

    pub fn parse(pressure: &str, coefficient: &str) -> Result<ManufacturedProblem, VerifyError> {
        ManufacturedProblem::new(pressure.parse()?, coefficient.parse()?)
    }

    /// Pieces `(region, pressure, coefficient)`; the first active one wins.
    pub fn piecewise(pieces: Vec<(Option<Expr>, Expr, Expr)>) -> Result<ManufacturedProblem, VerifyError> {
        if pieces.is_empty() {
            return Err(VerifyError::Levels("a problem needs at least one piece".into()));
        }
        let pieces = pieces
            .into_iter()
            .map(|(r, p, k)| ProblemPiece::new(r, p, k))
            .collect::<Result<_, _>>()?;
        Ok(ManufacturedProblem { pieces })
    }

    /// `k = k1` for `x < 1/2`, `k = k2` beyond, with the quasi one-dimensional
    /// pressure `x / k1` on the left continued by `1/(2 k1) + (x - 1/2) / k2`,
    /// so that both `p` and `k dp/dx = 1` are continuous.
    pub fn interface(k1: f64, k2: f64) -> Result<ManufacturedProblem, VerifyError> {
        let left = format!("x / {k1:e}");
        let right = format!("0.5 / {k1:e} + (x - 0.5) / {k2:e}");
        ManufacturedProblem::piecewise(vec![
            (Some("0.5 - x".parse()?), left.parse()?, Expr::Num(k1)),
            (None, right.parse()?, Expr::Num(k2)),
        ])
    }

    pub fn pieces(&self) -> &[ProblemPiece] {
        &self.pieces
    }

    pub fn is_piecewise(&self) -> bool {
        self.pieces.len() > 1
    }

    /// The coefficient as a field for the discretization.
    pub fn coefficient_field(&self) -> CoefficientField {
        match self.pieces.as_slice() {
            [single] if single.region.is_none() => CoefficientField::Scalar(single.coefficient.clone()),
            pieces => CoefficientField::Piecewise(
                pieces
                    .iter()
                    .map(|p| Piece {
                        region: p.region.clone(),
                        value: p.coefficient.clone(),
                    })
                    .collect(),
            ),
        }
    }

    /// Piece active at `x` seen from `inside`.
    pub fn piece(&self, x: Point, inside: Point) -> Result<&ProblemPiece, FieldError> {
        let probe = nudge(x, inside);
        for p in &self.pieces {
            match &p.region {
                None => return Ok(p),
                Some(r) if r.eval_at(probe)? > 0.0 => return Ok(p),
                Some(_) => {}
            }
        }
        Err(FieldError::Uncovered { x: x[0], y: x[1] })
    }

    pub fn pressure(&self, x: Point) -> Result<f64, FieldError> {
        Ok(self.piece(x, x)?.pressure.eval_at(x)?)
    }

    pub fn gradient_from(&self, x: Point, inside: Point) -> Result<Point, FieldError> {
        let g = &self.piece(x, inside)?.gradient;
        Ok([g[0].eval_at(x)?, g[1].eval_at(x)?])
    }

    pub fn forcing_at(&self, x: Point) -> Result<f64, FieldError> {
        Ok(self.piece(x, x)?.forcing.eval_at(x)?)
    }
}

impl ProblemData for ManufacturedProblem {
    fn forcing(&self, x: Point) -> Result<f64, FieldError> {
        self.forcing_at(x)
    }

    fn dirichlet(&self, x: Point) -> Result<f64, FieldError> {
        self.pressure(x)
    }

    fn conormal_flux(&self, x: Point, outward: Point, inside: Point) -> Result<f64, FieldError> {
        let piece = self.piece(x, inside)?;
        let k = piece.coefficient.eval_at(x)?;
        let g = [piece.gradient[0].eval_at(x)?, piece.gradient[1].eval_at(x)?];
        Ok(k * (g[0] * outward[0] + g[1] * outward[1]))
    }
}

/// Discrete errors against the interpolated exact solution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// `sqrt(sum_c |c| (p_c - p_c^I)^2)`
    pub e_p: f64,
    /// `sqrt(sum_c d_c^T M_c d_c)`, `d_c` the local gradient dof error.
    pub e_v: f64,
    /// `sqrt(sum_c |c| (DIV_c v - div(k grad p)_c^I)^2)`
    pub e_div: f64,
    /// `max_c |p_c - p_c^I|`
    pub max_p: f64,
}

/// Exact solution sampled like the discrete unknowns: cell values (centroid
/// or triangulated mean) and, per cell, `grad p(x_f) . n_f` taken from
/// within the cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Interpolant {
    pub pressure: Vec<f64>,
    pub local: Vec<Vec<f64>>,
    pub divergence: Vec<f64>,
}

fn cell_value(
    mesh: &Mesh,
    ci: usize,
    rule: CellRule,
    f: impl Fn(Point) -> Result<f64, VerifyError>,
) -> Result<f64, VerifyError> {
    let c = mesh.cell(ci);
    match rule {
        CellRule::Centroid => f(c.centroid),
        CellRule::Triangulated => {
            let mut s = 0.0;
            for (p, w) in cell_quadrature(mesh, ci) {
                s += w * f(p)?;
            }
            Ok(s / c.area)
        }
    }
}

pub fn interpolate(mesh: &Mesh, problem: &ManufacturedProblem, rule: CellRule) -> Result<Interpolant, VerifyError> {
    let mut pressure = Vec::with_capacity(mesh.num_cells());
    let mut local = Vec::with_capacity(mesh.num_cells());
    let mut divergence = Vec::with_capacity(mesh.num_cells());
    for (ci, c) in mesh.cells().iter().enumerate() {
        let inside = |p: Point| problem.piece(p, c.centroid);
        pressure.push(cell_value(mesh, ci, rule, |p| Ok(inside(p)?.pressure.eval_at(p)?))?);
        divergence.push(-cell_value(mesh, ci, rule, |p| Ok(inside(p)?.forcing.eval_at(p)?))?);
        let v = c
            .faces
            .iter()
            .map(|&fi| {
                let f = mesh.face(fi);
                let g = problem.gradient_from(f.midpoint, c.centroid)?;
                Ok(g[0] * f.normal[0] + g[1] * f.normal[1])
            })
            .collect::<Result<Vec<f64>, VerifyError>>()?;
        local.push(v);
    }
    Ok(Interpolant {
        pressure,
        local,
        divergence,
    })
}

/// Error norms of per-cell discrete fields against an interpolant.
pub fn error_norms(system: &SaddleSystem, pressure: &[f64], local: &[Vec<f64>], exact: &Interpolant) -> ErrorNorms {
    let mut ep = 0.0;
    let mut ev = 0.0;
    let mut ed = 0.0;
    let mut max_p: f64 = 0.0;
    for (ci, ops) in system.local.iter().enumerate() {
        let a = ops.area;
        let dp = pressure[ci] - exact.pressure[ci];
        ep += a * dp * dp;
        max_p = max_p.max(dp.abs());
        let d: Vec<f64> = local[ci].iter().zip(&exact.local[ci]).map(|(u, w)| u - w).collect();
        ev += crate::linalg::dot(&d, &ops.mass.matvec(&d));
        let dd = ops.apply_weighted_divergence(&local[ci]) - exact.divergence[ci];
        ed += a * dd * dd;
    }
    ErrorNorms {
        e_p: ep.sqrt(),
        e_v: ev.max(0.0).sqrt(),
        e_div: ed.sqrt(),
        max_p,
    }
}

/// Errors of a solution of `system` against the exact solution of `problem`.
pub fn compute_errors(
    mesh: &Mesh,
    system: &SaddleSystem,
    solution: &Solution,
    problem: &ManufacturedProblem,
    rule: CellRule,
) -> Result<ErrorNorms, VerifyError> {
    let exact = interpolate(mesh, problem, rule)?;
    Ok(error_norms(system, &solution.pressure, &solution.local, &exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{face_values, FaceStrategy};
    use crate::mesh::generate_quad_mesh;
    use crate::mfd::{assemble, BoundarySpec, MfdOptions};

    #[test]
    fn forcing_of_simple_problems() {
        let p = ManufacturedProblem::parse("x", "1").unwrap();
        assert_eq!(p.forcing_at([0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(p.gradient_from([0.3, 0.7], [0.3, 0.7]).unwrap(), [1.0, 0.0]);
        let q = ManufacturedProblem::parse("x^2", "1").unwrap();
        assert_eq!(q.forcing_at([0.3, 0.7]).unwrap(), -2.0);
    }

    #[test]
    fn interface_problem_is_flux_continuous() {
        let p = ManufacturedProblem::interface(1.0, 100.0).unwrap();
        let x = [0.5, 0.3];
        let left = p.conormal_flux(x, [1.0, 0.0], [0.25, 0.3]).unwrap();
        let right = p.conormal_flux(x, [1.0, 0.0], [0.75, 0.3]).unwrap();
        assert!((left - right).abs() < 1e-15);
        assert!((p.pressure([0.5 - 1e-12, 0.1]).unwrap() - p.pressure([0.5 + 1e-12, 0.1]).unwrap()).abs() < 1e-10);
        assert_eq!(p.forcing_at([0.2, 0.2]).unwrap(), 0.0);
    }

    fn zero_solution_system(mesh: &Mesh, problem: &ManufacturedProblem) -> SaddleSystem {
        let k = problem.coefficient_field();
        let st = face_values(&k, mesh, FaceStrategy::Trace, None, CellRule::Centroid).unwrap();
        assemble(mesh, &st, problem, &BoundarySpec::default(), &MfdOptions::default()).unwrap()
    }

    #[test]
    fn zero_solution_against_linear_pressure() {
        let mesh = generate_quad_mesh(1).unwrap();
        let problem = ManufacturedProblem::parse("x", "1").unwrap();
        let sys = zero_solution_system(&mesh, &problem);
        let exact = interpolate(&mesh, &problem, CellRule::Centroid).unwrap();
        let e = error_norms(&sys, &[0.0], &[vec![0.0; 4]], &exact);
        assert_eq!(e.e_p, 0.5);
        assert_eq!(e.max_p, 0.5);
    }

    #[test]
    fn interpolant_has_zero_error() {
        let mesh = generate_quad_mesh(3).unwrap();
        let problem = ManufacturedProblem::parse("x^2 + x*y", "1").unwrap();
        let sys = zero_solution_system(&mesh, &problem);
        let exact = interpolate(&mesh, &problem, CellRule::Centroid).unwrap();
        let e = error_norms(&sys, &exact.pressure, &exact.local, &exact);
        assert_eq!((e.e_p, e.e_v), (0.0, 0.0));
    }
}
