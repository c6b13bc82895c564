//! Diffusion coefficients and their staggered discretization: one value
//! `kbar_c` per cell (weights the inner product) and one value `k^c_f` per
//! cell-face incidence (weights the divergence).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::mesh::{Mesh, Point};

/// Relative offset towards the cell centroid used to decide which side of a
/// face a trace is taken from.
pub const TRACE_OFFSET: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FieldError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("coefficient is not positive at ({x}, {y}): {value}")]
    NonPositive { x: f64, y: f64, value: f64 },
    #[error("no piece of the coefficient covers ({x}, {y})")]
    Uncovered { x: f64, y: f64 },
    #[error("the upwind strategy needs a flux hint")]
    MissingHint,
    #[error("flux hint has {got} entries, expected {expected}")]
    HintLength { got: usize, expected: usize },
}

/// One piece of a piecewise coefficient: active where `region > 0`, or
/// everywhere when `region` is absent. The first matching piece wins.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub region: Option<Expr>,
    pub value: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientField {
    Scalar(Expr),
    Piecewise(Vec<Piece>),
    /// Symmetric tensor `[[k11, k12], [k12, k22]]`.
    Tensor { k11: Expr, k12: Expr, k22: Expr },
}

pub type Tensor2 = [[f64; 2]; 2];

pub(crate) fn nudge(x: Point, inside: Point) -> Point {
    [
        x[0] + TRACE_OFFSET * (inside[0] - x[0]),
        x[1] + TRACE_OFFSET * (inside[1] - x[1]),
    ]
}

impl CoefficientField {
    pub fn constant(k: f64) -> CoefficientField {
        CoefficientField::Scalar(Expr::Num(k))
    }

    pub fn is_tensor(&self) -> bool {
        matches!(self, CoefficientField::Tensor { .. })
    }

    /// Value at `x` as seen from the cell containing `inside`. For piecewise
    /// fields the piece is selected at `x` moved slightly towards `inside`,
    /// then evaluated at `x` itself.
    pub fn scalar_from(&self, x: Point, inside: Point) -> Result<f64, FieldError> {
        match self {
            CoefficientField::Scalar(e) => Ok(e.eval_at(x)?),
            CoefficientField::Piecewise(pieces) => {
                let probe = nudge(x, inside);
                for p in pieces {
                    let active = match &p.region {
                        None => true,
                        Some(r) => r.eval_at(probe)? > 0.0,
                    };
                    if active {
                        return Ok(p.value.eval_at(x)?);
                    }
                }
                Err(FieldError::Uncovered { x: x[0], y: x[1] })
            }
            CoefficientField::Tensor { .. } => {
                let t = self.tensor_from(x, inside)?;
                Ok(0.5 * (t[0][0] + t[1][1]))
            }
        }
    }

    pub fn tensor_from(&self, x: Point, inside: Point) -> Result<Tensor2, FieldError> {
        match self {
            CoefficientField::Tensor { k11, k12, k22 } => {
                let (a, b, d) = (k11.eval_at(x)?, k12.eval_at(x)?, k22.eval_at(x)?);
                Ok([[a, b], [b, d]])
            }
            _ => {
                let k = self.scalar_from(x, inside)?;
                Ok([[k, 0.0], [0.0, k]])
            }
        }
    }

    /// Checks positivity (positive definiteness for tensors) at every cell
    /// centroid and at both sides of every face midpoint.
    pub fn check_positive(&self, mesh: &Mesh) -> Result<(), FieldError> {
        for c in mesh.cells() {
            check_spd(self.tensor_from(c.centroid, c.centroid)?, c.centroid)?;
            for &fi in &c.faces {
                let xf = mesh.face(fi).midpoint;
                check_spd(self.tensor_from(xf, c.centroid)?, xf)?;
            }
        }
        Ok(())
    }
}

fn check_spd(t: Tensor2, x: Point) -> Result<(), FieldError> {
    let tr = t[0][0] + t[1][1];
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    // both eigenvalues positive
    if !(tr > 0.0 && det > 0.0) {
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        return Err(FieldError::NonPositive {
            x: x[0],
            y: x[1],
            value: 0.5 * tr - disc,
        });
    }
    Ok(())
}

fn check_positive_value(v: f64, x: Point) -> Result<f64, FieldError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(FieldError::NonPositive {
            x: x[0],
            y: x[1],
            value: v,
        })
    }
}

/// How the cell value `kbar_c` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellRule {
    /// Value at the centroid.
    #[default]
    Centroid,
    /// Mean over the cell: fan of triangles from the centroid, edge-midpoint
    /// rule on each (exact for quadratics).
    Triangulated,
}

/// Quadrature points and weights (summing to `|c|`) of the triangulated rule.
pub fn cell_quadrature(mesh: &Mesh, ci: usize) -> Vec<(Point, f64)> {
    let c = mesh.cell(ci);
    let xc = c.centroid;
    let m = c.vertices.len();
    let mut q = Vec::with_capacity(3 * m);
    for i in 0..m {
        let a = mesh.vertices()[c.vertices[i]];
        let b = mesh.vertices()[c.vertices[(i + 1) % m]];
        let area = 0.5 * ((a[0] - xc[0]) * (b[1] - xc[1]) - (a[1] - xc[1]) * (b[0] - xc[0]));
        let mid = |p: Point, q: Point| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        for p in [mid(xc, a), mid(a, b), mid(b, xc)] {
            q.push((p, area / 3.0));
        }
    }
    q
}

/// Cell tensor `Kbar_c` under the chosen rule (scalar fields give `k I`).
pub fn cell_tensor(
    k: &CoefficientField,
    mesh: &Mesh,
    ci: usize,
    rule: CellRule,
) -> Result<Tensor2, FieldError> {
    let c = mesh.cell(ci);
    let t = match rule {
        CellRule::Centroid => k.tensor_from(c.centroid, c.centroid)?,
        CellRule::Triangulated => {
            let mut t = [[0.0; 2]; 2];
            for (p, w) in cell_quadrature(mesh, ci) {
                let v = k.tensor_from(p, c.centroid)?;
                for i in 0..2 {
                    for j in 0..2 {
                        t[i][j] += w * v[i][j];
                    }
                }
            }
            for row in &mut t {
                for v in row {
                    *v /= c.area;
                }
            }
            t
        }
    };
    check_spd(t, c.centroid)?;
    Ok(t)
}

/// Scalar cell value `kbar_c` (for tensors, the mean eigenvalue).
pub fn cell_average(
    k: &CoefficientField,
    mesh: &Mesh,
    ci: usize,
    rule: CellRule,
) -> Result<f64, FieldError> {
    let t = cell_tensor(k, mesh, ci, rule)?;
    Ok(0.5 * (t[0][0] + t[1][1]))
}

/// Rule producing the face values `k^c_f` on interior faces. Boundary faces
/// always use the one-sided trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceStrategy {
    /// Each side keeps its own one-sided trace.
    #[default]
    Trace,
    Arithmetic,
    Harmonic,
    /// Both sides take the trace of the donor cell, the one the flux leaves.
    Upwind,
}

impl FaceStrategy {
    pub const ALL: [FaceStrategy; 4] = [
        FaceStrategy::Trace,
        FaceStrategy::Arithmetic,
        FaceStrategy::Harmonic,
        FaceStrategy::Upwind,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaceStrategy::Trace => "trace",
            FaceStrategy::Arithmetic => "arithmetic",
            FaceStrategy::Harmonic => "harmonic",
            FaceStrategy::Upwind => "upwind",
        }
    }
}

/// Direction information for the upwind strategy.
#[derive(Clone, Debug, PartialEq)]
pub enum FluxHint {
    /// Flux through each face along its global normal `n_f`.
    Faces(Vec<f64>),
    /// One flux vector per cell; the face flux is the mean of the two sides.
    Cells(Vec<Point>),
}

/// Staggered coefficient: cell values and per-incidence face values.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredCoefficient {
    pub kbar: Vec<f64>,
    pub cell_tensor: Vec<Tensor2>,
    /// `kface[c][i]` is `k^c_f` for the i-th local face of cell `c`.
    pub kface: Vec<Vec<f64>>,
    pub tensor: bool,
}

impl StaggeredCoefficient {
    /// `k` multiplied by `alpha` everywhere.
    pub fn scaled(&self, alpha: f64) -> StaggeredCoefficient {
        let mut s = self.clone();
        s.kbar.iter_mut().for_each(|v| *v *= alpha);
        for t in &mut s.cell_tensor {
            for row in t.iter_mut() {
                row.iter_mut().for_each(|v| *v *= alpha);
            }
        }
        for row in &mut s.kface {
            row.iter_mut().for_each(|v| *v *= alpha);
        }
        s
    }

    /// `(k^{c1}_f, k^{c2}_f)` for face `fi`; the second is `None` on the boundary.
    pub fn face_sides(&self, mesh: &Mesh, fi: usize) -> (f64, Option<f64>) {
        let f = mesh.face(fi);
        let side = |c: usize| {
            let k = mesh.cell(c).faces.iter().position(|&g| g == fi).expect("incident");
            self.kface[c][k]
        };
        (side(f.cells.0), f.cells.1.map(side))
    }
}

fn one_sided_trace(
    k: &CoefficientField,
    mesh: &Mesh,
    ci: usize,
    fi: usize,
) -> Result<f64, FieldError> {
    let c = mesh.cell(ci);
    let f = mesh.face(fi);
    let v = if k.is_tensor() {
        let t = k.tensor_from(f.midpoint, c.centroid)?;
        let n = f.normal;
        n[0] * (t[0][0] * n[0] + t[0][1] * n[1]) + n[1] * (t[1][0] * n[0] + t[1][1] * n[1])
    } else {
        k.scalar_from(f.midpoint, c.centroid)?
    };
    check_positive_value(v, f.midpoint)
}

fn face_flux(mesh: &Mesh, hint: &FluxHint, fi: usize) -> f64 {
    match hint {
        FluxHint::Faces(q) => q[fi],
        FluxHint::Cells(u) => {
            let f = mesh.face(fi);
            let (a, b) = (f.cells.0, f.cells.1.unwrap_or(f.cells.0));
            let m = [0.5 * (u[a][0] + u[b][0]), 0.5 * (u[a][1] + u[b][1])];
            m[0] * f.normal[0] + m[1] * f.normal[1]
        }
    }
}

/// Builds the staggered coefficient for `mesh` under `strategy`.
pub fn face_values(
    k: &CoefficientField,
    mesh: &Mesh,
    strategy: FaceStrategy,
    hint: Option<&FluxHint>,
    rule: CellRule,
) -> Result<StaggeredCoefficient, FieldError> {
    if strategy == FaceStrategy::Upwind {
        match hint {
            None => return Err(FieldError::MissingHint),
            Some(FluxHint::Faces(q)) if q.len() != mesh.num_faces() => {
                return Err(FieldError::HintLength {
                    got: q.len(),
                    expected: mesh.num_faces(),
                })
            }
            Some(FluxHint::Cells(u)) if u.len() != mesh.num_cells() => {
                return Err(FieldError::HintLength {
                    got: u.len(),
                    expected: mesh.num_cells(),
                })
            }
            _ => {}
        }
    }

    let mut cell_tensors = Vec::with_capacity(mesh.num_cells());
    let mut kbar = Vec::with_capacity(mesh.num_cells());
    let mut kface = Vec::with_capacity(mesh.num_cells());
    for (ci, c) in mesh.cells().iter().enumerate() {
        let t = cell_tensor(k, mesh, ci, rule)?;
        kbar.push(0.5 * (t[0][0] + t[1][1]));
        cell_tensors.push(t);
        let traces = c
            .faces
            .iter()
            .map(|&fi| one_sided_trace(k, mesh, ci, fi))
            .collect::<Result<Vec<_>, _>>()?;
        kface.push(traces);
    }

    let flux_scale = match (strategy, hint) {
        (FaceStrategy::Upwind, Some(h)) => (0..mesh.num_faces())
            .map(|fi| face_flux(mesh, h, fi).abs())
            .fold(0.0, f64::max),
        _ => 0.0,
    };

    if strategy != FaceStrategy::Trace {
        for (fi, f) in mesh.faces().iter().enumerate() {
            let (c1, Some(c2)) = f.cells else { continue };
            let l1 = mesh.cell(c1).faces.iter().position(|&g| g == fi).expect("incident");
            let l2 = mesh.cell(c2).faces.iter().position(|&g| g == fi).expect("incident");
            let (k1, k2) = (kface[c1][l1], kface[c2][l2]);
            let arithmetic = 0.5 * (k1 + k2);
            let v = match strategy {
                FaceStrategy::Arithmetic => arithmetic,
                FaceStrategy::Harmonic => 2.0 * k1 * k2 / (k1 + k2),
                FaceStrategy::Upwind => {
                    let q = face_flux(mesh, hint.expect("checked above"), fi);
                    if q.abs() <= 1e-14 * flux_scale || q == 0.0 {
                        arithmetic
                    } else if mesh.cell(c1).signs[l1] * q > 0.0 {
                        // flux leaves c1 through f
                        k1
                    } else {
                        k2
                    }
                }
                FaceStrategy::Trace => unreachable!(),
            };
            kface[c1][l1] = v;
            kface[c2][l2] = v;
        }
    }

    Ok(StaggeredCoefficient {
        kbar,
        cell_tensor: cell_tensors,
        kface,
        tensor: k.is_tensor(),
    })
}
