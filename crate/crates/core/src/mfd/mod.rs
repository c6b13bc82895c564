//! Mimetic discretization of the mixed problem `v = grad p`, `-div(k v) = f`.
//!
//! Unknowns are one gradient value `v_f` per face (the average of
//! `grad p . n_f`) and one pressure `p_c` per cell. The coefficient enters
//! twice: cell values weight the inner product `M`, face values weight the
//! divergence `B`. The assembled system is
//!
//! ```text
//! [ M  B^T ] [ v ]   [ g_D ]
//! [ B   0  ] [ p ] = [ -F  ]
//! ```
//!
//! Dirichlet data enters `g_D` (natural); Neumann data fixes `v_f` (essential).

mod local;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use local::{build_local, ConsistencyWeight, LocalCellOperators, MfdOptions};

use crate::expr::{EvalError, Expr};
use crate::field::{FieldError, StaggeredCoefficient};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{Mesh, Point};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MfdError {
    #[error("cell {cell} is degenerate: N^T N is singular")]
    DegenerateCell { cell: usize },
    #[error("cell {cell}: local inner product is not positive definite")]
    NotPositiveDefinite { cell: usize },
    #[error("boundary face {face} has no boundary condition (label {label:?})")]
    UnlabeledBoundary { face: usize, label: Option<String> },
    #[error("pure Neumann data is inconsistent: net source {imbalance:e} (relative {relative:e})")]
    IncompatibleNeumann { imbalance: f64, relative: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<EvalError> for MfdError {
    fn from(e: EvalError) -> Self {
        MfdError::Field(FieldError::Eval(e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Boundary condition kind per boundary label, with an optional fallback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default)]
    pub default: Option<BcKind>,
    #[serde(default)]
    pub labels: BTreeMap<String, BcKind>,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::all(BcKind::Dirichlet)
    }
}

impl BoundarySpec {
    pub fn all(kind: BcKind) -> BoundarySpec {
        BoundarySpec {
            default: Some(kind),
            labels: BTreeMap::new(),
        }
    }

    pub fn with(mut self, label: &str, kind: BcKind) -> BoundarySpec {
        self.labels.insert(label.to_string(), kind);
        self
    }

    pub fn kind(&self, label: Option<&str>) -> Option<BcKind> {
        label
            .and_then(|l| self.labels.get(l).copied())
            .or(self.default)
    }
}

/// Source and boundary data of a problem.
pub trait ProblemData {
    fn forcing(&self, x: Point) -> Result<f64, FieldError>;
    fn dirichlet(&self, x: Point) -> Result<f64, FieldError>;
    /// Outward co-normal flux `k grad p . n_out` at a boundary point, seen
    /// from the cell whose centroid is `inside`.
    fn conormal_flux(&self, x: Point, outward: Point, inside: Point) -> Result<f64, FieldError>;
}

/// Problem data given directly as expressions. `neumann` is the outward
/// co-normal flux.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionData {
    pub forcing: Expr,
    pub dirichlet: Expr,
    pub neumann: Expr,
}

impl ProblemData for ExpressionData {
    fn forcing(&self, x: Point) -> Result<f64, FieldError> {
        Ok(self.forcing.eval_at(x)?)
    }

    fn dirichlet(&self, x: Point) -> Result<f64, FieldError> {
        Ok(self.dirichlet.eval_at(x)?)
    }

    fn conormal_flux(&self, x: Point, _outward: Point, _inside: Point) -> Result<f64, FieldError> {
        Ok(self.neumann.eval_at(x)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// Assembled saddle-point system. Essential (Neumann) face values are
/// eliminated symmetrically: their rows and columns of `M` become identity
/// rows, their columns of `B` are zero, and the right-hand sides carry the
/// known contributions.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub mass: CsrMatrix,
    pub div: CsrMatrix,
    pub rhs_v: Vec<f64>,
    pub rhs_p: Vec<f64>,
    pub face_kind: Vec<FaceKind>,
    pub essential: Vec<Option<f64>>,
    pub local: Vec<LocalCellOperators>,
    /// `f(x_c)` per cell.
    pub cell_forcing: Vec<f64>,
    pub area: Vec<f64>,
    pub kbar: Vec<f64>,
    /// Face indices per cell, in local order.
    pub cell_faces: Vec<Vec<usize>>,
    /// Pure Neumann: a multiplier enforcing `sum |c| p_c = 0` is appended.
    pub mean_constraint: bool,
}

/// Classifies every face and checks that each boundary face has a condition.
pub fn classify_faces(mesh: &Mesh, bc: &BoundarySpec) -> Result<Vec<FaceKind>, MfdError> {
    mesh.faces()
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            if !f.is_boundary() {
                return Ok(FaceKind::Interior);
            }
            match bc.kind(mesh.face_label(fi)) {
                Some(BcKind::Dirichlet) => Ok(FaceKind::Dirichlet),
                Some(BcKind::Neumann) => Ok(FaceKind::Neumann),
                None => Err(MfdError::UnlabeledBoundary {
                    face: fi,
                    label: mesh.face_label(fi).map(str::to_string),
                }),
            }
        })
        .collect()
}

/// Essential value `v_f = sigma q_N / k^c_f` of a Neumann face.
pub fn neumann_value(
    mesh: &Mesh,
    coef: &StaggeredCoefficient,
    data: &dyn ProblemData,
    fi: usize,
) -> Result<f64, MfdError> {
    let f = mesh.face(fi);
    let ci = f.cells.0;
    let c = mesh.cell(ci);
    let k = c.faces.iter().position(|&g| g == fi).expect("incident");
    let sigma = c.signs[k];
    let outward = [sigma * f.normal[0], sigma * f.normal[1]];
    let q = data.conormal_flux(f.midpoint, outward, c.centroid)?;
    Ok(sigma * q / coef.kface[ci][k])
}

/// Builds all local operators and assembles the global saddle system.
pub fn assemble(
    mesh: &Mesh,
    coef: &StaggeredCoefficient,
    data: &dyn ProblemData,
    bc: &BoundarySpec,
    options: &MfdOptions,
) -> Result<SaddleSystem, MfdError> {
    let nf = mesh.num_faces();
    let nc = mesh.num_cells();
    let face_kind = classify_faces(mesh, bc)?;
    let mut essential = vec![None; nf];
    for fi in 0..nf {
        if face_kind[fi] == FaceKind::Neumann {
            essential[fi] = Some(neumann_value(mesh, coef, data, fi)?);
        }
    }
    let local = (0..nc)
        .map(|ci| build_local(mesh, ci, coef, options))
        .collect::<Result<Vec<_>, _>>()?;

    let mut mass = TripletBuilder::new(nf, nf);
    let mut div = TripletBuilder::new(nc, nf);
    let mut rhs_v = vec![0.0; nf];
    let mut rhs_p = vec![0.0; nc];
    let mut cell_forcing = Vec::with_capacity(nc);

    for (ci, ops) in local.iter().enumerate() {
        let c = mesh.cell(ci);
        let fbar = data.forcing(c.centroid)?;
        cell_forcing.push(fbar);
        rhs_p[ci] = -c.area * fbar;
        for (i, &fi) in c.faces.iter().enumerate() {
            let b = ops.div_row[i];
            match essential[fi] {
                Some(val) => rhs_p[ci] -= b * val,
                None => div.push(ci, fi, b),
            }
            if face_kind[fi] == FaceKind::Dirichlet {
                rhs_v[fi] += b * data.dirichlet(mesh.face(fi).midpoint)?;
            }
            if essential[fi].is_some() {
                continue;
            }
            for (j, &fj) in c.faces.iter().enumerate() {
                let mij = ops.mass[(i, j)];
                match essential[fj] {
                    Some(val) => rhs_v[fi] -= mij * val,
                    None => mass.push(fi, fj, mij),
                }
            }
        }
    }
    for fi in 0..nf {
        if let Some(val) = essential[fi] {
            mass.push(fi, fi, 1.0);
            rhs_v[fi] = val;
        }
    }

    let mean_constraint = !face_kind.contains(&FaceKind::Dirichlet);
    if mean_constraint {
        // sum_c F_c + sum_f |f| q_N must vanish
        let mut net = 0.0;
        let mut scale = 0.0;
        for (ci, c) in mesh.cells().iter().enumerate() {
            net += c.area * cell_forcing[ci];
            scale += (c.area * cell_forcing[ci]).abs();
            for (i, &fi) in c.faces.iter().enumerate() {
                if let Some(val) = essential[fi] {
                    let flux = local[ci].div_row[i] * val;
                    net += flux;
                    scale += flux.abs();
                }
            }
        }
        let relative = if scale > 0.0 { net.abs() / scale } else { 0.0 };
        if relative > options.neumann_compatibility_tol {
            return Err(MfdError::IncompatibleNeumann {
                imbalance: net,
                relative,
            });
        }
    }

    Ok(SaddleSystem {
        mass: mass.build(),
        div: div.build(),
        rhs_v,
        rhs_p,
        face_kind,
        essential,
        cell_forcing,
        area: mesh.cells().iter().map(|c| c.area).collect(),
        kbar: coef.kbar.clone(),
        cell_faces: mesh.cells().iter().map(|c| c.faces.clone()).collect(),
        local,
        mean_constraint,
    })
}

impl SaddleSystem {
    pub fn num_faces(&self) -> usize {
        self.mass.nrows()
    }

    pub fn num_cells(&self) -> usize {
        self.div.nrows()
    }

    /// Size of the block system, including the mean-value multiplier.
    pub fn size(&self) -> usize {
        self.num_faces() + self.num_cells() + usize::from(self.mean_constraint)
    }

    /// The symmetric block matrix `[[M, B^T], [B, 0]]`, bordered by the
    /// mean-value constraint when the problem is pure Neumann.
    pub fn block_matrix(&self) -> CsrMatrix {
        let nf = self.num_faces();
        let nc = self.num_cells();
        if !self.mean_constraint {
            return CsrMatrix::saddle(&self.mass, &self.div, None);
        }
        let mut t = TripletBuilder::new(nf + nc + 1, nf + nc + 1);
        for i in 0..nf {
            for (j, v) in self.mass.row(i) {
                t.push(i, j, v);
            }
        }
        for i in 0..nc {
            for (j, v) in self.div.row(i) {
                t.push(nf + i, j, v);
                t.push(j, nf + i, v);
            }
            t.push(nf + i, nf + nc, self.area[i]);
            t.push(nf + nc, nf + i, self.area[i]);
        }
        t.build()
    }

    pub fn block_rhs(&self) -> Vec<f64> {
        let mut r = self.rhs_v.clone();
        r.extend_from_slice(&self.rhs_p);
        if self.mean_constraint {
            r.push(0.0);
        }
        r
    }

    /// Local dofs of cell `ci` from a global face vector.
    pub fn gather(&self, ci: usize, v: &[f64]) -> Vec<f64> {
        self.cell_faces[ci].iter().map(|&f| v[f]).collect()
    }

    /// `(DIV^k v)_c` for every cell from per-cell local dofs.
    pub fn divergence(&self, local_v: &[Vec<f64>]) -> Vec<f64> {
        self.local
            .iter()
            .zip(local_v)
            .map(|(ops, v)| ops.apply_weighted_divergence(v))
            .collect()
    }

    /// Discrete divergence balance for per-cell local dofs.
    pub fn conservation(&self, local_v: &[Vec<f64>]) -> Conservation {
        let mut divergence_sum = 0.0;
        let mut boundary_flux = 0.0;
        let mut scale = 0.0;
        for (ci, (ops, v)) in self.local.iter().zip(local_v).enumerate() {
            for (i, &fi) in self.cell_faces[ci].iter().enumerate() {
                let flux = ops.div_row[i] * v[i];
                divergence_sum += flux;
                scale += flux.abs();
                if self.face_kind[fi] != FaceKind::Interior {
                    boundary_flux += flux;
                }
            }
        }
        let forcing_sum: f64 = self
            .area
            .iter()
            .zip(&self.cell_forcing)
            .map(|(a, f)| a * f)
            .sum();
        scale += self
            .area
            .iter()
            .zip(&self.cell_forcing)
            .map(|(a, f)| (a * f).abs())
            .sum::<f64>();
        Conservation {
            divergence_sum,
            forcing_sum,
            boundary_flux,
            scale: scale.max(f64::MIN_POSITIVE),
        }
    }
}

/// Global balance of a discrete gradient field. With the physical flux
/// `q = -k v`, `boundary_flux` is minus the net outflow of `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conservation {
    /// `sum_c |c| (DIV^k v)_c`
    pub divergence_sum: f64,
    /// `sum_c |c| f(x_c)`
    pub forcing_sum: f64,
    /// `sum over boundary faces of sigma |f| k^c_f v_f`
    pub boundary_flux: f64,
    /// Sum of absolute contributions, used to scale the residuals.
    pub scale: f64,
}

impl Conservation {
    /// Interior faces cancel: `sum |c| DIV_c - boundary flux`.
    pub fn divergence_theorem_residual(&self) -> f64 {
        (self.divergence_sum - self.boundary_flux).abs() / self.scale
    }

    /// Mass balance: `sum |c| DIV_c + sum |c| f_c`.
    pub fn balance_residual(&self) -> f64 {
        (self.divergence_sum + self.forcing_sum).abs() / self.scale
    }

    pub fn max_residual(&self) -> f64 {
        self.divergence_theorem_residual()
            .max(self.balance_residual())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::field::{face_values, CellRule, CoefficientField, FaceStrategy};
    use crate::linalg::{dense_solve, DenseMatrix};
    use crate::mesh::generate_polygonal_mesh;

    fn data(f: &str, g: &str, q: &str) -> ExpressionData {
        ExpressionData {
            forcing: parse(f).unwrap(),
            dirichlet: parse(g).unwrap(),
            neumann: parse(q).unwrap(),
        }
    }

    fn unit_square() -> Mesh {
        Mesh::build(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    fn system(mesh: &Mesh, k: &str, d: &ExpressionData, bc: &BoundarySpec) -> SaddleSystem {
        let k = CoefficientField::Scalar(parse(k).unwrap());
        let st = face_values(&k, mesh, FaceStrategy::Trace, None, CellRule::Centroid).unwrap();
        assemble(mesh, &st, d, bc, &MfdOptions::default()).unwrap()
    }

    fn dense_solution(sys: &SaddleSystem) -> Vec<f64> {
        let a: DenseMatrix = sys.block_matrix().to_dense();
        dense_solve(&a, &sys.block_rhs()).unwrap()
    }

    #[test]
    fn single_cell_patch_test() {
        let mesh = unit_square();
        let sys = system(&mesh, "1", &data("0", "x", "0"), &BoundarySpec::default());
        assert_eq!(sys.size(), 5);
        let x = dense_solution(&sys);
        assert!((x[4] - 0.5).abs() < 1e-12);
        for (fi, f) in mesh.faces().iter().enumerate() {
            assert!((x[fi] - f.normal[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let mesh = generate_polygonal_mesh(3, 1).unwrap();
        let sys = system(&mesh, "1+x", &data("0", "0", "0"), &BoundarySpec::default());
        assert!(dense_solution(&sys).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn block_matrix_is_exactly_symmetric() {
        let mesh = generate_polygonal_mesh(4, 2).unwrap();
        let bc = BoundarySpec::default().with("left", BcKind::Neumann);
        let sys = system(&mesh, "1+x*y", &data("1", "x", "y"), &bc);
        assert!(sys.block_matrix().is_symmetric());
        assert!(sys.mass.is_symmetric());
    }

    #[test]
    fn neumann_face_is_essential() {
        let mesh = unit_square().with_unit_square_labels();
        let bc = BoundarySpec::default().with("right", BcKind::Neumann);
        let sys = system(&mesh, "2", &data("0", "x", "3"), &bc);
        let fi = (0..4).find(|&f| mesh.face_label(f) == Some("right")).unwrap();
        // v_f = sigma q_N / k^c_f with sigma = +1 on the right face
        assert_eq!(sys.essential[fi], Some(1.5));
        let x = dense_solution(&sys);
        assert_eq!(x[fi], 1.5);
    }

    #[test]
    fn unlabeled_boundary_is_rejected() {
        let mesh = unit_square();
        let k = CoefficientField::constant(1.0);
        let st = face_values(&k, &mesh, FaceStrategy::Trace, None, CellRule::Centroid).unwrap();
        let bc = BoundarySpec {
            default: None,
            labels: BTreeMap::new(),
        };
        let err = assemble(&mesh, &st, &data("0", "0", "0"), &bc, &MfdOptions::default());
        assert!(matches!(err, Err(MfdError::UnlabeledBoundary { .. })));
    }

    #[test]
    fn pure_neumann_uses_mean_constraint() {
        let mesh = generate_polygonal_mesh(3, 4).unwrap();
        // homogeneous data
        let d = data("0", "0", "0");
        let bc = BoundarySpec::all(BcKind::Neumann);
        let k = CoefficientField::constant(1.0);
        let st = face_values(&k, &mesh, FaceStrategy::Trace, None, CellRule::Centroid).unwrap();
        let sys = assemble(&mesh, &st, &d, &bc, &MfdOptions::default()).unwrap();
        assert!(sys.mean_constraint);
        assert_eq!(sys.size(), mesh.num_faces() + mesh.num_cells() + 1);
        assert!(sys.block_matrix().is_symmetric());
        let x = dense_solution(&sys);
        assert!(x.iter().all(|v| v.abs() < 1e-12));

        let bad = data("1", "0", "0");
        let err = assemble(&mesh, &st, &bad, &bc, &MfdOptions::default());
        assert!(matches!(err, Err(MfdError::IncompatibleNeumann { .. })));
    }
}
