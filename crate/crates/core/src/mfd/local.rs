use serde::{Deserialize, Serialize};

use crate::field::StaggeredCoefficient;
use crate::linalg::{DenseMatrix, Lu};
use crate::mesh::Mesh;

use super::MfdError;

/// Which coefficient weights the consistency term of the inner product.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsistencyWeight {
    /// `M_c N_c = kbar_c R_c`: exact and symmetric on every cell.
    #[default]
    Cell,
    /// `R_c` rows carry the face values `k^c_f`; the 2x2 middle factor is
    /// symmetrized, so consistency only holds for side-constant coefficients.
    Face,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfdOptions {
    /// Multiplier on the canonical stabilization scale.
    pub stabilization_scale: f64,
    pub consistency: ConsistencyWeight,
    /// Relative tolerance on the pure-Neumann compatibility condition.
    pub neumann_compatibility_tol: f64,
}

impl Default for MfdOptions {
    fn default() -> Self {
        MfdOptions {
            stabilization_scale: 1.0,
            consistency: ConsistencyWeight::Cell,
            neumann_compatibility_tol: 0.1,
        }
    }
}

/// Local mimetic operators of one cell with `m` faces, in the cell's face order.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalCellOperators {
    pub cell: usize,
    pub area: f64,
    /// `m x 2`, rows `n_f`.
    pub n: DenseMatrix,
    /// `m x 2`, rows `sigma_f |f| (x_f - x_c)`.
    pub r: DenseMatrix,
    /// Inner product matrix, `[u, w]_c = u^T M_c w`.
    pub mass: DenseMatrix,
    /// Weighted divergence row, `b_f = sigma_f |f| k^c_f`.
    pub div_row: Vec<f64>,
    pub gamma: f64,
    /// Cell tensor used by the consistency term.
    pub kbar: [[f64; 2]; 2],
}

fn tensor(k: [[f64; 2]; 2]) -> DenseMatrix {
    DenseMatrix::from_rows(&[k[0].to_vec(), k[1].to_vec()])
}

/// Builds `N_c`, `R_c`, `M_c = R_c Kbar R_c^T / |c| + gamma_c P_c` and the
/// divergence row for cell `ci`, where `P_c` projects onto the orthogonal
/// complement of the range of `N_c` and
/// `gamma_c = scale * trace(R_c Kbar R_c^T) / (|c| m)`.
pub fn build_local(
    mesh: &Mesh,
    ci: usize,
    coef: &StaggeredCoefficient,
    options: &MfdOptions,
) -> Result<LocalCellOperators, MfdError> {
    let c = mesh.cell(ci);
    let m = c.num_faces();
    let area = c.area;
    let kfaces = &coef.kface[ci];
    let kbar = coef.cell_tensor[ci];

    let mut n = DenseMatrix::zeros(m, 2);
    let mut r = DenseMatrix::zeros(m, 2);
    let mut div_row = Vec::with_capacity(m);
    for (i, &fi) in c.faces.iter().enumerate() {
        let f = mesh.face(fi);
        let s = c.signs[i] * f.length;
        for j in 0..2 {
            n[(i, j)] = f.normal[j];
            r[(i, j)] = s * (f.midpoint[j] - c.centroid[j]);
        }
        div_row.push(s * kfaces[i]);
    }

    let ntn = n.transpose().matmul(&n);
    let ntn_lu = Lu::factor(&ntn).map_err(|_| MfdError::DegenerateCell { cell: ci })?;
    // P = I - N (N^T N)^{-1} N^T
    let mut proj = DenseMatrix::identity(m);
    proj.add_scaled(-1.0, &n.matmul(&ntn_lu.solve_matrix(&n.transpose())));

    let consistent = match options.consistency {
        ConsistencyWeight::Cell => {
            let mut m0 = r.matmul(&tensor(kbar)).matmul(&r.transpose());
            m0.scale(1.0 / area);
            m0
        }
        ConsistencyWeight::Face => {
            let mut rk = r.clone();
            for i in 0..m {
                for j in 0..2 {
                    rk[(i, j)] *= kfaces[i];
                }
            }
            let a = n.transpose().matmul(&rk);
            let mut sym = a.clone();
            sym.add_scaled(1.0, &a.transpose());
            sym.scale(0.5);
            let lu = Lu::factor(&sym).map_err(|_| MfdError::DegenerateCell { cell: ci })?;
            rk.matmul(&lu.solve_matrix(&rk.transpose()))
        }
    };
    let rkr = r.matmul(&tensor(kbar)).matmul(&r.transpose());
    let gamma = options.stabilization_scale * rkr.trace() / (area * m as f64);

    let mut mass = consistent;
    mass.add_scaled(gamma, &proj);
    // exact symmetry regardless of rounding in the products above
    for i in 0..m {
        for j in i + 1..m {
            let v = 0.5 * (mass[(i, j)] + mass[(j, i)]);
            mass[(i, j)] = v;
            mass[(j, i)] = v;
        }
    }
    if !mass.is_positive_definite() {
        return Err(MfdError::NotPositiveDefinite { cell: ci });
    }
    Ok(LocalCellOperators {
        cell: ci,
        area,
        n,
        r,
        mass,
        div_row,
        gamma,
        kbar,
    })
}

impl LocalCellOperators {
    pub fn num_faces(&self) -> usize {
        self.div_row.len()
    }

    /// `(DIV^k v)_c = (1/|c|) sum_f b_f v_f`.
    pub fn apply_weighted_divergence(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.num_faces());
        crate::linalg::dot(&self.div_row, v) / self.area
    }

    /// Largest entry of `M_c N_c - R_c Kbar`.
    pub fn consistency_residual(&self) -> f64 {
        let mut d = self.mass.matmul(&self.n);
        d.add_scaled(-1.0, &self.r.matmul(&tensor(self.kbar)));
        d.max_abs()
    }

    /// Largest entry of `N_c^T R_c - |c| I`.
    pub fn geometry_residual(&self) -> f64 {
        let mut d = self.n.transpose().matmul(&self.r);
        d.add_scaled(-self.area, &DenseMatrix::identity(2));
        d.max_abs()
    }
}
