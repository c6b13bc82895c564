use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{cg, dot, CsrMatrix, DenseMatrix, LinalgError, Lu, TripletBuilder};
use crate::mesh::Mesh;
use crate::mfd::{FaceKind, ProblemData, SaddleSystem};

use super::{Solution, SolverError, SolverOptions};

/// Condensed cell problem `A_c u_c = r_c + E_c^T lambda`, where `u_c` holds
/// the non-essential face values of the cell followed by `p_c`.
#[derive(Clone, Debug)]
struct CellBlock {
    /// Local face positions of the unknown face values.
    free: Vec<usize>,
    lu: Lu,
    rhs: Vec<f64>,
    /// `(position in u_c, b_f, multiplier index)` for interior faces.
    couplings: Vec<(usize, f64, usize)>,
}

/// Interface system `S lambda = g` for the face pressures on interior faces.
/// `S = sum_c E_c A_c^{-1} E_c^T` is symmetric positive definite whenever at
/// least one boundary face carries Dirichlet data.
#[derive(Clone, Debug)]
pub struct HybridSystem {
    pub schur: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Multiplier index of every interior face.
    pub multiplier_of: Vec<Option<usize>>,
    blocks: Vec<CellBlock>,
    dirichlet: Vec<Option<f64>>,
    essential: Vec<Option<f64>>,
    cell_faces: Vec<Vec<usize>>,
    min_gamma: (usize, f64),
}

impl HybridSystem {
    /// Condenses the local operators of an assembled system.
    pub fn build(mesh: &Mesh, system: &SaddleSystem, data: &dyn ProblemData) -> Result<HybridSystem, SolverError> {
        if system.mean_constraint {
            return Err(SolverError::Unsupported(
                "hybridization needs at least one Dirichlet boundary face".into(),
            ));
        }
        let nf = system.num_faces();
        let mut multiplier_of = vec![None; nf];
        let mut nl = 0;
        for fi in 0..nf {
            if system.face_kind[fi] == FaceKind::Interior {
                multiplier_of[fi] = Some(nl);
                nl += 1;
            }
        }
        let mut dirichlet = vec![None; nf];
        for fi in 0..nf {
            if system.face_kind[fi] == FaceKind::Dirichlet {
                dirichlet[fi] = Some(data.dirichlet(mesh.face(fi).midpoint)?);
            }
        }

        let mut schur = TripletBuilder::new(nl, nl);
        let mut rhs = vec![0.0; nl];
        let mut blocks = Vec::with_capacity(system.num_cells());
        let mut min_gamma = (0, f64::INFINITY);
        for (ci, ops) in system.local.iter().enumerate() {
            if ops.gamma < min_gamma.1 {
                min_gamma = (ci, ops.gamma);
            }
            let faces = &system.cell_faces[ci];
            let free: Vec<usize> = (0..faces.len())
                .filter(|&i| system.essential[faces[i]].is_none())
                .collect();
            let n = free.len() + 1;
            let mut a = DenseMatrix::zeros(n, n);
            let mut r = vec![0.0; n];
            r[n - 1] = -system.area[ci] * system.cell_forcing[ci];
            for (k, &i) in free.iter().enumerate() {
                for (l, &j) in free.iter().enumerate() {
                    a[(k, l)] = ops.mass[(i, j)];
                }
                a[(k, n - 1)] = ops.div_row[i];
                a[(n - 1, k)] = ops.div_row[i];
                if let Some(g) = dirichlet[faces[i]] {
                    r[k] += ops.div_row[i] * g;
                }
            }
            for (j, &fj) in faces.iter().enumerate() {
                if let Some(val) = system.essential[fj] {
                    for (k, &i) in free.iter().enumerate() {
                        r[k] -= ops.mass[(i, j)] * val;
                    }
                    r[n - 1] -= ops.div_row[j] * val;
                }
            }
            let lu = Lu::factor(&a)?;
            let couplings: Vec<(usize, f64, usize)> = free
                .iter()
                .enumerate()
                .filter_map(|(k, &i)| multiplier_of[faces[i]].map(|m| (k, ops.div_row[i], m)))
                .collect();

            let y = lu.solve(&r);
            let mut local = DenseMatrix::zeros(couplings.len(), couplings.len());
            for (b, &(kb, bb, _)) in couplings.iter().enumerate() {
                let mut e = vec![0.0; n];
                e[kb] = bb;
                let w = lu.solve(&e);
                for (a, &(ka, ba, _)) in couplings.iter().enumerate() {
                    local[(a, b)] = ba * w[ka];
                }
            }
            for (a, &(ka, ba, ma)) in couplings.iter().enumerate() {
                rhs[ma] -= ba * y[ka];
                for (b, &(_, _, mb)) in couplings.iter().enumerate() {
                    schur.push(ma, mb, 0.5 * (local[(a, b)] + local[(b, a)]));
                }
            }
            blocks.push(CellBlock {
                free,
                lu,
                rhs: r,
                couplings,
            });
        }
        Ok(HybridSystem {
            schur: schur.build(),
            rhs,
            multiplier_of,
            blocks,
            dirichlet,
            essential: system.essential.clone(),
            cell_faces: system.cell_faces.clone(),
            min_gamma,
        })
    }

    pub fn num_multipliers(&self) -> usize {
        self.rhs.len()
    }

    /// Solves the interface system by PCG and recovers every cell unknown.
    pub fn solve(&self, options: &SolverOptions) -> Result<Solution, SolverError> {
        let (lambda, report) = match cg(&self.schur, &self.rhs, options.tol, options.maxit, options.preconditioner) {
            Ok(out) => out,
            Err(LinalgError::Breakdown { iteration, curvature }) => {
                let min_diag = self.schur.diagonal().into_iter().fold(f64::INFINITY, f64::min);
                return Err(SolverError::Positivity {
                    iteration,
                    curvature,
                    min_gamma_cell: self.min_gamma.0,
                    min_gamma: self.min_gamma.1,
                    min_diag,
                });
            }
            Err(e) => return Err(e.into()),
        };
        if !report.converged {
            return Err(SolverError::NotConverged {
                path: "hybrid PCG",
                iterations: report.iterations,
                residual: report.relative_residual,
            });
        }
        let nf = self.essential.len();
        let mut face_sum = vec![0.0; nf];
        let mut face_count = vec![0u32; nf];
        let mut pressure = Vec::with_capacity(self.blocks.len());
        let mut local = Vec::with_capacity(self.blocks.len());
        for (ci, block) in self.blocks.iter().enumerate() {
            let mut r = block.rhs.clone();
            for &(k, b, m) in &block.couplings {
                r[k] += b * lambda[m];
            }
            let u = block.lu.solve(&r);
            let faces = &self.cell_faces[ci];
            let mut v: Vec<f64> = faces.iter().map(|&f| self.essential[f].unwrap_or(0.0)).collect();
            for (k, &i) in block.free.iter().enumerate() {
                v[i] = u[k];
            }
            for (i, &f) in faces.iter().enumerate() {
                face_sum[f] += v[i];
                face_count[f] += 1;
            }
            pressure.push(u[block.free.len()]);
            local.push(v);
        }
        let face = face_sum
            .iter()
            .zip(&face_count)
            .map(|(s, &c)| s / f64::from(c))
            .collect();
        let multipliers = (0..nf)
            .map(|f| self.multiplier_of[f].map(|m| lambda[m]).or(self.dirichlet[f]))
            .collect();
        Ok(Solution {
            pressure,
            face,
            local,
            multipliers: Some(multipliers),
            report,
        })
    }

    /// Smallest Rayleigh quotient `x^T S x / x^T x` over random probes.
    pub fn min_rayleigh_probe(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.num_multipliers();
        let mut min = f64::INFINITY;
        for _ in 0..probes {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xx = dot(&x, &x);
            if xx > 0.0 {
                min = min.min(dot(&x, &self.schur.matvec(&x)) / xx);
            }
        }
        min
    }
}

/// Hybridized solve of an assembled system.
pub fn solve_hybrid(
    mesh: &Mesh,
    system: &SaddleSystem,
    data: &dyn ProblemData,
    options: &SolverOptions,
) -> Result<Solution, SolverError> {
    HybridSystem::build(mesh, system, data)?.solve(options)
}
