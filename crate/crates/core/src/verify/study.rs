use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::field::{CellRule, FaceStrategy};
use crate::mesh::MeshFamily;
use crate::mfd::{BoundarySpec, MfdOptions};
use crate::solver::{solve_saddle, Discretization, HybridSystem, SolverOptions};

use super::{compute_errors, ManufacturedProblem, VerifyError};

/// Errors at or below this size count as exact reproduction; no rate is
/// fitted through them.
pub const EXACT_ERROR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    #[default]
    Hybrid,
    Saddle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyOptions {
    pub family: MeshFamily,
    pub strategy: FaceStrategy,
    /// Cells per side on each level, increasing.
    pub levels: Vec<usize>,
    pub bc: BoundarySpec,
    pub cell_rule: CellRule,
    pub mfd: MfdOptions,
    pub solver: SolverOptions,
    pub path: SolvePath,
    /// Random `x^T S x` probes of the hybrid interface matrix per level.
    pub probes: usize,
}

impl StudyOptions {
    pub fn new(family: MeshFamily, strategy: FaceStrategy, levels: Vec<usize>) -> StudyOptions {
        StudyOptions {
            family,
            strategy,
            levels,
            bc: BoundarySpec::default(),
            cell_rule: CellRule::Centroid,
            mfd: MfdOptions::default(),
            solver: SolverOptions::default(),
            path: SolvePath::Hybrid,
            probes: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub n_cells: usize,
    pub n_faces: usize,
    pub e_p: f64,
    pub e_v: f64,
    pub e_div: f64,
    pub max_p: f64,
    pub rate_p_so_far: Option<f64>,
    pub rate_v_so_far: Option<f64>,
    pub cg_iters: usize,
    pub relative_residual: f64,
    /// Largest relative conservation residual of the solution.
    pub conservation: f64,
    /// Exact symmetry of the assembled block matrix.
    pub symmetric: bool,
    /// Smallest `x^T S x / x^T x` over the random probes.
    pub min_probe: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub family: String,
    pub strategy: String,
    pub levels: Vec<LevelResult>,
    /// Least-squares slope of `log e_p` against `log h`; `None` when every
    /// error is at round-off level.
    pub rate_p: Option<f64>,
    pub rate_v: Option<f64>,
}

/// Slope of the least-squares line through `(log h, log e)`.
pub fn least_squares_rate(h: &[f64], e: &[f64]) -> f64 {
    assert_eq!(h.len(), e.len());
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn fitted_rate(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() < 2 || e.iter().all(|&v| v <= EXACT_ERROR) {
        return None;
    }
    let keep: Vec<(f64, f64)> = h.iter().zip(e).filter(|(_, &v)| v > 0.0).map(|(a, b)| (*a, *b)).collect();
    if keep.len() < 2 {
        return None;
    }
    let (hs, es): (Vec<f64>, Vec<f64>) = keep.into_iter().unzip();
    Some(least_squares_rate(&hs, &es))
}

impl ConvergenceReport {
    /// `rate >= floor`, where exact reproduction also passes.
    pub fn rates_at_least(&self, floor_p: f64, floor_v: f64) -> bool {
        self.rate_p.map_or(true, |r| r >= floor_p) && self.rate_v.map_or(true, |r| r >= floor_v)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,n_cells,n_faces,e_p,e_v,rate_p_so_far,rate_v_so_far,cg_iters\n");
        let opt = |r: Option<f64>| r.map(|v| format!("{v:.6}")).unwrap_or_default();
        for l in &self.levels {
            writeln!(
                s,
                "{},{:.16e},{},{},{:.16e},{:.16e},{},{},{}",
                l.level,
                l.h,
                l.n_cells,
                l.n_faces,
                l.e_p,
                l.e_v,
                opt(l.rate_p_so_far),
                opt(l.rate_v_so_far),
                l.cg_iters
            )
            .expect("write to string");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Solves `problem` on every level and fits convergence rates.
pub fn convergence_study(problem: &ManufacturedProblem, options: &StudyOptions) -> Result<ConvergenceReport, VerifyError> {
    if options.levels.len() < 3 {
        return Err(VerifyError::Levels(format!(
            "a convergence study needs at least 3 levels, got {}",
            options.levels.len()
        )));
    }
    if options.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VerifyError::Levels(format!(
            "levels must increase strictly, got {:?}",
            options.levels
        )));
    }
    let coefficient = problem.coefficient_field();
    let mut levels: Vec<LevelResult> = Vec::with_capacity(options.levels.len());
    for &n in &options.levels {
        let at_level = |e: VerifyError| VerifyError::Level {
            level: n,
            source: Box::new(e),
        };
        let mesh = options.family.build(n).map_err(|e| at_level(e.into()))?;
        let d = Discretization {
            mesh: &mesh,
            coefficient: &coefficient,
            data: problem,
            bc: &options.bc,
            cell_rule: options.cell_rule,
            mfd: options.mfd,
        };
        let run = || -> Result<LevelResult, VerifyError> {
            let staggered = d.staggered(options.strategy, &options.solver)?;
            let system = d.assemble(&staggered)?;
            let mut min_probe = None;
            let solution = match options.path {
                SolvePath::Hybrid => {
                    let hybrid = HybridSystem::build(&mesh, &system, problem)?;
                    if options.probes > 0 {
                        min_probe = Some(hybrid.min_rayleigh_probe(options.probes, n as u64));
                    }
                    hybrid.solve(&options.solver)?
                }
                SolvePath::Saddle => solve_saddle(&system, &options.solver)?,
            };
            let errors = compute_errors(&mesh, &system, &solution, problem, options.cell_rule)?;
            Ok(LevelResult {
                level: n,
                h: mesh.h(),
                n_cells: mesh.num_cells(),
                n_faces: mesh.num_faces(),
                e_p: errors.e_p,
                e_v: errors.e_v,
                e_div: errors.e_div,
                max_p: errors.max_p,
                rate_p_so_far: None,
                rate_v_so_far: None,
                cg_iters: solution.report.iterations,
                relative_residual: solution.report.relative_residual,
                conservation: system.conservation(&solution.local).max_residual(),
                symmetric: system.block_matrix().is_symmetric(),
                min_probe,
            })
        };
        let mut result = run().map_err(at_level)?;
        let hs: Vec<f64> = levels.iter().map(|l| l.h).chain([result.h]).collect();
        let ep: Vec<f64> = levels.iter().map(|l| l.e_p).chain([result.e_p]).collect();
        let ev: Vec<f64> = levels.iter().map(|l| l.e_v).chain([result.e_v]).collect();
        result.rate_p_so_far = fitted_rate(&hs, &ep);
        result.rate_v_so_far = fitted_rate(&hs, &ev);
        levels.push(result);
    }
    let last = levels.last().expect("at least 3 levels");
    Ok(ConvergenceReport {
        family: options.family.name().to_string(),
        strategy: options.strategy.name().to_string(),
        rate_p: last.rate_p_so_far,
        rate_v: last.rate_v_so_far,
        levels,
    })
}

/// Convergence reports for every family and strategy pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub reports: Vec<ConvergenceReport>,
}

impl Comparison {
    /// One row per (family, strategy, level).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,strategy,level,h,e_p,e_v,rate_p,rate_v,cg_iters\n");
        let opt = |r: Option<f64>| r.map(|v| format!("{v:.6}")).unwrap_or_default();
        for r in &self.reports {
            for l in &r.levels {
                writeln!(
                    s,
                    "{},{},{},{:.16e},{:.16e},{:.16e},{},{},{}",
                    r.family,
                    r.strategy,
                    l.level,
                    l.h,
                    l.e_p,
                    l.e_v,
                    opt(r.rate_p),
                    opt(r.rate_v),
                    l.cg_iters
                )
                .expect("write to string");
            }
        }
        s
    }

    /// Fixed-width table of final errors and fitted rates.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<15} {:<11} {:>12} {:>12} {:>8} {:>8}\n",
            "family", "strategy", "e_p", "e_v", "rate_p", "rate_v"
        );
        let opt = |r: Option<f64>| r.map(|v| format!("{v:.3}")).unwrap_or_else(|| "exact".into());
        for r in &self.reports {
            let last = r.levels.last().expect("levels");
            writeln!(
                s,
                "{:<15} {:<11} {:>12.4e} {:>12.4e} {:>8} {:>8}",
                r.family,
                r.strategy,
                last.e_p,
                last.e_v,
                opt(r.rate_p),
                opt(r.rate_v)
            )
            .expect("write to string");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn compare_strategies(
    problem: &ManufacturedProblem,
    families: &[MeshFamily],
    strategies: &[FaceStrategy],
    base: &StudyOptions,
) -> Result<Comparison, VerifyError> {
    let mut reports = Vec::with_capacity(families.len() * strategies.len());
    for family in families {
        for &strategy in strategies {
            let options = StudyOptions {
                family: family.clone(),
                strategy,
                ..base.clone()
            };
            reports.push(convergence_study(problem, &options)?);
        }
    }
    Ok(Comparison { reports })
}
