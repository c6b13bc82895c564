use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::expr::Expr;
use crate::field::{CoefficientField, Piece};
use crate::mesh::{Mesh, MeshFamily};
use crate::mfd::{Conservation, ExpressionData, ProblemData, SaddleSystem};
use crate::solver::{infsup_estimate, solve_hybrid, solve_saddle, Discretization, InfSup, Solution};
use crate::verify::{
    compare_strategies, compute_errors, convergence_study, ErrorNorms, ManufacturedProblem, SolvePath, StudyOptions,
    VerifyError,
};

use super::config::{CoefficientConfig, ExprText, FamilyKind, MeshConfig, ProblemConfig, RunConfig};
use super::{Cli, CliError, Command};

/// Scaled conservation residual accepted for a converged solve.
const CONSERVATION_TOL: f64 = 1e-10;

/// Result of a successful command.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// Human-readable summary for stdout.
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// A problem from the configuration: manufactured (exact solution known)
/// or explicit data.
pub enum Problem {
    Manufactured(ManufacturedProblem),
    Explicit {
        coefficient: CoefficientField,
        data: ExpressionData,
    },
}

impl Problem {
    pub fn coefficient_field(&self) -> CoefficientField {
        match self {
            Problem::Manufactured(p) => p.coefficient_field(),
            Problem::Explicit { coefficient, .. } => coefficient.clone(),
        }
    }

    pub fn data(&self) -> &dyn ProblemData {
        match self {
            Problem::Manufactured(p) => p,
            Problem::Explicit { data, .. } => data,
        }
    }

    pub fn exact(&self) -> Option<&ManufacturedProblem> {
        match self {
            Problem::Manufactured(p) => Some(p),
            Problem::Explicit { .. } => None,
        }
    }
}

fn expr(s: &ExprText) -> Result<Expr, CliError> {
    s.as_str()
        .parse::<Expr>().map_err(|e| CliError::Verify(VerifyError::Parse(e)))
}

pub fn build_problem(config: &ProblemConfig) -> Result<Problem, CliError> {
    Ok(match config {
        ProblemConfig::Manufactured { pressure, coefficient } => {
            Problem::Manufactured(ManufacturedProblem::new(expr(pressure)?, expr(coefficient)?)?)
        }
        ProblemConfig::Piecewise { pieces } => {
            let pieces = pieces
                .iter()
                .map(|p| {
                    let region = p.region.as_ref().map(expr).transpose()?;
                    Ok((region, expr(&p.pressure)?, expr(&p.coefficient)?))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Problem::Manufactured(ManufacturedProblem::piecewise(pieces)?)
        }
        ProblemConfig::Interface { k1, k2 } => Problem::Manufactured(ManufacturedProblem::interface(*k1, *k2)?),
        ProblemConfig::Explicit {
            coefficient,
            forcing,
            dirichlet,
            neumann,
        } => {
            let coefficient = match coefficient {
                CoefficientConfig::Expression(e) => CoefficientField::Scalar(expr(e)?),
                CoefficientConfig::Pieces(pieces) => CoefficientField::Piecewise(
                    pieces
                        .iter()
                        .map(|p| {
                            Ok(Piece {
                                region: p.region.as_ref().map(expr).transpose()?,
                                value: expr(&p.value)?,
                            })
                        })
                        .collect::<Result<_, CliError>>()?,
                ),
                CoefficientConfig::Tensor { k11, k12, k22 } => CoefficientField::Tensor {
                    k11: expr(k11)?,
                    k12: expr(k12)?,
                    k22: expr(k22)?,
                },
            };
            Problem::Explicit {
                coefficient,
                data: ExpressionData {
                    forcing: expr(forcing)?,
                    dirichlet: expr(dirichlet)?,
                    neumann: expr(neumann)?,
                },
            }
        }
    })
}

fn family(config: &MeshConfig, kind: FamilyKind) -> Option<MeshFamily> {
    match kind {
        FamilyKind::Quad => Some(MeshFamily::Quad),
        FamilyKind::PerturbedQuad => Some(MeshFamily::PerturbedQuad {
            xi: config.xi,
            seed: config.seed,
            pin_x: config.pin_x,
        }),
        FamilyKind::Polygonal => Some(MeshFamily::Polygonal { seed: config.seed }),
        FamilyKind::File => None,
    }
}

fn study_family(config: &MeshConfig, kind: FamilyKind) -> Result<MeshFamily, CliError> {
    family(config, kind).ok_or_else(|| CliError::Config("studies need a generated mesh family, not `file`".into()))
}

/// Mesh with `n` cells per side, or the configured mesh file.
pub fn build_mesh(config: &MeshConfig, n: usize) -> Result<Mesh, CliError> {
    match family(config, config.family) {
        Some(f) => Ok(f.build(n)?),
        None => {
            let path = config
                .path
                .as_ref()
                .ok_or_else(|| CliError::Config("mesh.family = \"file\" needs mesh.path".into()))?;
            Ok(Mesh::load(path)?)
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let io = |path: &Path, e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
    files.push(path);
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn check_threads() -> Result<(), CliError> {
    match std::env::var("MFDSTAG_THREADS") {
        Err(_) => Ok(()),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(()),
            _ => Err(CliError::Config(format!(
                "MFDSTAG_THREADS must be a positive integer, got `{v}`"
            ))),
        },
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    check_threads()?;
    let mut config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if cli.print_config {
        return Ok(Outcome {
            summary: config.to_toml(),
            files: Vec::new(),
        });
    }
    match cli.command {
        Command::Solve => solve(&config),
        Command::Converge => converge(&config),
        Command::Compare => compare(&config),
        Command::Infsup => infsup(&config),
        Command::MeshInfo => mesh_info(&config),
    }
}

#[derive(Serialize)]
struct MeshSummary {
    family: FamilyKind,
    n: usize,
    n_cells: usize,
    n_faces: usize,
    n_vertices: usize,
    h: f64,
}

impl MeshSummary {
    fn new(config: &RunConfig, mesh: &Mesh) -> MeshSummary {
        MeshSummary {
            family: config.mesh.family,
            n: config.mesh.n,
            n_cells: mesh.num_cells(),
            n_faces: mesh.num_faces(),
            n_vertices: mesh.num_vertices(),
            h: mesh.h(),
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    mesh: MeshSummary,
    strategy: &'static str,
    path: SolvePath,
    iterations: usize,
    relative_residual: f64,
    symmetric: bool,
    conservation: Conservation,
    divergence_theorem_residual: f64,
    balance_residual: f64,
    errors: Option<ErrorNorms>,
}

struct Solved {
    mesh: Mesh,
    system: SaddleSystem,
    solution: Solution,
}

fn discretize_and_solve(config: &RunConfig, problem: &Problem, n: usize) -> Result<Solved, CliError> {
    let mesh = build_mesh(&config.mesh, n)?;
    let coefficient = problem.coefficient_field();
    coefficient.check_positive(&mesh)?;
    let d = Discretization {
        mesh: &mesh,
        coefficient: &coefficient,
        data: problem.data(),
        bc: &config.boundary,
        cell_rule: config.discretization.cell_rule,
        mfd: config.mfd,
    };
    let options = config.solver.options();
    let staggered = d.staggered(config.discretization.strategy, &options)?;
    let system = d.assemble(&staggered)?;
    let solution = match config.solver.path {
        SolvePath::Hybrid => solve_hybrid(&mesh, &system, problem.data(), &options)?,
        SolvePath::Saddle => solve_saddle(&system, &options)?,
    };
    Ok(Solved { mesh, system, solution })
}

fn solve(config: &RunConfig) -> Result<Outcome, CliError> {
    let problem = build_problem(&config.problem)?;
    let Solved { mesh, system, solution } = discretize_and_solve(config, &problem, config.mesh.n)?;
    let errors = problem
        .exact()
        .map(|p| compute_errors(&mesh, &system, &solution, p, config.discretization.cell_rule))
        .transpose()?;
    let conservation = system.conservation(&solution.local);
    let report = SolveReport {
        mesh: MeshSummary::new(config, &mesh),
        strategy: config.discretization.strategy.name(),
        path: config.solver.path,
        iterations: solution.report.iterations,
        relative_residual: solution.report.relative_residual,
        symmetric: system.block_matrix().is_symmetric(),
        conservation,
        divergence_theorem_residual: conservation.divergence_theorem_residual(),
        balance_residual: conservation.balance_residual(),
        errors,
    };

    let mut csv = String::from("cell,x,y,p");
    if problem.exact().is_some() {
        csv.push_str(",p_exact");
    }
    csv.push('\n');
    for (ci, c) in mesh.cells().iter().enumerate() {
        write!(csv, "{},{:.16e},{:.16e},{:.16e}", ci, c.centroid[0], c.centroid[1], solution.pressure[ci])
            .expect("write to string");
        if let Some(p) = problem.exact() {
            write!(csv, ",{:.16e}", p.pressure(c.centroid)?).expect("write to string");
        }
        csv.push('\n');
    }
    let mut files = Vec::new();
    write(&config.output.dir, "solution.json", &json(&report), &mut files)?;
    write(&config.output.dir, "solution.csv", &csv, &mut files)?;

    let mut summary = format!(
        "cells {} faces {} h {:.6e}\nstrategy {} path {:?} iterations {} residual {:.3e}\nconservation {:.3e}\n",
        mesh.num_cells(),
        mesh.num_faces(),
        mesh.h(),
        report.strategy,
        config.solver.path,
        report.iterations,
        report.relative_residual,
        conservation.max_residual()
    );
    if let Some(e) = errors {
        writeln!(summary, "e_p {:.6e} e_v {:.6e} max_p {:.6e}", e.e_p, e.e_v, e.max_p).expect("write to string");
    }
    if !report.symmetric {
        return Err(CliError::Invariant("assembled block matrix is not symmetric".into()));
    }
    let tol = CONSERVATION_TOL.max(100.0 * config.solver.tol);
    if conservation.max_residual() > tol {
        return Err(CliError::Invariant(format!(
            "conservation residual {:.3e} exceeds {:.1e}",
            conservation.max_residual(),
            tol
        )));
    }
    Ok(Outcome { summary, files })
}

fn study_options(config: &RunConfig, family: MeshFamily) -> StudyOptions {
    StudyOptions {
        family,
        strategy: config.discretization.strategy,
        levels: config.mesh.levels.clone(),
        bc: config.boundary.clone(),
        cell_rule: config.discretization.cell_rule,
        mfd: config.mfd,
        solver: config.solver.options(),
        path: config.solver.path,
        probes: config.converge.probes,
    }
}

fn manufactured(config: &RunConfig) -> Result<ManufacturedProblem, CliError> {
    match build_problem(&config.problem)? {
        Problem::Manufactured(p) => Ok(p),
        Problem::Explicit { .. } => Err(CliError::Config(
            "convergence studies need a problem with a known exact solution".into(),
        )),
    }
}

fn rate(r: Option<f64>) -> String {
    r.map_or_else(|| "exact".to_string(), |v| format!("{v:.4}"))
}

fn converge(config: &RunConfig) -> Result<Outcome, CliError> {
    let problem = manufactured(config)?;
    let family = study_family(&config.mesh, config.mesh.family)?;
    let report = convergence_study(&problem, &study_options(config, family))?;
    let mut files = Vec::new();
    write(&config.output.dir, "convergence.csv", &report.to_csv(), &mut files)?;
    write(&config.output.dir, "convergence.json", &json(&report), &mut files)?;
    let mut summary = report.to_csv();
    writeln!(
        summary,
        "rate_p {} rate_v {} ({} / {})",
        rate(report.rate_p),
        rate(report.rate_v),
        report.family,
        report.strategy
    )
    .expect("write to string");
    if !report.rates_at_least(config.converge.rate_p_floor, config.converge.rate_v_floor) {
        return Err(CliError::RateFloor(format!(
            "rate_p {} rate_v {} below floors {} / {}",
            rate(report.rate_p),
            rate(report.rate_v),
            config.converge.rate_p_floor,
            config.converge.rate_v_floor
        )));
    }
    Ok(Outcome { summary, files })
}

fn compare(config: &RunConfig) -> Result<Outcome, CliError> {
    let problem = manufactured(config)?;
    let families = config
        .compare
        .families
        .iter()
        .map(|&k| study_family(&config.mesh, k))
        .collect::<Result<Vec<_>, _>>()?;
    let base = study_options(config, MeshFamily::Quad);
    let comparison = compare_strategies(&problem, &families, &config.compare.strategies, &base)?;
    let mut files = Vec::new();
    write(&config.output.dir, "comparison.csv", &comparison.to_csv(), &mut files)?;
    write(&config.output.dir, "comparison.json", &json(&comparison), &mut files)?;
    Ok(Outcome {
        summary: comparison.table(),
        files,
    })
}

#[derive(Serialize)]
struct InfSupLevel {
    level: usize,
    h: f64,
    n_cells: usize,
    #[serde(flatten)]
    estimate: InfSup,
}

fn infsup(config: &RunConfig) -> Result<Outcome, CliError> {
    let problem = build_problem(&config.problem)?;
    let coefficient = problem.coefficient_field();
    let options = config.solver.options();
    let levels: Vec<usize> = match config.mesh.family {
        FamilyKind::File => vec![0],
        _ => config.infsup.levels.clone(),
    };
    if levels.is_empty() {
        return Err(CliError::Config("infsup.levels is empty".into()));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for n in levels {
        let mesh = build_mesh(&config.mesh, n)?;
        let d = Discretization {
            mesh: &mesh,
            coefficient: &coefficient,
            data: problem.data(),
            bc: &config.boundary,
            cell_rule: config.discretization.cell_rule,
            mfd: config.mfd,
        };
        let system = d.assemble(&d.staggered(config.discretization.strategy, &options)?)?;
        rows.push(InfSupLevel {
            level: n,
            h: mesh.h(),
            n_cells: mesh.num_cells(),
            estimate: infsup_estimate(&system, config.infsup.metric)?,
        });
    }
    let mut csv = String::from("level,h,n_cells,beta,lambda_min,iterations\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{:.16e},{},{:.16e},{:.16e},{}",
            r.level, r.h, r.n_cells, r.estimate.beta, r.estimate.lambda_min, r.estimate.iterations
        )
        .expect("write to string");
    }
    let mut files = Vec::new();
    write(&config.output.dir, "infsup.csv", &csv, &mut files)?;
    write(&config.output.dir, "infsup.json", &json(&rows), &mut files)?;
    let first = rows.first().expect("levels").estimate.beta;
    let last = rows.last().expect("levels").estimate.beta;
    if !(first > 0.0 && last >= config.infsup.min_ratio * first) {
        return Err(CliError::Invariant(format!(
            "inf-sup estimate {last:.4e} on the finest level is below {} x {first:.4e}",
            config.infsup.min_ratio
        )));
    }
    Ok(Outcome { summary: csv, files })
}

#[derive(Serialize)]
struct MeshInfo {
    #[serde(flatten)]
    summary: MeshSummary,
    max_faces: usize,
    min_radius_ratio: f64,
    total_area: f64,
    boundary_labels: Vec<String>,
}

fn mesh_info(config: &RunConfig) -> Result<Outcome, CliError> {
    let mesh = build_mesh(&config.mesh, config.mesh.n)?;
    let q = mesh.quality();
    let info = MeshInfo {
        summary: MeshSummary::new(config, &mesh),
        max_faces: q.max_faces,
        min_radius_ratio: q.min_radius_ratio,
        total_area: mesh.cells().iter().map(|c| c.area).sum(),
        boundary_labels: mesh.labels().to_vec(),
    };
    let mut files = Vec::new();
    write(&config.output.dir, "mesh-info.json", &json(&info), &mut files)?;
    if config.output.save_mesh {
        write(&config.output.dir, "mesh.json", &mesh.to_json(), &mut files)?;
    }
    let summary = format!(
        "cells {}\nfaces {}\nvertices {}\nh {:.16e}\nmax_faces {}\nmin_radius_ratio {:.6e}\n",
        mesh.num_cells(),
        mesh.num_faces(),
        mesh.num_vertices(),
        mesh.h(),
        q.max_faces,
        q.min_radius_ratio
    );
    Ok(Outcome { summary, files })
}
