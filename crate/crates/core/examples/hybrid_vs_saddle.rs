//! Solves one problem by hybridization (cell-local elimination, CG on the
//! face multipliers) and by MINRES on the full saddle system, then compares.

use mfdstag::field::{CellRule, FaceStrategy};
use mfdstag::linalg::norm_inf;
use mfdstag::mesh::generate_perturbed_quad_mesh;
use mfdstag::mfd::{BoundarySpec, MfdOptions};
use mfdstag::solver::{solve_saddle, Discretization, HybridSystem, SolverOptions};
use mfdstag::verify::ManufacturedProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ManufacturedProblem::parse("sin(pi*x)*sin(pi*y)", "1 + x*y")?;
    let k = problem.coefficient_field();
    let mesh = generate_perturbed_quad_mesh(16, 0.3, 1)?;
    let bc = BoundarySpec::default();
    let solver = SolverOptions {
        tol: 1e-13,
        ..SolverOptions::default()
    };
    let d = Discretization {
        mesh: &mesh,
        coefficient: &k,
        data: &problem,
        bc: &bc,
        cell_rule: CellRule::Centroid,
        mfd: MfdOptions::default(),
    };
    for strategy in [FaceStrategy::Trace, FaceStrategy::Upwind] {
        let system = d.assemble(&d.staggered(strategy, &solver)?)?;
        let hybrid = HybridSystem::build(&mesh, &system, &problem)?;
        println!(
            "{}: {} multipliers, Schur symmetric {}, min probe x^T S x / x^T x = {:.3e}",
            strategy.name(),
            hybrid.num_multipliers(),
            hybrid.schur.is_symmetric(),
            hybrid.min_rayleigh_probe(100, 7)
        );
        let h = hybrid.solve(&solver)?;
        let s = solve_saddle(&system, &solver)?;
        let dp: Vec<f64> = h.pressure.iter().zip(&s.pressure).map(|(a, b)| a - b).collect();
        let dv: Vec<f64> = h
            .local
            .iter()
            .zip(&s.local)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
            .collect();
        println!(
            "  CG {} iterations, MINRES {} iterations, max |dp| = {:.2e}, max |dv| = {:.2e}",
            h.report.iterations,
            s.report.iterations,
            norm_inf(&dp),
            norm_inf(&dv)
        );
    }
    Ok(())
}
