//! A problem given by raw data instead of an exact solution: unit source,
//! a coefficient jump, zero pressure on top and bottom and no flux on the
//! left and right sides. Reports the discrete mass balance.

use mfdstag::expr::parse;
use mfdstag::field::{CellRule, CoefficientField, FaceStrategy, Piece};
use mfdstag::mesh::generate_perturbed_quad_mesh;
use mfdstag::mfd::{BcKind, BoundarySpec, ExpressionData, MfdOptions};
use mfdstag::solver::{face_fluxes, solve_hybrid, Discretization, SolverOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_perturbed_quad_mesh(16, 0.2, 3)?;
    let k = CoefficientField::Piecewise(vec![
        Piece {
            region: Some(parse("0.5 - y")?),
            value: parse("1")?,
        },
        Piece {
            region: None,
            value: parse("10")?,
        },
    ]);
    let data = ExpressionData {
        forcing: parse("1")?,
        dirichlet: parse("0")?,
        neumann: parse("0")?,
    };
    let bc = BoundarySpec::all(BcKind::Dirichlet)
        .with("left", BcKind::Neumann)
        .with("right", BcKind::Neumann);
    let solver = SolverOptions::default();
    let d = Discretization {
        mesh: &mesh,
        coefficient: &k,
        data: &data,
        bc: &bc,
        cell_rule: CellRule::Centroid,
        mfd: MfdOptions::default(),
    };
    let coef = d.staggered(FaceStrategy::Harmonic, &solver)?;
    let system = d.assemble(&coef)?;
    let solution = solve_hybrid(&mesh, &system, &data, &solver)?;

    let balance = system.conservation(&solution.local);
    println!("CG iterations {}", solution.report.iterations);
    println!("source integral      {:.6}", balance.forcing_sum);
    println!("net boundary outflow {:.6}", -balance.boundary_flux);
    println!("relative imbalance   {:.2e}", balance.max_residual());

    let q = face_fluxes(&mesh, &coef, &solution);
    let (mut top, mut bottom) = (0.0, 0.0);
    for (fi, f) in mesh.faces().iter().enumerate() {
        match mesh.face_label(fi) {
            Some("top") => top += q[fi] * f.normal[1] * f.length,
            Some("bottom") => bottom -= q[fi] * f.normal[1] * f.length,
            _ => {}
        }
    }
    println!("outflow through top {top:.4}, bottom {bottom:.4} (the stiffer half drains more)");
    let pmax = solution.pressure.iter().cloned().fold(f64::MIN, f64::max);
    println!("max pressure {pmax:.5}");
    Ok(())
}
