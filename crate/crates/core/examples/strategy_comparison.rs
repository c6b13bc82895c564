//! Face strategies on a coefficient jump of 1 : 100 aligned with mesh faces.
//! The exact pressure is piecewise linear with continuous flux.

use mfdstag::field::FaceStrategy;
use mfdstag::mesh::MeshFamily;
use mfdstag::verify::{compare_strategies, ManufacturedProblem, StudyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ManufacturedProblem::interface(1.0, 100.0)?;
    let mut base = StudyOptions::new(MeshFamily::Quad, FaceStrategy::Trace, vec![8, 16, 32, 64]);
    base.solver.tol = 1e-13;
    let families = [
        MeshFamily::Quad,
        MeshFamily::PerturbedQuad {
            xi: 0.3,
            seed: 1,
            pin_x: Some(0.5),
        },
    ];
    let comparison = compare_strategies(&problem, &families, &FaceStrategy::ALL, &base)?;
    print!("{}", comparison.table());
    Ok(())
}
