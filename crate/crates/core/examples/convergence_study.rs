//! Mesh refinement study for a smooth manufactured solution, printed as CSV.

use mfdstag::field::FaceStrategy;
use mfdstag::mesh::MeshFamily;
use mfdstag::verify::{convergence_study, ManufacturedProblem, StudyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ManufacturedProblem::parse("sin(pi*x)*sin(pi*y)", "1 + x*y")?;
    let mut options = StudyOptions::new(MeshFamily::Polygonal { seed: 1 }, FaceStrategy::Upwind, vec![8, 16, 32]);
    options.probes = 20;
    let report = convergence_study(&problem, &options)?;
    print!("{}", report.to_csv());
    for level in &report.levels {
        println!(
            "n = {:>3}: conservation {:.1e}, symmetric {}, min probe {:.3e}",
            level.level,
            level.conservation,
            level.symmetric,
            level.min_probe.unwrap_or(f64::NAN)
        );
    }
    println!(
        "fitted rates: p {:.3}, v {:.3}",
        report.rate_p.unwrap_or(f64::NAN),
        report.rate_v.unwrap_or(f64::NAN)
    );
    Ok(())
}
