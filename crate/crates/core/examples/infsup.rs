//! Discrete inf-sup constant on refined meshes. A value bounded away from
//! zero under refinement indicates a stable pairing.

use mfdstag::field::{face_values, CellRule, CoefficientField, FaceStrategy};
use mfdstag::mesh::MeshFamily;
use mfdstag::mfd::{assemble, BoundarySpec, ExpressionData, MfdOptions};
use mfdstag::solver::{infsup_estimate, PressureMetric};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = ExpressionData {
        forcing: "0".parse()?,
        dirichlet: "0".parse()?,
        neumann: "0".parse()?,
    };
    let fields = [("k = 1", CoefficientField::constant(1.0)), ("k = 1 + x*y", CoefficientField::Scalar("1 + x*y".parse()?))];
    for family in [MeshFamily::Quad, MeshFamily::Polygonal { seed: 1 }] {
        for (name, k) in &fields {
            print!("{:<10} {:<12}", family.name(), name);
            for n in [4, 8, 16] {
                let mesh = family.build(n)?;
                let coef = face_values(k, &mesh, FaceStrategy::Trace, None, CellRule::Centroid)?;
                let system = assemble(&mesh, &coef, &data, &BoundarySpec::default(), &MfdOptions::default())?;
                let b = infsup_estimate(&system, PressureMetric::Weighted)?;
                print!("  beta({n:>2}) = {:.4}", b.beta);
            }
            println!();
        }
    }
    Ok(())
}
