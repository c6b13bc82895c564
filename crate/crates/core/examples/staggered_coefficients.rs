//! Cell and face values of a discontinuous coefficient under every face
//! strategy, printed on the faces of the jump.

use mfdstag::expr::parse;
use mfdstag::field::{face_values, CellRule, CoefficientField, FaceStrategy, FluxHint, Piece};
use mfdstag::mesh::generate_quad_mesh;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_quad_mesh(4)?;
    let k = CoefficientField::Piecewise(vec![
        Piece {
            region: Some(parse("0.5 - x")?),
            value: parse("1")?,
        },
        Piece {
            region: None,
            value: parse("100")?,
        },
    ]);
    // flow from right to left, so the right cell is the donor
    let hint = FluxHint::Cells(vec![[-1.0, 0.0]; mesh.num_cells()]);

    let jump: Vec<usize> = (0..mesh.num_faces())
        .filter(|&fi| {
            let f = mesh.face(fi);
            !f.is_boundary() && (f.midpoint[0] - 0.5).abs() < 1e-12
        })
        .collect();
    for strategy in FaceStrategy::ALL {
        let st = face_values(&k, &mesh, strategy, Some(&hint), CellRule::Centroid)?;
        let fi = jump[0];
        let f = mesh.face(fi);
        let (a, b) = st.face_sides(&mesh, fi);
        let (c1, c2) = (f.cells.0, f.cells.1.expect("interior"));
        println!(
            "{:<11} kbar = ({:>5}, {:>5})  k_f seen from each side = ({:>8.3}, {:>8.3})",
            strategy.name(),
            st.kbar[c1],
            st.kbar[c2],
            a,
            b.expect("interior"),
        );
    }

    let tensor = CoefficientField::Tensor {
        k11: parse("2")?,
        k12: parse("0.5")?,
        k22: parse("1")?,
    };
    let st = face_values(&tensor, &mesh, FaceStrategy::Trace, None, CellRule::Triangulated)?;
    println!("tensor: kbar = {} (mean eigenvalue), cell tensor {:?}", st.kbar[0], st.cell_tensor[0]);
    println!("tensor face values are normal components n^T K n: {:?}", st.kface[0]);
    Ok(())
}
