use serde::Serialize;

use super::Mesh;

/// Shape-regularity diagnostics. `r_T` is the distance from the centroid to
/// the nearest face line, a cheap lower estimate of the inscribed radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshQuality {
    pub h: f64,
    pub cell_diameters: Vec<f64>,
    pub inner_radii: Vec<f64>,
    pub max_faces: usize,
    pub min_radius_ratio: f64,
}

pub(super) fn quality(mesh: &Mesh) -> MeshQuality {
    let mut cell_diameters = Vec::with_capacity(mesh.num_cells());
    let mut inner_radii = Vec::with_capacity(mesh.num_cells());
    let mut max_faces = 0;
    let mut min_radius_ratio = f64::INFINITY;
    for c in mesh.cells() {
        let r = c
            .faces
            .iter()
            .map(|&fi| {
                let f = mesh.face(fi);
                let d = [c.centroid[0] - f.midpoint[0], c.centroid[1] - f.midpoint[1]];
                (d[0] * f.normal[0] + d[1] * f.normal[1]).abs()
            })
            .fold(f64::INFINITY, f64::min);
        cell_diameters.push(c.diameter);
        inner_radii.push(r);
        max_faces = max_faces.max(c.num_faces());
        min_radius_ratio = min_radius_ratio.min(r / c.diameter);
    }
    MeshQuality {
        h: mesh.h(),
        cell_diameters,
        inner_radii,
        max_faces,
        min_radius_ratio,
    }
}
