//! Conforming polygonal meshes in 2D.
//!
//! Every face (edge) carries one globally oriented unit normal `n_f`, pointing
//! to the right of the segment from its lower-indexed to its higher-indexed
//! vertex. A cell sees the face with sign `sigma` such that `sigma * n_f` is its
//! outward normal.

mod generate;
mod io;
mod quality;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

pub use generate::{
    generate_perturbed_quad_mesh, generate_polygonal_mesh, generate_quad_mesh, MeshFamily,
};
pub use io::{MeshFile, MeshIoError};
pub use quality::MeshQuality;

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MeshError {
    #[error("cell {cell}: needs at least 3 vertices, got {count}")]
    TooFewVertices { cell: usize, count: usize },
    #[error("cell {cell}: vertex index {index} out of range")]
    BadVertexIndex { cell: usize, index: usize },
    #[error("cell {cell}: repeated vertex {vertex}")]
    RepeatedVertex { cell: usize, vertex: usize },
    #[error("cell {cell}: non-positive area {area:e} (cells must be counterclockwise)")]
    NonPositiveArea { cell: usize, area: f64 },
    #[error("cell {cell}: self-intersecting polygon (edges {a} and {b})")]
    SelfIntersecting { cell: usize, a: usize, b: usize },
    #[error("face ({a}, {b}) is shared by more than two cells")]
    OverSharedFace { a: usize, b: usize },
    #[error("face ({a}, {b}) is traversed in the same direction by two cells")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("non-conforming edge: vertex {vertex} lies inside boundary face ({a}, {b})")]
    HangingVertex { vertex: usize, a: usize, b: usize },
    #[error("face ({a}, {b}) has zero length")]
    ZeroLengthFace { a: usize, b: usize },
    #[error("cell {cell}: geometric identity violated ({which}, residual {residual:e})")]
    Identity {
        cell: usize,
        which: &'static str,
        residual: f64,
    },
    #[error("boundary label `{label}` names ({a}, {b}), which is not a boundary face")]
    BadLabelPair { label: String, a: usize, b: usize },
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    /// Endpoints, lower index first. The normal points to the right of `v0 -> v1`.
    pub vertices: [usize; 2],
    pub length: f64,
    pub midpoint: Point,
    pub normal: Point,
    /// First incident cell and, for interior faces, the second one.
    pub cells: (usize, Option<usize>),
    /// Index into [`Mesh::labels`] for labeled boundary faces.
    pub label: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Counterclockwise vertex loop.
    pub vertices: Vec<usize>,
    /// `faces[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub faces: Vec<usize>,
    /// Orientation sign per local face, +1 or -1.
    pub signs: Vec<f64>,
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
}

impl Cell {
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<Cell>,
    faces: Vec<Face>,
    labels: Vec<String>,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

/// Shoelace area and area centroid of a counterclockwise polygon.
/// Coordinates are shifted to the first vertex to limit cancellation.
pub(crate) fn polygon_area_centroid(pts: &[Point]) -> (f64, Point) {
    let o = pts[0];
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..pts.len() {
        let p = sub(pts[i], o);
        let q = sub(pts[(i + 1) % pts.len()], o);
        let w = cross(p, q);
        a2 += w;
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    let area = 0.5 * a2;
    if a2 == 0.0 {
        return (0.0, o);
    }
    (area, [o[0] + cx / (3.0 * a2), o[1] + cy / (3.0 * a2)])
}

/// Proper or touching intersection of closed segments `p1p2` and `q1q2`.
fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

impl Mesh {
    /// Builds a mesh from vertex coordinates and counterclockwise cell loops,
    /// derives all geometry and checks the per-cell identities
    /// `sum sigma |f| n_f = 0` and `sum sigma |f| n_f (x_f - x_c)^T = |c| I`.
    /// Boundary faces start unlabeled.
    pub fn build(vertices: Vec<Point>, cell_loops: Vec<Vec<usize>>) -> Result<Mesh, MeshError> {
        let nv = vertices.len();
        let mut cells = Vec::with_capacity(cell_loops.len());
        let mut faces: Vec<Face> = Vec::new();
        let mut face_of: HashMap<(usize, usize), usize> = HashMap::new();

        for (ci, lp) in cell_loops.into_iter().enumerate() {
            let m = lp.len();
            if m < 3 {
                return Err(MeshError::TooFewVertices { cell: ci, count: m });
            }
            if let Some(&index) = lp.iter().find(|&&v| v >= nv) {
                return Err(MeshError::BadVertexIndex { cell: ci, index });
            }
            let mut sorted = lp.clone();
            sorted.sort_unstable();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(MeshError::RepeatedVertex { cell: ci, vertex: w[0] });
            }
            let pts: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
            let (area, centroid) = polygon_area_centroid(&pts);
            if !(area > 0.0) {
                return Err(MeshError::NonPositiveArea { cell: ci, area });
            }
            for a in 0..m {
                for b in a + 1..m {
                    if b == a + 1 || (a == 0 && b == m - 1) {
                        continue;
                    }
                    if segments_intersect(pts[a], pts[(a + 1) % m], pts[b], pts[(b + 1) % m]) {
                        return Err(MeshError::SelfIntersecting { cell: ci, a, b });
                    }
                }
            }

            let mut cface = Vec::with_capacity(m);
            let mut signs = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (lp[i], lp[(i + 1) % m]);
                let key = (a.min(b), a.max(b));
                let sign = if a < b { 1.0 } else { -1.0 };
                let fi = match face_of.get(&key) {
                    Some(&fi) => {
                        let f = &mut faces[fi];
                        if f.cells.1.is_some() {
                            return Err(MeshError::OverSharedFace { a: key.0, b: key.1 });
                        }
                        f.cells.1 = Some(ci);
                        fi
                    }
                    None => {
                        let (p, q) = (vertices[key.0], vertices[key.1]);
                        let length = dist(p, q);
                        if !(length > 0.0) {
                            return Err(MeshError::ZeroLengthFace { a: key.0, b: key.1 });
                        }
                        let t = sub(q, p);
                        faces.push(Face {
                            vertices: [key.0, key.1],
                            length,
                            midpoint: [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])],
                            normal: [t[1] / length, -t[0] / length],
                            cells: (ci, None),
                            label: None,
                        });
                        face_of.insert(key, faces.len() - 1);
                        faces.len() - 1
                    }
                };
                cface.push(fi);
                signs.push(sign);
            }
            let mut diameter: f64 = 0.0;
            for a in 0..m {
                for b in a + 1..m {
                    diameter = diameter.max(dist(pts[a], pts[b]));
                }
            }
            cells.push(Cell {
                vertices: lp,
                faces: cface,
                signs,
                area,
                centroid,
                diameter,
            });
        }

        // Two cells on one face must traverse it in opposite directions.
        for f in &faces {
            if let (c0, Some(c1)) = f.cells {
                let s0 = sign_of(&cells[c0], f, &faces);
                let s1 = sign_of(&cells[c1], f, &faces);
                if s0 == s1 {
                    return Err(MeshError::InconsistentOrientation {
                        a: f.vertices[0],
                        b: f.vertices[1],
                    });
                }
            }
        }

        check_hanging_vertices(&vertices, &faces)?;

        let mesh = Mesh {
            vertices,
            cells,
            faces,
            labels: Vec::new(),
        };
        for ci in 0..mesh.cells.len() {
            mesh.check_cell_identities(ci)?;
        }
        Ok(mesh)
    }

    /// Residuals of the two per-cell identities: closed boundary
    /// (`|sum sigma |f| n_f|`) and the divergence theorem for linear fields
    /// (max entry of `sum sigma |f| n_f (x_f - x_c)^T - |c| I`).
    pub fn cell_identity_residuals(&self, ci: usize) -> (f64, f64) {
        let c = &self.cells[ci];
        let mut s = [0.0; 2];
        let mut t = [[0.0; 2]; 2];
        for (k, &fi) in c.faces.iter().enumerate() {
            let f = &self.faces[fi];
            let w = c.signs[k] * f.length;
            let d = sub(f.midpoint, c.centroid);
            for i in 0..2 {
                s[i] += w * f.normal[i];
                for j in 0..2 {
                    t[i][j] += w * f.normal[i] * d[j];
                }
            }
        }
        let closed = s[0].hypot(s[1]);
        let mut div: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { c.area } else { 0.0 };
                div = div.max((t[i][j] - target).abs());
            }
        }
        (closed, div)
    }

    fn check_cell_identities(&self, ci: usize) -> Result<(), MeshError> {
        let c = &self.cells[ci];
        let (closed, div) = self.cell_identity_residuals(ci);
        if closed > 1e-13 * c.diameter {
            return Err(MeshError::Identity {
                cell: ci,
                which: "closed boundary",
                residual: closed,
            });
        }
        if div > 1e-13 * c.area {
            return Err(MeshError::Identity {
                cell: ci,
                which: "divergence theorem",
                residual: div,
            });
        }
        Ok(())
    }

    /// Labels boundary faces by a predicate on the face midpoint. Faces for
    /// which the predicate returns `None` keep their current label.
    pub fn label_boundary_by<F>(mut self, rule: F) -> Mesh
    where
        F: Fn(Point) -> Option<String>,
    {
        for fi in 0..self.faces.len() {
            if !self.faces[fi].is_boundary() {
                continue;
            }
            if let Some(name) = rule(self.faces[fi].midpoint) {
                let li = self.intern_label(name);
                self.faces[fi].label = Some(li);
            }
        }
        self
    }

    /// Labels boundary faces from explicit vertex pairs.
    pub fn label_boundary_pairs(
        mut self,
        pairs: &BTreeMap<String, Vec<[usize; 2]>>,
    ) -> Result<Mesh, MeshError> {
        let index: HashMap<(usize, usize), usize> = self
            .faces
            .iter()
            .enumerate()
            .map(|(i, f)| ((f.vertices[0], f.vertices[1]), i))
            .collect();
        for (name, list) in pairs {
            let li = self.intern_label(name.clone());
            for &[a, b] in list {
                let key = (a.min(b), a.max(b));
                match index.get(&key) {
                    Some(&fi) if self.faces[fi].is_boundary() => self.faces[fi].label = Some(li),
                    _ => {
                        return Err(MeshError::BadLabelPair {
                            label: name.clone(),
                            a,
                            b,
                        })
                    }
                }
            }
        }
        Ok(self)
    }

    /// Labels the sides of the unit square `left`, `right`, `bottom`, `top`.
    pub fn with_unit_square_labels(self) -> Mesh {
        self.label_boundary_by(|p| unit_square_side(p).map(str::to_string))
    }

    /// Labels are kept sorted so equal labelings compare equal.
    fn intern_label(&mut self, name: String) -> usize {
        match self.labels.binary_search(&name) {
            Ok(i) => i,
            Err(i) => {
                self.labels.insert(i, name);
                for f in &mut self.faces {
                    if let Some(l) = f.label.as_mut().filter(|l| **l >= i) {
                        *l += 1;
                    }
                }
                i
            }
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    pub fn face(&self, i: usize) -> &Face {
        &self.faces[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn face_label(&self, fi: usize) -> Option<&str> {
        self.faces[fi].label.map(|l| self.labels[l].as_str())
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    pub fn quality(&self) -> MeshQuality {
        quality::quality(self)
    }

    /// Orientation sign of face `fi` as seen from cell `ci`, if incident.
    pub fn sign(&self, ci: usize, fi: usize) -> Option<f64> {
        let c = &self.cells[ci];
        c.faces.iter().position(|&f| f == fi).map(|k| c.signs[k])
    }
}

fn sign_of(cell: &Cell, face: &Face, faces: &[Face]) -> f64 {
    let k = cell
        .faces
        .iter()
        .position(|&fi| faces[fi].vertices == face.vertices)
        .expect("incident face");
    cell.signs[k]
}

fn check_hanging_vertices(vertices: &[Point], faces: &[Face]) -> Result<(), MeshError> {
    let boundary: Vec<&Face> = faces.iter().filter(|f| f.is_boundary()).collect();
    let mut bverts: Vec<usize> = boundary.iter().flat_map(|f| f.vertices).collect();
    bverts.sort_unstable();
    bverts.dedup();
    for f in &boundary {
        let (p, q) = (vertices[f.vertices[0]], vertices[f.vertices[1]]);
        let t = sub(q, p);
        let len2 = t[0] * t[0] + t[1] * t[1];
        for &v in &bverts {
            if v == f.vertices[0] || v == f.vertices[1] {
                continue;
            }
            let r = sub(vertices[v], p);
            let s = (r[0] * t[0] + r[1] * t[1]) / len2;
            if s <= 1e-12 || s >= 1.0 - 1e-12 {
                continue;
            }
            let off = cross(t, r).abs() / len2.sqrt();
            if off <= 1e-12 * len2.sqrt() {
                return Err(MeshError::HangingVertex {
                    vertex: v,
                    a: f.vertices[0],
                    b: f.vertices[1],
                });
            }
        }
    }
    Ok(())
}

/// Which side of the unit square a boundary point lies on.
pub fn unit_square_side(p: Point) -> Option<&'static str> {
    const TOL: f64 = 1e-12;
    if p[0].abs() <= TOL {
        Some("left")
    } else if (p[0] - 1.0).abs() <= TOL {
        Some("right")
    } else if p[1].abs() <= TOL {
        Some("bottom")
    } else if (p[1] - 1.0).abs() <= TOL {
        Some("top")
    } else {
        None
    }
}
