use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dist, Mesh, MeshError, Point};

/// Mesh families on the unit square used by the studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshFamily {
    Quad,
    PerturbedQuad {
        xi: f64,
        seed: u64,
        /// Vertical grid line whose vertices only move along it, so that an
        /// interface at this abscissa stays aligned with mesh faces.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pin_x: Option<f64>,
    },
    Polygonal {
        seed: u64,
    },
}

impl MeshFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Quad => "quad",
            MeshFamily::PerturbedQuad { .. } => "perturbed-quad",
            MeshFamily::Polygonal { .. } => "polygonal",
        }
    }

    /// Member with `n` cells per side. Random families derive the level seed
    /// as `seed * 1000 + n`, so every level is reproducible on its own.
    pub fn build(&self, n: usize) -> Result<Mesh, MeshError> {
        let level_seed = |seed: u64| seed.wrapping_mul(1000).wrapping_add(n as u64);
        match *self {
            MeshFamily::Quad => generate_quad_mesh(n),
            MeshFamily::PerturbedQuad { xi, seed, pin_x } => {
                perturbed_quad(n, xi, level_seed(seed), pin_x)
            }
            MeshFamily::Polygonal { seed } => generate_polygonal_mesh(n, level_seed(seed)),
        }
    }
}

fn grid_vertices(n: usize) -> Vec<Point> {
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints even when 1/n is inexact
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            v.push([x, y]);
        }
    }
    v
}

fn quad_cells(n: usize) -> Vec<Vec<usize>> {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    cells
}

fn check_n(n: usize) -> Result<(), MeshError> {
    if n < 1 {
        return Err(MeshError::Parameter(format!("n must be positive, got {n}")));
    }
    Ok(())
}

/// Uniform `n x n` grid on the unit square with side labels.
pub fn generate_quad_mesh(n: usize) -> Result<Mesh, MeshError> {
    check_n(n)?;
    Ok(Mesh::build(grid_vertices(n), quad_cells(n))?.with_unit_square_labels())
}

fn uniform_in_disk(rng: &mut ChaCha8Rng, radius: f64) -> Point {
    loop {
        let a: f64 = rng.gen_range(-1.0..=1.0);
        let b: f64 = rng.gen_range(-1.0..=1.0);
        if a * a + b * b <= 1.0 {
            return [a * radius, b * radius];
        }
    }
}

fn check_xi(xi: f64) -> Result<(), MeshError> {
    if !(0.0..=0.4).contains(&xi) {
        return Err(MeshError::Parameter(format!(
            "perturbation fraction must lie in [0, 0.4], got {xi}"
        )));
    }
    Ok(())
}

/// Perturbs interior grid vertices of an `(n+1) x (n+1)` grid.
fn perturb(v: &mut [Point], n: usize, xi: f64, seed: u64, pin_x: Option<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = xi / n as f64;
    for j in 1..n {
        for i in 1..n {
            let d = uniform_in_disk(&mut rng, radius);
            let p = &mut v[j * (n + 1) + i];
            let pinned = pin_x.is_some_and(|x| (p[0] - x).abs() <= 1e-12);
            if !pinned {
                p[0] += d[0];
            }
            p[1] += d[1];
        }
    }
}

/// Grid whose interior vertices move by a uniform random vector of length at
/// most `xi / n`. Deterministic for a given seed.
pub fn generate_perturbed_quad_mesh(n: usize, xi: f64, seed: u64) -> Result<Mesh, MeshError> {
    perturbed_quad(n, xi, seed, None)
}

fn perturbed_quad(n: usize, xi: f64, seed: u64, pin_x: Option<f64>) -> Result<Mesh, MeshError> {
    if n < 2 {
        return Err(MeshError::Parameter(format!("n must be at least 2, got {n}")));
    }
    check_xi(xi)?;
    let mut v = grid_vertices(n);
    perturb(&mut v, n, xi, seed, pin_x);
    Ok(Mesh::build(v, quad_cells(n))?.with_unit_square_labels())
}

const POLYGONAL_XI: f64 = 0.2;

/// Mixed-valence polygonal mesh: the centroidal dual of a perturbed
/// triangulated `n x n` grid with alternating diagonals. Interior dual cells
/// are quadrilaterals and octagons; boundary cells are clipped by the square.
/// The mesh has `(n + 1)^2` cells.
pub fn generate_polygonal_mesh(n: usize, seed: u64) -> Result<Mesh, MeshError> {
    if n < 2 {
        return Err(MeshError::Parameter(format!("n must be at least 2, got {n}")));
    }
    let mut grid = grid_vertices(n);
    perturb(&mut grid, n, POLYGONAL_XI, seed, None);

    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut tris: Vec<[usize; 3]> = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    dual_mesh(&grid, &tris)
}

/// Centroidal dual of a counterclockwise triangulation of a convex domain.
fn dual_mesh(grid: &[Point], tris: &[[usize; 3]]) -> Result<Mesh, MeshError> {
    let mut verts: Vec<Point> = tris
        .iter()
        .map(|t| {
            let (a, b, c) = (grid[t[0]], grid[t[1]], grid[t[2]]);
            [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
        })
        .collect();

    // around each vertex v: triangle (v, a, b) maps a -> (triangle, b)
    let mut fan: Vec<HashMap<usize, (usize, usize)>> = vec![HashMap::new(); grid.len()];
    for (ti, t) in tris.iter().enumerate() {
        for k in 0..3 {
            fan[t[k]].insert(t[(k + 1) % 3], (ti, t[(k + 2) % 3]));
        }
    }

    let mut midpoint_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |verts: &mut Vec<Point>, a: usize, b: usize| -> usize {
        *midpoint_of.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let (p, q) = (grid[a], grid[b]);
            verts.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            verts.len() - 1
        })
    };

    let mut cells = Vec::with_capacity(grid.len());
    for (v, around) in fan.iter().enumerate() {
        let targets: Vec<usize> = around.values().map(|&(_, b)| b).collect();
        let start = around.keys().copied().filter(|a| !targets.contains(a)).min();
        let mut lp = Vec::new();
        match start {
            None => {
                // interior vertex: closed fan
                let first = *around.keys().min().expect("vertex with triangles");
                let mut a = first;
                loop {
                    let (t, b) = around[&a];
                    lp.push(t);
                    a = b;
                    if a == first {
                        break;
                    }
                }
            }
            Some(first) => {
                lp.push(midpoint(&mut verts, v, first));
                let mut a = first;
                while let Some(&(t, b)) = around.get(&a) {
                    lp.push(t);
                    a = b;
                }
                lp.push(midpoint(&mut verts, v, a));
                let (p, q, o) = (verts[*lp.last().unwrap()], verts[lp[0]], grid[v]);
                let turn = (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
                if turn.abs() > 1e-12 * dist(p, o) * dist(q, o) {
                    verts.push(o);
                    lp.push(verts.len() - 1);
                }
            }
        }
        cells.push(lp);
    }
    Ok(Mesh::build(verts, cells)?.with_unit_square_labels())
}
