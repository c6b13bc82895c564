//! Oracles shared by the integration tests. Nothing here calls the library
//! code it is used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mfdstag::mesh::{Mesh, MeshFamily};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub type Dense = Vec<Vec<f64>>;

/// Gaussian elimination with partial pivoting on a copy.
pub fn gauss_solve(a: &Dense, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Dense = a.iter().zip(b).map(|(r, &bi)| {
        let mut r = r.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d != 0.0, "oracle hit a singular matrix");
        for i in col + 1..n {
            let f = m[i][col] / d;
            if f != 0.0 {
                for j in col..=n {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off.sqrt() < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// `G^T G + shift I` with `G` uniform in `[-1, 1]`.
pub fn random_spd(n: usize, shift: f64, rng: &mut ChaCha8Rng) -> Dense {
    let g: Dense = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| g[k][i] * g[k][j]).sum::<f64>() + if i == j { shift } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Symmetric, well conditioned and indefinite: diagonal entries of both signs
/// bounded away from zero plus a small symmetric perturbation.
pub fn random_symmetric_indefinite(n: usize, rng: &mut ChaCha8Rng) -> Dense {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mag = rng.gen_range(1.0..4.0);
        a[i][i] = if i % 2 == 0 { mag } else { -mag };
        for j in 0..i {
            let v = rng.gen_range(-0.5..0.5) / n as f64;
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

/// Expressions and their hand-derived gradients, for finite-difference and
/// symbolic checks. Each entry is `(p, dp/dx, dp/dy)`.
pub const EXPRESSION_CATALOG: [(&str, &str, &str); 12] = [
    ("x^2 + 3*x*y - y^3", "2*x + 3*y", "3*x - 3*y^2"),
    ("sin(pi*x)*sin(pi*y)", "pi*cos(pi*x)*sin(pi*y)", "pi*sin(pi*x)*cos(pi*y)"),
    ("exp(x - 2*y)", "exp(x - 2*y)", "-2*exp(x - 2*y)"),
    ("log(1 + x^2 + y^2)", "2*x/(1 + x^2 + y^2)", "2*y/(1 + x^2 + y^2)"),
    ("sqrt(2 + x*y)", "y/(2*sqrt(2 + x*y))", "x/(2*sqrt(2 + x*y))"),
    ("x/(1 + y^2)", "1/(1 + y^2)", "-2*x*y/(1 + y^2)^2"),
    ("cos(x*y)", "-y*sin(x*y)", "-x*sin(x*y)"),
    ("(1 + x*y)^3", "3*y*(1 + x*y)^2", "3*x*(1 + x*y)^2"),
    ("-x^(-2) + y", "2*x^(-3)", "1"),
    ("1 + x*y", "y", "x"),
    ("exp(sin(x))*cos(y)", "cos(x)*exp(sin(x))*cos(y)", "-exp(sin(x))*sin(y)"),
    ("x^2.5*y", "2.5*x^1.5*y", "x^2.5"),
];

/// Evaluation points inside `[0.2, 0.9]^2`, where every catalog entry is smooth.
pub const SAMPLE_POINTS: [(f64, f64); 5] = [(0.3, 0.7), (0.5, 0.5), (0.81, 0.22), (0.25, 0.33), (0.9, 0.9)];

/// Shoelace area of a vertex loop, in the plain textbook form.
pub fn shoelace(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Per-cell `|sum sigma |f| n_f|` and max entry of
/// `sum sigma |f| n_f (x_f - x_c)^T - |c| I`, from the raw mesh data, each
/// scaled by the cell diameter resp. area.
pub fn identity_residuals(mesh: &Mesh) -> (f64, f64) {
    let mut closed: f64 = 0.0;
    let mut div: f64 = 0.0;
    for c in mesh.cells() {
        let mut s = [0.0; 2];
        let mut t = [[0.0; 2]; 2];
        for (k, &fi) in c.faces.iter().enumerate() {
            let f = mesh.face(fi);
            let w = c.signs[k] * f.length;
            for i in 0..2 {
                s[i] += w * f.normal[i];
                for j in 0..2 {
                    t[i][j] += w * f.normal[i] * (f.midpoint[j] - c.centroid[j]);
                }
            }
        }
        closed = closed.max(s[0].hypot(s[1]) / c.diameter);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { c.area } else { 0.0 };
                div = div.max((t[i][j] - target).abs() / c.area);
            }
        }
    }
    (closed, div)
}

pub fn families(seed: u64) -> [MeshFamily; 3] {
    [
        MeshFamily::Quad,
        MeshFamily::PerturbedQuad {
            xi: 0.3,
            seed,
            pin_x: None,
        },
        MeshFamily::Polygonal { seed },
    ]
}
