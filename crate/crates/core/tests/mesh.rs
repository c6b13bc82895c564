mod common;

use std::f64::consts::SQRT_2;

use mfdstag::mesh::{
    generate_perturbed_quad_mesh, generate_polygonal_mesh, generate_quad_mesh, Mesh, MeshError, MeshFamily,
    MeshFile, MeshIoError,
};
use proptest::prelude::*;

use common::*;

fn cell_points(mesh: &Mesh, ci: usize) -> Vec<[f64; 2]> {
    mesh.cell(ci).vertices.iter().map(|&v| mesh.vertices()[v]).collect()
}

/// Area centroid from a fan of triangles about the first vertex.
fn fan_centroid(pts: &[[f64; 2]]) -> [f64; 2] {
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 1..pts.len() - 1 {
        let (p, q, r) = (pts[0], pts[i], pts[i + 1]);
        let t = 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]));
        a += t;
        cx += t * (p[0] + q[0] + r[0]) / 3.0;
        cy += t * (p[1] + q[1] + r[1]) / 3.0;
    }
    [cx / a, cy / a]
}

fn check_geometry(mesh: &Mesh) {
    let mut total = 0.0;
    for ci in 0..mesh.num_cells() {
        let c = mesh.cell(ci);
        let pts = cell_points(mesh, ci);
        let area = shoelace(&pts);
        assert!((c.area - area).abs() <= 1e-14 * area.max(1.0), "cell {ci}: {} vs {area}", c.area);
        let g = fan_centroid(&pts);
        assert!((c.centroid[0] - g[0]).abs() <= 1e-13 && (c.centroid[1] - g[1]).abs() <= 1e-13);
        total += area;
    }
    assert!((total - 1.0).abs() <= 1e-13, "total area {total}");
    let (closed, div) = identity_residuals(mesh);
    assert!(closed <= 1e-13 && div <= 1e-13, "closed {closed:e} div {div:e}");
}

fn check_orientation(mesh: &Mesh) {
    for (ci, c) in mesh.cells().iter().enumerate() {
        let m = c.vertices.len();
        for k in 0..m {
            let (a, b) = (mesh.vertices()[c.vertices[k]], mesh.vertices()[c.vertices[(k + 1) % m]]);
            let f = mesh.face(c.faces[k]);
            // outward normal of a counterclockwise edge a -> b
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let out = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
            let s = c.signs[k];
            assert!(
                (s * f.normal[0] - out[0]).abs() <= 1e-14 && (s * f.normal[1] - out[1]).abs() <= 1e-14,
                "cell {ci} face {k}"
            );
            assert_eq!(mesh.sign(ci, c.faces[k]), Some(s));
        }
    }
    for (fi, f) in mesh.faces().iter().enumerate() {
        assert!(f.vertices[0] < f.vertices[1]);
        if let (c1, Some(c2)) = f.cells {
            assert_eq!(mesh.sign(c1, fi).unwrap(), -mesh.sign(c2, fi).unwrap(), "face {fi}");
        }
    }
}

#[test]
fn quad_mesh_counts_and_size() {
    for n in 1..=6 {
        let m = generate_quad_mesh(n).unwrap();
        assert_eq!(m.num_cells(), n * n);
        assert_eq!(m.num_faces(), 2 * n * (n + 1));
        assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
        assert!((m.h() - SQRT_2 / n as f64).abs() <= 1e-15);
    }
    let q = generate_quad_mesh(4).unwrap().quality();
    assert!((q.h - SQRT_2 / 4.0).abs() <= 1e-15);
    assert_eq!(q.max_faces, 4);
    assert!((q.min_radius_ratio - 0.125 / (SQRT_2 / 4.0)).abs() <= 1e-14);
}

#[test]
fn unit_square_sign_pattern() {
    // vertices numbered counterclockwise: only the closing edge 3 -> 0 runs high to low
    let m = Mesh::build(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![vec![0, 1, 2, 3]]).unwrap();
    assert_eq!(m.cell(0).signs, vec![1.0, 1.0, 1.0, -1.0]);
    // the generator numbers row by row, so its loop is 0 1 3 2
    assert_eq!(generate_quad_mesh(1).unwrap().cell(0).signs, vec![1.0, 1.0, -1.0, -1.0]);
}

#[test]
fn euler_characteristic_of_the_square_is_one() {
    for family in families(4) {
        for n in [2, 5, 9] {
            let m = family.build(n).unwrap();
            let chi = m.num_vertices() as i64 - m.num_faces() as i64 + m.num_cells() as i64;
            assert_eq!(chi, 1, "{}({n})", family.name());
        }
    }
}

#[test]
fn polygonal_mesh_has_mixed_valence() {
    let m = generate_polygonal_mesh(6, 1).unwrap();
    assert_eq!(m.num_cells(), 49);
    let counts: std::collections::BTreeSet<usize> = m.cells().iter().map(|c| c.num_faces()).collect();
    assert!(counts.len() >= 3, "{counts:?}");
    assert!(m.cells().iter().any(|c| c.num_faces() >= 6));
}

#[test]
fn boundary_sides_are_labeled_and_have_unit_length() {
    for family in families(5) {
        let m = family.build(7).unwrap();
        let mut length = std::collections::BTreeMap::new();
        for (fi, f) in m.faces().iter().enumerate() {
            if f.is_boundary() {
                let label = m.face_label(fi).expect("boundary face labeled");
                *length.entry(label.to_string()).or_insert(0.0) += f.length;
            } else {
                assert_eq!(m.face_label(fi), None);
            }
        }
        assert_eq!(length.len(), 4);
        for (side, l) in length {
            assert!((l - 1.0).abs() <= 1e-14, "{} {side}: {l}", family.name());
        }
    }
}

#[test]
fn generators_are_deterministic() {
    let a = generate_polygonal_mesh(8, 3).unwrap();
    assert_eq!(a, generate_polygonal_mesh(8, 3).unwrap());
    assert_ne!(a, generate_polygonal_mesh(8, 4).unwrap());
    let b = generate_perturbed_quad_mesh(8, 0.3, 3).unwrap();
    assert_eq!(b, generate_perturbed_quad_mesh(8, 0.3, 3).unwrap());
    assert_eq!(a.to_json(), generate_polygonal_mesh(8, 3).unwrap().to_json());
}

#[test]
fn pinned_abscissa_stays_on_mesh_faces() {
    let family = MeshFamily::PerturbedQuad {
        xi: 0.4,
        seed: 9,
        pin_x: Some(0.5),
    };
    let m = family.build(8).unwrap();
    let on_line = m.vertices().iter().filter(|v| v[0] == 0.5).count();
    assert_eq!(on_line, 9);
}

#[test]
fn generator_parameters_are_validated() {
    assert!(matches!(generate_quad_mesh(0), Err(MeshError::Parameter(_))));
    assert!(matches!(generate_perturbed_quad_mesh(1, 0.3, 1), Err(MeshError::Parameter(_))));
    assert!(matches!(generate_perturbed_quad_mesh(4, 0.6, 1), Err(MeshError::Parameter(_))));
    assert!(matches!(generate_polygonal_mesh(1, 1), Err(MeshError::Parameter(_))));
}

#[test]
fn hand_written_mesh_file() {
    // an L of three unit cells
    let text = r#"{
      "vertices": [[0,0],[1,0],[2,0],[0,1],[1,1],[2,1],[0,2],[1,2]],
      "cells": [[0,1,4,3],[1,2,5,4],[3,4,7,6]],
      "boundary_labels": {"inflow": [[0,3],[3,6]]}
    }"#;
    let m = MeshFile::parse(text).unwrap().into_mesh().unwrap();
    assert_eq!(m.num_cells(), 3);
    assert_eq!(m.num_faces(), 10);
    let inflow = (0..m.num_faces()).filter(|&f| m.face_label(f) == Some("inflow")).count();
    assert_eq!(inflow, 2);
    check_orientation(&m);
    let (closed, div) = identity_residuals(&m);
    assert!(closed <= 1e-15 && div <= 1e-15);
}

#[test]
fn invalid_meshes_are_rejected() {
    let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let err = Mesh::build(square.clone(), vec![vec![0, 3, 2, 1]]).unwrap_err();
    assert!(matches!(err, MeshError::NonPositiveArea { cell: 0, .. }), "{err:?}");
    let err = Mesh::build(square.clone(), vec![vec![0, 1]]).unwrap_err();
    assert!(matches!(err, MeshError::TooFewVertices { cell: 0, count: 2 }));
    let err = Mesh::build(square.clone(), vec![vec![0, 1, 7]]).unwrap_err();
    assert!(matches!(err, MeshError::BadVertexIndex { index: 7, .. }));
    let err = Mesh::build(square.clone(), vec![vec![0, 1, 1, 3]]).unwrap_err();
    assert!(matches!(err, MeshError::RepeatedVertex { .. }));
    // the edge (2, 2) -> (1, -1) cuts the bottom edge
    let bow = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [1.0, -1.0], [0.0, 2.0]];
    let err = Mesh::build(bow, vec![vec![0, 1, 2, 3, 4]]).unwrap_err();
    assert!(matches!(err, MeshError::SelfIntersecting { .. } | MeshError::NonPositiveArea { .. }), "{err:?}");
    // a vertex in the middle of the neighbour's edge
    let hanging = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.5], [2.0, 0.0], [2.0, 1.0]];
    let err = Mesh::build(hanging, vec![vec![0, 1, 2, 3], vec![1, 5, 6, 2, 4]]).unwrap_err();
    assert!(matches!(err, MeshError::HangingVertex { vertex: 4, .. }), "{err:?}");
}

#[test]
fn mesh_file_errors() {
    let e = MeshFile::parse("{\"vertices\": [[0,0]], \"cells\": [], \"extra\": 1}").unwrap_err();
    assert!(matches!(e, MeshIoError::Parse { line: 1, .. }), "{e:?}");
    let e = MeshFile::parse("{\n  \"vertices\": [[0,0]\n").unwrap_err();
    assert!(matches!(e, MeshIoError::Parse { line: 2.., .. }), "{e:?}");
    let text = r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [[0,1,2,3]], "boundary_labels": {"x": [[0,2]]}}"#;
    let e = MeshFile::parse(text).unwrap().into_mesh().unwrap_err();
    assert!(matches!(e, MeshIoError::Mesh(MeshError::BadLabelPair { .. })), "{e:?}");
    assert!(matches!(Mesh::load("/nonexistent/mesh.json"), Err(MeshIoError::Io { .. })));
}

#[test]
fn generated_meshes_satisfy_geometric_identities() {
    for family in families(1) {
        for n in [2, 3, 8, 16, 32] {
            let m = family.build(n).unwrap();
            check_geometry(&m);
            check_orientation(&m);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_meshes_satisfy_identities(n in 2usize..14, seed in 0u64..10_000, xi in 0.0..=0.4f64, polygonal: bool) {
        let m = if polygonal {
            generate_polygonal_mesh(n, seed).unwrap()
        } else {
            generate_perturbed_quad_mesh(n, xi, seed).unwrap()
        };
        check_geometry(&m);
        check_orientation(&m);
    }

    #[test]
    fn json_round_trip_is_exact(n in 2usize..8, seed in 0u64..10_000) {
        let m = generate_polygonal_mesh(n, seed).unwrap();
        let back = MeshFile::parse(&m.to_json()).unwrap().into_mesh().unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_json(), m.to_json());
    }
}
