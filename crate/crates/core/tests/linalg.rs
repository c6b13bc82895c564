mod common;

use mfdstag::linalg::{
    cg, dense_solve, minres, smallest_eigenvalue_estimate, CsrMatrix, DenseMatrix, LinalgError, Preconditioner,
    TripletBuilder,
};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn csr(a: &Dense) -> CsrMatrix {
    let n = a.len();
    let mut t = TripletBuilder::new(n, a[0].len());
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                t.push(i, j, v);
            }
        }
    }
    t.build()
}

fn dense(a: &Dense) -> DenseMatrix {
    DenseMatrix::from_rows(a)
}

fn rel_err(x: &[f64], exact: &[f64]) -> f64 {
    max_abs_diff(x, exact) / max_abs(exact)
}

#[test]
fn cg_matches_dense_elimination_on_random_spd_systems() {
    let mut r = rng(1);
    for trial in 0..20 {
        let n = r.gen_range(5..=200);
        let a = random_spd(n, 0.5 * n as f64, &mut r);
        let b: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        for pc in [Preconditioner::None, Preconditioner::Jacobi] {
            let (x, rep) = cg(&csr(&a), &b, 1e-13, 10 * n, pc).unwrap();
            assert!(rep.converged);
            let err = rel_err(&x, &gauss_solve(&a, &b));
            assert!(err <= 1e-9, "trial {trial} n={n} {pc:?}: {err:e}");
        }
    }
}

#[test]
fn minres_matches_dense_elimination_on_random_indefinite_systems() {
    let mut r = rng(2);
    for trial in 0..20 {
        let n = r.gen_range(5..=200);
        let a = random_symmetric_indefinite(n, &mut r);
        let b: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (x, rep) = minres(&csr(&a), &b, 1e-13, 10 * n).unwrap();
        assert!(rep.converged);
        let err = rel_err(&x, &gauss_solve(&a, &b));
        assert!(err <= 1e-9, "trial {trial} n={n}: {err:e}");
    }
}

#[test]
fn minres_solves_a_small_saddle_system() {
    // [[I, B^T], [B, 0]] with B = [1 1 0; 0 1 1]
    let a = csr(&vec![
        vec![1.0, 0.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 1.0, 1.0],
        vec![0.0, 0.0, 1.0, 0.0, 1.0],
        vec![1.0, 1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 1.0, 0.0, 0.0],
    ]);
    let exact = [1.0, -2.0, 0.5, 3.0, -1.0];
    let b = a.matvec(&exact);
    let (x, _) = minres(&a, &b, 1e-14, 50).unwrap();
    assert!(max_abs_diff(&x, &exact) <= 1e-12, "{x:?}");
}

/// 5-point Laplacian on an `m x m` interior grid with Dirichlet closure.
fn laplacian(m: usize) -> CsrMatrix {
    let idx = |i: usize, j: usize| i * m + j;
    let mut t = TripletBuilder::new(m * m, m * m);
    for i in 0..m {
        for j in 0..m {
            t.push(idx(i, j), idx(i, j), 4.0);
            if i > 0 {
                t.push(idx(i, j), idx(i - 1, j), -1.0);
            }
            if i + 1 < m {
                t.push(idx(i, j), idx(i + 1, j), -1.0);
            }
            if j > 0 {
                t.push(idx(i, j), idx(i, j - 1), -1.0);
            }
            if j + 1 < m {
                t.push(idx(i, j), idx(i, j + 1), -1.0);
            }
        }
    }
    t.build()
}

#[test]
fn cg_and_minres_recover_a_known_solution_of_the_laplacian() {
    let a = laplacian(10);
    let exact: Vec<f64> = (0..100).map(|k| ((k * 37 % 17) as f64 - 8.0) / 3.0).collect();
    let b = a.matvec(&exact);
    let (x, rep) = cg(&a, &b, 1e-13, 1000, Preconditioner::Jacobi).unwrap();
    assert!(rep.converged && rep.relative_residual <= 1e-13);
    assert!(rel_err(&x, &exact) <= 1e-11);
    let (x, _) = minres(&a, &b, 1e-13, 1000).unwrap();
    assert!(rel_err(&x, &exact) <= 1e-11);
}

#[test]
fn cg_reports_breakdown_on_an_indefinite_matrix() {
    let a = csr(&vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
    let e = cg(&a, &[1.0, 1.0], 1e-12, 10, Preconditioner::None).unwrap_err();
    assert!(matches!(e, LinalgError::Breakdown { .. }), "{e:?}");
}

#[test]
fn iterative_solvers_reject_mismatched_dimensions() {
    let a = laplacian(3);
    assert!(matches!(cg(&a, &[1.0; 4], 1e-10, 10, Preconditioner::Jacobi), Err(LinalgError::Dimension(_))));
    assert!(matches!(minres(&a, &[1.0; 4], 1e-10, 10), Err(LinalgError::Dimension(_))));
}

#[test]
fn zero_rhs_gives_zero_solution() {
    let (x, rep) = cg(&laplacian(4), &[0.0; 16], 1e-10, 10, Preconditioner::Jacobi).unwrap();
    assert!(rep.converged && x.iter().all(|&v| v == 0.0));
}

#[test]
fn dense_lu_matches_elimination_on_a_random_nonsymmetric_matrix() {
    let mut r = rng(3);
    let n = 50;
    let mut a: Dense = (0..n).map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 10.0;
    }
    let b: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let x = dense_solve(&dense(&a), &b).unwrap();
    assert!(rel_err(&x, &gauss_solve(&a, &b)) <= 1e-12);
    let inv = dense(&a).lu().unwrap().inverse();
    let id = dense(&a).matmul(&inv);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((id[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn singular_matrix_is_detected() {
    let a = dense(&vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
    assert!(matches!(a.lu(), Err(LinalgError::Singular { .. })));
}

#[test]
fn random_symmetric_matrix_is_symmetric_in_csr_form() {
    let mut r = rng(4);
    let a = random_symmetric_indefinite(50, &mut r);
    let m = csr(&a);
    assert!(m.is_symmetric());
    assert_eq!(m.transpose(), m);
    let x: Vec<f64> = (0..50).map(|_| r.gen_range(-1.0..1.0)).collect();
    assert!(max_abs_diff(&m.matvec(&x), &matvec(&a, &x)) <= 1e-14);
    assert!(max_abs_diff(&m.matvec(&x), &m.matvec_transpose(&x)) <= 1e-14);
}

#[test]
fn smallest_generalized_eigenvalue_matches_jacobi_oracle() {
    let mut r = rng(5);
    let n = 20;
    let a = random_spd(n, 0.1, &mut r);
    let d: Vec<f64> = (0..n).map(|_| r.gen_range(0.5..2.0)).collect();
    // A x = lambda D x  <=>  D^-1/2 A D^-1/2 y = lambda y
    let scaled: Dense = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] / (d[i] * d[j]).sqrt()).collect())
        .collect();
    let oracle = jacobi_eigenvalues(&scaled)[0];
    let est = smallest_eigenvalue_estimate(&dense(&a), &d, 10_000, 1e-14).unwrap();
    assert!(est.converged);
    assert!((est.value - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", est.value);
}

#[test]
fn jacobi_oracle_reproduces_a_known_spectrum() {
    // tridiag(-1, 2, -1) of order 6: 2 - 2 cos(k pi / 7)
    let n: usize = 6;
    let a: Dense = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.abs_diff(j) {
                    0 => 2.0,
                    1 => -1.0,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    let ev = jacobi_eigenvalues(&a);
    for (k, v) in ev.iter().enumerate() {
        let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 7.0).cos();
        assert!((v - exact).abs() <= 1e-13, "{v} vs {exact}");
    }
}

#[test]
fn saddle_block_layout() {
    let a = CsrMatrix::identity(3);
    let b = csr(&vec![vec![1.0, 2.0, 0.0]]);
    let s = CsrMatrix::saddle(&a, &b, None).to_dense();
    let expected = [
        [1.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 2.0],
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 2.0, 0.0, 0.0],
    ];
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(s[(i, j)], expected[i][j]);
        }
    }
}

proptest! {
    #[test]
    fn triplets_accumulate_like_a_dense_matrix(
        entries in prop::collection::vec((0usize..6, 0usize..5, -5.0..5.0f64), 0..60),
        x in prop::collection::vec(-1.0..1.0f64, 5),
    ) {
        let mut t = TripletBuilder::new(6, 5);
        let mut d = vec![vec![0.0; 5]; 6];
        for &(i, j, v) in &entries {
            t.push(i, j, v);
            d[i][j] += v;
        }
        let m = t.build();
        for i in 0..6 {
            let cols: Vec<usize> = m.row(i).map(|(j, _)| j).collect();
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            for j in 0..5 {
                prop_assert!((m.get(i, j) - d[i][j]).abs() <= 1e-12);
            }
        }
        let y = m.matvec(&x);
        let z = matvec(&d, &x);
        prop_assert!(max_abs_diff(&y, &z) <= 1e-12);
    }

    #[test]
    fn cg_residual_meets_the_requested_tolerance(seed in 0u64..1000, n in 2usize..40) {
        let mut r = rng(seed);
        let a = random_spd(n, 1.0, &mut r);
        let b: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (x, rep) = cg(&csr(&a), &b, 1e-10, 50 * n, Preconditioner::Jacobi).unwrap();
        prop_assert!(rep.converged);
        let res: Vec<f64> = matvec(&a, &x).iter().zip(&b).map(|(p, q)| p - q).collect();
        let rn = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(rn <= 1e-9 * bn, "{} vs {}", rn, bn);
    }
}
