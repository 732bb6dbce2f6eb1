use bundleforge::linalg::random::{gaussian_matrix, haar_unitary};
use bundleforge::linalg::{
    hermitian_eigen, numerical_rank, operator_norm, polar_decompose, singular_values, svd, ComplexMatrix, MatrixSpan,
    Tolerance, C64,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest singular value by power iteration on `m* m`.
fn power_norm(m: &ComplexMatrix) -> f64 {
    let h = m.adjoint() * m;
    let mut v = ComplexMatrix::from_fn(h.cols(), 1, |i, _| C64::new(1.0 + i as f64 * 0.37, 0.11 * i as f64));
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w = &h * &v;
        let n = w.frobenius_norm();
        if n == 0.0 {
            return 0.0;
        }
        lambda = n / v.frobenius_norm();
        v = w.scale(C64::new(1.0 / n, 0.0));
    }
    lambda.sqrt()
}

#[test]
fn operator_norm_matches_power_iteration() {
    let mut r = rng(1);
    for k in 0..40 {
        let (a, b) = (1 + k % 5, 1 + (k / 5) % 5);
        let m = gaussian_matrix(&mut r, a, b);
        let (x, y) = (operator_norm(&m), power_norm(&m));
        assert!((x - y).abs() < 1e-6 * x.max(1.0), "{a}x{b}: {x} vs {y}");
    }
}

#[test]
fn known_singular_values() {
    let d = ComplexMatrix::from_real(3, 3, &[3.0, 0.0, 0.0, 0.0, -5.0, 0.0, 0.0, 0.0, 0.0]);
    let u = haar_unitary(&mut rng(2), 3);
    let v = haar_unitary(&mut rng(3), 3);
    let s = singular_values(&(&u * &d * v.adjoint()));
    assert!((s[0] - 5.0).abs() < 1e-12 && (s[1] - 3.0).abs() < 1e-12 && s[2].abs() < 1e-12, "{s:?}");
    assert_eq!(numerical_rank(&(&u * &d), &Tolerance::default()), 2);
}

#[test]
fn svd_reconstructs_tall_rank_deficient_stacks() {
    let mut r = rng(4);
    let (rows, cols, rank) = (36, 25, 5);
    let m = gaussian_matrix(&mut r, rows, rank) * gaussian_matrix(&mut r, rank, cols);
    let dec = svd(&m);
    let mut s = ComplexMatrix::zeros(dec.singular_values.len(), dec.singular_values.len());
    for (i, &x) in dec.singular_values.iter().enumerate() {
        s.set(i, i, C64::new(x, 0.0));
    }
    let back = &dec.u * &s * dec.v.adjoint();
    assert!((&back - &m).frobenius_norm() < 1e-10 * m.frobenius_norm());
    let k = dec.u.cols();
    assert!((dec.u.adjoint() * &dec.u - ComplexMatrix::identity(k)).frobenius_norm() < 1e-10);
    assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(numerical_rank(&m, &Tolerance::default()), rank);
}

#[test]
fn hermitian_eigen_pairs_and_trace() {
    let mut r = rng(5);
    for n in 1..7 {
        let g = gaussian_matrix(&mut r, n, n);
        let h = &g + &g.adjoint();
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for (j, &l) in vals.iter().enumerate() {
            let v = vecs.sub_block(0, j, n, 1);
            assert!((&h * &v - v.scale(C64::new(l, 0.0))).frobenius_norm() < 1e-10 * h.frobenius_norm());
        }
        let sum: f64 = vals.iter().sum();
        assert!((sum - h.trace().re).abs() < 1e-10 * h.frobenius_norm());
    }
}

#[test]
fn thousand_polar_decompositions() {
    let mut r = rng(6);
    for k in 0..1000 {
        let (a, b, rank) = (1 + k % 4, 1 + (k / 4) % 4, 1 + (k / 16) % 4);
        let rank = rank.min(a).min(b);
        let m = gaussian_matrix(&mut r, a, rank) * gaussian_matrix(&mut r, rank, b);
        let (u, p) = polar_decompose(&m);
        let scale = m.frobenius_norm();
        assert!((&u * &p - &m).frobenius_norm() < 1e-10 * scale, "case {k}");
        assert!((&u * u.adjoint() * &u - &u).frobenius_norm() < 1e-10, "case {k}: not a partial isometry");
        assert!((&p - p.adjoint()).frobenius_norm() < 1e-10 * scale);
        assert!(hermitian_eigen(&p).0[0] > -1e-10 * scale);
        assert!((u.frobenius_norm().powi(2) - rank as f64).abs() < 1e-8, "case {k}: rank of u");
    }
}

#[test]
fn span_dimensions() {
    let tol = Tolerance::default();
    let units: Vec<_> = (0..9).map(|k| ComplexMatrix::matrix_unit(3, k / 3, k % 3)).collect();
    assert_eq!(MatrixSpan::from_matrices(3, &units, 0.0, tol).unwrap().dim(), 9);
    let mut dup = units[..4].to_vec();
    dup.push(&units[0] + &units[1].scale(C64::new(0.0, 2.0)));
    assert_eq!(MatrixSpan::from_matrices(3, &dup, 0.0, tol).unwrap().dim(), 4);
    assert!(MatrixSpan::from_matrices(3, &[ComplexMatrix::zeros(3, 3)], 0.0, tol).unwrap().is_zero());
}

#[test]
fn span_product_counts_matrix_units() {
    // E_ij (E_kl)* = δ_jl E_ik, so EE* is spanned by the distinct E_ik.
    let tol = Tolerance::default();
    let pairs = [(0, 1), (0, 2), (3, 5), (4, 5)];
    let e = MatrixSpan::from_matrices(6, &pairs.map(|(i, j)| ComplexMatrix::matrix_unit(6, i, j)), 0.0, tol).unwrap();
    let mut expected = std::collections::BTreeSet::new();
    for (i, j) in pairs {
        for (k, l) in pairs {
            if j == l {
                expected.insert((i, k));
            }
        }
    }
    let ee = e.product(&e.adjoint()).unwrap();
    assert_eq!(ee.dim(), expected.len());
    for (i, k) in expected {
        assert!(ee.contains(&ComplexMatrix::matrix_unit(6, i, k)));
    }
    let ese = e.adjoint().product(&e).unwrap();
    assert_eq!(ese.dim(), 5);
}

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n * n)
        .prop_map(move |v| ComplexMatrix::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_submultiplicative(a in matrix(3), b in matrix(3)) {
        prop_assert!(operator_norm(&(&a * &b)) <= operator_norm(&a) * operator_norm(&b) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn c_star_identity(a in matrix(3)) {
        let n = operator_norm(&a);
        prop_assert!((operator_norm(&(a.adjoint() * &a)) - n * n).abs() <= 1e-10 * (1.0 + n * n));
    }

    #[test]
    fn adjoint_is_an_involution(a in matrix(4)) {
        prop_assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn span_projection_is_idempotent(a in matrix(2), b in matrix(2), c in matrix(2)) {
        let s = MatrixSpan::from_matrices(2, &[a.clone(), b], 0.0, Tolerance::default()).unwrap();
        prop_assert!(s.contains(&a));
        let p = s.project(&c);
        prop_assert!((s.project(&p) - &p).frobenius_norm() <= 1e-10 * (1.0 + c.frobenius_norm()));
        prop_assert!(s.residual(&p) <= 1e-10 * (1.0 + c.frobenius_norm()));
    }
}
