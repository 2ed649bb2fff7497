//! Jacobi eigenvalues against roots of the characteristic quartic.

use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;
use triags_core::linalg::symmetric_eigen_4x4;
use triags_core::{min_right_singular_vector, pinv_shifted, Mat2kx4};

/// Coefficients `c` of `det(λI − M) = λ⁴ + c[0]λ³ + c[1]λ² + c[2]λ + c[3]`
/// by Faddeev–LeVerrier.
fn char_poly(m: &Matrix4<f64>) -> [f64; 4] {
    let mut c = [0.0; 4];
    let mut mk = Matrix4::zeros();
    let mut prev = 1.0;
    for k in 1..=4 {
        mk = m * (mk + Matrix4::identity() * prev);
        let ck = -mk.trace() / k as f64;
        c[k - 1] = ck;
        prev = ck;
    }
    c
}

/// Real roots of a monic polynomial with only real roots: Newton from above
/// the largest root converges monotonically, then deflate.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = std::iter::once(1.0).chain(coeffs.iter().copied()).collect();
    let mut roots = Vec::new();
    while p.len() > 1 {
        let bound = 1.0 + p[1..].iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let mut x = bound;
        for _ in 0..500 {
            let (mut f, mut df) = (0.0, 0.0);
            for c in &p {
                df = df * x + f;
                f = f * x + c;
            }
            if df == 0.0 {
                break;
            }
            let next = x - f / df;
            if !(next < x) {
                break;
            }
            x = next;
        }
        roots.push(x);
        let mut q = Vec::with_capacity(p.len() - 1);
        let mut acc = 0.0;
        for c in &p[..p.len() - 1] {
            acc = acc * x + c;
            q.push(acc);
        }
        p = q;
    }
    roots.sort_by(f64::total_cmp);
    roots
}

fn symmetric(entries: &[f64]) -> Matrix4<f64> {
    let b = Matrix4::from_iterator(entries.iter().copied());
    b + b.transpose()
}

proptest! {
    #[test]
    fn eigenvalues_are_quartic_roots(entries in prop::collection::vec(-2.0..2.0f64, 16)) {
        let m = symmetric(&entries);
        let eig = symmetric_eigen_4x4(&m).unwrap();
        let roots = real_roots(&char_poly(&m));
        let scale = m.norm().max(1.0);
        for (l, r) in eig.values.iter().zip(&roots) {
            prop_assert!((l - r).abs() < 1e-8 * scale, "{:?} vs {:?}", eig.values, roots);
        }
        prop_assert!((eig.reconstruct() - m).norm() < 1e-12 * scale);
        prop_assert!((eig.vectors.transpose() * eig.vectors - Matrix4::identity()).norm() < 1e-12);
    }

    #[test]
    fn sigma_min_is_root_of_smallest_gram_eigenvalue(rows in prop::collection::vec(-1.0..1.0f64, 32)) {
        let a = Mat2kx4::new(rows.chunks(4).map(|r| Vector4::from_column_slice(r)).collect()).unwrap();
        let s = min_right_singular_vector(&a).unwrap();
        let lam = real_roots(&char_poly(&a.gram()))[0].max(0.0);
        prop_assert!((s.sigma_min - lam.sqrt()).abs() < 1e-7);
        prop_assert!(s.sigma_min <= a.apply_norm(&Vector4::new(0.5, 0.5, 0.5, 0.5)) + 1e-12);
    }
}

#[test]
fn explicit_null_space_gives_last_axis() {
    let rows = vec![
        Vector4::new(1.0, 0.0, 0.0, 0.0),
        Vector4::new(0.0, 1.0, 0.0, 0.0),
        Vector4::new(0.0, 0.0, 1.0, 0.0),
        Vector4::new(1.0, 1.0, 1.0, 0.0),
    ];
    let s = min_right_singular_vector(&Mat2kx4::new(rows).unwrap()).unwrap();
    assert_eq!(s.vector, Vector4::new(0.0, 0.0, 0.0, 1.0));
    assert!(s.sigma_min < 1e-15);
}

#[test]
fn shifted_pseudo_inverse_of_diagonal() {
    // (0·I − diag(0, 1, 2, 3))⁺ drops the null direction and inverts the rest
    let m = Matrix4::from_diagonal(&Vector4::new(0.0, 1.0, 2.0, 3.0));
    let p = pinv_shifted(&m, 0.0).unwrap();
    let want = Matrix4::from_diagonal(&Vector4::new(0.0, -1.0, -0.5, -1.0 / 3.0));
    assert!((p - want).norm() < 1e-14);
}
