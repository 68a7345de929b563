use hroc_core::{Matrix, Matrix2, Matrix3, Tensor4};
use proptest::prelude::*;

fn mat2() -> impl Strategy<Value = Matrix2> {
    prop::array::uniform4(-3.0f64..3.0).prop_map(|v| Matrix::from_row_slice(&v).unwrap())
}

fn mat3() -> impl Strategy<Value = Matrix3> {
    prop::array::uniform9(-3.0f64..3.0).prop_map(|v| Matrix::from_row_slice(&v).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn signed_singular_values_factor_the_determinant(f in mat2()) {
        let (n1, n2) = f.signed_singular_values();
        prop_assert!(close(n1 * n2, f.det(), 1e-12));
        prop_assert!(close(n1 * n1 + n2 * n2, f.frobenius_norm_squared(), 1e-12));
        prop_assert!(n1 >= n2.abs() - 1e-12);
    }

    #[test]
    fn singular_values_match_invariants_3d(f in mat3()) {
        let s = f.singular_values();
        prop_assert!(close(s.iter().map(|v| v * v).sum(), f.frobenius_norm_squared(), 1e-10));
        prop_assert!(close(s[0] * s[1] * s[2], f.det().abs(), 1e-9));
        prop_assert!(s[0] >= s[1] && s[1] >= s[2] && s[2] >= 0.0);
    }

    #[test]
    fn singular_values_are_rotation_invariant(f in mat2(), a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let g = Matrix2::rotation(a).matmul(&f).matmul(&Matrix2::rotation(b));
        let (s, t) = (f.singular_values(), g.singular_values());
        prop_assert!(close(s[0], t[0], 1e-10) && close(s[1], t[1], 1e-10));
    }

    #[test]
    fn cofactor_identity(f in mat3()) {
        // F cof(F)ᵀ = det(F) I
        let lhs = f.matmul(&f.cofactor().transpose());
        let rhs = Matrix3::identity() * f.det();
        prop_assert!((lhs - rhs).max_abs() <= 1e-10 * (1.0 + f.det().abs()));
    }

    #[test]
    fn determinant_is_multiplicative(f in mat3(), g in mat3()) {
        let lhs = f.matmul(&g).det();
        prop_assert!((lhs - f.det() * g.det()).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn outer_products_are_rank_one(a in prop::array::uniform3(-2.0f64..2.0), b in prop::array::uniform3(-2.0f64..2.0)) {
        prop_assume!(a.iter().map(|v| v * v).sum::<f64>() > 1e-2);
        prop_assume!(b.iter().map(|v| v * v).sum::<f64>() > 1e-2);
        prop_assert!(Matrix3::outer(&a, &b).is_rank_one(1e-10));
        prop_assert!(!(Matrix3::outer(&a, &b) + Matrix3::identity()).is_rank_one(1e-10));
    }

    #[test]
    fn dyadic_contraction(f in mat2(), g in mat2(), h in mat2()) {
        // (F ⊗ G) : H = F (G : H)
        let lhs = Tensor4::dyadic(&f, &g).contract_right(&h);
        let rhs = f * g.contract(&h);
        prop_assert!((lhs - rhs).max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
        prop_assert_eq!(Tensor4::<2>::identity().contract_right(&h), h);
    }
}
