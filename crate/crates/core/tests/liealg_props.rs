use kaluza::liealg::{adjoint_matrix, bracket, builtin_algebra, killing_form, LieAlgebraSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn specs() -> Vec<LieAlgebraSpec> {
    let eye = |n| DMatrix::identity(n, n);
    let lorentz = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0]));
    vec![
        builtin_algebra("abelian", &eye(2), &eye(2)).unwrap(),
        builtin_algebra("su2", &lorentz, &(eye(3) * 2.0)).unwrap(),
        builtin_algebra("su2", &eye(2), &(eye(3) * -1.0)).unwrap(),
        builtin_algebra("u1_su2", &eye(2), &eye(4)).unwrap(),
    ]
}

fn vec_in(dim: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-4i32..=4, dim).prop_map(|v| DVector::from_iterator(v.len(), v.into_iter().map(f64::from)))
}

proptest! {
    #[test]
    fn bracket_preserves_metric(which in 0usize..4, seed in prop::collection::vec(-4i32..=4, 24)) {
        let spec = &specs()[which];
        let n = spec.dim();
        let take = |k: usize| DVector::from_iterator(n, seed[k * 8..k * 8 + n].iter().map(|&x| f64::from(x)));
        let (xi, eta, zeta) = (take(0), take(1), take(2));
        let h = spec.h();
        let lhs = (bracket(spec, &xi, &eta).unwrap().transpose() * h * &zeta)[(0, 0)]
            + (eta.transpose() * h * bracket(spec, &xi, &zeta).unwrap())[(0, 0)];
        prop_assert!(lhs.abs() <= 1e-12);
    }

    #[test]
    fn adjoint_vanishes_on_central_block(xi in vec_in(6)) {
        let spec = &specs()[3];
        let ad = adjoint_matrix(spec, &xi).unwrap();
        let n = spec.n();
        prop_assert_eq!(ad.rows(0, n).amax(), 0.0);
        prop_assert_eq!(ad.columns(0, n).amax(), 0.0);
    }

    #[test]
    fn bracket_is_bilinear_and_antisymmetric(xi in vec_in(6), eta in vec_in(6), s in -3i32..=3) {
        let spec = &specs()[1];
        let s = f64::from(s);
        let a = bracket(spec, &(&xi * s), &eta).unwrap();
        let b = bracket(spec, &eta, &xi).unwrap() * -s;
        prop_assert!((a - b).amax() <= 1e-12);
    }
}

#[test]
fn killing_forms_are_symmetric() {
    for spec in specs() {
        let k = killing_form(&spec);
        assert_eq!(k, k.transpose());
    }
}
