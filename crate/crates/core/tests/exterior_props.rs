use kaluza::exterior::{derivation, epsilon_form, interior, wedge, AlternatingForm, FrameVector};
use proptest::prelude::*;

const N: usize = 6;

// Small-integer coefficients keep every product exact.
fn form(degree: usize) -> impl Strategy<Value = AlternatingForm> {
    prop::collection::vec((prop::collection::btree_set(0..N, degree), -3i32..=3), 0..6).prop_map(move |terms| {
        let mut f = AlternatingForm::zero(N, degree, 1);
        for (idx, c) in terms {
            if idx.len() == degree {
                let v: Vec<usize> = idx.into_iter().collect();
                f.add_term(&v, &[c as f64]);
            }
        }
        f
    })
}

fn vector() -> impl Strategy<Value = FrameVector> {
    prop::collection::vec(-3i32..=3, N).prop_map(|v| FrameVector(v.into_iter().map(f64::from).collect()))
}

fn sign(p: usize, q: usize) -> f64 {
    if (p * q).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

proptest! {
    #[test]
    fn wedge_is_associative(a in form(1), b in form(2), c in form(2)) {
        let l = wedge(&wedge(&a, &b).unwrap(), &c).unwrap();
        let r = wedge(&a, &wedge(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn wedge_is_graded_commutative(
        (p, q, a, b) in (0usize..4, 0usize..4).prop_flat_map(|(p, q)| (Just(p), Just(q), form(p), form(q)))
    ) {
        let ab = wedge(&a, &b).unwrap();
        let ba = wedge(&b, &a).unwrap().scale(sign(p, q));
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn interior_squares_to_zero(v in vector(), a in form(3)) {
        let once = interior(&v, &a).unwrap();
        prop_assert!(interior(&v, &once).unwrap().is_zero());
    }

    #[test]
    fn interior_is_antiderivation(v in vector(), a in form(2), b in form(2)) {
        let lhs = interior(&v, &wedge(&a, &b).unwrap()).unwrap();
        let rhs = wedge(&interior(&v, &a).unwrap(), &b)
            .unwrap()
            .add(&wedge(&a, &interior(&v, &b).unwrap()).unwrap().scale(sign(2, 1)))
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn derivation_obeys_leibniz(a in form(1), b in form(2), betas in prop::collection::vec(form(2), N)) {
        let lhs = derivation(&wedge(&a, &b).unwrap(), &betas).unwrap();
        let rhs = wedge(&derivation(&a, &betas).unwrap(), &b)
            .unwrap()
            .add(&wedge(&a, &derivation(&b, &betas).unwrap()).unwrap().scale(-1.0))
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn epsilon_coefficients_are_units(fixed in prop::collection::vec(0..N, 1..=3)) {
        let f = epsilon_form(N, &fixed).unwrap();
        for (_, v) in f.terms() {
            prop_assert!(v[0] == 1.0 || v[0] == -1.0);
        }
    }
}

#[test]
fn identities_hold_for_every_supported_dimension() {
    for n in 3..=8 {
        let rep = kaluza::exterior::check_identities(n, 50, n as u64).unwrap();
        assert_eq!(rep.max_residual(), 0.0, "N = {n}");
    }
}
