use std::collections::BTreeMap;

use kaluza::basegeo::{geometry_at, CoframeField, Fields, GaugeField, GeometryAtPoint, SchemeOptions};
use kaluza::bundle::{
    adjoint_of, builtin_rep, convergence_order, lift_path, verify_deextra, verify_gauge_covariance, BundleError,
    FiberDependence, Interpolation, MatrixRep, PathJson, PathSpec, VelocitySource,
};
use kaluza::liealg::{builtin_algebra, LieAlgebraSpec};
use kaluza::samples::{self, identity};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn su2(n: usize) -> LieAlgebraSpec {
    builtin_algebra("su2", &identity(n), &identity(3)).unwrap()
}

fn geom(f: &Fields, spec: &LieAlgebraSpec, p: &[f64]) -> GeometryAtPoint {
    geometry_at(f, spec, p, "analytic", &SchemeOptions::default()).unwrap()
}

fn flat(spec: &LieAlgebraSpec) -> Fields {
    let n = spec.n();
    Fields::new(CoframeField::identity(spec.b().clone()).unwrap(), GaugeField::zero(spec.r(), n)).unwrap()
}

fn block_h(spec: &LieAlgebraSpec) -> DMatrix<f64> {
    spec.h().clone()
}

#[test]
fn adjoint_examples() {
    let spec = su2(2);
    let rep = builtin_rep("su2_as_so3", &spec).unwrap();
    assert_eq!(adjoint_of(&rep.identity()), identity(5));

    // the adjoint action of SO(3) on so(3) is the defining action
    let g = rep.exp(&[0.0, 0.0, std::f64::consts::PI / 3.0]);
    let s = adjoint_of(&g);
    assert!((s.view((2, 2), (3, 3)) - g.matrix()).amax() < 1e-14);
    assert!((s.view((0, 0), (2, 2)) - identity(2)).amax() == 0.0);
    assert!(s.view((0, 2), (2, 3)).amax() == 0.0 && s.view((2, 0), (3, 2)).amax() == 0.0);
    let h = block_h(&spec);
    assert!((s.transpose() * &h * &s - &h).amax() < 1e-10);
}

#[test]
fn adjoint_preserves_the_metric_and_is_a_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cases = [
        ("su2_as_so3", builtin_algebra("su2", &identity(3), &(identity(3) * 2.0)).unwrap()),
        ("u1_as_so2", builtin_algebra("abelian", &identity(2), &identity(1)).unwrap()),
        ("product", builtin_algebra("u1_su2", &identity(2), &identity(4)).unwrap()),
    ];
    for (name, spec) in cases {
        let rep = builtin_rep(name, &spec).unwrap();
        let h = block_h(&spec);
        for _ in 0..30 {
            let g1 = rep.random_element(&mut rng);
            let g2 = rep.random_element(&mut rng);
            let s1 = adjoint_of(&g1);
            assert!((s1.transpose() * &h * &s1 - &h).amax() < 1e-8);
            let s12 = adjoint_of(&g1.mul(&g2));
            assert!((s12 - &s1 * adjoint_of(&g2)).amax() < 1e-8, "{name}");
        }
    }
}

#[test]
fn deextra_examples() {
    let ab = builtin_algebra("abelian", &identity(2), &identity(1)).unwrap();
    let rep = builtin_rep("u1_as_so2", &ab).unwrap();
    let g = geom(&flat(&ab), &ab, &[0.1, 0.2]);
    assert_eq!(verify_deextra(&g, &rep.exp(&[0.7])).unwrap(), 0.0);

    let spec = su2(2);
    let rep = builtin_rep("su2_as_so3", &spec).unwrap();
    let g = geom(&flat(&spec), &spec, &[0.1, 0.2]);
    let el = rep.exp(&[0.3, -1.1, 0.8]);
    assert!(verify_deextra(&g, &el).unwrap() < 1e-8);
}

#[test]
fn deextra_holds_for_random_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cases = [
        ("su2_as_so3", su2(2)),
        ("su2_as_so3", su2(3)),
        ("product", builtin_algebra("u1_su2", &identity(2), &identity(4)).unwrap()),
    ];
    for (name, spec) in cases {
        let rep = builtin_rep(name, &spec).unwrap();
        for _ in 0..4 {
            let f = samples::random_fields(&spec, &mut rng).unwrap();
            let p = samples::random_points(spec.n(), 1, &mut rng).remove(0);
            let g = geom(&f, &spec, &p);
            let el = rep.random_element(&mut rng);
            let res = verify_deextra(&g, &el).unwrap();
            assert!(res < 1e-6, "{name}: {res}");
        }
    }
}

#[test]
fn gauge_covariance_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let spec = su2(3);
    let rep = builtin_rep("su2_as_so3", &spec).unwrap();
    let f = samples::random_fields(&spec, &mut rng).unwrap();
    let g = geom(&f, &spec, &[0.2, -0.4, 0.1]);
    assert!(verify_gauge_covariance(&g, &rep.identity(), FiberDependence::Constant).unwrap() < 1e-13);
    let el = rep.exp(&[1.0, 0.5, -2.0]);
    assert!(verify_gauge_covariance(&g, &el, FiberDependence::Constant).unwrap() < 1e-10);
    assert!(verify_gauge_covariance(&g, &el, FiberDependence::Chart).unwrap() < 1e-5);
}

#[test]
fn gauge_covariance_along_fiber_curves() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for n in 2..=4 {
        let spec = su2(n);
        let rep = builtin_rep("su2_as_so3", &spec).unwrap();
        for _ in 0..3 {
            let f = samples::random_fields(&spec, &mut rng).unwrap();
            let p = samples::random_points(n, 1, &mut rng).remove(0);
            let g = geom(&f, &spec, &p);
            let el = rep.random_element(&mut rng);
            let res = verify_gauge_covariance(&g, &el, FiberDependence::Chart).unwrap();
            assert!(res < 1e-5, "n = {n}: {res}");
        }
    }
}

#[test]
fn mismatched_geometry_is_rejected() {
    let spec = su2(2);
    let rep = builtin_rep("su2_as_so3", &spec).unwrap();
    let other = su2(3);
    let g = geom(&flat(&other), &other, &[0.0, 0.0, 0.0]);
    assert!(matches!(verify_deextra(&g, &rep.identity()), Err(BundleError::Dimension(_))));
}

fn analytic(texts: &[&str]) -> VelocitySource {
    let texts: Vec<String> = texts.iter().map(|s| s.to_string()).collect();
    VelocitySource::analytic(&texts, &BTreeMap::new()).unwrap()
}

fn so3() -> MatrixRep {
    builtin_rep("su2_as_so3", &su2(2)).unwrap()
}

#[test]
fn zero_velocity_keeps_the_initial_element() {
    let rep = so3();
    let g0 = rep.exp(&[0.3, 0.2, 0.1]).matrix().clone();
    let lift = lift_path(&rep, &PathSpec::new(analytic(&["0", "0", "0"]), g0.clone(), 10)).unwrap();
    assert_eq!(lift.elements.len(), 11);
    let worst = lift.elements.iter().map(|g| (g - &g0).amax()).fold(0.0, f64::max);
    assert!(worst < 1e-14, "{worst}");
}

#[test]
fn constant_velocity_matches_the_exponential() {
    let rep = so3();
    let xi = [0.7, -1.3, 2.1];
    let g0 = rep.exp(&[0.1, 0.4, -0.2]).matrix().clone();
    let lift = lift_path(&rep, &PathSpec::new(analytic(&["0.7", "-1.3", "2.1"]), g0.clone(), 1000)).unwrap();
    let oracle = &g0 * rep.algebra_element(&xi).exp();
    assert!((lift.last() - oracle).amax() < 1e-8);
    assert!(lift.max_drift < 1e-8);
}

#[test]
fn piecewise_constant_velocity_composes_exponentials() {
    let rep = so3();
    let (x1, x2) = ([1.0, 0.0, 0.5], [0.0, -2.0, 1.0]);
    let v = VelocitySource::sampled(vec![(0.0, x1.to_vec()), (0.5, x2.to_vec())], Interpolation::Hold).unwrap();
    // an odd step count puts the jump inside a step
    let lift = lift_path(&rep, &PathSpec::new(v, identity(3), 501)).unwrap();
    let half = |x: &[f64]| (rep.algebra_element(x) * 0.5).exp();
    let oracle = half(&x1) * half(&x2);
    assert!((lift.last() - oracle).amax() < 1e-8);
}

#[test]
fn convergence_order_is_four() {
    let rep = so3();
    let path = PathSpec::new(analytic(&["1 + sin(3*t)", "2*cos(t)", "t^2 - 1"]), identity(3), 8);
    let est = convergence_order(&rep, &path).unwrap();
    let order = est.order.unwrap();
    assert!(order >= 3.8, "order {order} {est:?}");

    let v = VelocitySource::sampled(
        vec![(0.0, vec![1.0, 0.0, 0.0]), (0.3, vec![0.0, 2.0, -1.0]), (1.0, vec![0.5, 0.5, 0.5])],
        Interpolation::Linear,
    )
    .unwrap();
    let order = convergence_order(&rep, &PathSpec::new(v, identity(3), 10)).unwrap().order.unwrap();
    assert!(order >= 3.8, "sampled order {order}");
}

#[test]
fn reversed_paths_return_to_the_start() {
    let rep = so3();
    let g0 = rep.exp(&[0.5, 0.5, -0.5]).matrix().clone();
    let forward = PathSpec::new(analytic(&["sin(2*t)", "t", "exp(-t)"]), g0.clone(), 200);
    let there = lift_path(&rep, &forward).unwrap();
    let back = lift_path(&rep, &forward.reversed(there.last().clone())).unwrap();
    assert!((back.last() - &g0).amax() < 1e-6);

    for interp in [Interpolation::Linear, Interpolation::Hold] {
        let v = VelocitySource::sampled(
            vec![(0.0, vec![1.0, 0.0, 0.0]), (0.4, vec![0.0, 2.0, -1.0]), (1.0, vec![0.5, 0.5, 0.5])],
            interp,
        )
        .unwrap();
        let forward = PathSpec::new(v, g0.clone(), 300);
        let there = lift_path(&rep, &forward).unwrap();
        let back = lift_path(&rep, &forward.reversed(there.last().clone())).unwrap();
        assert!((back.last() - &g0).amax() < 1e-6, "{interp:?}");
    }
}

#[test]
fn lift_errors() {
    let rep = so3();
    let v = analytic(&["1", "0", "0"]);
    assert!(matches!(lift_path(&rep, &PathSpec::new(v.clone(), identity(3), 0)), Err(BundleError::StepCount)));
    assert!(matches!(lift_path(&rep, &PathSpec::new(v, identity(3) * 2.0, 4)), Err(BundleError::OffManifold { .. })));
    let narrow = analytic(&["1", "0"]);
    assert!(matches!(lift_path(&rep, &PathSpec::new(narrow, identity(3), 4)), Err(BundleError::Dimension(_))));
    assert!(VelocitySource::sampled(vec![(0.0, vec![1.0]), (0.0, vec![2.0])], Interpolation::Hold).is_err());
    assert!(VelocitySource::sampled(vec![(0.0, vec![1.0]), (0.5, vec![2.0])], Interpolation::Linear).is_err());
}

#[test]
fn path_json_forms() {
    let rep = so3();
    let texts = [
        r#"{"rep":"su2_as_so3","v":["a*t","0","1"],"steps":10,"params":{"a":2.0}}"#,
        r#"{"rep":"su2_as_so3","g0":"identity","v":[["2*t"],["0"],["1"]],"steps":10}"#,
        r#"{"rep":"su2_as_so3","v":[[0,0,0,1],[1,2,0,1]],"steps":10}"#,
    ];
    let ends: Vec<DMatrix<f64>> = texts
        .iter()
        .map(|t| {
            let j: PathJson = serde_json::from_str(t).unwrap();
            lift_path(&rep, &j.path(&rep).unwrap()).unwrap().last().clone()
        })
        .collect();
    assert!((&ends[0] - &ends[1]).amax() < 1e-14);
    assert!((&ends[0] - &ends[2]).amax() < 1e-12);

    let bad: PathJson =
        serde_json::from_str(r#"{"rep":"su2_as_so3","g0":"zero","v":["1","0","0"],"steps":1}"#).unwrap();
    assert!(matches!(bad.path(&rep), Err(BundleError::Path(_))));
    assert!(serde_json::from_str::<PathJson>(r#"{"rep":"x","v":["1"],"steps":1,"extra":0}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifted_paths_stay_orthogonal(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, steps in 1usize..40) {
        let rep = so3();
        let texts = [format!("{a}*cos(t)"), format!("{b}*t"), format!("{c}")];
        let v = VelocitySource::analytic(&texts, &BTreeMap::new()).unwrap();
        let lift = lift_path(&rep, &PathSpec::new(v, identity(3), steps)).unwrap();
        for g in &lift.elements {
            prop_assert!((g.transpose() * g - identity(3)).amax() <= 1e-8);
        }
    }

    #[test]
    fn adjoint_fixes_the_base_block(x in proptest::collection::vec(-3.0f64..3.0, 3)) {
        let rep = so3();
        let s = adjoint_of(&rep.exp(&x));
        prop_assert_eq!(s.view((0, 0), (2, 2)).into_owned(), identity(2));
    }
}
