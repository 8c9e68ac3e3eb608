//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use kaluza::basegeo::{base_curvature, geometry_at, CoframeField, Fields, GaugeField, SchemeOptions};
use kaluza::bundle::{adjoint_of, builtin_rep, convergence_order, lift_path, verify_gauge_covariance, FiberDependence};
use kaluza::bundle::{PathSpec, VelocitySource};
use kaluza::commands::{cmd_curvature, Overrides, ProblemSpec};
use kaluza::exterior::check_identities;
use kaluza::fieldexpr::{parse, Expr, FieldProvider, ParseError};
use kaluza::kkcurv::{eym_residuals, route};
use kaluza::liealg::{builtin_algebra, cosmological_constant, validate_spec, Invariant, LieAlgebraSpec};
use kaluza::samples::{self, identity};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || format!("runtime {:.2}s exceeds {limit_s}s", elapsed.as_secs_f64()))
}

// 1 ------------------------------------------------------------------------

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for dim in 3..=8 {
        let report = check_identities(dim, 500, 11).map_err(|e| e.to_string())?;
        ensure(report.exhaustive == (dim <= 5), || format!("N = {dim}: exhaustive = {}", report.exhaustive))?;
        if dim >= 6 {
            ensure(report.results.iter().all(|r| r.cases >= 500), || format!("N = {dim}: fewer than 500 trials"))?;
        }
        worst = worst.max(report.max_residual());
    }
    ensure(worst <= 1e-12, || format!("max residual {worst:e}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("N = 3..8, max residual {worst:e}"))
}

// 2 ------------------------------------------------------------------------

fn hypothesis_validation() -> Outcome {
    let start = Instant::now();
    for n in 1..=4 {
        for (name, r) in [("su2", 3), ("u1_su2", 4)] {
            let spec = builtin_algebra(name, &identity(n), &identity(r)).map_err(|e| e.to_string())?;
            let rep = validate_spec(&spec, 1e-12).map_err(|e| e.to_string())?;
            ensure(rep.all_pass(), || format!("{name}({n}) fails: {:?}", rep.failures().collect::<Vec<_>>()))?;
        }
    }
    // su2 over a two-dimensional base; fiber indices are 2, 3, 4 (zero-based)
    let base = builtin_algebra("su2", &identity(2), &identity(3)).unwrap();
    let mutate = |extra: (usize, usize, usize, f64)| {
        let mut t = base.triplets();
        t.push(extra);
        LieAlgebraSpec::from_triplets(2, 3, &t, &identity(2), &identity(3)).unwrap()
    };
    // c^3_45 no longer matches c^3_54
    let m = validate_spec(&mutate((2, 3, 4, 0.5)), 1e-12).unwrap();
    let anti = m.check(Invariant::Antisymmetry);
    ensure(!anti.passed && anti.offending.as_deref() == Some(&[3, 4, 5][..]), || format!("antisymmetry: {anti:?}"))?;
    // a base direction picks up a bracket
    let m = validate_spec(&mutate((1, 3, 4, 0.25)), 1e-12).unwrap();
    let block = m.check(Invariant::CentralBlock);
    ensure(!block.passed && block.offending.as_deref() == Some(&[2, 4, 5][..]), || {
        format!("central block: {block:?}")
    })?;
    within(start.elapsed(), 1.0)?;
    Ok("su2(n), u1_su2(n) pass at 1e-12; mutations located at (3,4,5) and (2,4,5)".into())
}

// 3 ------------------------------------------------------------------------

fn levi_civita_symbol(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `-(1/8) ε_αβγ ε_βαε (k⁻¹)^γε` summed term by term.
fn lambda_oracle(kinv: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for g in 0..3 {
                for e in 0..3 {
                    s += levi_civita_symbol(a, b, g) * levi_civita_symbol(b, a, e) * kinv[(g, e)];
                }
            }
        }
    }
    -s / 8.0
}

fn cosmological_constant_check() -> Outcome {
    let start = Instant::now();
    let spec = builtin_algebra("su2", &identity(2), &identity(3)).unwrap();
    let lambda = cosmological_constant(&spec).map_err(|e| e.to_string())?;
    let oracle = lambda_oracle(&identity(3));
    ensure((lambda - 0.75).abs() <= 1e-14 && (lambda - oracle).abs() <= 1e-14, || {
        format!("Λ = {lambda}, oracle {oracle}")
    })?;
    for s in [0.5, 2.0, 10.0] {
        let scaled = builtin_algebra("su2", &identity(2), &(identity(3) * s)).unwrap();
        let l = cosmological_constant(&scaled).map_err(|e| e.to_string())?;
        let o = lambda_oracle(&(identity(3) / s));
        ensure((l - lambda / s).abs() <= 1e-14 && (l - o).abs() <= 1e-14, || format!("λ = {s}: Λ = {l}, oracle {o}"))?;
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("Λ = {lambda}, scaling holds for λ ∈ {{0.5, 2, 10}}"))
}

// 4 ------------------------------------------------------------------------

fn levi_civita_contract() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut metric, mut torsion) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let n = 2 + i % 3;
        let cf = CoframeField::from_text(&samples::random_coframe_text(n, &mut rng), identity(n), &BTreeMap::new())
            .map_err(|e| e.to_string())?;
        let spec = builtin_algebra("abelian", &identity(n), &identity(0)).unwrap();
        let fields = Fields::new(cf, GaugeField::zero(0, n)).unwrap();
        let p = samples::random_points(n, 1, &mut rng).remove(0);
        let g = geometry_at(&fields, &spec, &p, "analytic", &SchemeOptions::default()).map_err(|e| e.to_string())?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let low = |x: usize, y: usize| (0..n).map(|z| g.b[(x, z)] * g.gamma[[z, y, c]]).sum::<f64>();
                    metric = metric.max((low(a, b) + low(b, a)).abs());
                    let t = g.anholonomy[[a, b, c]] - (g.gamma[[a, b, c]] - g.gamma[[a, c, b]]);
                    torsion = torsion.max(t.abs());
                }
            }
        }
    }
    ensure(metric <= 1e-10 && torsion <= 1e-10, || format!("metricity {metric:e}, torsion {torsion:e}"))?;
    let sphere = CoframeField::from_text(&samples::sphere_text(), identity(2), &BTreeMap::new()).unwrap();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let p = [0.15 + 0.14 * i as f64, -1.0 + 0.3 * i as f64];
        let k = base_curvature(&sphere, &p).map_err(|e| e.to_string())?;
        worst = worst.max((k.scalar - 2.0).abs());
    }
    ensure(worst <= 1e-8, || format!("sphere |R - 2| = {worst:e}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!("metricity {metric:e}, torsion {torsion:e}, sphere |R - 2| {worst:e}"))
}

// 5 ------------------------------------------------------------------------

fn central_cross_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut exact, mut fd) = (0.0f64, 0.0f64);
    for i in 0..25 {
        let n = 2 + i % 3;
        let (name, r) = if i % 2 == 0 { ("su2", 3) } else { ("abelian", 1) };
        let spec = builtin_algebra(name, &identity(n), &identity(r)).unwrap();
        let f = samples::random_fields(&spec, &mut rng).map_err(|e| e.to_string())?;
        let p = samples::random_points(n, 1, &mut rng).remove(0);
        let ga = geometry_at(&f, &spec, &p, "analytic", &SchemeOptions::default()).map_err(|e| e.to_string())?;
        let gf = geometry_at(&f, &spec, &p, "fd4", &SchemeOptions::default()).map_err(|e| e.to_string())?;
        let closed = route("closed-form").unwrap().blocks(&ga, &spec).map_err(|e| e.to_string())?;
        let direct = route("direct").unwrap().blocks(&ga, &spec).map_err(|e| e.to_string())?;
        let direct_fd = route("direct").unwrap().blocks(&gf, &spec).map_err(|e| e.to_string())?;
        exact = exact.max(direct.max_difference(&closed));
        fd = fd.max(direct_fd.max_difference(&closed));
    }
    ensure(exact <= 1e-6, || format!("analytic difference {exact:e}"))?;
    ensure(fd <= 1e-3, || format!("finite-difference difference {fd:e}"))?;
    within(start.elapsed(), 120.0)?;
    Ok(format!("analytic {exact:e}, fd4 {fd:e}"))
}

// 6 ------------------------------------------------------------------------

fn flat(spec: &LieAlgebraSpec) -> Fields {
    Fields::new(CoframeField::identity(spec.b()).unwrap(), GaugeField::zero(spec.r(), spec.n())).unwrap()
}

fn eym_sanity() -> Outcome {
    let start = Instant::now();
    let ab = builtin_algebra("abelian", &identity(3), &identity(2)).unwrap();
    let g = geometry_at(&flat(&ab), &ab, &[0.1, 0.2, 0.3], "analytic", &SchemeOptions::default()).unwrap();
    let res = eym_residuals(&g, &ab).map_err(|e| e.to_string())?;
    ensure(res.einstein_norm <= 1e-12 && res.ym_norm <= 1e-12, || {
        format!("abelian norms {:e}, {:e}", res.einstein_norm, res.ym_norm)
    })?;
    let su2 = builtin_algebra("su2", &identity(3), &identity(3)).unwrap();
    let lambda = cosmological_constant(&su2).unwrap();
    let g = geometry_at(&flat(&su2), &su2, &[0.1, 0.2, 0.3], "analytic", &SchemeOptions::default()).unwrap();
    let res = eym_residuals(&g, &su2).map_err(|e| e.to_string())?;
    let expected = identity(3) * -lambda;
    let dev = (&res.einstein_block - &expected).amax();
    ensure(dev <= 1e-10, || format!("su2 einstein block deviates from -Λδ by {dev:e}"))?;
    ensure(res.ym_norm <= 1e-12, || format!("su2 ym norm {:e}", res.ym_norm))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("abelian norms 0, su2 einstein block = -Λδ with Λ = {lambda} (deviation {dev:e})"))
}

// 7 ------------------------------------------------------------------------

fn gauge_covariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    for n in 2..=4 {
        let spec = builtin_algebra("su2", &identity(n), &identity(3)).unwrap();
        let rep = builtin_rep("su2_as_so3", &spec).map_err(|e| e.to_string())?;
        for _ in 0..2 {
            let f = samples::random_fields(&spec, &mut rng).map_err(|e| e.to_string())?;
            let p = samples::random_points(n, 1, &mut rng).remove(0);
            let g = geometry_at(&f, &spec, &p, "analytic", &SchemeOptions::default()).map_err(|e| e.to_string())?;
            // g(t) = g0 exp(t ξ)
            let g0 = rep.random_element(&mut rng);
            let xi = [0.8, -1.1, 0.4];
            for k in 0..5 {
                let t = 0.5 * k as f64;
                let el = g0.mul(&rep.exp(&xi.map(|x| x * t)));
                let res = verify_gauge_covariance(&g, &el, FiberDependence::Chart).map_err(|e| e.to_string())?;
                worst = worst.max(res);
            }
        }
    }
    ensure(worst <= 1e-5, || format!("covariance residual {worst:e}"))?;
    let spec = builtin_algebra("su2", &identity(2), &(identity(3) * 1.7)).unwrap();
    let rep = builtin_rep("su2_as_so3", &spec).unwrap();
    let mut metric = 0.0f64;
    for _ in 0..100 {
        let s = adjoint_of(&rep.random_element(&mut rng));
        metric = metric.max((s.transpose() * spec.h() * &s - spec.h()).amax());
    }
    ensure(metric <= 1e-8, || format!("Sᵀ h S - h = {metric:e}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!("covariance {worst:e}, metric preservation {metric:e}"))
}

// 8 ------------------------------------------------------------------------

fn path_lifting() -> Outcome {
    let start = Instant::now();
    let spec = builtin_algebra("su2", &identity(2), &identity(3)).unwrap();
    let rep = builtin_rep("su2_as_so3", &spec).unwrap();
    let analytic = |texts: &[&str]| {
        let texts: Vec<String> = texts.iter().map(|s| s.to_string()).collect();
        VelocitySource::analytic(&texts, &BTreeMap::new()).unwrap()
    };
    let g0 = rep.exp(&[0.1, 0.4, -0.2]).matrix().clone();
    let xi = [0.7, -1.3, 2.1];
    let lift = lift_path(&rep, &PathSpec::new(analytic(&["0.7", "-1.3", "2.1"]), g0.clone(), 1000))
        .map_err(|e| e.to_string())?;
    let exp_err = (lift.last() - &g0 * rep.algebra_element(&xi).exp()).amax();
    ensure(exp_err <= 1e-8, || format!("constant lift vs exp {exp_err:e}"))?;

    let path = PathSpec::new(analytic(&["1 + sin(3*t)", "2*cos(t)", "t^2 - 1"]), g0.clone(), 8);
    let est = convergence_order(&rep, &path).map_err(|e| e.to_string())?;
    let order = est.order.ok_or_else(|| format!("order undetermined: {est:?}"))?;
    ensure(order >= 3.8, || format!("order {order}"))?;

    let forward = PathSpec::new(analytic(&["sin(2*t)", "t", "exp(-t)"]), g0.clone(), 200);
    let there = lift_path(&rep, &forward).map_err(|e| e.to_string())?;
    let back = lift_path(&rep, &forward.reversed(there.last().clone())).map_err(|e| e.to_string())?;
    let ret = (back.last() - &g0).amax();
    ensure(ret <= 1e-6, || format!("return to start {ret:e}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("exp error {exp_err:e}, order {order:.3}, return {ret:e}"))
}

// 9 ------------------------------------------------------------------------

fn sexpr(e: &Expr) -> String {
    let bin = |op: &str, a: &Expr, b: &Expr| format!("({op} {} {})", sexpr(a), sexpr(b));
    match e {
        Expr::Num(v) => format!("{v}"),
        Expr::Var(i) => format!("x{}", i + 1),
        Expr::Param(p) => p.clone(),
        Expr::Neg(a) => format!("(neg {})", sexpr(a)),
        Expr::Add(a, b) => bin("+", a, b),
        Expr::Sub(a, b) => bin("-", a, b),
        Expr::Mul(a, b) => bin("*", a, b),
        Expr::Div(a, b) => bin("/", a, b),
        Expr::Pow(a, b) => bin("^", a, b),
        Expr::Call(f, a) => format!("({} {})", f.name(), sexpr(a)),
    }
}

fn derivative_gap(expr: &Expr) -> Result<f64, String> {
    let dim = expr.arity().max(1);
    let params: BTreeMap<String, f64> = expr.params().into_iter().map(|p| (p, 1.3)).collect();
    let f = FieldProvider::new(expr, dim, &params).map_err(|e| e.to_string())?;
    let p: Vec<f64> = (0..dim).map(|i| 1.1 + 0.13 * i as f64).collect();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for i in 0..dim {
        let shifted = |s: f64| {
            let mut q = p.clone();
            q[i] += s;
            q
        };
        let fd = (f.evaluate(&shifted(h)).unwrap() - f.evaluate(&shifted(-h)).unwrap()) / (2.0 * h);
        worst = worst.max((f.partial(i, &p).map_err(|e| e.to_string())? - fd).abs());
        for j in 0..dim {
            let d = |s: f64| f.partial(j, &shifted(s)).unwrap();
            let fd2 = (d(-2.0 * h) - 8.0 * d(-h) + 8.0 * d(h) - d(2.0 * h)) / (12.0 * h);
            worst = worst.max((f.second_partial(j, i, &p).map_err(|e| e.to_string())? - fd2).abs());
        }
    }
    Ok(worst)
}

fn parser_corpus() -> Outcome {
    let start = Instant::now();
    let text = include_str!("data/parser_corpus.tsv");
    let (mut valid, mut invalid, mut worst) = (0, 0, 0.0f64);
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        let (kind, src, expected) = (cols[0], cols[1], cols[2]);
        match kind {
            "ok" => {
                let e = parse(src).map_err(|err| format!("`{src}`: {err}"))?;
                let got = sexpr(&e);
                ensure(got == expected, || format!("`{src}` parsed as {got}, expected {expected}"))?;
                let gap = derivative_gap(&e).map_err(|err| format!("`{src}`: {err}"))?;
                ensure(gap <= 1e-6, || format!("`{src}`: symbolic vs FD gap {gap:e}"))?;
                worst = worst.max(gap);
                valid += 1;
            }
            "err" => {
                let (offset, what) = expected.split_once(' ').unwrap();
                let offset: usize = offset.parse().unwrap();
                let err = parse(src).err().ok_or_else(|| format!("`{src}` should not parse"))?;
                let kind_ok = match what {
                    "syntax" => matches!(err, ParseError::Syntax { .. }),
                    "unknown" => matches!(err, ParseError::UnknownIdentifier { .. }),
                    _ => false,
                };
                ensure(kind_ok && err.offset() == offset, || format!("`{src}`: got {err:?}, expected {expected}"))?;
                invalid += 1;
            }
            other => return Err(format!("bad corpus line kind `{other}`")),
        }
    }
    ensure(valid + invalid == 100, || format!("corpus has {} cases", valid + invalid))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("{valid} valid, {invalid} invalid, derivative gap {worst:e}"))
}

// 10 -----------------------------------------------------------------------

fn determinism() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems/su2_standard.json");
    let problem = ProblemSpec::load(&path).map_err(|e| e.to_string())?;
    let run = |jobs| {
        let ov = Overrides { jobs: Some(jobs), ..Default::default() };
        cmd_curvature(&problem, &ov).map(|r| r.normalized().to_json()).map_err(|e| e.to_string())
    };
    let (one, eight) = (run(1)?, run(8)?);
    ensure(one == eight, || "reports differ between 1 and 8 jobs".into())?;
    Ok(format!("identical normalized reports ({} bytes)", one.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("identity suite", identity_suite),
        ("hypothesis validation", hypothesis_validation),
        ("cosmological constant", cosmological_constant_check),
        ("Levi-Civita contract", levi_civita_contract),
        ("central cross-check", central_cross_check),
        ("EYM residual sanity", eym_sanity),
        ("gauge covariance", gauge_covariance),
        ("path lifting", path_lifting),
        ("parser corpus", parser_corpus),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{t:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{t:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
