//! Reproducible field configurations: named reference charts and random
//! smooth coframes and potentials.

use std::fmt::Write;

use nalgebra::DMatrix;
use rand::Rng;

use crate::basegeo::{CoframeField, Fields, GaugeField, GeometryError};
use crate::liealg::LieAlgebraSpec;

fn coefficient<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    (rng.gen_range(-1.0..1.0) * scale * 1000.0).round() / 1000.0
}

/// A smooth term bounded by `scale` in absolute value.
fn bounded_term<R: Rng>(rng: &mut R, n: usize, scale: f64) -> String {
    let mut arg = String::new();
    for mu in 0..n {
        let w = coefficient(rng, 1.0);
        if w != 0.0 {
            let _ = write!(arg, "{}{w}*x{}", if arg.is_empty() { "" } else { " + " }, mu + 1);
        }
    }
    if arg.is_empty() {
        arg.push('0');
    }
    let phase = coefficient(rng, 1.5);
    let amp = (rng.gen_range(0.2..1.0) * scale * 1000.0).round() / 1000.0;
    match rng.gen_range(0..3) {
        0 => format!("{amp}*sin({arg} + {phase})"),
        1 => format!("{amp}*cos({arg} + {phase})"),
        _ => format!("{amp}*sin({arg})*cos({phase}*x{})", rng.gen_range(1..=n)),
    }
}

/// Coframe entries `e^a_μ` that stay diagonally dominant everywhere: the
/// diagonal is at least `1.2` and each row's off-diagonal sum is below `0.9`.
pub fn random_coframe_text<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<String>> {
    let off = 0.8 / (n as f64 - 1.0).max(1.0);
    (0..n)
        .map(|a| {
            (0..n)
                .map(|mu| {
                    if a == mu {
                        format!("1.5 + {}", bounded_term(rng, n, 0.3))
                    } else if rng.gen_bool(0.6) {
                        bounded_term(rng, n, off)
                    } else {
                        "0".to_string()
                    }
                })
                .collect()
        })
        .collect()
}

/// Potentials `A^α_μ` mixing bounded trigonometric terms with small polynomials.
pub fn random_gauge_text<R: Rng>(r: usize, n: usize, rng: &mut R) -> Vec<Vec<String>> {
    (0..r)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let mut s = bounded_term(rng, n, 0.8);
                    if rng.gen_bool(0.4) {
                        let c = coefficient(rng, 0.5);
                        let _ = write!(s, " + {c}*x{}*x{}", rng.gen_range(1..=n), rng.gen_range(1..=n));
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// Random points in the cube `[-1, 1]^n`.
pub fn random_points<R: Rng>(n: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Random coframe and potential for `spec`.
pub fn random_fields<R: Rng>(spec: &LieAlgebraSpec, rng: &mut R) -> Result<Fields, GeometryError> {
    let n = spec.n();
    let params = Default::default();
    let coframe = CoframeField::from_text(&random_coframe_text(n, rng), spec.b(), &params)?;
    let gauge = GaugeField::from_text(&random_gauge_text(spec.r(), n, rng), n, &params)?;
    Fields::new(coframe, gauge)
}

/// Unit 2-sphere: `e¹ = dx1`, `e² = sin(x1) dx2`.
pub fn sphere_text() -> Vec<Vec<String>> {
    vec![vec!["1".into(), "0".into()], vec!["0".into(), "sin(x1)".into()]]
}

/// Flat `R²` times the unit 2-sphere in coordinates `(x1, x2, x3, x4)`.
pub fn flat_times_sphere_text() -> Vec<Vec<String>> {
    let mut rows = vec![vec!["0".to_string(); 4]; 4];
    rows[0][0] = "1".into();
    rows[1][1] = "1".into();
    rows[2][2] = "1".into();
    rows[3][3] = "sin(x3)".into();
    rows
}

pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}
