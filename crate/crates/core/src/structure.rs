//! Cartan structure equations on coefficient tables.
//!
//! A connection is stored as `ω[A][C][D] = ω^A_{C,D}` with `ω^A_C = ω^A_{C,D} e^D`,
//! frame derivatives as `dω[A][C][D][E] = E_E ω^A_{C,D}`, and the coframe
//! torsion-free data as `T[D][E][F]` with `de^D = ½ T^D_{EF} e^E∧e^F`.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};

/// `Ω^A_{C;EF}` of `Ω = dω + ω∧ω`, with `Ω^A_C = ½ Ω^A_{C;EF} e^E∧e^F`.
pub fn curvature(omega: &Array3<f64>, domega: &Array4<f64>, torsion: &Array3<f64>) -> Array4<f64> {
    let n = omega.shape()[0];
    let mut out = Array4::zeros((n, n, n, n));
    for a in 0..n {
        for c in 0..n {
            for e in 0..n {
                for f in e + 1..n {
                    let mut s = domega[[a, c, f, e]] - domega[[a, c, e, f]];
                    for d in 0..n {
                        s += omega[[a, c, d]] * torsion[[d, e, f]];
                    }
                    for b in 0..n {
                        s += omega[[a, b, e]] * omega[[b, c, f]] - omega[[a, b, f]] * omega[[b, c, e]];
                    }
                    out[[a, c, e, f]] = s;
                    out[[a, c, f, e]] = -s;
                }
            }
        }
    }
    out
}

/// `Ric^A_C = Ω^{AB}_{CB}`, raising the second index with `hinv`.
pub fn ricci(curv: &Array4<f64>, hinv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = curv.shape()[0];
    DMatrix::from_fn(n, n, |a, c| {
        let mut s = 0.0;
        for b1 in 0..n {
            for b in 0..n {
                let w = hinv[(b1, b)];
                if w != 0.0 {
                    s += curv[[a, b1, c, b]] * w;
                }
            }
        }
        s
    })
}

/// `Ein^A_C = Ric^A_C − ½ R δ^A_C`.
pub fn einstein(ric: &DMatrix<f64>) -> DMatrix<f64> {
    let n = ric.nrows();
    ric - DMatrix::identity(n, n) * (0.5 * ric.trace())
}

/// Largest `|Ω^{AB}_{;EF} + Ω^{BA}_{;EF}|` after raising with `hinv`.
pub fn antisymmetry_residual(curv: &Array4<f64>, hinv: &DMatrix<f64>) -> f64 {
    let n = curv.shape()[0];
    let mut worst = 0.0f64;
    for e in 0..n {
        for f in 0..n {
            let m = DMatrix::from_fn(n, n, |a, c| curv[[a, c, e, f]]) * hinv;
            worst = worst.max((&m + m.transpose()).amax());
        }
    }
    worst
}
