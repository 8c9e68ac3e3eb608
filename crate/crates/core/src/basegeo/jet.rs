//! Scalars carrying a first-order Taylor expansion in the chart variables.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest chart dimension a [`Jet`] can differentiate along.
pub const MAX_CHART_DIM: usize = 8;

/// Arithmetic shared by plain values and jets.
pub trait Scalar:
    Copy + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;

    fn scale(self, s: f64) -> Self {
        self * Self::cst(s)
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Value plus gradient with respect to the chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; MAX_CHART_DIM],
}

impl Jet {
    pub fn new(v: f64, grad: &[f64]) -> Self {
        let mut d = [0.0; MAX_CHART_DIM];
        d[..grad.len()].copy_from_slice(grad);
        Jet { v, d }
    }
}

impl Scalar for Jet {
    fn cst(v: f64) -> Self {
        Jet { v, d: [0.0; MAX_CHART_DIM] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn scale(self, s: f64) -> Self {
        Jet { v: self.v * s, d: self.d.map(|x| x * s) }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x += y;
        }
        Jet { v: self.v + o.v, d }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x -= y;
        }
        Jet { v: self.v - o.v, d }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut d = [0.0; MAX_CHART_DIM];
        for (i, x) in d.iter_mut().enumerate() {
            *x = self.d[i] * o.v + self.v * o.d[i];
        }
        Jet { v: self.v * o.v, d }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut d = [0.0; MAX_CHART_DIM];
        for (i, x) in d.iter_mut().enumerate() {
            *x = (self.d[i] - v * o.d[i]) * inv;
        }
        Jet { v, d }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { v: -self.v, d: self.d.map(|x| -x) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotient_rule() {
        let x = Jet::new(2.0, &[1.0, 0.0]);
        let y = Jet::new(3.0, &[0.0, 1.0]);
        let q = (x * x) / y;
        assert_eq!(q.v, 4.0 / 3.0);
        assert!((q.d[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((q.d[1] + 4.0 / 9.0).abs() < 1e-15);
        assert_eq!((-q).d[1], -q.d[1]);
    }
}
