use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A point on the Riemann sphere: a finite complex number or the single
/// point at infinity.
///
/// Arithmetic follows the sphere conventions `1/0 = ∞`, `1/∞ = 0`,
/// `∞ ± finite = ∞`, `∞ · z = ∞`. Any non-finite coordinate (including NaN
/// produced by overflow) collapses to the one point at infinity, and
/// infinity compares equal to itself. Indeterminate forms (`∞ − ∞`, `0 · ∞`)
/// also yield infinity; callers that care (rational evaluation at a pole of
/// both numerator and denominator) resolve them before dividing.
#[derive(Clone, Copy)]
pub struct Cx(Complex64);

impl Cx {
    pub const ZERO: Cx = Cx(Complex64 { re: 0.0, im: 0.0 });
    pub const ONE: Cx = Cx(Complex64 { re: 1.0, im: 0.0 });
    pub const I: Cx = Cx(Complex64 { re: 0.0, im: 1.0 });
    pub const INF: Cx = Cx(Complex64 {
        re: f64::INFINITY,
        im: f64::INFINITY,
    });

    pub fn new(re: f64, im: f64) -> Cx {
        Cx(Complex64::new(re, im))
    }

    pub fn is_inf(self) -> bool {
        !(self.0.re.is_finite() && self.0.im.is_finite())
    }

    /// The finite value; must not be called on the point at infinity.
    pub fn fin(self) -> Complex64 {
        debug_assert!(!self.is_inf(), "fin() on the point at infinity");
        self.0
    }

    /// The finite value, if this is not the point at infinity.
    pub fn try_fin(self) -> Option<Complex64> {
        if self.is_inf() {
            None
        } else {
            Some(self.0)
        }
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn conj(self) -> Cx {
        if self.is_inf() {
            Cx::INF
        } else {
            Cx(self.0.conj())
        }
    }

    /// `1/z` with the sphere conventions at `0` and `∞`.
    pub fn inv(self) -> Cx {
        if self.is_inf() {
            return Cx::ZERO;
        }
        if self.0.norm_sqr() == 0.0 {
            return Cx::INF;
        }
        Cx(self.0.inv())
    }

    /// Modulus; `+∞` for the point at infinity.
    pub fn norm(self) -> f64 {
        if self.is_inf() {
            f64::INFINITY
        } else {
            self.0.norm()
        }
    }

    pub fn arg(self) -> f64 {
        self.0.arg()
    }

    /// Chordal distance on the sphere, in `[0, 2]`. Continuous across `∞`,
    /// which makes it the right metric for landing detection and clustering.
    pub fn chordal(self, other: Cx) -> f64 {
        match (self.is_inf(), other.is_inf()) {
            (true, true) => 0.0,
            (true, false) => 2.0 / (1.0 + other.0.norm_sqr()).sqrt(),
            (false, true) => 2.0 / (1.0 + self.0.norm_sqr()).sqrt(),
            (false, false) => {
                let num = 2.0 * (self.0 - other.0).norm();
                num / ((1.0 + self.0.norm_sqr()) * (1.0 + other.0.norm_sqr())).sqrt()
            }
        }
    }

    /// Euclidean distance, `+∞` if exactly one argument is infinite.
    pub fn dist(self, other: Cx) -> f64 {
        match (self.is_inf(), other.is_inf()) {
            (true, true) => 0.0,
            (true, false) | (false, true) => f64::INFINITY,
            (false, false) => (self.0 - other.0).norm(),
        }
    }
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Cx {
        Cx(z)
    }
}

impl From<f64> for Cx {
    fn from(x: f64) -> Cx {
        Cx(Complex64::new(x, 0.0))
    }
}

impl PartialEq for Cx {
    fn eq(&self, other: &Cx) -> bool {
        match (self.is_inf(), other.is_inf()) {
            (true, true) => true,
            (false, false) => self.0 == other.0,
            _ => false,
        }
    }
}

impl Add for Cx {
    type Output = Cx;
    fn add(self, rhs: Cx) -> Cx {
        if self.is_inf() || rhs.is_inf() {
            Cx::INF
        } else {
            Cx(self.0 + rhs.0)
        }
    }
}

impl Sub for Cx {
    type Output = Cx;
    fn sub(self, rhs: Cx) -> Cx {
        if self.is_inf() || rhs.is_inf() {
            Cx::INF
        } else {
            Cx(self.0 - rhs.0)
        }
    }
}

impl Mul for Cx {
    type Output = Cx;
    fn mul(self, rhs: Cx) -> Cx {
        if self.is_inf() || rhs.is_inf() {
            Cx::INF
        } else {
            Cx(self.0 * rhs.0)
        }
    }
}

impl Div for Cx {
    type Output = Cx;
    fn div(self, rhs: Cx) -> Cx {
        self * rhs.inv()
    }
}

impl Neg for Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        if self.is_inf() {
            Cx::INF
        } else {
            Cx(-self.0)
        }
    }
}

impl fmt::Debug for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "∞")
        } else {
            write!(f, "{}+{}i", self.0.re, self.0.im)
        }
    }
}

impl fmt::Display for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{:.17e} {:.17e}", self.0.re, self.0.im)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_swaps_zero_and_infinity() {
        assert_eq!(Cx::ZERO.inv(), Cx::INF);
        assert_eq!(Cx::INF.inv(), Cx::ZERO);
        assert_eq!(Cx::new(0.0, 2.0).inv(), Cx::new(0.0, -0.5));
    }

    #[test]
    fn infinity_is_a_single_point() {
        let a = Cx::INF;
        let b = Cx::new(f64::NAN, 1.0); // overflow debris counts as ∞
        assert!(b.is_inf());
        assert_eq!(a, b);
        assert_eq!(a + Cx::ONE, Cx::INF);
        assert_eq!(Cx::ONE / Cx::ZERO, Cx::INF);
    }

    #[test]
    fn chordal_metric_is_continuous_at_infinity() {
        let far = Cx::new(1e9, 0.0);
        assert!(far.chordal(Cx::INF) < 3e-9);
        assert!((Cx::ZERO.chordal(Cx::INF) - 2.0).abs() < 1e-15);
        // Chordal distance between 0 and 1 equals 2/sqrt(2) = sqrt(2).
        assert!((Cx::ZERO.chordal(Cx::ONE) - 2.0_f64.sqrt()).abs() < 1e-15);
    }
}
