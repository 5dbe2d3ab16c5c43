use crate::cx::Cx;
use num_complex::Complex64;

/// Polynomial with complex coefficients, stored low degree first.
///
/// Construction trims exact trailing zeros, so `coeffs().last()` is the
/// (nonzero) leading coefficient whenever the polynomial is nonzero. The
/// zero polynomial is the empty coefficient vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    c: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Poly {
        while coeffs.last().is_some_and(|c| c.norm_sqr() == 0.0) {
            coeffs.pop();
        }
        Poly { c: coeffs }
    }

    pub fn zero() -> Poly {
        Poly { c: Vec::new() }
    }

    pub fn constant(a: Complex64) -> Poly {
        Poly::new(vec![a])
    }

    /// Builds from real coefficients, low degree first.
    pub fn from_real(coeffs: &[f64]) -> Poly {
        Poly::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Monic-up-to-`leading` polynomial with the given roots.
    pub fn from_roots(leading: Complex64, roots: &[Complex64]) -> Poly {
        let mut c = vec![leading];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &a) in c.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= r * a;
            }
            c = next;
        }
        Poly::new(c)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        *self.c.last().unwrap_or(&Complex64::new(0.0, 0.0))
    }

    /// Largest coefficient modulus (0 for the zero polynomial).
    pub fn max_coeff(&self) -> f64 {
        self.c.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation at a finite point.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.c.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Evaluation on the sphere: degree ≥ 1 sends `∞ ↦ ∞`.
    pub fn eval_cx(&self, z: Cx) -> Cx {
        if z.is_inf() {
            return if self.degree() >= 1 {
                Cx::INF
            } else {
                Cx::from(self.eval(Complex64::new(0.0, 0.0)))
            };
        }
        Cx::from(self.eval(z.fin()))
    }

    pub fn derivative(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.c[1..]
                .iter()
                .enumerate()
                .map(|(k, &c)| c * (k as f64 + 1.0))
                .collect(),
        )
    }

    pub fn scale(&self, a: Complex64) -> Poly {
        Poly::new(self.c.iter().map(|&c| c * a).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.c.len().max(other.c.len());
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for (k, slot) in c.iter_mut().enumerate() {
            if k < self.c.len() {
                *slot += self.c[k];
            }
            if k < other.c.len() {
                *slot += other.c[k];
            }
        }
        Poly::new(c)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![Complex64::new(0.0, 0.0); self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            for (j, &b) in other.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }

    /// Synthetic division by `(z - r)`: returns the quotient, discarding the
    /// remainder. Used to deflate a known root (e.g. the trivial diagonal
    /// root of a correspondence polynomial) before root finding.
    pub fn deflate(&self, r: Complex64) -> Poly {
        if self.c.len() <= 1 {
            return Poly::zero();
        }
        let mut q = vec![Complex64::new(0.0, 0.0); self.c.len() - 1];
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (0..self.c.len() - 1).rev() {
            acc = self.c[k + 1] + acc * r;
            q[k] = acc;
        }
        Poly::new(q)
    }

    /// Coefficient-wise conjugate `p̄`, so that `p̄(z) = conj(p(conj z))`.
    /// This is the polynomial companion of anti-holomorphic composition.
    pub fn conj_coeffs(&self) -> Poly {
        Poly::new(self.c.iter().map(|c| c.conj()).collect())
    }

    /// `p(z) − w`, the pullback polynomial whose roots are preimages of `w`.
    pub fn minus_const(&self, w: Complex64) -> Poly {
        let mut c = self.c.clone();
        if c.is_empty() {
            c.push(-w);
        } else {
            c[0] -= w;
        }
        Poly::new(c)
    }
}
