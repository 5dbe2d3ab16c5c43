//! Hyperbolic geometry of the unit disk: generalized circles, reflections,
//! (anti-)Möbius maps, and the piecewise-defined circle coverings built from
//! them (Nielsen maps, anti-Farey maps, factor Bowen-Series maps).

mod antifarey;
mod bowen_series;
mod nielsen;

pub use antifarey::AntiFareyMap;
pub use bowen_series::{FactorBowenSeries, FundamentalDomain, SidePairing};
pub use nielsen::{minkowski_conjugacy, minkowski_conjugacy_exact, NielsenMap};

use crate::cx::Cx;
use num_complex::Complex64;

/// A circle or a line in the plane (a "generalized circle" on the sphere).
#[derive(Clone, Copy, Debug)]
pub enum GenCircle {
    Circle { center: Complex64, radius: f64 },
    /// Line through `point` with unit direction `dir`.
    Line { point: Complex64, dir: Complex64 },
}

impl GenCircle {
    /// The unique generalized circle through two distinct points of the unit
    /// circle that meets the unit circle orthogonally. For antipodal points
    /// this is the diameter line.
    pub fn orthogonal_through(a: Complex64, b: Complex64) -> GenCircle {
        debug_assert!((a.norm() - 1.0).abs() < 1e-9 && (b.norm() - 1.0).abs() < 1e-9);
        // Orthogonality to the unit circle forces |c|² = 1 + r², and passing
        // through a unit point z gives the linear condition 2 Re(c̄ z) = 2,
        // i.e. Re(c)·Re(z) + Im(c)·Im(z) = 1 for both endpoints.
        let det = a.re * b.im - a.im * b.re;
        if det.abs() < 1e-12 {
            // Antipodal (or equal) endpoints: the geodesic is the diameter.
            let dir = a / a.norm();
            return GenCircle::Line {
                point: Complex64::new(0.0, 0.0),
                dir,
            };
        }
        let cre = (b.im - a.im) / det;
        let cim = (a.re - b.re) / det;
        let center = Complex64::new(cre, cim);
        let radius = (center.norm_sqr() - 1.0).max(0.0).sqrt();
        GenCircle::Circle { center, radius }
    }

    /// Inversion in the circle (or mirror reflection in the line); an
    /// orientation-reversing involution of the sphere.
    pub fn reflect(&self, z: Cx) -> Cx {
        match *self {
            GenCircle::Circle { center, radius } => {
                if z.is_inf() {
                    return Cx::from(center);
                }
                let d = z.fin() - center;
                if d.norm_sqr() == 0.0 {
                    return Cx::INF;
                }
                Cx::from(center + radius * radius / d.conj())
            }
            GenCircle::Line { point, dir } => {
                if z.is_inf() {
                    return Cx::INF;
                }
                let rel = (z.fin() - point) / dir;
                Cx::from(point + dir * rel.conj())
            }
        }
    }

    /// Signed side indicator: negative inside the circle (or left of the
    /// line), zero on it. Used for half-plane membership tests.
    pub fn side(&self, z: Complex64) -> f64 {
        match *self {
            GenCircle::Circle { center, radius } => (z - center).norm() - radius,
            GenCircle::Line { point, dir } => ((z - point) / dir).im,
        }
    }
}

/// A Möbius transformation `(az+b)/(cz+d)`, optionally pre-composed with
/// complex conjugation (`anti = true` gives an anti-Möbius map).
#[derive(Clone, Copy, Debug)]
pub struct Moebius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub anti: bool,
}

impl Moebius {
    pub fn identity() -> Moebius {
        Moebius {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
            anti: false,
        }
    }

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64, anti: bool) -> Moebius {
        Moebius { a, b, c, d, anti }
    }

    /// Rotation by `turns` full turns about the origin.
    pub fn rotation(turns: f64) -> Moebius {
        let u = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * turns);
        Moebius::new(
            u,
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            false,
        )
    }

    /// The elliptic involution of the disk with fixed point `p` (|p| < 1):
    /// the hyperbolic half-turn about `p`.
    pub fn half_turn(p: Complex64) -> Moebius {
        let n = 1.0 + p.norm_sqr();
        Moebius::new(
            Complex64::new(-n, 0.0),
            2.0 * p,
            -2.0 * p.conj(),
            Complex64::new(n, 0.0),
            false,
        )
    }

    /// Reflection in a generalized circle, as an anti-Möbius map.
    pub fn from_reflection(c: &GenCircle) -> Moebius {
        match *c {
            GenCircle::Circle { center, radius } => Moebius::new(
                center,
                Complex64::new(radius * radius, 0.0) - center * center.conj(),
                Complex64::new(1.0, 0.0),
                -center.conj(),
                true,
            ),
            GenCircle::Line { point, dir } => {
                // z ↦ p + d·conj((z−p)/d) = d/d̄ · z̄ + p − d/d̄·p̄
                let u = dir / dir.conj();
                Moebius::new(
                    u,
                    point - u * point.conj(),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    true,
                )
            }
        }
    }

    pub fn apply(&self, z: Cx) -> Cx {
        let z = if self.anti { z.conj() } else { z };
        if z.is_inf() {
            return if self.c.norm_sqr() == 0.0 {
                Cx::INF
            } else {
                Cx::from(self.a / self.c)
            };
        }
        let zf = z.fin();
        let den = self.c * zf + self.d;
        if den.norm_sqr() == 0.0 {
            return Cx::INF;
        }
        Cx::from((self.a * zf + self.b) / den)
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &Moebius) -> Moebius {
        // If self conjugates first, it sees the conjugate of other's matrix.
        let (oa, ob, oc, od) = if self.anti {
            (
                other.a.conj(),
                other.b.conj(),
                other.c.conj(),
                other.d.conj(),
            )
        } else {
            (other.a, other.b, other.c, other.d)
        };
        Moebius::new(
            self.a * oa + self.b * oc,
            self.a * ob + self.b * od,
            self.c * oa + self.d * oc,
            self.c * ob + self.d * od,
            self.anti ^ other.anti,
        )
    }

    pub fn inverse(&self) -> Moebius {
        if !self.anti {
            Moebius::new(self.d, -self.b, -self.c, self.a, false)
        } else {
            // (A ∘ conj)⁻¹ = conj ∘ A⁻¹ = (conj A⁻¹) ∘ conj.
            Moebius::new(
                self.d.conj(),
                -self.b.conj(),
                -self.c.conj(),
                self.a.conj(),
                true,
            )
        }
    }

    /// Rescales the matrix to determinant 1 (keeps entries well-sized under
    /// long compositions).
    pub fn normalized(&self) -> Moebius {
        let det = self.a * self.d - self.b * self.c;
        if det.norm_sqr() == 0.0 {
            return *self;
        }
        let s = det.sqrt().inv();
        Moebius::new(self.a * s, self.b * s, self.c * s, self.d * s, self.anti)
    }

    /// Whether the map preserves the unit disk, judged on samples.
    pub fn preserves_disk(&self, tol: f64) -> bool {
        for k in 0..8 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
            let z = Cx::from(Complex64::from_polar(1.0, th));
            if (self.apply(z).norm() - 1.0).abs() > tol {
                return false;
            }
        }
        self.apply(Cx::ZERO).norm() < 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orthogonal_circle_through_unit_points() {
        let a = Complex64::from_polar(1.0, 0.3);
        let b = Complex64::from_polar(1.0, 1.9);
        match GenCircle::orthogonal_through(a, b) {
            GenCircle::Circle { center, radius } => {
                assert!(((a - center).norm() - radius).abs() < 1e-12);
                assert!(((b - center).norm() - radius).abs() < 1e-12);
                // Orthogonality: |c|² = 1 + r².
                assert!((center.norm_sqr() - 1.0 - radius * radius).abs() < 1e-12);
            }
            _ => panic!("expected a circle"),
        }
        // Antipodal points give the diameter line.
        match GenCircle::orthogonal_through(c(1.0, 0.0), c(-1.0, 0.0)) {
            GenCircle::Line { .. } => {}
            _ => panic!("expected a line"),
        }
    }

    #[test]
    fn reflection_is_an_involution_fixing_the_circle() {
        let circle = GenCircle::orthogonal_through(
            Complex64::from_polar(1.0, 0.5),
            Complex64::from_polar(1.0, 2.5),
        );
        for &z in &[c(0.3, 0.1), c(-0.4, 0.7), c(2.0, -1.0)] {
            let z = Cx::from(z);
            let twice = circle.reflect(circle.reflect(z));
            assert!(twice.dist(z) < 1e-12);
        }
        if let GenCircle::Circle { center, radius } = circle {
            let on = center + radius * Complex64::from_polar(1.0, 2.2);
            assert!(circle.reflect(Cx::from(on)).dist(Cx::from(on)) < 1e-12);
        }
        // Reflection swaps center and infinity.
        if let GenCircle::Circle { center, .. } = circle {
            assert_eq!(circle.reflect(Cx::INF), Cx::from(center));
            assert_eq!(circle.reflect(Cx::from(center)), Cx::INF);
        }
    }

    #[test]
    fn reflection_as_anti_moebius_agrees() {
        let circle = GenCircle::orthogonal_through(
            Complex64::from_polar(1.0, -0.7),
            Complex64::from_polar(1.0, 0.9),
        );
        let m = Moebius::from_reflection(&circle);
        assert!(m.anti);
        for &z in &[c(0.2, 0.4), c(-0.8, 0.1), c(1.5, 2.0)] {
            let z = Cx::from(z);
            assert!(m.apply(z).dist(circle.reflect(z)) < 1e-12);
        }
    }

    #[test]
    fn compose_and_inverse_round_trip() {
        let r = Moebius::rotation(0.37);
        let circle = GenCircle::orthogonal_through(
            Complex64::from_polar(1.0, 1.1),
            Complex64::from_polar(1.0, 2.4),
        );
        let refl = Moebius::from_reflection(&circle);
        let m = r.compose(&refl); // anti ∘ holo parity
        assert!(m.anti);
        let id = m.compose(&m.inverse());
        for &z in &[c(0.1, 0.2), c(-0.5, 0.4)] {
            let z = Cx::from(z);
            assert!(id.apply(z).dist(z) < 1e-10);
            // m⁻¹(m(z)) = z as applied maps.
            assert!(m.inverse().apply(m.apply(z)).dist(z) < 1e-10);
        }
    }

    #[test]
    fn half_turn_fixes_its_center_and_squares_to_identity() {
        let p = c(0.3, -0.4);
        let h = Moebius::half_turn(p);
        assert!(h.apply(Cx::from(p)).dist(Cx::from(p)) < 1e-12);
        assert!(h.preserves_disk(1e-9));
        let sq = h.compose(&h);
        for &z in &[c(0.6, 0.1), c(-0.2, -0.7)] {
            let z = Cx::from(z);
            assert!(sq.apply(z).dist(z) < 1e-12);
        }
    }
}
