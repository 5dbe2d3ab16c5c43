use super::nielsen::NielsenMap;
use super::GenCircle;
use crate::cx::Cx;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// The degree-`d` anti-Farey map: the factor of the Nielsen map under the
/// rotation by `1/(d+1)` of a turn, transported by `ξ(z) = z^(d+1)`.
///
/// Its domain is `𝔻̄` minus the interior of the ideal monogon `ξ(Π)`. The
/// map has a single parabolic fixed point at `1`, and one critical point of
/// multiplicity `d` at `ξ(ρ₁(0))` with critical value `0`.
#[derive(Clone, Debug)]
pub struct AntiFareyMap {
    nielsen: NielsenMap,
}

impl AntiFareyMap {
    pub fn new(d: usize) -> Result<AntiFareyMap> {
        Ok(AntiFareyMap {
            nielsen: NielsenMap::new(d)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.nielsen.degree()
    }

    pub fn nielsen(&self) -> &NielsenMap {
        &self.nielsen
    }

    /// Principal lift into the fundamental cone `arg ∈ [0, 2π/(d+1))` of the
    /// covering `ξ(z) = z^(d+1)`.
    fn lift(&self, z: Complex64) -> Complex64 {
        let n = (self.degree() + 1) as f64;
        let r = z.norm().powf(1.0 / n);
        let th = z.arg().rem_euclid(TAU) / n;
        Complex64::from_polar(r, th)
    }

    /// One application of the map; errors on points of the open monogon.
    pub fn eval(&self, z: Cx) -> Result<Cx> {
        let zf = z.try_fin().ok_or(Error::OutsideDomain)?;
        if zf.norm() > 1.0 + 1e-9 {
            return Err(Error::OutsideDomain);
        }
        if zf.norm_sqr() == 0.0 {
            return Err(Error::OutsideDomain); // 0 = ξ(0) is interior to the monogon
        }
        let w = self.lift(zf);
        let img = self.nielsen.eval(Cx::from(w))?;
        let n = (self.degree() + 1) as i32;
        Ok(Cx::from(img.fin().powi(n)))
    }

    /// The unique critical point `ξ(ρ₁(0))`, of local degree `d+1`.
    pub fn critical_point(&self) -> Complex64 {
        let c = match *self.nielsen.side_circle(1) {
            GenCircle::Circle { center, .. } => center,
            GenCircle::Line { .. } => unreachable!("sides are circles for d ≥ 2"),
        };
        // ρ₁(0) = c(|c|²−r²)/|c|² = c/|c|² = 1/c̄ since |c|² − r² = 1.
        let rho0 = c.conj().inv();
        rho0.powi((self.degree() + 1) as i32)
    }

    /// The boundary restriction in angle coordinates.
    pub fn circle_angle(&self, theta: f64) -> f64 {
        let z = Cx::from(Complex64::from_polar(1.0, TAU * theta.rem_euclid(1.0)));
        let w = self.eval(z).expect("unit circle is inside the domain");
        (w.arg() / TAU).rem_euclid(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixes_one() {
        for d in [2usize, 3, 4] {
            let f = AntiFareyMap::new(d).unwrap();
            let img = f.eval(Cx::ONE).unwrap();
            assert!(img.dist(Cx::ONE) < 1e-9, "F_{d}(1) = {img:?}");
        }
    }

    #[test]
    fn critical_value_is_zero() {
        for d in [2usize, 3] {
            let f = AntiFareyMap::new(d).unwrap();
            let cp = f.critical_point();
            assert!(cp.norm() < 1.0);
            let v = f.eval(Cx::from(cp)).unwrap();
            assert!(v.norm() < 1e-12, "critical value {v:?}");
        }
    }

    #[test]
    fn semiconjugate_to_nielsen_through_the_power_map() {
        let d = 3usize;
        let f = AntiFareyMap::new(d).unwrap();
        let nielsen = NielsenMap::new(d).unwrap();
        let n = (d + 1) as i32;
        // Circle points are always in the domain; interior points are kept
        // only when they sit in some half-plane with a safe margin, so that
        // the rotated lift cannot fall on the wrong side of a side circle.
        let mut checked = 0;
        for k in 0..300 {
            let th = TAU * (k as f64 + 0.31) / 300.0;
            for r in [0.85, 0.96, 1.0] {
                let z = Complex64::from_polar(r, th);
                let deep = (1..=d + 1).any(|i| nielsen.side_circle(i).side(z) <= -1e-6);
                if r < 1.0 && !deep {
                    continue;
                }
                let nz = nielsen.eval(Cx::from(z)).unwrap();
                let lhs = f.eval(Cx::from(z.powi(n))).unwrap();
                let rhs = Cx::from(nz.fin().powi(n));
                assert!(lhs.dist(rhs) < 1e-9, "residual at θ={th}, r={r}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn monogon_interior_is_rejected() {
        let f = AntiFareyMap::new(2).unwrap();
        assert!(matches!(f.eval(Cx::ZERO), Err(Error::OutsideDomain)));
        // A point deep inside the monogon: image of an interior polygon point.
        let inner = Complex64::new(0.05, 0.0);
        assert!(matches!(f.eval(Cx::from(inner)), Err(Error::OutsideDomain)));
    }
}
