use crate::config::Tolerances;
use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::roots::{poly_roots, RootMult};
use num_complex::Complex64;

/// A rational map `num/den` on the Riemann sphere.
#[derive(Clone, Debug)]
pub struct RationalMap {
    num: Poly,
    den: Poly,
}

/// Result of inverting a map that is injective on the closed unit disk (or a
/// Jordan disk): the preimage either lies strictly inside or within the
/// boundary ambiguity band.
#[derive(Clone, Copy, Debug)]
pub enum DiskPreimage {
    Inside(Complex64),
    Boundary(Complex64),
}

impl DiskPreimage {
    pub fn point(self) -> Complex64 {
        match self {
            DiskPreimage::Inside(w) | DiskPreimage::Boundary(w) => w,
        }
    }
}

impl RationalMap {
    pub fn new(num: Poly, den: Poly, tol: &Tolerances) -> Result<RationalMap> {
        if num.is_zero() && den.is_zero() {
            return Err(Error::InvalidRational("0/0 is not a map".into()));
        }
        if den.is_zero() {
            return Err(Error::InvalidRational("zero denominator".into()));
        }
        let cap = tol.max_degree;
        if num.degree() > cap || den.degree() > cap {
            return Err(Error::DegreeTooLarge {
                got: num.degree().max(den.degree()),
                cap,
            });
        }
        Ok(RationalMap { num, den })
    }

    /// Polynomial map `p/1`.
    pub fn from_poly(num: Poly, tol: &Tolerances) -> Result<RationalMap> {
        RationalMap::new(num, Poly::from_real(&[1.0]), tol)
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    /// Topological degree `max(deg num, deg den)`.
    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == 0
    }

    /// Rejects shared roots of numerator and denominator (detected through
    /// the root finder, so only meaningful up to root tolerance).
    pub fn check_reduced(&self, tol: &Tolerances) -> Result<()> {
        if self.den.degree() == 0 {
            return Ok(());
        }
        let dens = poly_roots(&self.den, tol)?;
        let scale = self.num.max_coeff().max(1e-300);
        for r in &dens {
            let v = self.num.eval(r.z).norm();
            if v < 1e-9 * scale * (1.0 + r.z.norm()).powi(self.num.degree() as i32) {
                return Err(Error::InvalidRational(format!(
                    "numerator and denominator share a root near {:.6}+{:.6}i",
                    r.z.re, r.z.im
                )));
            }
        }
        Ok(())
    }

    /// Evaluation on the sphere. A pole yields `∞`; an unresolved `0/0`
    /// (which cannot occur on a reduced map except by numerical coincidence)
    /// is resolved by one l'Hôpital step.
    pub fn eval(&self, z: Cx) -> Cx {
        if z.is_inf() {
            let (dn, dd) = (self.num.degree(), self.den.degree());
            return match dn.cmp(&dd) {
                std::cmp::Ordering::Greater => Cx::INF,
                std::cmp::Ordering::Less => Cx::ZERO,
                std::cmp::Ordering::Equal => Cx::from(self.num.leading() / self.den.leading()),
            };
        }
        let zf = z.fin();
        // For large |z| evaluate the reversed polynomials at 1/z to avoid
        // overflow: p(z) = z^deg · p_rev(1/z).
        if zf.norm() > 1e8 {
            let w = zf.inv();
            let nrev = reversed(&self.num);
            let drev = reversed(&self.den);
            let (dn, dd) = (self.num.degree() as i32, self.den.degree() as i32);
            let a = nrev.eval(w);
            let b = drev.eval(w);
            if b.norm() == 0.0 {
                return Cx::INF;
            }
            let ratio = a / b;
            // z^(dn-dd) · ratio
            let p = dn - dd;
            return Cx::from(ratio) * powi_cx(zf, p);
        }
        let a = self.num.eval(zf);
        let b = self.den.eval(zf);
        let scale = self.num.max_coeff().max(self.den.max_coeff()).max(1e-300);
        if b.norm() < 1e-14 * scale && a.norm() < 1e-14 * scale {
            // Numerically 0/0: one l'Hôpital step.
            let da = self.num.derivative().eval(zf);
            let db = self.den.derivative().eval(zf);
            if db.norm() == 0.0 && da.norm() == 0.0 {
                return Cx::INF;
            }
            if db.norm() == 0.0 {
                return Cx::INF;
            }
            return Cx::from(da / db);
        }
        if b.norm() == 0.0 {
            return Cx::INF;
        }
        Cx::from(a / b)
    }

    /// Derivative as a rational map (numerator of the Wronskian quotient).
    pub fn derivative_value(&self, z: Complex64) -> Complex64 {
        let n = self.num.eval(z);
        let d = self.den.eval(z);
        let dn = self.num.derivative().eval(z);
        let dd = self.den.derivative().eval(z);
        (dn * d - n * dd) / (d * d)
    }

    /// All preimages of `c` with multiplicities, including the point at
    /// infinity when the pullback polynomial drops degree.
    pub fn preimages(&self, c: Cx, tol: &Tolerances) -> Result<Vec<(Cx, usize)>> {
        let deg = self.degree();
        let pullback = if c.is_inf() {
            self.den.clone()
        } else {
            self.num.sub(&self.den.scale(c.fin()))
        };
        let mut out: Vec<(Cx, usize)> = Vec::new();
        let mut finite_total = 0usize;
        if pullback.is_zero() {
            return Err(Error::InvalidRational(
                "constant map equals the requested value everywhere".into(),
            ));
        }
        if pullback.degree() >= 1 {
            for RootMult { z, mult } in poly_roots(&pullback, tol)? {
                out.push((Cx::from(z), mult));
                finite_total += mult;
            }
        }
        if finite_total < deg {
            out.push((Cx::INF, deg - finite_total));
        }
        Ok(out)
    }

    /// Finite critical points (roots of `num′·den − num·den′`) plus the
    /// multiplicity at infinity, which together account for `2·deg − 2`.
    pub fn critical_points(&self, tol: &Tolerances) -> Result<(Vec<RootMult>, usize)> {
        let w = self
            .num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()));
        let deg = self.degree();
        let expected = if deg == 0 { 0 } else { 2 * deg - 2 };
        if w.is_zero() {
            // Constant map; treat as having no critical structure.
            return Ok((Vec::new(), 0));
        }
        let finite = if w.degree() >= 1 {
            poly_roots(&w, tol)?
        } else {
            Vec::new()
        };
        let finite_total: usize = finite.iter().map(|r| r.mult).sum();
        let inf_mult = expected.saturating_sub(finite_total).min(expected);
        Ok((finite, inf_mult))
    }

    /// Inverts the map on the closed unit disk, assuming injectivity there.
    ///
    /// Newton iteration from `warm` (when supplied) handles the common case
    /// in a few steps; otherwise, or when Newton leaves the disk
    /// neighbourhood, all global preimages are computed and filtered by disk
    /// membership. Exactly one preimage may lie inside; two or more signal a
    /// univalence violation. Preimages within `boundary_band` of the unit
    /// circle are flagged `Boundary`.
    pub fn univalent_inverse(
        &self,
        z: Cx,
        warm: Option<Complex64>,
        tol: &Tolerances,
    ) -> Result<DiskPreimage> {
        let band = tol.boundary_band;
        if let (Some(w0), Some(zf)) = (warm, z.try_fin()) {
            if let Some(w) = self.newton_inverse(zf, w0, tol) {
                let r = w.norm();
                if r <= 1.0 - band {
                    return Ok(DiskPreimage::Inside(w));
                }
                if r < 1.0 + band {
                    return Ok(DiskPreimage::Boundary(w));
                }
                // Newton converged to a preimage outside the disk; another
                // branch may still be inside, so fall through.
            }
        }
        let mut inside: Vec<Complex64> = Vec::new();
        let mut boundary: Vec<Complex64> = Vec::new();
        for (w, _) in self.preimages(z, tol)? {
            let Some(wf) = w.try_fin() else { continue };
            let r = wf.norm();
            if r <= 1.0 - band {
                inside.push(wf);
            } else if r < 1.0 + band {
                boundary.push(wf);
            }
        }
        match (inside.len(), boundary.len()) {
            (1, _) => Ok(DiskPreimage::Inside(inside[0])),
            (0, 0) => Err(Error::OutsideDomain),
            (0, _) => {
                // Collapse numerically identical boundary hits (a root
                // cluster straddling the circle) before declaring violation.
                let w0 = boundary[0];
                if boundary.iter().all(|w| (w - w0).norm() < 10.0 * tol.root_cluster) {
                    Ok(DiskPreimage::Boundary(w0))
                } else {
                    Err(Error::UnivalenceViolation {
                        count: boundary.len(),
                    })
                }
            }
            (k, _) => Err(Error::UnivalenceViolation { count: k }),
        }
    }

    fn newton_inverse(&self, z: Complex64, w0: Complex64, tol: &Tolerances) -> Option<Complex64> {
        let mut w = w0;
        let scale = (1.0 + z.norm()) * self.num.max_coeff().max(1.0);
        for _ in 0..tol.newton_steps {
            let fv = match self.eval(Cx::from(w)).try_fin() {
                Some(v) => v,
                None => return None,
            };
            let err = fv - z;
            if err.norm() <= 1e-14 * scale {
                return Some(w);
            }
            let d = self.derivative_value(w);
            if !d.is_finite() || d.norm() < 1e-300 {
                return None;
            }
            let step = err / d;
            w -= step;
            if w.norm() > 1.5 {
                return None; // left the disk neighbourhood; use global solve
            }
        }
        let fv = self.eval(Cx::from(w)).try_fin()?;
        if (fv - z).norm() <= 1e-11 * scale {
            Some(w)
        } else {
            None
        }
    }
}

fn reversed(p: &Poly) -> Poly {
    let mut c = p.coeffs().to_vec();
    c.reverse();
    Poly::new(c)
}

fn powi_cx(z: Complex64, p: i32) -> Cx {
    if p == 0 {
        return Cx::ONE;
    }
    let w = z.powi(p.abs());
    if p > 0 {
        Cx::from(w)
    } else {
        Cx::from(w).inv()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    /// The cardioid uniformizer z + z²/2.
    fn cardioid() -> RationalMap {
        RationalMap::from_poly(Poly::from_real(&[0.0, 1.0, 0.5]), &tols()).unwrap()
    }

    #[test]
    fn eval_handles_poles_and_infinity() {
        // R(z) = (z^2+1)/(z-1): pole at 1, R(∞) = ∞.
        let r = RationalMap::new(
            Poly::from_real(&[1.0, 0.0, 1.0]),
            Poly::from_real(&[-1.0, 1.0]),
            &tols(),
        )
        .unwrap();
        assert_eq!(r.eval(Cx::new(1.0, 0.0)), Cx::INF);
        assert_eq!(r.eval(Cx::INF), Cx::INF);
        // Hand value: R(2) = 5.
        assert!((r.eval(Cx::new(2.0, 0.0)).fin() - c(5.0, 0.0)).norm() < 1e-12);
        // Möbius 1/z at ∞.
        let inv = RationalMap::new(Poly::from_real(&[1.0]), Poly::from_real(&[0.0, 1.0]), &tols())
            .unwrap();
        assert_eq!(inv.eval(Cx::INF), Cx::ZERO);
        assert_eq!(inv.eval(Cx::ZERO), Cx::INF);
    }

    #[test]
    fn preimage_count_matches_degree() {
        let r = cardioid();
        for &target in &[c(3.0, 1.0), c(-2.0, 0.5), c(0.0, 4.0)] {
            let pre = r.preimages(Cx::from(target), &tols()).unwrap();
            let total: usize = pre.iter().map(|(_, m)| m).sum();
            assert_eq!(total, 2);
            for (w, _) in pre {
                assert!(r.eval(w).dist(Cx::from(target)) < 1e-8);
            }
        }
        // ∞ has the double preimage ∞ under a quadratic polynomial.
        let pre = r.preimages(Cx::INF, &tols()).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0], (Cx::INF, 2));
    }

    #[test]
    fn critical_points_of_cardioid() {
        // (z + z²/2)' = 1 + z: critical point −1, plus ∞ for the polynomial.
        let (finite, inf_mult) = cardioid().critical_points(&tols()).unwrap();
        assert_eq!(finite.len(), 1);
        assert!((finite[0].z - c(-1.0, 0.0)).norm() < 1e-10);
        assert_eq!(finite[0].mult + inf_mult, 2); // 2·deg − 2
    }

    #[test]
    fn univalent_inverse_on_the_cardioid() {
        let r = cardioid();
        // Interior point.
        let w0 = c(0.3, -0.2);
        let z = r.eval(Cx::from(w0));
        match r.univalent_inverse(z, None, &tols()).unwrap() {
            DiskPreimage::Inside(w) => assert!((w - w0).norm() < 1e-9),
            other => panic!("expected Inside, got {other:?}"),
        }
        // Warm start converges to the same point.
        match r
            .univalent_inverse(z, Some(w0 + c(1e-3, 1e-3)), &tols())
            .unwrap()
        {
            DiskPreimage::Inside(w) => assert!((w - w0).norm() < 1e-9),
            other => panic!("expected Inside, got {other:?}"),
        }
        // Boundary point gets flagged.
        let wb = c(0.6, 0.8); // |w| = 1
        let zb = r.eval(Cx::from(wb));
        match r.univalent_inverse(zb, None, &tols()).unwrap() {
            DiskPreimage::Boundary(w) => assert!((w - wb).norm() < 1e-7),
            other => panic!("expected Boundary, got {other:?}"),
        }
        // A far-outside target has no disk preimage.
        assert!(matches!(
            r.univalent_inverse(Cx::new(50.0, 0.0), None, &tols()),
            Err(Error::OutsideDomain)
        ));
    }

    #[test]
    fn reduced_check_rejects_common_factors() {
        // (z^2 - 1)/(z - 1) shares the root 1.
        let r = RationalMap::new(
            Poly::from_real(&[-1.0, 0.0, 1.0]),
            Poly::from_real(&[-1.0, 1.0]),
            &tols(),
        )
        .unwrap();
        assert!(r.check_reduced(&tols()).is_err());
        assert!(cardioid().check_reduced(&tols()).is_ok());
    }
}
