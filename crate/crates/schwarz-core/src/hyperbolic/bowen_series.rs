use super::{GenCircle, Moebius};
use crate::cx::Cx;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// One side pairing of an ideal polygon: the Möbius map carrying side
/// `side` onto side `partner` (both 1-indexed).
#[derive(Clone, Debug)]
pub struct SidePairing {
    pub partner: usize,
    pub map: Moebius,
}

/// A preferred fundamental domain for the cyclic cover of a genus-zero
/// orbifold: an ideal polygon with its side pairings, plus the order of the
/// rotational symmetry used to take the quotient.
///
/// This is input data (read from a file or built by one of the named
/// constructors); `FactorBowenSeries::new` validates it, never synthesizes it.
#[derive(Clone, Debug)]
pub struct FundamentalDomain {
    pub rotation_order: usize,
    pub vertices: Vec<Complex64>,
    pub pairings: Vec<SidePairing>,
}

impl FundamentalDomain {
    /// Regular ideal `n`-gon with half-turn side pairings. The quotient
    /// orbifold is a sphere with one puncture, one order-`n` point and the
    /// order-2 points carried by the pairings; this is the Hecke-type datum
    /// with `p = 1` ideal point.
    pub fn hecke(n: usize) -> Result<FundamentalDomain> {
        if n < 3 {
            return Err(Error::InvalidSystem("need n ≥ 3 for the regular ideal polygon".into()));
        }
        let vertices: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / n as f64))
            .collect();
        let pairings = (0..n)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let apex = match GenCircle::orthogonal_through(a, b) {
                    GenCircle::Circle { center, radius } => center * (1.0 - radius / center.norm()),
                    GenCircle::Line { .. } => Complex64::new(0.0, 0.0),
                };
                SidePairing {
                    partner: i + 1,
                    map: Moebius::half_turn(apex),
                }
            })
            .collect();
        Ok(FundamentalDomain {
            rotation_order: n,
            vertices,
            pairings,
        })
    }

    /// Ideal `2(k−1)`-gon fundamental domain of the `k`-times punctured
    /// sphere (`k ≥ 3`), with parabolic pairings identifying neighbouring
    /// sides around every other vertex. No rotational quotient is taken.
    pub fn punctured_sphere(k: usize) -> Result<FundamentalDomain> {
        if k < 3 {
            return Err(Error::InvalidSystem("need at least 3 punctures".into()));
        }
        let m = 2 * (k - 1);
        let vertices: Vec<Complex64> = (0..m)
            .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / m as f64))
            .collect();
        let mut pairings: Vec<Option<SidePairing>> = vec![None; m];
        // Pair (side 2t, side 2t+1) by the parabolic fixing their shared
        // vertex v_(2t+1); indices are 1-based, so the pairs are
        // (s_m, s_1) around v_1 and (s_2, s_3) around v_3, and so on.
        let mut pair_around = |hub: usize| -> Result<()> {
            let prev_side = if hub == 1 { m } else { hub - 1 };
            let next_side = hub;
            let v = vertices[hub - 1];
            let from = vertices[prev_side - 1]; // far endpoint of s_prev
            let to = vertices[hub % m]; // far endpoint of s_next
            let p = parabolic_fixing(v, from, to)?;
            pairings[prev_side - 1] = Some(SidePairing {
                partner: next_side,
                map: p,
            });
            pairings[next_side - 1] = Some(SidePairing {
                partner: prev_side,
                map: p.inverse(),
            });
            Ok(())
        };
        for t in 0..(m / 2) {
            pair_around(if t == 0 { 1 } else { 2 * t + 1 })?;
        }
        Ok(FundamentalDomain {
            rotation_order: 1,
            vertices,
            pairings: pairings.into_iter().map(Option::unwrap).collect(),
        })
    }
}

/// The parabolic element of `Aut(𝔻)` fixing the unit point `v` and sending
/// the unit point `x` to the unit point `y`.
pub fn parabolic_fixing(v: Complex64, x: Complex64, y: Complex64) -> Result<Moebius> {
    // Conjugate by C(z) = i(v+z)/(v−z), which maps 𝔻 → ℍ and v → ∞; a
    // parabolic fixing ∞ in ℍ is a real translation.
    let c = Moebius::new(
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, 1.0) * v,
        Complex64::new(-1.0, 0.0),
        v,
        false,
    );
    let cx = c.apply(Cx::from(x));
    let cy = c.apply(Cx::from(y));
    let (cx, cy) = match (cx.try_fin(), cy.try_fin()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidSystem(
                "parabolic endpoints must differ from the fixed point".into(),
            ))
        }
    };
    if cx.im.abs() > 1e-9 || cy.im.abs() > 1e-9 {
        return Err(Error::InvalidSystem(
            "parabolic data must lie on the unit circle".into(),
        ));
    }
    let t = Complex64::new(cy.re - cx.re, 0.0);
    let translate = Moebius::new(
        Complex64::new(1.0, 0.0),
        t,
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        false,
    );
    Ok(c.inverse().compose(&translate).compose(&c).normalized())
}

/// The factor Bowen-Series map of a validated fundamental domain: apply the
/// side pairing of the half-plane containing the point, transported through
/// the degree-`n` cyclic covering `ξ(z) = z^n` when `n ≥ 2`.
#[derive(Clone, Debug)]
pub struct FactorBowenSeries {
    n: usize,
    p: usize,
    vertices: Vec<Complex64>,
    sides: Vec<GenCircle>,
    pairings: Vec<SidePairing>,
}

impl FactorBowenSeries {
    pub fn new(fd: FundamentalDomain) -> Result<FactorBowenSeries> {
        let m = fd.vertices.len();
        let n = fd.rotation_order;
        if m < 3 {
            return Err(Error::InvalidSystem("need at least 3 ideal vertices".into()));
        }
        if fd.pairings.len() != m {
            return Err(Error::InvalidSystem(format!(
                "{} sides but {} pairings",
                m,
                fd.pairings.len()
            )));
        }
        if n == 0 || m % n != 0 {
            return Err(Error::InvalidSystem(format!(
                "rotation order {n} must divide the vertex count {m}"
            )));
        }
        for v in &fd.vertices {
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidSystem("vertices must be ideal (on the unit circle)".into()));
            }
        }
        // Strictly increasing counterclockwise order, starting anywhere.
        let base = fd.vertices[0].arg();
        let args: Vec<f64> = fd
            .vertices
            .iter()
            .map(|v| (v.arg() - base).rem_euclid(TAU))
            .collect();
        for w in args.windows(2) {
            if w[1] <= w[0] + 1e-12 {
                return Err(Error::InvalidSystem(
                    "vertices must be in strict counterclockwise order".into(),
                ));
            }
        }
        let p = m / n;
        // Rotational symmetry of the vertex set and equivariance of pairings.
        if n >= 2 {
            let omega = Complex64::from_polar(1.0, TAU / n as f64);
            for i in 0..m {
                let rotated = fd.vertices[i] * omega;
                let target = fd.vertices[(i + p) % m];
                if (rotated - target).norm() > 1e-8 {
                    return Err(Error::InvalidSystem(
                        "vertex set is not invariant under the stated rotation".into(),
                    ));
                }
            }
        }
        let sides: Vec<GenCircle> = (0..m)
            .map(|i| GenCircle::orthogonal_through(fd.vertices[i], fd.vertices[(i + 1) % m]))
            .collect();
        // Pairings: disk automorphisms, involutive partner structure, and
        // endpoint matching side_i → side_partner.
        for (i0, pr) in fd.pairings.iter().enumerate() {
            let i = i0 + 1;
            if pr.map.anti {
                return Err(Error::InvalidSystem("side pairings must be orientation-preserving".into()));
            }
            if !pr.map.preserves_disk(1e-7) {
                return Err(Error::InvalidSystem(format!(
                    "pairing of side {i} does not preserve the unit disk"
                )));
            }
            if pr.partner == 0 || pr.partner > m {
                return Err(Error::InvalidSystem(format!("side {i} pairs with nonexistent side {}", pr.partner)));
            }
            let back = &fd.pairings[pr.partner - 1];
            if back.partner != i {
                return Err(Error::InvalidSystem(format!(
                    "pairing involution broken: σ({i}) = {}, σ({}) = {}",
                    pr.partner, pr.partner, back.partner
                )));
            }
            for &z in &[Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4)] {
                let fwd = pr.map.apply(Cx::from(z));
                let round = back.map.apply(fwd);
                if round.dist(Cx::from(z)) > 1e-8 {
                    return Err(Error::InvalidSystem(format!(
                        "pairing of side {} is not inverse to pairing of side {i}",
                        pr.partner
                    )));
                }
            }
            let va = fd.vertices[i0];
            let vb = fd.vertices[(i0 + 1) % m];
            let wa = fd.vertices[pr.partner - 1];
            let wb = fd.vertices[pr.partner % m];
            let ia = pr.map.apply(Cx::from(va)).fin();
            let ib = pr.map.apply(Cx::from(vb)).fin();
            let direct = (ia - wa).norm().max((ib - wb).norm());
            let reversed = (ia - wb).norm().max((ib - wa).norm());
            if direct.min(reversed) > 1e-7 {
                return Err(Error::InvalidSystem(format!(
                    "pairing of side {i} does not map its endpoints onto side {}",
                    pr.partner
                )));
            }
        }
        if n >= 2 {
            let rot = Moebius::rotation(1.0 / n as f64);
            for i0 in 0..m {
                let shifted = &fd.pairings[(i0 + p) % m];
                let conj = rot
                    .compose(&fd.pairings[i0].map)
                    .compose(&rot.inverse());
                for &z in &[Complex64::new(0.25, -0.3), Complex64::new(-0.4, 0.05)] {
                    let a = shifted.map.apply(Cx::from(z));
                    let b = conj.apply(Cx::from(z));
                    if a.dist(b) > 1e-8 {
                        return Err(Error::InvalidSystem(
                            "pairings are not equivariant under the rotation".into(),
                        ));
                    }
                }
            }
        }
        Ok(FactorBowenSeries {
            n,
            p,
            vertices: fd.vertices,
            sides,
            pairings: fd.pairings,
        })
    }

    /// Rotation order of the cyclic cover.
    pub fn rotation_order(&self) -> usize {
        self.n
    }

    /// Number of ideal points of the quotient piece (`m/n`).
    pub fn ideal_points(&self) -> usize {
        self.p
    }

    /// Number of polygon sides `m`.
    pub fn side_count(&self) -> usize {
        self.vertices.len()
    }

    /// Degree of the boundary circle map, `m − 1`.
    pub fn degree(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn side_circle(&self, i: usize) -> &GenCircle {
        &self.sides[i - 1]
    }

    fn side_containing(&self, z: Complex64) -> Option<usize> {
        let tol = 1e-12 * (1.0 + z.norm());
        (1..=self.sides.len()).find(|&i| self.sides[i - 1].side(z) <= tol)
    }

    /// Principal lift through `ξ(z) = z^n` into the cone `arg ∈ [0, 2π/n)`.
    fn lift(&self, z: Complex64) -> Complex64 {
        if self.n == 1 {
            return z;
        }
        let r = z.norm().powf(1.0 / self.n as f64);
        let th = z.arg().rem_euclid(TAU) / self.n as f64;
        Complex64::from_polar(r, th)
    }

    /// One application of the factor map.
    pub fn eval(&self, z: Cx) -> Result<Cx> {
        let zf = z.try_fin().ok_or(Error::OutsideDomain)?;
        if zf.norm() > 1.0 + 1e-9 {
            return Err(Error::OutsideDomain);
        }
        if self.n >= 2 && zf.norm_sqr() == 0.0 {
            return Err(Error::OutsideDomain);
        }
        let w = self.lift(zf);
        let i = self.side_containing(w).ok_or(Error::OutsideDomain)?;
        let gw = self.pairings[i - 1].map.apply(Cx::from(w));
        if self.n == 1 {
            Ok(gw)
        } else {
            Ok(Cx::from(gw.fin().powi(self.n as i32)))
        }
    }

    /// The boundary restriction in angle coordinates (turns).
    pub fn circle_angle(&self, theta: f64) -> f64 {
        let z = Cx::from(Complex64::from_polar(1.0, TAU * theta.rem_euclid(1.0)));
        let w = self.eval(z).expect("unit circle is in the domain");
        (w.arg() / TAU).rem_euclid(1.0)
    }

    /// Critical points of the factor map (empty for `n = 1`): the points
    /// `ξ(w)` with `g_i(w) = 0`, each of local degree `n`. There are `p`
    /// of them, one per rotation orbit of sides.
    pub fn critical_points(&self) -> Vec<Complex64> {
        if self.n < 2 {
            return Vec::new();
        }
        let mut out: Vec<Complex64> = Vec::new();
        for (i0, pr) in self.pairings.iter().enumerate() {
            let w = match pr.map.inverse().apply(Cx::ZERO).try_fin() {
                Some(w) => w,
                None => continue,
            };
            if self.sides[i0].side(w) > 1e-12 {
                continue; // the branch through side i is not active at w
            }
            let x = w.powi(self.n as i32);
            if !out.iter().any(|y| (y - x).norm() < 1e-9) {
                out.push(x);
            }
        }
        out
    }

    /// Local degree of the map at `x`, by winding of a small circle's image.
    pub fn local_degree(&self, x: Complex64, radius: f64) -> Result<usize> {
        let fx = self.eval(Cx::from(x))?.try_fin().ok_or(Error::OutsideDomain)?;
        let samples = 256;
        let mut prev: Option<f64> = None;
        let mut total = 0.0;
        for k in 0..=samples {
            let th = TAU * k as f64 / samples as f64;
            let z = x + radius * Complex64::from_polar(1.0, th);
            let fz = self.eval(Cx::from(z))?.try_fin().ok_or(Error::OutsideDomain)?;
            let a = (fz - fx).arg();
            if let Some(p) = prev {
                let mut step = a - p;
                while step > std::f64::consts::PI {
                    step -= TAU;
                }
                while step < -std::f64::consts::PI {
                    step += TAU;
                }
                total += step;
            }
            prev = Some(a);
        }
        Ok((total / TAU).round().abs() as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hecke_domain_validates_and_has_expected_counts() {
        let f = FactorBowenSeries::new(FundamentalDomain::hecke(4).unwrap()).unwrap();
        assert_eq!(f.rotation_order(), 4);
        assert_eq!(f.ideal_points(), 1);
        assert_eq!(f.degree(), 3);
    }

    #[test]
    fn punctured_sphere_domain_validates() {
        // Thrice-punctured sphere: ideal quadrilateral, parabolic pairings.
        let f = FactorBowenSeries::new(FundamentalDomain::punctured_sphere(3).unwrap()).unwrap();
        assert_eq!(f.degree(), 3);
        assert_eq!(f.ideal_points(), 4);
        // Four-times punctured: ideal hexagon, degree 5.
        let g = FactorBowenSeries::new(FundamentalDomain::punctured_sphere(4).unwrap()).unwrap();
        assert_eq!(g.degree(), 5);
    }

    #[test]
    fn parabolic_construction_fixes_and_maps() {
        let v = Complex64::new(1.0, 0.0);
        let x = Complex64::new(0.0, 1.0);
        let y = Complex64::new(0.0, -1.0);
        let p = parabolic_fixing(v, x, y).unwrap();
        assert!(p.apply(Cx::from(v)).dist(Cx::from(v)) < 1e-9);
        assert!(p.apply(Cx::from(x)).dist(Cx::from(y)) < 1e-9);
        assert!(p.preserves_disk(1e-8));
        // Parabolicity: trace² = 4 det for the normalized matrix.
        let n = p.normalized();
        let tr = n.a + n.d;
        assert!((tr * tr - Complex64::new(4.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn circle_map_degree_matches_side_count_minus_one() {
        for f in [
            FactorBowenSeries::new(FundamentalDomain::hecke(4).unwrap()).unwrap(),
            FactorBowenSeries::new(FundamentalDomain::punctured_sphere(3).unwrap()).unwrap(),
        ] {
            let n = 6000;
            let mut prev = f.circle_angle(1e-6);
            let mut total = 0.0;
            for k in 1..=n {
                let th = 1e-6 + (1.0 - 2e-6) * k as f64 / n as f64;
                let cur = f.circle_angle(th);
                let mut step = cur - prev;
                while step > 0.5 {
                    step -= 1.0;
                }
                while step < -0.5 {
                    step += 1.0;
                }
                total += step;
                prev = cur;
            }
            let d = total.round().abs() as usize;
            assert_eq!(d, f.degree(), "winding {total}");
        }
    }

    #[test]
    fn boundary_restriction_has_order_two() {
        // Sample points on the sides of the quotient polygon and check
        // F(F(x)) = x there.
        for f in [
            FactorBowenSeries::new(FundamentalDomain::hecke(5).unwrap()).unwrap(),
            FactorBowenSeries::new(FundamentalDomain::punctured_sphere(3).unwrap()).unwrap(),
        ] {
            let n = f.rotation_order();
            for i in 1..=f.ideal_points() {
                if let GenCircle::Circle { center, radius } = *f.side_circle(i) {
                    let va = f.vertices()[i - 1];
                    let vb = f.vertices()[i % f.side_count()];
                    let pa = (va - center).arg();
                    let pb = (vb - center).arg();
                    let mut span = pb - pa;
                    while span > std::f64::consts::PI {
                        span -= TAU;
                    }
                    while span < -std::f64::consts::PI {
                        span += TAU;
                    }
                    for k in 1..10 {
                        let ang = pa + span * k as f64 / 10.0;
                        let w = center + radius * Complex64::from_polar(1.0, ang);
                        let x = Cx::from(w.powi(n as i32));
                        let once = f.eval(x).unwrap();
                        let twice = f.eval(once).unwrap();
                        assert!(
                            twice.dist(x) < 1e-8,
                            "F∘F moved a boundary point by {:.2e}",
                            twice.dist(x)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hecke_critical_points_count_and_degree() {
        for n in [3usize, 4, 5] {
            let f = FactorBowenSeries::new(FundamentalDomain::hecke(n).unwrap()).unwrap();
            let crits = f.critical_points();
            assert_eq!(crits.len(), f.ideal_points(), "n = {n}");
            for c in crits {
                assert_eq!(f.local_degree(c, 1e-4).unwrap(), n, "n = {n}");
            }
        }
        // The n = 1 case has no critical points.
        let g = FactorBowenSeries::new(FundamentalDomain::punctured_sphere(3).unwrap()).unwrap();
        assert!(g.critical_points().is_empty());
    }
}
