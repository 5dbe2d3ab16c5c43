use super::domain::QuadratureMultiDomain;
use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::rational::DiskPreimage;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Where an orbit ended up after budgeted iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    /// The `n`-th iterate (and no earlier one) lies in the fundamental tile.
    Escaping(usize),
    /// The orbit is trapped: with payload `< max_iter` it hit an exact fixed
    /// point at that step (a certificate — it can never leave), otherwise it
    /// stayed in the closed domain for the whole budget.
    NonEscaping(usize),
    /// No honest verdict: the orbit hovers near the singular set, or the
    /// membership solver failed.
    Undecided(UndecidedReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UndecidedReason {
    /// Parabolic stagnation: consecutive iterates inside the ambiguity band
    /// around a cusp or double point.
    SingularHover,
    /// The membership solver reported an inconsistency (e.g. several disk
    /// preimages under one uniformizer).
    Numerics,
}

impl PointClass {
    pub fn is_escaping(&self) -> bool {
        matches!(self, PointClass::Escaping(_))
    }
}

/// Iterates within the singular band tolerated before giving up on a
/// classification (see `UndecidedReason::SingularHover`).
const HOVER_PATIENCE: usize = 25;

/// The piecewise-defined reflection map of a quadrature multi-domain:
/// on `Ω_j` it acts by `R_j ∘ η ∘ (R_j|_𝔻)⁻¹` with `η(w) = 1/w̄`, fixing
/// every boundary point.
#[derive(Clone, Debug)]
pub struct SchwarzReflection {
    qmd: QuadratureMultiDomain,
    degree: usize,
}

/// Verdict of the budgeted critical-orbit test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Connected,
    Disconnected,
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct ConnectednessReport {
    pub verdict: Connectivity,
    /// One entry per critical point of the reflection: (point, multiplicity,
    /// orbit class).
    pub critical_orbits: Vec<(Cx, usize, PointClass)>,
}

impl SchwarzReflection {
    /// Wraps a multi-domain, computing the degree `Σ deg R_j − 1` and spot
    /// checking that boundary samples are fixed to within `boundary_fix_tol`.
    pub fn new(qmd: QuadratureMultiDomain) -> Result<SchwarzReflection> {
        let degree = qmd
            .uniformizers()
            .iter()
            .map(|r| r.degree())
            .sum::<usize>()
            - 1;
        let s = SchwarzReflection { qmd, degree };
        let tol = s.qmd.tolerances().clone();
        let mut worst = 0.0f64;
        for j in 0..s.qmd.count() {
            for k in 0..64 {
                let theta = (k as f64 + 0.5) / 64.0;
                let w = Complex64::from_polar(1.0, TAU * theta);
                let z = s.qmd.map(j).eval(Cx::from(w));
                if s.qmd.near_singular(z, 1e-6) {
                    continue; // cusp samples are excluded from the residual
                }
                let img = s.eval_in(j, z, Some(w))?;
                worst = worst.max(img.dist(z));
            }
        }
        if worst > tol.boundary_fix_tol {
            return Err(Error::InvalidSystem(format!(
                "boundary not fixed: residual {worst:.3e} exceeds {:.1e}",
                tol.boundary_fix_tol
            )));
        }
        Ok(s)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn qmd(&self) -> &QuadratureMultiDomain {
        &self.qmd
    }

    /// One application of the reflection. Points outside every closed domain
    /// (the fundamental tile) are rejected with `OutsideDomain`; membership
    /// ties near the singular set resolve to the lowest domain index.
    pub fn eval(&self, z: Cx) -> Result<Cx> {
        match self.qmd.locate(z)? {
            None => Err(Error::OutsideDomain),
            Some((j, dp)) => {
                let w = dp.point();
                Ok(self.qmd.map(j).eval(Cx::from(w).conj().inv()))
            }
        }
    }

    /// Evaluation through a known domain index, optionally warm-starting the
    /// disk inversion (used for boundary checks where `w` is known).
    pub fn eval_in(&self, j: usize, z: Cx, warm: Option<Complex64>) -> Result<Cx> {
        let dp = self
            .qmd
            .map(j)
            .univalent_inverse(z, warm, self.qmd.tolerances())?;
        let w = dp.point();
        Ok(self.qmd.map(j).eval(Cx::from(w).conj().inv()))
    }

    /// All preimages of `c` under the reflection that lie in the closed
    /// domain: solutions of `R_j(v) = c` with `|v| ≥ 1` pulled back through
    /// `η`, one per branch. Boundary-band solutions are skipped (they
    /// correspond to `c` on the domain boundary itself).
    pub fn preimages_in_domain(&self, c: Cx) -> Result<Vec<Cx>> {
        let tol = self.qmd.tolerances();
        let mut out = Vec::new();
        for r in self.qmd.uniformizers() {
            for (v, mult) in r.preimages(c, tol)? {
                let z = match v.try_fin() {
                    None => r.eval(Cx::ZERO),
                    Some(vf) => {
                        if vf.norm() <= 1.0 + tol.boundary_band {
                            continue;
                        }
                        r.eval(Cx::from(vf).conj().inv())
                    }
                };
                for _ in 0..mult {
                    out.push(z);
                }
            }
        }
        Ok(out)
    }

    /// Budgeted orbit classification; see `PointClass`.
    pub fn classify(&self, z: Cx, max_iter: usize) -> PointClass {
        let band = self.qmd.tolerances().singular_band;
        classify_orbit(
            z,
            max_iter,
            |z| orbit_step(&self.qmd, z),
            |z| self.qmd.near_singular(z, band),
        )
    }

    /// Critical points of the reflection with multiplicities: images of the
    /// uniformizer critical points strictly outside the closed disk (pulled
    /// back through `η`), plus the image of the disk center when ∞ is
    /// critical for the uniformizer.
    pub fn critical_points(&self) -> Result<Vec<(Cx, usize)>> {
        let tol = self.qmd.tolerances();
        let mut out: Vec<(Cx, usize)> = Vec::new();
        for r in self.qmd.uniformizers() {
            let (finite, inf_mult) = r.critical_points(tol)?;
            for c in finite {
                if c.z.norm() > 1.0 + 1e-9 {
                    out.push((r.eval(Cx::from(c.z).conj().inv()), c.mult));
                }
            }
            if inf_mult > 0 {
                out.push((r.eval(Cx::ZERO), inf_mult));
            }
        }
        Ok(out)
    }

    /// Classifies every critical orbit; `Connected` needs all of them
    /// non-escaping, a single escape is decisive for `Disconnected`.
    pub fn connectedness_test(&self, max_iter: usize) -> Result<ConnectednessReport> {
        let mut critical_orbits = Vec::new();
        let mut any_escape = false;
        let mut any_undecided = false;
        for (z, mult) in self.critical_points()? {
            let class = self.classify(z, max_iter);
            match class {
                PointClass::Escaping(_) => any_escape = true,
                PointClass::Undecided(_) => any_undecided = true,
                PointClass::NonEscaping(_) => {}
            }
            critical_orbits.push((z, mult, class));
        }
        let verdict = if any_escape {
            Connectivity::Disconnected
        } else if any_undecided {
            Connectivity::Undetermined
        } else {
            Connectivity::Connected
        };
        Ok(ConnectednessReport {
            verdict,
            critical_orbits,
        })
    }
}

/// One orbit step for the classifier: locate the point and either report its
/// tile status or apply the piecewise map.
pub(crate) enum StepOutcome {
    /// Outside every closed domain.
    Tile,
    /// On a domain boundary (fixed by the map).
    Boundary,
    /// Inside a domain; carries the image point.
    Step(Cx),
    Failed,
}

pub(crate) fn orbit_step(qmd: &QuadratureMultiDomain, z: Cx) -> StepOutcome {
    match qmd.locate(z) {
        Ok(None) => StepOutcome::Tile,
        Ok(Some((_, DiskPreimage::Boundary(_)))) => StepOutcome::Boundary,
        Ok(Some((j, DiskPreimage::Inside(w)))) => {
            StepOutcome::Step(qmd.map(j).eval(Cx::from(w).conj().inv()))
        }
        Err(_) => StepOutcome::Failed,
    }
}

/// Shared classifier loop for reflections and B-involutions: `step` applies
/// the piecewise map, `near_singular` tests the ambiguity band around the
/// singular set.
pub(crate) fn classify_orbit(
    z: Cx,
    max_iter: usize,
    step: impl Fn(Cx) -> StepOutcome,
    near_singular: impl Fn(Cx) -> bool,
) -> PointClass {
    let mut z = z;
    let mut hover = 0usize;
    for n in 0..=max_iter {
        match step(z) {
            StepOutcome::Tile => return PointClass::Escaping(n),
            StepOutcome::Boundary => {
                return if near_singular(z) {
                    PointClass::Undecided(UndecidedReason::SingularHover)
                } else {
                    // ∂𝒟 away from the singular set belongs to the
                    // fundamental tile (where the map is the identity).
                    PointClass::Escaping(n)
                }
            }
            StepOutcome::Failed => return PointClass::Undecided(UndecidedReason::Numerics),
            StepOutcome::Step(next) => {
                if next == z {
                    // exact fixed point (e.g. a superattracting basin center
                    // reached in finitely many steps): trapped forever
                    return PointClass::NonEscaping(n);
                }
                if n == max_iter {
                    break;
                }
                if near_singular(z) {
                    hover += 1;
                    if hover >= HOVER_PATIENCE {
                        return PointClass::Undecided(UndecidedReason::SingularHover);
                    }
                } else {
                    hover = 0;
                }
                z = next;
            }
        }
    }
    PointClass::NonEscaping(max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::poly::Poly;
    use crate::rational::RationalMap;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn poly_map(coeffs: &[f64]) -> RationalMap {
        RationalMap::from_poly(Poly::from_real(coeffs), &tols()).unwrap()
    }

    fn cardioid_reflection() -> SchwarzReflection {
        let qmd =
            QuadratureMultiDomain::build(vec![poly_map(&[0.0, 1.0, 0.5])], true, &tols()).unwrap();
        SchwarzReflection::new(qmd).unwrap()
    }

    #[test]
    fn degree_is_sum_minus_one() {
        assert_eq!(cardioid_reflection().degree(), 1);
        let two = QuadratureMultiDomain::build(
            vec![poly_map(&[-1.0, 1.0]), poly_map(&[1.0, 1.0])],
            true,
            &tols(),
        )
        .unwrap();
        assert_eq!(SchwarzReflection::new(two).unwrap().degree(), 1);
    }

    #[test]
    fn boundary_points_are_fixed() {
        let s = cardioid_reflection();
        let mut worst = 0.0f64;
        for k in 0..1000 {
            let theta = (k as f64 + 0.5) / 1000.0;
            let z = s.qmd().boundary_point(0, theta);
            let img = s.eval(z).unwrap();
            worst = worst.max(img.dist(z));
        }
        assert!(worst <= 1e-9, "boundary residual {worst:.3e}");
    }

    #[test]
    fn interior_evaluation_matches_hand_composition() {
        // R = z + z²/2 at z = R(0.4i): S(z) = R(1/conj(0.4i)) = R(2.5i).
        let s = cardioid_reflection();
        let r = s.qmd().map(0);
        let z = r.eval(Cx::new(0.0, 0.4));
        let expected = r.eval(Cx::new(0.0, 2.5));
        assert!(s.eval(z).unwrap().dist(expected) < 1e-10);
        // A tile point is rejected.
        assert!(matches!(
            s.eval(Cx::new(3.0, 3.0)),
            Err(Error::OutsideDomain)
        ));
    }

    #[test]
    fn preimage_counts_inside_and_outside() {
        let s = cardioid_reflection();
        // Generic targets in Ω: one preimage in the closed domain.
        for &w in &[Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.35)] {
            let c = s.qmd().map(0).eval(Cx::from(w));
            assert_eq!(s.preimages_in_domain(c).unwrap().len(), 1);
        }
        // Generic targets in the tile interior: deg R = 2 preimages.
        for &c in &[Cx::new(2.0, 1.0), Cx::new(-1.5, 2.0)] {
            assert_eq!(s.preimages_in_domain(c).unwrap().len(), 2);
        }
    }

    #[test]
    fn classification_basics() {
        let s = cardioid_reflection();
        // Far outside: rank 0.
        assert_eq!(s.classify(Cx::new(4.0, 0.0), 50), PointClass::Escaping(0));
        // The critical point 0 maps to ∞ ∈ tile: rank 1.
        assert_eq!(s.classify(Cx::ZERO, 50), PointClass::Escaping(1));
        assert_eq!(s.classify(Cx::INF, 50), PointClass::Escaping(0));
    }

    #[test]
    fn rank_decreases_along_the_orbit() {
        let s = cardioid_reflection();
        let mut seen = 0;
        for k in 0..60 {
            let z = Cx::from(Complex64::from_polar(0.05 + 0.012 * k as f64, 1.7 * k as f64));
            if let PointClass::Escaping(n) = s.classify(z, 200) {
                if n >= 1 {
                    let next = s.eval(z).unwrap();
                    assert_eq!(s.classify(next, 200), PointClass::Escaping(n - 1));
                    seen += 1;
                }
            }
        }
        assert!(seen > 10, "only {seen} escaping samples with rank ≥ 1");
    }

    #[test]
    fn two_cycle_of_disjoint_disks_never_escapes() {
        // Round disks B(±2, 1): the reflection acts by circle inversion, and
        // ±√3 form an exact 2-cycle interior to the disks.
        let qmd = QuadratureMultiDomain::build(
            vec![poly_map(&[-2.0, 1.0]), poly_map(&[2.0, 1.0])],
            false,
            &tols(),
        )
        .unwrap();
        let s = SchwarzReflection::new(qmd).unwrap();
        let p = Cx::new(3f64.sqrt(), 0.0);
        assert_eq!(s.classify(p, 10), PointClass::NonEscaping(10));
        // Complete invariance, sampled: the image stays non-escaping.
        let q = s.eval(p).unwrap();
        assert!(q.dist(Cx::new(-(3f64.sqrt()), 0.0)) < 1e-12);
        assert_eq!(s.classify(q, 10), PointClass::NonEscaping(10));
    }

    #[test]
    fn connectedness_reports() {
        // Cardioid: the unique critical point escapes (hits ∞ at rank 1).
        let report = cardioid_reflection().connectedness_test(100).unwrap();
        assert_eq!(report.verdict, Connectivity::Disconnected);
        assert_eq!(report.critical_orbits.len(), 1);
        assert!((report.critical_orbits[0].0).dist(Cx::ZERO) < 1e-12);
        // Möbius-only system: no critical points, vacuously connected.
        let qmd = QuadratureMultiDomain::build(
            vec![poly_map(&[-1.0, 1.0]), poly_map(&[1.0, 1.0])],
            true,
            &tols(),
        )
        .unwrap();
        let report = SchwarzReflection::new(qmd).unwrap().connectedness_test(50).unwrap();
        assert_eq!(report.verdict, Connectivity::Connected);
        assert!(report.critical_orbits.is_empty());
    }

    #[test]
    fn hypocycloid_exterior_is_connected() {
        // R(z) = 1/z + z²/2: the reflection of the unbounded three-cusped
        // domain fixes ∞, which is its only critical point — every critical
        // orbit stays, so the limit set is connected.
        let r = RationalMap::new(
            Poly::from_real(&[1.0, 0.0, 0.0, 0.5]),
            Poly::from_real(&[0.0, 1.0]),
            &tols(),
        )
        .unwrap();
        let qmd = QuadratureMultiDomain::build(vec![r], false, &tols()).unwrap();
        let s = SchwarzReflection::new(qmd).unwrap();
        assert_eq!(s.degree(), 2);
        let crits = s.critical_points().unwrap();
        assert_eq!(crits.len(), 1);
        assert!(crits[0].0.is_inf());
        assert!(s.eval(Cx::INF).unwrap().is_inf());
        let report = s.connectedness_test(60).unwrap();
        assert_eq!(report.verdict, Connectivity::Connected);
        // The bounded droplet is escaping of rank 0 at its center of mass.
        assert_eq!(s.classify(Cx::ZERO, 30), PointClass::Escaping(0));
    }

    #[test]
    fn single_cusp_slice_structure() {
        // Cubic with exactly one unit-circle critical point (−1) and one
        // outside (10/3): one cusp, and one critical point of the reflection
        // of local degree 3 over the tile.
        let r = poly_map(&[0.0, 1.0, 0.35, -0.1]);
        let qmd = QuadratureMultiDomain::build(vec![r], true, &tols()).unwrap();
        let cusps = qmd
            .singular_points()
            .iter()
            .filter(|s| s.kind == super::super::domain::SingularKind::Cusp)
            .count();
        assert_eq!(cusps, 1);
        let s = SchwarzReflection::new(qmd).unwrap();
        assert_eq!(s.degree(), 2);
        let crits = s.critical_points().unwrap();
        // Critical points over the tile: the center image (mult 2, local
        // degree 3 onto ∞) and the η-image of the outside critical point.
        let center: Vec<_> = crits.iter().filter(|(_, m)| *m == 2).collect();
        assert_eq!(center.len(), 1);
        assert!(center[0].0.dist(Cx::ZERO) < 1e-12);
    }
}
