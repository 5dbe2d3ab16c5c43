use super::domain::{
    check_disjoint, check_univalent_on_circle, closest_boundary_pair, winding_number,
    SingularKind, SingularPoint,
};
use super::reflection::{classify_orbit, PointClass, StepOutcome};
use crate::config::Tolerances;
use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::rational::{DiskPreimage, RationalMap};
use num_complex::Complex64;
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiskMembership {
    Inside,
    Boundary,
    Outside,
}

/// A Jordan disk given by a boundary polyline and a membership test; round
/// disks carry their exact center/radius, which enables warm-started
/// inversion and refined tangency search.
#[derive(Clone, Debug)]
pub struct JordanDisk {
    round: Option<(Complex64, f64)>,
    samples: Vec<Complex64>,
}

impl JordanDisk {
    pub fn round(center: Complex64, radius: f64) -> JordanDisk {
        let n = 256;
        let samples = (0..n)
            .map(|k| center + radius * Complex64::from_polar(1.0, TAU * k as f64 / n as f64))
            .collect();
        JordanDisk {
            round: Some((center, radius)),
            samples,
        }
    }

    pub fn unit() -> JordanDisk {
        JordanDisk::round(Complex64::new(0.0, 0.0), 1.0)
    }

    /// A general disk from a closed counterclockwise boundary polyline.
    pub fn from_samples(samples: Vec<Complex64>) -> Result<JordanDisk> {
        if samples.len() < 16 {
            return Err(Error::InvalidSystem(
                "a boundary polyline needs at least 16 samples".into(),
            ));
        }
        let mut area = 0.0;
        for (k, p) in samples.iter().enumerate() {
            let q = samples[(k + 1) % samples.len()];
            area += p.re * q.im - q.re * p.im;
        }
        if area <= 0.0 {
            return Err(Error::InvalidSystem(
                "boundary polyline must be counterclockwise".into(),
            ));
        }
        Ok(JordanDisk {
            round: None,
            samples,
        })
    }

    pub fn is_round(&self) -> Option<(Complex64, f64)> {
        self.round
    }

    pub fn boundary_samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn centroid(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }

    /// Membership with a boundary band of relative width `band`.
    pub fn contains(&self, z: Complex64, band: f64) -> DiskMembership {
        if let Some((c, r)) = self.round {
            let d = (z - c).norm() - r;
            let eps = band * r.max(1.0);
            return if d.abs() <= eps {
                DiskMembership::Boundary
            } else if d < 0.0 {
                DiskMembership::Inside
            } else {
                DiskMembership::Outside
            };
        }
        let scale = self
            .samples
            .iter()
            .map(|p| p.norm())
            .fold(0.0f64, f64::max)
            .max(1.0);
        let mut dist = f64::INFINITY;
        for (k, p) in self.samples.iter().enumerate() {
            let q = self.samples[(k + 1) % self.samples.len()];
            dist = dist.min(segment_distance(z, *p, q));
        }
        if dist <= band * scale {
            return DiskMembership::Boundary;
        }
        if winding_number(&self.samples, z) == 1 {
            DiskMembership::Inside
        } else {
            DiskMembership::Outside
        }
    }
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// A piecewise map built from uniformizers `R_j` of Jordan disks `𝔇_j` and
/// an order-two pairing `κ`: on `Ω_j = R_j(𝔇_j)` it acts by
/// `R_κ(j) ∘ η ∘ (R_j|_𝔇_j)⁻¹` with `η(w) = 1/w`. The boundary restriction
/// is an orientation-reversing involution of `∂(⋃Ω_j)`.
#[derive(Clone, Debug)]
pub struct BInvolution {
    uniformizers: Vec<RationalMap>,
    conjugated: Vec<Option<RationalMap>>,
    disks: Vec<JordanDisk>,
    kappa: Vec<usize>,
    singular: Vec<SingularPoint>,
    tol: Tolerances,
}

impl BInvolution {
    pub fn new(
        uniformizers: Vec<RationalMap>,
        disks: Vec<JordanDisk>,
        kappa: Vec<usize>,
        tol: &Tolerances,
    ) -> Result<BInvolution> {
        tol.validate()?;
        let k = uniformizers.len();
        if k == 0 || disks.len() != k || kappa.len() != k {
            return Err(Error::InvalidSystem(
                "need matching numbers of uniformizers, disks and pairing entries".into(),
            ));
        }
        let mut seen = vec![false; k];
        for (j, &kj) in kappa.iter().enumerate() {
            if kj >= k || seen[kj] {
                return Err(Error::InvalidSystem("pairing is not a permutation".into()));
            }
            seen[kj] = true;
            if kappa[kj] != j {
                return Err(Error::InvalidSystem(
                    "pairing must be an involution (κ∘κ = id)".into(),
                ));
            }
        }

        // η(𝔇_j) must be the complement of the closed paired disk (sampled).
        for (j, disk) in disks.iter().enumerate() {
            let partner = &disks[kappa[j]];
            for s in disk.boundary_samples().iter().step_by(4) {
                if s.norm() < 1e-12 {
                    return Err(Error::InvalidSystem(
                        "disk boundary passes through 0, where η is singular".into(),
                    ));
                }
                let img = s.inv();
                if partner.contains(img, 1e-6) != DiskMembership::Boundary {
                    return Err(Error::InvalidSystem(format!(
                        "η does not carry the boundary of disk {j} onto the boundary of disk {}",
                        kappa[j]
                    )));
                }
            }
            let inner = match disk.is_round() {
                Some((c, r)) => c + 0.37 * r,
                None => disk.centroid(),
            };
            if inner.norm() > 1e-12
                && partner.contains(inner.inv(), 1e-9) != DiskMembership::Outside
            {
                return Err(Error::InvalidSystem(format!(
                    "η must send the interior of disk {j} outside the closed disk {}",
                    kappa[j]
                )));
            }
        }

        // Univalence of each uniformizer on its disk; round disks conjugate
        // to the unit disk and reuse the circle check.
        let mut conjugated: Vec<Option<RationalMap>> = Vec::with_capacity(k);
        for (j, (r, disk)) in uniformizers.iter().zip(&disks).enumerate() {
            r.check_reduced(tol)?;
            match disk.is_round() {
                Some((c, rad)) => {
                    let conj = conjugate_to_unit(r, c, rad, tol)?;
                    check_univalent_on_circle(&conj, tol).map_err(|e| match e {
                        Error::InvalidSystem(m) => {
                            Error::InvalidSystem(format!("uniformizer {j}: {m}"))
                        }
                        other => other,
                    })?;
                    conjugated.push(Some(conj));
                }
                None => {
                    let (crits, _) = r.critical_points(tol)?;
                    for cp in &crits {
                        if disk.contains(cp.z, 1e-9) == DiskMembership::Inside {
                            return Err(Error::InvalidSystem(format!(
                                "uniformizer {j}: critical point inside its disk"
                            )));
                        }
                    }
                    conjugated.push(None);
                }
            }
        }

        // Pairwise disjointness of the images (round disks via the
        // conjugated maps, which is the refined path).
        for i in 0..k {
            for j in i + 1..k {
                if let (Some(ci), Some(cj)) = (&conjugated[i], &conjugated[j]) {
                    check_disjoint(ci, cj, i, j, tol)?;
                }
            }
        }

        // Singular set: cusps (critical points on a disk boundary) and
        // pairwise tangencies of the image boundaries.
        let mut singular = Vec::new();
        for (r, disk) in uniformizers.iter().zip(&disks) {
            let (crits, _) = r.critical_points(tol)?;
            for cp in &crits {
                if disk.contains(cp.z, 1e-9) == DiskMembership::Boundary {
                    if let Some(loc) = r.eval(Cx::from(cp.z)).try_fin() {
                        singular.push(SingularPoint {
                            location: loc,
                            kind: SingularKind::Cusp,
                        });
                    }
                }
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                if let (Some(ci), Some(cj)) = (&conjugated[i], &conjugated[j]) {
                    let (pi, pj, dist) = closest_boundary_pair(ci, cj);
                    if dist <= tol.touch_tol {
                        singular.push(SingularPoint {
                            location: (pi + pj) * 0.5,
                            kind: SingularKind::DoublePoint,
                        });
                    }
                }
            }
        }

        let b = BInvolution {
            uniformizers,
            conjugated,
            disks,
            kappa,
            singular,
            tol: tol.clone(),
        };

        // The boundary involution must close up: S(S(z)) = z on samples.
        let mut worst = 0.0f64;
        for j in 0..k {
            for s in b.disks[j].boundary_samples().iter().step_by(4) {
                let z = b.uniformizers[j].eval(Cx::from(*s));
                if z.is_inf() {
                    return Err(Error::InvalidSystem(
                        "domain boundary passes through ∞".into(),
                    ));
                }
                if b.near_singular(z, 1e-6) {
                    continue;
                }
                let once = b.eval_in(j, z, Some(*s))?;
                let back = b.eval(once)?;
                worst = worst.max(back.dist(z));
            }
        }
        if worst > tol.involution_tol {
            return Err(Error::InvalidSystem(format!(
                "boundary involution residual {worst:.3e} exceeds {:.1e}",
                tol.involution_tol
            )));
        }
        Ok(b)
    }

    pub fn count(&self) -> usize {
        self.uniformizers.len()
    }

    pub fn kappa(&self) -> &[usize] {
        &self.kappa
    }

    pub fn disk(&self, j: usize) -> &JordanDisk {
        &self.disks[j]
    }

    pub fn map(&self, j: usize) -> &RationalMap {
        &self.uniformizers[j]
    }

    pub fn singular_points(&self) -> &[SingularPoint] {
        &self.singular
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Boundary point `R_j` of the disk boundary at parameter `theta` (turns
    /// around a round disk; interpolated polyline position otherwise).
    pub fn boundary_point(&self, j: usize, theta: f64) -> Cx {
        let w = match self.disks[j].is_round() {
            Some((c, r)) => c + r * Complex64::from_polar(1.0, TAU * theta),
            None => {
                let samples = self.disks[j].boundary_samples();
                let x = theta.rem_euclid(1.0) * samples.len() as f64;
                let k = x.floor() as usize % samples.len();
                let frac = x - x.floor();
                let a = samples[k];
                let b = samples[(k + 1) % samples.len()];
                a + (b - a) * frac
            }
        };
        self.uniformizers[j].eval(Cx::from(w))
    }

    fn near_singular(&self, z: Cx, band: f64) -> bool {
        let Some(zf) = z.try_fin() else { return false };
        self.singular
            .iter()
            .any(|s| (s.location - zf).norm() <= band)
    }

    /// Inverts `R_j` on its disk at `z`; the result is in the original
    /// coordinates of `𝔇_j`.
    fn invert_on_disk(&self, j: usize, z: Cx, warm: Option<Complex64>) -> Result<DiskPreimage> {
        match (&self.conjugated[j], self.disks[j].is_round()) {
            (Some(conj), Some((c, r))) => {
                let warm_zeta = warm.map(|w| (w - c) / r);
                Ok(match conj.univalent_inverse(z, warm_zeta, &self.tol)? {
                    DiskPreimage::Inside(zeta) => DiskPreimage::Inside(c + r * zeta),
                    DiskPreimage::Boundary(zeta) => DiskPreimage::Boundary(c + r * zeta),
                })
            }
            _ => {
                let mut inside = Vec::new();
                let mut boundary = Vec::new();
                for (w, _) in self.uniformizers[j].preimages(z, &self.tol)? {
                    let Some(wf) = w.try_fin() else { continue };
                    match self.disks[j].contains(wf, self.tol.boundary_band) {
                        DiskMembership::Inside => inside.push(wf),
                        DiskMembership::Boundary => boundary.push(wf),
                        DiskMembership::Outside => {}
                    }
                }
                match (inside.len(), boundary.len()) {
                    (1, _) => Ok(DiskPreimage::Inside(inside[0])),
                    (0, 0) => Err(Error::OutsideDomain),
                    (0, _) => Ok(DiskPreimage::Boundary(boundary[0])),
                    (n, _) => Err(Error::UnivalenceViolation { count: n }),
                }
            }
        }
    }

    /// Lowest-indexed domain whose closure contains `z`.
    pub fn locate(&self, z: Cx) -> Result<Option<(usize, DiskPreimage)>> {
        for j in 0..self.count() {
            match self.invert_on_disk(j, z, None) {
                Ok(dp) => return Ok(Some((j, dp))),
                Err(Error::OutsideDomain) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }

    /// One application of the piecewise map.
    pub fn eval(&self, z: Cx) -> Result<Cx> {
        match self.locate(z)? {
            None => Err(Error::OutsideDomain),
            Some((j, dp)) => Ok(self.apply_branch(j, dp.point())),
        }
    }

    /// Evaluation through a known domain index with a warm start for the
    /// disk inversion.
    pub fn eval_in(&self, j: usize, z: Cx, warm: Option<Complex64>) -> Result<Cx> {
        let dp = self.invert_on_disk(j, z, warm)?;
        Ok(self.apply_branch(j, dp.point()))
    }

    fn apply_branch(&self, j: usize, w: Complex64) -> Cx {
        self.uniformizers[self.kappa[j]].eval(Cx::from(w).inv())
    }

    /// Budgeted orbit classification, with the same semantics as for
    /// reflections.
    pub fn classify(&self, z: Cx, max_iter: usize) -> PointClass {
        let band = self.tol.singular_band;
        classify_orbit(
            z,
            max_iter,
            |z| match self.locate(z) {
                Ok(None) => StepOutcome::Tile,
                Ok(Some((_, DiskPreimage::Boundary(_)))) => StepOutcome::Boundary,
                Ok(Some((j, DiskPreimage::Inside(w)))) => {
                    StepOutcome::Step(self.apply_branch(j, w))
                }
                Err(_) => StepOutcome::Failed,
            },
            |z| self.near_singular(z, band),
        )
    }
}

/// Precomposes a rational map with `ζ ↦ center + radius·ζ`, turning a map
/// univalent on a round disk into one univalent on the unit disk.
fn conjugate_to_unit(
    r: &RationalMap,
    center: Complex64,
    radius: f64,
    tol: &Tolerances,
) -> Result<RationalMap> {
    let lin = Poly::new(vec![center, Complex64::new(radius, 0.0)]);
    let sub = |p: &Poly| -> Poly {
        let mut acc = Poly::zero();
        for &a in p.coeffs().iter().rev() {
            acc = acc.mul(&lin).add(&Poly::new(vec![a]));
        }
        acc
    };
    RationalMap::new(sub(r.num()), sub(r.den()), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn poly_map(coeffs: &[f64]) -> RationalMap {
        RationalMap::from_poly(Poly::from_real(coeffs), &tols()).unwrap()
    }

    /// The two-domain pairing system: R₀ = z + 0.3z² on B(0, ½) and
    /// R₁ = 5 + 1/(z−4) on B(0, 2), with κ swapping the domains. η(z) = 1/z
    /// exchanges the two circles exactly.
    fn swap_system() -> BInvolution {
        let r0 = poly_map(&[0.0, 1.0, 0.3]);
        let r1 = RationalMap::new(
            Poly::from_real(&[-19.0, 5.0]),
            Poly::from_real(&[-4.0, 1.0]),
            &tols(),
        )
        .unwrap();
        BInvolution::new(
            vec![r0, r1],
            vec![
                JordanDisk::round(Complex64::new(0.0, 0.0), 0.5),
                JordanDisk::round(Complex64::new(0.0, 0.0), 2.0),
            ],
            vec![1, 0],
            &tols(),
        )
        .unwrap()
    }

    #[test]
    fn swap_system_builds_and_boundary_involutes() {
        let b = swap_system();
        assert_eq!(b.kappa(), &[1, 0]);
        let mut worst = 0.0f64;
        for j in 0..2 {
            for k in 0..200 {
                let z = b.boundary_point(j, (k as f64 + 0.5) / 200.0);
                let back = b.eval(b.eval(z).unwrap()).unwrap();
                worst = worst.max(back.dist(z));
            }
        }
        assert!(worst <= 1e-8, "involution residual {worst:.3e}");
    }

    #[test]
    fn swap_system_crosses_domains() {
        let b = swap_system();
        // A boundary point of Ω₀ maps onto the boundary of Ω₁.
        let z = b.boundary_point(0, 0.2);
        let img = b.eval(z).unwrap();
        match b.locate(img).unwrap() {
            Some((1, DiskPreimage::Boundary(_))) => {}
            other => panic!("expected a boundary point of domain 1, got {other:?}"),
        }
    }

    #[test]
    fn identity_kappa_on_the_unit_disk() {
        // Single cardioid-type domain with κ = id: S = R ∘ η ∘ R⁻¹.
        let b = BInvolution::new(
            vec![poly_map(&[0.0, 1.0, 0.5])],
            vec![JordanDisk::unit()],
            vec![0],
            &tols(),
        )
        .unwrap();
        // Hand composition at w = 0.4i: S(R(w)) = R(1/w) = R(−2.5i).
        let r = b.map(0);
        let z = r.eval(Cx::new(0.0, 0.4));
        let expected = r.eval(Cx::new(0.0, -2.5));
        assert!(b.eval(z).unwrap().dist(expected) < 1e-10);
        // The cusp R(−1) = −1/2 is fixed: η(−1) = −1.
        assert_eq!(b.singular_points().len(), 1);
        let cusp = Cx::from(b.singular_points()[0].location);
        assert!(cusp.dist(Cx::new(-0.5, 0.0)) < 1e-9);
        assert!(b.eval(cusp).unwrap().dist(cusp) < 1e-8);
    }

    #[test]
    fn mismatched_eta_complement_is_rejected() {
        // B(0, ½) pairs with B(0, 3) ≠ η-complement of B(0, ½).
        let err = BInvolution::new(
            vec![poly_map(&[0.0, 1.0]), poly_map(&[0.0, 1.0])],
            vec![
                JordanDisk::round(Complex64::new(0.0, 0.0), 0.5),
                JordanDisk::round(Complex64::new(0.0, 0.0), 3.0),
            ],
            vec![1, 0],
            &tols(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSystem(_)));
    }

    #[test]
    fn pairing_must_be_an_involution() {
        let disks = || {
            vec![
                JordanDisk::round(Complex64::new(0.0, 0.0), 0.5),
                JordanDisk::round(Complex64::new(0.0, 0.0), 2.0),
            ]
        };
        let maps = || vec![poly_map(&[0.0, 1.0]), poly_map(&[0.0, 1.0])];
        assert!(BInvolution::new(maps(), disks(), vec![1, 1], &tols()).is_err());
        assert!(BInvolution::new(maps(), disks(), vec![0], &tols()).is_err());
    }

    #[test]
    fn polyline_membership() {
        // An ellipse sampled as a polyline.
        let samples: Vec<Complex64> = (0..128)
            .map(|k| {
                let t = TAU * k as f64 / 128.0;
                Complex64::new(2.0 * t.cos(), t.sin())
            })
            .collect();
        let disk = JordanDisk::from_samples(samples).unwrap();
        assert_eq!(disk.contains(Complex64::new(0.0, 0.0), 1e-9), DiskMembership::Inside);
        assert_eq!(disk.contains(Complex64::new(3.0, 0.0), 1e-9), DiskMembership::Outside);
        assert_eq!(
            disk.contains(Complex64::new(0.0, 0.9999), 1e-3),
            DiskMembership::Boundary
        );
        // Clockwise input is rejected.
        let cw: Vec<Complex64> = (0..64)
            .map(|k| {
                let t = -TAU * k as f64 / 64.0;
                Complex64::new(t.cos(), t.sin())
            })
            .collect();
        assert!(JordanDisk::from_samples(cw).is_err());
    }
}
