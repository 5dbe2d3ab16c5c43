use crate::config::Tolerances;
use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::rational::{DiskPreimage, RationalMap};
use num_complex::Complex64;
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularKind {
    /// Image of a unit-circle critical point of a uniformizer.
    Cusp,
    /// Tangency point of two domain boundaries.
    DoublePoint,
}

#[derive(Clone, Copy, Debug)]
pub struct SingularPoint {
    pub location: Complex64,
    pub kind: SingularKind,
}

/// A tangency between the boundaries of domains `i` and `j` (0-indexed).
#[derive(Clone, Copy, Debug)]
pub struct Touch {
    pub i: usize,
    pub j: usize,
    pub point: Complex64,
}

/// A finite union of Jordan domains `Ω_j = R_j(𝔻)`, each uniformized by a
/// rational map univalent on the closed unit disk, with closures allowed to
/// touch at isolated points. Carries the singular set (cusps and double
/// points) and the contact structure.
#[derive(Clone, Debug)]
pub struct QuadratureMultiDomain {
    uniformizers: Vec<RationalMap>,
    singular: Vec<SingularPoint>,
    touching: Vec<Touch>,
    tree_like: bool,
    tol: Tolerances,
}

impl QuadratureMultiDomain {
    /// Validates the uniformizers (univalence by a sampled boundary
    /// argument-principle check), locates cusps and pairwise tangencies, and
    /// verifies disjointness of the domains and, when requested, that the
    /// contact graph is a tree.
    pub fn build(maps: Vec<RationalMap>, tree_like: bool, tol: &Tolerances) -> Result<Self> {
        tol.validate()?;
        if maps.is_empty() {
            return Err(Error::InvalidSystem("no uniformizers given".into()));
        }
        let mut boundaries: Vec<Vec<Complex64>> = Vec::with_capacity(maps.len());
        for (idx, r) in maps.iter().enumerate() {
            r.check_reduced(tol)?;
            boundaries.push(
                check_univalent_on_circle(r, tol)
                    .map_err(|e| prefix_err(e, &format!("uniformizer {idx}")))?,
            );
        }

        let mut singular: Vec<SingularPoint> = Vec::new();
        for r in &maps {
            let (crits, _) = r.critical_points(tol)?;
            for c in &crits {
                if (c.z.norm() - 1.0).abs() <= 1e-9 {
                    if let Some(loc) = r.eval(Cx::from(c.z)).try_fin() {
                        singular.push(SingularPoint {
                            location: loc,
                            kind: SingularKind::Cusp,
                        });
                    }
                }
            }
        }

        let mut touching: Vec<Touch> = Vec::new();
        for i in 0..maps.len() {
            for j in i + 1..maps.len() {
                check_disjoint(&maps[i], &maps[j], i, j, tol)?;
                let (pi, pj, dist) = closest_boundary_pair(&maps[i], &maps[j]);
                if dist <= tol.touch_tol {
                    let point = (pi + pj) * 0.5;
                    touching.push(Touch { i, j, point });
                    singular.push(SingularPoint {
                        location: point,
                        kind: SingularKind::DoublePoint,
                    });
                }
            }
        }
        // A tangency point shared by three or more boundaries would show up
        // as several pairwise touches in one place; that is outside the class
        // of systems handled here.
        for a in 0..touching.len() {
            for b in a + 1..touching.len() {
                if (touching[a].point - touching[b].point).norm() < 10.0 * tol.touch_tol {
                    return Err(Error::InvalidSystem(
                        "three or more boundaries meet at one point".into(),
                    ));
                }
            }
        }
        if tree_like && !is_tree(maps.len(), &touching) {
            return Err(Error::InvalidSystem(
                "contact graph is not a tree (tree-like flag set)".into(),
            ));
        }
        sort_singular(&mut singular);
        Ok(QuadratureMultiDomain {
            uniformizers: maps,
            singular,
            touching,
            tree_like,
            tol: tol.clone(),
        })
    }

    pub fn count(&self) -> usize {
        self.uniformizers.len()
    }

    pub fn uniformizers(&self) -> &[RationalMap] {
        &self.uniformizers
    }

    pub fn map(&self, j: usize) -> &RationalMap {
        &self.uniformizers[j]
    }

    pub fn singular_points(&self) -> &[SingularPoint] {
        &self.singular
    }

    pub fn touching(&self) -> &[Touch] {
        &self.touching
    }

    pub fn tree_like(&self) -> bool {
        self.tree_like
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Boundary point `R_j(e^(2πiθ))`.
    pub fn boundary_point(&self, j: usize, theta: f64) -> Cx {
        self.uniformizers[j].eval(Cx::from(Complex64::from_polar(1.0, TAU * theta)))
    }

    /// Finds the lowest-indexed domain whose closure contains `z`, with the
    /// disk preimage under its uniformizer. `Ok(None)` means `z` lies outside
    /// every closed domain.
    pub fn locate(&self, z: Cx) -> Result<Option<(usize, DiskPreimage)>> {
        for (j, r) in self.uniformizers.iter().enumerate() {
            match r.univalent_inverse(z, None, &self.tol) {
                Ok(dp) => return Ok(Some((j, dp))),
                Err(Error::OutsideDomain) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }

    /// All domains whose closure contains `z` (nonempty only near double
    /// points and tangencies).
    pub fn locate_all(&self, z: Cx) -> Vec<(usize, DiskPreimage)> {
        let mut out = Vec::new();
        for (j, r) in self.uniformizers.iter().enumerate() {
            if let Ok(dp) = r.univalent_inverse(z, None, &self.tol) {
                out.push((j, dp));
            }
        }
        out
    }

    /// Whether `z` is within `band` of a stored singular point.
    pub fn near_singular(&self, z: Cx, band: f64) -> bool {
        let Some(zf) = z.try_fin() else { return false };
        self.singular
            .iter()
            .any(|s| (s.location - zf).norm() <= band)
    }
}

fn prefix_err(e: Error, what: &str) -> Error {
    match e {
        Error::InvalidSystem(msg) => Error::InvalidSystem(format!("{what}: {msg}")),
        other => other,
    }
}

fn sort_singular(v: &mut [SingularPoint]) {
    v.sort_by(|a, b| {
        (a.location.re, a.location.im)
            .partial_cmp(&(b.location.re, b.location.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// Sampled univalence check on the closed unit disk: no critical points or
/// poles inside, boundary curve simple (no proper segment crossings among
/// `univalence_samples` samples) and winding once around an interior image.
/// Returns the boundary samples.
pub(crate) fn check_univalent_on_circle(
    r: &RationalMap,
    tol: &Tolerances,
) -> Result<Vec<Complex64>> {
    let n = tol.univalence_samples.max(16);
    let mut pts = Vec::with_capacity(n);
    for k in 0..n {
        let z = Complex64::from_polar(1.0, TAU * k as f64 / n as f64);
        match r.eval(Cx::from(z)).try_fin() {
            Some(w) => pts.push(w),
            None => {
                return Err(Error::InvalidSystem(
                    "pole on the unit circle (boundary through ∞)".into(),
                ))
            }
        }
    }
    // A single simple pole inside the disk is allowed: it uniformizes an
    // unbounded domain (∞ interior). More pole mass breaks injectivity.
    let mut pole: Option<Complex64> = None;
    if r.den().degree() >= 1 {
        let mut pole_mult = 0usize;
        for root in crate::roots::poly_roots(r.den(), tol)? {
            if root.z.norm() >= 1.0 - 1e-9 && root.z.norm() < 1.0 + 1e-9 {
                return Err(Error::InvalidSystem(format!(
                    "pole at {:.6}{:+.6}i on the unit circle",
                    root.z.re, root.z.im
                )));
            }
            if root.z.norm() < 1.0 - 1e-9 {
                pole = Some(root.z);
                pole_mult += root.mult;
            }
        }
        if pole_mult > 1 {
            return Err(Error::InvalidSystem(format!(
                "not univalent: pole mass {pole_mult} inside the disk"
            )));
        }
    }
    let (crits, _) = r.critical_points(tol)?;
    for c in &crits {
        if c.z.norm() < 1.0 - 1e-9 {
            return Err(Error::InvalidSystem(format!(
                "not univalent: critical point at {:.6}{:+.6}i inside the disk",
                c.z.re, c.z.im
            )));
        }
    }
    // Proper crossings between non-adjacent boundary segments.
    for a in 0..n {
        let (a1, a2) = (pts[a], pts[(a + 1) % n]);
        for b in a + 2..n {
            if a == 0 && b == n - 1 {
                continue;
            }
            let (b1, b2) = (pts[b], pts[(b + 1) % n]);
            if segments_cross(a1, a2, b1, b2) {
                let za = Complex64::from_polar(1.0, TAU * a as f64 / n as f64);
                let zb = Complex64::from_polar(1.0, TAU * b as f64 / n as f64);
                return Err(Error::InvalidSystem(format!(
                    "not univalent: boundary self-intersection, witnesses z ≈ {:.4}{:+.4}i and z ≈ {:.4}{:+.4}i",
                    za.re, za.im, zb.re, zb.im
                )));
            }
        }
    }
    // Argument principle at an interior image: (zeros − poles) of R − w₀ in
    // 𝔻 equals the boundary winding, so univalence demands winding 1 for a
    // bounded domain and 0 when ∞ lies inside (one zero against one pole).
    let probe = match pole {
        None => Cx::ZERO,
        Some(p) if p.norm() > 0.5 => Cx::ZERO,
        Some(p) => Cx::from(p + Complex64::from_polar(0.4, 0.3)),
    };
    let Some(target) = r.eval(probe).try_fin() else {
        return Err(Error::InvalidSystem(
            "could not find a finite interior image for the winding check".into(),
        ));
    };
    let expected = if pole.is_some() { 0 } else { 1 };
    let w = winding_number(&pts, target);
    if w != expected {
        return Err(Error::InvalidSystem(format!(
            "boundary winds {w} times around an interior image (expected {expected})"
        )));
    }
    Ok(pts)
}

fn segments_cross(a1: Complex64, a2: Complex64, b1: Complex64, b2: Complex64) -> bool {
    let orient = |p: Complex64, q: Complex64, r: Complex64| {
        let u = q - p;
        let v = r - p;
        u.re * v.im - u.im * v.re
    };
    let d1 = orient(a1, a2, b1);
    let d2 = orient(a1, a2, b2);
    let d3 = orient(b1, b2, a1);
    let d4 = orient(b1, b2, a2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

pub(crate) fn winding_number(pts: &[Complex64], target: Complex64) -> i64 {
    let mut total = 0.0;
    let mut prev = (pts[pts.len() - 1] - target).arg();
    for p in pts {
        let a = (p - target).arg();
        let mut step = a - prev;
        while step > std::f64::consts::PI {
            step -= TAU;
        }
        while step < -std::f64::consts::PI {
            step += TAU;
        }
        total += step;
        prev = a;
    }
    (total / TAU).round() as i64
}

/// Rejects interior overlap between `Ω_i` and `Ω_j` on a radial sample grid.
pub(crate) fn check_disjoint(
    ri: &RationalMap,
    rj: &RationalMap,
    i: usize,
    j: usize,
    tol: &Tolerances,
) -> Result<()> {
    for &(a, b, na, nb) in &[(ri, rj, i, j), (rj, ri, j, i)] {
        for &rho in &[0.35f64, 0.7, 0.95] {
            for k in 0..24 {
                let w = Complex64::from_polar(rho, TAU * k as f64 / 24.0);
                let z = a.eval(Cx::from(w));
                if let Ok(DiskPreimage::Inside(_)) = b.univalent_inverse(z, None, tol) {
                    return Err(Error::InvalidSystem(format!(
                        "domains {na} and {nb} overlap near {:.4}{:+.4}i",
                        z.fin().re,
                        z.fin().im
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Minimal distance between two domain boundaries: coarse grid scan followed
/// by alternating golden-section refinement in each boundary angle.
pub(crate) fn closest_boundary_pair(
    ri: &RationalMap,
    rj: &RationalMap,
) -> (Complex64, Complex64, f64) {
    let coarse = 512usize;
    let bi: Vec<Complex64> = (0..coarse)
        .map(|k| {
            ri.eval(Cx::from(Complex64::from_polar(1.0, TAU * k as f64 / coarse as f64)))
                .fin()
        })
        .collect();
    let bj: Vec<Complex64> = (0..coarse)
        .map(|k| {
            rj.eval(Cx::from(Complex64::from_polar(1.0, TAU * k as f64 / coarse as f64)))
                .fin()
        })
        .collect();
    let mut best = (0usize, 0usize, f64::INFINITY);
    for (a, pa) in bi.iter().enumerate() {
        for (b, pb) in bj.iter().enumerate() {
            let d = (pa - pb).norm_sqr();
            if d < best.2 {
                best = (a, b, d);
            }
        }
    }
    let mut ta = best.0 as f64 / coarse as f64;
    let mut tb = best.1 as f64 / coarse as f64;
    let point = |r: &RationalMap, t: f64| r.eval(Cx::from(Complex64::from_polar(1.0, TAU * t))).fin();
    let dist = |ta: f64, tb: f64| (point(ri, ta) - point(rj, tb)).norm();
    let mut window = 1.0 / coarse as f64;
    for _ in 0..48 {
        ta = golden_min(|t| dist(t, tb), ta - window, ta + window);
        tb = golden_min(|t| dist(ta, t), tb - window, tb + window);
        window *= 0.7;
    }
    (point(ri, ta), point(rj, tb), dist(ta, tb))
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..32 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn is_tree(k: usize, touching: &[Touch]) -> bool {
    if touching.len() != k - 1 {
        return false;
    }
    // Connectivity by union-find.
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in touching {
        let (a, b) = (find(&mut parent, t.i), find(&mut parent, t.j));
        if a == b {
            return false; // cycle (or a doubled tangency)
        }
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..k).all(|x| find(&mut parent, x) == root)
}
