//! Lifted algebraic correspondences on the disjoint union of uniformizer
//! spheres.
//!
//! A piecewise system built from uniformizers `R_1, …, R_k` lifts to a
//! multi-valued map on the union of `k` spheres: the forward images of
//! `(z, i)` are the solutions `(w, j)` of `R_j(w) = R_i(η(z))`, with the
//! trivial solution `w = η(z)` on the home sheet removed by polynomial
//! deflation. Boundary preimages of the singular points are identified by a
//! finite welding table, producing a noded sphere without ever building a
//! global atlas. The forward branches restricted to the lifted escaping set
//! generate, together with the involution `η̌` and the fiber-cycling deck
//! map `τ̌`, a group with presentation residuals checked numerically.

use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::rational::{DiskPreimage, RationalMap};
use crate::roots::{poly_roots, RootMult};
use crate::schwarz::{
    BInvolution, DiskMembership, PointClass, SchwarzReflection, SingularKind, SingularPoint,
};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A point on one sheet of the disjoint union of uniformizer spheres.
/// Sheets are numbered `1..=k`; the coordinate lives in the domain of the
/// sheet's uniformizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SheetPoint {
    pub z: Cx,
    pub sheet: usize,
}

impl SheetPoint {
    pub fn new(z: Cx, sheet: usize) -> SheetPoint {
        SheetPoint { z, sheet }
    }
}

enum Lifted {
    Reflection(SchwarzReflection),
    Involution(BInvolution),
}

/// The lifted correspondence of a reflection or involution system, together
/// with the welding table identifying boundary preimages of the singular
/// points across sheets.
pub struct Correspondence {
    sys: Lifted,
    degree: usize,
    /// One class per singular point: the `(sheet, boundary preimage)` pairs
    /// that are glued there. Sheets are 1-based.
    nodes: Vec<Vec<(usize, Complex64)>>,
    node_radius: f64,
}

/// Forward image of a sheet point: solutions with multiplicity, the worst
/// evaluation residual among them, and whether the input sat near a welding
/// node (where the branch structure degenerates).
#[derive(Clone, Debug)]
pub struct ForwardImage {
    pub points: Vec<(SheetPoint, usize)>,
    pub residual: f64,
    pub near_node: bool,
}

impl ForwardImage {
    /// Total solution count with multiplicity.
    pub fn multiplicity(&self) -> usize {
        self.points.iter().map(|(_, m)| m).sum()
    }

    /// Whether some solution lies within `tol` of `target` (chordally).
    pub fn contains(&self, target: SheetPoint, tol: f64) -> bool {
        self.points
            .iter()
            .any(|(p, _)| p.sheet == target.sheet && p.z.chordal(target.z) <= tol)
    }
}

impl Correspondence {
    /// Lifts a Schwarz reflection: `η(z) = 1/z̄` and every sheet pairs with
    /// itself.
    pub fn from_reflection(s: SchwarzReflection) -> Result<Correspondence> {
        let degree = s.degree();
        let mut c = Correspondence {
            sys: Lifted::Reflection(s),
            degree,
            nodes: Vec::new(),
            node_radius: 1e-3,
        };
        c.nodes = c.build_nodes()?;
        Ok(c)
    }

    /// Lifts a B-involution: `η(z) = 1/z` with the sheet pairing κ recorded
    /// in the system.
    pub fn from_involution(b: BInvolution) -> Result<Correspondence> {
        let degree = (0..b.count()).map(|j| b.map(j).degree()).sum::<usize>() - 1;
        let mut c = Correspondence {
            sys: Lifted::Involution(b),
            degree,
            nodes: Vec::new(),
            node_radius: 1e-3,
        };
        c.nodes = c.build_nodes()?;
        Ok(c)
    }

    /// Radius of the disk excluded around each welding node when flagging
    /// near-node inputs.
    pub fn with_node_radius(mut self, r: f64) -> Correspondence {
        self.node_radius = r.max(0.0);
        self
    }

    pub fn sheet_count(&self) -> usize {
        match &self.sys {
            Lifted::Reflection(s) => s.qmd().count(),
            Lifted::Involution(b) => b.count(),
        }
    }

    /// Generic forward multiplicity `Σ deg R_j − 1`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_anti(&self) -> bool {
        matches!(self.sys, Lifted::Reflection(_))
    }

    /// The welding classes: boundary preimages of each singular point.
    pub fn nodes(&self) -> &[Vec<(usize, Complex64)>] {
        &self.nodes
    }

    pub fn singular_points(&self) -> &[SingularPoint] {
        match &self.sys {
            Lifted::Reflection(s) => s.qmd().singular_points(),
            Lifted::Involution(b) => b.singular_points(),
        }
    }

    fn rmap(&self, j0: usize) -> &RationalMap {
        match &self.sys {
            Lifted::Reflection(s) => s.qmd().map(j0),
            Lifted::Involution(b) => b.map(j0),
        }
    }

    fn tol(&self) -> &crate::config::Tolerances {
        match &self.sys {
            Lifted::Reflection(s) => s.qmd().tolerances(),
            Lifted::Involution(b) => b.tolerances(),
        }
    }

    fn eta_z(&self, z: Cx) -> Cx {
        if self.is_anti() {
            z.conj().inv()
        } else {
            z.inv()
        }
    }

    fn check_sheet(&self, u: SheetPoint) -> Result<usize> {
        if u.sheet == 0 || u.sheet > self.sheet_count() {
            return Err(Error::InvalidConfig(format!(
                "sheet {} out of range 1..={}",
                u.sheet,
                self.sheet_count()
            )));
        }
        Ok(u.sheet - 1)
    }

    /// The sheet involution `η̌`: reflection in the sheet's circle (or the
    /// inversion `1/z`), sheet unchanged. An involution exactly.
    pub fn eta(&self, u: SheetPoint) -> SheetPoint {
        SheetPoint {
            z: self.eta_z(u.z),
            sheet: u.sheet,
        }
    }

    /// The branched covering to the base sphere: `(z, i) ↦ R_i(z)`.
    pub fn base_point(&self, u: SheetPoint) -> Result<Cx> {
        let i0 = self.check_sheet(u)?;
        Ok(self.rmap(i0).eval(u.z))
    }

    fn in_closed_disk(&self, j0: usize, z: Cx) -> bool {
        let band = self.tol().boundary_band;
        match &self.sys {
            Lifted::Reflection(_) => z.try_fin().is_some_and(|f| f.norm() <= 1.0 + band),
            Lifted::Involution(b) => z
                .try_fin()
                .is_some_and(|f| b.disk(j0).contains(f, band) != DiskMembership::Outside),
        }
    }

    fn on_disk_boundary(&self, j0: usize, w: Complex64, band: f64) -> bool {
        match &self.sys {
            Lifted::Reflection(_) => (w.norm() - 1.0).abs() <= band,
            Lifted::Involution(b) => b.disk(j0).contains(w, band) == DiskMembership::Boundary,
        }
    }

    fn build_nodes(&self) -> Result<Vec<Vec<(usize, Complex64)>>> {
        let tol = self.tol().clone();
        // preimages of a cusp are multiple roots, so the plain root solve
        // only localizes them to ~ε^(1/m); recover them instead from the
        // boundary critical points, which are simple and sharp
        const ACCEPT: f64 = 1e-4;
        let mut out = Vec::new();
        for sp in self.singular_points() {
            let mut class: Vec<(usize, Complex64)> = Vec::new();
            for j0 in 0..self.sheet_count() {
                match sp.kind {
                    SingularKind::Cusp => {
                        let (crits, _) = self.rmap(j0).critical_points(&tol)?;
                        for c in crits {
                            if self.on_disk_boundary(j0, c.z, ACCEPT)
                                && self
                                    .rmap(j0)
                                    .eval(Cx::from(c.z))
                                    .chordal(Cx::from(sp.location))
                                    <= 1e-7
                            {
                                class.push((j0 + 1, c.z));
                            }
                        }
                    }
                    SingularKind::DoublePoint => {
                        for (w, _) in self.rmap(j0).preimages(Cx::from(sp.location), &tol)? {
                            let Some(wf) = w.try_fin() else { continue };
                            if self.on_disk_boundary(j0, wf, ACCEPT) {
                                class.push((j0 + 1, wf));
                            }
                        }
                    }
                }
            }
            if class.is_empty() {
                return Err(Error::InvalidSystem(
                    "a singular point has no boundary preimage on any sheet".into(),
                ));
            }
            out.push(class);
        }
        Ok(out)
    }

    fn node_class_of(&self, u: SheetPoint, radius: f64) -> Option<usize> {
        let zf = u.z.try_fin()?;
        self.nodes.iter().position(|class| {
            class
                .iter()
                .any(|(s, w)| *s == u.sheet && (zf - w).norm() <= radius)
        })
    }

    /// Whether `u` lies within the node-exclusion radius of a welding node.
    pub fn near_node(&self, u: SheetPoint) -> bool {
        self.node_class_of(u, self.node_radius).is_some()
    }

    /// Equality on the noded sphere: same sheet and chordally equal, or both
    /// in the welding class of one singular point.
    pub fn welded_eq(&self, a: SheetPoint, b: SheetPoint, tol: f64) -> bool {
        if a.sheet == b.sheet && a.z.chordal(b.z) <= tol {
            return true;
        }
        match (self.node_class_of(a, tol), self.node_class_of(b, tol)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    /// All forward images of `u`: per sheet `j`, the solutions of
    /// `R_j(w) = R_i(η(z))`, with the trivial solution deflated from the
    /// home sheet's coefficient vector before root finding. Generic total
    /// multiplicity is the correspondence degree.
    pub fn forward(&self, u: SheetPoint) -> Result<ForwardImage> {
        let i0 = self.check_sheet(u)?;
        let tol = self.tol().clone();
        let zeta = self.eta_z(u.z);
        let c = self.rmap(i0).eval(zeta);
        let mut points: Vec<(SheetPoint, usize)> = Vec::new();
        let mut residual = 0.0f64;
        for j0 in 0..self.sheet_count() {
            let r = self.rmap(j0);
            let pull = if c.is_inf() {
                r.den().clone()
            } else {
                r.num().sub(&r.den().scale(c.fin()))
            };
            if pull.is_zero() {
                return Err(Error::InvalidRational(
                    "uniformizer is constant at the forward value".into(),
                ));
            }
            let mut expected = r.degree();
            let pull = if j0 == i0 {
                expected -= 1;
                match zeta.try_fin() {
                    // remove the trivial root by synthetic division
                    Some(zf) if pull.degree() >= 1 => pull.deflate(zf),
                    // trivial root at ∞ is absorbed by the degree bookkeeping
                    _ => pull,
                }
            } else {
                pull
            };
            let mut finite = 0usize;
            if pull.degree() >= 1 {
                for RootMult { z, mult } in poly_roots(&pull, &tol)? {
                    let w = Cx::from(z);
                    residual = residual.max(r.eval(w).chordal(c));
                    // a surviving root at the deflation point marks a
                    // near-double configuration; widen the reported bound
                    if j0 == i0 && zeta.try_fin().is_some_and(|zf| (z - zf).norm() < tol.root_cluster)
                    {
                        residual = residual.max(tol.root_cluster);
                    }
                    points.push((SheetPoint::new(w, j0 + 1), mult));
                    finite += mult;
                }
            }
            if finite < expected {
                points.push((SheetPoint::new(Cx::INF, j0 + 1), expected - finite));
            }
        }
        Ok(ForwardImage {
            points,
            residual,
            near_node: self.near_node(u) || self.near_node(self.eta(u)),
        })
    }

    /// Orbit class of the base point under the piecewise map, with the given
    /// iteration budget.
    pub fn classify(&self, u: SheetPoint, max_iter: usize) -> Result<PointClass> {
        let c = self.base_point(u)?;
        Ok(match &self.sys {
            Lifted::Reflection(s) => s.classify(c, max_iter),
            Lifted::Involution(b) => b.classify(c, max_iter),
        })
    }

    fn locate_base(&self, c: Cx) -> Result<Option<(usize, DiskPreimage)>> {
        match &self.sys {
            Lifted::Reflection(s) => s.qmd().locate(c),
            Lifted::Involution(b) => b.locate(c),
        }
    }

    /// The forward branch that carries the non-escaping part of the lifted
    /// disks into itself: `u ↦ (R_j|_disk)⁻¹(R_i(η(z)))`. Requires the base
    /// orbit to be non-escaping and `z` in the closed disk of its sheet.
    pub fn poly_branch(&self, u: SheetPoint, max_iter: usize) -> Result<SheetPoint> {
        let i0 = self.check_sheet(u)?;
        if !self.in_closed_disk(i0, u.z) {
            return Err(Error::OutsideDomain);
        }
        // the disk boundary maps to the tile boundary, which the base map
        // fixes pointwise; only interior points need the orbit gate
        let on_bdry = u
            .z
            .try_fin()
            .is_some_and(|f| self.on_disk_boundary(i0, f, self.tol().boundary_band));
        if !on_bdry && !matches!(self.classify(u, max_iter)?, PointClass::NonEscaping(_)) {
            return Err(Error::OutsideDomain);
        }
        let target = self.rmap(i0).eval(self.eta_z(u.z));
        match self.locate_base(target)? {
            Some((j0, dp)) => Ok(SheetPoint::new(Cx::from(dp.point()), j0 + 1)),
            None => Err(Error::OutsideDomain),
        }
    }

    /// The fiber of the base point through `u`, as sheet points in the
    /// deterministic cyclic order used by the deck map: sheets ascending,
    /// then by argument around the sheet's fiber centroid (∞ last). Errors
    /// on critical fibers, where the cyclic structure degenerates.
    pub fn fiber(&self, u: SheetPoint) -> Result<Vec<SheetPoint>> {
        self.check_sheet(u)?;
        let c = self.base_point(u)?;
        let tol = self.tol().clone();
        let mut per_sheet: Vec<Vec<Cx>> = Vec::with_capacity(self.sheet_count());
        for j0 in 0..self.sheet_count() {
            let mut pts = Vec::new();
            for (w, mult) in self.rmap(j0).preimages(c, &tol)? {
                if mult != 1 {
                    return Err(Error::CriticalFiber);
                }
                pts.push(w);
            }
            per_sheet.push(pts);
        }
        let total: usize = per_sheet.iter().map(|v| v.len()).sum();
        if total != self.degree + 1 {
            return Err(Error::CriticalFiber);
        }
        let mut out = Vec::with_capacity(total);
        for (j0, pts) in per_sheet.into_iter().enumerate() {
            let finite: Vec<Complex64> = pts.iter().filter_map(|w| w.try_fin()).collect();
            let centroid = if finite.is_empty() {
                Complex64::new(0.0, 0.0)
            } else {
                finite.iter().sum::<Complex64>() / finite.len() as f64
            };
            let mut keyed: Vec<(u8, f64, Cx)> = pts
                .into_iter()
                .map(|w| match w.try_fin() {
                    Some(wf) => (0u8, (wf - centroid).arg(), w),
                    None => (1u8, 0.0, w),
                })
                .collect();
            keyed.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("finite keys"));
            out.extend(keyed.into_iter().map(|(_, _, w)| SheetPoint::new(w, j0 + 1)));
        }
        Ok(out)
    }

    /// The deck map of the branched covering on the lifted escaping set: the
    /// next point of `u`'s fiber in cyclic order. Applying it `degree + 1`
    /// times returns to `u`, and the base point is preserved.
    pub fn deck_tau(&self, u: SheetPoint, max_iter: usize) -> Result<SheetPoint> {
        if !matches!(self.classify(u, max_iter)?, PointClass::Escaping(_)) {
            return Err(Error::OutsideDomain);
        }
        let fiber = self.fiber(u)?;
        let idx = fiber
            .iter()
            .position(|p| p.sheet == u.sheet && p.z.chordal(u.z) <= 1e-6)
            .ok_or_else(|| {
                Error::InvalidConfig("point does not lie on its own computed fiber".into())
            })?;
        Ok(fiber[(idx + 1) % fiber.len()])
    }
}

/// One residual row of the free-product relation check.
#[derive(Clone, Debug)]
pub struct WordCheck {
    /// Reduced word, innermost letter applied first.
    pub word: String,
    /// Largest chordal displacement over the surviving samples; a reduced
    /// nontrivial word acting trivially would report ~0 here.
    pub max_displacement: f64,
    pub samples_used: usize,
}

/// Numerical evidence for the group generated by `η̌` and `τ̌` on the lifted
/// escaping set: the two generator orders, displacement residuals of random
/// reduced words, and the tile-rank growth of the composite forward
/// branches.
#[derive(Clone, Debug)]
pub struct GroupReport {
    /// `max |η̌(η̌(u)) − u|` over samples (chordal); zero in exact
    /// arithmetic.
    pub involution_residual: f64,
    /// `max |τ̌^{d+1}(u) − u|` over samples (chordal).
    pub tau_order_residual: f64,
    /// `max |R(τ̌(u)) − R(u)|` over samples and deck steps (chordal).
    pub fiber_residual: f64,
    pub words: Vec<WordCheck>,
    /// Words whose displacement stayed below 1e−6 (unexpected relations).
    pub suspected_relations: usize,
    /// Escape step counts after applying `(τ̌ ∘ η̌)^r`, `r = 1, 2, …`,
    /// starting from a rank-0 point outside the lifted disks; strict growth
    /// witnesses freeness of the product.
    pub rank_growth: Vec<usize>,
    /// Samples dropped because an orbit left the resolvable region.
    pub dropped: usize,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
enum Letter {
    Eta,
    Tau(usize),
}

impl Correspondence {
    fn apply_word(&self, word: &[Letter], u: SheetPoint, max_iter: usize) -> Result<SheetPoint> {
        let mut v = u;
        for letter in word.iter().rev() {
            match letter {
                Letter::Eta => v = self.eta(v),
                Letter::Tau(k) => {
                    for _ in 0..*k {
                        v = self.deck_tau(v, max_iter)?;
                    }
                }
            }
        }
        Ok(v)
    }

    /// A point of the rank-0 lifted tile outside the disks: its base point
    /// escapes immediately and its coordinate is outside the closed disk of
    /// its sheet.
    pub fn rank0_start(&self, max_iter: usize) -> Result<SheetPoint> {
        let tol = self.tol().clone();
        let candidates = [
            Cx::new(0.05, 0.02),
            Cx::new(-0.06, 0.03),
            Cx::new(0.02, -0.08),
            Cx::new(6.0, 0.5),
            Cx::new(-5.0, 4.0),
            Cx::new(0.4, 7.0),
            Cx::new(11.0, -3.0),
        ];
        for c in candidates {
            let class = match &self.sys {
                Lifted::Reflection(s) => s.classify(c, max_iter),
                Lifted::Involution(b) => b.classify(c, max_iter),
            };
            if !matches!(class, PointClass::Escaping(0)) {
                continue;
            }
            for j0 in 0..self.sheet_count() {
                for (w, mult) in self.rmap(j0).preimages(c, &tol)? {
                    if mult == 1 && !self.in_closed_disk(j0, w) {
                        return Ok(SheetPoint::new(w, j0 + 1));
                    }
                }
            }
        }
        Err(Error::NonConvergence {
            residual: f64::INFINITY,
            iterations: 0,
        })
    }

    /// Evaluates the generator orders and random reduced words in `η̌`, `τ̌`
    /// on the given samples, and follows the rank growth of the composite
    /// forward branches from a rank-0 tile point.
    pub fn group_relation_check(
        &self,
        samples: &[SheetPoint],
        word_length: usize,
        seed: u64,
        max_iter: usize,
    ) -> GroupReport {
        let d = self.degree;
        let mut dropped = 0usize;
        let mut notes = Vec::new();
        let mut kept: Vec<SheetPoint> = Vec::new();
        for (n, &u) in samples.iter().enumerate() {
            match self.classify(u, max_iter) {
                Ok(PointClass::Escaping(_)) => kept.push(u),
                _ => {
                    dropped += 1;
                    notes.push(format!("sample {n} is not in the lifted escaping set"));
                }
            }
        }

        let mut involution_residual = 0.0f64;
        for &u in &kept {
            involution_residual =
                involution_residual.max(self.eta(self.eta(u)).z.chordal(u.z));
        }

        let mut tau_order_residual = 0.0f64;
        let mut fiber_residual = 0.0f64;
        for &u in &kept {
            let base = match self.base_point(u) {
                Ok(b) => b,
                Err(_) => continue,
            };
            let mut v = u;
            let mut ok = true;
            for _ in 0..=d {
                match self.deck_tau(v, max_iter) {
                    Ok(next) => {
                        v = next;
                        if let Ok(b) = self.base_point(v) {
                            fiber_residual = fiber_residual.max(b.chordal(base));
                        }
                    }
                    Err(_) => {
                        dropped += 1;
                        notes.push("deck orbit hit a critical fiber".into());
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                tau_order_residual =
                    tau_order_residual.max(v.z.chordal(u.z).max(
                        if v.sheet == u.sheet { 0.0 } else { f64::INFINITY },
                    ));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut words = Vec::new();
        let mut suspected = 0usize;
        for _ in 0..16 {
            let len = rng.random_range(2..=word_length.max(2));
            let mut word: Vec<Letter> = Vec::with_capacity(len);
            let mut tau_last = rng.random_bool(0.5);
            for _ in 0..len {
                if tau_last {
                    word.push(Letter::Eta);
                } else {
                    word.push(Letter::Tau(rng.random_range(1..=d.max(1))));
                }
                tau_last = !tau_last;
            }
            let mut max_disp = 0.0f64;
            let mut used = 0usize;
            for &u in &kept {
                match self.apply_word(&word, u, max_iter) {
                    Ok(v) => {
                        used += 1;
                        let disp = if v.sheet == u.sheet {
                            v.z.chordal(u.z)
                        } else {
                            2.0
                        };
                        max_disp = max_disp.max(disp);
                    }
                    Err(_) => dropped += 1,
                }
            }
            if used > 0 && max_disp < 1e-6 {
                suspected += 1;
            }
            let text = word
                .iter()
                .map(|l| match l {
                    Letter::Eta => "η".to_string(),
                    Letter::Tau(1) => "τ".to_string(),
                    Letter::Tau(k) => format!("τ^{k}"),
                })
                .collect::<Vec<_>>()
                .join("·");
            words.push(WordCheck {
                word: text,
                max_displacement: max_disp,
                samples_used: used,
            });
        }

        let mut rank_growth = Vec::new();
        match self.rank0_start(max_iter) {
            Ok(mut u) => {
                for _ in 1..=5 {
                    u = self.eta(u);
                    match self.deck_tau(u, max_iter) {
                        Ok(v) => u = v,
                        Err(_) => {
                            notes.push("rank growth stopped at a critical fiber".into());
                            break;
                        }
                    }
                    match self.classify(u, max_iter) {
                        Ok(PointClass::Escaping(n)) => rank_growth.push(n),
                        _ => {
                            notes.push("rank growth orbit left the escaping set".into());
                            break;
                        }
                    }
                }
            }
            Err(_) => notes.push("no rank-0 start found".into()),
        }

        GroupReport {
            involution_residual,
            tau_order_residual,
            fiber_residual,
            words,
            suspected_relations: suspected,
            rank_growth,
            dropped,
            notes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::poly::Poly;
    use crate::schwarz::{JordanDisk, QuadratureMultiDomain};
    use std::f64::consts::TAU;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn deltoid() -> Correspondence {
        let r = RationalMap::new(
            Poly::from_real(&[1.0, 0.0, 0.0, 0.5]),
            Poly::from_real(&[0.0, 1.0]),
            &tols(),
        )
        .unwrap();
        let qmd = QuadratureMultiDomain::build(vec![r], false, &tols()).unwrap();
        Correspondence::from_reflection(SchwarzReflection::new(qmd).unwrap()).unwrap()
    }

    fn cardioid() -> Correspondence {
        let r = RationalMap::from_poly(Poly::from_real(&[0.0, 1.0, 0.5]), &tols()).unwrap();
        let qmd = QuadratureMultiDomain::build(vec![r], false, &tols()).unwrap();
        Correspondence::from_reflection(SchwarzReflection::new(qmd).unwrap()).unwrap()
    }

    #[test]
    fn forward_multiplicity_is_the_degree() {
        let c = deltoid();
        assert_eq!(c.degree(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let z = Cx::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let u = SheetPoint::new(z, 1);
            let img = c.forward(u).unwrap();
            assert_eq!(img.multiplicity(), 2, "at {z:?}");
            assert!(img.residual < 1e-7, "residual {:.2e}", img.residual);
        }
    }

    #[test]
    fn cardioid_forward_is_the_schwarz_lift() {
        // degree Σ deg R_j − 1 = 1: a single forward image, which must be
        // the disk lift of the one-step map of the base point
        let c = cardioid();
        assert_eq!(c.degree(), 1);
        let r = c.rmap(0).clone();
        // points whose single forward image stays inside the disk, so the
        // one-step map of the base point resolves through the uniformizer
        for z in [
            Cx::new(-0.6, 0.0),
            Cx::new(-0.55, 0.1),
            Cx::new(-0.7, -0.05),
        ] {
            let u = SheetPoint::new(z, 1);
            let img = c.forward(u).unwrap();
            assert_eq!(img.multiplicity(), 1);
            let got = img.points[0].0;
            // oracle: invert the uniformizer on the disk at S(R(z))
            let sys = match &c.sys {
                Lifted::Reflection(s) => s,
                _ => unreachable!(),
            };
            let base_img = sys.eval(r.eval(z)).unwrap();
            let lift = r.univalent_inverse(base_img, None, &tols()).unwrap().point();
            assert!(
                got.z.chordal(Cx::from(lift)) < 1e-9,
                "forward {:?} vs lift {lift:?}",
                got.z
            );
        }
        // single cusp ⟹ a single welding node with a one-point class
        assert_eq!(c.nodes().len(), 1);
        assert_eq!(c.nodes()[0].len(), 1);
        let (sheet, w) = c.nodes()[0][0];
        assert_eq!(sheet, 1);
        assert!((w - Complex64::new(-1.0, 0.0)).norm() < 1e-6);
        assert!(c.near_node(SheetPoint::new(Cx::new(-0.9995, 0.0), 1)));
        assert!(!c.near_node(SheetPoint::new(Cx::new(0.5, 0.0), 1)));
    }

    #[test]
    fn forward_and_backward_are_exchanged_by_the_involution() {
        let c = deltoid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let z = Cx::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let u1 = SheetPoint::new(z, 1);
            for &(u2, _) in &c.forward(u1).unwrap().points {
                let back = c.forward(c.eta(u2)).unwrap();
                assert!(
                    back.contains(c.eta(u1), 1e-6),
                    "reversibility fails at {z:?}"
                );
            }
        }
    }

    #[test]
    fn partition_classes_travel_with_the_correspondence() {
        let c = deltoid();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        for _ in 0..60 {
            let z = Cx::new(rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
            let u = SheetPoint::new(z, 1);
            let class = c.classify(u, 64).unwrap();
            if matches!(class, PointClass::Undecided(_)) {
                continue;
            }
            // the involution preserves the class
            let eta_class = c.classify(c.eta(u), 64).unwrap();
            assert_eq!(
                matches!(class, PointClass::Escaping(_)),
                matches!(eta_class, PointClass::Escaping(_)),
                "involution changed the class at {z:?}"
            );
            // forward images share it
            for &(v, _) in &c.forward(u).unwrap().points {
                let fwd_class = c.classify(v, 64).unwrap();
                if matches!(fwd_class, PointClass::Undecided(_)) {
                    continue;
                }
                assert_eq!(
                    matches!(class, PointClass::Escaping(_)),
                    matches!(fwd_class, PointClass::Escaping(_)),
                    "partition broken at {z:?}"
                );
                checked += 1;
            }
        }
        assert!(checked > 50, "only {checked} pairs checked");
        // a point over the untiled region escapes immediately
        let tile = c
            .fiber(SheetPoint::new(Cx::new(1.9, 0.0), 1))
            .unwrap()
            .into_iter()
            .find(|p| !c.in_closed_disk(0, p.z));
        assert!(tile.is_some());
    }

    #[test]
    fn lifted_branch_semiconjugates_to_the_base_map() {
        let c = deltoid();
        let sys = match &c.sys {
            Lifted::Reflection(s) => s.clone(),
            _ => unreachable!(),
        };
        // start over a non-escaping base point (the superattracting basin
        // upstairs sits over small disk coordinates)
        let mut u = SheetPoint::new(Cx::new(0.35, 0.2), 1);
        assert!(matches!(
            c.classify(u, 64).unwrap(),
            PointClass::NonEscaping(_)
        ));
        for step in 0..50 {
            let base = c.base_point(u).unwrap();
            let expected = sys.eval(base).unwrap();
            let v = c.poly_branch(u, 64).unwrap();
            let got = c.base_point(v).unwrap();
            assert!(
                got.chordal(expected) <= 1e-6,
                "semiconjugacy residual {:.2e} at step {step}",
                got.chordal(expected)
            );
            u = v;
        }
        // a fixed boundary point lifts to a fixed point of the branch
        let w = Complex64::from_polar(1.0, 0.4 * TAU);
        let fixed = SheetPoint::new(Cx::from(w), 1);
        let img = c.poly_branch(fixed, 64).unwrap();
        assert_eq!(img.sheet, 1);
        assert!(img.z.chordal(fixed.z) < 1e-7);
        // membership is enforced
        assert!(c.poly_branch(SheetPoint::new(Cx::new(1.4, 0.0), 1), 64).is_err());
    }

    #[test]
    fn deck_map_cycles_fibers() {
        let c = deltoid();
        // base point inside the untiled central region: an escaping fiber
        let base = Cx::new(0.08, 0.03);
        let start = c
            .rmap(0)
            .preimages(base, &tols())
            .unwrap()
            .into_iter()
            .map(|(w, _)| SheetPoint::new(w, 1))
            .next()
            .unwrap();
        assert!(matches!(
            c.classify(start, 64).unwrap(),
            PointClass::Escaping(0)
        ));
        let fiber = c.fiber(start).unwrap();
        assert_eq!(fiber.len(), 3);
        // τ̌ preserves the base point and has order d + 1
        let mut v = start;
        for _ in 0..3 {
            let next = c.deck_tau(v, 64).unwrap();
            assert!(c
                .base_point(next)
                .unwrap()
                .chordal(c.base_point(start).unwrap())
                <= 1e-9);
            v = next;
        }
        assert!(v.z.chordal(start.z) <= 1e-8, "τ̌³ residual {:.2e}", v.z.chordal(start.z));
        // forward images on the escaping set are exactly the deck twists of
        // the involution image
        let img = c.forward(start).unwrap();
        let e = c.eta(start);
        let t1 = c.deck_tau(e, 64).unwrap();
        let t2 = c.deck_tau(t1, 64).unwrap();
        assert_eq!(img.multiplicity(), 2);
        assert!(img.contains(t1, 1e-7) && img.contains(t2, 1e-7));
    }

    #[test]
    fn generator_orders_and_free_words() {
        let c = deltoid();
        let samples: Vec<SheetPoint> = [
            Cx::new(0.07, 0.01),
            Cx::new(-0.05, 0.06),
            Cx::new(0.02, -0.09),
        ]
        .iter()
        .flat_map(|&b| {
            c.rmap(0)
                .preimages(b, &tols())
                .unwrap()
                .into_iter()
                .map(|(w, _)| SheetPoint::new(w, 1))
        })
        .collect();
        let report = c.group_relation_check(&samples, 6, 42, 64);
        assert!(report.involution_residual <= 1e-14);
        assert!(report.tau_order_residual <= 1e-8, "τ order residual {:.2e}", report.tau_order_residual);
        assert!(report.fiber_residual <= 1e-9, "fiber residual {:.2e}", report.fiber_residual);
        assert_eq!(report.suspected_relations, 0);
        assert!(report.words.iter().all(|w| w.samples_used > 0));
        // rank strictly increases along (τ̌∘η̌)^r
        assert_eq!(report.rank_growth, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn involution_systems_lift_too() {
        // two paired round disks with swapped sheets under η(z) = 1/z
        let r0 = RationalMap::from_poly(Poly::from_real(&[0.0, 1.0, 0.3]), &tols()).unwrap();
        let r1 = RationalMap::new(
            Poly::from_real(&[-19.0, 5.0]),
            Poly::from_real(&[-4.0, 1.0]),
            &tols(),
        )
        .unwrap();
        let b = BInvolution::new(
            vec![r0, r1],
            vec![
                JordanDisk::round(Complex64::new(0.0, 0.0), 0.5),
                JordanDisk::round(Complex64::new(0.0, 0.0), 2.0),
            ],
            vec![1, 0],
            &tols(),
        )
        .unwrap();
        let c = Correspondence::from_involution(b).unwrap();
        assert!(!c.is_anti());
        assert_eq!(c.degree(), 2);
        assert_eq!(c.sheet_count(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let z = Cx::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let sheet = rng.random_range(1..=2);
            let u = SheetPoint::new(z, sheet);
            let img = c.forward(u).unwrap();
            assert_eq!(img.multiplicity(), 2, "at {z:?} sheet {sheet}");
            // reversibility across sheets
            for &(v, _) in &img.points {
                assert!(
                    c.forward(c.eta(v)).unwrap().contains(c.eta(u), 1e-6),
                    "reversibility fails at {z:?}"
                );
            }
        }
        // η̌ is the plain inversion here
        let u = SheetPoint::new(Cx::new(0.2, 0.1), 1);
        assert!(c.eta(u).z.chordal(Cx::new(0.2, 0.1).inv()) == 0.0);
    }

    #[test]
    fn sheet_indices_are_validated() {
        let c = cardioid();
        assert!(c.forward(SheetPoint::new(Cx::ZERO, 0)).is_err());
        assert!(c.forward(SheetPoint::new(Cx::ZERO, 2)).is_err());
        assert!(c.base_point(SheetPoint::new(Cx::ZERO, 1)).is_ok());
    }
}
