//! Rays and laminations.
//!
//! A ray is indexed by a sequence of reflection symbols. In the group model
//! ([`gd_ray`]) the symbols name sides of the regular ideal polygon and the
//! ray is the orbit polyline of the origin under the growing reflection word.
//! In a reflection system ([`dynamical_ray`]) the symbols name the marked
//! boundary arcs of the fundamental tile, and the ray is produced by
//! inverse-branch lifting of a tile base point. Landing points of eventually
//! periodic rays ([`landing_point`]) feed the co-landing equivalence
//! relations ([`rational_lamination`], [`coarse_lamination`]); the finite
//! fixed-angle laminations have their own enumeration and gap arithmetic.

use crate::angle::{chords_cross, Angle, MapSign};
use crate::config::Tolerances;
use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::hyperbolic::{Moebius, NielsenMap};
use crate::schwarz::{Connectivity, SchwarzReflection};
use num::bigint::BigInt;
use num::rational::BigRational;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;

/// Largest defect `|S^{∘period}(x) − x|` accepted when certifying a landing
/// point of an eventually periodic ray.
pub const PERIODIC_DEFECT_TOL: f64 = 1e-6;

/// Tail scatter beyond which a ray is considered non-Cauchy at the given
/// depth, producing [`Error::Unresolved`].
pub const CAUCHY_SCATTER_TOL: f64 = 1e-3;

/// An infinite (eventually periodic) or finite sequence of 1-based reflection
/// symbols with no immediate repetition, the combinatorial address of a ray.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolSequence {
    head: Vec<usize>,
    period: Vec<usize>,
}

impl SymbolSequence {
    /// Sequence `head · period · period · …`; `period` empty means finite.
    pub fn preperiodic(head: &[usize], period: &[usize]) -> Result<SymbolSequence> {
        if head.is_empty() && period.is_empty() {
            return Err(Error::InvalidAngle("empty symbol sequence".into()));
        }
        for &s in head.iter().chain(period) {
            if s == 0 {
                return Err(Error::InvalidAngle("symbols are 1-based".into()));
            }
        }
        let reps = |a: usize, b: usize| a == b;
        for w in head.windows(2) {
            if reps(w[0], w[1]) {
                return Err(Error::InvalidAngle(format!(
                    "immediate repetition of symbol {}",
                    w[0]
                )));
            }
        }
        for w in period.windows(2) {
            if reps(w[0], w[1]) {
                return Err(Error::InvalidAngle(format!(
                    "immediate repetition of symbol {}",
                    w[0]
                )));
            }
        }
        if !period.is_empty() {
            if let Some(&last) = head.last() {
                if reps(last, period[0]) {
                    return Err(Error::InvalidAngle(format!(
                        "immediate repetition of symbol {last} at the periodic junction"
                    )));
                }
            }
            // the period repeats, so its last symbol abuts its first
            if reps(period[period.len() - 1], period[0]) {
                return Err(Error::InvalidAngle(format!(
                    "period repeats symbol {} across its seam",
                    period[0]
                )));
            }
        }
        Ok(SymbolSequence {
            head: head.to_vec(),
            period: period.to_vec(),
        })
    }

    pub fn periodic(period: &[usize]) -> Result<SymbolSequence> {
        SymbolSequence::preperiodic(&[], period)
    }

    pub fn finite(head: &[usize]) -> Result<SymbolSequence> {
        SymbolSequence::preperiodic(head, &[])
    }

    /// The 2-periodic sequence `i, j, i, j, …` of a ray at a polygon vertex.
    pub fn alternating(i: usize, j: usize) -> Result<SymbolSequence> {
        SymbolSequence::periodic(&[i, j])
    }

    /// `"1,2"` is finite; `"1,2|3,2"` is head `1,2` with period `3,2`;
    /// `"|1,3"` is purely periodic.
    pub fn parse(text: &str) -> Result<SymbolSequence> {
        let parse_part = |part: &str| -> Result<Vec<usize>> {
            part.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidAngle(format!("bad symbol {t:?}")))
                })
                .collect()
        };
        let mut parts = text.splitn(2, '|');
        let first = parse_part(parts.next().unwrap_or(""))?;
        match parts.next() {
            Some(second) => SymbolSequence::preperiodic(&first, &parse_part(second)?),
            None => SymbolSequence::finite(&first),
        }
    }

    /// Symbol at position `k`, `None` past the end of a finite sequence.
    pub fn symbol(&self, k: usize) -> Option<usize> {
        if k < self.head.len() {
            Some(self.head[k])
        } else if self.period.is_empty() {
            None
        } else {
            Some(self.period[(k - self.head.len()) % self.period.len()])
        }
    }

    /// Number of available symbols for a finite sequence, `None` if infinite.
    pub fn available(&self) -> Option<usize> {
        if self.period.is_empty() {
            Some(self.head.len())
        } else {
            None
        }
    }

    pub fn is_eventually_periodic(&self) -> bool {
        !self.period.is_empty()
    }

    pub fn preperiod_len(&self) -> usize {
        self.head.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn max_symbol(&self) -> usize {
        self.head
            .iter()
            .chain(&self.period)
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// The sequence with the first symbol dropped.
    pub fn shifted(&self) -> Result<SymbolSequence> {
        if !self.head.is_empty() {
            SymbolSequence::preperiodic(&self.head[1..], &self.period)
        } else if self.period.len() > 1 {
            let mut rot = self.period[1..].to_vec();
            rot.push(self.period[0]);
            SymbolSequence::periodic(&rot)
        } else {
            Err(Error::InvalidAngle("cannot shift an exhausted sequence".into()))
        }
    }
}

impl fmt::Display for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        if self.period.is_empty() {
            write!(f, "{}", join(&self.head))
        } else {
            write!(f, "{}|{}", join(&self.head), join(&self.period))
        }
    }
}

/// Which one-sided limit of a circle point a ray address refers to:
/// `Above` is the counterclockwise side `θ⁺`, `Below` is `θ⁻`. The
/// distinction only matters when the angle orbit hits an arc endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Above,
    Below,
}

impl Side {
    fn flip(self) -> Side {
        match self {
            Side::Above => Side::Below,
            Side::Below => Side::Above,
        }
    }
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num as i64), BigInt::from(den as i64))
}

/// The 1-based arc symbol of the one-sided point `θ^±` for the partition of
/// the circle into the `d+1` closed arcs `[(i−1)/(d+1), i/(d+1)]`.
fn arc_symbol(d: usize, theta: &Angle, side: Side) -> usize {
    let n = d + 1;
    let scaled = theta.big() * BigRational::from(BigInt::from(n as i64));
    if scaled.is_integer() {
        let j: usize = scaled
            .to_integer()
            .try_into()
            .expect("normalized angle times d+1 is a small non-negative integer");
        match side {
            Side::Above => (j % n) + 1,
            Side::Below => {
                if j == 0 {
                    n
                } else {
                    j
                }
            }
        }
    } else {
        let floor: usize = scaled
            .floor()
            .to_integer()
            .try_into()
            .expect("normalized angle floor is small");
        floor + 1
    }
}

/// First `depth` arc symbols of the orbit of `θ^side` under `θ ↦ −dθ`.
/// The map reverses orientation, so the side flips every step.
pub fn angle_itinerary(d: usize, theta: &Angle, side: Side, depth: usize) -> Vec<usize> {
    let mut th = theta.clone();
    let mut sd = side;
    let mut out = Vec::with_capacity(depth);
    for _ in 0..depth {
        out.push(arc_symbol(d, &th, sd));
        th = th.map(d as i64, MapSign::AntiHolomorphic);
        sd = sd.flip();
    }
    out
}

/// The exact eventually periodic symbol sequence of a rational angle under
/// `θ ↦ −dθ`. Rational orbits close up, so this always terminates.
pub fn symbols_of_angle(d: usize, theta: &Angle, side: Side) -> Result<SymbolSequence> {
    let mut seen: HashMap<(Angle, Side), usize> = HashMap::new();
    let mut syms: Vec<usize> = Vec::new();
    let mut th = theta.clone();
    let mut sd = side;
    loop {
        if let Some(&at) = seen.get(&(th.clone(), sd)) {
            return SymbolSequence::preperiodic(&syms[..at], &syms[at..]);
        }
        seen.insert((th.clone(), sd), syms.len());
        syms.push(arc_symbol(d, &th, sd));
        th = th.map(d as i64, MapSign::AntiHolomorphic);
        sd = sd.flip();
    }
}

/// The angle whose `θ ↦ −dθ` itinerary starts with the symbols of `seq`:
/// midpoint of the exact cylinder interval at depth `min(64, available)`, so
/// it is accurate to about `d^{−64}` for infinite sequences and exact as a
/// cylinder representative for finite ones.
pub fn model_angle(d: usize, seq: &SymbolSequence) -> Result<Angle> {
    if d < 2 {
        return Err(Error::InvalidAngle("the angle model needs d ≥ 2".into()));
    }
    let n = d + 1;
    let depth = match seq.available() {
        Some(m) => m.min(64),
        None => 64,
    };
    if seq.max_symbol() > n {
        return Err(Error::InvalidAngle(format!(
            "symbol {} exceeds the {} arcs of degree {}",
            seq.max_symbol(),
            n,
            d
        )));
    }
    let s_last = seq.symbol(depth - 1).expect("depth is within bounds");
    let mut a = ratio(s_last - 1, n);
    let mut b = ratio(s_last, n);
    let d_big = BigRational::from(BigInt::from(d as i64));
    for k in (0..depth - 1).rev() {
        let s = seq.symbol(k).expect("depth is within bounds");
        let lo = ratio(s - 1, n);
        let hi = ratio(s, n);
        // θ ↦ −dθ sends [θ_a, θ_b] ⊂ J_s onto [a, b] with a reversal:
        // the branch preimages are t ↦ (j − t)/d for integer j.
        let mut found = false;
        for j in 0..=d as i64 {
            let jr = BigRational::from(BigInt::from(j));
            let na = (jr.clone() - b.clone()) / d_big.clone();
            let nb = (jr - a.clone()) / d_big.clone();
            if na >= lo && nb <= hi {
                a = na;
                b = nb;
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::InvalidAngle(format!(
                "no angle realizes symbol {s} at position {k}"
            )));
        }
    }
    Ok(Angle::from_big((a + b) / BigRational::from(BigInt::from(2))))
}

/// A computed ray: the polyline of lift anchors, the angle of its
/// combinatorial address, the accepted landing value with its residual (when
/// resolved), and a truncation diagnostic (when the lift stopped early).
#[derive(Clone, Debug)]
pub struct RayTrace {
    pub points: Vec<Cx>,
    pub angle: f64,
    pub landing: Option<(Cx, f64)>,
    pub diagnostic: Option<String>,
}

/// The attracting or parabolic circle fixed point of a reduced reflection
/// word: the quadratic fixed-point equation of the (squared, if
/// orientation-reversing) word, filtered to the unit circle and to
/// non-repelling multiplier. Cyclically reduced words in the ideal polygon
/// group are hyperbolic or parabolic, so this exists; degenerate input gives
/// `None`.
fn word_circle_fixed_point(v: &Moebius) -> Option<(Complex64, f64)> {
    let w = if v.anti { v.compose(v) } else { *v };
    let (a, b, c, d) = (w.a, w.b, w.c, w.d);
    let scale = a.norm() + b.norm() + c.norm() + d.norm();
    let candidates: Vec<Complex64> = if c.norm() < 1e-14 * scale {
        let dd = d - a;
        if dd.norm() < 1e-12 * scale {
            return None;
        }
        vec![b / dd]
    } else {
        let half = (a - d) / (2.0 * c);
        let disc = half * half + b / c;
        let sq = disc.sqrt();
        vec![half + sq, half - sq]
    };
    let det = a * d - b * c;
    let mut best: Option<(f64, Complex64, f64)> = None;
    for z in candidates {
        if (z.norm() - 1.0).abs() > 1e-6 || z.norm() == 0.0 {
            continue;
        }
        let z = z / z.norm();
        let deriv = det / ((c * z + d) * (c * z + d));
        if deriv.norm() > 1.0 + 1e-9 {
            continue;
        }
        let defect = v.apply(Cx::from(z)).dist(Cx::from(z));
        if defect > 1e-6 {
            continue;
        }
        if best.map_or(true, |(s, _, _)| deriv.norm() < s) {
            best = Some((deriv.norm(), z, defect));
        }
    }
    best.map(|(_, z, defect)| (z, defect.max(1e-15)))
}

/// The group-model ray of a symbol sequence: the polyline through the orbit
/// of `0` under the partial reflection words `ρ_{i₁}⋯ρ_{i_k}`, `k ≤ depth`.
/// An eventually periodic address lands at the head word's image of the
/// periodic word's attracting circle fixed point, computed in closed form.
pub fn gd_ray(d: usize, seq: &SymbolSequence, depth: usize) -> Result<RayTrace> {
    let map = NielsenMap::new(d)?;
    if seq.max_symbol() > d + 1 {
        return Err(Error::InvalidAngle(format!(
            "symbol {} exceeds the {} polygon sides",
            seq.max_symbol(),
            d + 1
        )));
    }
    if let Some(n) = seq.available() {
        if n < depth {
            return Err(Error::InvalidAngle(format!(
                "depth {depth} exceeds the {n} available symbols"
            )));
        }
    }
    let mut points = vec![Cx::ZERO];
    let mut word = Moebius::identity();
    for k in 0..depth {
        let i = seq.symbol(k).expect("depth checked against available symbols");
        word = word.compose(&Moebius::from_reflection(map.side_circle(i))).normalized();
        points.push(word.apply(Cx::ZERO));
    }
    let landing = if seq.is_eventually_periodic() {
        let mut head_word = Moebius::identity();
        for k in 0..seq.preperiod_len() {
            let i = seq.symbol(k).expect("within the head");
            head_word = head_word
                .compose(&Moebius::from_reflection(map.side_circle(i)))
                .normalized();
        }
        let mut per_word = Moebius::identity();
        for k in seq.preperiod_len()..seq.preperiod_len() + seq.period_len() {
            let i = seq.symbol(k).expect("within one period");
            per_word = per_word
                .compose(&Moebius::from_reflection(map.side_circle(i)))
                .normalized();
        }
        word_circle_fixed_point(&per_word)
            .map(|(xi, defect)| (head_word.apply(Cx::from(xi)), defect))
    } else {
        None
    };
    let angle = match &landing {
        Some((p, _)) if !p.is_inf() => (p.arg() / TAU).rem_euclid(1.0),
        _ => points
            .last()
            .filter(|p| !p.is_inf())
            .map(|p| (p.arg() / TAU).rem_euclid(1.0))
            .unwrap_or(f64::NAN),
    };
    Ok(RayTrace {
        points,
        angle,
        landing,
        diagnostic: None,
    })
}

/// The same ray as a dense polyline: each word step contributes `subdiv`
/// samples of the image of the radial geodesic from `0` to `ρ_i(0)`, so the
/// output follows the hyperbolic geodesic concatenation rather than cutting
/// corners between anchors.
pub fn gd_ray_polyline(
    d: usize,
    seq: &SymbolSequence,
    depth: usize,
    subdiv: usize,
) -> Result<Vec<Complex64>> {
    let map = NielsenMap::new(d)?;
    if let Some(n) = seq.available() {
        if n < depth {
            return Err(Error::InvalidAngle(format!(
                "depth {depth} exceeds the {n} available symbols"
            )));
        }
    }
    let subdiv = subdiv.max(1);
    let mut out = vec![Complex64::new(0.0, 0.0)];
    let mut word = Moebius::identity();
    for k in 0..depth {
        let i = seq.symbol(k).expect("depth checked against available symbols");
        let refl = Moebius::from_reflection(map.side_circle(i));
        let target = refl.apply(Cx::ZERO);
        let tf = target
            .try_fin()
            .ok_or_else(|| Error::InvalidSystem("reflection sent 0 to ∞".into()))?;
        for t in 1..=subdiv {
            let frac = t as f64 / subdiv as f64;
            let z = word.apply(Cx::from(tf * frac));
            if let Some(zf) = z.try_fin() {
                out.push(zf);
            }
        }
        word = word.compose(&refl);
    }
    Ok(out)
}

/// The marked boundary arcs of a reflection system: each domain circle is cut
/// at its cusp parameters and tangency parameters, and the resulting arcs are
/// numbered `1..=d+1` domain-major in counterclockwise order. These arcs
/// carry the ray symbols.
struct ArcMarking {
    /// `(domain, start turn, ccw length)` per 1-based symbol, in order.
    arcs: Vec<(usize, f64, f64)>,
}

impl ArcMarking {
    /// The symbol of the arc of domain `j` containing parameter `t` (turns),
    /// `None` within `1e-9` of a cut point.
    fn symbol_at(&self, j: usize, t: f64) -> Option<usize> {
        for (idx, &(dom, start, len)) in self.arcs.iter().enumerate() {
            if dom != j {
                continue;
            }
            let off = (t - start).rem_euclid(1.0);
            if off > 1e-9 && off < len - 1e-9 {
                return Some(idx + 1);
            }
        }
        None
    }
}

fn boundary_marking(s: &SchwarzReflection) -> Result<ArcMarking> {
    let qmd = s.qmd();
    let tol = qmd.tolerances();
    let mut arcs: Vec<(usize, f64, f64)> = Vec::new();
    for j in 0..qmd.count() {
        let r = qmd.map(j);
        let mut cuts: Vec<f64> = Vec::new();
        let (crits, _) = r.critical_points(tol)?;
        for c in &crits {
            if (c.z.norm() - 1.0).abs() <= 1e-9 {
                cuts.push((c.z.arg() / TAU).rem_euclid(1.0));
            }
        }
        for touch in qmd.touching() {
            if touch.i != j && touch.j != j {
                continue;
            }
            let dp = r.univalent_inverse(Cx::from(touch.point), None, tol)?;
            cuts.push((dp.point().arg() / TAU).rem_euclid(1.0));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if cuts.len() > 1 && (cuts[0] + 1.0 - cuts[cuts.len() - 1]).abs() < 1e-9 {
            cuts.pop();
        }
        if cuts.is_empty() {
            return Err(Error::InvalidSystem(format!(
                "domain {j} has no cusps or tangencies to cut marked arcs"
            )));
        }
        for (k, &start) in cuts.iter().enumerate() {
            let end = cuts[(k + 1) % cuts.len()];
            let len = if cuts.len() == 1 {
                1.0
            } else {
                (end - start).rem_euclid(1.0)
            };
            arcs.push((j, start, len));
        }
    }
    if arcs.len() != s.degree() + 1 {
        return Err(Error::InvalidSystem(format!(
            "boundary marking has {} arcs but the reflection needs {}",
            arcs.len(),
            s.degree() + 1
        )));
    }
    Ok(ArcMarking { arcs })
}

/// A base point of the fundamental tile: outside every closed domain.
fn default_base(s: &SchwarzReflection) -> Result<Cx> {
    let qmd = s.qmd();
    let mut rho: f64 = 1.0;
    for j in 0..qmd.count() {
        for k in 0..64 {
            let p = qmd.boundary_point(j, k as f64 / 64.0);
            if let Some(pf) = p.try_fin() {
                rho = rho.max(pf.norm());
            }
        }
    }
    let far = 2.0 * rho + 1.0;
    let candidates = [
        Cx::ZERO,
        Cx::new(0.11, 0.07),
        Cx::new(far, 0.0),
        Cx::new(0.0, far),
        Cx::new(-far, 0.0),
        Cx::new(0.0, -far),
    ];
    for cand in candidates {
        if qmd.locate(cand)?.is_none() {
            return Ok(cand);
        }
    }
    Err(Error::InvalidSystem(
        "no fundamental-tile base point found; pass one explicitly".into(),
    ))
}

/// Preimages of `target` inside the domains, collapsed to distinct points.
fn distinct_preimages(s: &SchwarzReflection, target: Cx) -> Result<Vec<Cx>> {
    let mut out: Vec<Cx> = Vec::new();
    for z in s.preimages_in_domain(target)? {
        if !out.iter().any(|p| p.chordal(z) < 1e-9) {
            out.push(z);
        }
    }
    Ok(out)
}

/// Rank-1 branch selection: the preimage whose disk parameter sits in the
/// marked arc named by `symbol`.
fn pick_by_symbol(
    s: &SchwarzReflection,
    marking: &ArcMarking,
    target: Cx,
    symbol: usize,
) -> Result<Cx> {
    let mut hits: Vec<Cx> = Vec::new();
    for z in distinct_preimages(s, target)? {
        let Some((j, dp)) = s.qmd().locate(z)? else {
            continue;
        };
        let t = (dp.point().arg() / TAU).rem_euclid(1.0);
        if marking.symbol_at(j, t) == Some(symbol) {
            hits.push(z);
        }
    }
    match hits.len() {
        1 => Ok(hits[0]),
        0 => Err(Error::InvalidAngle(format!(
            "no rank-1 preimage in marked arc {symbol}"
        ))),
        n => Err(Error::AmbiguousBranch {
            separation: (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .map(|(a, b)| hits[a].chordal(hits[b]))
                .fold(f64::INFINITY, f64::min),
        }),
    }
}

/// Deep branch selection: the preimage of `target` nearest the anchor from
/// the previous level, with a tie guard.
fn pick_nearest(s: &SchwarzReflection, target: Cx, anchor: Cx, tie_tol: f64) -> Result<Cx> {
    let cands = distinct_preimages(s, target)?;
    if cands.is_empty() {
        return Err(Error::InvalidAngle(
            "target has no preimage in the domains".into(),
        ));
    }
    let mut order: Vec<(f64, Cx)> = cands.into_iter().map(|z| (anchor.chordal(z), z)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    if order.len() > 1 {
        let separation = order[1].0 - order[0].0;
        if separation < tie_tol {
            return Err(Error::AmbiguousBranch { separation });
        }
    }
    Ok(order[0].1)
}

/// The dynamical ray of a symbol sequence in a reflection system with
/// non-escaping critical orbits: anchors `P_k` obtained by `k`-fold
/// inverse-branch lifting of a fundamental-tile base point, where the rank-1
/// branch is named by the current symbol's marked arc and deeper branches
/// follow the previous level by continuity. Branch ambiguities truncate the
/// trace and leave a diagnostic instead of failing.
pub fn dynamical_ray(
    s: &SchwarzReflection,
    seq: &SymbolSequence,
    depth: usize,
    base: Option<Cx>,
) -> Result<RayTrace> {
    if seq.max_symbol() > s.degree() + 1 {
        return Err(Error::InvalidAngle(format!(
            "symbol {} exceeds the {} marked arcs",
            seq.max_symbol(),
            s.degree() + 1
        )));
    }
    if let Some(n) = seq.available() {
        if n < depth {
            return Err(Error::InvalidAngle(format!(
                "depth {depth} exceeds the {n} available symbols"
            )));
        }
    }
    let report = s.connectedness_test(40)?;
    if report.verdict == Connectivity::Disconnected {
        return Err(Error::InvalidSystem(
            "rays are only defined when every critical orbit is non-escaping".into(),
        ));
    }
    let marking = boundary_marking(s)?;
    let base = match base {
        Some(b) => {
            if s.qmd().locate(b)?.is_some() {
                return Err(Error::InvalidSystem(
                    "base point must lie in the fundamental tile".into(),
                ));
            }
            b
        }
        None => default_base(s)?,
    };
    let tie_tol = s.qmd().tolerances().branch_tie_tol;
    let mut points = vec![base];
    let mut prev: Vec<Cx> = vec![base; depth + 1];
    let mut diagnostic = None;
    'lift: for level in 1..=depth {
        let mut cur: Vec<Cx> = Vec::with_capacity(depth - level + 1);
        for shift in 0..=depth - level {
            let target = prev[shift + 1];
            let picked = if level == 1 {
                let sym = seq.symbol(shift).expect("depth checked");
                pick_by_symbol(s, &marking, target, sym)
            } else {
                pick_nearest(s, target, prev[shift], tie_tol)
            };
            match picked {
                Ok(z) => cur.push(z),
                Err(e @ (Error::AmbiguousBranch { .. } | Error::InvalidAngle(_))) => {
                    diagnostic = Some(format!("truncated at lifting depth {level}: {e}"));
                    break 'lift;
                }
                Err(e) => return Err(e),
            }
        }
        points.push(cur[0]);
        prev = cur;
    }
    let angle = model_angle(s.degree(), seq)?.to_f64();
    Ok(RayTrace {
        points,
        angle,
        landing: None,
        diagnostic,
    })
}

fn push_candidate(seq: &[Complex64], out: &mut Vec<(Complex64, f64)>) {
    let Some(&est) = seq.last() else { return };
    let take = seq.len().min(3);
    let scatter = seq[seq.len() - take..]
        .iter()
        .map(|p| (p - est).norm())
        .fold(0.0, f64::max)
        .max(5e-16 * (1.0 + est.norm()));
    out.push((est, scatter));
}

fn aitken_stage(xs: &[Complex64]) -> Vec<Complex64> {
    xs.windows(3)
        .map(|w| {
            let d1 = w[1] - w[0];
            let d2 = w[2] - w[1];
            let dd = d2 - d1;
            if dd.norm() < 1e-14 * (d1.norm() + d2.norm()) + 1e-300 {
                w[2]
            } else {
                w[2] - d2 * d2 / dd
            }
        })
        .collect()
}

fn richardson_stage(ks: &[f64], xs: &[Complex64], alpha: f64) -> (Vec<f64>, Vec<Complex64>) {
    let mut ks_out = Vec::with_capacity(xs.len() - 1);
    let mut xs_out = Vec::with_capacity(xs.len() - 1);
    for i in 0..xs.len() - 1 {
        let a0 = ks[i].powf(alpha);
        let a1 = ks[i + 1].powf(alpha);
        if (a1 - a0).abs() < 1e-12 * (a0 + a1) {
            continue;
        }
        ks_out.push(ks[i + 1]);
        xs_out.push((xs[i + 1] * a1 - xs[i] * a0) / (a1 - a0));
    }
    (ks_out, xs_out)
}

/// Least-squares fit of `|x_{k+1} − x_k)| ≈ c·k^{−α−1}` on the tail half,
/// `None` when the gaps vanish or the fit is degenerate.
fn fitted_decay_exponent(ks: &[f64], xs: &[Complex64]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..xs.len() - 1 {
        let g = (xs[i + 1] - xs[i]).norm();
        if g > 1e-300 {
            pts.push((0.5 * (ks[i] + ks[i + 1]), g));
        }
    }
    // the asymptotic regime is at the deep end; early gaps bias the slope
    let keep = (pts.len() / 2).max(6).min(pts.len());
    let pts = &pts[pts.len() - keep..];
    if pts.len() < 4 {
        return None;
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(k, g)| (k.ln(), g.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let alpha = -slope - 1.0;
    if alpha.is_finite() && (0.05..=20.0).contains(&alpha) {
        Some(alpha)
    } else {
        None
    }
}

/// Extrapolated limits of the ray tail, subsampled at the period stride.
/// Runs the raw tail, iterated Aitken Δ² (sharp for geometric convergence),
/// and a fitted-exponent Richardson ladder (for the power-law approach
/// typical of cusp and parabolic landings); every stage contributes a
/// candidate `(estimate, tail scatter)`, sorted by scatter.
fn tail_estimates(points: &[Cx], stride: usize) -> Vec<(Complex64, f64)> {
    let stride = stride.max(1);
    let mut ks: Vec<f64> = Vec::new();
    let mut xs: Vec<Complex64> = Vec::new();
    let mut i = points.len() as isize - 1;
    while i >= 1 {
        match points[i as usize].try_fin() {
            Some(p) => xs.push(p),
            None => return Vec::new(),
        }
        ks.push(i as f64 / stride as f64);
        i -= stride as isize;
    }
    xs.reverse();
    ks.reverse();
    let mut candidates: Vec<(Complex64, f64)> = Vec::new();
    push_candidate(&xs, &mut candidates);
    if xs.len() >= 4 {
        let mut cur = xs.clone();
        for _ in 0..5 {
            if cur.len() < 3 {
                break;
            }
            cur = aitken_stage(&cur);
            push_candidate(&cur, &mut candidates);
        }
        if let Some(alpha) = fitted_decay_exponent(&ks, &xs) {
            let mut rk = ks.clone();
            let mut rx = xs.clone();
            let mut a = alpha;
            for _ in 0..3 {
                if rx.len() < 3 {
                    break;
                }
                let (nk, nx) = richardson_stage(&rk, &rx, a);
                rk = nk;
                rx = nx;
                push_candidate(&rx, &mut candidates);
                a += 1.0;
            }
        }
    }
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1));
    candidates
}

fn best_tail_estimate(points: &[Cx], stride: usize) -> Option<(Complex64, f64)> {
    tail_estimates(points, stride).into_iter().next()
}

/// One reflection step continued across the domain boundary: when `z` has
/// drifted just outside every domain (as extrapolated landing estimates near
/// the boundary do), apply `R_j(1/w̄)` through the nearest uniformizer
/// parameter in a thin collar around the unit circle.
fn boundary_continued_step(s: &SchwarzReflection, z: Cx) -> Result<Cx> {
    let qmd = s.qmd();
    let mut best: Option<(f64, usize, Complex64)> = None;
    for j in 0..qmd.count() {
        for (w, _) in qmd.map(j).preimages(z, qmd.tolerances())? {
            let Some(wf) = w.try_fin() else { continue };
            let off = (wf.norm() - 1.0).abs();
            if off < best.map_or(0.05, |b| b.0) {
                best = Some((off, j, wf));
            }
        }
    }
    let Some((_, j, wf)) = best else {
        return Err(Error::OutsideDomain);
    };
    Ok(qmd.map(j).eval(Cx::from(wf.conj()).inv()))
}

/// `|S^{∘p}(x) − x|` in the chordal metric, tolerating estimates a hair
/// outside the closed domains.
fn periodic_defect(s: &SchwarzReflection, x: Cx, p: usize) -> Result<f64> {
    let mut y = x;
    for _ in 0..p {
        y = match s.eval(y) {
            Ok(v) => v,
            Err(Error::OutsideDomain) => boundary_continued_step(s, y)?,
            Err(e) => return Err(e),
        };
    }
    Ok(y.chordal(x))
}

/// The landing value of an eventually periodic ray: the trace is computed to
/// `depth`, its periodic tail is extrapolated, and the estimate is certified
/// by the return-map defect `|S^{∘period}(x) − x| ≤ 1e−6`. A non-Cauchy tail
/// or a failed certificate yields [`Error::Unresolved`]. Returns the landing
/// point and the residual `max(tail scatter, return defect)`.
pub fn landing_point(s: &SchwarzReflection, seq: &SymbolSequence, depth: usize) -> Result<(Cx, f64)> {
    if !seq.is_eventually_periodic() {
        return Err(Error::InvalidAngle(
            "landing needs an eventually periodic symbol sequence".into(),
        ));
    }
    let trace = dynamical_ray(s, seq, depth, None)?;
    let reached = trace.points.len() - 1;
    if trace.diagnostic.is_some() {
        let scatter = best_tail_estimate(&trace.points, seq.period_len())
            .map(|(_, sc)| sc)
            .unwrap_or(f64::INFINITY);
        return Err(Error::Unresolved {
            depth: reached,
            residual: scatter,
        });
    }
    let candidates = tail_estimates(&trace.points, seq.period_len());
    if candidates.is_empty() {
        return Err(Error::Unresolved {
            depth: reached,
            residual: f64::INFINITY,
        });
    }
    // certify the best-scattered estimates by the return-map defect
    let mut worst = f64::INFINITY;
    for &(est, scatter) in candidates.iter().take(3) {
        if scatter > CAUCHY_SCATTER_TOL {
            break;
        }
        let defect = periodic_defect(s, Cx::from(est), seq.period_len()).unwrap_or(f64::INFINITY);
        if defect <= PERIODIC_DEFECT_TOL {
            return Ok((Cx::from(est), scatter.max(defect)));
        }
        worst = worst.min(defect.max(scatter));
    }
    Err(Error::Unresolved {
        depth: reached,
        residual: if worst.is_finite() { worst } else { candidates[0].1 },
    })
}

/// Which finite lamination a class list came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaminationKind {
    /// Pairing of the `d+1` fixed angles `j/(d+1)`.
    FixedRay,
    /// Co-landing classes of a sampled set of rational angles.
    Rational,
    /// Boundary identifications of the `p` marked ideal points `i/p`.
    Coarse,
}

/// A finite lamination: classes of angles identified by co-landing, pairwise
/// unlinked. `partial` marks a rational lamination with unresolved angles
/// omitted; the omissions are listed in `warnings`.
#[derive(Clone, Debug)]
pub struct Lamination {
    pub classes: Vec<Vec<Angle>>,
    pub kind: LaminationKind,
    pub partial: bool,
    pub warnings: Vec<String>,
}

impl Lamination {
    /// Sorts the classes, checks disjointness and pairwise unlinkedness.
    pub fn new(kind: LaminationKind, classes: Vec<Vec<Angle>>) -> Result<Lamination> {
        let mut classes: Vec<Vec<Angle>> = classes
            .into_iter()
            .map(|mut c| {
                c.sort();
                c
            })
            .collect();
        classes.sort_by(|a, b| a.first().cmp(&b.first()));
        let lam = Lamination {
            classes,
            kind,
            partial: false,
            warnings: Vec::new(),
        };
        let mut seen: Vec<&Angle> = Vec::new();
        for class in &lam.classes {
            if class.is_empty() {
                return Err(Error::InvalidAngle("empty lamination class".into()));
            }
            for a in class {
                if seen.contains(&a) {
                    return Err(Error::InvalidAngle(format!(
                        "angle {a} appears in two classes"
                    )));
                }
                seen.push(a);
            }
        }
        lam.check_unlinked()?;
        Ok(lam)
    }

    /// The chords of a class: its single chord for a pair, the polygon sides
    /// for a larger class, nothing for a singleton.
    fn class_chords(class: &[Angle]) -> Vec<(Angle, Angle)> {
        match class.len() {
            0 | 1 => Vec::new(),
            2 => vec![(class[0].clone(), class[1].clone())],
            n => (0..n)
                .map(|i| (class[i].clone(), class[(i + 1) % n].clone()))
                .collect(),
        }
    }

    /// Errors with [`Error::CrossingLeaves`] if chords of distinct classes
    /// cross.
    pub fn check_unlinked(&self) -> Result<()> {
        for (i, a) in self.classes.iter().enumerate() {
            for b in self.classes.iter().skip(i + 1) {
                for ca in Lamination::class_chords(a) {
                    for cb in Lamination::class_chords(b) {
                        if chords_cross(&ca.0, &ca.1, &cb.0, &cb.1) {
                            return Err(Error::CrossingLeaves(format!(
                                "({}, {}) crosses ({}, {})",
                                ca.0, ca.1, cb.0, cb.1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// All chords of all classes.
    pub fn leaves(&self) -> Vec<(Angle, Angle)> {
        self.classes.iter().flat_map(|c| Lamination::class_chords(c)).collect()
    }

    /// Index of the class containing `theta`.
    pub fn class_of(&self, theta: &Angle) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(theta))
    }
}

/// The co-landing lamination of a set of rational angles: each angle's
/// eventually periodic ray is landed, landing values within `cluster_tol`
/// are identified, and unresolved angles are omitted with a warning and the
/// `partial` flag.
pub fn rational_lamination(
    s: &SchwarzReflection,
    angles: &[Angle],
    depth: usize,
) -> Result<Lamination> {
    let d = s.degree();
    let cluster_tol = s.qmd().tolerances().cluster_tol;
    let mut warnings: Vec<String> = Vec::new();
    let mut landed: Vec<(Angle, Cx)> = Vec::new();
    for theta in angles {
        let seq = symbols_of_angle(d, theta, Side::Above)?;
        match landing_point(s, &seq, depth) {
            Ok((x, _)) => landed.push((theta.clone(), x)),
            Err(e @ (Error::Unresolved { .. } | Error::AmbiguousBranch { .. })) => {
                warnings.push(format!("angle {theta} omitted: {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    let mut clusters: Vec<(Vec<Angle>, Cx)> = Vec::new();
    for (theta, x) in landed {
        match clusters.iter_mut().find(|(_, y)| y.chordal(x) <= cluster_tol) {
            Some((class, _)) => class.push(theta),
            None => clusters.push((vec![theta], x)),
        }
    }
    let mut lam = Lamination::new(
        LaminationKind::Rational,
        clusters.into_iter().map(|(c, _)| c).collect(),
    )?;
    lam.partial = !warnings.is_empty();
    lam.warnings = warnings;
    Ok(lam)
}

/// All non-crossing partial matchings of `verts` (an arc of a cyclically
/// ordered vertex set), as lists of chords.
fn noncrossing_matchings(verts: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if verts.is_empty() {
        return vec![Vec::new()];
    }
    let mut out: Vec<Vec<(usize, usize)>> = Vec::new();
    let v0 = verts[0];
    out.extend(noncrossing_matchings(&verts[1..]));
    for k in 1..verts.len() {
        let inside = noncrossing_matchings(&verts[1..k]);
        let outside = noncrossing_matchings(&verts[k + 1..]);
        for a in &inside {
            for b in &outside {
                let mut m = vec![(v0, verts[k])];
                m.extend(a.iter().copied());
                m.extend(b.iter().copied());
                out.push(m);
            }
        }
    }
    out
}

/// Every lamination supported on the `d+1` fixed angles `j/(d+1)`: the
/// non-crossing partial matchings of the marked vertices, with unmatched
/// vertices kept as singleton classes. Deterministic order.
pub fn enumerate_fixed_ray_laminations(d: usize) -> Result<Vec<Lamination>> {
    if !(2..=12).contains(&d) {
        return Err(Error::DegreeTooLarge { got: d, cap: 12 });
    }
    let n = d + 1;
    let verts: Vec<usize> = (0..n).collect();
    let mut matchings = noncrossing_matchings(&verts);
    matchings.sort();
    let mut out = Vec::with_capacity(matchings.len());
    for m in matchings {
        let mut classes: Vec<Vec<Angle>> = Vec::new();
        let mut matched = vec![false; n];
        for &(a, b) in &m {
            matched[a] = true;
            matched[b] = true;
            classes.push(vec![
                Angle::new(a as i64, n as i64)?,
                Angle::new(b as i64, n as i64)?,
            ]);
        }
        for (v, &hit) in matched.iter().enumerate() {
            if !hit {
                classes.push(vec![Angle::new(v as i64, n as i64)?]);
            }
        }
        out.push(Lamination::new(LaminationKind::FixedRay, classes)?);
    }
    Ok(out)
}

/// One complementary gap of a finite marked lamination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapInfo {
    /// Number of boundary arcs of the gap (its uniformizer degree).
    pub degree: usize,
    /// Marked vertices on the gap boundary not on any chord.
    pub cusps: usize,
    /// Chords of the lamination on the gap boundary.
    pub tangencies: usize,
    /// Starting vertex of each boundary arc, in traversal order.
    pub arc_starts: Vec<usize>,
}

/// The gaps of a finite marked lamination, each with its arc/cusp/tangency
/// counts. The identity `degree = cusps + tangencies` holds per gap and the
/// degrees sum to the number of marked points.
#[derive(Clone, Debug)]
pub struct GapStats {
    pub gaps: Vec<GapInfo>,
}

impl GapStats {
    pub fn total_degree(&self) -> usize {
        self.gaps.iter().map(|g| g.degree).sum()
    }
}

/// Gap arithmetic for a lamination supported on `marks` equally spaced
/// points: the circle arcs between consecutive marked points are grouped
/// into gap boundary cycles (crossing a chord whenever an arc ends on a
/// matched vertex), and each cycle is counted. Classes of size ≥ 3 are
/// rejected — gap arithmetic is defined for pairings.
pub fn gap_stats(lam: &Lamination, marks: usize) -> Result<GapStats> {
    if marks == 0 {
        return Err(Error::InvalidAngle("no marked points".into()));
    }
    let marks_big = BigRational::from(BigInt::from(marks as i64));
    let mut partner: Vec<Option<usize>> = vec![None; marks];
    for class in &lam.classes {
        if class.len() > 2 {
            return Err(Error::InvalidSystem(format!(
                "class of {} angles: gap arithmetic needs a pairing",
                class.len()
            )));
        }
        let vertex_of = |a: &Angle| -> Result<usize> {
            let scaled = a.big() * marks_big.clone();
            if !scaled.is_integer() {
                return Err(Error::InvalidAngle(format!(
                    "angle {a} is not one of the {marks} marked points"
                )));
            }
            scaled
                .to_integer()
                .try_into()
                .map_err(|_| Error::InvalidAngle(format!("angle {a} out of range")))
        };
        if class.len() == 2 {
            let a = vertex_of(&class[0])?;
            let b = vertex_of(&class[1])?;
            if a == b {
                return Err(Error::InvalidAngle("degenerate chord".into()));
            }
            partner[a] = Some(b);
            partner[b] = Some(a);
        } else if class.len() == 1 {
            vertex_of(&class[0])?;
        }
    }
    let mut visited = vec![false; marks];
    let mut gaps: Vec<GapInfo> = Vec::new();
    for start in 0..marks {
        if visited[start] {
            continue;
        }
        let mut arc_starts = Vec::new();
        let mut cusps = 0;
        let mut tangencies = 0;
        let mut arc = start;
        loop {
            visited[arc] = true;
            arc_starts.push(arc);
            let end = (arc + 1) % marks;
            arc = match partner[end] {
                None => {
                    cusps += 1;
                    end
                }
                Some(w) => {
                    tangencies += 1;
                    w
                }
            };
            if arc == start {
                break;
            }
        }
        let degree = arc_starts.len();
        debug_assert_eq!(degree, cusps + tangencies);
        gaps.push(GapInfo {
            degree,
            cusps,
            tangencies,
            arc_starts,
        });
    }
    let stats = GapStats { gaps };
    if stats.total_degree() != marks {
        return Err(Error::InvalidSystem(format!(
            "gap degrees sum to {} over {} marked points",
            stats.total_degree(),
            marks
        )));
    }
    Ok(stats)
}

/// The coarse lamination of a system with `marks` marked ideal points `i/p`:
/// landing data is clustered into identification classes, which must form a
/// conjugation-symmetric pairing (classes of three or more landing-equivalent
/// marks are a structural violation, reported as a hard error). The gap
/// degrees, scaled by the cone order `n`, must reproduce the uniformizer
/// degrees as a multiset.
pub fn coarse_lamination(
    marks: usize,
    landings: &[(usize, Cx)],
    uniformizer_degrees: &[usize],
    cone_order: usize,
    tol: &Tolerances,
) -> Result<(Lamination, GapStats)> {
    if cone_order == 0 {
        return Err(Error::InvalidSystem("cone order must be positive".into()));
    }
    if landings.len() != marks {
        return Err(Error::InvalidSystem(format!(
            "{} landing entries for {} marked points",
            landings.len(),
            marks
        )));
    }
    let mut seen = vec![false; marks];
    for &(i, _) in landings {
        if i >= marks || seen[i] {
            return Err(Error::InvalidSystem(format!(
                "marked index {i} missing or repeated"
            )));
        }
        seen[i] = true;
    }
    let mut clusters: Vec<(Vec<usize>, Cx)> = Vec::new();
    for &(i, x) in landings {
        match clusters.iter_mut().find(|(_, y)| y.chordal(x) <= tol.cluster_tol) {
            Some((class, _)) => class.push(i),
            None => clusters.push((vec![i], x)),
        }
    }
    for (class, _) in &clusters {
        if class.len() > 2 {
            return Err(Error::InvalidSystem(format!(
                "marked points {class:?} share a landing point: identifications must pair off"
            )));
        }
    }
    // identifications commute with complex conjugation, which sends i/p to
    // (p−i)/p
    let key = |class: &[usize]| -> Vec<usize> {
        let mut v = class.to_vec();
        v.sort_unstable();
        v
    };
    let class_keys: Vec<Vec<usize>> = clusters.iter().map(|(c, _)| key(c)).collect();
    for (class, _) in &clusters {
        let conj: Vec<usize> = class.iter().map(|&i| (marks - i) % marks).collect();
        if !class_keys.contains(&key(&conj)) {
            return Err(Error::InvalidSystem(format!(
                "identification {class:?} has no conjugate partner"
            )));
        }
    }
    let mut classes: Vec<Vec<Angle>> = Vec::new();
    for (class, _) in &clusters {
        classes.push(
            class
                .iter()
                .map(|&i| Angle::new(i as i64, marks as i64))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let lam = Lamination::new(LaminationKind::Coarse, classes)?;
    let stats = gap_stats(&lam, marks)?;
    let mut expect: Vec<usize> = stats.gaps.iter().map(|g| cone_order * g.degree).collect();
    let mut got: Vec<usize> = uniformizer_degrees.to_vec();
    expect.sort_unstable();
    got.sort_unstable();
    if expect != got {
        return Err(Error::InvalidSystem(format!(
            "gap degrees × cone order give {expect:?} but the uniformizers have degrees {got:?}"
        )));
    }
    Ok((lam, stats))
}
