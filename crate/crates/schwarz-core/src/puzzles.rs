//! Renormalization puzzles as combinatorial objects.
//!
//! A puzzle is cut out of the disk bounded by an equipotential by the
//! external rays of finitely many co-landing angle classes. Everything here
//! is angle data: pieces are boundary descriptors (circle arcs and ray
//! pairs), refinement pulls the cut system back through the degree-`d`
//! circle map, and the alignment distance between two maps compares their
//! lamination classes along the cut orbits. No geometric regions are ever
//! constructed.

use crate::angle::{chords_cross, Angle, MapSign};
use crate::error::{Error, Result};
use crate::rays::Lamination;
use std::collections::{HashMap, HashSet};

/// The cut data of a levelled puzzle: the degree and orientation of the
/// angle map, an equipotential radius (descriptive only), and one list of
/// co-landing cut classes per renormalization level. Levels beyond the last
/// supplied reuse it, matching the convention that a non-renormalizable
/// level repeats the previous puzzle.
#[derive(Clone, Debug)]
pub struct PuzzleSpec {
    degree: usize,
    sign: MapSign,
    equipotential: f64,
    levels: Vec<Vec<Vec<Angle>>>,
}

impl PuzzleSpec {
    pub fn new(
        degree: usize,
        sign: MapSign,
        levels: Vec<Vec<Vec<Angle>>>,
        equipotential: Option<f64>,
    ) -> Result<PuzzleSpec> {
        if degree < 2 {
            return Err(Error::InvalidSystem("puzzles need degree ≥ 2".into()));
        }
        if levels.is_empty() {
            return Err(Error::InvalidSystem("no cut levels supplied".into()));
        }
        let equipotential = equipotential.unwrap_or(2.0);
        if !(equipotential > 1.0) {
            return Err(Error::InvalidConfig(
                "equipotential radius must exceed 1".into(),
            ));
        }
        let spec = PuzzleSpec {
            degree,
            sign,
            equipotential,
            levels: levels
                .into_iter()
                .map(|classes| {
                    classes
                        .into_iter()
                        .map(|mut c| {
                            c.sort();
                            c.dedup();
                            c
                        })
                        .collect()
                })
                .collect(),
        };
        for classes in &spec.levels {
            // disjointness and unlinkedness
            validate_classes(classes)?;
            // the cut set is forward invariant, class by class
            let support: HashSet<Angle> = classes.iter().flatten().cloned().collect();
            for class in classes {
                let images: HashSet<Angle> = class
                    .iter()
                    .map(|a| a.map(spec.degree as i64, spec.sign))
                    .collect();
                if !images.iter().all(|a| support.contains(a)) {
                    return Err(Error::InvalidAngle(format!(
                        "cut class {class:?} maps outside the cut set"
                    )));
                }
                let hit = classes
                    .iter()
                    .filter(|c| images.iter().any(|a| c.contains(a)))
                    .count();
                if hit > 1 {
                    return Err(Error::InvalidAngle(format!(
                        "cut class {class:?} maps into several classes"
                    )));
                }
            }
        }
        Ok(spec)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn sign(&self) -> MapSign {
        self.sign
    }

    pub fn equipotential(&self) -> f64 {
        self.equipotential
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Cut classes of level `m`; levels past the end repeat the last one.
    pub fn cuts_at_level(&self, m: usize) -> &[Vec<Angle>] {
        &self.levels[m.min(self.levels.len() - 1)]
    }
}

fn validate_classes(classes: &[Vec<Angle>]) -> Result<()> {
    let mut seen: HashSet<Angle> = HashSet::new();
    for class in classes {
        if class.is_empty() {
            return Err(Error::InvalidAngle("empty cut class".into()));
        }
        for a in class {
            if !seen.insert(a.clone()) {
                return Err(Error::InvalidAngle(format!(
                    "angle {a} appears in two cut classes"
                )));
            }
        }
    }
    for (i, a) in classes.iter().enumerate() {
        for b in classes.iter().skip(i + 1) {
            for ca in polygon_chords(a) {
                for cb in polygon_chords(b) {
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

fn polygon_chords(class: &[Angle]) -> Vec<(Angle, Angle)> {
    match class.len() {
        0 | 1 => Vec::new(),
        2 => vec![(class[0].clone(), class[1].clone())],
        n => (0..n)
            .map(|i| (class[i].clone(), class[(i + 1) % n].clone()))
            .collect(),
    }
}

/// One edge of a puzzle piece boundary, in cyclic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundaryEdge {
    /// Equipotential arc from the first angle counterclockwise to the second.
    Arc(Angle, Angle),
    /// Crossing of the ray pair at a cut vertex: the rays at the two angles
    /// land at the same point and the traversal passes from one to the other.
    RayPair(Angle, Angle),
}

/// A puzzle piece as a combinatorial region descriptor: the cyclic boundary
/// alternates equipotential arcs and ray-pair crossings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PuzzlePiece {
    pub depth: usize,
    pub boundary: Vec<BoundaryEdge>,
}

impl PuzzlePiece {
    /// The circle arcs of the piece.
    pub fn arcs(&self) -> Vec<(Angle, Angle)> {
        self.boundary
            .iter()
            .filter_map(|e| match e {
                BoundaryEdge::Arc(a, b) => Some((a.clone(), b.clone())),
                BoundaryEdge::RayPair(_, _) => None,
            })
            .collect()
    }

    /// Whether `other` (a deeper piece) sits inside this piece: every circle
    /// arc of `other` is contained in one of this piece's arcs.
    pub fn contains(&self, other: &PuzzlePiece) -> bool {
        let own = self.arcs();
        other.arcs().iter().all(|(a, b)| {
            own.iter().any(|(c, d)| {
                let span = c.ccw_to(d);
                c.ccw_to(a) <= span.clone() && {
                    let off = c.ccw_to(a) + a.ccw_to(b);
                    off <= span
                }
            })
        })
    }
}

/// The complementary pieces of a cut system: the circle is split at the
/// support of the classes with ≥ 2 angles, and the regions are traced
/// arc-by-arc, crossing at each cut vertex to its counterclockwise
/// predecessor within its class. One piece per region touching the circle;
/// classes of `q` rays at one landing point produce `q` pieces on their own.
fn pieces_from_classes(classes: &[Vec<Angle>], depth: usize) -> Result<Vec<PuzzlePiece>> {
    let cuts: Vec<&Vec<Angle>> = classes.iter().filter(|c| c.len() >= 2).collect();
    if cuts.is_empty() {
        return Err(Error::InvalidSystem(
            "every cut class is a singleton: the rays do not cut the disk".into(),
        ));
    }
    let mut support: Vec<Angle> = cuts.iter().flat_map(|c| c.iter().cloned()).collect();
    support.sort();
    let where_of: HashMap<Angle, (usize, usize)> = cuts
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            c.iter()
                .enumerate()
                .map(move |(mi, a)| (a.clone(), (ci, mi)))
        })
        .collect();
    let index_of: HashMap<Angle, usize> = support
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    let n = support.len();
    let mut visited = vec![false; n];
    let mut pieces = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut boundary = Vec::new();
        let mut cur = start;
        loop {
            visited[cur] = true;
            let a = support[cur].clone();
            let b = support[(cur + 1) % n].clone();
            boundary.push(BoundaryEdge::Arc(a, b.clone()));
            let (ci, mi) = where_of[&b];
            let w = cuts[ci][(mi + cuts[ci].len() - 1) % cuts[ci].len()].clone();
            boundary.push(BoundaryEdge::RayPair(b, w.clone()));
            cur = index_of[&w];
            if cur == start {
                break;
            }
        }
        pieces.push(PuzzlePiece { depth, boundary });
    }
    // Euler count: each class of q angles contributes q−1 cuts
    let expected = 1 + cuts.iter().map(|c| c.len() - 1).sum::<usize>();
    if pieces.len() != expected {
        return Err(Error::InvalidSystem(format!(
            "traversal produced {} pieces, expected {}",
            pieces.len(),
            expected
        )));
    }
    Ok(pieces)
}

/// The depth-0 pieces of level `m`: the cut by the rays of the level's
/// classes with at least two angles.
pub fn depth0_pieces(spec: &PuzzleSpec, level: usize) -> Result<Vec<PuzzlePiece>> {
    pieces_from_classes(spec.cuts_at_level(level), 0)
}

/// The preimage classes of one cut class: the `d·q` preimage angles, sorted
/// counterclockwise, grouped into `d` windows of `q` consecutive angles with
/// one preimage of each member. All valid window offsets are returned (the
/// dynamics of a specific map picks one; see [`refine`]).
fn pullback_candidates(
    class: &[Angle],
    d: usize,
    sign: MapSign,
) -> Result<Vec<Vec<Vec<Angle>>>> {
    let q = class.len();
    let mut pre: Vec<(Angle, usize)> = Vec::with_capacity(d * q);
    for (mi, a) in class.iter().enumerate() {
        for p in a.preimages(d as i64, sign) {
            pre.push((p, mi));
        }
    }
    pre.sort_by(|x, y| x.0.cmp(&y.0));
    let total = pre.len();
    let mut out: Vec<Vec<Vec<Angle>>> = Vec::new();
    for offset in 0..q {
        let mut groups: Vec<Vec<Angle>> = Vec::with_capacity(d);
        let mut ok = true;
        for g in 0..d {
            let mut members = HashSet::new();
            let mut group: Vec<Angle> = Vec::with_capacity(q);
            for j in 0..q {
                let (a, mi) = &pre[(offset + g * q + j) % total];
                if !members.insert(*mi) {
                    ok = false;
                    break;
                }
                group.push(a.clone());
            }
            if !ok {
                break;
            }
            group.sort();
            groups.push(group);
        }
        if ok {
            groups.sort();
            if !out.contains(&groups) {
                out.push(groups);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidAngle(format!(
            "class {class:?} admits no window grouping of its preimages"
        )));
    }
    Ok(out)
}

fn groupings_cross(a: &[Vec<Angle>], b: &[Vec<Angle>]) -> bool {
    for ga in a {
        for gb in b {
            for ca in polygon_chords(ga) {
                for cb in polygon_chords(gb) {
                    if ca != cb && chords_cross(&ca.0, &ca.1, &cb.0, &cb.1) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Pulls a cut system back through the angle map. Each class's preimages
/// admit a few window groupings; the choice is resolved by (1) preferring
/// groupings that reproduce existing classes — periodic cut classes persist
/// under refinement — then (2) discarding groupings that cross already-fixed
/// ones, and (3) breaking any remaining tie by the lowest window offset.
fn pullback_classes(
    classes: &[Vec<Angle>],
    d: usize,
    sign: MapSign,
) -> Result<Vec<Vec<Angle>>> {
    let cuts: Vec<&Vec<Angle>> = classes.iter().filter(|c| c.len() >= 2).collect();
    let mut candidates: Vec<Vec<Vec<Vec<Angle>>>> = Vec::with_capacity(cuts.len());
    for class in &cuts {
        candidates.push(pullback_candidates(class, d, sign)?);
    }
    let mut fixed: Vec<Option<usize>> = vec![None; cuts.len()];
    // periodic classes persist: prefer the grouping containing the original
    for (i, cands) in candidates.iter().enumerate() {
        let scores: Vec<usize> = cands
            .iter()
            .map(|g| {
                g.iter()
                    .filter(|grp| cuts.iter().any(|c| c.as_slice() == grp.as_slice()))
                    .count()
            })
            .collect();
        let best = *scores.iter().max().expect("candidates are nonempty");
        if best > 0 && scores.iter().filter(|&&s| s == best).count() == 1 {
            fixed[i] = scores.iter().position(|&s| s == best);
        }
    }
    // propagate the non-crossing constraint against fixed choices
    loop {
        let mut changed = false;
        for i in 0..cuts.len() {
            if fixed[i].is_some() {
                continue;
            }
            let viable: Vec<usize> = (0..candidates[i].len())
                .filter(|&ci| {
                    (0..cuts.len()).all(|j| match fixed[j] {
                        Some(cj) if j != i => {
                            !groupings_cross(&candidates[i][ci], &candidates[j][cj])
                        }
                        _ => true,
                    })
                })
                .collect();
            match viable.len() {
                0 => {
                    return Err(Error::CrossingLeaves(format!(
                        "no unlinked pullback grouping for class {:?}",
                        cuts[i]
                    )))
                }
                1 => {
                    fixed[i] = Some(viable[0]);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    // deterministic tie-break for anything still open
    for i in 0..cuts.len() {
        if fixed[i].is_none() {
            let viable = (0..candidates[i].len()).find(|&ci| {
                (0..cuts.len()).all(|j| match fixed[j] {
                    Some(cj) if j != i => !groupings_cross(&candidates[i][ci], &candidates[j][cj]),
                    _ => true,
                })
            });
            match viable {
                Some(ci) => fixed[i] = Some(ci),
                None => {
                    return Err(Error::CrossingLeaves(format!(
                        "no unlinked pullback grouping for class {:?}",
                        cuts[i]
                    )))
                }
            }
        }
    }
    let mut out: Vec<Vec<Angle>> = Vec::new();
    for (i, choice) in fixed.iter().enumerate() {
        for grp in &candidates[i][choice.expect("all choices fixed")] {
            out.push(grp.clone());
        }
    }
    out.sort();
    out.dedup();
    validate_classes(&out)?;
    Ok(out)
}

/// The cut classes reconstructed from the ray-pair edges of pieces at one
/// depth: chords sharing a landing vertex merge into one class.
fn classes_of_pieces(pieces: &[PuzzlePiece]) -> Result<Vec<Vec<Angle>>> {
    let mut angles: Vec<Angle> = Vec::new();
    let mut index: HashMap<Angle, usize> = HashMap::new();
    let mut parent: Vec<usize> = Vec::new();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut idx = |a: &Angle, angles: &mut Vec<Angle>, parent: &mut Vec<usize>| -> usize {
        if let Some(&i) = index.get(a) {
            return i;
        }
        let i = angles.len();
        angles.push(a.clone());
        parent.push(i);
        index.insert(a.clone(), i);
        i
    };
    for p in pieces {
        for e in &p.boundary {
            if let BoundaryEdge::RayPair(a, b) = e {
                let ia = idx(a, &mut angles, &mut parent);
                let ib = idx(b, &mut angles, &mut parent);
                let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    if angles.is_empty() {
        return Err(Error::InvalidSystem("pieces carry no ray pairs".into()));
    }
    let mut classes: HashMap<usize, Vec<Angle>> = HashMap::new();
    for i in 0..angles.len() {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(angles[i].clone());
    }
    let mut out: Vec<Vec<Angle>> = classes
        .into_values()
        .map(|mut c| {
            c.sort();
            c
        })
        .collect();
    out.sort();
    Ok(out)
}

/// One refinement step: reads the cut system off the pieces, pulls it back
/// through the angle map, and re-cuts. Every resulting piece lies in a
/// unique input piece; cut systems for which that fails (rays at a critical
/// landing point, say) are rejected.
pub fn refine(pieces: &[PuzzlePiece], spec: &PuzzleSpec) -> Result<Vec<PuzzlePiece>> {
    if pieces.is_empty() {
        return Err(Error::InvalidSystem("no pieces to refine".into()));
    }
    let depth = pieces[0].depth;
    if pieces.iter().any(|p| p.depth != depth) {
        return Err(Error::InvalidSystem("pieces at mixed depths".into()));
    }
    let classes = classes_of_pieces(pieces)?;
    let refined = pullback_classes(&classes, spec.degree, spec.sign)?;
    let out = pieces_from_classes(&refined, depth + 1)?;
    for fine in &out {
        if pieces.iter().filter(|p| p.contains(fine)).count() != 1 {
            return Err(Error::InvalidSystem(
                "refined pieces do not nest; the cut classes are not puzzle-compatible".into(),
            ));
        }
    }
    Ok(out)
}

/// First depth at which `g`'s lamination stops matching `f`'s along the
/// level-`m` cut orbits: the smallest `k` such that some `f`-class meeting
/// the `k`-fold preimage of the cut set is not a `g`-class. `None` when no
/// such class exists at any depth (aligned forever). An angle meets the
/// `k`-fold preimage exactly when its forward orbit hits the cut set within
/// `k` steps, so this is a finite orbit computation.
pub fn misaligned_depth(
    f: &Lamination,
    g: &Lamination,
    spec: &PuzzleSpec,
    level: usize,
) -> Option<usize> {
    let cuts: HashSet<Angle> = spec
        .cuts_at_level(level)
        .iter()
        .flatten()
        .cloned()
        .collect();
    let g_classes: HashSet<Vec<Angle>> = g.classes.iter().cloned().collect();
    let mut best: Option<usize> = None;
    for class in &f.classes {
        if g_classes.contains(class) {
            continue;
        }
        for a in class {
            if let Some(k) = first_hit(a, &cuts, spec.degree as i64, spec.sign) {
                best = Some(best.map_or(k, |b: usize| b.min(k)));
            }
        }
    }
    best
}

/// Steps for the forward orbit of `theta` to enter `targets`; `None` if it
/// never does (rational orbits are finite, so this terminates).
fn first_hit(theta: &Angle, targets: &HashSet<Angle>, d: i64, sign: MapSign) -> Option<usize> {
    let mut seen: HashSet<Angle> = HashSet::new();
    let mut th = theta.clone();
    let mut k = 0;
    loop {
        if targets.contains(&th) {
            return Some(k);
        }
        if !seen.insert(th.clone()) {
            return None;
        }
        th = th.map(d, sign);
        k += 1;
    }
}

/// Whether `g` is aligned with `f` at the given depth of the given level:
/// every `f`-class meeting the depth-`k` boundary angle set is also a
/// `g`-class. Monotone in `k` by construction.
pub fn aligned(
    f: &Lamination,
    g: &Lamination,
    spec: &PuzzleSpec,
    level: usize,
    depth: usize,
) -> bool {
    misaligned_depth(f, g, spec, level).map_or(true, |k| k > depth)
}

/// The level-summed alignment distance and its truncation data.
#[derive(Clone, Debug)]
pub struct CombDistance {
    /// `Σ_{m ≤ Mmax} e^{−(k_m+1)(m+1)}`, with aligned-forever levels
    /// contributing zero.
    pub value: f64,
    /// Upper bound `Σ_{m > Mmax} e^{−(m+1)}` on the omitted tail.
    pub truncation_bound: f64,
    /// `k_m` per level, `None` for aligned at every depth.
    pub misalignment_depths: Vec<Option<usize>>,
}

/// The combinatorial distance from `g` to `f` truncated at level `mmax`.
/// Asymmetric by design: classes of `f` are looked up in `g`.
pub fn comb_distance(
    f: &Lamination,
    g: &Lamination,
    spec: &PuzzleSpec,
    mmax: usize,
) -> CombDistance {
    let mut value = 0.0;
    let mut depths = Vec::with_capacity(mmax + 1);
    for m in 0..=mmax {
        let k_m = misaligned_depth(f, g, spec, m);
        if let Some(k) = k_m {
            value += (-((k + 1) as f64) * ((m + 1) as f64)).exp();
        }
        depths.push(k_m);
    }
    // every level contributes at most e^{−(m+1)} (k_m ≥ 0)
    let truncation_bound = (-((mmax + 2) as f64)).exp() / (1.0 - (-1.0f64).exp());
    CombDistance {
        value,
        truncation_bound,
        misalignment_depths: depths,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rays::LaminationKind;

    fn a(n: i64, d: i64) -> Angle {
        Angle::new(n, d).unwrap()
    }

    fn basilica_spec() -> PuzzleSpec {
        PuzzleSpec::new(
            2,
            MapSign::AntiHolomorphic,
            vec![vec![vec![a(1, 3), a(2, 3)]]],
            None,
        )
        .unwrap()
    }

    fn lam(classes: Vec<Vec<Angle>>) -> Lamination {
        Lamination::new(LaminationKind::Rational, classes).unwrap()
    }

    #[test]
    fn specs_enforce_closure_and_unlinkedness() {
        // {1/3, 2/3} is invariant under θ ↦ −2θ
        basilica_spec();
        // 1/5 maps to 3/5, which is not in the cut set
        assert!(matches!(
            PuzzleSpec::new(
                2,
                MapSign::AntiHolomorphic,
                vec![vec![vec![a(1, 5), a(4, 5)]]],
                None
            ),
            Err(Error::InvalidAngle(_))
        ));
        // crossing classes are rejected
        assert!(matches!(
            PuzzleSpec::new(
                2,
                MapSign::Holomorphic,
                vec![vec![vec![a(0, 1), a(1, 2)], vec![a(1, 4), a(3, 4)]]],
                None
            ),
            Err(Error::CrossingLeaves(_))
        ));
        // degenerate equipotential
        assert!(PuzzleSpec::new(
            2,
            MapSign::AntiHolomorphic,
            vec![vec![vec![a(1, 3), a(2, 3)]]],
            Some(0.5)
        )
        .is_err());
    }

    #[test]
    fn depth_zero_cutting() {
        let two = depth0_pieces(&basilica_spec(), 0).unwrap();
        assert_eq!(two.len(), 2);
        for p in &two {
            assert_eq!(p.depth, 0);
            assert_eq!(p.boundary.len(), 2);
            assert!(matches!(p.boundary[0], BoundaryEdge::Arc(_, _)));
            assert!(matches!(p.boundary[1], BoundaryEdge::RayPair(_, _)));
        }

        // one class of q rays at a single landing point gives q pieces
        let q4 = PuzzleSpec::new(
            2,
            MapSign::AntiHolomorphic,
            vec![vec![vec![a(0, 1), a(1, 4), a(1, 2), a(3, 4)]]],
            None,
        )
        .unwrap();
        assert_eq!(depth0_pieces(&q4, 0).unwrap().len(), 4);

        // an unrelated singleton class changes nothing
        let with_singleton = PuzzleSpec::new(
            2,
            MapSign::AntiHolomorphic,
            vec![vec![vec![a(1, 3), a(2, 3)], vec![a(0, 1)]]],
            None,
        )
        .unwrap();
        assert_eq!(depth0_pieces(&with_singleton, 0).unwrap().len(), 2);

        // all singletons cannot cut
        let lonely = PuzzleSpec::new(
            2,
            MapSign::AntiHolomorphic,
            vec![vec![vec![a(0, 1)], vec![a(1, 3)]]],
            None,
        )
        .unwrap();
        assert!(matches!(
            depth0_pieces(&lonely, 0),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn refinement_follows_the_angle_dynamics() {
        let spec = basilica_spec();
        let d0 = depth0_pieces(&spec, 0).unwrap();
        let d1 = refine(&d0, &spec).unwrap();
        assert_eq!(d1.len(), 3);
        // the fixed class persists and the mirror class appears
        let classes = classes_of_pieces(&d1).unwrap();
        assert!(classes.contains(&vec![a(1, 3), a(2, 3)]));
        assert!(classes.contains(&vec![a(1, 6), a(5, 6)]));
        assert_eq!(classes.len(), 2);

        // monotone: each refined piece lies in exactly one parent
        for fine in &d1 {
            assert_eq!(d0.iter().filter(|c| c.contains(fine)).count(), 1);
        }
    }

    #[test]
    fn piece_counts_match_the_arc_oracle() {
        let spec = basilica_spec();
        let mut pieces = depth0_pieces(&spec, 0).unwrap();
        // the independent oracle counts preimage angles: each pair class
        // consumes two, so pieces = angles/2 + 1
        let mut angles: HashSet<Angle> = [a(1, 3), a(2, 3)].into_iter().collect();
        for depth in 1..=6 {
            pieces = refine(&pieces, &spec).unwrap();
            angles = angles
                .iter()
                .flat_map(|t| t.preimages(2, MapSign::AntiHolomorphic))
                .collect();
            assert_eq!(
                pieces.len(),
                angles.len() / 2 + 1,
                "piece count at depth {depth}"
            );
            assert!(pieces.iter().all(|p| p.depth == depth));
        }
        assert_eq!(pieces.len(), 65);
    }

    #[test]
    fn alignment_compares_lamination_classes() {
        let spec = basilica_spec();
        let f = lam(vec![
            vec![a(1, 3), a(2, 3)],
            vec![a(1, 6), a(5, 6)],
        ]);
        // g disagrees on the depth-1 class only
        let g = lam(vec![vec![a(1, 3), a(2, 3)], vec![a(1, 6)], vec![a(5, 6)]]);

        assert!(aligned(&f, &f, &spec, 0, 30));
        assert!(aligned(&g, &g, &spec, 0, 30));
        assert_eq!(misaligned_depth(&f, &g, &spec, 0), Some(1));
        assert!(aligned(&f, &g, &spec, 0, 0));
        assert!(!aligned(&f, &g, &spec, 0, 1));
        // monotone in depth
        for k in 2..8 {
            assert!(!aligned(&f, &g, &spec, 0, k));
        }
        // the singleton classes of g are not f-classes either, and 1/6 hits
        // the cut set in one step, so the reverse direction also breaks at 1
        assert_eq!(misaligned_depth(&g, &f, &spec, 0), Some(1));
    }

    #[test]
    fn distance_sums_levels() {
        let spec = basilica_spec();
        let f = lam(vec![vec![a(1, 3), a(2, 3)], vec![a(1, 6), a(5, 6)]]);
        let same = comb_distance(&f, &f, &spec, 8);
        assert_eq!(same.value, 0.0);
        assert!(same.misalignment_depths.iter().all(|k| k.is_none()));
        assert!(same.truncation_bound > 0.0);

        // a class misaligned at depth 0 of every level sums the geometric
        // series Σ e^{−(m+1)}
        let g = lam(vec![vec![a(1, 3)], vec![a(2, 3)]]);
        let dist = comb_distance(&f, &g, &spec, 5);
        let oracle: f64 = (0..=5).map(|m| (-((m + 1) as f64)).exp()).sum();
        assert!((dist.value - oracle).abs() < 1e-15);
        assert!(dist.misalignment_depths.iter().all(|k| *k == Some(0)));

        // asymmetry: g aligned with f in one direction only
        let f_plus = lam(vec![
            vec![a(1, 3), a(2, 3)],
            vec![a(1, 6), a(5, 6)],
            vec![a(5, 12), a(7, 12)],
        ]);
        let f_only = lam(vec![vec![a(1, 3), a(2, 3)], vec![a(1, 6), a(5, 6)]]);
        let forward = comb_distance(&f_only, &f_plus, &spec, 4);
        assert_eq!(forward.value, 0.0);
        let backward = comb_distance(&f_plus, &f_only, &spec, 4);
        assert!(backward.value > 0.0);
        // 5/12 ↦ 1/6 ↦ 2/3 enters the cut set at step 2
        assert_eq!(backward.misalignment_depths[0], Some(2));
        let oracle: f64 = (0..=4).map(|m| (-3.0 * ((m + 1) as f64)).exp()).sum();
        assert!((backward.value - oracle).abs() < 1e-15);
    }

    #[test]
    fn triangle_cuts_refine_like_the_rabbit() {
        // the period-three angle triangle under doubling: a polygon class at
        // a fixed landing point, holomorphic orientation
        let spec = PuzzleSpec::new(
            2,
            MapSign::Holomorphic,
            vec![vec![vec![a(1, 7), a(2, 7), a(4, 7)]]],
            None,
        )
        .unwrap();
        let mut pieces = depth0_pieces(&spec, 0).unwrap();
        assert_eq!(pieces.len(), 3);
        // counts 5, 9, 17, …: each refinement adds one triangle per piece
        for depth in 1..=4 {
            pieces = refine(&pieces, &spec).unwrap();
            assert_eq!(pieces.len(), (1 << (depth + 1)) + 1);
        }
        // the fixed triangle persists and its mirror appeared at depth 1
        let classes = classes_of_pieces(&pieces).unwrap();
        assert!(classes.contains(&vec![a(1, 7), a(2, 7), a(4, 7)]));
        assert!(classes.contains(&vec![a(1, 14), a(9, 14), a(11, 14)]));
        assert!(classes.iter().all(|c| c.len() == 3));
    }

    #[test]
    fn critical_cut_systems_are_rejected_at_refinement() {
        // four rays at one fixed landing point whose images are only two of
        // them: the landing point would be critical, and the pullback
        // cannot nest
        let spec = PuzzleSpec::new(
            2,
            MapSign::AntiHolomorphic,
            vec![vec![vec![a(0, 1), a(1, 4), a(1, 2), a(3, 4)]]],
            None,
        )
        .unwrap();
        let d0 = depth0_pieces(&spec, 0).unwrap();
        assert_eq!(d0.len(), 4);
        assert!(matches!(refine(&d0, &spec), Err(Error::InvalidSystem(_))));
    }
}
