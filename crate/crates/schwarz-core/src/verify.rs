//! Named residual check suites over a system definition.
//!
//! Each suite measures one contract of the construction — boundary fixing,
//! covering degrees, the pairing involution, critical-orbit classification,
//! lifted-correspondence relations — and reports a residual against its
//! pinned bound together with a witness location for failures. The suites
//! run from the raw definition file, so a corrupted file produces a failing
//! check (with the witness) rather than a refusal to start.

use crate::correspondence::{Correspondence, SheetPoint};
use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::family::{build_system, BuiltSystem, SystemSpec};
use crate::rational::{DiskPreimage, RationalMap};
use crate::schwarz::{Connectivity, PointClass, SingularPoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::TAU;

pub const REPORT_SCHEMA: &str = "verify-report/1";

/// Every suite name, in report order.
pub const SUITES: &[&str] = &[
    "build",
    "boundary",
    "degree",
    "preimages",
    "involution",
    "connectedness",
    "correspondence",
];

/// Boundary samples used by the sampling suites.
const BOUNDARY_SAMPLES: usize = 1000;
/// Pairing-geometry mismatch allowance (the membership band used during
/// construction).
const PAIRING_BAND: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub bound: f64,
    pub detail: String,
}

impl CheckResult {
    fn skipped(name: &str, why: &str) -> CheckResult {
        CheckResult {
            name: name.into(),
            passed: false,
            residual: 1.0,
            bound: 0.5,
            detail: format!("skipped: {why}"),
        }
    }

    fn vacuous(name: &str, why: &str) -> CheckResult {
        CheckResult {
            name: name.into(),
            passed: true,
            residual: 0.0,
            bound: 0.5,
            detail: why.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub schema: String,
    pub kind: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialize")
    }
}

fn fmt_cx(z: Cx) -> String {
    format!("{z}")
}

fn near_singular(sing: &[SingularPoint], z: Cx, band: f64) -> bool {
    sing.iter()
        .any(|sp| z.dist(Cx::from(sp.location)) <= band)
}

/// Runs the selected suites (all of them when `selectors` is empty) against
/// a system definition. Unknown selector names are invalid input.
pub fn run_checks(
    spec: &SystemSpec,
    selectors: &[String],
    max_iter: usize,
    seed: u64,
) -> Result<VerifyReport> {
    for s in selectors {
        if !SUITES.contains(&s.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "unknown check suite {s:?} (available: {})",
                SUITES.join(", ")
            )));
        }
    }
    let want = |name: &str| selectors.is_empty() || selectors.iter().any(|s| s == name);

    let tol = spec.tolerances();
    tol.validate()?;
    let built = match build_system(spec) {
        Ok(b) => Ok(b),
        Err(e) => Err(e.to_string()),
    };

    let mut checks = Vec::new();
    if want("build") {
        checks.push(match &built {
            Ok(_) => CheckResult {
                name: "build".into(),
                passed: true,
                residual: 0.0,
                bound: 0.5,
                detail: "system constructed".into(),
            },
            Err(e) => CheckResult {
                name: "build".into(),
                passed: false,
                residual: 1.0,
                bound: 0.5,
                detail: e.clone(),
            },
        });
    }
    if want("boundary") {
        checks.push(match &built {
            Ok(b) => check_boundary(b),
            Err(e) => CheckResult::skipped("boundary", e),
        });
    }
    if want("degree") {
        checks.push(match &built {
            Ok(b) => check_degree(b),
            Err(e) => CheckResult::skipped("degree", e),
        });
    }
    if want("preimages") {
        checks.push(match &built {
            Ok(b) => check_preimages(b, seed),
            Err(e) => CheckResult::skipped("preimages", e),
        });
    }
    if want("involution") {
        // runs from the raw definition so pairing corruption is witnessed
        // even when construction refuses the system
        checks.push(check_involution(spec, &built));
    }
    if want("connectedness") {
        checks.push(match &built {
            Ok(b) => check_connectedness(b, max_iter),
            Err(e) => CheckResult::skipped("connectedness", e),
        });
    }
    if want("correspondence") {
        checks.push(match &built {
            Ok(b) => check_correspondence(b, seed, max_iter),
            Err(e) => CheckResult::skipped("correspondence", e),
        });
    }

    Ok(VerifyReport {
        schema: REPORT_SCHEMA.into(),
        kind: spec.kind.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// `|S(z) − z|` over boundary samples of every domain (reflections fix
/// their boundary pointwise).
fn check_boundary(sys: &BuiltSystem) -> CheckResult {
    let s = match sys {
        BuiltSystem::Reflection(s) => s,
        BuiltSystem::Involution(_) => {
            return CheckResult::vacuous(
                "boundary",
                "boundary points are exchanged by the pairing, not fixed; see involution",
            )
        }
    };
    let tol = s.qmd().tolerances();
    let k = s.qmd().count();
    let per = BOUNDARY_SAMPLES.div_ceil(k);
    let mut worst = 0.0f64;
    let mut witness = Cx::ZERO;
    let mut used = 0usize;
    for j in 0..k {
        for i in 0..per {
            let theta = (i as f64 + 0.5) / per as f64;
            let w = Complex64::from_polar(1.0, TAU * theta);
            let z = s.qmd().map(j).eval(Cx::from(w));
            if s.qmd().near_singular(z, 1e-6) {
                continue;
            }
            used += 1;
            let res = match s.eval_in(j, z, Some(w)) {
                Ok(img) => img.dist(z),
                Err(_) => f64::INFINITY,
            };
            if res > worst {
                worst = res;
                witness = z;
            }
        }
    }
    CheckResult {
        name: "boundary".into(),
        passed: worst <= tol.boundary_fix_tol,
        residual: worst,
        bound: tol.boundary_fix_tol,
        detail: format!(
            "max |S(z) − z| = {worst:.3e} over {used} boundary samples, worst at z = {}",
            fmt_cx(witness)
        ),
    }
}

/// The forward multiplicity must equal `Σ deg R_j − 1`, recomputed from the
/// uniformizer degrees.
fn check_degree(sys: &BuiltSystem) -> CheckResult {
    let k = sys.count();
    let degs: Vec<usize> = (0..k).map(|j| sys.map(j).degree()).collect();
    let indep = degs.iter().sum::<usize>() - 1;
    let got = sys.degree();
    let residual = got.abs_diff(indep) as f64;
    CheckResult {
        name: "degree".into(),
        passed: residual == 0.0,
        residual,
        bound: 0.5,
        detail: format!("degree {got} vs Σdeg−1 = {indep} (uniformizer degrees {degs:?})"),
    }
}

/// Covering degrees of the reflection: generic targets have `d` preimages
/// in the closed domain when they lie in a domain, `d + 1` when they lie in
/// the open fundamental tile.
fn check_preimages(sys: &BuiltSystem, seed: u64) -> CheckResult {
    let s = match sys {
        BuiltSystem::Reflection(s) => s,
        BuiltSystem::Involution(_) => {
            return CheckResult::vacuous(
                "preimages",
                "covering-degree counts apply to reflection systems",
            )
        }
    };
    let d = s.degree();
    let k = s.qmd().count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0002);
    let mut worst = 0.0f64;
    let mut witness = String::new();
    let mut domain_targets = 0usize;
    let mut tile_targets = 0usize;

    // targets inside a domain: push a disk point through its uniformizer
    let mut tries = 0;
    while domain_targets < 20 && tries < 400 {
        tries += 1;
        let j = tries % k;
        let rho = rng.random_range(0.15..0.85);
        let theta = rng.random_range(0.0..TAU);
        let c = s.qmd().map(j).eval(Cx::from(Complex64::from_polar(rho, theta)));
        if !matches!(s.qmd().locate(c), Ok(Some((_, DiskPreimage::Inside(_))))) {
            continue;
        }
        if s.qmd().near_singular(c, 1e-4) {
            continue;
        }
        domain_targets += 1;
        let got = match s.preimages_in_domain(c) {
            Ok(v) => v.len(),
            Err(_) => usize::MAX,
        };
        let res = if got == usize::MAX {
            f64::INFINITY
        } else {
            got.abs_diff(d) as f64
        };
        if res > worst {
            worst = res;
            witness = format!("{got} preimages of the domain point {} (want {d})", fmt_cx(c));
        }
    }

    // targets in the open tile: rejection-sample over the boundary extent
    let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for j in 0..k {
        for i in 0..64 {
            if let Some(p) = s.qmd().map(j).eval(Cx::from(Complex64::from_polar(
                1.0,
                TAU * (i as f64 + 0.5) / 64.0,
            ))).try_fin()
            {
                lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
                hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
            }
        }
    }
    let span = (hi - lo).norm().max(1.0);
    let mid = (lo + hi) * 0.5;
    tries = 0;
    while tile_targets < 20 && tries < 4000 {
        tries += 1;
        let c = Cx::from(
            mid + Complex64::new(
                rng.random_range(-0.75..0.75) * span,
                rng.random_range(-0.75..0.75) * span,
            ),
        );
        if !matches!(s.qmd().locate(c), Ok(None)) || s.qmd().near_singular(c, 1e-4) {
            continue;
        }
        tile_targets += 1;
        let got = match s.preimages_in_domain(c) {
            Ok(v) => v.len(),
            Err(_) => usize::MAX,
        };
        let res = if got == usize::MAX {
            f64::INFINITY
        } else {
            got.abs_diff(d + 1) as f64
        };
        if res > worst {
            worst = res;
            witness = format!(
                "{got} preimages of the tile point {} (want {})",
                fmt_cx(c),
                d + 1
            );
        }
    }

    let detail = if witness.is_empty() {
        format!("exact counts on {domain_targets} domain and {tile_targets} tile targets")
    } else {
        format!("{witness}; {domain_targets} domain and {tile_targets} tile targets")
    };
    CheckResult {
        name: "preimages".into(),
        passed: worst == 0.0 && domain_targets > 0 && tile_targets > 0,
        residual: worst,
        bound: 0.5,
        detail,
    }
}

/// For pairing systems: κ is an involution, `w ↦ 1/w` carries each disk
/// boundary onto its partner's, and the boundary map closes up
/// (`S(S(z)) = z`). Runs from the raw definition so corrupted pairings are
/// reported with a witness instead of refusing to build.
fn check_involution(spec: &SystemSpec, built: &std::result::Result<BuiltSystem, String>) -> CheckResult {
    if spec.kind != "involution" {
        return CheckResult::vacuous(
            "involution",
            "the reflection fixes its boundary pointwise; see boundary",
        );
    }
    let name = "involution";
    let k = spec.maps.len();
    // pairing combinatorics
    let kappa = &spec.kappa;
    if kappa.len() != k
        || kappa.iter().any(|&j| j >= k)
        || (0..k).any(|j| kappa[kappa[j]] != j)
    {
        return CheckResult {
            name: name.into(),
            passed: false,
            residual: 1.0,
            bound: 0.5,
            detail: format!("pairing {kappa:?} is not an involution of 0..{k}"),
        };
    }
    if spec.disks.len() != k {
        return CheckResult {
            name: name.into(),
            passed: false,
            residual: 1.0,
            bound: 0.5,
            detail: format!("{} disks for {k} maps", spec.disks.len()),
        };
    }
    // pairing geometry: 1/w must carry each disk boundary onto its partner's
    let tol = spec.tolerances();
    let maps: Vec<Option<RationalMap>> = spec
        .maps
        .iter()
        .map(|m| {
            let num = crate::poly::Poly::new(m.num.iter().map(|c| c.value()).collect());
            match &m.den {
                Some(d) => RationalMap::new(
                    num,
                    crate::poly::Poly::new(d.iter().map(|c| c.value()).collect()),
                    &tol,
                )
                .ok(),
                None => RationalMap::from_poly(num, &tol).ok(),
            }
        })
        .collect();
    let mut geo_worst = 0.0f64;
    let mut geo_witness = String::new();
    for j in 0..k {
        let dj = &spec.disks[j];
        let dp = &spec.disks[kappa[j]];
        let (cj, rj) = (Complex64::new(dj.center[0], dj.center[1]), dj.radius);
        let (cp, rp) = (Complex64::new(dp.center[0], dp.center[1]), dp.radius);
        for i in 0..64 {
            let w = cj + Complex64::from_polar(rj, TAU * (i as f64 + 0.5) / 64.0);
            if w.norm() < 1e-9 {
                geo_worst = f64::INFINITY;
                geo_witness = format!("disk {j} boundary passes through 0");
                continue;
            }
            let img = 1.0 / w;
            let miss = ((img - cp).norm() - rp).abs();
            if miss > geo_worst {
                geo_worst = miss;
                let z = maps[j]
                    .as_ref()
                    .map(|r| fmt_cx(r.eval(Cx::from(w))))
                    .unwrap_or_else(|| fmt_cx(Cx::from(w)));
                geo_witness = format!(
                    "η(∂𝔇_{j}) misses ∂𝔇_{} by {miss:.3e} near z = {z}",
                    kappa[j]
                );
            }
        }
    }
    if geo_worst > PAIRING_BAND {
        return CheckResult {
            name: name.into(),
            passed: false,
            residual: geo_worst,
            bound: PAIRING_BAND,
            detail: geo_witness,
        };
    }
    // analytic closure on the built system
    let b = match built {
        Ok(BuiltSystem::Involution(b)) => b,
        Ok(_) => unreachable!("involution kind built as reflection"),
        Err(e) => return CheckResult::skipped(name, e),
    };
    let sing = b.singular_points().to_vec();
    let per = BOUNDARY_SAMPLES.div_ceil(k);
    let mut worst = 0.0f64;
    let mut witness = Cx::ZERO;
    let mut used = 0usize;
    for j in 0..k {
        let dj = &spec.disks[j];
        let (cj, rj) = (Complex64::new(dj.center[0], dj.center[1]), dj.radius);
        for i in 0..per {
            let w = cj + Complex64::from_polar(rj, TAU * (i as f64 + 0.5) / per as f64);
            let z = b.map(j).eval(Cx::from(w));
            if z.is_inf() || near_singular(&sing, z, 1e-6) {
                continue;
            }
            used += 1;
            let res = match b
                .eval_in(j, z, Some(w))
                .and_then(|once| b.eval(once).map(|back| back.dist(z)))
            {
                Ok(r) => r,
                Err(_) => f64::INFINITY,
            };
            if res > worst {
                worst = res;
                witness = z;
            }
        }
    }
    CheckResult {
        name: name.into(),
        passed: worst <= tol.involution_tol,
        residual: worst,
        bound: tol.involution_tol,
        detail: format!(
            "max |S(S(z)) − z| = {worst:.3e} over {used} boundary samples, worst at z = {}",
            fmt_cx(witness)
        ),
    }
}

/// Budgeted critical-orbit classification must reach a verdict for every
/// orbit.
fn check_connectedness(sys: &BuiltSystem, max_iter: usize) -> CheckResult {
    let s = match sys {
        BuiltSystem::Reflection(s) => s,
        BuiltSystem::Involution(_) => {
            return CheckResult::vacuous(
                "connectedness",
                "critical-orbit tests apply to reflection systems",
            )
        }
    };
    let report = match s.connectedness_test(max_iter) {
        Ok(r) => r,
        Err(e) => return CheckResult::skipped("connectedness", &e.to_string()),
    };
    let undecided = report
        .critical_orbits
        .iter()
        .filter(|(_, _, c)| matches!(c, PointClass::Undecided(_)))
        .count();
    let total = report.critical_orbits.len();
    let residual = if total == 0 {
        0.0
    } else {
        undecided as f64 / total as f64
    };
    let verdict = match report.verdict {
        Connectivity::Connected => "connected",
        Connectivity::Disconnected => "disconnected",
        Connectivity::Undetermined => "undetermined",
    };
    CheckResult {
        name: "connectedness".into(),
        passed: undecided == 0,
        residual,
        bound: 0.5,
        detail: format!("verdict {verdict}; {total} critical orbits, {undecided} undecided"),
    }
}

/// Lifted-correspondence relations: forward multiplicity, the generator
/// order `η̌² = id`, the deck order `τ̌^{d+1} = id` on fibers, and the free
/// behaviour of sampled alternating words.
fn check_correspondence(sys: &BuiltSystem, seed: u64, max_iter: usize) -> CheckResult {
    let corr = match sys {
        BuiltSystem::Reflection(s) => Correspondence::from_reflection(s.clone()),
        BuiltSystem::Involution(b) => Correspondence::from_involution(b.clone()),
    };
    let corr = match corr {
        Ok(c) => c,
        Err(e) => return CheckResult::skipped("correspondence", &e.to_string()),
    };
    let d = corr.degree();
    let tol_bound = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0003);

    // forward multiplicity at generic points
    let mut mult_bad = 0usize;
    let mut witness = String::new();
    for _ in 0..20 {
        let z = Cx::new(rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
        let sheet = rng.random_range(1..=corr.sheet_count());
        let u = SheetPoint::new(z, sheet);
        match corr.forward(u) {
            Ok(img) if img.multiplicity() == d => {}
            Ok(img) => {
                mult_bad += 1;
                witness = format!(
                    "forward multiplicity {} ≠ {d} at {} (sheet {sheet})",
                    img.multiplicity(),
                    fmt_cx(z)
                );
            }
            Err(_) => {
                mult_bad += 1;
                witness = format!("forward image failed at {} (sheet {sheet})", fmt_cx(z));
            }
        }
    }

    // group relations over sampled escaping points
    let mut samples = Vec::new();
    if let Ok(base) = corr.rank0_start(max_iter) {
        samples.push(base);
        for _ in 0..23 {
            let jitter = Complex64::new(
                rng.random_range(-0.35..0.35),
                rng.random_range(-0.35..0.35),
            );
            samples.push(SheetPoint::new(
                Cx::from(base.z.try_fin().unwrap_or_default() + jitter),
                base.sheet,
            ));
        }
    }
    let report = corr.group_relation_check(&samples, 6, seed ^ 0x5eed_0004, max_iter);
    let residual = report
        .involution_residual
        .max(report.tau_order_residual)
        .max(report.fiber_residual)
        .max(mult_bad as f64);
    let passed = residual <= tol_bound && report.suspected_relations == 0;
    let mut detail = format!(
        "η̌² = {:.2e}, τ̌^{} = {:.2e}, fibers = {:.2e}, {} words checked, {} dropped",
        report.involution_residual,
        d + 1,
        report.tau_order_residual,
        report.fiber_residual,
        report.words.len(),
        report.dropped
    );
    if report.suspected_relations > 0 {
        detail = format!(
            "{detail}; {} suspected relations",
            report.suspected_relations
        );
    }
    if !witness.is_empty() {
        detail = format!("{detail}; {witness}");
    }
    CheckResult {
        name: "correspondence".into(),
        passed,
        residual,
        bound: tol_bound,
        detail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cardioid_spec() -> SystemSpec {
        SystemSpec::parse(
            r#"
schema = "schwarz-system/1"
kind = "reflection"
[[maps]]
num = [0.0, 1.0, 0.5]
"#,
        )
        .unwrap()
    }

    fn swap_spec() -> SystemSpec {
        SystemSpec::parse(
            r#"
schema = "schwarz-system/1"
kind = "involution"
kappa = [1, 0]
[[maps]]
num = [0.0, 1.0, 0.3]
[[maps]]
num = [-19.0, 5.0]
den = [-4.0, 1.0]
[[disks]]
center = [0.0, 0.0]
radius = 0.5
[[disks]]
center = [0.0, 0.0]
radius = 2.0
"#,
        )
        .unwrap()
    }

    #[test]
    fn the_full_suite_passes_on_the_cardioid() {
        let report = run_checks(&cardioid_spec(), &[], 200, 11).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: {} (residual {:.3e})", c.name, c.detail, c.residual);
        }
        assert!(report.passed);
        assert_eq!(report.checks.len(), SUITES.len());
        let boundary = report.checks.iter().find(|c| c.name == "boundary").unwrap();
        assert!(boundary.residual <= 1e-9);
    }

    #[test]
    fn the_full_suite_passes_on_the_swap_pair() {
        let report = run_checks(&swap_spec(), &[], 200, 5).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: {} (residual {:.3e})", c.name, c.detail, c.residual);
        }
        let inv = report.checks.iter().find(|c| c.name == "involution").unwrap();
        assert!(inv.residual <= 1e-8);
        assert!(inv.detail.contains("S(S(z))"));
    }

    #[test]
    fn corrupted_pairings_fail_with_a_witness() {
        let mut spec = swap_spec();
        spec.kappa = vec![0, 1]; // identity pairing: geometrically wrong
        let report = run_checks(&spec, &["involution".into()], 100, 1).unwrap();
        assert!(!report.passed);
        let inv = &report.checks[0];
        assert!(!inv.passed);
        assert!(inv.residual > inv.bound);
        assert!(
            inv.detail.contains("misses"),
            "witness missing from {:?}",
            inv.detail
        );
        assert!(inv.detail.contains("near z ="));
    }

    #[test]
    fn selectors_pick_suites_and_reject_unknown_names() {
        let report = run_checks(&cardioid_spec(), &["degree".into()], 50, 1).unwrap();
        assert_eq!(report.checks.len(), 1);
        assert_eq!(report.checks[0].name, "degree");
        assert!(run_checks(&cardioid_spec(), &["nope".into()], 50, 1).is_err());
    }

    #[test]
    fn reports_serialize_with_their_schema() {
        let report = run_checks(&cardioid_spec(), &["degree".into(), "boundary".into()], 50, 1)
            .unwrap();
        let text = report.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert!(v["checks"].as_array().unwrap().len() == 2);
    }
}
