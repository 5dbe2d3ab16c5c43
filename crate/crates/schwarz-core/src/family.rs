//! System definitions on disk and one-parameter families of systems.
//!
//! A system file is a small TOML document carrying the uniformizer
//! coefficients (plus disks and the pairing permutation for involution
//! systems) and optional tolerance overrides. A family is the same shape
//! with every coefficient an affine function `base + scale·t` of one complex
//! parameter, so a parameter-plane render rebuilds the system per pixel and
//! colors by the connectedness verdict.

use crate::config::Tolerances;
use crate::cx::Cx;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::rational::RationalMap;
use crate::schwarz::{
    BInvolution, Connectivity, JordanDisk, PointClass, QuadratureMultiDomain, SchwarzReflection,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SYSTEM_SCHEMA: &str = "schwarz-system/1";
pub const FAMILY_SCHEMA: &str = "schwarz-family/1";

/// One coefficient in a system file: a plain real or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Real(f64),
    Pair([f64; 2]),
}

impl Coeff {
    pub fn value(self) -> Complex64 {
        match self {
            Coeff::Real(x) => Complex64::new(x, 0.0),
            Coeff::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

fn poly_from(coeffs: &[Coeff]) -> Poly {
    Poly::new(coeffs.iter().map(|c| c.value()).collect())
}

/// One uniformizer: numerator coefficients in ascending order, denominator
/// defaulting to the constant 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub num: Vec<Coeff>,
    #[serde(default)]
    pub den: Option<Vec<Coeff>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

/// A system definition file. `kind` selects between a Schwarz reflection
/// (`"reflection"`) and a B-involution (`"involution"`, which additionally
/// needs `disks` and `kappa`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub schema: String,
    pub kind: String,
    #[serde(default)]
    pub tree_like: bool,
    pub maps: Vec<MapSpec>,
    #[serde(default)]
    pub disks: Vec<DiskSpec>,
    #[serde(default)]
    pub kappa: Vec<usize>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

impl SystemSpec {
    pub fn parse(text: &str) -> Result<SystemSpec> {
        let spec: SystemSpec = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("system file: {e}")))?;
        if spec.schema != SYSTEM_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported system schema {:?} (expected {SYSTEM_SCHEMA:?})",
                spec.schema
            )));
        }
        Ok(spec)
    }

    /// The tolerances this spec runs under: its own table or the defaults.
    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.clone().unwrap_or_default()
    }
}

/// A constructed system of either kind, with a uniform classification
/// interface for rendering and verification.
#[derive(Clone, Debug)]
pub enum BuiltSystem {
    Reflection(SchwarzReflection),
    Involution(BInvolution),
}

impl BuiltSystem {
    pub fn classify(&self, z: Cx, max_iter: usize) -> PointClass {
        match self {
            BuiltSystem::Reflection(s) => s.classify(z, max_iter),
            BuiltSystem::Involution(b) => b.classify(z, max_iter),
        }
    }

    pub fn count(&self) -> usize {
        match self {
            BuiltSystem::Reflection(s) => s.qmd().count(),
            BuiltSystem::Involution(b) => b.count(),
        }
    }

    pub fn map(&self, j: usize) -> &RationalMap {
        match self {
            BuiltSystem::Reflection(s) => s.qmd().map(j),
            BuiltSystem::Involution(b) => b.map(j),
        }
    }

    /// Generic forward multiplicity `Σ deg R_j − 1`.
    pub fn degree(&self) -> usize {
        match self {
            BuiltSystem::Reflection(s) => s.degree(),
            BuiltSystem::Involution(b) => {
                (0..b.count()).map(|j| b.map(j).degree()).sum::<usize>() - 1
            }
        }
    }

    pub fn tolerances(&self) -> &Tolerances {
        match self {
            BuiltSystem::Reflection(s) => s.qmd().tolerances(),
            BuiltSystem::Involution(b) => b.tolerances(),
        }
    }

    /// A point of the boundary of domain `j` at parameter `theta` (turns).
    pub fn boundary_point(&self, j: usize, theta: f64) -> Cx {
        match self {
            BuiltSystem::Reflection(s) => {
                let w = Complex64::from_polar(1.0, theta * std::f64::consts::TAU);
                s.qmd().map(j).eval(Cx::from(w))
            }
            BuiltSystem::Involution(b) => b.boundary_point(j, theta),
        }
    }

    /// One application of the piecewise boundary map.
    pub fn eval(&self, z: Cx) -> Result<Cx> {
        match self {
            BuiltSystem::Reflection(s) => s.eval(z),
            BuiltSystem::Involution(b) => b.eval(z),
        }
    }
}

pub fn build_system(spec: &SystemSpec) -> Result<BuiltSystem> {
    let tol = spec.tolerances();
    tol.validate()?;
    if spec.maps.is_empty() {
        return Err(Error::InvalidConfig("system has no maps".into()));
    }
    let mut maps = Vec::with_capacity(spec.maps.len());
    for m in &spec.maps {
        let num = poly_from(&m.num);
        let r = match &m.den {
            Some(d) => RationalMap::new(num, poly_from(d), &tol)?,
            None => RationalMap::from_poly(num, &tol)?,
        };
        maps.push(r);
    }
    match spec.kind.as_str() {
        "reflection" => {
            if !spec.disks.is_empty() || !spec.kappa.is_empty() {
                return Err(Error::InvalidConfig(
                    "reflection systems take neither disks nor kappa".into(),
                ));
            }
            let qmd = QuadratureMultiDomain::build(maps, spec.tree_like, &tol)?;
            Ok(BuiltSystem::Reflection(SchwarzReflection::new(qmd)?))
        }
        "involution" => {
            let disks = spec
                .disks
                .iter()
                .map(|d| JordanDisk::round(Complex64::new(d.center[0], d.center[1]), d.radius))
                .collect();
            Ok(BuiltSystem::Involution(BInvolution::new(
                maps,
                disks,
                spec.kappa.clone(),
                &tol,
            )?))
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown system kind {other:?} (expected \"reflection\" or \"involution\")"
        ))),
    }
}

pub fn load_system(path: &Path) -> Result<BuiltSystem> {
    let text = std::fs::read_to_string(path)?;
    build_system(&SystemSpec::parse(&text)?)
}

/// One affine coefficient template `base + scale·t` of a family.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemplateCoeff {
    Fixed(Coeff),
    Affine { base: Coeff, scale: Coeff },
}

impl TemplateCoeff {
    fn at(&self, t: Complex64) -> Complex64 {
        match self {
            TemplateCoeff::Fixed(c) => c.value(),
            TemplateCoeff::Affine { base, scale } => base.value() + scale.value() * t,
        }
    }
}

/// A one-parameter family of single- or multi-map reflection systems, with
/// a default parameter window for rendering its connectedness locus.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub schema: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub tree_like: bool,
    pub num: Vec<TemplateCoeff>,
    #[serde(default)]
    pub den: Option<Vec<TemplateCoeff>>,
    #[serde(default = "default_center")]
    pub center: [f64; 2],
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

fn default_center() -> [f64; 2] {
    [0.0, 0.0]
}

fn default_width() -> f64 {
    2.0
}

/// Connectedness verdict of one parameter of a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamVerdict {
    /// The system failed to build (typically a univalence violation).
    Invalid,
    /// Every critical orbit stayed non-escaping within the budget.
    Connected,
    /// Some critical orbit escaped; carries the earliest escape rank.
    Disconnected(usize),
    /// The budget ran out before a verdict.
    Undecided,
}

impl FamilySpec {
    pub fn parse(text: &str) -> Result<FamilySpec> {
        let spec: FamilySpec = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("family file: {e}")))?;
        if spec.schema != FAMILY_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported family schema {:?} (expected {FAMILY_SCHEMA:?})",
                spec.schema
            )));
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<FamilySpec> {
        FamilySpec::parse(&std::fs::read_to_string(path)?)
    }

    /// The built-in families.
    ///
    /// * `"deltoid"` — `R_t(z) = 1/z + t·z²`; the center `t = 1/2` is the
    ///   cusped hypocycloid system, whose only free critical orbit is the
    ///   superattracting fixed point, so the center is connected.
    /// * `"cardioid"` — `R_t(z) = z + t·z²`; valid for `|t| ≤ 1/2`, and the
    ///   unique critical value of every valid member falls in the
    ///   fundamental tile, so the window shows invalidity against escape
    ///   rank.
    pub fn builtin(name: &str) -> Result<FamilySpec> {
        let one = TemplateCoeff::Fixed(Coeff::Real(1.0));
        let zero = TemplateCoeff::Fixed(Coeff::Real(0.0));
        let t = TemplateCoeff::Affine {
            base: Coeff::Real(0.0),
            scale: Coeff::Real(1.0),
        };
        match name {
            "deltoid" => Ok(FamilySpec {
                schema: FAMILY_SCHEMA.into(),
                name: Some("deltoid".into()),
                tree_like: false,
                num: vec![one, zero, zero, t],
                den: Some(vec![zero, one]),
                center: [0.5, 0.0],
                width: 1.2,
                tolerances: None,
            }),
            "cardioid" => Ok(FamilySpec {
                schema: FAMILY_SCHEMA.into(),
                name: Some("cardioid".into()),
                tree_like: false,
                num: vec![zero, one, t],
                den: None,
                center: [0.0, 0.0],
                width: 1.4,
                tolerances: None,
            }),
            other => Err(Error::InvalidConfig(format!(
                "unknown built-in family {other:?} (available: deltoid, cardioid)"
            ))),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.clone().unwrap_or_default()
    }

    /// Builds the member at parameter `t`.
    pub fn build(&self, t: Complex64) -> Result<SchwarzReflection> {
        let tol = self.tolerances();
        let num = Poly::new(self.num.iter().map(|c| c.at(t)).collect());
        let r = match &self.den {
            Some(d) => RationalMap::new(num, Poly::new(d.iter().map(|c| c.at(t)).collect()), &tol)?,
            None => RationalMap::from_poly(num, &tol)?,
        };
        let qmd = QuadratureMultiDomain::build(vec![r], self.tree_like, &tol)?;
        SchwarzReflection::new(qmd)
    }

    /// The per-pixel parameter-plane test: build, then classify every
    /// critical orbit.
    pub fn verdict(&self, t: Complex64, max_iter: usize) -> ParamVerdict {
        let s = match self.build(t) {
            Ok(s) => s,
            Err(_) => return ParamVerdict::Invalid,
        };
        let report = match s.connectedness_test(max_iter) {
            Ok(r) => r,
            Err(_) => return ParamVerdict::Undecided,
        };
        match report.verdict {
            Connectivity::Connected => ParamVerdict::Connected,
            Connectivity::Undetermined => ParamVerdict::Undecided,
            Connectivity::Disconnected => {
                let rank = report
                    .critical_orbits
                    .iter()
                    .filter_map(|(_, _, class)| match class {
                        PointClass::Escaping(n) => Some(*n),
                        _ => None,
                    })
                    .min()
                    .unwrap_or(0);
                ParamVerdict::Disconnected(rank)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_files_round_trip() {
        let text = r#"
schema = "schwarz-system/1"
kind = "reflection"
[[maps]]
num = [1.0, 0.0, 0.0, 0.5]
den = [0.0, 1.0]
"#;
        let spec = SystemSpec::parse(text).unwrap();
        let sys = build_system(&spec).unwrap();
        assert_eq!(sys.degree(), 2);
        assert_eq!(sys.count(), 1);
        // ∞ sits inside the domain: immediately non-escaping
        assert!(matches!(
            sys.classify(Cx::INF, 8),
            PointClass::NonEscaping(_)
        ));
        // the deltoid interior is the fundamental tile
        assert!(matches!(sys.classify(Cx::ZERO, 8), PointClass::Escaping(0)));
    }

    #[test]
    fn involution_files_build_and_reject_bad_kappa() {
        let good = r#"
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
"#;
        let sys = build_system(&SystemSpec::parse(good).unwrap()).unwrap();
        assert_eq!(sys.count(), 2);
        let bad = good.replace("kappa = [1, 0]", "kappa = [0, 0]");
        assert!(build_system(&SystemSpec::parse(&bad).unwrap()).is_err());
    }

    #[test]
    fn schema_lines_are_enforced() {
        let text = r#"
schema = "schwarz-system/2"
kind = "reflection"
[[maps]]
num = [0.0, 1.0, 0.5]
"#;
        assert!(SystemSpec::parse(text).is_err());
        assert!(SystemSpec::parse("not toml at all [").is_err());
    }

    #[test]
    fn builtin_deltoid_center_is_connected() {
        let fam = FamilySpec::builtin("deltoid").unwrap();
        let center = Complex64::new(fam.center[0], fam.center[1]);
        assert_eq!(fam.verdict(center, 48), ParamVerdict::Connected);
        // far outside the univalence region the member is invalid
        assert_eq!(
            fam.verdict(Complex64::new(4.0, 0.0), 48),
            ParamVerdict::Invalid
        );
    }

    #[test]
    fn family_files_parse_with_affine_coefficients() {
        let text = r#"
schema = "schwarz-family/1"
num = [0.0, 1.0, { base = 0.0, scale = 1.0 }]
center = [0.25, 0.0]
width = 1.0
"#;
        let fam = FamilySpec::parse(text).unwrap();
        let s = fam.build(Complex64::new(0.3, 0.0)).unwrap();
        assert_eq!(s.degree(), 1);
        // t = 0.3 gives R = z + 0.3 z², univalent on the closed disk
        assert!(fam.build(Complex64::new(0.9, 0.0)).is_err());
    }
}
