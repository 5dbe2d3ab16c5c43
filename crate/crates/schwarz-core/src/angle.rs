use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// An angle on the circle, held as an exact rational number of turns in
/// `[0, 1)`. All lamination and puzzle combinatorics run on this type, so
/// repeated pullbacks through the degree-`d` angle maps are drift-free.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Angle(BigRational);

impl Angle {
    pub fn new(num: i64, den: i64) -> Result<Angle> {
        if den == 0 {
            return Err(Error::InvalidAngle("zero denominator".into()));
        }
        Ok(Angle::from_big(BigRational::new(
            BigInt::from(num),
            BigInt::from(den),
        )))
    }

    pub fn zero() -> Angle {
        Angle(BigRational::zero())
    }

    pub fn from_big(r: BigRational) -> Angle {
        let one = BigRational::one();
        let mut r = r.clone() - r.floor();
        if r.is_negative() {
            r += one.clone();
        }
        if r >= one {
            r -= one;
        }
        Angle(r)
    }

    pub fn big(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        let num = self.0.numer();
        let den = self.0.denom();
        bigint_f64(num) / bigint_f64(den)
    }

    /// Image under the linear angle map `θ ↦ sign·d·θ (mod 1)`.
    pub fn map(&self, d: i64, sign: MapSign) -> Angle {
        let factor = BigRational::from(BigInt::from(match sign {
            MapSign::Holomorphic => d,
            MapSign::AntiHolomorphic => -d,
        }));
        Angle::from_big(&self.0 * factor)
    }

    /// The `d` preimages under the angle map, sorted counterclockwise.
    pub fn preimages(&self, d: i64, sign: MapSign) -> Vec<Angle> {
        let d_big = BigRational::from(BigInt::from(d));
        let base = match sign {
            MapSign::Holomorphic => self.0.clone(),
            MapSign::AntiHolomorphic => -self.0.clone(),
        };
        let mut out: Vec<Angle> = (0..d)
            .map(|j| {
                Angle::from_big((base.clone() + BigRational::from(BigInt::from(j))) / d_big.clone())
            })
            .collect();
        out.sort();
        out
    }

    /// Counterclockwise arc length from `self` to `other`, in `[0, 1)`.
    pub fn ccw_to(&self, other: &Angle) -> BigRational {
        let mut diff = other.0.clone() - self.0.clone();
        if diff.is_negative() {
            diff += BigRational::one();
        }
        diff
    }

    /// Strict membership in the open counterclockwise arc `(a, b)`.
    pub fn in_open_arc(&self, a: &Angle, b: &Angle) -> bool {
        if a == b {
            return false;
        }
        let to_self = a.ccw_to(self);
        let to_b = a.ccw_to(b);
        !to_self.is_zero() && to_self < to_b
    }
}

/// Orientation of the model circle dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapSign {
    Holomorphic,
    AntiHolomorphic,
}

impl fmt::Display for MapSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSign::Holomorphic => write!(f, "+"),
            MapSign::AntiHolomorphic => write!(f, "-"),
        }
    }
}

/// Do the chords `{a1, a2}` and `{b1, b2}` cross inside the disk?
/// Shared endpoints do not count as crossing.
pub fn chords_cross(a1: &Angle, a2: &Angle, b1: &Angle, b2: &Angle) -> bool {
    if a1 == b1 || a1 == b2 || a2 == b1 || a2 == b2 {
        return false;
    }
    let b1_in = b1.in_open_arc(a1, a2);
    let b2_in = b2.in_open_arc(a1, a2);
    b1_in != b2_in
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Angle) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Angle) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Angle {
    type Err = Error;

    /// Parses `p/q` or a bare integer `p` (meaning `p` full turns ≡ 0).
    fn from_str(s: &str) -> Result<Angle> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n = BigInt::from_str(num)
            .map_err(|_| Error::InvalidAngle(format!("bad numerator in `{s}`")))?;
        let d = BigInt::from_str(den)
            .map_err(|_| Error::InvalidAngle(format!("bad denominator in `{s}`")))?;
        if d.is_zero() {
            return Err(Error::InvalidAngle(format!("zero denominator in `{s}`")));
        }
        Ok(Angle::from_big(BigRational::new(n, d)))
    }
}

fn bigint_f64(x: &BigInt) -> f64 {
    // Conversion is only used for display/geometry; angles that appear there
    // have denominators far below 2^1023.
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: i64, d: i64) -> Angle {
        Angle::new(n, d).unwrap()
    }

    #[test]
    fn normalization_wraps_into_unit_interval() {
        assert_eq!(a(5, 3), a(2, 3));
        assert_eq!(a(-1, 3), a(2, 3));
        assert_eq!(a(7, 7), Angle::zero());
    }

    #[test]
    fn angle_map_and_preimages_are_inverse() {
        let th = a(5, 7);
        for sign in [MapSign::Holomorphic, MapSign::AntiHolomorphic] {
            for d in [2i64, 3, 5] {
                let pre = th.preimages(d, sign);
                assert_eq!(pre.len(), d as usize);
                for p in &pre {
                    assert_eq!(p.map(d, sign), th);
                }
            }
        }
        // Spec example: preimages of 0 under the degree-2 map are {0, 1/2}.
        let pre = Angle::zero().preimages(2, MapSign::AntiHolomorphic);
        assert_eq!(pre, vec![Angle::zero(), a(1, 2)]);
    }

    #[test]
    fn crossing_detection() {
        // (0, 1/2) crosses (1/4, 3/4) but not (1/8, 3/8)... careful:
        // 1/8 and 3/8 both lie in (0, 1/2), so no crossing.
        assert!(chords_cross(&a(0, 1), &a(1, 2), &a(1, 4), &a(3, 4)));
        assert!(!chords_cross(&a(0, 1), &a(1, 2), &a(1, 8), &a(3, 8)));
        // Shared endpoints never cross.
        assert!(!chords_cross(&a(0, 1), &a(1, 3), &a(1, 3), &a(2, 3)));
    }

    #[test]
    fn parsing_round_trips() {
        let th: Angle = "2/3".parse().unwrap();
        assert_eq!(th, a(2, 3));
        assert_eq!(th.to_string(), "2/3");
        assert!("1/0".parse::<Angle>().is_err());
    }
}
