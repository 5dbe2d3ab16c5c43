use super::GenCircle;
use crate::cx::Cx;
use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// The degree-`d` Nielsen reflection map of the regular ideal `(d+1)`-gon.
///
/// The polygon `Π` has its ideal vertices at the `(d+1)`-st roots of unity;
/// side `i` (1-indexed) is the hyperbolic geodesic joining `ω^(i-1)` to
/// `ω^i`. The map reflects each point of `𝔻̄ ∖ int Π` in the side circle of
/// the half-plane containing it, fixes `∂Π` pointwise, and restricts to an
/// orientation-reversing degree-`d` covering of the unit circle whose fixed
/// points are the vertices.
#[derive(Clone, Debug)]
pub struct NielsenMap {
    d: usize,
    sides: Vec<GenCircle>,
}

impl NielsenMap {
    pub fn new(d: usize) -> Result<NielsenMap> {
        if d < 2 {
            return Err(Error::InvalidSystem(
                "Nielsen maps need degree d ≥ 2".into(),
            ));
        }
        let n = d + 1;
        let sides = (0..n)
            .map(|i| {
                let a = Complex64::from_polar(1.0, TAU * i as f64 / n as f64);
                let b = Complex64::from_polar(1.0, TAU * (i + 1) as f64 / n as f64);
                GenCircle::orthogonal_through(a, b)
            })
            .collect();
        Ok(NielsenMap { d, sides })
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// Ideal vertex `ω^j`.
    pub fn vertex(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, TAU * j as f64 / (self.d + 1) as f64)
    }

    /// Side circle for 1-indexed symbol `i ∈ {1, …, d+1}`.
    pub fn side_circle(&self, i: usize) -> &GenCircle {
        &self.sides[i - 1]
    }

    /// Reflection in side `i` (1-indexed).
    pub fn reflect(&self, i: usize, z: Cx) -> Cx {
        self.sides[i - 1].reflect(z)
    }

    /// The 1-indexed side whose closed half-plane contains `z`, lowest index
    /// first; `None` for points of the open polygon interior.
    pub fn side_containing(&self, z: Complex64) -> Option<usize> {
        let tol = 1e-12 * (1.0 + z.norm());
        (1..=self.d + 1).find(|&i| self.sides[i - 1].side(z) <= tol)
    }

    /// One application of the map to a point of `𝔻̄ ∖ int Π`.
    pub fn eval(&self, z: Cx) -> Result<Cx> {
        let zf = z.try_fin().ok_or(Error::OutsideDomain)?;
        if zf.norm() > 1.0 + 1e-9 {
            return Err(Error::OutsideDomain);
        }
        match self.side_containing(zf) {
            Some(i) => Ok(self.reflect(i, z)),
            None => Err(Error::OutsideDomain),
        }
    }

    /// The boundary restriction in angle coordinates (turns in `[0,1)`).
    pub fn circle_angle(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(1.0);
        let i = self.symbol_of_angle(theta);
        let z = Cx::from(Complex64::from_polar(1.0, TAU * theta));
        let w = self.reflect(i, z);
        (w.arg() / TAU).rem_euclid(1.0)
    }

    /// The symbol (1-indexed side) of an angle under the half-open
    /// counterclockwise arc convention: side `i` owns `[(i−1)/(d+1), i/(d+1))`.
    pub fn symbol_of_angle(&self, theta: f64) -> usize {
        let n = (self.d + 1) as f64;
        let i = (theta.rem_euclid(1.0) * n).floor() as usize;
        i.min(self.d) + 1
    }
}

/// The Minkowski-type circle conjugacy `E_d` between the Nielsen map and the
/// linear model `θ ↦ −d·θ (mod 1)`, evaluated by itinerary matching to
/// `depth` symbols. Fixes the vertex angles `j/(d+1)` and conjugates:
/// `E_d(N_d(θ)) = −d·E_d(θ)`.
///
/// The returned value is the midpoint of the exact rational interval of
/// angles sharing the itinerary, so its accuracy is about `d^(-depth)`.
pub fn minkowski_conjugacy(map: &NielsenMap, theta: f64, depth: usize) -> f64 {
    use num::ToPrimitive;
    minkowski_conjugacy_exact(map, theta, depth)
        .to_f64()
        .unwrap_or(f64::NAN)
        .rem_euclid(1.0)
}

/// Exact-rational version of [`minkowski_conjugacy`].
pub fn minkowski_conjugacy_exact(map: &NielsenMap, theta: f64, depth: usize) -> BigRational {
    let depth = depth.max(1);
    // Forward itinerary of θ under the Nielsen circle map. Within a narrow
    // band of a vertex the numeric orbit can garble the symbols (reflections
    // fix the vertices, so the signal is at roundoff scale); the true
    // itinerary there is the two-sided alternation between the adjacent
    // sides, so fill that in directly once the orbit enters the band.
    let nn = map.degree() + 1;
    let mut symbols = Vec::with_capacity(depth);
    let mut t = theta.rem_euclid(1.0);
    while symbols.len() < depth {
        let scaled = t * nn as f64;
        let jn = scaled.round();
        let delta = scaled - jn; // signed distance to nearest vertex, in arc units
        if delta.abs() < 1e-10 {
            let jv = (jn as usize) % nn;
            let below = if jv == 0 { nn } else { jv };
            let above = jv % nn + 1;
            let mut from_above = delta >= 0.0;
            while symbols.len() < depth {
                symbols.push(if from_above { above } else { below });
                from_above = !from_above;
            }
            break;
        }
        symbols.push(map.symbol_of_angle(t));
        t = map.circle_angle(t);
    }
    // A repeated symbol is a forbidden transition for the model (each arc
    // maps over every arc but its own); it can only arise from roundoff, so
    // keep the consistent prefix.
    let mut len = 1;
    while len < symbols.len() && symbols[len] != symbols[len - 1] {
        len += 1;
    }
    symbols.truncate(len);

    // Pull the symbol cylinder back through the linear model, back to front.
    // Arc J_i = [(i-1)/(d+1), i/(d+1)); the model map is φ ↦ −dφ (mod 1).
    let n = BigInt::from(map.degree() as i64 + 1);
    let d = BigInt::from(map.degree() as i64);
    let arc = |i: usize| -> (BigRational, BigRational) {
        let lo = BigRational::new(BigInt::from(i as i64 - 1), n.clone());
        let hi = BigRational::new(BigInt::from(i as i64), n.clone());
        (lo, hi)
    };

    let (mut lo, mut hi) = arc(*symbols.last().unwrap());
    for &s in symbols[..symbols.len() - 1].iter().rev() {
        let (a, b) = arc(s);
        // Inverse branch of φ ↦ −dφ that lands in [a, b): x = (j − y)/d.
        // Choose j by testing the midpoint of the current interval.
        let mid = (lo.clone() + hi.clone()) / BigRational::from(BigInt::from(2));
        let mut chosen: Option<BigInt> = None;
        let mut j = BigInt::zero();
        let dmax = &d + BigInt::one();
        while j <= dmax {
            let x = (BigRational::from(j.clone()) - mid.clone()) / BigRational::from(d.clone());
            if x >= a && x < b {
                chosen = Some(j.clone());
                break;
            }
            j += BigInt::one();
        }
        let j = match chosen {
            Some(j) => j,
            // Inconsistent symbol pair: keep the consistent prefix cylinder.
            None => break,
        };
        let new_lo = (BigRational::from(j.clone()) - hi.clone()) / BigRational::from(d.clone());
        let new_hi = (BigRational::from(j) - lo.clone()) / BigRational::from(d.clone());
        lo = new_lo;
        hi = new_hi;
    }
    (lo + hi) / BigRational::from(BigInt::from(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_of_polygon_is_fixed_pointwise() {
        for d in [2usize, 3, 5] {
            let map = NielsenMap::new(d).unwrap();
            for i in 1..=d + 1 {
                if let GenCircle::Circle { center, radius } = *map.side_circle(i) {
                    // Sample the geodesic arc inside the disk.
                    for k in 1..8 {
                        let a = (center - Complex64::from_polar(1.0, 0.0)).arg();
                        let _ = a;
                        let va = map.vertex(i - 1);
                        let vb = map.vertex(i % (d + 1));
                        let pa = (va - center).arg();
                        let pb = (vb - center).arg();
                        let mut span = pb - pa;
                        while span > std::f64::consts::PI {
                            span -= TAU;
                        }
                        while span < -std::f64::consts::PI {
                            span += TAU;
                        }
                        let ang = pa + span * k as f64 / 8.0;
                        let z = Cx::from(center + radius * Complex64::from_polar(1.0, ang));
                        assert!(z.norm() <= 1.0 + 1e-9);
                        let fz = map.eval(z).unwrap();
                        assert!(fz.dist(z) < 1e-10, "d={d} side {i} not fixed");
                    }
                }
            }
        }
    }

    #[test]
    fn vertices_are_fixed_and_interior_is_rejected() {
        let map = NielsenMap::new(3).unwrap();
        for j in 0..4 {
            let v = Cx::from(map.vertex(j));
            assert!(map.eval(v).unwrap().dist(v) < 1e-10);
        }
        assert!(matches!(map.eval(Cx::ZERO), Err(Error::OutsideDomain)));
        assert!(matches!(
            map.eval(Cx::new(1.2, 0.0)),
            Err(Error::OutsideDomain)
        ));
    }

    #[test]
    fn circle_map_has_degree_d() {
        // Winding count of the boundary restriction via cumulative lifts.
        for d in [2usize, 4] {
            let map = NielsenMap::new(d).unwrap();
            let n = 4000;
            let mut prev = map.circle_angle(1e-7);
            let mut total = 0.0;
            for k in 1..=n {
                let th = 1e-7 + (1.0 - 2e-7) * k as f64 / n as f64;
                let cur = map.circle_angle(th);
                let mut step = cur - prev;
                // The map is orientation-reversing: steps hover near −d/n.
                while step > 0.5 {
                    step -= 1.0;
                }
                while step < -0.5 {
                    step += 1.0;
                }
                total += step;
                prev = cur;
            }
            assert!(
                (total + d as f64).abs() < 0.05,
                "winding {total} for degree {d}"
            );
        }
    }

    #[test]
    fn conjugacy_fixes_vertex_angles() {
        for d in [2usize, 3, 4] {
            let map = NielsenMap::new(d).unwrap();
            for j in 0..=d {
                let th = j as f64 / (d + 1) as f64;
                let e = minkowski_conjugacy(&map, th, 30);
                assert!(
                    (e - th).abs() < 1e-8,
                    "E_{d}({th}) = {e}, expected the same angle"
                );
            }
        }
    }

    #[test]
    fn conjugacy_is_monotone_on_samples() {
        let map = NielsenMap::new(2).unwrap();
        let mut prev = -1.0;
        for k in 0..200 {
            let th = k as f64 / 200.0;
            let e = minkowski_conjugacy(&map, th, 25);
            assert!(e >= prev - 1e-9, "not monotone at θ = {th}");
            prev = e;
        }
    }

    #[test]
    fn conjugacy_intertwines_the_maps() {
        let map = NielsenMap::new(3).unwrap();
        for k in 0..50 {
            let th = 0.013 + 0.9517 * k as f64 / 50.0;
            let lhs = minkowski_conjugacy(&map, map.circle_angle(th), 40);
            let rhs = (-3.0 * minkowski_conjugacy(&map, th, 40)).rem_euclid(1.0);
            let mut diff = (lhs - rhs).abs();
            diff = diff.min(1.0 - diff);
            assert!(diff < 1e-9, "residual {diff:.3e} at θ = {th}");
        }
    }
}
