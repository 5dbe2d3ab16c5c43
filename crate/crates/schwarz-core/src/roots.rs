use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::poly::Poly;
use num_complex::Complex64;

/// A root with the multiplicity assigned to its cluster.
#[derive(Clone, Copy, Debug)]
pub struct RootMult {
    pub z: Complex64,
    pub mult: usize,
}

/// All complex roots of `p`, with multiplicities, via Aberth–Ehrlich
/// simultaneous iteration.
///
/// Approximants that converge into a cluster of relative radius
/// `tol.root_cluster` are merged and reported once with the combined
/// multiplicity (the cluster mean cancels the leading error term, so the
/// reported point of an exact double root is accurate to roughly the square
/// of the individual approximant error). Every returned simple root
/// satisfies the backward-error bound `|p(z)| <= root_tol · Σ_k |c_k| |z|^k`
/// (cluster means get three digits of slack), which stays meaningful when
/// the coefficients span many orders of magnitude. Restarts perturb the
/// approximants deterministically, so results are reproducible.
pub fn poly_roots(p: &Poly, tol: &Tolerances) -> Result<Vec<RootMult>> {
    if p.is_zero() {
        return Err(Error::InvalidRational(
            "cannot enumerate roots of the zero polynomial".into(),
        ));
    }
    if p.degree() > tol.max_degree {
        return Err(Error::DegreeTooLarge {
            got: p.degree(),
            cap: tol.max_degree,
        });
    }

    // Trim a numerically negligible leading fringe: coefficients this far
    // below the largest one only push phantom roots out toward infinity.
    let maxc = p.max_coeff();
    let mut coeffs: Vec<Complex64> = p.coeffs().to_vec();
    while coeffs.len() > 1 && coeffs.last().unwrap().norm() < 1e-250 * maxc.max(1.0) {
        coeffs.pop();
    }

    // Peel exact zero roots (vanishing low-order coefficients).
    let mut zero_mult = 0usize;
    while coeffs.len() > 1 && coeffs[0].norm() == 0.0 {
        coeffs.remove(0);
        zero_mult += 1;
    }

    let q = Poly::new(coeffs);
    let mut out = Vec::new();
    if zero_mult > 0 {
        out.push(RootMult {
            z: Complex64::new(0.0, 0.0),
            mult: zero_mult,
        });
    }
    let n = q.degree();
    if n == 0 {
        return finish(out, p, tol);
    }

    let approx = if n == 1 {
        let c = q.coeffs();
        vec![cdiv(-c[0], c[1])]
    } else if n == 2 {
        quadratic_roots(q.coeffs())
    } else {
        aberth(&q, tol)?
    };

    out.extend(cluster(&approx, tol.root_cluster));
    finish(out, p, tol)
}

/// Complex division by Smith's algorithm: no overflow from the naive
/// `|b|²` denominator even when `|b|` is near the floating-point ceiling.
fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let t = 1.0 / (b.re + b.im * r);
        Complex64::new((a.re + a.im * r) * t, (a.im - a.re * r) * t)
    } else {
        let r = b.re / b.im;
        let t = 1.0 / (b.re * r + b.im);
        Complex64::new((a.re * r + a.im) * t, (a.im * r - a.re) * t)
    }
}

/// Stable quadratic formula (avoids cancellation in the small root).
fn quadratic_roots(c: &[Complex64]) -> Vec<Complex64> {
    // normalize so squaring the coefficients cannot overflow
    let m = c.iter().map(|x| x.norm()).fold(0.0f64, f64::max);
    let c: Vec<Complex64> = c.iter().map(|x| x / m).collect();
    let (a, b, cc) = (c[2], c[1], c[0]);
    let disc = (b * b - 4.0 * a * cc).sqrt();
    // Pick the sign that maximises |b ∓ disc|.
    let s = if (b + disc).norm() >= (b - disc).norm() {
        b + disc
    } else {
        b - disc
    };
    if s.norm() == 0.0 {
        // b = disc = 0: double root at 0 of a z^2.
        return vec![Complex64::new(0.0, 0.0); 2];
    }
    let r1 = cdiv(-s, 2.0 * a);
    let r2 = cdiv(-2.0 * cc, s);
    vec![r1, r2]
}

/// `Σ_k |c_k| |z|^k`: the natural scale of an evaluation of `p` at modulus
/// `|z|`, for the backward-error stopping test.
fn eval_scale(coeffs: &[Complex64], zn: f64) -> f64 {
    let mut s = 0.0f64;
    for c in coeffs.iter().rev() {
        s = s * zn + c.norm();
    }
    s
}

/// Initial approximants on one circle per edge of the upper convex hull of
/// `(k, log|c_k|)`, so every natural root-magnitude scale of the polynomial
/// starts populated even when the scales span hundreds of decades.
fn initial_guesses(c: &[Complex64]) -> Vec<Complex64> {
    let pts: Vec<(usize, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, ck)| ck.norm() > 0.0)
        .map(|(k, ck)| (k, ck.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &(k, h) in &pts {
        while hull.len() >= 2 {
            let (ka, ha) = hull[hull.len() - 2];
            let (kb, hb) = hull[hull.len() - 1];
            // drop the middle point when it sags below the chord
            if (hb - ha) * ((k - ka) as f64) <= (h - ha) * ((kb - ka) as f64) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((k, h));
    }
    let mut z = Vec::new();
    for e in 1..hull.len() {
        let (k1, h1) = hull[e - 1];
        let (k2, h2) = hull[e];
        let m = k2 - k1;
        let r = ((h1 - h2) / m as f64).exp();
        for t in 0..m {
            // Slightly irrational offset so no guess sits on a symmetry axis.
            let th = 2.0 * std::f64::consts::PI * (t as f64 + 0.354_89) / m as f64
                + 0.542_66
                + e as f64;
            z.push(r * Complex64::new(th.cos(), th.sin()));
        }
    }
    z
}

fn aberth(q: &Poly, tol: &Tolerances) -> Result<Vec<Complex64>> {
    let n = q.degree();
    let c = q.coeffs();
    let dq = q.derivative();

    // Fujiwara-type inclusion radius; used when an approximant has to be
    // restarted after overflowing.
    let lead = c[n].norm();
    let mut radius: f64 = 0.0;
    for k in 0..n {
        let mut t = c[k].norm() / lead;
        if k == 0 {
            t /= 2.0;
        }
        radius = radius.max(2.0 * t.powf(1.0 / (n - k) as f64));
    }
    radius = radius.max(1e-3);

    let mut z = initial_guesses(c);
    debug_assert_eq!(z.len(), n);

    let res_ok = |zi: Complex64, pz: Complex64| pz.norm() <= tol.root_tol * eval_scale(c, zi.norm());

    let mut iterations = 0u32;
    let mut best_res = f64::INFINITY;
    loop {
        let mut all_ok = true;
        let mut max_res = 0.0f64;
        for i in 0..n {
            let zi = z[i];
            let pz = q.eval(zi);
            let rn = pz.norm();
            max_res = max_res.max(if rn.is_finite() { rn } else { f64::INFINITY });
            if res_ok(zi, pz) {
                continue;
            }
            all_ok = false;
            let dpz = dq.eval(zi);
            let newton = if dpz.norm() > 0.0 && dpz.norm().is_finite() {
                cdiv(pz, dpz)
            } else {
                // Derivative vanished under us: nudge off the critical point.
                Complex64::new(1e-8 * (1.0 + zi.norm()), 0.0)
            };
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let d = zi - zj;
                    if d.norm() > 0.0 && d.norm().is_finite() {
                        sum += cdiv(Complex64::new(1.0, 0.0), d);
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * sum;
            let mut step = if denom.norm() > 1e-12 {
                cdiv(newton, denom)
            } else {
                newton
            };
            // Trust region: a near-singular Aberth denominator must not
            // launch the approximant out of floating-point range.
            let cap = 4.0 * (1.0 + zi.norm());
            if !step.norm().is_finite() || step.norm() > cap {
                let scale = if step.norm().is_finite() {
                    cap / step.norm()
                } else {
                    0.0
                };
                step *= scale;
            }
            z[i] = zi - step;
            if !(z[i].re.is_finite() && z[i].im.is_finite()) {
                // Evaluation overflowed anyway: restart this approximant on
                // the inclusion circle at a fresh deterministic angle.
                let th = 2.399_963 * (i as f64 + 1.0) * (iterations as f64 + 1.0);
                z[i] = radius * Complex64::new(th.cos(), th.sin());
            }
        }
        if all_ok {
            return Ok(z);
        }
        best_res = best_res.min(max_res);
        iterations += 1;
        if iterations >= tol.root_iter_cap {
            return Err(Error::NonConvergence {
                residual: best_res,
                iterations,
            });
        }
        // Deterministic perturbation restart if the iteration stalls in a
        // symmetric or cyclic configuration.
        if iterations % 120 == 0 {
            for (i, zi) in z.iter_mut().enumerate() {
                let th = 2.399_963 * (i as f64 + 1.0) * iterations as f64;
                *zi += 1e-4 * (1.0 + zi.norm()) * Complex64::new(th.cos(), th.sin());
            }
        }
    }
}

/// Greedy single-linkage clustering with a relative radius.
fn cluster(approx: &[Complex64], rel_radius: f64) -> Vec<RootMult> {
    let mut used = vec![false; approx.len()];
    let mut out = Vec::new();
    for i in 0..approx.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![approx[i]];
        used[i] = true;
        let mut grew = true;
        while grew {
            grew = false;
            for (j, &zj) in approx.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let close = members
                    .iter()
                    .any(|m| (m - zj).norm() <= rel_radius * (1.0 + zj.norm()));
                if close {
                    members.push(zj);
                    used[j] = true;
                    grew = true;
                }
            }
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push(RootMult {
            z: mean,
            mult: members.len(),
        });
    }
    out
}

/// Final residual validation of the clustered roots, plus a Newton polish
/// for the simple ones.
fn finish(mut roots: Vec<RootMult>, p: &Poly, tol: &Tolerances) -> Result<Vec<RootMult>> {
    let dp = p.derivative();
    for r in roots.iter_mut() {
        if r.mult == 1 {
            for _ in 0..2 {
                let pz = p.eval(r.z);
                let dpz = dp.eval(r.z);
                if dpz.norm() > 0.0 && dpz.norm().is_finite() {
                    let step = cdiv(pz, dpz);
                    if step.norm() < 1e-3 * (1.0 + r.z.norm()) {
                        r.z -= step;
                    }
                }
            }
        }
        let res = p.eval(r.z).norm();
        // multiple-root cluster means carry a residual quadratic in the
        // approximant error; give them the matching slack
        let slack = if r.mult > 1 { 1e3 } else { 1.0 };
        let bound = slack * tol.root_tol * eval_scale(p.coeffs(), r.z.norm());
        if res > bound {
            return Err(Error::NonConvergence {
                residual: res,
                iterations: tol.root_iter_cap,
            });
        }
    }
    roots.sort_by(|a, b| {
        (a.z.re, a.z.im)
            .partial_cmp(&(b.z.re, b.z.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(roots)
}
