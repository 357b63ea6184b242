//! Independent reference implementations used by the test suites.
//!
//! Everything here deliberately avoids the main evaluation paths: counting is
//! settled through cylinder-cover distance thresholds, Fourier coefficients
//! through per-level quadrature and literal cylinder sums, and suprema
//! through dense grids. Test assertions compare the optimized kernels
//! against these.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::measures::DigitSystem;
use crate::rat::Rat;

/// Whether some admissible depth-`depth` cylinder lies within `tn/td` of
/// `p = a/q` in the max norm. The search never leaves the threshold tube:
/// distances to cylinders only grow along a branch. `None` marks an i128
/// overflow of the scaled comparison at this depth.
fn cover_within_scaled(
    sys: &DigitSystem,
    a: &[i128],
    q: i128,
    depth: u32,
    tn: i128,
    td: i128,
) -> Option<bool> {
    let b = sys.base() as i128;
    let k = sys.dim();

    struct Node {
        t: u32,
        pow: i128,
        c: Vec<i128>,
    }
    let mut stack = vec![Node {
        t: 0,
        pow: 1,
        c: vec![0; k],
    }];
    while let Some(node) = stack.pop() {
        let mut dist: i128 = 0;
        for j in 0..k {
            let below = node.c[j] * q - a[j] * node.pow;
            let above = a[j] * node.pow - (node.c[j] + 1) * q;
            dist = dist.max(below).max(above);
        }
        // dist / (q pow) <= tn / td ?
        let rhs = tn.checked_mul(q)?.checked_mul(node.pow)?;
        match dist.checked_mul(td) {
            // Overflow means the product is astronomically above the
            // threshold; prune.
            None => continue,
            Some(lhs) => {
                if lhs > rhs {
                    continue;
                }
            }
        }
        if node.t == depth {
            return Some(true);
        }
        for d in sys.digits() {
            let mut c = Vec::with_capacity(k);
            for j in 0..k {
                c.push(node.c[j] * b + d[j] as i128);
            }
            stack.push(Node {
                t: node.t + 1,
                pow: node.pow * b,
                c,
            });
        }
    }
    Some(false)
}

/// Cover-based membership test: the point lies within `b^-depth` of the
/// depth-`depth` cylinder cover. True membership implies this for every
/// depth; a failure at any depth certifies non-membership.
pub fn contains_by_cover(sys: &DigitSystem, point: &[Rat], depth: u32) -> bool {
    let q = point.iter().fold(1i128, |acc, c| {
        let d = c.denom().to_i128().expect("small denominator");
        acc / gcd(acc, d) * d
    });
    let a: Vec<i128> = point
        .iter()
        .map(|c| c.numer().to_i128().expect("small numerator") * (q / c.denom().to_i128().unwrap()))
        .collect();
    let pow = (sys.base() as i128).pow(depth);
    cover_within_scaled(sys, &a, q, depth, 1, pow).unwrap_or(false)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteCount {
    pub count: u64,
    /// Pairs the cover brackets could not settle and the exact automaton had
    /// to decide. Tests assert this stays at zero.
    pub fallbacks: u64,
}

/// Naive counting oracle: enumerate every pair `(a, q)` and settle
/// `dist(a/q, K) <= delta/q_max` through escalating cover-distance
/// thresholds. A pair is out once the cover itself is farther than the
/// radius, and in once some cylinder is within `radius - b^-depth`.
pub fn brute_force_count(sys: &DigitSystem, q_max: u64, delta: &Rat) -> BruteCount {
    let radius = delta / Rat::from_integer(q_max.into());
    let rn = radius.numer().to_i128().expect("small radius numerator");
    let rd = radius.denom().to_i128().expect("small radius denominator");
    let k = sys.dim();
    let b = sys.base() as i128;

    let per_q: Vec<BruteCount> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let q = q as i128;
            let mut count = 0u64;
            let mut fallbacks = 0u64;
            let a_lo = -div_ceil_pos(q * rn, rd);
            let a_hi = q + q * rn / rd;
            let mut a = vec![a_lo; k];
            loop {
                let mut decided = None;
                let mut depth = 8u32;
                while depth <= 32 {
                    let pow = b.pow(depth);
                    match cover_within_scaled(sys, &a, q, depth, rn, rd) {
                        Some(false) => {
                            decided = Some(false);
                            break;
                        }
                        None => break,
                        Some(true) => {}
                    }
                    // in: within rn/rd - 1/b^depth = (rn pow - rd)/(rd pow)
                    if rn.checked_mul(pow).map(|v| v > rd) == Some(true) {
                        match cover_within_scaled(sys, &a, q, depth, rn * pow - rd, rd * pow) {
                            Some(true) => {
                                decided = Some(true);
                                break;
                            }
                            None => break,
                            Some(false) => {}
                        }
                    }
                    depth += 4;
                }
                let is_in = match decided {
                    Some(v) => v,
                    None => {
                        fallbacks += 1;
                        let lo: Vec<Rat> = a
                            .iter()
                            .map(|&aj| Rat::new(aj.into(), q.into()) - &radius)
                            .collect();
                        let hi: Vec<Rat> = a
                            .iter()
                            .map(|&aj| Rat::new(aj.into(), q.into()) + &radius)
                            .collect();
                        sys.intersects_box(&lo, &hi).unwrap_or(false)
                    }
                };
                if is_in {
                    count += 1;
                }
                let mut done = true;
                for j in 0..k {
                    a[j] += 1;
                    if a[j] <= a_hi {
                        done = false;
                        break;
                    }
                    a[j] = a_lo;
                }
                if done {
                    break;
                }
            }
            BruteCount { count, fallbacks }
        })
        .collect();
    per_q.iter().fold(
        BruteCount {
            count: 0,
            fallbacks: 0,
        },
        |acc, c| BruteCount {
            count: acc.count + c.count,
            fallbacks: acc.fallbacks + c.fallbacks,
        },
    )
}

fn div_ceil_pos(a: i128, b: i128) -> i128 {
    (a + b - 1).div_euclid(b)
}

/// Truncated-product quadrature for the Fourier coefficient: the depth-`m`
/// cylinder sum factorizes over levels; each per-level digit sum is
/// accumulated here independently of the main implementation.
pub fn mu_hat_quadrature(sys: &DigitSystem, xi: &[i64], depth: u32) -> Complex64 {
    let b = sys.base() as f64;
    let weights = sys.weights_f64();
    let mut prod = Complex64::new(1.0, 0.0);
    for j in 1..=depth {
        let scale = b.powi(-(j as i32));
        let mut level = Complex64::new(0.0, 0.0);
        for (d, w) in sys.digits().iter().zip(&weights) {
            let phase: f64 = d
                .iter()
                .zip(xi)
                .map(|(&c, &x)| c as f64 * x as f64)
                .sum::<f64>()
                * std::f64::consts::TAU
                * scale;
            level += Complex64::new(w * phase.cos(), -w * phase.sin());
        }
        prod *= level;
    }
    prod
}

/// Literal cylinder sum over all depth-`m` digit strings; exponential in
/// `depth`, for small systems only.
pub fn mu_hat_tree_sum(sys: &DigitSystem, xi: &[i64], depth: u32) -> Complex64 {
    let b = sys.base() as f64;
    let weights = sys.weights_f64();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        sys: &DigitSystem,
        weights: &[f64],
        xi: &[i64],
        b: f64,
        level: u32,
        depth: u32,
        weight: f64,
        anchor_phase: f64,
    ) -> Complex64 {
        if level > depth {
            return Complex64::new(weight * anchor_phase.cos(), -weight * anchor_phase.sin());
        }
        let scale = b.powi(-(level as i32)) * std::f64::consts::TAU;
        let mut acc = Complex64::new(0.0, 0.0);
        for (d, w) in sys.digits().iter().zip(weights) {
            let add: f64 = d
                .iter()
                .zip(xi)
                .map(|(&c, &x)| c as f64 * x as f64)
                .sum::<f64>()
                * scale;
            acc += rec(
                sys,
                weights,
                xi,
                b,
                level + 1,
                depth,
                weight * w,
                anchor_phase + add,
            );
        }
        acc
    }
    rec(sys, &weights, xi, b, 1, depth, 1.0, 0.0)
}

/// Dense-grid maximum of the averaged level product over one periodicity
/// cell, with its own factor evaluation.
pub fn dense_grid_max(sys: &DigitSystem, level: u32, step: f64) -> f64 {
    assert_eq!(sys.dim(), 1, "dense oracle is one-dimensional");
    let b = sys.base() as f64;
    let cell = b.powi(-(level as i32));
    let m = (cell / step).ceil() as u64;
    let shifts = (sys.base() as u64).pow(level);
    let weights = sys.weights_f64();
    let digit_vals: Vec<f64> = sys.digits().iter().map(|d| d[0] as f64).collect();
    let g = |x: f64| -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (dv, w) in digit_vals.iter().zip(&weights) {
            let ph = std::f64::consts::TAU * dv * x;
            re += w * ph.cos();
            im += w * ph.sin();
        }
        (re * re + im * im).sqrt()
    };
    (0..m)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * cell / m as f64;
            let mut sum = 0.0;
            for s in 0..shifts {
                let base_x = x + s as f64 * cell;
                let mut prod = 1.0;
                let mut arg = base_x;
                for _ in 0..level {
                    prod *= g(arg);
                    arg *= b;
                }
                sum += prod;
            }
            sum / shifts as f64
        })
        .reduce(|| 0.0, f64::max)
}

/// Least-squares slope of log(y) against log(x).
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}
