//! Metric Diophantine approximation experiments: hit detection for the
//! simultaneous and multiplicative target sets, exact Khinchin and Gallagher
//! measure sums, the dyadic rectangle sandwich, Monte Carlo window fractions,
//! and intrinsic approximation by rationals on the fractal.

mod psi;
mod sandwich;
mod sums;

pub use psi::Psi;
pub use sandwich::{
    dyadic_sandwich, indicator_lower_family, indicator_mult, indicator_upper_family, RectFamily,
};
pub use sums::{
    gallagher_sum_mu, khinchin_sum_lebesgue, khinchin_sum_mu, GallagherRow, GallagherRun,
    KhinchinRow, KhinchinRun,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::measures::{membership_engine, DigitSystem, MeasuresError};
use crate::rat::{rat_from_f64, rat_to_f64, Rat};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("bad approximation-function parameters: {0}")]
    BadFamilyParams(String),
    #[error("psi stays >= 1/2 over the requested range")]
    PsiTooLarge,
    #[error("dimension mismatch: expected {dim}, got {got}")]
    DimMismatch { dim: usize, got: usize },
    #[error(transparent)]
    Measures(#[from] MeasuresError),
}

/// Simultaneous (max norm) or multiplicative (product) target sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sim,
    Mult,
}

/// One solution of the approximation inequality at level `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord {
    pub n: u64,
    /// Nearest integers to `n x_j - y_j`.
    pub witnesses: Vec<i64>,
    /// Max norm (sim) or product (mult) of the distances; below psi(n).
    pub value: f64,
}

/// All `n` in `[n0, n1]` satisfying the strict inequality of the chosen
/// mode at the rational point `x` with shift `y`. Exact rational
/// comparisons; `y` and `psi(n)` enter as the exact dyadic rationals their
/// float values denote.
pub fn hits(
    x: &[Rat],
    y: &[f64],
    psi: &Psi,
    n0: u64,
    n1: u64,
    mode: Mode,
) -> Result<Vec<HitRecord>, ApproxError> {
    psi.validate()?;
    if x.len() != y.len() {
        return Err(ApproxError::DimMismatch {
            dim: x.len(),
            got: y.len(),
        });
    }
    assert!(n0 >= 1 && n0 <= n1);
    let y_rat: Vec<Rat> = y.iter().map(|&v| rat_from_f64(v)).collect();
    let mut out = Vec::new();
    for n in n0..=n1 {
        let psi_n = rat_from_f64(psi.eval(n));
        if !psi_n.is_positive() {
            continue;
        }
        let nr = Rat::from_integer(BigInt::from(n));
        let mut witnesses = Vec::with_capacity(x.len());
        let mut dists = Vec::with_capacity(x.len());
        for (xj, yj) in x.iter().zip(&y_rat) {
            let v = &nr * xj - yj;
            let a = nearest_integer(&v);
            let dist = (&v - Rat::from_integer(a.clone())).abs();
            witnesses.push(a.to_i64().unwrap_or(i64::MAX));
            dists.push(dist);
        }
        let value = match mode {
            Mode::Sim => dists.iter().cloned().fold(Rat::zero(), |a, d| a.max(d)),
            Mode::Mult => dists.iter().cloned().product(),
        };
        if value < psi_n {
            out.push(HitRecord {
                n,
                witnesses,
                value: rat_to_f64(&value),
            });
        }
    }
    Ok(out)
}

fn nearest_integer(v: &Rat) -> BigInt {
    // Round half up, deterministically.
    (v + Rat::new(BigInt::one(), BigInt::from(2))).floor().to_integer()
}

/// Result of a Monte Carlo window probe.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFraction {
    pub hits: u64,
    pub samples: u64,
    pub fraction: f64,
    /// 95% normal-approximation interval, clamped to [0, 1].
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Fraction of measure-sampled points with at least one hit in `[n0, n1]`.
/// Deterministic in `seed`, independent of the thread count.
#[allow(clippy::too_many_arguments)]
pub fn limsup_fraction(
    sys: &DigitSystem,
    psi: &Psi,
    y: &[f64],
    n0: u64,
    n1: u64,
    mode: Mode,
    samples: u64,
    seed: u64,
) -> Result<WindowFraction, ApproxError> {
    psi.validate()?;
    if y.len() != sys.dim() {
        return Err(ApproxError::DimMismatch {
            dim: sys.dim(),
            got: y.len(),
        });
    }
    assert!(n0 >= 1 && n0 <= n1);
    // Depth so that the truncation error stays below the lattice scale 1/n1^2.
    let depth = ((2.0 * (n1 as f64).ln() / (sys.base() as f64).ln()).ceil() as u32 + 8).max(32);
    let psi_vals: Vec<f64> = (n0..=n1).map(|n| psi.eval(n)).collect();

    const CHUNK: u64 = 256;
    let chunks = samples.div_ceil(CHUNK);
    let hit_count: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ c.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(samples);
            let mut local = 0u64;
            for _ in lo..hi {
                let p = sys.sample_with(depth, &mut rng);
                let coords = p.coords_f64();
                'search: for (i, n) in (n0..=n1).enumerate() {
                    let psi_n = psi_vals[i];
                    if psi_n <= 0.0 {
                        continue;
                    }
                    let ok = match mode {
                        Mode::Sim => coords
                            .iter()
                            .zip(y)
                            .all(|(xj, yj)| dist_to_z(n as f64 * xj - yj) < psi_n),
                        Mode::Mult => {
                            let prod: f64 = coords
                                .iter()
                                .zip(y)
                                .map(|(xj, yj)| dist_to_z(n as f64 * xj - yj))
                                .product();
                            prod < psi_n
                        }
                    };
                    if ok {
                        local += 1;
                        break 'search;
                    }
                }
            }
            local
        })
        .sum();
    let f = hit_count as f64 / samples as f64;
    let se = (f * (1.0 - f) / samples as f64).sqrt();
    Ok(WindowFraction {
        hits: hit_count,
        samples,
        fraction: f,
        ci_lo: (f - 1.96 * se).max(0.0),
        ci_hi: (f + 1.96 * se).min(1.0),
    })
}

fn dist_to_z(v: f64) -> f64 {
    let t = v.rem_euclid(1.0);
    t.min(1.0 - t)
}

/// One intrinsic approximation witness: `a/n` on the fractal within
/// `n^(-1-tau)` of `x` in the max norm.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicHit {
    pub n: u64,
    pub a: Vec<i64>,
    pub dist: f64,
}

/// All pairs `(a, n)` with `2 <= n <= q_max`, `a/n` on the fractal, and
/// `max_j |x_j - a_j/n| < n^(-1-tau)` (strict, exact comparisons). The level
/// n = 1 is skipped: its radius is the whole cube, carrying no information.
pub fn intrinsic_hits(
    sys: &DigitSystem,
    x: &[Rat],
    tau: f64,
    q_max: u64,
) -> Result<Vec<IntrinsicHit>, ApproxError> {
    if x.len() != sys.dim() {
        return Err(ApproxError::DimMismatch {
            dim: sys.dim(),
            got: x.len(),
        });
    }
    for c in x {
        if c.is_negative() || c > &Rat::one() {
            return Err(ApproxError::Measures(MeasuresError::OutOfUnitCube));
        }
    }
    let k = sys.dim();
    let mut out = Vec::new();
    for n in 2..=q_max {
        let r = rat_from_f64((n as f64).powf(-1.0 - tau));
        if !r.is_positive() {
            continue;
        }
        let nr = Rat::from_integer(BigInt::from(n));
        // Candidate integer ranges per coordinate, clipped to [0, n].
        let mut ranges = Vec::with_capacity(k);
        for xj in x {
            let lo = (&nr * (xj - &r)).ceil().to_integer().max(BigInt::zero());
            let hi = (&nr * (xj + &r)).floor().to_integer().min(BigInt::from(n));
            let lo = lo.to_i128().unwrap_or(0);
            let hi = hi.to_i128().unwrap_or(-1);
            if lo > hi {
                ranges.push(None);
                break;
            }
            ranges.push(Some((lo, hi)));
        }
        if ranges.len() < k || ranges.iter().any(|r| r.is_none()) {
            continue;
        }
        let ranges: Vec<(i128, i128)> = ranges.into_iter().map(|r| r.unwrap()).collect();
        let mut engine = membership_engine(sys, vec![n as i128; k])?;
        let mut a: Vec<i128> = ranges.iter().map(|r| r.0).collect();
        'points: loop {
            // Strict max-norm test, exact.
            let mut dist = Rat::zero();
            for (j, xj) in x.iter().enumerate() {
                let d = (xj - Rat::new(BigInt::from(a[j]), BigInt::from(n))).abs();
                dist = dist.max(d);
            }
            if dist < r {
                let mut state = Vec::with_capacity(2 * k);
                for &aj in &a {
                    state.push(aj);
                    state.push(aj);
                }
                if engine.query(state)? {
                    out.push(IntrinsicHit {
                        n,
                        a: a.iter().map(|&v| v as i64).collect(),
                        dist: rat_to_f64(&dist),
                    });
                }
            }
            for j in 0..k {
                a[j] += 1;
                if a[j] <= ranges[j].1 {
                    continue 'points;
                }
                a[j] = ranges[j].0;
                if j == k - 1 {
                    break 'points;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn cantor() -> DigitSystem {
        DigitSystem::cantor()
    }

    #[test]
    fn hits_half_with_constant_psi() {
        let psi = Psi::Constant { c: 0.3 };
        let hs = hits(&[rat(1, 2)], &[0.0], &psi, 1, 4, Mode::Sim).unwrap();
        let ns: Vec<u64> = hs.iter().map(|h| h.n).collect();
        assert_eq!(ns, vec![2, 4]);
        assert_eq!(hs[0].witnesses, vec![1]);
        assert_eq!(hs[0].value, 0.0);
    }

    #[test]
    fn hits_empty_for_zero_psi() {
        let psi = Psi::Constant { c: 0.0 };
        let hs = hits(&[rat(1, 3)], &[0.0], &psi, 1, 50, Mode::Sim).unwrap();
        assert!(hs.is_empty(), "strict inequality against zero never holds");
    }

    #[test]
    fn hits_mult_matches_brute_scan() {
        let psi = Psi::PowerT { t: 1.0 };
        let x = [rat(1, 3), rat(1, 2)];
        let got = hits(&x, &[0.0, 0.0], &psi, 1, 12, Mode::Mult).unwrap();
        // independent scan in floating point (all distances here are exact
        // multiples of 1/6, far from the thresholds)
        let mut expect = Vec::new();
        for n in 1..=12u64 {
            let d1 = dist_to_z(n as f64 / 3.0);
            let d2 = dist_to_z(n as f64 / 2.0);
            if d1 * d2 < psi.eval(n) {
                expect.push(n);
            }
        }
        assert_eq!(got.iter().map(|h| h.n).collect::<Vec<_>>(), expect);
    }

    #[test]
    fn sim_equals_mult_in_dim_one() {
        let psi = Psi::PowerT { t: 0.7 };
        let x = [rat(5, 13)];
        let y = [0.25];
        let a = hits(&x, &y, &psi, 1, 100, Mode::Sim).unwrap();
        let b = hits(&x, &y, &psi, 1, 100, Mode::Mult).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hits_translation_invariant_in_y() {
        let psi = Psi::PowerT { t: 0.8 };
        let x = [rat(3, 7)];
        let a = hits(&x, &[0.3], &psi, 1, 60, Mode::Sim).unwrap();
        let b = hits(&x, &[1.3], &psi, 1, 60, Mode::Sim).unwrap();
        let ns: Vec<u64> = a.iter().map(|h| h.n).collect();
        let ms: Vec<u64> = b.iter().map(|h| h.n).collect();
        assert_eq!(ns, ms);
    }

    #[test]
    fn hits_monotone_in_psi() {
        let small = Psi::Constant { c: 0.1 };
        let large = Psi::Constant { c: 0.3 };
        let x = [rat(17, 31)];
        let a = hits(&x, &[0.0], &small, 1, 80, Mode::Sim).unwrap();
        let b = hits(&x, &[0.0], &large, 1, 80, Mode::Sim).unwrap();
        let bs: std::collections::HashSet<u64> = b.iter().map(|h| h.n).collect();
        for h in &a {
            assert!(bs.contains(&h.n), "larger psi lost a hit at {}", h.n);
        }
    }

    #[test]
    fn limsup_zero_psi_is_zero() {
        let psi = Psi::Constant { c: 0.0 };
        let f = limsup_fraction(&cantor(), &psi, &[0.0], 1, 32, Mode::Sim, 500, 1).unwrap();
        assert_eq!(f.hits, 0);
        assert_eq!(f.fraction, 0.0);
    }

    #[test]
    fn limsup_single_level_measures_a_ball() {
        // n = 1, psi = 0.4: the hit set is ||x|| < 0.4, of Lebesgue measure
        // 0.8.
        let sys = DigitSystem::lebesgue(2, 1).unwrap();
        let psi = Psi::Constant { c: 0.4 };
        let f = limsup_fraction(&sys, &psi, &[0.0], 1, 1, Mode::Sim, 20_000, 11).unwrap();
        assert!(f.ci_lo <= 0.8 && 0.8 <= f.ci_hi, "fraction {}", f.fraction);
    }

    #[test]
    fn limsup_deterministic_per_seed() {
        let psi = Psi::PowerT { t: 1.0 };
        let a = limsup_fraction(&cantor(), &psi, &[0.0], 4, 64, Mode::Sim, 4000, 7).unwrap();
        let b = limsup_fraction(&cantor(), &psi, &[0.0], 4, 64, Mode::Sim, 4000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intrinsic_quarter_in_cantor() {
        // 1/4 lies in the Cantor set, so (1,4) and (2,8) are exact hits at
        // any tau.
        let sys = cantor();
        let hs = intrinsic_hits(&sys, &[rat(1, 4)], 10.0, 10).unwrap();
        let pairs: Vec<(u64, i64)> = hs.iter().map(|h| (h.n, h.a[0])).collect();
        assert_eq!(pairs, vec![(4, 1), (8, 2)]);
        assert!(hs.iter().all(|h| h.dist == 0.0));
    }

    #[test]
    fn intrinsic_half_matches_brute_scan() {
        let sys = cantor();
        let tau = 0.0;
        let got = intrinsic_hits(&sys, &[rat(1, 2)], tau, 10).unwrap();
        let mut expect = Vec::new();
        for n in 2..=10u64 {
            let thr = rat_from_f64((n as f64).powf(-1.0 - tau));
            for a in 0..=n {
                let p = rat(a as i64, n as i64);
                let d = (rat(1, 2) - &p).abs();
                if d < thr && sys.contains_rational(&[p]).unwrap() {
                    expect.push((n, a as i64));
                }
            }
        }
        assert_eq!(
            got.iter().map(|h| (h.n, h.a[0])).collect::<Vec<_>>(),
            expect
        );
    }

    #[test]
    fn intrinsic_large_tau_is_empty() {
        let sys = cantor();
        let hs = intrinsic_hits(&sys, &[rat(413, 1000)], 10.0, 100).unwrap();
        assert!(hs.is_empty());
    }

    use num_traits::Signed;
}
