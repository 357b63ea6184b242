//! Fourier side: the single-digit factor, its level products, certified
//! Fourier coefficients, l1 partial sums over lattice boxes, and the
//! certified l1-dimension lower bound from the averaged level product.
//!
//! Everything here is 64-bit floating point with explicitly tracked error
//! terms; the exact layer in [`crate::measures`] is the oracle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::measures::DigitSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("tolerance requires {needed} product levels, cap is {cap}")]
    TolTooTight { needed: u32, cap: u32 },
    #[error("lattice box has {points} points, budget is {budget}")]
    BudgetExceeded { points: u128, budget: u128 },
    #[error("grid step {step} is not usable for level {level}")]
    BadGrid { step: f64, level: u32 },
    #[error("dimension mismatch: expected {dim}, got {got}")]
    DimMismatch { dim: usize, got: usize },
}

/// A value with a rigorous error radius: the true quantity lies within
/// `err` of `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certified<T> {
    pub value: T,
    pub err: f64,
}

/// Maximum truncation level for the infinite product.
const PRODUCT_LEVEL_CAP: u32 = 256;
/// Maximum number of lattice points for a partial sum.
const LATTICE_BUDGET: u128 = 1 << 26;

fn tau() -> f64 {
    std::f64::consts::TAU
}

/// Magnitude of the single-digit Fourier factor
/// `|sum_d P(d) e(d . x)|`; 1-periodic in every coordinate, values in [0, 1].
pub fn digit_factor(sys: &DigitSystem, x: &[f64]) -> f64 {
    assert_eq!(x.len(), sys.dim());
    let mut re = 0.0;
    let mut im = 0.0;
    for (d, w) in sys.digits().iter().zip(sys.weights_f64()) {
        let phase: f64 = d
            .iter()
            .zip(x)
            .map(|(&c, &xi)| c as f64 * xi)
            .sum::<f64>()
            * tau();
        re += w * phase.cos();
        im += w * phase.sin();
    }
    (re * re + im * im).sqrt().min(1.0)
}

/// Product of `levels` factors at geometrically scaled arguments:
/// `prod_{j<levels} digit_factor(b^j x)`.
pub fn factor_product(sys: &DigitSystem, x: &[f64], levels: u32) -> f64 {
    assert!(levels >= 1);
    let b = sys.base() as f64;
    let mut arg: Vec<f64> = x.to_vec();
    let mut prod = 1.0;
    for j in 0..levels {
        if j > 0 {
            for a in arg.iter_mut() {
                *a *= b;
            }
        }
        prod *= digit_factor(sys, &arg);
        if prod == 0.0 {
            return 0.0;
        }
    }
    prod
}

/// One signed factor of the coefficient product: `sum_d P(d) e(-d . u)`.
fn signed_factor(sys: &DigitSystem, u: &[f64]) -> Complex64 {
    let mut z = Complex64::new(0.0, 0.0);
    for (d, w) in sys.digits().iter().zip(sys.weights_f64()) {
        let phase: f64 = d
            .iter()
            .zip(u)
            .map(|(&c, &ui)| c as f64 * ui)
            .sum::<f64>()
            * tau();
        z += Complex64::new(w * phase.cos(), -w * phase.sin());
    }
    z
}

/// Certified Fourier coefficient at the integer frequency `xi`, with the
/// phase convention `integral of e(-xi . x)`.
///
/// The infinite product over rescaled factors is truncated once the summed
/// per-factor bound `2 pi k (b-1) |xi|_inf b^-j` drops below `tol`.
pub fn fourier_coefficient(
    sys: &DigitSystem,
    xi: &[i64],
    tol: f64,
) -> Result<Certified<Complex64>, FourierError> {
    if xi.len() != sys.dim() {
        return Err(FourierError::DimMismatch {
            dim: sys.dim(),
            got: xi.len(),
        });
    }
    assert!(tol > 0.0);
    let xi_inf = xi.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    if xi_inf == 0 {
        return Ok(Certified {
            value: Complex64::new(1.0, 0.0),
            err: 0.0,
        });
    }
    let b = sys.base() as f64;
    let k = sys.dim() as f64;
    // Tail after J levels: sum_{j>J} 2 pi k (b-1) |xi| b^-j = 2 pi k |xi| b^-J.
    let lead = tau() * k * xi_inf as f64;
    let mut levels = 0u32;
    let mut tail = lead;
    while tail > tol {
        levels += 1;
        tail /= b;
        if levels > PRODUCT_LEVEL_CAP {
            return Err(FourierError::TolTooTight {
                needed: levels,
                cap: PRODUCT_LEVEL_CAP,
            });
        }
    }
    let mut value = Complex64::new(1.0, 0.0);
    let mut u: Vec<f64> = xi.iter().map(|&v| v as f64 / b).collect();
    for j in 0..levels {
        if j > 0 {
            for c in u.iter_mut() {
                *c /= b;
            }
        }
        value *= signed_factor(sys, &u);
    }
    Ok(Certified { value, err: tail })
}

/// `sum_{|xi|_inf <= q} |mu_hat(xi)|` with per-term certification.
pub fn l1_partial_sum(
    sys: &DigitSystem,
    q: u64,
    tol_per_term: f64,
) -> Result<Certified<f64>, FourierError> {
    let k = sys.dim() as u32;
    let side = 2u128 * q as u128 + 1;
    let points = side.checked_pow(k).unwrap_or(u128::MAX);
    if points > LATTICE_BUDGET {
        return Err(FourierError::BudgetExceeded {
            points,
            budget: LATTICE_BUDGET,
        });
    }
    let n = points as usize;
    // Fixed chunking and in-order reduction keep the sum byte-deterministic
    // under any thread count.
    const CHUNK: usize = 4096;
    let chunk_sums: Result<Vec<(f64, f64)>, FourierError> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = ((c + 1) * CHUNK).min(n);
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            let mut err = 0.0f64;
            let mut xi = vec![0i64; k as usize];
            for idx in start..end {
                let mut rem = idx as u128;
                for slot in xi.iter_mut() {
                    *slot = (rem % side) as i64 - q as i64;
                    rem /= side;
                }
                let coeff = fourier_coefficient(sys, &xi, tol_per_term)?;
                // Kahan accumulation within the chunk.
                let y = coeff.value.norm() - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
                err += coeff.err;
            }
            Ok((sum, err))
        })
        .collect();
    let chunk_sums = chunk_sums?;
    let mut total = 0.0;
    let mut err = 0.0;
    for (s, e) in chunk_sums {
        total += s;
        err += e;
    }
    Ok(Certified { value: total, err })
}

/// Report for the certified l1-dimension lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct L1BoundReport {
    pub level: u32,
    /// Effective grid step actually used (divides the periodicity cell).
    pub grid_step: f64,
    pub grid_max: f64,
    pub lipschitz: f64,
    /// Rigorous upper bound on the supremum: grid maximum plus Lipschitz
    /// slack over half a grid step.
    pub certified_sup: f64,
    /// `-log(certified_sup) / log(b^level)`; a valid lower bound on the
    /// Fourier l1 dimension.
    pub bound: f64,
    /// Set when `certified_sup >= 1`, making the bound vacuous.
    pub vacuous: bool,
}

/// Certified lower bound on the Fourier l1 dimension at the given level.
///
/// The averaged level product `b^{-k L} sum_i S_L(x + i / b^L)` is
/// `1/b^L`-periodic in each coordinate, so the supremum is searched over one
/// periodicity cell on a grid, and certified with the global Lipschitz
/// constant `2 pi (b-1) k sum_{j<L} b^j`.
pub fn l1_lower_bound(
    sys: &DigitSystem,
    level: u32,
    grid_step: f64,
) -> Result<L1BoundReport, FourierError> {
    assert!(level >= 1);
    if !(grid_step > 0.0) || !grid_step.is_finite() {
        return Err(FourierError::BadGrid {
            step: grid_step,
            level,
        });
    }
    let b = sys.base() as f64;
    let k = sys.dim();
    let cell = b.powi(-(level as i32));
    let steps = (cell / grid_step).ceil().max(1.0);
    if steps > 1e9 {
        return Err(FourierError::BadGrid {
            step: grid_step,
            level,
        });
    }
    let m = steps as u64;
    let h = cell / m as f64;

    let shifts_per_coord = (sys.base() as u64).pow(level);
    let shift_count = (shifts_per_coord as u128).pow(k as u32);
    if shift_count > LATTICE_BUDGET {
        return Err(FourierError::BudgetExceeded {
            points: shift_count,
            budget: LATTICE_BUDGET,
        });
    }
    let shift_count = shift_count as usize;
    let norm = (b.powi(level as i32)).powi(-(k as i32));

    let grid_points = (m as u128).pow(k as u32);
    if grid_points > LATTICE_BUDGET {
        return Err(FourierError::BudgetExceeded {
            points: grid_points,
            budget: LATTICE_BUDGET,
        });
    }
    let n = grid_points as usize;
    let averaged = |x: &[f64]| -> f64 {
        let mut sum = 0.0;
        let mut arg = vec![0.0f64; k];
        for s in 0..shift_count {
            let mut rem = s as u64;
            for (j, a) in arg.iter_mut().enumerate() {
                let i = rem % shifts_per_coord;
                rem /= shifts_per_coord;
                *a = x[j] + i as f64 * cell;
            }
            sum += factor_product(sys, &arg, level);
        }
        sum * norm
    };

    const CHUNK: usize = 1024;
    let grid_max = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = ((c + 1) * CHUNK).min(n);
            let mut best = 0.0f64;
            let mut x = vec![0.0f64; k];
            for idx in start..end {
                let mut rem = idx as u128;
                for slot in x.iter_mut() {
                    *slot = (rem % m as u128) as f64 * h;
                    rem /= m as u128;
                }
                best = best.max(averaged(&x));
            }
            best
        })
        .reduce(|| 0.0f64, f64::max);

    let lipschitz = {
        let mut geom = 0.0;
        for j in 0..level {
            geom += b.powi(j as i32);
        }
        tau() * (b - 1.0) * k as f64 * geom
    };
    let certified_sup = (grid_max + lipschitz * h / 2.0).min(1.0 + f64::EPSILON);
    let log_scale = (level as f64) * b.ln();
    let bound = -certified_sup.ln() / log_scale;
    Ok(L1BoundReport {
        level,
        grid_step: h,
        grid_max,
        lipschitz,
        certified_sup,
        bound,
        vacuous: certified_sup >= 1.0,
    })
}

/// Dimension thresholds from the main theorems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// `kappa > k - (k-1)/(k+1)`: Khinchin and divergent Gallagher.
    Main,
    /// `kappa > k - k/(k+1)`: inhomogeneous convergent Khinchin.
    Weak,
    /// `kappa > 1 - 1/(k+1)` per factor: convergent Gallagher for split
    /// measures.
    Split,
}

/// Whether a Fourier l1 dimension `kappa` clears the stated threshold in
/// ambient dimension `k`.
pub fn assumption_holds(kappa: f64, k: u32, which: Assumption) -> bool {
    assert!(k >= 1);
    let kf = k as f64;
    let threshold = match which {
        Assumption::Main => kf - (kf - 1.0) / (kf + 1.0),
        Assumption::Weak => kf - kf / (kf + 1.0),
        Assumption::Split => 1.0 - 1.0 / (kf + 1.0),
    };
    kappa > threshold
}

/// `min{(k+1)/(t+1), k}`: the generic Hausdorff dimension of the
/// simultaneous `psi_t`-approximable set.
pub fn jarnik_besicovitch_exponent(t: f64, k: u32) -> f64 {
    assert!(t >= 0.0);
    ((k as f64 + 1.0) / (t + 1.0)).min(k as f64)
}
