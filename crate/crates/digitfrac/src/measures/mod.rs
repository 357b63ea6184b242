//! Missing-digit systems and exact self-similar measure evaluation.
//!
//! A [`DigitSystem`] is a base `b >= 2`, an ambient dimension `k`, a nonempty
//! digit set `D` inside `{0,..,b-1}^k`, and positive rational weights summing
//! to one. It determines the measure as the law of `sum_j d_j / b^j` with
//! i.i.d. digits, and the fractal as the closure of all such sums with digits
//! from `D`. Everything in this module is exact rational arithmetic; the
//! floating-point layers elsewhere treat these routines as their oracle.

mod cdf;
mod member;
mod rect;

pub use rect::{Rect, Seg};

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rat::{rat_to_f64, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasuresError {
    #[error("digit set is empty")]
    EmptyDigits,
    #[error("digit {digit} out of range for base {base}")]
    DigitOutOfRange { digit: u32, base: u32 },
    #[error("digit vector has {got} coordinates, system dimension is {dim}")]
    DigitDimMismatch { got: usize, dim: usize },
    #[error("weights do not form a probability vector (positive, summing to 1)")]
    WeightsNotNormalized,
    #[error("weight list length {got} does not match digit count {digits}")]
    WrongWeightCount { got: usize, digits: usize },
    #[error("product factors must share a common base")]
    MixedBases,
    #[error("product factors must be one-dimensional")]
    FactorNotOneDim,
    #[error("box extends outside the unit cube")]
    BoxOutOfRange,
    #[error("point lies outside the unit cube")]
    OutOfUnitCube,
    #[error("dimension mismatch: expected {dim}, got {got}")]
    DimMismatch { dim: usize, got: usize },
    #[error("state space of the exact walk exceeded its cap")]
    StateSpaceExceeded,
    #[error("rational denominator too large for the exact kernel")]
    DenominatorTooLarge,
    #[error("region too fine for exact evaluation (corner budget exceeded)")]
    RegionBudget,
}

/// Result of an exact measure query. `Bounds` is the fallback when the exact
/// walk hits its state cap; both endpoints are then rigorous.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureValue {
    Exact(Rat),
    Bounds { lo: Rat, hi: Rat },
}

impl MeasureValue {
    pub fn exact(&self) -> Option<&Rat> {
        match self {
            MeasureValue::Exact(r) => Some(r),
            MeasureValue::Bounds { .. } => None,
        }
    }

    pub fn lo(&self) -> &Rat {
        match self {
            MeasureValue::Exact(r) => r,
            MeasureValue::Bounds { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> &Rat {
        match self {
            MeasureValue::Exact(r) => r,
            MeasureValue::Bounds { hi, .. } => hi,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            MeasureValue::Exact(r) => rat_to_f64(r),
            MeasureValue::Bounds { lo, hi } => (rat_to_f64(lo) + rat_to_f64(hi)) / 2.0,
        }
    }

    fn add(self, other: MeasureValue) -> MeasureValue {
        match (self, other) {
            (MeasureValue::Exact(a), MeasureValue::Exact(b)) => MeasureValue::Exact(a + b),
            (a, b) => MeasureValue::Bounds {
                lo: a.lo().clone() + b.lo().clone(),
                hi: a.hi().clone() + b.hi().clone(),
            },
        }
    }
}

/// A point sampled from the measure: the base-`b` expansion truncated at
/// `depth` digits, held exactly.
#[derive(Debug, Clone)]
pub struct SampledPoint {
    pub coords: Vec<Rat>,
    pub depth: u32,
}

impl SampledPoint {
    pub fn coords_f64(&self) -> Vec<f64> {
        self.coords.iter().map(rat_to_f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemJson {
    base: u32,
    dim: usize,
    digits: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<(u64, u64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitSystem {
    base: u32,
    dim: usize,
    digits: Vec<Vec<u32>>,
    weights: Vec<Rat>,
    factors: Option<Vec<DigitSystem>>,
}

impl DigitSystem {
    /// Uniform weights over the given digit set (the Cantor-Lebesgue case).
    pub fn uniform(
        base: u32,
        dim: usize,
        digits: Vec<Vec<u32>>,
    ) -> Result<DigitSystem, MeasuresError> {
        let m = digits.len();
        if m == 0 {
            return Err(MeasuresError::EmptyDigits);
        }
        let w = Rat::new(BigInt::one(), BigInt::from(m));
        DigitSystem::new(base, dim, digits, vec![w; m])
    }

    pub fn new(
        base: u32,
        dim: usize,
        digits: Vec<Vec<u32>>,
        weights: Vec<Rat>,
    ) -> Result<DigitSystem, MeasuresError> {
        if base < 2 {
            return Err(MeasuresError::DigitOutOfRange { digit: 0, base });
        }
        if dim == 0 {
            return Err(MeasuresError::DigitDimMismatch { got: 0, dim });
        }
        if digits.is_empty() {
            return Err(MeasuresError::EmptyDigits);
        }
        if weights.len() != digits.len() {
            return Err(MeasuresError::WrongWeightCount {
                got: weights.len(),
                digits: digits.len(),
            });
        }
        for d in &digits {
            if d.len() != dim {
                return Err(MeasuresError::DigitDimMismatch { got: d.len(), dim });
            }
            for &c in d {
                if c >= base {
                    return Err(MeasuresError::DigitOutOfRange { digit: c, base });
                }
            }
        }
        // Sort digits lexicographically and keep weights aligned; duplicated
        // digit vectors are merged by adding their weights.
        let mut merged: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
        for (d, w) in digits.into_iter().zip(weights.into_iter()) {
            *merged.entry(d).or_insert_with(Rat::zero) += w;
        }
        let (digits, weights): (Vec<_>, Vec<_>) = merged.into_iter().unzip();
        let sum: Rat = weights.iter().cloned().sum();
        if !sum.is_one() || weights.iter().any(|w| !w.is_positive()) {
            return Err(MeasuresError::WeightsNotNormalized);
        }
        let mut sys = DigitSystem {
            base,
            dim,
            digits,
            weights,
            factors: None,
        };
        sys.factors = sys.detect_factors();
        Ok(sys)
    }

    /// The middle-third Cantor system: base 3, digits {0, 2}, uniform.
    pub fn cantor() -> DigitSystem {
        DigitSystem::uniform(3, 1, vec![vec![0], vec![2]]).expect("valid")
    }

    /// The full digit set in base `b`, dimension `k`: Lebesgue measure on the
    /// unit cube.
    pub fn lebesgue(base: u32, dim: usize) -> Result<DigitSystem, MeasuresError> {
        let mut digits = vec![vec![]];
        for _ in 0..dim {
            let mut next = Vec::new();
            for d in digits {
                for c in 0..base {
                    let mut e: Vec<u32> = d.clone();
                    e.push(c);
                    next.push(e);
                }
            }
            digits = next;
        }
        DigitSystem::uniform(base, dim, digits)
    }

    /// Cartesian product of one-dimensional systems over a common base.
    pub fn product(factors: &[DigitSystem]) -> Result<DigitSystem, MeasuresError> {
        if factors.is_empty() {
            return Err(MeasuresError::EmptyDigits);
        }
        let base = factors[0].base;
        for f in factors {
            if f.dim != 1 {
                return Err(MeasuresError::FactorNotOneDim);
            }
            if f.base != base {
                return Err(MeasuresError::MixedBases);
            }
        }
        if factors.len() == 1 {
            return Ok(factors[0].clone());
        }
        let mut digits: Vec<Vec<u32>> = vec![vec![]];
        let mut weights: Vec<Rat> = vec![Rat::one()];
        for f in factors {
            let mut nd = Vec::with_capacity(digits.len() * f.digits.len());
            let mut nw = Vec::with_capacity(nd.capacity());
            for (d, w) in digits.iter().zip(&weights) {
                for (fd, fw) in f.digits.iter().zip(&f.weights) {
                    let mut e = d.clone();
                    e.push(fd[0]);
                    nd.push(e);
                    nw.push(w * fw);
                }
            }
            digits = nd;
            weights = nw;
        }
        let mut sys = DigitSystem::new(base, factors.len(), digits, weights)?;
        sys.factors = Some(factors.to_vec());
        Ok(sys)
    }

    /// Detects when weights and digits factor exactly as a product of
    /// one-dimensional systems, enabling the per-coordinate fast path.
    fn detect_factors(&self) -> Option<Vec<DigitSystem>> {
        if self.dim < 2 {
            return None;
        }
        let mut marginals: Vec<BTreeMap<u32, Rat>> = vec![BTreeMap::new(); self.dim];
        for (d, w) in self.digits.iter().zip(&self.weights) {
            for j in 0..self.dim {
                *marginals[j].entry(d[j]).or_insert_with(Rat::zero) += w;
            }
        }
        let count: usize = marginals.iter().map(|m| m.len()).product();
        if count != self.digits.len() {
            return None;
        }
        for (d, w) in self.digits.iter().zip(&self.weights) {
            let prod: Rat = d
                .iter()
                .enumerate()
                .map(|(j, c)| marginals[j][c].clone())
                .product();
            if &prod != w {
                return None;
            }
        }
        let factors = marginals
            .into_iter()
            .map(|m| {
                let (digits, weights): (Vec<_>, Vec<_>) =
                    m.into_iter().map(|(d, w)| (vec![d], w)).unzip();
                DigitSystem {
                    base: self.base,
                    dim: 1,
                    digits,
                    weights,
                    factors: None,
                }
            })
            .collect();
        Some(factors)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn digits(&self) -> &[Vec<u32>] {
        &self.digits
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn digit_count(&self) -> usize {
        self.digits.len()
    }

    /// One-dimensional factor systems when the measure splits as a product.
    pub fn factors(&self) -> Option<&[DigitSystem]> {
        self.factors.as_deref()
    }

    pub fn is_split(&self) -> bool {
        self.dim == 1 || self.factors.is_some()
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.iter().all(|w| w == &self.weights[0])
    }

    /// `true` when 2 <= #D < b^k: at least two points and not the whole cube.
    pub fn is_proper(&self) -> bool {
        let full = (self.base as f64).powi(self.dim as i32);
        self.digits.len() >= 2 && (self.digits.len() as f64) < full
    }

    /// log #D / log b. For uniform weights this is also the regularity
    /// exponent of the measure.
    pub fn hausdorff_dim(&self) -> f64 {
        (self.digits.len() as f64).ln() / (self.base as f64).ln()
    }

    /// Weights as f64, aligned with `digits()`.
    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(rat_to_f64).collect()
    }

    /// Draw one point: `depth` i.i.d. digits with the system's weights,
    /// deterministic in `seed`.
    pub fn sample(&self, depth: u32, seed: u64) -> SampledPoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(depth, &mut rng)
    }

    /// As `sample`, drawing from a caller-provided generator.
    pub fn sample_with<R: RngCore>(&self, depth: u32, rng: &mut R) -> SampledPoint {
        // Cumulative weight thresholds scaled to 2^64; the final threshold is
        // forced so the draw always lands.
        let mut thresholds: Vec<u128> = Vec::with_capacity(self.digits.len());
        let mut cum = Rat::zero();
        let scale = Rat::from_integer(BigInt::one() << 64);
        for w in &self.weights {
            cum += w;
            let t = (&cum * &scale).floor().to_integer();
            thresholds.push(t.to_u128().unwrap_or(u128::MAX).min(1u128 << 64));
        }
        *thresholds.last_mut().unwrap() = 1u128 << 64;

        let mut nums: Vec<BigInt> = vec![BigInt::zero(); self.dim];
        for _ in 0..depth {
            let r = rng.next_u64() as u128;
            let idx = thresholds.partition_point(|&t| t <= r);
            let d = &self.digits[idx.min(self.digits.len() - 1)];
            for j in 0..self.dim {
                nums[j] = &nums[j] * self.base + d[j];
            }
        }
        let den = BigInt::from(self.base).pow(depth);
        let coords = nums
            .into_iter()
            .map(|n| Rat::new(n, den.clone()))
            .collect();
        SampledPoint { coords, depth }
    }

    /// Exact measure of an axis-aligned rational box inside the unit cube.
    pub fn box_measure(&self, rect: &Rect) -> Result<MeasureValue, MeasuresError> {
        if rect.dim() != self.dim {
            return Err(MeasuresError::DimMismatch {
                dim: self.dim,
                got: rect.dim(),
            });
        }
        if !rect.inside_unit_cube() {
            return Err(MeasuresError::BoxOutOfRange);
        }
        let unions: Vec<Vec<Seg>> = rect.segs().into_iter().map(|s| vec![s]).collect();
        self.measure_region(&unions)
    }

    /// Exact measure of a product of per-coordinate interval unions. The
    /// unions must be internally disjoint per coordinate.
    pub fn measure_region(&self, unions: &[Vec<Seg>]) -> Result<MeasureValue, MeasuresError> {
        cdf::measure_region(self, unions)
    }

    /// Two-sided cylinder-cover bracket of a box measure at a fixed depth.
    /// This is a deliberately independent evaluation path used as an oracle
    /// for `box_measure`.
    pub fn box_measure_bracket(&self, rect: &Rect, depth: u32) -> (Rat, Rat) {
        cdf::bracket_box(self, rect, depth)
    }

    /// Whether the point (all coordinates rational, in [0,1]) lies in the
    /// fractal: some base-`b` expansion of every coordinate uses only digits
    /// from `D`. Both expansions of `b`-adic rationals are tried.
    pub fn contains_rational(&self, point: &[Rat]) -> Result<bool, MeasuresError> {
        member::contains_rational(self, point)
    }

    /// Whether the closed box `[lo, hi]` meets the fractal. Exact: decided by
    /// cycle detection on the residual-box automaton.
    pub fn intersects_box(&self, lo: &[Rat], hi: &[Rat]) -> Result<bool, MeasuresError> {
        member::intersects_closed_box(self, lo, hi)
    }

    pub fn to_json(&self) -> String {
        let weights = if self.is_uniform() {
            None
        } else {
            Some(
                self.weights
                    .iter()
                    .map(|w| {
                        (
                            w.numer().to_u64().expect("weight numerator fits u64"),
                            w.denom().to_u64().expect("weight denominator fits u64"),
                        )
                    })
                    .collect(),
            )
        };
        let j = SystemJson {
            base: self.base,
            dim: self.dim,
            digits: self.digits.clone(),
            weights,
        };
        serde_json::to_string_pretty(&j).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<DigitSystem, String> {
        let j: SystemJson = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let weights = match j.weights {
            None => {
                let m = j.digits.len().max(1);
                vec![Rat::new(BigInt::one(), BigInt::from(m)); j.digits.len()]
            }
            Some(ws) => ws
                .into_iter()
                .map(|(n, d)| {
                    if d == 0 {
                        Err("weight with zero denominator".to_string())
                    } else {
                        Ok(Rat::new(BigInt::from(n), BigInt::from(d)))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        DigitSystem::new(j.base, j.dim, j.digits, weights).map_err(|e| e.to_string())
    }
}

pub(crate) use member::Intersector;

/// Reusable exact intersection engine over fixed per-coordinate denominators;
/// the counting kernels share one per denominator so automaton states are
/// memoized across queries.
pub(crate) fn membership_engine(
    sys: &DigitSystem,
    dens: Vec<i128>,
) -> Result<Intersector<'_>, MeasuresError> {
    Intersector::new(sys, dens)
}

#[cfg(test)]
mod tests;
