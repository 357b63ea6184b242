//! Exact counting of rational points on and near the fractal.
//!
//! A pair `(a, q)` with `q <= Q` is counted when `dist_inf(a/q, K) <= delta/Q`
//! (non-strict, resolved by exact rational comparison). Per denominator the
//! candidate lattice is pruned down the digit tree: a cylinder is explored
//! only while its `delta/Q`-dilation still holds unresolved candidates,
//! candidates within `delta/Q - b^-t` of a surviving cylinder are certified
//! in, and the stragglers at the depth cap are settled exactly by the
//! residual-box automaton. All comparisons are cross-multiplied i128
//! integers.

use rayon::prelude::*;
use thiserror::Error;

use crate::measures::{membership_engine, DigitSystem, MeasuresError};
use crate::rat::{rat_to_f64, Rat};

use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountingError {
    #[error("slab parameters must satisfy 1 <= a < b, k >= 1")]
    BadSlabParams,
    #[error("query must have q_max >= 1 and delta >= 0")]
    BadQuery,
    #[error("counting grids support dimension <= 3, got {0}")]
    DimTooLarge(usize),
    #[error(transparent)]
    Measures(#[from] MeasuresError),
}

/// Height bound and neighborhood width; the metric is fixed to `l_inf`.
#[derive(Debug, Clone)]
pub struct CountQuery {
    pub q_max: u64,
    pub delta: Rat,
}

#[derive(Debug, Clone)]
pub struct CountResult {
    /// Certified lower count; equals the exact count when `exact`.
    pub count: u64,
    pub count_lo: u64,
    pub count_hi: u64,
    pub exact: bool,
    /// `delta^(k - dim_H) * Q^(dim_H + 1)`.
    pub heuristic: f64,
    /// `count / heuristic`, when `delta > 0`.
    pub ratio: Option<f64>,
}

/// The slab construction: full digit set in the first `k-1` coordinates, the
/// initial segment `{0, .., a-1}` in the last.
pub fn slab_system(b: u32, a: u32, k: usize) -> Result<DigitSystem, CountingError> {
    if a < 1 || a >= b || k < 1 {
        return Err(CountingError::BadSlabParams);
    }
    let last = DigitSystem::uniform(b, 1, (0..a).map(|d| vec![d]).collect())?;
    if k == 1 {
        return Ok(last);
    }
    let mut factors = Vec::with_capacity(k);
    for _ in 0..k - 1 {
        factors.push(DigitSystem::lebesgue(b, 1)?);
    }
    factors.push(last);
    Ok(DigitSystem::product(&factors)?)
}

/// Exact count of rational points on the fractal with denominator at most
/// `q_max`.
pub fn count_on(sys: &DigitSystem, q_max: u64) -> Result<u64, CountingError> {
    let r = count_near(
        sys,
        &CountQuery {
            q_max,
            delta: Rat::zero(),
        },
    )?;
    debug_assert!(r.exact);
    Ok(r.count)
}

pub fn count_near(sys: &DigitSystem, query: &CountQuery) -> Result<CountResult, CountingError> {
    if query.q_max < 1 || query.delta.is_negative() {
        return Err(CountingError::BadQuery);
    }
    let k = sys.dim();
    if k > 3 {
        return Err(CountingError::DimTooLarge(k));
    }
    // The neighborhood radius delta/Q, reduced.
    let radius = &query.delta / Rat::from_integer(query.q_max.into());
    let rn = radius
        .numer()
        .to_i128()
        .ok_or(MeasuresError::DenominatorTooLarge)?;
    let rd = radius
        .denom()
        .to_i128()
        .ok_or(MeasuresError::DenominatorTooLarge)?;

    let per_q: Vec<(u64, u64)> = (1..=query.q_max)
        .into_par_iter()
        .map(|q| {
            if rn == 0 {
                count_q_on(sys, q as i128)
            } else {
                count_q_near(sys, q as i128, rn, rd, query.q_max)
            }
        })
        .collect();
    let count_lo: u64 = per_q.iter().fold(0, |acc, p| acc.saturating_add(p.0));
    let count_hi: u64 = per_q.iter().fold(0, |acc, p| acc.saturating_add(p.1));
    let exact = count_lo == count_hi;

    let kappa2 = sys.hausdorff_dim();
    let delta_f = rat_to_f64(&query.delta);
    let qf = query.q_max as f64;
    let heuristic = if delta_f > 0.0 {
        delta_f.powf(k as f64 - kappa2) * qf.powf(kappa2 + 1.0)
    } else if (k as f64 - kappa2).abs() < 1e-12 {
        qf.powf(kappa2 + 1.0)
    } else {
        0.0
    };
    let ratio = if delta_f > 0.0 && heuristic > 0.0 {
        Some(count_lo as f64 / heuristic)
    } else {
        None
    };
    Ok(CountResult {
        count: count_lo,
        count_lo,
        count_hi,
        exact,
        heuristic,
        ratio,
    })
}

/// delta = 0: membership of every lattice point, sharing one automaton per
/// denominator.
fn count_q_on(sys: &DigitSystem, q: i128) -> (u64, u64) {
    let k = sys.dim();
    let total = ((q + 1) as u64).pow(k as u32);
    let mut engine = match membership_engine(sys, vec![q; k]) {
        Ok(e) => e,
        Err(_) => return (0, total),
    };
    let mut lo = 0u64;
    let mut hi = 0u64;
    let ranges: Vec<(i128, i128)> = vec![(0, q); k];
    let mut a = vec![0i128; k];
    loop {
        let mut state = Vec::with_capacity(2 * k);
        for &aj in &a {
            state.push(aj);
            state.push(aj);
        }
        match engine.query(state) {
            Ok(true) => {
                lo += 1;
                hi += 1;
            }
            Ok(false) => {}
            Err(_) => hi += 1,
        }
        if !odometer_next(&mut a, &ranges) {
            return (lo, hi);
        }
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b)
}

fn ceil_div(a: i128, b: i128) -> i128 {
    let d = a.div_euclid(b);
    if a.rem_euclid(b) != 0 {
        d + 1
    } else {
        d
    }
}

/// Advance `a` through the product of ranges; false when exhausted.
fn odometer_next(a: &mut [i128], ranges: &[(i128, i128)]) -> bool {
    for j in 0..a.len() {
        a[j] += 1;
        if a[j] <= ranges[j].1 {
            return true;
        }
        a[j] = ranges[j].0;
    }
    false
}

struct NearCtx<'a> {
    sys: &'a DigitSystem,
    q: i128,
    rn: i128,
    rd: i128,
    b: i128,
    k: usize,
    a_lo: i128,
    width: i128,
    marked: Vec<bool>,
    queued: Vec<bool>,
    m_cap: u32,
    /// Candidates the tree could not settle; decided exactly afterwards.
    pending: Vec<Vec<i128>>,
}

impl<'a> NearCtx<'a> {
    fn index(&self, a: &[i128]) -> usize {
        let mut idx = 0usize;
        for &aj in a {
            idx = idx * self.width as usize + (aj - self.a_lo) as usize;
        }
        idx
    }

    fn any_unmarked(&self, ranges: &[(i128, i128)]) -> bool {
        let mut a: Vec<i128> = ranges.iter().map(|r| r.0).collect();
        loop {
            if !self.marked[self.index(&a)] {
                return true;
            }
            if !odometer_next(&mut a, ranges) {
                return false;
            }
        }
    }

    fn recurse(&mut self, t: u32, pow: i128, c: &[i128], parent: &[(i128, i128)]) {
        // Candidates near this cylinder: a/q within rn/rd of [c, c+1]/b^t.
        let mut ranges = Vec::with_capacity(self.k);
        for j in 0..self.k {
            let lo = ceil_div(self.q * (c[j] * self.rd - self.rn * pow), self.rd * pow)
                .max(parent[j].0);
            let hi = floor_div(self.q * ((c[j] + 1) * self.rd + self.rn * pow), self.rd * pow)
                .min(parent[j].1);
            if lo > hi {
                return;
            }
            ranges.push((lo, hi));
        }
        if !self.any_unmarked(&ranges) {
            return;
        }
        // Certify candidates within rn/rd - 1/b^t of the cylinder once the
        // cylinder is smaller than the neighborhood: the cylinder holds a
        // fractal point, at most b^-t away from any of its points.
        let slack = self.q * (self.rn * pow - self.rd);
        if slack >= 0 {
            let mut a: Vec<i128> = ranges.iter().map(|r| r.0).collect();
            loop {
                let idx = self.index(&a);
                if !self.marked[idx] {
                    let mut dist_scaled = 0i128;
                    for j in 0..self.k {
                        let below = c[j] * self.q - a[j] * pow;
                        let above = a[j] * pow - (c[j] + 1) * self.q;
                        dist_scaled = dist_scaled.max(below).max(above);
                    }
                    if dist_scaled * self.rd <= slack {
                        self.marked[idx] = true;
                    }
                }
                if !odometer_next(&mut a, &ranges) {
                    break;
                }
            }
            if !self.any_unmarked(&ranges) {
                return;
            }
        }
        if t == self.m_cap {
            let mut a: Vec<i128> = ranges.iter().map(|r| r.0).collect();
            loop {
                let idx = self.index(&a);
                if !self.marked[idx] && !self.queued[idx] {
                    self.queued[idx] = true;
                    self.pending.push(a.clone());
                }
                if !odometer_next(&mut a, &ranges) {
                    return;
                }
            }
        }
        let mut child = vec![0i128; self.k];
        let digit_count = self.sys.digit_count();
        for di in 0..digit_count {
            for j in 0..self.k {
                child[j] = c[j] * self.b + self.sys.digits()[di][j] as i128;
            }
            self.recurse(t + 1, pow * self.b, &child, &ranges);
        }
    }
}

fn count_q_near(sys: &DigitSystem, q: i128, rn: i128, rd: i128, q_max: u64) -> (u64, u64) {
    let k = sys.dim();
    let b = sys.base() as i128;
    let a_lo = ceil_div(-q * rn, rd);
    let a_hi = q + floor_div(q * rn, rd);
    let width = a_hi - a_lo + 1;
    let cells = (width as usize).pow(k as u32);

    // Depth cap from the query scale, clamped so every scaled comparison
    // stays inside i128; stragglers go to the exact engine either way.
    let qf = q_max as f64;
    let delta = (rn as f64 / rd as f64) * qf;
    let spec_cap =
        ((4.0 * qf / delta.max(qf.powi(-2))).ln() / (b as f64).ln()).ceil() as i64 + 4;
    let mut safe_cap = 0u32;
    let mut pow = 1i128;
    let budget = i128::MAX / 8 / (q * rd).max(1) / (b + 1);
    while pow <= budget / b && (safe_cap as i64) < spec_cap.max(1) {
        pow *= b;
        safe_cap += 1;
    }
    let m_cap = safe_cap.max(1);

    let mut ctx = NearCtx {
        sys,
        q,
        rn,
        rd,
        b,
        k,
        a_lo,
        width,
        marked: vec![false; cells],
        queued: vec![false; cells],
        m_cap,
        pending: Vec::new(),
    };
    let full: Vec<(i128, i128)> = vec![(a_lo, a_hi); k];
    ctx.recurse(0, 1, &vec![0i128; k], &full);

    let mut lo: u64 = ctx.marked.iter().filter(|&&m| m).count() as u64;
    let mut hi = lo;
    if !ctx.pending.is_empty() {
        // Exact decision: does the closed box a/q +- rn/rd meet the fractal?
        let den = q * rd;
        match membership_engine(sys, vec![den; k]) {
            Ok(mut engine) => {
                for a in &ctx.pending {
                    if ctx.marked[ctx_index(&ctx, a)] {
                        continue;
                    }
                    let mut state = Vec::with_capacity(2 * k);
                    for &aj in a {
                        state.push((aj * rd - rn * q).max(0));
                        state.push((aj * rd + rn * q).min(den));
                    }
                    match engine.query(state) {
                        Ok(true) => {
                            lo += 1;
                            hi += 1;
                        }
                        Ok(false) => {}
                        Err(_) => hi += 1,
                    }
                }
            }
            Err(_) => {
                hi += ctx
                    .pending
                    .iter()
                    .filter(|a| !ctx.marked[ctx_index(&ctx, a)])
                    .count() as u64;
            }
        }
    }
    (lo, hi)
}

fn ctx_index(ctx: &NearCtx, a: &[i128]) -> usize {
    ctx.index(a)
}
