//! Exact membership and box-intersection queries against the fractal.
//!
//! A closed box meets the fractal iff the residual-box automaton admits an
//! infinite digit path: residuals are rescaled by `b` and clipped to the unit
//! cube, so rational endpoints give finitely many states and an infinite path
//! exists iff a cycle is reachable. Walking a degenerate box is exactly the
//! digit expansion of the point, and branching over both cylinders containing
//! a `b`-adic coordinate tries both of its expansions.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{DigitSystem, MeasuresError};
use crate::rat::Rat;

const STATE_CAP: usize = 1 << 21;

/// Reusable intersection engine over fixed per-coordinate denominators.
/// States are scaled closed intervals `[lo, hi] / den` per coordinate.
pub(crate) struct Intersector<'a> {
    sys: &'a DigitSystem,
    dens: Vec<i128>,
    memo: HashMap<Vec<i128>, bool>,
}

impl<'a> Intersector<'a> {
    pub(crate) fn new(sys: &'a DigitSystem, dens: Vec<i128>) -> Result<Self, MeasuresError> {
        let b = sys.base() as i128;
        for &d in &dens {
            if d <= 0 || d > i128::MAX / (b + 1) {
                return Err(MeasuresError::DenominatorTooLarge);
            }
        }
        Ok(Intersector {
            sys,
            dens,
            memo: HashMap::new(),
        })
    }

    fn is_full(&self, state: &[i128]) -> bool {
        state
            .chunks(2)
            .zip(&self.dens)
            .all(|(lohi, &den)| lohi[0] == 0 && lohi[1] == den)
    }

    fn child(&self, state: &[i128], digit: &[u32]) -> Option<Vec<i128>> {
        let b = self.sys.base() as i128;
        let k = self.dens.len();
        let mut out = Vec::with_capacity(2 * k);
        for j in 0..k {
            let den = self.dens[j];
            let lo = (b * state[2 * j] - digit[j] as i128 * den).max(0);
            let hi = (b * state[2 * j + 1] - digit[j] as i128 * den).min(den);
            if lo > hi {
                return None;
            }
            out.push(lo);
            out.push(hi);
        }
        Some(out)
    }

    /// Whether the closed box `[lo, hi] / dens` (already clipped to the unit
    /// cube) contains a point of the fractal.
    pub(crate) fn query(&mut self, state: Vec<i128>) -> Result<bool, MeasuresError> {
        for (j, lohi) in state.chunks(2).enumerate() {
            if lohi[0] > lohi[1] || lohi[0] < 0 || lohi[1] > self.dens[j] {
                return Ok(false);
            }
        }
        if let Some(&v) = self.memo.get(&state) {
            return Ok(v);
        }
        if self.is_full(&state) {
            return Ok(true);
        }

        struct Frame {
            key: Vec<i128>,
            next_digit: usize,
            live: bool,
        }
        let mut stack: Vec<Frame> = Vec::new();
        let mut in_stack: HashMap<Vec<i128>, usize> = HashMap::new();
        in_stack.insert(state.clone(), 0);
        stack.push(Frame {
            key: state,
            next_digit: 0,
            live: false,
        });

        loop {
            let top = stack.len() - 1;
            if stack[top].live {
                let f = stack.pop().unwrap();
                in_stack.remove(&f.key);
                self.memo.insert(f.key, true);
                match stack.last_mut() {
                    Some(parent) => parent.live = true,
                    None => return Ok(true),
                }
                continue;
            }
            if stack[top].next_digit == self.sys.digit_count() {
                let f = stack.pop().unwrap();
                in_stack.remove(&f.key);
                self.memo.insert(f.key, false);
                if stack.is_empty() {
                    return Ok(false);
                }
                continue;
            }
            let d_idx = stack[top].next_digit;
            stack[top].next_digit += 1;
            let child = match self.child(&stack[top].key, &self.sys.digits()[d_idx]) {
                Some(c) => c,
                None => continue,
            };
            if self.is_full(&child) {
                stack[top].live = true;
                continue;
            }
            if let Some(&v) = self.memo.get(&child) {
                if v {
                    stack[top].live = true;
                }
                continue;
            }
            if in_stack.contains_key(&child) {
                // Cycle through an ancestor: the current state sits on it.
                stack[top].live = true;
                continue;
            }
            if self.memo.len() + stack.len() >= STATE_CAP {
                return Err(MeasuresError::StateSpaceExceeded);
            }
            in_stack.insert(child.clone(), stack.len());
            stack.push(Frame {
                key: child,
                next_digit: 0,
                live: false,
            });
        }
    }
}

fn scale_to(r: &Rat, den: i128) -> i128 {
    // den is a multiple of r's denominator.
    let q = den / r.denom().to_i128().expect("checked");
    r.numer().to_i128().expect("checked") * q
}

pub(crate) fn contains_rational(
    sys: &DigitSystem,
    point: &[Rat],
) -> Result<bool, MeasuresError> {
    if point.len() != sys.dim() {
        return Err(MeasuresError::DimMismatch {
            dim: sys.dim(),
            got: point.len(),
        });
    }
    for c in point {
        if c.is_negative() || c > &Rat::one() {
            return Err(MeasuresError::OutOfUnitCube);
        }
    }
    intersects_closed_box(sys, point, point)
}

pub(crate) fn intersects_closed_box(
    sys: &DigitSystem,
    lo: &[Rat],
    hi: &[Rat],
) -> Result<bool, MeasuresError> {
    if lo.len() != sys.dim() || hi.len() != sys.dim() {
        return Err(MeasuresError::DimMismatch {
            dim: sys.dim(),
            got: lo.len(),
        });
    }
    let mut dens = Vec::with_capacity(sys.dim());
    let mut state = Vec::with_capacity(2 * sys.dim());
    for j in 0..sys.dim() {
        let l = lo[j].clone().max(Rat::zero());
        let h = hi[j].clone().min(Rat::one());
        if l > h {
            return Ok(false);
        }
        let dl = l.denom().to_i128().ok_or(MeasuresError::DenominatorTooLarge)?;
        let dh = h.denom().to_i128().ok_or(MeasuresError::DenominatorTooLarge)?;
        let den = dl
            .checked_mul(dh / dl.gcd(&dh))
            .ok_or(MeasuresError::DenominatorTooLarge)?;
        l.numer().to_i128().ok_or(MeasuresError::DenominatorTooLarge)?;
        h.numer().to_i128().ok_or(MeasuresError::DenominatorTooLarge)?;
        state.push(scale_to(&l, den));
        state.push(scale_to(&h, den));
        dens.push(den);
    }
    let mut engine = Intersector::new(sys, dens)?;
    engine.query(state)
}
