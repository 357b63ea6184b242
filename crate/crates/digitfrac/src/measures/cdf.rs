//! Exact measure evaluation.
//!
//! The measure of a lower box `[0, x1> x ... x [0, xk>` satisfies a linear
//! self-similarity recursion driven by the base-`b` digit streams of the
//! corner coordinates. Rational corners have eventually periodic streams, so
//! the recursion closes after finitely many steps; the cycle is resolved by a
//! small exact linear solve. General boxes reduce to corner values by
//! inclusion-exclusion, and products of per-coordinate interval unions reduce
//! to boxes.
//!
//! Face mass is real here: a missing-digit measure can charge hyperplanes
//! (degenerate factors do), so every corner evaluation carries a strictness
//! flag, and pure "rider" classes — mass that follows a digit stream forever —
//! are assigned to the closed side only.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{DigitSystem, MeasureValue, MeasuresError, Rect, Seg};
use crate::rat::Rat;

/// States per one-dimensional walk before giving up.
const WALK_CAP: usize = 150_000;
/// Steps of the joint residual stream before giving up.
const JOINT_STREAM_CAP: usize = 60_000;
/// Boxes a region may expand into before the query is refused.
const REGION_CHOICE_BUDGET: usize = 200_000;
/// Node budget for the bracketing fallback.
const BRACKET_NODE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WalkError {
    Cap,
    DenTooLarge,
}

fn den_i128(r: &Rat) -> Result<(i128, i128), WalkError> {
    let den = r.denom().to_i128().ok_or(WalkError::DenTooLarge)?;
    let num = r.numer().to_i128().ok_or(WalkError::DenTooLarge)?;
    Ok((num, den))
}

/// Per-value weight tables for a one-dimensional system: `wt[v]` is the
/// weight of digit `v` (zero if missing), `below[v]` the total weight of
/// digits strictly less than `v`.
fn digit_tables_1d(sys: &DigitSystem) -> (Vec<Rat>, Vec<Rat>) {
    let b = sys.base() as usize;
    let mut wt = vec![Rat::zero(); b];
    for (d, w) in sys.digits().iter().zip(sys.weights()) {
        wt[d[0] as usize] = w.clone();
    }
    let mut below = vec![Rat::zero(); b];
    let mut acc = Rat::zero();
    for v in 0..b {
        below[v] = acc.clone();
        acc += &wt[v];
    }
    (wt, below)
}

/// mu([0, x]) (strict = false) or mu([0, x)) (strict = true) for a
/// one-dimensional system; `x` in [0, 1].
pub(crate) fn cdf_1d(sys: &DigitSystem, x: &Rat, strict: bool) -> Result<Rat, WalkError> {
    debug_assert_eq!(sys.dim(), 1);
    debug_assert!(!x.is_negative() && x <= &Rat::one());
    if x.is_zero() && strict {
        return Ok(Rat::zero());
    }
    let (mut num, den) = den_i128(x)?;
    let b = sys.base() as i128;
    if den > i128::MAX / (b + 1) {
        return Err(WalkError::DenTooLarge);
    }
    let (wt, below) = digit_tables_1d(sys);

    // seen: residual numerator -> (pi, acc) at first visit
    let mut seen: HashMap<i128, (Rat, Rat)> = HashMap::new();
    let mut pi = Rat::one();
    let mut acc = Rat::zero();
    loop {
        if let Some((pi0, acc0)) = seen.get(&num) {
            let ratio = &pi / pi0;
            if ratio.is_one() {
                // Pure rider: every step kept full weight, nothing released.
                debug_assert_eq!(&acc, acc0);
                let tail = if strict { Rat::zero() } else { Rat::one() };
                return Ok(acc0 + pi0 * tail);
            }
            let per_cycle = (&acc - acc0) / pi0;
            let tail = per_cycle / (Rat::one() - ratio);
            return Ok(acc0 + pi0 * tail);
        }
        seen.insert(num, (pi.clone(), acc.clone()));
        if seen.len() > WALK_CAP {
            return Err(WalkError::Cap);
        }
        let e = (b * num / den).min(b - 1);
        num = b * num - e * den;
        let e = e as usize;
        if !below[e].is_zero() {
            acc += &pi * &below[e];
        }
        if wt[e].is_zero() {
            return Ok(acc);
        }
        pi *= &wt[e];
    }
}

/// Measure of a one-dimensional segment via two CDF evaluations.
fn seg_measure_1d(sys: &DigitSystem, seg: &Seg) -> Result<Rat, WalkError> {
    if seg.is_empty() {
        return Ok(Rat::zero());
    }
    let hi = cdf_1d(sys, &seg.hi, !seg.closed_hi)?;
    let lo = cdf_1d(sys, &seg.lo, seg.closed_lo)?;
    Ok(hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Mode {
    Stream,
    AtOne,
    Released,
}

type ModeVec = Vec<Mode>;

enum Step {
    Dead,
    To(ModeVec),
}

/// Mode transition under one digit, given the stream digits consumed this
/// step and whether each residual became exactly zero.
fn step_modes(
    mv: &[Mode],
    d: &[u32],
    e: &[u32],
    zero_after: &[bool],
    strict: &[bool],
    base: u32,
) -> Step {
    let mut out = Vec::with_capacity(mv.len());
    for j in 0..mv.len() {
        let m = match mv[j] {
            Mode::Released => Mode::Released,
            Mode::AtOne => {
                if d[j] == base - 1 {
                    Mode::AtOne
                } else {
                    Mode::Released
                }
            }
            Mode::Stream => {
                if d[j] > e[j] {
                    return Step::Dead;
                } else if d[j] == e[j] {
                    Mode::Stream
                } else if e[j] - d[j] == 1 && zero_after[j] {
                    // The rescaled upper bound lands exactly on 1.
                    if strict[j] {
                        Mode::AtOne
                    } else {
                        Mode::Released
                    }
                } else {
                    Mode::Released
                }
            }
        };
        out.push(m);
    }
    Step::To(out)
}

fn all_released(mv: &[Mode]) -> bool {
    mv.iter().all(|m| *m == Mode::Released)
}

fn rider_value(mv: &[Mode], strict: &[bool]) -> Rat {
    for (j, m) in mv.iter().enumerate() {
        match m {
            Mode::Released => {}
            Mode::AtOne => return Rat::zero(),
            Mode::Stream => {
                if strict[j] {
                    return Rat::zero();
                }
            }
        }
    }
    Rat::one()
}

struct JointWalk<'a> {
    sys: &'a DigitSystem,
    strict: Vec<bool>,
    digit_seq: Vec<Vec<u32>>,
    zero_seq: Vec<Vec<bool>>,
}

impl<'a> JointWalk<'a> {
    /// Mode vectors reachable in one step from `states` at layer `t`,
    /// excluding the absorbing all-released vector.
    fn successors(&self, states: &[ModeVec], t: usize) -> Vec<ModeVec> {
        let mut out: Vec<ModeVec> = Vec::new();
        for mv in states {
            for d in self.sys.digits() {
                if let Step::To(nx) = step_modes(
                    mv,
                    d,
                    &self.digit_seq[t],
                    &self.zero_seq[t],
                    &self.strict,
                    self.sys.base(),
                ) {
                    if !all_released(&nx) && !out.contains(&nx) {
                        out.push(nx);
                    }
                }
            }
        }
        out
    }

    /// One backward propagation step: values (or affine rows) at layer t from
    /// layer t+1. `lookup` resolves a successor vector; all-released absorbs
    /// with value `one`.
    fn back_step<V, F>(&self, states: &[ModeVec], t: usize, one: &V, lookup: F) -> Vec<(ModeVec, V)>
    where
        V: Clone,
        F: Fn(&ModeVec) -> Option<V>,
        V: AffineAccum,
    {
        let mut out = Vec::with_capacity(states.len());
        for mv in states {
            let mut total = V::zero_like(one);
            for (d, w) in self.sys.digits().iter().zip(self.sys.weights()) {
                match step_modes(
                    mv,
                    d,
                    &self.digit_seq[t],
                    &self.zero_seq[t],
                    &self.strict,
                    self.sys.base(),
                ) {
                    Step::Dead => {}
                    Step::To(nx) => {
                        if all_released(&nx) {
                            total.add_scaled(one, w);
                        } else if let Some(v) = lookup(&nx) {
                            total.add_scaled(&v, w);
                        }
                        // Successors outside the reach sets carry no mass.
                    }
                }
            }
            out.push((mv.clone(), total));
        }
        out
    }
}

/// Minimal affine accumulator so scalar values and coefficient rows share the
/// backward-propagation code.
trait AffineAccum: Sized {
    fn zero_like(template: &Self) -> Self;
    fn add_scaled(&mut self, other: &Self, w: &Rat);
}

impl AffineAccum for Rat {
    fn zero_like(_: &Self) -> Self {
        Rat::zero()
    }
    fn add_scaled(&mut self, other: &Self, w: &Rat) {
        if !other.is_zero() {
            *self += w * other;
        }
    }
}

#[derive(Clone)]
struct Row {
    coeffs: Vec<Rat>,
    cst: Rat,
}

impl AffineAccum for Row {
    fn zero_like(template: &Self) -> Self {
        Row {
            coeffs: vec![Rat::zero(); template.coeffs.len()],
            cst: Rat::zero(),
        }
    }
    fn add_scaled(&mut self, other: &Self, w: &Rat) {
        for (a, c) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if !c.is_zero() {
                *a += w * c;
            }
        }
        if !other.cst.is_zero() {
            self.cst += w * &other.cst;
        }
    }
}

/// Joint CDF: mu of the lower box with corner `x` and per-coordinate
/// strictness, for systems that do not split as a product.
fn cdf_joint(sys: &DigitSystem, x: &[Rat], strict_in: &[bool]) -> Result<Rat, WalkError> {
    let k = sys.dim();
    let b = sys.base();
    let mut init: ModeVec = Vec::with_capacity(k);
    for j in 0..k {
        if x[j].is_zero() && strict_in[j] {
            return Ok(Rat::zero());
        }
        if x[j].is_one() && !strict_in[j] {
            init.push(Mode::Released);
        } else {
            init.push(Mode::Stream);
        }
    }
    if all_released(&init) {
        return Ok(Rat::one());
    }

    // Residual streams, scaled to integers over fixed denominators.
    let mut nums: Vec<i128> = Vec::with_capacity(k);
    let mut dens: Vec<i128> = Vec::with_capacity(k);
    for j in 0..k {
        let (n, d) = den_i128(&x[j])?;
        if d > i128::MAX / (b as i128 + 1) {
            return Err(WalkError::DenTooLarge);
        }
        nums.push(n);
        dens.push(d);
    }

    // Phase 1: evolve the joint stream until the residual vector repeats.
    let mut first_seen: HashMap<Vec<i128>, usize> = HashMap::new();
    let mut digit_seq: Vec<Vec<u32>> = Vec::new();
    let mut zero_seq: Vec<Vec<bool>> = Vec::new();
    let (cycle_start, total_len);
    let mut t = 0usize;
    loop {
        if let Some(&t0) = first_seen.get(&nums) {
            cycle_start = t0;
            total_len = t;
            break;
        }
        first_seen.insert(nums.clone(), t);
        if t > JOINT_STREAM_CAP {
            return Err(WalkError::Cap);
        }
        let mut e = Vec::with_capacity(k);
        let mut z = Vec::with_capacity(k);
        for j in 0..k {
            let ej = ((b as i128) * nums[j] / dens[j]).min(b as i128 - 1);
            nums[j] = (b as i128) * nums[j] - ej * dens[j];
            e.push(ej as u32);
            z.push(nums[j] == 0);
        }
        digit_seq.push(e);
        zero_seq.push(z);
        t += 1;
    }

    let walk = JointWalk {
        sys,
        strict: strict_in.to_vec(),
        digit_seq,
        zero_seq,
    };

    // Phase 2: reachable mode vectors per layer. Modes only weaken
    // (Stream -> AtOne -> Released), so closing the cycle stabilizes quickly.
    let mut reach: Vec<Vec<ModeVec>> = vec![Vec::new(); total_len + 1];
    reach[0].push(init.clone());
    for t in 0..cycle_start {
        reach[t + 1] = walk.successors(&reach[t], t);
    }
    loop {
        for t in cycle_start..total_len {
            let step = walk.successors(&reach[t], t);
            for mv in step {
                if !reach[t + 1].contains(&mv) {
                    reach[t + 1].push(mv);
                }
            }
        }
        let mut grew = false;
        let wrap = reach[total_len].clone();
        for mv in wrap {
            if !reach[cycle_start].contains(&mv) {
                reach[cycle_start].push(mv);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let basis: Vec<ModeVec> = reach[cycle_start].clone();
    let nb = basis.len();

    // Phase 3: affine rows m(mv, t) = coeffs . u + cst over the cycle, where
    // u is the unknown value vector at the cycle-start layer.
    let mut rows: HashMap<ModeVec, Row> = HashMap::new();
    for (i, mv) in basis.iter().enumerate() {
        let mut coeffs = vec![Rat::zero(); nb];
        coeffs[i] = Rat::one();
        rows.insert(
            mv.clone(),
            Row {
                coeffs,
                cst: Rat::zero(),
            },
        );
    }
    let one_row = Row {
        coeffs: vec![Rat::zero(); nb],
        cst: Rat::one(),
    };
    for t in (cycle_start..total_len).rev() {
        let next = walk.back_step(&reach[t], t, &one_row, |mv| rows.get(mv).cloned());
        rows = next.into_iter().collect();
    }

    // u = A u + c over the basis.
    let mut a_mat = vec![vec![Rat::zero(); nb]; nb];
    let mut c_vec = vec![Rat::zero(); nb];
    for (i, mv) in basis.iter().enumerate() {
        if let Some(row) = rows.get(mv) {
            a_mat[i] = row.coeffs.clone();
            c_vec[i] = row.cst.clone();
        } else {
            // Unreachable at cycle start as a source; keep it consistent.
            a_mat[i][i] = Rat::one();
        }
    }
    let u = solve_cycle(&a_mat, &c_vec, &basis, strict_in)?;

    // Phase 4: numeric backward pass over the pre-period.
    let mut values: HashMap<ModeVec, Rat> = basis
        .iter()
        .zip(u.iter())
        .map(|(v, r)| (v.clone(), r.clone()))
        .collect();
    let one_val = Rat::one();
    for t in (0..cycle_start).rev() {
        let next = walk.back_step(&reach[t], t, &one_val, |mv| values.get(mv).cloned());
        values = next.into_iter().collect();
    }
    values.get(&init).cloned().ok_or(WalkError::Cap)
}

/// Solve u = A u + c. Pure classes (row sum exactly one, no constant, closed
/// support) are mass that follows its digit stream forever; it belongs to the
/// closed side only, so those unknowns are preset from the strictness flags
/// before the remaining strictly substochastic system is eliminated.
fn solve_cycle(
    a: &[Vec<Rat>],
    c: &[Rat],
    basis: &[ModeVec],
    strict: &[bool],
) -> Result<Vec<Rat>, WalkError> {
    let n = basis.len();
    let mut pure: Vec<bool> = (0..n)
        .map(|i| c[i].is_zero() && a[i].iter().cloned().sum::<Rat>().is_one())
        .collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            if pure[i] {
                for j in 0..n {
                    if !a[i][j].is_zero() && !pure[j] {
                        pure[i] = false;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut value: Vec<Option<Rat>> = vec![None; n];
    for i in 0..n {
        if pure[i] {
            value[i] = Some(rider_value(&basis[i], strict));
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| value[i].is_none()).collect();
    let m = free.len();
    if m > 0 {
        // (I - A) restricted to the free unknowns, RHS folding in presets.
        let mut mat = vec![vec![Rat::zero(); m + 1]; m];
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                mat[r][s] = if i == j {
                    Rat::one() - &a[i][j]
                } else {
                    -a[i][j].clone()
                };
            }
            let mut rhs = c[i].clone();
            for j in 0..n {
                if let Some(v) = &value[j] {
                    if !a[i][j].is_zero() && !v.is_zero() {
                        rhs += &a[i][j] * v;
                    }
                }
            }
            mat[r][m] = rhs;
        }
        for col in 0..m {
            let piv = (col..m)
                .find(|&r| !mat[r][col].is_zero())
                .ok_or(WalkError::Cap)?;
            mat.swap(col, piv);
            let p = mat[col][col].clone();
            for s in col..=m {
                mat[col][s] = &mat[col][s] / &p;
            }
            for r in 0..m {
                if r != col && !mat[r][col].is_zero() {
                    let f = mat[r][col].clone();
                    for s in col..=m {
                        let sub = &f * &mat[col][s];
                        mat[r][s] = &mat[r][s] - sub;
                    }
                }
            }
        }
        for (r, &i) in free.iter().enumerate() {
            value[i] = Some(mat[r][m].clone());
        }
    }
    Ok(value.into_iter().map(|v| v.unwrap()).collect())
}

/// Measure of a box via corner inclusion-exclusion on the joint CDF.
fn box_measure_joint(sys: &DigitSystem, segs: &[Seg]) -> Result<Rat, WalkError> {
    let k = segs.len();
    let mut total = Rat::zero();
    for mask in 0u32..(1 << k) {
        let mut corner = Vec::with_capacity(k);
        let mut strict = Vec::with_capacity(k);
        for (j, seg) in segs.iter().enumerate() {
            if mask >> j & 1 == 0 {
                corner.push(seg.hi.clone());
                strict.push(!seg.closed_hi);
            } else {
                corner.push(seg.lo.clone());
                strict.push(seg.closed_lo);
            }
        }
        let f = cdf_joint(sys, &corner, &strict)?;
        if mask.count_ones() % 2 == 0 {
            total += f;
        } else {
            total -= f;
        }
    }
    Ok(total)
}

fn box_measure_exact(sys: &DigitSystem, segs: &[Seg]) -> Result<Rat, WalkError> {
    if segs.iter().any(|s| s.is_empty()) {
        return Ok(Rat::zero());
    }
    if sys.dim() == 1 {
        return seg_measure_1d(sys, &segs[0]);
    }
    if let Some(factors) = sys.factors() {
        let mut prod = Rat::one();
        for (f, seg) in factors.iter().zip(segs) {
            let m = seg_measure_1d(f, seg)?;
            if m.is_zero() {
                return Ok(Rat::zero());
            }
            prod *= m;
        }
        return Ok(prod);
    }
    box_measure_joint(sys, segs)
}

/// Exact measure of a product of per-coordinate disjoint interval unions.
pub(crate) fn measure_region(
    sys: &DigitSystem,
    unions: &[Vec<Seg>],
) -> Result<MeasureValue, MeasuresError> {
    if unions.len() != sys.dim() {
        return Err(MeasuresError::DimMismatch {
            dim: sys.dim(),
            got: unions.len(),
        });
    }
    let mut cleaned: Vec<Vec<Seg>> = Vec::with_capacity(unions.len());
    for u in unions {
        let mut v: Vec<Seg> = Vec::with_capacity(u.len());
        for s in u {
            if s.lo < Rat::zero() || s.hi > Rat::one() {
                return Err(MeasuresError::BoxOutOfRange);
            }
            if !s.is_empty() {
                v.push(s.clone());
            }
        }
        if v.is_empty() {
            return Ok(MeasureValue::Exact(Rat::zero()));
        }
        cleaned.push(v);
    }

    // Split systems: per-coordinate sums multiply (the unions are disjoint).
    if sys.dim() == 1 || sys.factors().is_some() {
        let factors: Vec<&DigitSystem> = match sys.factors() {
            Some(fs) => fs.iter().collect(),
            None => vec![sys],
        };
        let mut prod = MeasureValue::Exact(Rat::one());
        for (f, u) in factors.iter().zip(&cleaned) {
            let mut coord = MeasureValue::Exact(Rat::zero());
            for seg in u {
                let term = match seg_measure_1d(f, seg) {
                    Ok(m) => MeasureValue::Exact(m),
                    Err(_) => bracket_segs(f, std::slice::from_ref(seg)),
                };
                coord = coord.add(term);
            }
            prod = mul_measures(prod, coord);
        }
        return Ok(prod);
    }

    let choices: usize = cleaned.iter().map(|u| u.len()).product();
    if choices.saturating_mul(1 << sys.dim()) > REGION_CHOICE_BUDGET {
        return Err(MeasuresError::RegionBudget);
    }
    let mut total = MeasureValue::Exact(Rat::zero());
    let mut idx = vec![0usize; cleaned.len()];
    loop {
        let segs: Vec<Seg> = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| cleaned[j][i].clone())
            .collect();
        let term = match box_measure_exact(sys, &segs) {
            Ok(m) => MeasureValue::Exact(m),
            Err(_) => bracket_segs(sys, &segs),
        };
        total = total.add(term);
        let mut j = 0;
        loop {
            if j == idx.len() {
                return Ok(total);
            }
            idx[j] += 1;
            if idx[j] < cleaned[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn mul_measures(a: MeasureValue, b: MeasureValue) -> MeasureValue {
    match (a, b) {
        (MeasureValue::Exact(x), MeasureValue::Exact(y)) => MeasureValue::Exact(x * y),
        (x, y) => MeasureValue::Bounds {
            lo: x.lo().clone() * y.lo().clone(),
            hi: x.hi().clone() * y.hi().clone(),
        },
    }
}

fn bracket_segs(sys: &DigitSystem, segs: &[Seg]) -> MeasureValue {
    let rect = Rect::from_segs(segs.to_vec());
    let (lo, hi) = bracket_box(sys, &rect, 48);
    MeasureValue::Bounds { lo, hi }
}

/// Two-sided cylinder bracket: the lower sum takes depth-limited cylinders
/// whose closure sits inside the box, the upper adds every cylinder whose
/// closure meets it. Deliberately independent of the CDF walk.
pub(crate) fn bracket_box(sys: &DigitSystem, rect: &Rect, depth: u32) -> (Rat, Rat) {
    let mut lo = Rat::zero();
    let mut hi = Rat::zero();
    let mut budget = BRACKET_NODE_BUDGET;
    let segs = rect.segs();
    bracket_rec(sys, &segs, &Rat::one(), depth, &mut lo, &mut hi, &mut budget);
    (lo, hi)
}

fn bracket_rec(
    sys: &DigitSystem,
    segs: &[Seg],
    weight: &Rat,
    depth: u32,
    lo: &mut Rat,
    hi: &mut Rat,
    budget: &mut usize,
) {
    // `segs` is the box in the current cylinder's rescaled coordinates;
    // empty iff the cylinder's closure misses the box.
    if segs.iter().any(|s| s.is_empty()) {
        return;
    }
    let covers = segs.iter().all(|s| {
        (s.lo < Rat::zero() || (s.lo.is_zero() && s.closed_lo))
            && (s.hi > Rat::one() || (s.hi.is_one() && s.closed_hi))
    });
    if covers {
        *lo += weight;
        *hi += weight;
        return;
    }
    if depth == 0 || *budget == 0 {
        *hi += weight;
        return;
    }
    *budget -= 1;
    let b = sys.base();
    for (d, w) in sys.digits().iter().zip(sys.weights()) {
        let child: Vec<Seg> = segs
            .iter()
            .enumerate()
            .map(|(j, s)| {
                Seg::new(
                    &s.lo * Rat::from_integer(BigInt::from(b))
                        - Rat::from_integer(BigInt::from(d[j])),
                    &s.hi * Rat::from_integer(BigInt::from(b))
                        - Rat::from_integer(BigInt::from(d[j])),
                    s.closed_lo,
                    s.closed_hi,
                )
                .clip_unit()
            })
            .collect();
        let cw = weight * w;
        bracket_rec(sys, &child, &cw, depth - 1, lo, hi, budget);
    }
}
