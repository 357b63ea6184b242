//! Exact Khinchin and Gallagher measure sums.
//!
//! Per level `n` the simultaneous target set is a product of per-coordinate
//! unions of intervals around the shifted lattice `(a + y) / n`; its measure
//! is evaluated exactly. Float inputs (`psi(n)` and the shift `y`) are
//! rationalized on a base-`b`-adic grid so the exact walks stay fast; for the
//! multiplicative sandwich the non-dyadic last side is rounded directionally
//! (shells shrink, boxes grow), keeping both inclusions rigorous. Levels
//! where psi had to be clipped below 1/2 are reported in the run metadata.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::sandwich::{dyadic_sandwich, RectFamily, PSI_CLIP};
use super::{ApproxError, Psi};
use crate::measures::{DigitSystem, MeasureValue, Seg};
use crate::rat::{frac_mod_one, rat, rat_from_f64, rat_to_f64, round_b_adic, Rat, Rounding};

/// Base-`b`-adic precision for rationalized float inputs.
const RATIONALIZE_BITS: u32 = 40;

#[derive(Debug, Clone)]
pub struct KhinchinRow {
    pub n: u64,
    pub term: MeasureValue,
    pub partial: MeasureValue,
}

#[derive(Debug, Clone)]
pub struct KhinchinRun {
    pub rows: Vec<KhinchinRow>,
    /// Levels where psi(n) was clipped to just below 1/2.
    pub clipped: Vec<u64>,
    /// The exact shift actually used, after reduction mod 1 and
    /// rationalization.
    pub y_used: Vec<Rat>,
}

#[derive(Debug, Clone)]
pub struct GallagherRow {
    pub n: u64,
    pub lower: MeasureValue,
    pub upper: MeasureValue,
    pub lower_partial: MeasureValue,
    pub upper_partial: MeasureValue,
}

#[derive(Debug, Clone)]
pub struct GallagherRun {
    pub rows: Vec<GallagherRow>,
    pub clipped: Vec<u64>,
    pub y_used: Vec<Rat>,
}

fn rationalize_y(y: &[f64], base: u32) -> Vec<Rat> {
    y.iter()
        .map(|&v| {
            let f = frac_mod_one(&rat_from_f64(v));
            round_b_adic(rat_to_f64(&f), base, RATIONALIZE_BITS, Rounding::Nearest)
                .clamp(Rat::zero(), Rat::one())
        })
        .collect()
}

fn psi_term_rat(psi: &Psi, n: u64, base: u32, dir: Rounding) -> (Rat, bool) {
    let raw = psi.eval(n);
    let clipped = raw > PSI_CLIP;
    let v = raw.clamp(0.0, PSI_CLIP);
    let r = round_b_adic(v, base, RATIONALIZE_BITS, dir).max(Rat::zero());
    (r, clipped)
}

/// Wrap a segment on the torus into `[0, 1]` pieces; the cut points are
/// interior, so the cut faces come out closed.
fn wrap_unit(seg: Seg) -> Vec<Seg> {
    let one = Rat::one();
    let mut s = seg;
    // Shift into [-1, 2) territory first if needed.
    while s.lo >= one {
        s.lo -= &one;
        s.hi -= &one;
    }
    while s.lo < Rat::zero() && s.hi <= Rat::zero() {
        s.lo += &one;
        s.hi += &one;
    }
    let mut out = Vec::new();
    if s.lo < Rat::zero() {
        out.push(Seg::new(s.lo + &one, one.clone(), s.closed_lo, true));
        out.push(Seg::new(Rat::zero(), s.hi.clone(), true, s.closed_hi));
    } else if s.hi > one {
        out.push(Seg::new(s.lo.clone(), one.clone(), s.closed_lo, true));
        out.push(Seg::new(Rat::zero(), s.hi - &one, true, s.closed_hi));
    } else {
        out.push(s);
    }
    out.into_iter().filter(|s| !s.is_empty()).collect()
}

/// Union over `a = 0..n` of open intervals of radius `r/n` around
/// `(a + y)/n`, as disjoint segments of `[0, 1]`. Requires `r < 1/2`.
fn ball_union(n: u64, y: &Rat, r: &Rat) -> Vec<Seg> {
    let nr = Rat::from_integer(BigInt::from(n));
    let mut out = Vec::new();
    for a in 0..n {
        let c = (Rat::from_integer(BigInt::from(a)) + y) / &nr;
        let lo = &c - r / &nr;
        let hi = &c + r / &nr;
        out.extend(wrap_unit(Seg::open(lo, hi)));
    }
    out
}

/// Union over `a = 0..n` of the ring `l <*> ||n x - y|| <*> u` (flags in
/// distance space), as disjoint segments of `[0, 1]`. Requires `u <= 1/2`.
fn ring_union(n: u64, y: &Rat, l: &Rat, u: &Rat, closed_lo: bool, closed_hi: bool) -> Vec<Seg> {
    if u < l || (u == l && !(closed_lo && closed_hi)) {
        return Vec::new();
    }
    let nr = Rat::from_integer(BigInt::from(n));
    let half = rat(1, 2);
    let mut out = Vec::new();
    for a in 0..n {
        let c = (Rat::from_integer(BigInt::from(a)) + y) / &nr;
        if l.is_zero() && closed_lo {
            // Plain ball piece around the centre.
            out.extend(wrap_unit(Seg::new(
                &c - u / &nr,
                &c + u / &nr,
                closed_hi,
                closed_hi,
            )));
        } else if u == &half && closed_hi {
            // Top ring collapses to one interval between the centres.
            out.extend(wrap_unit(Seg::new(
                &c + l / &nr,
                &c + (Rat::one() - l) / &nr,
                closed_lo,
                closed_lo,
            )));
        } else {
            // Two sides of the centre, flags mirrored on the lower side.
            out.extend(wrap_unit(Seg::new(
                &c + l / &nr,
                &c + u / &nr,
                closed_lo,
                closed_hi,
            )));
            out.extend(wrap_unit(Seg::new(
                &c + (Rat::one() - u) / &nr,
                &c + (Rat::one() - l) / &nr,
                closed_hi,
                closed_lo,
            )));
            if l.is_zero() {
                // Open-at-zero ring: the centre itself is excluded, which the
                // two sides already encode.
            }
        }
    }
    out
}

/// Exact Khinchin sums: row `n` holds the measure of the union of boxes of
/// radius `psi(n)/n` around the shifted lattice points, plus running totals.
pub fn khinchin_sum_mu(
    sys: &DigitSystem,
    psi: &Psi,
    y: &[f64],
    n_max: u64,
) -> Result<KhinchinRun, ApproxError> {
    psi.validate()?;
    if y.len() != sys.dim() {
        return Err(ApproxError::DimMismatch {
            dim: sys.dim(),
            got: y.len(),
        });
    }
    assert!(n_max >= 1);
    if psi.eval(n_max) >= 0.5 {
        return Err(ApproxError::PsiTooLarge);
    }
    let base = sys.base();
    let y_used = rationalize_y(y, base);

    let terms: Result<Vec<(u64, MeasureValue, bool)>, ApproxError> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let (r, clipped) = psi_term_rat(psi, n, base, Rounding::Nearest);
            if r.is_zero() {
                return Ok((n, MeasureValue::Exact(Rat::zero()), clipped));
            }
            let unions: Vec<Vec<Seg>> =
                y_used.iter().map(|yj| ball_union(n, yj, &r)).collect();
            let m = sys.measure_region(&unions)?;
            Ok((n, m, clipped))
        })
        .collect();
    let terms = terms?;

    let mut rows = Vec::with_capacity(terms.len());
    let mut clipped = Vec::new();
    let mut partial = MeasureValue::Exact(Rat::zero());
    for (n, term, was_clipped) in terms {
        if was_clipped {
            clipped.push(n);
        }
        partial = add_measure(partial, &term);
        rows.push(KhinchinRow {
            n,
            term,
            partial: partial.clone(),
        });
    }
    Ok(KhinchinRun {
        rows,
        clipped,
        y_used,
    })
}

fn add_measure(acc: MeasureValue, term: &MeasureValue) -> MeasureValue {
    match (&acc, term) {
        (MeasureValue::Exact(a), MeasureValue::Exact(b)) => MeasureValue::Exact(a + b),
        _ => MeasureValue::Bounds {
            lo: acc.lo() + term.lo(),
            hi: acc.hi() + term.hi(),
        },
    }
}

/// Reference Lebesgue sums `(2 psi(n))^k`, with the same clip below 1/2.
pub fn khinchin_sum_lebesgue(psi: &Psi, k: usize, n_max: u64) -> Vec<(u64, f64, f64)> {
    let mut out = Vec::with_capacity(n_max as usize);
    let mut partial = 0.0;
    for n in 1..=n_max {
        let v = psi.eval(n).clamp(0.0, PSI_CLIP);
        let term = (2.0 * v).powi(k as i32);
        partial += term;
        out.push((n, term, partial));
    }
    out
}

/// Radii of one shape in distance space at level `n`, with the deep
/// (non-dyadic) last side rounded directionally on the base-`b` grid.
fn shape_radii(
    shape: &[Rat],
    n: u64,
    base: u32,
    last_dir: Rounding,
) -> Vec<Rat> {
    let nr = Rat::from_integer(BigInt::from(n));
    let k = shape.len();
    let mut out = Vec::with_capacity(k);
    for (j, d) in shape.iter().enumerate() {
        let raw = &nr * d;
        if j + 1 == k {
            let f = rat_to_f64(&raw);
            if f > 0.6 {
                // Beyond the distance range; no rounding issues remain.
                out.push(raw);
            } else {
                out.push(round_b_adic(f, base, RATIONALIZE_BITS, last_dir).max(Rat::zero()));
            }
        } else {
            out.push(raw);
        }
    }
    out
}

/// Exact bracketing of the multiplicative sums: shells from below, covering
/// boxes from above. In dimension one both sequences coincide with the
/// simultaneous sums, which are exact there.
pub fn gallagher_sum_mu(
    sys: &DigitSystem,
    psi: &Psi,
    y: &[f64],
    n_max: u64,
) -> Result<GallagherRun, ApproxError> {
    psi.validate()?;
    if y.len() != sys.dim() {
        return Err(ApproxError::DimMismatch {
            dim: sys.dim(),
            got: y.len(),
        });
    }
    assert!(n_max >= 1);
    if psi.eval(n_max) >= 0.5 {
        return Err(ApproxError::PsiTooLarge);
    }
    let k = sys.dim();
    if k == 1 {
        let kh = khinchin_sum_mu(sys, psi, y, n_max)?;
        let rows = kh
            .rows
            .into_iter()
            .map(|r| GallagherRow {
                n: r.n,
                lower: r.term.clone(),
                upper: r.term.clone(),
                lower_partial: r.partial.clone(),
                upper_partial: r.partial,
            })
            .collect();
        return Ok(GallagherRun {
            rows,
            clipped: kh.clipped,
            y_used: kh.y_used,
        });
    }

    let base = sys.base();
    let y_used = rationalize_y(y, base);
    let m_of = |n: u64| 64 - n.leading_zeros(); // n in [2^(m-1), 2^m)
    let max_m = m_of(n_max);
    let mut families: Vec<Option<(RectFamily, RectFamily)>> = vec![None; max_m as usize + 1];
    for m in 1..=max_m {
        families[m as usize] = Some(dyadic_sandwich(psi, m, k, y)?);
    }

    let terms: Result<Vec<(u64, MeasureValue, MeasureValue, bool)>, ApproxError> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let m = m_of(n);
            let clipped = psi.eval(1u64 << (m - 1)) > PSI_CLIP;
            let (lower_fam, upper_fam) = families[m as usize].as_ref().unwrap();
            let mut caches: Option<Vec<RingCache>> = sys.factors().map(|fs| {
                fs.iter()
                    .zip(&y_used)
                    .map(|(f, yj)| RingCache::new(f, n, yj.clone()))
                    .collect()
            });
            let lower = gallagher_lower_term(sys, lower_fam, n, &y_used, &mut caches)?;
            let upper = if clipped {
                // psi is at least 1/2 somewhere in the block: the target set
                // may be everything, so only the trivial cover is rigorous.
                MeasureValue::Exact(Rat::one())
            } else {
                gallagher_upper_term(sys, upper_fam, n, &y_used, &mut caches)?
            };
            Ok((n, lower, upper, clipped))
        })
        .collect();
    let terms = terms?;

    let mut rows = Vec::with_capacity(terms.len());
    let mut clipped = Vec::new();
    let mut lower_partial = MeasureValue::Exact(Rat::zero());
    let mut upper_partial = MeasureValue::Exact(Rat::zero());
    for (n, lower, upper, was_clipped) in terms {
        if was_clipped {
            clipped.push(n);
        }
        lower_partial = add_measure(lower_partial, &lower);
        upper_partial = add_measure(upper_partial, &upper);
        rows.push(GallagherRow {
            n,
            lower,
            upper,
            lower_partial: lower_partial.clone(),
            upper_partial: upper_partial.clone(),
        });
    }
    Ok(GallagherRun {
        rows,
        clipped,
        y_used,
    })
}

/// Per-coordinate cache of exact ring measures: distances around the shifted
/// lattice reappear across shapes and cells, so each distinct ring is
/// evaluated once per level.
struct RingCache<'a> {
    factor: &'a DigitSystem,
    n: u64,
    y: Rat,
    map: std::collections::HashMap<(Rat, Rat, bool, bool), MeasureValue>,
}

impl<'a> RingCache<'a> {
    fn new(factor: &'a DigitSystem, n: u64, y: Rat) -> Self {
        RingCache {
            factor,
            n,
            y,
            map: std::collections::HashMap::new(),
        }
    }

    fn measure(
        &mut self,
        l: &Rat,
        u: &Rat,
        closed_lo: bool,
        closed_hi: bool,
    ) -> Result<MeasureValue, ApproxError> {
        let key = (l.clone(), u.clone(), closed_lo, closed_hi);
        if let Some(m) = self.map.get(&key) {
            return Ok(m.clone());
        }
        let segs = ring_union(self.n, &self.y, l, u, closed_lo, closed_hi);
        let m = if segs.is_empty() {
            MeasureValue::Exact(Rat::zero())
        } else {
            self.factor.measure_region(&[segs])?
        };
        self.map.insert(key, m.clone());
        Ok(m)
    }
}

fn mul_measure(a: MeasureValue, b: &MeasureValue) -> MeasureValue {
    match (&a, b) {
        (MeasureValue::Exact(x), MeasureValue::Exact(y)) => MeasureValue::Exact(x * y),
        _ => MeasureValue::Bounds {
            lo: a.lo() * b.lo(),
            hi: a.hi() * b.hi(),
        },
    }
}

/// Shell radii per coordinate for one shape, in distance space: the pair
/// `(inner, outer, outer_flag)` with the 1/2 cap applied; `None` marks an
/// empty coordinate.
fn shell_rings(
    shape: &[Rat],
    n: u64,
    base: u32,
) -> Option<Vec<(Rat, Rat, bool)>> {
    let half = rat(1, 2);
    let outer = shape_radii(shape, n, base, Rounding::Down);
    let mut rings = Vec::with_capacity(shape.len());
    for u in outer.iter() {
        let l = u / Rat::from_integer(BigInt::from(2));
        if l >= half {
            return None;
        }
        let u_eff = u.clone().min(half.clone());
        let closed_hi = u > &half; // capped top includes distance 1/2
        rings.push((l, u_eff, closed_hi));
    }
    Some(rings)
}

/// Sum of shell measures; the shells are pairwise disjoint across shapes.
fn gallagher_lower_term(
    sys: &DigitSystem,
    fam: &RectFamily,
    n: u64,
    y: &[Rat],
    caches: &mut Option<Vec<RingCache>>,
) -> Result<MeasureValue, ApproxError> {
    let mut total = MeasureValue::Exact(Rat::zero());
    for shape in &fam.shapes {
        let rings = match shell_rings(shape, n, sys.base()) {
            Some(r) => r,
            None => continue,
        };
        let term = match caches {
            Some(caches) => {
                let mut prod = MeasureValue::Exact(Rat::one());
                let mut zero = false;
                for (j, (l, u, ch)) in rings.iter().enumerate() {
                    let m = caches[j].measure(l, u, false, *ch)?;
                    if m.exact().map(|r| r.is_zero()).unwrap_or(false) {
                        zero = true;
                        break;
                    }
                    prod = mul_measure(prod, &m);
                }
                if zero {
                    continue;
                }
                prod
            }
            None => {
                let mut unions = Vec::with_capacity(rings.len());
                let mut empty = false;
                for (j, (l, u, ch)) in rings.iter().enumerate() {
                    let segs = ring_union(n, &y[j], l, u, false, *ch);
                    if segs.is_empty() {
                        empty = true;
                        break;
                    }
                    unions.push(segs);
                }
                if empty {
                    continue;
                }
                sys.measure_region(&unions)?
            }
        };
        total = add_measure(total, &term);
    }
    Ok(total)
}

/// Exact measure of the union of the covering boxes, via the grid of
/// distance-space cells cut by the shape radii.
fn gallagher_upper_term(
    sys: &DigitSystem,
    fam: &RectFamily,
    n: u64,
    y: &[Rat],
    caches: &mut Option<Vec<RingCache>>,
) -> Result<MeasureValue, ApproxError> {
    if fam.shapes.is_empty() {
        return Ok(MeasureValue::Exact(Rat::zero()));
    }
    let half = rat(1, 2);
    let k = sys.dim();
    // Effective per-coordinate radii per shape; None marks "covers all
    // distances" (radius above 1/2).
    let mut eff: Vec<Vec<Option<Rat>>> = Vec::with_capacity(fam.shapes.len());
    for shape in &fam.shapes {
        let radii = shape_radii(shape, n, sys.base(), Rounding::Up);
        eff.push(
            radii
                .into_iter()
                .map(|r| if r > half { None } else { Some(r) })
                .collect(),
        );
    }
    // Sorted distinct finite thresholds per coordinate.
    let mut thresholds: Vec<Vec<Rat>> = vec![Vec::new(); k];
    let mut has_all = vec![false; k];
    for radii in &eff {
        for (j, r) in radii.iter().enumerate() {
            match r {
                None => has_all[j] = true,
                Some(r) => {
                    if !thresholds[j].contains(r) {
                        thresholds[j].push(r.clone());
                    }
                }
            }
        }
    }
    for t in thresholds.iter_mut() {
        t.sort();
    }
    // Cells per coordinate: [0, t1), [t1, t2), .., plus [t_last, 1/2] when
    // some shape covers the whole range.
    struct Cell {
        lo: Rat,
        hi: Rat,
        closed_hi: bool,
    }
    let mut cells: Vec<Vec<Cell>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut col = Vec::new();
        let mut prev = Rat::zero();
        for t in &thresholds[j] {
            if t > &prev {
                col.push(Cell {
                    lo: prev.clone(),
                    hi: t.clone(),
                    closed_hi: false,
                });
            }
            prev = t.clone();
        }
        if has_all[j] && prev <= half {
            col.push(Cell {
                lo: prev,
                hi: half.clone(),
                closed_hi: true,
            });
        }
        if col.is_empty() {
            return Ok(MeasureValue::Exact(Rat::zero()));
        }
        cells.push(col);
    }

    let mut total = MeasureValue::Exact(Rat::zero());
    let mut idx = vec![0usize; k];
    loop {
        // Cell is covered iff some shape dominates it in every coordinate.
        let covered = eff.iter().any(|radii| {
            (0..k).all(|j| {
                let cell = &cells[j][idx[j]];
                match &radii[j] {
                    None => true,
                    Some(r) => !cell.closed_hi && &cell.hi <= r,
                }
            })
        });
        if covered {
            match caches {
                Some(caches) => {
                    let mut prod = MeasureValue::Exact(Rat::one());
                    let mut zero = false;
                    for j in 0..k {
                        let cell = &cells[j][idx[j]];
                        let m = caches[j].measure(&cell.lo, &cell.hi, true, cell.closed_hi)?;
                        if m.exact().map(|r| r.is_zero()).unwrap_or(false) {
                            zero = true;
                            break;
                        }
                        prod = mul_measure(prod, &m);
                    }
                    if !zero {
                        total = add_measure(total, &prod);
                    }
                }
                None => {
                    let mut unions = Vec::with_capacity(k);
                    let mut empty = false;
                    for j in 0..k {
                        let cell = &cells[j][idx[j]];
                        let segs =
                            ring_union(n, &y[j], &cell.lo, &cell.hi, true, cell.closed_hi);
                        if segs.is_empty() {
                            empty = true;
                            break;
                        }
                        unions.push(segs);
                    }
                    if !empty {
                        let m = sys.measure_region(&unions)?;
                        total = add_measure(total, &m);
                    }
                }
            }
        }
        let mut j = 0;
        loop {
            if j == k {
                return Ok(total);
            }
            idx[j] += 1;
            if idx[j] < cells[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DigitSystem;
    use crate::rat::rat_to_f64;

    fn cantor() -> DigitSystem {
        DigitSystem::cantor()
    }

    #[test]
    fn lebesgue_terms_are_interval_volumes() {
        // For the full digit set the term is (2 psi~(n))^k with psi~ the
        // rationalized clip; compare against the float closed form.
        for (sys, k) in [
            (DigitSystem::lebesgue(2, 1).unwrap(), 1usize),
            (DigitSystem::lebesgue(2, 2).unwrap(), 2usize),
        ] {
            let psi = Psi::PowerT { t: 1.0 };
            let run = khinchin_sum_mu(&sys, &psi, &vec![0.0; k], 12).unwrap();
            for row in &run.rows {
                let v = psi.eval(row.n).clamp(0.0, PSI_CLIP);
                let expect = (2.0 * v).powi(k as i32);
                let got = row.term.to_f64();
                assert!(
                    (got - expect).abs() < 1e-8,
                    "n={} got {got} want {expect}",
                    row.n
                );
                assert!(row.term.exact().is_some());
            }
        }
    }

    #[test]
    fn lebesgue_partial_sum_example() {
        // n = 1 clipped, then 1 and 2/3: total close to 8/3.
        let psi = Psi::PowerT { t: 1.0 };
        let rows = khinchin_sum_lebesgue(&psi, 1, 3);
        assert_eq!(rows.len(), 3);
        let total = rows[2].2;
        assert!((total - 8.0 / 3.0).abs() < 1e-8, "total {total}");
    }

    #[test]
    fn zero_psi_gives_zero_terms() {
        let psi = Psi::Constant { c: 0.0 };
        let run = khinchin_sum_mu(&cantor(), &psi, &[0.0], 16).unwrap();
        for row in &run.rows {
            assert_eq!(row.term.to_f64(), 0.0);
        }
        let rows = khinchin_sum_lebesgue(&psi, 1, 16);
        assert_eq!(rows[15].2, 0.0);
    }

    #[test]
    fn psi_too_large_is_rejected() {
        let psi = Psi::Constant { c: 0.6 };
        assert_eq!(
            khinchin_sum_mu(&cantor(), &psi, &[0.0], 8).unwrap_err(),
            ApproxError::PsiTooLarge
        );
        assert_eq!(
            gallagher_sum_mu(&cantor(), &psi, &[0.0], 8).unwrap_err(),
            ApproxError::PsiTooLarge
        );
    }

    #[test]
    fn khinchin_translation_invariance() {
        let psi = Psi::PowerT { t: 2.0 };
        let a = khinchin_sum_mu(&cantor(), &psi, &[0.3], 20).unwrap();
        let b = khinchin_sum_mu(&cantor(), &psi, &[1.3], 20).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.term.exact(), rb.term.exact(), "n={}", ra.n);
        }
    }

    #[test]
    fn khinchin_monotone_in_psi() {
        let small = Psi::PowerT { t: 2.0 };
        let large = Psi::PowerT { t: 1.5 };
        let a = khinchin_sum_mu(&cantor(), &small, &[0.0], 24).unwrap();
        let b = khinchin_sum_mu(&cantor(), &large, &[0.0], 24).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!(
                ra.term.to_f64() <= rb.term.to_f64() + 1e-12,
                "larger psi must not shrink the measure at n={}",
                ra.n
            );
        }
    }

    #[test]
    fn khinchin_matches_direct_box_sums() {
        // Spot check against the literal formula: sum over centres of the
        // box measure.
        use crate::measures::Rect;
        let sys = cantor();
        let psi = Psi::PowerT { t: 2.0 };
        let run = khinchin_sum_mu(&sys, &psi, &[0.0], 6).unwrap();
        for row in &run.rows {
            let n = row.n;
            let (r, _) = psi_term_rat(&psi, n, sys.base(), Rounding::Nearest);
            let mut total = Rat::zero();
            for a in 0..n {
                let c = rat(a as i64, n as i64);
                let lo = (&c - &r / Rat::from_integer(BigInt::from(n))).max(Rat::zero());
                let hi = (&c + &r / Rat::from_integer(BigInt::from(n))).min(Rat::one());
                let m = sys
                    .box_measure(&Rect::with_flags(
                        vec![lo],
                        vec![hi],
                        vec![false],
                        vec![false],
                    ))
                    .unwrap();
                total += m.exact().unwrap();
            }
            // centre 0 wraps to a piece near 1 as well
            if !r.is_zero() {
                let lo = Rat::one() - &r / Rat::from_integer(BigInt::from(n));
                let m = sys
                    .box_measure(&Rect::with_flags(
                        vec![lo],
                        vec![Rat::one()],
                        vec![false],
                        vec![true],
                    ))
                    .unwrap();
                total += m.exact().unwrap();
            }
            assert_eq!(&total, row.term.exact().unwrap(), "n={n}");
        }
    }

    #[test]
    fn gallagher_dim_one_equals_khinchin() {
        let psi = Psi::PowerT { t: 1.5 };
        let kh = khinchin_sum_mu(&cantor(), &psi, &[0.0], 32).unwrap();
        let ga = gallagher_sum_mu(&cantor(), &psi, &[0.0], 32).unwrap();
        for (k, g) in kh.rows.iter().zip(&ga.rows) {
            assert_eq!(k.term.exact(), g.lower.exact());
            assert_eq!(k.term.exact(), g.upper.exact());
        }
    }

    #[test]
    fn gallagher_lower_at_most_upper() {
        let psi = Psi::PowerT { t: 1.0 };
        let sys = DigitSystem::lebesgue(2, 2).unwrap();
        let run = gallagher_sum_mu(&sys, &psi, &[0.0, 0.0], 40).unwrap();
        for row in &run.rows {
            assert!(
                row.lower.lo() <= row.upper.hi(),
                "n={}: lower {} > upper {}",
                row.n,
                row.lower.to_f64(),
                row.upper.to_f64()
            );
        }
    }

    #[test]
    fn gallagher_brackets_lebesgue_closed_form() {
        // lambda(A_n^x) = 4 psi (1 + ln(1/(4 psi))) for psi < 1/4 in two
        // dimensions; each row must bracket it.
        let psi = Psi::PowerT { t: 1.0 };
        let sys = DigitSystem::lebesgue(2, 2).unwrap();
        let run = gallagher_sum_mu(&sys, &psi, &[0.0, 0.0], 48).unwrap();
        for row in &run.rows {
            if row.n < 8 {
                continue;
            }
            let p = psi.eval(row.n);
            let analytic = 4.0 * p * (1.0 + (1.0 / (4.0 * p)).ln());
            assert!(
                row.lower.to_f64() <= analytic + 1e-9,
                "n={} lower {} > analytic {analytic}",
                row.n,
                row.lower.to_f64()
            );
            assert!(
                row.upper.to_f64() >= analytic - 1e-9,
                "n={} upper {} < analytic {analytic}",
                row.n,
                row.upper.to_f64()
            );
        }
    }

    #[test]
    fn khinchin_cantor_term_against_monte_carlo() {
        use rand::SeedableRng;
        let sys = cantor();
        let psi = Psi::PowerT { t: 2.0 };
        let run = khinchin_sum_mu(&sys, &psi, &[0.0], 40).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let samples = 20_000usize;
        let points: Vec<f64> = (0..samples)
            .map(|_| sys.sample_with(40, &mut rng).coords_f64()[0])
            .collect();
        for &n in &[2u64, 5, 13, 34] {
            let p = psi.eval(n);
            let hits = points
                .iter()
                .filter(|&&x| super::super::dist_to_z(n as f64 * x) < p)
                .count();
            let freq = hits as f64 / samples as f64;
            let exact = run.rows[(n - 1) as usize].term.to_f64();
            let sigma = (exact * (1.0 - exact) / samples as f64).sqrt();
            assert!(
                (freq - exact).abs() <= 4.0 * sigma + 2e-3,
                "n={n}: mc {freq} vs exact {exact}"
            );
        }
    }
}
