//! The dyadic rectangle sandwich for the multiplicative target set.
//!
//! For `n` in the dyadic block `[2^(m-1), 2^m)`, the set where the product of
//! distances `||n x_j - y_j||` stays below `psi(n)` is squeezed between a
//! disjoint family of shells and a covering family of boxes. The first `k-1`
//! side lengths run over the dyadic grid `h_i = 2^-i`; the last side is fixed
//! by the level's mass, with the box family widened by `2^(k-1)`.
//!
//! The cut levels are rounded directionally (the shell mass down, the box
//! mass up), so both inclusions hold rigorously for the un-rounded psi.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{ApproxError, Psi};
use crate::rat::{rat_to_f64, round_b_adic, Rat, Rounding};

/// Dyadic precision of the rounded cut levels. Kept moderate so the
/// downstream exact walks stay fast for every base.
pub(crate) const SANDWICH_BITS: u32 = 16;
/// Measure-sum clip: psi values are capped strictly below 1/2.
pub(crate) const PSI_CLIP: f64 = 0.5 - 1e-9;

/// A family of rectangle shapes at dyadic level `m`: side-length vectors
/// `(d_1, .., d_k)`. Interpreted as shells (lower family) or boxes (upper
/// family) around the shifted lattice points `(a + y) / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectFamily {
    pub m: u32,
    pub shapes: Vec<Vec<Rat>>,
}

/// Lower (shell) and upper (box) families at level `m` in dimension `k`.
///
/// The shift `y` does not influence the shapes; it is accepted to mirror the
/// set construction, which is centred at `(a + y) / n`.
pub fn dyadic_sandwich(
    psi: &Psi,
    m: u32,
    k: usize,
    _y: &[f64],
) -> Result<(RectFamily, RectFamily), ApproxError> {
    psi.validate()?;
    assert!(m >= 1 && k >= 1);
    let lo_mass = round_b_adic(
        psi.eval(1u64 << m).clamp(0.0, PSI_CLIP),
        2,
        SANDWICH_BITS,
        Rounding::Down,
    )
    .max(Rat::zero());
    let hi_mass = round_b_adic(
        psi.eval(1u64 << (m - 1)).clamp(0.0, PSI_CLIP),
        2,
        SANDWICH_BITS,
        Rounding::Up,
    )
    .max(Rat::zero());

    if hi_mass.is_zero() {
        return Ok((
            RectFamily {
                m,
                shapes: Vec::new(),
            },
            RectFamily {
                m,
                shapes: Vec::new(),
            },
        ));
    }

    // Dyadic side range: psi(2^(m-1)) / 2^(m-1) <= h_i <= 2^-(m-1).
    let i_min = m as i64 - 1;
    let h_floor = &hi_mass / pow2(m as i64 - 1);
    let mut i_max = i_min;
    while pow2(-(i_max + 1)) >= h_floor {
        i_max += 1;
        if i_max - i_min > 200 {
            break;
        }
    }

    let mut lower_shapes = Vec::new();
    let mut upper_shapes = Vec::new();
    let tuple_len = k - 1;
    let mut tuple = vec![i_min; tuple_len];
    loop {
        let prod: Rat = tuple.iter().map(|&i| pow2(-i)).product();
        let h_last = &lo_mass / (pow2(k as i64 * m as i64) * &prod);
        let big_h = &hi_mass / (pow2(k as i64 * (m as i64 - 1)) * &prod);
        let mut lo_shape: Vec<Rat> = tuple.iter().map(|&i| pow2(-i)).collect();
        lo_shape.push(h_last);
        let mut up_shape: Vec<Rat> = tuple.iter().map(|&i| pow2(-i)).collect();
        up_shape.push(pow2(k as i64 - 1) * big_h);
        if !lo_mass.is_zero() {
            lower_shapes.push(lo_shape);
        }
        upper_shapes.push(up_shape);

        // Advance the tuple through [i_min, i_max]^(k-1).
        let mut j = 0;
        loop {
            if j == tuple_len {
                return Ok((
                    RectFamily {
                        m,
                        shapes: lower_shapes,
                    },
                    RectFamily {
                        m,
                        shapes: upper_shapes,
                    },
                ));
            }
            tuple[j] += 1;
            if tuple[j] <= i_max {
                break;
            }
            tuple[j] = i_min;
            j += 1;
        }
    }
}

fn pow2(e: i64) -> Rat {
    if e >= 0 {
        Rat::from_integer(BigInt::one() << e as u64)
    } else {
        Rat::new(BigInt::one(), BigInt::one() << (-e) as u64)
    }
}

/// Pointwise indicator of the multiplicative target set at level `n`.
pub fn indicator_mult(psi: &Psi, n: u64, y: &[f64], x: &[f64]) -> bool {
    let prod: f64 = x
        .iter()
        .zip(y)
        .map(|(xj, yj)| super::dist_to_z(n as f64 * xj - yj))
        .product();
    prod < psi.eval(n)
}

/// Indicator of the shell family: some shape has
/// `n d_j / 2 < ||n x_j - y_j|| < n d_j` in every coordinate.
pub fn indicator_lower_family(fam: &RectFamily, n: u64, y: &[f64], x: &[f64]) -> bool {
    fam.shapes.iter().any(|shape| {
        shape.iter().enumerate().all(|(j, d)| {
            let nd = n as f64 * rat_to_f64(d);
            let t = super::dist_to_z(n as f64 * x[j] - y[j]);
            nd / 2.0 < t && t < nd
        })
    })
}

/// Indicator of the box family: some shape has `||n x_j - y_j|| < n d_j` in
/// every coordinate.
pub fn indicator_upper_family(fam: &RectFamily, n: u64, y: &[f64], x: &[f64]) -> bool {
    fam.shapes.iter().any(|shape| {
        shape.iter().enumerate().all(|(j, d)| {
            let nd = n as f64 * rat_to_f64(d);
            let t = super::dist_to_z(n as f64 * x[j] - y[j]);
            t < nd
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_families_are_single_shapes() {
        let psi = Psi::PowerT { t: 1.0 };
        let (lo, hi) = dyadic_sandwich(&psi, 5, 1, &[0.0]).unwrap();
        assert_eq!(lo.shapes.len(), 1);
        assert_eq!(hi.shapes.len(), 1);
        // Shell side: psi(2^m) / 2^m, box side: psi(2^(m-1)) / 2^(m-1),
        // both up to the directional dyadic rounding.
        let shell = rat_to_f64(&lo.shapes[0][0]);
        let boxside = rat_to_f64(&hi.shapes[0][0]);
        assert!((shell - (1.0 / 32.0) / 32.0).abs() < 1e-4);
        assert!((boxside - (1.0 / 16.0) / 16.0).abs() < 1e-4);
        assert!(shell <= boxside);
    }

    #[test]
    fn lower_products_are_constant() {
        let psi = Psi::PowerT { t: 1.0 };
        let (lo, _) = dyadic_sandwich(&psi, 6, 2, &[0.0, 0.0]).unwrap();
        assert!(!lo.shapes.is_empty());
        let first: Rat = lo.shapes[0].iter().product();
        for shape in &lo.shapes {
            let p: Rat = shape.iter().product();
            assert_eq!(p, first, "lower family side products must agree");
        }
        // The common product is the rounded psi(2^m) / 2^(km).
        let expected = round_b_adic(
            psi.eval(64).clamp(0.0, PSI_CLIP),
            2,
            SANDWICH_BITS,
            Rounding::Down,
        ) / pow2(12);
        assert_eq!(first, expected);
    }

    #[test]
    fn zero_psi_gives_empty_families() {
        let psi = Psi::Constant { c: 0.0 };
        let (lo, hi) = dyadic_sandwich(&psi, 4, 2, &[0.0, 0.0]).unwrap();
        assert!(lo.shapes.is_empty());
        assert!(hi.shapes.is_empty());
    }

    #[test]
    fn shape_count_grows_with_dimension() {
        let psi = Psi::PowerT { t: 1.0 };
        let (_, hi1) = dyadic_sandwich(&psi, 6, 1, &[0.0]).unwrap();
        let (_, hi2) = dyadic_sandwich(&psi, 6, 2, &[0.0, 0.0]).unwrap();
        assert_eq!(hi1.shapes.len(), 1);
        assert!(hi2.shapes.len() > 1);
    }

    #[test]
    fn rounding_is_directional() {
        let psi = Psi::PowerT { t: 1.0 };
        let (lo, hi) = dyadic_sandwich(&psi, 6, 1, &[0.0]).unwrap();
        let true_lo = psi.eval(64) / 64.0f64;
        let true_hi = psi.eval(32) / 32.0f64;
        assert!(rat_to_f64(&lo.shapes[0][0]) <= true_lo + 1e-12);
        assert!(rat_to_f64(&hi.shapes[0][0]) >= true_hi - 1e-12);
    }
}
