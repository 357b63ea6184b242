//! Exact rational helpers shared across the crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number. All measure-side arithmetic runs on these.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

/// Exact conversion: every finite f64 is a dyadic rational.
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Extremely large numerator/denominator: fall back to a quotient of
        // leading digits.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Nearest,
    Down,
    Up,
}

/// Round `x` to the grid of multiples of `base^-s`, where `s` is the smallest
/// exponent with `base^s >= 2^bits`.
///
/// Measure computations rationalize float inputs this way: a base-`b`-adic
/// denominator is burnt off in the pre-period of the digit walk, so exact
/// evaluation stays fast. Directional rounding keeps one-sided constructions
/// (e.g. the multiplicative sandwich) rigorous for the un-rounded value.
pub fn round_b_adic(x: f64, base: u32, bits: u32, dir: Rounding) -> Rat {
    assert!(x.is_finite());
    let b = BigInt::from(base);
    let mut s = 0u32;
    let mut pow = BigInt::one();
    let target = BigInt::one() << bits;
    while pow < target {
        pow *= &b;
        s += 1;
    }
    let _ = s;
    let scaled = rat_from_f64(x) * Rat::from_integer(pow.clone());
    let floor = scaled.floor().to_integer();
    let frac = &scaled - Rat::from_integer(floor.clone());
    let num = match dir {
        Rounding::Down => floor,
        Rounding::Up => {
            if frac.is_zero() {
                floor
            } else {
                floor + 1
            }
        }
        Rounding::Nearest => {
            if frac >= rat(1, 2) {
                floor + 1
            } else {
                floor
            }
        }
    };
    Rat::new(num, pow)
}

/// Parse "p/q", an integer, or a plain decimal such as "0.25" (exactly).
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let num: BigInt = frac.parse().ok()?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = Rat::new(num, den);
        let whole = Rat::from_integer(int_part.abs());
        let v = whole + frac_part;
        return Some(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Rat::from_integer(n))
}

/// Reduce to [0, 1): subtract the floor.
pub fn frac_mod_one(r: &Rat) -> Rat {
    r - Rat::from_integer(r.floor().to_integer())
}

pub fn rat_from_u64(n: u64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_from_i64(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Numerator of `r` over the explicit denominator `den`; `None` if `den` is
/// not an exact common denominator or the result overflows i128.
pub fn scaled_numer(r: &Rat, den: i128) -> Option<i128> {
    let d = BigInt::from(den);
    let scaled = r * Rat::from_integer(d);
    if !scaled.is_integer() {
        return None;
    }
    scaled.to_integer().to_i128()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("2").unwrap(), rat(2, 1));
        assert_eq!(parse_rat("-0.5").unwrap(), rat(-1, 2));
        assert!(parse_rat("1/0").is_none());
        assert!(parse_rat("abc").is_none());
    }

    #[test]
    fn f64_conversion_is_exact() {
        let r = rat_from_f64(0.1);
        // 0.1 is not 1/10 in binary; conversion must reproduce the float bit
        // pattern, not the decimal.
        assert_ne!(r, rat(1, 10));
        assert_eq!(rat_to_f64(&r), 0.1);
    }

    #[test]
    fn b_adic_rounding_directions() {
        let x = 0.1;
        let down = round_b_adic(x, 3, 40, Rounding::Down);
        let up = round_b_adic(x, 3, 40, Rounding::Up);
        assert!(down <= rat_from_f64(x));
        assert!(up >= rat_from_f64(x));
        assert!((&up - &down) <= rat(1, 1 << 40));
    }

    #[test]
    fn frac_mod_one_examples() {
        assert_eq!(frac_mod_one(&rat(7, 3)), rat(1, 3));
        assert_eq!(frac_mod_one(&rat(-1, 3)), rat(2, 3));
        assert_eq!(frac_mod_one(&rat(2, 1)), rat(0, 1));
    }
}
