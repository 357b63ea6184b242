//! Shared pieces of the command-line front end: system loading, experiment
//! configs, the delta grammar, and the CSV/JSON emitters. The binary in
//! `main.rs` is a thin dispatcher over these.

pub mod config;
pub mod emit;
pub mod sysload;

use digitfrac::rat::{parse_rat, round_b_adic, Rat, Rounding};
use num_traits::Signed;

/// Parse a neighborhood width: a literal rational ("0", "1/7", "0.25") or a
/// power form "Q^-e" / "c*Q^-e" evaluated at the given height bound and
/// rationalized on the dyadic grid 2^-20.
pub fn parse_delta(s: &str, q_max: u64) -> Result<Rat, String> {
    let s = s.trim();
    if let Some(pos) = s.find("Q^") {
        let (c_part, e_part) = (&s[..pos], &s[pos + 2..]);
        let c = if c_part.is_empty() {
            1.0
        } else {
            let c_str = c_part.strip_suffix('*').unwrap_or(c_part);
            let r = parse_rat(c_str).ok_or_else(|| format!("bad coefficient '{c_str}'"))?;
            digitfrac::rat::rat_to_f64(&r)
        };
        let e: f64 = e_part
            .trim()
            .parse()
            .map_err(|_| format!("bad exponent '{e_part}'"))?;
        let value = c * (q_max as f64).powf(e);
        if !value.is_finite() || value < 0.0 {
            return Err(format!("delta '{s}' evaluates to {value}"));
        }
        return Ok(round_b_adic(value, 2, 20, Rounding::Nearest));
    }
    let r = parse_rat(s).ok_or_else(|| format!("cannot parse delta '{s}'"))?;
    if r.is_negative() {
        return Err("delta must be non-negative".into());
    }
    Ok(r)
}

/// Comma-separated list of typed values.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| format!("cannot parse '{p}'"))
        })
        .collect()
}

/// Comma-separated rationals.
pub fn parse_rat_list(s: &str) -> Result<Vec<Rat>, String> {
    s.split(',')
        .map(|p| parse_rat(p).ok_or_else(|| format!("cannot parse rational '{p}'")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use digitfrac::rat::{rat, rat_to_f64};

    #[test]
    fn delta_literal_forms() {
        assert_eq!(parse_delta("0", 100).unwrap(), rat(0, 1));
        assert_eq!(parse_delta("1/7", 100).unwrap(), rat(1, 7));
        assert_eq!(parse_delta("0.25", 100).unwrap(), rat(1, 4));
        assert!(parse_delta("-1/2", 100).is_err());
    }

    #[test]
    fn delta_power_forms() {
        let d = parse_delta("Q^-0.5", 100).unwrap();
        assert!((rat_to_f64(&d) - 0.1).abs() < 1e-5);
        let d2 = parse_delta("2*Q^-1", 100).unwrap();
        assert!((rat_to_f64(&d2) - 0.02).abs() < 1e-5);
        assert!(parse_delta("Q^x", 100).is_err());
    }
}
