//! Approximation-function families.

use serde::{Deserialize, Serialize};

use super::ApproxError;

/// Named non-increasing approximation functions `psi(n)`.
///
/// `PowerT` is `n^-t`. `PowerLogSim` is `(n (log n)^2)^(-1/k)`, the
/// borderline family of the simultaneous divergence theory; `PowerLogMult`
/// is `(n (log n)^(k+1))^-1`, its multiplicative counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Psi {
    PowerT { t: f64 },
    PowerLogSim { k: u32 },
    PowerLogMult { k: u32 },
    Constant { c: f64 },
}

/// Clip applied at n = 1, where the power families leave [0, 1).
const N1_CLIP: f64 = 1.0 - 1e-9;

impl Psi {
    pub fn validate(&self) -> Result<(), ApproxError> {
        match self {
            Psi::PowerT { t } => {
                if !t.is_finite() || *t < 0.0 {
                    return Err(ApproxError::BadFamilyParams(format!(
                        "power_t needs t >= 0, got {t}"
                    )));
                }
            }
            Psi::PowerLogSim { k } | Psi::PowerLogMult { k } => {
                if *k == 0 {
                    return Err(ApproxError::BadFamilyParams(
                        "log families need k >= 1".into(),
                    ));
                }
            }
            Psi::Constant { c } => {
                if !c.is_finite() || !(0.0..1.0).contains(c) {
                    return Err(ApproxError::BadFamilyParams(format!(
                        "constant needs 0 <= c < 1, got {c}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn eval_raw(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            Psi::PowerT { t } => nf.powf(-t),
            Psi::PowerLogSim { k } => {
                let l = nf.ln();
                (nf * l * l).powf(-1.0 / *k as f64)
            }
            Psi::PowerLogMult { k } => (nf * nf.ln().powi(*k as i32 + 1)).recip(),
            Psi::Constant { c } => *c,
        }
    }

    /// psi(n); at n = 1 the value is clipped into [0, 1).
    pub fn eval(&self, n: u64) -> f64 {
        assert!(n >= 1);
        let v = self.eval_raw(n);
        if n == 1 {
            if v.is_finite() {
                v.min(N1_CLIP)
            } else {
                N1_CLIP
            }
        } else {
            v
        }
    }

    /// Least n >= 1 with a raw value inside [0, 1); the families are
    /// non-increasing from n = 2 on, so the scan is short.
    pub fn n0(&self) -> u64 {
        for n in 1..=1_000_000u64 {
            let v = self.eval_raw(n);
            if v.is_finite() && v < 1.0 {
                return n;
            }
        }
        u64::MAX
    }

    /// Parse "power_t:2", "power_log_sim:2", "power_log_mult:1",
    /// "constant:0.3".
    pub fn parse(s: &str) -> Result<Psi, ApproxError> {
        let bad = || ApproxError::BadFamilyParams(format!("cannot parse psi family '{s}'"));
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        let psi = match name.trim() {
            "power_t" => Psi::PowerT {
                t: arg.trim().parse().map_err(|_| bad())?,
            },
            "power_log_sim" => Psi::PowerLogSim {
                k: arg.trim().parse().map_err(|_| bad())?,
            },
            "power_log_mult" => Psi::PowerLogMult {
                k: arg.trim().parse().map_err(|_| bad())?,
            },
            "constant" => Psi::Constant {
                c: arg.trim().parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        psi.validate()?;
        Ok(psi)
    }

    pub fn label(&self) -> String {
        match self {
            Psi::PowerT { t } => format!("power_t:{t}"),
            Psi::PowerLogSim { k } => format!("power_log_sim:{k}"),
            Psi::PowerLogMult { k } => format!("power_log_mult:{k}"),
            Psi::Constant { c } => format!("constant:{c}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_t_values() {
        let psi = Psi::PowerT { t: 2.0 };
        assert_eq!(psi.eval(10), 0.01);
        assert!(psi.eval(1) < 1.0);
    }

    #[test]
    fn log_sim_example() {
        // (8 (log 8)^2)^-1 with k = 1.
        let psi = Psi::PowerLogSim { k: 1 };
        let v = psi.eval(8);
        assert!((v - 0.0289).abs() < 5e-4, "got {v}");
    }

    #[test]
    fn constant_family() {
        let psi = Psi::Constant { c: 0.3 };
        assert_eq!(psi.eval(2), 0.3);
        assert_eq!(psi.eval(999), 0.3);
        assert!(Psi::Constant { c: 1.0 }.validate().is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["power_t:2", "power_log_sim:2", "power_log_mult:1", "constant:0.25"] {
            let p = Psi::parse(s).unwrap();
            assert_eq!(Psi::parse(&p.label()).unwrap(), p);
        }
        assert!(Psi::parse("power_t:-1").is_err());
        assert!(Psi::parse("nope:1").is_err());
    }

    #[test]
    fn non_increasing_from_two() {
        for psi in [
            Psi::PowerT { t: 1.5 },
            Psi::PowerLogSim { k: 2 },
            Psi::PowerLogMult { k: 2 },
        ] {
            let mut prev = psi.eval(2);
            for n in 3..200 {
                let v = psi.eval(n);
                assert!(v <= prev + 1e-15, "{psi:?} increases at {n}");
                prev = v;
            }
        }
    }
}
