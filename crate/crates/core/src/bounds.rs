//! Closed-form bounds for the swap-or-not shuffle, evaluated exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::perm::falling_factorial;
use crate::prob::{format_rational, Rational};
use crate::report::ser_rational;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, Value>,
    #[serde(serialize_with = "ser_rational")]
    pub value: Rational,
    /// Lower bounds ≤ 0 and probability upper bounds ≥ 1 say nothing.
    pub vacuous: bool,
}

impl BoundReport {
    fn lower(name: &str, inputs: &[(&str, Value)], value: Rational) -> Self {
        let vacuous = !value.is_positive();
        Self::build(name, inputs, value, vacuous)
    }

    fn upper(name: &str, inputs: &[(&str, Value)], value: Rational) -> Self {
        let vacuous = value >= Rational::one();
        Self::build(name, inputs, value, vacuous)
    }

    fn build(name: &str, inputs: &[(&str, Value)], value: Rational, vacuous: bool) -> Self {
        BoundReport {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            value,
            vacuous,
        }
    }

    pub fn value_f64(&self) -> f64 {
        crate::prob::rational_to_f64(&self.value)
    }
}

impl std::fmt::Display for BoundReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = {}", self.name, format_rational(&self.value))?;
        if self.vacuous {
            write!(f, " (vacuous)")?;
        }
        Ok(())
    }
}

fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

fn int(v: u64) -> Rational {
    Rational::from(BigInt::from(v))
}

fn check_d(d: u32) -> Result<()> {
    if !(2..=31).contains(&d) {
        return Err(Error::InvalidParams(format!("needs 2 <= d <= 31, got d = {d}")));
    }
    Ok(())
}

fn check_r(d: u32, r: usize) -> Result<()> {
    if r < d as usize {
        return Err(Error::InvalidParams(format!("needs r >= d, got r = {r} < d = {d}")));
    }
    Ok(())
}

fn dr_inputs(d: u32, r: usize) -> Vec<(&'static str, Value)> {
    vec![("d", d.into()), ("r", r.into())]
}

/// `1 - 2^(d-r)`.
pub fn bound_span(d: u32, r: usize) -> Result<BoundReport> {
    check_r(d, r)?;
    let v = Rational::one() - pow2(i64::from(d) - r as i64);
    Ok(BoundReport::lower("span", &dr_inputs(d, r), v))
}

fn pair_bound(name: &str, lead: u64, d: u32, r: usize) -> Result<BoundReport> {
    check_d(d)?;
    check_r(d, r)?;
    let n = 1u64 << d;
    let num = int(lead) + int(48) * pow2(i64::from(d) - r as i64);
    let v = num / int(2 * (n - 1) * (n - 2));
    Ok(BoundReport::upper(name, &dr_inputs(d, r), v))
}

/// `(7 + 48·2^(d-r)) / (2(N-1)(N-2))`.
pub fn bound_collision(d: u32, r: usize) -> Result<BoundReport> {
    pair_bound("collision", 7, d, r)
}

/// `(9 + 48·2^(d-r)) / (2(N-1)(N-2))`.
pub fn bound_w_pair(d: u32, r: usize) -> Result<BoundReport> {
    pair_bound("w_pair", 9, d, r)
}

fn joint_term(d: u32, r: usize, q: usize) -> Rational {
    let n = 1u64 << d;
    let qq = q as u64;
    int(r as u64 * qq * qq.saturating_sub(1)) * (int(9) + int(48) * pow2(i64::from(d) - r as i64)) / int(4 * (n - 2))
}

/// `r q(q-1)(9 + 48·2^(d-r)) / (4(N-2) N^q)`.
pub fn bound_w_joint(d: u32, r: usize, q: usize) -> Result<BoundReport> {
    check_d(d)?;
    if q == 0 {
        return Err(Error::InvalidParams("needs q >= 1".into()));
    }
    let v = joint_term(d, r, q) / pow2(i64::from(d) * q as i64);
    let inputs = [("d", d.into()), ("r", r.into()), ("q", q.into())];
    Ok(BoundReport::upper("w_joint", &inputs, v))
}

/// Lower bound on every `P(xs → ys)` for distinct tuples:
/// `(1/(N)_q)(1 - q²/N - 2^(d-r) - r q(q-1)(9 + 48·2^(d-r))/(4(N-2)))`.
/// Evaluated on all inputs; a non-positive value is flagged vacuous.
pub fn bound_thm22_lower(d: u32, r: usize, q: usize) -> Result<BoundReport> {
    check_d(d)?;
    check_r(d, r)?;
    let n = 1u64 << d;
    if q == 0 || q as u64 > n {
        return Err(Error::TooManyQueries { q, n: n as usize });
    }
    let qq = q as u64;
    let inner = Rational::one() - int(qq * qq) / int(n) - pow2(i64::from(d) - r as i64) - joint_term(d, r, q);
    let v = inner / Rational::from(falling_factorial(n, qq));
    let inputs = [("d", d.into()), ("r", r.into()), ("q", q.into())];
    Ok(BoundReport::lower("thm22_lower", &inputs, v))
}

fn check_eps(eps: &Rational) -> Result<()> {
    if !eps.is_positive() || *eps >= Rational::one() {
        return Err(Error::InvalidParams(format!("eps = {} must lie in (0, 1)", format_rational(eps))));
    }
    Ok(())
}

/// `13/4·ε + 12ε²`.
pub fn bound_thm23_cca(eps: &Rational) -> Result<BoundReport> {
    check_eps(eps)?;
    let v = Rational::new(13.into(), 4.into()) * eps + Rational::from(BigInt::from(12)) * eps * eps;
    Ok(BoundReport::upper("thm23_cca", &[("eps", format_rational(eps).into())], v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Thm23Params {
    pub r_min: usize,
    pub q_max: u64,
}

/// `r_min = ⌈d - log2 ε⌉`, `q_max = ⌊√(ε(N-2)/r_min)⌋`, both computed exactly.
pub fn thm23_params(d: u32, eps: &Rational) -> Result<Thm23Params> {
    check_eps(eps)?;
    check_d(d)?;
    // smallest k with 2^k ≥ 1/ε
    let mut k = 0usize;
    while pow2(k as i64) * eps < Rational::one() {
        k += 1;
    }
    let r_min = d as usize + k;
    let cap = eps * int((1u64 << d) - 2) / int(r_min as u64);
    let mut q_max = 0u64;
    while int((q_max + 1) * (q_max + 1)) <= cap {
        q_max += 1;
    }
    Ok(Thm23Params { r_min, q_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ratio;
    use num_traits::Zero;

    #[test]
    fn span_examples() {
        assert!(bound_span(4, 4).unwrap().value.is_zero());
        assert!(bound_span(4, 4).unwrap().vacuous);
        assert_eq!(bound_span(3, 6).unwrap().value, ratio(7, 8));
        assert!(bound_span(4, 3).is_err());
    }

    #[test]
    fn pair_examples() {
        assert_eq!(bound_collision(4, 4).unwrap().value, ratio(55, 420));
        assert_eq!(bound_w_pair(4, 4).unwrap().value, ratio(57, 420));
        assert_eq!(bound_collision(4, 8).unwrap().value, ratio(10, 420));
        let expected = (ratio(9, 1) + ratio(48, 1024)) / ratio(2 * 31 * 30, 1);
        assert_eq!(bound_w_pair(5, 15).unwrap().value, expected);
        assert!(bound_collision(1, 4).is_err());
        let mut prev = bound_collision(4, 4).unwrap().value;
        for r in 5..30 {
            let v = bound_collision(4, r).unwrap().value;
            assert!(v < prev && v > ratio(7, 420));
            prev = v;
        }
        for d in 2..8 {
            for r in d as usize..d as usize + 6 {
                let n = 1i64 << d;
                let diff = bound_w_pair(d, r).unwrap().value - bound_collision(d, r).unwrap().value;
                assert_eq!(diff, ratio(2, 2 * (n - 1) * (n - 2)));
            }
        }
    }

    #[test]
    fn joint_examples() {
        assert!(bound_w_joint(4, 8, 1).unwrap().value.is_zero());
        assert_eq!(bound_w_joint(4, 8, 2).unwrap().value, ratio(16 * 12, 14336));
        assert!(bound_w_joint(1, 8, 2).is_err());
        for d in 2..8u32 {
            for r in d as usize..d as usize + 16 {
                assert!(bound_w_joint(d, r, 2).unwrap().value > bound_w_joint(d, r, 1).unwrap().value);
                for q in 1..5 {
                    let v = bound_w_joint(d, r, q).unwrap().value;
                    // r(9 + 48·2^(d-r)) only increases once r >= d + 5
                    if r >= d as usize + 5 {
                        assert!(bound_w_joint(d, r + 1, q).unwrap().value >= v);
                    }
                }
            }
        }
        assert!(bound_w_joint(4, 5, 2).unwrap().value < bound_w_joint(4, 4, 2).unwrap().value);
        // the N^q denominator wins for q >= 2
        assert!(bound_w_joint(2, 4, 3).unwrap().value < bound_w_joint(2, 4, 2).unwrap().value);
    }

    #[test]
    fn thm22_examples() {
        let b = bound_thm22_lower(2, 4, 2).unwrap();
        assert!(b.value.is_negative() && b.vacuous);
        let b = bound_thm22_lower(8, 18, 2).unwrap();
        assert!(!b.vacuous);
        let scaled = b.value_f64() * 256.0 * 255.0;
        assert!((scaled - 0.6628).abs() < 1e-3, "{scaled}");
        let b = bound_thm22_lower(10, 20, 4).unwrap();
        let scaled = b.value_f64() * 1024.0 * 1023.0 * 1022.0 * 1021.0;
        assert!((scaled - 0.4523).abs() < 1e-3, "{scaled}");
    }

    #[test]
    fn thm23_examples() {
        assert_eq!(bound_thm23_cca(&ratio(1, 16)).unwrap().value, ratio(1, 4));
        let b = bound_thm23_cca(&ratio(1, 4)).unwrap();
        assert_eq!(b.value, ratio(25, 16));
        assert!(b.vacuous);
        assert!(bound_thm23_cca(&ratio(0, 1)).is_err());
        assert!(bound_thm23_cca(&ratio(1, 1)).is_err());
        assert!(bound_thm23_cca(&ratio(1, 1000)).unwrap().value < bound_thm23_cca(&ratio(1, 999)).unwrap().value);

        assert_eq!(thm23_params(8, &ratio(1, 16)).unwrap(), Thm23Params { r_min: 12, q_max: 1 });
        assert_eq!(thm23_params(20, &ratio(1, 16)).unwrap(), Thm23Params { r_min: 24, q_max: 52 });
        assert_eq!(thm23_params(2, &ratio(1, 2)).unwrap().r_min, 3);
        // non-power-of-two eps rounds r up
        assert_eq!(thm23_params(4, &ratio(1, 10)).unwrap().r_min, 8);
    }

    #[test]
    fn report_json() {
        let s = serde_json::to_string(&bound_collision(4, 4).unwrap()).unwrap();
        assert_eq!(s, r#"{"name":"collision","inputs":{"d":4,"r":4},"value":"11/84","vacuous":false}"#);
    }
}
