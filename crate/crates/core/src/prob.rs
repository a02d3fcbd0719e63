//! Exact finite probability distributions and the two distances everything
//! else is built on: total variation and separation.
//!
//! All arithmetic is over arbitrary-precision rationals; nothing in this
//! module ever rounds.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// Builds `num/den` as an exact rational. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"num/den"` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
    let den = BigInt::from_str(den).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("{s:?}: zero denominator")));
    }
    Ok(Rational::new(num, den))
}

/// Formats a rational as `"num/den"` (always with a denominator).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Lossy conversion for reporting.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// An exact rational in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Probability(Rational);

impl Probability {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() || value > Rational::one() {
            return Err(Error::NotAProbability(format_rational(&value)));
        }
        Ok(Probability(value))
    }

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::NotAProbability(format!("{num}/0")));
        }
        Self::new(Rational::new(num.into(), den.into()))
    }

    pub fn zero() -> Self {
        Probability(Rational::zero())
    }

    pub fn one() -> Self {
        Probability(Rational::one())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.0)
    }

    /// `1 - p`.
    pub fn complement(&self) -> Self {
        Probability(Rational::one() - &self.0)
    }
}

impl Mul for Probability {
    type Output = Probability;
    fn mul(self, rhs: Probability) -> Probability {
        Probability(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Probability> for &'a Probability {
    type Output = Probability;
    fn mul(self, rhs: &'a Probability) -> Probability {
        Probability(&self.0 * &rhs.0)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rational(&self.0))
    }
}

impl Serialize for Probability {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let r = parse_rational(&s).map_err(serde::de::Error::custom)?;
        Probability::new(r).map_err(serde::de::Error::custom)
    }
}

/// Outcomes carry an arity so that distributions over incompatible spaces
/// (say, 2-tuples against 3-tuples) are rejected instead of silently compared.
pub trait Outcome: Ord + Clone {
    fn arity(&self) -> usize {
        1
    }
}

impl Outcome for usize {}
impl Outcome for u32 {}
impl Outcome for u64 {}
impl Outcome for String {}
impl Outcome for &str {}

impl<T: Ord + Clone> Outcome for Vec<T> {
    fn arity(&self) -> usize {
        self.len()
    }
}

/// Exact distribution over a finite set of outcomes.
///
/// Zero-weight outcomes may be stored; equality compares the pruned forms.
#[derive(Clone, Debug)]
pub struct Dist<K: Outcome> {
    weights: BTreeMap<K, Rational>,
}

impl<K: Outcome> Dist<K> {
    /// Accumulates repeated outcomes and checks that the weights are
    /// non-negative and sum to exactly one.
    pub fn new<I: IntoIterator<Item = (K, Rational)>>(entries: I) -> Result<Self> {
        let mut weights: BTreeMap<K, Rational> = BTreeMap::new();
        for (k, w) in entries {
            if w.is_negative() {
                return Err(Error::NotAProbability(format_rational(&w)));
            }
            *weights.entry(k).or_insert_with(Rational::zero) += w;
        }
        let total: Rational = weights.values().sum();
        if !total.is_one() {
            return Err(Error::NotNormalized(format_rational(&total)));
        }
        let d = Dist { weights };
        d.check_arity()?;
        Ok(d)
    }

    pub fn point_mass(k: K) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(k, Rational::one());
        Dist { weights }
    }

    pub fn uniform<I: IntoIterator<Item = K>>(outcomes: I) -> Result<Self> {
        let items: Vec<K> = outcomes.into_iter().collect();
        if items.is_empty() {
            return Err(Error::InvalidParams("uniform over an empty set".into()));
        }
        let w = Rational::new(BigInt::one(), BigInt::from(items.len()));
        Self::new(items.into_iter().map(|k| (k, w.clone())))
    }

    fn check_arity(&self) -> Result<()> {
        let mut arities = self.weights.keys().map(Outcome::arity);
        if let Some(first) = arities.next() {
            if arities.any(|a| a != first) {
                return Err(Error::MismatchedOutcomes("mixed outcome arities".into()));
            }
        }
        Ok(())
    }

    fn arity(&self) -> Option<usize> {
        self.weights.keys().next().map(Outcome::arity)
    }

    /// Weight of `k` (zero when absent).
    pub fn prob(&self, k: &K) -> Rational {
        self.weights.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    /// Outcomes with positive weight, in order.
    pub fn support(&self) -> impl Iterator<Item = (&K, &Rational)> {
        self.weights.iter().filter(|(_, w)| !w.is_zero())
    }

    /// All stored outcomes, including zero-weight ones.
    pub fn outcomes(&self) -> impl Iterator<Item = &K> {
        self.weights.keys()
    }

    /// Drops zero-weight outcomes.
    pub fn normalized(&self) -> Self {
        Dist {
            weights: self
                .weights
                .iter()
                .filter(|(_, w)| !w.is_zero())
                .map(|(k, w)| (k.clone(), w.clone()))
                .collect(),
        }
    }

    /// Pushforward under `f`.
    pub fn map<L: Outcome, F: Fn(&K) -> L>(&self, f: F) -> Dist<L> {
        let mut weights: BTreeMap<L, Rational> = BTreeMap::new();
        for (k, w) in self.support() {
            *weights.entry(f(k)).or_insert_with(Rational::zero) += w;
        }
        Dist { weights }
    }

    pub(crate) fn from_weights_unchecked(weights: BTreeMap<K, Rational>) -> Self {
        Dist { weights }
    }
}

impl<K: Outcome> PartialEq for Dist<K> {
    fn eq(&self, other: &Self) -> bool {
        self.support().eq(other.support())
    }
}

impl<K: Outcome> Eq for Dist<K> {}

fn check_same_space<K: Outcome>(p: &Dist<K>, q: &Dist<K>) -> Result<()> {
    match (p.arity(), q.arity()) {
        (Some(a), Some(b)) if a != b => Err(Error::MismatchedOutcomes(format!(
            "outcome arity {a} vs {b}"
        ))),
        _ => Ok(()),
    }
}

fn union_keys<'a, K: Outcome>(p: &'a Dist<K>, q: &'a Dist<K>) -> Vec<&'a K> {
    let mut keys: Vec<&K> = p.outcomes().chain(q.outcomes()).collect();
    keys.sort();
    keys.dedup();
    keys
}

/// Total variation distance `Σ (p(a) - q(a))⁺`.
pub fn tv_distance<K: Outcome>(p: &Dist<K>, q: &Dist<K>) -> Result<Probability> {
    check_same_space(p, q)?;
    let mut total = Rational::zero();
    for k in union_keys(p, q) {
        let diff = p.prob(k) - q.prob(k);
        if diff.is_positive() {
            total += diff;
        }
    }
    Probability::new(total)
}

/// Separation distance from `p` to `q`: `max_a (1 - p(a)/q(a))`, where an
/// outcome with `q(a) = 0` contributes 0 (the `x/0 := 1` convention).
pub fn sep_distance<K: Outcome>(p: &Dist<K>, q: &Dist<K>) -> Result<Probability> {
    check_same_space(p, q)?;
    let mut best = Rational::zero();
    for k in union_keys(p, q) {
        let qa = q.prob(k);
        if qa.is_zero() {
            continue;
        }
        let term = Rational::one() - p.prob(k) / qa;
        if term > best {
            best = term;
        }
    }
    Probability::new(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Tv,
    Sep,
}

impl Metric {
    pub fn eval<K: Outcome>(self, p: &Dist<K>, q: &Dist<K>) -> Result<Probability> {
        match self {
            Metric::Tv => tv_distance(p, q),
            Metric::Sep => sep_distance(p, q),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tv" => Ok(Metric::Tv),
            "sep" => Ok(Metric::Sep),
            other => Err(Error::Parse(format!("unknown metric {other:?}"))),
        }
    }
}

/// A family of distributions over a common outcome set, indexed by `I`.
#[derive(Clone, Debug)]
pub struct DistFamily<I: Ord + Clone, K: Outcome> {
    members: BTreeMap<I, Dist<K>>,
}

impl<I: Ord + Clone, K: Outcome> DistFamily<I, K> {
    pub fn new<T: IntoIterator<Item = (I, Dist<K>)>>(members: T) -> Result<Self> {
        let members: BTreeMap<I, Dist<K>> = members.into_iter().collect();
        let mut arities = members.values().filter_map(Dist::arity);
        if let Some(first) = arities.next() {
            if arities.any(|a| a != first) {
                return Err(Error::MismatchedOutcomes("family members differ in arity".into()));
            }
        }
        Ok(DistFamily { members })
    }

    pub fn members(&self) -> impl Iterator<Item = (&I, &Dist<K>)> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `max_i metric(X(i), reference)`.
pub fn family_distance<I: Ord + Clone, K: Outcome>(
    fam: &DistFamily<I, K>,
    reference: &Dist<K>,
    metric: Metric,
) -> Result<Probability> {
    let mut best: Option<Probability> = None;
    for (_, member) in fam.members() {
        let v = metric.eval(member, reference)?;
        if best.as_ref().map_or(true, |b| v > *b) {
            best = Some(v);
        }
    }
    best.ok_or(Error::EmptyFamily)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(ws: &[(usize, i64, i64)]) -> Dist<usize> {
        Dist::new(ws.iter().map(|&(k, n, d)| (k, ratio(n, d)))).unwrap()
    }

    #[test]
    fn tv_examples() {
        let u3 = Dist::uniform(0..3usize).unwrap();
        assert!(tv_distance(&u3, &u3).unwrap().is_zero());

        let pm = Dist::point_mass(0usize);
        let u4 = Dist::uniform(0..4usize).unwrap();
        assert_eq!(*tv_distance(&pm, &u4).unwrap().value(), ratio(3, 4));

        let p = dist(&[(0, 1, 2), (1, 1, 2), (2, 0, 1)]);
        assert_eq!(*tv_distance(&p, &u3).unwrap().value(), ratio(1, 3));
    }

    #[test]
    fn sep_examples() {
        let p = dist(&[(0, 1, 4), (1, 3, 4)]);
        let q = dist(&[(0, 1, 2), (1, 1, 2)]);
        assert!(sep_distance(&p, &p).unwrap().is_zero());
        assert_eq!(*sep_distance(&p, &q).unwrap().value(), ratio(1, 2));

        let pm = Dist::point_mass(1usize);
        let u5 = Dist::uniform(0..5usize).unwrap();
        assert_eq!(sep_distance(&pm, &u5).unwrap(), Probability::one());
        // only the outcome with q(a) > 0 counts
        assert_eq!(*sep_distance(&u5, &pm).unwrap().value(), ratio(4, 5));
    }

    #[test]
    fn family_examples() {
        let u4 = Dist::uniform(0..4usize).unwrap();
        let fam = DistFamily::new([(0, u4.clone())]).unwrap();
        assert!(family_distance(&fam, &u4, Metric::Tv).unwrap().is_zero());

        let fam = DistFamily::new([(0, u4.clone()), (1, Dist::point_mass(0usize))]).unwrap();
        assert_eq!(*family_distance(&fam, &u4, Metric::Tv).unwrap().value(), ratio(3, 4));

        let half = dist(&[(0, 1, 2), (1, 1, 2)]);
        let fam = DistFamily::new([(0, dist(&[(0, 1, 4), (1, 3, 4)])), (1, half.clone())]).unwrap();
        assert_eq!(*family_distance(&fam, &half, Metric::Sep).unwrap().value(), ratio(1, 2));

        let empty: DistFamily<usize, usize> = DistFamily::new([]).unwrap();
        assert_eq!(family_distance(&empty, &u4, Metric::Tv), Err(Error::EmptyFamily));
    }

    #[test]
    fn zero_weights_compare_equal() {
        let a = dist(&[(0, 1, 1), (1, 0, 1)]);
        let b = Dist::point_mass(0usize);
        assert_eq!(a, b);
        assert!(tv_distance(&a, &b).unwrap().is_zero());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(matches!(
            Dist::new([(0usize, ratio(1, 2))]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            Dist::new([(0usize, ratio(3, 2)), (1, ratio(-1, 2))]),
            Err(Error::NotAProbability(_))
        ));
    }

    #[test]
    fn mismatched_arity() {
        let a: Dist<Vec<usize>> = Dist::point_mass(vec![0, 1]);
        let b: Dist<Vec<usize>> = Dist::point_mass(vec![0, 1, 2]);
        assert!(matches!(tv_distance(&a, &b), Err(Error::MismatchedOutcomes(_))));
        assert!(matches!(sep_distance(&a, &b), Err(Error::MismatchedOutcomes(_))));
    }

    #[test]
    fn rational_round_trip() {
        let r = parse_rational(" 6/8 ").unwrap();
        assert_eq!(r, ratio(3, 4));
        assert_eq!(format_rational(&r), "3/4");
        assert_eq!(parse_rational("2").unwrap(), ratio(2, 1));
        assert!(parse_rational("1/0").is_err());
        assert!((rational_to_f64(&ratio(1, 3)) - 1.0 / 3.0).abs() < 1e-15);
    }
}
