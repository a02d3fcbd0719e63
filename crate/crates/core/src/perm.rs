//! Explicit distributions over the symmetric group `S_n`, their action on
//! query tuples, and non-adaptive (nCPA) advantage.
//!
//! Elements are 0-indexed. Query tuples always have pairwise-distinct
//! entries, and the reference tuple law is uniform over the `(n)_q`
//! distinct-entry tuples.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{
    format_rational, parse_rational, sep_distance, tv_distance, Dist, Outcome, Probability,
    Rational,
};

/// Largest `n` accepted for exact work unless a caller raises the cap.
pub const DEFAULT_N_CAP: usize = 6;

/// A bijection on `{0..n-1}`, stored as its image array.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty mapping".into()));
        }
        let mut seen = vec![false; n];
        for &v in &mapping {
            if v >= n || seen[v] {
                return Err(Error::InvalidPermutation(format!("{mapping:?}")));
            }
            seen[v] = true;
        }
        Ok(Permutation(mapping))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Permutation(inv)
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Self {
        Permutation(other.0.iter().map(|&x| self.0[x]).collect())
    }

    /// `σ(p_1), …, σ(p_q)`.
    pub fn image(&self, p: &QueryTuple) -> Vec<usize> {
        p.0.iter().map(|&x| self.0[x]).collect()
    }
}

impl Outcome for Permutation {
    fn arity(&self) -> usize {
        self.n()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Every permutation of `{0..n-1}` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation(cur.clone()));
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// `(n)_q = n (n-1) ⋯ (n-q+1)`.
pub fn falling_factorial(n: u64, q: u64) -> BigInt {
    (0..q).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i))
}

/// Ordered tuple of pairwise-distinct elements.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryTuple(Vec<usize>);

impl QueryTuple {
    pub fn new(entries: Vec<usize>, n: usize) -> Result<Self> {
        if entries.is_empty() || entries.len() > n {
            return Err(Error::InvalidQuery(format!(
                "need 1 <= q <= {n}, got {}",
                entries.len()
            )));
        }
        let mut seen = vec![false; n];
        for &e in &entries {
            if e >= n || seen[e] {
                return Err(Error::InvalidQuery(format!("{entries:?} on n = {n}")));
            }
            seen[e] = true;
        }
        Ok(QueryTuple(entries))
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All `(n)_q` distinct-entry tuples, in lexicographic order.
pub fn all_query_tuples(n: usize, q: usize) -> Vec<QueryTuple> {
    fn rec(n: usize, q: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<QueryTuple>) {
        if cur.len() == q {
            out.push(QueryTuple(cur.clone()));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(n, q, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, q, &mut Vec::with_capacity(q), &mut vec![false; n], &mut out);
    out
}

/// Law of `(X(p_1), …, X(p_q))`; every support tuple has distinct entries.
pub type TupleDist = Dist<Vec<usize>>;

/// An explicit random permutation of `{0..n-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermDist {
    n: usize,
    dist: Dist<Permutation>,
}

impl PermDist {
    pub fn new(n: usize, dist: Dist<Permutation>) -> Result<Self> {
        if let Some(bad) = dist.outcomes().find(|p| p.n() != n) {
            return Err(Error::SizeMismatch(format!(
                "permutation {bad} in a distribution over S_{n}"
            )));
        }
        Ok(PermDist { n, dist })
    }

    pub fn point_mass(p: Permutation) -> Self {
        PermDist {
            n: p.n(),
            dist: Dist::point_mass(p),
        }
    }

    /// Explicit support from `(permutation, weight)` pairs.
    pub fn from_weights<I: IntoIterator<Item = (Permutation, Rational)>>(n: usize, items: I) -> Result<Self> {
        Self::new(n, Dist::new(items)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self) -> &Dist<Permutation> {
        &self.dist
    }

    pub fn support(&self) -> impl Iterator<Item = (&Permutation, &Rational)> {
        self.dist.support()
    }

    pub fn prob(&self, p: &Permutation) -> Rational {
        self.dist.prob(p)
    }

    /// Mixture `w·self + (1-w)·other`.
    pub fn mix(&self, other: &PermDist, w: &Rational) -> Result<PermDist> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(format!("S_{} vs S_{}", self.n, other.n)));
        }
        let rest = Rational::one() - w;
        let items = self
            .support()
            .map(|(p, x)| (p.clone(), x * w))
            .chain(other.support().map(|(p, x)| (p.clone(), x * &rest)));
        PermDist::from_weights(self.n, items)
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if n > cap {
        return Err(Error::CapExceeded {
            what: "n",
            value: n as u64,
            cap: cap as u64,
        });
    }
    Ok(())
}

pub fn uniform_perm_dist(n: usize) -> Result<PermDist> {
    uniform_perm_dist_capped(n, DEFAULT_N_CAP)
}

pub fn uniform_perm_dist_capped(n: usize, cap: usize) -> Result<PermDist> {
    check_cap(n, cap)?;
    Ok(PermDist {
        n,
        dist: Dist::uniform(all_permutations(n))?,
    })
}

/// Pushforward of `x` under `σ ↦ σ(p)`.
pub fn image_dist(x: &PermDist, p: &QueryTuple) -> Result<TupleDist> {
    if p.entries().iter().any(|&e| e >= x.n) {
        return Err(Error::InvalidQuery(format!("{:?} on n = {}", p.entries(), x.n)));
    }
    Ok(x.dist.map(|s| s.image(p)))
}

/// Uniform law over the `(n)_q` distinct-entry tuples.
pub fn uniform_tuple_dist(n: usize, q: usize) -> Result<TupleDist> {
    if q > n {
        return Err(Error::TooManyQueries { q, n });
    }
    if q == 0 {
        return Err(Error::InvalidParams("q must be at least 1".into()));
    }
    Dist::uniform(all_query_tuples(n, q).into_iter().map(|t| t.0))
}

fn max_over_tuples<F>(x: &PermDist, q: usize, metric: F) -> Result<Probability>
where
    F: Fn(&TupleDist, &TupleDist) -> Result<Probability>,
{
    if q > x.n {
        return Err(Error::TooManyQueries { q, n: x.n });
    }
    let reference = uniform_tuple_dist(x.n, q)?;
    let mut best = Probability::zero();
    for p in all_query_tuples(x.n, q) {
        let v = metric(&image_dist(x, &p)?, &reference)?;
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

/// `nCPA_q(X) = max_p d_TV(X(p), μ_q)`.
pub fn ncpa_advantage(x: &PermDist, q: usize) -> Result<Probability> {
    max_over_tuples(x, q, tv_distance)
}

/// `max_p d_sep(X(p), μ_q)`.
pub fn sep_security(x: &PermDist, q: usize) -> Result<Probability> {
    max_over_tuples(x, q, sep_distance)
}

/// Law of `σ⁻¹` for `σ ~ x`.
pub fn invert_perm_dist(x: &PermDist) -> PermDist {
    PermDist {
        n: x.n,
        dist: x.dist.map(Permutation::inverse),
    }
}

/// Law of `a ∘ b` with `a ~ outer`, `b ~ inner` independent.
pub fn compose_perm_dists(outer: &PermDist, inner: &PermDist) -> Result<PermDist> {
    if outer.n != inner.n {
        return Err(Error::SizeMismatch(format!("S_{} vs S_{}", outer.n, inner.n)));
    }
    let mut weights: BTreeMap<Permutation, Rational> = BTreeMap::new();
    for (a, wa) in outer.support() {
        for (b, wb) in inner.support() {
            *weights.entry(a.compose(b)).or_insert_with(Rational::zero) += wa * wb;
        }
    }
    Ok(PermDist {
        n: outer.n,
        dist: Dist::from_weights_unchecked(weights),
    })
}

/// Random rational `PermDist` on `S_n` with a random support of at most
/// `max_support` permutations and integer weights in `1..=max_weight`.
pub fn random_perm_dist<R: Rng + ?Sized>(
    n: usize,
    max_support: usize,
    max_weight: u64,
    rng: &mut R,
) -> PermDist {
    let mut perms = all_permutations(n);
    perms.shuffle(rng);
    let k = rng.gen_range(1..=max_support.min(perms.len()).max(1));
    perms.truncate(k);
    let raw: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=max_weight)).collect();
    let total: u64 = raw.iter().sum();
    let items = perms
        .into_iter()
        .zip(raw)
        .map(|(p, w)| (p, Rational::new(w.into(), total.into())));
    PermDist::from_weights(n, items).expect("weights normalized by construction")
}

#[derive(Serialize, Deserialize)]
struct SupportEntry {
    map: Vec<usize>,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct PermDistFile {
    n: usize,
    support: Vec<SupportEntry>,
}

impl PermDist {
    pub fn to_json(&self) -> String {
        let file = PermDistFile {
            n: self.n,
            support: self
                .support()
                .map(|(p, w)| SupportEntry {
                    map: p.0.clone(),
                    num: w.numer().to_string(),
                    den: w.denom().to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: PermDistFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mut items = Vec::with_capacity(file.support.len());
        for e in file.support {
            let w = parse_rational(&format!("{}/{}", e.num, e.den))?;
            items.push((Permutation::new(e.map)?, w));
        }
        PermDist::from_weights(file.n, items)
    }
}

impl fmt::Display for PermDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S_{}{{", self.n)?;
        for (i, (p, w)) in self.support().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}: {}", format_rational(w))?;
        }
        write!(f, "}}")
    }
}

/// The three cyclic shifts `x ↦ x + k mod n`, uniformly weighted.
pub fn cyclic_shifts(n: usize) -> PermDist {
    let perms = (0..n).map(|k| Permutation((0..n).map(|x| (x + k) % n).collect()));
    PermDist::new(n, Dist::uniform(perms).expect("non-empty")).expect("same n")
}
