//! Finite Markov chains with exact rational transitions: time reversal,
//! composition, and the separation-versus-total-variation inequality for a
//! chain composed with the reversal of another.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::all_permutations;
use crate::prob::{format_rational, parse_rational, sep_distance, tv_distance, Dist, Probability, Rational};
use crate::report::ser_rational;

/// Row-stochastic `m × m` matrix of exact probabilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<Rational>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::NotStochastic("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::NotStochastic(format!("row {i} has {} entries, expected {m}", row.len())));
            }
            if row.iter().any(Signed::is_negative) {
                return Err(Error::NotStochastic(format!("row {i} has a negative entry")));
            }
            let s: Rational = row.iter().sum();
            if !s.is_one() {
                return Err(Error::NotStochastic(format!("row {i} sums to {}", format_rational(&s))));
            }
        }
        Ok(TransitionMatrix { rows })
    }

    pub fn identity(m: usize) -> Self {
        let rows = (0..m)
            .map(|i| (0..m).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        TransitionMatrix { rows }
    }

    /// Every row equal to `pi`.
    pub fn constant_rows(pi: &StationaryDist) -> Self {
        TransitionMatrix { rows: vec![pi.weights.clone(); pi.weights.len()] }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn row_dist(&self, i: usize) -> Dist<usize> {
        Dist::from_weights_unchecked(self.rows[i].iter().cloned().enumerate().collect())
    }

    /// Parses CSV with one `"num/den"` (or integer) cell per entry.
    pub fn from_csv(s: &str) -> Result<Self> {
        let rows = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.split(',').map(parse_rational).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(format_rational).collect();
            writeln!(out, "{}", cells.join(",")).expect("string write");
        }
        out
    }
}

/// Strictly positive distribution over the states of a chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StationaryDist {
    weights: Vec<Rational>,
}

impl StationaryDist {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_positive()) {
            return Err(Error::ZeroStationaryMass(i));
        }
        let s: Rational = weights.iter().sum();
        if !s.is_one() {
            return Err(Error::NotNormalized(format_rational(&s)));
        }
        Ok(StationaryDist { weights })
    }

    pub fn uniform(m: usize) -> Self {
        StationaryDist { weights: vec![Rational::new(1.into(), m.into()); m] }
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, i: usize) -> &Rational {
        &self.weights[i]
    }

    pub fn as_dist(&self) -> Dist<usize> {
        Dist::from_weights_unchecked(self.weights.iter().cloned().enumerate().collect())
    }
}

fn check_dims(p: &TransitionMatrix, pi: &StationaryDist) -> Result<()> {
    if p.m() != pi.m() {
        return Err(Error::SizeMismatch(format!("{}-state chain, {}-state π", p.m(), pi.m())));
    }
    Ok(())
}

/// Whether `πP = π` holds exactly.
pub fn verify_stationary(p: &TransitionMatrix, pi: &StationaryDist) -> Result<bool> {
    check_dims(p, pi)?;
    let m = p.m();
    Ok((0..m).all(|j| {
        let s: Rational = (0..m).map(|i| &pi.weights[i] * &p.rows[i][j]).sum();
        s == pi.weights[j]
    }))
}

/// `P̄(z, j) = π(j) P(j, z) / π(z)`.
pub fn time_reversal(p: &TransitionMatrix, pi: &StationaryDist) -> Result<TransitionMatrix> {
    if !verify_stationary(p, pi)? {
        return Err(Error::NotStationary);
    }
    let m = p.m();
    let rows = (0..m)
        .map(|z| (0..m).map(|j| &pi.weights[j] * &p.rows[j][z] / &pi.weights[z]).collect())
        .collect();
    TransitionMatrix::new(rows)
}

/// Matrix product `QR`: one `Q` step followed by one `R` step.
pub fn compose_chains(q: &TransitionMatrix, r: &TransitionMatrix) -> Result<TransitionMatrix> {
    if q.m() != r.m() {
        return Err(Error::SizeMismatch(format!("{} vs {} states", q.m(), r.m())));
    }
    let m = q.m();
    let rows = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| (0..m).map(|z| &q.rows[i][z] * &r.rows[z][j]).sum())
                .collect()
        })
        .collect();
    Ok(TransitionMatrix { rows })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lemma8Report {
    /// `min_{i,j} (RHS - LHS)`; may be negative only if the inequality fails.
    #[serde(serialize_with = "ser_rational")]
    pub min_slack: Rational,
    /// The `(i, j)` attaining the minimum.
    pub argmin: (usize, usize),
    pub holds: bool,
}

/// Evaluates `1 - QP̄(i,j)/π(j) ≤ d_TV(P(j,·), π) + d_TV(Q(i,·), π)` for
/// every pair of states.
pub fn lemma8_gap(p: &TransitionMatrix, q: &TransitionMatrix, pi: &StationaryDist) -> Result<Lemma8Report> {
    check_dims(q, pi)?;
    if !verify_stationary(q, pi)? {
        return Err(Error::NotStationary);
    }
    let reversed = time_reversal(p, pi)?;
    let qp = compose_chains(q, &reversed)?;
    let pi_dist = pi.as_dist();
    let m = p.m();
    let tv_p: Vec<Rational> = (0..m)
        .map(|j| tv_distance(&p.row_dist(j), &pi_dist).map(Probability::into_inner))
        .collect::<Result<_>>()?;
    let tv_q: Vec<Rational> = (0..m)
        .map(|i| tv_distance(&q.row_dist(i), &pi_dist).map(Probability::into_inner))
        .collect::<Result<_>>()?;
    let mut best: Option<(Rational, (usize, usize))> = None;
    for i in 0..m {
        for j in 0..m {
            let lhs = Rational::one() - &qp.rows[i][j] / &pi.weights[j];
            let slack = &tv_p[j] + &tv_q[i] - lhs;
            if best.as_ref().map_or(true, |(b, _)| slack < *b) {
                best = Some((slack, (i, j)));
            }
        }
    }
    let (min_slack, argmin) = best.expect("m >= 1");
    let holds = !min_slack.is_negative();
    Ok(Lemma8Report { min_slack, argmin, holds })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Corollary9Report {
    pub sep: Probability,
    /// `d_TV(𝒫, π) + d_TV(𝒬, π)`; may exceed 1.
    #[serde(serialize_with = "ser_rational")]
    pub tv_sum: Rational,
    pub holds: bool,
}

/// `max_i d_sep(QP̄(i,·), π) ≤ max_j d_TV(P(j,·), π) + max_i d_TV(Q(i,·), π)`.
pub fn corollary9_check(p: &TransitionMatrix, q: &TransitionMatrix, pi: &StationaryDist) -> Result<Corollary9Report> {
    check_dims(q, pi)?;
    if !verify_stationary(q, pi)? {
        return Err(Error::NotStationary);
    }
    let qp = compose_chains(q, &time_reversal(p, pi)?)?;
    let pi_dist = pi.as_dist();
    let m = p.m();
    let max_of = |vals: Vec<Probability>| vals.into_iter().max().unwrap_or_else(Probability::zero);
    let sep = max_of((0..m).map(|i| sep_distance(&qp.row_dist(i), &pi_dist)).collect::<Result<_>>()?);
    let tv_p = max_of((0..m).map(|j| tv_distance(&p.row_dist(j), &pi_dist)).collect::<Result<_>>()?);
    let tv_q = max_of((0..m).map(|i| tv_distance(&q.row_dist(i), &pi_dist)).collect::<Result<_>>()?);
    let tv_sum = tv_p.into_inner() + tv_q.into_inner();
    let holds = *sep.value() <= tv_sum;
    Ok(Corollary9Report { sep, tv_sum, holds })
}

/// Random doubly-stochastic matrix: a random convex combination (integer
/// weights in `1..=max_weight`) of `terms` random permutation matrices.
/// The uniform distribution is exactly stationary for the result.
pub fn random_doubly_stochastic<R: Rng + ?Sized>(m: usize, terms: usize, max_weight: u64, rng: &mut R) -> TransitionMatrix {
    let perms = all_permutations(m);
    let picks: Vec<(usize, u64)> = (0..terms.max(1))
        .map(|_| (rng.gen_range(0..perms.len()), rng.gen_range(1..=max_weight)))
        .collect();
    let total: u64 = picks.iter().map(|&(_, w)| w).sum();
    let mut rows = vec![vec![Rational::zero(); m]; m];
    for (k, w) in picks {
        let w = Rational::new(w.into(), total.into());
        for (i, &j) in perms[k].mapping().iter().enumerate() {
            rows[i][j] += &w;
        }
    }
    TransitionMatrix::new(rows).expect("convex combination of permutation matrices")
}
