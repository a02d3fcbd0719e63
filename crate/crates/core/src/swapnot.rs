//! The swap-or-not shuffle on `Z_2^d` and its tilde relaxation.
//!
//! Positions and round keys are `u32` words and addition in `Z_2^d` is XOR.
//! Round `t` pairs `x` with `x ^ K_t`; each pair flips one fair coin and swaps
//! on heads. In the tilde process every tracked card flips its own coin.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gf2::{gf2_rank, Gf2Basis};
use crate::mc::{chunk_rng, fold_trials, BinomialEstimate};
use crate::perm::falling_factorial;
use crate::prob::{format_rational, Dist, Probability, Rational};

/// Default cap on the number of joint states `N^q` held by the exact DP.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ShuffleParams {
    pub d: u32,
    pub r: usize,
}

impl ShuffleParams {
    /// `r = 0` is allowed and denotes the identity shuffle.
    pub fn new(d: u32, r: usize) -> Result<Self> {
        if !(1..=31).contains(&d) {
            return Err(Error::InvalidParams(format!("d = {d} must lie in 1..=31")));
        }
        Ok(ShuffleParams { d, r })
    }

    pub fn n(&self) -> u64 {
        1u64 << self.d
    }

    fn check_position(&self, x: u32) -> Result<()> {
        if u64::from(x) >= self.n() {
            return Err(Error::InvalidParams(format!("position {x} is outside Z_2^{}", self.d)));
        }
        Ok(())
    }

    fn check_tracked(&self, xs: &[u32]) -> Result<()> {
        if xs.is_empty() {
            return Err(Error::InvalidParams("no tracked cards".into()));
        }
        for (i, &x) in xs.iter().enumerate() {
            self.check_position(x)?;
            if xs[..i].contains(&x) {
                return Err(Error::InvalidParams(format!("tracked position {x} repeats")));
            }
        }
        Ok(())
    }

    fn require_r_at_least_d(&self) -> Result<()> {
        if self.r < self.d as usize {
            return Err(Error::InvalidParams(format!("needs r >= d, got r = {} < d = {}", self.r, self.d)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KeySchedule(Vec<u32>);

impl KeySchedule {
    pub fn new(params: &ShuffleParams, keys: Vec<u32>) -> Result<Self> {
        if keys.len() != params.r {
            return Err(Error::InvalidParams(format!("{} keys for {} rounds", keys.len(), params.r)));
        }
        for &k in &keys {
            params.check_position(k)?;
        }
        Ok(KeySchedule(keys))
    }

    pub fn random<R: Rng + ?Sized>(params: &ShuffleParams, rng: &mut R) -> Self {
        KeySchedule((0..params.r).map(|_| random_word(params.d, rng)).collect())
    }

    pub fn keys(&self) -> &[u32] {
        &self.0
    }

    pub fn spans(&self, d: u32) -> bool {
        gf2_rank(&self.0) == d as usize
    }
}

fn random_word<R: Rng + ?Sized>(d: u32, rng: &mut R) -> u32 {
    (rng.gen::<u32>()) & (((1u64 << d) - 1) as u32)
}

/// Coin for round `t` of the pair whose smaller element is `rep`.
pub trait CoinOracle {
    fn coin(&self, round: usize, rep: u32) -> bool;
}

impl<F: Fn(usize, u32) -> bool> CoinOracle for F {
    fn coin(&self, round: usize, rep: u32) -> bool {
        self(round, rep)
    }
}

/// Explicit table of one coin per round per position; only entries at pair
/// representatives are read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoinTable {
    rounds: Vec<Vec<bool>>,
}

impl CoinTable {
    pub fn new(rounds: Vec<Vec<bool>>) -> Self {
        CoinTable { rounds }
    }

    pub fn constant(params: &ShuffleParams, value: bool) -> Self {
        CoinTable { rounds: vec![vec![value; params.n() as usize]; params.r] }
    }

    pub fn random<R: Rng + ?Sized>(params: &ShuffleParams, rng: &mut R) -> Self {
        let n = params.n() as usize;
        CoinTable { rounds: (0..params.r).map(|_| (0..n).map(|_| rng.gen()).collect()).collect() }
    }
}

impl CoinOracle for CoinTable {
    fn coin(&self, round: usize, rep: u32) -> bool {
        self.rounds[round][rep as usize]
    }
}

/// Pseudorandom coins derived from a 64-bit key; cheap for any `d`.
#[derive(Clone, Copy, Debug)]
pub struct HashedCoins(pub u64);

impl CoinOracle for HashedCoins {
    fn coin(&self, round: usize, rep: u32) -> bool {
        splitmix64(self.0 ^ ((round as u64) << 32 | u64::from(rep))) & 1 == 1
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn son_round(x: u32, key: u32, coin: bool) -> u32 {
    if coin {
        x ^ key
    } else {
        x
    }
}

fn round_at<C: CoinOracle + ?Sized>(t: usize, key: u32, coins: &C, x: u32) -> u32 {
    if key == 0 {
        return x;
    }
    son_round(x, key, coins.coin(t, x.min(x ^ key)))
}

pub fn son_eval<C: CoinOracle + ?Sized>(keys: &KeySchedule, coins: &C, x: u32) -> u32 {
    keys.0.iter().enumerate().fold(x, |x, (t, &k)| round_at(t, k, coins, x))
}

pub fn son_inverse_eval<C: CoinOracle + ?Sized>(keys: &KeySchedule, coins: &C, y: u32) -> u32 {
    keys.0.iter().enumerate().rev().fold(y, |y, (t, &k)| round_at(t, k, coins, y))
}

// ---------------------------------------------------------------------------
// Exact joint-position DP

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DpMode {
    #[serde(rename = "exact-dyadic")]
    ExactDyadic,
    #[serde(rename = "float64")]
    Float64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DpOptions {
    pub mode: DpMode,
    pub budget: u64,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions { mode: DpMode::ExactDyadic, budget: DEFAULT_BUDGET }
    }
}

impl DpOptions {
    pub fn float() -> Self {
        DpOptions { mode: DpMode::Float64, ..Self::default() }
    }
}

/// A probability read from the DP, exact or floating point.
#[derive(Clone, Debug, PartialEq)]
pub enum DpValue {
    Exact(Rational),
    Float(f64),
}

impl DpValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            DpValue::Exact(r) => crate::prob::rational_to_f64(r),
            DpValue::Float(f) => *f,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            DpValue::Exact(r) => Some(r),
            DpValue::Float(_) => None,
        }
    }
}

impl Serialize for DpValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DpValue::Exact(r) => s.serialize_str(&format_rational(r)),
            DpValue::Float(f) => s.serialize_f64(*f),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum DpValues {
    // numerators over 2^exp
    Dyadic { num: Vec<u128>, exp: u32 },
    Float(Vec<f64>),
}

/// Law of the joint positions of `q` tracked cards after `round` rounds.
/// State `(y_1, ..., y_q)` lives at index `Σ y_i << d(q-1-i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackedJointDist {
    params: ShuffleParams,
    xs: Vec<u32>,
    round: usize,
    values: DpValues,
}

impl TrackedJointDist {
    pub fn q(&self) -> usize {
        self.xs.len()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn xs(&self) -> &[u32] {
        &self.xs
    }

    pub fn params(&self) -> ShuffleParams {
        self.params
    }

    pub fn mode(&self) -> DpMode {
        match self.values {
            DpValues::Dyadic { .. } => DpMode::ExactDyadic,
            DpValues::Float(_) => DpMode::Float64,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            DpValues::Dyadic { num, .. } => num.len(),
            DpValues::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ys: &[u32]) -> usize {
        assert_eq!(ys.len(), self.q(), "tuple length");
        ys.iter().fold(0usize, |acc, &y| acc << self.params.d | y as usize)
    }

    pub fn decode(&self, idx: usize) -> Vec<u32> {
        let d = self.params.d;
        let mask = (1usize << d) - 1;
        (0..self.q()).map(|i| ((idx >> (d as usize * (self.q() - 1 - i))) & mask) as u32).collect()
    }

    fn value_at(&self, idx: usize) -> DpValue {
        match &self.values {
            DpValues::Dyadic { num, exp } => DpValue::Exact(dyadic(num[idx], *exp)),
            DpValues::Float(v) => DpValue::Float(v[idx]),
        }
    }

    pub fn value(&self, ys: &[u32]) -> DpValue {
        self.value_at(self.index(ys))
    }

    pub fn prob(&self, ys: &[u32]) -> f64 {
        self.value(ys).to_f64()
    }

    /// Exact probability; `None` in float64 mode.
    pub fn exact_prob(&self, ys: &[u32]) -> Option<Rational> {
        match self.value(ys) {
            DpValue::Exact(r) => Some(r),
            DpValue::Float(_) => None,
        }
    }

    /// Exact law as a `Dist` over tuples; `None` in float64 mode.
    pub fn to_dist(&self) -> Option<Dist<Vec<u32>>> {
        match &self.values {
            DpValues::Dyadic { num, exp } => Some(Dist::from_weights_unchecked(
                num.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(i, &v)| (self.decode(i), dyadic(v, *exp)))
                    .collect(),
            )),
            DpValues::Float(_) => None,
        }
    }

    fn distinct_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| all_distinct(&self.decode(i)))
    }

    /// Smallest probability over target tuples with distinct entries.
    pub fn min_distinct(&self) -> (Vec<u32>, DpValue) {
        let best = match &self.values {
            DpValues::Dyadic { num, .. } => self.distinct_indices().min_by_key(|&i| num[i]),
            DpValues::Float(v) => self.distinct_indices().min_by(|&a, &b| v[a].total_cmp(&v[b])),
        }
        .expect("q <= N leaves a distinct tuple");
        (self.decode(best), self.value_at(best))
    }

    /// `max_ys (1 - P(ys)·(N)_q)` over distinct-entry `ys`.
    pub fn sep_from_uniform(&self) -> DpValue {
        let (_, min) = self.min_distinct();
        let ff = falling_factorial(self.params.n(), self.q() as u64);
        match min {
            DpValue::Exact(p) => DpValue::Exact((Rational::one() - p * Rational::from(ff)).max(Rational::zero())),
            DpValue::Float(p) => {
                let ff = crate::prob::rational_to_f64(&Rational::from(ff));
                DpValue::Float((1.0 - p * ff).max(0.0))
            }
        }
    }

    /// `index,ys,probability` with one row per joint state; `ys` entries are
    /// separated by spaces.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,ys,probability\n");
        for i in 0..self.len() {
            let ys: Vec<String> = self.decode(i).iter().map(u32::to_string).collect();
            let p = match self.value_at(i) {
                DpValue::Exact(r) => format_rational(&r),
                DpValue::Float(f) => f.to_string(),
            };
            out.push_str(&format!("{i},{},{p}\n", ys.join(" ")));
        }
        out
    }
}

fn dyadic(num: u128, exp: u32) -> Rational {
    Rational::new(BigInt::from(num), BigInt::one() << exp)
}

fn all_distinct(ys: &[u32]) -> bool {
    ys.iter().enumerate().all(|(i, y)| !ys[..i].contains(y))
}

trait DpNum: Copy + Default + Send + Sync + std::ops::Add<Output = Self> {
    /// Contribution of one key given the sum over its `2^classes` coin outcomes.
    fn group(sum: Self, classes: usize, q: usize) -> Self;
    fn finish(total: Self, d: u32) -> Self;
}

impl DpNum for u128 {
    fn group(sum: Self, classes: usize, q: usize) -> Self {
        sum << (q - classes)
    }
    fn finish(total: Self, _d: u32) -> Self {
        total
    }
}

impl DpNum for f64 {
    fn group(sum: Self, classes: usize, _q: usize) -> Self {
        sum / (1u64 << classes) as f64
    }
    fn finish(total: Self, d: u32) -> Self {
        total / (1u64 << d) as f64
    }
}

// The one-round kernel is symmetric (on distinct-entry states for the
// shuffle, everywhere for the tilde process), so each target pulls from the
// states it could have come from.
fn dp_step<T: DpNum>(old: &[T], d: u32, q: usize, tilde: bool) -> Vec<T> {
    const BLOCK: usize = 1024;
    let n = 1u32 << d;
    let shifts: Vec<usize> = (0..q).map(|i| d as usize * (q - 1 - i)).collect();
    let mut new = vec![T::default(); old.len()];
    new.par_chunks_mut(BLOCK).enumerate().for_each(|(block, out)| {
        let mut pos = vec![0u32; q];
        let mut masks: Vec<usize> = Vec::with_capacity(q);
        for (off, slot) in out.iter_mut().enumerate() {
            let t = block * BLOCK + off;
            let mask = (1usize << d) - 1;
            for i in 0..q {
                pos[i] = ((t >> shifts[i]) & mask) as u32;
            }
            if !tilde && !all_distinct(&pos) {
                continue;
            }
            let mut total = T::default();
            for k in 0..n {
                masks.clear();
                if tilde || k == 0 {
                    masks.extend(shifts.iter().map(|&s| (k as usize) << s));
                } else {
                    let mut used = 0u64;
                    for i in 0..q {
                        if used >> i & 1 == 1 {
                            continue;
                        }
                        let mut m = (k as usize) << shifts[i];
                        if let Some(j) = (i + 1..q).find(|&j| pos[i] ^ pos[j] == k) {
                            m |= (k as usize) << shifts[j];
                            used |= 1 << j;
                        }
                        masks.push(m);
                    }
                }
                let mut sum = T::default();
                for sub in 0..1usize << masks.len() {
                    let delta = masks
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| sub >> b & 1 == 1)
                        .fold(0usize, |acc, (_, m)| acc ^ m);
                    sum = sum + old[t ^ delta];
                }
                total = total + T::group(sum, masks.len(), q);
            }
            *slot = T::finish(total, d);
        }
    });
    new
}

fn evolve(params: &ShuffleParams, xs: &[u32], opts: &DpOptions, tilde: bool) -> Result<TrackedJointDist> {
    params.check_tracked(xs)?;
    let q = xs.len();
    let states = params
        .n()
        .checked_pow(q as u32)
        .filter(|&s| s <= opts.budget)
        .ok_or(Error::BudgetExceeded {
            states: params.n().saturating_pow(q as u32),
            budget: opts.budget,
        })?;
    let mut dist = TrackedJointDist {
        params: *params,
        xs: xs.to_vec(),
        round: 0,
        values: DpValues::Float(Vec::new()),
    };
    let start = dist.index(xs);
    dist.values = match opts.mode {
        DpMode::ExactDyadic => {
            let bits = params.r as u64 * (u64::from(params.d) + q as u64);
            if bits > 127 {
                return Err(Error::DyadicOverflow { bits });
            }
            let mut cur = vec![0u128; states as usize];
            cur[start] = 1;
            for _ in 0..params.r {
                cur = dp_step(&cur, params.d, q, tilde);
            }
            DpValues::Dyadic { num: cur, exp: bits as u32 }
        }
        DpMode::Float64 => {
            let mut cur = vec![0f64; states as usize];
            cur[start] = 1.0;
            for _ in 0..params.r {
                cur = dp_step(&cur, params.d, q, tilde);
            }
            DpValues::Float(cur)
        }
    };
    dist.round = params.r;
    Ok(dist)
}

/// Exact law of the tracked cards' positions after `r` shuffle rounds.
pub fn evolve_son_joint(params: &ShuffleParams, xs: &[u32], opts: &DpOptions) -> Result<TrackedJointDist> {
    evolve(params, xs, opts, false)
}

/// As [`evolve_son_joint`] for the tilde process (independent coins).
pub fn evolve_tilde_joint(params: &ShuffleParams, xs: &[u32], opts: &DpOptions) -> Result<TrackedJointDist> {
    evolve(params, xs, opts, true)
}

/// Representatives of the starting tuples up to affine maps of `Z_2^d`.
/// The joint law is equivariant under translations and linear bijections,
/// so separation from uniform only needs these. `x_1 = 0` and each further
/// entry is either the next unit vector or a nonzero combination of the
/// unit vectors already introduced.
pub fn affine_representatives(d: u32, q: usize) -> Vec<Vec<u32>> {
    fn go(d: u32, q: usize, cur: &mut Vec<u32>, dim: u32, out: &mut Vec<Vec<u32>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for v in 1..(1u32 << dim) {
            if !cur.contains(&v) {
                cur.push(v);
                go(d, q, cur, dim, out);
                cur.pop();
            }
        }
        if dim < d {
            cur.push(1 << dim);
            go(d, q, cur, dim + 1, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if q as u64 <= 1u64 << d {
        go(d, q, &mut vec![0], 0, &mut out);
    }
    out
}

/// Separation distance of the shuffle's `q`-tuple images from uniform
/// distinct tuples, maximized over starting tuples.
pub fn sep_from_uniform(params: &ShuffleParams, q: usize, opts: &DpOptions) -> Result<DpValue> {
    if q == 0 || q as u64 > params.n() {
        return Err(Error::TooManyQueries { q, n: params.n() as usize });
    }
    let mut best: Option<DpValue> = None;
    for xs in affine_representatives(params.d, q) {
        let v = evolve_son_joint(params, &xs, opts)?.sep_from_uniform();
        let better = match (&best, &v) {
            (None, _) => true,
            (Some(DpValue::Exact(b)), DpValue::Exact(x)) => x > b,
            (Some(b), x) => x.to_f64() > b.to_f64(),
        };
        if better {
            best = Some(v);
        }
    }
    Ok(best.expect("at least one representative"))
}

/// Exact law of the displacements `(x̃_i^r ^ x_i)_i` of `q` tilde cards for a
/// fixed key schedule; the same for every starting tuple.
pub fn tilde_displacement_law(keys: &KeySchedule, q: usize) -> Dist<Vec<u32>> {
    let mut single: std::collections::BTreeMap<u32, Rational> = [(0u32, Rational::one())].into();
    let half = Rational::new(1.into(), 2.into());
    for &k in keys.keys() {
        let mut next = std::collections::BTreeMap::new();
        for (v, p) in &single {
            for w in [*v, v ^ k] {
                *next.entry(w).or_insert_with(Rational::zero) += p * &half;
            }
        }
        single = next;
    }
    let mut joint: Vec<(Vec<u32>, Rational)> = vec![(Vec::new(), Rational::one())];
    for _ in 0..q {
        joint = joint
            .into_iter()
            .flat_map(|(t, p)| {
                single.iter().map(move |(v, w)| {
                    let mut t = t.clone();
                    t.push(*v);
                    (t, &p * w)
                })
            })
            .collect();
    }
    Dist::from_weights_unchecked(joint.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Coupling

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollisionEvent {
    /// Round, 1-based.
    pub t: usize,
    pub pair: (usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CollisionLog {
    pub events: Vec<CollisionEvent>,
    /// Last collision round, `None` for no collision (τ = ∞).
    pub tau: Option<usize>,
}

impl CollisionLog {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    fn push(&mut self, t: usize, pair: (usize, usize)) {
        self.events.push(CollisionEvent { t, pair });
        self.tau = Some(t);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoupledSample {
    pub keys: Vec<u32>,
    pub son: Vec<u32>,
    pub tilde: Vec<u32>,
    /// `coins[i][t]` for the shuffle and `tilde_coins[i][t]` for the tilde process.
    pub coins: Vec<Vec<bool>>,
    pub tilde_coins: Vec<Vec<bool>>,
    pub log: CollisionLog,
    pub coins_equal: bool,
}

/// One joint trajectory of the shuffle and the tilde process on shared keys
/// and shared base coins. A shuffle card copies the coin of an earlier card
/// it is paired with; otherwise it uses its own tilde coin.
pub fn coupled_sample_with<R: Rng + ?Sized>(params: &ShuffleParams, xs: &[u32], rng: &mut R) -> Result<CoupledSample> {
    params.check_tracked(xs)?;
    let q = xs.len();
    let mut son = xs.to_vec();
    let mut tilde = xs.to_vec();
    let mut keys = Vec::with_capacity(params.r);
    let mut coins = vec![Vec::with_capacity(params.r); q];
    let mut tilde_coins = vec![Vec::with_capacity(params.r); q];
    let mut log = CollisionLog::default();
    for t in 0..params.r {
        let k = random_word(params.d, rng);
        keys.push(k);
        let ct: Vec<bool> = (0..q).map(|_| rng.gen()).collect();
        let mut c = ct.clone();
        for i in 0..q {
            if let Some(j) = (0..i).find(|&j| son[j] ^ son[i] == k) {
                c[i] = c[j];
            }
        }
        for i in 0..q {
            for j in i + 1..q {
                if tilde[i] ^ tilde[j] == k && ct[i] != ct[j] {
                    log.push(t + 1, (i, j));
                }
            }
        }
        for i in 0..q {
            son[i] = son_round(son[i], k, c[i]);
            tilde[i] = son_round(tilde[i], k, ct[i]);
            coins[i].push(c[i]);
            tilde_coins[i].push(ct[i]);
        }
    }
    let coins_equal = coins == tilde_coins;
    Ok(CoupledSample { keys, son, tilde, coins, tilde_coins, log, coins_equal })
}

pub fn coupled_sample(params: &ShuffleParams, xs: &[u32], seed: u64) -> Result<CoupledSample> {
    coupled_sample_with(params, xs, &mut chunk_rng(seed, 0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingSummary {
    pub runs: u64,
    pub runs_without_collision: u64,
    /// Collision-free runs whose endpoints or coins differ; should be 0.
    pub violations: u64,
    pub collision_events: u64,
    /// `runs · r · q(q-1)/2`.
    pub pair_rounds: u64,
    pub collision_rate: BinomialEstimate,
    pub expected_rate: f64,
    pub rate_within_3_sigma: bool,
}

/// Many coupled runs from fixed start `xs`. At most one collision is logged
/// per pair and round, so the event count over pair-rounds is binomial with
/// rate `1/(2N)`.
pub fn coupling_experiment(params: &ShuffleParams, xs: &[u32], runs: u64, seed: u64) -> Result<CouplingSummary> {
    params.check_tracked(xs)?;
    let (clean, violations, events) = fold_trials(
        seed,
        runs,
        || (0u64, 0u64, 0u64),
        |acc, rng| {
            let s = coupled_sample_with(params, xs, rng).expect("validated");
            if s.log.is_empty() {
                acc.0 += 1;
                if s.son != s.tilde || !s.coins_equal {
                    acc.1 += 1;
                }
            }
            acc.2 += s.log.events.len() as u64;
        },
        |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
    );
    let q = xs.len() as u64;
    let pair_rounds = runs * params.r as u64 * (q * (q.saturating_sub(1)) / 2);
    let rate = BinomialEstimate::new(events, pair_rounds);
    let expected = 1.0 / (2.0 * params.n() as f64);
    Ok(CouplingSummary {
        runs,
        runs_without_collision: clean,
        violations,
        collision_events: events,
        pair_rounds,
        collision_rate: rate,
        expected_rate: expected,
        rate_within_3_sigma: pair_rounds == 0 || rate.within_sigmas(expected, 3.0),
    })
}

// ---------------------------------------------------------------------------
// Spanning keys

/// Exact probability that `r` iid uniform keys span `Z_2^d`.
pub fn span_probability(d: u32, r: usize) -> Probability {
    let d = d as usize;
    let mut by_rank = vec![Rational::zero(); d + 1];
    by_rank[0] = Rational::one();
    for _ in 0..r {
        let mut next = vec![Rational::zero(); d + 1];
        for (k, p) in by_rank.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let stay = Rational::new(BigInt::one(), BigInt::one() << (d - k));
            if k < d {
                next[k + 1] += p * (Rational::one() - &stay);
            }
            next[k] += p * stay;
        }
        by_rank = next;
    }
    Probability::new(by_rank[d].clone()).expect("probability")
}

pub fn span_probability_mc(d: u32, r: usize, trials: u64, seed: u64) -> Result<BinomialEstimate> {
    let params = ShuffleParams::new(d, r)?;
    let hits = crate::mc::count_successes(seed, trials, |rng| KeySchedule::random(&params, rng).spans(d));
    Ok(BinomialEstimate::new(hits, trials))
}

// ---------------------------------------------------------------------------
// W-construction of the tilde process

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WSample {
    pub keys: Vec<u32>,
    pub w: Vec<u32>,
    pub spanning: bool,
    pub coins: Vec<Vec<bool>>,
    pub positions: Vec<u32>,
}

/// Number of coin bits [`w_construction_from`] draws per card.
pub fn w_free_bits(params: &ShuffleParams, keys: &KeySchedule) -> usize {
    if keys.spans(params.d) {
        params.r - params.d as usize
    } else {
        params.r
    }
}

/// Deterministic core of the W-construction. If the keys span, each card's
/// coins are a uniformly chosen solution of `x_i + Σ c_t K_t = W_i`: coins of
/// keys outside a fixed basis come from `bit`, the rest are solved for.
/// Otherwise all coins come from `bit` and `w` is ignored.
pub fn w_construction_from<F: FnMut() -> bool>(
    params: &ShuffleParams,
    xs: &[u32],
    keys: &KeySchedule,
    w: &[u32],
    mut bit: F,
) -> Result<WSample> {
    params.check_tracked(xs)?;
    if w.len() != xs.len() {
        return Err(Error::SizeMismatch(format!("{} targets for {} cards", w.len(), xs.len())));
    }
    if params.r > 64 {
        return Err(Error::CapExceeded { what: "r", value: params.r as u64, cap: 64 });
    }
    let mut basis = Gf2Basis::new();
    let independent: Vec<bool> = keys.keys().iter().map(|&k| basis.insert(k)).collect();
    let spanning = basis.rank() == params.d as usize;
    let mut coins = Vec::with_capacity(xs.len());
    let mut positions = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let mut c = vec![false; params.r];
        if spanning {
            params.check_position(w[i])?;
            let mut target = x ^ w[i];
            for t in 0..params.r {
                if !independent[t] {
                    c[t] = bit();
                    if c[t] {
                        target ^= keys.keys()[t];
                    }
                }
            }
            let mask = basis.solve(target).expect("spanning basis");
            for (t, ct) in c.iter_mut().enumerate() {
                if independent[t] {
                    *ct = mask >> t & 1 == 1;
                }
            }
        } else {
            for ct in c.iter_mut() {
                *ct = bit();
            }
        }
        let end = keys.keys().iter().zip(&c).fold(x, |y, (&k, &ct)| son_round(y, k, ct));
        positions.push(end);
        coins.push(c);
    }
    Ok(WSample { keys: keys.keys().to_vec(), w: w.to_vec(), spanning, coins, positions })
}

pub fn w_construction_sample(params: &ShuffleParams, xs: &[u32], seed: u64) -> Result<WSample> {
    let mut rng = chunk_rng(seed, 0);
    let keys = KeySchedule::random(params, &mut rng);
    let w: Vec<u32> = xs.iter().map(|_| random_word(params.d, &mut rng)).collect();
    w_construction_from(params, xs, &keys, &w, || rng.gen())
}

// ---------------------------------------------------------------------------
// Monte Carlo experiments

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalEstimate {
    pub trials: u64,
    pub accepted: u64,
    pub hits: u64,
    pub estimate: f64,
    pub ci95: (f64, f64),
}

/// Rejection-sampling estimate of `P(x̃_i^r = y_i, x̃_j^r = y_j | M)` where `M`
/// is the event that the two tilde cards collide at least once.
pub fn conditional_collision_estimate(
    params: &ShuffleParams,
    xs: (u32, u32),
    ys: (u32, u32),
    trials: u64,
    seed: u64,
) -> Result<ConditionalEstimate> {
    params.check_tracked(&[xs.0, xs.1])?;
    params.require_r_at_least_d()?;
    params.check_position(ys.0)?;
    params.check_position(ys.1)?;
    if ys.0 == ys.1 {
        return Err(Error::InvalidParams("target positions must differ".into()));
    }
    let (accepted, hits) = fold_trials(
        seed,
        trials,
        || (0u64, 0u64),
        |acc, rng| {
            let (mut a, mut b) = xs;
            let mut collided = false;
            for _ in 0..params.r {
                let k = random_word(params.d, rng);
                let (ca, cb): (bool, bool) = (rng.gen(), rng.gen());
                collided |= a ^ b == k && ca != cb;
                a = son_round(a, k, ca);
                b = son_round(b, k, cb);
            }
            if collided {
                acc.0 += 1;
                acc.1 += u64::from((a, b) == ys);
            }
        },
        |x, y| (x.0 + y.0, x.1 + y.1),
    );
    if accepted == 0 {
        return Err(Error::NoAcceptedSamples(trials));
    }
    let e = BinomialEstimate::new(hits, accepted);
    Ok(ConditionalEstimate { trials, accepted, hits, estimate: e.estimate, ci95: e.ci95 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackEstimate {
    pub trials: u64,
    pub shuffle_fires: BinomialEstimate,
    pub uniform_fires: BinomialEstimate,
    pub advantage_estimate: f64,
    /// Conservative: `[lo_s - hi_u, hi_s - lo_u]`.
    pub ci95: (f64, f64),
}

/// Queries `x_i = i` for `i < q` and fires iff `rank{out_i ^ x_i} < d`, once
/// against a fresh shuffle instance and once against fresh uniform distinct
/// outputs per trial.
pub fn subspace_attack(params: &ShuffleParams, q: usize, trials: u64, seed: u64) -> Result<AttackEstimate> {
    if q == 0 || q as u64 > params.n() {
        return Err(Error::TooManyQueries { q, n: params.n() as usize });
    }
    let d = params.d;
    let (shuffle, uniform) = fold_trials(
        seed,
        trials,
        || (0u64, 0u64),
        |acc, rng| {
            let keys = KeySchedule::random(params, rng);
            let coins = HashedCoins(rng.gen());
            let diffs: Vec<u32> = (0..q as u32).map(|x| son_eval(&keys, &coins, x) ^ x).collect();
            acc.0 += u64::from(gf2_rank(&diffs) < d as usize);
            let mut outs: Vec<u32> = Vec::with_capacity(q);
            while outs.len() < q {
                let y = random_word(d, rng);
                if !outs.contains(&y) {
                    outs.push(y);
                }
            }
            let diffs: Vec<u32> = outs.iter().enumerate().map(|(x, &y)| y ^ x as u32).collect();
            acc.1 += u64::from(gf2_rank(&diffs) < d as usize);
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    );
    let s = BinomialEstimate::new(shuffle, trials);
    let u = BinomialEstimate::new(uniform, trials);
    Ok(AttackEstimate {
        trials,
        shuffle_fires: s,
        uniform_fires: u,
        advantage_estimate: s.estimate - u.estimate,
        ci95: (s.ci95.0 - u.ci95.1, s.ci95.1 - u.ci95.0),
    })
}
