//! Brute-force oracles shared by the integration tests. They enumerate whole
//! histories instead of evolving laws round by round.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use permsec::swapnot::{w_construction_from, w_free_bits, KeySchedule, ShuffleParams};

pub type Law = BTreeMap<Vec<u32>, BigRational>;

pub fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn pow2_inv(e: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << e)
}

fn add(law: &mut Law, k: Vec<u32>, p: &BigRational) {
    let e = law.entry(k).or_insert_with(BigRational::zero);
    *e += p;
}

pub fn prune(law: Law) -> Law {
    law.into_iter().filter(|(_, p)| !p.is_zero()).collect()
}

/// Whole-deck evaluation: every round draws a key and one coin per pair of
/// the full deck (none for `K = 0`), then the tracked images are read off.
pub fn son_full_deck_law(d: u32, rounds: usize, xs: &[u32]) -> Law {
    let n = 1u32 << d;
    // one history step: (key, coin bits per pair), weight
    let mut steps: Vec<(Vec<u32>, BigRational)> = Vec::new();
    for k in 0..n {
        if k == 0 {
            steps.push(((0..n).collect(), BigRational::new(1.into(), n.into())));
            continue;
        }
        let reps: Vec<u32> = (0..n).filter(|&x| x < (x ^ k)).collect();
        let pairs = reps.len() as u32;
        for bits in 0..1u64 << pairs {
            let mut image: Vec<u32> = (0..n).collect();
            for (b, &rep) in reps.iter().enumerate() {
                if bits >> b & 1 == 1 {
                    image[rep as usize] = rep ^ k;
                    image[(rep ^ k) as usize] = rep;
                }
            }
            steps.push((image, BigRational::new(1.into(), n.into()) * pow2_inv(pairs)));
        }
    }
    let mut law: Law = BTreeMap::new();
    law.insert((0..n).collect(), BigRational::one());
    for _ in 0..rounds {
        let mut next = BTreeMap::new();
        for (perm, p) in &law {
            for (step, w) in &steps {
                let composed: Vec<u32> = perm.iter().map(|&y| step[y as usize]).collect();
                add(&mut next, composed, &(p * w));
            }
        }
        law = next;
    }
    let mut out = BTreeMap::new();
    for (perm, p) in law {
        add(&mut out, xs.iter().map(|&x| perm[x as usize]).collect(), &p);
    }
    prune(out)
}

/// Tilde process: every history of keys and one coin per tracked card.
pub fn tilde_history_law(d: u32, rounds: usize, xs: &[u32]) -> Law {
    let n = 1u32 << d;
    let q = xs.len() as u32;
    let w = BigRational::new(1.into(), n.into()) * pow2_inv(q);
    let mut law: Law = BTreeMap::new();
    law.insert(xs.to_vec(), BigRational::one());
    for _ in 0..rounds {
        let mut next = BTreeMap::new();
        for (pos, p) in &law {
            for k in 0..n {
                for bits in 0..1u32 << q {
                    let moved: Vec<u32> =
                        pos.iter().enumerate().map(|(i, &x)| if bits >> i & 1 == 1 { x ^ k } else { x }).collect();
                    add(&mut next, moved, &(p * &w));
                }
            }
        }
        law = next;
    }
    prune(law)
}

/// All `n^len` words over `0..n`, lexicographic.
pub fn all_words(n: u32, len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..n).map(move |v| {
                    let mut w = w.clone();
                    w.push(v);
                    w
                })
            })
            .collect();
    }
    out
}

pub fn rank(vs: &[u32]) -> usize {
    // plain elimination, independent of the library's basis
    let mut rows: Vec<u32> = vs.to_vec();
    let mut rank = 0;
    for bit in (0..32).rev() {
        if let Some(p) = (rank..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) {
            rows.swap(rank, p);
            for i in 0..rows.len() {
                if i != rank && rows[i] >> bit & 1 == 1 {
                    rows[i] ^= rows[rank];
                }
            }
            rank += 1;
        }
    }
    rank
}

/// Exact `P(x̃_a^r = y_a, x̃_b^r = y_b | at least one collision)` for two tilde
/// cards, by a DP over `(pos_a, pos_b, collided)`. Returns the joint law of
/// endpoints restricted to collided runs, and `P(collided)`.
pub fn collided_pair_law(d: u32, rounds: usize, xs: (u32, u32)) -> (BTreeMap<(u32, u32), BigRational>, BigRational) {
    let n = 1u32 << d;
    let w = BigRational::new(1.into(), (4 * n).into());
    let mut states: BTreeMap<(u32, u32, bool), BigRational> = BTreeMap::new();
    states.insert((xs.0, xs.1, false), BigRational::one());
    for _ in 0..rounds {
        let mut next: BTreeMap<(u32, u32, bool), BigRational> = BTreeMap::new();
        for (&(a, b, c), p) in &states {
            for k in 0..n {
                for (ca, cb) in [(false, false), (false, true), (true, false), (true, true)] {
                    let hit = a ^ b == k && ca != cb;
                    let na = if ca { a ^ k } else { a };
                    let nb = if cb { b ^ k } else { b };
                    let e = next.entry((na, nb, c || hit)).or_insert_with(BigRational::zero);
                    *e += p * &w;
                }
            }
        }
        states = next;
    }
    let mut joint = BTreeMap::new();
    let mut total = BigRational::zero();
    for ((a, b, c), p) in states {
        if c {
            total += &p;
            *joint.entry((a, b)).or_insert_with(BigRational::zero) += p;
        }
    }
    (joint, total)
}

pub fn to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap()
}

/// Law of W-construction endpoints by enumerating keys, W, and coin bits.
pub fn w_law(d: u32, rounds: usize, xs: &[u32]) -> Law {
    let p = ShuffleParams::new(d, rounds).unwrap();
    let n = 1u32 << d;
    let mut law = Law::new();
    for keys in all_words(n, rounds) {
        let sched = KeySchedule::new(&p, keys).unwrap();
        let bits_needed = w_free_bits(&p, &sched) * xs.len();
        for w in all_words(n, xs.len()) {
            for bits in 0..1u64 << bits_needed {
                let mut i = 0;
                let s = w_construction_from(&p, xs, &sched, &w, || {
                    let b = bits >> i & 1 == 1;
                    i += 1;
                    b
                })
                .unwrap();
                assert_eq!(i, bits_needed);
                let weight = pow2_inv(d * rounds as u32 + d * xs.len() as u32 + bits_needed as u32);
                *law.entry(s.positions).or_insert_with(BigRational::zero) += weight;
            }
        }
    }
    prune(law)
}
