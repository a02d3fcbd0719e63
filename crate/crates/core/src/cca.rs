//! Adaptive two-sided (CCA) distinguishing games against a random
//! permutation.
//!
//! A query is written `a → b` (forward: the permutation sends `a` to `b`) or
//! `b ← a` (backward: the preimage of `b` is `a`). Both forms constrain the
//! permutation to `σ(a) = b`, and two queries are equivalent exactly when
//! they impose the same constraint.
//!
//! [`cca_advantage`] computes the optimal advantage by backward induction
//! over constraint sets; [`cca_advantage_by_tree_enumeration`] evaluates the
//! max-over-strategies definition literally and is kept as a cross-check for
//! tiny instances.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{
    all_permutations, compose_perm_dists, falling_factorial, invert_perm_dist, ncpa_advantage,
    sep_security, PermDist, Permutation, QueryTuple,
};
use crate::prob::{tv_distance, Dist, Outcome, Probability, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "fwd")]
    Forward,
    #[serde(rename = "bwd")]
    Backward,
}

/// The first two symbols of a query: which element, and which direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QueryInput {
    pub elem: usize,
    pub dir: Direction,
}

impl QueryInput {
    pub fn forward(elem: usize) -> Self {
        QueryInput { elem, dir: Direction::Forward }
    }

    pub fn backward(elem: usize) -> Self {
        QueryInput { elem, dir: Direction::Backward }
    }

    /// Answer of this query against `sigma`.
    pub fn answer(&self, sigma: &Permutation) -> usize {
        match self.dir {
            Direction::Forward => sigma.apply(self.elem),
            Direction::Backward => sigma.inverse().apply(self.elem),
        }
    }

    pub fn with_output(self, right: usize) -> CcaQuery {
        CcaQuery { left: self.elem, dir: self.dir, right }
    }

    /// Every input over `{0..n-1}`, ordered by element then direction
    /// (forward first). This is also the tie-breaking order.
    pub fn all(n: usize) -> Vec<QueryInput> {
        (0..n)
            .flat_map(|e| [QueryInput::forward(e), QueryInput::backward(e)])
            .collect()
    }
}

/// A full query `aRb`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CcaQuery {
    pub left: usize,
    pub dir: Direction,
    pub right: usize,
}

impl CcaQuery {
    pub fn forward(a: usize, b: usize) -> Self {
        CcaQuery { left: a, dir: Direction::Forward, right: b }
    }

    /// `b ← a`: the preimage of `b` is `a`.
    pub fn backward(b: usize, a: usize) -> Self {
        CcaQuery { left: b, dir: Direction::Backward, right: a }
    }

    pub fn input(&self) -> QueryInput {
        QueryInput { elem: self.left, dir: self.dir }
    }

    pub fn output(&self) -> usize {
        self.right
    }

    /// The constraint `σ(a) = b` this query imposes, as `(a, b)`.
    pub fn constraint(&self) -> (usize, usize) {
        match self.dir {
            Direction::Forward => (self.left, self.right),
            Direction::Backward => (self.right, self.left),
        }
    }

    /// Equal, or reversals of each other.
    pub fn is_equivalent(&self, other: &CcaQuery) -> bool {
        self.constraint() == other.constraint()
    }

    pub fn consistent_with(&self, sigma: &Permutation) -> bool {
        let (a, b) = self.constraint();
        a < sigma.n() && b < sigma.n() && sigma.apply(a) == b
    }
}

impl fmt::Display for CcaQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.dir {
            Direction::Forward => "→",
            Direction::Backward => "←",
        };
        write!(f, "{}{}{}", self.left, arrow, self.right)
    }
}

impl Outcome for CcaQuery {}

/// Ordered queries with no entry equivalent to another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    n: usize,
    queries: Vec<CcaQuery>,
}

impl Transcript {
    pub fn new(n: usize, queries: Vec<CcaQuery>) -> Result<Self> {
        for (i, q) in queries.iter().enumerate() {
            if q.left >= n || q.right >= n {
                return Err(Error::InvalidQuery(format!("{q} on n = {n}")));
            }
            if queries[..i].iter().any(|p| p.is_equivalent(q)) {
                return Err(Error::EquivalentQueries(i));
            }
        }
        Ok(Transcript { n, queries })
    }

    pub fn queries(&self) -> &[CcaQuery] {
        &self.queries
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Tuples `(a, b)` with `σ` consistent with `t` iff `σ(a_i) = b_i` for all `i`.
pub fn transcript_constraint(t: &Transcript) -> Result<(QueryTuple, QueryTuple)> {
    let mut a = Vec::with_capacity(t.queries.len());
    let mut b = Vec::with_capacity(t.queries.len());
    for q in &t.queries {
        let (x, y) = q.constraint();
        if let Some(i) = a.iter().position(|&e| e == x) {
            return Err(Error::InconsistentTranscript(format!(
                "σ({x}) = {} and σ({x}) = {y}",
                b[i]
            )));
        }
        if let Some(i) = b.iter().position(|&e| e == y) {
            return Err(Error::InconsistentTranscript(format!(
                "σ({}) = {y} and σ({x}) = {y}",
                a[i]
            )));
        }
        a.push(x);
        b.push(y);
    }
    Ok((QueryTuple::new(a, t.n)?, QueryTuple::new(b, t.n)?))
}

/// A node asks `input`; `children` maps each observed output to the next
/// node. A node with no children ends the game after its answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyNode {
    pub input: QueryInput,
    #[serde(default)]
    pub children: BTreeMap<usize, StrategyNode>,
}

impl StrategyNode {
    pub fn leaf(input: QueryInput) -> Self {
        StrategyNode { input, children: BTreeMap::new() }
    }
}

/// A deterministic adaptive strategy in decision-tree form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyTree {
    pub root: StrategyNode,
}

/// A strategy in function form: the transcript produced against each `σ`.
pub type StrategyFn = BTreeMap<Permutation, Vec<CcaQuery>>;

impl StrategyTree {
    pub fn new(root: StrategyNode) -> Self {
        StrategyTree { root }
    }

    /// Plays the tree against `sigma`. Fails when an answer has no branch.
    pub fn play(&self, sigma: &Permutation) -> Option<Vec<CcaQuery>> {
        let mut out = Vec::new();
        let mut node = &self.root;
        loop {
            if node.input.elem >= sigma.n() {
                return None;
            }
            let ans = node.input.answer(sigma);
            out.push(node.input.with_output(ans));
            if node.children.is_empty() {
                return Some(out);
            }
            node = node.children.get(&ans)?;
        }
    }

    pub fn to_function(&self, n: usize) -> Option<StrategyFn> {
        all_permutations(n)
            .into_iter()
            .map(|s| self.play(&s).map(|t| (s, t)))
            .collect()
    }

    /// Number of distinct transcripts the tree can produce on `S_n`.
    pub fn reachable_leaves(&self, n: usize) -> usize {
        let mut seen: Vec<Vec<CcaQuery>> = all_permutations(n)
            .iter()
            .filter_map(|s| self.play(s))
            .collect();
        seen.sort();
        seen.dedup();
        seen.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Checks the three strategy conditions on a function `S_n → queries^q`:
/// answers are consistent with the permutation, the first input is
/// constant, and each next input depends only on the transcript so far.
pub fn validate_strategy_fn(f: &StrategyFn, n: usize, q: usize) -> bool {
    let perms = all_permutations(n);
    if f.len() != perms.len() || perms.iter().any(|s| !f.contains_key(s)) {
        return false;
    }
    let mut next_input: HashMap<&[CcaQuery], QueryInput> = HashMap::new();
    for (sigma, t) in f {
        if t.len() != q {
            return false;
        }
        if !t.iter().all(|p| p.consistent_with(sigma)) {
            return false;
        }
        for k in 0..q {
            let prefix = &t[..k];
            match next_input.get(prefix) {
                Some(inp) if *inp != t[k].input() => return false,
                Some(_) => {}
                None => {
                    next_input.insert(prefix, t[k].input());
                }
            }
        }
    }
    true
}

/// Whether `tree` is a `q`-query strategy on `S_n`.
pub fn validate_strategy(tree: &StrategyTree, n: usize, q: usize) -> bool {
    match tree.to_function(n) {
        Some(f) => validate_strategy_fn(&f, n, q),
        None => false,
    }
}

/// Size limits for the exact game solvers.
#[derive(Clone, Copy, Debug)]
pub struct CcaLimits {
    pub max_n: usize,
    pub max_q: usize,
}

impl Default for CcaLimits {
    fn default() -> Self {
        CcaLimits { max_n: 5, max_q: 3 }
    }
}

impl CcaLimits {
    fn check(&self, n: usize, q: usize) -> Result<()> {
        if q == 0 {
            return Err(Error::InvalidParams("q must be at least 1".into()));
        }
        if q > n {
            return Err(Error::TooManyQueries { q, n });
        }
        if n > self.max_n {
            return Err(Error::CapExceeded { what: "n", value: n as u64, cap: self.max_n as u64 });
        }
        if q > self.max_q {
            return Err(Error::CapExceeded { what: "q", value: q as u64, cap: self.max_q as u64 });
        }
        Ok(())
    }
}

struct Solver {
    n: usize,
    q: usize,
    /// `1/(n)_q`: the uniform probability of any complete transcript.
    unit: Rational,
    support: Vec<(Permutation, Rational)>,
    memo: HashMap<Vec<(usize, usize)>, (Rational, Option<QueryInput>)>,
}

impl Solver {
    fn new(x: &PermDist, q: usize) -> Self {
        let n = x.n();
        Solver {
            n,
            q,
            unit: Rational::new(1.into(), falling_factorial(n as u64, q as u64)),
            support: x.support().map(|(p, w)| (p.clone(), w.clone())).collect(),
            memo: HashMap::new(),
        }
    }

    /// Value of the subgame after the constraints in `known` (sorted), and
    /// the best next input. `alive` holds the support indices consistent
    /// with `known`.
    fn value(&mut self, known: &[(usize, usize)], alive: &[usize]) -> Rational {
        if let Some((v, _)) = self.memo.get(known) {
            return v.clone();
        }
        let result = if known.len() == self.q {
            let px: Rational = alive.iter().map(|&i| &self.support[i].1).sum();
            let gap = &self.unit - px;
            let v = if gap.is_positive() { gap } else { Rational::zero() };
            (v, None)
        } else {
            let mut best: Option<(Rational, QueryInput)> = None;
            for input in QueryInput::all(self.n) {
                let Some(v) = self.input_value(known, alive, input) else {
                    continue;
                };
                if best.as_ref().map_or(true, |(b, _)| v > *b) {
                    best = Some((v, input));
                }
            }
            let (v, inp) = best.expect("q < n leaves an admissible input");
            (v, Some(inp))
        };
        let v = result.0.clone();
        self.memo.insert(known.to_vec(), result);
        v
    }

    /// Sum of child values for `input`, or `None` when `input` repeats or
    /// reverses an earlier query.
    fn input_value(&mut self, known: &[(usize, usize)], alive: &[usize], input: QueryInput) -> Option<Rational> {
        let children = self.children(known, input)?;
        let mut total = Rational::zero();
        for (_, pair) in children {
            let mut next = known.to_vec();
            next.push(pair);
            next.sort_unstable();
            let sub: Vec<usize> = alive
                .iter()
                .copied()
                .filter(|&i| self.support[i].0.apply(pair.0) == pair.1)
                .collect();
            total += self.value(&next, &sub);
        }
        Some(total)
    }

    /// `(answer, new constraint)` for every answer possible under the
    /// uniform permutation given `known`.
    fn children(&self, known: &[(usize, usize)], input: QueryInput) -> Option<Vec<(usize, (usize, usize))>> {
        let domain = |a: usize| known.iter().any(|&(x, _)| x == a);
        let range = |b: usize| known.iter().any(|&(_, y)| y == b);
        match input.dir {
            Direction::Forward => {
                if domain(input.elem) {
                    return None;
                }
                Some((0..self.n).filter(|&b| !range(b)).map(|b| (b, (input.elem, b))).collect())
            }
            Direction::Backward => {
                if range(input.elem) {
                    return None;
                }
                Some((0..self.n).filter(|&a| !domain(a)).map(|a| (a, (a, input.elem))).collect())
            }
        }
    }

    fn solve(&mut self) -> Rational {
        let alive: Vec<usize> = (0..self.support.len()).collect();
        self.value(&[], &alive)
    }

    fn extract(&self, known: &[(usize, usize)]) -> StrategyNode {
        let (_, input) = &self.memo[known];
        let input = input.expect("internal node");
        let mut node = StrategyNode::leaf(input);
        if known.len() + 1 < self.q {
            for (ans, pair) in self.children(known, input).expect("admissible") {
                let mut next = known.to_vec();
                next.push(pair);
                next.sort_unstable();
                node.children.insert(ans, self.extract(&next));
            }
        }
        node
    }
}

/// Exact `CCA_q(X) = max_f d_TV(f(X), f(U))` by backward induction.
pub fn cca_advantage(x: &PermDist, q: usize) -> Result<Probability> {
    cca_advantage_with(x, q, CcaLimits::default())
}

pub fn cca_advantage_with(x: &PermDist, q: usize, limits: CcaLimits) -> Result<Probability> {
    limits.check(x.n(), q)?;
    Probability::new(Solver::new(x, q).solve())
}

/// A tree attaining [`cca_advantage`]; ties go to the lowest
/// `(element, direction)` input.
pub fn optimal_strategy(x: &PermDist, q: usize) -> Result<(Probability, StrategyTree)> {
    optimal_strategy_with(x, q, CcaLimits::default())
}

pub fn optimal_strategy_with(x: &PermDist, q: usize, limits: CcaLimits) -> Result<(Probability, StrategyTree)> {
    limits.check(x.n(), q)?;
    let mut solver = Solver::new(x, q);
    let v = solver.solve();
    Ok((Probability::new(v)?, StrategyTree::new(solver.extract(&[]))))
}

/// Advantage of one fixed strategy: `d_TV(f(X), f(U))`.
pub fn strategy_advantage(x: &PermDist, tree: &StrategyTree) -> Result<Probability> {
    let n = x.n();
    let f = tree
        .to_function(n)
        .ok_or_else(|| Error::InvalidParams("strategy is undefined on some permutation".into()))?;
    let fx: Dist<Vec<CcaQuery>> = x.dist().map(|s| f[s].clone());
    let fu: Dist<Vec<CcaQuery>> = Dist::uniform(f.values().cloned())?;
    tv_distance(&fx, &fu)
}

/// Hard cap on the number of trees [`cca_advantage_by_tree_enumeration`]
/// will visit.
pub const TREE_ENUMERATION_CAP: u64 = 2_000_000;

/// All strategy trees of the given depth whose branches cover every answer
/// that some permutation in `consistent` can give. Inputs range over all
/// `2n` choices, redundant ones included.
fn enumerate_trees(n: usize, depth: usize, consistent: &[Permutation]) -> Vec<StrategyNode> {
    let mut out = Vec::new();
    for input in QueryInput::all(n) {
        if depth == 1 {
            out.push(StrategyNode::leaf(input));
            continue;
        }
        let mut groups: BTreeMap<usize, Vec<Permutation>> = BTreeMap::new();
        for s in consistent {
            groups.entry(input.answer(s)).or_default().push(s.clone());
        }
        let options: Vec<(usize, Vec<StrategyNode>)> = groups
            .into_iter()
            .map(|(ans, g)| (ans, enumerate_trees(n, depth - 1, &g)))
            .collect();
        let mut partial = vec![BTreeMap::new()];
        for (ans, subtrees) in &options {
            let mut next = Vec::with_capacity(partial.len() * subtrees.len());
            for p in &partial {
                for t in subtrees {
                    let mut m: BTreeMap<usize, StrategyNode> = p.clone();
                    m.insert(*ans, t.clone());
                    next.push(m);
                }
            }
            partial = next;
        }
        out.extend(partial.into_iter().map(|children| StrategyNode { input, children }));
    }
    out
}

fn count_trees(n: usize, depth: usize, consistent: &[Permutation]) -> u64 {
    QueryInput::all(n)
        .into_iter()
        .map(|input| {
            if depth == 1 {
                return 1u64;
            }
            let mut groups: BTreeMap<usize, Vec<Permutation>> = BTreeMap::new();
            for s in consistent {
                groups.entry(input.answer(s)).or_default().push(s.clone());
            }
            groups
                .values()
                .map(|g| count_trees(n, depth - 1, g))
                .fold(1u64, |a, b| a.saturating_mul(b))
        })
        .fold(0u64, |a, b| a.saturating_add(b))
}

/// `max_f d_TV(f(X), f(U))` over every strategy tree, evaluated literally.
/// Only feasible for tiny `n` and `q`.
pub fn cca_advantage_by_tree_enumeration(x: &PermDist, q: usize) -> Result<Probability> {
    let n = x.n();
    if q == 0 || q > n {
        return Err(Error::TooManyQueries { q, n });
    }
    let perms = all_permutations(n);
    let count = count_trees(n, q, &perms);
    if count > TREE_ENUMERATION_CAP {
        return Err(Error::CapExceeded { what: "strategy trees", value: count, cap: TREE_ENUMERATION_CAP });
    }
    let mut best = Probability::zero();
    for root in enumerate_trees(n, q, &perms) {
        let v = strategy_advantage(x, &StrategyTree::new(root))?;
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Thm12Report {
    pub cca: Probability,
    pub sep: Probability,
    pub holds: bool,
}

/// Compares the CCA advantage against the separation security of `X`.
pub fn check_thm12(x: &PermDist, q: usize) -> Result<Thm12Report> {
    let cca = cca_advantage(x, q)?;
    let sep = sep_security(x, q)?;
    let holds = cca <= sep;
    Ok(Thm12Report { cca, sep, holds })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MainTheoremReport {
    pub lhs: Probability,
    /// `nCPA_q(X) + nCPA_q(Y)`, uncapped; may exceed 1.
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub rhs: Rational,
    pub holds: bool,
}

impl MainTheoremReport {
    /// The right-hand side capped at 1.
    pub fn rhs_capped(&self) -> Probability {
        Probability::new(self.rhs.clone()).unwrap_or_else(|_| Probability::one())
    }
}

/// `CCA_q(X⁻¹ ∘ Y)` against `nCPA_q(X) + nCPA_q(Y)`.
pub fn check_main_theorem(x: &PermDist, y: &PermDist, q: usize) -> Result<MainTheoremReport> {
    if x.n() != y.n() {
        return Err(Error::SizeMismatch(format!("S_{} vs S_{}", x.n(), y.n())));
    }
    let composed = compose_perm_dists(&invert_perm_dist(x), y)?;
    let lhs = cca_advantage(&composed, q)?;
    let rhs = ncpa_advantage(x, q)?.into_inner() + ncpa_advantage(y, q)?.into_inner();
    let holds = *lhs.value() <= rhs;
    Ok(MainTheoremReport { lhs, rhs, holds })
}

/// Number of permutations of `S_n` consistent with a transcript.
pub fn consistent_count(t: &Transcript) -> Result<BigInt> {
    let (a, b) = transcript_constraint(t)?;
    let count = all_permutations(t.n)
        .iter()
        .filter(|s| s.image(&a) == b.entries())
        .count();
    Ok(BigInt::from(count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{cyclic_shifts, random_perm_dist, uniform_perm_dist};
    use crate::prob::ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn id3() -> PermDist {
        PermDist::point_mass(Permutation::identity(3))
    }

    #[test]
    fn query_accessors() {
        let q = CcaQuery::backward(7, 2);
        assert_eq!(q.input(), QueryInput::backward(7));
        assert_eq!(q.output(), 2);
        assert_eq!(q.constraint(), (2, 7));
        assert!(q.is_equivalent(&CcaQuery::forward(2, 7)));
        assert!(!q.is_equivalent(&CcaQuery::forward(7, 2)));
        assert_eq!(q.to_string(), "7←2");
    }

    #[test]
    fn transcript_constraint_examples() {
        let t = Transcript::new(3, vec![CcaQuery::forward(0, 1)]).unwrap();
        let (a, b) = transcript_constraint(&t).unwrap();
        assert_eq!((a.entries(), b.entries()), (&[0][..], &[1][..]));

        let t = Transcript::new(3, vec![CcaQuery::backward(2, 1)]).unwrap();
        let (a, b) = transcript_constraint(&t).unwrap();
        assert_eq!((a.entries(), b.entries()), (&[1][..], &[2][..]));

        let t = Transcript::new(3, vec![CcaQuery::forward(0, 1), CcaQuery::backward(2, 0)]).unwrap();
        assert!(matches!(transcript_constraint(&t), Err(Error::InconsistentTranscript(_))));

        assert_eq!(
            Transcript::new(3, vec![CcaQuery::forward(0, 1), CcaQuery::backward(1, 0)]),
            Err(Error::EquivalentQueries(1))
        );
    }

    #[test]
    fn validate_examples() {
        let t = StrategyTree::new(StrategyNode::leaf(QueryInput::forward(0)));
        assert!(validate_strategy(&t, 3, 1));
        assert!(!validate_strategy(&t, 3, 2));

        // 0→, then 1→ on outcome 0, else 2←
        let mut root = StrategyNode::leaf(QueryInput::forward(0));
        root.children.insert(0, StrategyNode::leaf(QueryInput::forward(1)));
        root.children.insert(1, StrategyNode::leaf(QueryInput::backward(2)));
        root.children.insert(2, StrategyNode::leaf(QueryInput::backward(2)));
        let tree = StrategyTree::new(root.clone());
        assert!(validate_strategy(&tree, 3, 2));

        // a missing branch leaves f undefined on some σ
        root.children.remove(&2);
        assert!(!validate_strategy(&StrategyTree::new(root), 3, 2));

        // root input varying with σ
        let mut f = tree.to_function(3).unwrap();
        let sigma = Permutation::new(vec![2, 1, 0]).unwrap();
        f.insert(sigma, vec![CcaQuery::forward(1, 1), CcaQuery::forward(0, 2)]);
        assert!(!validate_strategy_fn(&f, 3, 2));

        // inconsistent answer
        let mut f = tree.to_function(3).unwrap();
        let sigma = Permutation::identity(3);
        f.insert(sigma, vec![CcaQuery::forward(0, 1), CcaQuery::forward(1, 1)]);
        assert!(!validate_strategy_fn(&f, 3, 2));
    }

    #[test]
    fn cca_examples() {
        let u3 = uniform_perm_dist(3).unwrap();
        for q in 1..=3 {
            assert!(cca_advantage(&u3, q).unwrap().is_zero());
        }
        assert_eq!(*cca_advantage(&id3(), 1).unwrap().value(), ratio(2, 3));
        assert_eq!(*cca_advantage(&cyclic_shifts(3), 2).unwrap().value(), ratio(1, 2));
        assert!(matches!(cca_advantage(&u3, 4), Err(Error::TooManyQueries { .. })));
        let u6 = uniform_perm_dist(6).unwrap();
        assert!(matches!(cca_advantage(&u6, 1), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn enumeration_agrees_on_examples() {
        assert_eq!(*cca_advantage_by_tree_enumeration(&id3(), 1).unwrap().value(), ratio(2, 3));
        assert_eq!(
            *cca_advantage_by_tree_enumeration(&cyclic_shifts(3), 2).unwrap().value(),
            ratio(1, 2)
        );
    }

    #[test]
    fn optimal_strategy_examples() {
        let u3 = uniform_perm_dist(3).unwrap();
        let (v, tree) = optimal_strategy(&u3, 2).unwrap();
        assert!(v.is_zero());
        assert!(validate_strategy(&tree, 3, 2));
        // ties go to the lowest input
        assert_eq!(tree.root.input, QueryInput::forward(0));

        let (v, tree) = optimal_strategy(&id3(), 1).unwrap();
        assert_eq!(*v.value(), ratio(2, 3));
        assert!(tree.root.children.is_empty());
        assert_eq!(strategy_advantage(&id3(), &tree).unwrap(), v);

        let cyc = cyclic_shifts(3);
        let (v, tree) = optimal_strategy(&cyc, 2).unwrap();
        assert_eq!(*v.value(), ratio(1, 2));
        assert!(validate_strategy(&tree, 3, 2));
        assert_eq!(strategy_advantage(&cyc, &tree).unwrap(), v);

        let back = StrategyTree::from_json(&tree.to_json()).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn optimal_trees_have_falling_factorial_leaves() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=4 {
            for q in 1..=n.min(3) {
                let x = random_perm_dist(n, 10, 9, &mut rng);
                let (v, tree) = optimal_strategy(&x, q).unwrap();
                assert!(validate_strategy(&tree, n, q));
                assert_eq!(strategy_advantage(&x, &tree).unwrap(), v);
                let ff = falling_factorial(n as u64, q as u64);
                assert_eq!(BigInt::from(tree.reachable_leaves(n)), ff);
                // every transcript has uniform probability 1/(n)_q
                for s in all_permutations(n) {
                    let t = Transcript::new(n, tree.play(&s).unwrap()).unwrap();
                    assert_eq!(consistent_count(&t).unwrap() * &ff, BigInt::from(all_permutations(n).len()));
                }
            }
        }
    }

    #[test]
    fn thm12_examples() {
        let u3 = uniform_perm_dist(3).unwrap();
        let r = check_thm12(&u3, 1).unwrap();
        assert!(r.cca.is_zero() && r.sep.is_zero() && r.holds);

        let r = check_thm12(&id3(), 1).unwrap();
        assert_eq!(*r.cca.value(), ratio(2, 3));
        assert_eq!(r.sep, Probability::one());
        assert!(r.holds);

        let mix = u3.mix(&id3(), &ratio(3, 4)).unwrap();
        let r = check_thm12(&mix, 1).unwrap();
        assert_eq!(*r.sep.value(), ratio(1, 4));
        assert!(r.cca <= r.sep && r.holds);
    }

    #[test]
    fn main_theorem_examples() {
        let u3 = uniform_perm_dist(3).unwrap();
        let r = check_main_theorem(&u3, &u3, 2).unwrap();
        assert!(r.lhs.is_zero() && r.rhs.is_zero() && r.holds);

        let r = check_main_theorem(&id3(), &id3(), 1).unwrap();
        assert_eq!(*r.lhs.value(), ratio(2, 3));
        assert_eq!(r.rhs, ratio(4, 3));
        assert_eq!(r.rhs_capped(), Probability::one());
        assert!(r.holds);

        assert!(check_main_theorem(&u3, &uniform_perm_dist(4).unwrap(), 1).is_err());
    }

    #[test]
    fn cca_dominates_ncpa_and_is_conjugation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let x = random_perm_dist(4, 8, 12, &mut rng);
            for q in 1..=2 {
                let c = cca_advantage(&x, q).unwrap();
                assert!(c >= ncpa_advantage(&x, q).unwrap());
                let g = Permutation::new(vec![2, 0, 3, 1]).unwrap();
                let gi = g.inverse();
                let conj = PermDist::from_weights(
                    4,
                    x.support().map(|(p, w)| (g.compose(p).compose(&gi), w.clone())),
                )
                .unwrap();
                assert_eq!(cca_advantage(&conj, q).unwrap(), c);
            }
        }
    }
}
