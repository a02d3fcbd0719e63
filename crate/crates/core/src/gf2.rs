//! Linear algebra over GF(2) on `u32` words.

/// Rank of a set of vectors.
pub fn gf2_rank(vectors: &[u32]) -> usize {
    let mut basis = Gf2Basis::new();
    vectors.iter().filter(|&&v| basis.insert(v)).count()
}

/// Echelon basis in which each stored vector remembers which inserted
/// vectors (by insertion index, at most 64) sum to it.
#[derive(Clone, Debug, Default)]
pub struct Gf2Basis {
    // indexed by pivot bit: (vector, mask of insertion indices)
    rows: [Option<(u32, u64)>; 32],
    inserted: u32,
    rank: usize,
}

impl Gf2Basis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Inserts `v`; returns false if `v` is already in the span. Either way
    /// it consumes the next insertion index.
    pub fn insert(&mut self, v: u32) -> bool {
        let idx = self.inserted;
        self.inserted += 1;
        assert!(idx < 64, "at most 64 insertions are tracked");
        let (rem, mask) = self.reduce(v);
        if rem == 0 {
            return false;
        }
        let pivot = 31 - rem.leading_zeros() as usize;
        self.rows[pivot] = Some((rem, mask ^ (1u64 << idx)));
        self.rank += 1;
        true
    }

    /// Reduces `v` against the basis: returns the residual and the mask of
    /// inserted vectors whose sum equals `v ^ residual`.
    pub fn reduce(&self, mut v: u32) -> (u32, u64) {
        let mut mask = 0u64;
        for bit in (0..32).rev() {
            if v >> bit & 1 == 1 {
                if let Some((row, m)) = self.rows[bit] {
                    v ^= row;
                    mask ^= m;
                }
            }
        }
        (v, mask)
    }

    /// A subset (as a mask of insertion indices) of the independent inserted
    /// vectors summing to `v`, or `None` if `v` is outside the span.
    pub fn solve(&self, v: u32) -> Option<u64> {
        match self.reduce(v) {
            (0, mask) => Some(mask),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        assert_eq!(gf2_rank(&[]), 0);
        assert_eq!(gf2_rank(&[0b01, 0b10]), 2);
        assert_eq!(gf2_rank(&[0b011, 0b101, 0b110]), 2);
        assert_eq!(gf2_rank(&[0, 0]), 0);
    }

    proptest! {
        #[test]
        fn solve_reconstructs(vs in proptest::collection::vec(0u32..256, 0..12), target in 0u32..256) {
            let mut b = Gf2Basis::new();
            let independent: Vec<bool> = vs.iter().map(|&v| b.insert(v)).collect();
            if let Some(mask) = b.solve(target) {
                let mut sum = 0;
                for (i, &v) in vs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        prop_assert!(independent[i]);
                        sum ^= v;
                    }
                }
                prop_assert_eq!(sum, target);
            } else {
                prop_assert!(b.rank() < 8);
            }
        }
    }
}
