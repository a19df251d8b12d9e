//! Random affine hash functions over GF(2) and the XOR cells they induce.
//!
//! A hash `h(x) = Ax ⊕ b` maps assignments of `n` scope variables to `n`
//! bits; together with a random target `α` it defines nested cells
//! `{x : h(x)[..m] = α[..m]}` for `m = 1..=n`. The family of all `(A, b)` is
//! strongly 2-universal.
//!
//! Sampling draws from a caller-owned [`RngCore`]. Bits are taken from
//! successive `next_u64` words in a fixed order: the `n` rows of `A` (each
//! `⌈n/64⌉` words, least significant bit first), then `b`, then `α`;
//! unused high bits of a row's last word are masked off. With a portable
//! generator such as ChaCha the result is bit-exact across platforms.

use rand::RngCore;
use thiserror::Error;

use crate::formula::ProjectionScope;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashError {
    #[error("hash dimension must be at least 1")]
    ZeroDimension,
    #[error("prefix length {m} outside 1..={n}")]
    PrefixOutOfRange { m: usize, n: usize },
}

/// A parity constraint `⊕_{v ∈ variables} x_v = rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XorConstraint {
    variables: Vec<u32>,
    rhs: bool,
}

impl XorConstraint {
    /// Repeated variables cancel pairwise.
    pub fn new(vars: impl IntoIterator<Item = u32>, rhs: bool) -> Self {
        let mut all: Vec<u32> = vars.into_iter().collect();
        all.sort_unstable();
        let mut variables = Vec::with_capacity(all.len());
        let mut i = 0;
        while i < all.len() {
            let mut j = i;
            while j < all.len() && all[j] == all[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                variables.push(all[i]);
            }
            i = j;
        }
        XorConstraint { variables, rhs }
    }

    pub fn variables(&self) -> &[u32] {
        &self.variables
    }

    pub fn rhs(&self) -> bool {
        self.rhs
    }

    pub fn max_var(&self) -> u32 {
        self.variables.last().copied().unwrap_or(0)
    }

    /// `assignment[i]` is the value of variable `i + 1`.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        let parity = self
            .variables
            .iter()
            .fold(false, |acc, &v| acc ^ assignment[v as usize - 1]);
        parity == self.rhs
    }
}

/// A dense affine map `x ↦ Ax ⊕ b` over GF(2) with a target vector `α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct XorHash {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    offset: Vec<u64>,
    target: Vec<u64>,
    // Column j of A acts on variable variables[j].
    variables: Vec<u32>,
}

fn tail_mask(n: usize, word: usize, words: usize) -> u64 {
    let rem = n % 64;
    if word + 1 == words && rem != 0 {
        (1u64 << rem) - 1
    } else {
        u64::MAX
    }
}

fn get_bit(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64).max(1)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

impl XorHash {
    fn sample_words(n: usize, words: usize, rng: &mut impl RngCore) -> Vec<u64> {
        (0..words)
            .map(|w| rng.next_u64() & tail_mask(n, w, words))
            .collect()
    }

    /// Samples `A`, `b` and `α` uniformly; columns act on variables `1..=n`.
    pub fn sample(n: usize, rng: &mut impl RngCore) -> Result<Self, HashError> {
        Self::sample_over((1..=n as u32).collect(), rng)
    }

    /// Samples a hash whose columns act on the scope variables in order.
    pub fn sample_for_scope(
        scope: &ProjectionScope,
        rng: &mut impl RngCore,
    ) -> Result<Self, HashError> {
        Self::sample_over(scope.variables().to_vec(), rng)
    }

    fn sample_over(variables: Vec<u32>, rng: &mut impl RngCore) -> Result<Self, HashError> {
        let n = variables.len();
        if n == 0 {
            return Err(HashError::ZeroDimension);
        }
        let words = n.div_ceil(64);
        let mut rows = Vec::with_capacity(n * words);
        for _ in 0..n {
            rows.extend(Self::sample_words(n, words, rng));
        }
        let offset = Self::sample_words(n, words, rng);
        let target = Self::sample_words(n, words, rng);
        Ok(XorHash {
            n,
            words,
            rows,
            offset,
            target,
            variables,
        })
    }

    /// Builds a hash from explicit bits; columns act on variables `1..=n`.
    /// Panics on inconsistent shapes.
    pub fn from_bits(matrix: &[Vec<bool>], offset: &[bool], target: &[bool]) -> Self {
        let n = matrix.len();
        assert!(n >= 1, "hash dimension must be at least 1");
        assert!(matrix.iter().all(|r| r.len() == n));
        assert_eq!(offset.len(), n);
        assert_eq!(target.len(), n);
        let words = n.div_ceil(64);
        XorHash {
            n,
            words,
            rows: matrix.iter().flat_map(|r| pack(r)).collect(),
            offset: pack(offset),
            target: pack(target),
            variables: (1..=n as u32).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn variables(&self) -> &[u32] {
        &self.variables
    }

    pub fn matrix_bit(&self, row: usize, col: usize) -> bool {
        get_bit(&self.rows[row * self.words..(row + 1) * self.words], col)
    }

    pub fn offset_bit(&self, row: usize) -> bool {
        get_bit(&self.offset, row)
    }

    pub fn target_bit(&self, row: usize) -> bool {
        get_bit(&self.target, row)
    }

    /// Evaluates bit `row` of `h(x)`, where `x[j]` is the value of column `j`.
    pub fn eval_bit(&self, row: usize, x: &[bool]) -> bool {
        let mut acc = self.offset_bit(row);
        for (j, &xj) in x.iter().enumerate().take(self.n) {
            if xj && self.matrix_bit(row, j) {
                acc = !acc;
            }
        }
        acc
    }

    /// Evaluates `h(x)` for a column-ordered input.
    pub fn eval(&self, x: &[bool]) -> Vec<bool> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.eval_bit(i, x)).collect()
    }

    pub fn prefix(&self, m: usize) -> Result<PrefixSlice<'_>, HashError> {
        if m == 0 || m > self.n {
            return Err(HashError::PrefixOutOfRange { m, n: self.n });
        }
        Ok(PrefixSlice { hash: self, m })
    }
}

/// The first `m` output bits of a hash and target.
#[derive(Debug, Clone, Copy)]
pub struct PrefixSlice<'a> {
    hash: &'a XorHash,
    m: usize,
}

impl PrefixSlice<'_> {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Whether a column-ordered assignment lies in the cell.
    pub fn contains(&self, x: &[bool]) -> bool {
        (0..self.m).all(|i| self.hash.eval_bit(i, x) == self.hash.target_bit(i))
    }

    /// One constraint per row: row `i` of `A` over the hash's variables, with
    /// right-hand side `α[i] ⊕ b[i]`. All-zero rows are kept as empty
    /// constraints.
    pub fn cell_constraints(&self) -> Vec<XorConstraint> {
        let h = self.hash;
        (0..self.m)
            .map(|i| {
                let vars = (0..h.n)
                    .filter(|&j| h.matrix_bit(i, j))
                    .map(|j| h.variables[j]);
                XorConstraint::new(vars, h.target_bit(i) ^ h.offset_bit(i))
            })
            .collect()
    }
}

/// Convenience wrapper over [`XorHash::sample`].
pub fn sample_hash(n: usize, rng: &mut impl RngCore) -> Result<XorHash, HashError> {
    XorHash::sample(n, rng)
}

/// Convenience wrapper over [`PrefixSlice::cell_constraints`].
pub fn cell_constraints(slice: &PrefixSlice<'_>) -> Vec<XorConstraint> {
    slice.cell_constraints()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_dimension_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_hash(0, &mut rng).unwrap_err(), HashError::ZeroDimension);
    }

    #[test]
    fn sampling_is_deterministic() {
        for n in [1, 3, 64, 65, 130] {
            let a = sample_hash(n, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
            let b = sample_hash(n, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.dimension(), n);
        }
        let a = sample_hash(8, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample_hash(8, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn bit_layout_is_pinned() {
        // Guards the documented draw order against accidental changes.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let words: Vec<u64> = (0..5).map(|_| rng.next_u64()).collect();
        let h = sample_hash(3, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        for row in 0..3 {
            for col in 0..3 {
                assert_eq!(h.matrix_bit(row, col), (words[row] >> col) & 1 == 1);
            }
            assert_eq!(h.offset_bit(row), (words[3] >> row) & 1 == 1);
            assert_eq!(h.target_bit(row), (words[4] >> row) & 1 == 1);
        }
    }

    #[test]
    fn shape_of_sampled_hash() {
        let h = sample_hash(3, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(h.eval(&[true, false, true]).len(), 3);
        assert_eq!(h.variables(), &[1, 2, 3]);
        assert!(h.prefix(0).is_err());
        assert!(h.prefix(4).is_err());
        assert_eq!(h.prefix(3).unwrap().cell_constraints().len(), 3);
    }

    #[test]
    fn constraint_construction() {
        let h = XorHash::from_bits(
            &[
                vec![true, false, true],
                vec![false, false, false],
                vec![false, true, false],
            ],
            &[false, false, true],
            &[true, true, true],
        );
        let c = h.prefix(3).unwrap().cell_constraints();
        assert_eq!(c[0], XorConstraint::new([1, 3], true));
        // All-zero row with b = 0 and α = 1 is an unsatisfiable empty parity.
        assert_eq!(c[1], XorConstraint::new(Vec::<u32>::new(), true));
        assert_eq!(c[2], XorConstraint::new([2], false));
    }

    #[test]
    fn constraints_are_prefixes() {
        let h = sample_hash(6, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        for m in 1..6 {
            let short = h.prefix(m).unwrap().cell_constraints();
            let long = h.prefix(m + 1).unwrap().cell_constraints();
            assert_eq!(long.len(), short.len() + 1);
            assert_eq!(&long[..m], &short[..]);
        }
    }

    #[test]
    fn constraints_agree_with_cell_membership() {
        let h = sample_hash(5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        for bits in 0u32..32 {
            let x: Vec<bool> = (0..5).map(|i| (bits >> i) & 1 == 1).collect();
            for m in 1..=5 {
                let slice = h.prefix(m).unwrap();
                let by_constraints = slice.cell_constraints().iter().all(|c| c.is_satisfied_by(&x));
                assert_eq!(slice.contains(&x), by_constraints);
            }
        }
    }

    #[test]
    fn scope_hash_uses_scope_variables() {
        let scope = ProjectionScope::from_vars([2, 5, 9]);
        let h = XorHash::sample_for_scope(&scope, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for c in h.prefix(3).unwrap().cell_constraints() {
            assert!(c.variables().iter().all(|v| scope.contains(*v)));
        }
    }

    #[test]
    fn xor_constraint_cancels_pairs() {
        let x = XorConstraint::new([3, 1, 3, 2, 3], false);
        assert_eq!(x.variables(), &[1, 2, 3]);
        assert!(XorConstraint::new([4, 4], true).variables().is_empty());
    }
}
