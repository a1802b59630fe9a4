//! Classical set partitions in strictly ordered representation, and the
//! Koszul signs ε(σ), ε(π), ε(π,i) attached to graded reorderings.
//!
//! Indices are 0-based throughout: a partition of size `n` decomposes
//! `{0, …, n−1}`. Blocks are internally sorted ascending and ordered by
//! their maximum element, so the block containing `n−1` is always last.

use crate::{Error, Result};

/// Partitions above this size are refused by default (Bell(12) ≈ 4.2M).
pub const DEFAULT_PARTITION_CAP: usize = 12;

/// A set partition of `{0, …, n−1}` in strictly ordered representation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from blocks, normalizing to the strictly
    /// ordered representation. The blocks must be disjoint, nonempty,
    /// and cover `{0, …, n−1}`.
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::argument("empty block"));
            }
            b.sort_unstable();
            for &x in b.iter() {
                if x >= n {
                    return Err(Error::argument(format!("index {x} out of range for n={n}")));
                }
                if seen[x] {
                    return Err(Error::argument(format!("index {x} repeated")));
                }
                seen[x] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::argument("blocks do not cover the set"));
        }
        blocks.sort_by_key(|b| *b.last().unwrap());
        Ok(Partition { n, blocks })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Number of blocks |π|.
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }

    /// The permutation listing the blocks in order: position `k` holds
    /// the original index moved there.
    pub fn arrangement(&self) -> Vec<usize> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// True if `a` and `b` lie in the same block.
    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.blocks.iter().any(|bl| bl.contains(&a) && bl.contains(&b))
    }
}

/// The Koszul sign of a permutation acting on graded elements.
///
/// `perm[k]` is the original position moved to slot `k`; `degrees[j]` is
/// the degree of the element at original position `j`. The sign is the
/// product of (−1)^{|x_i||x_j|} over inverted pairs.
pub fn koszul_sign(perm: &[usize], degrees: &[i64]) -> Result<i32> {
    let n = perm.len();
    if degrees.len() != n {
        return Err(Error::argument("permutation/degrees length mismatch"));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::argument("not a permutation"));
        }
        seen[p] = true;
    }
    let mut sign = 1i32;
    for i in 0..n {
        for j in (i + 1)..n {
            if perm[i] > perm[j] && degrees[perm[i]] % 2 != 0 && degrees[perm[j]] % 2 != 0 {
                sign = -sign;
            }
        }
    }
    Ok(sign)
}

/// ε(π): the Koszul sign of the rearrangement x_1⊗…⊗x_n ↦ x_{B_1}⊗…⊗x_{B_{|π|}}.
pub fn partition_sign(pi: &Partition, degrees: &[i64]) -> Result<i32> {
    koszul_sign(&pi.arrangement(), degrees)
}

/// ε(π,i) = ε(π)·(−1)^{|x_{B_1}|+⋯+|x_{B_{i−1}}|}, with `i` 0-based.
pub fn eps_pi_i(pi: &Partition, i: usize, degrees: &[i64]) -> Result<i32> {
    if i >= pi.num_blocks() {
        return Err(Error::argument(format!(
            "block index {i} out of range (|π|={})",
            pi.num_blocks()
        )));
    }
    let base = partition_sign(pi, degrees)?;
    let mut prefix = 0i64;
    for b in &pi.blocks()[..i] {
        for &x in b {
            prefix += degrees[x];
        }
    }
    Ok(if prefix % 2 == 0 { base } else { -base })
}

/// All partitions of `{0,…,n−1}`, in restricted-growth-string
/// lexicographic order, each normalized to strictly ordered form.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    enumerate_partitions_capped(n, DEFAULT_PARTITION_CAP)
}

pub fn enumerate_partitions_capped(n: usize, cap: usize) -> Result<Vec<Partition>> {
    if n == 0 {
        return Err(Error::argument("n must be positive"));
    }
    if n > cap {
        return Err(Error::resource(format!("partition size {n} exceeds cap {cap}")));
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let num_blocks = rgs.iter().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); num_blocks];
        for (pos, &b) in rgs.iter().enumerate() {
            blocks[b].push(pos);
        }
        out.push(Partition::new(n, blocks)?);
        // next restricted growth string
        let mut k = n;
        loop {
            if k == 1 {
                return Ok(out);
            }
            k -= 1;
            let maxprefix = *rgs[..k].iter().max().unwrap();
            if rgs[k] <= maxprefix {
                rgs[k] += 1;
                for item in rgs.iter_mut().skip(k + 1) {
                    *item = 0;
                }
                break;
            }
        }
    }
}

/// Iterates the "hooked" partitions of `{0,…,n−1}`: pairs (π, i) where
/// block `B_i` has size `n − |π| + 1` and every other block is a
/// singleton. Calls `f(π, i)` for each; these index the n-th sL∞
/// relation, the descendant recursions, and the flow equations.
pub fn hooked_partitions(n: usize, mut f: impl FnMut(&Partition, usize) -> Result<()>) -> Result<()> {
    // Choose the distinguished block as a nonempty subset of {0..n-1};
    // the remaining indices become singletons.
    for mask in 1u64..(1 << n) {
        let block: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
        let mut blocks = vec![block.clone()];
        for j in 0..n {
            if mask >> j & 1 == 0 {
                blocks.push(vec![j]);
            }
        }
        let pi = Partition::new(n, blocks)?;
        let i = pi
            .blocks()
            .iter()
            .position(|b| b == &block)
            .expect("distinguished block present");
        f(&pi, i)?;
    }
    Ok(())
}

/// The Koszul sign ε(ς) for splitting x_1⊗…⊗x_m into x_ς ⊗ x_{ς^c},
/// where `subset` ⊆ {0,…,m−1} is sorted ascending.
pub fn subset_sign(subset: &[usize], m: usize, degrees: &[i64]) -> Result<i32> {
    let mut arrangement: Vec<usize> = subset.to_vec();
    for j in 0..m {
        if !subset.contains(&j) {
            arrangement.push(j);
        }
    }
    koszul_sign(&arrangement, &degrees[..m])
}

/// Bell numbers for cross-checks.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 1..=n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn koszul_sign_basics() {
        // identity permutation, any degrees
        assert_eq!(koszul_sign(&[0, 1, 2], &[1, 1, 1]).unwrap(), 1);
        // two odd elements anticommute
        assert_eq!(koszul_sign(&[1, 0], &[1, 1]).unwrap(), -1);
        // even element commutes
        assert_eq!(koszul_sign(&[1, 0], &[0, 1]).unwrap(), 1);
        assert!(koszul_sign(&[0, 0], &[0, 0]).is_err());
        assert!(koszul_sign(&[0], &[0, 0]).is_err());
    }

    #[test]
    fn koszul_sign_is_homomorphism() {
        // sign(σ∘τ) = sign(σ)·sign(τ) for randomly composed pairs, n ≤ 6.
        use rand::prelude::*;
        use rand::seq::SliceRandom;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in 1..=6usize {
            for _ in 0..40 {
                let degrees: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
                let mut sigma: Vec<usize> = (0..n).collect();
                let mut tau: Vec<usize> = (0..n).collect();
                sigma.shuffle(&mut rng);
                tau.shuffle(&mut rng);
                // composite: apply tau to the output slots of sigma
                let comp: Vec<usize> = (0..n).map(|k| sigma[tau[k]]).collect();
                // degrees seen by tau are those of the sigma-arranged elements
                let sigma_degrees: Vec<i64> = (0..n).map(|k| degrees[sigma[k]]).collect();
                let lhs = koszul_sign(&comp, &degrees).unwrap();
                let rhs = koszul_sign(&sigma, &degrees).unwrap()
                    * koszul_sign(&tau, &sigma_degrees).unwrap();
                assert_eq!(lhs, rhs, "n={n} sigma={sigma:?} tau={tau:?}");
            }
        }
    }

    #[test]
    fn enumerate_small() {
        assert_eq!(enumerate_partitions(1).unwrap().len(), 1);
        assert_eq!(enumerate_partitions(2).unwrap().len(), 2);
        let p3 = enumerate_partitions(3).unwrap();
        assert_eq!(p3.len(), 5);
        // strictly ordered representation contains {0,1}⊔{2} and singletons
        assert!(p3
            .iter()
            .any(|p| p.blocks() == [vec![0, 1], vec![2]]));
        assert!(p3
            .iter()
            .any(|p| p.blocks() == [vec![0], vec![1], vec![2]]));
        // paper's P(3) also lists {2}⊔{1,3}, i.e. 0-based {1}⊔{0,2}
        assert!(p3.iter().any(|p| p.blocks() == [vec![1], vec![0, 2]]));
        assert_eq!(enumerate_partitions(4).unwrap().len(), 15);
    }

    #[test]
    fn enumerate_matches_bell_and_is_distinct() {
        for n in 1..=8 {
            let parts = enumerate_partitions(n).unwrap();
            assert_eq!(parts.len() as u64, bell(n));
            let mut sorted = parts.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), parts.len());
        }
        assert!(enumerate_partitions_capped(9, 8).is_err());
    }

    #[test]
    fn partition_sign_examples() {
        // all degrees even → +1, for every π
        for pi in enumerate_partitions(4).unwrap() {
            assert_eq!(partition_sign(&pi, &[0, 2, 0, -2]).unwrap(), 1);
        }
        // all singleton blocks → identity rearrangement
        let singletons = Partition::new(3, vec![vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(partition_sign(&singletons, &[1, 1, 1]).unwrap(), 1);
        // n=3, degrees (1,1,0), π = {2}⊔{1,3} in 1-based, i.e. {1}⊔{0,2}:
        // arrangement (1,0,2) has one odd-odd inversion.
        let pi = Partition::new(3, vec![vec![1], vec![0, 2]]).unwrap();
        assert_eq!(pi.arrangement(), vec![1, 0, 2]);
        assert_eq!(partition_sign(&pi, &[1, 1, 0]).unwrap(), -1);
    }

    #[test]
    fn partition_sign_cross_checks_koszul_sign() {
        // exhaustive at n ≤ 5 over a fixed degree pattern
        let degrees = [1i64, 0, -1, 1, 2];
        for n in 1..=5usize {
            for pi in enumerate_partitions(n).unwrap() {
                let via_perm = koszul_sign(&pi.arrangement(), &degrees[..n]).unwrap();
                assert_eq!(partition_sign(&pi, &degrees[..n]).unwrap(), via_perm);
            }
        }
    }

    #[test]
    fn eps_pi_i_examples() {
        // i=0 → ε(π) (empty prefix)
        let pi = Partition::new(3, vec![vec![1], vec![0, 2]]).unwrap();
        assert_eq!(
            eps_pi_i(&pi, 0, &[1, 1, 0]).unwrap(),
            partition_sign(&pi, &[1, 1, 0]).unwrap()
        );
        // the one-block partition of {0..n-1}, i=0 → +1
        let whole = Partition::new(4, vec![vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(eps_pi_i(&whole, 0, &[1, 1, 1, 1]).unwrap(), 1);
        // n=2, degrees (1,0), π = {0}⊔{1}, i=1 → ε(π)=+1, prefix degree 1
        let pi = Partition::new(2, vec![vec![0], vec![1]]).unwrap();
        assert_eq!(eps_pi_i(&pi, 1, &[1, 0]).unwrap(), -1);
        assert!(eps_pi_i(&pi, 2, &[1, 0]).is_err());
    }

    #[test]
    fn hooked_partitions_count() {
        // pairs (π, i) with one block of size n−|π|+1: one per nonempty subset
        for n in 1..=6usize {
            let mut count = 0usize;
            hooked_partitions(n, |pi, i| {
                assert_eq!(pi.block(i).len(), n - pi.num_blocks() + 1);
                count += 1;
                Ok(())
            })
            .unwrap();
            assert_eq!(count, (1usize << n) - 1);
        }
    }

    #[test]
    fn subset_sign_basics() {
        // splitting (x0 odd, x1 odd) by ς={1}: arrangement (1,0) → −1
        assert_eq!(subset_sign(&[1], 2, &[1, 1]).unwrap(), -1);
        assert_eq!(subset_sign(&[0], 2, &[1, 1]).unwrap(), 1);
        assert_eq!(subset_sign(&[], 3, &[1, 1, 1]).unwrap(), 1);
    }
}
