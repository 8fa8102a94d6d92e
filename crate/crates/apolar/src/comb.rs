//! Combinatorial indexing: binomial tables, colex ranking of strictly
//! increasing sequences, and Fibonacci/Lucas numbers.
//!
//! Blocks of engine state vectors are addressed by the colex rank of a
//! strictly increasing sequence `a_1 < ... < a_k` of 1-based values,
//!
//! ```text
//! rank(a) = sum_i C(a_i - 1, i)
//! ```
//!
//! which is independent of the ambient universe: sequences over `[m-1]`
//! occupy the first `C(m-1, k)` ranks of sequences over `[m]`. The straight-
//! ening step relies on that embedding.

use num_bigint::BigInt;

/// Pascal triangle of `C(n, k)` for `n <= max_n`, stored as `u64`.
#[derive(Debug, Clone)]
pub struct Binomials {
    rows: Vec<Vec<u64>>,
}

impl Binomials {
    /// Table up to `C(max_n, _)`. Values must fit `u64`; `max_n <= 64` does.
    pub fn new(max_n: usize) -> Binomials {
        assert!(max_n <= 64, "binomial table limited to n <= 64");
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![1u64; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        Binomials { rows }
    }

    /// `C(n, k)`, zero outside the triangle.
    pub fn c(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.rows[n][k]
        }
    }
}

/// Colex rank of a strictly increasing sequence of 1-based values.
pub fn colex_rank(seq: &[usize], binom: &Binomials) -> usize {
    seq.iter()
        .enumerate()
        .map(|(i, &v)| binom.c(v - 1, i + 1) as usize)
        .sum()
}

/// Inverse of [`colex_rank`] for sequences of length `k` over `[m]`.
pub fn colex_unrank(mut rank: usize, k: usize, m: usize, binom: &Binomials) -> Vec<usize> {
    let mut seq = vec![0usize; k];
    for i in (1..=k).rev() {
        let mut v = m;
        while v >= i && binom.c(v - 1, i) as usize > rank {
            v -= 1;
        }
        debug_assert!(v >= i, "rank out of range");
        seq[i - 1] = v;
        rank -= binom.c(v - 1, i) as usize;
    }
    debug_assert_eq!(rank, 0);
    seq
}

/// All strictly increasing length-`k` sequences over `[m]`, in colex order.
pub fn increasing_seqs(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(m: usize, k: usize, next: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        // colex order: vary later positions slowest, so recurse on the
        // smallest position first
        for v in next..=m {
            cur.push(v);
            rec(m, k, v + 1, cur, out);
            cur.pop();
        }
    }
    if k <= m {
        rec(m, k, 1, &mut cur, &mut out);
    }
    out.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    out
}

/// Fibonacci number with `F(1) = F(2) = 1`.
pub fn fibonacci(n: u64) -> BigInt {
    let (mut a, mut b) = (BigInt::from(0), BigInt::from(1));
    for _ in 0..n {
        let next = &a + &b;
        a = b;
        b = next;
    }
    a
}

/// Lucas number with `L(0) = 2, L(1) = 1`.
pub fn lucas(n: u64) -> BigInt {
    let (mut a, mut b) = (BigInt::from(2), BigInt::from(1));
    for _ in 0..n {
        let next = &a + &b;
        a = b;
        b = next;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_binomials() {
        let b = Binomials::new(10);
        assert_eq!(b.c(0, 0), 1);
        assert_eq!(b.c(4, 2), 6);
        assert_eq!(b.c(10, 5), 252);
        assert_eq!(b.c(3, 7), 0);
    }

    #[test]
    fn binomials_fit_u64_at_table_limit() {
        let b = Binomials::new(64);
        assert_eq!(b.c(64, 32), 1_832_624_140_942_590_534);
    }

    #[test]
    fn colex_order_matches_rank() {
        let b = Binomials::new(12);
        for m in 0..=8 {
            for k in 0..=m {
                let seqs = increasing_seqs(m, k);
                assert_eq!(seqs.len() as u64, b.c(m, k));
                for (r, s) in seqs.iter().enumerate() {
                    assert_eq!(colex_rank(s, &b), r);
                    assert_eq!(colex_unrank(r, k, m, &b), s.clone());
                }
            }
        }
    }

    #[test]
    fn universe_embedding_is_rank_preserving() {
        let b = Binomials::new(12);
        // sequences over [m-1] keep their rank inside [m]
        for s in increasing_seqs(5, 3) {
            let r = colex_rank(&s, &b);
            assert_eq!(colex_unrank(r, 3, 6, &b), s);
        }
    }

    proptest! {
        #[test]
        fn rank_unrank_round_trip(m in 1usize..12, k in 0usize..6) {
            let k = k.min(m);
            let b = Binomials::new(16);
            let count = b.c(m, k) as usize;
            for r in 0..count {
                let s = colex_unrank(r, k, m, &b);
                prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(s.iter().all(|&v| v >= 1 && v <= m));
                prop_assert_eq!(colex_rank(&s, &b), r);
            }
        }
    }

    #[test]
    fn fibonacci_and_lucas() {
        let f: Vec<u64> = (0..11).map(|n| fibonacci(n).try_into().unwrap()).collect();
        assert_eq!(f, [0, 1, 1, 2, 3, 5, 8, 13, 21, 34, 55]);
        let l: Vec<u64> = (0..8).map(|n| lucas(n).try_into().unwrap()).collect();
        assert_eq!(l, [2, 1, 3, 4, 7, 11, 18, 29]);
    }
}
