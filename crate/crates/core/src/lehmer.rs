//! Lehmer codes (inversion vectors) for permutations and their extension to
//! partial rankings.
//!
//! For a permutation, `c(x)` counts the smaller-indexed elements ranked below
//! `x`. For a partial ranking a second vector `c'(x)` counts those ranked
//! below or tied with `x`; together the pair identifies the bucket order.
//! Coordinates are independent: `c(x)` ranges over `0..x` whatever the other
//! entries are.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::ranking::{PartialRanking, Permutation, Ranking};

/// A subdiagonal vector: `c[x - 1]` lies in `0..x`. The leading zero is kept.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LehmerCode {
    c: Vec<usize>,
}

impl LehmerCode {
    pub fn new(c: Vec<usize>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((i, &v)) = c.iter().enumerate().find(|&(i, &v)| v > i) {
            return Err(Error::NotSubdiagonal { index: i + 1, value: v });
        }
        Ok(LehmerCode { c })
    }

    pub(crate) fn new_unchecked(c: Vec<usize>) -> Self {
        debug_assert!(c.iter().enumerate().all(|(i, &v)| v <= i));
        LehmerCode { c }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn values(&self) -> &[usize] {
        &self.c
    }

    /// `c(x)` for 1-based `x`.
    pub fn get(&self, x: usize) -> usize {
        self.c[x - 1]
    }
}

/// The code pair of a partial ranking together with `IN_x`, the number of
/// elements `y <= x` sharing the bucket of `x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LehmerPair {
    pub c: LehmerCode,
    pub c_prime: Vec<usize>,
    pub in_count: Vec<usize>,
}

impl LehmerPair {
    /// Checks `c <= c' <= x - 1` and `IN = c' - c + 1`.
    pub fn new(c: LehmerCode, c_prime: Vec<usize>) -> Result<Self> {
        if c_prime.len() != c.n() {
            return Err(Error::SizeMismatch { left: c.n(), right: c_prime.len() });
        }
        let mut in_count = Vec::with_capacity(c.n());
        for (i, (&lo, &hi)) in c.values().iter().zip(&c_prime).enumerate() {
            if hi < lo || hi > i {
                return Err(Error::InconsistentPair { element: i + 1 });
            }
            in_count.push(hi - lo + 1);
        }
        Ok(LehmerPair { c, c_prime, in_count })
    }

    pub fn n(&self) -> usize {
        self.c.n()
    }

    /// The positions among `[x]` that a ranking with this code can give to
    /// `x`, as an inclusive range `(x - c'(x), x - c(x))`.
    pub fn interval(&self, x: usize) -> (usize, usize) {
        (x - self.c_prime[x - 1], x - self.c.get(x))
    }
}

/// Lehmer code of a permutation in O(n log n).
pub fn encode(sigma: &Permutation) -> LehmerCode {
    let n = sigma.n();
    let mut seen = Fenwick::new(n);
    let mut c = Vec::with_capacity(n);
    for (i, &r) in sigma.ranks().iter().enumerate() {
        // earlier elements ranked at or above r
        let above = seen.prefix(r - 1) as usize;
        c.push(i - above);
        seen.add(r - 1, 1);
    }
    LehmerCode::new_unchecked(c)
}

/// Inverse of [`encode`]. The element `x` takes the `(x - c(x))`-th smallest
/// rank still free once elements `x + 1..=n` are placed.
pub fn decode(code: &LehmerCode) -> Permutation {
    let n = code.n();
    let mut free = Fenwick::filled(n);
    let mut ranks = vec![0; n];
    for x in (1..=n).rev() {
        let k = x - code.get(x);
        let r = free.find_kth(k as i64);
        ranks[x - 1] = r + 1;
        free.add(r, -1);
    }
    Permutation::from_ranks_unchecked(ranks)
}

/// Encoder for partial rankings: count `IN`, break ties by element index,
/// encode the tie-broken permutation, then shift by `IN - 1`.
pub fn encode_partial(sigma: &PartialRanking) -> LehmerPair {
    let mut bucket_fill = vec![0usize; sigma.bucket_count()];
    let in_count: Vec<usize> = sigma
        .bucket_of()
        .iter()
        .map(|&b| {
            bucket_fill[b - 1] += 1;
            bucket_fill[b - 1]
        })
        .collect();
    let c = encode(&sigma.tie_broken());
    let c_prime = c.values().iter().zip(&in_count).map(|(&v, &k)| v + k - 1).collect();
    LehmerPair { c, c_prime, in_count }
}

/// Pair of a permutation: `c' = c`, `IN = 1`.
pub fn encode_ranking(ranking: &Ranking) -> LehmerPair {
    match ranking {
        Ranking::Full(p) => {
            let c = encode(p);
            let n = c.n();
            LehmerPair {
                c_prime: c.values().to_vec(),
                c,
                in_count: vec![1; n],
            }
        }
        Ranking::Partial(p) => encode_partial(p),
    }
}

/// Encodes every ranking in parallel; output order follows input order.
pub fn encode_all(rankings: &[Ranking]) -> Vec<LehmerPair> {
    rankings.par_iter().map(encode_ranking).collect()
}

/// Recovers the partial ranking from its code pair.
///
/// Decoding `c` yields the tie-broken permutation. Within a bucket the
/// smallest id comes first and is the only member with `IN = 1`, so walking
/// the tie-broken order opens a new bucket exactly at those elements.
pub fn decode_partial(pair: &LehmerPair) -> Result<PartialRanking> {
    let n = pair.n();
    if pair.c_prime.len() != n || pair.in_count.len() != n {
        return Err(Error::SizeMismatch { left: n, right: pair.c_prime.len() });
    }
    for x in 1..=n {
        let lo = pair.c.get(x);
        let hi = pair.c_prime[x - 1];
        if hi < lo || hi >= x || pair.in_count[x - 1] != hi - lo + 1 {
            return Err(Error::InconsistentPair { element: x });
        }
    }
    let order = decode(&pair.c).order();
    let mut bucket_of = vec![0; n];
    let mut bucket = 0;
    for &x in &order {
        if pair.in_count[x - 1] == 1 || bucket == 0 {
            bucket += 1;
        }
        bucket_of[x - 1] = bucket;
    }
    let sigma = PartialRanking::from_consecutive_unchecked(bucket_of, false);
    let check = encode_partial(&sigma);
    if let Some(x) = (0..n).find(|&i| check.c_prime[i] != pair.c_prime[i] || check.c.values()[i] != pair.c.values()[i]) {
        return Err(Error::InconsistentPair { element: x + 1 });
    }
    Ok(sigma)
}

/// Sum of the code entries, i.e. the Kendall distance to the identity.
pub fn kendall_from_code(code: &LehmerCode) -> u64 {
    code.values().iter().map(|&v| v as u64).sum()
}
