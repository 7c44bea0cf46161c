//! Pairwise preference counts over a sample, in half units.

use rayon::prelude::*;

use crate::distance::Metric;
use crate::ranking::{Ranking, RankingSample};

/// For every ordered pair `(a, b)`:
/// - `strict_cost(a, b)`: Kemeny cost, summed over the sample, of an output
///   ranking `a` strictly above `b`;
/// - `tie_cost(a, b)`: the cost of an output tying them.
///
/// Both are stored in halves so that sums stay exact.
#[derive(Clone, Debug)]
pub struct PairwiseTally {
    n: usize,
    m: usize,
    // above[a * n + b]: voters ranking a strictly above b
    above: Vec<u32>,
    // counted ties between a and b under the chosen metric
    ties: Vec<u32>,
}

impl PairwiseTally {
    /// Counts every pair for every voter; O(m n^2). Ties held by a voter's
    /// unrated tail are not counted under [`Metric::KemenyUnrated`].
    pub fn new(sample: &RankingSample, metric: Metric) -> Self {
        let n = sample.n();
        let labels: Vec<(&[usize], usize)> = sample
            .rankings()
            .iter()
            .map(|r| (r.labels(), unrated_label(r, metric)))
            .collect();
        let rows: Vec<(Vec<u32>, Vec<u32>)> = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut above = vec![0u32; n];
                let mut ties = vec![0u32; n];
                for &(lab, unrated) in &labels {
                    let la = lab[a];
                    for b in 0..n {
                        let lb = lab[b];
                        if la < lb {
                            above[b] += 1;
                        } else if la == lb && a != b && la != unrated {
                            ties[b] += 1;
                        }
                    }
                }
                (above, ties)
            })
            .collect();
        let mut above = Vec::with_capacity(n * n);
        let mut ties = Vec::with_capacity(n * n);
        for (a, t) in rows {
            above.extend(a);
            ties.extend(t);
        }
        PairwiseTally { n, m: sample.m(), above, ties }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Voters ranking `a` strictly above `b` (0-based ids).
    pub fn above(&self, a: usize, b: usize) -> u64 {
        self.above[a * self.n + b] as u64
    }

    /// Voters tying `a` and `b` whose tie is counted by the metric.
    pub fn ties(&self, a: usize, b: usize) -> u64 {
        self.ties[a * self.n + b] as u64
    }

    /// Halves paid for placing `a` strictly above `b`.
    pub fn strict_cost(&self, a: usize, b: usize) -> u64 {
        2 * self.above(b, a) + self.ties(a, b)
    }

    /// Halves paid for tying `a` with `b`.
    pub fn tie_cost(&self, a: usize, b: usize) -> u64 {
        self.above(a, b) + self.above(b, a)
    }

    /// True when `a` wins the majority comparison against `b`, a voter tie
    /// counting one half each way. Exact balance goes to the smaller id.
    pub fn beats(&self, a: usize, b: usize) -> bool {
        let fa = 2 * self.above(a, b) + self.ties_all(a, b);
        let fb = 2 * self.above(b, a) + self.ties_all(a, b);
        fa > fb || (fa == fb && a < b)
    }

    fn ties_all(&self, a: usize, b: usize) -> u64 {
        self.m as u64 - self.above(a, b) - self.above(b, a)
    }

    /// Halves of the cumulative Kemeny distance from the sample to the
    /// permutation listing elements (0-based) in `order`.
    pub fn permutation_cost(&self, order: &[usize]) -> u64 {
        let mut total = 0;
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                total += self.strict_cost(a, b);
            }
        }
        total
    }
}

// Label of the bucket whose ties are ignored, or usize::MAX when none is.
fn unrated_label(r: &Ranking, metric: Metric) -> usize {
    match (metric, r) {
        (Metric::KemenyUnrated, Ranking::Partial(p)) if p.has_unrated_tail() => p.bucket_count(),
        _ => usize::MAX,
    }
}
