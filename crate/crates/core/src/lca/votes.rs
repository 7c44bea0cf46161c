use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::lehmer::LehmerPair;

/// How the votes of one coordinate are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Mode,
    Median,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Mode => "mode",
            Rule::Median => "median",
        }
    }
}

/// Votes `V_x(y)` for placing element `x` at position `y` among `[x]`.
///
/// Voter `k` covers the interval `[x - c'_k(x), x - c_k(x)]`. Under the mode
/// rule it gives 1 to each covered position; under the median rule it
/// spreads a total of 1 evenly. Counts are kept per interval width so every
/// value is available exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteTable {
    x: usize,
    m: usize,
    rule: Rule,
    // width -> number of voters with that width covering each position
    layers: BTreeMap<usize, Vec<u64>>,
}

impl VoteTable {
    /// Builds the table in O(m + x · widths) with one difference array per
    /// distinct interval width.
    pub(crate) fn from_pairs(pairs: &[LehmerPair], x: usize, rule: Rule) -> Self {
        let mut diffs: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
        for pair in pairs {
            let (lo, hi) = pair.interval(x);
            let diff = diffs.entry(hi - lo + 1).or_insert_with(|| vec![0; x + 1]);
            diff[lo - 1] += 1;
            diff[hi] -= 1;
        }
        let layers = diffs
            .into_iter()
            .map(|(w, diff)| {
                let mut run = 0i64;
                let counts = diff[..x]
                    .iter()
                    .map(|d| {
                        run += d;
                        run as u64
                    })
                    .collect();
                (w, counts)
            })
            .collect();
        VoteTable { x, m: pairs.len(), rule, layers }
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    /// Exact `V_x(y)` for `y` in `1..=x`.
    pub fn value(&self, y: usize) -> BigRational {
        self.layers
            .iter()
            .map(|(&w, counts)| self.weighted(counts[y - 1], w))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// All values, indexed by `y - 1`.
    pub fn values(&self) -> Vec<BigRational> {
        (1..=self.x).map(|y| self.value(y)).collect()
    }

    pub fn values_f64(&self) -> Vec<f64> {
        (0..self.x)
            .map(|i| {
                self.layers
                    .iter()
                    .map(|(&w, counts)| match self.rule {
                        Rule::Mode => counts[i] as f64,
                        Rule::Median => counts[i] as f64 / w as f64,
                    })
                    .sum()
            })
            .collect()
    }

    /// Sum over all positions; equals `m` under the median rule.
    pub fn total(&self) -> BigRational {
        self.values().into_iter().fold(BigRational::zero(), |a, b| a + b)
    }

    fn weighted(&self, count: u64, width: usize) -> BigRational {
        match self.rule {
            Rule::Mode => BigRational::from_integer(BigInt::from(count)),
            Rule::Median => BigRational::new(BigInt::from(count), BigInt::from(width)),
        }
    }

    /// The winning position `y`.
    ///
    /// Mode: the largest vote, ties going to the largest `y` (smallest code
    /// value). Median: the least `y` whose cumulative vote reaches `m / 2`.
    pub fn choose(&self) -> usize {
        match self.rule {
            Rule::Mode => {
                let mut best = (0u64, 1usize);
                for y in 1..=self.x {
                    let v: u64 = self.layers.values().map(|c| c[y - 1]).sum();
                    if v >= best.0 {
                        best = (v, y);
                    }
                }
                best.1
            }
            Rule::Median => self.median_position(),
        }
    }

    fn median_position(&self) -> usize {
        let half = self.m as f64 / 2.0;
        let tolerance = 1e-9 * self.m.max(1) as f64;
        let mut prefix: Vec<u64> = vec![0; self.layers.len()];
        let mut cum = 0.0;
        for y in 1..=self.x {
            for (p, (&w, counts)) in prefix.iter_mut().zip(&self.layers) {
                *p += counts[y - 1];
                cum += counts[y - 1] as f64 / w as f64;
            }
            if cum >= half + tolerance {
                return y;
            }
            if cum > half - tolerance && self.exact_reaches_half(&prefix) {
                return y;
            }
        }
        self.x
    }

    fn exact_reaches_half(&self, prefix: &[u64]) -> bool {
        let cum = prefix
            .iter()
            .zip(self.layers.keys())
            .map(|(&p, &w)| BigRational::new(BigInt::from(p), BigInt::from(w)))
            .fold(BigRational::zero(), |a, b| a + b);
        cum * BigInt::from(2) >= BigRational::from_integer(BigInt::from(self.m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lehmer::encode_ranking;
    use crate::ranking::{PartialRanking, Permutation, Ranking};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn worked_partial_voter() {
        let sigma = Ranking::Partial(PartialRanking::from_labels(&[1, 1, 2, 2, 3, 1, 2, 3, 3]).unwrap());
        let pair = encode_ranking(&sigma);
        let table = VoteTable::from_pairs(&[pair], 6, Rule::Median);
        let expected: Vec<BigRational> = [1, 1, 1, 0, 0, 0].iter().map(|&k| rat(k, 3)).collect();
        assert_eq!(table.values(), expected);
        assert_eq!(table.total(), rat(1, 1));
    }

    #[test]
    fn permutation_voter_is_a_point_mass() {
        let sigma = Ranking::Full(Permutation::from_ranks(vec![2, 1, 4, 5, 7, 3, 6, 9, 8]).unwrap());
        let pair = encode_ranking(&sigma);
        for rule in [Rule::Mode, Rule::Median] {
            for x in 1..=9 {
                let table = VoteTable::from_pairs(std::slice::from_ref(&pair), x, rule);
                let y = x - pair.c.get(x);
                for (i, v) in table.values().iter().enumerate() {
                    assert_eq!(*v, rat((i + 1 == y) as i64, 1));
                }
                assert_eq!(table.choose(), y);
            }
        }
    }

    #[test]
    fn identical_voters_scale() {
        let sigma = Ranking::Partial(PartialRanking::from_labels(&[2, 1, 1, 3, 2]).unwrap());
        let pair = encode_ranking(&sigma);
        let copies = vec![pair.clone(); 7];
        for rule in [Rule::Mode, Rule::Median] {
            for x in 1..=5 {
                let one = VoteTable::from_pairs(std::slice::from_ref(&pair), x, rule);
                let many = VoteTable::from_pairs(&copies, x, rule);
                let scaled: Vec<BigRational> = one.values().into_iter().map(|v| v * BigInt::from(7)).collect();
                assert_eq!(many.values(), scaled);
            }
        }
    }

    #[test]
    fn median_takes_the_least_position_at_exactly_half() {
        // two voters: positions 1 and 3 among [3]
        let a = encode_ranking(&Ranking::Full(Permutation::from_ranks(vec![2, 3, 1]).unwrap()));
        let b = encode_ranking(&Ranking::Full(Permutation::from_ranks(vec![1, 2, 3]).unwrap()));
        assert_eq!(a.interval(3), (1, 1));
        assert_eq!(b.interval(3), (3, 3));
        let table = VoteTable::from_pairs(&[a.clone(), b.clone()], 3, Rule::Median);
        assert_eq!(table.choose(), 1);
        // mode tie goes to the later position
        let table = VoteTable::from_pairs(&[a, b], 3, Rule::Mode);
        assert_eq!(table.choose(), 3);
    }

    #[test]
    fn median_exact_boundary_with_thirds() {
        // three voters each spreading over three positions, plus nothing else:
        // cumulative mass at y is y, so m / 2 = 1.5 is first reached at y = 2
        let sigma = Ranking::Partial(PartialRanking::from_labels(&[1, 1, 1]).unwrap());
        let pairs = vec![encode_ranking(&sigma); 3];
        let table = VoteTable::from_pairs(&pairs, 3, Rule::Median);
        assert_eq!(table.choose(), 2);
        assert_eq!(table.total(), rat(3, 1));
    }
}
