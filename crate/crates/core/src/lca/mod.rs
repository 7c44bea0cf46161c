//! Aggregation by coordinate-wise median or mode of Lehmer codes.
//!
//! Each coordinate `c(x)` only depends on how `x` sits among `[x]`, so the
//! coordinates are aggregated independently and decoded once. For partial
//! rankings a voter is uncertain about `c(x)` within `[c(x), c'(x)]` and
//! spreads its vote over that interval.

mod bucketize;
mod votes;

use rayon::prelude::*;

pub use bucketize::{
    greedy_bucketize, greedy_bucketize_with, optimal_bucketize, optimal_bucketize_with, Bucketing,
};
pub use votes::{Rule, VoteTable};

use crate::distance::{cumulative, Cumulative, Metric};
use crate::error::{Error, Result};
use crate::lehmer::{decode, encode_all, LehmerCode, LehmerPair};
use crate::ranking::{PartialRanking, Permutation, Ranking, RankingSample};

/// Output of an aggregation run.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub sigma_hat: Permutation,
    pub c_hat: LehmerCode,
    pub rule: Rule,
    pub bucketed: Option<PartialRanking>,
    /// Cumulative distance from the sample to `sigma_hat`: Kendall for
    /// permutation samples, unrated-aware Kemeny otherwise.
    pub objective: Cumulative,
    pub metric: Metric,
}

impl AggregateResult {
    /// Attaches a bucketing of `sigma_hat`.
    pub fn bucketize(mut self, how: Bucketing, sample: &RankingSample) -> Result<Self> {
        self.bucketed = match how {
            Bucketing::None => None,
            _ => Some(how.apply(&self.sigma_hat, sample, Metric::KemenyUnrated)?),
        };
        Ok(self)
    }

    /// The bucketed output if present, `sigma_hat` otherwise.
    pub fn ranking(&self) -> Ranking {
        match &self.bucketed {
            Some(p) => Ranking::Partial(p.clone()),
            None => Ranking::Full(self.sigma_hat.clone()),
        }
    }
}

/// Aggregates permutations: median or mode of each code coordinate.
pub fn aggregate_permutations(sample: &RankingSample, rule: Rule) -> Result<AggregateResult> {
    sample.permutations()?;
    aggregate_partial(sample, rule)
}

/// Aggregates any mix of permutations and partial rankings through vote
/// tables; permutations vote for a single position.
pub fn aggregate_partial(sample: &RankingSample, rule: Rule) -> Result<AggregateResult> {
    if sample.m() == 0 {
        return Err(Error::EmptySample);
    }
    let pairs = encode_all(sample.rankings());
    let c_hat = aggregate_codes(&pairs, sample.n(), rule);
    let sigma_hat = decode(&c_hat);
    let metric = if sample.all_full() { Metric::Kendall } else { Metric::KemenyUnrated };
    let objective = cumulative(sample, &Ranking::Full(sigma_hat.clone()), metric)?;
    Ok(AggregateResult {
        sigma_hat,
        c_hat,
        rule,
        bucketed: None,
        objective,
        metric,
    })
}

/// The aggregated code, one independent coordinate per element.
pub fn aggregate_codes(pairs: &[LehmerPair], n: usize, rule: Rule) -> LehmerCode {
    let c = (1..=n)
        .into_par_iter()
        .map(|x| x - VoteTable::from_pairs(pairs, x, rule).choose())
        .collect();
    LehmerCode::new_unchecked(c)
}

/// Vote table of element `x` over the sample.
pub fn vote_table(sample: &RankingSample, x: usize, rule: Rule) -> Result<VoteTable> {
    if x == 0 || x > sample.n() {
        return Err(Error::ElementOutOfRange { element: x, n: sample.n() });
    }
    Ok(VoteTable::from_pairs(&encode_all(sample.rankings()), x, rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lehmer::encode;

    fn perm(ranks: &[usize]) -> Permutation {
        Permutation::from_ranks(ranks.to_vec()).unwrap()
    }

    #[test]
    fn single_voter_is_returned() {
        let sigma = perm(&[2, 1, 4, 5, 7, 3, 6, 9, 8]);
        let sample = RankingSample::from_permutations(vec![sigma.clone()]).unwrap();
        for rule in [Rule::Mode, Rule::Median] {
            let out = aggregate_permutations(&sample, rule).unwrap();
            assert_eq!(out.sigma_hat, sigma);
            assert_eq!(out.objective.total.halves(), 0);
        }
    }

    #[test]
    fn three_voter_mode() {
        let sample = RankingSample::from_permutations(vec![perm(&[1, 2, 3]), perm(&[1, 2, 3]), perm(&[2, 1, 3])]).unwrap();
        let out = aggregate_permutations(&sample, Rule::Mode).unwrap();
        assert_eq!(out.c_hat.values(), &[0, 0, 0]);
        assert_eq!(out.sigma_hat, perm(&[1, 2, 3]));
        assert_eq!(out.sigma_hat, decode(&out.c_hat));
    }

    #[test]
    fn rejects_mixed_kinds_for_permutation_entry() {
        let sample = RankingSample::new(vec![
            Ranking::Full(perm(&[1, 2])),
            Ranking::Partial(PartialRanking::from_labels(&[1, 1]).unwrap()),
        ])
        .unwrap();
        assert!(matches!(aggregate_permutations(&sample, Rule::Median), Err(Error::MixedKinds)));
        let out = aggregate_partial(&sample, Rule::Median).unwrap();
        assert_eq!(out.metric, Metric::KemenyUnrated);
    }

    #[test]
    fn partial_copies_land_in_the_tie_breaks() {
        let sigma0 = PartialRanking::from_labels(&[1, 1, 2, 2, 3, 1, 2, 3, 3]).unwrap();
        let sample = RankingSample::from_partials(vec![sigma0.clone(); 4]).unwrap();
        let out = aggregate_partial(&sample, Rule::Median).unwrap();
        // consistent with sigma0: never reverses a strict pair
        for x in 1..=9 {
            for y in 1..=9 {
                if sigma0.bucket(x) < sigma0.bucket(y) {
                    assert!(out.sigma_hat.rank(x) < out.sigma_hat.rank(y));
                }
            }
        }
        let bucketed = out.bucketize(Bucketing::Optimal, &sample).unwrap();
        assert_eq!(bucketed.bucketed.as_ref(), Some(&sigma0));
    }

    #[test]
    fn insertion_view() {
        // decoding places t at position t - c(t) among [t]
        let sample = RankingSample::from_permutations(vec![perm(&[3, 1, 2, 5, 4]), perm(&[1, 3, 2, 4, 5]), perm(&[2, 3, 1, 5, 4])]).unwrap();
        let out = aggregate_permutations(&sample, Rule::Median).unwrap();
        for t in 1..=5 {
            let prefix: Vec<usize> = (1..=t).collect();
            let proj = out.sigma_hat.project(&prefix).unwrap();
            assert_eq!(proj.ranking.rank(t), t - out.c_hat.get(t));
        }
        assert_eq!(encode(&out.sigma_hat), out.c_hat);
    }
}
