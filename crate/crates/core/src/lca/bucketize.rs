use serde::{Deserialize, Serialize};

use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::ranking::{PartialRanking, Permutation, RankingSample};
use crate::tally::PairwiseTally;

/// How a permutation output is turned into a partial ranking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucketing {
    #[default]
    None,
    Greedy,
    Optimal,
}

impl Bucketing {
    pub fn parse(s: &str) -> Option<Bucketing> {
        match s {
            "none" => Some(Bucketing::None),
            "greedy" => Some(Bucketing::Greedy),
            "optimal" => Some(Bucketing::Optimal),
            _ => None,
        }
    }

    /// Applies the bucketing; `None` returns the permutation with singleton
    /// buckets.
    pub fn apply(self, sigma_hat: &Permutation, sample: &RankingSample, metric: Metric) -> Result<PartialRanking> {
        match self {
            Bucketing::None => Ok(sigma_hat.to_partial()),
            Bucketing::Greedy => greedy_bucketize_with(sigma_hat, sample, metric),
            Bucketing::Optimal => optimal_bucketize_with(sigma_hat, sample, metric),
        }
    }
}

/// Greedy bucketing under the unrated-aware Kemeny distance (plain Kemeny
/// when no voter has an unrated tail).
pub fn greedy_bucketize(sigma_hat: &Permutation, sample: &RankingSample) -> Result<PartialRanking> {
    greedy_bucketize_with(sigma_hat, sample, Metric::KemenyUnrated)
}

/// Optimal bucketing under the unrated-aware Kemeny distance.
pub fn optimal_bucketize(sigma_hat: &Permutation, sample: &RankingSample) -> Result<PartialRanking> {
    optimal_bucketize_with(sigma_hat, sample, Metric::KemenyUnrated)
}

/// Walks `sigma_hat` from the top and lets each element join the bucket of
/// its predecessor when that lowers the distance on the prefix seen so far.
/// Only pairs between the open bucket and the new element change, and an
/// exact tie keeps them apart.
pub fn greedy_bucketize_with(sigma_hat: &Permutation, sample: &RankingSample, metric: Metric) -> Result<PartialRanking> {
    let (tally, order) = prepare(sigma_hat, sample, metric)?;
    let n = order.len();
    let mut labels = vec![0; n];
    let mut bucket = 1;
    let mut start = 0;
    labels[order[0]] = bucket;
    for j in 1..n {
        let e = order[j];
        let (tie, strict) = order[start..j].iter().fold((0u64, 0u64), |(t, s), &b| {
            (t + tally.tie_cost(b, e), s + tally.strict_cost(b, e))
        });
        if tie >= strict {
            bucket += 1;
            start = j;
        }
        labels[e] = bucket;
    }
    Ok(PartialRanking::from_consecutive_unchecked(labels, false))
}

/// The contiguous split of `sigma_hat` into buckets with the smallest
/// cumulative Kemeny distance to the sample.
///
/// Every pair pays its strict cost unless both ends share a bucket, in which
/// case it pays the tie cost instead; so the objective is a constant plus a
/// sum of per-bucket terms, minimized by a prefix dynamic program in
/// O(n^2) after the O(m n^2) tally. Equal costs favour a smaller last bucket.
pub fn optimal_bucketize_with(sigma_hat: &Permutation, sample: &RankingSample, metric: Metric) -> Result<PartialRanking> {
    let (tally, order) = prepare(sigma_hat, sample, metric)?;
    let n = order.len();
    // delta(p, q) for p < q: change from tying order[p] with order[q]
    let delta = |p: usize, q: usize| tally.tie_cost(order[p], order[q]) as i64 - tally.strict_cost(order[p], order[q]) as i64;

    let mut best = vec![i64::MAX; n + 1];
    let mut cut = vec![0usize; n + 1];
    best[0] = 0;
    for j in 1..=n {
        // inner = sum of delta over pairs inside order[i..j]
        let mut inner = 0i64;
        for i in (0..j).rev() {
            inner += (i + 1..j).map(|q| delta(i, q)).sum::<i64>();
            let cost = best[i] + inner;
            if cost < best[j] {
                best[j] = cost;
                cut[j] = i;
            }
        }
    }
    let mut bounds = Vec::new();
    let mut j = n;
    while j > 0 {
        bounds.push((cut[j], j));
        j = cut[j];
    }
    bounds.reverse();
    let mut labels = vec![0; n];
    for (b, &(i, j)) in bounds.iter().enumerate() {
        for &e in &order[i..j] {
            labels[e] = b + 1;
        }
    }
    Ok(PartialRanking::from_consecutive_unchecked(labels, false))
}

fn prepare(sigma_hat: &Permutation, sample: &RankingSample, metric: Metric) -> Result<(PairwiseTally, Vec<usize>)> {
    if sigma_hat.n() != sample.n() {
        return Err(Error::SizeMismatch { left: sigma_hat.n(), right: sample.n() });
    }
    if !matches!(metric, Metric::Kemeny | Metric::KemenyUnrated) {
        return Err(Error::MetricKindMismatch { metric: metric.name() });
    }
    let order = sigma_hat.order().iter().map(|x| x - 1).collect();
    Ok((PairwiseTally::new(sample, metric), order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::cumulative;
    use crate::ranking::Ranking;

    fn perm(ranks: &[usize]) -> Permutation {
        Permutation::from_ranks(ranks.to_vec()).unwrap()
    }

    #[test]
    fn copies_of_a_permutation_stay_singletons() {
        let sigma = perm(&[3, 1, 4, 2]);
        let sample = RankingSample::from_permutations(vec![sigma.clone(); 5]).unwrap();
        for out in [greedy_bucketize(&sigma, &sample).unwrap(), optimal_bucketize(&sigma, &sample).unwrap()] {
            assert_eq!(out, sigma.to_partial());
            let d = cumulative(&sample, &Ranking::Partial(out), Metric::Kemeny).unwrap();
            assert_eq!(d.total.halves(), 0);
        }
    }

    #[test]
    fn copies_of_a_partial_ranking_are_recovered() {
        let sigma0 = PartialRanking::from_labels(&[2, 1, 2, 3, 1]).unwrap();
        let sample = RankingSample::from_partials(vec![sigma0.clone(); 3]).unwrap();
        let hat = sigma0.tie_broken();
        assert_eq!(greedy_bucketize(&hat, &sample).unwrap(), sigma0);
        assert_eq!(optimal_bucketize(&hat, &sample).unwrap(), sigma0);
    }

    #[test]
    fn equal_costs_do_not_merge() {
        // one voter each way: tying costs 1/2 + 1/2, keeping order costs 1
        let sample = RankingSample::from_permutations(vec![perm(&[1, 2]), perm(&[2, 1])]).unwrap();
        let hat = perm(&[1, 2]);
        assert!(greedy_bucketize(&hat, &sample).unwrap().is_permutation());
        assert!(optimal_bucketize(&hat, &sample).unwrap().is_permutation());
    }

    #[test]
    fn rejects_other_metrics_and_sizes() {
        let sample = RankingSample::from_permutations(vec![perm(&[1, 2])]).unwrap();
        assert!(matches!(
            greedy_bucketize_with(&perm(&[1, 2]), &sample, Metric::Footrule),
            Err(Error::MetricKindMismatch { .. })
        ));
        assert!(matches!(
            optimal_bucketize(&perm(&[1, 2, 3]), &sample),
            Err(Error::SizeMismatch { .. })
        ));
    }
}
