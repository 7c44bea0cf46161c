//! Reference aggregators to compare against.
//!
//! Partial members are handled through the pairwise tally (ties count one
//! half each way) or through positions, and the candidate-based methods use
//! tie-broken members.

use pathfinding::kuhn_munkres::kuhn_munkres_min;
use pathfinding::matrix::Matrix;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{positions, Metric};
use crate::error::{Error, Result};
use crate::ranking::{Permutation, Ranking, RankingSample};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tally::PairwiseTally;

/// Number of independent runs used when none is given.
pub const DEFAULT_RESTARTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PickStrategy {
    /// The member with the smallest cumulative distance, lowest index on ties.
    Best,
    /// A uniformly chosen member.
    Random(u64),
}

/// Returns a member of the sample (tie-broken if partial).
pub fn pick_a_perm(sample: &RankingSample, strategy: PickStrategy) -> Result<Permutation> {
    let candidates = sample.rankings();
    if candidates.is_empty() {
        return Err(Error::EmptySample);
    }
    let index = match strategy {
        PickStrategy::Random(seed) => rng_from_seed(seed).gen_range(0..candidates.len()),
        PickStrategy::Best => {
            let tally = tally(sample);
            best_index(candidates.par_iter().map(|r| tally.permutation_cost(&order0(&r.tie_broken()))).collect())
        }
    };
    Ok(candidates[index].tie_broken().into_owned())
}

/// Randomized pivoting on the majority tournament, best of `restarts` runs.
///
/// Run `r` uses the stream `derive_seed(seed, r)`, so adding restarts never
/// changes the earlier runs.
pub fn fas_pivot(sample: &RankingSample, seed: u64, restarts: usize) -> Result<Permutation> {
    let tally = tally(sample);
    Ok(best_of_runs(&tally, seed, restarts, |rng| {
        let mut items: Vec<usize> = (0..tally.n()).collect();
        let mut out = Vec::with_capacity(items.len());
        pivot_sort(&tally, &mut items, rng, &mut out);
        out
    }))
}

fn pivot_sort(tally: &PairwiseTally, items: &mut Vec<usize>, rng: &mut crate::rng::Rng, out: &mut Vec<usize>) {
    if items.len() <= 1 {
        out.append(items);
        return;
    }
    let pivot = items[rng.gen_range(0..items.len())];
    let (mut above, mut below): (Vec<usize>, Vec<usize>) = items
        .iter()
        .filter(|&&v| v != pivot)
        .partition(|&&v| tally.beats(v, pivot));
    pivot_sort(tally, &mut above, rng, out);
    out.push(pivot);
    pivot_sort(tally, &mut below, rng, out);
}

/// Insertion in a random order, best of `restarts` runs.
///
/// Each new element goes directly above the first already-placed element it
/// beats, where `t` beats `x` when fewer than half of the voters rank `x`
/// above `t` (a voter tie counting one half); if it beats none it goes last.
pub fn insertion_comp(sample: &RankingSample, seed: u64, restarts: usize) -> Result<Permutation> {
    let tally = tally(sample);
    let m = tally.m() as u64;
    Ok(best_of_runs(&tally, seed, restarts, |rng| {
        let mut insert_order: Vec<usize> = (0..tally.n()).collect();
        insert_order.shuffle(rng);
        let mut list: Vec<usize> = Vec::with_capacity(insert_order.len());
        for t in insert_order {
            let slot = list
                .iter()
                .position(|&x| {
                    let ties = m - tally.above(x, t) - tally.above(t, x);
                    2 * tally.above(x, t) + ties < m
                })
                .unwrap_or(list.len());
            list.insert(slot, t);
        }
        list
    }))
}

/// Sorts by mean position, smaller id first on ties.
pub fn borda(sample: &RankingSample) -> Result<Permutation> {
    let sums = position_sums(sample)?;
    let mut order: Vec<usize> = (0..sample.n()).collect();
    order.sort_by_key(|&x| (sums[x], x));
    Permutation::from_order(&order.iter().map(|x| x + 1).collect::<Vec<_>>())
}

/// The permutation minimizing the summed footrule distance to the sample,
/// found as a minimum-cost assignment of elements to ranks. Costs are kept
/// in halves so the assignment is exact.
pub fn spearman_optimal(sample: &RankingSample) -> Result<Permutation> {
    if sample.m() == 0 {
        return Err(Error::EmptySample);
    }
    let n = sample.n();
    let halves: Vec<Vec<i64>> = sample
        .rankings()
        .iter()
        .map(|r| ranking_positions(r).into_iter().map(|p| p as i64).collect())
        .collect();
    let rows: Vec<Vec<i64>> = (0..n)
        .into_par_iter()
        .map(|x| {
            (1..=n as i64)
                .map(|p| halves.iter().map(|h| (h[x] - 2 * p).abs()).sum())
                .collect()
        })
        .collect();
    let weights = Matrix::from_rows(rows).map_err(|e| Error::Format(e.to_string()))?;
    let (_, assignment) = kuhn_munkres_min(&weights);
    Permutation::from_ranks(assignment.into_iter().map(|p| p + 1).collect())
}

/// Per-element sum over voters of positions, in halves.
fn position_sums(sample: &RankingSample) -> Result<Vec<u64>> {
    if sample.m() == 0 {
        return Err(Error::EmptySample);
    }
    let mut sums = vec![0u64; sample.n()];
    for r in sample.rankings() {
        for (s, p) in sums.iter_mut().zip(ranking_positions(r)) {
            *s += p;
        }
    }
    Ok(sums)
}

fn ranking_positions(r: &Ranking) -> Vec<u64> {
    match r {
        Ranking::Full(p) => p.ranks().iter().map(|&v| 2 * v as u64).collect(),
        Ranking::Partial(p) => positions(p).into_iter().map(|h| h.halves()).collect(),
    }
}

fn tally(sample: &RankingSample) -> PairwiseTally {
    PairwiseTally::new(sample, Metric::KemenyUnrated)
}

fn order0(p: &Permutation) -> Vec<usize> {
    p.order().into_iter().map(|x| x - 1).collect()
}

fn best_index(costs: Vec<u64>) -> usize {
    costs
        .iter()
        .enumerate()
        .min_by_key(|&(i, &c)| (c, i))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn best_of_runs<F>(tally: &PairwiseTally, seed: u64, restarts: usize, run: F) -> Permutation
where
    F: Fn(&mut crate::rng::Rng) -> Vec<usize> + Sync,
{
    let runs: Vec<Vec<usize>> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| run(&mut rng_from_seed(derive_seed(seed, r))))
        .collect();
    let best = best_index(runs.iter().map(|o| tally.permutation_cost(o)).collect());
    let order: Vec<usize> = runs[best].iter().map(|x| x + 1).collect();
    Permutation::from_order(&order).expect("runs produce every element once")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(ranks: &[usize]) -> Permutation {
        Permutation::from_ranks(ranks.to_vec()).unwrap()
    }

    fn sample(perms: &[&[usize]]) -> RankingSample {
        RankingSample::from_permutations(perms.iter().map(|p| perm(p)).collect()).unwrap()
    }

    #[test]
    fn pick_examples() {
        let s = sample(&[&[1, 2, 3], &[2, 1, 3], &[2, 1, 3]]);
        assert_eq!(pick_a_perm(&s, PickStrategy::Best).unwrap(), perm(&[2, 1, 3]));
        let s = sample(&[&[1, 2, 3], &[3, 2, 1]]);
        assert_eq!(pick_a_perm(&s, PickStrategy::Best).unwrap(), perm(&[1, 2, 3]));
        let r = pick_a_perm(&s, PickStrategy::Random(5)).unwrap();
        assert!(r == perm(&[1, 2, 3]) || r == perm(&[3, 2, 1]));
    }

    #[test]
    fn unanimous_inputs_are_returned() {
        let sigma: &[usize] = &[4, 2, 5, 1, 3];
        let s = sample(&[sigma, sigma, sigma]);
        let expected = perm(sigma);
        assert_eq!(fas_pivot(&s, 1, 5).unwrap(), expected);
        assert_eq!(insertion_comp(&s, 1, 5).unwrap(), expected);
        assert_eq!(borda(&s).unwrap(), expected);
        assert_eq!(spearman_optimal(&s).unwrap(), expected);
        assert_eq!(pick_a_perm(&s, PickStrategy::Best).unwrap(), expected);
    }

    #[test]
    fn two_elements_follow_the_majority() {
        let s = sample(&[&[1, 2], &[1, 2], &[2, 1]]);
        assert_eq!(fas_pivot(&s, 3, 1).unwrap(), perm(&[1, 2]));
        assert_eq!(insertion_comp(&s, 3, 1).unwrap(), perm(&[1, 2]));
    }

    #[test]
    fn borda_mean_positions() {
        let s = sample(&[&[1, 2, 3], &[2, 1, 3]]);
        assert_eq!(position_sums(&s).unwrap(), vec![6, 6, 12]);
        assert_eq!(borda(&s).unwrap(), perm(&[1, 2, 3]));
        let tied = RankingSample::from_partials(vec![crate::ranking::PartialRanking::from_labels(&[1, 1, 1]).unwrap(); 2]).unwrap();
        assert_eq!(borda(&tied).unwrap(), Permutation::identity(3));
    }

    #[test]
    fn loser_of_every_comparison_goes_last() {
        // element 3 is ranked last by every voter
        let s = sample(&[&[1, 2, 3], &[2, 1, 3]]);
        for seed in 0..10 {
            assert_eq!(insertion_comp(&s, seed, 1).unwrap().rank(3), 3);
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = sample(&[&[3, 1, 2, 5, 4], &[1, 3, 2, 4, 5], &[2, 3, 1, 5, 4], &[5, 4, 3, 2, 1]]);
        assert_eq!(fas_pivot(&s, 9, 5).unwrap(), fas_pivot(&s, 9, 5).unwrap());
        assert_eq!(insertion_comp(&s, 9, 5).unwrap(), insertion_comp(&s, 9, 5).unwrap());
    }
}
