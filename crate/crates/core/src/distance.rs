//! Distances between rankings and the cumulative objective over a sample.
//!
//! Pairs are unordered: each `{x, y}` contributes at most once. Kemeny-type
//! values are exact half-integers.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::half::HalfInt;
use crate::ranking::{PartialRanking, Permutation, Ranking, RankingSample};

/// Kendall tau distance by inversion counting, O(n log n).
pub fn kendall_tau(pi: &Permutation, sigma: &Permutation) -> Result<u64> {
    check_sizes(pi.n(), sigma.n())?;
    let n = pi.n();
    // walk elements in pi's order; count how many earlier ones sigma puts lower
    let order = pi.order();
    let mut seen = Fenwick::new(n);
    let mut inversions = 0u64;
    for (i, &x) in order.iter().enumerate() {
        let r = sigma.rank(x);
        let above = seen.prefix(r - 1) as u64;
        inversions += i as u64 - above;
        seen.add(r - 1, 1);
    }
    Ok(inversions)
}

/// Kemeny distance: opposite strict orders cost 1, a tie against a strict
/// order costs one half.
pub fn kemeny(pi: &PartialRanking, sigma: &PartialRanking) -> Result<HalfInt> {
    check_sizes(pi.n(), sigma.n())?;
    Ok(pairwise(pi.bucket_of(), sigma.bucket_of(), |_, _| true, |_, _| true))
}

/// Kemeny distance that skips the half penalty when the tied pair lies in the
/// unrated tail of the ranking holding the tie. Equals [`kemeny`] when
/// neither input has an unrated tail.
pub fn kemeny_unrated(pi: &PartialRanking, sigma: &PartialRanking) -> Result<HalfInt> {
    check_sizes(pi.n(), sigma.n())?;
    Ok(pairwise(
        pi.bucket_of(),
        sigma.bucket_of(),
        |x, y| pi.is_rated(x) && pi.is_rated(y),
        |x, y| sigma.is_rated(x) && sigma.is_rated(y),
    ))
}

fn pairwise(
    a: &[usize],
    b: &[usize],
    a_tie_counts: impl Fn(usize, usize) -> bool,
    b_tie_counts: impl Fn(usize, usize) -> bool,
) -> HalfInt {
    let n = a.len();
    let mut halves = 0u64;
    for x in 0..n {
        for y in x + 1..n {
            let oa = a[x].cmp(&a[y]);
            let ob = b[x].cmp(&b[y]);
            halves += match (oa, ob) {
                (Ordering::Equal, Ordering::Equal) => 0,
                (Ordering::Equal, _) => a_tie_counts(x + 1, y + 1) as u64,
                (_, Ordering::Equal) => b_tie_counts(x + 1, y + 1) as u64,
                (p, q) if p != q => 2,
                _ => 0,
            };
        }
    }
    HalfInt::from_halves(halves)
}

/// Average rank a bucket's members would share: the number of elements in
/// higher buckets plus half of the bucket size plus one half.
pub fn position(sigma: &PartialRanking, x: usize) -> Result<HalfInt> {
    if x == 0 || x > sigma.n() {
        return Err(Error::ElementOutOfRange { element: x, n: sigma.n() });
    }
    Ok(positions(sigma)[x - 1])
}

/// Positions of every element.
pub fn positions(sigma: &PartialRanking) -> Vec<HalfInt> {
    let bounds = sigma.bucket_bounds();
    sigma
        .bucket_of()
        .iter()
        .map(|&b| {
            let (l, r) = bounds[b - 1];
            HalfInt::from_halves((l + r) as u64)
        })
        .collect()
}

fn positions_of(r: &Ranking) -> Vec<HalfInt> {
    match r {
        Ranking::Full(p) => p.ranks().iter().map(|&v| HalfInt::from_int(v as u64)).collect(),
        Ranking::Partial(p) => positions(p),
    }
}

/// Spearman footrule over positions; for permutations this is the sum of
/// absolute rank differences.
pub fn spearman_footrule(pi: &Ranking, sigma: &Ranking) -> Result<HalfInt> {
    check_sizes(pi.n(), sigma.n())?;
    let pa = positions_of(pi);
    let pb = positions_of(sigma);
    Ok(HalfInt::from_halves(
        pa.iter().zip(&pb).map(|(a, b)| a.halves().abs_diff(b.halves())).sum(),
    ))
}

/// Distance used for cumulative objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Kendall,
    Kemeny,
    KemenyUnrated,
    Footrule,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Kendall => "kendall",
            Metric::Kemeny => "kemeny",
            Metric::KemenyUnrated => "kemeny-unrated",
            Metric::Footrule => "footrule",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s {
            "kendall" => Some(Metric::Kendall),
            "kemeny" => Some(Metric::Kemeny),
            "kemeny-unrated" | "kemeny_unrated" => Some(Metric::KemenyUnrated),
            "footrule" | "spearman" => Some(Metric::Footrule),
            _ => None,
        }
    }
}

/// Distance between two rankings under `metric`.
pub fn distance(metric: Metric, a: &Ranking, b: &Ranking) -> Result<HalfInt> {
    match metric {
        Metric::Kendall => match (a, b) {
            (Ranking::Full(x), Ranking::Full(y)) => kendall_tau(x, y).map(HalfInt::from_int),
            _ => Err(Error::MetricKindMismatch { metric: "kendall" }),
        },
        Metric::Kemeny => kemeny(&a.as_partial(), &b.as_partial()),
        Metric::KemenyUnrated => kemeny_unrated(&a.as_partial(), &b.as_partial()),
        Metric::Footrule => spearman_footrule(a, b),
    }
}

/// `D(Σ, σ)` together with its per-ranking average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cumulative {
    pub total: HalfInt,
    pub average: f64,
}

/// Sum of distances from every member of the sample to `sigma`. The sum is
/// exact, so it does not depend on how the parallel reduction is split.
pub fn cumulative(sample: &RankingSample, sigma: &Ranking, metric: Metric) -> Result<Cumulative> {
    check_sizes(sample.n(), sigma.n())?;
    if metric == Metric::Kendall && !(sample.all_full() && sigma.as_permutation().is_some()) {
        return Err(Error::MetricKindMismatch { metric: "kendall" });
    }
    let total = sample
        .rankings()
        .par_iter()
        .map(|r| distance(metric, r, sigma))
        .try_reduce(|| HalfInt::ZERO, |a, b| Ok(a + b))?;
    Ok(Cumulative {
        total,
        average: total.to_f64() / sample.m() as f64,
    })
}

fn check_sizes(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::SizeMismatch { left, right });
    }
    Ok(())
}
