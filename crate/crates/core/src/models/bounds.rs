//! Exact checks of the position and vote bounds by enumeration.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mallows::projected_rank;
use super::{exact_gmm_pmf, exact_mallows_pmf, is_nonnegative, ratio_to_f64, ExactSeries, GmmParams, MallowsParams};
use crate::error::{Error, Result};
use crate::ranking::normalize_subset;

/// Largest `n` for the vote-bound check.
const VOTE_BOUND_MAX_N: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The dispersion is outside the range the bound is stated for; values
    /// are still reported.
    RegimeViolated,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::RegimeViolated => "REGIME-VIOLATED",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    /// Position the ratio moves away from.
    pub j: usize,
    pub ratio: f64,
    pub within: bool,
}

/// Ratios of adjacent position probabilities of `u` within `subset`, moving
/// away from its centroid position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionRatioReport {
    pub u: usize,
    pub subset: Vec<usize>,
    pub centroid_position: usize,
    pub probabilities: Vec<f64>,
    /// `P[j + 1] / P[j]` for `centroid_position <= j < |subset|`.
    pub upward: Vec<RatioEntry>,
    /// `P[j - 1] / P[j]` for `1 < j <= centroid_position`.
    pub downward: Vec<RatioEntry>,
    pub lower_bound: Option<f64>,
    pub upper_bound: f64,
    /// `phi + phi^2 < 1 + phi^n`, i.e. the upper bound is below one.
    pub regime_ok: bool,
    pub bounds_hold: bool,
    pub mode_at_centroid: bool,
    pub status: CheckStatus,
}

/// Bounds on adjacent position ratios.
///
/// With the full set, ratios lie in `[phi, phi_{1:n-1} / (1 + phi_{3:n})]`.
/// For a proper subset of size `a` only the upper bound
/// `max_{0 <= l <= n-a} (phi + phi^l phi_{2:n-l-1}) / (1 + phi^{2l} phi_{3:n-l})`
/// is checked. Comparisons are exact over the snapped `phi`.
pub fn check_lemma_position_ratios(params: &MallowsParams, u: usize, subset: &[usize]) -> Result<PositionRatioReport> {
    let n = params.n();
    let subset = subset_with(u, subset, n)?;
    let pmf = exact_mallows_pmf(params)?;
    let series = ExactSeries { phi: pmf.phi().clone() };
    let a = subset.len();
    let s = projected_rank(&params.sigma0, u, &subset);
    let probs = pmf.position_distribution_exact(u, &subset);
    let full = a == n;
    let upper = if full { series.q(n) } else { series.subset_ratio_bound(n, a) };
    let lower = full.then(|| series.phi.clone());

    let entry = |j: usize, num: &BigRational, den: &BigRational| {
        let ratio = num / den;
        let within = ratio <= upper && lower.as_ref().is_none_or(|lo| &ratio >= lo);
        RatioEntry { j, ratio: ratio_to_f64(&ratio), within }
    };
    let upward: Vec<RatioEntry> = (s..a).map(|j| entry(j, &probs[j], &probs[j - 1])).collect();
    let downward: Vec<RatioEntry> = (2..=s).map(|j| entry(j, &probs[j - 2], &probs[j - 1])).collect();

    let phi = &series.phi;
    let regime_ok = phi + phi * phi < BigRational::one() + super::pow(phi, n as u32);
    let bounds_hold = upward.iter().chain(&downward).all(|e| e.within);
    let best = probs.iter().max().expect("subset is non-empty");
    let mode_at_centroid = &probs[s - 1] == best;
    let status = match (regime_ok, bounds_hold) {
        (false, _) => CheckStatus::RegimeViolated,
        (true, true) => CheckStatus::Pass,
        (true, false) => CheckStatus::Fail,
    };
    Ok(PositionRatioReport {
        u,
        subset,
        centroid_position: s,
        probabilities: probs.iter().map(ratio_to_f64).collect(),
        upward,
        downward,
        lower_bound: lower.as_ref().map(ratio_to_f64),
        upper_bound: ratio_to_f64(&upper),
        regime_ok,
        bounds_hold,
        mode_at_centroid,
        status,
    })
}

/// Probabilities that `u` lands strictly below or strictly above its
/// centroid position within `subset`, against their bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub u: usize,
    pub subset: Vec<usize>,
    pub centroid_position: usize,
    /// `P[sigma_A(u) > s]`.
    pub upper_tail: f64,
    /// `P[sigma_A(u) < s]`.
    pub lower_tail: f64,
    /// `phi_{1:|A|-s} / phi_{0:|A|-s}`.
    pub upper_bound: f64,
    /// `phi_{1:s-1} / phi_{0:s-1}`, the mirror image of the upper bound.
    pub lower_bound: f64,
    /// `phi_{1:s} / phi_{0:s}`, a looser form of the lower bound.
    pub lower_bound_loose: f64,
    pub upper_tight: bool,
    pub lower_tight: bool,
    pub status: CheckStatus,
}

/// Both tails must be at most their bound and strictly below `phi`.
pub fn check_lemma_tail_bounds(params: &MallowsParams, u: usize, subset: &[usize]) -> Result<TailReport> {
    let n = params.n();
    let subset = subset_with(u, subset, n)?;
    let pmf = exact_mallows_pmf(params)?;
    let series = ExactSeries { phi: pmf.phi().clone() };
    let a = subset.len();
    let s = projected_rank(&params.sigma0, u, &subset);
    let probs = pmf.position_distribution_exact(u, &subset);
    let sum = |range: std::ops::Range<usize>| range.fold(BigRational::zero(), |acc, j| acc + &probs[j]);
    let upper_tail = sum(s..a);
    let lower_tail = sum(0..s - 1);
    let upper_bound = series.tail_ratio((a - s) as i64);
    let lower_bound = series.tail_ratio(s as i64 - 1);
    let lower_bound_loose = series.tail_ratio(s as i64);
    let phi = &series.phi;
    let ok = upper_tail <= upper_bound && lower_tail <= lower_bound && &upper_tail < phi && &lower_tail < phi;
    Ok(TailReport {
        u,
        subset,
        centroid_position: s,
        upper_tail: ratio_to_f64(&upper_tail),
        lower_tail: ratio_to_f64(&lower_tail),
        upper_bound: ratio_to_f64(&upper_bound),
        lower_bound: ratio_to_f64(&lower_bound),
        lower_bound_loose: ratio_to_f64(&lower_bound_loose),
        upper_tight: upper_tail == upper_bound,
        lower_tight: lower_tail == lower_bound,
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
    })
}

/// Expected median-vote mass that a generalized-model sample puts on the
/// centroid bucket side of `u` within `subset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteBoundReport {
    pub u: usize,
    pub subset: Vec<usize>,
    /// Bucket of `u` in the projected centroid, as a position range.
    pub centroid_bounds: (usize, usize),
    /// Expected vote on positions `1..=r`.
    pub mass_through_right: f64,
    /// Expected vote on positions `l..=|A|`.
    pub mass_from_left: f64,
    /// `1 - sqrt(phi)/2 - phi/2`.
    pub bound: f64,
    pub regime_ok: bool,
    pub status: CheckStatus,
}

/// A sample where `u` occupies positions `[l', r']` spreads one vote over
/// them; the mass falling in `[1, r]` (and, mirrored, in `[l, |A|]`) must be
/// at least `1 - sqrt(phi)/2 - phi/2` in expectation when
/// `phi + sqrt(phi) < 1`. Exact over all weak orders (`n <= 6`).
pub fn check_partial_vote_bound(params: &GmmParams, u: usize, subset: &[usize]) -> Result<VoteBoundReport> {
    let n = params.n();
    super::check_enumerable(n, VOTE_BOUND_MAX_N)?;
    let subset = subset_with(u, subset, n)?;
    let pmf = exact_gmm_pmf(params)?;
    let (l0, r0) = span(params.sigma0.bucket_of(), u, &subset);

    // weight of each (l', r') span
    let mut spans: BTreeMap<(usize, usize), BigInt> = BTreeMap::new();
    for i in 0..pmf.len() {
        let key = span(pmf.labels(i), u, &subset);
        *spans.entry(key).or_insert_with(BigInt::zero) += pmf.weight(i);
    }
    let a = subset.len();
    let mut right = BigRational::zero();
    let mut left = BigRational::zero();
    for (&(l, r), w) in &spans {
        let width = r - l + 1;
        let inside_right = (r.min(r0) + 1).saturating_sub(l);
        let inside_left = (r + 1).saturating_sub(l.max(l0)).min(width);
        right += BigRational::new(w * BigInt::from(inside_right), BigInt::from(width));
        left += BigRational::new(w * BigInt::from(inside_left), BigInt::from(width));
    }
    let total = BigRational::from_integer(pmf.total().clone());
    right /= &total;
    left /= &total;
    debug_assert!(a >= r0);

    let root = pmf.root().clone();
    let phi = &root * &root;
    let half = BigRational::new(1.into(), 2.into());
    let bound = BigRational::one() - &half * &root - &half * &phi;
    let regime_ok = &phi + &root < BigRational::one();
    let holds = is_nonnegative(&(&right - &bound)) && is_nonnegative(&(&left - &bound));
    let status = match (regime_ok, holds) {
        (false, _) => CheckStatus::RegimeViolated,
        (true, true) => CheckStatus::Pass,
        (true, false) => CheckStatus::Fail,
    };
    Ok(VoteBoundReport {
        u,
        subset,
        centroid_bounds: (l0, r0),
        mass_through_right: ratio_to_f64(&right),
        mass_from_left: ratio_to_f64(&left),
        bound: ratio_to_f64(&bound),
        regime_ok,
        status,
    })
}

/// Every check over every element `u` and every subset containing it, with
/// centroids `1 2 ... n` (Mallows) and consecutive pairs tied (generalized
/// model, `n <= 6`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSweep {
    pub phi: f64,
    pub n: usize,
    pub position_ratios: Vec<PositionRatioReport>,
    pub tails: Vec<TailReport>,
    pub votes: Vec<VoteBoundReport>,
}

impl BoundSweep {
    pub fn position_status(&self) -> CheckStatus {
        combine(self.position_ratios.iter().map(|r| r.status))
    }

    pub fn tail_status(&self) -> CheckStatus {
        combine(self.tails.iter().map(|r| r.status))
    }

    pub fn vote_status(&self) -> CheckStatus {
        combine(self.votes.iter().map(|r| r.status))
    }
}

// any failure wins, then any regime violation
fn combine(statuses: impl Iterator<Item = CheckStatus>) -> CheckStatus {
    statuses.fold(CheckStatus::Pass, |acc, s| match (acc, s) {
        (CheckStatus::Fail, _) | (_, CheckStatus::Fail) => CheckStatus::Fail,
        (CheckStatus::RegimeViolated, _) | (_, CheckStatus::RegimeViolated) => CheckStatus::RegimeViolated,
        _ => CheckStatus::Pass,
    })
}

pub fn sweep_bounds(phi: f64, n: usize) -> Result<BoundSweep> {
    let mallows = MallowsParams::new(crate::ranking::Permutation::identity(n), phi)?;
    let labels: Vec<usize> = (0..n).map(|i| i / 2 + 1).collect();
    let gmm = (n <= VOTE_BOUND_MAX_N && phi < 1.0)
        .then(|| GmmParams::new(crate::ranking::PartialRanking::from_labels(&labels)?, phi))
        .transpose()?;
    let cases: Vec<(usize, Vec<usize>)> = (1..=n)
        .flat_map(|u| {
            (0u32..1 << n).filter_map(move |mask| {
                let subset: Vec<usize> = (1..=n).filter(|&x| mask >> (x - 1) & 1 == 1).collect();
                (subset.len() >= 2 && subset.contains(&u)).then_some((u, subset))
            })
        })
        .collect();
    let position_ratios = cases
        .par_iter()
        .map(|(u, a)| check_lemma_position_ratios(&mallows, *u, a))
        .collect::<Result<_>>()?;
    let tails = cases
        .par_iter()
        .map(|(u, a)| check_lemma_tail_bounds(&mallows, *u, a))
        .collect::<Result<_>>()?;
    let votes = match &gmm {
        Some(params) => cases
            .par_iter()
            .map(|(u, a)| check_partial_vote_bound(params, *u, a))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    Ok(BoundSweep { phi, n, position_ratios, tails, votes })
}

// First and last position of u's bucket after projecting onto subset.
fn span<L: Copy + Ord>(labels: &[L], u: usize, subset: &[usize]) -> (usize, usize) {
    let lu = labels[u - 1];
    let above = subset.iter().filter(|&&y| labels[y - 1] < lu).count();
    let tied = subset.iter().filter(|&&y| labels[y - 1] == lu).count();
    (above + 1, above + tied)
}

fn subset_with(u: usize, subset: &[usize], n: usize) -> Result<Vec<usize>> {
    if u == 0 || u > n {
        return Err(Error::ElementOutOfRange { element: u, n });
    }
    let subset = normalize_subset(subset, n)?;
    if !subset.contains(&u) {
        return Err(Error::NotInSubset { element: u });
    }
    Ok(subset)
}
