//! Ranking data types shared by every other module.
//!
//! Elements and ranks are 1-based at the API boundary: `ranks[x - 1]` is the
//! rank of element `x`, and `bucket_of[x - 1]` is the index of the bucket
//! holding `x` (bucket 1 is ranked highest).

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A full ranking: a bijection from `[n]` onto `[n]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    ranks: Vec<usize>,
}

impl Permutation {
    /// Validates that `ranks` is a bijection onto `1..=n`.
    pub fn from_ranks(ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = ranks.len();
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r == 0 || r > n {
                return Err(Error::RankOutOfRange { value: r, n });
            }
            if std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::DuplicateRank { value: r });
            }
        }
        Ok(Permutation { ranks })
    }

    /// Builds the permutation that lists `order[0]` first, `order[1]` second
    /// and so on (the inverse view).
    pub fn from_order(order: &[usize]) -> Result<Self> {
        Ok(Permutation::from_ranks(order.to_vec())?.inverse())
    }

    pub(crate) fn from_ranks_unchecked(ranks: Vec<usize>) -> Self {
        debug_assert!(Permutation::from_ranks(ranks.clone()).is_ok());
        Permutation { ranks }
    }

    pub fn identity(n: usize) -> Self {
        Permutation { ranks: (1..=n).collect() }
    }

    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn into_ranks(self) -> Vec<usize> {
        self.ranks
    }

    /// Rank of element `x` (both 1-based).
    pub fn rank(&self, x: usize) -> usize {
        self.ranks[x - 1]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.ranks.len()];
        for (i, &r) in self.ranks.iter().enumerate() {
            inv[r - 1] = i + 1;
        }
        Permutation { ranks: inv }
    }

    /// Elements listed from highest to lowest rank.
    pub fn order(&self) -> Vec<usize> {
        self.inverse().ranks
    }

    pub fn project(&self, subset: &[usize]) -> Result<Projection<Permutation>> {
        let ids = normalize_subset(subset, self.n())?;
        let ranks = compress_labels(ids.iter().map(|&x| self.ranks[x - 1]));
        Ok(Projection {
            ranking: Permutation { ranks },
            ids,
        })
    }

    /// The same ranking viewed as a partial ranking of singleton buckets.
    pub fn to_partial(&self) -> PartialRanking {
        PartialRanking {
            bucket_of: self.ranks.clone(),
            buckets: self.ranks.len(),
            unrated_tail: false,
        }
    }
}

/// A bucket order on `[n]`, optionally flagging its last bucket as the set of
/// unrated elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialRanking {
    bucket_of: Vec<usize>,
    buckets: usize,
    unrated_tail: bool,
}

impl PartialRanking {
    /// Accepts arbitrary positive labels and renumbers them to `1..=t`
    /// preserving their order.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        let bucket_of = compress_labels(labels.iter().copied());
        let buckets = bucket_of.iter().copied().max().unwrap_or(0);
        Ok(PartialRanking {
            bucket_of,
            buckets,
            unrated_tail: false,
        })
    }

    /// Builds a partial ranking from explicit buckets listed top to bottom.
    /// Every element of `1..=n` must appear exactly once.
    pub fn from_buckets(n: usize, buckets: &[Vec<usize>], unrated_tail: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut bucket_of = vec![0usize; n];
        let mut t = 0;
        for bucket in buckets.iter().filter(|b| !b.is_empty()) {
            t += 1;
            for &x in bucket {
                if x == 0 || x > n {
                    return Err(Error::ElementOutOfRange { element: x, n });
                }
                if bucket_of[x - 1] != 0 {
                    return Err(Error::DuplicateRank { value: x });
                }
                bucket_of[x - 1] = t;
            }
        }
        if let Some(missing) = bucket_of.iter().position(|&b| b == 0) {
            return Err(Error::Format(format!("element {} is not placed in any bucket", missing + 1)));
        }
        Ok(PartialRanking {
            bucket_of,
            buckets: t,
            unrated_tail,
        })
    }

    pub(crate) fn from_consecutive_unchecked(bucket_of: Vec<usize>, unrated_tail: bool) -> Self {
        let buckets = bucket_of.iter().copied().max().unwrap_or(0);
        debug_assert_eq!(compress_labels(bucket_of.iter().copied()), bucket_of);
        PartialRanking {
            bucket_of,
            buckets,
            unrated_tail,
        }
    }

    /// Marks (or unmarks) the last bucket as holding unrated elements.
    pub fn with_unrated_tail(mut self, unrated_tail: bool) -> Self {
        self.unrated_tail = unrated_tail;
        self
    }

    pub fn n(&self) -> usize {
        self.bucket_of.len()
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets
    }

    pub fn bucket_of(&self) -> &[usize] {
        &self.bucket_of
    }

    /// Bucket index of element `x` (both 1-based).
    pub fn bucket(&self, x: usize) -> usize {
        self.bucket_of[x - 1]
    }

    pub fn has_unrated_tail(&self) -> bool {
        self.unrated_tail
    }

    /// Whether `x` lies outside the unrated tail bucket.
    pub fn is_rated(&self, x: usize) -> bool {
        !(self.unrated_tail && self.bucket_of[x - 1] == self.buckets)
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.buckets];
        for &b in &self.bucket_of {
            sizes[b - 1] += 1;
        }
        sizes
    }

    /// Buckets top to bottom, each listing its elements in increasing order.
    pub fn buckets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.buckets];
        for (i, &b) in self.bucket_of.iter().enumerate() {
            out[b - 1].push(i + 1);
        }
        out
    }

    /// `(l_k, r_k)` for every bucket `k`: the first and last rank a
    /// tie-breaking of the bucket can occupy.
    pub fn bucket_bounds(&self) -> Vec<(usize, usize)> {
        let mut bounds = Vec::with_capacity(self.buckets);
        let mut right = 0;
        for size in self.bucket_sizes() {
            bounds.push((right + 1, right + size));
            right += size;
        }
        bounds
    }

    pub fn is_permutation(&self) -> bool {
        self.buckets == self.bucket_of.len()
    }

    /// Breaks every tie by element index: within a bucket, smaller ids rank
    /// higher.
    pub fn tie_broken(&self) -> Permutation {
        let bounds = self.bucket_bounds();
        let mut next: Vec<usize> = bounds.iter().map(|&(l, _)| l).collect();
        let ranks = self
            .bucket_of
            .iter()
            .map(|&b| {
                let r = next[b - 1];
                next[b - 1] += 1;
                r
            })
            .collect();
        Permutation::from_ranks_unchecked(ranks)
    }

    /// Projection onto `subset`, preserving strict order and ties. The
    /// unrated flag survives only if some projected element was unrated.
    pub fn project(&self, subset: &[usize]) -> Result<Projection<PartialRanking>> {
        let ids = normalize_subset(subset, self.n())?;
        let bucket_of = compress_labels(ids.iter().map(|&x| self.bucket_of[x - 1]));
        let buckets = bucket_of.iter().copied().max().unwrap_or(0);
        let unrated_tail = ids.iter().any(|&x| !self.is_rated(x));
        Ok(Projection {
            ranking: PartialRanking {
                bucket_of,
                buckets,
                unrated_tail,
            },
            ids,
        })
    }
}

/// A ranking restricted to a subset, relabeled `1..=|Q|` by ascending
/// original id. `ids[i]` is the original id of new element `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection<R> {
    pub ranking: R,
    pub ids: Vec<usize>,
}

/// Which validation `validate` applies to raw input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingKind {
    Full,
    Partial,
}

/// Either kind of ranking.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ranking {
    Full(Permutation),
    Partial(PartialRanking),
}

impl Ranking {
    pub fn n(&self) -> usize {
        match self {
            Ranking::Full(p) => p.n(),
            Ranking::Partial(p) => p.n(),
        }
    }

    pub fn kind(&self) -> RankingKind {
        match self {
            Ranking::Full(_) => RankingKind::Full,
            Ranking::Partial(_) => RankingKind::Partial,
        }
    }

    /// Order labels: ranks for a permutation, bucket indices otherwise.
    /// Smaller label means ranked higher; equal labels mean a tie.
    pub fn labels(&self) -> &[usize] {
        match self {
            Ranking::Full(p) => p.ranks(),
            Ranking::Partial(p) => p.bucket_of(),
        }
    }

    pub fn is_rated(&self, x: usize) -> bool {
        match self {
            Ranking::Full(_) => true,
            Ranking::Partial(p) => p.is_rated(x),
        }
    }

    pub fn as_partial(&self) -> Cow<'_, PartialRanking> {
        match self {
            Ranking::Full(p) => Cow::Owned(p.to_partial()),
            Ranking::Partial(p) => Cow::Borrowed(p),
        }
    }

    pub fn tie_broken(&self) -> Cow<'_, Permutation> {
        match self {
            Ranking::Full(p) => Cow::Borrowed(p),
            Ranking::Partial(p) => Cow::Owned(p.tie_broken()),
        }
    }

    pub fn as_permutation(&self) -> Option<&Permutation> {
        match self {
            Ranking::Full(p) => Some(p),
            Ranking::Partial(_) => None,
        }
    }
}

impl From<Permutation> for Ranking {
    fn from(p: Permutation) -> Self {
        Ranking::Full(p)
    }
}

impl From<PartialRanking> for Ranking {
    fn from(p: PartialRanking) -> Self {
        Ranking::Partial(p)
    }
}

/// Typed construction from a raw integer vector.
pub fn validate(raw: &[usize], kind: RankingKind) -> Result<Ranking> {
    match kind {
        RankingKind::Full => Permutation::from_ranks(raw.to_vec()).map(Ranking::Full),
        RankingKind::Partial => {
            if raw.contains(&0) {
                return Err(Error::RankOutOfRange { value: 0, n: raw.len() });
            }
            PartialRanking::from_labels(raw).map(Ranking::Partial)
        }
    }
}

/// Provenance attached to a sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub source: String,
    pub seed: Option<u64>,
    pub model: Option<String>,
}

/// The multiset of rankings to aggregate; all members share the same `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingSample {
    rankings: Vec<Ranking>,
    pub meta: SampleMeta,
}

impl RankingSample {
    pub fn new(rankings: Vec<Ranking>) -> Result<Self> {
        let first = rankings.first().ok_or(Error::EmptySample)?;
        let n = first.n();
        if let Some(bad) = rankings.iter().find(|r| r.n() != n) {
            return Err(Error::SizeMismatch { left: n, right: bad.n() });
        }
        Ok(RankingSample {
            rankings,
            meta: SampleMeta::default(),
        })
    }

    pub fn from_permutations(perms: Vec<Permutation>) -> Result<Self> {
        RankingSample::new(perms.into_iter().map(Ranking::Full).collect())
    }

    pub fn from_partials(partials: Vec<PartialRanking>) -> Result<Self> {
        RankingSample::new(partials.into_iter().map(Ranking::Partial).collect())
    }

    pub fn with_meta(mut self, meta: SampleMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn n(&self) -> usize {
        self.rankings[0].n()
    }

    pub fn m(&self) -> usize {
        self.rankings.len()
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn all_full(&self) -> bool {
        self.rankings.iter().all(|r| matches!(r, Ranking::Full(_)))
    }

    /// The permutations, or `MixedKinds` if any member has ties.
    pub fn permutations(&self) -> Result<Vec<&Permutation>> {
        self.rankings
            .iter()
            .map(|r| r.as_permutation().ok_or(Error::MixedKinds))
            .collect()
    }

    /// A sub-sample made of the given member indices.
    pub fn select(&self, indices: &[usize]) -> Result<RankingSample> {
        let rankings = indices.iter().map(|&i| self.rankings[i].clone()).collect();
        Ok(RankingSample::new(rankings)?.with_meta(self.meta.clone()))
    }
}

pub(crate) fn normalize_subset(subset: &[usize], n: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&bad) = subset.iter().find(|&&x| x == 0 || x > n) {
        return Err(Error::ElementOutOfRange { element: bad, n });
    }
    let mut ids = subset.to_vec();
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Maps values to `1..=t` preserving order and equality.
fn compress_labels(values: impl Iterator<Item = usize>) -> Vec<usize> {
    let values: Vec<usize> = values.collect();
    let mut distinct = values.clone();
    distinct.sort_unstable();
    distinct.dedup();
    values
        .iter()
        .map(|v| distinct.binary_search(v).unwrap() + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perm(ranks: &[usize]) -> Permutation {
        Permutation::from_ranks(ranks.to_vec()).unwrap()
    }

    #[test]
    fn validate_examples() {
        let r = validate(&[2, 1, 4, 5, 3, 6], RankingKind::Full).unwrap();
        assert_eq!(r.labels()[0], 2);
        assert!(matches!(
            validate(&[1, 1, 2], RankingKind::Full),
            Err(Error::DuplicateRank { value: 1 })
        ));
        assert!(matches!(
            validate(&[1, 4, 2], RankingKind::Full),
            Err(Error::RankOutOfRange { value: 4, n: 3 })
        ));
        assert!(matches!(validate(&[], RankingKind::Full), Err(Error::EmptyInput)));
        let p = validate(&[3, 3, 7, 7, 9], RankingKind::Partial).unwrap();
        assert_eq!(p.labels(), &[1, 1, 2, 2, 3]);
    }

    #[test]
    fn partial_renumbering_matches_pairwise_order() {
        // oracle: renumbering preserves every pairwise comparison
        let raw = [10, 3, 3, 42, 7, 10];
        let p = PartialRanking::from_labels(&raw).unwrap();
        for a in 0..raw.len() {
            for b in 0..raw.len() {
                assert_eq!(raw[a].cmp(&raw[b]), p.bucket_of()[a].cmp(&p.bucket_of()[b]));
            }
        }
        assert_eq!(p.bucket_count(), 4);
    }

    #[test]
    fn projection_examples() {
        let sigma = perm(&[2, 1, 4, 5, 3, 6]);
        let proj = sigma.project(&[1, 3, 5, 6]).unwrap();
        assert_eq!(proj.ranking.ranks(), &[1, 3, 2, 4]);
        assert_eq!(proj.ids, vec![1, 3, 5, 6]);
        assert_eq!(sigma.project(&[1, 2, 3, 4, 5, 6]).unwrap().ranking, sigma);

        let partial = PartialRanking::from_labels(&[1, 1, 2, 2, 3, 1, 2, 3, 3]).unwrap();
        let proj = partial.project(&[3, 6, 8]).unwrap();
        assert_eq!(proj.ranking.bucket_of(), &[2, 1, 3]);
        assert_eq!(proj.ids, vec![3, 6, 8]);
    }

    #[test]
    fn projection_errors() {
        let sigma = perm(&[2, 1, 3]);
        assert!(matches!(sigma.project(&[]), Err(Error::EmptySubset)));
        assert!(matches!(
            sigma.project(&[1, 4]),
            Err(Error::ElementOutOfRange { element: 4, n: 3 })
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(Permutation::identity(5).inverse(), Permutation::identity(5));
        assert_eq!(perm(&[2, 1]).inverse(), perm(&[2, 1]));
        let sigma = perm(&[2, 1, 4, 5, 3, 6]);
        let inv = sigma.inverse();
        assert_eq!(inv.ranks(), &[2, 1, 5, 3, 4, 6]);
        for i in 1..=6 {
            assert_eq!(sigma.rank(inv.rank(i)), i);
        }
    }

    #[test]
    fn tie_break_and_bounds() {
        let p = PartialRanking::from_labels(&[1, 1, 2, 2, 3, 1, 2, 3, 3]).unwrap();
        assert_eq!(p.tie_broken().ranks(), &[1, 2, 4, 5, 7, 3, 6, 8, 9]);
        assert_eq!(p.bucket_bounds(), vec![(1, 3), (4, 6), (7, 9)]);
        assert_eq!(p.buckets(), vec![vec![1, 2, 6], vec![3, 4, 7], vec![5, 8, 9]]);
    }

    #[test]
    fn unrated_tail_projection() {
        let p = PartialRanking::from_buckets(5, &[vec![1, 3], vec![2], vec![4, 5]], true).unwrap();
        assert!(!p.is_rated(4) && p.is_rated(2));
        assert!(!p.project(&[1, 2]).unwrap().ranking.has_unrated_tail());
        assert!(p.project(&[1, 5]).unwrap().ranking.has_unrated_tail());
    }

    #[test]
    fn sample_validation() {
        assert!(matches!(RankingSample::new(vec![]), Err(Error::EmptySample)));
        let mixed = RankingSample::new(vec![
            Ranking::Full(perm(&[1, 2])),
            Ranking::Full(perm(&[1, 2, 3])),
        ]);
        assert!(matches!(mixed, Err(Error::SizeMismatch { .. })));
    }

    fn arb_perm(max_n: usize) -> impl Strategy<Value = Permutation> {
        (1..=max_n)
            .prop_flat_map(|n| Just((1..=n).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|r| Permutation::from_ranks(r).unwrap())
    }

    fn arb_partial(max_n: usize) -> impl Strategy<Value = PartialRanking> {
        (1..=max_n)
            .prop_flat_map(|n| proptest::collection::vec(1usize..=n, n))
            .prop_map(|labels| PartialRanking::from_labels(&labels).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn inverse_is_involution(sigma in arb_perm(256)) {
            prop_assert_eq!(sigma.inverse().inverse(), sigma);
        }

        #[test]
        fn nested_projection_composes(sigma in arb_perm(12), mask_r in any::<u16>(), mask_q in any::<u16>()) {
            let n = sigma.n();
            let r: Vec<usize> = (1..=n).filter(|x| mask_r >> (x - 1) & 1 == 1).collect();
            prop_assume!(!r.is_empty());
            let q_local: Vec<usize> = (1..=r.len()).filter(|i| mask_q >> (i - 1) & 1 == 1).collect();
            prop_assume!(!q_local.is_empty());
            let outer = sigma.project(&r).unwrap();
            let inner = outer.ranking.project(&q_local).unwrap();
            let q_global: Vec<usize> = inner.ids.iter().map(|&i| outer.ids[i - 1]).collect();
            let direct = sigma.project(&q_global).unwrap();
            prop_assert_eq!(inner.ranking, direct.ranking);
        }

        #[test]
        fn partial_projection_preserves_ties(sigma in arb_partial(8), mask in any::<u8>()) {
            let q: Vec<usize> = (1..=sigma.n()).filter(|x| mask >> (x - 1) & 1 == 1).collect();
            prop_assume!(!q.is_empty());
            let proj = sigma.project(&q).unwrap();
            for (i, &x) in proj.ids.iter().enumerate() {
                for (j, &y) in proj.ids.iter().enumerate() {
                    prop_assert_eq!(
                        sigma.bucket(x).cmp(&sigma.bucket(y)),
                        proj.ranking.bucket_of()[i].cmp(&proj.ranking.bucket_of()[j])
                    );
                }
            }
        }
    }
}
