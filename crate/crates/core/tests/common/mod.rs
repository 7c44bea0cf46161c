//! Direct, quadratic definitions used as oracles, plus random generators.
#![allow(dead_code)]

use lehmer_agg::ranking::{PartialRanking, Permutation, Ranking, RankingSample};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn perm(ranks: &[usize]) -> Permutation {
    Permutation::from_ranks(ranks.to_vec()).unwrap()
}

pub fn random_perm(n: usize, rng: &mut TestRng) -> Permutation {
    let mut ranks: Vec<usize> = (1..=n).collect();
    ranks.shuffle(rng);
    Permutation::from_ranks(ranks).unwrap()
}

/// Labels drawn from `1..=k` for a random `k`, renumbered by the library.
pub fn random_partial(n: usize, rng: &mut TestRng) -> PartialRanking {
    let k = rng.gen_range(1..=n);
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=k)).collect();
    PartialRanking::from_labels(&labels).unwrap()
}

/// A random partial ranking whose last bucket may be marked unrated.
pub fn random_partial_with_tail(n: usize, rng: &mut TestRng) -> PartialRanking {
    let p = random_partial(n, rng);
    let tail = p.bucket_count() > 1 && rng.gen_bool(0.5);
    p.with_unrated_tail(tail)
}

pub fn random_sample(n: usize, m: usize, partial: bool, rng: &mut TestRng) -> RankingSample {
    let rankings = (0..m)
        .map(|_| {
            if partial {
                Ranking::Partial(random_partial_with_tail(n, rng))
            } else {
                Ranking::Full(random_perm(n, rng))
            }
        })
        .collect();
    RankingSample::new(rankings).unwrap()
}

/// Element ids by rank.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for r in 1..=used.len() {
            if !used[r - 1] {
                used[r - 1] = true;
                prefix.push(r);
                go(prefix, used, out);
                prefix.pop();
                used[r - 1] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Every weak order on `[n]` as bucket labels `1..=k` using each label.
pub fn all_weak_orders(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![1; n];
    loop {
        let k = *labels.iter().max().unwrap_or(&0);
        if (1..=k).all(|l| labels.contains(&l)) {
            out.push(labels.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if labels[i] < n {
                labels[i] += 1;
                break;
            }
            labels[i] = 1;
            i += 1;
        }
    }
}

/// `c(x) = #{y < x : sigma(y) > sigma(x)}` straight from the definition.
pub fn lehmer_oracle(ranks: &[usize]) -> Vec<usize> {
    (0..ranks.len()).map(|x| (0..x).filter(|&y| ranks[y] > ranks[x]).count()).collect()
}

/// `(c, c', IN)` for bucket labels: ties below `x` count toward `c'` only.
pub fn partial_lehmer_oracle(labels: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let n = labels.len();
    let mut c = vec![0; n];
    let mut c_prime = vec![0; n];
    let mut in_count = vec![0; n];
    for x in 0..n {
        let below = (0..x).filter(|&y| labels[y] > labels[x]).count();
        let tied = (0..x).filter(|&y| labels[y] == labels[x]).count();
        c[x] = below;
        c_prime[x] = below + tied;
        in_count[x] = tied + 1;
    }
    (c, c_prime, in_count)
}

pub fn kendall_oracle(a: &[usize], b: &[usize]) -> u64 {
    let n = a.len();
    let mut d = 0;
    for x in 0..n {
        for y in x + 1..n {
            if (a[x] < a[y]) != (b[x] < b[y]) {
                d += 1;
            }
        }
    }
    d
}

/// Kemeny distance in halves. `rated_a(x)` says whether `x` is rated in `a`;
/// ties between two elements not both rated cost nothing.
pub fn kemeny_oracle(a: &PartialRanking, b: &PartialRanking, skip_unrated: bool) -> u64 {
    let (la, lb) = (a.bucket_of(), b.bucket_of());
    let n = la.len();
    let mut halves = 0;
    for x in 0..n {
        for y in x + 1..n {
            let tie_a = la[x] == la[y];
            let tie_b = lb[x] == lb[y];
            let counts = |p: &PartialRanking| !skip_unrated || (p.is_rated(x + 1) && p.is_rated(y + 1));
            halves += if tie_a && tie_b {
                0
            } else if tie_a {
                counts(a) as u64
            } else if tie_b {
                counts(b) as u64
            } else if (la[x] < la[y]) != (lb[x] < lb[y]) {
                2
            } else {
                0
            };
        }
    }
    halves
}

/// Twice the position of every element: ranks strictly above, doubled, plus
/// the bucket size plus one.
pub fn double_positions(r: &Ranking) -> Vec<u64> {
    let labels = r.labels();
    labels
        .iter()
        .map(|&l| {
            let above = labels.iter().filter(|&&o| o < l).count() as u64;
            let size = labels.iter().filter(|&&o| o == l).count() as u64;
            2 * above + size + 1
        })
        .collect()
}

/// Footrule in halves.
pub fn footrule_oracle(a: &Ranking, b: &Ranking) -> u64 {
    double_positions(a)
        .iter()
        .zip(double_positions(b))
        .map(|(&x, y)| x.abs_diff(y))
        .sum()
}

/// Kendall distance of permutation `ranks` to every member, summed.
pub fn total_kendall(sample: &RankingSample, ranks: &[usize]) -> u64 {
    sample
        .rankings()
        .iter()
        .map(|r| kendall_oracle(r.labels(), ranks))
        .sum()
}

/// Total unrated-aware Kemeny distance in halves.
pub fn total_kemeny(sample: &RankingSample, sigma: &PartialRanking) -> u64 {
    sample
        .rankings()
        .iter()
        .map(|r| kemeny_oracle(&r.as_partial(), sigma, true))
        .sum()
}
