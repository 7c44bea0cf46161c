use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mallows::integer_weight;
use super::{check_enumerable, snap_to_rational, GmmParams, SNAP_DENOMINATOR};
use crate::error::Result;
use crate::ranking::{PartialRanking, RankingSample, SampleMeta};
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// Largest `n` sampled exactly; beyond it a Metropolis chain is used.
pub const EXACT_GMM_MAX_N: usize = 8;

/// Largest `n` for the exact rational distribution.
const EXACT_PMF_MAX_N: usize = 7;

/// Chain settings for `n > EXACT_GMM_MAX_N`. Results are approximate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetropolisConfig {
    /// Steps before the first state is taken; `None` means `50 n^2`.
    pub burn_in: Option<usize>,
    /// Steps between consecutive states of a batch.
    pub thinning: usize,
}

impl Default for MetropolisConfig {
    fn default() -> Self {
        MetropolisConfig { burn_in: None, thinning: 10 }
    }
}

// All weak orders of [n], label vectors stored back to back.
struct WeakOrders {
    n: usize,
    labels: Vec<u8>,
}

impl WeakOrders {
    fn len(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.labels.len() / self.n
        }
    }

    fn get(&self, i: usize) -> &[u8] {
        &self.labels[i * self.n..(i + 1) * self.n]
    }

    // Element i either joins one of the t buckets of an order on [i - 1] or
    // opens a new bucket in one of the t + 1 gaps; every order on [i] arises
    // once, from its restriction to [i - 1].
    fn build(n: usize) -> WeakOrders {
        let mut current: Vec<Vec<u8>> = vec![Vec::new()];
        for _ in 0..n {
            let mut next = Vec::new();
            for order in &current {
                let t = order.iter().copied().max().unwrap_or(0);
                for b in 1..=t {
                    let mut o = order.clone();
                    o.push(b);
                    next.push(o);
                }
                for g in 1..=t + 1 {
                    let mut o: Vec<u8> = order.iter().map(|&l| if l >= g { l + 1 } else { l }).collect();
                    o.push(g);
                    next.push(o);
                }
            }
            current = next;
        }
        WeakOrders {
            n,
            labels: current.concat(),
        }
    }
}

fn weak_orders(n: usize) -> Arc<WeakOrders> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<WeakOrders>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(found) = cache.lock().expect("cache lock").get(&n) {
        return found.clone();
    }
    let built = Arc::new(WeakOrders::build(n));
    cache.lock().expect("cache lock").entry(n).or_insert(built).clone()
}

/// Every weak order of `[n]` (ordered Bell many), `n <= 8`.
pub fn enumerate_weak_orders(n: usize) -> Result<Vec<PartialRanking>> {
    check_enumerable(n, EXACT_GMM_MAX_N)?;
    let orders = weak_orders(n);
    Ok((0..orders.len()).map(|i| to_partial(orders.get(i))).collect())
}

fn to_partial(labels: &[u8]) -> PartialRanking {
    PartialRanking::from_consecutive_unchecked(labels.iter().map(|&l| l as usize).collect(), false)
}

// Kemeny distance in halves between two label vectors.
fn kemeny_halves<A: Copy + Ord, B: Copy + Ord>(a: &[A], b: &[B]) -> u32 {
    let mut h = 0;
    for x in 0..a.len() {
        for y in x + 1..a.len() {
            h += pair_halves(a[x].cmp(&a[y]), b[x].cmp(&b[y]));
        }
    }
    h
}

fn pair_halves(a: std::cmp::Ordering, b: std::cmp::Ordering) -> u32 {
    use std::cmp::Ordering::Equal;
    match (a, b) {
        (Equal, Equal) => 0,
        (Equal, _) | (_, Equal) => 1,
        (p, q) if p != q => 2,
        _ => 0,
    }
}

struct SamplerTable {
    orders: Arc<WeakOrders>,
    cdf: Vec<f64>,
}

fn sampler_table(params: &GmmParams) -> Arc<SamplerTable> {
    type Key = (Vec<usize>, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<SamplerTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (params.sigma0.bucket_of().to_vec(), params.phi.to_bits());
    if let Some(found) = cache.lock().expect("cache lock").get(&key) {
        return found.clone();
    }
    let orders = weak_orders(params.n());
    let root = params.phi.sqrt();
    let center = params.sigma0.bucket_of();
    let weights: Vec<f64> = (0..orders.len())
        .into_par_iter()
        .map(|i| root.powi(kemeny_halves(center, orders.get(i)) as i32))
        .collect();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut run = 0.0;
    for w in weights {
        run += w;
        cdf.push(run);
    }
    let table = Arc::new(SamplerTable { orders, cdf });
    cache.lock().expect("cache lock").entry(key).or_insert(table).clone()
}

/// One sample from the generalized model: exact for `n <= 8` (weak orders
/// enumerated once per parameter set and cached), otherwise the end of a
/// Metropolis chain started at the centroid.
pub fn sample_gmm_partial(params: &GmmParams, seed: u64) -> PartialRanking {
    sample_gmm_with(params, &mut rng_from_seed(seed), MetropolisConfig::default())
}

pub fn sample_gmm_with(params: &GmmParams, rng: &mut Rng, chain: MetropolisConfig) -> PartialRanking {
    if params.n() <= EXACT_GMM_MAX_N {
        return sample_exact(&sampler_table(params), rng);
    }
    let mut state = Chain::new(params);
    state.run(burn_in(chain, params.n()), rng);
    state.current()
}

fn sample_exact(table: &SamplerTable, rng: &mut Rng) -> PartialRanking {
    let total = *table.cdf.last().expect("at least one weak order");
    let u = rng.gen::<f64>() * total;
    let i = table.cdf.partition_point(|&c| c <= u).min(table.cdf.len() - 1);
    to_partial(table.orders.get(i))
}

fn burn_in(chain: MetropolisConfig, n: usize) -> usize {
    chain.burn_in.unwrap_or(50 * n * n)
}

/// `m` samples. In the exact regime sample `i` uses `derive_seed(seed, i)`;
/// otherwise one chain is burnt in and then read every `thinning` steps.
pub fn sample_gmm_batch(params: &GmmParams, m: usize, seed: u64, chain: MetropolisConfig) -> Result<RankingSample> {
    let partials: Vec<PartialRanking> = if params.n() <= EXACT_GMM_MAX_N {
        let table = sampler_table(params);
        (0..m as u64)
            .into_par_iter()
            .map(|i| sample_exact(&table, &mut rng_from_seed(derive_seed(seed, i))))
            .collect()
    } else {
        chain_batch(params, m, seed, chain)
    };
    Ok(RankingSample::from_partials(partials)?.with_meta(SampleMeta {
        source: "gmm".into(),
        seed: Some(seed),
        model: Some(format!("phi={}", params.phi)),
    }))
}

fn chain_batch(params: &GmmParams, m: usize, seed: u64, chain: MetropolisConfig) -> Vec<PartialRanking> {
    let mut rng = rng_from_seed(seed);
    let mut state = Chain::new(params);
    state.run(burn_in(chain, params.n()), &mut rng);
    (0..m)
        .map(|_| {
            let out = state.current();
            state.run(chain.thinning.max(1), &mut rng);
            out
        })
        .collect()
}

// Metropolis over weak orders. A move takes one element out and puts it
// back into one of the 2t' + 1 places left by the other elements (t' of
// their buckets, t' + 1 gaps); the proposal is symmetric because both
// directions share the same reduced order.
struct Chain<'a> {
    center: &'a [usize],
    root: f64,
    labels: Vec<usize>,
}

impl<'a> Chain<'a> {
    fn new(params: &'a GmmParams) -> Self {
        Chain {
            center: params.sigma0.bucket_of(),
            root: params.phi.sqrt(),
            labels: params.sigma0.bucket_of().to_vec(),
        }
    }

    fn current(&self) -> PartialRanking {
        PartialRanking::from_consecutive_unchecked(self.labels.clone(), false)
    }

    fn cost_of(&self, labels: &[usize], x: usize) -> u32 {
        (0..labels.len())
            .filter(|&y| y != x)
            .map(|y| pair_halves(self.center[x].cmp(&self.center[y]), labels[x].cmp(&labels[y])))
            .sum()
    }

    fn run(&mut self, steps: usize, rng: &mut Rng) {
        let n = self.labels.len();
        for _ in 0..steps {
            let x = rng.gen_range(0..n);
            let before = self.cost_of(&self.labels, x);
            let mut reduced = self.labels.clone();
            let own = reduced[x];
            let alone = (0..n).all(|y| y == x || reduced[y] != own);
            if alone {
                for (y, l) in reduced.iter_mut().enumerate() {
                    if y != x && *l > own {
                        *l -= 1;
                    }
                }
            }
            let t = (0..n).filter(|&y| y != x).map(|y| reduced[y]).max().unwrap_or(0);
            let option = rng.gen_range(0..2 * t + 1);
            if option < t {
                reduced[x] = option + 1;
            } else {
                let gap = option - t + 1;
                for (y, l) in reduced.iter_mut().enumerate() {
                    if y != x && *l >= gap {
                        *l += 1;
                    }
                }
                reduced[x] = gap;
            }
            let after = self.cost_of(&reduced, x);
            let accept = after <= before || rng.gen::<f64>() < self.root.powi((after - before) as i32);
            if accept {
                self.labels = reduced;
            }
        }
    }
}

/// Exact distribution over all weak orders. The square root of `phi` is
/// snapped to a fraction `r`, and `phi = r^2` is used, so that half-integer
/// distances still give rational weights.
#[derive(Clone)]
pub struct GmmPmf {
    sigma0: PartialRanking,
    root: BigRational,
    orders: Arc<WeakOrders>,
    weights: Vec<BigInt>,
    total: BigInt,
}

impl std::fmt::Debug for GmmPmf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GmmPmf")
            .field("sigma0", &self.sigma0)
            .field("root", &self.root)
            .field("support", &self.orders.len())
            .finish()
    }
}

/// Enumerates all weak orders (`n <= 7`).
pub fn exact_gmm_pmf(params: &GmmParams) -> Result<GmmPmf> {
    let n = params.n();
    check_enumerable(n, EXACT_PMF_MAX_N)?;
    let root = snap_to_rational(params.phi.sqrt(), SNAP_DENOMINATOR);
    let orders = weak_orders(n);
    let max_h = (n * n.saturating_sub(1)) as u64;
    let center = params.sigma0.bucket_of();
    let weights: Vec<BigInt> = (0..orders.len())
        .into_par_iter()
        .map(|i| integer_weight(&root, kemeny_halves(center, orders.get(i)) as u64, max_h))
        .collect();
    let total = weights.iter().fold(BigInt::zero(), |a, b| a + b);
    Ok(GmmPmf {
        sigma0: params.sigma0.clone(),
        root,
        orders,
        weights,
        total,
    })
}

impl GmmPmf {
    pub fn n(&self) -> usize {
        self.sigma0.n()
    }

    pub fn sigma0(&self) -> &PartialRanking {
        &self.sigma0
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.len() == 0
    }

    /// The fraction used for `sqrt(phi)`.
    pub fn root(&self) -> &BigRational {
        &self.root
    }

    pub fn order(&self, i: usize) -> PartialRanking {
        to_partial(self.orders.get(i))
    }

    pub(super) fn labels(&self, i: usize) -> &[u8] {
        self.orders.get(i)
    }

    pub(super) fn weight(&self, i: usize) -> &BigInt {
        &self.weights[i]
    }

    pub(super) fn total(&self) -> &BigInt {
        &self.total
    }

    pub fn probability_exact(&self, i: usize) -> BigRational {
        BigRational::new(self.weights[i].clone(), self.total.clone())
    }

    pub fn probability(&self, i: usize) -> f64 {
        super::ratio_to_f64(&self.probability_exact(i))
    }

    /// Index of the most probable weak order, lowest index on ties.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.weights[i] > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::kemeny;

    #[test]
    fn ordered_bell_numbers() {
        let sizes: Vec<usize> = (1..=6).map(|n| WeakOrders::build(n).len()).collect();
        assert_eq!(sizes, vec![1, 3, 13, 75, 541, 4683]);
        let orders = enumerate_weak_orders(3).unwrap();
        let unique: std::collections::HashSet<_> = orders.iter().collect();
        assert_eq!(unique.len(), 13);
    }

    #[test]
    fn halves_match_kemeny() {
        let center = PartialRanking::from_labels(&[1, 2, 2, 1]).unwrap();
        for o in enumerate_weak_orders(4).unwrap() {
            let h = kemeny_halves(center.bucket_of(), o.bucket_of());
            assert_eq!(h as u64, kemeny(&center, &o).unwrap().halves());
        }
    }

    #[test]
    fn centroid_is_the_mode() {
        let sigma0 = PartialRanking::from_labels(&[2, 1, 3, 1]).unwrap();
        let pmf = exact_gmm_pmf(&GmmParams::new(sigma0.clone(), 0.4).unwrap()).unwrap();
        assert_eq!(pmf.order(pmf.mode()), sigma0);
    }

    #[test]
    fn tiny_phi_returns_the_centroid() {
        let sigma0 = PartialRanking::from_labels(&[2, 1, 3, 1, 2]).unwrap();
        let params = GmmParams::new(sigma0.clone(), 1e-12).unwrap();
        for seed in 0..20 {
            assert_eq!(sample_gmm_partial(&params, seed), sigma0);
        }
    }

    #[test]
    fn chain_matches_enumeration() {
        let sigma0 = PartialRanking::from_labels(&[2, 1, 2, 3]).unwrap();
        let params = GmmParams::new(sigma0, 0.5).unwrap();
        let pmf = exact_gmm_pmf(&params).unwrap();
        let draws = 40_000;
        let config = MetropolisConfig { burn_in: Some(1000), thinning: 5 };
        let mut counts: HashMap<PartialRanking, usize> = HashMap::new();
        for p in chain_batch(&params, draws, 8, config) {
            *counts.entry(p).or_default() += 1;
        }
        let tv: f64 = (0..pmf.len())
            .map(|i| (counts.get(&pmf.order(i)).copied().unwrap_or(0) as f64 / draws as f64 - pmf.probability(i)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.03, "{tv}");
    }
}
