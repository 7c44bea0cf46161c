use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng as _;
use rayon::prelude::*;

use super::{check_enumerable, snap_to_rational, MallowsParams, MAX_ENUMERATION_N, SNAP_DENOMINATOR};
use crate::distance::kendall_tau;
use crate::error::Result;
use crate::lehmer::{decode, LehmerCode};
use crate::ranking::{Permutation, RankingSample, SampleMeta};
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// A sample together with the code coordinates it was built from; their sum
/// is the Kendall distance to the centroid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MallowsDraw {
    pub sigma: Permutation,
    pub coordinates: LehmerCode,
}

/// Draws each coordinate `c(j)` in `0..j` with probability proportional to
/// `phi^c(j)`, decodes, and relabels through the centroid.
pub fn sample_mallows_with(params: &MallowsParams, rng: &mut Rng) -> MallowsDraw {
    let n = params.n();
    let c: Vec<usize> = (1..=n).map(|j| truncated_geometric(params.phi, j, rng)).collect();
    let coordinates = LehmerCode::new(c).expect("coordinates are drawn in range");
    let tau = decode(&coordinates);
    let ranks = params.sigma0.ranks().iter().map(|&r| tau.rank(r)).collect();
    MallowsDraw {
        sigma: Permutation::from_ranks(ranks).expect("composition of permutations"),
        coordinates,
    }
}

pub fn sample_mallows(params: &MallowsParams, seed: u64) -> Permutation {
    sample_mallows_with(params, &mut rng_from_seed(seed)).sigma
}

/// `m` independent samples; sample `i` uses the stream `derive_seed(seed, i)`.
pub fn sample_mallows_batch(params: &MallowsParams, m: usize, seed: u64) -> Result<RankingSample> {
    let perms = (0..m as u64)
        .into_par_iter()
        .map(|i| sample_mallows(params, derive_seed(seed, i)))
        .collect();
    Ok(RankingSample::from_permutations(perms)?.with_meta(SampleMeta {
        source: "mallows".into(),
        seed: Some(seed),
        model: Some(format!("phi={}", params.phi)),
    }))
}

// k in 0..j with P[k] proportional to phi^k, by inverting the CDF
fn truncated_geometric(phi: f64, j: usize, rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    if phi >= 1.0 {
        return ((u * j as f64) as usize).min(j - 1);
    }
    let tail = 1.0 - u * (1.0 - phi.powi(j as i32));
    let k = (tail.ln() / phi.ln()).floor();
    if k.is_finite() && k >= 0.0 {
        (k as usize).min(j - 1)
    } else {
        0
    }
}

/// All permutations of `[n]`, ordered by their Lehmer codes.
pub fn enumerate_permutations(n: usize) -> Vec<Permutation> {
    let total: usize = (1..=n).product();
    (0..total)
        .map(|mut index| {
            let mut c = vec![0; n];
            for x in (1..=n).rev() {
                c[x - 1] = index % x;
                index /= x;
            }
            decode(&LehmerCode::new(c).expect("mixed-radix digits are in range"))
        })
        .collect()
}

/// Exact Mallows distribution, with `phi` snapped to a fraction `p/q` so
/// each weight is the integer `p^d q^(D - d)`, `D` the largest distance.
#[derive(Clone, Debug)]
pub struct MallowsPmf {
    sigma0: Permutation,
    phi: BigRational,
    perms: Vec<Permutation>,
    distances: Vec<u64>,
    weights: Vec<BigInt>,
    total: BigInt,
}

/// Enumerates `S_n` (`n <= 8`).
pub fn exact_mallows_pmf(params: &MallowsParams) -> Result<MallowsPmf> {
    let n = params.n();
    check_enumerable(n, MAX_ENUMERATION_N)?;
    let phi = snap_to_rational(params.phi, SNAP_DENOMINATOR);
    let perms = enumerate_permutations(n);
    let distances: Vec<u64> = perms
        .iter()
        .map(|p| kendall_tau(&params.sigma0, p).expect("same size"))
        .collect();
    let max_d = (n * n.saturating_sub(1) / 2) as u64;
    let weights: Vec<BigInt> = distances.iter().map(|&d| integer_weight(&phi, d, max_d)).collect();
    let total = weights.iter().fold(BigInt::zero(), |a, b| a + b);
    Ok(MallowsPmf {
        sigma0: params.sigma0.clone(),
        phi,
        perms,
        distances,
        weights,
        total,
    })
}

// phi^d scaled by den^max_d
pub(super) fn integer_weight(phi: &BigRational, d: u64, max_d: u64) -> BigInt {
    num_traits::pow(phi.numer().clone(), d as usize) * num_traits::pow(phi.denom().clone(), (max_d - d) as usize)
}

impl MallowsPmf {
    pub fn n(&self) -> usize {
        self.sigma0.n()
    }

    pub fn sigma0(&self) -> &Permutation {
        &self.sigma0
    }

    /// The fraction actually used for `phi`.
    pub fn phi(&self) -> &BigRational {
        &self.phi
    }

    pub fn permutations(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn distance(&self, i: usize) -> u64 {
        self.distances[i]
    }

    pub fn probability_exact(&self, i: usize) -> BigRational {
        BigRational::new(self.weights[i].clone(), self.total.clone())
    }

    pub fn probability(&self, i: usize) -> f64 {
        super::ratio_to_f64(&self.probability_exact(i))
    }

    pub fn to_map(&self) -> HashMap<Permutation, f64> {
        (0..self.perms.len()).map(|i| (self.perms[i].clone(), self.probability(i))).collect()
    }

    /// Exact `P[sigma_A(u) = j]` for `j` in `1..=|A|`, with `A` given sorted.
    pub fn position_distribution_exact(&self, u: usize, subset: &[usize]) -> Vec<BigRational> {
        let mut mass = vec![BigInt::zero(); subset.len()];
        for (p, w) in self.perms.iter().zip(&self.weights) {
            mass[projected_rank(p, u, subset) - 1] += w;
        }
        mass.into_iter().map(|w| BigRational::new(w, self.total.clone())).collect()
    }

    pub fn position_distribution(&self, u: usize, subset: &[usize]) -> Vec<f64> {
        self.position_distribution_exact(u, subset).iter().map(super::ratio_to_f64).collect()
    }

    /// Exact distribution of the projection onto `subset`, keyed by the
    /// projected permutation over `1..=|subset|`.
    pub fn projected_distribution(&self, subset: &[usize]) -> Result<HashMap<Permutation, BigRational>> {
        let mut out: HashMap<Permutation, BigInt> = HashMap::new();
        for (p, w) in self.perms.iter().zip(&self.weights) {
            *out.entry(p.project(subset)?.ranking).or_insert_with(BigInt::zero) += w;
        }
        Ok(out
            .into_iter()
            .map(|(k, w)| (k, BigRational::new(w, self.total.clone())))
            .collect())
    }

    /// Sum of all probabilities; one by construction.
    pub fn total_probability(&self) -> BigRational {
        let sum = self.weights.iter().fold(BigInt::zero(), |a, b| a + b);
        if self.total.is_zero() {
            BigRational::zero()
        } else {
            BigRational::new(sum, self.total.clone())
        }
    }

    #[cfg(test)]
    fn is_normalized(&self) -> bool {
        self.total_probability() == <BigRational as num_traits::One>::one()
    }
}

/// Rank of `u` among `subset` under `p`.
pub(super) fn projected_rank(p: &Permutation, u: usize, subset: &[usize]) -> usize {
    let ru = p.rank(u);
    1 + subset.iter().filter(|&&y| p.rank(y) < ru).count()
}
