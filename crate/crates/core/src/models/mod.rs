//! Mallows models over permutations and weak orders: samplers, exact
//! enumeration for small `n`, and checks of the position and vote bounds
//! that drive the recovery guarantees of the aggregators.

mod bounds;
mod gmm;
mod mallows;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use bounds::{
    check_lemma_position_ratios, check_lemma_tail_bounds, check_partial_vote_bound, sweep_bounds, BoundSweep, CheckStatus, PositionRatioReport,
    TailReport, VoteBoundReport,
};
pub use gmm::{
    enumerate_weak_orders, exact_gmm_pmf, sample_gmm_batch, sample_gmm_partial, sample_gmm_with, GmmPmf, MetropolisConfig,
    EXACT_GMM_MAX_N,
};
pub use mallows::{
    enumerate_permutations, exact_mallows_pmf, sample_mallows, sample_mallows_batch, sample_mallows_with, MallowsDraw,
    MallowsPmf,
};

use crate::error::{Error, Result};
use crate::ranking::{PartialRanking, Permutation};

/// Largest `n` handled by exhaustive enumeration of permutations.
pub const MAX_ENUMERATION_N: usize = 8;

/// Largest denominator used when a dispersion is turned into a fraction.
pub const SNAP_DENOMINATOR: u64 = 1_000_000;

/// `MM(sigma0, phi)`: `P[sigma]` proportional to `phi^kendall(sigma0, sigma)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MallowsParams {
    pub sigma0: Permutation,
    pub phi: f64,
    pub lambda: Option<f64>,
}

impl MallowsParams {
    pub fn new(sigma0: Permutation, phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(Error::InvalidPhi { phi });
        }
        Ok(MallowsParams { sigma0, phi, lambda: None })
    }

    /// `phi = exp(-lambda)`.
    pub fn from_lambda(sigma0: Permutation, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidPhi { phi: (-lambda).exp() });
        }
        let mut params = MallowsParams::new(sigma0, (-lambda).exp())?;
        params.lambda = Some(lambda);
        Ok(params)
    }

    pub fn n(&self) -> usize {
        self.sigma0.n()
    }
}

/// Generalized model over weak orders with the Kemeny distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub sigma0: PartialRanking,
    pub phi: f64,
}

impl GmmParams {
    pub fn new(sigma0: PartialRanking, phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::InvalidPhi { phi });
        }
        Ok(GmmParams { sigma0, phi })
    }

    pub fn n(&self) -> usize {
        self.sigma0.n()
    }
}

/// Partial geometric sums `phi_{s:t} = phi^s + ... + phi^t` and the
/// constants built from them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiSeries {
    pub phi: f64,
}

impl PhiSeries {
    pub fn new(phi: f64) -> Self {
        PhiSeries { phi }
    }

    /// Zero when `t < s`.
    pub fn sum(&self, s: i64, t: i64) -> f64 {
        (s..=t).map(|k| self.phi.powi(k as i32)).sum()
    }

    /// `phi_{1:n-1} / (1 + phi_{3:n})`; below 1 exactly when
    /// `phi + phi^2 < 1 + phi^n`.
    pub fn q(&self, n: usize) -> f64 {
        let n = n as i64;
        self.sum(1, n - 1) / (1.0 + self.sum(3, n))
    }

    /// `1 - sqrt(phi)/2 - phi/2`.
    pub fn q_prime(&self) -> f64 {
        1.0 - 0.5 * self.phi.sqrt() - 0.5 * self.phi
    }

    /// Upper bound on the ratio of adjacent position probabilities of one
    /// element within a subset of size `a` out of `n`.
    pub fn subset_ratio_bound(&self, n: usize, a: usize) -> f64 {
        let (n, a) = (n as i64, a as i64);
        (0..=n - a)
            .map(|l| {
                (self.phi + self.phi.powi(l as i32) * self.sum(2, n - l - 1))
                    / (1.0 + self.phi.powi(2 * l as i32) * self.sum(3, n - l))
            })
            .fold(f64::MIN, f64::max)
    }
}

/// Exact counterpart of [`PhiSeries`] over a rational dispersion.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ExactSeries {
    pub phi: BigRational,
}

impl ExactSeries {
    pub fn sum(&self, s: i64, t: i64) -> BigRational {
        let mut total = BigRational::zero();
        for k in s.max(0)..=t {
            total += pow(&self.phi, k as u32);
        }
        total
    }

    pub fn q(&self, n: usize) -> BigRational {
        let n = n as i64;
        self.sum(1, n - 1) / (BigRational::one() + self.sum(3, n))
    }

    pub fn subset_ratio_bound(&self, n: usize, a: usize) -> BigRational {
        let (n, a) = (n as i64, a as i64);
        (0..=n - a)
            .map(|l| {
                (self.phi.clone() + pow(&self.phi, l as u32) * self.sum(2, n - l - 1))
                    / (BigRational::one() + pow(&self.phi, 2 * l as u32) * self.sum(3, n - l))
            })
            .max()
            .expect("range is non-empty")
    }

    /// `phi_{1:k} / phi_{0:k}`.
    pub fn tail_ratio(&self, k: i64) -> BigRational {
        self.sum(1, k) / self.sum(0, k)
    }
}

pub(crate) fn pow(x: &BigRational, k: u32) -> BigRational {
    num_traits::pow(x.clone(), k as usize)
}

pub(crate) fn ratio_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Best rational approximation with denominator at most `max_den`, by
/// continued fractions.
pub fn snap_to_rational(x: f64, max_den: u64) -> BigRational {
    if !x.is_finite() {
        return BigRational::zero();
    }
    let negative = x < 0.0;
    let mut rest = x.abs();
    // convergents h/k
    let (mut h0, mut h1) = (0u128, 1u128);
    let (mut k0, mut k1) = (1u128, 0u128);
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as u128 {
            // best semiconvergent that still fits
            let t = (max_den as u128 - k0) / k1;
            let (hs, ks) = (t * h1 + h0, t * k1 + k0);
            let err = |h: u128, k: u128| (h as f64 / k as f64 - x.abs()).abs();
            if t > 0 && err(hs, ks) < err(h1, k1) {
                h1 = hs;
                k1 = ks;
            }
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a as f64;
        if frac < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
    }
    let r = BigRational::new(BigInt::from(h1), BigInt::from(k1.max(1)));
    if negative {
        -r
    } else {
        r
    }
}

/// Which recovery guarantee a sample size refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Guarantee {
    /// Mode rule on permutations.
    Mode,
    /// Median rule on permutations.
    Median,
    /// Median rule on partial rankings, recovering a tie-break of the centroid.
    PartialMedian,
}

impl Guarantee {
    pub fn parse(s: &str) -> Option<Guarantee> {
        match s {
            "mode" => Some(Guarantee::Mode),
            "median" => Some(Guarantee::Median),
            "partial-median" | "partial_median" => Some(Guarantee::PartialMedian),
            _ => None,
        }
    }
}

/// Constant and sample size of a recovery guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexity {
    pub guarantee: Guarantee,
    /// `q` for the mode rule, `q'` for partial median, `phi` for median.
    pub q: f64,
    pub c: f64,
    pub m: usize,
}

/// Number of samples after which the aggregator returns the centroid (or a
/// tie-break of it) with probability at least `1 - delta`:
/// - mode: `c = 2(1+q)^2/(1-q)^4`, `m = ceil(c ln(n^2 / 2 delta))`, needs `q < 1`;
/// - median: `c = 2/(1-2 phi)^2`, `m = ceil(c ln(2n / delta))`, needs `phi < 1/2`;
/// - partial median: `c = 2/(1-2q')^2`, `m = ceil(c ln(2n / delta))`, needs
///   `phi + sqrt(phi) < 1`.
pub fn sample_complexity_bound(guarantee: Guarantee, n: usize, phi: f64, delta: f64) -> Result<SampleComplexity> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::InvalidPhi { phi });
    }
    if !(delta > 0.0 && delta < 1.0) || n < 2 {
        return Err(Error::RegimeViolated(format!("need n >= 2 and 0 < delta < 1, got n = {n}, delta = {delta}")));
    }
    let series = PhiSeries::new(phi);
    let nf = n as f64;
    let (q, c, log_arg) = match guarantee {
        Guarantee::Mode => {
            if phi + phi * phi >= 1.0 + phi.powi(n as i32) {
                return Err(Error::RegimeViolated(format!("mode rule needs phi + phi^2 < 1 + phi^n, phi = {phi}")));
            }
            let q = series.q(n);
            (q, 2.0 * (1.0 + q).powi(2) / (1.0 - q).powi(4), nf * nf / (2.0 * delta))
        }
        Guarantee::Median => {
            if phi >= 0.5 {
                return Err(Error::RegimeViolated(format!("median rule needs phi < 0.5, phi = {phi}")));
            }
            (phi, 2.0 / (1.0 - 2.0 * phi).powi(2), 2.0 * nf / delta)
        }
        Guarantee::PartialMedian => {
            if phi + phi.sqrt() >= 1.0 {
                return Err(Error::RegimeViolated(format!("partial median needs phi + sqrt(phi) < 1, phi = {phi}")));
            }
            let q = series.q_prime();
            (q, 2.0 / (1.0 - 2.0 * q).powi(2), 2.0 * nf / delta)
        }
    };
    Ok(SampleComplexity {
        guarantee,
        q,
        c,
        m: (c * log_arg.ln()).ceil().max(1.0) as usize,
    })
}

pub(crate) fn check_enumerable(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::TooLarge { n, max });
    }
    Ok(())
}

pub(crate) fn is_nonnegative(x: &BigRational) -> bool {
    !x.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_sums() {
        let s = PhiSeries::new(0.5);
        assert_eq!(s.sum(3, 2), 0.0);
        assert!((s.sum(0, 2) - 1.75).abs() < 1e-15);
        // at the regime boundary q reaches 1
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!(PhiSeries::new(golden).q(200) > 0.999);
        assert!((PhiSeries::new(0.9).q(4) - 2.439 / 2.3851).abs() < 1e-12);
        assert!((PhiSeries::new(0.3).subset_ratio_bound(6, 6) - PhiSeries::new(0.3).q(6)).abs() < 1e-15);
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_to_rational(0.25, SNAP_DENOMINATOR), BigRational::new(1.into(), 4.into()));
        let third = snap_to_rational(1.0 / 3.0, SNAP_DENOMINATOR);
        assert_eq!(third, BigRational::new(1.into(), 3.into()));
        let e = snap_to_rational((-0.6f64).exp(), SNAP_DENOMINATOR);
        assert!(e.denom() <= &BigInt::from(SNAP_DENOMINATOR));
        assert!((ratio_to_f64(&e) - (-0.6f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn sample_sizes() {
        let median = sample_complexity_bound(Guarantee::Median, 10, 0.25, 0.05).unwrap();
        assert!((median.c - 8.0).abs() < 1e-12);
        assert_eq!(median.m, (8.0 * (20.0f64 / 0.05).ln()).ceil() as usize);
        assert!(matches!(
            sample_complexity_bound(Guarantee::Median, 10, 0.6, 0.05),
            Err(Error::RegimeViolated(_))
        ));
        assert!(matches!(
            sample_complexity_bound(Guarantee::Mode, 4, 0.9, 0.05),
            Err(Error::RegimeViolated(_))
        ));
        assert!(matches!(
            sample_complexity_bound(Guarantee::PartialMedian, 4, 0.5, 0.05),
            Err(Error::RegimeViolated(_))
        ));
        // independent evaluation of q by direct summation
        let (n, phi) = (10usize, 0.2f64);
        let mut num = 0.0;
        for k in 1..n {
            num += phi.powi(k as i32);
        }
        let mut den = 1.0;
        for k in 3..=n {
            den += phi.powi(k as i32);
        }
        let mode = sample_complexity_bound(Guarantee::Mode, n, phi, 0.05).unwrap();
        assert!((mode.q - num / den).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        let id = Permutation::identity(3);
        assert!(MallowsParams::new(id.clone(), 1.0).is_ok());
        assert!(matches!(MallowsParams::new(id.clone(), 0.0), Err(Error::InvalidPhi { .. })));
        assert!(matches!(MallowsParams::new(id.clone(), 1.5), Err(Error::InvalidPhi { .. })));
        let p = MallowsParams::from_lambda(id, 0.5).unwrap();
        assert!((p.phi - (-0.5f64).exp()).abs() < 1e-15);
        let flat = PartialRanking::from_labels(&[1, 1]).unwrap();
        assert!(matches!(GmmParams::new(flat, 1.0), Err(Error::InvalidPhi { .. })));
    }
}
