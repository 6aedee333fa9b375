//! Goodness-of-fit statistics and simple report types.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math::{self, normal_cdf_with};
use crate::rng::SymbolStream;
use crate::{Error, Result};

/// Drift and variance of a limiting diffusion.
pub trait DiffusionCoeffs {
    fn drift(&self, r: f64) -> f64;
    fn variance(&self, r: f64) -> f64;
}

/// Constant coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantCoeffs {
    pub b: f64,
    pub sigma2: f64,
}

impl DiffusionCoeffs for ConstantCoeffs {
    fn drift(&self, _r: f64) -> f64 {
        self.b
    }
    fn variance(&self, _r: f64) -> f64 {
        self.sigma2
    }
}

/// Coefficients given by a pair of functions.
pub struct FnCoeffs<B, S> {
    pub b: B,
    pub sigma2: S,
}

impl<B: Fn(f64) -> f64, S: Fn(f64) -> f64> DiffusionCoeffs for FnCoeffs<B, S> {
    fn drift(&self, r: f64) -> f64 {
        (self.b)(r)
    }
    fn variance(&self, r: f64) -> f64 {
        (self.sigma2)(r)
    }
}

/// Sample moments.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        math::sqrt(self.variance / self.n as f64)
    }
}

/// Moments of `xs`. The result does not depend on the order of `xs`: the
/// data are summed in sorted order.
pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len();
    if n == 0 {
        return Moments::default();
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mean = v.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in &v {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2n, m3n, m4n) = (m2 / nf, m3 / nf, m4 / nf);
    let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
    let (skewness, excess_kurtosis) = if m2n > 0.0 {
        (m3n / (m2n * math::sqrt(m2n)), m4n / (m2n * m2n) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Moments { n, mean, variance, skewness, excess_kurtosis }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `xs` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Anderson-Darling statistic of `xs` against `cdf`.
pub fn anderson_darling<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let v = sorted(xs);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let clamp = |p: f64| p.clamp(1e-300, 1.0 - 1e-16);
    let mut s = 0.0;
    for i in 0..n {
        let a = clamp(cdf(v[i]));
        let b = clamp(cdf(v[n - 1 - i]));
        s += (2.0 * i as f64 + 1.0) * (math::ln(a) + math::ln(1.0 - b));
    }
    -nf - s / nf
}

/// Asymptotic 5% critical value of the KS distance, `1.36/sqrt(M)`.
pub fn ks_critical_5pct(m: usize) -> f64 {
    1.36 / math::sqrt(m as f64)
}

/// Pass thresholds for [`clt_test`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CltThresholds {
    /// Allowed relative deviation of the sample variance.
    pub variance_rel: f64,
    /// Allowed `|mean - reference mean|`.
    pub mean_abs: f64,
    pub ks: f64,
    pub min_samples: usize,
}

impl Default for CltThresholds {
    fn default() -> Self {
        Self { variance_rel: 0.07, mean_abs: 0.01, ks: 0.03, min_samples: 1000 }
    }
}

/// Comparison of displacement samples with `N(s b, s sigma^2)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CltReport {
    pub moments: Moments,
    pub reference_mean: f64,
    pub reference_variance: f64,
    pub ks: f64,
    pub anderson_darling: f64,
    pub variance_ok: bool,
    pub mean_ok: bool,
    pub ks_ok: bool,
    pub thresholds: CltThresholds,
}

impl CltReport {
    pub fn pass(&self) -> bool {
        self.variance_ok && self.mean_ok && self.ks_ok
    }
}

/// Tests displacements after diffusion time `s` against the normal law
/// with mean `s b` and variance `s sigma^2`.
pub fn clt_test(samples: &[f64], s: f64, b: f64, sigma2: f64, th: CltThresholds) -> Result<CltReport> {
    if samples.len() < th.min_samples {
        return Err(Error::InsufficientSamples { got: samples.len(), need: th.min_samples });
    }
    let mom = moments(samples);
    let (rm, rv) = (s * b, s * sigma2);
    let cdf = |x: f64| normal_cdf_with(x, rm, rv);
    let ks = ks_distance(samples, cdf);
    let ad = anderson_darling(samples, cdf);
    Ok(CltReport {
        moments: mom,
        reference_mean: rm,
        reference_variance: rv,
        ks,
        anderson_darling: ad,
        variance_ok: (mom.variance - rv).abs() <= th.variance_rel * rv,
        mean_ok: (mom.mean - rm).abs() <= th.mean_abs,
        ks_ok: ks <= th.ks,
        thresholds: th,
    })
}

/// A single pass/fail statistic.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub m: usize,
    pub seed: u64,
}

impl TestReport {
    /// Passes when `statistic <= threshold`.
    pub fn at_most(test: &str, statistic: f64, threshold: f64, m: usize, seed: u64) -> Self {
        Self { test: String::from(test), statistic, threshold, pass: statistic <= threshold, m, seed }
    }
}

/// `S_n / sqrt(n)` with `S_n = sum_k v_k w_k`, one sample per stream index.
pub fn weighted_bernoulli_samples(v: &[f64], m: usize, seed: u64) -> Vec<f64> {
    (0..m as u64).map(|i| weighted_bernoulli_sample(v, seed, i)).collect()
}

/// One sample of `S_n / sqrt(n)` drawn from stream `index`.
pub fn weighted_bernoulli_sample(v: &[f64], seed: u64, index: u64) -> f64 {
    let mut st = SymbolStream::new(seed, index);
    let mut s = 0.0;
    let mut chunks = v.chunks_exact(64);
    for chunk in &mut chunks {
        let mut bits = st.next_u64();
        for x in chunk {
            s += if bits & 1 == 1 { *x } else { -*x };
            bits >>= 1;
        }
    }
    for x in chunks.remainder() {
        s += *x * f64::from(st.next_symbol());
    }
    s / math::sqrt(v.len() as f64)
}

/// Outcome of the weighted Bernoulli CLT check.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedBernoulliReport {
    pub n: usize,
    pub m: usize,
    /// `sum v_k^2 / n`.
    pub finite_n_variance: f64,
    /// Limit used for the reference normal.
    pub sigma2: f64,
    pub moments: Moments,
    pub ks: f64,
}

/// Compares `S_n/sqrt(n)` against `N(0, sigma2)`.
pub fn weighted_bernoulli_clt(v: &[f64], sigma2: f64, m: usize, seed: u64) -> WeightedBernoulliReport {
    let samples = weighted_bernoulli_samples(v, m, seed);
    weighted_bernoulli_report(v, sigma2, &samples)
}

/// Builds the report from samples produced elsewhere.
pub fn weighted_bernoulli_report(v: &[f64], sigma2: f64, samples: &[f64]) -> WeightedBernoulliReport {
    let n = v.len();
    let fin = v.iter().map(|x| x * x).sum::<f64>() / n.max(1) as f64;
    let moments = moments(samples);
    let ks = if sigma2 > 0.0 {
        ks_distance(samples, |x| normal_cdf_with(x, 0.0, sigma2))
    } else {
        // degenerate law at 0: the sup is attained just below or at 0
        let n = samples.len().max(1) as f64;
        let below = samples.iter().filter(|x| **x < 0.0).count() as f64 / n;
        let above = samples.iter().filter(|x| **x > 0.0).count() as f64 / n;
        below.max(above)
    };
    WeightedBernoulliReport { n, m: samples.len(), finite_n_variance: fin, sigma2, moments, ks }
}

/// One histogram bin.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: u64,
    pub density: f64,
}

/// Equal-width histogram on `[lo, hi]`; samples outside are dropped from
/// the counts but still count in the density normalization.
pub fn histogram(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Vec<Bin>> {
    if bins < 2 || !(hi > lo) {
        return Err(Error::InvalidParameter { name: "bins", reason: "need at least two bins on a nonempty range" });
    }
    let w = (hi - lo) / bins as f64;
    let mut counts = alloc::vec![0u64; bins];
    for x in xs {
        if *x >= lo && *x <= hi {
            let j = (math::floor((x - lo) / w) as usize).min(bins - 1);
            counts[j] += 1;
        }
    }
    let n = xs.len().max(1) as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(j, c)| Bin {
            left: lo + j as f64 * w,
            right: lo + (j + 1) as f64 * w,
            count: *c,
            density: *c as f64 / (n * w),
        })
        .collect())
}

/// Star discrepancy of points in `[0, 1)`.
pub fn star_discrepancy(xs: &[f64]) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}
