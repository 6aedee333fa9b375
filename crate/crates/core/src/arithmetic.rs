//! Rational approximation, strip classification and ergodization times.

use alloc::vec::Vec;

use crate::math::{self, gcd};
use crate::potentials::TrigPotential;
use crate::{Error, Result};

/// Relative guard band for floating-point threshold comparisons.
const GUARD: f64 = 1e-12;

/// `p/q` in lowest terms with `q >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rational {
    pub p: i64,
    pub q: i64,
}

impl Rational {
    pub fn new(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        let g = gcd(p, q).max(1);
        let s = if q < 0 { -1 } else { 1 };
        Self { p: s * p / g, q: s * q / g }
    }

    pub fn value(self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Partial quotients `[a0; a1, a2, ...]` of `x`, at most `max_terms` of them.
pub fn continued_fraction(x: f64, max_terms: usize) -> Vec<i64> {
    let mut out = Vec::new();
    let mut y = x;
    for _ in 0..max_terms {
        let a = math::floor(y);
        if !a.is_finite() || a.abs() > 1e15 {
            break;
        }
        out.push(a as i64);
        let f = y - a;
        if f < 1e-13 {
            break;
        }
        y = 1.0 / f;
    }
    out
}

/// Convergents of a continued fraction.
pub fn convergents(cf: &[i64]) -> Vec<Rational> {
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, 0i64, 1i64);
    let mut out = Vec::with_capacity(cf.len());
    for &a in cf {
        let (p, q) = (a.saturating_mul(p0).saturating_add(p1), a.saturating_mul(q0).saturating_add(q1));
        out.push(Rational { p, q });
        (p1, q1, p0, q0) = (p0, q0, p, q);
    }
    out
}

/// Best approximation `p/q` of `r` with `1 <= q <= qmax`, and its error.
///
/// Ties go to the smaller denominator.
pub fn best_rational(r: f64, qmax: i64) -> (i64, i64, f64) {
    assert!(qmax >= 1, "qmax must be positive");
    let cf = continued_fraction(r, 64);
    let conv = convergents(&cf);
    let mut best = Rational { p: math::round(r) as i64, q: 1 };
    let mut best_err = (r - best.value()).abs();
    let consider = |c: Rational, best: &mut Rational, best_err: &mut f64| {
        if c.q < 1 || c.q > qmax {
            return;
        }
        let e = (r - c.value()).abs();
        if e < *best_err || (e == *best_err && c.q < best.q) {
            *best = Rational::new(c.p, c.q);
            *best_err = e;
        }
    };
    for (n, c) in conv.iter().enumerate() {
        if c.q > qmax {
            // largest admissible semiconvergent between the previous two
            if n >= 1 {
                let prev = conv[n - 1];
                let (pp, qp) = if n >= 2 { (conv[n - 2].p, conv[n - 2].q) } else { (1, 0) };
                let a = (qmax - qp) / prev.q;
                for t in [a, a - 1] {
                    if t >= 1 {
                        consider(Rational { p: t * prev.p + pp, q: t * prev.q + qp }, &mut best, &mut best_err);
                    }
                }
            }
            break;
        }
        consider(*c, &mut best, &mut best_err);
    }
    (best.p, best.q, best_err)
}

/// The exponent ledger for the strip decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StripParams {
    pub gamma: f64,
    pub nu: f64,
    pub b: f64,
    pub rho: f64,
    pub big_r: f64,
    pub tau: f64,
    pub beta: f64,
    pub kappa: f64,
    pub delta: f64,
    pub l: u32,
    pub d: usize,
}

impl StripParams {
    /// `nu = 1/4`, `R = (l-5)/(l-2)`, `rho = R nu`, `b = (nu - rho)/2`.
    pub fn new(l: u32, d: usize, gamma: f64, tau: f64, kappa: f64, delta: f64, beta: f64) -> Result<Self> {
        if l < 6 {
            return Err(Error::InvalidParameter { name: "l", reason: "must be at least 6" });
        }
        if d < 1 {
            return Err(Error::InvalidParameter { name: "d", reason: "must be positive" });
        }
        if !(gamma > 0.8 && gamma < 0.8 + 1.0 / 40.0) {
            return Err(Error::InvalidParameter { name: "gamma", reason: "must lie in (4/5, 4/5 + 1/40)" });
        }
        if !(tau > 0.0 && tau < 1.0 / 40.0) {
            return Err(Error::InvalidParameter { name: "tau", reason: "must lie in (0, 1/40)" });
        }
        if !(kappa > 1.0 / 11.0 && kappa < 1.0 / 3.0) {
            return Err(Error::InvalidParameter { name: "kappa", reason: "must lie in (1/11, 1/3)" });
        }
        if !(delta > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidParameter { name: "delta/beta", reason: "must be positive" });
        }
        let nu = 0.25;
        let big_r = (l as f64 - 5.0) / (l as f64 - 2.0);
        let rho = big_r * nu;
        let b = (nu - rho) / 2.0;
        if 2.0 * (1.0 - gamma) - nu - b < 1.0 / 160.0 {
            return Err(Error::InvalidParameter { name: "gamma", reason: "2(1-gamma) - nu - b < 1/160" });
        }
        Ok(Self { gamma, nu, b, rho, big_r, tau, beta, kappa, delta, l, d })
    }

    /// `l = 6`, `d = 1`, `gamma = 0.81`, `tau = 0.02`, `kappa = 0.2`,
    /// `delta = 0.1`, `beta = 0.05`.
    pub fn standard() -> Self {
        Self::new(6, 1, 0.81, 0.02, 0.2, 0.1, 0.05).expect("admissible defaults")
    }

    /// `zeta = min(tau - delta, 1/5 - 3 delta, a - delta)`.
    pub fn zeta(&self, a: f64) -> f64 {
        (self.tau - self.delta).min(0.2 - 3.0 * self.delta).min(a - self.delta)
    }

    /// Whether the tighter `tau < 1e-4` used in the expectation estimates holds.
    pub fn has_tight_tau(&self) -> bool {
        self.tau < 1e-4
    }

    pub fn strip_width(&self, eps: f64) -> f64 {
        math::powf(eps, self.gamma)
    }

    /// `eps^{-b}`: denominators below this count as low for strips.
    pub fn denominator_bound(&self, eps: f64) -> f64 {
        math::powf(eps, -self.b)
    }

    /// `eps^{-(nu + b + 2 tau)}`.
    pub fn ergodization_bound(&self, eps: f64) -> f64 {
        math::powf(eps, -(self.nu + self.b + 2.0 * self.tau))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StripKind {
    TotallyIrrational,
    ImaginaryRational(Rational),
    Resonant(Rational),
}

impl StripKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::TotallyIrrational => "TI",
            Self::ImaginaryRational(_) => "IR",
            Self::Resonant(_) => "RES",
        }
    }

    pub fn witness(&self) -> Option<Rational> {
        match self {
            Self::TotallyIrrational => None,
            Self::ImaginaryRational(w) | Self::Resonant(w) => Some(*w),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StripClass {
    pub r_lo: f64,
    pub r_hi: f64,
    pub kind: StripKind,
}

fn distance_to_interval(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

/// Rationals `p/q` with `q_lo <= q <= q_hi` within `radius` of `[lo, hi]`.
fn rationals_near(lo: f64, hi: f64, radius: f64, q_lo: i64, q_hi: i64) -> Vec<Rational> {
    let mut out = Vec::new();
    for q in q_lo.max(1)..=q_hi {
        let qf = q as f64;
        let p_lo = math::floor((lo - radius) * qf) as i64;
        let p_hi = math::floor((hi + radius) * qf) as i64 + 1;
        for p in p_lo..=p_hi {
            if gcd(p, q) != 1 {
                continue;
            }
            let x = p as f64 / qf;
            if distance_to_interval(x, lo, hi) <= radius * (1.0 + GUARD) {
                out.push(Rational { p, q });
            }
        }
    }
    out
}

/// Largest integer strictly below `x`, guarded against rounding at integers.
fn strictly_below(x: f64) -> i64 {
    let f = math::floor(x * (1.0 - GUARD));
    if f >= x {
        f as i64 - 1
    } else {
        f as i64
    }
}

/// Classifies the action interval `[r_lo, r_hi]`.
///
/// Resonant when within `2 beta` of some `p/q` with `q <= 2d`; otherwise
/// imaginary rational when some `p/q` with `2d < q < eps^{-b}` lies within
/// `eps^nu` of the interval; otherwise totally irrational.
pub fn classify(r_lo: f64, r_hi: f64, params: &StripParams, eps: f64) -> Result<StripClass> {
    let two_d = 2 * params.d as i64;
    let res = rationals_near(r_lo, r_hi, 2.0 * params.beta, 1, two_d);
    if let Some(w) = res
        .iter()
        .min_by(|a, b| {
            distance_to_interval(a.value(), r_lo, r_hi).total_cmp(&distance_to_interval(b.value(), r_lo, r_hi))
        })
        .copied()
    {
        return Ok(StripClass { r_lo, r_hi, kind: StripKind::Resonant(w) });
    }
    let q_hi = strictly_below(params.denominator_bound(eps));
    let ir = rationals_near(r_lo, r_hi, math::powf(eps, params.nu), two_d + 1, q_hi);
    match ir.as_slice() {
        [] => Ok(StripClass { r_lo, r_hi, kind: StripKind::TotallyIrrational }),
        [w] => Ok(StripClass { r_lo, r_hi, kind: StripKind::ImaginaryRational(*w) }),
        [a, b, ..] => Err(Error::AmbiguousClass { first: (a.p, a.q), second: (b.p, b.q) }),
    }
}

/// Classifies consecutive strips of width `eps^gamma` covering `[lo, hi]`.
pub fn scan(lo: f64, hi: f64, params: &StripParams, eps: f64) -> Result<Vec<StripClass>> {
    strip_grid(lo, hi, params.strip_width(eps))
        .into_iter()
        .map(|(a, b)| classify(a, b, params, eps))
        .collect()
}

/// Consecutive intervals of width `w` covering `[lo, hi]`; the last one is
/// clipped at `hi`.
pub fn strip_grid(lo: f64, hi: f64, w: f64) -> Vec<(f64, f64)> {
    let n = math::floor((hi - lo) / w * (1.0 - GUARD)) as usize + 1;
    (0..n)
        .map(|j| (lo + j as f64 * w, (lo + (j + 1) as f64 * w).min(hi)))
        .filter(|(a, b)| b > a)
        .collect()
}

/// Which rationals enter the measured union.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IrMeasureOptions {
    /// Only `q > min_denominator` are used. `0` admits every `q`; `2d`
    /// keeps the imaginary-rational denominators only.
    pub min_denominator: i64,
    /// Intervals are `[p/q - f eps^nu, p/q + f eps^nu]`.
    pub half_width_factor: f64,
}

impl IrMeasureOptions {
    /// Every rational with `q <= eps^{-b}` (integers always included).
    pub fn all_rationals() -> Self {
        Self { min_denominator: 0, half_width_factor: 2.0 }
    }

    /// Rationals with `2d < q <= eps^{-b}`.
    pub fn imaginary_rational(d: usize) -> Self {
        Self { min_denominator: 2 * d as i64, half_width_factor: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IrMeasure {
    /// Lebesgue measure of the union, clipped to the range.
    pub measure: f64,
    /// Number of rationals used.
    pub count: usize,
    /// `eps^rho`.
    pub rho_bound: f64,
    /// `count * 2 f eps^nu`.
    pub count_bound: f64,
    /// Merged intervals.
    pub intervals: Vec<(f64, f64)>,
}

impl IrMeasure {
    pub fn within_rho_bound(&self) -> bool {
        self.measure <= self.rho_bound
    }
}

/// Measure of the union of neighbourhoods of the rationals with
/// `q <= eps^{-b}` in `[lo, hi]`, by sorting and merging.
pub fn ir_measure(params: &StripParams, eps: f64, lo: f64, hi: f64, opts: IrMeasureOptions) -> IrMeasure {
    let qmax = math::floor(params.denominator_bound(eps) * (1.0 + GUARD)) as i64;
    let hw = opts.half_width_factor * math::powf(eps, params.nu);
    let q_lo = opts.min_denominator + 1;
    let q_hi = if opts.min_denominator == 0 { qmax.max(1) } else { qmax };
    let rats = rationals_near(lo, hi, hw, q_lo, q_hi);
    let mut ivs: Vec<(f64, f64)> = rats
        .iter()
        .map(|r| ((r.value() - hw).max(lo), (r.value() + hw).min(hi)))
        .filter(|(a, b)| b > a)
        .collect();
    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in ivs {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let measure = merged.iter().fold(0.0, |acc, (a, b)| acc + (b - a));
    IrMeasure {
        measure,
        count: rats.len(),
        rho_bound: math::powf(eps, params.rho),
        count_bound: rats.len() as f64 * 2.0 * hw,
        intervals: merged,
    }
}

/// Whether every `p/q` within `eps^nu` of `r` has `q > eps^{-b}`.
pub fn is_ti_admissible(r: f64, params: &StripParams, eps: f64) -> bool {
    let qb = math::floor(params.denominator_bound(eps) * (1.0 + GUARD)) as i64;
    if qb < 1 {
        return true;
    }
    let (_, _, err) = best_rational(r, qb);
    err >= math::powf(eps, params.nu) * (1.0 - GUARD)
}

/// Number of rotations after which Birkhoff sums along `r*` are close to the
/// angular average.
///
/// A rational `r* = p/q` with `q <= eps^{-(nu+b+2 tau)}` returns `q`;
/// otherwise the largest convergent denominator below that bound.
pub fn ergodization_time(r_star: f64, params: &StripParams, eps: f64) -> Result<u64> {
    if !is_ti_admissible(r_star, params, eps) {
        let (p, q, _) = best_rational(r_star, math::floor(params.denominator_bound(eps)).max(1.0) as i64);
        return Err(Error::NotTiAdmissible { p, q });
    }
    let bound = params.ergodization_bound(eps);
    let qmax = math::floor(bound) as i64;
    let cf = continued_fraction(r_star, 64);
    let conv = convergents(&cf);
    let last = conv.last().copied().unwrap_or(Rational { p: 0, q: 1 });
    let exact = (last.value() - r_star).abs() == 0.0;
    if exact && last.q <= qmax {
        return Ok(last.q as u64);
    }
    let n = conv.iter().filter(|c| c.q <= qmax).map(|c| c.q).max().unwrap_or(1);
    let p = math::round(n as f64 * r_star);
    debug_assert!(
        (n as f64 * r_star - p).abs() <= 2.0 / bound * (1.0 + 1e-9),
        "convergent does not ergodize"
    );
    Ok(n as u64)
}

/// `|N g_0(r*) - sum_{k<N} g(theta* + k r*, r*)|`.
pub fn birkhoff_deviation(g: &TrigPotential, theta_star: f64, r_star: f64, n: u64) -> f64 {
    let h = g.harmonics_at(r_star);
    let mut sum = 0.0;
    for k in 0..n {
        sum += h.eval(math::frac(theta_star + k as f64 * r_star));
    }
    (n as f64 * h.get(0).re - sum).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const GOLDEN: f64 = 0.6180339887498949;

    fn brute_best(r: f64, qmax: i64) -> (i64, i64, f64) {
        let mut best = (0, 1, f64::INFINITY);
        for q in 1..=qmax {
            let p = math::round(r * q as f64) as i64;
            for pp in [p - 1, p, p + 1] {
                let e = (r - pp as f64 / q as f64).abs();
                if e < best.2 {
                    best = (pp, q, e);
                }
            }
        }
        let g = gcd(best.0, best.1);
        (best.0 / g, best.1 / g, best.2)
    }

    #[test]
    fn best_rational_examples() {
        assert_eq!(best_rational(0.5, 10), (1, 2, 0.0));
        let (p, q, e) = best_rational(0.3334, 10);
        assert_eq!((p, q), (1, 3));
        assert_abs_diff_eq!(e, 0.3334 - 1.0 / 3.0, epsilon = 1e-15);
        let (p, q, e) = best_rational(GOLDEN, 13);
        assert_eq!((p, q), (8, 13));
        assert_abs_diff_eq!(e, 2.65e-3, epsilon = 1e-5);
    }

    #[test]
    fn convergents_of_golden_are_fibonacci() {
        let c = convergents(&continued_fraction(GOLDEN, 12));
        let qs: Vec<i64> = c.iter().map(|r| r.q).collect();
        assert_eq!(&qs[..8], &[1, 1, 2, 3, 5, 8, 13, 21]);
    }

    #[test]
    fn parameter_ledger() {
        let p = StripParams::standard();
        assert_abs_diff_eq!(p.big_r, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p.rho, 1.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.b, 3.0 / 32.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.zeta(0.55), -0.1, epsilon = 1e-15);
        assert!(StripParams::new(6, 1, 0.8, 0.02, 0.2, 0.1, 0.05).is_err());
        assert!(StripParams::new(6, 1, 0.81, 0.03, 0.2, 0.1, 0.05).is_err());
        assert!(StripParams::new(6, 1, 0.81, 0.02, 0.05, 0.1, 0.05).is_err());
        assert!(StripParams::new(5, 1, 0.81, 0.02, 0.2, 0.1, 0.05).is_err());
    }

    #[test]
    fn classification_examples() {
        let p = StripParams::standard();
        let eps = 1e-6;
        let w = p.strip_width(eps);
        let c = classify(GOLDEN - w / 2.0, GOLDEN + w / 2.0, &p, eps).unwrap();
        assert_eq!(c.kind, StripKind::TotallyIrrational);
        let c = classify(0.5 - w / 2.0, 0.5 + w / 2.0, &p, eps).unwrap();
        assert_eq!(c.kind, StripKind::Resonant(Rational { p: 1, q: 2 }));
        let third = 1.0 / 3.0;
        let c = classify(third + 2.0 * w, third + 3.0 * w, &p, eps).unwrap();
        assert_eq!(c.kind, StripKind::ImaginaryRational(Rational { p: 1, q: 3 }));
    }

    #[test]
    fn close_rationals_are_ambiguous() {
        // d = 1 but eps^{-b} large: 1/3 and 2/5 both within eps^nu of 0.37
        let p = StripParams::new(6, 1, 0.81, 0.02, 0.2, 0.1, 0.01).unwrap();
        let err = classify(0.366, 0.367, &p, 1e-30).err();
        assert!(err.is_none() || matches!(err, Some(Error::AmbiguousClass { .. })));
        let loose = classify(0.36, 0.37, &p, 1e-3);
        assert!(loose.is_ok());
    }

    fn sweep_union(ivs: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
        // coverage sweep over sorted endpoints
        let mut ev: Vec<(f64, i32)> = Vec::new();
        for &(a, b) in ivs {
            let (a, b) = (a.max(lo), b.min(hi));
            if b > a {
                ev.push((a, 1));
                ev.push((b, -1));
            }
        }
        ev.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)));
        let (mut depth, mut start, mut total) = (0, 0.0, 0.0);
        for (x, d) in ev {
            if depth == 0 && d == 1 {
                start = x;
            }
            depth += d;
            if depth == 0 {
                total += x - start;
            }
        }
        total
    }

    fn oracle(params: &StripParams, eps: f64, opts: IrMeasureOptions) -> f64 {
        let qmax = math::floor(params.denominator_bound(eps) * (1.0 + GUARD)) as i64;
        let hw = opts.half_width_factor * math::powf(eps, params.nu);
        let mut ivs = Vec::new();
        for q in 1..=qmax.max(1) {
            if q <= opts.min_denominator {
                continue;
            }
            for p in -1..=q + 1 {
                if gcd(p, q) == 1 {
                    let x = p as f64 / q as f64;
                    ivs.push((x - hw, x + hw));
                }
            }
        }
        sweep_union(&ivs, 0.0, 1.0)
    }

    #[test]
    fn ir_measure_matches_sweep() {
        let p = StripParams::standard();
        for eps in [1e-4, 1e-6, 1e-9, 1e-12] {
            for opts in [IrMeasureOptions::all_rationals(), IrMeasureOptions::imaginary_rational(1)] {
                let m = ir_measure(&p, eps, 0.0, 1.0, opts);
                assert_abs_diff_eq!(m.measure, oracle(&p, eps, opts), epsilon = 1e-12);
                assert!(m.measure <= m.count_bound + 1e-15);
            }
        }
    }

    #[test]
    fn ir_measure_edge_and_scaling() {
        let p = StripParams::standard();
        // eps^{-b} < 2 at eps = 1e-3: only integers, two clipped end pieces
        let eps = 1e-3;
        let m = ir_measure(&p, eps, 0.0, 1.0, IrMeasureOptions::all_rationals());
        assert_eq!(m.count, 2);
        assert_abs_diff_eq!(m.measure, 4.0 * math::powf(eps, 0.25), epsilon = 1e-15);
        // doubling the half-width doubles a disjoint union
        let eps = 1e-12;
        let one = ir_measure(&p, eps, 0.0, 1.0, IrMeasureOptions { min_denominator: 2, half_width_factor: 1.0 });
        let two = ir_measure(&p, eps, 0.0, 1.0, IrMeasureOptions { min_denominator: 2, half_width_factor: 2.0 });
        assert_eq!(one.intervals.len(), one.count);
        assert_abs_diff_eq!(two.measure, 2.0 * one.measure, epsilon = 1e-15);
    }

    #[test]
    fn ergodization_examples() {
        let p = StripParams::standard();
        for eps in [1e-3, 1e-4, 1e-5] {
            let n = ergodization_time(GOLDEN, &p, eps).unwrap();
            let bound = p.ergodization_bound(eps);
            let fib = [1u64, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233];
            let expect = fib.iter().copied().filter(|f| (*f as f64) <= bound).max().unwrap();
            assert_eq!(n, expect);
        }
        // a rational with a mid-size denominator is its own period
        let eps = 1e-5;
        let r = 7.0 / 23.0;
        assert!(p.denominator_bound(eps) < 23.0 && 23.0 <= p.ergodization_bound(eps));
        assert_eq!(ergodization_time(r, &p, eps).unwrap(), 23);
        // huge partial quotient after [0; 1, 1, 1]
        let r = 1.0 / (1.0 + 1.0 / (1.0 + 1.0 / (1.0 + 1.0 / (1e6 + GOLDEN))));
        let n = ergodization_time(r, &p, 1e-5).unwrap();
        assert_eq!(n, 3);
        assert!((n as f64 * r - math::round(n as f64 * r)).abs() < p.ergodization_bound(1e-5).recip());
        assert!(matches!(ergodization_time(0.5, &p, 1e-5), Err(Error::NotTiAdmissible { p: 1, q: 2 })));
    }

    #[test]
    fn birkhoff_examples() {
        assert_eq!(birkhoff_deviation(&TrigPotential::constant(2.5), 0.3, GOLDEN, 17), 0.0);
        let c = TrigPotential::cos(1, 1.0);
        assert_abs_diff_eq!(birkhoff_deviation(&c, 0.0, 0.5, 2), 0.0, epsilon = 1e-15);
        let mut prev = f64::INFINITY;
        for n in [8u64, 21, 55, 144, 377] {
            let dev = birkhoff_deviation(&c, 0.0, GOLDEN, n);
            let z = math::turn(GOLDEN);
            let bound = (crate::Complex64::new(1.0, 0.0) - math::turn(n as f64 * GOLDEN)).norm()
                / (crate::Complex64::new(1.0, 0.0) - z).norm();
            assert!(dev <= bound + 1e-12);
            assert!(dev < prev);
            prev = dev;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn best_rational_matches_brute_force(r in -3.0f64..3.0, qmax in 1i64..200) {
            let (p, q, e) = best_rational(r, qmax);
            let (bp, bq, be) = brute_best(r, qmax);
            prop_assert!(e <= be * (1.0 + 1e-12) + 1e-17, "{p}/{q} {e} vs {bp}/{bq} {be}");
            prop_assert!(q >= 1 && q <= qmax && gcd(p, q) == 1);
        }

        #[test]
        fn classification_changes_pass_through_ir(c in 0.0f64..1.0, shift in -1.0f64..1.0) {
            let params = StripParams::standard();
            let eps = 1e-6;
            let w = params.strip_width(eps);
            let a = classify(c, c + w, &params, eps).unwrap().kind;
            let s = shift * eps / 10.0;
            let b = classify(c + s, c + w + s, &params, eps).unwrap().kind;
            let direct = matches!((a, b), (StripKind::TotallyIrrational, StripKind::Resonant(_)) | (StripKind::Resonant(_), StripKind::TotallyIrrational));
            prop_assert!(!direct);
        }
    }
}
