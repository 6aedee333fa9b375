//! The standing hypotheses H0 to H5 on the potentials.

use alloc::vec::Vec;

use crate::math::{self, gcd, TAU};
use crate::potentials::{SystemPotentials, TrigPotential};
use crate::roots::{self, periodic_roots};
use crate::Complex64;

/// Slopes below this at a zero of `Ev_{p,q}` count as degenerate.
pub const DEGENERATE_SLOPE: f64 = 1e-8;
/// Slopes in `[DEGENERATE_SLOPE, MARGINAL_SLOPE)` are neither a clean pass
/// nor a clean fail.
pub const MARGINAL_SLOPE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Hypothesis {
    H0,
    H1,
    H2,
    H3,
    H4,
    H5,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 6] = [Self::H0, Self::H1, Self::H2, Self::H3, Self::H4, Self::H5];

    pub fn name(self) -> &'static str {
        match self {
            Self::H0 => "H0",
            Self::H1 => "H1",
            Self::H2 => "H2",
            Self::H3 => "H3",
            Self::H4 => "H4",
            Self::H5 => "H5",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Status {
    Pass,
    /// Holds because there is nothing to check (no integer in range, or
    /// `Ev_{p,q}` vanishes identically).
    Vacuous,
    Fail,
    IllConditioned,
}

impl Status {
    pub fn is_ok(self) -> bool {
        matches!(self, Self::Pass | Self::Vacuous)
    }
}

/// Where a hypothesis was decided.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Witness {
    pub r: Option<f64>,
    pub theta: Option<f64>,
    pub p: Option<i64>,
    pub q: Option<i64>,
    /// The quantity compared against the tolerance.
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypothesisResult {
    pub hypothesis: Hypothesis,
    pub status: Status,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypothesisReport {
    pub r_lo: f64,
    pub r_hi: f64,
    pub results: Vec<HypothesisResult>,
    /// Hypotheses a caller should insist on for this system.
    pub required: Vec<Hypothesis>,
}

impl HypothesisReport {
    pub fn get(&self, h: Hypothesis) -> &HypothesisResult {
        self.results.iter().find(|r| r.hypothesis == h).expect("all hypotheses are checked")
    }

    /// Required hypotheses that did not pass.
    pub fn failed_required(&self) -> Vec<Hypothesis> {
        self.required.iter().copied().filter(|h| !self.get(*h).status.is_ok()).collect()
    }

    pub fn required_ok(&self) -> bool {
        self.failed_required().is_empty()
    }

    /// The first ill-conditioned check, as an error.
    pub fn ill_conditioned(&self) -> Option<crate::Error> {
        self.results.iter().find(|r| r.status == Status::IllConditioned).map(|r| {
            crate::Error::IllConditioned { what: r.hypothesis.name(), margin: r.witness.value }
        })
    }
}

/// Which hypotheses a system must satisfy.
///
/// The standard-map family (`u_i = v_i`, no `r`-dependence), which includes
/// the cos/sin example, is only asked for H0 to H2: for it H4 can fail at
/// `p/q = 1/2` without affecting the far-from-resonance analysis.
pub fn required_set(sys: &SystemPotentials) -> Vec<Hypothesis> {
    if sys.is_standard_map_class() {
        alloc::vec![Hypothesis::H0, Hypothesis::H1, Hypothesis::H2]
    } else {
        Hypothesis::ALL.to_vec()
    }
}

/// Runs every hypothesis over the action range `[r_lo, r_hi]`.
pub fn check_hypotheses(sys: &SystemPotentials, r_lo: f64, r_hi: f64) -> HypothesisReport {
    let results = alloc::vec![
        check_h0(sys),
        check_h1(sys, r_lo, r_hi),
        HypothesisResult { hypothesis: Hypothesis::H2, status: Status::Pass, witness: Witness::default() },
        check_h3(sys, r_lo, r_hi),
        check_h4(sys, r_lo, r_hi),
        check_h5(sys, r_lo, r_hi),
    ];
    HypothesisReport { r_lo, r_hi, results, required: required_set(sys) }
}

fn result(h: Hypothesis, ok: bool, witness: Witness) -> HypothesisResult {
    HypothesisResult { hypothesis: h, status: if ok { Status::Pass } else { Status::Fail }, witness }
}

fn check_h0(sys: &SystemPotentials) -> HypothesisResult {
    let worst = [&sys.v_plus, &sys.v_minus]
        .iter()
        .flat_map(|v| v.coeff(0).coeffs().to_vec())
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    result(Hypothesis::H0, worst <= 1e-14, Witness { value: worst, ..Witness::default() })
}

fn check_h1(sys: &SystemPotentials, r_lo: f64, r_hi: f64) -> HypothesisResult {
    let n = 201;
    let (mut min, mut at) = (f64::INFINITY, r_lo);
    for j in 0..n {
        let r = r_lo + (r_hi - r_lo) * j as f64 / (n - 1) as f64;
        let s = sys.sigma_squared(r);
        if s < min {
            min = s;
            at = r;
        }
    }
    result(Hypothesis::H1, min > 1e-12, Witness { r: Some(at), value: min, ..Witness::default() })
}

fn roots_at(v: &TrigPotential, r: f64) -> Vec<roots::Root> {
    let dv = v.d_theta();
    periodic_roots(&|t| v.eval(t, r), &|t| dv.eval(t, r), 64 * v.degree().max(1))
}

fn vanishes_at(v: &TrigPotential, r: f64) -> bool {
    v.harmonics_at(r).values.iter().all(|c| c.norm() <= 1e-14)
}

fn check_h3(sys: &SystemPotentials, r_lo: f64, r_hi: f64) -> HypothesisResult {
    let (lo, hi) = (math::floor(r_lo) as i64, math::floor(r_hi) as i64);
    let mut any = false;
    for n in lo..=hi {
        let r = n as f64;
        if r < r_lo || r > r_hi {
            continue;
        }
        any = true;
        let (a, b) = (&sys.v_plus, &sys.v_minus);
        let common = match (vanishes_at(a, r), vanishes_at(b, r)) {
            (true, true) => Some(0.0),
            (true, false) => roots_at(b, r).first().map(|z| z.theta),
            (false, true) => roots_at(a, r).first().map(|z| z.theta),
            (false, false) => {
                let rb = roots_at(b, r);
                roots_at(a, r).into_iter().find_map(|za| {
                    rb.iter().find(|zb| roots::circle_distance(za.theta, zb.theta) < 1e-9).map(|_| za.theta)
                })
            }
        };
        if let Some(theta) = common {
            return result(Hypothesis::H3, false, Witness { r: Some(r), theta: Some(theta), ..Witness::default() });
        }
    }
    let status = if any { Status::Pass } else { Status::Vacuous };
    HypothesisResult { hypothesis: Hypothesis::H3, status, witness: Witness::default() }
}

/// Rationals `p/q` in `[r_lo, r_hi]` with `1 <= q <= qmax`, in lowest terms.
pub fn low_order_rationals(r_lo: f64, r_hi: f64, qmax: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for q in 1..=qmax.max(1) {
        let p_lo = math::floor(r_lo * q as f64) as i64 - 1;
        let p_hi = math::floor(r_hi * q as f64) as i64 + 1;
        for p in p_lo..=p_hi {
            let r = p as f64 / q as f64;
            if r >= r_lo && r <= r_hi && gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

/// `Ev_{p,q}`: the harmonics of `Ev(., r)` divisible by `q`.
pub fn resonant_part(ev: &TrigPotential, q: i64, r: f64) -> crate::potentials::Harmonics {
    let mut h = ev.harmonics_at(r);
    for k in -(h.d as i64)..=h.d as i64 {
        if k == 0 || k % q != 0 {
            h.set(k, Complex64::new(0.0, 0.0));
        }
    }
    h
}

/// Minimum of a non-negative 1-periodic function by sampling and golden
/// section refinement around each sampled local minimum.
fn periodic_min<F: Fn(f64) -> f64>(f: &F, samples: usize) -> (f64, f64) {
    let n = samples.max(8);
    let h = 1.0 / n as f64;
    let vals: Vec<f64> = (0..n).map(|j| f(j as f64 * h)).collect();
    let mut best = (f64::INFINITY, 0.0);
    for j in 0..n {
        let prev = vals[(j + n - 1) % n];
        let next = vals[(j + 1) % n];
        if vals[j] <= prev && vals[j] <= next {
            let (mut a, mut b) = ((j as f64 - 1.0) * h, (j as f64 + 1.0) * h);
            let g = 0.5 * (libm::sqrt(5.0) - 1.0);
            for _ in 0..80 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if f(c) < f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            let t = 0.5 * (a + b);
            let v = f(t).min(vals[j]);
            if v < best.0 {
                best = (v, math::frac(t));
            }
        }
    }
    best
}

fn check_h4(sys: &SystemPotentials, r_lo: f64, r_hi: f64) -> HypothesisResult {
    let d = sys.v_degree() as i64;
    let mut worst = Witness { value: f64::INFINITY, ..Witness::default() };
    for (p, q) in low_order_rationals(r_lo, r_hi, 2 * d) {
        let r = p as f64 / q as f64;
        let vm = sys.v_minus.harmonics_at(r);
        let vp = sys.v_plus.harmonics_at(r);
        let g = |theta: f64| {
            let mut a = 0.0;
            let mut b = 0.0;
            for k in 1..=q {
                let t = theta + k as f64 / q as f64;
                let m = vm.eval(t);
                a += m;
                let e = m - vp.eval(t);
                b += e * e;
            }
            a * a + b
        };
        let (v, theta) = periodic_min(&g, (64 * d.max(1) * q) as usize);
        if v < worst.value {
            worst = Witness { r: Some(r), theta: Some(theta), p: Some(p), q: Some(q), value: v };
        }
    }
    if worst.value.is_infinite() {
        return HypothesisResult { hypothesis: Hypothesis::H4, status: Status::Vacuous, witness: Witness::default() };
    }
    result(Hypothesis::H4, worst.value > 1e-12, worst)
}

fn check_h5(sys: &SystemPotentials, r_lo: f64, r_hi: f64) -> HypothesisResult {
    let d = sys.v_degree() as i64;
    let ev = sys.expected_difference().ev;
    let mut worst = Witness { value: f64::INFINITY, ..Witness::default() };
    for (p, q) in low_order_rationals(r_lo, r_hi, 2 * d) {
        let r = p as f64 / q as f64;
        let h = resonant_part(&ev, q, r);
        if h.values.iter().all(|c| c.norm() <= 1e-14) {
            continue;
        }
        let dh = h.d_theta();
        for z in periodic_roots(&|t| h.eval(t), &|t| dh.eval(t), 64 * h.d.max(1)) {
            // compare against the natural scale of the slope
            let scale = TAU * h.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let margin = z.slope.abs() / scale.max(1.0);
            if margin < worst.value {
                worst = Witness { r: Some(r), theta: Some(z.theta), p: Some(p), q: Some(q), value: margin };
            }
        }
    }
    let status = if worst.value.is_infinite() {
        Status::Vacuous
    } else if worst.value < DEGENERATE_SLOPE {
        Status::Fail
    } else if worst.value < MARGINAL_SLOPE {
        Status::IllConditioned
    } else {
        Status::Pass
    };
    HypothesisResult { hypothesis: Hypothesis::H5, status, witness: worst }
}
