//! Normal form of the expected map away from and near low-order resonances.
//!
//! The change of variables `Phi` is generated by `S(theta, r) = r theta +
//! eps S_1(theta, r)`, where `S_1` solves the homological equation
//!
//! ```text
//! d_theta S_1(theta, r) + Ev(theta, r) - d_theta S_1(theta + r, r) = 0
//! ```
//!
//! harmonic by harmonic, with the small divisors `1 - e^{2 pi i k r}` cut
//! off by a smooth bump near resonances.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dynamics::{MapSystem, State};
use crate::hypotheses::low_order_rationals;
use crate::math::{self, PI, TAU};
use crate::potentials::{Harmonics, SystemPotentials, TrigPotential};
use crate::poly::CPoly;
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `e^{-1/t}` for `t > 0`, zero otherwise, with two derivatives.
fn psi_jet(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0; 3];
    }
    let p = math::exp(-1.0 / t);
    let t2 = t * t;
    [p, p / t2, p * (1.0 / (t2 * t2) - 2.0 / (t2 * t))]
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, with two derivatives.
fn step_jet(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0; 3];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let [a, a1, a2] = psi_jet(t);
    let [b, bd, bdd] = psi_jet(1.0 - t);
    // derivatives of b(t) = psi(1 - t)
    let (b1, b2) = (-bd, bdd);
    let s = a + b;
    let num1 = a1 * b - a * b1;
    let h1 = num1 / (s * s);
    let h2 = ((a2 * b - a * b2) * s - 2.0 * num1 * (a1 + b1)) / (s * s * s);
    [a / s, h1, h2]
}

/// The bump `mu`: 1 on `|x| <= 1`, 0 on `|x| >= 2`, smooth and monotone in
/// between, with `mu(1.5) = 1/2`.
pub fn bump_mu(x: f64) -> f64 {
    bump_mu_jet(x)[0]
}

/// `mu(x)` and its first two derivatives.
pub fn bump_mu_jet(x: f64) -> [f64; 3] {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let [h, h1, h2] = step_jet(2.0 - x.abs());
    [h, -sign * h1, h2]
}

/// Parameters of the normal form.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalFormParams {
    /// Half-width scale of the resonance windows.
    pub beta: f64,
    /// Node count for the quadrature cross-checks.
    pub quadrature_nodes: usize,
}

impl NormalFormParams {
    pub fn new(beta: f64) -> Self {
        Self { beta, quadrature_nodes: 4096 }
    }
}

/// `mu_k(r) = mu(|1 - e^{2 pi i k r}| / (2 pi |k| beta))` with two
/// `r`-derivatives.
pub fn mu_k_jet(k: i64, r: f64, beta: f64) -> [f64; 3] {
    let kf = k as f64;
    let s = math::sin(PI * kf * r);
    let x = s.abs() / (PI * kf.abs() * beta);
    let [m, m1, m2] = bump_mu_jet(x);
    if m1 == 0.0 && m2 == 0.0 {
        return [m, 0.0, 0.0];
    }
    let sg = if s < 0.0 { -1.0 } else { 1.0 } * kf.signum();
    let x1 = sg * math::cos(PI * kf * r) / beta;
    let x2 = -PI * kf.abs() * s.abs() / beta;
    [m, m1 * x1, m2 * x1 * x1 + m1 * x2]
}

pub fn mu_k(k: i64, r: f64, beta: f64) -> f64 {
    mu_k_jet(k, r, beta)[0]
}

/// `S_1^k(r)` for the expected potential `ev`.
pub fn s1_coefficient(k: i64, r: f64, beta: f64, ev: &TrigPotential) -> Complex64 {
    let c = ev.coeff(k);
    s1_coefficient_jet(k, r, beta, &c)[0]
}

/// `S_1^k` and its first two `r`-derivatives, given the polynomial `Ev^k`.
fn s1_coefficient_jet(k: i64, r: f64, beta: f64, evk: &CPoly) -> [Complex64; 3] {
    if k == 0 || evk.is_zero() {
        return [ZERO; 3];
    }
    let [mu, mu1, mu2] = mu_k_jet(k, r, beta);
    if mu >= 1.0 {
        return [ZERO; 3];
    }
    let (m, m1, m2) = (1.0 - mu, -mu1, -mu2);
    let kf = k as f64;
    let z = math::turn(kf * r);
    let one_minus = Complex64::new(1.0, 0.0) - z;
    let dd = Complex64::new(1.0, 0.0) / (one_minus * (TAU * kf));
    let dd1 = I * z / (one_minus * one_minus);
    let dd2 = -(TAU * kf) * z * (Complex64::new(1.0, 0.0) + z) / (one_minus * one_minus * one_minus);
    let [e, e1, e2] = evk.eval_jet(r);
    let v0 = e * m * dd;
    let v1 = e1 * m * dd + e * m1 * dd + e * m * dd1;
    let v2 = e2 * m * dd + e * m2 * dd + e * m * dd2
        + (e1 * m1 * dd + e1 * m * dd1 + e * m1 * dd1) * 2.0;
    [I * v0, I * v1, I * v2]
}

/// Harmonics of `S_1` and its `r`-derivatives at a fixed action.
#[derive(Clone, Debug)]
pub struct S1Coeffs {
    pub r: f64,
    pub s: Harmonics,
    pub s_r: Harmonics,
    pub s_rr: Harmonics,
}

/// Partial derivatives of `S_1` at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct S1Jet {
    pub s: f64,
    pub t: f64,
    pub r: f64,
    pub tt: f64,
    pub tr: f64,
    pub rr: f64,
}

impl S1Coeffs {
    pub fn jet(&self, theta: f64) -> S1Jet {
        let z = math::turn(theta);
        let mut zk = z;
        let mut j = S1Jet::default();
        for k in 1..=self.s.d as i64 {
            let w = TAU * k as f64;
            let (a, b, c) = (self.s.get(k) * zk, self.s_r.get(k) * zk, self.s_rr.get(k) * zk);
            // twice the real part accounts for the conjugate harmonic
            j.s += 2.0 * a.re;
            j.t += 2.0 * (I * w * a).re;
            j.tt += -2.0 * w * w * a.re;
            j.r += 2.0 * b.re;
            j.tr += 2.0 * (I * w * b).re;
            j.rr += 2.0 * c.re;
            zk *= z;
        }
        j
    }
}

/// `E_1`, `E_3` and `Ev_{p,q}` for one low-order rational.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionFields {
    pub p: i64,
    pub q: i64,
    pub e1: TrigPotential,
    /// Depends on the angle only (evaluated at `p/q`).
    pub e3: TrigPotential,
    pub ev_pq: TrigPotential,
}

/// Harmonics `k != 0`, `|k| <= 2d`, with `k p / q` an integer.
pub fn resonant_harmonics(p: i64, q: i64, d: usize) -> Vec<i64> {
    let d = d as i64;
    (-2 * d..=2 * d).filter(|&k| k != 0 && (k * p) % q == 0).collect()
}

/// Normal-form data of a system; independent of `eps`.
#[derive(Clone, Debug)]
pub struct NormalForm {
    params: NormalFormParams,
    d: usize,
    // degree used for the low-order rationals
    d_res: usize,
    eu: TrigPotential,
    ev: TrigPotential,
    ew: TrigPotential,
    sigma_source: SystemPotentials,
}

impl NormalForm {
    /// Requires `beta > 0` small enough that the transition bands
    /// `|r - p/q| < 3 beta` around distinct rationals with `q <= 2d` do not
    /// overlap.
    pub fn new(sys: &SystemPotentials, params: NormalFormParams) -> Result<Self> {
        let beta = params.beta;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter { name: "beta", reason: "must be positive" });
        }
        let qmax = 2 * sys.v_degree() as i64;
        // closest distinct fractions with denominators <= qmax are Farey
        // neighbours, |p/q - p'/q'| >= 1/(q q')
        let mut gap = f64::INFINITY;
        let rs = low_order_rationals(0.0, 1.0, qmax);
        let mut vals: Vec<f64> = rs.iter().map(|(p, q)| *p as f64 / *q as f64).collect();
        vals.sort_by(f64::total_cmp);
        for w in vals.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        if 6.0 * beta >= gap {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "resonance windows around low-order rationals overlap",
            });
        }
        let ed = sys.expected_difference();
        Ok(Self { params, d: sys.degree(), d_res: sys.v_degree(), eu: ed.eu, ev: ed.ev, ew: sys.expected_w(), sigma_source: sys.clone() })
    }

    pub fn params(&self) -> NormalFormParams {
        self.params
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// Degree of `v`, which sets the low-order rationals `q <= 2d`.
    pub fn resonance_degree(&self) -> usize {
        self.d_res
    }

    pub fn expected_v(&self) -> &TrigPotential {
        &self.ev
    }

    /// `S_1^k(r)`.
    pub fn s1(&self, k: i64, r: f64) -> Complex64 {
        s1_coefficient_jet(k, r, self.params.beta, &self.ev.coeff(k))[0]
    }

    pub fn s1_coeffs(&self, r: f64) -> S1Coeffs {
        let d = self.d;
        let mut c = S1Coeffs { r, s: Harmonics::zero(d), s_r: Harmonics::zero(d), s_rr: Harmonics::zero(d) };
        for k in 1..=d as i64 {
            let evk = self.ev.coeff(k);
            let [a, b, e] = s1_coefficient_jet(k, r, self.params.beta, &evk);
            c.s.set(k, a);
            c.s.set(-k, a.conj());
            c.s_r.set(k, b);
            c.s_r.set(-k, b.conj());
            c.s_rr.set(k, e);
            c.s_rr.set(-k, e.conj());
        }
        c
    }

    /// True when every `mu_k` vanishes at `r`, so `S_1` solves the
    /// homological equation exactly there.
    pub fn is_unmollified(&self, r: f64) -> bool {
        (1..=self.d as i64).all(|k| self.ev.coeff(k).is_zero() || mu_k(k, r, self.params.beta) == 0.0)
    }

    /// `Phi(theta~, r~)`, truncated after the `eps^2` terms.
    pub fn phi(&self, eps: f64, st: (f64, f64)) -> (f64, f64) {
        let j = self.s1_coeffs(st.1).jet(st.0);
        (
            st.0 - eps * j.r + eps * eps * j.tr * j.r,
            st.1 + eps * j.t - eps * eps * j.tt * j.r,
        )
    }

    /// `Phi^{-1}(theta, r)`, truncated after the `eps^2` terms.
    pub fn phi_inverse(&self, eps: f64, st: (f64, f64)) -> (f64, f64) {
        let j = self.s1_coeffs(st.1).jet(st.0);
        (
            st.0 + eps * j.r - eps * eps * j.rr * j.t,
            st.1 - eps * j.t + eps * eps * j.tr * j.t,
        )
    }

    /// `E_2(theta~, r~)` away from resonances.
    pub fn e2(&self, theta: f64, r: f64) -> f64 {
        let c = self.s1_coeffs(r);
        let s = c.jet(theta);
        let sh = c.jet(theta + r);
        let ev = self.ev.eval(theta, r);
        let ev_t = self.ev.d_theta().eval(theta, r);
        let ev_r = self.ev.d_r().eval(theta, r);
        let eu = self.eu.eval(theta, r);
        let ew = self.ew.eval(theta, r);
        ew - ev_t * s.r + ev_r * s.t - s.tt * s.r - sh.tt * (eu + s.t - s.r) - sh.tr * (ev + s.t - sh.t)
    }

    /// Nearest rational with `q <= 2d` lying within `beta` of `r`.
    pub fn nearby_resonance(&self, r: f64) -> Option<(i64, i64)> {
        let beta = self.params.beta;
        low_order_rationals(r - beta, r + beta, 2 * self.d_res as i64)
            .into_iter()
            .find(|(p, q)| (r - *p as f64 / *q as f64).abs() < beta)
    }

    /// The drift `b(r)`, by exact pairing of Fourier coefficients.
    pub fn drift(&self, r: f64) -> Result<f64> {
        if let Some((p, q)) = self.nearby_resonance(r) {
            return Err(Error::ResonantInput { r, p, q });
        }
        Ok(self.drift_unchecked(r))
    }

    /// The drift formula evaluated without the resonance check.
    pub fn drift_unchecked(&self, r: f64) -> f64 {
        let ev = self.ev.harmonics_at(r);
        let ev_t = ev.d_theta();
        let ev_r = self.ev.d_r().harmonics_at(r);
        let eu = self.eu.harmonics_at(r);
        let eu_t = eu.d_theta();
        let s_t = self.s1_coeffs(r).s.d_theta();
        let bracket = ev_r.add(&ev_t.scale(-1.0)).add(&eu_t);
        self.ew.mean_at(r) - ev_t.pair(&eu) + s_t.pair(&bracket)
    }

    /// The drift integrand integrated by the midpoint rule.
    pub fn drift_quadrature(&self, r: f64) -> f64 {
        let n = self.params.quadrature_nodes.max(8);
        let c = self.s1_coeffs(r);
        let (ev_t, ev_r, eu_t) = (self.ev.d_theta(), self.ev.d_r(), self.eu.d_theta());
        let mut acc = 0.0;
        for j in 0..n {
            let t = (j as f64 + 0.5) / n as f64;
            let s_t = c.jet(t).t;
            acc += self.ew.eval(t, r) - ev_t.eval(t, r) * self.eu.eval(t, r)
                + s_t * (ev_r.eval(t, r) - ev_t.eval(t, r) + eu_t.eval(t, r));
        }
        acc / n as f64
    }

    pub fn sigma_squared(&self, r: f64) -> f64 {
        self.sigma_source.sigma_squared(r)
    }

    /// `(r, b(r), sigma^2(r))` on a grid; resonant points get `None`.
    pub fn drift_table(&self, grid: &[f64]) -> Vec<(f64, Option<f64>, f64)> {
        grid.iter().map(|&r| (r, self.drift(r).ok(), self.sigma_squared(r))).collect()
    }

    /// `E_1`, `E_3` and `Ev_{p,q}` for a rational with `q <= 2d`.
    pub fn correction_fields(&self, p: i64, q: i64) -> Result<CorrectionFields> {
        if q < 1 || q > 2 * self.d_res as i64 || math::gcd(p, q) != 1 {
            return Err(Error::InvalidParameter { name: "p/q", reason: "need gcd(p,q) = 1 and 1 <= q <= 2d" });
        }
        correction_fields(&self.ev, p, q)
    }

    /// Largest violation of the homological equation over a grid, skipping
    /// actions where some `mu_k` is nonzero. Returns the maximum and the
    /// number of points checked.
    pub fn homological_residual(&self, thetas: &[f64], rs: &[f64]) -> (f64, usize) {
        let mut worst = 0.0f64;
        let mut count = 0;
        for &r in rs {
            if !self.is_unmollified(r) {
                continue;
            }
            let c = self.s1_coeffs(r);
            for &t in thetas {
                let res = c.jet(t).t + self.ev.eval(t, r) - c.jet(t + r).t;
                worst = worst.max(res.abs());
                count += 1;
            }
        }
        (worst, count)
    }

    /// `r`-component of `Phi^{-1} o Ef o Phi` minus `r~ + eps^2 E_2`.
    pub fn far_residual(&self, sys: &MapSystem, theta: f64, r: f64) -> Result<f64> {
        let r_img = self.conjugated_r(sys, theta, r)?;
        let eps = sys.epsilon();
        Ok(r_img - (r + eps * eps * self.e2(theta, r)))
    }

    /// `r`-component of `Phi^{-1} o Ef o Phi` minus `r~ + eps Ev_{p,q}`.
    pub fn near_residual(&self, sys: &MapSystem, p: i64, q: i64, theta: f64, r: f64) -> Result<f64> {
        let r_img = self.conjugated_r(sys, theta, r)?;
        let fields = self.correction_fields(p, q)?;
        Ok(r_img - (r + sys.epsilon() * fields.ev_pq.eval(theta, r)))
    }

    fn conjugated_r(&self, sys: &MapSystem, theta: f64, r: f64) -> Result<f64> {
        let eps = sys.epsilon();
        let (t1, r1) = self.phi(eps, (theta, r));
        let img = sys.expected_step(State::new(t1, r1))?;
        Ok(self.phi_inverse(eps, (img.theta, img.r)).1)
    }

    /// Largest `|Phi^{-1}(Phi(x)) - x|` over a grid.
    pub fn roundtrip_error(&self, eps: f64, thetas: &[f64], rs: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for &r in rs {
            for &t in thetas {
                let (a, b) = self.phi_inverse(eps, self.phi(eps, (t, r)));
                let mut dt = a - t;
                dt -= math::round(dt);
                worst = worst.max(dt.abs()).max((b - r).abs());
            }
        }
        worst
    }

    /// Largest `|Phi(x) - x|` over a grid.
    pub fn phi_displacement(&self, eps: f64, thetas: &[f64], rs: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for &r in rs {
            for &t in thetas {
                let (a, b) = self.phi(eps, (t, r));
                worst = worst.max((a - t).abs()).max((b - r).abs());
            }
        }
        worst
    }
}

/// `E_1`, `E_3` and `Ev_{p,q}` of an expected potential.
pub fn correction_fields(ev: &TrigPotential, p: i64, q: i64) -> Result<CorrectionFields> {
    let d = ev.degree();
    let res = resonant_harmonics(p, q, d);
    let r0 = p as f64 / q as f64;
    let mut e1 = TrigPotential::zero(d);
    let mut e3 = TrigPotential::zero(d);
    let mut ev_pq = TrigPotential::zero(d);
    for k in 1..=d as i64 {
        let dk = ev.coeff(k).derivative();
        let factor = -I / (TAU * k as f64);
        e1.set(k, dk.scale(factor))?;
        if res.contains(&k) {
            ev_pq.set(k, ev.coeff(k))?;
        } else {
            e3.set(k, CPoly::constant(dk.eval(r0) * factor))?;
        }
    }
    Ok(CorrectionFields { p, q, e1, e3, ev_pq })
}

/// Least-squares exponent of `max residual ~ eps^alpha`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingReport {
    pub epsilons: Vec<f64>,
    pub residuals: Vec<f64>,
    pub exponent: f64,
}

impl ScalingReport {
    pub fn fit(epsilons: Vec<f64>, residuals: Vec<f64>) -> Self {
        let exponent = math::loglog_slope(&epsilons, &residuals).unwrap_or(f64::NAN);
        Self { epsilons, residuals, exponent }
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return alloc::vec![lo];
    }
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / n as f64).collect()
}

/// Fits the order of the conjugacy residual away from resonances.
///
/// `r` runs over `[r_lo, r_hi]`, which must stay at least `beta` away from
/// the low-order rationals; points inside the mollifier band are skipped.
pub fn conjugacy_scaling(
    potentials: &SystemPotentials,
    params: NormalFormParams,
    a: f64,
    epsilons: &[f64],
    r_lo: f64,
    r_hi: f64,
) -> Result<ScalingReport> {
    let nf = NormalForm::new(potentials, params)?;
    let rs: Vec<f64> = grid(r_lo, r_hi, 21);
    for &r in &rs {
        if let Some((p, q)) = nf.nearby_resonance(r) {
            return Err(Error::ResonantInput { r, p, q });
        }
    }
    let rs: Vec<f64> = rs.into_iter().filter(|r| nf.is_unmollified(*r)).collect();
    let thetas = angle_grid(32);
    let mut res = Vec::new();
    for &eps in epsilons {
        let sys = MapSystem::new(potentials.clone(), eps, a, 7)?;
        let mut worst = 0.0f64;
        for &r in &rs {
            for &t in &thetas {
                worst = worst.max(nf.far_residual(&sys, t, r)?.abs());
            }
        }
        res.push(worst);
    }
    Ok(ScalingReport::fit(epsilons.to_vec(), res))
}

/// Fits the order of `Phi^{-1} o Phi - Id` on a grid.
pub fn roundtrip_scaling(
    potentials: &SystemPotentials,
    params: NormalFormParams,
    epsilons: &[f64],
    r_lo: f64,
    r_hi: f64,
) -> Result<ScalingReport> {
    let nf = NormalForm::new(potentials, params)?;
    let rs = grid(r_lo, r_hi, 21);
    let thetas = angle_grid(32);
    let res = epsilons.iter().map(|&e| nf.roundtrip_error(e, &thetas, &rs)).collect();
    Ok(ScalingReport::fit(epsilons.to_vec(), res))
}

/// Fits the order of the near-resonance residual within `beta/2` of `p/q`.
pub fn near_resonance_scaling(
    potentials: &SystemPotentials,
    params: NormalFormParams,
    a: f64,
    epsilons: &[f64],
    p: i64,
    q: i64,
) -> Result<ScalingReport> {
    let nf = NormalForm::new(potentials, params)?;
    let c = p as f64 / q as f64;
    let h = 0.45 * params.beta;
    let rs = grid(c - h, c + h, 11);
    let thetas = angle_grid(32);
    let mut res = Vec::new();
    for &eps in epsilons {
        let sys = MapSystem::new(potentials.clone(), eps, a, 7)?;
        let mut worst = 0.0f64;
        for &r in &rs {
            for &t in &thetas {
                worst = worst.max(nf.near_residual(&sys, p, q, t, r)?.abs());
            }
        }
        res.push(worst);
    }
    Ok(ScalingReport::fit(epsilons.to_vec(), res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cos_sin_nf(beta: f64) -> NormalForm {
        NormalForm::new(&SystemPotentials::cos_sin(), NormalFormParams::new(beta)).unwrap()
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump_mu(0.5), 1.0);
        assert_eq!(bump_mu(-1.0), 1.0);
        assert_eq!(bump_mu(3.0), 0.0);
        assert_eq!(bump_mu(2.0), 0.0);
        assert_abs_diff_eq!(bump_mu(1.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(bump_mu(1.5), 1.0 - bump_mu(2.0 + 1.0 - 1.5), epsilon = 1e-15);
        // golden values of the exp-glue construction
        assert_abs_diff_eq!(bump_mu(1.25), 0.935030830871336, epsilon = 1e-14);
        assert_abs_diff_eq!(bump_mu(1.75), 0.06496916912866406, epsilon = 1e-14);
    }

    #[test]
    fn bump_is_monotone_with_consistent_derivatives() {
        let mut prev = 1.0;
        for j in 1..400 {
            let x = 1.0 + j as f64 / 400.0;
            let [m, m1, m2] = bump_mu_jet(x);
            assert!(m <= prev && (0.0..=1.0).contains(&m));
            prev = m;
            let h = 1e-5;
            let fd1 = (bump_mu(x + h) - bump_mu(x - h)) / (2.0 * h);
            let fd2 = (bump_mu(x + h) - 2.0 * m + bump_mu(x - h)) / (h * h);
            assert!((m1 - fd1).abs() < 1e-6 * (1.0 + m1.abs()), "{x} {m1} {fd1}");
            assert!((m2 - fd2).abs() < 1e-3 * (1.0 + m2.abs()), "{x} {m2} {fd2}");
        }
    }

    #[test]
    fn s1_examples() {
        let ev = TrigPotential::cos(1, 1.0);
        // Ev^1 = 1/2 and 2 pi k (1 - e^{i pi}) = 4 pi
        let s = s1_coefficient(1, 0.5, 0.01, &ev);
        assert!((s - Complex64::new(0.0, 1.0 / (8.0 * PI))).norm() < 1e-15);
        assert_eq!(s1_coefficient(1, 0.003, 0.01, &ev), ZERO);
        assert_eq!(s1_coefficient(1, 0.3, 0.01, &TrigPotential::zero(1)), ZERO);
        assert_eq!(s1_coefficient(0, 0.3, 0.01, &ev), ZERO);
    }

    #[test]
    fn mollifier_regions() {
        let beta = 0.02;
        // k = 2 is resonant at 1/2; k = 1 is not
        for r in [0.5 - beta / 2.0, 0.5, 0.5 + 0.4 * beta] {
            assert_eq!(mu_k(2, r, beta), 1.0);
            assert_eq!(mu_k(1, r, beta), 0.0);
        }
        for r in [0.5 + 3.0 * beta, 0.5 - 3.5 * beta] {
            assert_eq!(mu_k(2, r, beta), 0.0);
        }
    }

    #[test]
    fn s1_jet_matches_finite_differences() {
        let mut ev = TrigPotential::zero(2);
        ev.set(1, CPoly::from_parts(&[0.3, 0.2], &[0.1, -0.4])).unwrap();
        ev.set(2, CPoly::from_parts(&[0.1], &[0.2, 0.05])).unwrap();
        let beta = 0.05;
        // sample inside the transition band of k = 2 near 1/2, and outside
        for r in [0.5 + 0.06, 0.5 + 0.08, 0.3, 0.04 + 0.0123] {
            for k in [1i64, 2] {
                let c = ev.coeff(k);
                let [v, d1, d2] = s1_coefficient_jet(k, r, beta, &c);
                let h = 1e-5;
                let vp = s1_coefficient_jet(k, r + h, beta, &c)[0];
                let vm = s1_coefficient_jet(k, r - h, beta, &c)[0];
                let fd1 = (vp - vm) / (2.0 * h);
                let fd2 = (vp - v * 2.0 + vm) / (h * h);
                assert!((d1 - fd1).norm() < 1e-5 * (1.0 + d1.norm()), "{k} {r} {d1} {fd1}");
                assert!((d2 - fd2).norm() < 1e-2 * (1.0 + d2.norm()), "{k} {r} {d2} {fd2}");
            }
        }
    }

    #[test]
    fn homological_identity_on_cos_sin() {
        let nf = cos_sin_nf(0.05);
        let thetas = angle_grid(64);
        let rs = grid(0.0, 1.0, 101);
        let (worst, n) = nf.homological_residual(&thetas, &rs);
        assert!(n > 0);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn cos_sin_drift_vanishes() {
        let nf = cos_sin_nf(0.05);
        for r in grid(0.06, 0.44, 20).into_iter().chain(grid(0.56, 0.94, 20)) {
            assert!(nf.drift(r).unwrap().abs() < 1e-12);
        }
        assert!(matches!(nf.drift(0.02), Err(Error::ResonantInput { p: 0, q: 1, .. })));
        assert!(matches!(nf.drift(0.51), Err(Error::ResonantInput { p: 1, q: 2, .. })));
    }

    #[test]
    fn constant_w_gives_constant_drift() {
        let c = TrigPotential::cos(1, 1.0);
        let s = TrigPotential::sin(1, 1.0);
        let w = TrigPotential::constant(0.3).padded(1);
        let sys = SystemPotentials::new(c.clone(), s.clone(), c, s, w.clone(), w);
        let nf = NormalForm::new(&sys, NormalFormParams::new(0.05)).unwrap();
        for r in [0.2, 0.33, 0.7] {
            assert_abs_diff_eq!(nf.drift(r).unwrap(), 0.3, epsilon = 1e-12);
            assert_abs_diff_eq!(nf.drift_quadrature(r), 0.3, epsilon = 1e-10);
        }
    }

    #[test]
    fn pairing_agrees_with_quadrature() {
        let mut h = TrigPotential::zero(2);
        h.set(1, CPoly::from_parts(&[0.1, 0.2], &[0.05])).unwrap();
        h.set(2, CPoly::from_parts(&[0.0, 0.1], &[0.03, 0.02])).unwrap();
        let sys = SystemPotentials::from_generating_function(
            &h,
            &TrigPotential::sin(1, 0.2),
            &TrigPotential::cos(2, 0.3),
        );
        let nf = NormalForm::new(&sys, NormalFormParams::new(0.01)).unwrap();
        for r in [0.13, 0.37, 0.61] {
            assert_abs_diff_eq!(nf.drift_unchecked(r), nf.drift_quadrature(r), epsilon = 1e-10);
            assert!(nf.drift(r).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn correction_field_examples() {
        let ev = TrigPotential::cos(1, 1.0);
        let f = correction_fields(&ev, 0, 1).unwrap();
        assert!(f.e1.is_zero());
        assert_eq!(f.ev_pq, ev);
        let f = correction_fields(&ev, 1, 2).unwrap();
        assert!(f.ev_pq.is_zero());
        assert!(f.e3.is_zero());
        let mut evr = TrigPotential::zero(1);
        evr.set(1, CPoly::from_parts(&[0.0, 0.5], &[])).unwrap();
        let f = correction_fields(&evr, 1, 2).unwrap();
        // E1 = -sum i (Ev^k)'/(2 pi k) e_k = sin(2 pi theta)/(2 pi)
        assert_abs_diff_eq!(f.e1.eval(0.25, 0.7), 1.0 / TAU, epsilon = 1e-15);
        assert_abs_diff_eq!(f.e3.eval(0.25, 0.0), 1.0 / TAU, epsilon = 1e-15);
        assert_eq!(resonant_harmonics(1, 2, 1), alloc::vec![-2, 2]);
    }

    #[test]
    fn zero_generating_function_is_identity() {
        let nf = NormalForm::new(&SystemPotentials::integrable(1), NormalFormParams::new(0.05)).unwrap();
        assert_eq!(nf.phi(0.01, (0.3, 0.4)), (0.3, 0.4));
        let nf = cos_sin_nf(0.05);
        assert_eq!(nf.phi(0.0, (0.3, 0.4)), (0.3, 0.4));
        assert_eq!(nf.phi_inverse(0.0, (0.3, 0.4)), (0.3, 0.4));
    }

    #[test]
    fn phi_is_close_to_identity() {
        let nf = cos_sin_nf(0.05);
        let thetas = angle_grid(32);
        let rs = grid(0.1, 0.9, 17);
        let m: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&e| nf.phi_displacement(e, &thetas, &rs) / e).collect();
        assert!(m[2] <= 1.05 * m[0] && m[0] <= 1.05 * m[2] * 1.1, "{m:?}");
    }

    #[test]
    fn integrable_residual_is_zero() {
        let sys = MapSystem::with_epsilon(SystemPotentials::integrable(1), 0.01).unwrap();
        let nf = NormalForm::new(sys.potentials(), NormalFormParams::new(0.05)).unwrap();
        assert_eq!(nf.far_residual(&sys, 0.3, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_windows_rejected() {
        assert!(NormalForm::new(&SystemPotentials::cos_sin(), NormalFormParams::new(0.1)).is_err());
        assert!(NormalForm::new(&SystemPotentials::cos_sin(), NormalFormParams::new(0.0)).is_err());
    }

    #[test]
    fn residual_orders_on_cos_sin() {
        let sys = SystemPotentials::cos_sin();
        let p = NormalFormParams::new(0.05);
        let eps = [0.02, 0.01, 0.005];
        let far = conjugacy_scaling(&sys, p, 0.55, &eps, 0.15, 0.35).unwrap();
        let rt = roundtrip_scaling(&sys, p, &eps, 0.15, 0.35).unwrap();
        let near = near_resonance_scaling(&sys, p, 0.55, &eps, 1, 2).unwrap();
        assert!(far.exponent >= 2.4);
        assert!(rt.exponent >= 2.9);
        assert!(near.exponent >= 1.9);
    }

    proptest! {
        #[test]
        fn s1_is_finite_everywhere(r in -3.0f64..3.0, beta in 0.001f64..0.05) {
            let ev = TrigPotential::cos(1, 1.0).add(&TrigPotential::sin(3, 0.4));
            for k in -3..=3 {
                prop_assert!(s1_coefficient(k, r, beta, &ev).norm().is_finite());
            }
        }
    }
}
