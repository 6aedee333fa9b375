//! The random maps `f_{+1}`, `f_{-1}`, their compositions and the expected map.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::math::{self, frac};
use crate::poly::CPoly;
use crate::potentials::{SystemPotentials, TrigPotential};
use crate::{Error, Result};

/// A point of the cylinder with the angle reduced to `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct State {
    pub theta: f64,
    pub r: f64,
}

impl State {
    pub fn new(theta: f64, r: f64) -> Self {
        Self { theta: frac(theta), r }
    }
}

/// A finite sequence of symbols `+1` / `-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word(Vec<i8>);

impl Word {
    pub fn new(symbols: Vec<i8>) -> Result<Self> {
        if symbols.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidParameter { name: "word", reason: "symbols must be +1 or -1" });
        }
        Ok(Self(symbols))
    }

    pub fn symbols(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Extra terms standing in for the higher-order remainders of the maps.
pub trait RemainderHook: Send + Sync {
    /// Added to the new angle.
    fn theta_term(&self, st: State, omega: i8) -> f64;
    /// Added to the new action.
    fn r_term(&self, st: State, omega: i8) -> f64;
}

/// A bounded, symbol-dependent remainder of sizes `amp*eps^{1+a}` in the
/// angle and `amp*eps^{2+a}` in the action.
#[derive(Clone, Copy, Debug)]
pub struct StressHook {
    theta_scale: f64,
    r_scale: f64,
}

impl StressHook {
    pub fn new(amplitude: f64, epsilon: f64, a: f64) -> Self {
        Self {
            theta_scale: amplitude * math::powf(epsilon, 1.0 + a),
            r_scale: amplitude * math::powf(epsilon, 2.0 + a),
        }
    }
}

impl RemainderHook for StressHook {
    fn theta_term(&self, st: State, omega: i8) -> f64 {
        self.theta_scale * f64::from(omega) * math::cos(math::TAU * (st.theta + st.r))
    }

    fn r_term(&self, st: State, omega: i8) -> f64 {
        let bias = 0.5 + 0.5 * math::sin(math::TAU * st.theta);
        self.r_scale * (f64::from(omega) * 0.5 + bias)
    }
}

/// Nonnegative harmonics of `u`, `v`, `w` for one symbol, laid out for the
/// step loop.
#[derive(Clone, Debug)]
struct Kernel {
    u: Vec<CPoly>,
    v: Vec<CPoly>,
    w: Vec<CPoly>,
    constant: Option<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)>,
}

impl Kernel {
    fn new(u: &TrigPotential, v: &TrigPotential, w: &TrigPotential) -> Self {
        let d = u.degree().max(v.degree()).max(w.degree()) as i64;
        let take = |p: &TrigPotential| (0..=d).map(|k| p.coeff(k)).collect::<Vec<_>>();
        let (u, v, w) = (take(u), take(v), take(w));
        let all_const = u.iter().chain(&v).chain(&w).all(CPoly::is_constant);
        let constant = all_const.then(|| {
            let at0 = |c: &Vec<CPoly>| c.iter().map(|p| p.eval(0.0)).collect::<Vec<_>>();
            (at0(&u), at0(&v), at0(&w))
        });
        Self { u, v, w, constant }
    }

    /// `(u, v, w)` at `(theta, r)`.
    #[inline]
    fn eval(&self, theta: f64, r: f64) -> (f64, f64, f64) {
        let z = math::turn(theta);
        if let Some((u, v, w)) = &self.constant {
            let (mut su, mut sv, mut sw) = (u[0].re, v[0].re, w[0].re);
            let mut zk = z;
            for k in 1..u.len() {
                su += 2.0 * (u[k] * zk).re;
                sv += 2.0 * (v[k] * zk).re;
                sw += 2.0 * (w[k] * zk).re;
                zk *= z;
            }
            return (su, sv, sw);
        }
        let (mut su, mut sv, mut sw) = (self.u[0].eval(r).re, self.v[0].eval(r).re, self.w[0].eval(r).re);
        let mut zk = z;
        for k in 1..self.u.len() {
            su += 2.0 * (self.u[k].eval(r) * zk).re;
            sv += 2.0 * (self.v[k].eval(r) * zk).re;
            sw += 2.0 * (self.w[k].eval(r) * zk).re;
            zk *= z;
        }
        (su, sv, sw)
    }
}

/// The pair of maps together with the small parameter.
#[derive(Clone)]
pub struct MapSystem {
    potentials: SystemPotentials,
    epsilon: f64,
    a: f64,
    smoothness: u32,
    hook: Option<Arc<dyn RemainderHook>>,
    plus: Kernel,
    minus: Kernel,
    expected: Kernel,
}

impl fmt::Debug for MapSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapSystem")
            .field("potentials", &self.potentials)
            .field("epsilon", &self.epsilon)
            .field("a", &self.a)
            .field("smoothness", &self.smoothness)
            .field("hook", &self.hook.is_some())
            .finish()
    }
}

impl MapSystem {
    /// Requires `0 < epsilon <= 0.2`, `a > 1/2` and `smoothness >= 7`.
    pub fn new(potentials: SystemPotentials, epsilon: f64, a: f64, smoothness: u32) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.2) {
            return Err(Error::InvalidParameter { name: "epsilon", reason: "must lie in (0, 0.2]" });
        }
        if !(a > 0.5) || !a.is_finite() {
            return Err(Error::InvalidParameter { name: "a", reason: "must exceed 1/2" });
        }
        if smoothness < 7 {
            return Err(Error::InvalidParameter { name: "smoothness", reason: "must be at least 7" });
        }
        let ed = potentials.expected_difference();
        let ew = potentials.expected_w();
        Ok(Self {
            plus: Kernel::new(&potentials.u_plus, &potentials.v_plus, &potentials.w_plus),
            minus: Kernel::new(&potentials.u_minus, &potentials.v_minus, &potentials.w_minus),
            expected: Kernel::new(&ed.eu, &ed.ev, &ew),
            potentials,
            epsilon,
            a,
            smoothness,
            hook: None,
        })
    }

    /// Same system with the defaults `a = 0.55`, `l = 7`.
    pub fn with_epsilon(potentials: SystemPotentials, epsilon: f64) -> Result<Self> {
        Self::new(potentials, epsilon, 0.55, 7)
    }

    pub fn with_hook(mut self, hook: Arc<dyn RemainderHook>) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn potentials(&self) -> &SystemPotentials {
        &self.potentials
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    pub fn has_hook(&self) -> bool {
        self.hook.is_some()
    }

    /// `u_w, v_w, w_w` at a point.
    #[inline]
    pub fn potentials_at(&self, st: State, omega: i8) -> (f64, f64, f64) {
        let k = if omega > 0 { &self.plus } else { &self.minus };
        k.eval(st.theta, st.r)
    }

    /// One application of `f_omega`.
    #[inline]
    pub fn step(&self, st: State, omega: i8) -> Result<State> {
        let next = self.step_unchecked(st, omega);
        if next.r.is_finite() && next.theta.is_finite() {
            Ok(next)
        } else {
            Err(Error::NonFiniteState { step: 0 })
        }
    }

    /// One application of `f_omega` without the finiteness check.
    #[inline]
    pub fn step_unchecked(&self, st: State, omega: i8) -> State {
        let eps = self.epsilon;
        let (u, v, w) = self.potentials_at(st, omega);
        let mut theta = st.theta + st.r + eps * u;
        let mut r = st.r + eps * v + eps * eps * w;
        if let Some(h) = &self.hook {
            theta += h.theta_term(st, omega);
            r += h.r_term(st, omega);
        }
        State { theta: frac(theta), r }
    }

    /// The orbit of `st0` under the word, starting with `st0` itself.
    pub fn iterate(&self, st0: State, word: &Word) -> Result<Vec<State>> {
        let mut out = Vec::with_capacity(word.len() + 1);
        out.push(st0);
        let mut st = st0;
        for (k, &w) in word.symbols().iter().enumerate() {
            st = self.step(st, w).map_err(|_| Error::NonFiniteState { step: k })?;
            out.push(st);
        }
        Ok(out)
    }

    /// The expected map: potentials replaced by their half-sums, no remainder.
    pub fn expected_step(&self, st: State) -> Result<State> {
        let eps = self.epsilon;
        let (u, v, w) = self.expected.eval(st.theta, st.r);
        let r = st.r + eps * v + eps * eps * w;
        let theta = frac(st.theta + st.r + eps * u);
        if r.is_finite() {
            Ok(State { theta, r })
        } else {
            Err(Error::NonFiniteState { step: 0 })
        }
    }

    /// `(Eu, Ev, Ew)` at a point.
    pub fn expected_potentials_at(&self, theta: f64, r: f64) -> (f64, f64, f64) {
        self.expected.eval(theta, r)
    }

    /// Reconstructs the endpoint of an orbit from the sums of the potentials
    /// along it, expanded in expected and fluctuating parts.
    ///
    /// With the `eps^2 w` terms kept the expansion is exact, so the defect
    /// measures the accumulated remainder terms only.
    pub fn first_order_prediction(&self, st0: State, word: &Word) -> Result<Prediction> {
        let orbit = self.iterate(st0, word)?;
        let n = word.len();
        let eps = self.epsilon;
        let ed = self.potentials.expected_difference();
        let ew = self.potentials.expected_w();
        let wd = self.potentials.w_plus.sub(&self.potentials.w_minus).scale(0.5);
        let (mut theta, mut r) = (st0.theta + n as f64 * st0.r, st0.r);
        for (k, (st, &om)) in orbit.iter().zip(word.symbols()).enumerate() {
            let om = f64::from(om);
            let weight = (n - k - 1) as f64;
            let (t, x) = (st.theta, st.r);
            let dr = eps * (ed.ev.eval(t, x) + om * ed.v.eval(t, x))
                + eps * eps * (ew.eval(t, x) + om * wd.eval(t, x));
            theta += eps * (ed.eu.eval(t, x) + om * ed.u.eval(t, x)) + weight * dr;
            r += dr;
        }
        let last = orbit[n];
        Ok(Prediction { theta: frac(theta), r, defect: (last.r - r).abs(), actual: last })
    }

    /// Inverts `f_omega` at `target` by Newton's method.
    pub fn inverse_step(&self, target: State, omega: i8) -> Result<State> {
        let eps = self.epsilon;
        let (u, v, w) = (self.potentials.u(omega), self.potentials.v(omega), self.potentials.w(omega));
        let (ut, ur) = (u.d_theta(), u.d_r());
        let (vt, vr) = (v.d_theta(), v.d_r());
        let (wt, wr) = (w.d_theta(), w.d_r());
        // the unperturbed inverse is the starting guess
        let mut x = State::new(target.theta - target.r, target.r);
        for _ in 0..50 {
            let img = self.step_unchecked(x, omega);
            let mut ft = img.theta - target.theta;
            ft -= math::round(ft);
            let fr = img.r - target.r;
            if ft.abs() < 1e-15 && fr.abs() < 1e-15 {
                break;
            }
            let (t, r) = (x.theta, x.r);
            let j11 = 1.0 + eps * ut.eval(t, r);
            let j12 = 1.0 + eps * ur.eval(t, r);
            let j21 = eps * vt.eval(t, r) + eps * eps * wt.eval(t, r);
            let j22 = 1.0 + eps * vr.eval(t, r) + eps * eps * wr.eval(t, r);
            let det = j11 * j22 - j12 * j21;
            if det == 0.0 || !det.is_finite() {
                return Err(Error::IllConditioned { what: "inverse step Jacobian", margin: det });
            }
            let dt = (j22 * ft - j12 * fr) / det;
            let dr = (-j21 * ft + j11 * fr) / det;
            x = State::new(t - dt, r - dr);
        }
        Ok(x)
    }
}

/// Output of [`MapSystem::first_order_prediction`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub theta: f64,
    pub r: f64,
    /// `|r_n - r_hat_n|`.
    pub defect: f64,
    pub actual: State,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cos_sin(eps: f64) -> MapSystem {
        MapSystem::with_epsilon(SystemPotentials::cos_sin(), eps).unwrap()
    }

    fn word(seed: u64, n: usize) -> Word {
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let syms = (0..n)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                if x & 1 == 0 { 1 } else { -1 }
            })
            .collect();
        Word::new(syms).unwrap()
    }

    #[test]
    fn parameters_are_validated() {
        let p = SystemPotentials::cos_sin();
        assert!(MapSystem::new(p.clone(), 0.0, 0.55, 7).is_err());
        assert!(MapSystem::new(p.clone(), 0.3, 0.55, 7).is_err());
        assert!(MapSystem::new(p.clone(), 0.01, 0.5, 7).is_err());
        assert!(MapSystem::new(p, 0.01, 0.55, 6).is_err());
        assert!(Word::new(alloc::vec![1, 0]).is_err());
    }

    #[test]
    fn integrable_step_is_rotation() {
        let sys = MapSystem::with_epsilon(SystemPotentials::integrable(2), 0.1).unwrap();
        let st = sys.step(State::new(0.7, 0.45), 1).unwrap();
        assert_abs_diff_eq!(st.theta, 0.15, epsilon = 1e-15);
        assert_eq!(st.r, 0.45);
    }

    #[test]
    fn cos_sin_single_steps() {
        let sys = cos_sin(0.01);
        let up = sys.step(State::new(0.0, 0.5), 1).unwrap();
        assert_abs_diff_eq!(up.theta, 0.51, epsilon = 1e-15);
        assert_abs_diff_eq!(up.r, 0.51, epsilon = 1e-15);
        let down = sys.step(State::new(0.0, 0.5), -1).unwrap();
        assert_abs_diff_eq!(down.theta, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(down.r, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn runaway_state_is_reported() {
        let sys = cos_sin(0.01);
        let err = sys.step(State { theta: 0.0, r: f64::INFINITY }, 1).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }));
        let w = Word::new(alloc::vec![1, 1, -1]).unwrap();
        let err = sys.iterate(State { theta: 0.0, r: f64::NAN }, &w).unwrap_err();
        assert_eq!(err, Error::NonFiniteState { step: 0 });
    }

    #[test]
    fn orbit_lengths() {
        let sys = cos_sin(0.01);
        let st = State::new(0.1, 0.2);
        assert_eq!(sys.iterate(st, &Word::new(alloc::vec![]).unwrap()).unwrap(), alloc::vec![st]);
        let integ = MapSystem::with_epsilon(SystemPotentials::integrable(1), 0.01).unwrap();
        let orbit = integ.iterate(st, &word(3, 10)).unwrap();
        assert_eq!(orbit.len(), 11);
        assert_abs_diff_eq!(orbit[10].theta, 0.1, epsilon = 1e-12);
        assert_eq!(orbit[10].r, 0.2);
    }

    #[test]
    fn expected_step_examples() {
        let sys = cos_sin(0.01);
        let st = sys.expected_step(State::new(0.0, 0.3)).unwrap();
        assert_abs_diff_eq!(st.r, 0.3 + 0.005, epsilon = 1e-15);
        let c = TrigPotential::cos(1, 1.0);
        let m = c.scale(-1.0);
        let z = TrigPotential::zero(1);
        let odd = SystemPotentials::new(c.clone(), m.clone(), c, m, z.clone(), z);
        let sys = MapSystem::with_epsilon(odd, 0.05).unwrap();
        let st = sys.expected_step(State::new(0.3, 0.2)).unwrap();
        assert_abs_diff_eq!(st.theta, 0.5, epsilon = 1e-15);
        assert_eq!(st.r, 0.2);
    }

    #[test]
    fn prediction_is_exact_without_remainder() {
        let sys = cos_sin(0.01);
        let one = sys.first_order_prediction(State::new(0.3, 0.1), &word(1, 1)).unwrap();
        assert_eq!(one.defect, 0.0);
        let p = sys.first_order_prediction(State::new(0.3, 0.1), &word(7, 100)).unwrap();
        assert!(p.defect < 1e-13, "{}", p.defect);
        let mut dt = p.theta - p.actual.theta;
        dt -= math::round(dt);
        assert!(dt.abs() < 1e-11);
        let integ = MapSystem::with_epsilon(SystemPotentials::integrable(1), 0.01).unwrap();
        assert_eq!(integ.first_order_prediction(State::new(0.3, 0.1), &word(2, 500)).unwrap().defect, 0.0);
    }

    #[test]
    fn defect_scales_with_remainder() {
        // max defect / (n eps^{2+a}) should not drift as eps shrinks
        let a = 0.55;
        let n = 1000;
        let mut ratios = Vec::new();
        for eps in [0.02, 0.01, 0.005] {
            let sys = cos_sin(eps).with_hook(Arc::new(StressHook::new(1.0, eps, a)));
            let worst = (0..50)
                .map(|s| sys.first_order_prediction(State::new(0.1 * s as f64 % 1.0, 0.3), &word(s, n)).unwrap().defect)
                .fold(0.0, f64::max);
            ratios.push(worst / (n as f64 * math::powf(eps, 2.0 + a)));
        }
        for r in &ratios {
            assert!(*r <= 1.5, "{ratios:?}");
            assert!(*r >= 0.25, "{ratios:?}");
        }
        assert!(ratios[0] / ratios[2] < 2.0 && ratios[2] / ratios[0] < 2.0);
    }

    proptest! {
        #[test]
        fn inverse_step_recovers_input(t in 0.0f64..1.0, r in -2.0f64..2.0, up in proptest::bool::ANY, eps in 0.0001f64..0.01) {
            let sys = cos_sin(eps);
            let om = if up { 1 } else { -1 };
            let st = State::new(t, r);
            let back = sys.inverse_step(sys.step(st, om).unwrap(), om).unwrap();
            let mut dt = back.theta - st.theta;
            dt -= math::round(dt);
            prop_assert!(dt.abs() < 1e-9 && (back.r - st.r).abs() < 1e-9);
        }

        #[test]
        fn action_moves_by_at_most_eps(t in 0.0f64..1.0, r in -2.0f64..2.0, seed in 0u64..1000) {
            let sys = cos_sin(0.02);
            let orbit = sys.iterate(State::new(t, r), &word(seed, 200)).unwrap();
            for pair in orbit.windows(2) {
                prop_assert!((pair[1].r - pair[0].r).abs() <= 0.02 + 1e-15);
                prop_assert!(pair[1].theta >= 0.0 && pair[1].theta < 1.0);
            }
        }
    }
}
