//! Trigonometric-polynomial potentials with polynomial action dependence.
//!
//! A potential is `g(theta, r) = sum_{|k| <= d} g_k(r) e^{2 pi i k theta}` where
//! each `g_k` is a complex polynomial in `r` and `g_{-k} = conj(g_k)`, so `g`
//! is real.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::math::{self, TAU};
use crate::poly::CPoly;
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Real trigonometric polynomial in `theta` of degree at most `d`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrigPotential {
    d: usize,
    // index k + d
    coeffs: Vec<CPoly>,
}

impl TrigPotential {
    pub fn zero(d: usize) -> Self {
        Self { d, coeffs: alloc::vec![CPoly::zero(); 2 * d + 1] }
    }

    /// `c` (independent of both variables).
    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero(0);
        p.coeffs[0] = CPoly::from_parts(&[c], &[]);
        p
    }

    /// `amp * cos(2 pi k theta)`.
    pub fn cos(k: usize, amp: f64) -> Self {
        let mut p = Self::zero(k);
        p.set(k as i64, CPoly::from_parts(&[0.5 * amp], &[])).expect("harmonic in range");
        p
    }

    /// `amp * sin(2 pi k theta)`.
    pub fn sin(k: usize, amp: f64) -> Self {
        let mut p = Self::zero(k);
        p.set(k as i64, CPoly::from_parts(&[], &[-0.5 * amp])).expect("harmonic in range");
        p
    }

    /// Builds a potential from the coefficients with `k >= 0`; negative
    /// harmonics are mirrored. The `k = 0` coefficient must be real.
    pub fn from_nonnegative(d: usize, coeffs: &[(usize, CPoly)]) -> Result<Self> {
        let mut p = Self::zero(d);
        for (k, c) in coeffs {
            p.set(*k as i64, c.clone())?;
        }
        Ok(p)
    }

    /// Builds a potential from a full set of coefficients, checking that
    /// `g_{-k} = conj(g_k)`.
    pub fn from_full(d: usize, coeffs: Vec<CPoly>) -> Result<Self> {
        if coeffs.len() != 2 * d + 1 {
            return Err(Error::InvalidParameter { name: "coeffs", reason: "expected 2d+1 harmonics" });
        }
        let p = Self { d, coeffs };
        for k in 0..=d as i64 {
            if p.coeff(k).max_abs_diff(&p.coeff(-k).conj()) > 1e-14 {
                return Err(Error::InvalidParameter {
                    name: "coeffs",
                    reason: "coefficients are not conjugate symmetric",
                });
            }
        }
        Ok(p)
    }

    /// Sets harmonic `k` and its mirror `-k`.
    pub fn set(&mut self, k: i64, c: CPoly) -> Result<()> {
        let ka = k.unsigned_abs() as usize;
        if ka > self.d {
            return Err(Error::InvalidParameter { name: "k", reason: "harmonic exceeds degree" });
        }
        if k == 0 {
            if c.coeffs().iter().any(|z| z.im != 0.0) {
                return Err(Error::InvalidParameter { name: "k", reason: "mean term must be real" });
            }
            self.coeffs[self.d] = c;
            return Ok(());
        }
        let (pos, neg) = if k > 0 { (c.clone(), c.conj()) } else { (c.conj(), c) };
        self.coeffs[self.d + ka] = pos;
        self.coeffs[self.d - ka] = neg;
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// Coefficient polynomial of harmonic `k`, zero outside the degree.
    pub fn coeff(&self, k: i64) -> CPoly {
        if k.unsigned_abs() as usize > self.d {
            return CPoly::zero();
        }
        self.coeffs[(self.d as i64 + k) as usize].clone()
    }

    fn coeff_ref(&self, k: i64) -> Option<&CPoly> {
        if k.unsigned_abs() as usize > self.d {
            None
        } else {
            Some(&self.coeffs[(self.d as i64 + k) as usize])
        }
    }

    pub fn coeff_at(&self, k: i64, r: f64) -> Complex64 {
        self.coeff_ref(k).map_or(ZERO, |c| c.eval(r))
    }

    /// Largest polynomial degree in `r` over all harmonics.
    pub fn r_degree(&self) -> usize {
        self.coeffs.iter().map(CPoly::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(CPoly::is_zero)
    }

    /// True if no coefficient depends on `r`.
    pub fn is_r_independent(&self) -> bool {
        self.coeffs.iter().all(CPoly::is_constant)
    }

    /// Same potential viewed at a larger degree.
    pub fn padded(&self, d: usize) -> Self {
        if d <= self.d {
            return self.clone();
        }
        let mut p = Self::zero(d);
        for k in -(self.d as i64)..=self.d as i64 {
            p.coeffs[(d as i64 + k) as usize] = self.coeff(k);
        }
        p
    }

    /// Fourier coefficients at a fixed action.
    pub fn harmonics_at(&self, r: f64) -> Harmonics {
        Harmonics { d: self.d, values: self.coeffs.iter().map(|c| c.eval(r)).collect() }
    }

    /// `g(theta, r)`.
    pub fn eval(&self, theta: f64, r: f64) -> f64 {
        let z = math::turn(theta);
        let mut zk = z;
        let mut acc = self.coeffs[self.d].eval(r).re;
        let mut imag = self.coeffs[self.d].eval(r).im;
        for k in 1..=self.d {
            let c = self.coeffs[self.d + k].eval(r) * zk;
            let cm = self.coeffs[self.d - k].eval(r) * zk.conj();
            acc += c.re + cm.re;
            imag += c.im + cm.im;
            zk *= z;
        }
        debug_assert!(imag.abs() <= 1e-12 * (1.0 + acc.abs()), "imaginary residue {imag}");
        acc
    }

    /// `dg/dtheta`.
    pub fn d_theta(&self) -> Self {
        let coeffs = (0..self.coeffs.len())
            .map(|j| {
                let k = j as f64 - self.d as f64;
                self.coeffs[j].scale(I * (TAU * k))
            })
            .collect();
        Self { d: self.d, coeffs }
    }

    /// `dg/dr`.
    pub fn d_r(&self) -> Self {
        Self { d: self.d, coeffs: self.coeffs.iter().map(CPoly::derivative).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        let s = Complex64::new(s, 0.0);
        Self { d: self.d, coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.d.max(other.d);
        let a = self.padded(d);
        let b = other.padded(d);
        Self { d, coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product (degree adds).
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.d + other.d;
        let mut out = Self::zero(d);
        for j in -(self.d as i64)..=self.d as i64 {
            for k in -(other.d as i64)..=other.d as i64 {
                let idx = (d as i64 + j + k) as usize;
                out.coeffs[idx] = &out.coeffs[idx] + &(&self.coeff(j) * &other.coeff(k));
            }
        }
        out
    }

    /// `int_0^1 g(theta, r) dtheta`.
    pub fn mean_at(&self, r: f64) -> f64 {
        self.coeffs[self.d].eval(r).re
    }

    /// Maximum of `|g|` over a `(theta, r)` sample grid.
    pub fn max_abs_on(&self, r_lo: f64, r_hi: f64, n_theta: usize, n_r: usize) -> f64 {
        let n_theta = n_theta.max(1);
        let mut best = 0.0f64;
        for i in 0..n_r.max(1) {
            let r = if n_r <= 1 { r_lo } else { r_lo + (r_hi - r_lo) * i as f64 / (n_r - 1) as f64 };
            for j in 0..n_theta {
                best = best.max(self.eval(j as f64 / n_theta as f64, r).abs());
            }
        }
        best
    }
}

/// Fourier coefficients of a real trigonometric polynomial at a fixed
/// action, as a dense vector indexed by `k + d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Harmonics {
    pub d: usize,
    pub values: Vec<Complex64>,
}

impl Harmonics {
    pub fn zero(d: usize) -> Self {
        Self { d, values: alloc::vec![ZERO; 2 * d + 1] }
    }

    pub fn get(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.d {
            ZERO
        } else {
            self.values[(self.d as i64 + k) as usize]
        }
    }

    pub fn set(&mut self, k: i64, v: Complex64) {
        let idx = (self.d as i64 + k) as usize;
        self.values[idx] = v;
    }

    pub fn d_theta(&self) -> Self {
        let mut out = self.clone();
        for k in -(self.d as i64)..=self.d as i64 {
            out.set(k, self.get(k) * I * (TAU * k as f64));
        }
        out
    }

    /// Coefficients of `theta -> g(theta + alpha)`.
    pub fn shifted(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for k in -(self.d as i64)..=self.d as i64 {
            out.set(k, self.get(k) * math::turn(k as f64 * alpha));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.d.max(other.d);
        let mut out = Self::zero(d);
        for k in -(d as i64)..=d as i64 {
            out.set(k, self.get(k) + other.get(k));
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { d: self.d, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let z = math::turn(theta);
        let mut zk = z;
        let mut acc = self.get(0).re;
        for k in 1..=self.d as i64 {
            acc += (self.get(k) * zk + self.get(-k) * zk.conj()).re;
            zk *= z;
        }
        acc
    }

    /// `int_0^1 f g dtheta = sum_k f_k g_{-k}`.
    pub fn pair(&self, other: &Self) -> f64 {
        let d = self.d.min(other.d) as i64;
        (-d..=d).map(|k| self.get(k) * other.get(-k)).sum::<Complex64>().re
    }

    /// `int_0^1 g^2 dtheta`.
    pub fn l2_squared(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// The six potentials of the two maps `f_{+1}` and `f_{-1}`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemPotentials {
    pub u_plus: TrigPotential,
    pub u_minus: TrigPotential,
    pub v_plus: TrigPotential,
    pub v_minus: TrigPotential,
    pub w_plus: TrigPotential,
    pub w_minus: TrigPotential,
}

/// Half-sums and half-differences of the potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedDifference {
    pub eu: TrigPotential,
    pub ev: TrigPotential,
    pub u: TrigPotential,
    pub v: TrigPotential,
}

impl SystemPotentials {
    /// All six potentials brought to a common degree.
    pub fn new(
        u_plus: TrigPotential,
        u_minus: TrigPotential,
        v_plus: TrigPotential,
        v_minus: TrigPotential,
        w_plus: TrigPotential,
        w_minus: TrigPotential,
    ) -> Self {
        let d = [&u_plus, &u_minus, &v_plus, &v_minus, &w_plus, &w_minus]
            .iter()
            .map(|p| p.degree())
            .max()
            .unwrap_or(0);
        Self {
            u_plus: u_plus.padded(d),
            u_minus: u_minus.padded(d),
            v_plus: v_plus.padded(d),
            v_minus: v_minus.padded(d),
            w_plus: w_plus.padded(d),
            w_minus: w_minus.padded(d),
        }
    }

    /// All potentials zero: the integrable twist map.
    pub fn integrable(d: usize) -> Self {
        let z = TrigPotential::zero(d);
        Self::new(z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z)
    }

    /// `u_1 = v_1 = cos 2 pi theta`, `u_{-1} = v_{-1} = sin 2 pi theta`, `w = 0`.
    pub fn cos_sin() -> Self {
        let c = TrigPotential::cos(1, 1.0);
        let s = TrigPotential::sin(1, 1.0);
        let z = TrigPotential::zero(1);
        Self::new(c.clone(), s.clone(), c, s, z.clone(), z)
    }

    /// A system whose expected potentials come from a generating function
    /// `h`: `Eu = h_theta - h_r`, `Ev = h_theta`, `Ew = h_{theta r} h_theta`.
    /// The random parts `du`, `dv` are added with opposite signs to the two
    /// maps. Such systems have zero drift.
    pub fn from_generating_function(h: &TrigPotential, du: &TrigPotential, dv: &TrigPotential) -> Self {
        let ht = h.d_theta();
        let eu = ht.sub(&h.d_r());
        let ev = ht.clone();
        let ew = ht.d_r().mul(&ht);
        Self::new(eu.add(du), eu.sub(du), ev.add(dv), ev.sub(dv), ew.clone(), ew)
    }

    pub fn degree(&self) -> usize {
        self.v_plus.degree()
    }

    /// Largest harmonic actually present in `v_{+1}` or `v_{-1}` (at least
    /// 1). This is the `d` of the resonance bookkeeping.
    pub fn v_degree(&self) -> usize {
        let d = self.degree() as i64;
        (1..=d)
            .rev()
            .find(|&k| !self.v_plus.coeff(k).is_zero() || !self.v_minus.coeff(k).is_zero())
            .unwrap_or(1) as usize
    }

    pub fn u(&self, omega: i8) -> &TrigPotential {
        if omega > 0 {
            &self.u_plus
        } else {
            &self.u_minus
        }
    }

    pub fn v(&self, omega: i8) -> &TrigPotential {
        if omega > 0 {
            &self.v_plus
        } else {
            &self.v_minus
        }
    }

    pub fn w(&self, omega: i8) -> &TrigPotential {
        if omega > 0 {
            &self.w_plus
        } else {
            &self.w_minus
        }
    }

    pub fn expected_difference(&self) -> ExpectedDifference {
        ExpectedDifference {
            eu: self.u_plus.add(&self.u_minus).scale(0.5),
            ev: self.v_plus.add(&self.v_minus).scale(0.5),
            u: self.u_plus.sub(&self.u_minus).scale(0.5),
            v: self.v_plus.sub(&self.v_minus).scale(0.5),
        }
    }

    pub fn expected_w(&self) -> TrigPotential {
        self.w_plus.add(&self.w_minus).scale(0.5)
    }

    /// `int_0^1 v^2 dtheta` with `v` the half-difference of `v_{+1}, v_{-1}`.
    pub fn sigma_squared(&self, r: f64) -> f64 {
        let d = self.degree() as i64;
        (-d..=d)
            .map(|k| (0.5 * (self.v_plus.coeff_at(k, r) - self.v_minus.coeff_at(k, r))).norm_sqr())
            .sum()
    }

    /// Largest sampled `|v_{+-1}|` over `[r_lo, r_hi]`.
    pub fn max_abs_v(&self, r_lo: f64, r_hi: f64) -> f64 {
        let n = 64 * self.degree().max(1);
        self.v_plus
            .max_abs_on(r_lo, r_hi, n, 17)
            .max(self.v_minus.max_abs_on(r_lo, r_hi, n, 17))
    }

    /// Checks the normalization `max |v_i| <= 1` on a sample grid.
    pub fn check_normalized(&self, r_lo: f64, r_hi: f64) -> Result<()> {
        if self.max_abs_v(r_lo, r_hi) > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter { name: "v", reason: "max |v_i| exceeds 1" });
        }
        Ok(())
    }

    /// Harmonics `k > 0` where `(Eu^k, Ev^k)` is not the zero function.
    pub fn fourier_support(&self) -> Vec<usize> {
        let ed = self.expected_difference();
        (1..=self.degree())
            .filter(|&k| !ed.eu.coeff(k as i64).is_zero() || !ed.ev.coeff(k as i64).is_zero())
            .collect()
    }

    /// True when `u_i == v_i` and nothing depends on `r`, which is the
    /// standard-map family the cos/sin example belongs to.
    pub fn is_standard_map_class(&self) -> bool {
        self.u_plus == self.v_plus
            && self.u_minus == self.v_minus
            && [&self.u_plus, &self.u_minus, &self.w_plus, &self.w_minus]
                .iter()
                .all(|p| p.is_r_independent())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn half_cos_minus_sin() -> TrigPotential {
        TrigPotential::cos(1, 0.5).sub(&TrigPotential::sin(1, 0.5))
    }

    #[test]
    fn eval_examples() {
        let c = TrigPotential::cos(1, 1.0);
        assert_abs_diff_eq!(c.eval(0.0, 0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.eval(0.25, 0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(half_cos_minus_sin().eval(0.125, 0.3), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cos_sin_halves() {
        let ed = SystemPotentials::cos_sin().expected_difference();
        let ev = TrigPotential::cos(1, 0.5).add(&TrigPotential::sin(1, 0.5));
        for j in 0..16 {
            let t = j as f64 / 16.0;
            assert_abs_diff_eq!(ed.v.eval(t, 0.0), half_cos_minus_sin().eval(t, 0.0), epsilon = 1e-15);
            assert_abs_diff_eq!(ed.ev.eval(t, 0.0), ev.eval(t, 0.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn equal_maps_have_no_difference() {
        let c = TrigPotential::cos(2, 0.7);
        let z = TrigPotential::zero(2);
        let sys = SystemPotentials::new(z.clone(), z.clone(), c.clone(), c, z.clone(), z);
        assert!(sys.expected_difference().v.is_zero());
        assert_eq!(sys.sigma_squared(0.4), 0.0);
    }

    #[test]
    fn one_sided_system() {
        let c = TrigPotential::cos(1, 1.0);
        let z = TrigPotential::zero(1);
        let sys = SystemPotentials::new(z.clone(), z.clone(), c.clone(), z.clone(), z.clone(), z);
        let ed = sys.expected_difference();
        assert_eq!(ed.ev, c.scale(0.5));
        assert_eq!(ed.v, c.scale(0.5));
    }

    #[test]
    fn cos_sin_variance_is_a_quarter() {
        let sys = SystemPotentials::cos_sin();
        for r in [-3.0, 0.0, 0.3, 17.5] {
            assert_abs_diff_eq!(sys.sigma_squared(r), 0.25, epsilon = 1e-15);
        }
        let v = sys.expected_difference().v;
        assert!((v.coeff_at(1, 0.0) - Complex64::new(0.25, 0.25)).norm() < 1e-15);
        let n = 10_000;
        let quad: f64 = (0..n).map(|j| v.eval(j as f64 / n as f64, 0.0).powi(2)).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(quad, 0.25, epsilon = 1e-12);
        sys.check_normalized(-1.0, 1.0).unwrap();
    }

    #[test]
    fn mean_term_must_be_real() {
        let mut p = TrigPotential::zero(1);
        assert!(p.set(0, CPoly::from_parts(&[1.0], &[0.5])).is_err());
        assert!(p.set(2, CPoly::from_parts(&[1.0], &[])).is_err());
    }

    #[test]
    fn pairing_matches_quadrature() {
        let f = TrigPotential::cos(1, 1.0).add(&TrigPotential::sin(2, 0.3)).add(&TrigPotential::constant(0.2));
        let g = TrigPotential::sin(1, 0.5).add(&TrigPotential::sin(2, -1.0));
        let exact = f.harmonics_at(0.0).pair(&g.harmonics_at(0.0));
        let n = 64;
        let quad: f64 = (0..n).map(|j| {
            let t = j as f64 / n as f64;
            f.eval(t, 0.0) * g.eval(t, 0.0)
        }).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(exact, quad, epsilon = 1e-14);
        assert_abs_diff_eq!(exact, -0.15, epsilon = 1e-14);
    }

    fn arb_poly(deg: usize) -> impl Strategy<Value = CPoly> {
        (
            proptest::collection::vec(-1.0f64..1.0, deg + 1),
            proptest::collection::vec(-1.0f64..1.0, deg + 1),
        )
            .prop_map(|(re, im)| CPoly::from_parts(&re, &im))
    }

    fn arb_potential() -> impl Strategy<Value = TrigPotential> {
        (1usize..=5).prop_flat_map(|d| {
            (
                -1.0f64..1.0,
                proptest::collection::vec(arb_poly(2), d),
            )
                .prop_map(move |(c0, cs)| {
                    let mut p = TrigPotential::zero(d);
                    p.set(0, CPoly::from_parts(&[c0, 0.5 * c0], &[])).unwrap();
                    for (k, c) in cs.into_iter().enumerate() {
                        p.set(k as i64 + 1, c).unwrap();
                    }
                    p
                })
        })
    }

    proptest! {
        #[test]
        fn parseval_matches_simpson(vp in arb_potential(), vm in arb_potential(), r in -2.0f64..2.0) {
            let z = TrigPotential::zero(1);
            let sys = SystemPotentials::new(z.clone(), z.clone(), vp, vm, z.clone(), z);
            let v = sys.expected_difference().v;
            let n = 400;
            let h = 1.0 / n as f64;
            let mut quad = 0.0;
            for j in 0..=n {
                let w = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                quad += w * v.eval(j as f64 * h, r).powi(2);
            }
            quad *= h / 3.0;
            prop_assert!((quad - sys.sigma_squared(r)).abs() <= 1e-10 * (1.0 + quad));
        }

        #[test]
        fn expectation_is_linear(vp in arb_potential(), vm in arb_potential(), t in 0.0f64..1.0, r in -2.0f64..2.0) {
            let z = TrigPotential::zero(1);
            let sys = SystemPotentials::new(z.clone(), z.clone(), vp.clone(), vm.clone(), z.clone(), z);
            let ev = sys.expected_difference().ev.eval(t, r);
            prop_assert!((ev - 0.5 * (vp.eval(t, r) + vm.eval(t, r))).abs() <= 1e-14 * (1.0 + ev.abs()) * 10.0);
        }

        #[test]
        fn zero_mean_iff_node_average_vanishes(p in arb_potential(), r in -2.0f64..2.0, kill in proptest::bool::ANY) {
            let mut p = p;
            if kill {
                p.set(0, CPoly::zero()).unwrap();
            }
            let d = p.degree();
            let n = 4 * d + 1;
            let avg: f64 = (0..n).map(|j| p.eval(j as f64 / n as f64, r)).sum::<f64>() / n as f64;
            prop_assert_eq!(avg.abs() <= 1e-12, p.mean_at(r).abs() <= 1e-12);
        }

        #[test]
        fn product_matches_pointwise(f in arb_potential(), g in arb_potential(), t in 0.0f64..1.0, r in -1.0f64..1.0) {
            let lhs = f.mul(&g).eval(t, r);
            prop_assert!((lhs - f.eval(t, r) * g.eval(t, r)).abs() < 1e-9);
        }

        #[test]
        fn derivatives_match_finite_differences(f in arb_potential(), t in 0.0f64..1.0, r in -1.0f64..1.0) {
            let h = 1e-6;
            let ft = (f.eval(t + h, r) - f.eval(t - h, r)) / (2.0 * h);
            let fr = (f.eval(t, r + h) - f.eval(t, r - h)) / (2.0 * h);
            prop_assert!((f.d_theta().eval(t, r) - ft).abs() < 1e-5);
            prop_assert!((f.d_r().eval(t, r) - fr).abs() < 1e-5);
        }
    }
}
