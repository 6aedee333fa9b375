//! Zeros of periodic functions on the circle `[0, 1)`.

use alloc::vec::Vec;

/// A zero of a periodic function together with the derivative there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub theta: f64,
    pub slope: f64,
}

/// Bisects a bracketed sign change of `f` on `[a, b]` down to width `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Locates the zeros of a 1-periodic function with derivative `df`.
///
/// Sign changes are bracketed on `samples` equispaced nodes and bisected to
/// `1e-12`. Tangential zeros, which do not change sign, are found as critical
/// points where `|f| <= 1e-10`; they are reported with their (tiny) slope.
/// Zeros closer than `1e-9` are merged.
pub fn periodic_roots<F, D>(f: &F, df: &D, samples: usize) -> Vec<Root>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let n = samples.max(8);
    let h = 1.0 / n as f64;
    let mut roots: Vec<f64> = Vec::new();
    for j in 0..n {
        let a = j as f64 * h;
        let b = a + h;
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            roots.push(a);
        } else if (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
            roots.push(bisect(f, a, b, 1e-12));
        }
        let (da, db) = (df(a), df(b));
        if (da < 0.0) != (db < 0.0) {
            let c = bisect(df, a, b, 1e-12);
            if f(c).abs() <= 1e-10 {
                roots.push(c);
            }
        }
    }
    let mut roots: Vec<f64> = roots.into_iter().map(crate::math::frac).collect();
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for r in roots {
        match merged.last() {
            Some(last) if r - last < 1e-9 => {}
            _ => merged.push(r),
        }
    }
    if merged.len() > 1 && merged[0] + 1.0 - merged[merged.len() - 1] < 1e-9 {
        merged.pop();
    }
    merged.into_iter().map(|theta| Root { theta, slope: df(theta) }).collect()
}

/// Distance between two angles on the circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = crate::math::frac(a - b);
    d.min(1.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, sin, TAU};
    use approx::assert_abs_diff_eq;

    #[test]
    fn cosine_roots() {
        let rs = periodic_roots(&|t| cos(TAU * t), &|t| -TAU * sin(TAU * t), 64);
        assert_eq!(rs.len(), 2);
        assert_abs_diff_eq!(rs[0].theta, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(rs[1].theta, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(rs[0].slope, -TAU, epsilon = 1e-9);
    }

    #[test]
    fn tangential_root_found() {
        // 1 + cos has a double zero at 1/2
        let rs = periodic_roots(&|t| 1.0 + cos(TAU * t), &|t| -TAU * sin(TAU * t), 64);
        assert_eq!(rs.len(), 1);
        assert_abs_diff_eq!(rs[0].theta, 0.5, epsilon = 1e-9);
        assert!(rs[0].slope.abs() < 1e-8);
    }

    #[test]
    fn root_at_origin_not_duplicated() {
        let rs = periodic_roots(&|t| sin(TAU * t), &|t| TAU * cos(TAU * t), 64);
        assert_eq!(rs.len(), 2);
        assert!(circle_distance(rs[0].theta, 0.0) < 1e-12);
    }
}
