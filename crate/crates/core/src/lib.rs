//! Random compositions of near-integrable cylinder maps.
//!
//! The crate models two twist maps of the cylinder `T x R`,
//!
//! ```text
//! f_w(theta, r) = (theta + r + eps*u_w(theta, r), r + eps*v_w(theta, r) + eps^2*w_w(theta, r)),
//! ```
//!
//! with `w` drawn uniformly from `{-1, +1}` at every step, and provides the
//! machinery needed to check that the action displacement `r_n - r_0` over
//! `n ~ s/eps^2` steps behaves like a diffusion with drift `b(r)` and
//! variance `sigma^2(r)`:
//!
//! * [`potentials`]: trigonometric-polynomial potentials with polynomial
//!   `r`-dependence and the standing hypotheses on them,
//! * [`dynamics`]: the random maps, their compositions and the expected map,
//! * [`normal_form`]: the mollified generating function, the near-identity
//!   change of variables and the drift,
//! * [`arithmetic`]: best rational approximations, strip classification,
//!   measure of the imaginary-rational set and ergodization times,
//! * [`mc`]: reproducible per-trajectory random streams, stopping times,
//!   random-walk lattices and hitting probabilities,
//! * [`stats`]: goodness-of-fit and martingale-residual statistics.
//!
//! The crate is `no_std` (it needs `alloc`). Parallel drivers, file formats
//! and the command-line front end live in the `twistwalk` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod arithmetic;
pub mod dynamics;
mod error;
pub mod hypotheses;
pub mod math;
pub mod mc;
pub mod normal_form;
pub mod poly;
pub mod potentials;
pub mod rng;
pub mod roots;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
