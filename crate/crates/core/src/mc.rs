//! Monte Carlo building blocks: trajectories, stopping times, random-walk
//! lattices and hitting probabilities.
//!
//! Everything here is sequential and indexed: trajectory `i` of an ensemble
//! draws its symbols (and its random initial angle, if any) from
//! [`SymbolStream::new(seed, i)`](SymbolStream::new), so a parallel driver
//! only has to map indices and collect the results in index order.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{MapSystem, State};
use crate::math::{self, adaptive_simpson};
use crate::rng::SymbolStream;
use crate::stats::{moments, DiffusionCoeffs};
use crate::{Error, Result};

/// Name of the random-stream scheme, recorded in outputs.
pub const STREAM_SCHEME: &str = "chacha8: key = seed, stream = trajectory index";

/// How trajectories start.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Initial {
    Fixed { theta: f64, r: f64 },
    /// Angle uniform on `[0, 1)`, drawn from the trajectory's own stream.
    UniformTheta { r: f64 },
}

impl Initial {
    pub fn r(&self) -> f64 {
        match *self {
            Self::Fixed { r, .. } | Self::UniformTheta { r } => r,
        }
    }

    fn draw(&self, stream: &mut SymbolStream) -> State {
        match *self {
            Self::Fixed { theta, r } => State::new(theta, r),
            Self::UniformTheta { r } => State::new(stream.next_unit(), r),
        }
    }
}

/// An ensemble of trajectories run for `n = round(s / eps^2)` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSpec {
    pub initial: Initial,
    pub s: f64,
    pub samples: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(initial: Initial, s: f64, samples: usize, seed: u64) -> Self {
        Self { initial, s, samples, seed }
    }

    /// Number of steps for the given `eps`; `n eps^2` must be within 1% of `s`.
    pub fn steps(&self, eps: f64) -> Result<usize> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::InvalidParameter { name: "s", reason: "must be positive" });
        }
        if self.samples < 1 {
            return Err(Error::InvalidParameter { name: "samples", reason: "need at least one" });
        }
        let n = math::round(self.s / (eps * eps));
        if n < 1.0 || (n * eps * eps - self.s).abs() > 0.01 * self.s {
            return Err(Error::InvalidParameter { name: "s", reason: "s / eps^2 is not within 1% of an integer" });
        }
        Ok(n as usize)
    }
}

/// Runs `n` steps from `st0`, calling `observe(k, state)` on every state
/// from `k = 0`; stops early when `observe` returns `true`.
///
/// Returns the last state and the number of steps taken.
pub fn drive<O>(sys: &MapSystem, st0: State, n: usize, stream: &mut SymbolStream, mut observe: O) -> Result<(State, usize)>
where
    O: FnMut(usize, State) -> bool,
{
    let mut st = st0;
    if observe(0, st) {
        return Ok((st, 0));
    }
    for k in 0..n {
        st = sys.step_unchecked(st, stream.next_symbol());
        if !st.r.is_finite() || !st.theta.is_finite() {
            return Err(Error::NonFiniteState { step: k });
        }
        if observe(k + 1, st) {
            return Ok((st, k + 1));
        }
    }
    Ok((st, n))
}

fn tag(index: u64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFiniteState { step } => Error::NonFiniteTrajectory { trajectory: index, step },
        other => other,
    }
}

/// Start and end of one trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Endpoints {
    pub start: State,
    pub end: State,
}

impl Endpoints {
    pub fn displacement(&self) -> f64 {
        self.end.r - self.start.r
    }
}

/// Trajectory `index` of the ensemble.
pub fn run_trajectory(sys: &MapSystem, spec: &EnsembleSpec, index: u64) -> Result<Endpoints> {
    let n = spec.steps(sys.epsilon())?;
    let mut stream = SymbolStream::new(spec.seed, index);
    let start = spec.initial.draw(&mut stream);
    let (end, _) = drive(sys, start, n, &mut stream, |_, _| false).map_err(tag(index))?;
    Ok(Endpoints { start, end })
}

/// Displacements `r_n - r_0` of an ensemble, in trajectory order.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleResult {
    pub displacements: Vec<f64>,
    pub steps: usize,
    pub epsilon: f64,
    pub s: f64,
    pub seed: u64,
    pub scheme: String,
}

/// Sequential ensemble run.
pub fn run_ensemble(sys: &MapSystem, spec: &EnsembleSpec) -> Result<EnsembleResult> {
    let steps = spec.steps(sys.epsilon())?;
    let displacements = (0..spec.samples as u64)
        .map(|i| run_trajectory(sys, spec, i).map(|e| e.displacement()))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(sys, spec, steps, displacements))
}

/// Wraps displacements computed elsewhere (e.g. in parallel).
pub fn assemble(sys: &MapSystem, spec: &EnsembleSpec, steps: usize, displacements: Vec<f64>) -> EnsembleResult {
    EnsembleResult {
        displacements,
        steps,
        epsilon: sys.epsilon(),
        s: spec.s,
        seed: spec.seed,
        scheme: String::from(STREAM_SCHEME),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExitSide {
    Up,
    Down,
    FinalTime,
}

/// When and where a trajectory left an action interval.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExitRecord {
    pub trajectory: u64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub entry: usize,
    pub exit: usize,
    pub side: ExitSide,
    pub r_exit: f64,
}

/// Runs until the action comes within `eps` of `lo` or `hi` (or crosses
/// one), or until `max_steps`.
pub fn first_exit(
    sys: &MapSystem,
    st0: State,
    lo: f64,
    hi: f64,
    max_steps: usize,
    stream: &mut SymbolStream,
    trajectory: u64,
) -> Result<ExitRecord> {
    let eps = sys.epsilon();
    let mut side = ExitSide::FinalTime;
    let (end, k) = drive(sys, st0, max_steps, stream, |k, st| {
        if k == 0 {
            return false;
        }
        if st.r >= hi - eps {
            side = ExitSide::Up;
        } else if st.r <= lo + eps {
            side = ExitSide::Down;
        }
        side != ExitSide::FinalTime
    })
    .map_err(tag(trajectory))?;
    Ok(ExitRecord { trajectory, r_lo: lo, r_hi: hi, entry: 0, exit: k, side, r_exit: end.r })
}

/// `[eps^{-2(1-gamma)+delta}, eps^{-2(1-gamma)-delta}]`.
pub fn exit_window(eps: f64, gamma: f64, delta: f64) -> (f64, f64) {
    let e = -2.0 * (1.0 - gamma);
    (math::powf(eps, e + delta), math::powf(eps, e - delta))
}

/// Exit times from `[lo, hi]` starting at action `r0` with a uniform angle.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExitExperiment {
    pub lo: f64,
    pub hi: f64,
    pub r0: f64,
    pub max_steps: usize,
    pub samples: usize,
    pub seed: u64,
}

impl ExitExperiment {
    pub fn run_one(&self, sys: &MapSystem, index: u64) -> Result<ExitRecord> {
        let mut stream = SymbolStream::new(self.seed, index);
        let st0 = State::new(stream.next_unit(), self.r0);
        first_exit(sys, st0, self.lo, self.hi, self.max_steps, &mut stream, index)
    }

    pub fn run(&self, sys: &MapSystem) -> Result<Vec<ExitRecord>> {
        (0..self.samples as u64).map(|i| self.run_one(sys, i)).collect()
    }
}

/// Summary of exit times against a window.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExitReport {
    pub window: (f64, f64),
    pub boundary_exits: usize,
    pub final_time: usize,
    pub below: usize,
    pub above: usize,
    /// Fraction of boundary exits outside the window.
    pub outside_fraction: f64,
    /// Exit times at the 5, 25, 50, 75 and 95% levels.
    pub quantiles: [f64; 5],
}

pub fn exit_report(records: &[ExitRecord], window: (f64, f64)) -> ExitReport {
    let mut times: Vec<f64> =
        records.iter().filter(|r| r.side != ExitSide::FinalTime).map(|r| r.exit as f64).collect();
    times.sort_by(f64::total_cmp);
    let below = times.iter().filter(|t| **t < window.0).count();
    let above = times.iter().filter(|t| **t > window.1).count();
    let q = |p: f64| {
        if times.is_empty() {
            f64::NAN
        } else {
            times[((p * (times.len() - 1) as f64) as usize).min(times.len() - 1)]
        }
    };
    ExitReport {
        window,
        boundary_exits: times.len(),
        final_time: records.len() - times.len(),
        below,
        above,
        outside_fraction: if times.is_empty() { 0.0 } else { (below + above) as f64 / times.len() as f64 },
        quantiles: [q(0.05), q(0.25), q(0.5), q(0.75), q(0.95)],
    }
}

const MIN_VARIANCE: f64 = 1e-12;

fn check_variance<S: Fn(f64) -> f64>(sigma2: &S, lo: f64, hi: f64) -> Result<()> {
    for j in 0..=64 {
        let r = lo + (hi - lo) * j as f64 / 64.0;
        let s = sigma2(r);
        if !(s >= MIN_VARIANCE) {
            return Err(Error::DegenerateVariance { r, sigma2: s });
        }
    }
    Ok(())
}

/// Probability that the diffusion with coefficients `b`, `sigma2` started at
/// `r` reaches `r_left` before `r_right`:
///
/// ```text
/// f(r) = int_r^R m / int_L^R m,   m(x) = exp(-int 2b/sigma^2).
/// ```
pub fn hitting_probability<B, S>(r: f64, r_left: f64, r_right: f64, b: B, sigma2: S) -> Result<f64>
where
    B: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    if !(r_left < r_right) || r < r_left || r > r_right {
        return Err(Error::InvalidParameter { name: "r", reason: "need r_left <= r <= r_right" });
    }
    check_variance(&sigma2, r_left, r_right)?;
    if r == r_left {
        return Ok(1.0);
    }
    if r == r_right {
        return Ok(0.0);
    }
    let ratio = |x: f64| 2.0 * b(x) / sigma2(x);
    // m normalized at the left end; the ratio does not depend on it
    let m = |x: f64| math::exp(-adaptive_simpson(&ratio, r_left, x, 1e-13));
    let num = adaptive_simpson(&m, r, r_right, 1e-12);
    let den = adaptive_simpson(&m, r_left, r_right, 1e-12);
    Ok(num / den)
}

/// Nodes of a random walk that is symmetric for the diffusion with scale
/// density `m(r) = exp(-int_origin^r 2b/sigma^2)`.
///
/// Spacings are `D_j = A scale / m(r_{j-1})` going up and mirrored going
/// down, so that `m D` is constant along the lattice.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WalkLattice {
    /// Increasing node positions.
    pub nodes: Vec<f64>,
    /// `A_j` for each node, with `A_0 = 0` at `origin_index`.
    pub a: Vec<f64>,
    pub origin_index: usize,
    pub step: f64,
    pub scale: f64,
}

impl WalkLattice {
    pub fn spacings(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_interior(&self, j: usize) -> bool {
        j > 0 && j + 1 < self.nodes.len()
    }
}

/// Builds the lattice through `origin` covering `[lo, hi]`.
pub fn calibrate_lattice<B, S>(b: B, sigma2: S, a_step: f64, origin: f64, scale: f64, lo: f64, hi: f64) -> Result<WalkLattice>
where
    B: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    if !(a_step > 0.0) || !(scale > 0.0) || !(lo <= origin && origin <= hi) {
        return Err(Error::InvalidParameter { name: "lattice", reason: "need A > 0, scale > 0, lo <= origin <= hi" });
    }
    check_variance(&sigma2, lo, hi)?;
    let ratio = |x: f64| 2.0 * b(x) / sigma2(x);
    const MAX_NODES: usize = 1 << 22;
    let mut up = alloc::vec![(origin, 0.0f64)];
    let mut log_m = 0.0;
    while up.last().unwrap().0 < hi {
        let (r_prev, a_prev) = *up.last().unwrap();
        let a_next = a_prev + a_step / math::exp(log_m);
        let r_next = origin + a_next * scale;
        log_m -= adaptive_simpson(&ratio, r_prev, r_next, 1e-13);
        up.push((r_next, a_next));
        if up.len() > MAX_NODES {
            return Err(Error::InvalidParameter { name: "lattice", reason: "too many nodes to cover the range" });
        }
    }
    let mut down: Vec<(f64, f64)> = Vec::new();
    let (mut r_prev, mut a_prev, mut log_m) = (origin, 0.0, 0.0);
    while r_prev > lo {
        let a_next = a_prev - a_step / math::exp(log_m);
        let r_next = origin + a_next * scale;
        log_m += adaptive_simpson(&ratio, r_next, r_prev, 1e-13);
        down.push((r_next, a_next));
        (r_prev, a_prev) = (r_next, a_next);
        if down.len() > MAX_NODES {
            return Err(Error::InvalidParameter { name: "lattice", reason: "too many nodes to cover the range" });
        }
    }
    let origin_index = down.len();
    let all: Vec<(f64, f64)> = down.into_iter().rev().chain(up).collect();
    debug_assert!(all.windows(2).all(|w| w[1].1 > w[0].1));
    Ok(WalkLattice {
        nodes: all.iter().map(|x| x.0).collect(),
        a: all.iter().map(|x| x.1).collect(),
        origin_index,
        step: a_step,
        scale,
    })
}

/// Outcome of one move on the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    /// `None` if neither neighbour was reached within the step budget.
    pub up: Option<bool>,
    pub steps: usize,
}

/// Runs from node `j` (interior) until within `eps` of, or across, one of
/// its neighbours.
pub fn node_transition(
    sys: &MapSystem,
    lattice: &WalkLattice,
    j: usize,
    theta: f64,
    max_steps: usize,
    stream: &mut SymbolStream,
) -> Result<(Transition, State)> {
    if !lattice.is_interior(j) {
        return Err(Error::InvalidParameter { name: "node", reason: "transitions start at interior nodes" });
    }
    let eps = sys.epsilon();
    let (lo, hi) = (lattice.nodes[j - 1], lattice.nodes[j + 1]);
    let mut up = None;
    let (end, steps) = drive(sys, State::new(theta, lattice.nodes[j]), max_steps, stream, |k, st| {
        if k == 0 {
            return false;
        }
        if st.r >= hi - eps {
            up = Some(true);
        } else if st.r <= lo + eps {
            up = Some(false);
        }
        up.is_some()
    })?;
    Ok((Transition { up, steps }, end))
}

/// Independent starts at node `j` with uniform angles, one per stream index.
pub fn node_transition_sample(
    sys: &MapSystem,
    lattice: &WalkLattice,
    j: usize,
    max_steps: usize,
    seed: u64,
    index: u64,
) -> Result<Transition> {
    let mut stream = SymbolStream::new(seed, index);
    let theta = stream.next_unit();
    node_transition(sys, lattice, j, theta, max_steps, &mut stream).map(|x| x.0).map_err(tag(index))
}

/// The embedded walk: after each transition the orbit restarts exactly on
/// the node it reached, keeping its angle. Returns the visited nodes,
/// starting with `start`; stops early at the lattice ends or on a timeout.
pub fn lattice_walk(
    sys: &MapSystem,
    lattice: &WalkLattice,
    start: usize,
    moves: usize,
    max_steps: usize,
    stream: &mut SymbolStream,
) -> Result<Vec<usize>> {
    let mut j = start;
    let mut theta = stream.next_unit();
    let mut visits = alloc::vec![j];
    for _ in 0..moves {
        if !lattice.is_interior(j) {
            break;
        }
        let (t, end) = node_transition(sys, lattice, j, theta, max_steps, stream)?;
        match t.up {
            Some(true) => j += 1,
            Some(false) => j -= 1,
            None => break,
        }
        theta = end.theta;
        visits.push(j);
    }
    Ok(visits)
}

/// Visits to a marked set of nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VisitCensus {
    pub marked: usize,
    pub unmarked: usize,
    pub fraction: f64,
    /// Share of marked nodes (or of measure) the visits are compared with.
    pub reference: f64,
    /// `reference * eps^{-delta}`.
    pub bound: f64,
}

impl VisitCensus {
    pub fn within_bound(&self) -> bool {
        self.fraction <= self.bound
    }
}

pub fn visit_census<F: Fn(usize) -> bool>(visits: &[usize], marked: F, reference: f64, eps: f64, delta: f64) -> VisitCensus {
    let m = visits.iter().filter(|j| marked(**j)).count();
    let total = visits.len();
    VisitCensus {
        marked: m,
        unmarked: total - m,
        fraction: if total == 0 { 0.0 } else { m as f64 / total as f64 },
        reference,
        bound: reference * math::powf(eps, -delta),
    }
}

/// Test functions for the martingale probe.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TestFunction {
    Constant(f64),
    Linear,
    Quadratic,
    Cubic,
    /// `exp(1 - 1/(1 - y^2))` for `|y| < 1`, `y = (r - center)/width`.
    Bump { center: f64, width: f64 },
}

impl TestFunction {
    /// The fixed family used in reports.
    pub fn family() -> [TestFunction; 5] {
        [Self::Constant(1.0), Self::Linear, Self::Quadratic, Self::Cubic, Self::Bump { center: 0.25, width: 0.1 }]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant(_) => "const",
            Self::Linear => "r",
            Self::Quadratic => "r^2",
            Self::Cubic => "r^3",
            Self::Bump { .. } => "bump",
        }
    }

    /// `f`, `f'`, `f''` at `r`.
    pub fn jet(&self, r: f64) -> [f64; 3] {
        match *self {
            Self::Constant(c) => [c, 0.0, 0.0],
            Self::Linear => [r, 1.0, 0.0],
            Self::Quadratic => [r * r, 2.0 * r, 2.0],
            Self::Cubic => [r * r * r, 3.0 * r * r, 6.0 * r],
            Self::Bump { center, width } => {
                let y = (r - center) / width;
                if y.abs() >= 1.0 {
                    return [0.0; 3];
                }
                let u = 1.0 - y * y;
                let f = math::exp(1.0 - 1.0 / u);
                let g1 = -2.0 * y / (u * u);
                let g2 = -2.0 / (u * u) - 8.0 * y * y / (u * u * u);
                [f, f * g1 / width, f * (g1 * g1 + g2) / (width * width)]
            }
        }
    }
}

/// `eta = f(r_n) - eps^2 sum_{k<n} (b f' + sigma^2 f''/2)(r_k) - f(r_0)` for
/// trajectory `index`.
pub fn martingale_sample<C: DiffusionCoeffs + ?Sized>(
    sys: &MapSystem,
    spec: &EnsembleSpec,
    f: TestFunction,
    coeffs: &C,
    index: u64,
) -> Result<f64> {
    let n = spec.steps(sys.epsilon())?;
    let eps2 = sys.epsilon() * sys.epsilon();
    let mut stream = SymbolStream::new(spec.seed, index);
    let start = spec.initial.draw(&mut stream);
    let mut gen = 0.0;
    let (end, _) = drive(sys, start, n, &mut stream, |k, st| {
        if k < n {
            let [_, d1, d2] = f.jet(st.r);
            if d1 != 0.0 || d2 != 0.0 {
                gen += coeffs.drift(st.r) * d1 + 0.5 * coeffs.variance(st.r) * d2;
            }
        }
        false
    })
    .map_err(tag(index))?;
    Ok(f.jet(end.r)[0] - eps2 * gen - f.jet(start.r)[0])
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
    pub m: usize,
}

pub fn estimate(samples: &[f64]) -> Result<Estimate> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { got: samples.len(), need: 2 });
    }
    let mom = moments(samples);
    Ok(Estimate { estimate: mom.mean, se: mom.standard_error(), m: samples.len() })
}

/// Sequential martingale estimate over the whole ensemble.
pub fn martingale_residual<C: DiffusionCoeffs + ?Sized>(
    sys: &MapSystem,
    spec: &EnsembleSpec,
    f: TestFunction,
    coeffs: &C,
) -> Result<Estimate> {
    let xs = (0..spec.samples as u64)
        .map(|i| martingale_sample(sys, spec, f, coeffs, i))
        .collect::<Result<Vec<_>>>()?;
    estimate(&xs)
}

/// Whether `|estimate|` does not grow along a ladder of decreasing `eps`,
/// allowing two standard errors of noise between neighbouring rungs.
pub fn non_increasing_within_noise(ladder: &[Estimate]) -> bool {
    ladder.windows(2).all(|w| {
        let noise = 2.0 * math::sqrt(w[0].se * w[0].se + w[1].se * w[1].se);
        w[1].estimate.abs() <= w[0].estimate.abs() + noise
    })
}
