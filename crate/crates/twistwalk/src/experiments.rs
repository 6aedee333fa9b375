//! The experiments behind the subcommands, as plain functions returning
//! serializable outcomes. Nothing here touches the file system.

use serde::Serialize;
use twistwalk_core::arithmetic::{
    birkhoff_deviation, classify, ergodization_time, ir_measure, scan, IrMeasureOptions, StripClass, StripKind,
    StripParams,
};
use twistwalk_core::dynamics::MapSystem;
use twistwalk_core::hypotheses::{check_hypotheses, HypothesisReport};
use twistwalk_core::mc::{
    self, calibrate_lattice, exit_report, exit_window, hitting_probability, lattice_walk, node_transition_sample,
    run_trajectory, visit_census, EnsembleResult, EnsembleSpec, Estimate, ExitExperiment, ExitRecord, ExitReport,
    Initial, TestFunction, VisitCensus, WalkLattice,
};
use twistwalk_core::normal_form::{NormalForm, NormalFormParams};
use twistwalk_core::potentials::{SystemPotentials, TrigPotential};
use twistwalk_core::rng::SymbolStream;
use twistwalk_core::stats::{
    clt_test, histogram, ks_critical_5pct, moments, weighted_bernoulli_report, weighted_bernoulli_sample, Bin,
    CltReport, CltThresholds, FnCoeffs, TestReport, WeightedBernoulliReport,
};
use twistwalk_core::{Error, Result};

use crate::ensemble::Runner;

pub fn normal_form(potentials: &SystemPotentials, beta: f64) -> Result<NormalForm> {
    NormalForm::new(potentials, NormalFormParams::new(beta))
}

/// Displacements of the whole ensemble, in trajectory order.
pub fn simulate(runner: &Runner, sys: &MapSystem, spec: &EnsembleSpec) -> Result<EnsembleResult> {
    let steps = spec.steps(sys.epsilon())?;
    let d = runner.map(spec.samples as u64, |i| run_trajectory(sys, spec, i).map(|e| e.displacement()))?;
    Ok(mc::assemble(sys, spec, steps, d))
}

#[derive(Clone, Debug, Serialize)]
pub struct CltOutcome {
    pub r0: f64,
    pub drift: f64,
    pub sigma2: f64,
    pub s: f64,
    pub report: CltReport,
    pub histogram: Vec<Bin>,
    /// Histogram density in the bin containing the reference mean over the
    /// reference peak `1/sqrt(2 pi s sigma^2)`.
    pub peak_ratio: f64,
}

impl CltOutcome {
    pub fn tests(&self, seed: u64) -> Vec<TestReport> {
        let m = self.report.moments.n;
        let th = &self.report.thresholds;
        let rv = self.report.reference_variance;
        vec![
            TestReport::at_most("variance_rel_error", (self.report.moments.variance - rv).abs() / rv, th.variance_rel, m, seed),
            TestReport::at_most("mean_abs_error", (self.report.moments.mean - self.report.reference_mean).abs(), th.mean_abs, m, seed),
            TestReport::at_most("ks", self.report.ks, th.ks, m, seed),
        ]
    }
}

/// Tests the displacements against `N(s b(r0), s sigma^2(r0))`.
pub fn clt(
    result: &EnsembleResult,
    potentials: &SystemPotentials,
    beta: f64,
    r0: f64,
    th: CltThresholds,
    bins: usize,
) -> Result<CltOutcome> {
    let nf = normal_form(potentials, beta)?;
    let drift = nf.drift(r0)?;
    let sigma2 = nf.sigma_squared(r0);
    let report = clt_test(&result.displacements, result.s, drift, sigma2, th)?;
    let (mean, sd) = (report.reference_mean, report.reference_variance.sqrt());
    let histogram = histogram(&result.displacements, mean - 5.0 * sd, mean + 5.0 * sd, bins)?;
    let peak = 1.0 / (std::f64::consts::TAU * report.reference_variance).sqrt();
    let centre = histogram.iter().find(|b| b.left <= mean && mean < b.right).map_or(f64::NAN, |b| b.density);
    Ok(CltOutcome { r0, drift, sigma2, s: result.s, report, histogram, peak_ratio: centre / peak })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftRow {
    pub r: f64,
    /// Empty inside a resonant zone.
    pub b: Option<f64>,
    pub sigma2: f64,
    pub resonance: String,
}

pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        n => (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect(),
    }
}

pub fn drift_table(nf: &NormalForm, rs: &[f64]) -> Vec<DriftRow> {
    rs.iter()
        .map(|&r| {
            let res = nf.nearby_resonance(r);
            DriftRow {
                r,
                b: if res.is_none() { Some(nf.drift_unchecked(r)) } else { None },
                sigma2: nf.sigma_squared(r),
                resonance: res.map(|(p, q)| format!("{p}/{q}")).unwrap_or_default(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StripRow {
    pub r_lo: f64,
    pub r_hi: f64,
    pub class: &'static str,
    pub p: Option<i64>,
    pub q: Option<i64>,
}

impl From<&StripClass> for StripRow {
    fn from(c: &StripClass) -> Self {
        let w = c.kind.witness();
        Self { r_lo: c.r_lo, r_hi: c.r_hi, class: c.kind.label(), p: w.map(|w| w.p), q: w.map(|w| w.q) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifySummary {
    pub strips: usize,
    pub ti: usize,
    pub ir: usize,
    pub resonant: usize,
    pub ir_strip_length: f64,
    /// Union of `eps^nu`-neighbourhoods of the imaginary-rational
    /// denominators: the set of points a zero-width strip would call IR.
    pub ir_point_measure: f64,
    /// Union of `2 eps^nu`-neighbourhoods of every rational with `q <= eps^{-b}`.
    pub rational_measure: f64,
    pub rho_bound: f64,
}

pub fn classify_range(params: &StripParams, eps: f64, lo: f64, hi: f64) -> Result<(Vec<StripRow>, ClassifySummary)> {
    let strips = scan(lo, hi, params, eps)?;
    let count = |label: &str| strips.iter().filter(|s| s.kind.label() == label).count();
    let ir_len = strips.iter().filter(|s| s.kind.label() == "IR").map(|s| s.r_hi - s.r_lo).sum();
    let point = ir_measure(params, eps, lo, hi, IrMeasureOptions { half_width_factor: 1.0, ..IrMeasureOptions::imaginary_rational(params.d) });
    let all = ir_measure(params, eps, lo, hi, IrMeasureOptions::all_rationals());
    let summary = ClassifySummary {
        strips: strips.len(),
        ti: count("TI"),
        ir: count("IR"),
        resonant: count("RES"),
        ir_strip_length: ir_len,
        ir_point_measure: point.measure,
        rational_measure: all.measure,
        rho_bound: all.rho_bound,
    };
    Ok((strips.iter().map(StripRow::from).collect(), summary))
}

/// Exit times from a pair of adjacent strips.
#[derive(Clone, Debug, Serialize)]
pub struct ExitCase {
    pub kind: &'static str,
    pub boundary: f64,
    pub lo: f64,
    pub hi: f64,
    pub report: ExitReport,
    #[serde(skip)]
    pub records: Vec<ExitRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExitsOutcome {
    pub window: (f64, f64),
    pub width: f64,
    pub cases: Vec<ExitCase>,
    /// Strip kinds that were asked for but do not occur in the range.
    pub missing: Vec<&'static str>,
    pub threshold: f64,
}

impl ExitsOutcome {
    pub fn tests(&self, m: usize, seed: u64) -> Vec<TestReport> {
        let mut out: Vec<TestReport> = self
            .cases
            .iter()
            .map(|c| TestReport::at_most(&format!("outside_fraction_{}", c.kind), c.report.outside_fraction, self.threshold, m, seed))
            .collect();
        for k in &self.missing {
            out.push(TestReport { pass: false, ..TestReport::at_most(&format!("outside_fraction_{k}"), f64::NAN, self.threshold, 0, seed) });
        }
        out
    }
}

/// Finds the first boundary between two TI strips and the first boundary
/// touching an IR strip (with no resonant neighbour), and starts every
/// trajectory on that boundary. A trajectory exits when it comes within
/// `eps` of the far side of either strip.
pub fn exits(
    runner: &Runner,
    sys: &MapSystem,
    params: &StripParams,
    range: (f64, f64),
    samples: usize,
    max_steps: usize,
    seed: u64,
) -> Result<ExitsOutcome> {
    let eps = sys.epsilon();
    let strips = scan(range.0, range.1, params, eps)?;
    let w = params.strip_width(eps);
    let pairs = || strips.windows(2).filter(|p| (p[0].r_hi - p[0].r_lo - w).abs() < 1e-12 && (p[1].r_hi - p[1].r_lo - w).abs() < 1e-12);
    let ti = pairs().find(|p| p.iter().all(|s| s.kind == StripKind::TotallyIrrational)).map(|p| p[0].r_hi);
    let ir = pairs()
        .find(|p| {
            p.iter().any(|s| matches!(s.kind, StripKind::ImaginaryRational(_)))
                && p.iter().all(|s| !matches!(s.kind, StripKind::Resonant(_)))
        })
        .map(|p| p[0].r_hi);
    let window = exit_window(eps, params.gamma, params.delta);
    let mut cases = Vec::new();
    let mut missing = Vec::new();
    for (case, (kind, boundary)) in [("TI", ti), ("IR", ir)].into_iter().enumerate() {
        let Some(c) = boundary else {
            missing.push(kind);
            continue;
        };
        let exp = ExitExperiment { lo: c - w, hi: c + w, r0: c, max_steps, samples, seed };
        let offset = (case * samples) as u64;
        let records = runner.map(samples as u64, |i| exp.run_one(sys, offset + i))?;
        cases.push(ExitCase { kind, boundary: c, lo: c - w, hi: c + w, report: exit_report(&records, window), records });
    }
    Ok(ExitsOutcome { window, width: w, cases, missing, threshold: 0.05 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeRow {
    pub node: usize,
    pub r: f64,
    pub visits: usize,
    pub up: usize,
    pub timeouts: usize,
    pub p_up: f64,
    /// `1 - f(r_j)`, `f` the left-hitting probability of the diffusion.
    pub p_up_diffusion: f64,
    pub three_se: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkOutcome {
    pub lattice: WalkLattice,
    pub nodes: Vec<NodeRow>,
    pub census: Option<VisitCensus>,
    pub band: (f64, f64),
}

impl WalkOutcome {
    pub fn tests(&self, seed: u64) -> Vec<TestReport> {
        let mut out = Vec::new();
        for n in &self.nodes {
            let dev = (n.p_up - 0.5).abs();
            out.push(TestReport {
                pass: n.p_up >= self.band.0 && n.p_up <= self.band.1 && n.timeouts == 0,
                ..TestReport::at_most(&format!("p_up_node_{}", n.node), dev, self.band.1 - 0.5, n.visits, seed)
            });
        }
        if let Some(c) = &self.census {
            out.push(TestReport::at_most("marked_visit_fraction", c.fraction, c.bound, c.marked + c.unmarked, seed));
        }
        out
    }
}

pub struct WalkParams {
    pub origin: f64,
    pub range: (f64, f64),
    pub step: f64,
    pub scale: f64,
    pub nodes: usize,
    pub visits: usize,
    pub max_steps: usize,
    pub walks: usize,
    pub moves: usize,
    pub seed: u64,
}

/// Calibrates the lattice with the normal-form coefficients, samples
/// transitions from the central interior nodes and optionally runs the
/// embedded walk for a census of visits to imaginary-rational nodes.
pub fn walk(runner: &Runner, sys: &MapSystem, nf: &NormalForm, strip: &StripParams, wp: &WalkParams) -> Result<WalkOutcome> {
    for r in grid(wp.range.0, wp.range.1, 401) {
        if let Some((p, q)) = nf.nearby_resonance(r) {
            return Err(Error::ResonantInput { r, p, q });
        }
    }
    let b = |r: f64| nf.drift_unchecked(r);
    let s2 = |r: f64| nf.sigma_squared(r);
    let lattice = calibrate_lattice(b, s2, wp.step, wp.origin, wp.scale, wp.range.0, wp.range.1)?;
    let o = lattice.origin_index;
    let first = o.saturating_sub(wp.nodes / 2).max(1);
    let last = (first + wp.nodes).min(lattice.nodes.len() - 1);
    let mut rows = Vec::new();
    for (slot, j) in (first..last).enumerate() {
        let offset = (slot * wp.visits) as u64;
        let ts = runner.map(wp.visits as u64, |i| node_transition_sample(sys, &lattice, j, wp.max_steps, wp.seed, offset + i))?;
        let up = ts.iter().filter(|t| t.up == Some(true)).count();
        let timeouts = ts.iter().filter(|t| t.up.is_none()).count();
        let done = wp.visits - timeouts;
        let f = hitting_probability(lattice.nodes[j], lattice.nodes[j - 1], lattice.nodes[j + 1], b, s2)?;
        rows.push(NodeRow {
            node: j,
            r: lattice.nodes[j],
            visits: done,
            up,
            timeouts,
            p_up: up as f64 / done.max(1) as f64,
            p_up_diffusion: 1.0 - f,
            three_se: 3.0 * (0.25 / done.max(1) as f64).sqrt(),
        });
    }
    let census = if wp.walks > 0 && wp.moves > 0 {
        let eps = sys.epsilon();
        let w = strip.strip_width(eps);
        let marked: Vec<bool> = lattice
            .nodes
            .iter()
            .map(|&r| classify(r - w / 2.0, r + w / 2.0, strip, eps).map(|c| matches!(c.kind, StripKind::ImaginaryRational(_))))
            .collect::<Result<_>>()?;
        let offset = (wp.nodes * wp.visits) as u64;
        let walks = runner.map(wp.walks as u64, |i| {
            let mut st = SymbolStream::new(wp.seed, offset + i);
            lattice_walk(sys, &lattice, o, wp.moves, wp.max_steps, &mut st)
        })?;
        let visits: Vec<usize> = walks.into_iter().flatten().collect();
        let (lo, hi) = (lattice.nodes[0], *lattice.nodes.last().unwrap());
        let opts = IrMeasureOptions { half_width_factor: 1.0, ..IrMeasureOptions::imaginary_rational(strip.d) };
        let reference = ir_measure(strip, eps, lo, hi, opts).measure / (hi - lo);
        Some(visit_census(&visits, |j| marked[j], reference, eps, strip.delta))
    } else {
        None
    };
    Ok(WalkOutcome { lattice, nodes: rows, census, band: (0.46, 0.54) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodizeRow {
    pub epsilon: f64,
    pub n: u64,
    pub n_bound: f64,
    pub deviation: f64,
    /// `deviation / eps^tau`.
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodizeOutcome {
    pub rows: Vec<ErgodizeRow>,
    /// Constant fitted on the first rung.
    pub k: f64,
    pub max_ratio: f64,
}

impl ErgodizeOutcome {
    pub fn tests(&self, seed: u64) -> Vec<TestReport> {
        vec![TestReport::at_most("max_k_ratio", self.max_ratio, 1.5, self.rows.len(), seed)]
    }
}

/// `K` is fitted on the first `eps` of the ladder; later rungs must stay
/// below `1.5 K eps^tau`.
pub fn ergodize(params: &StripParams, g: &TrigPotential, r_star: f64, theta_star: f64, epsilons: &[f64]) -> Result<ErgodizeOutcome> {
    let mut rows = Vec::new();
    for &eps in epsilons {
        let n = ergodization_time(r_star, params, eps)?;
        let deviation = birkhoff_deviation(g, theta_star, r_star, n);
        rows.push(ErgodizeRow { epsilon: eps, n, n_bound: params.ergodization_bound(eps), deviation, k: deviation / eps.powf(params.tau) });
    }
    let k = rows.first().map_or(f64::NAN, |r| r.k);
    let max_ratio = rows.iter().skip(1).map(|r| r.k / k).fold(0.0, f64::max);
    Ok(ErgodizeOutcome { rows, k, max_ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleRow {
    pub function: &'static str,
    pub epsilon: f64,
    pub steps: usize,
    pub estimate: f64,
    pub se: f64,
    pub samples: usize,
}

impl MartingaleRow {
    pub fn within_3se(&self) -> bool {
        self.estimate.abs() <= 3.0 * self.se
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleOutcome {
    pub rows: Vec<MartingaleRow>,
    /// Per function: `|estimate|` non-increasing along the ladder within noise.
    pub monotone: Vec<(&'static str, bool)>,
}

impl MartingaleOutcome {
    pub fn tests(&self, seed: u64) -> Vec<TestReport> {
        let mut out: Vec<TestReport> = self
            .rows
            .iter()
            .map(|r| TestReport::at_most(&format!("abs_over_se_{}_eps{}", r.function, r.epsilon), r.estimate.abs() / r.se, 3.0, r.samples, seed))
            .collect();
        for (f, ok) in &self.monotone {
            out.push(TestReport { pass: *ok, ..TestReport::at_most(&format!("monotone_{f}"), if *ok { 0.0 } else { 1.0 }, 0.0, 0, seed) });
        }
        out
    }
}

pub fn test_function(name: &str) -> Option<TestFunction> {
    TestFunction::family().into_iter().find(|f| f.name() == name)
}

pub struct LadderParams<'a> {
    pub epsilons: &'a [f64],
    pub s: f64,
    pub a: f64,
    pub smoothness: u32,
    pub initial: Initial,
    pub samples: usize,
    pub seed: u64,
}

/// Martingale residual of each test function along an `eps` ladder, with
/// the normal-form drift and variance as generator coefficients.
pub fn martingale(
    runner: &Runner,
    potentials: &SystemPotentials,
    nf: &NormalForm,
    functions: &[TestFunction],
    lp: &LadderParams<'_>,
) -> Result<MartingaleOutcome> {
    let coeffs = FnCoeffs { b: |r: f64| nf.drift_unchecked(r), sigma2: |r: f64| nf.sigma_squared(r) };
    if let Some((p, q)) = nf.nearby_resonance(lp.initial.r()) {
        return Err(Error::ResonantInput { r: lp.initial.r(), p, q });
    }
    let mut rows = Vec::new();
    let mut monotone = Vec::new();
    for f in functions {
        let mut ladder = Vec::new();
        for &eps in lp.epsilons {
            let sys = MapSystem::new(potentials.clone(), eps, lp.a, lp.smoothness)?;
            let spec = EnsembleSpec::new(lp.initial, lp.s, lp.samples, lp.seed);
            let steps = spec.steps(eps)?;
            let xs = runner.map(lp.samples as u64, |i| mc::martingale_sample(&sys, &spec, *f, &coeffs, i))?;
            let est: Estimate = mc::estimate(&xs)?;
            rows.push(MartingaleRow { function: f.name(), epsilon: eps, steps, estimate: est.estimate, se: est.se, samples: est.m });
            ladder.push(est);
        }
        monotone.push((f.name(), mc::non_increasing_within_noise(&ladder)));
    }
    Ok(MartingaleOutcome { rows, monotone })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BernoulliOutcome {
    pub report: WeightedBernoulliReport,
    pub variance_band: (f64, f64),
    pub ks_threshold: f64,
    pub ks_critical_5pct: f64,
}

impl BernoulliOutcome {
    pub fn tests(&self, seed: u64) -> Vec<TestReport> {
        let m = self.report.m;
        let v = self.report.moments.variance;
        let s2 = self.report.sigma2;
        vec![
            TestReport {
                pass: v >= self.variance_band.0 && v <= self.variance_band.1,
                ..TestReport::at_most("variance_rel_error", (v - s2).abs() / s2, 0.05, m, seed)
            },
            TestReport::at_most("ks", self.report.ks, self.ks_threshold, m, seed),
        ]
    }
}

/// `S_n/sqrt(n)` for `v_k = g(theta + k alpha)` against `N(0, mean of g^2)`.
pub fn bernoulli(runner: &Runner, g: &TrigPotential, theta: f64, alpha: f64, n: usize, samples: usize, seed: u64) -> BernoulliOutcome {
    let v: Vec<f64> = (0..n).map(|k| g.eval(theta + k as f64 * alpha, 0.0)).collect();
    let sigma2 = g.mul(g).mean_at(0.0);
    let xs = runner.map_ok(samples as u64, |i| weighted_bernoulli_sample(&v, seed, i));
    let report = weighted_bernoulli_report(&v, sigma2, &xs);
    BernoulliOutcome {
        variance_band: (0.95 * sigma2, 1.05 * sigma2),
        ks_threshold: 0.03,
        ks_critical_5pct: ks_critical_5pct(samples),
        report,
    }
}

pub fn check(potentials: &SystemPotentials, r_lo: f64, r_hi: f64) -> HypothesisReport {
    check_hypotheses(potentials, r_lo, r_hi)
}

/// Mean and standard error of a sample, for summaries.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = moments(xs);
    (m.mean, m.standard_error())
}
