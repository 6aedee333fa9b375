//! Argument parsing and the subcommands. Each subcommand writes fixed file
//! names under `--out` and prints one summary line.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use twistwalk_core::mc::{ExitRecord, ExitSide, TestFunction};
use twistwalk_core::potentials::TrigPotential;
use twistwalk_core::stats::{CltThresholds, TestReport};

use crate::config::{load_settings, Overrides, Settings};
use crate::ensemble::Runner;
use crate::experiments::{self as ex, LadderParams, WalkParams};
use crate::io::{write_csv, write_json};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "twistwalk", version, about = "Random compositions of near-integrable twist maps: ensembles, normal forms and diffusion checks")]
pub struct Cli {
    /// TOML run configuration; defaults to the cos/sin system.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Perturbation size, in (0, 0.2].
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Diffusion time; trajectories run round(s / epsilon^2) steps.
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Monte Carlo sample count M (trajectories, or visits per node for `walk`).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Mollifier width of the normal form.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 picks one per core. Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check hypotheses H0 to H5 (check.json); exit 1 if a required one fails.
    Check,
    /// Run an ensemble (simulate.json, displacements.csv).
    Simulate,
    /// Ensemble plus CLT test (clt.json, displacements.csv, histogram.csv, histogram.json).
    Clt,
    /// Drift and variance over a grid (drift.csv, drift.json).
    #[command(alias = "nf")]
    Drift,
    /// Strip classification (strips.csv, classify.json).
    Classify,
    /// Exit times from a TI and an IR strip (exits.csv, exits.json).
    Exits,
    /// Symmetric-walk calibration (lattice.csv, transitions.csv, walk.json).
    Walk,
    /// Ergodization times along an epsilon ladder (ergodize.csv, ergodize.json).
    Ergodize,
    /// Martingale residuals along an epsilon ladder (martingale.csv, martingale.json).
    Martingale,
    /// Weighted Bernoulli sums (bernoulli.json).
    Bernoulli,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Check => "check",
            Self::Simulate => "simulate",
            Self::Clt => "clt",
            Self::Drift => "drift",
            Self::Classify => "classify",
            Self::Exits => "exits",
            Self::Walk => "walk",
            Self::Ergodize => "ergodize",
            Self::Martingale => "martingale",
            Self::Bernoulli => "bernoulli",
        }
    }
}

/// What a subcommand did.
#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            epsilon: self.epsilon,
            s: self.s,
            samples: self.samples,
            seed: self.seed,
            beta: self.beta,
            out: self.out.clone(),
            threads: self.threads,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let st = load_settings(cli.config.as_deref(), &cli.overrides())?;
    let runner = Runner::new(st.threads)?;
    match cli.command {
        Command::Check => cmd_check(&st),
        Command::Simulate => cmd_simulate(&st, &runner),
        Command::Clt => cmd_clt(&st, &runner),
        Command::Drift => cmd_drift(&st),
        Command::Classify => cmd_classify(&st),
        Command::Exits => cmd_exits(&st, &runner),
        Command::Walk => cmd_walk(&st, &runner),
        Command::Ergodize => cmd_ergodize(&st),
        Command::Martingale => cmd_martingale(&st, &runner),
        Command::Bernoulli => cmd_bernoulli(&st, &runner),
    }
}

fn report(dir: &Path, name: &str, st: &Settings, tests: &[TestReport], details: impl Serialize) -> Result<PathBuf, CliError> {
    write_json(dir, name, &json!({ "params": st.params(), "tests": tests, "details": details }))
}

fn all_pass(tests: &[TestReport]) -> bool {
    tests.iter().all(|t| t.pass)
}

fn failed(tests: &[TestReport]) -> String {
    let names: Vec<&str> = tests.iter().filter(|t| !t.pass).map(|t| t.test.as_str()).collect();
    if names.is_empty() {
        "pass".into()
    } else {
        format!("FAIL [{}]", names.join(", "))
    }
}

pub fn cmd_check(st: &Settings) -> Result<Outcome, CliError> {
    let r = &st.file.check;
    let rep = ex::check(&st.potentials, r.r_lo, r.r_hi);
    let path = write_json(&st.out, "check.json", &rep)?;
    let failed: Vec<&str> = rep.failed_required().iter().map(|h| h.name()).collect();
    let summary = if failed.is_empty() {
        format!("check: required hypotheses hold on [{}, {}]", r.r_lo, r.r_hi)
    } else {
        format!("check: failed {}", failed.join(", "))
    };
    Ok(Outcome { pass: failed.is_empty(), summary, files: vec![path] })
}

#[derive(Serialize)]
struct DisplacementRow {
    trajectory: usize,
    displacement: f64,
}

fn displacements_csv(dir: &Path, d: &[f64]) -> Result<PathBuf, CliError> {
    let rows: Vec<DisplacementRow> = d.iter().enumerate().map(|(trajectory, &displacement)| DisplacementRow { trajectory, displacement }).collect();
    write_csv(dir, "displacements.csv", &rows)
}

pub fn cmd_simulate(st: &Settings, runner: &Runner) -> Result<Outcome, CliError> {
    let sys = st.system();
    let res = ex::simulate(runner, &sys, &st.ensemble()).map_err(CliError::core("simulate"))?;
    let m = twistwalk_core::stats::moments(&res.displacements);
    let details = json!({
        "steps": res.steps,
        "scheme": res.scheme,
        "initial": st.file.initial,
        "moments": m,
    });
    let files = vec![
        report(&st.out, "simulate.json", st, &[], details)?,
        displacements_csv(&st.out, &res.displacements)?,
    ];
    let summary = format!("simulate: M={} n={} mean={:.6} var={:.6}", res.displacements.len(), res.steps, m.mean, m.variance);
    Ok(Outcome { pass: true, summary, files })
}

pub fn cmd_clt(st: &Settings, runner: &Runner) -> Result<Outcome, CliError> {
    let sys = st.system();
    let res = ex::simulate(runner, &sys, &st.ensemble()).map_err(CliError::core("clt"))?;
    let c = &st.file.clt;
    let th = CltThresholds { variance_rel: c.variance_rel, mean_abs: c.mean_abs, ks: c.ks, min_samples: c.min_samples };
    let out = ex::clt(&res, &st.potentials, st.beta, st.file.initial.r, th, c.bins).map_err(CliError::core("clt"))?;
    let tests = out.tests(st.seed);
    let files = vec![
        report(&st.out, "clt.json", st, &tests, &out)?,
        displacements_csv(&st.out, &res.displacements)?,
        write_csv(&st.out, "histogram.csv", &out.histogram)?,
        write_json(&st.out, "histogram.json", &json!({
            "reference_mean": out.report.reference_mean,
            "reference_variance": out.report.reference_variance,
            "bins": out.histogram.len(),
        }))?,
    ];
    let m = &out.report.moments;
    let summary = format!("clt: var={:.5} (ref {:.5}) mean={:.5} ks={:.4}: {}", m.variance, out.report.reference_variance, m.mean, out.report.ks, failed(&tests));
    Ok(Outcome { pass: all_pass(&tests), summary, files })
}

pub fn cmd_drift(st: &Settings) -> Result<Outcome, CliError> {
    let nf = ex::normal_form(&st.potentials, st.beta).map_err(CliError::core("drift"))?;
    let d = &st.file.drift;
    let rows = ex::drift_table(&nf, &ex::grid(d.r_lo, d.r_hi, d.points));
    let max_b = rows.iter().filter_map(|r| r.b).map(f64::abs).fold(0.0, f64::max);
    let resonant = rows.iter().filter(|r| r.b.is_none()).count();
    let files = vec![
        write_csv(&st.out, "drift.csv", &rows)?,
        report(&st.out, "drift.json", st, &[], json!({ "points": rows.len(), "resonant_points": resonant, "max_abs_b": max_b }))?,
    ];
    let summary = format!("drift: {} points, {} resonant, max|b|={:.3e}", rows.len(), resonant, max_b);
    Ok(Outcome { pass: true, summary, files })
}

pub fn cmd_classify(st: &Settings) -> Result<Outcome, CliError> {
    let c = &st.file.classify;
    let (rows, summary) = ex::classify_range(&st.strip, st.epsilon, c.r_lo, c.r_hi).map_err(CliError::core("classify"))?;
    let files = vec![write_csv(&st.out, "strips.csv", &rows)?, report(&st.out, "classify.json", st, &[], &summary)?];
    let line = format!("classify: {} strips, TI={} IR={} RES={}", summary.strips, summary.ti, summary.ir, summary.resonant);
    Ok(Outcome { pass: true, summary: line, files })
}

#[derive(Serialize)]
struct ExitRow<'a> {
    case: &'a str,
    trajectory: u64,
    r_lo: f64,
    r_hi: f64,
    entry: usize,
    exit: usize,
    side: ExitSide,
    r_exit: f64,
}

impl<'a> ExitRow<'a> {
    fn new(case: &'a str, r: &ExitRecord) -> Self {
        Self { case, trajectory: r.trajectory, r_lo: r.r_lo, r_hi: r.r_hi, entry: r.entry, exit: r.exit, side: r.side, r_exit: r.r_exit }
    }
}

pub fn cmd_exits(st: &Settings, runner: &Runner) -> Result<Outcome, CliError> {
    let sys = st.system();
    let e = &st.file.exits;
    let out = ex::exits(runner, &sys, &st.strip, (e.r_lo, e.r_hi), st.samples, e.max_steps, st.seed).map_err(CliError::core("exits"))?;
    let rows: Vec<ExitRow<'_>> = out.cases.iter().flat_map(|c| c.records.iter().map(|r| ExitRow::new(c.kind, r))).collect();
    let tests = out.tests(st.samples, st.seed);
    let files = vec![write_csv(&st.out, "exits.csv", &rows)?, report(&st.out, "exits.json", st, &tests, &out)?];
    let fr: Vec<String> = out.cases.iter().map(|c| format!("{} {:.3}", c.kind, c.report.outside_fraction)).collect();
    let summary = format!("exits: outside-window fraction {}: {}", fr.join(", "), failed(&tests));
    Ok(Outcome { pass: all_pass(&tests), summary, files })
}

#[derive(Serialize)]
struct LatticeRow {
    node: usize,
    r: f64,
    a: f64,
}

pub fn cmd_walk(st: &Settings, runner: &Runner) -> Result<Outcome, CliError> {
    let sys = st.system();
    let nf = ex::normal_form(&st.potentials, st.beta).map_err(CliError::core("walk"))?;
    let w = &st.file.walk;
    let wp = WalkParams {
        origin: w.origin,
        range: (w.r_lo, w.r_hi),
        step: w.step,
        scale: w.scale.unwrap_or(st.epsilon),
        nodes: w.nodes,
        visits: st.samples,
        max_steps: w.max_steps,
        walks: w.walks,
        moves: w.moves,
        seed: st.seed,
    };
    let out = ex::walk(runner, &sys, &nf, &st.strip, &wp).map_err(CliError::core("walk"))?;
    let lattice: Vec<LatticeRow> =
        out.lattice.nodes.iter().zip(&out.lattice.a).enumerate().map(|(node, (&r, &a))| LatticeRow { node, r, a }).collect();
    let tests = out.tests(st.seed);
    let details = json!({ "nodes": out.nodes, "census": out.census, "band": out.band, "origin_index": out.lattice.origin_index, "lattice_nodes": lattice.len() });
    let files = vec![
        write_csv(&st.out, "lattice.csv", &lattice)?,
        write_csv(&st.out, "transitions.csv", &out.nodes)?,
        report(&st.out, "walk.json", st, &tests, details)?,
    ];
    let ps: Vec<String> = out.nodes.iter().map(|n| format!("{:.3}", n.p_up)).collect();
    let summary = format!("walk: {} nodes, p_up [{}]: {}", lattice.len(), ps.join(" "), failed(&tests));
    Ok(Outcome { pass: all_pass(&tests), summary, files })
}

pub fn cmd_ergodize(st: &Settings) -> Result<Outcome, CliError> {
    let e = &st.file.ergodize;
    let g = TrigPotential::cos(e.k, 1.0);
    let out = ex::ergodize(&st.strip, &g, e.r_star, e.theta_star, &e.epsilons).map_err(CliError::core("ergodize"))?;
    let tests = out.tests(st.seed);
    let files = vec![write_csv(&st.out, "ergodize.csv", &out.rows)?, report(&st.out, "ergodize.json", st, &tests, &out)?];
    let ns: Vec<String> = out.rows.iter().map(|r| r.n.to_string()).collect();
    let summary = format!("ergodize: N = [{}], K = {:.4}, max ratio {:.3}: {}", ns.join(", "), out.k, out.max_ratio, failed(&tests));
    Ok(Outcome { pass: all_pass(&tests), summary, files })
}

pub fn cmd_martingale(st: &Settings, runner: &Runner) -> Result<Outcome, CliError> {
    let m = &st.file.martingale;
    let functions: Vec<TestFunction> = m
        .functions
        .iter()
        .map(|n| ex::test_function(n).ok_or_else(|| CliError::Usage(format!("unknown test function `{n}` (const, r, r^2, r^3, bump)"))))
        .collect::<Result<_, _>>()?;
    for &eps in &m.epsilons {
        st.system_at(eps)?;
    }
    let nf = ex::normal_form(&st.potentials, st.beta).map_err(CliError::core("martingale"))?;
    let lp = LadderParams {
        epsilons: &m.epsilons,
        s: m.s,
        a: st.a,
        smoothness: st.smoothness,
        initial: st.file.initial.initial(),
        samples: st.samples,
        seed: st.seed,
    };
    let out = ex::martingale(runner, &st.potentials, &nf, &functions, &lp).map_err(CliError::core("martingale"))?;
    let tests = out.tests(st.seed);
    let files = vec![write_csv(&st.out, "martingale.csv", &out.rows)?, report(&st.out, "martingale.json", st, &tests, &out)?];
    let summary = format!("martingale: {} rungs: {}", out.rows.len(), failed(&tests));
    Ok(Outcome { pass: all_pass(&tests), summary, files })
}

pub fn cmd_bernoulli(st: &Settings, runner: &Runner) -> Result<Outcome, CliError> {
    let b = &st.file.bernoulli;
    let g = TrigPotential::cos(b.harmonic, 1.0);
    let out = ex::bernoulli(runner, &g, b.theta, b.alpha, b.n, st.samples, st.seed);
    let tests = out.tests(st.seed);
    let files = vec![report(&st.out, "bernoulli.json", st, &tests, &out)?];
    let summary = format!(
        "bernoulli: var={:.4} (ref {:.4}) ks={:.4}: {}",
        out.report.moments.variance,
        out.report.sigma2,
        out.report.ks,
        failed(&tests)
    );
    Ok(Outcome { pass: all_pass(&tests), summary, files })
}
