//! `roughctl` subcommands.
//!
//! Each run writes `manifest.txt` (tool version, subcommand, resolved config)
//! and its CSV tables into the output directory. Exit codes: 0 when every
//! check passes, 1 when a check fails or a computation errors, 2 on invalid
//! configuration or arguments.

pub mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::ExperimentConfig;

use crate::control::{dpp_check, penalty_admissible, value_function, write_value_csv, ControlProblem};
use crate::error::{Error, Result};
use crate::example::{mollify, ExampleConfig};
use crate::fixtures::{random_driver, random_history, random_problem, random_sine_field};
use crate::fraccalc::ACAlphaPath;
use crate::gridpath::{fmt_f64, p_variation, SampledPath, TimeGrid};
use crate::hjb::{hjb_residual, rough_viscosity_convergence, terminal_check, ControlHistory, Probe};
use crate::rde::{consistency, solve, RdeProblem, SolveOptions};
use crate::roughlift::{signature_lift, RoughPath};
use crate::suite::{self, degeneracy_problem};

#[derive(Debug, Parser)]
#[command(name = "roughctl", version, about = "Rough-path control experiments")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default `roughctl-out/<subcommand>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance of the subcommand's check.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Signature lift with Chen and shuffle report.
    Lift,
    /// p-variation of a path.
    Pvar,
    /// Fractional integral/derivative round trip.
    Frac,
    /// Rough integral refinement study.
    Integrate,
    /// Solve a random controlled RDE.
    SolveRde,
    /// Lattice value function.
    Value,
    /// Dynamic programming identity.
    DppCheck,
    /// HJB residual of the worked example's candidate.
    HjbResidual,
    /// Values along a mollification ladder.
    ViscosityLadder,
    /// The worked example end to end.
    Example,
    /// The full acceptance battery.
    Suite,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Lift => "lift",
            Cmd::Pvar => "pvar",
            Cmd::Frac => "frac",
            Cmd::Integrate => "integrate",
            Cmd::SolveRde => "solve-rde",
            Cmd::Value => "value",
            Cmd::DppCheck => "dpp-check",
            Cmd::HjbResidual => "hjb-residual",
            Cmd::ViscosityLadder => "viscosity-ladder",
            Cmd::Example => "example",
            Cmd::Suite => "suite",
        }
    }
}

/// A named invariant with its verdict.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Entry point; reads `ROUGHCTL_*` from the process environment.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::vars())
}

pub fn run_with_env<I, T>(args: I, env: impl IntoIterator<Item = (String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (cfg, out) = match resolve(&args, env) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("roughctl: {e}");
            return 2;
        }
    };
    match execute(args.cmd, &cfg, &out) {
        Ok(checks) => {
            let mut failed = false;
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", c.name, c.detail);
                failed |= !c.passed;
            }
            i32::from(failed)
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("roughctl: {e}");
            2
        }
        Err(e) => {
            eprintln!("roughctl: {} failed: {e}", args.cmd.name());
            1
        }
    }
}

fn resolve(args: &Args, env: impl IntoIterator<Item = (String, String)>) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config {
                line: 0,
                msg: format!("cannot read {}: {e}", path.display()),
            })?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.apply_env(env)?;
    if let Some(s) = args.seed {
        cfg.set("seed", s.to_string())?;
    }
    if let Some(t) = args.tol {
        cfg.set("tol", t.to_string())?;
    }
    if let Some(o) = &args.out {
        cfg.set("out", o.display().to_string())?;
    }
    let out = cfg
        .text("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new("roughctl-out").join(args.cmd.name()));
    Ok((cfg, out))
}

fn execute(cmd: Cmd, cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    fs::create_dir_all(out)?;
    let manifest = format!(
        "tool = roughctl {}\nsubcommand = {}\n{}",
        env!("CARGO_PKG_VERSION"),
        cmd.name(),
        cfg.echo()
    );
    fs::write(out.join("manifest.txt"), manifest)?;
    match cmd {
        Cmd::Lift => lift(cfg, out),
        Cmd::Pvar => pvar(cfg, out),
        Cmd::Frac => frac(cfg, out),
        Cmd::Integrate => integrate(cfg, out),
        Cmd::SolveRde => solve_rde(cfg, out),
        Cmd::Value => value(cfg, out),
        Cmd::DppCheck => dpp(cfg, out),
        Cmd::HjbResidual => hjb(cfg, out),
        Cmd::ViscosityLadder => ladder(cfg, out),
        Cmd::Example => example(cfg, out),
        Cmd::Suite => run_suite(cfg, out),
    }
}

fn csv_writer(out: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(out.join(name))?)))
}

fn input_path(cfg: &ExperimentConfig) -> Result<Option<SampledPath>> {
    match cfg.text("input") {
        Some(p) => Ok(Some(SampledPath::read_csv(File::open(p)?)?)),
        None => Ok(None),
    }
}

fn lift(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let path = match input_path(cfg)? {
        Some(p) => p,
        // two segments in the plane: right, then up
        None => SampledPath::new(TimeGrid::uniform(1.0, 2)?, 2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0])?,
    };
    let rp = signature_lift(&path, cfg.real("p", 2.5))?;
    let chen = rp.chen_check();
    let shuffle = rp.shuffle_check();
    let tol = cfg.real("tol", 1e-10);
    let mut w = csv_writer(out, "signature.csv")?;
    w.write_record(["word", "value"])?;
    let sig = rp.increment(0, path.len() - 1);
    let words = crate::roughlift::WordIndex::new(rp.dim(), rp.depth());
    for word in words.words() {
        let label = if word.is_empty() { "()".to_string() } else { word.to_string() };
        w.write_record([label, fmt_f64(sig.get(word))])?;
    }
    w.flush()?;
    let mut w = csv_writer(out, "checks.csv")?;
    w.write_record(["check", "max_violation", "checked"])?;
    w.write_record(["chen".to_string(), fmt_f64(chen.max_violation), chen.checked.to_string()])?;
    w.write_record(["shuffle".to_string(), fmt_f64(shuffle.max_violation), shuffle.checked.to_string()])?;
    w.flush()?;
    Ok(vec![
        check("chen identity", chen.max_violation <= tol, format!("max violation {:.3e}", chen.max_violation)),
        check(
            "shuffle identity",
            shuffle.max_violation <= tol,
            format!("max violation {:.3e}", shuffle.max_violation),
        ),
    ])
}

fn pvar(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let path = match input_path(cfg)? {
        Some(p) => p,
        None => {
            let n = cfg.int("n", 16);
            SampledPath::from_fn(TimeGrid::uniform(1.0, n)?, 1, |t| vec![t * t])?
        }
    };
    let p = cfg.real("p", 1.0);
    let n = path.len() - 1;
    let v = p_variation(&path, p, (0, n))?;
    let mut w = csv_writer(out, "pvar.csv")?;
    w.write_record(["p", "pvar"])?;
    w.write_record([fmt_f64(p), fmt_f64(v)])?;
    w.flush()?;
    let chord = path.increment_norm(0, n);
    let mut checks = vec![check(
        "dominates the chord",
        v + 1e-12 >= chord,
        format!("‖x‖_p = {v:.12e}, |x_T − x_0| = {chord:.12e}"),
    )];
    if n <= 12 {
        let brute = suite::pvar_brute_force(&path, p);
        checks.push(check(
            "matches exhaustive enumeration",
            brute == v,
            format!("enumeration {brute:.12e}"),
        ));
    }
    Ok(checks)
}

fn frac(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let alphas = cfg.reals("alphas", &[0.6, 0.75, 0.9]);
    let ns = cfg.ints("ns", &[64, 128, 256, 512]);
    let mut w = csv_writer(out, "frac.csv")?;
    w.write_record(["alpha", "n", "max_error", "ratio"])?;
    let mut ok = true;
    let mut spread = 0.0f64;
    for &a in &alphas {
        let errs = suite::round_trip_errors(a, &ns)?;
        for (i, e) in errs.iter().enumerate() {
            let ratio = if i == 0 { f64::NAN } else { errs[i - 1] / e };
            if i > 0 {
                ok &= (1.6..=2.4).contains(&ratio);
                spread = spread.max((ratio - 2.0).abs());
            }
            w.write_record([fmt_f64(a), ns[i].to_string(), fmt_f64(*e), fmt_f64(ratio)])?;
        }
    }
    w.flush()?;
    Ok(vec![check("error halves with h", ok, format!("largest |ratio − 2| = {spread:.3}"))])
}

fn integrate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let ns = cfg.ints("ns", &[32, 64, 128, 256]);
    let (oracle, rows) = suite::integral_refinement(&ns)?;
    let mut w = csv_writer(out, "integrate.csv")?;
    w.write_record(["n", "value", "error", "order"])?;
    let mut min_order = f64::INFINITY;
    for (i, (n, v, e)) in rows.iter().enumerate() {
        let order = if i == 0 { f64::NAN } else { (rows[i - 1].2 / e).log2() };
        if i > 0 {
            min_order = min_order.min(order);
        }
        w.write_record([n.to_string(), fmt_f64(*v), fmt_f64(*e), fmt_f64(order)])?;
    }
    w.flush()?;
    Ok(vec![check(
        "observed order at least one",
        min_order >= 1.0,
        format!("oracle {oracle:.12e}, minimum order {min_order:.3}"),
    )])
}

fn solve_rde(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed(1));
    let grid = TimeGrid::uniform(cfg.real("horizon", 1.0), cfg.int("n", 256))?;
    let (e, d) = (cfg.int("state_dim", 2), cfg.int("dim", 2));
    let driver = random_driver(grid, d, cfg.real("driver_scale", 0.7), cfg.real("p", 2.5), &mut rng)?;
    let control = random_history(grid, cfg.real("alpha", 0.8), 0.0, &mut rng)?.to_sampled();
    let x0 = cfg.reals("x", &vec![0.1; e]);
    let problem = RdeProblem::new(
        Arc::new(random_sine_field(e, 1, e, 0.5, &mut rng)?),
        Arc::new(random_sine_field(e, 1, e * d, 0.5, &mut rng)?),
        driver,
        control,
        x0,
    )?;
    let tol = cfg.real("tol", 1e-12);
    let sol = solve(&problem, &SolveOptions::with_tol(tol))?;
    sol.trace().write_csv(BufWriter::new(File::create(out.join("trace.csv"))?))?;
    sol.write_diagnostics_csv(BufWriter::new(File::create(out.join("diagnostics.csv"))?))?;
    let c = consistency(&problem, &sol);
    let worst = c.self_consistency.max(c.integral_equation);
    Ok(vec![check(
        "self-consistency",
        worst <= tol,
        format!(
            "components {:.3e}, integral equation {:.3e}, {} windows",
            c.self_consistency,
            c.integral_equation,
            sol.diagnostics.len()
        ),
    )])
}

/// Built-in problem with its default history and default start `(r, x)`.
fn registry(cfg: &ExperimentConfig) -> Result<(ControlProblem, ACAlphaPath, usize, Vec<f64>)> {
    let (problem, gamma, r) = match cfg.text("problem").unwrap_or("example") {
        "example" => {
            let ex = example_config(cfg);
            let problem = ex.problem(ex.driver()?, ex.lattice_points, ex.steps)?;
            let r = ex.probes.first().map_or(0, |p| p.0);
            let x = ex.probes.first().map_or(0.0, |p| p.1);
            return Ok((problem, ex.default_history()?, r, vec![x]));
        }
        "degeneracy" => {
            let (p, g) = degeneracy_problem()?;
            (p, g, 0)
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed(1));
            let grid = TimeGrid::uniform(cfg.real("horizon", 1.0), cfg.int("n", 24))?;
            let mut problem = random_problem(cfg.int("state_dim", 1), cfg.int("dim", 1), grid, cfg.int("steps", 3), &mut rng)?;
            problem.alpha = cfg.real("alpha", problem.alpha);
            let gamma = random_history(grid, problem.alpha, 0.1, &mut rng)?;
            (problem, gamma, 0)
        }
        other => {
            return Err(Error::Config {
                line: 0,
                msg: format!("unknown problem `{other}` (example | degeneracy | random)"),
            })
        }
    };
    let mut problem = problem;
    problem.penalty_weight = cfg.real("f0", problem.penalty_weight);
    problem.penalty_exponent = cfg.real("penalty_exponent", problem.penalty_exponent);
    let x = vec![0.0; problem.drift.state_dim()];
    Ok((problem, gamma, r, x))
}

fn example_config(cfg: &ExperimentConfig) -> ExampleConfig {
    let d = ExampleConfig::default();
    let rs = cfg.ints("probe_r", &d.probes.iter().map(|p| p.0).collect::<Vec<_>>());
    let xs = cfg.reals("probe_x", &d.probes.iter().map(|p| p.1).collect::<Vec<_>>());
    ExampleConfig {
        alpha: cfg.real("alpha", d.alpha),
        q: cfg.real("q", d.q),
        p: cfg.real("p", d.p),
        lambda0: cfg.real("lambda0", d.lambda0),
        horizon: cfg.real("horizon", d.horizon),
        n: cfg.int("n", d.n),
        lattice_half_width: cfg.real("lattice_half_width", d.lattice_half_width),
        lattice_points: cfg.int("lattice_points", d.lattice_points),
        steps: cfg.int("steps", d.steps),
        refined_points: cfg.int("refined_points", d.refined_points),
        refined_steps: cfg.int("refined_steps", d.refined_steps),
        seed: cfg.seed(d.seed),
        sigma: cfg.real("driver_scale", d.sigma),
        probes: rs.into_iter().zip(xs).collect(),
        ..d
    }
}

fn value(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let (problem, gamma, r0, x0) = registry(cfg)?;
    let (ok, thr) = penalty_admissible(problem.penalty_exponent, problem.alpha, problem.driver.p());
    if !ok && problem.penalty_weight > 0.0 {
        eprintln!(
            "warning: penalty exponent {} does not exceed the admissibility threshold {thr:.4}",
            problem.penalty_exponent
        );
    }
    let r = cfg.int("r", r0);
    let x = cfg.reals("x", &x0);
    let est = value_function(&problem, r, &x, &gamma)?;
    let t = problem.driver.grid().time(r);
    write_value_csv(BufWriter::new(File::create(out.join("value.csv"))?), &[(t, x.clone(), est.clone())])?;
    let b = est.breakdown;
    println!("{:<10} {:>24}", "part", "value");
    for (k, v) in [
        ("running", b.running),
        ("rough", b.rough),
        ("penalty", b.penalty),
        ("terminal", b.terminal),
        ("total", b.total),
    ] {
        println!("{k:<10} {v:>24.16e}");
    }
    let parts = b.running + b.rough + b.penalty + b.terminal;
    Ok(vec![check(
        "decomposition sums to total",
        (parts - b.total).abs() <= 1e-12 * (1.0 + b.total.abs()),
        format!("value {:.12e}, argmin {}, {} leaves", est.value, est.argmin_string(), est.leaves_evaluated),
    )])
}

fn dpp(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let (problem, gamma, r0, x0) = registry(cfg)?;
    let n = problem.driver.grid().n();
    let r = cfg.int("r", r0);
    let block = (n.saturating_sub(r)) / problem.steps.max(1);
    let t = cfg.int("t", r + block * (problem.steps / 2));
    let x = cfg.reals("x", &x0);
    let rep = dpp_check(&problem, r, &x, &gamma, t)?;
    let mut w = csv_writer(out, "dpp.csv")?;
    w.write_record(["r", "t", "direct", "recursive", "gap"])?;
    w.write_record([r.to_string(), t.to_string(), fmt_f64(rep.direct), fmt_f64(rep.recursive), fmt_f64(rep.gap)])?;
    w.flush()?;
    let tol = cfg.real("tol", 1e-10);
    Ok(vec![check("dpp gap", rep.gap <= tol, format!("gap {:.3e}", rep.gap))])
}

fn hjb(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let ex = example_config(cfg);
    let (driver, eta_dot) = ex.smooth_driver()?;
    let problem = ex.hjb_problem(driver)?;
    let cand = ex.candidate();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed(1));
    let mut w = csv_writer(out, "hjb.csv")?;
    w.write_record(["t", "x", "residual"])?;
    let mut worst = 0.0f64;
    let mut terminal_probes = Vec::new();
    for _ in 0..cfg.int("probes", 20) {
        let t = rng.gen_range(0.02..0.95) * ex.horizon;
        let x = rng.gen_range(-2.0..2.0);
        let u = rng.gen_range(-1.0..1.0);
        let mut hist = ControlHistory::new(ex.alpha, vec![ex.base], 0.0)?;
        hist.push(t, vec![u])?;
        let res = hjb_residual(&cand, &problem, t, &[x], &hist, &[eta_dot(t)])?;
        worst = worst.max(res.abs());
        w.write_record([fmt_f64(t), fmt_f64(x), fmt_f64(res)])?;
        let mut full = hist.clone();
        full.push(ex.horizon, vec![-u])?;
        terminal_probes.push((vec![x], full));
    }
    w.flush()?;
    let tol = cfg.real("tol", 1e-6);
    let term = terminal_check(&cand, &terminal_probes)?;
    Ok(vec![
        check("interior residual", worst <= tol, format!("max |residual| {worst:.3e}")),
        check("terminal condition", term <= 1e-12, format!("max gap {term:.3e}")),
    ])
}

fn ladder(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let ex = example_config(cfg);
    let base = ex.driver_path()?;
    let zeta = Arc::new(signature_lift(&base, ex.p)?);
    let ladder: Vec<Arc<RoughPath>> = cfg
        .ints("ladder", &[8, 4, 2])
        .into_iter()
        .map(|w| Ok(Arc::new(signature_lift(&mollify(&base, w)?, ex.p)?)))
        .collect::<Result<_>>()?;
    let problem = ex.problem(zeta.clone(), ex.lattice_points, ex.steps)?;
    let gamma = ex.default_history()?;
    let probes: Vec<Probe> = ex
        .probes
        .iter()
        .map(|&(r, x)| Probe {
            r,
            x: vec![x],
            gamma: gamma.clone(),
        })
        .collect();
    let tol = cfg.real("tol", 1e-8);
    let rep = rough_viscosity_convergence(&problem, &zeta, &ladder, &probes, tol)?;
    rep.write_csv(BufWriter::new(File::create(out.join("ladder.csv"))?))?;
    let worst = rep.rows.iter().map(|r| r.value_gap).fold(0.0, f64::max);
    Ok(match rep.passed {
        None => Vec::new(),
        Some(p) => vec![check(
            "value gaps follow lift gaps",
            p && worst <= tol,
            format!("largest value gap {worst:.3e}"),
        )],
    })
}

fn example(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let ex = example_config(cfg);
    let driver = ex.driver()?;
    let gamma = ex.default_history()?;
    let coarse = ex.problem(driver.clone(), ex.lattice_points, ex.steps)?;
    let fine = ex.problem(driver, ex.refined_points, ex.refined_steps)?;
    let mut w = csv_writer(out, "example.csv")?;
    w.write_record(["r", "x", "closed", "value", "refined_value", "rel_err", "refined_rel_err"])?;
    let tol = cfg.real("tol", 0.05);
    let mut within = true;
    let mut shrinks = true;
    println!("{:>5} {:>8} {:>16} {:>16} {:>9} {:>9}", "r", "x", "closed form", "computed", "rel err", "refined");
    for &(r, x) in &ex.probes {
        let closed = ex.closed_form(r, x, &gamma)?;
        let a = value_function(&coarse, r, &[x], &gamma)?.value;
        let b = value_function(&fine, r, &[x], &gamma)?.value;
        let (ea, eb) = (((a - closed) / closed).abs(), ((b - closed) / closed).abs());
        within &= ea <= tol;
        shrinks &= eb < ea;
        println!("{r:>5} {x:>8.3} {closed:>16.10} {a:>16.10} {ea:>9.5} {eb:>9.5}");
        w.write_record([r.to_string(), fmt_f64(x), fmt_f64(closed), fmt_f64(a), fmt_f64(b), fmt_f64(ea), fmt_f64(eb)])?;
    }
    w.flush()?;
    Ok(vec![
        check("relative error within tolerance", within, format!("tolerance {tol}")),
        check("error shrinks under refinement", shrinks, String::new()),
    ])
}

fn run_suite(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<Check>> {
    let results = suite::run_all(cfg.seed(20240));
    let mut w = csv_writer(out, "suite.csv")?;
    w.write_record(["id", "name", "passed", "detail"])?;
    for c in &results {
        w.write_record([c.id.to_string(), c.name.to_string(), c.passed.to_string(), c.detail.clone()])?;
    }
    w.flush()?;
    Ok(results.into_iter().map(|c| check(c.name, c.passed, c.detail)).collect())
}
