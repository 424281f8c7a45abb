//! The acceptance battery: eleven end-to-end checks with fixed tolerances.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{degeneracy_probe, dpp_check, penalty_admissible, penalty_exponent_threshold, value_function};
use crate::control::{BoundKind, Caps, ControlLattice, ControlProblem, DegeneracyReport};
use crate::controlled::{compose, rough_integral, ControlledPath, FnField};
use crate::error::Result;
use crate::example::{mollify, ExampleConfig};
use crate::fixtures::{random_driver, random_history, random_problem, random_sine_field, random_walk};
use crate::fraccalc::{caputo_discrepancy, ACAlphaPath};
use crate::gridpath::{partition_pvar_inequality_check, p_variation, SampledPath, TimeGrid};
use crate::hjb::{hjb_residual, rough_cost_stability, rough_viscosity_convergence, terminal_check, ControlHistory, Probe};
use crate::rde::{consistency, solve, stability_probe, RdeProblem, SolveOptions, StabilityReport};
use crate::roughlift::{shuffle_set, signature_lift, RoughPath, Word};

/// Outcome of one criterion.
#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: usize, name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> Criterion {
    match run() {
        Ok((passed, detail)) => Criterion { id, name, passed, detail },
        Err(e) => Criterion {
            id,
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub const NAMES: [&str; 11] = [
    "worked example",
    "hjb residual",
    "driver invariance",
    "rough-path algebra",
    "fractional round trip",
    "rough integral",
    "rde solver",
    "stability ratios",
    "p-variation",
    "degeneracy probe",
    "dpp gap",
];

/// Runs criterion `id` (1-based) with the given seed.
pub fn run_criterion(id: usize, seed: u64) -> Criterion {
    let name = NAMES[id - 1];
    outcome(id, name, || match id {
        1 => worked_example(),
        2 => hjb_residuals(seed),
        3 => driver_invariance(),
        4 => rough_algebra(seed),
        5 => fractional_round_trip(),
        6 => rough_integral_check(seed),
        7 => rde_solver(seed),
        8 => stability_ratios(seed),
        9 => pvar_check(seed),
        10 => degeneracy(),
        11 => dpp(seed),
        _ => unreachable!(),
    })
}

pub fn run_all(seed: u64) -> Vec<Criterion> {
    (1..=NAMES.len()).map(|id| run_criterion(id, seed)).collect()
}

fn worked_example() -> Result<(bool, String)> {
    let start = Instant::now();
    let cfg = ExampleConfig::default();
    let driver = cfg.driver()?;
    let gamma = cfg.default_history()?;
    let coarse = cfg.problem(driver.clone(), cfg.lattice_points, cfg.steps)?;
    let fine = cfg.problem(driver, cfg.refined_points, cfg.refined_steps)?;
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut worst_fine = 0.0f64;
    for &(r, x) in &cfg.probes {
        let closed = cfg.closed_form(r, x, &gamma)?;
        let a = value_function(&coarse, r, &[x], &gamma)?.value;
        let b = value_function(&fine, r, &[x], &gamma)?.value;
        let (ea, eb) = (((a - closed) / closed).abs(), ((b - closed) / closed).abs());
        ok &= ea <= 0.05 && eb < ea;
        worst = worst.max(ea);
        worst_fine = worst_fine.max(eb);
    }
    ok &= start.elapsed().as_secs() <= 300;
    Ok((
        ok,
        format!("max rel err {worst:.4} (m=6,|U|=21) -> {worst_fine:.4} (m=8,|U|=41)"),
    ))
}

/// Random history of up to four segments on `[0, t]`.
fn random_segments(alpha: f64, t: f64, rng: &mut impl Rng) -> Result<ControlHistory> {
    let mut h = ControlHistory::new(alpha, vec![0.0], 0.0)?;
    let k = rng.gen_range(1..=4);
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(0.0..t)).collect();
    cuts.push(t);
    cuts.sort_by(f64::total_cmp);
    for c in cuts {
        if c > h.end() {
            h.push(c, vec![rng.gen_range(-1.0..1.0)])?;
        }
    }
    Ok(h)
}

fn hjb_residuals(seed: u64) -> Result<(bool, String)> {
    let cfg = ExampleConfig::default();
    let (driver, eta_dot) = cfg.smooth_driver()?;
    let problem = cfg.hjb_problem(driver)?;
    let cand = cfg.candidate();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t = rng.gen_range(0.02..0.95) * cfg.horizon;
        let x = rng.gen_range(-2.0..2.0);
        let hist = random_segments(cfg.alpha, t, &mut rng)?;
        let r = hjb_residual(&cand, &problem, t, &[x], &hist, &[eta_dot(t)])?;
        worst = worst.max(r.abs());
    }
    let probes: Vec<(Vec<f64>, ControlHistory)> = (0..20)
        .map(|_| Ok((vec![rng.gen_range(-2.0..2.0)], random_segments(cfg.alpha, cfg.horizon, &mut rng)?)))
        .collect::<Result<_>>()?;
    let term = terminal_check(&cand, &probes)?;
    Ok((
        worst <= 1e-6 && term <= 1e-12,
        format!("max |residual| {worst:.3e} over 20 probes, terminal gap {term:.3e}"),
    ))
}

fn driver_invariance() -> Result<(bool, String)> {
    let cfg = ExampleConfig::default();
    let base = cfg.driver_path()?;
    let zeta = Arc::new(signature_lift(&base, cfg.p)?);
    let ladder: Vec<Arc<RoughPath>> = [8, 4, 2]
        .iter()
        .map(|&w| Ok(Arc::new(signature_lift(&mollify(&base, w)?, cfg.p)?)))
        .collect::<Result<_>>()?;
    let problem = cfg.problem(zeta.clone(), cfg.lattice_points, cfg.steps)?;
    let gamma = cfg.default_history()?;
    let probes: Vec<Probe> = cfg
        .probes
        .iter()
        .map(|&(r, x)| Probe {
            r,
            x: vec![x],
            gamma: gamma.clone(),
        })
        .collect();
    let rep = rough_viscosity_convergence(&problem, &zeta, &ladder, &probes, 1e-8)?;
    let mut pairwise = 0.0f64;
    for i in 0..rep.values.len() {
        for j in i + 1..rep.values.len() {
            for (a, b) in rep.values[i].iter().zip(&rep.values[j]) {
                pairwise = pairwise.max((a - b).abs());
            }
        }
    }
    let gaps: Vec<String> = rep.rows.iter().map(|r| format!("{:.3e}", r.lift_gap)).collect();
    Ok((
        pairwise <= 1e-8 && rep.passed == Some(true),
        format!("pairwise value gap {pairwise:.3e}, lift gaps [{}]", gaps.join(", ")),
    ))
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn all_words(d: usize, max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for l in 0..d {
                next.push(w.concat(&Word::letter(l)));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn rough_algebra(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chen = 0.0f64;
    let mut shuffle = 0.0f64;
    for _ in 0..500 {
        let d = rng.gen_range(1..=3);
        let depth = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=24);
        let grid = TimeGrid::uniform(1.0, n)?;
        let eta = random_walk(grid, d, 1.0, &mut rng)?;
        let rp = signature_lift(&eta, depth as f64 + 0.5)?;
        chen = chen.max(rp.chen_check().max_violation);
        shuffle = shuffle.max(rp.shuffle_check().max_violation);
    }
    let mut card_ok = true;
    let words = all_words(2, 3);
    for a in &words {
        for b in &words {
            card_ok &= shuffle_set(a, b).len() == binomial(a.len() + b.len(), a.len());
        }
    }
    Ok((
        chen <= 1e-10 && shuffle <= 1e-10 && card_ok,
        format!("Chen {chen:.3e}, shuffle {shuffle:.3e} over 500 drivers; shuffle cardinalities match: {card_ok}"),
    ))
}

/// Verification-mode round-trip errors for `u = 1 + 0.5 sin 3t` on the window `t ≥ T/4`.
pub fn round_trip_errors(alpha: f64, ns: &[usize]) -> Result<Vec<f64>> {
    ns.iter()
        .map(|&n| {
            let grid = TimeGrid::uniform(1.0, n)?;
            let u = SampledPath::from_fn(grid, 1, |t| vec![1.0 + 0.5 * (3.0 * t).sin()])?;
            let gamma = ACAlphaPath::new(alpha, vec![0.2], u)?;
            Ok(caputo_discrepancy(&gamma, n / 4)?.max_error)
        })
        .collect()
}

fn fractional_round_trip() -> Result<(bool, String)> {
    let mut ok = true;
    let mut lines = Vec::new();
    for alpha in [0.6, 0.75, 0.9] {
        let errs = round_trip_errors(alpha, &[64, 128, 256, 512])?;
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        ok &= ratios.iter().all(|r| (1.6..=2.4).contains(r));
        lines.push(format!(
            "α={alpha}: ratios {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join("/")
        ));
    }
    Ok((ok, lines.join("; ")))
}

/// `φ(y) = (y₂², y₁)` integrated against a planar driver.
fn planar_integrand() -> Result<FnField> {
    FnField::new(2, 1, 2, usize::MAX, 4.0, |y, _g, dirs, out| match dirs.len() {
        0 => {
            out[0] = y[1] * y[1];
            out[1] = y[0];
        }
        1 => {
            out[0] = 2.0 * y[1] * dirs[0][1];
            out[1] = dirs[0][0];
        }
        2 => {
            out[0] = 2.0 * dirs[0][1] * dirs[1][1];
            out[1] = 0.0;
        }
        _ => out.iter_mut().for_each(|o| *o = 0.0),
    })
}

/// `(oracle, [(n, value, error)])` for `∫ η₂² dη₁ + η₁ dη₂` with `η = (sin 2πt, cos 3t)`.
pub fn integral_refinement(ns: &[usize]) -> Result<(f64, Vec<(usize, f64, f64)>)> {
    let eta = |t: f64| [(std::f64::consts::TAU * t).sin(), (3.0 * t).cos()];
    let eta_dot = |t: f64| [std::f64::consts::TAU * (std::f64::consts::TAU * t).cos(), -3.0 * (3.0 * t).sin()];
    // Simpson oracle
    let m = 200_000;
    let f = |t: f64| {
        let (y, v) = (eta(t), eta_dot(t));
        y[1] * y[1] * v[0] + y[0] * v[1]
    };
    let hq = 1.0 / m as f64;
    let mut oracle = f(0.0) + f(1.0);
    for i in 1..m {
        oracle += f(i as f64 * hq) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    oracle *= hq / 3.0;
    let phi = planar_integrand()?;
    let mut rows = Vec::new();
    for &n in ns {
        let grid = TimeGrid::uniform(1.0, n)?;
        let path = SampledPath::from_fn(grid, 2, |t| eta(t).to_vec())?;
        let rp = Arc::new(signature_lift(&path, 2.5)?);
        let y = compose(&phi, &ControlledPath::driver(rp)?, &SampledPath::zeros(grid, 1))?;
        let v = rough_integral(&y, (0, n))?[0];
        rows.push((n, v, (v - oracle).abs()));
    }
    Ok((oracle, rows))
}

fn rough_integral_check(seed: u64) -> Result<(bool, String)> {
    let errs: Vec<f64> = integral_refinement(&[32, 64, 128, 256])?.1.iter().map(|r| r.2).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let mut ok = orders.iter().all(|o| *o >= 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ito = 0.0f64;
    for depth in [2usize, 3] {
        for _ in 0..20 {
            let grid = TimeGrid::uniform(1.0, rng.gen_range(4..200))?;
            let walk = random_walk(grid, 1, 1.0, &mut rng)?;
            let rp = Arc::new(signature_lift(&walk, depth as f64 + 0.5)?);
            let n = grid.n();
            let v = rough_integral(&ControlledPath::driver(rp)?, (0, n))?[0];
            let exact = 0.5 * (walk.at(n)[0].powi(2) - walk.at(0)[0].powi(2));
            ito = ito.max((v - exact).abs());
        }
    }
    ok &= ito <= 1e-10;
    Ok((
        ok,
        format!(
            "observed orders {}, ∫ζdζ gap {ito:.3e}",
            orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join("/")
        ),
    ))
}

fn rde_solver(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::uniform(1.0, 1 << 10)?;
    let walk = random_walk(grid, 1, 1.0, &mut rng)?;
    // third-order steps: at p = 2.5 the local error |Δζ|³/6 sums to ~2e-3 on a unit-scale walk
    let rp = Arc::new(signature_lift(&walk, 3.5)?);
    let x0 = 1.5;
    let linear = RdeProblem::new(
        Arc::new(FnField::constant(1, 1, vec![0.0])?),
        Arc::new(FnField::affine(1, 1, vec![1.0], vec![0.0], vec![0.0])?),
        rp.clone(),
        SampledPath::zeros(grid, 1),
        vec![x0],
    )?;
    let tol = 1e-12;
    let opts = SolveOptions::with_tol(tol);
    let sol = solve(&linear, &opts)?;
    let trace = sol.trace();
    let mut rel = 0.0f64;
    for i in 0..=grid.n() {
        let exact = x0 * (walk.at(i)[0] - walk.at(0)[0]).exp();
        rel = rel.max(((trace.at(i)[0] - exact) / exact).abs());
    }

    // flow: solve to the midpoint, restart from there
    let mid = grid.n() / 2;
    let mut flow = 0.0f64;
    let mut regression = 0.0f64;
    let problems = [linear.clone(), random_rde(&mut rng, 2, 2, grid)?, random_rde(&mut rng, 1, 3, grid)?];
    for pb in &problems {
        let full = solve(pb, &opts)?;
        let head = RdeProblem::new(
            pb.drift.clone(),
            pb.diffusion.clone(),
            Arc::new(pb.driver.restrict(0, mid)?),
            pb.control.restrict(0, mid)?,
            pb.x0.clone(),
        )?;
        let hs = solve(&head, &opts)?;
        let xm = hs.path.point(mid)[..pb.state_dim()].to_vec();
        let tail = RdeProblem::new(
            pb.drift.clone(),
            pb.diffusion.clone(),
            Arc::new(pb.driver.restrict(mid, grid.n())?),
            pb.control.restrict(mid, grid.n())?,
            xm,
        )?;
        let ts = solve(&tail, &opts)?;
        let a = &full.path.point(grid.n())[..pb.state_dim()];
        let b = &ts.path.point(grid.n() - mid)[..pb.state_dim()];
        let scale = 1.0 + a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        flow = flow.max(a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max) / scale);
        let c = consistency(pb, &full);
        regression = regression.max(c.self_consistency).max(c.integral_equation);
    }
    let ok = rel <= 1e-3 && flow <= 2.0 * tol && regression <= tol;
    Ok((
        ok,
        format!("linear rel err {rel:.3e}, flow gap {flow:.3e}, self-consistency {regression:.3e}"),
    ))
}

fn random_rde(rng: &mut ChaCha8Rng, e: usize, d: usize, grid: TimeGrid) -> Result<RdeProblem> {
    let driver = random_driver(grid, d, 0.7, 2.5, rng)?;
    let control = random_history(grid, 0.8, 0.0, rng)?.to_sampled();
    let x0 = (0..e).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RdeProblem::new(
        Arc::new(random_sine_field(e, 1, e, 0.5, rng)?),
        Arc::new(random_sine_field(e, 1, e * d, 0.5, rng)?),
        driver,
        control,
        x0,
    )
}

/// A perturbation of size roughly `δ` in initial value, control and driver.
fn perturbed(base: &RdeProblem, walk: &SampledPath, rng: &mut ChaCha8Rng) -> Result<RdeProblem> {
    let delta = 10f64.powf(rng.gen_range(-4.0..-2.0));
    let grid = *walk.grid();
    let (a, w) = (rng.gen_range(-1.0..1.0), rng.gen_range(1.0..5.0));
    let (b, v) = (rng.gen_range(-1.0..1.0), rng.gen_range(1.0..5.0));
    let d = walk.dim();
    let mut eta = walk.clone();
    for i in 0..grid.len() {
        let t = grid.time(i);
        for c in 0..d {
            eta.at_mut(i)[c] += delta * a * (w * t + c as f64).sin();
        }
    }
    let mut control = base.control.clone();
    for i in 0..grid.len() {
        control.at_mut(i)[0] += delta * b * (v * grid.time(i)).cos();
    }
    let x0 = base.x0.iter().map(|x| x + delta * rng.gen_range(-1.0..1.0)).collect();
    RdeProblem::new(
        base.drift.clone(),
        base.diffusion.clone(),
        Arc::new(signature_lift(&eta, base.driver.p())?),
        control,
        x0,
    )
}

fn stability_ratios(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::uniform(1.0, 128)?;
    let walk = random_walk(grid, 2, 0.7, &mut rng)?;
    let control = random_history(grid, 0.8, 0.0, &mut rng)?.to_sampled();
    let base = RdeProblem::new(
        Arc::new(random_sine_field(2, 1, 2, 0.5, &mut rng)?),
        Arc::new(random_sine_field(2, 1, 4, 0.5, &mut rng)?),
        Arc::new(signature_lift(&walk, 2.5)?),
        control,
        vec![0.3, -0.2],
    )?;
    let psi = random_sine_field(2, 1, 2, 0.5, &mut rng)?;
    let opts = SolveOptions::default();
    let batch = |which: usize, rng: &mut ChaCha8Rng| -> Result<Vec<StabilityReport>> {
        (0..50)
            .map(|_| {
                let other = perturbed(&base, &walk, rng)?;
                if which == 0 {
                    stability_probe(&base, &other, &opts)
                } else {
                    rough_cost_stability(&psi, &base, &other, &opts)
                }
            })
            .collect()
    };
    let mut ok = true;
    let mut lines = Vec::new();
    for (which, label) in [(0, "solution"), (1, "rough cost")] {
        let fit = batch(which, &mut rng)?;
        let constant = fit.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let test = batch(which, &mut rng)?;
        let fails = test.iter().filter(|r| r.ratio > 2.0 * constant).count();
        let worst = test.iter().map(|r| r.ratio).fold(0.0, f64::max);
        ok &= fails == 0 && constant.is_finite() && constant > 0.0;
        lines.push(format!("{label}: fitted C {constant:.3e}, worst {worst:.3e}, {fails} failures"));
    }
    Ok((ok, lines.join("; ")))
}

/// `max` over all sub-partitions, summed left to right.
pub fn pvar_brute_force(path: &SampledPath, p: f64) -> f64 {
    let n = path.len() - 1;
    if n == 0 {
        return 0.0;
    }
    let interior = n - 1;
    let mut best = 0.0f64;
    for mask in 0u32..(1 << interior) {
        let mut prev = 0;
        let mut sum = 0.0;
        for k in 1..=n {
            if k == n || mask & (1 << (k - 1)) != 0 {
                sum += path.increment_norm(prev, k).powf(p);
                prev = k;
            }
        }
        best = best.max(sum);
    }
    best.powf(1.0 / p)
}

fn pvar_check(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let d = rng.gen_range(1..=3);
        let p = rng.gen_range(1.0..4.0);
        let path = random_walk(TimeGrid::uniform(1.0, n)?, d, 1.0, &mut rng)?;
        if p_variation(&path, p, (0, n))? != pvar_brute_force(&path, p) {
            mismatches += 1;
        }
    }
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=40);
        let d = rng.gen_range(1..=3);
        let p = rng.gen_range(1.0..4.0);
        let path = random_walk(TimeGrid::uniform(1.0, n)?, d, 1.0, &mut rng)?;
        let cuts: Vec<usize> = (0..rng.gen_range(1..5)).map(|_| rng.gen_range(1..n)).collect();
        if !partition_pvar_inequality_check(&path, p, &cuts)?.holds {
            violations += 1;
        }
    }
    Ok((
        mismatches == 0 && violations == 0,
        format!("{mismatches} DP mismatches in 200 cases, {violations} partition violations in 1000"),
    ))
}

/// `dX = 0.5 dt`-driven problem with `ψ = −γ`: large controls are rewarded.
pub fn degeneracy_problem() -> Result<(ControlProblem, ACAlphaPath)> {
    let grid = TimeGrid::uniform(1.0, 32)?;
    let eta = SampledPath::from_fn(grid, 1, |t| vec![t])?;
    let alpha = 0.95;
    let problem = ControlProblem {
        drift: Arc::new(FnField::constant(1, 1, vec![0.0])?),
        diffusion: Arc::new(FnField::constant(1, 1, vec![0.5])?),
        driver: Arc::new(signature_lift(&eta, 2.5)?),
        running: Arc::new(|_, _| 0.0),
        rough_cost: Arc::new(FnField::affine(1, 1, vec![0.0], vec![-1.0], vec![0.0])?),
        terminal: Arc::new(|_, _| 0.0),
        alpha,
        penalty_weight: 1.0,
        penalty_exponent: 8.0,
        lattice: ControlLattice::spaced(0.25, 4)?,
        steps: 2,
        caps: Caps::default(),
        bound: BoundKind::None,
    };
    let gamma = ACAlphaPath::constant(alpha, vec![0.0], grid)?;
    Ok((problem, gamma))
}

fn degeneracy() -> Result<(bool, String)> {
    let (problem, gamma) = degeneracy_problem()?;
    let (admissible, thr) = penalty_admissible(problem.penalty_exponent, problem.alpha, problem.driver.p());
    let rep = degeneracy_probe(&problem, 0, &[0.0], &gamma, 0.25, 4, &[1, 2, 4])?;
    let free = DegeneracyReport::gaps(&rep.unpenalized);
    let pen = DegeneracyReport::gaps(&rep.penalized);
    let ok = admissible
        && penalty_exponent_threshold(2.0) == 6.0
        && free.iter().all(|g| *g > 1e-2)
        && pen.last().is_some_and(|g| g.abs() < 1e-3);
    let fmt = |v: &[f64]| v.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join("/");
    Ok((
        ok,
        format!("unpenalized gaps {}, penalized gaps {} (q=8 > {thr:.3})", fmt(&free), fmt(&pen)),
    ))
}

fn dpp(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::uniform(1.0, 24)?;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (r, m) = loop {
            let r = [0usize, 4, 8, 12][rng.gen_range(0..4)];
            let m = rng.gen_range(2..=4);
            if (24 - r) % m == 0 {
                break (r, m);
            }
        };
        let e = rng.gen_range(1..=2);
        let d = rng.gen_range(1..=2);
        let problem = random_problem(e, d, grid, m, &mut rng)?;
        let gamma = random_history(grid, problem.alpha, 0.1, &mut rng)?;
        let x: Vec<f64> = (0..e).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let j = rng.gen_range(0..=m);
        let t = r + j * (24 - r) / m;
        worst = worst.max(dpp_check(&problem, r, &x, &gamma, t)?.gap);
    }
    Ok((worst <= 1e-10, format!("max DPP gap {worst:.3e} over 50 problems")))
}
