//! Controlled RDEs `dX = b(X, γ) dt + λ(X, γ) dζ`.
//!
//! Each cell is advanced with the Davie-type step
//!
//! ```text
//! X_{i+1} = X_i + b(X_i, γ_i) h + Σ_{|ε| ≤ N−1} Σ_l λ(X̄, γ)_{ε,i}[·, l] ζ^{(ε,l)}_{s_i s_{i+1}}
//! ```
//!
//! where the Gubinelli components obey `X̄_{(l)} = λ[·, l]` and
//! `X̄_{(ε,l)} = λ(X̄, γ)_ε[·, l]`. The result is then refined by Picard sweeps of
//! the integral map over windows short enough that
//! `C (h_w + ‖ζ‖_{p;w}) < 1/2`, with `C` the bound witness of the coefficients.

use std::sync::Arc;

use crate::controlled::{
    controlled_distance, integral_increment, remainder_table, CompositionTable, ControlledPath,
    SmoothFunction,
};
use crate::error::{invalid, Error, Result};
use crate::gridpath::{p_variation, SampledPath};
use crate::roughlift::{RoughPath, TruncatedTensor};

#[derive(Clone)]
pub struct RdeProblem {
    pub drift: Arc<dyn SmoothFunction>,
    pub diffusion: Arc<dyn SmoothFunction>,
    pub driver: Arc<RoughPath>,
    pub control: SampledPath,
    pub x0: Vec<f64>,
}

impl RdeProblem {
    pub fn new(
        drift: Arc<dyn SmoothFunction>,
        diffusion: Arc<dyn SmoothFunction>,
        driver: Arc<RoughPath>,
        control: SampledPath,
        x0: Vec<f64>,
    ) -> Result<Self> {
        let e = x0.len();
        let d = driver.dim();
        let dims = [
            ("drift state", drift.state_dim(), e),
            ("drift output", drift.out_dim(), e),
            ("diffusion state", diffusion.state_dim(), e),
            ("diffusion output", diffusion.out_dim(), e * d),
            ("drift control", drift.control_dim(), control.dim()),
            ("diffusion control", diffusion.control_dim(), control.dim()),
        ];
        for (what, got, expected) in dims {
            if got != expected {
                return Err(Error::Dimension { what, expected, got });
            }
        }
        if control.grid() != driver.grid() {
            return Err(Error::GridMismatch("control path and driver grids differ".into()));
        }
        let need = driver.depth() + 1;
        if diffusion.order() < need {
            return invalid(format!("diffusion needs {need} state derivatives, has {}", diffusion.order()));
        }
        Ok(Self {
            drift,
            diffusion,
            driver,
            control,
            x0,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.x0.len()
    }
}

/// How Picard sweeps are initialised on each window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PicardStart {
    /// Davie stepping; the first sweep reproduces it.
    Davie,
    /// Constant guess equal to the window's initial state.
    Frozen,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub max_window: usize,
    pub start: PicardStart,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_sweeps: 50,
            max_window: 64,
            start: PicardStart::Davie,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowDiagnostic {
    pub window: usize,
    pub start: usize,
    pub end: usize,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct RdeSolution {
    pub path: ControlledPath,
    pub diagnostics: Vec<WindowDiagnostic>,
}

impl RdeSolution {
    pub fn trace(&self) -> SampledPath {
        self.path.trace()
    }

    pub fn write_diagnostics_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["window", "iterations", "residual"])?;
        for d in &self.diagnostics {
            out.write_record([
                d.window.to_string(),
                d.iterations.to_string(),
                crate::gridpath::fmt_f64(d.residual),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Pointwise Gubinelli components and one-cell increments for a coefficient pair.
pub(crate) struct Stepper {
    drift: Arc<dyn SmoothFunction>,
    diffusion: Arc<dyn SmoothFunction>,
    table: Arc<CompositionTable>,
    e: usize,
    d: usize,
    depth: usize,
}

impl Stepper {
    pub(crate) fn new(drift: Arc<dyn SmoothFunction>, diffusion: Arc<dyn SmoothFunction>, d: usize, depth: usize) -> Self {
        let e = drift.state_dim();
        Self {
            drift,
            diffusion,
            table: CompositionTable::get(d, depth.saturating_sub(1)),
            e,
            d,
            depth,
        }
    }

    pub(crate) fn comps_len(&self) -> usize {
        self.table.words().len() * self.e
    }

    pub(crate) fn lam_len(&self) -> usize {
        self.table.words().len() * self.e * self.d
    }

    /// Fills the state components `X̄` and the composed diffusion `λ(X̄, γ)` at one point.
    pub(crate) fn point(&self, x: &[f64], g: &[f64], comps: &mut [f64], lam: &mut [f64], scratch: &mut Vec<f64>) {
        let (e, d) = (self.e, self.d);
        let words = self.table.words();
        comps.iter_mut().for_each(|v| *v = 0.0);
        comps[..e].copy_from_slice(x);
        let m = e * d;
        // components of length L only need λ(X̄) on words of length L−1
        for len in 0..words.max_len() {
            for beta in words.level_range(len) {
                self.compose_word(beta, comps, g, &mut lam[beta * m..(beta + 1) * m], scratch);
                for l in 0..d {
                    let mut w = words.word(beta).clone();
                    w.0.push(l as u8);
                    let idx = words.index(&w);
                    for row in 0..e {
                        comps[idx * e + row] = lam[beta * m + row * d + l];
                    }
                }
            }
        }
        let top = words.max_len();
        for beta in words.level_range(top) {
            self.compose_word(beta, comps, g, &mut lam[beta * m..(beta + 1) * m], scratch);
        }
    }

    fn compose_word(&self, beta: usize, comps: &[f64], g: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        let e = self.e;
        let phi = self.diffusion.as_ref();
        if beta == 0 {
            phi.eval(&comps[..e], g, out);
            return;
        }
        scratch.resize(out.len(), 0.0);
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut dirs: Vec<&[f64]> = Vec::with_capacity(self.depth);
        for (coef, tuple) in self.table.terms(beta) {
            dirs.clear();
            dirs.extend(tuple.iter().map(|&w| &comps[w * e..(w + 1) * e]));
            phi.derivative(&comps[..e], g, &dirs, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += coef * s;
            }
        }
    }

    /// `b h + Σ λ(X̄)_ε[·,l] ζ^{(ε,l)}` for one cell.
    pub(crate) fn increment(&self, x: &[f64], g: &[f64], lam: &[f64], cell: &TruncatedTensor, h: f64, out: &mut [f64]) {
        self.drift.eval(x, g, out);
        out.iter_mut().for_each(|v| *v *= h);
        integral_increment(lam, self.table.words(), self.d, cell, out);
    }
}

fn windows(problem: &RdeProblem, max_window: usize) -> Vec<(usize, usize)> {
    let rp = &problem.driver;
    let n = rp.grid().n();
    let c = (problem.diffusion.bound() + problem.drift.bound()).max(1e-300);
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let far = (start + max_window.max(1)).min(n);
        let norms = rp.prefix_pvar_norms(start, far);
        let t0 = rp.grid().time(start);
        let mut end = start + 1;
        for j in start + 2..=far {
            let proxy = c * ((rp.grid().time(j) - t0) + norms[j - start]);
            if proxy < 0.5 {
                end = j;
            } else {
                break;
            }
        }
        out.push((start, end));
        start = end;
    }
    out
}

/// Solves the RDE on the driver's grid.
pub fn solve(problem: &RdeProblem, opts: &SolveOptions) -> Result<RdeSolution> {
    if !(opts.tol > 0.0) {
        return invalid("solver tolerance must be positive");
    }
    let rp = problem.driver.clone();
    let (e, d, depth) = (problem.state_dim(), rp.dim(), rp.depth());
    let step = Stepper::new(problem.drift.clone(), problem.diffusion.clone(), d, depth);
    let h = rp.grid().h();
    let n = rp.grid().n();
    let mut x = vec![0.0; (n + 1) * e];
    x[..e].copy_from_slice(&problem.x0);
    let mut comps = vec![0.0; step.comps_len()];
    let mut lam = vec![0.0; step.lam_len()];
    let mut scratch = Vec::new();
    let mut inc = vec![0.0; e];
    let mut diagnostics = Vec::new();

    for (wi, (ws, we)) in windows(problem, opts.max_window).into_iter().enumerate() {
        // initial guess on the window
        for i in ws..we {
            let (head, tail) = x.split_at_mut((i + 1) * e);
            let xi = &head[i * e..];
            match opts.start {
                PicardStart::Davie => {
                    let g = problem.control.at(i);
                    step.point(xi, g, &mut comps, &mut lam, &mut scratch);
                    step.increment(xi, g, &lam, rp.cell(i), h, &mut inc);
                    for r in 0..e {
                        tail[r] = xi[r] + inc[r];
                    }
                }
                PicardStart::Frozen => {
                    let v = xi.to_vec();
                    tail[..e].copy_from_slice(&v);
                }
            }
        }
        let mut next = x[ws * e..(we + 1) * e].to_vec();
        let mut history: Vec<f64> = Vec::new();
        let mut iterations = 0;
        let residual = loop {
            iterations += 1;
            // integral map: new trace from the old trace's components
            for i in ws..we {
                let xi = &x[i * e..(i + 1) * e];
                let g = problem.control.at(i);
                step.point(xi, g, &mut comps, &mut lam, &mut scratch);
                step.increment(xi, g, &lam, rp.cell(i), h, &mut inc);
                let k = i - ws;
                for r in 0..e {
                    next[(k + 1) * e + r] = next[k * e + r] + inc[r];
                }
            }
            let res = next
                .iter()
                .zip(&x[ws * e..(we + 1) * e])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            x[ws * e..(we + 1) * e].copy_from_slice(&next);
            if res <= opts.tol {
                break res;
            }
            history.push(res);
            let k = history.len();
            if k >= 4 && history[k - 1] > history[k - 2] && history[k - 2] > history[k - 3] && history[k - 3] > history[k - 4] {
                return Err(Error::NonContraction {
                    window: wi,
                    start: ws,
                    end: we,
                    iterations,
                    residual: res,
                });
            }
            if iterations >= opts.max_sweeps {
                return Err(Error::NonContraction {
                    window: wi,
                    start: ws,
                    end: we,
                    iterations,
                    residual: res,
                });
            }
        };
        diagnostics.push(WindowDiagnostic {
            window: wi,
            start: ws,
            end: we,
            iterations,
            residual,
        });
    }

    // components recomputed from the converged trace
    let stride = step.comps_len();
    let mut data = vec![0.0; (n + 1) * stride];
    for i in 0..=n {
        step.point(&x[i * e..(i + 1) * e], problem.control.at(i), &mut comps, &mut lam, &mut scratch);
        data[i * stride..(i + 1) * stride].copy_from_slice(&comps);
    }
    Ok(RdeSolution {
        path: ControlledPath::new(rp, e, data)?,
        diagnostics,
    })
}

/// Residuals of a solution against its defining relations.
#[derive(Clone, Copy, Debug)]
pub struct ConsistencyReport {
    /// `max_{t,β} |X̄_{β,t} − λ(X̄, γ)-derived component|`.
    pub self_consistency: f64,
    /// `max_i |X_{i+1} − X_i − step_i|`.
    pub integral_equation: f64,
}

pub fn consistency(problem: &RdeProblem, solution: &RdeSolution) -> ConsistencyReport {
    let rp = &problem.driver;
    let (e, d, depth) = (problem.state_dim(), rp.dim(), rp.depth());
    let step = Stepper::new(problem.drift.clone(), problem.diffusion.clone(), d, depth);
    let mut comps = vec![0.0; step.comps_len()];
    let mut lam = vec![0.0; step.lam_len()];
    let mut scratch = Vec::new();
    let mut inc = vec![0.0; e];
    let h = rp.grid().h();
    let path = &solution.path;
    let mut sc = 0.0f64;
    let mut ie = 0.0f64;
    for i in 0..path.len() {
        let stored = path.point(i);
        let x = &stored[..e];
        step.point(x, problem.control.at(i), &mut comps, &mut lam, &mut scratch);
        for (a, b) in stored.iter().zip(&comps) {
            sc = sc.max((a - b).abs());
        }
        if i + 1 < path.len() {
            step.increment(x, problem.control.at(i), &lam, rp.cell(i), h, &mut inc);
            let nx = &path.point(i + 1)[..e];
            for r in 0..e {
                ie = ie.max((nx[r] - x[r] - inc[r]).abs());
            }
        }
    }
    ConsistencyReport {
        self_consistency: sc,
        integral_equation: ie,
    }
}

/// Numerator, denominator and ratio of the local stability estimate.
#[derive(Clone, Copy, Debug)]
pub struct StabilityReport {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// `‖X̄ − Ȳ‖_p / (|x_0 − y_0| + |γ_0 − ν_0| + ‖γ − ν‖_{p/N} + ‖ζ − η‖_p)`; zero when nothing moved.
pub fn stability_probe(a: &RdeProblem, b: &RdeProblem, opts: &SolveOptions) -> Result<StabilityReport> {
    let sa = solve(a, opts)?;
    let sb = solve(b, opts)?;
    let numerator = controlled_distance(&sa.path, &sb.path)?;
    StabilityReport::new(numerator, perturbation_size(a, b)?)
}

impl StabilityReport {
    pub(crate) fn new(numerator: f64, denominator: f64) -> Result<Self> {
        let ratio = if denominator == 0.0 { 0.0 } else { numerator / denominator };
        Ok(Self {
            numerator,
            denominator,
            ratio,
        })
    }
}

/// `|x_0 − y_0| + |γ_0 − ν_0| + ‖γ − ν‖_{p/N} + ‖ζ − η‖_p` for two problems on one grid.
pub fn perturbation_size(a: &RdeProblem, b: &RdeProblem) -> Result<f64> {
    let n = a.driver.grid().n();
    let dx: f64 = a.x0.iter().zip(&b.x0).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    let dg0: f64 = a
        .control
        .at(0)
        .iter()
        .zip(b.control.at(0))
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();
    let depth = a.driver.depth().max(1) as f64;
    let dgam = p_variation(&a.control.minus(&b.control)?, a.driver.p() / depth, (0, n))?;
    let drough = a.driver.distance(&b.driver, (0, n))?;
    Ok(dx + dg0 + dgam + drough)
}

#[derive(Clone, Copy, Debug)]
pub struct GrowthRow {
    pub start: usize,
    pub end: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// `‖R^X‖_{p/N;[0,T]}` and `1 + ‖γ‖^{p+1}_{p/N;[0,T]}`.
    pub global_lhs: f64,
    pub global_rhs: f64,
}

/// Trace-remainder norms per window against `(t−s + ‖ζ‖_p)(1 + ‖γ‖_{p/N})(1 + Σ_j ‖R^X‖^j)`.
pub fn remainder_growth_check(problem: &RdeProblem, solution: &RdeSolution, windows: &[(usize, usize)]) -> Result<GrowthReport> {
    let rp = &problem.driver;
    let p = rp.p();
    let depth = rp.depth().max(1);
    let e = p / depth as f64;
    let mut rows = Vec::new();
    for &(s, t) in windows {
        let tab = remainder_table(&solution.path, (s, t))?;
        let lhs = tab.rows[0].norm;
        let span = rp.grid().time(t) - rp.grid().time(s);
        let gam = p_variation(&problem.control, e, (s, t))?;
        let poly: f64 = 1.0 + (1..=depth).map(|j| lhs.powi(j as i32)).sum::<f64>();
        let rhs = (span + rp.pvar_norm((s, t))?) * (1.0 + gam) * poly;
        rows.push(GrowthRow { start: s, end: t, lhs, rhs });
    }
    let n = rp.grid().n();
    let tab = remainder_table(&solution.path, (0, n))?;
    let gam = p_variation(&problem.control, e, (0, n))?;
    Ok(GrowthReport {
        rows,
        global_lhs: tab.rows[0].norm,
        global_rhs: 1.0 + gam.powf(p + 1.0),
    })
}
