//! Hamiltonian, ci-derivative candidates and residual checks of the fractional HJB equation.
//!
//! For a smooth driver `η` the candidate `v` should satisfy
//!
//! ```text
//! −∂_t v − ⟨∇_x v, b + λ η̇⟩ + H(∇_γ v) − f_s − ⟨ψ, η̇⟩ = 0,    v(T, x, γ) = g(x, γ_T)
//! ```
//!
//! with `H(φ) = sup_u {−⟨φ, u⟩ − f₀|u|^q}`.

use std::sync::Arc;

use crate::control::{value_function, ControlLattice, ControlProblem, CostFn};
use crate::controlled::{compose, rough_integral, SmoothFunction};
use crate::error::{invalid, Error, Result};
use crate::fraccalc::{cell_weight, ACAlphaPath};
use crate::gridpath::{fmt_f64, SampledPath};
use crate::rde::{perturbation_size, solve, RdeProblem, SolveOptions, StabilityReport};
use crate::roughlift::RoughPath;

/// Penalty `f₀|u|^q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenalizedCost {
    pub weight: f64,
    pub exponent: f64,
}

/// `sup_u {−⟨φ, u⟩ − f₀|u|^q} = (q−1) f₀ ρ^q` with `ρ = (|φ|/(q f₀))^{1/(q−1)}`.
pub fn hamiltonian(phi: &[f64], cost: PenalizedCost) -> Result<f64> {
    let PenalizedCost { weight, exponent } = cost;
    if !(exponent > 1.0) || !(weight > 0.0) {
        return Err(Error::NonCoercive(format!("f₀ = {weight}, q = {exponent}")));
    }
    let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let rho = (norm / (exponent * weight)).powf(1.0 / (exponent - 1.0));
    Ok((exponent - 1.0) * weight * rho.powf(exponent))
}

/// Lattice maximum of `−⟨φ, u⟩ − f(u)`.
#[derive(Clone, Debug)]
pub struct GridHamiltonian {
    pub value: f64,
    pub argmax: usize,
    /// Upper bound on `sup − value` for concave objectives: the largest drop to a
    /// nearest neighbour of the maximiser. Infinite if the maximiser is on the hull.
    pub gap: f64,
}

pub fn hamiltonian_grid(phi: &[f64], f: impl Fn(&[f64]) -> f64, lattice: &ControlLattice) -> Result<GridHamiltonian> {
    if phi.len() != lattice.dim() {
        return Err(Error::Dimension {
            what: "costate",
            expected: lattice.dim(),
            got: phi.len(),
        });
    }
    let obj: Vec<f64> = (0..lattice.len())
        .map(|i| {
            let u = lattice.point(i);
            -phi.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() - f(u)
        })
        .collect();
    let mut argmax = 0;
    for (i, v) in obj.iter().enumerate() {
        if *v > obj[argmax] {
            argmax = i;
        }
    }
    let here = lattice.point(argmax);
    let dist = |i: usize| -> f64 {
        lattice
            .point(i)
            .iter()
            .zip(here)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let nearest = (0..lattice.len())
        .filter(|&i| i != argmax)
        .map(dist)
        .fold(f64::INFINITY, f64::min);
    let neighbours: Vec<usize> = (0..lattice.len())
        .filter(|&i| i != argmax && dist(i) <= nearest * (1.0 + 1e-9))
        .collect();
    // on each axis the maximiser must be bracketed
    let bracketed = (0..lattice.dim()).all(|a| {
        let below = neighbours.iter().any(|&i| lattice.point(i)[a] < here[a]);
        let above = neighbours.iter().any(|&i| lattice.point(i)[a] > here[a]);
        let flat = neighbours.iter().all(|&i| lattice.point(i)[a] == here[a]);
        (below && above) || flat
    });
    let gap = if bracketed && !neighbours.is_empty() {
        neighbours.iter().map(|&i| obj[argmax] - obj[i]).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(GridHamiltonian {
        value: obj[argmax],
        argmax,
        gap,
    })
}

/// ci-derivatives of a functional at `(t, x, γ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CiDerivativeRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub gamma: Vec<f64>,
    pub dt: f64,
    pub dx: Vec<f64>,
    pub dgamma: Vec<f64>,
}

/// Piecewise-constant pseudo-control on consecutive time segments, in continuous time.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlHistory {
    alpha: f64,
    gamma_a1: f64,
    base: Vec<f64>,
    start: f64,
    segments: Vec<(f64, f64, Vec<f64>)>,
}

impl ControlHistory {
    pub fn new(alpha: f64, base: Vec<f64>, start: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("fractional order {alpha} outside (0,1)"));
        }
        Ok(Self {
            alpha,
            gamma_a1: statrs::function::gamma::gamma(alpha + 1.0),
            base,
            start,
            segments: Vec::new(),
        })
    }

    /// The first `r` cells of a grid path.
    pub fn from_ac_alpha(gamma: &ACAlphaPath, r: usize) -> Result<Self> {
        let g = gamma.grid();
        let mut out = Self::new(gamma.alpha(), gamma.base().to_vec(), g.start())?;
        for c in 0..r {
            out.push(g.time(c + 1), gamma.pseudo_control().at(c).to_vec())?;
        }
        Ok(out)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn segments(&self) -> &[(f64, f64, Vec<f64>)] {
        &self.segments
    }

    /// End of the recorded history.
    pub fn end(&self) -> f64 {
        self.segments.last().map_or(self.start, |s| s.1)
    }

    /// Appends `u` on `[end, until]`.
    pub fn push(&mut self, until: f64, u: Vec<f64>) -> Result<()> {
        let from = self.end();
        if !(until > from) {
            return invalid(format!("segment end {until} not after {from}"));
        }
        if u.len() != self.dim() {
            return Err(Error::Dimension {
                what: "pseudo-control",
                expected: self.dim(),
                got: u.len(),
            });
        }
        self.segments.push((from, until, u));
        Ok(())
    }

    pub fn extended(&self, until: f64, u: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.push(until, u.to_vec())?;
        Ok(out)
    }

    /// `γ_t = base + I^α u (t)` using the segments up to `t`.
    pub fn value(&self, t: f64) -> Vec<f64> {
        let mut out = self.base.clone();
        for (s0, s1, u) in &self.segments {
            if *s0 >= t {
                break;
            }
            let w = cell_weight(self.alpha, self.gamma_a1, t, *s0, s1.min(t));
            for (o, v) in out.iter_mut().zip(u) {
                *o += v * w;
            }
        }
        out
    }

    /// `Σ_segments ∫ u(s) k(s) ds` with the antiderivative `K` of a scalar kernel.
    pub fn integrate(&self, until: f64, antiderivative: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (s0, s1, u) in &self.segments {
            if *s0 >= until {
                break;
            }
            let w = antiderivative(s1.min(until)) - antiderivative(*s0);
            for (o, v) in out.iter_mut().zip(u) {
                *o += v * w;
            }
        }
        out
    }
}

/// Explicit candidate for the value functional.
pub trait CandidateSolution: Send + Sync {
    fn horizon(&self) -> f64;
    fn value(&self, t: f64, x: &[f64], history: &ControlHistory) -> f64;
    fn derivatives(&self, t: f64, x: &[f64], history: &ControlHistory) -> CiDerivativeRecord;
    /// `g(x, γ_T)`.
    fn terminal(&self, x: &[f64], gamma_t: &[f64]) -> f64;
}

/// Largest `|v(T, x, γ) − g(x, γ_T)|` over probes; histories must reach `T`.
pub fn terminal_check(candidate: &dyn CandidateSolution, probes: &[(Vec<f64>, ControlHistory)]) -> Result<f64> {
    let t = candidate.horizon();
    let mut worst: f64 = 0.0;
    for (x, h) in probes {
        if (h.end() - t).abs() > 1e-12 * t.abs().max(1.0) {
            return invalid("terminal probe history must end at the horizon");
        }
        let v = candidate.value(t, x, h);
        let g = candidate.terminal(x, &h.value(t));
        worst = worst.max((v - g).abs());
    }
    Ok(worst)
}

/// Coefficients of the equation for one problem.
#[derive(Clone)]
pub struct HjbProblem {
    pub drift: Arc<dyn SmoothFunction>,
    pub diffusion: Arc<dyn SmoothFunction>,
    pub rough_cost: Arc<dyn SmoothFunction>,
    pub running: CostFn,
    pub penalty: PenalizedCost,
}

impl HjbProblem {
    pub fn from_control(p: &ControlProblem) -> Self {
        Self {
            drift: p.drift.clone(),
            diffusion: p.diffusion.clone(),
            rough_cost: p.rough_cost.clone(),
            running: p.running.clone(),
            penalty: PenalizedCost {
                weight: p.penalty_weight,
                exponent: p.penalty_exponent,
            },
        }
    }
}

/// Signed residual at an interior point, given `η̇(t)`.
pub fn hjb_residual(
    candidate: &dyn CandidateSolution,
    problem: &HjbProblem,
    t: f64,
    x: &[f64],
    history: &ControlHistory,
    eta_dot: &[f64],
) -> Result<f64> {
    if t >= candidate.horizon() {
        return invalid("the residual is only defined before the horizon");
    }
    let rec = candidate.derivatives(t, x, history);
    residual_from_record(&rec, problem, eta_dot)
}

/// Residual assembled from given derivatives; affine in each of them.
pub fn residual_from_record(rec: &CiDerivativeRecord, problem: &HjbProblem, eta_dot: &[f64]) -> Result<f64> {
    let e = rec.x.len();
    let d = eta_dot.len();
    if problem.diffusion.out_dim() != e * d || problem.rough_cost.out_dim() != d {
        return Err(Error::Dimension {
            what: "driver derivative",
            expected: problem.rough_cost.out_dim(),
            got: d,
        });
    }
    let mut b = vec![0.0; e];
    problem.drift.eval(&rec.x, &rec.gamma, &mut b);
    let mut lam = vec![0.0; e * d];
    problem.diffusion.eval(&rec.x, &rec.gamma, &mut lam);
    let mut psi = vec![0.0; d];
    problem.rough_cost.eval(&rec.x, &rec.gamma, &mut psi);
    let mut transport = 0.0;
    for i in 0..e {
        let vel = b[i] + (0..d).map(|l| lam[i * d + l] * eta_dot[l]).sum::<f64>();
        transport += rec.dx[i] * vel;
    }
    let h = hamiltonian(&rec.dgamma, problem.penalty)?;
    let rough: f64 = psi.iter().zip(eta_dot).map(|(a, b)| a * b).sum();
    Ok(-rec.dt - transport + h - (problem.running)(&rec.x, &rec.gamma) - rough)
}

/// Central differences with one-sided ends.
pub fn central_derivative(path: &SampledPath) -> Result<SampledPath> {
    let n = path.grid().n();
    if n < 1 {
        return invalid("need at least one cell to differentiate");
    }
    let h = path.grid().h();
    let m = path.dim();
    let mut out = SampledPath::zeros(*path.grid(), m);
    for i in 0..=n {
        let (a, b, span) = if i == 0 {
            (0, 1, h)
        } else if i == n {
            (n - 1, n, h)
        } else {
            (i - 1, i + 1, 2.0 * h)
        };
        for c in 0..m {
            out.at_mut(i)[c] = (path.at(b)[c] - path.at(a)[c]) / span;
        }
    }
    Ok(out)
}

/// Normalised expansion errors along a shrinking ladder.
#[derive(Clone, Debug)]
pub struct TaylorReport {
    pub steps: Vec<f64>,
    pub ratios: Vec<f64>,
    pub passed: bool,
}

/// `|v(t+ε, x+ε·dir, ν) − v − ∂_t ε − ⟨∇_x, ε·dir⟩ − ⟨∇_γ, u⟩ε| / (ε + ε|dir|)` for each ε,
/// where `ν` continues the history by `u` on `[t, t+ε]`.
pub fn ci_taylor_check(
    candidate: &dyn CandidateSolution,
    t: f64,
    x: &[f64],
    history: &ControlHistory,
    u_tail: &[f64],
    direction: &[f64],
    steps: &[f64],
) -> Result<TaylorReport> {
    if steps.is_empty() {
        return invalid("empty increment ladder");
    }
    let base = candidate.value(t, x, history);
    let rec = candidate.derivatives(t, x, history);
    let dir_norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut ratios = Vec::with_capacity(steps.len());
    for &eps in steps {
        if t + eps >= candidate.horizon() {
            return invalid("ladder step reaches the horizon");
        }
        let y: Vec<f64> = x.iter().zip(direction).map(|(a, b)| a + eps * b).collect();
        let nu = history.extended(t + eps, u_tail)?;
        let moved = candidate.value(t + eps, &y, &nu);
        let lin = rec.dt * eps
            + rec.dx.iter().zip(direction).map(|(a, b)| a * b * eps).sum::<f64>()
            + rec.dgamma.iter().zip(u_tail).map(|(a, b)| a * b * eps).sum::<f64>();
        ratios.push((moved - base - lin).abs() / (eps * (1.0 + dir_norm)));
    }
    let first = ratios[0];
    let last = *ratios.last().unwrap();
    Ok(TaylorReport {
        steps: steps.to_vec(),
        passed: last < 0.1 * first || last <= 1e-9,
        ratios,
    })
}

/// A value probe `(r, x, γ)` on the master grid.
#[derive(Clone, Debug)]
pub struct Probe {
    pub r: usize,
    pub x: Vec<f64>,
    pub gamma: ACAlphaPath,
}

#[derive(Clone, Debug)]
pub struct ViscosityRow {
    pub rung: usize,
    /// `‖ζ − η_j‖_p`.
    pub lift_gap: f64,
    /// `sup_probes |v^{η_j} − v^{η_{j−1}}|`, zero on the first rung.
    pub value_gap: f64,
    /// `sup_probes |v^{η_j} − v^ζ|`.
    pub max_residual: f64,
}

#[derive(Clone, Debug)]
pub struct ViscosityReport {
    pub rows: Vec<ViscosityRow>,
    pub values: Vec<Vec<f64>>,
    pub limit_values: Vec<f64>,
    /// `None` for a single rung.
    pub passed: Option<bool>,
}

impl ViscosityReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rung", "lift_gap", "value_gap", "max_residual"])?;
        for r in &self.rows {
            out.write_record([r.rung.to_string(), fmt_f64(r.lift_gap), fmt_f64(r.value_gap), fmt_f64(r.max_residual)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Value functions along a ladder of smooth-driver lifts approaching `ζ`.
///
/// Passes when lift gaps strictly decrease and every value gap is at most the
/// previous one plus `tol`.
pub fn rough_viscosity_convergence(
    problem: &ControlProblem,
    zeta: &Arc<RoughPath>,
    ladder: &[Arc<RoughPath>],
    probes: &[Probe],
    tol: f64,
) -> Result<ViscosityReport> {
    if ladder.is_empty() || probes.is_empty() {
        return invalid("ladder and probe set must be nonempty");
    }
    let n = zeta.grid().n();
    let values_for = |driver: &Arc<RoughPath>| -> Result<Vec<f64>> {
        let pr = ControlProblem {
            driver: driver.clone(),
            ..problem.clone()
        };
        probes.iter().map(|p| Ok(value_function(&pr, p.r, &p.x, &p.gamma)?.value)).collect()
    };
    let limit_values = values_for(zeta)?;
    let mut rows = Vec::with_capacity(ladder.len());
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(ladder.len());
    for (j, eta) in ladder.iter().enumerate() {
        let lift_gap = zeta.distance(eta, (0, n))?;
        if let Some(prev) = rows.last().map(|r: &ViscosityRow| r.lift_gap) {
            if !(lift_gap < prev) {
                return invalid(format!("lift gaps do not decrease at rung {j}: {prev} then {lift_gap}"));
            }
        }
        let v = values_for(eta)?;
        let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let value_gap = values.last().map_or(0.0, |prev| sup(prev, &v));
        let max_residual = sup(&v, &limit_values);
        rows.push(ViscosityRow {
            rung: j,
            lift_gap,
            value_gap,
            max_residual,
        });
        values.push(v);
    }
    let passed = if rows.len() < 2 {
        None
    } else {
        Some(rows.windows(2).skip(1).all(|w| w[1].value_gap <= w[0].value_gap + tol))
    };
    Ok(ViscosityReport {
        rows,
        values,
        limit_values,
        passed,
    })
}

/// `|∫ψ(X,γ)dζ − ∫ψ(Y,ν)dη|` over the perturbation size of the two problems.
pub fn rough_cost_stability(
    psi: &dyn SmoothFunction,
    a: &RdeProblem,
    b: &RdeProblem,
    opts: &SolveOptions,
) -> Result<StabilityReport> {
    let n = a.driver.grid().n();
    let ia = rough_integral(&compose(psi, &solve(a, opts)?.path, &a.control)?, (0, n))?;
    let ib = rough_integral(&compose(psi, &solve(b, opts)?.path, &b.control)?, (0, n))?;
    let num = ia.iter().zip(&ib).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    StabilityReport::new(num, perturbation_size(a, b)?)
}
