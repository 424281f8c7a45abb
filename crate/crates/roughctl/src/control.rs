//! Penalised pathwise control: cost functional, lattice value function and DPP check.
//!
//! The horizon `[r, T]` is split into `m` equal decision blocks; on each block
//! the pseudo-control is one point of a finite lattice. The value is the exact
//! minimum over all `|U|^m` sequences, found by depth-first branch and bound.
//! Pruning is strict (`bound > incumbent + slack`) so exact ties survive and the
//! lexicographically smallest index sequence wins.
//!
//! The cost of a sequence is
//!
//! ```text
//! J = Σ_cells f_s(X_mid, ν_mid) h + Σ_cells f₀|u|^q h + ∫ ψ(X, ν) dζ + g(X_T, ν_T)
//! ```
//!
//! with `ν` the memory extension of the history `γ` by the chosen pseudo-control.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::controlled::{compose, compose_point, integral_increment, rough_integral, CompositionTable, SmoothFunction};
use crate::error::{invalid, Error, Result};
use crate::fraccalc::{memory_tail, nu_extend, ACAlphaPath};
use crate::gridpath::{fmt_f64, SampledPath};
use crate::rde::{solve, RdeProblem, SolveOptions, Stepper};
use crate::roughlift::RoughPath;

/// Scalar cost of `(x, γ)`.
pub type CostFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Finite set of pseudo-control values; always contains the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlLattice {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl ControlLattice {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match points.first() {
            Some(p) => p.len(),
            None => return invalid("control lattice is empty"),
        };
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return invalid("lattice points must share a positive dimension");
        }
        if !points.iter().any(|p| p.iter().all(|v| *v == 0.0)) {
            return invalid("control lattice must contain the origin");
        }
        Ok(Self { dim, points })
    }

    /// `count` equally spaced scalars on `[−half_width, half_width]` (`count` odd).
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        if count % 2 == 0 {
            return invalid("a symmetric lattice needs an odd number of points");
        }
        if count == 1 {
            return Self::new(vec![vec![0.0]]);
        }
        let half = (count / 2) as i64;
        let pts = (-half..=half)
            .map(|k| vec![half_width * k as f64 / half as f64])
            .collect();
        Self::new(pts)
    }

    /// Scalars `k · spacing` for `|k| ≤ half_count`.
    pub fn spaced(spacing: f64, half_count: usize) -> Result<Self> {
        let h = half_count as i64;
        Self::new((-h..=h).map(|k| vec![spacing * k as f64]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn zero_index(&self) -> usize {
        self.points.iter().position(|p| p.iter().all(|v| *v == 0.0)).unwrap_or(0)
    }
}

/// Lower bound used to cut branches of the enumeration.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundKind {
    /// No pruning; the plain exhaustive oracle.
    None,
    /// Accumulated cost plus the smallest remaining penalty plus `floor`, where
    /// `floor` bounds the remaining running, rough and terminal cost from below.
    Coercivity { floor: f64 },
    /// Exact cost-to-go for problems whose state path ignores the control, whose
    /// running and rough costs ignore `γ`, and whose terminal cost is
    /// `g(x, γ) = g_x(x) + ⟨w, γ⟩`. The caller asserts that structure.
    Separable { gamma_weight: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub max_steps: usize,
    pub max_lattice: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_steps: 6,
            max_lattice: 9,
        }
    }
}

#[derive(Clone)]
pub struct ControlProblem {
    pub drift: Arc<dyn SmoothFunction>,
    pub diffusion: Arc<dyn SmoothFunction>,
    pub driver: Arc<RoughPath>,
    /// Smooth part `f_s(x, γ)` of the running cost.
    pub running: CostFn,
    /// `ψ(x, γ)` with `d` outputs, integrated against the driver.
    pub rough_cost: Arc<dyn SmoothFunction>,
    pub terminal: CostFn,
    pub alpha: f64,
    pub penalty_weight: f64,
    pub penalty_exponent: f64,
    pub lattice: ControlLattice,
    pub steps: usize,
    pub caps: Caps,
    pub bound: BoundKind,
}

impl std::fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ControlProblem")
            .field("driver", &self.driver)
            .field("alpha", &self.alpha)
            .field("penalty_weight", &self.penalty_weight)
            .field("penalty_exponent", &self.penalty_exponent)
            .field("lattice", &self.lattice.len())
            .field("steps", &self.steps)
            .field("bound", &self.bound)
            .finish()
    }
}

impl ControlProblem {
    fn penalty(&self, u: &[f64]) -> f64 {
        if self.penalty_weight == 0.0 {
            return 0.0;
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.penalty_weight * norm.powf(self.penalty_exponent)
    }

    fn check(&self, x: &[f64], gamma: &ACAlphaPath) -> Result<()> {
        let e = x.len();
        let d = self.driver.dim();
        let k = self.lattice.dim();
        if !(self.alpha > 0.0 && self.alpha < 1.0) || (gamma.alpha() - self.alpha).abs() > 0.0 {
            return invalid("history and problem must share a fractional order in (0,1)");
        }
        if gamma.grid() != self.driver.grid() {
            return Err(Error::GridMismatch("history and driver grids differ".into()));
        }
        let dims = [
            ("history", gamma.dim(), k),
            ("drift state", self.drift.state_dim(), e),
            ("diffusion output", self.diffusion.out_dim(), e * d),
            ("rough cost output", self.rough_cost.out_dim(), d),
            ("rough cost state", self.rough_cost.state_dim(), e),
            ("rough cost control", self.rough_cost.control_dim(), k),
        ];
        for (what, got, expected) in dims {
            if got != expected {
                return Err(Error::Dimension { what, expected, got });
            }
        }
        if self.penalty_weight < 0.0 {
            return invalid("penalty weight must be nonnegative");
        }
        Ok(())
    }

    /// Same problem with a different number of decision blocks.
    pub fn with_steps(&self, steps: usize) -> Self {
        Self {
            steps,
            ..self.clone()
        }
    }
}

/// Parts of a cost evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostBreakdown {
    pub running: f64,
    pub rough: f64,
    pub terminal: f64,
    pub penalty: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn from_parts(running: f64, rough: f64, terminal: f64, penalty: f64) -> Self {
        Self {
            running,
            rough,
            terminal,
            penalty,
            total: running + rough + penalty + terminal,
        }
    }
}

/// `J(r, x, γ, u)` for a pseudo-control `u` sampled on master indices `r..=n`
/// (the value at the last point is ignored).
pub fn cost_functional(
    problem: &ControlProblem,
    r: usize,
    x: &[f64],
    gamma: &ACAlphaPath,
    u: &SampledPath,
) -> Result<CostBreakdown> {
    problem.check(x, gamma)?;
    let n = problem.driver.grid().n();
    if r > n {
        return invalid(format!("start index {r} beyond horizon"));
    }
    if r == n {
        let g = gamma.value(n);
        return Ok(CostBreakdown::from_parts(0.0, 0.0, (problem.terminal)(x, &g), 0.0));
    }
    let ext = nu_extend(gamma, r, n, u)?;
    let nu = ext.tail_path()?;
    let driver = Arc::new(problem.driver.restrict(r, n)?);
    let rde = RdeProblem::new(problem.drift.clone(), problem.diffusion.clone(), driver, nu.clone(), x.to_vec())?;
    let sol = solve(&rde, &SolveOptions::default())?;
    let trace = sol.trace();
    let h = problem.driver.grid().h();
    let e = x.len();
    let k = gamma.dim();
    let mut running = 0.0;
    let mut penalty = 0.0;
    let mut xm = vec![0.0; e];
    let mut gm = vec![0.0; k];
    for c in 0..n - r {
        for i in 0..e {
            xm[i] = 0.5 * (trace.at(c)[i] + trace.at(c + 1)[i]);
        }
        for i in 0..k {
            gm[i] = 0.5 * (nu.at(c)[i] + nu.at(c + 1)[i]);
        }
        running += (problem.running)(&xm, &gm) * h;
        penalty += problem.penalty(u.at(c)) * h;
    }
    let psi = compose(problem.rough_cost.as_ref(), &sol.path, &nu)?;
    let rough = rough_integral(&psi, (0, n - r))?[0];
    let terminal = (problem.terminal)(trace.at(n - r), nu.at(n - r));
    Ok(CostBreakdown::from_parts(running, rough, terminal, penalty))
}

/// Result of the lattice minimisation.
#[derive(Clone, Debug)]
pub struct ValueEstimate {
    pub value: f64,
    /// Lattice index per decision block.
    pub argmin: Vec<usize>,
    pub breakdown: CostBreakdown,
    /// Size of the search space, `|U|^m`.
    pub candidates: f64,
    pub leaves_evaluated: usize,
    pub nodes_expanded: usize,
}

impl ValueEstimate {
    pub fn argmin_string(&self) -> String {
        self.argmin.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// Writes `r,x,value,argmin_seq` rows.
pub fn write_value_csv<W: std::io::Write>(w: W, rows: &[(f64, Vec<f64>, ValueEstimate)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r", "x", "value", "argmin_seq"])?;
    for (r, x, v) in rows {
        let xs = x.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";");
        out.write_record([fmt_f64(*r), xs, fmt_f64(v.value), v.argmin_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
struct State {
    x: Vec<f64>,
    running: f64,
    rough: f64,
    penalty: f64,
    seq: Vec<usize>,
}

impl State {
    fn accumulated(&self) -> f64 {
        self.running + self.rough + self.penalty
    }
}

/// Incremental cost evaluation over decision blocks.
struct Evaluator<'a> {
    prob: &'a ControlProblem,
    r: usize,
    n: usize,
    m: usize,
    block: usize,
    e: usize,
    k: usize,
    d: usize,
    h: f64,
    stepper: Stepper,
    psi_table: Arc<CompositionTable>,
    /// `a(t | r, γ)` for `t = r..=n`.
    memory: Vec<f64>,
    /// `W[t][i]`: kernel mass of block `i` seen from `t`, for `t = r..=n`.
    weights: Vec<f64>,
    /// Penalty per cell for each lattice point.
    cell_penalty: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(prob: &'a ControlProblem, r: usize, gamma: &ACAlphaPath, e: usize) -> Result<Self> {
        let rp = &prob.driver;
        let n = rp.grid().n();
        let m = prob.steps;
        if m == 0 {
            return invalid("at least one decision block is required");
        }
        if (n - r) % m != 0 {
            return invalid(format!("{} remaining cells do not split into {m} equal blocks", n - r));
        }
        let block = (n - r) / m;
        let k = gamma.dim();
        let mut memory = Vec::with_capacity((n - r + 1) * k);
        for t in r..=n {
            memory.extend(memory_tail(gamma, r, t));
        }
        let mut weights = vec![0.0; (n - r + 1) * m];
        for t in r + 1..=n {
            let tt = rp.grid().time(t);
            for c in r..t {
                weights[(t - r) * m + (c - r) / block] += gamma.weight(tt, c);
            }
        }
        let h = rp.grid().h();
        let cell_penalty = (0..prob.lattice.len()).map(|i| prob.penalty(prob.lattice.point(i)) * h).collect();
        let depth = rp.depth();
        Ok(Self {
            prob,
            r,
            n,
            m,
            block,
            e,
            k,
            d: rp.dim(),
            h,
            stepper: Stepper::new(prob.drift.clone(), prob.diffusion.clone(), rp.dim(), depth),
            psi_table: CompositionTable::get(rp.dim(), depth.saturating_sub(1)),
            memory,
            weights,
            cell_penalty,
        })
    }

    fn root(&self, x: &[f64]) -> State {
        State {
            x: x.to_vec(),
            running: 0.0,
            rough: 0.0,
            penalty: 0.0,
            seq: Vec::new(),
        }
    }

    /// `ν_t` given the block choices in `seq` (blocks past `seq.len()` are zero).
    fn nu(&self, t: usize, seq: &[usize], out: &mut [f64]) {
        let k = self.k;
        let off = (t - self.r) * k;
        out.copy_from_slice(&self.memory[off..off + k]);
        let wrow = &self.weights[(t - self.r) * self.m..(t - self.r + 1) * self.m];
        for (i, &ui) in seq.iter().enumerate() {
            let w = wrow[i];
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.prob.lattice.point(ui)) {
                *o += v * w;
            }
        }
    }

    fn advance(&self, s: &State, u: usize) -> State {
        let j = s.seq.len();
        let mut seq = s.seq.clone();
        seq.push(u);
        let (e, k, d) = (self.e, self.k, self.d);
        let rp = &self.prob.driver;
        let mut x = s.x.clone();
        let mut xn = vec![0.0; e];
        let mut nu = vec![0.0; k];
        let mut nun = vec![0.0; k];
        let mut comps = vec![0.0; self.stepper.comps_len()];
        let mut lam = vec![0.0; self.stepper.lam_len()];
        let mut psi = vec![0.0; self.psi_table.words().len() * d];
        let mut inc = vec![0.0; e];
        let mut rough_inc = [0.0f64];
        let mut scratch = Vec::new();
        let mut scratch2 = Vec::new();
        let mut xm = vec![0.0; e];
        let mut gm = vec![0.0; k];
        let (mut running, mut rough, mut penalty) = (s.running, s.rough, s.penalty);
        let start = self.r + j * self.block;
        self.nu(start, &seq, &mut nu);
        for t in start..start + self.block {
            self.stepper.point(&x, &nu, &mut comps, &mut lam, &mut scratch);
            compose_point(self.prob.rough_cost.as_ref(), &self.psi_table, &comps, &nu, &mut psi, &mut scratch2);
            rough_inc[0] = 0.0;
            integral_increment(&psi, self.psi_table.words(), d, rp.cell(t), &mut rough_inc);
            rough += rough_inc[0];
            self.stepper.increment(&x, &nu, &lam, rp.cell(t), self.h, &mut inc);
            for i in 0..e {
                xn[i] = x[i] + inc[i];
            }
            self.nu(t + 1, &seq, &mut nun);
            for i in 0..e {
                xm[i] = 0.5 * (x[i] + xn[i]);
            }
            for i in 0..k {
                gm[i] = 0.5 * (nu[i] + nun[i]);
            }
            running += (self.prob.running)(&xm, &gm) * self.h;
            penalty += self.cell_penalty[u];
            std::mem::swap(&mut x, &mut xn);
            std::mem::swap(&mut nu, &mut nun);
        }
        State {
            x,
            running,
            rough,
            penalty,
            seq,
        }
    }

    fn terminal_nu(&self, seq: &[usize]) -> Vec<f64> {
        let mut nu = vec![0.0; self.k];
        self.nu(self.n, seq, &mut nu);
        nu
    }

    fn finish(&self, s: &State) -> CostBreakdown {
        let nu = self.terminal_nu(&s.seq);
        let terminal = (self.prob.terminal)(&s.x, &nu);
        CostBreakdown::from_parts(s.running, s.rough, terminal, s.penalty)
    }

    fn evaluate(&self, x: &[f64], seq: &[usize]) -> CostBreakdown {
        let mut s = self.root(x);
        for &u in seq {
            s = self.advance(&s, u);
        }
        self.finish(&s)
    }
}

/// Precomputed pieces of a lower bound.
enum Bound {
    None,
    Coercivity {
        floor: f64,
        /// Smallest penalty of blocks `j..m`, indexed by `j`.
        tail_penalty: Vec<f64>,
    },
    Separable {
        w: Vec<f64>,
        /// u-independent cost of blocks `j..m` plus `g_x(X_T)`, indexed by `j`.
        rest: Vec<f64>,
        /// Smallest `penalty + ⟨w, U⟩ W[T][i]` summed over blocks `j..m`.
        tail: Vec<f64>,
        memory_t: Vec<f64>,
    },
}

impl Bound {
    fn prepare(ev: &Evaluator, x: &[f64]) -> Bound {
        let lat = &ev.prob.lattice;
        let m = ev.m;
        match &ev.prob.bound {
            BoundKind::None => Bound::None,
            BoundKind::Coercivity { floor } => {
                let min_pen = ev.cell_penalty.iter().copied().fold(f64::INFINITY, f64::min) * ev.block as f64;
                let tail_penalty = (0..=m).map(|j| (m - j) as f64 * min_pen).collect();
                Bound::Coercivity {
                    floor: *floor,
                    tail_penalty,
                }
            }
            BoundKind::Separable { gamma_weight } => {
                let zero = lat.zero_index();
                let mut per_block = Vec::with_capacity(m);
                let mut s = ev.root(x);
                for _ in 0..m {
                    let next = ev.advance(&s, zero);
                    per_block.push((next.running + next.rough) - (s.running + s.rough));
                    s = next;
                }
                let nu_t = ev.terminal_nu(&s.seq);
                let gx = (ev.prob.terminal)(&s.x, &nu_t) - dot(gamma_weight, &nu_t);
                let mut rest = vec![gx; m + 1];
                for j in (0..m).rev() {
                    rest[j] = rest[j + 1] + per_block[j];
                }
                let wt = &ev.weights[(ev.n - ev.r) * m..(ev.n - ev.r + 1) * m];
                let mut tail = vec![0.0; m + 1];
                for j in (0..m).rev() {
                    let best = (0..lat.len())
                        .map(|u| ev.cell_penalty[u] * ev.block as f64 + dot(gamma_weight, lat.point(u)) * wt[j])
                        .fold(f64::INFINITY, f64::min);
                    tail[j] = tail[j + 1] + best;
                }
                let off = (ev.n - ev.r) * ev.k;
                Bound::Separable {
                    w: gamma_weight.clone(),
                    rest,
                    tail,
                    memory_t: ev.memory[off..off + ev.k].to_vec(),
                }
            }
        }
    }

    fn lower(&self, ev: &Evaluator, s: &State) -> f64 {
        let j = s.seq.len();
        match self {
            Bound::None => f64::NEG_INFINITY,
            Bound::Coercivity { floor, tail_penalty } => s.accumulated() + tail_penalty[j] + floor,
            Bound::Separable {
                w,
                rest,
                tail,
                memory_t,
            } => {
                let wt = &ev.weights[(ev.n - ev.r) * ev.m..(ev.n - ev.r + 1) * ev.m];
                let mut nu = memory_t.clone();
                for (i, &u) in s.seq.iter().enumerate() {
                    for (o, v) in nu.iter_mut().zip(ev.prob.lattice.point(u)) {
                        *o += v * wt[i];
                    }
                }
                s.accumulated() + rest[j] + dot(w, &nu) + tail[j]
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fetch_min(a: &AtomicU64, v: f64) {
    let mut cur = a.load(Ordering::Relaxed);
    while v < f64::from_bits(cur) {
        match a.compare_exchange_weak(cur, v.to_bits(), Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => return,
            Err(c) => cur = c,
        }
    }
}

fn slack(v: f64) -> f64 {
    1e-12 * (1.0 + v.abs())
}

struct Search<'a, 'b> {
    ev: &'b Evaluator<'a>,
    bound: &'b Bound,
    incumbent: &'b AtomicU64,
    leaves: &'b AtomicUsize,
    nodes: &'b AtomicUsize,
}

type Best = Option<(f64, Vec<usize>)>;

fn better(cand: f64, seq: &[usize], best: &Best) -> bool {
    match best {
        None => true,
        Some((v, s)) => cand < *v || (cand == *v && seq < s.as_slice()),
    }
}

impl Search<'_, '_> {
    fn children(&self, s: &State) -> Vec<(f64, usize, State)> {
        self.nodes.fetch_add(1, Ordering::Relaxed);
        let mut kids: Vec<(f64, usize, State)> = (0..self.ev.prob.lattice.len())
            .map(|u| {
                let c = self.ev.advance(s, u);
                (self.bound.lower(self.ev, &c), u, c)
            })
            .collect();
        if !matches!(self.bound, Bound::None) {
            kids.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        kids
    }

    fn visit(&self, lb: f64, s: State, best: &mut Best) {
        let inc = f64::from_bits(self.incumbent.load(Ordering::Relaxed));
        if lb > inc + slack(inc) {
            return;
        }
        if s.seq.len() == self.ev.m {
            self.leaves.fetch_add(1, Ordering::Relaxed);
            let v = self.ev.finish(&s).total;
            if better(v, &s.seq, best) {
                *best = Some((v, s.seq.clone()));
            }
            fetch_min(self.incumbent, v);
            return;
        }
        for (clb, _, c) in self.children(&s) {
            self.visit(clb, c, best);
        }
    }
}

/// Exact minimum of the cost over all lattice sequences.
pub fn value_function(problem: &ControlProblem, r: usize, x: &[f64], gamma: &ACAlphaPath) -> Result<ValueEstimate> {
    problem.check(x, gamma)?;
    let n = problem.driver.grid().n();
    if r > n {
        return invalid(format!("start index {r} beyond horizon"));
    }
    if r == n {
        let g = gamma.value(n);
        let b = CostBreakdown::from_parts(0.0, 0.0, (problem.terminal)(x, &g), 0.0);
        return Ok(ValueEstimate {
            value: b.total,
            argmin: Vec::new(),
            breakdown: b,
            candidates: 1.0,
            leaves_evaluated: 1,
            nodes_expanded: 0,
        });
    }
    let m = problem.steps;
    let lat = problem.lattice.len();
    if m > problem.caps.max_steps || lat > problem.caps.max_lattice {
        return Err(Error::CapExceeded(format!(
            "{m} steps over {lat} lattice points exceeds caps of {} steps and {} points",
            problem.caps.max_steps, problem.caps.max_lattice
        )));
    }
    let ev = Evaluator::new(problem, r, gamma, x.len())?;
    let bound = Bound::prepare(&ev, x);
    let incumbent = AtomicU64::new(f64::INFINITY.to_bits());
    let leaves = AtomicUsize::new(0);
    let nodes = AtomicUsize::new(0);
    let search = Search {
        ev: &ev,
        bound: &bound,
        incumbent: &incumbent,
        leaves: &leaves,
        nodes: &nodes,
    };
    let root = ev.root(x);
    let kids = search.children(&root);
    let results: Vec<Best> = if m >= 2 {
        kids.into_par_iter()
            .map(|(lb, _, c)| {
                let mut best = None;
                search.visit(lb, c, &mut best);
                best
            })
            .collect()
    } else {
        kids.into_iter()
            .map(|(lb, _, c)| {
                let mut best = None;
                search.visit(lb, c, &mut best);
                best
            })
            .collect()
    };
    let mut best: Best = None;
    for (v, s) in results.into_iter().flatten() {
        if better(v, &s, &best) {
            best = Some((v, s));
        }
    }
    let (_, argmin) = best.ok_or_else(|| Error::InvalidArgument("search produced no candidate".into()))?;
    let breakdown = ev.evaluate(x, &argmin);
    Ok(ValueEstimate {
        value: breakdown.total,
        argmin,
        breakdown,
        candidates: (lat as f64).powi(m as i32),
        leaves_evaluated: leaves.into_inner(),
        nodes_expanded: nodes.into_inner(),
    })
}

/// Cost of one explicit block sequence through the incremental evaluator.
pub fn sequence_cost(problem: &ControlProblem, r: usize, x: &[f64], gamma: &ACAlphaPath, seq: &[usize]) -> Result<CostBreakdown> {
    problem.check(x, gamma)?;
    let ev = Evaluator::new(problem, r, gamma, x.len())?;
    if seq.len() != ev.m || seq.iter().any(|&u| u >= problem.lattice.len()) {
        return invalid("sequence length or lattice index out of range");
    }
    Ok(ev.evaluate(x, seq))
}

/// Block sequence expanded to a per-cell pseudo-control on master indices `r..=n`.
pub fn sequence_control(problem: &ControlProblem, r: usize, seq: &[usize]) -> Result<SampledPath> {
    let n = problem.driver.grid().n();
    let m = seq.len();
    if m == 0 || (n - r) % m != 0 {
        return invalid("sequence does not split the horizon into equal blocks");
    }
    let block = (n - r) / m;
    let k = problem.lattice.dim();
    let grid = problem.driver.grid().sub(r, n)?;
    let mut values = Vec::with_capacity(grid.len() * k);
    for c in 0..=n - r {
        let b = (c / block).min(m - 1);
        values.extend_from_slice(problem.lattice.point(seq[b]));
    }
    SampledPath::new(grid, k, values)
}

/// Both sides of the dynamic programming identity at an intermediate block boundary.
#[derive(Clone, Debug)]
pub struct DppReport {
    pub direct: f64,
    pub recursive: f64,
    pub gap: f64,
}

/// `|v(r,x,γ) − min_{u on [r,t]} (cost on [r,t] + v(t, X_t, ν))|`.
pub fn dpp_check(problem: &ControlProblem, r: usize, x: &[f64], gamma: &ACAlphaPath, t: usize) -> Result<DppReport> {
    let direct = value_function(problem, r, x, gamma)?.value;
    let n = problem.driver.grid().n();
    let m = problem.steps;
    if t < r || t > n || (n - r) % m != 0 || (t - r) % ((n - r) / m) != 0 {
        return invalid(format!("intermediate index {t} is not a block boundary"));
    }
    let block = (n - r) / m;
    let j = (t - r) / block;
    if j == 0 {
        let recursive = value_function(problem, r, x, gamma)?.value;
        return Ok(DppReport {
            direct,
            recursive,
            gap: (direct - recursive).abs(),
        });
    }
    let ev = Evaluator::new(problem, r, gamma, x.len())?;
    let lat = problem.lattice.len();
    let inner_problem = problem.with_steps(m - j);
    let mut recursive = f64::INFINITY;
    let total = lat.pow(j as u32);
    for code in 0..total {
        let mut seq = Vec::with_capacity(j);
        let mut c = code;
        for _ in 0..j {
            seq.push(c % lat);
            c /= lat;
        }
        seq.reverse();
        let mut s = ev.root(x);
        for &u in &seq {
            s = ev.advance(&s, u);
        }
        // history continued by the prefix, as a fresh AC^α path
        let mut u = gamma.truncated(r).pseudo_control().clone();
        for cell in r..t {
            u.at_mut(cell).copy_from_slice(problem.lattice.point(seq[(cell - r) / block]));
        }
        let hist = ACAlphaPath::new(gamma.alpha(), gamma.base().to_vec(), u)?;
        let inner = if t == n {
            (problem.terminal)(&s.x, &hist.value(n))
        } else {
            value_function(&inner_problem, t, &s.x, &hist)?.value
        };
        recursive = recursive.min(s.accumulated() + inner);
    }
    Ok(DppReport {
        direct,
        recursive,
        gap: (direct - recursive).abs(),
    })
}

/// `⌊p⌋(p + 1)`, the growth exponent of the rough cost in `‖γ‖`.
pub fn penalty_exponent_threshold(p: f64) -> f64 {
    p.floor() * (p + 1.0)
}

/// Default `κ = 1/(1 − α + ⌊p⌋/p)`.
pub fn default_kappa(alpha: f64, p: f64) -> f64 {
    1.0 / (1.0 - alpha + p.floor() / p)
}

/// Whether `q > ⌊p⌋(p+1) ∨ κ/(κ−1)`, with the threshold.
pub fn penalty_admissible(q: f64, alpha: f64, p: f64) -> (bool, f64) {
    let kappa = default_kappa(alpha, p);
    let conj = if kappa > 1.0 { kappa / (kappa - 1.0) } else { f64::INFINITY };
    let thr = penalty_exponent_threshold(p).max(conj);
    (q > thr, thr)
}

#[derive(Clone, Debug)]
pub struct DegeneracyReport {
    pub scales: Vec<usize>,
    pub unpenalized: Vec<f64>,
    pub penalized: Vec<f64>,
}

impl DegeneracyReport {
    /// `v_{i} − v_{i+1}` between successive rungs.
    pub fn gaps(values: &[f64]) -> Vec<f64> {
        values.windows(2).map(|w| w[0] - w[1]).collect()
    }
}

/// Values over lattices `spacing·{−s·h, …, s·h}` for each scale `s`, with and without penalty.
pub fn degeneracy_probe(
    problem: &ControlProblem,
    r: usize,
    x: &[f64],
    gamma: &ACAlphaPath,
    spacing: f64,
    base_half_count: usize,
    scales: &[usize],
) -> Result<DegeneracyReport> {
    let mut unpenalized = Vec::new();
    let mut penalized = Vec::new();
    for &s in scales {
        let lattice = ControlLattice::spaced(spacing, base_half_count * s)?;
        let caps = Caps {
            max_steps: problem.caps.max_steps,
            max_lattice: problem.caps.max_lattice.max(lattice.len()),
        };
        let pen = ControlProblem {
            lattice: lattice.clone(),
            caps,
            ..problem.clone()
        };
        let free = ControlProblem {
            penalty_weight: 0.0,
            bound: BoundKind::None,
            ..pen.clone()
        };
        penalized.push(value_function(&pen, r, x, gamma)?.value);
        unpenalized.push(value_function(&free, r, x, gamma)?.value);
    }
    Ok(DegeneracyReport {
        scales: scales.to_vec(),
        unpenalized,
        penalized,
    })
}
