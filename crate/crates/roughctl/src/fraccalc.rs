//! Riemann–Liouville operators on piecewise-constant pseudo-controls.
//!
//! A path in the AC^α class is stored as `γ = a + I^α u` with `u` constant on
//! each grid cell `[s_i, s_{i+1})`. Against that `u` the kernel integral is
//! closed form per cell,
//!
//! ```text
//! (1/Γ(α)) ∫_{s_i}^{s_{i+1}} (t − s)^{α−1} ds = ((t − s_i)^α − (t − s_{i+1})^α) / Γ(α + 1)
//! ```
//!
//! so no singular quadrature enters anywhere. The memory functional
//! `a(t | r, γ)` keeps only the cells before `r`, and an extension
//! `ν^{r,γ,z,u}` adds a fresh pseudo-control tail on `[r, z]`.

use std::io::{Read, Write};

use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::gridpath::{fmt_f64, p_variation, SampledPath, TimeGrid};

/// `((t − s0)^α − (t − s1)^α) / Γ(α+1)` for `s0 < s1 ≤ t`.
pub fn cell_weight(alpha: f64, gamma_a1: f64, t: f64, s0: f64, s1: f64) -> f64 {
    let a = (t - s0).max(0.0);
    let b = (t - s1).max(0.0);
    (a.powf(alpha) - b.powf(alpha)) / gamma_a1
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("fractional order must lie in (0,1), got {alpha}"));
    }
    Ok(())
}

/// `I^α_{r+} u (t)` with `u` piecewise constant on the cells of its grid.
pub fn rl_integral(u: &SampledPath, alpha: f64, r: usize, t: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if t < r {
        return invalid(format!("query index {t} precedes base index {r}"));
    }
    if t >= u.len() {
        return invalid(format!("query index {t} beyond grid"));
    }
    let g = u.grid();
    let ga1 = gamma(alpha + 1.0);
    let tt = g.time(t);
    let mut out = vec![0.0; u.dim()];
    for i in r..t {
        let w = cell_weight(alpha, ga1, tt, g.time(i), g.time(i + 1));
        for (o, v) in out.iter_mut().zip(u.at(i)) {
            *o += v * w;
        }
    }
    Ok(out)
}

/// `γ = a + I^α_{0+} u` with `u` piecewise constant on grid cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ACAlphaPath {
    alpha: f64,
    base: Vec<f64>,
    u: SampledPath,
    gamma_a1: f64,
}

impl ACAlphaPath {
    pub fn new(alpha: f64, base: Vec<f64>, u: SampledPath) -> Result<Self> {
        check_alpha(alpha)?;
        if base.len() != u.dim() {
            return Err(Error::Dimension {
                what: "base value",
                expected: u.dim(),
                got: base.len(),
            });
        }
        Ok(Self {
            alpha,
            base,
            u,
            gamma_a1: gamma(alpha + 1.0),
        })
    }

    /// Constant path `γ ≡ a`.
    pub fn constant(alpha: f64, base: Vec<f64>, grid: TimeGrid) -> Result<Self> {
        let dim = base.len();
        Self::new(alpha, base, SampledPath::zeros(grid, dim))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn pseudo_control(&self) -> &SampledPath {
        &self.u
    }

    pub fn grid(&self) -> &TimeGrid {
        self.u.grid()
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// Value of the kernel weight of cell `c` seen from time `t`.
    pub fn weight(&self, t: f64, c: usize) -> f64 {
        let g = self.grid();
        cell_weight(self.alpha, self.gamma_a1, t, g.time(c), g.time(c + 1))
    }

    /// `γ_t` at grid index `t`.
    pub fn value(&self, t: usize) -> Vec<f64> {
        self.value_using_cells(t, t)
    }

    /// `γ_0 + Σ_{c < cells} u_c · weight(t, c)`.
    fn value_using_cells(&self, t: usize, cells: usize) -> Vec<f64> {
        let tt = self.grid().time(t);
        let mut out = self.base.clone();
        for c in 0..cells.min(t) {
            let w = self.weight(tt, c);
            for (o, v) in out.iter_mut().zip(self.u.at(c)) {
                *o += v * w;
            }
        }
        out
    }

    /// The reconstructed path on every grid point.
    pub fn to_sampled(&self) -> SampledPath {
        let mut values = Vec::with_capacity(self.u.len() * self.dim());
        for t in 0..self.u.len() {
            values.extend(self.value(t));
        }
        SampledPath::new(*self.grid(), self.dim(), values).expect("finite reconstruction")
    }

    /// Pseudo-control equal to this one on cells `< r` and zero afterwards.
    pub fn truncated(&self, r: usize) -> ACAlphaPath {
        let mut u = self.u.clone();
        for c in r..u.len() {
            u.at_mut(c).iter_mut().for_each(|v| *v = 0.0);
        }
        Self { u, ..self.clone() }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        let k = self.dim();
        let mut head = vec!["alpha".to_string()];
        head.extend((1..=k).map(|c| format!("a{c}")));
        out.write_record(&head)?;
        let mut meta = vec![fmt_f64(self.alpha)];
        meta.extend(self.base.iter().map(|v| fmt_f64(*v)));
        out.write_record(&meta)?;
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=k).map(|c| format!("u{c}")));
        out.write_record(&cols)?;
        for i in 0..self.u.len() {
            let mut row = vec![fmt_f64(self.grid().time(i))];
            row.extend(self.u.at(i).iter().map(|v| fmt_f64(*v)));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(false)
            .from_reader(r);
        let rows: Vec<Vec<String>> = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(|s| s.trim().to_string()).collect()))
            .collect::<std::result::Result<_, _>>()?;
        if rows.len() < 5 || rows[0].first().map(String::as_str) != Some("alpha") {
            return invalid("AC^alpha csv must start with an alpha,a1..ak header");
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad number {s:?}: {e}")))
        };
        let alpha = num(&rows[1][0])?;
        let base: Vec<f64> = rows[1][1..].iter().map(|s| num(s)).collect::<Result<_>>()?;
        let body: String = rows[2..].iter().map(|r| r.join(",") + "\n").collect();
        let u = SampledPath::read_csv(body.as_bytes())?;
        Self::new(alpha, base, u)
    }
}

/// Stored-mode Caputo derivative: the pseudo-control sample at `t`.
pub fn caputo_differential(gamma: &ACAlphaPath, t: usize) -> Vec<f64> {
    gamma.u.at(t).to_vec()
}

/// `I^β` of the piecewise-linear interpolant of `g`, evaluated at every grid point.
pub fn frac_integral_linear(g: &SampledPath, beta: f64) -> Result<SampledPath> {
    if !(beta > 0.0 && beta < 1.0) {
        return invalid(format!("order must lie in (0,1), got {beta}"));
    }
    let grid = *g.grid();
    let h = grid.h();
    let gb = gamma(beta);
    let dim = g.dim();
    let mut out = SampledPath::zeros(grid, dim);
    for k in 1..g.len() {
        let tk = grid.time(k);
        for i in 0..k {
            let a = tk - grid.time(i);
            let b = (tk - grid.time(i + 1)).max(0.0);
            // ∫ τ^{β−1} and ∫ (a − τ) τ^{β−1} over τ ∈ [b, a]
            let i0 = (a.powf(beta) - b.powf(beta)) / beta;
            let i1 = a * i0 - (a.powf(beta + 1.0) - b.powf(beta + 1.0)) / (beta + 1.0);
            let (gi, gj) = (g.at(i), g.at(i + 1));
            for c in 0..dim {
                let v = (gi[c] * i0 + (gj[c] - gi[c]) / h * i1) / gb;
                out.at_mut(k)[c] += v;
            }
        }
    }
    Ok(out)
}

/// Verification-mode derivative `D^α(γ − γ_0)`: `I^{1−α}` of the piecewise-linear
/// interpolant followed by central differences (one-sided at both ends).
pub fn caputo_numeric(path: &SampledPath, alpha: f64) -> Result<SampledPath> {
    check_alpha(alpha)?;
    let base = path.at(0).to_vec();
    let mut shifted = path.clone();
    for i in 0..shifted.len() {
        for (v, b) in shifted.at_mut(i).iter_mut().zip(&base) {
            *v -= b;
        }
    }
    let f = frac_integral_linear(&shifted, 1.0 - alpha)?;
    let n = f.len() - 1;
    let h = path.grid().h();
    let mut d = SampledPath::zeros(*path.grid(), path.dim());
    for i in 0..=n {
        let (lo, hi, span) = match i {
            0 => (0, 1, h),
            _ if i == n => (n - 1, n, h),
            _ => (i - 1, i + 1, 2.0 * h),
        };
        for c in 0..path.dim() {
            d.at_mut(i)[c] = (f.at(hi)[c] - f.at(lo)[c]) / span;
        }
    }
    Ok(d)
}

/// Discrepancy between the stored pseudo-control and the verification-mode derivative.
#[derive(Clone, Copy, Debug)]
pub struct CaputoCheck {
    pub max_error: f64,
    pub at: usize,
}

/// Compares on interior grid points with index `≥ from`.
///
/// The reconstructed path behaves like `t^α` near the origin, which the
/// piecewise-linear interpolant cannot follow, so the comparison window is
/// supplied by the caller.
pub fn caputo_discrepancy(gamma: &ACAlphaPath, from: usize) -> Result<CaputoCheck> {
    let d = caputo_numeric(&gamma.to_sampled(), gamma.alpha)?;
    let n = d.len() - 1;
    let mut check = CaputoCheck {
        max_error: 0.0,
        at: from.max(1),
    };
    for i in from.max(1)..n {
        let e = d
            .at(i)
            .iter()
            .zip(gamma.u.at(i))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if e > check.max_error {
            check = CaputoCheck { max_error: e, at: i };
        }
    }
    Ok(check)
}

/// `a(t | r, γ)`: the future implied by the history on `[0, r]` with the control switched off.
pub fn memory_tail(gamma: &ACAlphaPath, r: usize, t: usize) -> Vec<f64> {
    if t <= r {
        gamma.value(t)
    } else {
        gamma.value_using_cells(t, r)
    }
}

/// `ν^{r,γ,z,u}`: the history of `γ` on `[0, r]` continued by a new pseudo-control on `[r, z]`.
#[derive(Clone, Debug)]
pub struct MemoryExtension {
    r: usize,
    z: usize,
    source: ACAlphaPath,
    tail: SampledPath,
}

pub fn nu_extend(gamma: &ACAlphaPath, r: usize, z: usize, tail_u: &SampledPath) -> Result<MemoryExtension> {
    let n = gamma.grid().n();
    if r > z || z > n {
        return invalid(format!("need r ≤ z ≤ n, got r={r}, z={z}, n={n}"));
    }
    if tail_u.dim() != gamma.dim() {
        return Err(Error::Dimension {
            what: "tail pseudo-control",
            expected: gamma.dim(),
            got: tail_u.dim(),
        });
    }
    if r < z {
        let expect = gamma.grid().sub(r, z)?;
        let tg = tail_u.grid();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        if tg.n() != expect.n() || !close(tg.start(), expect.start()) || !close(tg.end(), expect.end()) {
            return Err(Error::GridMismatch(format!(
                "tail grid [{}, {}] with {} cells does not match master cells {r}..{z}",
                tg.start(),
                tg.end(),
                tg.n()
            )));
        }
    }
    Ok(MemoryExtension {
        r,
        z,
        source: gamma.clone(),
        tail: tail_u.clone(),
    })
}

impl MemoryExtension {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn z(&self) -> usize {
        self.z
    }

    /// Value at grid index `t ≤ z` of the master grid.
    pub fn value(&self, t: usize) -> Vec<f64> {
        if t <= self.r {
            return self.source.value(t);
        }
        let mut out = memory_tail(&self.source, self.r, t);
        let tt = self.source.grid().time(t);
        for c in self.r..t.min(self.z) {
            let w = self.source.weight(tt, c);
            for (o, v) in out.iter_mut().zip(self.tail.at(c - self.r)) {
                *o += v * w;
            }
        }
        out
    }

    /// Values on master indices `r..=z`, as a path on that sub-grid.
    pub fn tail_path(&self) -> Result<SampledPath> {
        if self.z == self.r {
            return invalid("empty extension window");
        }
        let grid = self.source.grid().sub(self.r, self.z)?;
        let mut values = Vec::with_capacity(grid.len() * self.source.dim());
        for t in self.r..=self.z {
            values.extend(self.value(t));
        }
        SampledPath::new(grid, self.source.dim(), values)
    }

    /// The concatenated pseudo-control as an AC^α path on the full master grid
    /// (zero beyond `z`).
    pub fn as_ac_alpha(&self) -> ACAlphaPath {
        let mut u = self.source.truncated(self.r).u;
        for c in self.r..self.z {
            u.at_mut(c).copy_from_slice(self.tail.at(c - self.r));
        }
        ACAlphaPath {
            u,
            ..self.source.clone()
        }
    }
}

/// Right side of the tail estimate for `|ν_t − γ_t|` on `[r, t]`.
///
/// `c_tilde` bounds `∫_r^t |u|^q`, `k` bounds the pseudo-control of `γ`. The
/// Hölder constant is `((q−1)/(qα−1))^{(q−1)/q}`, which needs `qα > 1`.
pub fn bound_nu_rhs(alpha: f64, q: f64, c_tilde: f64, k: f64, span: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(q * alpha > 1.0) {
        return invalid(format!("tail estimate needs q·α > 1, got q={q}, α={alpha}"));
    }
    let holder = ((q - 1.0) / (q * alpha - 1.0)).powf((q - 1.0) / q);
    Ok(c_tilde.powf(1.0 / q) / gamma(alpha) * holder * span.powf((q * alpha - 1.0) / q)
        + 2.0 / gamma(alpha + 1.0) * k * span.powf(alpha))
}

/// The two sides of the fractional variation estimate on a window, without the constant.
#[derive(Clone, Copy, Debug)]
pub struct FracVariation {
    pub lhs: f64,
    pub rhs: f64,
}

/// `lhs = ‖γ‖^{p/N}_{p/N;[r,t]}`, `rhs` the bracket times `|t−r|^{(p/N)(α−1+1/κ)}`.
pub fn frac_variation_bound(gamma: &ACAlphaPath, p: f64, kappa: f64, window: (usize, usize)) -> Result<FracVariation> {
    let n_floor = p.floor();
    let alpha = gamma.alpha;
    if !(alpha > n_floor / p && alpha < 1.0) {
        return invalid(format!("need α in (⌊p⌋/p, 1), got α={alpha}, p={p}"));
    }
    let kmax = 1.0 / (1.0 - alpha + n_floor / p);
    if !(kappa > 1.0 && kappa <= kmax) {
        return invalid(format!("κ must lie in (1, {kmax}], got {kappa}"));
    }
    let (r, t) = window;
    let path = gamma.to_sampled();
    let e = p / n_floor;
    let lhs = p_variation(&path, e, (r, t))?.powf(e);
    let conj = kappa / (kappa - 1.0);
    let h = gamma.grid().h();
    let lq = |from: usize, to: usize| -> f64 {
        (from..to)
            .map(|c| gamma.u.at(c).iter().map(|v| v * v).sum::<f64>().sqrt().powf(conj) * h)
            .sum()
    };
    let expo = p * (kappa - 1.0) / (n_floor * kappa);
    let bracket = lq(r, t).powf(expo) + lq(0, r).powf(expo);
    let span = gamma.grid().time(t) - gamma.grid().time(r);
    let rhs = bracket * span.powf(e * (alpha - 1.0 + 1.0 / kappa));
    Ok(FracVariation { lhs, rhs })
}
