//! Uniform time grids, sampled paths and the variation norms built on them.
//!
//! Every norm here is computed on grid points only: the discrete path is the
//! object being measured, with no interpolation between samples.
//!
//! The p-variation of a path over a window `[i0, i1]` is
//!
//! ```text
//! ‖X‖_p = ( sup_{i0 ≤ k_0 < … < k_m ≤ i1} Σ_j |X_{k_{j+1}} − X_{k_j}|^p )^{1/p}
//! ```
//!
//! and is evaluated exactly by the O(n²) recursion
//! `best[j] = max_{i<j} best[i] + d(i,j)^p`, which works for any two-parameter
//! distance `d`, not only increments of a one-parameter path.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Uniform grid `t0 = s_0 < s_1 < … < s_n = T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("grid needs at least one interval");
        }
        if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
            return invalid(format!("grid end {t1} must exceed start {t0}"));
        }
        Ok(Self { t0, t1, n })
    }

    /// Grid on `[0, t1]`.
    pub fn uniform(t1: f64, n: usize) -> Result<Self> {
        Self::new(0.0, t1, n)
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t1
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / self.n as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i >= self.n {
            // keep the right end exact; indices past n extrapolate
            self.t1 + (i - self.n) as f64 * self.h()
        } else {
            self.t0 + (self.t1 - self.t0) * (i as f64 / self.n as f64)
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Index of a time that must coincide with a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.h();
        let i = x.round();
        if i < 0.0 || i > self.n as f64 || (x - i).abs() > 1e-9 {
            return Err(Error::GridMismatch(format!(
                "time {t} is not a grid point of [{}, {}] with {} intervals",
                self.t0, self.t1, self.n
            )));
        }
        Ok(i as usize)
    }

    /// Sub-grid on points `i0..=i1`.
    pub fn sub(&self, i0: usize, i1: usize) -> Result<Self> {
        if i1 <= i0 || i1 > self.n {
            return invalid(format!("bad sub-grid {i0}..{i1} of {} intervals", self.n));
        }
        Ok(Self {
            t0: self.time(i0),
            t1: self.time(i1),
            n: i1 - i0,
        })
    }

    /// Same interval, `factor` times more points.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return invalid("refinement factor must be positive");
        }
        Self::new(self.t0, self.t1, self.n * factor)
    }

    /// True when `other` has the same spacing and its points are points of `self`.
    pub fn aligned_with(&self, other: &TimeGrid) -> bool {
        let h = self.h();
        ((other.h() - h).abs() <= 1e-12 * h.max(1.0))
            && self.index_of(other.t0).is_ok()
            && self.index_of(other.t1).is_ok()
    }
}

/// Values of an `R^m`-valued path at each grid point, stored point-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("path dimension must be positive");
        }
        if values.len() != grid.len() * dim {
            return Err(Error::Dimension {
                what: "sampled path values",
                expected: grid.len() * dim,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite path value at flat index {i}"));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn scalar(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, 1, values)
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; grid.len() * dim],
        }
    }

    pub fn from_fn(grid: TimeGrid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for i in 0..grid.len() {
            let v = f(grid.time(i));
            if v.len() != dim {
                return Err(Error::Dimension {
                    what: "path sample",
                    expected: dim,
                    got: v.len(),
                });
            }
            values.extend(v);
        }
        Self::new(grid, dim, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Component `c` as a plain vector.
    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.at(i)[c]).collect()
    }

    pub fn increment_norm(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.at(i), self.at(j));
        a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt()
    }

    pub fn restrict(&self, i0: usize, i1: usize) -> Result<Self> {
        let grid = self.grid.sub(i0, i1)?;
        let values = self.values[i0 * self.dim..(i1 + 1) * self.dim].to_vec();
        Ok(Self {
            grid,
            dim: self.dim,
            values,
        })
    }

    /// Pointwise difference `self − other` on identical grids.
    pub fn minus(&self, other: &SampledPath) -> Result<SampledPath> {
        self.check_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self {
            grid: self.grid,
            dim: self.dim,
            values,
        })
    }

    pub fn sup_distance(&self, other: &SampledPath) -> Result<f64> {
        let d = self.minus(other)?;
        Ok((0..d.len())
            .map(|i| d.at(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max))
    }

    fn check_same_shape(&self, other: &SampledPath) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("paths live on different grids".into()));
        }
        if self.dim != other.dim {
            return Err(Error::Dimension {
                what: "path",
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    /// CSV with header `t,v1,..,vm`; 17 significant digits so values round-trip exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|c| format!("v{c}")));
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![fmt_f64(self.grid.time(i))];
            row.extend(self.at(i).iter().map(|v| fmt_f64(*v)));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the format written by [`SampledPath::write_csv`]; the grid must be uniform.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let dim = rdr.headers()?.len().saturating_sub(1);
        if dim == 0 {
            return invalid("path csv needs a time column and at least one value column");
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parsed: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad number in path csv: {e}")))?;
            if parsed.len() != dim + 1 {
                return invalid("ragged path csv row");
            }
            times.push(parsed[0]);
            values.extend_from_slice(&parsed[1..]);
        }
        if times.len() < 2 {
            return invalid("path csv needs at least two rows");
        }
        let grid = TimeGrid::new(times[0], times[times.len() - 1], times.len() - 1)?;
        for (i, t) in times.iter().enumerate() {
            if (grid.time(i) - t).abs() > 1e-9 * grid.h() {
                return Err(Error::GridMismatch(format!("row {i} breaks uniform spacing")));
            }
        }
        Self::new(grid, dim, values)
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Exact p-variation over points `0..len` for an arbitrary two-parameter distance.
///
/// Returns the sup over sub-partitions of `Σ d(k_j, k_{j+1})^p`, raised to `1/p`.
pub fn pvar_from_distances(len: usize, p: f64, dist: impl Fn(usize, usize) -> f64) -> f64 {
    pvar_power_from_distances(len, p, dist).powf(1.0 / p)
}

/// Same as [`pvar_from_distances`] without the final root, i.e. `‖·‖_p^p`.
pub fn pvar_power_from_distances(len: usize, p: f64, dist: impl Fn(usize, usize) -> f64) -> f64 {
    if len < 2 {
        return 0.0;
    }
    let mut best = vec![0.0f64; len];
    for j in 1..len {
        let mut b = 0.0f64;
        for (i, bi) in best.iter().enumerate().take(j) {
            let d = dist(i, j);
            let v = bi + d.powf(p);
            if v > b {
                b = v;
            }
        }
        best[j] = b;
    }
    best[len - 1]
}

/// Prefix p-variation powers: entry `j` is `‖·‖^p` over points `0..=j`.
pub fn pvar_power_prefixes(len: usize, p: f64, dist: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut best = vec![0.0f64; len];
    for j in 1..len {
        let mut b = 0.0f64;
        for i in 0..j {
            let v = best[i] + dist(i, j).powf(p);
            if v > b {
                b = v;
            }
        }
        // monotone in the window, so keep the running max
        best[j] = b.max(best[j - 1]);
    }
    best
}

fn check_window(path: &SampledPath, window: (usize, usize)) -> Result<()> {
    if window.0 > window.1 || window.1 >= path.len() {
        return invalid(format!(
            "window {:?} outside path with {} points",
            window,
            path.len()
        ));
    }
    Ok(())
}

/// p-variation of `path` over grid points `window.0..=window.1`.
pub fn p_variation(path: &SampledPath, p: f64, window: (usize, usize)) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("p-variation needs p >= 1, got {p}"));
    }
    check_window(path, window)?;
    let (i0, i1) = window;
    Ok(pvar_from_distances(i1 - i0 + 1, p, |i, j| {
        path.increment_norm(i0 + i, i0 + j)
    }))
}

/// α-Hölder seminorm: max over grid pairs of `|γ_t − γ_s| / (t − s)^α`.
pub fn holder_norm(path: &SampledPath, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("Hölder exponent must lie in (0,1], got {alpha}"));
    }
    let g = path.grid();
    let mut m = 0.0f64;
    for i in 0..path.len() {
        for j in i + 1..path.len() {
            let v = path.increment_norm(i, j) / (g.time(j) - g.time(i)).powf(alpha);
            m = m.max(v);
        }
    }
    Ok(m)
}

/// Both sides of `‖X‖_p ≤ n (Σ_i ‖X‖^p_{p;[t_{i-1},t_i]})^{1/p}` for a partition with `n` pieces.
#[derive(Clone, Copy, Debug)]
pub struct PartitionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pieces: usize,
    pub holds: bool,
}

pub fn partition_pvar_inequality_check(
    path: &SampledPath,
    p: f64,
    cuts: &[usize],
) -> Result<PartitionCheck> {
    let last = path.len() - 1;
    let mut pts: Vec<usize> = cuts.iter().copied().filter(|&c| c > 0 && c < last).collect();
    pts.push(0);
    pts.push(last);
    pts.sort_unstable();
    pts.dedup();
    let lhs = p_variation(path, p, (0, last))?;
    let mut sum = 0.0;
    for w in pts.windows(2) {
        sum += p_variation(path, p, (w[0], w[1]))?.powf(p);
    }
    let pieces = pts.len() - 1;
    let rhs = pieces as f64 * sum.powf(1.0 / p);
    Ok(PartitionCheck {
        lhs,
        rhs,
        pieces,
        holds: lhs <= rhs * (1.0 + 1e-12) + 1e-15,
    })
}

/// A control ω on grid index pairs.
#[derive(Clone)]
pub struct ControlFunction {
    grid: TimeGrid,
    eval: Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ControlFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ControlFunction").field("grid", &self.grid).finish()
    }
}

impl ControlFunction {
    pub fn new(grid: TimeGrid, eval: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            grid,
            eval: Arc::new(eval),
        }
    }

    /// ω(s,t) = t − s.
    pub fn time(grid: TimeGrid) -> Self {
        Self::new(grid, move |i, j| grid.time(j) - grid.time(i))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            0.0
        } else {
            (self.eval)(i, j)
        }
    }

    /// Largest `ω(s,u) + ω(u,t) − ω(s,t)` over the given triples (≤ 0 when superadditive).
    pub fn superadditivity_defect(&self, triples: &[(usize, usize, usize)]) -> f64 {
        triples
            .iter()
            .map(|&(s, u, t)| self.value(s, u) + self.value(u, t) - self.value(s, t))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evenly spread grid triples `s < u < t` drawn from at most `k` sample points.
pub fn sample_triples(len: usize, k: usize) -> Vec<(usize, usize, usize)> {
    let pts = sample_points(len, k);
    let mut out = Vec::new();
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            for c in b + 1..pts.len() {
                out.push((pts[a], pts[b], pts[c]));
            }
        }
    }
    out
}

pub(crate) fn sample_points(len: usize, k: usize) -> Vec<usize> {
    if len <= k {
        return (0..len).collect();
    }
    let mut pts: Vec<usize> = (0..k)
        .map(|j| ((j as f64) * (len - 1) as f64 / (k - 1) as f64).round() as usize)
        .collect();
    pts.dedup();
    pts
}
