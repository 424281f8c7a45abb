//! Words, shuffles, the truncated tensor algebra and signature lifts.
//!
//! Level `k` of a truncated tensor over `R^d` is stored densely as `d^k`
//! numbers; the entry of word `(b_1, …, b_k)` sits at the base-`d` number
//! `b_1 b_2 … b_k`. Letters are 0-based internally and printed 1-based.
//!
//! A piecewise-linear path is lifted cell by cell with the tensor exponential
//! `exp(Δ) = Σ_k Δ^{⊗k}/k!`; increments over longer windows come from Chen's
//! product and are memoised by grid index pair.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::error::{invalid, Error, Result};
use crate::gridpath::{pvar_power_from_distances, sample_points, ControlFunction, SampledPath, TimeGrid};

pub const MAX_DEPTH: usize = 4;
pub const MAX_DIM: usize = 4;

/// A word over the alphabet `{0, …, d−1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: usize) -> Self {
        Word(vec![l as u8])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation `(self, other)`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Parses the dot-joined 1-based form, e.g. `"1.2.1"`; `""` is the empty word.
    pub fn parse(s: &str) -> Result<Word> {
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let mut v = Vec::new();
        for part in s.split('.') {
            let l: usize = part
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad word {s:?}")))?;
            if l == 0 || l > 255 {
                return invalid(format!("letter {l} out of range in {s:?}"));
            }
            v.push((l - 1) as u8);
        }
        Ok(Word(v))
    }

    /// Position inside its level (base-`d` number).
    pub fn level_index(&self, d: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * d + l as usize)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| (l + 1).to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// All words of length `0..=max_len`, ordered by length then lexicographically.
#[derive(Clone, Debug)]
pub struct WordIndex {
    d: usize,
    max_len: usize,
    offsets: Vec<usize>,
    words: Vec<Word>,
}

impl WordIndex {
    pub fn new(d: usize, max_len: usize) -> Self {
        let mut offsets = vec![0];
        let mut words = Vec::new();
        for k in 0..=max_len {
            let count = d.pow(k as u32);
            for idx in 0..count {
                words.push(word_from_index(d, k, idx));
            }
            offsets.push(offsets[k] + count);
        }
        Self {
            d,
            max_len,
            offsets,
            words,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &Word {
        &self.words[i]
    }

    pub fn index(&self, w: &Word) -> usize {
        self.offsets[w.len()] + w.level_index(self.d)
    }

    /// Range of flat indices holding words of length `k`.
    pub fn level_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }
}

fn word_from_index(d: usize, k: usize, mut idx: usize) -> Word {
    let mut v = vec![0u8; k];
    for slot in v.iter_mut().rev() {
        *slot = (idx % d) as u8;
        idx /= d;
    }
    Word(v)
}

/// Shuffle product `ε ⧢ δ` as a multiset (repeated entries carry multiplicity).
pub fn shuffle_set(e: &Word, d: &Word) -> Vec<Word> {
    if e.is_empty() {
        return vec![d.clone()];
    }
    if d.is_empty() {
        return vec![e.clone()];
    }
    let (ea, ae) = (Word(e.0[..e.len() - 1].to_vec()), e.0[e.len() - 1]);
    let (db, bd) = (Word(d.0[..d.len() - 1].to_vec()), d.0[d.len() - 1]);
    let mut out = Vec::new();
    for mut w in shuffle_set(&ea, d) {
        w.0.push(ae);
        out.push(w);
    }
    for mut w in shuffle_set(e, &db) {
        w.0.push(bd);
        out.push(w);
    }
    out
}

/// Shuffle of several words, `ε_1 ⧢ … ⧢ ε_k`, with multiplicity.
pub fn multi_shuffle(words: &[Word]) -> Vec<Word> {
    let mut acc = vec![Word::empty()];
    for w in words {
        acc = acc.iter().flat_map(|a| shuffle_set(a, w)).collect();
    }
    acc
}

/// Element of the truncated tensor algebra `T^N(R^d)`, dense per level.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedTensor {
    d: usize,
    levels: Vec<Vec<f64>>,
}

impl TruncatedTensor {
    pub fn zero(d: usize, depth: usize) -> Self {
        Self {
            d,
            levels: (0..=depth).map(|k| vec![0.0; d.pow(k as u32)]).collect(),
        }
    }

    pub fn unit(d: usize, depth: usize) -> Self {
        let mut t = Self::zero(d, depth);
        t.levels[0][0] = 1.0;
        t
    }

    /// Tensor exponential of a level-one increment.
    pub fn exp(delta: &[f64], depth: usize) -> Self {
        let d = delta.len();
        let mut t = Self::unit(d, depth);
        for k in 1..=depth {
            let prev = t.levels[k - 1].clone();
            let cur = &mut t.levels[k];
            let inv = 1.0 / k as f64;
            for (i, pv) in prev.iter().enumerate() {
                for (l, dl) in delta.iter().enumerate() {
                    cur[i * d + l] = pv * dl * inv;
                }
            }
        }
        t
    }

    /// Builds from explicit level data (level 0 included).
    pub fn from_levels(d: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        for (k, l) in levels.iter().enumerate() {
            if l.len() != d.pow(k as u32) {
                return Err(Error::Dimension {
                    what: "tensor level",
                    expected: d.pow(k as u32),
                    got: l.len(),
                });
            }
        }
        Ok(Self { d, levels })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.levels[k]
    }

    /// Panics if `w` is longer than the truncation depth or uses a letter `≥ d`.
    pub fn get(&self, w: &Word) -> f64 {
        self.levels[w.len()][w.level_index(self.d)]
    }

    /// Chen product `self ⊗ other`.
    pub fn mul(&self, other: &TruncatedTensor) -> TruncatedTensor {
        let d = self.d;
        let depth = self.depth().min(other.depth());
        let mut out = Self::zero(d, depth);
        for k in 0..=depth {
            let dst = &mut out.levels[k];
            for i in 0..=k {
                let a = &self.levels[i];
                let b = &other.levels[k - i];
                let stride = b.len();
                for (ia, va) in a.iter().enumerate() {
                    if *va == 0.0 {
                        continue;
                    }
                    let base = ia * stride;
                    for (ib, vb) in b.iter().enumerate() {
                        dst[base + ib] += va * vb;
                    }
                }
            }
        }
        out
    }

    /// Euclidean norm of level `k`.
    pub fn level_norm(&self, k: usize) -> f64 {
        self.levels[k].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean norm of level `k` of `self − other`.
    pub fn level_distance(&self, other: &TruncatedTensor, k: usize) -> f64 {
        self.levels[k]
            .iter()
            .zip(&other.levels[k])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Dilation: level `k` scaled by `δ^k`.
    pub fn dilate(&self, delta: f64) -> TruncatedTensor {
        let mut t = self.clone();
        for (k, l) in t.levels.iter_mut().enumerate() {
            let s = delta.powi(k as i32);
            l.iter_mut().for_each(|v| *v *= s);
        }
        t
    }

    /// Largest entrywise gap `|self − other|` over levels `1..`.
    pub fn max_abs_diff(&self, other: &TruncatedTensor) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .skip(1)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Max violation found by an algebraic check, with the place it occurred.
#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub max_violation: f64,
    pub checked: usize,
    pub worst: Option<(usize, usize, usize, Word)>,
}

impl CheckReport {
    fn record(&mut self, v: f64, at: (usize, usize, usize), w: &Word) {
        self.checked += 1;
        if self.worst.is_none() || v > self.max_violation {
            self.max_violation = v;
            self.worst = Some((at.0, at.1, at.2, w.clone()));
        }
    }
}

/// Two-parameter family of truncated-tensor increments on a grid.
pub struct RoughPath {
    grid: TimeGrid,
    d: usize,
    depth: usize,
    p: f64,
    origin: Vec<f64>,
    cells: Arc<Vec<TruncatedTensor>>,
    offset: usize,
    cache: RwLock<HashMap<(usize, usize), Arc<TruncatedTensor>>>,
}

impl Clone for RoughPath {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            d: self.d,
            depth: self.depth,
            p: self.p,
            origin: self.origin.clone(),
            cells: self.cells.clone(),
            offset: self.offset,
            cache: RwLock::new(self.cache.read().clone()),
        }
    }
}

impl fmt::Debug for RoughPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RoughPath")
            .field("grid", &self.grid)
            .field("d", &self.d)
            .field("depth", &self.depth)
            .field("p", &self.p)
            .finish()
    }
}

fn depth_for(p: f64) -> Result<usize> {
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("roughness p must be ≥ 1, got {p}"));
    }
    let n = p.floor() as usize;
    if n > MAX_DEPTH {
        return invalid(format!("truncation level {n} exceeds the supported maximum {MAX_DEPTH}"));
    }
    Ok(n)
}

/// Canonical lift of the piecewise-linear interpolation of `eta`, truncated at `⌊p⌋`.
pub fn signature_lift(eta: &SampledPath, p: f64) -> Result<RoughPath> {
    let depth = depth_for(p)?;
    let d = eta.dim();
    if d > MAX_DIM {
        return invalid(format!("driver dimension {d} exceeds the supported maximum {MAX_DIM}"));
    }
    let mut cells = Vec::with_capacity(eta.len() - 1);
    for i in 0..eta.len() - 1 {
        let delta: Vec<f64> = eta.at(i + 1).iter().zip(eta.at(i)).map(|(b, a)| b - a).collect();
        cells.push(TruncatedTensor::exp(&delta, depth));
    }
    Ok(RoughPath::assemble(*eta.grid(), p, eta.at(0).to_vec(), cells))
}

impl RoughPath {
    /// Builds from explicit per-cell tensors; no geometric structure is assumed.
    pub fn from_cells(grid: TimeGrid, p: f64, origin: Vec<f64>, cells: Vec<TruncatedTensor>) -> Result<Self> {
        let depth = depth_for(p)?;
        if cells.len() != grid.n() {
            return Err(Error::Dimension {
                what: "cell tensors",
                expected: grid.n(),
                got: cells.len(),
            });
        }
        for c in &cells {
            if c.d() != origin.len() || c.depth() != depth {
                return invalid("cell tensor shape does not match origin dimension and ⌊p⌋");
            }
        }
        Ok(Self::assemble(grid, p, origin, cells))
    }

    fn assemble(grid: TimeGrid, p: f64, origin: Vec<f64>, cells: Vec<TruncatedTensor>) -> Self {
        Self {
            grid,
            d: origin.len(),
            depth: p.floor() as usize,
            p,
            origin,
            cells: Arc::new(cells),
            offset: 0,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Tensor of cell `[s_i, s_{i+1}]`.
    pub fn cell(&self, i: usize) -> &TruncatedTensor {
        &self.cells[self.offset + i]
    }

    /// Increment `ζ_{s_i s_j}`, memoised.
    pub fn increment(&self, i: usize, j: usize) -> Arc<TruncatedTensor> {
        assert!(i <= j && j <= self.grid.n(), "increment ({i},{j}) outside grid");
        if let Some(t) = self.cache.read().get(&(i, j)) {
            return t.clone();
        }
        let t = Arc::new(self.fold(i, j));
        self.cache.write().entry((i, j)).or_insert_with(|| t.clone()).clone()
    }

    fn fold(&self, i: usize, j: usize) -> TruncatedTensor {
        let mut acc = TruncatedTensor::unit(self.d, self.depth);
        for c in i..j {
            acc = acc.mul(self.cell(c));
        }
        acc
    }

    /// Value `ζ^β_{s_i s_j}`.
    pub fn value(&self, i: usize, j: usize, w: &Word) -> f64 {
        self.increment(i, j).get(w)
    }

    /// Replaces a memoised increment; later reads of `(i, j)` see `t`.
    pub fn override_increment(&self, i: usize, j: usize, t: TruncatedTensor) {
        self.cache.write().insert((i, j), Arc::new(t));
    }

    /// Level-one trace `ζ_0 + ζ^{(·)}_{0 t}` as a path.
    pub fn trace(&self) -> SampledPath {
        let mut values = Vec::with_capacity(self.grid.len() * self.d);
        let mut cur = self.origin.clone();
        values.extend_from_slice(&cur);
        for i in 0..self.grid.n() {
            for (c, v) in cur.iter_mut().zip(self.cell(i).level(1)) {
                *c += v;
            }
            values.extend_from_slice(&cur);
        }
        SampledPath::new(self.grid, self.d, values).expect("finite trace")
    }

    /// The lift restricted to points `i0..=i1`, sharing the cell tensors.
    pub fn restrict(&self, i0: usize, i1: usize) -> Result<RoughPath> {
        let grid = self.grid.sub(i0, i1)?;
        let mut origin = self.origin.clone();
        for c in 0..i0 {
            for (o, v) in origin.iter_mut().zip(self.cell(c).level(1)) {
                *o += v;
            }
        }
        Ok(Self {
            grid,
            d: self.d,
            depth: self.depth,
            p: self.p,
            origin,
            cells: self.cells.clone(),
            offset: self.offset + i0,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Level `k` scaled by `δ^k` on every cell.
    pub fn dilate(&self, delta: f64) -> RoughPath {
        let cells = (0..self.grid.n()).map(|i| self.cell(i).dilate(delta)).collect();
        let origin = self.origin.iter().map(|v| v * delta).collect();
        Self::assemble(self.grid, self.p, origin, cells)
    }

    /// Chen identity residual over all triples of a spread-out sample of grid points.
    pub fn chen_check(&self) -> CheckReport {
        let pts = sample_points(self.grid.len(), 16);
        let mut triples = Vec::new();
        for a in 0..pts.len() {
            for b in a..pts.len() {
                for c in b..pts.len() {
                    triples.push((pts[a], pts[b], pts[c]));
                }
            }
        }
        self.chen_check_triples(&triples)
    }

    pub fn chen_check_triples(&self, triples: &[(usize, usize, usize)]) -> CheckReport {
        let idx = WordIndex::new(self.d, self.depth);
        let mut rep = CheckReport::default();
        for &(s, u, t) in triples {
            let whole = self.increment(s, t);
            let prod = self.increment(s, u).mul(&self.increment(u, t));
            for k in 1..=self.depth {
                for (pos, (a, b)) in whole.level(k).iter().zip(prod.level(k)).enumerate() {
                    let w = idx.word(idx.level_range(k).start + pos);
                    rep.record((a - b).abs(), (s, u, t), w);
                }
            }
        }
        rep
    }

    /// Shuffle identity residual over pairs of a spread-out sample of grid points.
    pub fn shuffle_check(&self) -> CheckReport {
        let pts = sample_points(self.grid.len(), 16);
        let mut pairs = Vec::new();
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                pairs.push((pts[a], pts[b]));
            }
        }
        self.shuffle_check_pairs(&pairs)
    }

    pub fn shuffle_check_pairs(&self, pairs: &[(usize, usize)]) -> CheckReport {
        let table = shuffle_table(self.d, self.depth);
        let mut rep = CheckReport::default();
        for &(s, t) in pairs {
            let z = self.increment(s, t);
            for (e, dl, sh) in &table {
                let lhs = z.get(e) * z.get(dl);
                let rhs: f64 = sh.iter().map(|w| z.get(w)).sum();
                rep.record((lhs - rhs).abs(), (s, s, t), &e.concat(dl));
            }
        }
        rep
    }

    /// Level-wise distance matrices over points `i0..=i1`, either of `self` or of
    /// `self − other`. Entry `[k-1][a * len + b]` holds level `k` for the pair `(a, b)`.
    fn level_distances(&self, other: Option<&RoughPath>, i0: usize, i1: usize) -> Vec<Vec<f64>> {
        let len = i1 - i0 + 1;
        let mut out = vec![vec![0.0; len * len]; self.depth];
        for a in 0..len {
            let mut acc = TruncatedTensor::unit(self.d, self.depth);
            let mut acc_o = other.map(|_| TruncatedTensor::unit(self.d, self.depth));
            for b in a + 1..len {
                acc = acc.mul(self.cell(i0 + b - 1));
                if let (Some(o), Some(ao)) = (other, acc_o.as_mut()) {
                    *ao = ao.mul(o.cell(i0 + b - 1));
                }
                for k in 1..=self.depth {
                    out[k - 1][a * len + b] = match &acc_o {
                        Some(ao) => acc.level_distance(ao, k),
                        None => acc.level_norm(k),
                    };
                }
            }
        }
        out
    }

    fn check_window(&self, window: (usize, usize)) -> Result<()> {
        if window.0 > window.1 || window.1 > self.grid.n() {
            return invalid(format!("window {window:?} outside grid of {} cells", self.grid.n()));
        }
        Ok(())
    }

    /// `Σ_k ‖ζ^k‖_{p/k;[s,t]}` with each level measured in the Euclidean norm.
    pub fn pvar_norm(&self, window: (usize, usize)) -> Result<f64> {
        Ok(self.level_pvar(window)?.iter().sum())
    }

    /// The per-level terms `‖ζ^k‖_{p/k;[s,t]}`, `k = 1..=N`.
    pub fn level_pvar(&self, window: (usize, usize)) -> Result<Vec<f64>> {
        self.check_window(window)?;
        let (i0, i1) = window;
        let len = i1 - i0 + 1;
        let dist = self.level_distances(None, i0, i1);
        Ok((1..=self.depth)
            .map(|k| {
                let q = self.p / k as f64;
                pvar_power_from_distances(len, q, |a, b| dist[k - 1][a * len + b]).powf(1.0 / q)
            })
            .collect())
    }

    /// Inhomogeneous p-variation distance `Σ_k ‖ζ^k − η^k‖_{p/k}` between two lifts on one grid.
    pub fn distance(&self, other: &RoughPath, window: (usize, usize)) -> Result<f64> {
        self.check_window(window)?;
        if self.grid != other.grid || self.d != other.d || self.depth != other.depth {
            return Err(Error::GridMismatch("rough paths differ in grid, dimension or level".into()));
        }
        let (i0, i1) = window;
        let len = i1 - i0 + 1;
        let dist = self.level_distances(Some(other), i0, i1);
        Ok((1..=self.depth)
            .map(|k| {
                let q = self.p / k as f64;
                pvar_power_from_distances(len, q, |a, b| dist[k - 1][a * len + b]).powf(1.0 / q)
            })
            .sum())
    }

    /// `‖ζ‖_{p;[i0,j]}` for every `j` in `i0..=i1`.
    pub fn prefix_pvar_norms(&self, i0: usize, i1: usize) -> Vec<f64> {
        let len = i1 - i0 + 1;
        let dist = self.level_distances(None, i0, i1);
        let mut total = vec![0.0; len];
        for k in 1..=self.depth {
            let q = self.p / k as f64;
            let pre = crate::gridpath::pvar_power_prefixes(len, q, |a, b| dist[k - 1][a * len + b]);
            for (t, v) in total.iter_mut().zip(pre) {
                *t += v.powf(1.0 / q);
            }
        }
        total
    }

    /// `ω(s,t) = (t − s) + Σ_k ‖ζ^k‖^{p/k}_{p/k;[s,t]}`, evaluated lazily per pair.
    pub fn control_function(&self) -> ControlFunction {
        let n = self.grid.n();
        let len = n + 1;
        let dist = Arc::new(self.level_distances(None, 0, n));
        let grid = self.grid;
        let (p, depth) = (self.p, self.depth);
        ControlFunction::new(grid, move |i, j| {
            let mut w = grid.time(j) - grid.time(i);
            for k in 1..=depth {
                let q = p / k as f64;
                w += pvar_power_from_distances(j - i + 1, q, |a, b| dist[k - 1][(i + a) * len + i + b]);
            }
            w
        })
    }

    /// `sup_{β, s<t} |ζ^β_{st}|^{|β|/N} / ω(s,t)` over grid pairs.
    pub fn normalization_factor(&self, omega: &ControlFunction) -> f64 {
        let per = self.level_sups(omega);
        per.iter().fold(0.0, |m, &(_, v)| f64::max(m, v))
    }

    fn level_sups(&self, omega: &ControlFunction) -> Vec<(usize, f64)> {
        let n = self.grid.n();
        let mut sups = vec![0.0f64; self.depth];
        for i in 0..n {
            for j in i + 1..=n {
                let w = omega.value(i, j);
                let z = self.increment(i, j);
                for k in 1..=self.depth {
                    let m = z.level(k).iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let e = k as f64 / self.depth as f64;
                    let v = if w > 0.0 { m.powf(e) / w } else if m > 0.0 { f64::INFINITY } else { 0.0 };
                    sups[k - 1] = sups[k - 1].max(v);
                }
            }
        }
        sups.into_iter().enumerate().map(|(k, v)| (k + 1, v)).collect()
    }

    /// Largest dilation `δ ≤ 1` after which the normalization factor against `omega` is ≤ 1.
    pub fn normalizing_dilation(&self, omega: &ControlFunction) -> f64 {
        let n = self.depth as f64;
        self.level_sups(omega)
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(k, s)| s.powf(-n / (k * k) as f64))
            .fold(1.0, f64::min)
    }
}

/// For every pair of nonempty words with total length ≤ `depth`: `(ε, δ, ε ⧢ δ)`.
pub fn shuffle_table(d: usize, depth: usize) -> Vec<(Word, Word, Vec<Word>)> {
    let idx = WordIndex::new(d, depth);
    let mut out = Vec::new();
    for e in idx.words().iter().filter(|w| !w.is_empty()) {
        for dl in idx.words().iter().filter(|w| !w.is_empty()) {
            if e.len() + dl.len() <= depth {
                out.push((e.clone(), dl.clone(), shuffle_set(e, dl)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffle_of_two_letters() {
        let s = shuffle_set(&Word::letter(0), &Word::letter(1));
        assert_eq!(s, vec![Word(vec![1, 0]), Word(vec![0, 1])]);
    }

    #[test]
    fn shuffle_with_empty_word() {
        assert_eq!(shuffle_set(&Word::letter(0), &Word::empty()), vec![Word::letter(0)]);
    }

    #[test]
    fn word_display_and_parse() {
        let w = Word(vec![0, 1, 0]);
        assert_eq!(w.to_string(), "1.2.1");
        assert_eq!(Word::parse("1.2.1").unwrap(), w);
        assert!(Word::parse("0.1").is_err());
    }

    #[test]
    fn single_segment_level_two() {
        let t = TruncatedTensor::exp(&[0.3, -0.7], 2);
        assert!((t.get(&Word(vec![0, 1])) - 0.3 * -0.7 / 2.0).abs() < 1e-16);
    }

    #[test]
    fn depth_above_four_rejected() {
        let g = TimeGrid::uniform(1.0, 2).unwrap();
        let p = SampledPath::zeros(g, 1);
        assert!(signature_lift(&p, 5.0).is_err());
    }

    #[test]
    fn word_index_round_trip() {
        let idx = WordIndex::new(3, 3);
        for (i, w) in idx.words().iter().enumerate() {
            assert_eq!(idx.index(w), i);
        }
        assert_eq!(idx.len(), 1 + 3 + 9 + 27);
    }
}
