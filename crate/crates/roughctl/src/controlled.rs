//! Controlled rough paths, composition with smooth maps and rough integrals.
//!
//! A path controlled by `ζ` carries components `X̄_β` for every word with
//! `|β| ≤ N−1`; the empty word is the trace. Its remainders are
//!
//! ```text
//! R^β_{st} = X̄_{β,t} − Σ_{|ε| ≤ N−1−|β|} X̄_{(ε,β),s} ζ^ε_{st}
//! ```
//!
//! Composition follows the Faà di Bruno form on words:
//!
//! ```text
//! φ(X̄)_β = Σ_k (1/k!) Σ_{ε_1,…,ε_k nonempty} #{β in ε_1 ⧢ … ⧢ ε_k} · D^kφ[X̄_{ε_1}, …, X̄_{ε_k}]
//! ```
//!
//! and the rough integral of an `L(R^d, R^u)`-valued path is the compensated sum
//! `Σ_cells Σ_{|ε| ≤ N−1} Σ_l Ȳ_ε[·, l] ζ^{(ε,l)}` on the finest grid.

mod smooth;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use parking_lot::Mutex;

pub use smooth::{derivative_mismatch, FnField, SmoothFunction};

use crate::error::{invalid, Error, Result};
use crate::gridpath::{pvar_from_distances, SampledPath};
use crate::roughlift::{multi_shuffle, RoughPath, TruncatedTensor, Word, WordIndex};

/// Component values of a controlled path, point-major then word then target coordinate.
#[derive(Clone, Debug)]
pub struct ControlledPath {
    reference: Arc<RoughPath>,
    target: usize,
    words: Arc<WordIndex>,
    data: Vec<f64>,
}

impl ControlledPath {
    pub fn new(reference: Arc<RoughPath>, target: usize, data: Vec<f64>) -> Result<Self> {
        let words = word_index(reference.dim(), reference.depth().saturating_sub(1));
        let expect = reference.grid().len() * words.len() * target;
        if data.len() != expect {
            return Err(Error::Dimension {
                what: "controlled path data",
                expected: expect,
                got: data.len(),
            });
        }
        Ok(Self {
            reference,
            target,
            words,
            data,
        })
    }

    /// Trace `x` with every Gubinelli derivative zero.
    pub fn from_trace(reference: Arc<RoughPath>, x: &SampledPath) -> Result<Self> {
        if x.grid() != reference.grid() {
            return Err(Error::GridMismatch("trace and reference grids differ".into()));
        }
        let target = x.dim();
        let words = word_index(reference.dim(), reference.depth().saturating_sub(1));
        let stride = words.len() * target;
        let mut data = vec![0.0; x.len() * stride];
        for i in 0..x.len() {
            data[i * stride..i * stride + target].copy_from_slice(x.at(i));
        }
        Self::new(reference, target, data)
    }

    /// The driver's own trace with derivative `X̄_{(l)} = e_l`.
    pub fn driver(reference: Arc<RoughPath>) -> Result<Self> {
        let trace = reference.trace();
        let d = reference.dim();
        let mut out = Self::from_trace(reference, &trace)?;
        if out.words.max_len() >= 1 {
            for i in 0..out.len() {
                for l in 0..d {
                    let w = out.words.index(&Word::letter(l));
                    out.component_mut(i, w)[l] = 1.0;
                }
            }
        }
        Ok(out)
    }

    pub fn reference(&self) -> &Arc<RoughPath> {
        &self.reference
    }

    pub fn target_dim(&self) -> usize {
        self.target
    }

    pub fn words(&self) -> &WordIndex {
        &self.words
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.reference.grid().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn stride(&self) -> usize {
        self.words.len() * self.target
    }

    /// All components at grid point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        let s = self.stride();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn component(&self, i: usize, word: usize) -> &[f64] {
        let s = self.stride();
        let at = i * s + word * self.target;
        &self.data[at..at + self.target]
    }

    pub fn component_mut(&mut self, i: usize, word: usize) -> &mut [f64] {
        let s = self.stride();
        let at = i * s + word * self.target;
        &mut self.data[at..at + self.target]
    }

    pub fn trace(&self) -> SampledPath {
        let mut values = Vec::with_capacity(self.len() * self.target);
        for i in 0..self.len() {
            values.extend_from_slice(self.component(i, 0));
        }
        SampledPath::new(*self.reference.grid(), self.target, values).expect("finite trace")
    }

    /// Component `word` as a path.
    pub fn component_path(&self, word: usize) -> SampledPath {
        let mut values = Vec::with_capacity(self.len() * self.target);
        for i in 0..self.len() {
            values.extend_from_slice(self.component(i, word));
        }
        SampledPath::new(*self.reference.grid(), self.target, values).expect("finite component")
    }

    /// `R^β_{st}` for the word at flat index `word`.
    pub fn remainder(&self, word: usize, s: usize, t: usize) -> Vec<f64> {
        let z = self.reference.increment(s, t);
        self.remainder_with(word, s, t, &z)
    }

    fn remainder_with(&self, word: usize, s: usize, t: usize, z: &TruncatedTensor) -> Vec<f64> {
        let beta = self.words.word(word).clone();
        let mut out = self.component(t, word).to_vec();
        let max_e = self.words.max_len() - beta.len();
        for e_len in 0..=max_e {
            for e_idx in self.words.level_range(e_len) {
                let eps = self.words.word(e_idx);
                let coeff = z.get(eps);
                if coeff == 0.0 {
                    continue;
                }
                let joined = self.words.index(&eps.concat(&beta));
                for (o, v) in out.iter_mut().zip(self.component(s, joined)) {
                    *o -= v * coeff;
                }
            }
        }
        out
    }
}

fn word_index(d: usize, max_len: usize) -> Arc<WordIndex> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<WordIndex>>>> = OnceLock::new();
    let map = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    map.lock()
        .entry((d, max_len))
        .or_insert_with(|| Arc::new(WordIndex::new(d, max_len)))
        .clone()
}

/// Precomputed Faà di Bruno terms for words up to a given length.
#[derive(Debug)]
pub struct CompositionTable {
    words: Arc<WordIndex>,
    /// `terms[β]`: `(coefficient, word indices of ε_1..ε_k)`.
    terms: Vec<Vec<(f64, Vec<usize>)>>,
}

impl CompositionTable {
    pub fn get(d: usize, max_len: usize) -> Arc<CompositionTable> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<CompositionTable>>>> = OnceLock::new();
        let map = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = map.lock().get(&(d, max_len)) {
            return t.clone();
        }
        let t = Arc::new(Self::build(d, max_len));
        map.lock().entry((d, max_len)).or_insert(t).clone()
    }

    fn build(d: usize, max_len: usize) -> Self {
        let words = word_index(d, max_len);
        let mut acc: Vec<HashMap<Vec<usize>, f64>> = vec![HashMap::new(); words.len()];
        let mut tuple = Vec::new();
        Self::enumerate(&words, max_len, &mut tuple, &mut acc);
        let terms = acc
            .into_iter()
            .map(|m| {
                let mut v: Vec<(f64, Vec<usize>)> = m.into_iter().map(|(k, c)| (c, k)).collect();
                v.sort_by(|a, b| a.1.cmp(&b.1));
                v
            })
            .collect();
        Self { words, terms }
    }

    fn enumerate(words: &WordIndex, budget: usize, tuple: &mut Vec<usize>, acc: &mut [HashMap<Vec<usize>, f64>]) {
        if !tuple.is_empty() {
            let ws: Vec<Word> = tuple.iter().map(|&i| words.word(i).clone()).collect();
            let fact: f64 = (1..=tuple.len()).map(|v| v as f64).product();
            for beta in multi_shuffle(&ws) {
                *acc[words.index(&beta)].entry(tuple.clone()).or_insert(0.0) += 1.0 / fact;
            }
        }
        for len in 1..=budget {
            for idx in words.level_range(len) {
                tuple.push(idx);
                Self::enumerate(words, budget - len, tuple, acc);
                tuple.pop();
            }
        }
    }

    pub fn words(&self) -> &WordIndex {
        &self.words
    }

    pub fn terms(&self, beta: usize) -> &[(f64, Vec<usize>)] {
        &self.terms[beta]
    }
}

/// Composition at a single point.
///
/// `comps` holds the state components word-major (`e` numbers per word);
/// `out` receives the composed components word-major (`φ.out_dim()` per word).
pub fn compose_point(
    phi: &dyn SmoothFunction,
    table: &CompositionTable,
    comps: &[f64],
    g: &[f64],
    out: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let e = phi.state_dim();
    let m = phi.out_dim();
    let x = &comps[..e];
    phi.eval(x, g, &mut out[..m]);
    scratch.resize(m, 0.0);
    let mut dirs: Vec<&[f64]> = Vec::with_capacity(table.words.max_len());
    for beta in 1..table.words.len() {
        let dst = &mut out[beta * m..(beta + 1) * m];
        dst.iter_mut().for_each(|v| *v = 0.0);
        for (coef, tuple) in &table.terms[beta] {
            dirs.clear();
            dirs.extend(tuple.iter().map(|&w| &comps[w * e..(w + 1) * e]));
            phi.derivative(x, g, &dirs, scratch);
            for (o, s) in dst.iter_mut().zip(scratch.iter()) {
                *o += coef * s;
            }
        }
    }
}

/// `φ(X̄, γ)` as a path controlled by the same reference; `γ` has zero Gubinelli derivative.
pub fn compose(phi: &dyn SmoothFunction, xbar: &ControlledPath, gamma: &SampledPath) -> Result<ControlledPath> {
    let rp = xbar.reference();
    let need = rp.depth().saturating_sub(1);
    if phi.order() < need {
        return invalid(format!("composition needs {need} state derivatives, function supplies {}", phi.order()));
    }
    if gamma.grid() != rp.grid() {
        return Err(Error::GridMismatch("control path and reference grids differ".into()));
    }
    if phi.state_dim() != xbar.target_dim() {
        return Err(Error::Dimension {
            what: "composition state",
            expected: phi.state_dim(),
            got: xbar.target_dim(),
        });
    }
    if phi.control_dim() != gamma.dim() {
        return Err(Error::Dimension {
            what: "composition control",
            expected: phi.control_dim(),
            got: gamma.dim(),
        });
    }
    let table = CompositionTable::get(rp.dim(), need);
    let m = phi.out_dim();
    let stride = table.words.len() * m;
    let mut data = vec![0.0; xbar.len() * stride];
    let mut scratch = Vec::new();
    for i in 0..xbar.len() {
        compose_point(phi, &table, xbar.point(i), gamma.at(i), &mut data[i * stride..(i + 1) * stride], &mut scratch);
    }
    ControlledPath::new(rp.clone(), m, data)
}

/// Adds `Σ_{|ε| ≤ N−1} Σ_l Ȳ_ε[row·d + l] ζ^{(ε,l)}` for one increment `z` into `out`.
pub fn integral_increment(comps: &[f64], words: &WordIndex, d: usize, z: &TruncatedTensor, out: &mut [f64]) {
    let rows = out.len();
    let width = rows * d;
    for w in 0..words.len() {
        let eps = words.word(w);
        let level = z.level(eps.len() + 1);
        let base = eps.level_index(d) * d;
        let y = &comps[w * width..(w + 1) * width];
        for (row, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for l in 0..d {
                s += y[row * d + l] * level[base + l];
            }
            *o += s;
        }
    }
}

fn integrand_rows(y: &ControlledPath) -> Result<usize> {
    let d = y.reference().dim();
    if y.target_dim() % d != 0 {
        return invalid(format!("integrand width {} is not a multiple of driver dimension {d}", y.target_dim()));
    }
    Ok(y.target_dim() / d)
}

/// `∫_s^t Ȳ dζ` over grid points `window.0..=window.1`.
pub fn rough_integral(y: &ControlledPath, window: (usize, usize)) -> Result<Vec<f64>> {
    let rows = integrand_rows(y)?;
    let (s, t) = window;
    if s > t || t >= y.len() {
        return Err(Error::GridMismatch(format!("window {window:?} outside the integrand grid")));
    }
    let rp = y.reference();
    let mut out = vec![0.0; rows];
    for c in s..t {
        integral_increment(y.point(c), y.words(), rp.dim(), rp.cell(c), &mut out);
    }
    Ok(out)
}

/// Running integral `t ↦ ∫_0^t Ȳ dζ` as a path.
pub fn rough_integral_path(y: &ControlledPath) -> Result<SampledPath> {
    let rows = integrand_rows(y)?;
    let rp = y.reference();
    let mut cur = vec![0.0; rows];
    let mut values = cur.clone();
    for c in 0..y.len() - 1 {
        integral_increment(y.point(c), y.words(), rp.dim(), rp.cell(c), &mut cur);
        values.extend_from_slice(&cur);
    }
    SampledPath::new(*rp.grid(), rows, values)
}

/// Fine compensated sum, the same sum on the 2×-coarsened partition, and their gap.
#[derive(Clone, Debug)]
pub struct IntegralReport {
    pub value: Vec<f64>,
    pub coarse: Vec<f64>,
    pub gap: f64,
}

pub fn rough_integral_report(y: &ControlledPath, window: (usize, usize)) -> Result<IntegralReport> {
    let value = rough_integral(y, window)?;
    let rows = value.len();
    let rp = y.reference();
    let mut coarse = vec![0.0; rows];
    let mut c = window.0;
    while c < window.1 {
        let next = (c + 2).min(window.1);
        integral_increment(y.point(c), y.words(), rp.dim(), &rp.increment(c, next), &mut coarse);
        c = next;
    }
    let gap = value.iter().zip(&coarse).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(IntegralReport { value, coarse, gap })
}

/// One row of a remainder table.
#[derive(Clone, Debug)]
pub struct RemainderRow {
    pub word: Word,
    pub level: usize,
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct RemainderTable {
    pub rows: Vec<RemainderRow>,
    /// `|X̄_s| + Σ_β ‖R^β‖_{p/(N−|β|)}`.
    pub controlled_norm: f64,
    /// `max_{|β| ≤ k} ‖R^β‖ + ‖X‖_p` for `k = 0..N−1`.
    pub rx: Vec<f64>,
}

impl RemainderTable {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["word", "level", "norm"])?;
        for r in &self.rows {
            out.write_record([r.word.to_string(), r.level.to_string(), crate::gridpath::fmt_f64(r.norm)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Remainder variation norms over grid points `window.0..=window.1`.
pub fn remainder_table(x: &ControlledPath, window: (usize, usize)) -> Result<RemainderTable> {
    let (s, t) = window;
    if s > t || t >= x.len() {
        return Err(Error::GridMismatch(format!("window {window:?} outside the path grid")));
    }
    let rp = x.reference();
    let n_top = rp.depth().max(1);
    let p = rp.p();
    let len = t - s + 1;
    let nw = x.words().len();
    // |R^β_{ij}| for all pairs, one row sweep per start point
    let mut dist = vec![vec![0.0; len * len]; nw];
    for a in 0..len {
        let mut z = TruncatedTensor::unit(rp.dim(), rp.depth());
        for b in a + 1..len {
            z = z.mul(rp.cell(s + b - 1));
            for (w, dw) in dist.iter_mut().enumerate() {
                let r = x.remainder_with(w, s + a, s + b, &z);
                dw[a * len + b] = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            }
        }
    }
    let mut rows = Vec::with_capacity(nw);
    for (w, dw) in dist.iter().enumerate() {
        let word = x.words().word(w).clone();
        let q = p / (n_top - word.len()) as f64;
        let norm = pvar_from_distances(len, q, |a, b| dw[a * len + b]);
        let level = word.len();
        rows.push(RemainderRow { word, level, norm });
    }
    let head = x.point(s).iter().map(|v| v * v).sum::<f64>().sqrt();
    let controlled_norm = head + rows.iter().map(|r| r.norm).sum::<f64>();
    let trace = x.trace();
    let xp = crate::gridpath::p_variation(&trace, p, (s, t))?;
    let rx = (0..n_top)
        .map(|k| {
            rows.iter().filter(|r| r.level <= k).map(|r| r.norm).fold(0.0, f64::max) + xp
        })
        .collect();
    Ok(RemainderTable {
        rows,
        controlled_norm,
        rx,
    })
}

/// `‖X̄ − Ȳ‖`: `|X̄_0 − Ȳ_0| + Σ_β ‖R^{X,β} − R^{Y,β}‖_{p/(N−|β|)}` for paths on one grid.
pub fn controlled_distance(x: &ControlledPath, y: &ControlledPath) -> Result<f64> {
    if x.reference().grid() != y.reference().grid() || x.target_dim() != y.target_dim() || x.words().len() != y.words().len() {
        return Err(Error::GridMismatch("controlled paths are not comparable".into()));
    }
    let (rx, ry) = (x.reference(), y.reference());
    let len = x.len();
    let p = rx.p();
    let n_top = rx.depth().max(1);
    let nw = x.words().len();
    let mut dist = vec![vec![0.0; len * len]; nw];
    for a in 0..len {
        let mut zx = TruncatedTensor::unit(rx.dim(), rx.depth());
        let mut zy = TruncatedTensor::unit(ry.dim(), ry.depth());
        for b in a + 1..len {
            zx = zx.mul(rx.cell(b - 1));
            zy = zy.mul(ry.cell(b - 1));
            for (w, dw) in dist.iter_mut().enumerate() {
                let r1 = x.remainder_with(w, a, b, &zx);
                let r2 = y.remainder_with(w, a, b, &zy);
                dw[a * len + b] = r1.iter().zip(&r2).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
            }
        }
    }
    let head = x.point(0).iter().zip(y.point(0)).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    let mut total = head;
    for (w, dw) in dist.iter().enumerate() {
        let q = p / (n_top - x.words().word(w).len()) as f64;
        total += pvar_from_distances(len, q, |a, b| dw[a * len + b]);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_for_square_matches_hand_expansion() {
        // d = 1, words up to length 2: φ(X̄)_{11} = Dφ X̄_{11} + D²φ[X̄_1, X̄_1]
        let t = CompositionTable::get(1, 2);
        let w11 = t.words().index(&Word(vec![0, 0]));
        let w1 = t.words().index(&Word(vec![0]));
        let terms = t.terms(w11);
        assert_eq!(terms.len(), 2);
        assert!(terms.iter().any(|(c, tu)| *c == 1.0 && tu == &vec![w11]));
        assert!(terms.iter().any(|(c, tu)| *c == 1.0 && tu == &vec![w1, w1]));
    }

    #[test]
    fn table_level_three_scalar() {
        let t = CompositionTable::get(1, 3);
        let w111 = t.words().index(&Word(vec![0, 0, 0]));
        let total: f64 = t.terms(w111).iter().map(|(c, _)| c).sum();
        // (111) + (1)(11) + (11)(1) + (1)(1)(1): 1 + 1.5 + 1.5 + 1
        assert!((total - 5.0).abs() < 1e-15);
    }
}
