use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// A map `R^e × R^k → R^m` with state derivatives up to [`SmoothFunction::order`].
///
/// Only derivatives in the state argument are required: control paths enter
/// compositions with zero Gubinelli derivative.
pub trait SmoothFunction: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    /// Highest state derivative supplied.
    fn order(&self) -> usize;
    /// Bound on the function and its supplied derivatives.
    fn bound(&self) -> f64;
    /// `D^k_x φ(x, g)[v_1, …, v_k]` with `k = dirs.len()`, written into `out`.
    fn derivative(&self, x: &[f64], g: &[f64], dirs: &[&[f64]], out: &mut [f64]);

    fn eval(&self, x: &[f64], g: &[f64], out: &mut [f64]) {
        self.derivative(x, g, &[], out)
    }
}

type DerivFn = dyn Fn(&[f64], &[f64], &[&[f64]], &mut [f64]) + Send + Sync;

/// Closure-backed [`SmoothFunction`].
#[derive(Clone)]
pub struct FnField {
    e: usize,
    k: usize,
    m: usize,
    order: usize,
    bound: f64,
    f: Arc<DerivFn>,
}

impl std::fmt::Debug for FnField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnField")
            .field("state_dim", &self.e)
            .field("control_dim", &self.k)
            .field("out_dim", &self.m)
            .field("order", &self.order)
            .finish()
    }
}

impl FnField {
    /// Wraps a directional-derivative closure and checks it against finite differences.
    pub fn new(
        state_dim: usize,
        control_dim: usize,
        out_dim: usize,
        order: usize,
        bound: f64,
        f: impl Fn(&[f64], &[f64], &[&[f64]], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if state_dim == 0 || out_dim == 0 {
            return invalid("smooth function needs positive state and output dimensions");
        }
        let field = Self {
            e: state_dim,
            k: control_dim,
            m: out_dim,
            order,
            bound,
            f: Arc::new(f),
        };
        let mismatch = derivative_mismatch(&field, 8, 0x5eed);
        if mismatch > 1e-5 {
            return invalid(format!(
                "supplied derivatives disagree with central differences (relative gap {mismatch:e})"
            ));
        }
        Ok(field)
    }

    /// Scalar state: `f(j, x, g, out)` writes the `j`-th derivative in `x`.
    pub fn scalar_state(
        control_dim: usize,
        out_dim: usize,
        order: usize,
        bound: f64,
        f: impl Fn(usize, f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(1, control_dim, out_dim, order, bound, move |x, g, dirs, out| {
            if dirs.len() > order {
                out.iter_mut().for_each(|o| *o = 0.0);
                return;
            }
            let scale: f64 = dirs.iter().map(|v| v[0]).product();
            f(dirs.len(), x[0], g, out);
            out.iter_mut().for_each(|o| *o *= scale);
        })
    }

    /// `φ(x, g) = A x + B g + c`, matrices row-major with `out_dim` rows.
    pub fn affine(state_dim: usize, control_dim: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let m = c.len();
        if a.len() != m * state_dim {
            return Err(Error::Dimension { what: "affine state matrix", expected: m * state_dim, got: a.len() });
        }
        if b.len() != m * control_dim {
            return Err(Error::Dimension { what: "affine control matrix", expected: m * control_dim, got: b.len() });
        }
        let bound = a.iter().chain(&b).chain(&c).fold(0.0f64, |s, v| s.max(v.abs())) * (1 + state_dim + control_dim) as f64;
        let e = state_dim;
        let k = control_dim;
        Self::new(e, k, m, usize::MAX, bound, move |x, g, dirs, out| {
            for r in 0..m {
                out[r] = match dirs.len() {
                    0 => {
                        c[r] + (0..e).map(|j| a[r * e + j] * x[j]).sum::<f64>()
                            + (0..k).map(|j| b[r * k + j] * g[j]).sum::<f64>()
                    }
                    1 => (0..e).map(|j| a[r * e + j] * dirs[0][j]).sum(),
                    _ => 0.0,
                };
            }
        })
    }

    /// Constant map.
    pub fn constant(state_dim: usize, control_dim: usize, values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        Self::affine(state_dim, control_dim, vec![0.0; m * state_dim], vec![0.0; m * control_dim], values)
    }
}

impl SmoothFunction for FnField {
    fn state_dim(&self) -> usize {
        self.e
    }
    fn control_dim(&self) -> usize {
        self.k
    }
    fn out_dim(&self) -> usize {
        self.m
    }
    fn order(&self) -> usize {
        self.order
    }
    fn bound(&self) -> f64 {
        self.bound
    }
    fn derivative(&self, x: &[f64], g: &[f64], dirs: &[&[f64]], out: &mut [f64]) {
        (self.f)(x, g, dirs, out)
    }
}

/// Largest relative gap between `D^jφ[v,…,v]` and the central difference of
/// `D^{j−1}φ[v,…,v]` along `v`, for `j = 1..=min(order, 3)`, over random probes.
pub fn derivative_mismatch(phi: &dyn SmoothFunction, probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (e, k, m) = (phi.state_dim(), phi.control_dim(), phi.out_dim());
    let top = phi.order().min(3);
    let step = 1e-4;
    let mut worst = 0.0f64;
    let mut hi = vec![0.0; m];
    let mut lo = vec![0.0; m];
    let mut exact = vec![0.0; m];
    for _ in 0..probes {
        let x: Vec<f64> = (0..e).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..e).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for j in 1..=top {
            let dirs: Vec<&[f64]> = vec![v.as_slice(); j];
            phi.derivative(&x, &g, &dirs, &mut exact);
            let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + step * b).collect();
            let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - step * b).collect();
            phi.derivative(&xp, &g, &dirs[..j - 1], &mut hi);
            phi.derivative(&xm, &g, &dirs[..j - 1], &mut lo);
            for r in 0..m {
                let fd = (hi[r] - lo[r]) / (2.0 * step);
                let scale = 1.0 + exact[r].abs() + hi[r].abs();
                worst = worst.max((fd - exact[r]).abs() / scale);
            }
        }
    }
    worst
}
