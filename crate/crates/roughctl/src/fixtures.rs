//! Seeded drivers, histories and coefficient fields shared by the suite, tests and examples.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::control::{BoundKind, Caps, ControlLattice, ControlProblem};
use crate::controlled::{FnField, SmoothFunction};
use crate::error::Result;
use crate::fraccalc::ACAlphaPath;
use crate::gridpath::{SampledPath, TimeGrid};
use crate::roughlift::{signature_lift, RoughPath};

/// `d`-dimensional Gaussian walk with increments `scale·√h·N(0,1)`, started at 0.
pub fn random_walk(grid: TimeGrid, d: usize, scale: f64, rng: &mut impl Rng) -> Result<SampledPath> {
    let step = scale * grid.h().sqrt();
    let mut values = vec![0.0; grid.len() * d];
    for i in 1..grid.len() {
        for c in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            values[i * d + c] = values[(i - 1) * d + c] + step * z;
        }
    }
    SampledPath::new(grid, d, values)
}

/// Lift of a seeded walk.
pub fn random_driver(grid: TimeGrid, d: usize, scale: f64, p: f64, rng: &mut impl Rng) -> Result<Arc<RoughPath>> {
    Ok(Arc::new(signature_lift(&random_walk(grid, d, scale, rng)?, p)?))
}

/// `φ(x, g)[r] = a_r sin(x_{i_r} + c_r·g) + b_r` with `i_r = r mod e`; every order supplied.
pub fn sine_field(e: usize, k: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<FnField> {
    let m = a.len();
    let bound = a.iter().map(|v| v.abs()).fold(0.0, f64::max) + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    FnField::new(e, k, m, usize::MAX, bound, move |x, g, dirs, out| {
        for r in 0..m {
            let i = r % e;
            let arg = x[i] + if k > 0 { c[r] * g[0] } else { 0.0 };
            let trig = match dirs.len() % 4 {
                0 => arg.sin(),
                1 => arg.cos(),
                2 => -arg.sin(),
                _ => -arg.cos(),
            };
            let scale: f64 = dirs.iter().map(|v| v[i]).product();
            out[r] = a[r] * trig * scale + if dirs.is_empty() { b[r] } else { 0.0 };
        }
    })
}

/// Random [`sine_field`] with amplitudes in `[−amp, amp]`.
pub fn random_sine_field(e: usize, k: usize, m: usize, amp: f64, rng: &mut impl Rng) -> Result<FnField> {
    let a = (0..m).map(|_| rng.gen_range(-amp..amp)).collect();
    let b = (0..m).map(|_| rng.gen_range(-amp..amp)).collect();
    let c = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    sine_field(e, k, a, b, c)
}

/// Random affine map with entries in `[−amp, amp]`.
pub fn random_affine(e: usize, k: usize, m: usize, amp: f64, rng: &mut impl Rng) -> Result<FnField> {
    let mut draw = |len: usize| (0..len).map(|_| rng.gen_range(-amp..amp)).collect::<Vec<f64>>();
    let a = draw(m * e);
    let b = draw(m * k);
    let c = draw(m);
    FnField::affine(e, k, a, b, c)
}

/// History whose pseudo-control is a random sum of two sinusoids.
pub fn random_history(grid: TimeGrid, alpha: f64, base: f64, rng: &mut impl Rng) -> Result<ACAlphaPath> {
    let (a1, a2) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (w1, w2) = (rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0));
    let u = SampledPath::from_fn(grid, 1, |t| vec![a1 * (w1 * t).sin() + a2 * (w2 * t).cos()])?;
    ACAlphaPath::new(alpha, vec![base], u)
}

/// Small random control problem with scalar pseudo-control and three-point lattice.
pub fn random_problem(
    e: usize,
    d: usize,
    grid: TimeGrid,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<ControlProblem> {
    let p = 2.5;
    let driver = random_driver(grid, d, 0.5, p, rng)?;
    let drift: Arc<dyn SmoothFunction> = Arc::new(random_sine_field(e, 1, e, 0.5, rng)?);
    let diffusion: Arc<dyn SmoothFunction> = Arc::new(random_sine_field(e, 1, e * d, 0.5, rng)?);
    let rough_cost: Arc<dyn SmoothFunction> = Arc::new(random_affine(e, 1, d, 0.5, rng)?);
    let (r0, r1, r2): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0));
    let (g0, g1): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let spread = rng.gen_range(0.3..1.5);
    Ok(ControlProblem {
        drift,
        diffusion,
        driver,
        running: Arc::new(move |x, g| r0 * x[0] + r1 * g[0] + r2 * x[0] * x[0]),
        rough_cost,
        terminal: Arc::new(move |x, g| (g0 * x[0]).sin() + g1 * g[0] * g[0]),
        alpha: 0.8,
        penalty_weight: rng.gen_range(0.05..0.5),
        penalty_exponent: 8.0,
        lattice: ControlLattice::new(vec![vec![-spread], vec![0.0], vec![spread]])?,
        steps,
        caps: Caps::default(),
        bound: BoundKind::None,
    })
}
