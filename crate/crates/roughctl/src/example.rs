//! The one-dimensional benchmark with a closed-form value.
//!
//! `dX = λ₀ dζ`, `ψ(x) = −2λ₀ x e^{−x²}`, penalty `c|u|^{2q}` and terminal cost
//! `g(x, γ_T) = −e^{−x²} − Γ(α)(γ_T − a)`. The state part telescopes to `−e^{−x²}`
//! for every geometric driver, and the pseudo-control part is minimised pointwise:
//!
//! ```text
//! v(r, x, γ) = −e^{−x²} − ∫_0^r u(s)(T−s)^{α−1} ds − (T−r)^{1−β}/(1−β),   β = 2q(1−α)/(2q−1).
//! ```
//!
//! [`Variant::Literal`] drops the `γ_T` reward; its value is `−e^{−x²}` with `u ≡ 0` optimal.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::gamma;

use crate::control::{BoundKind, Caps, ControlLattice, ControlProblem};
use crate::controlled::FnField;
use crate::error::Result;
use crate::fraccalc::ACAlphaPath;
use crate::gridpath::{SampledPath, TimeGrid};
use crate::hjb::{CandidateSolution, CiDerivativeRecord, ControlHistory, HjbProblem, PenalizedCost};
use crate::roughlift::{signature_lift, RoughPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Terminal cost rewards `γ_T`; closed form above.
    Rewarded,
    /// Terminal cost `−e^{−x²}` only.
    Literal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExampleConfig {
    pub alpha: f64,
    /// Half the penalty exponent.
    pub q: f64,
    pub p: f64,
    pub lambda0: f64,
    pub horizon: f64,
    pub n: usize,
    /// Base point `a` of every history.
    pub base: f64,
    pub lattice_half_width: f64,
    pub lattice_points: usize,
    pub steps: usize,
    pub refined_points: usize,
    pub refined_steps: usize,
    pub seed: u64,
    /// Random-walk increments are `sigma·√h·N(0,1)`.
    pub sigma: f64,
    pub probes: Vec<(usize, f64)>,
    pub variant: Variant,
}

impl Default for ExampleConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            q: 17.0,
            p: 4.5,
            lambda0: 0.5,
            horizon: 1.0,
            n: 256,
            base: 0.0,
            lattice_half_width: 2.35,
            lattice_points: 21,
            steps: 6,
            refined_points: 41,
            refined_steps: 8,
            seed: 7,
            sigma: 0.2,
            probes: vec![(40, 0.5), (64, -0.3), (88, 1.0), (112, 0.0), (136, 0.8)],
            variant: Variant::Rewarded,
        }
    }
}

/// `((1/2q)^{1/(2q−1)} − (1/2q)^{2q/(2q−1)})^{2q−1}`.
pub fn penalty_constant(q: f64) -> f64 {
    let a = 1.0 / (2.0 * q);
    (a.powf(1.0 / (2.0 * q - 1.0)) - a.powf(2.0 * q / (2.0 * q - 1.0))).powf(2.0 * q - 1.0)
}

/// `(2q−1)^{2q−1}/(2q)^{2q}`, the same number in a stabler form.
pub fn penalty_constant_closed(q: f64) -> f64 {
    ((2.0 * q - 1.0).ln() * (2.0 * q - 1.0) - (2.0 * q).ln() * 2.0 * q).exp()
}

/// `k`-th derivative of `x e^{−x²}`, via `H_{n+1} = 2x H_n − 2n H_{n−1}`.
pub fn xgauss_derivative(k: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    for n in 1..=k {
        let h2 = 2.0 * x * h1 - 2.0 * n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    // h1 = H_{k+1}
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    -0.5 * sign * h1 * (-x * x).exp()
}

impl ExampleConfig {
    pub fn beta(&self) -> f64 {
        2.0 * self.q * (1.0 - self.alpha) / (2.0 * self.q - 1.0)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.horizon, self.n)
    }

    pub fn penalty(&self) -> PenalizedCost {
        PenalizedCost {
            weight: penalty_constant_closed(self.q),
            exponent: 2.0 * self.q,
        }
    }

    /// `0.5 sin 2t` plus a seeded Gaussian walk.
    pub fn driver_path(&self) -> Result<SampledPath> {
        let grid = self.grid()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let step = self.sigma * grid.h().sqrt();
        let mut walk = 0.0;
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            if i > 0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                walk += step * z;
            }
            values.push(0.5 * (2.0 * grid.time(i)).sin() + walk);
        }
        SampledPath::scalar(grid, values)
    }

    pub fn driver(&self) -> Result<Arc<RoughPath>> {
        Ok(Arc::new(signature_lift(&self.driver_path()?, self.p)?))
    }

    /// Smooth driver `0.5 sin 2t` with its derivative.
    pub fn smooth_driver(&self) -> Result<(Arc<RoughPath>, impl Fn(f64) -> f64)> {
        let path = SampledPath::from_fn(self.grid()?, 1, |t| vec![0.5 * (2.0 * t).sin()])?;
        Ok((Arc::new(signature_lift(&path, self.p)?), |t: f64| (2.0 * t).cos()))
    }

    /// History with pseudo-control `f` sampled at left cell ends.
    pub fn history(&self, f: impl Fn(f64) -> f64) -> Result<ACAlphaPath> {
        let grid = self.grid()?;
        let u = SampledPath::from_fn(grid, 1, |t| vec![f(t)])?;
        ACAlphaPath::new(self.alpha, vec![self.base], u)
    }

    pub fn default_history(&self) -> Result<ACAlphaPath> {
        self.history(|s| 0.8 * (3.0 * s).cos())
    }

    pub fn lattice(&self, points: usize) -> Result<ControlLattice> {
        ControlLattice::symmetric(self.lattice_half_width, points)
    }

    pub fn problem(&self, driver: Arc<RoughPath>, points: usize, steps: usize) -> Result<ControlProblem> {
        let l0 = self.lambda0;
        let ga = gamma(self.alpha);
        let base = self.base;
        let rewarded = self.variant == Variant::Rewarded;
        let psi = FnField::scalar_state(1, 1, 8, 2.0 * l0.abs() * 8.0, move |j, x, _g, out| {
            out[0] = -2.0 * l0 * xgauss_derivative(j, x);
        })?;
        let bound = if rewarded {
            BoundKind::Separable { gamma_weight: vec![-ga] }
        } else {
            BoundKind::Separable { gamma_weight: vec![0.0] }
        };
        Ok(ControlProblem {
            drift: Arc::new(FnField::constant(1, 1, vec![0.0])?),
            diffusion: Arc::new(FnField::constant(1, 1, vec![l0])?),
            driver,
            running: Arc::new(|_, _| 0.0),
            rough_cost: Arc::new(psi),
            terminal: Arc::new(move |x, g| {
                let reward = if rewarded { ga * (g[0] - base) } else { 0.0 };
                -(-x[0] * x[0]).exp() - reward
            }),
            alpha: self.alpha,
            penalty_weight: self.penalty().weight,
            penalty_exponent: self.penalty().exponent,
            lattice: self.lattice(points)?,
            steps,
            caps: Caps {
                max_steps: steps.max(Caps::default().max_steps),
                max_lattice: points.max(Caps::default().max_lattice),
            },
            bound,
        })
    }

    pub fn candidate(&self) -> ExampleCandidate {
        ExampleCandidate {
            alpha: self.alpha,
            beta: self.beta(),
            horizon: self.horizon,
            base: self.base,
            variant: self.variant,
        }
    }

    /// Closed-form value at master index `r`.
    pub fn closed_form(&self, r: usize, x: f64, gamma: &ACAlphaPath) -> Result<f64> {
        let hist = ControlHistory::from_ac_alpha(gamma, r)?;
        let t = gamma.grid().time(r);
        Ok(self.candidate().value(t, &[x], &hist))
    }

    pub fn hjb_problem(&self, driver: Arc<RoughPath>) -> Result<HjbProblem> {
        Ok(HjbProblem::from_control(&self.problem(driver, 3, 1)?))
    }
}

/// Closed-form value with analytic ci-derivatives.
#[derive(Clone, Debug)]
pub struct ExampleCandidate {
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
    pub base: f64,
    pub variant: Variant,
}

impl CandidateSolution for ExampleCandidate {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn value(&self, t: f64, x: &[f64], history: &ControlHistory) -> f64 {
        let state = -(-x[0] * x[0]).exp();
        if self.variant == Variant::Literal {
            return state;
        }
        let (a, big_t) = (self.alpha, self.horizon);
        let memory = history.integrate(t, |s| -(big_t - s).powf(a) / a)[0];
        let tail = (big_t - t).powf(1.0 - self.beta) / (1.0 - self.beta);
        state - memory - tail
    }

    fn derivatives(&self, t: f64, x: &[f64], history: &ControlHistory) -> CiDerivativeRecord {
        let dx = 2.0 * x[0] * (-x[0] * x[0]).exp();
        let (dt, dgamma) = match self.variant {
            Variant::Literal => (0.0, 0.0),
            Variant::Rewarded => {
                let left = self.horizon - t;
                (left.powf(-self.beta), -left.powf(self.alpha - 1.0))
            }
        };
        CiDerivativeRecord {
            t,
            x: x.to_vec(),
            gamma: history.value(t),
            dt,
            dx: vec![dx],
            dgamma: vec![dgamma],
        }
    }

    fn terminal(&self, x: &[f64], gamma_t: &[f64]) -> f64 {
        let reward = match self.variant {
            Variant::Rewarded => gamma(self.alpha) * (gamma_t[0] - self.base),
            Variant::Literal => 0.0,
        };
        -(-x[0] * x[0]).exp() - reward
    }
}

/// Centred moving average over `width + 1` samples, clipped at the ends.
pub fn mollify(path: &SampledPath, width: usize) -> Result<SampledPath> {
    let n = path.grid().n();
    let half = width / 2;
    let m = path.dim();
    let mut out = SampledPath::zeros(*path.grid(), m);
    for i in 0..=n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n);
        let cnt = (hi - lo + 1) as f64;
        for c in 0..m {
            out.at_mut(i)[c] = (lo..=hi).map(|j| path.at(j)[c]).sum::<f64>() / cnt;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_forms_agree() {
        for q in [1.0, 2.0, 5.0, 17.0] {
            let a = penalty_constant(q);
            let b = penalty_constant_closed(q);
            assert!((a - b).abs() <= 1e-12 * b, "q={q}: {a} vs {b}");
        }
        assert!((penalty_constant(1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hermite_derivatives_match_hand_forms() {
        let x: f64 = 0.7;
        let g = (-x * x).exp();
        assert!((xgauss_derivative(0, x) - x * g).abs() < 1e-15);
        assert!((xgauss_derivative(1, x) - (1.0 - 2.0 * x * x) * g).abs() < 1e-15);
        assert!((xgauss_derivative(2, x) - (4.0 * x.powi(3) - 6.0 * x) * g).abs() < 1e-14);
    }
}
