use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughctl::control::ControlLattice;
use roughctl::error::Error;
use roughctl::example::{mollify, ExampleCandidate, ExampleConfig};
use roughctl::fixtures::{random_history, random_problem, random_sine_field, random_walk};
use roughctl::gridpath::TimeGrid;
use roughctl::hjb::{
    ci_taylor_check, hamiltonian, hamiltonian_grid, hjb_residual, residual_from_record, rough_cost_stability,
    rough_viscosity_convergence, terminal_check, CandidateSolution, CiDerivativeRecord, ControlHistory, PenalizedCost,
    Probe,
};
use roughctl::rde::{RdeProblem, SolveOptions};
use roughctl::roughlift::{signature_lift, RoughPath};

fn history(alpha: f64, cuts: &[(f64, f64)]) -> ControlHistory {
    let mut h = ControlHistory::new(alpha, vec![0.0], 0.0).unwrap();
    for &(t, u) in cuts {
        h.push(t, vec![u]).unwrap();
    }
    h
}

/// The Example candidate with its derivatives altered.
struct Tweaked {
    inner: ExampleCandidate,
    time_shift: f64,
    dx_shift: f64,
}

impl CandidateSolution for Tweaked {
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    fn value(&self, t: f64, x: &[f64], h: &ControlHistory) -> f64 {
        self.inner.value(t, x, h) + self.time_shift * t
    }

    fn derivatives(&self, t: f64, x: &[f64], h: &ControlHistory) -> CiDerivativeRecord {
        let mut rec = self.inner.derivatives(t, x, h);
        rec.dt += self.time_shift;
        rec.dx[0] += self.dx_shift;
        rec
    }

    fn terminal(&self, x: &[f64], g: &[f64]) -> f64 {
        self.inner.terminal(x, g)
    }
}

/// The Example candidate without its `(T−t)^{1−β}` term.
struct NoTail(ExampleCandidate);

impl CandidateSolution for NoTail {
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    fn value(&self, t: f64, x: &[f64], h: &ControlHistory) -> f64 {
        let b = self.0.beta;
        self.0.value(t, x, h) + (self.0.horizon - t).powf(1.0 - b) / (1.0 - b)
    }

    fn derivatives(&self, t: f64, x: &[f64], h: &ControlHistory) -> CiDerivativeRecord {
        let mut rec = self.0.derivatives(t, x, h);
        rec.dt = 0.0;
        rec
    }

    fn terminal(&self, x: &[f64], g: &[f64]) -> f64 {
        self.0.terminal(x, g)
    }
}

/// `v = a t + b x`.
struct Affine(f64, f64);

impl CandidateSolution for Affine {
    fn horizon(&self) -> f64 {
        1.0
    }

    fn value(&self, t: f64, x: &[f64], _: &ControlHistory) -> f64 {
        self.0 * t + self.1 * x[0]
    }

    fn derivatives(&self, t: f64, x: &[f64], h: &ControlHistory) -> CiDerivativeRecord {
        CiDerivativeRecord {
            t,
            x: x.to_vec(),
            gamma: h.value(t),
            dt: self.0,
            dx: vec![self.1],
            dgamma: vec![0.0],
        }
    }

    fn terminal(&self, x: &[f64], _: &[f64]) -> f64 {
        self.0 + self.1 * x[0]
    }
}

#[test]
fn closed_form_hamiltonian_matches_lattice_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let phi = rng.gen_range(-3.0..3.0);
        let cost = PenalizedCost {
            weight: rng.gen_range(0.1..2.0),
            exponent: rng.gen_range(1.5..8.0),
        };
        let exact = hamiltonian(&[phi], cost).unwrap();
        let rho = (phi.abs() / (cost.exponent * cost.weight)).powf(1.0 / (cost.exponent - 1.0));
        let lattice = ControlLattice::symmetric(1.5 * rho + 0.5, 6001).unwrap();
        let f = |u: &[f64]| cost.weight * u[0].abs().powf(cost.exponent);
        let grid = hamiltonian_grid(&[phi], f, &lattice).unwrap();
        assert!(grid.value <= exact + 1e-12, "{phi} {cost:?}");
        assert!(exact - grid.value <= grid.gap + 1e-12, "{phi} {cost:?}: {exact} vs {grid:?}");
        assert!(exact - grid.value < 1e-4 * exact.max(1.0));
    }
}

#[test]
fn quadratic_hamiltonian() {
    let cost = PenalizedCost {
        weight: 1.0,
        exponent: 2.0,
    };
    for phi in [-2.0, -0.3, 0.7, 5.0] {
        assert!((hamiltonian(&[phi], cost).unwrap() - phi * phi / 4.0).abs() < 1e-14);
    }
    assert_eq!(hamiltonian(&[0.0], cost).unwrap(), 0.0);
}

#[test]
fn non_coercive_penalty_is_rejected() {
    for (weight, exponent) in [(0.0, 2.0), (-1.0, 2.0), (1.0, 1.0), (1.0, 0.5)] {
        let r = hamiltonian(&[1.0], PenalizedCost { weight, exponent });
        assert!(matches!(r, Err(Error::NonCoercive(_))), "{weight} {exponent}");
    }
}

#[test]
fn example_candidate_solves_the_equation() {
    let cfg = ExampleConfig::default();
    let (driver, eta_dot) = cfg.smooth_driver().unwrap();
    let problem = cfg.hjb_problem(driver).unwrap();
    let cand = cfg.candidate();
    let bad = NoTail(cfg.candidate());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let t = rng.gen_range(0.05..0.9);
        let x = rng.gen_range(-2.0..2.0);
        let h = history(cfg.alpha, &[(t / 3.0, rng.gen_range(-1.0..1.0)), (t, rng.gen_range(-1.0..1.0))]);
        let r = hjb_residual(&cand, &problem, t, &[x], &h, &[eta_dot(t)]).unwrap();
        assert!(r.abs() <= 1e-6, "t={t} x={x}: {r}");
        let eps = 0.3;
        let shifted = Tweaked {
            inner: cfg.candidate(),
            time_shift: eps,
            dx_shift: 0.0,
        };
        let rs = hjb_residual(&shifted, &problem, t, &[x], &h, &[eta_dot(t)]).unwrap();
        assert!((rs - r + eps).abs() < 1e-12);
    }
    let h = history(cfg.alpha, &[(0.5, 0.4)]);
    let r = hjb_residual(&bad, &problem, 0.5, &[0.1], &h, &[eta_dot(0.5)]).unwrap();
    assert!((r - 0.5f64.powf(-cfg.beta())).abs() < 1e-6, "{r}");
}

#[test]
fn residual_is_affine_in_the_time_derivative() {
    let cfg = ExampleConfig::default();
    let (driver, eta_dot) = cfg.smooth_driver().unwrap();
    let problem = cfg.hjb_problem(driver).unwrap();
    let h = history(cfg.alpha, &[(0.4, -0.2)]);
    let rec = cfg.candidate().derivatives(0.4, &[0.7], &h);
    let base = residual_from_record(&rec, &problem, &[eta_dot(0.4)]).unwrap();
    for d in [-1.0, 0.5, 2.0] {
        let moved = CiDerivativeRecord {
            dt: rec.dt + d,
            ..rec.clone()
        };
        let r = residual_from_record(&moved, &problem, &[eta_dot(0.4)]).unwrap();
        assert!((r - base + d).abs() < 1e-12);
    }
}

#[test]
fn residual_rejects_the_horizon() {
    let cfg = ExampleConfig::default();
    let (driver, _) = cfg.smooth_driver().unwrap();
    let problem = cfg.hjb_problem(driver).unwrap();
    let h = history(cfg.alpha, &[(1.0, 0.0)]);
    assert!(hjb_residual(&cfg.candidate(), &problem, 1.0, &[0.0], &h, &[0.0]).is_err());
}

#[test]
fn taylor_ladder() {
    let cfg = ExampleConfig::default();
    let steps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let h = history(cfg.alpha, &[(0.2, 0.5), (0.4, -0.3)]);

    let affine = ci_taylor_check(&Affine(0.7, -1.3), 0.4, &[0.2], &h, &[0.6], &[1.0], &steps).unwrap();
    assert!(affine.passed && affine.ratios.iter().all(|r| *r < 1e-9), "{affine:?}");

    let good = ci_taylor_check(&cfg.candidate(), 0.4, &[0.2], &h, &[0.6], &[1.0], &steps).unwrap();
    assert!(good.passed, "{good:?}");

    let wrong = Tweaked {
        inner: cfg.candidate(),
        time_shift: 0.0,
        dx_shift: 0.5,
    };
    let bad = ci_taylor_check(&wrong, 0.4, &[0.2], &h, &[0.6], &[1.0], &steps).unwrap();
    assert!(!bad.passed, "{bad:?}");
    let last = *bad.ratios.last().unwrap();
    assert!((last - 0.25).abs() < 0.02, "plateau near |δ|/(1+|dir|): {bad:?}");
}

#[test]
fn terminal_condition() {
    let cfg = ExampleConfig::default();
    let probes: Vec<(Vec<f64>, ControlHistory)> = [(-1.5, 0.3), (0.0, -0.8), (0.9, 1.2)]
        .iter()
        .map(|&(x, u)| (vec![x], history(cfg.alpha, &[(0.5, u), (1.0, -u)])))
        .collect();
    assert!(terminal_check(&cfg.candidate(), &probes).unwrap() <= 1e-12);
    let shifted = Tweaked {
        inner: cfg.candidate(),
        time_shift: 0.1,
        dx_shift: 0.0,
    };
    assert!((terminal_check(&shifted, &probes).unwrap() - 0.1).abs() < 1e-12);
    let short = vec![(vec![0.0], history(cfg.alpha, &[(0.5, 1.0)]))];
    assert!(terminal_check(&cfg.candidate(), &short).is_err());
}

fn mollified_ladder(base: &roughctl::gridpath::SampledPath, p: f64, widths: &[usize]) -> Vec<Arc<RoughPath>> {
    widths
        .iter()
        .map(|&w| Arc::new(signature_lift(&mollify(base, w).unwrap(), p).unwrap()))
        .collect()
}

#[test]
fn single_rung_has_no_verdict() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = TimeGrid::uniform(1.0, 12).unwrap();
    let problem = random_problem(1, 1, grid, 3, &mut rng).unwrap();
    let gamma = random_history(grid, problem.alpha, 0.0, &mut rng).unwrap();
    let walk = random_walk(grid, 1, 0.5, &mut rng).unwrap();
    let zeta = Arc::new(signature_lift(&walk, 2.5).unwrap());
    let probes = vec![Probe {
        r: 0,
        x: vec![0.1],
        gamma,
    }];
    let rep = rough_viscosity_convergence(&problem, &zeta, &mollified_ladder(&walk, 2.5, &[4]), &probes, 1e-8).unwrap();
    assert_eq!(rep.passed, None);
    assert_eq!(rep.rows.len(), 1);
}

#[test]
fn example_value_ignores_the_driver() {
    let cfg = ExampleConfig::default();
    let base = cfg.driver_path().unwrap();
    let zeta = Arc::new(signature_lift(&base, cfg.p).unwrap());
    let problem = cfg.problem(zeta.clone(), 9, 4).unwrap();
    let gamma = cfg.default_history().unwrap();
    let probes: Vec<Probe> = cfg.probes[..2]
        .iter()
        .map(|&(r, x)| Probe {
            r,
            x: vec![x],
            gamma: gamma.clone(),
        })
        .collect();
    let rep = rough_viscosity_convergence(&problem, &zeta, &mollified_ladder(&base, cfg.p, &[8, 4, 2]), &probes, 1e-8)
        .unwrap();
    assert_eq!(rep.passed, Some(true));
    for row in &rep.rows {
        assert!(row.value_gap <= 1e-8 && row.max_residual <= 1e-8, "{row:?}");
    }
}

#[test]
fn generic_ladder_values_approach_the_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = TimeGrid::uniform(1.0, 48).unwrap();
    let problem = random_problem(1, 1, grid, 3, &mut rng).unwrap();
    let gamma = random_history(grid, problem.alpha, 0.0, &mut rng).unwrap();
    let walk = random_walk(grid, 1, 0.5, &mut rng).unwrap();
    let zeta = Arc::new(signature_lift(&walk, 2.5).unwrap());
    let probes = vec![
        Probe {
            r: 0,
            x: vec![0.2],
            gamma: gamma.clone(),
        },
        Probe {
            r: 24,
            x: vec![-0.4],
            gamma,
        },
    ];
    let ladder = mollified_ladder(&walk, 2.5, &[16, 8, 4, 2]);
    let rep = rough_viscosity_convergence(&problem, &zeta, &ladder, &probes, 1e-8).unwrap();
    assert!(rep.rows.windows(2).all(|w| w[1].lift_gap < w[0].lift_gap));
    assert!(rep.rows.last().unwrap().max_residual < rep.rows[0].max_residual, "{:?}", rep.rows);
}

#[test]
fn rough_cost_stability_has_a_fitted_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let grid = TimeGrid::uniform(1.0, 64).unwrap();
    let walk = random_walk(grid, 1, 0.6, &mut rng).unwrap();
    let control = random_history(grid, 0.8, 0.0, &mut rng).unwrap().to_sampled();
    let base = RdeProblem::new(
        Arc::new(random_sine_field(1, 1, 1, 0.5, &mut rng).unwrap()),
        Arc::new(random_sine_field(1, 1, 1, 0.5, &mut rng).unwrap()),
        Arc::new(signature_lift(&walk, 2.5).unwrap()),
        control,
        vec![0.4],
    )
    .unwrap();
    let psi = random_sine_field(1, 1, 1, 0.5, &mut rng).unwrap();
    let opts = SolveOptions::default();
    let ratio = |rng: &mut ChaCha8Rng| {
        let delta = 10f64.powf(rng.gen_range(-4.0..-2.0));
        let noise = random_walk(grid, 1, delta, rng).unwrap();
        let mut eta = walk.clone();
        for i in 0..grid.len() {
            eta.at_mut(i)[0] += noise.at(i)[0];
        }
        let other = RdeProblem::new(
            base.drift.clone(),
            base.diffusion.clone(),
            Arc::new(signature_lift(&eta, 2.5).unwrap()),
            base.control.clone(),
            vec![0.4 + delta * rng.gen_range(-1.0..1.0)],
        )
        .unwrap();
        rough_cost_stability(&psi, &base, &other, &opts).unwrap().ratio
    };
    let fitted = (0..50).map(|_| ratio(&mut rng)).fold(0.0, f64::max);
    assert!(fitted.is_finite() && fitted > 0.0);
    for _ in 0..50 {
        let r = ratio(&mut rng);
        assert!(r <= 2.0 * fitted, "{r} vs fitted {fitted}");
    }
}
