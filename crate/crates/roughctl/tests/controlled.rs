use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roughctl::controlled::{
    compose, integral_increment, remainder_table, rough_integral, rough_integral_report, ControlledPath, FnField,
};
use roughctl::fixtures::random_walk;
use roughctl::gridpath::{SampledPath, TimeGrid};
use roughctl::roughlift::{signature_lift, RoughPath, Word};

fn lift(values: &[f64], dim: usize, p: f64) -> Arc<RoughPath> {
    let n = values.len() / dim - 1;
    let path = SampledPath::new(TimeGrid::uniform(1.0, n).unwrap(), dim, values.to_vec()).unwrap();
    Arc::new(signature_lift(&path, p).unwrap())
}

fn walk(n: usize, dim: usize, seed: u64) -> SampledPath {
    random_walk(TimeGrid::uniform(1.0, n).unwrap(), dim, 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn every(path: &SampledPath, k: usize) -> SampledPath {
    let n = (path.len() - 1) / k;
    let mut v = Vec::new();
    for i in 0..=n {
        v.extend_from_slice(path.at(i * k));
    }
    SampledPath::new(TimeGrid::uniform(path.grid().end(), n).unwrap(), path.dim(), v).unwrap()
}

fn zero_control(rp: &RoughPath) -> SampledPath {
    SampledPath::zeros(*rp.grid(), 1)
}

// f^{(j)} for f = sin
fn sin_field() -> FnField {
    FnField::scalar_state(1, 1, usize::MAX, 1.0, |j, x, _, out| {
        out[0] = match j % 4 {
            0 => x.sin(),
            1 => x.cos(),
            2 => -x.sin(),
            _ => -x.cos(),
        }
    })
    .unwrap()
}

#[test]
fn identity_composition_is_exact() {
    let rp = lift(&walk(20, 2, 1).values(), 2, 3.5);
    let x = ControlledPath::driver(rp.clone()).unwrap();
    let id = FnField::affine(2, 1, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
    let y = compose(&id, &x, &zero_control(&rp)).unwrap();
    for i in 0..x.len() {
        assert_eq!(y.point(i), x.point(i));
    }
}

#[test]
fn linear_composition_maps_components() {
    let rp = lift(&walk(12, 2, 2).values(), 2, 3.5);
    let x = ControlledPath::driver(rp.clone()).unwrap();
    let a = [0.5, -2.0, 1.5, 3.0, 0.25, -1.0];
    let lin = FnField::affine(2, 1, a.to_vec(), vec![0.0; 3], vec![0.0; 3]).unwrap();
    let y = compose(&lin, &x, &zero_control(&rp)).unwrap();
    for i in 0..x.len() {
        for w in 0..x.words().len() {
            let xc = x.component(i, w);
            for r in 0..3 {
                let want = a[r * 2] * xc[0] + a[r * 2 + 1] * xc[1];
                assert!((y.component(i, w)[r] - want).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn square_composition_matches_hand_expansion() {
    // d = 2, N = 3, random component values
    let rp = lift(&walk(6, 2, 3).values(), 2, 3.2);
    let nw = 7;
    let data: Vec<f64> = (0..7 * nw).map(|k| ((k * 37 % 11) as f64 - 5.0) / 4.0).collect();
    let x = ControlledPath::new(rp.clone(), 1, data).unwrap();
    let sq = FnField::scalar_state(1, 1, 2, 1.0, |j, x, _, out| {
        out[0] = match j {
            0 => x * x,
            1 => 2.0 * x,
            _ => 2.0,
        }
    })
    .unwrap();
    let y = compose(&sq, &x, &zero_control(&rp)).unwrap();
    let idx = |l: &[u8]| x.words().index(&Word(l.to_vec()));
    for i in 0..x.len() {
        let c = |l: &[u8]| x.component(i, idx(l))[0];
        let x0 = c(&[]);
        assert_eq!(y.component(i, 0)[0], x0 * x0);
        for a in 0..2u8 {
            assert!((y.component(i, idx(&[a]))[0] - 2.0 * x0 * c(&[a])).abs() < 1e-14);
            for b in 0..2u8 {
                let want = 2.0 * x0 * c(&[a, b]) + 2.0 * c(&[a]) * c(&[b]);
                assert!((y.component(i, idx(&[a, b]))[0] - want).abs() < 1e-14);
            }
        }
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = (xs.iter().map(|v| v.ln()).collect(), ys.iter().map(|v| v.ln()).collect());
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    cov / lx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>()
}

#[test]
fn composed_remainder_has_expected_order() {
    let p = 2.5;
    let rp = lift(&walk(2048, 1, 4).values(), 1, p);
    let x = ControlledPath::driver(rp.clone()).unwrap();
    let y = compose(&sin_field(), &x, &zero_control(&rp)).unwrap();
    let (mut hs, mut rs) = (Vec::new(), Vec::new());
    for k in [1usize, 2, 4, 8, 16, 32, 64] {
        let worst = (0..2048 - k).map(|s| y.remainder(0, s, s + k)[0].abs()).fold(0.0, f64::max);
        hs.push(k as f64 / 2048.0);
        rs.push(worst);
    }
    let order = slope(&hs, &rs);
    assert!(order >= 2.0 / p - 0.2, "slope {order}");
}

#[test]
fn constant_integrand_gives_level_one_increment() {
    let rp = lift(&walk(16, 2, 5).values(), 2, 2.5);
    let c = [0.7, -1.2, 0.4, 2.0];
    let trace = SampledPath::new(*rp.grid(), 4, c.repeat(17)).unwrap();
    let y = ControlledPath::from_trace(rp.clone(), &trace).unwrap();
    let got = rough_integral(&y, (3, 14)).unwrap();
    let (z1, z2) = (rp.value(3, 14, &Word(vec![0])), rp.value(3, 14, &Word(vec![1])));
    assert!((got[0] - (c[0] * z1 + c[1] * z2)).abs() < 1e-14);
    assert!((got[1] - (c[2] * z1 + c[3] * z2)).abs() < 1e-14);
}

#[test]
fn driver_against_itself_is_half_square() {
    let path = walk(64, 1, 6);
    let rp = lift(path.values(), 1, 2.5);
    let y = ControlledPath::driver(rp.clone()).unwrap();
    for (s, t) in [(0, 64), (10, 40)] {
        let got = rough_integral(&y, (s, t)).unwrap()[0];
        let want = (path.at(t)[0].powi(2) - path.at(s)[0].powi(2)) / 2.0;
        assert!((got - want).abs() < 1e-13);
    }
}

#[test]
fn smooth_driver_integral_converges_to_stieltjes() {
    // ∫ sin(η) dη along η = sin 3t + t/2, against trapezoid sums on a 2× finer grid
    let eta = |t: f64| (3.0 * t).sin() + 0.5 * t;
    let mut errs = Vec::new();
    for n in [32, 64, 128, 256] {
        let path = SampledPath::from_fn(TimeGrid::uniform(1.0, n).unwrap(), 1, |t| vec![eta(t)]).unwrap();
        let rp = Arc::new(signature_lift(&path, 2.5).unwrap());
        let y = compose(&sin_field(), &ControlledPath::driver(rp.clone()).unwrap(), &zero_control(&rp)).unwrap();
        let got = rough_integral(&y, (0, n)).unwrap()[0];
        let fine = 2 * n;
        let oracle: f64 = (0..fine)
            .map(|i| {
                let (a, b) = (eta(i as f64 / fine as f64), eta((i + 1) as f64 / fine as f64));
                (a.sin() + b.sin()) / 2.0 * (b - a)
            })
            .sum();
        errs.push((got - oracle).abs());
    }
    for pair in errs.windows(2) {
        assert!(pair[1] < pair[0], "{errs:?}");
    }
    assert!(errs[3] < 1e-3, "{errs:?}");
}

#[test]
fn driver_and_constant_remainders_vanish() {
    let rp = lift(&walk(24, 2, 7).values(), 2, 3.5);
    let x = ControlledPath::driver(rp.clone()).unwrap();
    let t = remainder_table(&x, (0, 24)).unwrap();
    assert!(t.rows.iter().all(|r| r.norm < 1e-13), "{:?}", t.rows);
    let c = ControlledPath::from_trace(rp.clone(), &SampledPath::new(*rp.grid(), 1, vec![1.5; 25]).unwrap()).unwrap();
    let t = remainder_table(&c, (0, 24)).unwrap();
    assert!(t.rows.iter().all(|r| r.norm == 0.0));
    assert_eq!(t.controlled_norm, 1.5);
}

#[test]
fn integration_by_parts_improves_under_refinement() {
    // d = 1, N = 2: ∫ f(ζ) dζ + ∫ ζ d f(ζ) = ζ f(ζ) |_0^T with f = sin
    let fine = walk(4096, 1, 8);
    let xsin = FnField::scalar_state(1, 1, 3, 2.0, |j, x, _, out| {
        out[0] = match j {
            0 => x * x.cos(),
            1 => x.cos() - x * x.sin(),
            2 => -2.0 * x.sin() - x * x.cos(),
            _ => -3.0 * x.cos() + x * x.sin(),
        }
    })
    .unwrap();
    let mut errs = Vec::new();
    for k in [64, 16, 4, 1] {
        let path = every(&fine, k);
        let rp = Arc::new(signature_lift(&path, 2.5).unwrap());
        let drv = ControlledPath::driver(rp.clone()).unwrap();
        let zero = zero_control(&rp);
        let n = path.len() - 1;
        let a = rough_integral(&compose(&sin_field(), &drv, &zero).unwrap(), (0, n)).unwrap()[0];
        let b = rough_integral(&compose(&xsin, &drv, &zero).unwrap(), (0, n)).unwrap()[0];
        let (z0, z1) = (path.at(0)[0], path.at(n)[0]);
        errs.push((a + b - (z1 * z1.sin() - z0 * z0.sin())).abs());
    }
    for pair in errs.windows(2) {
        assert!(pair[1] < pair[0], "{errs:?}");
    }
}

// One-interval compensated-sum error against Σ_k ‖R^k‖_{p/(N−k)} ‖ζ^{k+1}‖_{p/(k+1)}.
fn local_ratio(y: &ControlledPath, s: usize, t: usize) -> f64 {
    let rp = y.reference();
    let exact = rough_integral(y, (s, t)).unwrap();
    let mut one = vec![0.0; exact.len()];
    integral_increment(y.point(s), y.words(), rp.dim(), &rp.increment(s, t), &mut one);
    let err = exact.iter().zip(&one).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rem = remainder_table(y, (s, t)).unwrap();
    let levels = rp.level_pvar((s, t)).unwrap();
    let rhs: f64 = (0..rp.depth())
        .map(|k| rem.rows.iter().filter(|r| r.level == k).map(|r| r.norm).fold(0.0, f64::max) * levels[k])
        .sum();
    err / rhs
}

#[test]
fn local_sewing_ratio_is_bounded() {
    let fine = walk(2048, 1, 9);
    let ratios = |k: usize| -> Vec<f64> {
        let path = every(&fine, k);
        let n = path.len() - 1;
        let rp = Arc::new(signature_lift(&path, 2.5).unwrap());
        let y = compose(&sin_field(), &ControlledPath::driver(rp.clone()).unwrap(), &zero_control(&rp)).unwrap();
        (0..4).map(|j| local_ratio(&y, j * n / 4, (j + 1) * n / 4)).collect()
    };
    let c = ratios(16).into_iter().fold(0.0, f64::max);
    for k in [8, 4, 2] {
        for r in ratios(k) {
            assert!(r <= 2.0 * c, "{r} > 2·{c}");
        }
    }
}

#[test]
fn coarsening_gap_is_reported() {
    let rp = lift(&walk(64, 2, 10).values(), 2, 2.5);
    let y = compose(
        &FnField::affine(2, 1, vec![1.0, 0.5, -0.3, 2.0, 0.0, 1.0, 1.0, 0.0], vec![0.0; 4], vec![0.0; 4]).unwrap(),
        &ControlledPath::driver(rp.clone()).unwrap(),
        &zero_control(&rp),
    )
    .unwrap();
    let rep = rough_integral_report(&y, (0, 64)).unwrap();
    let direct = rough_integral(&y, (0, 64)).unwrap();
    assert_eq!(rep.value, direct);
    assert!(rep.gap.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn integral_is_additive(seed in 0u64..1000, p in 2.0f64..4.0, a in 0usize..=40, b in 0usize..=40, c in 0usize..=40) {
        let mut w = [a, b, c];
        w.sort();
        let [s, u, t] = w;
        let rp = lift(walk(40, 2, seed).values(), 2, p);
        let field = roughctl::fixtures::sine_field(2, 1, vec![1.0, -0.5, 0.3, 0.8], vec![0.1, 0.0, -0.2, 0.4], vec![0.0; 4]).unwrap();
        let y = compose(&field, &ControlledPath::driver(rp.clone()).unwrap(), &zero_control(&rp)).unwrap();
        let whole = rough_integral(&y, (s, t)).unwrap();
        let left = rough_integral(&y, (s, u)).unwrap();
        let right = rough_integral(&y, (u, t)).unwrap();
        for i in 0..2 {
            prop_assert!((whole[i] - left[i] - right[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn composition_keeps_the_trace(seed in 0u64..1000, p in 1.0f64..4.0) {
        let rp = lift(walk(30, 1, seed).values(), 1, p);
        let gamma = SampledPath::from_fn(*rp.grid(), 1, |t| vec![(5.0 * t).cos()]).unwrap();
        let field = roughctl::fixtures::sine_field(1, 1, vec![0.7, -1.1], vec![0.2, 0.0], vec![0.5, -0.8]).unwrap();
        let x = ControlledPath::driver(rp.clone()).unwrap();
        let y = compose(&field, &x, &gamma).unwrap();
        let mut out = [0.0; 2];
        for i in 0..x.len() {
            roughctl::controlled::SmoothFunction::eval(&field, x.component(i, 0), gamma.at(i), &mut out);
            prop_assert_eq!(y.component(i, 0), &out[..]);
        }
    }
}
