use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughctl::fraccalc::{
    bound_nu_rhs, caputo_differential, caputo_discrepancy, caputo_numeric, frac_variation_bound, memory_tail,
    nu_extend, rl_integral, ACAlphaPath,
};
use roughctl::gridpath::{holder_norm, SampledPath, TimeGrid};
use statrs::function::gamma::gamma;

fn grid(n: usize) -> TimeGrid {
    TimeGrid::uniform(1.0, n).unwrap()
}

fn scalar(g: TimeGrid, v: Vec<f64>) -> SampledPath {
    SampledPath::scalar(g, v).unwrap()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// I^α u(t) after τ = (t−s)^α, which removes the kernel singularity:
// (1/(αΓ(α))) ∫_0^{(t−r)^α} u(t − τ^{1/α}) dτ, midpoint rule.
fn rl_oracle(u: &SampledPath, alpha: f64, r: usize, t: usize) -> f64 {
    let g = u.grid();
    let (tr, tt) = (g.time(r), g.time(t));
    // cells are located by distance back from t; t − τ^{1/α} rounds to t near τ = 0
    let top = (tt - tr).powf(alpha);
    let m = 200_000;
    let dt = top / m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        let back = ((k as f64 + 0.5) * dt).powf(1.0 / alpha);
        let cell = t - 1 - ((back / g.h()).floor() as usize).min(t - 1);
        acc += u.at(cell)[0] * dt;
    }
    acc / (alpha * gamma(alpha))
}

#[test]
fn zero_control_integrates_to_zero() {
    let u = SampledPath::zeros(grid(12), 2);
    assert_eq!(rl_integral(&u, 0.3, 2, 12).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn rl_integral_matches_substitution_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &alpha in &[0.2, 0.5, 0.85] {
        let g = grid(16);
        let u = scalar(g, (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect());
        for &(r, t) in &[(0, 16), (3, 9), (5, 6)] {
            let got = rl_integral(&u, alpha, r, t).unwrap()[0];
            let want = rl_oracle(&u, alpha, r, t);
            assert!((got - want).abs() < 1e-4, "α={alpha} r={r} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn constant_path_has_zero_derivative() {
    let gamma = ACAlphaPath::constant(0.6, vec![1.5], grid(20)).unwrap();
    assert_eq!(caputo_differential(&gamma, 7), vec![0.0]);
    assert!(caputo_discrepancy(&gamma, 1).unwrap().max_error < 1e-14);
}

#[test]
fn unit_control_discrepancy_shrinks() {
    let mut last = f64::INFINITY;
    for n in [32, 64, 128, 256] {
        let g = grid(n);
        let gamma = ACAlphaPath::new(0.7, vec![0.0], scalar(g, vec![1.0; n + 1])).unwrap();
        assert_eq!(caputo_differential(&gamma, n / 2), vec![1.0]);
        let e = caputo_discrepancy(&gamma, n / 4).unwrap().max_error;
        assert!(e < last, "n={n}: {e} ≥ {last}");
        last = e;
    }
    assert!(last < 1e-2);
}

#[test]
fn identity_path_inverts_to_power() {
    let n = 512;
    let g = grid(n);
    let id = SampledPath::from_fn(g, 1, |t| vec![t]).unwrap();
    let d = caputo_numeric(&id, 0.5).unwrap();
    for i in n / 4..n {
        let want = g.time(i).sqrt() / gamma(1.5);
        assert!((d.at(i)[0] - want).abs() < 2e-3, "i={i}: {} vs {want}", d.at(i)[0]);
    }
}

#[test]
fn memory_tail_of_silent_history_is_base() {
    let gamma = ACAlphaPath::constant(0.4, vec![-0.3, 2.0], grid(10)).unwrap();
    for t in 5..=10 {
        assert_eq!(memory_tail(&gamma, 4, t), vec![-0.3, 2.0]);
    }
}

#[test]
fn memory_tail_gap_at_switch_shrinks() {
    let mut last = f64::INFINITY;
    for n in [16, 64, 256, 1024] {
        let g = grid(n);
        let gamma = ACAlphaPath::new(0.6, vec![0.0], SampledPath::from_fn(g, 1, |t| vec![1.0 + t]).unwrap()).unwrap();
        let r = n / 2;
        let gap = sup_dist(&memory_tail(&gamma, r, r + 1), &gamma.value(r));
        assert!(gap < last);
        last = gap;
    }
}

#[test]
fn fractional_variation_vanishes_without_control() {
    let gamma = ACAlphaPath::constant(0.9, vec![0.0], grid(32)).unwrap();
    let v = frac_variation_bound(&gamma, 2.5, 1.1, (4, 20)).unwrap();
    assert_eq!((v.lhs, v.rhs), (0.0, 0.0));
}

#[test]
fn fractional_variation_rejects_bad_kappa() {
    let gamma = ACAlphaPath::constant(0.9, vec![0.0], grid(8)).unwrap();
    assert!(frac_variation_bound(&gamma, 2.5, 5.0, (0, 8)).is_err());
    assert!(frac_variation_bound(&gamma, 2.5, 1.0, (0, 8)).is_err());
    let low = ACAlphaPath::constant(0.7, vec![0.0], grid(8)).unwrap();
    assert!(frac_variation_bound(&low, 2.5, 1.5, (0, 8)).is_err());
}

#[test]
fn fractional_variation_ratio_bounded_over_shrinking_windows() {
    let n = 256;
    let g = grid(n);
    let gamma = ACAlphaPath::new(0.9, vec![0.0], scalar(g, vec![1.0; n + 1])).unwrap();
    let mut ratios = Vec::new();
    for w in [128, 64, 32, 16, 8] {
        let v = frac_variation_bound(&gamma, 2.5, 1.1, (n - w, n)).unwrap();
        ratios.push(v.lhs / v.rhs);
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 4.0, "{ratios:?}");
}

fn random_gamma(rng: &mut ChaCha8Rng, g: TimeGrid, alpha: f64) -> ACAlphaPath {
    let amp = rng.gen_range(0.2..2.0);
    let u = scalar(g, (0..g.len()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect());
    ACAlphaPath::new(alpha, vec![rng.gen_range(-1.0..1.0)], u).unwrap()
}

#[test]
fn fractional_variation_fitted_constant_transfers() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = grid(64);
    let draw = |rng: &mut ChaCha8Rng| {
        let gamma = random_gamma(rng, g, 0.9);
        let r = rng.gen_range(0..48);
        let t = rng.gen_range(r + 8..=64);
        let v = frac_variation_bound(&gamma, 2.5, 1.1, (r, t)).unwrap();
        v.lhs / v.rhs
    };
    let c = (0..50).map(|_| draw(&mut rng)).fold(0.0, f64::max);
    for _ in 0..100 {
        let ratio = draw(&mut rng);
        assert!(ratio <= 1.5 * c, "{ratio} > 1.5·{c}");
    }
}

#[test]
fn holder_norm_within_kernel_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let alpha = rng.gen_range(0.2..0.95);
        let path = random_gamma(&mut rng, grid(40), alpha);
        let sup = path.pseudo_control().values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = holder_norm(&path.to_sampled(), alpha).unwrap();
        assert!(h <= 2.0 * sup / gamma(alpha + 1.0) * (1.0 + 1e-12));
    }
}

fn arb_case() -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>, Vec<f64>, usize, usize)> {
    (0.15f64..0.95, 4usize..24).prop_flat_map(|(alpha, n)| {
        let v = move || prop::collection::vec(-2.0f64..2.0, n + 1);
        (Just(alpha), v(), v(), v(), 0..n, Just(n)).prop_flat_map(|(a, u1, u2, tail, r, n)| {
            (Just(a), Just(u1), Just(u2), Just(tail), Just(r), r + 1..=n)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn extension_difference_is_memory_difference((alpha, u1, u2, tail, r, z) in arb_case()) {
        let n = u1.len() - 1;
        let g = grid(n);
        let a = ACAlphaPath::new(alpha, vec![0.3], scalar(g, u1)).unwrap();
        let b = ACAlphaPath::new(alpha, vec![-0.1], scalar(g, u2)).unwrap();
        let tail = scalar(g.sub(r, z).unwrap(), tail[..=z - r].to_vec());
        let (na, nb) = (nu_extend(&a, r, z, &tail).unwrap(), nu_extend(&b, r, z, &tail).unwrap());
        for t in r..=z {
            let lhs = na.value(t)[0] - nb.value(t)[0];
            let rhs = memory_tail(&a, r, t)[0] - memory_tail(&b, r, t)[0];
            prop_assert!((lhs - rhs).abs() <= 1e-12, "t={}: {} vs {}", t, lhs, rhs);
        }
        for t in 0..=r {
            prop_assert_eq!(na.value(t), a.value(t));
        }
    }

    #[test]
    fn zero_tail_extension_is_memory((alpha, u1, _u2, _tail, r, z) in arb_case()) {
        let n = u1.len() - 1;
        let g = grid(n);
        let a = ACAlphaPath::new(alpha, vec![0.0], scalar(g, u1)).unwrap();
        let ext = nu_extend(&a, r, z, &SampledPath::zeros(g.sub(r, z).unwrap(), 1)).unwrap();
        for t in r..=z {
            prop_assert!(sup_dist(&ext.value(t), &memory_tail(&a, r, t)) <= 1e-14);
        }
    }

    #[test]
    fn extension_is_lipschitz_in_history((alpha, u1, u2, tail, r, z) in arb_case()) {
        let n = u1.len() - 1;
        let g = grid(n);
        let a = ACAlphaPath::new(alpha, vec![0.2], scalar(g, u1)).unwrap();
        let b = ACAlphaPath::new(alpha, vec![0.2], scalar(g, u2)).unwrap();
        let tail = scalar(g.sub(r, z).unwrap(), tail[..=z - r].to_vec());
        let (na, nb) = (nu_extend(&a, r, z, &tail).unwrap(), nu_extend(&b, r, z, &tail).unwrap());
        let hist = (0..=r).map(|t| sup_dist(&a.value(t), &b.value(t))).fold(0.0, f64::max);
        for t in r..=z {
            let d = sup_dist(&na.value(t), &nb.value(t));
            prop_assert!(d <= 2.0 * hist + 1e-12, "t={}: {} > 2·{}", t, d, hist);
        }
    }

    #[test]
    fn extension_obeys_tail_estimate((alpha, u1, _u2, tail, r, z) in arb_case(), q in 2.0f64..12.0) {
        prop_assume!(q * alpha > 1.0);
        let n = u1.len() - 1;
        let g = grid(n);
        let k = u1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let a = ACAlphaPath::new(alpha, vec![0.0], scalar(g, u1)).unwrap();
        let tail_u = scalar(g.sub(r, z).unwrap(), tail[..=z - r].to_vec());
        let ext = nu_extend(&a, r, z, &tail_u).unwrap();
        for t in r + 1..=z {
            let c_tilde: f64 = (0..t - r).map(|c| tail_u.at(c)[0].abs().powf(q) * g.h()).sum();
            let rhs = bound_nu_rhs(alpha, q, c_tilde, k, g.time(t) - g.time(r)).unwrap();
            let lhs = sup_dist(&ext.value(t), &a.value(t));
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14, "t={}: {} > {}", t, lhs, rhs);
        }
    }
}
