use proptest::prelude::*;
use roughctl::gridpath::{SampledPath, TimeGrid};
use roughctl::roughlift::{shuffle_set, signature_lift, RoughPath, TruncatedTensor, Word, WordIndex};

fn path(t1: f64, dim: usize, vals: &[f64]) -> SampledPath {
    let n = vals.len() / dim - 1;
    SampledPath::new(TimeGrid::uniform(t1, n).unwrap(), dim, vals.to_vec()).unwrap()
}

fn w(letters: &[u8]) -> Word {
    Word(letters.to_vec())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

// Interleavings as permutations σ of positions of εδ, increasing on both blocks.
fn shuffle_oracle(e: &Word, d: &Word) -> Vec<Word> {
    let joined: Vec<u8> = e.0.iter().chain(&d.0).copied().collect();
    let (m, n) = (e.len(), joined.len());
    let mut out = Vec::new();
    for sigma in permutations(n) {
        let ordered = |r: std::ops::Range<usize>| r.clone().zip(r.skip(1)).all(|(a, b)| sigma[a] < sigma[b]);
        if ordered(0..m) && ordered(m..n) {
            let mut word = vec![0u8; n];
            for (i, &s) in sigma.iter().enumerate() {
                word[s] = joined[i];
            }
            out.push(Word(word));
        }
    }
    out.sort();
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn all_words(d: usize, max_len: usize) -> Vec<Word> {
    WordIndex::new(d, max_len).words().to_vec()
}

#[test]
fn shuffle_sets_match_permutation_enumeration() {
    for e in all_words(2, 3) {
        for d in all_words(2, 3) {
            let mut got = shuffle_set(&e, &d);
            got.sort();
            assert_eq!(got, shuffle_oracle(&e, &d), "{e} ⧢ {d}");
            assert_eq!(got.len(), binomial(e.len() + d.len(), e.len()));
        }
    }
    let mut two = shuffle_set(&w(&[0]), &w(&[1]));
    two.sort();
    assert_eq!(two, vec![w(&[0, 1]), w(&[1, 0])]);
}

#[test]
fn single_segment_is_tensor_exponential() {
    let delta = [0.7, -1.3, 0.4];
    let lift = signature_lift(&path(1.0, 3, &[0.0, 0.0, 0.0, 0.7, -1.3, 0.4]), 4.0).unwrap();
    let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
    for word in all_words(3, 4) {
        let prod: f64 = word.0.iter().map(|&l| delta[l as usize]).product();
        let want = prod / fact[word.len()];
        let got = lift.value(0, 1, &word);
        assert!((got - want).abs() <= 1e-15 * (1.0 + want.abs()), "{word}: {got} vs {want}");
    }
}

#[test]
fn two_segments_satisfy_chen_at_midpoint() {
    let lift = signature_lift(&path(1.0, 2, &[0.0, 0.0, 1.0, 0.5, -0.2, 2.0]), 3.0).unwrap();
    assert!(lift.chen_check_triples(&[(0, 1, 2)]).max_violation <= 1e-15);
}

fn square(counter_clockwise: bool, per_side: usize) -> SampledPath {
    let corners: [[f64; 2]; 5] = if counter_clockwise {
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]
    } else {
        [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0], [0.0, 0.0]]
    };
    let mut vals = Vec::new();
    for s in 0..4 {
        for k in 0..per_side {
            let f = k as f64 / per_side as f64;
            for c in 0..2 {
                vals.push(corners[s][c] + f * (corners[s + 1][c] - corners[s][c]));
            }
        }
    }
    vals.extend([0.0, 0.0]);
    path(1.0, 2, &vals)
}

// ∫ x1 dx2 by trapezoid sums on a fine resampling.
fn green_oracle(p: &SampledPath) -> f64 {
    (0..p.len() - 1).map(|i| (p.at(i)[0] + p.at(i + 1)[0]) / 2.0 * (p.at(i + 1)[1] - p.at(i)[1])).sum()
}

#[test]
fn square_loop_level_two_is_signed_area() {
    for (ccw, sign) in [(true, 1.0), (false, -1.0)] {
        let lift = signature_lift(&square(ccw, 1), 2.0).unwrap();
        let fine = square(ccw, 64);
        let (a12, a21) = (lift.value(0, 4, &w(&[0, 1])), lift.value(0, 4, &w(&[1, 0])));
        assert!((a12 - green_oracle(&fine)).abs() < 1e-12);
        assert!(((a12 - a21) / 2.0 - sign).abs() < 1e-14, "{a12} {a21}");
        assert!((a12 + a21).abs() < 1e-14);
    }
}

#[test]
fn corrupted_entry_is_flagged_by_chen() {
    let lift = signature_lift(&path(1.0, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]), 2.0).unwrap();
    let mut bad = (*lift.increment(0, 3)).clone();
    let corruption = 0.25;
    bad.level_mut(2)[1] += corruption;
    lift.override_increment(0, 3, bad);
    let rep = lift.chen_check_triples(&[(0, 1, 3), (0, 2, 3)]);
    assert!(rep.max_violation >= corruption - 1e-15);
}

#[test]
fn level_one_path_is_additive() {
    let lift = signature_lift(&path(1.0, 1, &[0.0, 0.4, -0.3, 0.9, 1.1]), 1.5).unwrap();
    assert_eq!(lift.depth(), 1);
    assert!(lift.chen_check().max_violation <= 1e-15);
}

#[test]
fn square_shuffle_of_a_letter() {
    let lift = signature_lift(&path(1.0, 1, &[0.0, 0.4, -0.3, 0.9, 1.1]), 2.0).unwrap();
    for (s, t) in [(0, 4), (1, 3), (2, 4)] {
        let x = lift.value(s, t, &w(&[0]));
        assert!((x * x - 2.0 * lift.value(s, t, &w(&[0, 0]))).abs() < 1e-14);
    }
}

#[test]
fn non_geometric_cells_break_shuffle() {
    let d = 2;
    let cells: Vec<TruncatedTensor> = (0..4)
        .map(|i| {
            let f = i as f64 + 1.0;
            TruncatedTensor::from_levels(d, vec![vec![1.0], vec![0.3 * f, -0.2], vec![0.5, 0.1 * f, -0.4, 0.2]]).unwrap()
        })
        .collect();
    let rough = RoughPath::from_cells(TimeGrid::uniform(1.0, 4).unwrap(), 2.0, vec![0.0, 0.0], cells).unwrap();
    assert!(rough.shuffle_check().max_violation > 1e-3);
    assert!(rough.chen_check().max_violation <= 1e-14);
}

#[test]
fn constant_driver_has_zero_norm() {
    let lift = signature_lift(&path(1.0, 2, &[0.5, -1.0].repeat(9)), 3.0).unwrap();
    assert_eq!(lift.pvar_norm((0, 8)).unwrap(), 0.0);
}

#[test]
fn linear_scalar_norm_is_one_and_a_half() {
    let vals: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let lift = signature_lift(&path(1.0, 1, &vals), 2.0).unwrap();
    let levels = lift.level_pvar((0, 8)).unwrap();
    assert!((levels[0] - 1.0).abs() < 1e-14 && (levels[1] - 0.5).abs() < 1e-14, "{levels:?}");
}

#[test]
fn reparametrization_leaves_norm_unchanged() {
    let vals = [0.0, 0.3, 0.1, 0.8, 0.5, 1.0, 0.2];
    let base = signature_lift(&path(1.0, 1, &vals), 2.5).unwrap().pvar_norm((0, 6)).unwrap();
    let stretched = signature_lift(&path(7.5, 1, &vals), 2.5).unwrap().pvar_norm((0, 6)).unwrap();
    let paused = [0.0, 0.3, 0.3, 0.1, 0.8, 0.8, 0.8, 0.5, 1.0, 0.2, 0.2];
    let paused = signature_lift(&path(1.0, 1, &paused), 2.5).unwrap().pvar_norm((0, 10)).unwrap();
    assert!((base - stretched).abs() < 1e-14);
    assert!((base - paused).abs() < 1e-12, "{base} vs {paused}");
}

// Level-two signature from iterated sums, independent of the tensor code.
fn level_two(p: &SampledPath, s: usize, t: usize) -> Vec<f64> {
    let d = p.dim();
    let mut out = vec![0.0; d * d];
    let mut acc = vec![0.0; d];
    for a in s..t {
        let da: Vec<f64> = (0..d).map(|c| p.at(a + 1)[c] - p.at(a)[c]).collect();
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += acc[i] * da[j] + da[i] * da[j] / 2.0;
            }
        }
        for i in 0..d {
            acc[i] += da[i];
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// Σ_k sup over partitions of (Σ |ζ^k|^{p/k})^{k/p}, enumerating all 2^{n−1} partitions.
fn brute_norm(p_path: &SampledPath, p: f64) -> f64 {
    let n = p_path.len() - 1;
    let (mut l1, mut l2) = (0.0f64, 0.0f64);
    for mask in 0u32..(1 << (n - 1)) {
        let mut cuts = vec![0];
        cuts.extend((1..n).filter(|i| mask & (1 << (i - 1)) != 0));
        cuts.push(n);
        let (mut s1, mut s2) = (0.0, 0.0);
        for pair in cuts.windows(2) {
            let inc: Vec<f64> = (0..p_path.dim()).map(|c| p_path.at(pair[1])[c] - p_path.at(pair[0])[c]).collect();
            s1 += norm(&inc).powf(p);
            s2 += norm(&level_two(p_path, pair[0], pair[1])).powf(p / 2.0);
        }
        l1 = l1.max(s1);
        l2 = l2.max(s2);
    }
    l1.powf(1.0 / p) + l2.powf(2.0 / p)
}

fn arb_driver(max_dim: usize, max_n: usize) -> impl Strategy<Value = SampledPath> {
    (1usize..=max_dim, 1usize..=max_n).prop_flat_map(|(dim, n)| {
        prop::collection::vec(-1.5f64..1.5, (n + 1) * dim).prop_map(move |v| path(1.0, dim, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn lifts_are_geometric(driver in arb_driver(3, 10), p in 1.0f64..4.0) {
        let lift = signature_lift(&driver, p).unwrap();
        prop_assert!(lift.chen_check().max_violation <= 1e-10);
        prop_assert!(lift.shuffle_check().max_violation <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pvar_norm_matches_partition_enumeration(driver in arb_driver(2, 8), p in 2.0f64..3.0) {
        let n = driver.len() - 1;
        let got = signature_lift(&driver, p).unwrap().pvar_norm((0, n)).unwrap();
        let want = brute_norm(&driver, p);
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want), "{} vs {}", got, want);
    }

    #[test]
    fn restriction_commutes_with_lift(driver in arb_driver(3, 12), p in 1.0f64..4.0, a in 0usize..12, b in 0usize..12) {
        let n = driver.len() - 1;
        let (s, t) = (a.min(b).min(n - 1), a.max(b).min(n).max(a.min(b).min(n - 1) + 1));
        let whole = signature_lift(&driver, p).unwrap().restrict(s, t).unwrap();
        let part = signature_lift(&driver.restrict(s, t).unwrap(), p).unwrap();
        for i in 0..=t - s {
            for j in i..=t - s {
                prop_assert!(whole.increment(i, j).max_abs_diff(&part.increment(i, j)) <= 1e-12);
            }
        }
    }

    #[test]
    fn tensor_product_is_associative(
        a in prop::collection::vec(-1.0f64..1.0, 3),
        b in prop::collection::vec(-1.0f64..1.0, 3),
        c in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let depth = 4;
        let (x, y, z) = (TruncatedTensor::exp(&a, depth), TruncatedTensor::exp(&b, depth), TruncatedTensor::exp(&c, depth).dilate(1.7));
        let left = x.mul(&y).mul(&z);
        let right = x.mul(&y.mul(&z));
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }
}
