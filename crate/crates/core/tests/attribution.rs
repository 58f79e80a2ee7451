use conceptsim::attribution::*;
use conceptsim::concepts::*;
use conceptsim::corpus::{generate_synthetic_bundle, ActivationBundle, SyntheticParams};
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bundle(n: usize, p: usize, seed: u64, nonneg: bool) -> ActivationBundle {
    generate_synthetic_bundle(&SyntheticParams::new(n, p, 3, 4, seed, nonneg))
        .unwrap()
        .bundle
}

fn fitted(b: &ActivationBundle, method: ExtractionMethod, k: usize) -> FittedSpace {
    let mut opts = FitOptions::default();
    opts.sae.steps = 500;
    fit_concept_space_with_codes(b, method, k, 0, &opts).unwrap()
}

/// Logit of class c of the concept model at a single code vector.
fn logit(space: &ConceptSpace, b: &ActivationBundle, u: &Array1<f64>, c: usize) -> f64 {
    let codes = u.clone().insert_axis(ndarray::Axis(0));
    concept_logits(space, b, codes.view()).unwrap()[[0, c]]
}

#[test]
fn gradient_times_input_matches_finite_differences() {
    let b = bundle(120, 10, 0, true);
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for method in ExtractionMethod::ALL {
        let f = fitted(&b, method, 4);
        let k = f.space.k;
        let mut worst = 0.0_f64;
        for _ in 0..20 {
            let u = Array1::from_shape_fn(k, |_| rng.random_range(-2.0..2.0));
            let c = rng.random_range(0..b.num_classes());
            let codes = u.clone().insert_axis(ndarray::Axis(0));
            let phi = local_importance_for(&f.space, &b, codes.view(), &[c]).unwrap().raw;
            for j in 0..k {
                let (mut up, mut down) = (u.clone(), u.clone());
                up[j] += h;
                down[j] -= h;
                let fd = u[j] * (logit(&f.space, &b, &up, c) - logit(&f.space, &b, &down, c)) / (2.0 * h);
                let rel = (phi[[0, j]] - fd).abs() / fd.abs().max(phi[[0, j]].abs()).max(1e-6);
                worst = worst.max(rel);
            }
            let total: f64 = phi.row(0).sum();
            let expected = logit(&f.space, &b, &u, c) - logit(&f.space, &b, &Array1::zeros(k), c);
            assert!((total - expected).abs() <= 1e-8, "{method}: completeness {total} vs {expected}");
        }
        assert!(worst <= 1e-4, "{method}: max relative error {worst:e}");
    }
}

#[test]
fn completeness_holds_on_training_codes() {
    let b = bundle(100, 8, 2, true);
    for method in ExtractionMethod::ALL {
        let f = fitted(&b, method, 3);
        let local = local_importance(&f.space, &b, f.codes.view()).unwrap();
        let logits = concept_logits(&f.space, &b, f.codes.view()).unwrap();
        let base = baseline_logits(&f.space, &b);
        for (i, &c) in b.predictions.iter().enumerate() {
            let gap = logits[[i, c]] - base[c];
            assert!((local.raw.row(i).sum() - gap).abs() <= 1e-8, "{method} row {i}");
        }
    }
}

#[test]
fn zero_code_has_zero_importance() {
    let b = bundle(60, 8, 1, true);
    let f = fitted(&b, ExtractionMethod::Pca, 3);
    let codes = Array2::zeros((1, 3));
    let local = local_importance_for(&f.space, &b, codes.view(), &[1]).unwrap();
    assert!(local.raw.iter().all(|&x| x == 0.0));
    assert!(local.normalized.iter().all(|&x| x == 0.0));
}

struct GlobalOracle {
    raw: Vec<Vec<f64>>,
    normalized: Vec<Vec<f64>>,
}

/// Scalar-loop recomputation: decode, apply the head, take the argmax with
/// lowest-index ties, multiply codes by the gradient, then average per class
/// in sample order.
fn global_oracle(space: &ConceptSpace, b: &ActivationBundle, codes: &Array2<f64>) -> GlobalOracle {
    let d = space.decoder_matrix();
    let offset = space.decoder_offset();
    let (n, k) = codes.dim();
    let (p, classes) = b.head_weights.dim();
    let mut grad = vec![vec![0.0; classes]; k];
    for j in 0..k {
        for c in 0..classes {
            let mut s = 0.0;
            for q in 0..p {
                s += d[[j, q]] * b.head_weights[[q, c]];
            }
            grad[j][c] = s;
        }
    }
    let mut sums = vec![vec![0.0; k]; classes];
    let mut counts = vec![0usize; classes];
    for i in 0..n {
        let mut best = (0, f64::NEG_INFINITY);
        for c in 0..classes {
            let mut l = b.head_bias[c];
            for q in 0..p {
                let mut latent = offset[q];
                for j in 0..k {
                    latent += codes[[i, j]] * d[[j, q]];
                }
                l += latent * b.head_weights[[q, c]];
            }
            if l > best.1 {
                best = (c, l);
            }
        }
        let c = best.0;
        counts[c] += 1;
        for j in 0..k {
            sums[c][j] += codes[[i, j]] * grad[j][c];
        }
    }
    let raw: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(row, &m)| row.iter().map(|x| if m > 0 { x / m as f64 } else { 0.0 }).collect())
        .collect();
    let normalized = raw
        .iter()
        .map(|row| {
            let l1: f64 = row.iter().map(|x| x.abs()).sum();
            row.iter().map(|x| if l1 > 0.0 { x / l1 } else { 0.0 }).collect()
        })
        .collect();
    GlobalOracle { raw, normalized }
}

#[test]
fn global_importance_matches_brute_force() {
    for (seed, method) in [(0, ExtractionMethod::Nmf), (1, ExtractionMethod::Pca), (2, ExtractionMethod::Ica)] {
        let b = bundle(30, 6, seed, true);
        let f = fitted(&b, method, if method == ExtractionMethod::Nmf { 4 } else { 6 });
        let g = global_importance(&f.space, &b, f.codes.view()).unwrap();
        let want = global_oracle(&f.space, &b, &f.codes);
        for c in 0..b.num_classes() {
            for j in 0..f.space.k {
                let (got, exp) = (g.raw[[c, j]], want.raw[c][j]);
                assert!((got - exp).abs() <= 1e-12 * exp.abs().max(1.0), "{method} raw [{c},{j}]: {got} vs {exp}");
                let (got, exp) = (g.normalized[[c, j]], want.normalized[c][j]);
                assert!((got - exp).abs() <= 1e-12, "{method} normalized [{c},{j}]: {got} vs {exp}");
            }
        }
    }
}

#[test]
fn global_importance_recomputed_from_local_is_bitwise_equal() {
    let b = bundle(30, 6, 3, true);
    let f = fitted(&b, ExtractionMethod::Svd, 5);
    let g = global_importance(&f.space, &b, f.codes.view()).unwrap();
    let logits = concept_logits(&f.space, &b, f.codes.view()).unwrap();
    let assigned = conceptsim::linalg::argmax_rows(logits.view());
    let local = local_importance_for(&f.space, &b, f.codes.view(), &assigned).unwrap();
    for c in 0..b.num_classes() {
        let members: Vec<usize> = (0..30).filter(|&i| assigned[i] == c).collect();
        for j in 0..5 {
            let mut s = 0.0;
            for &i in &members {
                s += local.raw[[i, j]];
            }
            let expected = if members.is_empty() { 0.0 } else { s / members.len() as f64 };
            assert_eq!(g.raw[[c, j]].to_bits(), expected.to_bits());
        }
    }
}

#[test]
fn global_importance_is_order_free() {
    let b = bundle(40, 8, 4, true);
    let f = fitted(&b, ExtractionMethod::Pca, 4);
    let g = global_importance(&f.space, &b, f.codes.view()).unwrap();
    let mut order: Vec<usize> = (0..40).collect();
    order.reverse();
    order.swap(3, 17);
    let mut shuffled = b.clone();
    shuffled.activations = b.activations.select(ndarray::Axis(0), &order);
    shuffled.predictions = order.iter().map(|&i| b.predictions[i]).collect();
    shuffled.labels = order.iter().map(|&i| b.labels[i]).collect();
    shuffled.samples = order.iter().map(|&i| b.samples[i].clone()).collect();
    let codes = f.codes.select(ndarray::Axis(0), &order);
    let h = global_importance(&f.space, &shuffled, codes.view()).unwrap();
    assert_eq!(g.class_counts, h.class_counts);
    for (x, y) in g.raw.iter().zip(h.raw.iter()) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn one_sample_per_class_reproduces_local_rows() {
    let b = bundle(30, 6, 5, true);
    let f = fitted(&b, ExtractionMethod::NoProjection, 6);
    let logits = concept_logits(&f.space, &b, f.codes.view()).unwrap();
    let assigned = conceptsim::linalg::argmax_rows(logits.view());
    let picks: Vec<usize> = (0..3).map(|c| assigned.iter().position(|&a| a == c).unwrap()).collect();
    let mut small = b.clone();
    small.activations = b.activations.select(ndarray::Axis(0), &picks);
    small.predictions = picks.iter().map(|&i| b.predictions[i]).collect();
    small.labels = picks.iter().map(|&i| b.labels[i]).collect();
    small.samples = picks.iter().map(|&i| b.samples[i].clone()).collect();
    let codes = f.codes.select(ndarray::Axis(0), &picks);
    let g = global_importance(&f.space, &small, codes.view()).unwrap();
    let local = local_importance_for(&f.space, &small, codes.view(), &[0, 1, 2]).unwrap();
    assert_eq!(g.raw, local.raw);
}

#[test]
fn normalization_examples() {
    let m = array![[2.0, -2.0], [0.0, 0.0], [1.0, 3.0]];
    let out = l1_normalize_rows(m.view());
    assert_eq!(out.row(0).to_vec(), vec![0.5, -0.5]);
    assert_eq!(out.row(1).to_vec(), vec![0.0, 0.0]);
    assert_eq!(out.row(2).to_vec(), vec![0.25, 0.75]);
}

#[test]
fn buckets_follow_the_interval_table() {
    let cases: [(f64, Option<&str>); 17] = [
        (-1.0, Some("- -")),
        (-0.65, Some("- -")),
        (-0.3, Some("- -")),
        (-0.29999999, Some("-")),
        (-0.2, Some("-")),
        (-0.05, Some("-")),
        (-0.04999999, None),
        (-0.01, None),
        (0.0, None),
        (0.04, None),
        (0.04999999, None),
        (0.05, Some("+")),
        (0.1, Some("+")),
        (0.29999999, Some("+")),
        (0.3, Some("+ +")),
        (0.7, Some("+ +")),
        (1.0, Some("+ +")),
    ];
    for (v, want) in cases {
        assert_eq!(bucket(v).unwrap().map(Bucket::symbol), want, "{v}");
    }
    for bad in [-1.5, 1.0000001, f64::NAN] {
        assert!(bucket(bad).is_err(), "{bad}");
    }
}

fn bucket_order(v: f64) -> i32 {
    match bucket(v).unwrap() {
        Some(Bucket::StrongNegative) => -2,
        Some(Bucket::Negative) => -1,
        None => 0,
        Some(Bucket::Positive) => 1,
        Some(Bucket::StrongPositive) => 2,
    }
}

proptest! {
    #[test]
    fn buckets_are_monotone(a in -1.0f64..=1.0, b in -1.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(bucket_order(lo) <= bucket_order(hi));
    }

    #[test]
    fn normalized_rows_have_unit_l1_norm(row in prop::collection::vec(-100.0f64..100.0, 1..12)) {
        let m = Array2::from_shape_vec((1, row.len()), row.clone()).unwrap();
        let out = l1_normalize_rows(m.view());
        let l1: f64 = out.iter().map(|x| x.abs()).sum();
        if row.iter().any(|&x| x != 0.0) {
            prop_assert!((l1 - 1.0).abs() <= 1e-12);
        } else {
            prop_assert_eq!(l1, 0.0);
        }
    }

    #[test]
    fn normalization_and_shown_concepts_ignore_positive_scale(
        row in prop::collection::vec(-10.0f64..10.0, 1..12),
        scale in 0.001f64..1000.0,
    ) {
        let m = Array2::from_shape_vec((1, row.len()), row.clone()).unwrap();
        let scaled = &m * scale;
        let a = l1_normalize_rows(m.view());
        let b = l1_normalize_rows(scaled.view());
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let seven = l1_normalize_rows((&m * 7.0).view());
        for (x, y) in a.iter().zip(seven.iter()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
        // away from the threshold the shown set cannot move
        if a.iter().all(|v| (v.abs() - SHOW_THRESHOLD).abs() > 1e-9) {
            prop_assert_eq!(shown_concepts(a.row(0)), shown_concepts(b.row(0)));
        }
    }
}
