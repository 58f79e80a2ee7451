use conceptsim::attribution::{global_importance, ImportanceReport};
use conceptsim::concepts::*;
use conceptsim::corpus::{generate_synthetic_bundle, ActivationBundle, SyntheticParams};
use conceptsim::metrics::*;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bundle(p: usize, nonneg: bool) -> ActivationBundle {
    generate_synthetic_bundle(&SyntheticParams::new(150, p, 3, 4, 2, nonneg))
        .unwrap()
        .bundle
}

fn vector(b: &ActivationBundle, method: ExtractionMethod, k: usize) -> MetricVector {
    let f = fit_concept_space_with_codes(b, method, k, 0, &FitOptions::default()).unwrap();
    let global = global_importance(&f.space, b, f.codes.view()).unwrap();
    let report = ImportanceReport::build(global, &b.class_names).unwrap();
    metric_vector(&f.space, b, f.codes.view(), &report).unwrap()
}

#[test]
fn full_rank_svd_is_faithful() {
    let b = bundle(12, false);
    let v = vector(&b, ExtractionMethod::Svd, 12);
    assert!(v.latents_l2 <= 1e-10, "{}", v.latents_l2);
    assert!(v.logits_l2 <= 1e-10, "{}", v.logits_l2);
    assert!(v.logits_kl <= 1e-10, "{}", v.logits_kl);
    assert_eq!(v.completeness, Some(1.0));
    assert!((v.cosine_similarity - 1.0 / 12.0).abs() <= 1e-12);
}

#[test]
fn latents_l2_shrinks_as_k_grows() {
    let b = bundle(16, false);
    for method in [ExtractionMethod::Pca, ExtractionMethod::Svd] {
        let errs: Vec<f64> = (1..=16).map(|k| vector(&b, method, k).latents_l2).collect();
        for (k, pair) in errs.windows(2).enumerate() {
            assert!(pair[1] <= pair[0] + 1e-10, "{method} k={}: {} -> {}", k + 1, pair[0], pair[1]);
        }
    }
}

#[test]
fn ratios_stay_in_unit_interval() {
    let b = bundle(12, true);
    for method in ExtractionMethod::ALL {
        let v = vector(&b, method, 5);
        assert!((0.0..=1.0).contains(&v.ratio_activated), "{method}");
        assert!((0.0..=1.0).contains(&v.ratio_important), "{method}");
        assert!(v.latents_l2 >= 0.0 && v.logits_l2 >= 0.0 && v.logits_kl >= 0.0, "{method}");
    }
}

#[test]
fn l0_matches_direct_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let codes = Array2::from_shape_fn((50, 10), |_| {
        if rng.random_bool(0.3) {
            rng.random_range(-1.0..1.0)
        } else {
            0.0
        }
    });
    let mut count = 0;
    for i in 0..50 {
        for j in 0..10 {
            if codes[[i, j]] != 0.0 {
                count += 1;
            }
        }
    }
    assert_eq!(mean_l0(codes.view()), count as f64 / 50.0);
    let dense = Array2::from_elem((5, 4), 0.5);
    assert_eq!(mean_l0(dense.view()) / 4.0, 1.0);
}

fn kl_oracle(p: &[f64], q: &[f64]) -> f64 {
    let soft = |x: &[f64]| {
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect::<Vec<f64>>()
    };
    let (a, b) = (soft(p), soft(q));
    a.iter().zip(&b).map(|(x, y)| x * (x.ln() - y.ln())).sum()
}

#[test]
fn kl_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let p: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = kl_softmax(Array1::from(p.clone()).view(), Array1::from(q.clone()).view());
        assert!((got - kl_oracle(&p, &q)).abs() <= 1e-12);
    }
}

#[test]
fn covariance_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let codes = Array2::from_shape_fn((30, 4), |_| rng.random_range(0.0..2.0));
    let means: Vec<f64> = (0..4).map(|j| codes.column(j).sum() / 30.0).collect();
    let mut total = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let s: f64 = (0..30).map(|i| (codes[[i, a]] - means[a]) * (codes[[i, b]] - means[b])).sum();
            total += s / 29.0;
        }
    }
    assert!((mean_covariance(codes.view()) - total / 16.0).abs() <= 1e-12);
}

proptest! {
    #[test]
    fn kl_is_nonnegative_and_zero_on_equal_inputs(p in prop::collection::vec(-5.0f64..5.0, 2..6), shift in -3.0f64..3.0) {
        let q: Vec<f64> = p.iter().rev().cloned().collect();
        let pa = Array1::from(p.clone());
        prop_assert!(kl_softmax(pa.view(), Array1::from(q).view()) >= 0.0);
        let shifted = pa.mapv(|x| x + shift);
        prop_assert!(kl_softmax(pa.view(), shifted.view()) <= 1e-12);
    }
}
