use conceptsim::corpus::*;
use proptest::prelude::*;

fn bundle(seed: u64, nonneg: bool) -> ActivationBundle {
    generate_synthetic_bundle(&SyntheticParams::new(60, 10, 3, 4, seed, nonneg))
        .unwrap()
        .bundle
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_tampered_prediction_is_rejected(seed in 0u64..50, row in 0usize..60, shift in 1usize..3) {
        let mut b = bundle(seed, seed % 2 == 0);
        b.validate().unwrap();
        b.predictions[row] = (b.predictions[row] + shift) % b.num_classes();
        let rejected = matches!(b.validate(), Err(conceptsim::Error::InconsistentPredictions { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn persistence_round_trips(seed in 0u64..1000, nonneg in any::<bool>()) {
        let b = bundle(seed, nonneg);
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&b, dir.path()).unwrap();
        let back = read_bundle(dir.path()).unwrap();
        prop_assert_eq!(back, b);
    }
}

#[test]
fn synthetic_bundles_are_reproducible_and_consistent() {
    for seed in 0..5 {
        for nonneg in [true, false] {
            let a = bundle(seed, nonneg);
            assert_eq!(a, bundle(seed, nonneg));
            a.validate().unwrap();
            if nonneg {
                assert!(a.activations.iter().all(|&x| x >= 0.0));
                assert!(a.vocab_activations.iter().all(|&x| x >= 0.0));
            }
        }
    }
}
