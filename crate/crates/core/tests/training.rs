use cayley_core::learn::{train_community, FilterFamily, TrainConfig};

/// Noiseless signals of one class are identical, so a single training
/// signal per class with full-batch steps is enough.
fn noiseless(family: FilterFamily, r: usize, jacobi_k: Option<usize>) -> TrainConfig {
    TrainConfig {
        filter_family: family,
        r,
        jacobi_k,
        noise_sigma: 0.0,
        train_per_class: 1,
        test_per_class: 2,
        epochs: 3000,
        learning_rate: 0.03,
        batch_size: None,
        ..TrainConfig::default()
    }
}

#[test]
fn noiseless_signals_are_classified() {
    let cases = [
        (FilterFamily::Cayley, 1, None),
        (FilterFamily::Cayley, 2, None),
        (FilterFamily::Cayley, 3, None),
        (FilterFamily::Cayley, 1, Some(6)),
        (FilterFamily::Cayley, 3, Some(9)),
        (FilterFamily::Chebyshev, 1, None),
        (FilterFamily::Chebyshev, 2, None),
        (FilterFamily::Chebyshev, 3, None),
    ];
    for (family, r, k) in cases {
        let res = train_community(&noiseless(family, r, k)).unwrap();
        assert!(res.test_accuracy >= 0.99, "{family:?} r={r} K={k:?}: {}", res.test_accuracy);
    }
}

#[test]
fn identical_configs_give_identical_results() {
    let cfg = TrainConfig {
        r: 2,
        train_per_class: 6,
        test_per_class: 3,
        epochs: 5,
        ..TrainConfig::default()
    };
    for family in [FilterFamily::Cayley, FilterFamily::Chebyshev] {
        let cfg = TrainConfig {
            filter_family: family,
            ..cfg.clone()
        };
        let a = train_community(&cfg).unwrap();
        let b = train_community(&cfg).unwrap();
        assert_eq!(a.test_accuracy.to_bits(), b.test_accuracy.to_bits());
        assert_eq!(a.loss_curve, b.loss_curve);
        assert_eq!(a.learned_h, b.learned_h);
        assert_eq!(a.epoch_seconds.len(), 5);
    }
}

#[test]
fn seed_changes_the_run() {
    let cfg = TrainConfig {
        train_per_class: 4,
        test_per_class: 2,
        epochs: 3,
        ..TrainConfig::default()
    };
    let a = train_community(&cfg).unwrap();
    let b = train_community(&TrainConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(a.loss_curve, b.loss_curve);
}
