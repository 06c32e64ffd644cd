use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use wsig_core::eros::{
    self, covariance_of, decompose, eigen, eros, eros_distance, CovarianceScaling,
    EigenDecomposition, EigenSpace, ErosWeights, WeightOptions,
};
use wsig_core::{Dialect, MetricSchema, MtsSample, SampleId, SignatureDatabase};

/// Expanded double-sum form, written independently of the library's column
/// iteration.
fn expanded_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = w.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut inner = 0.0;
        for j in 0..n {
            inner += a[(j, i)] * b[(j, i)];
        }
        total += w[i] * inner.abs();
    }
    (2.0 - 2.0 * total).max(0.0).sqrt()
}

fn schema(n: usize) -> MetricSchema {
    MetricSchema::new((0..n).map(|i| format!("m{i}")).collect(), Dialect::Sar).unwrap()
}

fn sample(label: &str, id: u64, data: DMatrix<f64>) -> MtsSample {
    let n = data.ncols();
    MtsSample::new(SampleId::new(label, id), schema(n), data, None).unwrap()
}

fn data_strategy(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (n.max(2)..40usize).prop_flat_map(move |m| {
        prop::collection::vec(-10.0f64..10.0, m * n)
            .prop_map(move |v| DMatrix::from_row_slice(m, n, &v))
    })
}

fn pair_strategy() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (2usize..7).prop_flat_map(|n| (data_strategy(n), data_strategy(n)))
}

fn pair_weights(a: &EigenDecomposition, b: &EigenDecomposition) -> ErosWeights {
    let ids = [SampleId::new("a", 0), SampleId::new("b", 0)];
    eros::compute_weights(ids.iter().zip([a, b]), WeightOptions::default())
        .unwrap()
        .0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn symmetric_and_in_range((x, y) in pair_strategy()) {
        let a = decompose(&sample("a", 0, x)).unwrap();
        let b = decompose(&sample("b", 0, y)).unwrap();
        let w = pair_weights(&a, &b);
        let ab = eros(&a, &b, &w).unwrap();
        let ba = eros(&b, &a, &w).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        let d = eros_distance(&a, &b, &w).unwrap();
        prop_assert!((0.0..=std::f64::consts::SQRT_2 + 1e-12).contains(&d));
        prop_assert_eq!(eros_distance(&a, &a, &w).unwrap(), 0.0);
        prop_assert!((d - expanded_distance(a.vectors(), b.vectors(), w.as_vector().as_slice())).abs() <= 1e-12);
    }

    #[test]
    fn sign_flips_do_not_matter((x, y) in pair_strategy(), mask in any::<u16>()) {
        let a = decompose(&sample("a", 0, x)).unwrap();
        let b = decompose(&sample("b", 0, y)).unwrap();
        let w = pair_weights(&a, &b);
        let mut flipped = b.vectors().clone();
        for (j, mut col) in flipped.column_iter_mut().enumerate() {
            if mask >> j & 1 == 1 {
                col.neg_mut();
            }
        }
        let b_flipped = EigenDecomposition::new(flipped, b.values().clone()).unwrap();
        let base = eros(&a, &b, &w).unwrap();
        prop_assert!((base - eros(&a, &b_flipped, &w).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn row_permutation_does_not_matter(x in data_strategy(4), seed in any::<u64>()) {
        let m = x.nrows();
        let mut order: Vec<usize> = (0..m).collect();
        // Deterministic shuffle from the seed.
        let mut s = seed | 1;
        for i in (1..m).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            order.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let permuted = DMatrix::from_fn(m, 4, |i, j| x[(order[i], j)]);
        let a = decompose(&sample("a", 0, x)).unwrap();
        let b = decompose(&sample("a", 1, permuted)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mean_shift_keeps_covariance(x in data_strategy(3), shift in -1e3f64..1e3, col in 0usize..3) {
        let mut shifted = x.clone();
        shifted.column_mut(col).add_scalar_mut(shift);
        let a = covariance_of(&x, CovarianceScaling::Sample).unwrap();
        let b = covariance_of(&shifted, CovarianceScaling::Sample).unwrap();
        prop_assert!((&a - &b).norm() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn eigen_matches_reference_solver(n in 1usize..12, entries in prop::collection::vec(-1.0f64..1.0, 144)) {
        let b = DMatrix::from_fn(n, n, |i, j| entries[i * 12 + j]);
        let psd = &b * b.transpose();
        let ours = eigen(&psd).unwrap();
        prop_assert!((ours.reconstruct() - &psd).norm() <= 1e-8);
        let mut reference: Vec<f64> = SymmetricEigen::new(psd.clone()).eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in ours.values().iter().zip(&reference) {
            prop_assert!((x - y.max(0.0)).abs() <= 1e-9 * psd.norm().max(1.0));
        }
        let gram = ours.vectors().tr_mul(ours.vectors());
        prop_assert!((gram - DMatrix::identity(n, n)).amax() <= 1e-8);
        prop_assert!(ours.values().as_slice().windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn rank_one_covariance_eigenvector() {
    let data = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let cov = covariance_of(&data, CovarianceScaling::Sample).unwrap();
    let e = eigen(&cov).unwrap();
    assert!((e.values()[0] - 8.0).abs() < 1e-12);
    assert!((e.vectors()[(0, 0)].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}

#[test]
fn distance_matrix_matches_pairwise_recomputation() {
    let mut state = 7u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let samples: Vec<MtsSample> = (0..3)
        .map(|i| sample("r", i, DMatrix::from_fn(20, 5, |_, _| next())))
        .collect();
    let db = SignatureDatabase::from_samples(schema(5), samples.clone()).unwrap();
    let (w, _) = eros::database_weights(&db, WeightOptions::default()).unwrap();
    let dm = eros::distance_matrix(&db, &w).unwrap();
    for i in 0..3 {
        assert_eq!(dm.get(i, i), 0.0);
        for j in 0..3 {
            let a = decompose(&samples[i]).unwrap();
            let b = decompose(&samples[j]).unwrap();
            let brute = if i == j {
                0.0
            } else {
                expanded_distance(a.vectors(), b.vectors(), w.as_vector().as_slice())
            };
            assert!((dm.get(i, j) - brute).abs() <= 1e-12, "({i},{j})");
        }
    }
    assert_eq!(dm.max_asymmetry(), 0.0);
}

#[test]
fn identical_samples_have_zero_distance() {
    let data = DMatrix::from_fn(30, 4, |i, j| {
        ((i * 7 + j * 3) % 11) as f64 + (i as f64).sin()
    });
    let db = SignatureDatabase::from_samples(
        schema(4),
        [sample("x", 0, data.clone()), sample("x", 1, data)],
    )
    .unwrap();
    let (_, dm) = eros::database_distances(&db, WeightOptions::default()).unwrap();
    assert!(dm.get(0, 1).abs() <= 1e-9);
}

#[test]
fn weights_sum_to_one_and_columns_normalized() {
    let mut state = 3u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let samples: Vec<MtsSample> = (0..6)
        .map(|i| {
            sample(
                "w",
                i,
                DMatrix::from_fn(15, 6, |_, j| next() * (j + 1) as f64 * 1e3),
            )
        })
        .collect();
    let space = EigenSpace::from_samples(&samples).unwrap();
    for agg in [
        eros::Aggregator::Mean,
        eros::Aggregator::Max,
        eros::Aggregator::Min,
    ] {
        let opts = WeightOptions {
            aggregator: agg,
            normalize_eigenvalues: true,
        };
        let (w, s) = space.weights(opts).unwrap();
        assert!((w.as_vector().sum() - 1.0).abs() <= 1e-12);
        assert!(w.as_vector().iter().all(|&x| x >= 0.0));
        for col in s.as_matrix().column_iter() {
            assert!((col.sum() - 1.0).abs() <= 1e-12);
            assert!(col.iter().all(|&x| x >= 0.0));
        }
    }
}

#[test]
fn zero_variance_column_is_kept() {
    let data = DMatrix::from_fn(10, 3, |i, j| {
        if j == 2 {
            5.0
        } else {
            (i * (j + 1)) as f64 % 4.0
        }
    });
    let e = decompose(&sample("z", 0, data)).unwrap();
    assert_eq!(e.dim(), 3);
    assert_eq!(e.values()[2], 0.0);
    assert!((e.vectors()[(2, 2)].abs() - 1.0).abs() < 1e-12);
}
