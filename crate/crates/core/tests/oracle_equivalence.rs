mod common;

use common::*;
use genscope_core::{
    evaluate_layer, inertia, kmeans_fit, knn_purity, knn_purity_per_class, nmi, pca_fit,
    synth_blobs, DenseMatrix, KMeansConfig, KnnRule, LabelVector, Partition,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn partition_pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..=50, 1usize..=6, 1usize..=6).prop_flat_map(|(n, ka, kb)| {
        (
            prop::collection::vec(0..ka, n),
            prop::collection::vec(0..kb, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nmi_matches_joint_entropy_oracle((a, b) in partition_pair()) {
        let got = nmi(&Partition::new(a.clone()).unwrap(), &Partition::new(b.clone()).unwrap()).unwrap();
        let want = nmi_oracle(&a, &b);
        prop_assert!((got - want).abs() <= 1e-12, "got {got}, oracle {want}");
    }
}

/// Small grid coordinates make exact distance ties and duplicate points common.
fn knn_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, usize)> {
    (2usize..=60, 1usize..=5, 2usize..=4).prop_flat_map(|(n, d, classes)| {
        (
            prop::collection::vec(prop::collection::vec((-3i32..=3).prop_map(f64::from), d), n),
            prop::collection::vec(0..classes, n),
            1usize..=n,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn knn_purity_matches_full_sort_oracle((rows, labels, k) in knn_case()) {
        let data = DenseMatrix::from_rows(&rows).unwrap();
        let part = Partition::new(labels.clone()).unwrap();
        let got = knn_purity(&data, &part, k).unwrap();
        prop_assert_eq!(got, knn_oracle(&rows, &labels, |_| k));

        let sizes = part.part_sizes();
        let got = knn_purity_per_class(&data, &part).unwrap();
        prop_assert_eq!(got, knn_oracle(&rows, &labels, |i| sizes[labels[i]]));
    }
}

#[test]
fn two_tight_classes_of_three() {
    let rows = vec![
        vec![0.0, 0.0],
        vec![0.2, 0.1],
        vec![0.1, 0.3],
        vec![20.0, 0.0],
        vec![20.1, 0.2],
        vec![19.8, 0.1],
    ];
    let labels = vec![0, 0, 0, 1, 1, 1];
    let want = knn_oracle(&rows, &labels, |_| 3);
    assert_eq!(want, 2.0 / 3.0);
    let got = knn_purity(
        &DenseMatrix::from_rows(&rows).unwrap(),
        &Partition::new(labels).unwrap(),
        3,
    )
    .unwrap();
    assert_eq!(got, want);
}

#[test]
fn interleaved_line_has_zero_purity() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
    assert_eq!(knn_oracle(&rows, &labels, |_| 1), 0.0);
    let got = knn_purity(
        &DenseMatrix::from_rows(&rows).unwrap(),
        &Partition::new(labels).unwrap(),
        1,
    )
    .unwrap();
    assert_eq!(got, 0.0);
}

#[test]
fn two_separated_groups_match_brute_force_bipartition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20u64 {
        let n = 4 + (trial as usize % 7); // 4..=10
        let mut rows = gaussian_rows(n, 3, 100 + trial);
        for r in rows.iter_mut().skip(n / 2) {
            r[0] += 50.0;
        }
        // keep the grouping true while shuffling row order
        let perm = random_permutation(n, &mut rng);
        let rows: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();

        let (best_cost, best_assign) = best_bipartition(&rows);
        let data = DenseMatrix::from_rows(&rows).unwrap();
        let fit = kmeans_fit(&data, &KMeansConfig::new(2, trial)).unwrap();
        assert!((fit.inertia - best_cost).abs() <= 1e-9 * best_cost.max(1.0));
        let same_groups = Partition::new(best_assign).unwrap();
        assert_eq!(nmi(&fit.assignment, &same_groups).unwrap(), 1.0);
        for i in 0..n {
            for j in 0..n {
                let together = perm[i] < n / 2 && perm[j] < n / 2 || perm[i] >= n / 2 && perm[j] >= n / 2;
                let clustered = fit.assignment.labels()[i] == fit.assignment.labels()[j];
                assert_eq!(together, clustered);
            }
        }
    }
}

#[test]
fn inertia_three_points_on_a_line() {
    let data = DenseMatrix::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
    let centroids = DenseMatrix::from_rows(&[[0.5], [5.0]]).unwrap();
    let a = Partition::new(vec![0, 0, 1]).unwrap();
    let oracle: f64 = [(0.0, 0.5), (1.0, 0.5), (5.0, 5.0)]
        .iter()
        .map(|(x, c): &(f64, f64)| (x - c).powi(2))
        .sum();
    assert_eq!(inertia(&data, &centroids, &a).unwrap(), oracle);
    assert_eq!(oracle, 0.5);
}

#[test]
fn pca_three_by_three_matches_high_precision_reference() {
    // Reference eigenpairs of this sample's covariance (divisor n - 1),
    // computed at 50 significant digits, rounded to double precision,
    // signs flipped so each vector's largest-magnitude entry is positive.
    let data = DenseMatrix::from_rows(&[
        [2.0, 0.0, 1.0],
        [-1.0, 3.0, 0.0],
        [0.0, -2.0, 4.0],
        [3.0, 1.0, -1.0],
        [1.0, 1.0, 1.0],
        [-2.0, 0.0, 2.0],
    ])
    .unwrap();
    let want_values = [5.675_929_954_755_393, 3.347_290_461_408_799, 0.143_446_250_502_474_33];
    let want_vectors = [
        [-0.463_906_724_343_627_7, -0.531_921_472_824_752, 0.708_413_789_996_151_9],
        [0.822_213_506_182_058_2, -0.556_215_167_071_655_2, 0.120_787_574_573_120_87],
        [0.329_780_989_992_710_04, 0.638_501_554_162_084_5, 0.695_384_975_371_218_9],
    ];
    let model = pca_fit(&data, 3).unwrap();
    for (got, want) in model.eigenvalues.iter().zip(want_values) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    for (row, want) in model.components.iter_rows().zip(want_vectors) {
        for (g, w) in row.iter().zip(want) {
            assert!((g - w).abs() < 1e-10, "{row:?} vs {want:?}");
        }
    }
}

/// Null distribution of NMI between balanced ground truth (5 x 100) and an
/// independent random balanced labeling.
fn null_nmi_quantile(draws: usize, q: f64) -> (f64, f64) {
    let truth: Vec<usize> = (0..500).map(|i| i / 100).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut values: Vec<f64> = (0..draws)
        .map(|_| {
            let perm = random_permutation(500, &mut rng);
            let shuffled: Vec<usize> = perm.iter().map(|&i| truth[i]).collect();
            nmi_oracle(&truth, &shuffled)
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / draws as f64;
    (mean, values[((draws as f64 - 1.0) * q) as usize])
}

#[test]
fn monte_carlo_null_nmi_is_far_below_threshold() {
    let (mean, p999) = null_nmi_quantile(1000, 0.999);
    assert!(mean > 0.0 && mean < 0.03, "mean null NMI {mean}");
    assert!(p999 < 0.05, "99.9th percentile {p999}");
}

#[test]
fn evaluate_layer_on_separated_blobs() {
    let bundle = synth_blobs(5, 100, 8, 10.0, 3).unwrap();
    let (_, data) = &bundle.stack.layers()[0];
    let cfg = KMeansConfig::new(5, 0);
    let m = evaluate_layer("l", 0, data, &bundle.labels, &cfg, KnnRule::Balanced).unwrap();
    assert!(m.nmi >= 0.99, "{}", m.nmi);

    // the same geometry with labels shuffled across points
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let perm = random_permutation(500, &mut rng);
    let shuffled: Vec<usize> = perm.iter().map(|&i| bundle.labels.labels()[i]).collect();
    let shuffled = LabelVector::from_canonical(shuffled).unwrap();
    let m = evaluate_layer("l", 0, data, &shuffled, &cfg, KnnRule::Balanced).unwrap();
    assert!(m.nmi <= 0.1, "{}", m.nmi);
}

#[test]
fn zero_separation_is_near_null() {
    for seed in 0..3 {
        let bundle = synth_blobs(5, 100, 8, 0.0, seed).unwrap();
        let (_, data) = &bundle.stack.layers()[0];
        let m = evaluate_layer("l", 0, data, &bundle.labels, &KMeansConfig::new(5, seed), KnnRule::PerPoint).unwrap();
        assert!(m.nmi <= 0.1, "seed {seed}: {}", m.nmi);
    }
}
