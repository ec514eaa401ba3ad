mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use udf::classifier::{self, LinearModel, TrainOptions};
use udf::encoding;
use udf::fusion;
use udf::io::{self, FeatureMapBatch, FeatureVectorBatch};
use udf::kmeans::{self, Codebook, KMeansConfig};

fn vector_batch() -> impl Strategy<Value = FeatureVectorBatch> {
    (1usize..6, 1usize..8).prop_flat_map(|(n, dim)| {
        prop::collection::vec(-1e3f32..1e3, n * dim)
            .prop_map(move |data| FeatureVectorBatch::new(dim, data, ids(n)).unwrap())
    })
}

fn map_batch() -> impl Strategy<Value = FeatureMapBatch> {
    (1usize..4, 1usize..4, 1usize..4, 1usize..5).prop_flat_map(|(n, h, w, d)| {
        prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), n * h * w * d)
            .prop_map(move |data| FeatureMapBatch::new(h, w, d, data, ids(n)).unwrap())
    })
}

proptest! {
    #[test]
    fn tensor_files_round_trip_bitwise(batch in map_batch()) {
        let bytes = io::encode_tensor(&batch).unwrap();
        let back = io::decode_tensor(&bytes, std::path::Path::new("p")).unwrap();
        let bits = |b: &FeatureMapBatch| b.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&batch));
        prop_assert_eq!(back.sample_ids(), batch.sample_ids());
        let id_bytes: usize = batch.sample_ids().iter().map(|s| 2 + s.len()).sum();
        prop_assert_eq!(bytes.len(), 24 + id_bytes + 4 * batch.data().len());
    }

    #[test]
    fn vector_files_round_trip(batch in vector_batch()) {
        let bytes = io::encode_vectors(&batch).unwrap();
        prop_assert_eq!(io::decode_vectors(&bytes, std::path::Path::new("p")).unwrap(), batch);
    }

    #[test]
    fn fusion_places_columns(a in vector_batch(), extra in 1usize..5) {
        let mut r = rng(a.count() as u64);
        let b = FeatureVectorBatch::new(
            extra,
            (0..a.count() * extra).map(|_| r.gen_range(-1.0..1.0)).collect(),
            a.sample_ids().to_vec(),
        ).unwrap();
        let fused = fusion::serial_fuse(&a, &b).unwrap();
        prop_assert_eq!(fused.dim(), a.dim() + b.dim());
        for i in 0..a.count() {
            prop_assert_eq!(&fused.row(i)[..a.dim()], a.row(i));
            prop_assert_eq!(&fused.row(i)[a.dim()..], b.row(i));
        }
    }

    #[test]
    fn encoding_translation_covariance(seed in any::<u64>(), shift in prop::collection::vec(-5.0f64..5.0, 4)) {
        let mut r = rng(seed);
        let points: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let cents: Vec<f64> = (0..5 * 4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let moved: Vec<f64> = cents.iter().enumerate().map(|(i, c)| c + shift[i % 4]).collect();
        let a = Codebook::new(5, 4, cents, 0.0, 0, 0).unwrap();
        let b = Codebook::new(5, 4, moved, 0.0, 0, 0).unwrap();
        for p in &points {
            let q: Vec<f64> = p.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let ea = encoding::encode_sample(p, &a);
            let eb = encoding::encode_sample(&q, &b);
            for (x, y) in ea.values.iter().zip(&eb.values) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn kmeans_is_deterministic(seed in 0u64..1000, k in 1usize..6) {
        let mut r = rng(seed);
        let features = random_vectors(&mut r, 30, 3, -1.0, 1.0);
        let config = KMeansConfig { k, seed, ..Default::default() };
        let a = kmeans::fit_codebook(&features, &config).unwrap();
        let b = kmeans::fit_codebook(&features, &config).unwrap();
        let bits = |c: &Codebook| c.centroids().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn kmeans_inertia_never_increases(seed in any::<u64>()) {
        let mut r = rng(seed);
        let features = random_vectors(&mut r, 60, 4, 0.0, 1.0);
        let config = KMeansConfig { k: 7, seed, tolerance: 0.0, ..Default::default() };
        let (_, history) = kmeans::fit_codebook_traced(&features, &config).unwrap();
        for w in history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", history);
        }
    }

    #[test]
    fn prediction_is_scale_invariant(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let mut r = rng(seed);
        let batch = random_vectors(&mut r, 20, 3, -1.0, 1.0);
        let model = random_model(&mut r, 3, 1.0, 1.0);
        let scaled = LinearModel::from_augmented(
            &model.augmented().iter().map(|v| v * scale).collect::<Vec<_>>(),
            1.0,
        );
        let a = classifier::predict(&model, &batch).unwrap();
        let b = classifier::predict(&scaled, &batch).unwrap();
        prop_assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn optimizer_objective_is_monotone(seed in any::<u64>(), c in 0.1f64..50.0) {
        let mut r = rng(seed);
        let batch = random_vectors(&mut r, 30, 4, -1.0, 1.0);
        let y = random_labels(&mut r, 30);
        let (_, history) = classifier::train_traced(&batch, &y, c, &TrainOptions::default(), None).unwrap();
        for w in history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }
}

#[test]
fn permuted_input_gives_same_centroid_multiset() {
    let mut r = rng(77);
    // three tight, well separated groups so the optimum is unique
    let centers = [[0.0f32, 0.0], [5.0, 5.0], [-5.0, 4.0]];
    let mut data = Vec::new();
    for i in 0..30 {
        let c = centers[i % 3];
        data.push(c[0] + r.gen_range(-0.3..0.3));
        data.push(c[1] + r.gen_range(-0.3..0.3));
    }
    let features = FeatureVectorBatch::new(2, data.clone(), ids(30)).unwrap();
    let mut order: Vec<usize> = (0..30).collect();
    order.reverse();
    let permuted = features.select(&order);
    let config = KMeansConfig { k: 3, seed: 5, ..Default::default() };
    let sorted = |c: &Codebook| {
        let mut rows: Vec<Vec<f64>> = c.centroids().chunks(2).map(|x| x.to_vec()).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows
    };
    let a = sorted(&kmeans::fit_codebook(&features, &config).unwrap());
    let b = sorted(&kmeans::fit_codebook(&permuted, &config).unwrap());
    for (x, y) in a.iter().zip(&b) {
        for (u, v) in x.iter().zip(y) {
            assert!((u - v).abs() <= 1e-6);
        }
    }
}
