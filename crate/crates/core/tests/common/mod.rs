//! Naive reference implementations used as test oracles. These are written
//! independently of the library code paths they check.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use udf::classifier::LinearModel;
use udf::io::{FeatureMapBatch, FeatureVectorBatch};
use udf::synthetic::SyntheticLayer;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i:04}")).collect()
}

pub fn random_vectors(rng: &mut ChaCha8Rng, n: usize, dim: usize, lo: f32, hi: f32) -> FeatureVectorBatch {
    let data = (0..n * dim).map(|_| rng.gen_range(lo..hi)).collect();
    FeatureVectorBatch::new(dim, data, ids(n)).unwrap()
}

pub fn random_maps(rng: &mut ChaCha8Rng, n: usize, h: usize, w: usize, d: usize) -> FeatureMapBatch {
    let data = (0..n * h * w * d).map(|_| rng.gen_range(0.0f32..4.0)).collect();
    FeatureMapBatch::new(h, w, d, data, ids(n)).unwrap()
}

/// Per-channel mean by explicit (sample, channel, row, column) indexing.
pub fn naive_pool(batch: &FeatureMapBatch) -> Vec<Vec<f64>> {
    let (h, w, d) = (batch.height(), batch.width(), batch.depth());
    let data = batch.data();
    let mut out = Vec::new();
    for n in 0..batch.count() {
        let mut row = Vec::with_capacity(d);
        for c in 0..d {
            let mut sum = 0.0f64;
            for r in 0..h {
                for col in 0..w {
                    sum += data[((n * h + r) * w + col) * d + c] as f64;
                }
            }
            row.push(sum / (h * w) as f64);
        }
        out.push(row);
    }
    out
}

pub fn naive_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let t = a[i] - b[i];
        s += t * t;
    }
    s.sqrt()
}

/// Triangle encoding by a plain double loop.
pub fn naive_triangle(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = centroids.len();
    let mut out = Vec::new();
    for p in points {
        let mut z = vec![0.0; k];
        let mut total = 0.0;
        for j in 0..k {
            z[j] = naive_distance(p, &centroids[j]);
            total += z[j];
        }
        let mu = total / k as f64;
        let mut row = vec![0.0; k];
        for j in 0..k {
            row[j] = if mu - z[j] > 0.0 { mu - z[j] } else { 0.0 };
        }
        out.push(row);
    }
    out
}

pub fn naive_inertia(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|p| {
            centroids
                .iter()
                .map(|c| naive_distance(p, c).powi(2))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Plain Lloyd from `k` random distinct points, until assignments settle.
pub fn naive_lloyd(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> f64 {
    let n = points.len();
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < k {
        let i = rng.gen_range(0..n);
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    let mut centroids: Vec<Vec<f64>> = picked.iter().map(|&i| points[i].clone()).collect();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..1000 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            for j in 1..k {
                if naive_distance(p, &centroids[j]) < naive_distance(p, &centroids[best]) {
                    best = j;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for j in 0..k {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == j).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..centroids[j].len() {
                centroids[j][d] = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    naive_inertia(points, &centroids)
}

/// `0.5 * (|w|^2 + b^2) + C * sum log(1 + exp(-y (w.x + b)))`, scalar loop.
pub fn naive_objective(w: &[f64], b: f64, x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let mut reg = b * b;
    for v in w {
        reg += v * v;
    }
    let mut loss = 0.0;
    for i in 0..x.len() {
        let mut z = b;
        for j in 0..w.len() {
            z += w[j] * x[i][j];
        }
        loss += (1.0 + (-y[i] * z).exp()).ln();
    }
    0.5 * reg + c * loss
}

/// Central differences of [`naive_objective`] over `(w, b)`.
pub fn finite_difference_gradient(model: &LinearModel, x: &[Vec<f64>], y: &[f64], h: f64) -> Vec<f64> {
    let mut params = model.weights.clone();
    params.push(model.bias_weight);
    let f = |p: &[f64]| {
        let (w, b) = p.split_at(p.len() - 1);
        naive_objective(w, b[0], x, y, model.c)
    };
    (0..params.len())
        .map(|j| {
            let mut up = params.clone();
            let mut down = params.clone();
            up[j] += h;
            down[j] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

pub fn random_model(rng: &mut ChaCha8Rng, dim: usize, scale: f64, c: f64) -> LinearModel {
    let mut p: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-scale..scale)).collect();
    let b = p.pop().unwrap();
    LinearModel {
        weights: p,
        bias_weight: b,
        c,
        train_meta: Default::default(),
    }
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    y[0] = 1.0;
    y[n - 1] = -1.0;
    y
}

/// Test accuracy of classifying each pooled test map by its nearest latent
/// cluster mean (means estimated from the pooled training maps) and mapping
/// that cluster through the label rule.
pub fn nearest_centroid_oracle(layer: &SyntheticLayer, label_rule: &[udf::io::Class]) -> f64 {
    let k = layer.cluster_means.len();
    let train = naive_pool(&layer.train.maps);
    let dim = train[0].len();
    let mut means = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in train.iter().zip(&layer.train.clusters) {
        counts[c] += 1;
        for d in 0..dim {
            means[c][d] += p[d];
        }
    }
    for c in 0..k {
        for d in 0..dim {
            means[c][d] /= counts[c].max(1) as f64;
        }
    }
    let test = naive_pool(&layer.test.maps);
    let mut correct = 0;
    for (p, id) in test.iter().zip(layer.test.maps.sample_ids()) {
        let mut best = 0;
        for c in 1..k {
            if naive_distance(p, &means[c]) < naive_distance(p, &means[best]) {
                best = c;
            }
        }
        if Some(label_rule[best]) == layer.test.labels.get(id) {
            correct += 1;
        }
    }
    correct as f64 / test.len() as f64
}
