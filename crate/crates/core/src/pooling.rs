//! Initial deep features: global average pooling of each channel, then a
//! signed square root, then L2 normalization.
//!
//! Accumulation happens in f64; stored results are f32. Reductions run in a
//! fixed order per sample, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::Result;
use crate::io::{FeatureMapBatch, FeatureVectorBatch};

/// Per-channel spatial mean of one `H*W*D` map (channel index fastest).
pub fn pool_sample(map: &[f32], depth: usize) -> Vec<f64> {
    let positions = map.len() / depth;
    let mut sums = vec![0.0f64; depth];
    for pixel in map.chunks_exact(depth) {
        for (s, &v) in sums.iter_mut().zip(pixel) {
            *s += v as f64;
        }
    }
    let scale = 1.0 / positions as f64;
    sums.iter_mut().for_each(|s| *s *= scale);
    sums
}

pub fn signed_sqrt(x: f64) -> f64 {
    x.signum() * x.abs().sqrt()
}

/// Signed square root of every element, in place.
pub fn power_normalize_row(row: &mut [f64]) {
    for v in row.iter_mut() {
        // zeros stay zero: sqrt(0) = 0 whatever the sign
        *v = signed_sqrt(*v);
    }
}

/// Divides by the Euclidean norm; an all-zero row is left as is.
pub fn l2_normalize_row(row: &mut [f64]) {
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter_mut().for_each(|v| *v /= norm);
    }
}

pub fn global_average_pool(maps: &FeatureMapBatch) -> Result<FeatureVectorBatch> {
    let depth = maps.depth();
    let rows: Vec<Vec<f64>> = maps
        .samples()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|m| pool_sample(m, depth))
        .collect();
    FeatureVectorBatch::from_rows_f64(depth, &rows, maps.sample_ids().to_vec())
}

pub fn power_normalize(features: &FeatureVectorBatch) -> Result<FeatureVectorBatch> {
    map_rows(features, power_normalize_row)
}

pub fn l2_normalize(features: &FeatureVectorBatch) -> Result<FeatureVectorBatch> {
    map_rows(features, l2_normalize_row)
}

/// Pool, then power-normalize, then L2-normalize. Each stage rounds its
/// output to f32, exactly as if the three stages were run separately.
pub fn compute_initial_features(maps: &FeatureMapBatch) -> Result<FeatureVectorBatch> {
    let pooled = global_average_pool(maps)?;
    let powered = power_normalize(&pooled)?;
    l2_normalize(&powered)
}

fn map_rows(features: &FeatureVectorBatch, f: fn(&mut [f64])) -> Result<FeatureVectorBatch> {
    let rows: Vec<Vec<f64>> = features
        .rows()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|r| {
            let mut row: Vec<f64> = r.iter().map(|&v| v as f64).collect();
            f(&mut row);
            row
        })
        .collect();
    FeatureVectorBatch::from_rows_f64(features.dim(), &rows, features.sample_ids().to_vec())
}
