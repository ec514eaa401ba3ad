//! Triangle encoding of initial deep features against a learned codebook.
//!
//! For a sample `x` and centroids `c_0..c_{k-1}`, with `z_l = ||x - c_l||`
//! and `mu` the mean of that sample's `k` distances, component `l` of the
//! encoding is `max(0, mu - z_l)`. Centroids farther than average get zero.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{self, FeatureVectorBatch};
use crate::kmeans::Codebook;
use crate::pooling;

/// One encoded sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFeature {
    pub values: Vec<f64>,
    /// Mean distance from the sample to all centroids.
    pub mu: f64,
    pub source_dim: usize,
}

/// Euclidean distance with f64 accumulation.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            what: "left vector",
            left: a.len(),
            other: "right vector",
            right: b.len(),
        });
    }
    Ok(distance(a, b))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Encodes a single sample. The caller guarantees matching dims.
pub fn encode_sample(point: &[f64], codebook: &Codebook) -> EncodedFeature {
    let k = codebook.k();
    let distances: Vec<f64> = (0..k)
        .map(|l| distance(point, codebook.centroid(l)))
        .collect();
    let mu = distances.iter().sum::<f64>() / k as f64;
    let values = distances.iter().map(|&z| (mu - z).max(0.0)).collect();
    EncodedFeature {
        values,
        mu,
        source_dim: point.len(),
    }
}

pub fn triangle_encode(
    features: &FeatureVectorBatch,
    codebook: &Codebook,
) -> Result<FeatureVectorBatch> {
    if features.dim() != codebook.dim() {
        return Err(Error::DimMismatch {
            what: "features",
            left: features.dim(),
            other: "codebook",
            right: codebook.dim(),
        });
    }
    let rows: Vec<Vec<f64>> = features
        .rows_f64()
        .par_iter()
        .map(|p| encode_sample(p, codebook).values)
        .collect();
    FeatureVectorBatch::from_rows_f64(codebook.k(), &rows, features.sample_ids().to_vec())
}

/// Pools a tensor file, encodes it against a codebook file and writes the
/// encoded vectors. Returns the encoded batch.
pub fn encode_dataset(
    tensor_path: impl AsRef<Path>,
    codebook_path: impl AsRef<Path>,
    out_path: impl AsRef<Path>,
) -> Result<FeatureVectorBatch> {
    let maps = io::read_tensor_file(tensor_path)?;
    let codebook = io::read_codebook(codebook_path)?;
    let initial = pooling::compute_initial_features(&maps)?;
    let encoded = triangle_encode(&initial, &codebook)?;
    io::write_vector_file(&encoded, out_path)?;
    Ok(encoded)
}
