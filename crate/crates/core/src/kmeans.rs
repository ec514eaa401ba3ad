//! Lloyd's K-means over initial deep features, producing the codebook used
//! by the triangle encoder.

use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::FeatureVectorBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    KmeansPlusPlus,
    RandomPoints,
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans_plus_plus" | "kmeans++" => Ok(Init::KmeansPlusPlus),
            "random_points" | "random" => Ok(Init::RandomPoints),
            other => Err(Error::KMeansConfig(format!("unknown init {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Stop once the relative inertia decrease falls below this.
    pub tolerance: f64,
    pub seed: u64,
    pub init: Init,
    /// Independent fits with seeds `seed, seed+1, ...`; the lowest inertia wins.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 250,
            max_iterations: 300,
            tolerance: 1e-4,
            seed: 0,
            init: Init::KmeansPlusPlus,
            restarts: 1,
        }
    }
}

/// `k` centroids in the initial-feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    dim: usize,
    centroids: Vec<f64>,
    inertia: f64,
    iterations_run: usize,
    seed: u64,
}

impl Codebook {
    pub fn new(
        k: usize,
        dim: usize,
        centroids: Vec<f64>,
        inertia: f64,
        iterations_run: usize,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(Error::Shape(format!("codebook needs k > 0 and dim > 0, got k={k}, dim={dim}")));
        }
        if centroids.len() != k * dim {
            return Err(Error::Shape(format!(
                "codebook has {} values, expected {k}x{dim}",
                centroids.len()
            )));
        }
        if let Some(pos) = centroids.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { sample: pos / dim });
        }
        if !(inertia.is_finite() && inertia >= 0.0) {
            return Err(Error::Shape(format!("invalid inertia {inertia}")));
        }
        Ok(Self {
            k,
            dim,
            centroids,
            inertia,
            iterations_run,
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn centroid(&self, index: usize) -> &[f64] {
        &self.centroids[index * self.dim..(index + 1) * self.dim]
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Lloyd iterations of the winning fit. Not persisted in codebook files.
    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Squared Euclidean distance, accumulated in f64.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid and its squared distance; ties go to the
/// lowest index.
fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign_all(points: &[Vec<f64>], centroids: &[f64], dim: usize) -> (Vec<usize>, f64) {
    let pairs: Vec<(usize, f64)> = points
        .par_iter()
        .map(|p| nearest(p, centroids, dim))
        .collect();
    // fixed-order reduction keeps inertia independent of the thread count
    let inertia = pairs.iter().map(|&(_, d)| d).sum();
    (pairs.into_iter().map(|(j, _)| j).collect(), inertia)
}

/// Nearest-centroid index for every sample.
pub fn assign(features: &FeatureVectorBatch, codebook: &Codebook) -> Result<Vec<usize>> {
    check_dims(features.dim(), codebook.dim())?;
    let points = features.rows_f64();
    Ok(assign_all(&points, &codebook.centroids, codebook.dim).0)
}

/// Sum of squared distances from each sample to its nearest centroid.
pub fn inertia(features: &FeatureVectorBatch, codebook: &Codebook) -> Result<f64> {
    check_dims(features.dim(), codebook.dim())?;
    let points = features.rows_f64();
    Ok(assign_all(&points, &codebook.centroids, codebook.dim).1)
}

fn check_dims(features: usize, codebook: usize) -> Result<()> {
    if features != codebook {
        return Err(Error::DimMismatch {
            what: "features",
            left: features,
            other: "codebook",
            right: codebook,
        });
    }
    Ok(())
}

fn validate(features: &FeatureVectorBatch, config: &KMeansConfig) -> Result<()> {
    if config.k == 0 {
        return Err(Error::KMeansConfig("k must be positive".into()));
    }
    if config.k > features.count() {
        return Err(Error::KMeansConfig(format!(
            "k = {} exceeds the number of samples ({})",
            config.k,
            features.count()
        )));
    }
    if config.max_iterations == 0 {
        return Err(Error::KMeansConfig("max_iterations must be positive".into()));
    }
    if !(config.tolerance >= 0.0) {
        return Err(Error::KMeansConfig("tolerance must be non-negative".into()));
    }
    if let Some(pos) = features.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            sample: pos / features.dim(),
        });
    }
    Ok(())
}

/// Learns a codebook. Deterministic for a given input and config.
pub fn fit_codebook(features: &FeatureVectorBatch, config: &KMeansConfig) -> Result<Codebook> {
    validate(features, config)?;
    let points = features.rows_f64();
    let mut best: Option<Codebook> = None;
    for r in 0..config.restarts.max(1) {
        let seed = config.seed.wrapping_add(r as u64);
        let (codebook, _) = lloyd(&points, features.dim(), config, seed);
        if best.as_ref().map_or(true, |b| codebook.inertia < b.inertia) {
            best = Some(codebook);
        }
    }
    let mut best = best.expect("at least one restart");
    best.seed = config.seed;
    Ok(best)
}

/// Single fit that also returns the inertia after every assignment step
/// (the first entry is the inertia of the initial centroids).
pub fn fit_codebook_traced(
    features: &FeatureVectorBatch,
    config: &KMeansConfig,
) -> Result<(Codebook, Vec<f64>)> {
    validate(features, config)?;
    let points = features.rows_f64();
    Ok(lloyd(&points, features.dim(), config, config.seed))
}

fn lloyd(points: &[Vec<f64>], dim: usize, config: &KMeansConfig, seed: u64) -> (Codebook, Vec<f64>) {
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = match config.init {
        Init::KmeansPlusPlus => init_plus_plus(points, k, &mut rng),
        Init::RandomPoints => init_random(points, k, &mut rng),
    };

    let (mut labels, mut current) = assign_all(points, &centroids, dim);
    let mut history = vec![current];
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        update(points, &labels, &mut centroids, dim, k);
        let (next_labels, next) = assign_all(points, &centroids, dim);
        history.push(next);
        let stable = next_labels == labels;
        let previous = current;
        labels = next_labels;
        current = next;
        if stable || previous == 0.0 || (previous - current) / previous < config.tolerance {
            break;
        }
    }

    let codebook = Codebook {
        k,
        dim,
        centroids,
        inertia: current,
        iterations_run: iterations,
        seed,
    };
    (codebook, history)
}

/// Moves every centroid to the mean of its points. Empty clusters take the
/// points farthest from their (updated) centroids, one point each.
fn update(points: &[Vec<f64>], labels: &[usize], centroids: &mut [f64], dim: usize, k: usize) {
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &j) in points.iter().zip(labels) {
        counts[j] += 1;
        for (s, v) in sums[j * dim..(j + 1) * dim].iter_mut().zip(p) {
            *s += v;
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            let inv = 1.0 / counts[j] as f64;
            for (c, s) in centroids[j * dim..(j + 1) * dim]
                .iter_mut()
                .zip(&sums[j * dim..(j + 1) * dim])
            {
                *c = s * inv;
            }
        }
    }

    let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
    if empty.is_empty() {
        return;
    }
    let mut far: Vec<(usize, f64)> = points
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, &j))| (i, squared_distance(p, &centroids[j * dim..(j + 1) * dim])))
        .collect();
    // farthest first, lower sample index on ties
    far.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (j, (i, _)) in empty.into_iter().zip(far) {
        centroids[j * dim..(j + 1) * dim].copy_from_slice(&points[i]);
    }
}

fn init_random(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    index::sample(rng, points.len(), k)
        .into_iter()
        .flat_map(|i| points[i].iter().copied())
        .collect()
}

fn init_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = points[first].clone();
    let mut closest: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &points[first]))
        .collect();

    for _ in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in closest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the running sum
            pick.unwrap_or_else(|| closest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every point coincides with a centroid: fall back to an unused index
            let unused: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            unused[rng.gen_range(0..unused.len())]
        };
        chosen[pick] = true;
        centroids.extend_from_slice(&points[pick]);
        for (c, p) in closest.iter_mut().zip(points) {
            *c = c.min(squared_distance(p, &points[pick]));
        }
    }
    centroids
}
