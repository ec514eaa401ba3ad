//! Deterministic synthetic activation maps with latent cluster structure.
//!
//! Each latent cluster has a per-channel mean drawn uniformly from [0, 1).
//! A sample's map is its cluster's channel means at every spatial position
//! plus i.i.d. Gaussian noise, so pooling recovers the cluster signal.
//! Sample ids, cluster memberships and labels depend only on the seed and
//! counts; feature values also depend on the layer name and shape, which
//! lets several aligned "layers" be generated for the same samples.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, Class, FeatureMapBatch, LabelSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub height: usize,
    pub width: usize,
    pub depth: usize,
    pub n_latent_clusters: usize,
    /// Class of each latent cluster.
    pub label_rule: Vec<Class>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Latent clusters alternate private, public, private, ...
    pub fn alternating(
        n_train: usize,
        n_test: usize,
        shape: (usize, usize, usize),
        n_latent_clusters: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        let label_rule = (0..n_latent_clusters)
            .map(|j| if j % 2 == 0 { Class::Private } else { Class::Public })
            .collect();
        Self {
            n_train,
            n_test,
            height: shape.0,
            width: shape.1,
            depth: shape.2,
            n_latent_clusters,
            label_rule,
            noise_sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::Config("n_train and n_test must be positive".into()));
        }
        if self.height == 0 || self.width == 0 || self.depth == 0 {
            return Err(Error::Config("height, width and depth must be positive".into()));
        }
        if self.n_latent_clusters == 0 {
            return Err(Error::Config("n_latent_clusters must be positive".into()));
        }
        if self.label_rule.len() != self.n_latent_clusters {
            return Err(Error::Config(format!(
                "label_rule has {} entries for {} latent clusters",
                self.label_rule.len(),
                self.n_latent_clusters
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// One split of generated data.
#[derive(Debug, Clone)]
pub struct SyntheticSplit {
    pub maps: FeatureMapBatch,
    pub labels: LabelSet,
    /// Latent cluster of each sample, in batch order.
    pub clusters: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SyntheticLayer {
    pub train: SyntheticSplit,
    pub test: SyntheticSplit,
    /// `n_latent_clusters x depth` channel means.
    pub cluster_means: Vec<Vec<f64>>,
}

/// Paths written by [`generate`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub train_tensor: PathBuf,
    pub test_tensor: PathBuf,
    pub train_labels: PathBuf,
    pub test_labels: PathBuf,
}

// FNV-1a; stable across toolchains, unlike std's hasher
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn memberships(spec: &SyntheticSpec) -> Vec<usize> {
    let total = spec.n_train + spec.n_test;
    let mut clusters: Vec<usize> = (0..total).map(|i| i % spec.n_latent_clusters).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    clusters.shuffle(&mut rng);
    clusters
}

pub fn generate_layer(spec: &SyntheticSpec, layer: &str) -> Result<SyntheticLayer> {
    spec.validate()?;
    let clusters = memberships(spec);
    let salt = fnv1a(format!("{layer}/{}x{}x{}", spec.height, spec.width, spec.depth).as_bytes());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ salt);

    let cluster_means: Vec<Vec<f64>> = (0..spec.n_latent_clusters)
        .map(|_| (0..spec.depth).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");

    let positions = spec.height * spec.width;
    let mut make_split = |prefix: &str, members: &[usize]| -> Result<SyntheticSplit> {
        let mut data = Vec::with_capacity(members.len() * positions * spec.depth);
        let mut labels = LabelSet::new();
        let mut ids = Vec::with_capacity(members.len());
        for (i, &cluster) in members.iter().enumerate() {
            let means = &cluster_means[cluster];
            for _ in 0..positions {
                for &m in means {
                    data.push((m + noise.sample(&mut rng)) as f32);
                }
            }
            let id = format!("{prefix}_{i:05}.jpg");
            labels.insert(id.clone(), spec.label_rule[cluster])?;
            ids.push(id);
        }
        Ok(SyntheticSplit {
            maps: FeatureMapBatch::new(spec.height, spec.width, spec.depth, data, ids)?,
            labels,
            clusters: members.to_vec(),
        })
    };
    let train = make_split("train", &clusters[..spec.n_train])?;
    let test = make_split("test", &clusters[spec.n_train..])?;
    Ok(SyntheticLayer {
        train,
        test,
        cluster_means,
    })
}

/// Writes `<layer>_train.udft`, `<layer>_test.udft`, `train_labels.csv`
/// and `test_labels.csv` under `out_dir`.
pub fn generate(spec: &SyntheticSpec, out_dir: impl AsRef<Path>, layer: &str) -> Result<SyntheticFiles> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let data = generate_layer(spec, layer)?;
    let files = SyntheticFiles {
        train_tensor: out_dir.join(format!("{layer}_train.udft")),
        test_tensor: out_dir.join(format!("{layer}_test.udft")),
        train_labels: out_dir.join("train_labels.csv"),
        test_labels: out_dir.join("test_labels.csv"),
    };
    io::write_tensor_file(&data.train.maps, &files.train_tensor)?;
    io::write_tensor_file(&data.test.maps, &files.test_tensor)?;
    io::write_labels(&data.train.labels, &files.train_labels)?;
    io::write_labels(&data.test.labels, &files.test_labels)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SyntheticSpec {
        SyntheticSpec::alternating(30, 10, (2, 2, 4), 4, 0.1, 9)
    }

    #[test]
    fn shapes_and_ids() {
        let layer = generate_layer(&spec(), "l47").unwrap();
        assert_eq!(layer.train.maps.count(), 30);
        assert_eq!(layer.test.maps.count(), 10);
        assert_eq!(layer.train.maps.depth(), 4);
        assert_eq!(layer.train.maps.sample_ids()[0], "train_00000.jpg");
    }

    #[test]
    fn class_balance_follows_rule() {
        let layer = generate_layer(&spec(), "x").unwrap();
        let private = layer.train.labels.iter().chain(layer.test.labels.iter())
            .filter(|(_, c)| *c == Class::Private)
            .count();
        assert_eq!(private, 20);
    }

    #[test]
    fn layers_share_memberships_but_not_values() {
        let a = generate_layer(&spec(), "a").unwrap();
        let mut other = spec();
        other.depth = 6;
        let b = generate_layer(&other, "b").unwrap();
        assert_eq!(a.train.clusters, b.train.clusters);
        assert_eq!(a.test.labels, b.test.labels);
        assert_eq!(a.train.maps.sample_ids(), b.train.maps.sample_ids());
    }

    #[test]
    fn deterministic() {
        let a = generate_layer(&spec(), "a").unwrap();
        let b = generate_layer(&spec(), "a").unwrap();
        assert_eq!(a.train.maps, b.train.maps);
    }

    #[test]
    fn rejects_mismatched_rule() {
        let mut s = spec();
        s.label_rule.pop();
        assert!(generate_layer(&s, "a").is_err());
    }
}
