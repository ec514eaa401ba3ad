//! End-to-end runs driven by a TOML config: pooling, codebook learning and
//! encoding per layer, optional serial fusion of two layers, then C
//! selection, training and evaluation for every feature set. Each run writes
//! a `manifest.toml` with the resolved config, SHA-256 checksums of every
//! data artifact, and metrics.
//!
//! Config example (relative paths resolve against the config's directory):
//!
//! ```toml
//! output_dir = "run"
//! labels_train = "train_labels.csv"
//! labels_test = "test_labels.csv"
//! seed = 0
//! k = 250
//! fusion_pair = ["l47", "avg_pool"]   # optional
//! evaluate_initial = false           # also classify the pooled features
//!
//! [[layers]]
//! name = "l47"
//! train = "l47_train.udft"
//! test = "l47_test.udft"
//!
//! [kmeans]
//! max_iterations = 300
//! tolerance = 1e-4
//! init = "kmeans_plus_plus"
//! restarts = 1
//!
//! [classifier]
//! c_values = [1.0, 2.0, 3.0]
//! folds = 5
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{self, GridSearchConfig, TrainOptions};
use crate::encoding;
use crate::error::{Error, Result};
use crate::fusion;
use crate::io::{self, FeatureVectorBatch, LabelSet};
use crate::kmeans::{self, Init, KMeansConfig};
use crate::pooling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerPaths {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansSection {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub init: Init,
    pub restarts: usize,
}

impl Default for KMeansSection {
    fn default() -> Self {
        let d = KMeansConfig::default();
        Self {
            max_iterations: d.max_iterations,
            tolerance: d.tolerance,
            init: d.init,
            restarts: d.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub c_values: Vec<f64>,
    pub folds: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let d = GridSearchConfig::default();
        Self {
            c_values: d.c_values,
            folds: d.folds,
            tolerance: d.train.tolerance,
            max_iterations: d.train.max_iterations,
        }
    }
}

fn default_k() -> usize {
    250
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub labels_train: PathBuf,
    pub labels_test: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion_pair: Option<(String, String)>,
    #[serde(default)]
    pub evaluate_initial: bool,
    pub layers: Vec<LayerPaths>,
    #[serde(default)]
    pub kmeans: KMeansSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.labels_train);
        fix(&mut self.labels_test);
        for layer in &mut self.layers {
            fix(&mut layer.train);
            fix(&mut layer.test);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            max_iterations: self.kmeans.max_iterations,
            tolerance: self.kmeans.tolerance,
            seed: self.seed,
            init: self.kmeans.init,
            restarts: self.kmeans.restarts,
        }
    }

    pub fn grid_config(&self) -> GridSearchConfig {
        GridSearchConfig {
            c_values: self.classifier.c_values.clone(),
            folds: self.classifier.folds,
            seed: self.seed,
            train: TrainOptions {
                tolerance: self.classifier.tolerance,
                max_iterations: self.classifier.max_iterations,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("at least one [[layers]] entry is required".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.name.is_empty() || layer.name.contains(['/', '\\']) {
                return Err(Error::Config(format!("invalid layer name {:?}", layer.name)));
            }
            if layer.name == FUSED || layer.name.ends_with(IDF_SUFFIX) {
                return Err(Error::Config(format!("layer name {:?} is reserved", layer.name)));
            }
            if self.layers[..i].iter().any(|l| l.name == layer.name) {
                return Err(Error::Config(format!("layer {:?} listed twice", layer.name)));
            }
        }
        if let Some((a, b)) = &self.fusion_pair {
            if a == b {
                return Err(Error::Config("fusion_pair must name two distinct layers".into()));
            }
            for name in [a, b] {
                if !self.layers.iter().any(|l| &l.name == name) {
                    return Err(Error::Config(format!("fusion_pair names unknown layer {name:?}")));
                }
            }
        }
        let mut paths = vec![&self.labels_train, &self.labels_test];
        for layer in &self.layers {
            paths.push(&layer.train);
            paths.push(&layer.test);
        }
        for path in paths {
            if !path.exists() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        Ok(())
    }
}

const FUSED: &str = "fused";
const IDF_SUFFIX: &str = "_idf";

/// Per-feature-set outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub dim: usize,
    pub best_c: f64,
    pub cv_accuracy: f64,
    pub accuracy: f64,
    pub predict_seconds: f64,
    /// `[actual][predicted]`, 0 = private, 1 = public.
    pub confusion: [[usize; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookInfo {
    pub k: usize,
    pub dim: usize,
    pub inertia: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    /// Artifact file name -> SHA-256 hex digest.
    pub files: BTreeMap<String, String>,
    pub codebooks: BTreeMap<String, CodebookInfo>,
    pub metrics: BTreeMap<String, MethodMetrics>,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// Output file names used by [`run_pipeline`], relative to `output_dir`.
pub mod names {
    pub fn initial(layer: &str, split: &str) -> String {
        format!("{layer}.{split}.idf.udfv")
    }
    pub fn codebook(layer: &str) -> String {
        format!("{layer}.udfc")
    }
    pub fn encoded(method: &str, split: &str) -> String {
        format!("{method}.{split}.udf.udfv")
    }
    pub fn model(method: &str) -> String {
        format!("{method}.udfm")
    }
    pub fn cv_table(method: &str) -> String {
        format!("{method}.cv.csv")
    }
    pub fn predictions(method: &str) -> String {
        format!("{method}.predictions.csv")
    }
    pub fn eval(method: &str) -> String {
        format!("{method}.eval.txt")
    }
    pub const MANIFEST: &str = "manifest.toml";
}

struct Recorder<'a> {
    dir: &'a Path,
    files: BTreeMap<String, String>,
}

impl Recorder<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, name: &str) -> Result<()> {
        let digest = sha256_file(&self.path(name))?;
        self.files.insert(name.to_owned(), digest);
        Ok(())
    }

    fn vectors(&mut self, batch: &FeatureVectorBatch, name: &str) -> Result<()> {
        io::write_vector_file(batch, self.path(name))?;
        self.record(name)
    }

    fn text(&mut self, text: &str, name: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.record(name)
    }
}

/// Writes the grid-search table as CSV (`c,mean_accuracy,fold_1,...`).
pub fn cv_table_csv(result: &classifier::GridSearchResult) -> String {
    let folds = result.table.first().map_or(0, |r| r.fold_accuracies.len());
    let mut out = String::from("c,mean_accuracy");
    for f in 1..=folds {
        let _ = write!(out, ",fold_{f}");
    }
    out.push('\n');
    for row in &result.table {
        let _ = write!(out, "{},{}", row.c, row.mean_accuracy);
        for a in &row.fold_accuracies {
            let _ = write!(out, ",{a}");
        }
        out.push('\n');
    }
    out
}

/// `sample_id,predicted,score` rows.
pub fn predictions_csv(ids: &[String], predictions: &classifier::Predictions) -> String {
    let mut out = String::from("sample_id,predicted,score\n");
    for ((id, label), score) in ids.iter().zip(&predictions.labels).zip(&predictions.scores) {
        let _ = writeln!(out, "{id},{label},{score}");
    }
    out
}

/// Selects C by cross-validation, trains on the full training set and
/// evaluates on the test set, writing model, CV table, predictions and the
/// evaluation report.
fn classify(
    rec: &mut Recorder<'_>,
    method: &str,
    train: &FeatureVectorBatch,
    test: &FeatureVectorBatch,
    labels_train: &LabelSet,
    labels_test: &LabelSet,
    grid: &GridSearchConfig,
) -> Result<MethodMetrics> {
    let y_train = labels_train.signs_for(train.sample_ids())?;
    let y_test = labels_test.signs_for(test.sample_ids())?;
    let search = classifier::grid_search(train, &y_train, grid)?;
    rec.text(&cv_table_csv(&search), &names::cv_table(method))?;

    let model = classifier::train(train, &y_train, search.best_c, &grid.train)?;
    io::write_model(&model, rec.path(&names::model(method)))?;
    rec.record(&names::model(method))?;

    let report = classifier::evaluate(&model, test, &y_test)?;
    let predictions = classifier::predict(&model, test)?;
    rec.text(&predictions_csv(test.sample_ids(), &predictions), &names::predictions(method))?;

    // timing varies between runs, so the report is written but not checksummed
    let eval_path = rec.path(&names::eval(method));
    let body = format!("method={method}\nbest_c={}\n{}", search.best_c, report.to_key_values());
    std::fs::write(&eval_path, body).map_err(|e| Error::io(&eval_path, e))?;

    Ok(MethodMetrics {
        dim: train.dim(),
        best_c: search.best_c,
        cv_accuracy: search.best_accuracy,
        accuracy: report.accuracy,
        predict_seconds: report.predict_seconds,
        confusion: report.confusion,
    })
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let labels_train = io::read_labels(&config.labels_train)?;
    let labels_test = io::read_labels(&config.labels_test)?;
    let kmeans_config = config.kmeans_config();
    let grid = config.grid_config();

    let mut rec = Recorder {
        dir: out,
        files: BTreeMap::new(),
    };
    let mut codebooks = BTreeMap::new();
    let mut metrics = BTreeMap::new();
    let mut encoded: BTreeMap<&str, (FeatureVectorBatch, FeatureVectorBatch)> = BTreeMap::new();

    for layer in &config.layers {
        let name = layer.name.as_str();
        let train_idf = pooling::compute_initial_features(&io::read_tensor_file(&layer.train)?)?;
        let test_idf = pooling::compute_initial_features(&io::read_tensor_file(&layer.test)?)?;
        rec.vectors(&train_idf, &names::initial(name, "train"))?;
        rec.vectors(&test_idf, &names::initial(name, "test"))?;

        let codebook = kmeans::fit_codebook(&train_idf, &kmeans_config)?;
        io::write_codebook(&codebook, rec.path(&names::codebook(name)))?;
        rec.record(&names::codebook(name))?;
        codebooks.insert(
            name.to_owned(),
            CodebookInfo {
                k: codebook.k(),
                dim: codebook.dim(),
                inertia: codebook.inertia(),
                iterations: codebook.iterations_run(),
            },
        );

        let train_udf = encoding::triangle_encode(&train_idf, &codebook)?;
        let test_udf = encoding::triangle_encode(&test_idf, &codebook)?;
        rec.vectors(&train_udf, &names::encoded(name, "train"))?;
        rec.vectors(&test_udf, &names::encoded(name, "test"))?;

        if config.evaluate_initial {
            let method = format!("{name}{IDF_SUFFIX}");
            let m = classify(&mut rec, &method, &train_idf, &test_idf, &labels_train, &labels_test, &grid)?;
            metrics.insert(method, m);
        }
        let m = classify(&mut rec, name, &train_udf, &test_udf, &labels_train, &labels_test, &grid)?;
        metrics.insert(name.to_owned(), m);
        encoded.insert(name, (train_udf, test_udf));
    }

    if let Some((a, b)) = &config.fusion_pair {
        let (a_train, a_test) = &encoded[a.as_str()];
        let (b_train, b_test) = &encoded[b.as_str()];
        let train = fusion::serial_fuse(a_train, b_train)?;
        let test = fusion::serial_fuse(a_test, b_test)?;
        rec.vectors(&train, &names::encoded(FUSED, "train"))?;
        rec.vectors(&test, &names::encoded(FUSED, "test"))?;
        let m = classify(&mut rec, FUSED, &train, &test, &labels_train, &labels_test, &grid)?;
        metrics.insert(FUSED.to_owned(), m);
    }

    let manifest = Manifest {
        config: config.clone(),
        files: rec.files,
        codebooks,
        metrics,
    };
    let path = out.join(names::MANIFEST);
    std::fs::write(&path, manifest.to_toml()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub method: String,
    pub dim: usize,
    pub best_c: f64,
    pub cv_accuracy: f64,
    pub accuracy: f64,
}

/// Runs the pipeline once per `k`, each into `output_dir/k<k>`, and writes
/// `k_sweep.csv` into `output_dir`.
pub fn run_k_sweep(config: &PipelineConfig, ks: &[usize]) -> Result<Vec<SweepRow>> {
    if ks.is_empty() {
        return Err(Error::Config("k-sweep needs at least one k".into()));
    }
    let mut rows = Vec::new();
    for &k in ks {
        let mut run = config.clone();
        run.k = k;
        run.output_dir = config.output_dir.join(format!("k{k}"));
        let manifest = run_pipeline(&run)?;
        for (method, m) in &manifest.metrics {
            rows.push(SweepRow {
                k,
                method: method.clone(),
                dim: m.dim,
                best_c: m.best_c,
                cv_accuracy: m.cv_accuracy,
                accuracy: m.accuracy,
            });
        }
    }
    let path = config.output_dir.join("k_sweep.csv");
    std::fs::write(&path, sweep_csv(&rows)).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,method,dim,best_c,cv_accuracy,accuracy\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k, r.method, r.dim, r.best_c, r.cv_accuracy, r.accuracy
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
output_dir = "out"
labels_train = "tr.csv"
labels_test = "te.csv"

[[layers]]
name = "l47"
train = "a.udft"
test = "b.udft"
"#;

    #[test]
    fn defaults_apply() {
        let config = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(config.k, 250);
        assert_eq!(config.classifier.c_values.len(), 50);
        assert_eq!(config.classifier.folds, 5);
        assert_eq!(config.kmeans.init, Init::KmeansPlusPlus);
        assert!(config.fusion_pair.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[kmeans]\nmax_iter = 3\n");
        assert!(matches!(PipelineConfig::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut config = PipelineConfig::parse(MINIMAL).unwrap();
        config.resolve_paths(Path::new("/data/run1"));
        assert_eq!(config.layers[0].train, Path::new("/data/run1/a.udft"));
        assert_eq!(config.output_dir, Path::new("/data/run1/out"));
    }

    #[test]
    fn fusion_pair_must_be_distinct_and_known() {
        let mut config = PipelineConfig::parse(MINIMAL).unwrap();
        config.fusion_pair = Some(("l47".into(), "l47".into()));
        assert!(config.validate().unwrap_err().to_string().contains("distinct"));
        config.fusion_pair = Some(("l47".into(), "avg_pool".into()));
        assert!(config.validate().unwrap_err().to_string().contains("avg_pool"));
    }

    #[test]
    fn missing_files_name_the_path() {
        let config = PipelineConfig::parse(MINIMAL).unwrap();
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("tr.csv"), "{err}");
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut config = PipelineConfig::parse(MINIMAL).unwrap();
        config.fusion_pair = Some(("a".into(), "b".into()));
        assert_eq!(PipelineConfig::parse(&config.to_toml()).unwrap(), config);
    }
}
