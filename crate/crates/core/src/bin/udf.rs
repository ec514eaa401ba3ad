use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use udf::classifier::{self, GridSearchConfig, TrainOptions};
use udf::io::{self, Class};
use udf::kmeans::{self, Init, KMeansConfig};
use udf::pipeline::{self, PipelineConfig};
use udf::synthetic::{self, SyntheticSpec};
use udf::{encoding, fusion, pooling, Error};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Unsupervised deep features: pooling, K-means codebooks, triangle
/// encoding and logistic regression over dumped activation maps.
///
/// Set UDF_THREADS to override the worker thread count.
#[derive(Parser)]
#[command(name = "udf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pool and normalize a UDFT tensor file into initial features (UDFV).
    Pool {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Learn a K-means codebook (UDFC) from a UDFV file.
    KmeansFit(KmeansFitArgs),
    /// Pool a UDFT file and triangle-encode it against a codebook.
    Encode {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Concatenate two aligned UDFV files, the first one's columns first.
    Fuse {
        #[arg(long)]
        first: PathBuf,
        #[arg(long)]
        second: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a logistic-regression model (UDFM) with a fixed C.
    TrainLr {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Choose C by stratified cross-validation.
    GridSearch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Comma-separated C values [default: 1,2,...,50]
        #[arg(long, value_delimiter = ',')]
        c_values: Option<Vec<f64>>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CV table here as CSV
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Write `sample_id,predicted,score` rows for a UDFV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Accuracy, confusion matrix and prediction time on labelled data.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Also write the key=value report here
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every stage from a TOML config and write a manifest.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the pipeline once per codebook size.
    KSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "100,150,200,250,300,350,400,450,500")]
        k: Vec<usize>,
    },
    /// Generate a synthetic dataset (UDFT tensors + label CSVs).
    Synth(SynthArgs),
}

#[derive(Args)]
struct KmeansFitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 250)]
    k: usize,
    #[arg(long, default_value_t = 300)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// kmeans_plus_plus or random_points
    #[arg(long, default_value = "kmeans_plus_plus")]
    init: Init,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
}

impl TrainArgs {
    fn options(&self) -> TrainOptions {
        TrainOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated `name:HxWxD` layer shapes
    #[arg(long, value_delimiter = ',', default_value = "l47:7x7x64")]
    layers: Vec<String>,
    #[arg(long, default_value_t = 800)]
    n_train: usize,
    #[arg(long, default_value_t = 400)]
    n_test: usize,
    #[arg(long, default_value_t = 8)]
    clusters: usize,
    /// Class per latent cluster, comma-separated [default: alternating]
    #[arg(long, value_delimiter = ',')]
    label_rule: Option<Vec<String>>,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write a pipeline.toml for the generated layers
    #[arg(long)]
    write_config: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    if let Err(msg) = configure_threads() {
        eprintln!("udf: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }

    let stage = stage_name(&cli.command);
    match std::panic::catch_unwind(|| run(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("udf {stage}: error: {e}");
            ExitCode::from(EXIT_DATA)
        }
        Err(_) => {
            eprintln!("udf {stage}: internal error");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("UDF_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| format!("UDF_THREADS={value:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn stage_name(command: &Command) -> &'static str {
    match command {
        Command::Pool { .. } => "pool",
        Command::KmeansFit(_) => "kmeans-fit",
        Command::Encode { .. } => "encode",
        Command::Fuse { .. } => "fuse",
        Command::TrainLr { .. } => "train-lr",
        Command::GridSearch { .. } => "grid-search",
        Command::Predict { .. } => "predict",
        Command::Eval { .. } => "eval",
        Command::Pipeline { .. } => "pipeline",
        Command::KSweep { .. } => "k-sweep",
        Command::Synth(_) => "synth",
    }
}

fn labels_for(path: &Path, batch: &io::FeatureVectorBatch) -> udf::Result<Vec<f64>> {
    io::read_labels(path)?.signs_for(batch.sample_ids())
}

fn write_text(path: &Path, text: &str) -> udf::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(command: Command) -> udf::Result<()> {
    match command {
        Command::Pool { input, output } => {
            let maps = io::read_tensor_file(&input)?;
            let features = pooling::compute_initial_features(&maps)?;
            io::write_vector_file(&features, &output)?;
            println!("pooled {} samples to {} dims", features.count(), features.dim());
        }
        Command::KmeansFit(args) => {
            let features = io::read_vector_file(&args.input)?;
            let config = KMeansConfig {
                k: args.k,
                max_iterations: args.max_iterations,
                tolerance: args.tolerance,
                seed: args.seed,
                init: args.init,
                restarts: args.restarts,
            };
            let codebook = kmeans::fit_codebook(&features, &config)?;
            io::write_codebook(&codebook, &args.output)?;
            println!(
                "k={} dim={} inertia={} iterations={}",
                codebook.k(),
                codebook.dim(),
                codebook.inertia(),
                codebook.iterations_run()
            );
        }
        Command::Encode {
            tensor,
            codebook,
            output,
        } => {
            let encoded = encoding::encode_dataset(&tensor, &codebook, &output)?;
            println!("encoded {} samples to {} dims", encoded.count(), encoded.dim());
        }
        Command::Fuse {
            first,
            second,
            output,
        } => {
            let a = io::read_vector_file(&first)?;
            let b = io::read_vector_file(&second)?;
            let fused = fusion::serial_fuse(&a, &b)?;
            io::write_vector_file(&fused, &output)?;
            println!("fused {} + {} -> {} dims", a.dim(), b.dim(), fused.dim());
        }
        Command::TrainLr {
            input,
            labels,
            c,
            output,
            train,
        } => {
            let features = io::read_vector_file(&input)?;
            let y = labels_for(&labels, &features)?;
            let model = classifier::train(&features, &y, c, &train.options())?;
            io::write_model(&model, &output)?;
            println!(
                "C={c} iterations={} objective={}",
                model.train_meta.iterations, model.train_meta.final_objective
            );
        }
        Command::GridSearch {
            input,
            labels,
            c_values,
            folds,
            seed,
            output,
            train,
        } => {
            let features = io::read_vector_file(&input)?;
            let y = labels_for(&labels, &features)?;
            let mut config = GridSearchConfig {
                folds,
                seed,
                train: train.options(),
                ..GridSearchConfig::default()
            };
            if let Some(values) = c_values {
                config.c_values = values;
            }
            let result = classifier::grid_search(&features, &y, &config)?;
            let table = pipeline::cv_table_csv(&result);
            match output {
                Some(path) => write_text(&path, &table)?,
                None => print!("{table}"),
            }
            println!("best_c={}\ncv_accuracy={}", result.best_c, result.best_accuracy);
        }
        Command::Predict {
            model,
            input,
            output,
        } => {
            let model = io::read_model(&model)?;
            let features = io::read_vector_file(&input)?;
            let predictions = classifier::predict(&model, &features)?;
            let csv = pipeline::predictions_csv(features.sample_ids(), &predictions);
            match output {
                Some(path) => write_text(&path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Eval {
            model,
            input,
            labels,
            output,
        } => {
            let model = io::read_model(&model)?;
            let features = io::read_vector_file(&input)?;
            let y = labels_for(&labels, &features)?;
            let report = classifier::evaluate(&model, &features, &y)?;
            print!("{}", report.to_text());
            println!();
            print!("{}", report.to_key_values());
            if let Some(path) = output {
                write_text(&path, &report.to_key_values())?;
            }
        }
        Command::Pipeline { config } => {
            let config = PipelineConfig::load(&config)?;
            let manifest = pipeline::run_pipeline(&config)?;
            for (method, m) in &manifest.metrics {
                println!(
                    "{method}: dim={} best_c={} cv_accuracy={:.4} accuracy={:.4} predict_seconds={:.6}",
                    m.dim, m.best_c, m.cv_accuracy, m.accuracy, m.predict_seconds
                );
            }
            println!(
                "manifest: {}",
                config.output_dir.join(pipeline::names::MANIFEST).display()
            );
        }
        Command::KSweep { config, k } => {
            let config = PipelineConfig::load(&config)?;
            let rows = pipeline::run_k_sweep(&config, &k)?;
            print!("{}", pipeline::sweep_csv(&rows));
        }
        Command::Synth(args) => synth(args)?,
    }
    Ok(())
}

fn parse_shape(entry: &str) -> udf::Result<(String, (usize, usize, usize))> {
    let bad = || Error::Config(format!("layer {entry:?} is not name:HxWxD"));
    let (name, dims) = entry.split_once(':').ok_or_else(bad)?;
    let dims: Vec<usize> = dims
        .split('x')
        .map(|d| d.parse().map_err(|_| bad()))
        .collect::<udf::Result<_>>()?;
    match dims[..] {
        [h, w, d] => Ok((name.to_owned(), (h, w, d))),
        _ => Err(bad()),
    }
}

fn synth(args: SynthArgs) -> udf::Result<()> {
    let mut layers = Vec::new();
    for entry in &args.layers {
        let (name, shape) = parse_shape(entry)?;
        let mut spec =
            SyntheticSpec::alternating(args.n_train, args.n_test, shape, args.clusters, args.noise, args.seed);
        if let Some(rule) = &args.label_rule {
            spec.label_rule = rule
                .iter()
                .map(|t| Class::parse(t).ok_or_else(|| Error::Config(format!("unknown class {t:?}"))))
                .collect::<udf::Result<_>>()?;
        }
        let files = synthetic::generate(&spec, &args.out_dir, &name)?;
        println!("{name}: {}", files.train_tensor.display());
        layers.push((name, files));
    }
    if args.write_config {
        let mut text = String::from(
            "output_dir = \"run\"\nlabels_train = \"train_labels.csv\"\nlabels_test = \"test_labels.csv\"\nseed = 0\nk = 250\n",
        );
        if let [(a, _), (b, _), ..] = &layers[..] {
            text.push_str(&format!("fusion_pair = [\"{a}\", \"{b}\"]\n"));
        }
        for (name, _) in &layers {
            text.push_str(&format!(
                "\n[[layers]]\nname = \"{name}\"\ntrain = \"{name}_train.udft\"\ntest = \"{name}_test.udft\"\n"
            ));
        }
        write_text(&args.out_dir.join("pipeline.toml"), &text)?;
    }
    Ok(())
}
