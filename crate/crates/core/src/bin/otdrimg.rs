use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use otdrimg::encodings::RpConfig;
use otdrimg::evalkit::{compute_metrics, PredictionSet, SplitScheme};
use otdrimg::ingest::mat::list_mat_variables;
use otdrimg::ingest::IngestConfig;
use otdrimg::pipeline::{
    demo_synthetic, run_batch, validate_predictions, BatchOutcome, DatasetManifest, PipelineConfig,
};

const EXIT_FATAL: u8 = 2;

#[derive(Parser)]
#[command(name = "otdrimg", version, about = "Turn OTDR region recordings into fused RGB images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transform a dataset into PNG images plus a manifest.
    Transform(TransformArgs),
    /// Generate a synthetic dataset and transform it.
    Demo(DemoArgs),
    /// Score a prediction CSV against a manifest.
    Score(ScoreArgs),
    /// List the variables stored in a MAT file.
    InspectMat {
        #[arg(long)]
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitKind {
    Holdout,
    Kfold,
}

#[derive(Args)]
struct EncodeArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Points per region after PAA (also the tile size).
    #[arg(long, default_value_t = 500)]
    paa_len: usize,
    /// Recurrence threshold as a percentile of pairwise distances.
    #[arg(long, default_value_t = 10.0, conflicts_with = "rp_epsilon")]
    rp_percentile: f64,
    /// Fixed recurrence threshold.
    #[arg(long)]
    rp_epsilon: Option<f64>,
    /// Square output size in pixels.
    #[arg(long, default_value_t = 224)]
    resolution: usize,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SplitKind::Holdout)]
    split: SplitKind,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.7, 0.15, 0.15])]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: u32,
}

impl EncodeArgs {
    fn config(&self) -> PipelineConfig {
        let split = match self.split {
            SplitKind::Holdout => SplitScheme::Holdout([self.ratios[0], self.ratios[1], self.ratios[2]]),
            SplitKind::Kfold => SplitScheme::KFold(self.folds),
        };
        PipelineConfig {
            rp: self.rp_epsilon.map_or(RpConfig::Percentile(self.rp_percentile), RpConfig::Fixed),
            output_height: self.resolution,
            output_width: self.resolution,
            output_dir: self.out.clone(),
            split,
            seed: self.seed,
            workers: self.workers,
            ..PipelineConfig::default().with_paa_length(self.paa_len)
        }
    }
}

#[derive(Args)]
struct TransformArgs {
    /// Directory with one subdirectory per event, or a TOML source list.
    #[arg(long)]
    input: PathBuf,
    /// Interpret MAT matrices as 10,000 x 12 instead of 12 x 10,000.
    #[arg(long)]
    transpose: bool,
    /// MAT variable to read from every file.
    #[arg(long)]
    variable: Option<String>,
    #[command(flatten)]
    encode: EncodeArgs,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 10)]
    n_per_class: usize,
    #[command(flatten)]
    encode: EncodeArgs,
}

#[derive(Args)]
struct ScoreArgs {
    /// CSV with columns sample_id,true_label,pred_label.
    #[arg(long)]
    predictions: PathBuf,
    /// Manifest used to check ids and true labels.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Require every prediction to come from this split.
    #[arg(long, requires = "manifest")]
    split: Option<String>,
}

fn load_ingest(input: &Path, transpose: bool, variable: Option<String>) -> Result<IngestConfig, String> {
    let mut cfg = if input.is_dir() {
        IngestConfig::from_layout_dir(input).map_err(|e| e.to_string())?
    } else {
        let text = fs::read_to_string(input).map_err(|e| format!("{}: {e}", input.display()))?;
        let mut cfg = IngestConfig::from_toml(&text).map_err(|e| e.to_string())?;
        let base = input.parent().unwrap_or(Path::new("."));
        for src in &mut cfg.sources {
            if src.path.is_relative() {
                src.path = base.join(&src.path);
            }
        }
        cfg
    };
    cfg.transpose |= transpose;
    if variable.is_some() {
        for src in &mut cfg.sources {
            src.variable = variable.clone();
        }
    }
    Ok(cfg)
}

fn report(outcome: &BatchOutcome) -> u8 {
    let m = &outcome.manifest;
    println!("samples_processed={}", outcome.stats.samples_processed);
    println!("samples_failed={}", outcome.stats.samples_failed);
    println!("compression_ratio={:.4}", outcome.stats.compression_ratio());
    println!("config_digest={}", m.header.config_digest);
    for f in &outcome.failures {
        log::error!("{}: {}", f.sample_id.as_deref().unwrap_or(&f.source), f.message);
    }
    outcome.exit_code() as u8
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Transform(args) => {
            let config = PipelineConfig {
                ingest: load_ingest(&args.input, args.transpose, args.variable)?,
                ..args.encode.config()
            };
            Ok(report(&run_batch(&config).map_err(|e| e.to_string())?))
        }
        Command::Demo(args) => {
            let config = args.encode.config();
            Ok(report(&demo_synthetic(&config, args.n_per_class, config.seed).map_err(|e| e.to_string())?))
        }
        Command::Score(args) => {
            let file = fs::File::open(&args.predictions).map_err(|e| format!("{}: {e}", args.predictions.display()))?;
            let preds = PredictionSet::read_csv(file).map_err(|e| e.to_string())?;
            if let Some(path) = &args.manifest {
                let manifest = DatasetManifest::read(path).map_err(|e| e.to_string())?;
                validate_predictions(&preds, &manifest, args.split.as_deref()).map_err(|e| e.to_string())?;
            }
            let metrics = compute_metrics(&preds).map_err(|e| e.to_string())?;
            print!("{}", metrics.to_kv());
            Ok(0)
        }
        Command::InspectMat { path } => {
            let bytes = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let vars = list_mat_variables(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
            for v in vars {
                let dims: Vec<String> = v.dims.iter().map(usize::to_string).collect();
                let status = if v.supported { "ok" } else { "skipped" };
                print!("{}\t{}\t{}\t{status}", v.name, v.class, dims.join("x"));
                match v.note {
                    Some(note) => println!("\t{note}"),
                    None => println!(),
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
