use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use multiq::pipeline::{
    extract_all, features_csv, run_pipeline, run_table, scatter_csv, score_text, table_text,
    train_full, FeatureKind, PipelineConfig, RangeSpec,
};
use multiq::profile::{load_dataset, write_atomic, write_dataset, Profile, DEFAULT_BIN_COUNT, DEFAULT_SPLIT_POTENTIAL};
use multiq::synth::{generate_dataset_with, SynthConfig, DEFAULT_CURVES_PER_CLASS};
use multiq::{Execution, QGrid, Result};

#[derive(Parser)]
#[command(name = "multiq", version, about = "Multi-q Tsallis entropy profile classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class polarization-curve dataset.
    Synth(SynthArgs),
    /// Extract feature vectors into features.csv.
    Features(PipelineArgs),
    /// Cross-validate one configuration; writes features.csv and report.txt.
    Score(ScoreArgs),
    /// Score the five standard methods on full, low and high ranges; writes report.txt.
    Table(PipelineArgs),
    /// Emit the first two principal coordinates of the features into scatter.csv.
    Scatter(PipelineArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = DEFAULT_CURVES_PER_CLASS)]
    n_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use identical parameters for both classes.
    #[arg(long)]
    identical_classes: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RangeArg {
    Full,
    Low,
    High,
}

#[derive(Args)]
struct PipelineArgs {
    /// Dataset manifest (`path,label` rows). Without it a synthetic dataset is generated from --seed.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Curves per class when synthesizing.
    #[arg(long, default_value_t = DEFAULT_CURVES_PER_CLASS)]
    n_per_class: usize,
    #[arg(long, default_value_t = 0.1)]
    q_from: f64,
    #[arg(long, default_value_t = 2.0)]
    q_to: f64,
    #[arg(long, default_value_t = 0.1)]
    q_step: f64,
    /// Use raw amplitudes instead of entropies.
    #[arg(long)]
    raw: bool,
    #[arg(long, default_value_t = DEFAULT_BIN_COUNT)]
    bins: usize,
    #[arg(long, value_enum, default_value_t = RangeArg::Full)]
    range: RangeArg,
    #[arg(long, default_value_t = DEFAULT_SPLIT_POTENTIAL, allow_negative_numbers = true)]
    split_at: f64,
    #[arg(long)]
    pca: Option<usize>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Apply the signed log10 transform to amplitudes first.
    #[arg(long)]
    log_current: bool,
    /// Disable multi-threading.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Also write a model trained on the whole dataset to this file.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let features = if self.raw {
            FeatureKind::Raw
        } else {
            FeatureKind::MultiQ(QGrid::stepped(self.q_from, self.q_to, self.q_step)?)
        };
        let range = match self.range {
            RangeArg::Full => RangeSpec::Full,
            RangeArg::Low => RangeSpec::Low,
            RangeArg::High => RangeSpec::High,
        };
        let config = PipelineConfig {
            features,
            bin_count: self.bins,
            range,
            split_at: self.split_at,
            pca: self.pca,
            folds: self.folds,
            seed: self.seed,
            log_transform: self.log_current,
            execution: self.execution(),
        };
        config.validate()?;
        Ok(config)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    /// Loaded profiles plus a description for reports.
    fn dataset(&self) -> Result<(Vec<Profile>, String)> {
        match &self.manifest {
            Some(path) => Ok((load_dataset(path)?, format!("manifest {}", path.display()))),
            None => {
                let profiles =
                    generate_dataset_with(&SynthConfig::default(), self.n_per_class, self.seed, self.execution())?;
                Ok((profiles, format!("synthetic, {} per class, seed {}", self.n_per_class, self.seed)))
            }
        }
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| multiq::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    write_atomic(&path, contents.as_bytes())?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let config = if args.identical_classes {
                SynthConfig::identical_classes()
            } else {
                SynthConfig::default()
            };
            let profiles = generate_dataset_with(&config, args.n_per_class, args.seed, Execution::default())?;
            let manifest = write_dataset(&args.out, &profiles)?;
            println!("{} profiles, manifest {}", profiles.len(), manifest.display());
        }
        Command::Features(args) => {
            let config = args.config()?;
            let (profiles, _) = args.dataset()?;
            let features = extract_all(&profiles, &config)?;
            write_output(&args.out, "features.csv", &features_csv(&features, &config))?;
        }
        Command::Score(ScoreArgs { pipeline: args, model_out }) => {
            let config = args.config()?;
            let (profiles, dataset) = args.dataset()?;
            let report = run_pipeline(&config, &profiles)?;
            write_output(&args.out, "features.csv", &features_csv(&report.features, &config))?;
            if let Some(k) = config.pca.filter(|&k| k >= 2) {
                log::debug!("writing scatter for pca {k}");
                write_output(&args.out, "scatter.csv", &scatter_csv(&report.features)?)?;
            }
            let text = score_text(&config, &dataset, &report);
            write_output(&args.out, "report.txt", &text)?;
            if let Some(path) = model_out {
                write_atomic(&path, train_full(&report.features)?.to_text().as_bytes())?;
            }
            print!("{text}");
        }
        Command::Table(args) => {
            let config = args.config()?;
            let (profiles, dataset) = args.dataset()?;
            let table = run_table(&config, &profiles)?;
            let text = table_text(&config, &dataset, &table);
            write_output(&args.out, "report.txt", &text)?;
            print!("{text}");
        }
        Command::Scatter(args) => {
            let config = args.config()?;
            let (profiles, _) = args.dataset()?;
            let features = extract_all(&profiles, &config)?;
            write_output(&args.out, "scatter.csv", &scatter_csv(&features)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
