//! Command-line front end for the numeral recognition pipeline.
//!
//! Subcommands: `preprocess`, `extract`, `train`, `classify`, `evaluate`.
//! Data (CSV rows, predicted labels) goes to stdout; logs and errors go
//! to stderr. Exit codes: 0 success, 1 usage error, 2 data/model error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use numgrid::classifier::{self, DiscriminantModel, DiscriminantType};
use numgrid::features::{extract_features_with, FeatureVector, DEFAULT_MIN_RUN};
use numgrid::harness::{
    self, Combiner, EvaluateOptions, ReportFormat,
};
use numgrid::imaging::{preprocess_with, GrayImage, DEFAULT_MIN_COMPONENT_SIZE};
use numgrid::Error;

#[derive(Parser)]
#[command(name = "numgrid", version, about = "Handwritten numeral recognition pipeline")]
struct Cli {
    /// Worker threads for parallel stages (falls back to NUMGRID_JOBS,
    /// then to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PipelineFlags {
    /// Minimum ink component size kept during denoising, in pixels.
    #[arg(long, default_value_t = DEFAULT_MIN_COMPONENT_SIZE)]
    min_component_size: usize,

    /// Minimum same-direction chain-code steps for a line segment.
    #[arg(long, default_value_t = DEFAULT_MIN_RUN)]
    min_run: usize,
}

impl PipelineFlags {
    fn validate(&self) -> Result<EvaluateOptions, String> {
        if self.min_component_size == 0 {
            return Err("--min-component-size must be positive".into());
        }
        if self.min_run == 0 {
            return Err("--min-run must be positive".into());
        }
        Ok(EvaluateOptions {
            min_component_size: self.min_component_size,
            min_run: self.min_run,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess one image and write the filled and skeleton artifacts.
    Preprocess {
        image: PathBuf,
        #[arg(long)]
        out_filled: PathBuf,
        #[arg(long)]
        out_skeleton: PathBuf,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Print the 17-feature CSV row for one image.
    Extract {
        image: PathBuf,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Fit a discriminant model on a dataset tree and write it to a file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "type", value_name = "TYPE")]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Predict the class of one image with a saved model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        image: PathBuf,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Train on one tree, test on another, and write the accuracy report.
    Evaluate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, required_unless_present = "resubstitution")]
        test: Option<PathBuf>,
        /// Reuse the training set as the test set.
        #[arg(long)]
        resubstitution: bool,
        /// Comma-separated discriminant types (long or short names).
        #[arg(long, value_delimiter = ',', default_value = "L,Q,DL,DQ,M")]
        types: Vec<String>,
        /// Comma-separated combiners: majority3, majority5.
        #[arg(long, value_delimiter = ',')]
        combine: Vec<String>,
        /// Report file; confusion matrices are written next to it as
        /// confusion_<row>.csv. Omit to print the report to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version output is not an error
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };

    let jobs = cli.jobs.or_else(|| {
        std::env::var("NUMGRID_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = jobs {
        if n == 0 {
            return usage_error("--jobs must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not configure thread pool: {e}");
        }
    }

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Usage(msg)) => usage_error(&msg),
        Err(RunError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

enum RunError {
    Usage(String),
    Data(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => RunError::Usage(msg),
            other => RunError::Data(other),
        }
    }
}

fn parse_types(names: &[String]) -> Result<Vec<DiscriminantType>, RunError> {
    let mut out = Vec::new();
    for name in names {
        let t: DiscriminantType = name.parse()?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

fn run(command: Command) -> Result<(), RunError> {
    match command {
        Command::Preprocess {
            image,
            out_filled,
            out_skeleton,
            pipeline,
        } => {
            let opts = pipeline.validate().map_err(RunError::Usage)?;
            let gray = GrayImage::load(&image)?;
            let pre = preprocess_with(&gray, opts.min_component_size)?;
            pre.filled.save(&out_filled)?;
            pre.skeleton.save(&out_skeleton)?;
            Ok(())
        }
        Command::Extract { image, pipeline } => {
            let opts = pipeline.validate().map_err(RunError::Usage)?;
            let gray = GrayImage::load(&image)?;
            let pre = preprocess_with(&gray, opts.min_component_size)?;
            let features = extract_features_with(&pre, opts.min_run)?;
            println!("{}", FeatureVector::NAMES.join(","));
            let row: Vec<String> = features.to_array().iter().map(|v| v.to_string()).collect();
            println!("{}", row.join(","));
            Ok(())
        }
        Command::Train {
            data,
            kind,
            out,
            pipeline,
        } => {
            let opts = pipeline.validate().map_err(RunError::Usage)?;
            let kind: DiscriminantType = kind.parse()?;
            let dataset = harness::load_dataset(&data)?;
            let model = train_model(&dataset, kind, &opts)?;
            model.save(&out)?;
            eprintln!(
                "trained {kind} model on {} samples, saved to {}",
                dataset.entries.len(),
                out.display()
            );
            Ok(())
        }
        Command::Classify {
            model,
            image,
            pipeline,
        } => {
            let opts = pipeline.validate().map_err(RunError::Usage)?;
            let model = DiscriminantModel::load(&model)?;
            let features = harness::features_for_file(&image, &opts)?;
            let label = model.classify(&features.to_array())?;
            println!("{label}");
            Ok(())
        }
        Command::Evaluate {
            train,
            test,
            resubstitution,
            types,
            combine,
            report,
            format,
            pipeline,
        } => {
            let opts = pipeline.validate().map_err(RunError::Usage)?;
            let format: ReportFormat = format.parse()?;
            let types = parse_types(&types)?;
            let mut combiners = Vec::new();
            for name in &combine {
                let c: Combiner = name.parse()?;
                if !combiners.contains(&c) {
                    combiners.push(c);
                }
            }
            if test.is_some() && resubstitution {
                return Err(RunError::Usage(
                    "--test and --resubstitution are mutually exclusive".into(),
                ));
            }
            let train_set = harness::load_dataset(&train)?;
            let test_set = match &test {
                Some(path) => harness::load_dataset(path)?,
                None => train_set.clone(),
            };
            let result = harness::evaluate(&train_set, &test_set, &types, &combiners, &opts)?;
            let rendered = harness::render_report(&result, format);
            match &report {
                Some(path) => {
                    std::fs::write(path, &rendered).map_err(|e| Error::io(path, e))?;
                    let dir = path.parent().unwrap_or_else(|| std::path::Path::new("."));
                    for row in &result.rows {
                        let name = format!("confusion_{}.csv", harness::sanitize_row_name(&row.name));
                        let cpath = dir.join(name);
                        std::fs::write(&cpath, harness::render_confusion_csv(row))
                            .map_err(|e| Error::io(&cpath, e))?;
                    }
                    eprintln!("report written to {}", path.display());
                }
                None => print!("{rendered}"),
            }
            Ok(())
        }
    }
}

/// Extracts features for every image of a dataset and fits one model.
fn train_model(
    dataset: &harness::LabeledDataset,
    kind: DiscriminantType,
    opts: &EvaluateOptions,
) -> Result<DiscriminantModel, RunError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (path, class) in &dataset.entries {
        let features = harness::features_for_file(path, opts)?;
        rows.push(features.to_array().to_vec());
        labels.push(*class);
    }
    let training = classifier::TrainingSet::new(rows, labels)?;
    Ok(classifier::fit(&training, kind)?)
}
