//! Dataset loading, the train/test protocol, and Table-style reporting.
//!
//! Datasets are directory trees with one subdirectory per numeral class,
//! named `0` through `9`. Evaluation extracts features once per image,
//! fits one model per requested discriminant type, classifies the test
//! set, optionally fuses label streams with the majority combiners, and
//! reports per-class accuracy plus confusion matrices.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classifier::{self, DiscriminantModel, DiscriminantType, TrainingSet};
use crate::combiner::{majority3, majority5};
use crate::error::{Error, Result};
use crate::features::{extract_features_with, FeatureVector, DEFAULT_MIN_RUN};
use crate::imaging::{preprocess_with, GrayImage, DEFAULT_MIN_COMPONENT_SIZE};

pub const CLASS_COUNT: usize = 10;

/// Maximum fraction of a class that may fail preprocessing before the run
/// aborts instead of silently reporting on partial data.
const MAX_SKIP_FRACTION: f64 = 0.10;

/// Image paths with their class labels, listed deterministically.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub entries: Vec<(PathBuf, usize)>,
    pub per_class: [usize; CLASS_COUNT],
    /// Files skipped at load because they did not decode.
    pub skipped: [usize; CLASS_COUNT],
}

/// Walks `root/0` .. `root/9`, listing decodable image files in
/// lexicographic path order. Undecodable files are logged and counted;
/// a missing or empty class directory is a structure error.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<LabeledDataset> {
    let root = root.as_ref();
    let mut entries = Vec::new();
    let mut per_class = [0usize; CLASS_COUNT];
    let mut skipped = [0usize; CLASS_COUNT];
    for class in 0..CLASS_COUNT {
        let dir = root.join(class.to_string());
        if !dir.is_dir() {
            return Err(Error::Structure(format!(
                "missing class directory for class {class}: {}",
                dir.display()
            )));
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for path in files {
            match GrayImage::load(&path) {
                Ok(_) => {
                    entries.push((path, class));
                    per_class[class] += 1;
                }
                Err(e) => {
                    log::warn!("skipping undecodable file {}: {e}", path.display());
                    skipped[class] += 1;
                }
            }
        }
        if per_class[class] == 0 {
            return Err(Error::Structure(format!(
                "class {class} has no decodable images in {}",
                dir.display()
            )));
        }
    }
    Ok(LabeledDataset {
        entries,
        per_class,
        skipped,
    })
}

/// Which combiners to run on top of the individual classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Combiner {
    Majority3,
    Majority5,
}

impl Combiner {
    /// Classifier inputs in vote position order; quadratic sits at
    /// position 2 because the no-agreement fallback picks it.
    pub fn inputs(self) -> &'static [DiscriminantType] {
        match self {
            Combiner::Majority3 => &[
                DiscriminantType::Linear,
                DiscriminantType::Quadratic,
                DiscriminantType::Mahalanobis,
            ],
            Combiner::Majority5 => &[
                DiscriminantType::Linear,
                DiscriminantType::Quadratic,
                DiscriminantType::DiagLinear,
                DiscriminantType::DiagQuadratic,
                DiscriminantType::Mahalanobis,
            ],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Combiner::Majority3 => "L+Q+M majority",
            Combiner::Majority5 => "L+Q+DL+DQ+M majority",
        }
    }
}

impl std::str::FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "majority3" | "m3" => Ok(Combiner::Majority3),
            "majority5" | "m5" => Ok(Combiner::Majority5),
            other => Err(Error::InvalidConfig(format!(
                "unknown combiner {other:?}; valid: majority3, majority5"
            ))),
        }
    }
}

/// One report row: a classifier or combiner with its per-class accuracy,
/// class-mean average, and confusion matrix (rows = true class).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub per_class: [f64; CLASS_COUNT],
    pub average: f64,
    pub confusion: [[u64; CLASS_COUNT]; CLASS_COUNT],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
}

/// Knobs forwarded to the preprocessing and feature stages.
#[derive(Debug, Clone, Copy)]
pub struct EvaluateOptions {
    pub min_component_size: usize,
    pub min_run: usize,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            min_component_size: DEFAULT_MIN_COMPONENT_SIZE,
            min_run: DEFAULT_MIN_RUN,
        }
    }
}

/// Preprocesses and extracts features for a single image file.
pub fn features_for_file(path: &Path, opts: &EvaluateOptions) -> Result<FeatureVector> {
    let gray = GrayImage::load(path)?;
    let pre = preprocess_with(&gray, opts.min_component_size)?;
    extract_features_with(&pre, opts.min_run)
}

/// Extracts features for every unique path, in parallel, returning a
/// per-path cache. Failures are logged and omitted.
fn feature_cache(
    datasets: &[&LabeledDataset],
    opts: &EvaluateOptions,
) -> HashMap<PathBuf, [f64; 17]> {
    let mut paths: Vec<&PathBuf> = datasets
        .iter()
        .flat_map(|d| d.entries.iter().map(|(p, _)| p))
        .collect();
    paths.sort();
    paths.dedup();
    paths
        .par_iter()
        .filter_map(|path| match features_for_file(path, opts) {
            Ok(f) => Some(((*path).clone(), f.to_array())),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                None
            }
        })
        .collect()
}

/// Collects the cached feature rows of a dataset in listing order and
/// enforces the per-class skip budget.
fn gather(
    ds: &LabeledDataset,
    cache: &HashMap<PathBuf, [f64; 17]>,
    role: &str,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut skipped = [0usize; CLASS_COUNT];
    for (path, class) in &ds.entries {
        match cache.get(path) {
            Some(f) => {
                rows.push(f.to_vec());
                labels.push(*class);
            }
            None => skipped[*class] += 1,
        }
    }
    for class in 0..CLASS_COUNT {
        let total = ds.per_class[class];
        if total == 0 {
            continue;
        }
        let frac = skipped[class] as f64 / total as f64;
        if frac > MAX_SKIP_FRACTION {
            return Err(Error::Structure(format!(
                "{role} set: {}/{} images of class {class} failed preprocessing \
                 (over the {:.0}% budget)",
                skipped[class],
                total,
                MAX_SKIP_FRACTION * 100.0
            )));
        }
    }
    Ok((rows, labels))
}

fn row_from_predictions(name: &str, truth: &[usize], predicted: &[usize]) -> ReportRow {
    let mut confusion = [[0u64; CLASS_COUNT]; CLASS_COUNT];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let mut per_class = [0.0f64; CLASS_COUNT];
    let mut sum = 0.0;
    for class in 0..CLASS_COUNT {
        let total: u64 = confusion[class].iter().sum();
        per_class[class] = if total == 0 {
            0.0
        } else {
            100.0 * confusion[class][class] as f64 / total as f64
        };
        sum += per_class[class];
    }
    ReportRow {
        name: name.to_string(),
        per_class,
        average: sum / CLASS_COUNT as f64,
        confusion,
    }
}

/// Fits one model per requested type on `train`, classifies `test` with
/// each, fuses label streams with the requested combiners, and assembles
/// the report. Feature extraction runs once per unique image path.
pub fn evaluate(
    train: &LabeledDataset,
    test: &LabeledDataset,
    types: &[DiscriminantType],
    combiners: &[Combiner],
    opts: &EvaluateOptions,
) -> Result<EvaluationReport> {
    if types.is_empty() {
        return Err(Error::InvalidConfig("no discriminant types requested".into()));
    }
    for combiner in combiners {
        for needed in combiner.inputs() {
            if !types.contains(needed) {
                return Err(Error::InvalidConfig(format!(
                    "{} requires classifier type {needed}",
                    combiner.label()
                )));
            }
        }
    }

    let cache = feature_cache(&[train, test], opts);
    let (train_rows, train_labels) = gather(train, &cache, "train")?;
    let (test_rows, test_labels) = gather(test, &cache, "test")?;
    let training = TrainingSet::new(train_rows, train_labels)?;

    let mut models: HashMap<DiscriminantType, DiscriminantModel> = HashMap::new();
    let mut predictions: HashMap<DiscriminantType, Vec<usize>> = HashMap::new();
    let mut report = EvaluationReport::default();

    // fixed row order regardless of the order types were requested in
    for kind in DiscriminantType::ALL {
        if !types.contains(&kind) {
            continue;
        }
        let model = classifier::fit(&training, kind)?;
        let predicted = model.classify_batch(&test_rows)?;
        report
            .rows
            .push(row_from_predictions(kind.label(), &test_labels, &predicted));
        models.insert(kind, model);
        predictions.insert(kind, predicted);
    }

    for &combiner in combiners {
        let streams: Vec<&Vec<usize>> = combiner
            .inputs()
            .iter()
            .map(|t| &predictions[t])
            .collect();
        let fused: Vec<usize> = (0..test_labels.len())
            .map(|i| match combiner {
                Combiner::Majority3 => majority3(streams[0][i], streams[1][i], streams[2][i]),
                Combiner::Majority5 => majority5(
                    streams[0][i],
                    streams[1][i],
                    streams[2][i],
                    streams[3][i],
                    streams[4][i],
                ),
            })
            .collect();
        report
            .rows
            .push(row_from_predictions(combiner.label(), &test_labels, &fused));
    }

    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidConfig(format!(
                "unknown report format {other:?}; valid: csv, markdown"
            ))),
        }
    }
}

/// Renders the accuracy table: one row per classifier/combiner, columns
/// for classes 0-9 plus the class-mean average, two decimal places.
pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["classifier".to_string()];
            header.extend((0..CLASS_COUNT).map(|c| c.to_string()));
            header.push("average".to_string());
            wtr.write_record(&header).expect("in-memory write");
            for row in &report.rows {
                let mut rec = vec![row.name.clone()];
                rec.extend(row.per_class.iter().map(|v| format!("{v:.2}")));
                rec.push(format!("{:.2}", row.average));
                wtr.write_record(&rec).expect("in-memory write");
            }
            String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf8")
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            out.push_str("| classifier |");
            for c in 0..CLASS_COUNT {
                let _ = write!(out, " {c} |");
            }
            out.push_str(" average |\n|---|");
            out.push_str(&"---|".repeat(CLASS_COUNT + 1));
            out.push('\n');
            for row in &report.rows {
                let _ = write!(out, "| {} |", row.name);
                for v in row.per_class {
                    let _ = write!(out, " {v:.2} |");
                }
                let _ = writeln!(out, " {:.2} |", row.average);
            }
            out
        }
    }
}

/// Renders one confusion matrix as CSV: header row of predicted classes,
/// one line per true class.
pub fn render_confusion_csv(row: &ReportRow) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["true\\predicted".to_string()];
    header.extend((0..CLASS_COUNT).map(|c| c.to_string()));
    wtr.write_record(&header).expect("in-memory write");
    for t in 0..CLASS_COUNT {
        let mut rec = vec![t.to_string()];
        rec.extend(row.confusion[t].iter().map(|v| v.to_string()));
        wtr.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf8")
}

/// File-name-safe version of a report row name, for `confusion_<row>.csv`.
pub fn sanitize_row_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .replace("__", "_")
}
