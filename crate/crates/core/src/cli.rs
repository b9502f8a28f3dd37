//! Command-line front end: `train`, `extract`, `explain` and `eval`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric guard tripped.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{load_csv, load_csv_scaled, load_idx, random_folds, Dataset, FeatureScaling, LabelColumn, Split};
use crate::encoding::{make_config, EncodingConfig};
use crate::error::{Result, SefronError};
use crate::eval::{evaluate, Evaluation};
use crate::experiment::{cross_validate, default_threads, FoldResult, Readout, Summary};
use crate::fsf::{classify_fsf, default_candidates, extract_fsf, heatmap, select_t_o, to_csv_matrix, to_pgm, FsfSet};
use crate::learning::{LearningConfig, Model};
use crate::persist::{load_fsf, load_model, model_hash, save_fsf, save_model};

#[derive(Debug, Parser)]
#[command(name = "sefron", version, about = "Spiking classifier with time-varying weights and feature strength functions")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train models over the configured splits and report accuracies.
    Train(TrainArgs),
    /// Extract feature strength functions from a trained model.
    Extract(ExtractArgs),
    /// Explain one input with an FSF set.
    Explain(ExplainArgs),
    /// Score a model or FSF set on a dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file, or an IDX image file (`*-idx3-ubyte`).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Label column of a CSV file: a header name or a 0-based index. Defaults to the last column.
    #[arg(long)]
    pub label_column: Option<String>,
    /// IDX label file; derived from the image file name when omitted.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of random splits.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seed for splits and training order.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Read-out time for FSF extraction: `auto`, `off` or a value in ms.
    #[arg(long)]
    pub t_o: Option<String>,
    /// Worker threads for independent folds (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Validation data used by `--t-o auto` and for the accuracy report.
    #[command(flatten)]
    pub data: DataArgs,
    /// `auto` or a value in ms.
    #[arg(long, default_value = "auto")]
    pub t_o: String,
    /// Spacing of the automatic read-out candidates (ms).
    #[arg(long, default_value_t = 0.05)]
    pub candidate_step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub fsf: PathBuf,
    /// Comma-separated raw feature values.
    #[arg(long, conflicts_with = "index", allow_hyphen_values = true)]
    pub sample: Option<String>,
    /// `--sample` values are already normalized to [0, 1].
    #[arg(long, requires = "sample")]
    pub normalized: bool,
    #[command(flatten)]
    pub data: DataArgs,
    /// Row of `--dataset` to explain.
    #[arg(long, requires = "dataset")]
    pub index: Option<usize>,
    /// Write one heatmap per class for inputs laid out as an H x W image.
    #[arg(long, num_args = 2, value_names = ["H", "W"])]
    pub image_shape: Option<Vec<usize>>,
    /// Output directory; prints the explanation when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, conflicts_with = "fsf", required_unless_present = "fsf")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub fsf: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory for the report; prints it when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Encoding block of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingSpec {
    pub q: usize,
    pub gamma: f64,
    pub t_interval: f64,
}

impl Default for EncodingSpec {
    fn default() -> Self {
        EncodingSpec {
            q: 6,
            gamma: 0.7,
            t_interval: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    Csv {
        path: PathBuf,
        #[serde(default)]
        label_column: Option<String>,
        /// Separate test file; scaled with the training file's ranges.
        #[serde(default)]
        test_path: Option<PathBuf>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        test_images: Option<PathBuf>,
        #[serde(default)]
        test_labels: Option<PathBuf>,
    },
}

/// How training/test sets are drawn. Ignored counts default to half the
/// data for training and the rest for testing. With a separate test set
/// the first `train` / `test` rows of each file are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub folds: usize,
    pub train: Option<usize>,
    pub test: Option<usize>,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            folds: 1,
            train: None,
            test: None,
            stratified: false,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSpec {
    /// `"auto"`, `"off"` or a number (ms).
    pub t_o: serde_json::Value,
    pub candidate_step: f64,
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        ReadoutSpec {
            t_o: json!("auto"),
            candidate_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Free-form notes; ignored.
    #[serde(default, rename = "_comment", skip_serializing_if = "Option::is_none")]
    pub comment: Option<serde_json::Value>,
    #[serde(default)]
    pub encoding: EncodingSpec,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub readout: ReadoutSpec,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| SefronError::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| SefronError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Makes relative dataset paths relative to `base` (the config's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            Some(DatasetSpec::Csv { path, test_path, .. }) => {
                fix(path);
                if let Some(t) = test_path {
                    fix(t);
                }
            }
            Some(DatasetSpec::Idx {
                images,
                labels,
                test_images,
                test_labels,
            }) => {
                fix(images);
                fix(labels);
                for p in [test_images, test_labels].into_iter().flatten() {
                    fix(p);
                }
            }
            None => {}
        }
    }

    pub fn encoding_config(&self) -> Result<EncodingConfig> {
        make_config(self.encoding.q, self.encoding.gamma, self.encoding.t_interval)
    }

    pub fn t_end(&self) -> f64 {
        self.encoding.t_interval + self.learning.delta_t
    }

    pub fn readout(&self) -> Result<Readout> {
        parse_readout(&self.readout.t_o, self.readout.candidate_step, self.t_end())
    }

    /// Every problem with the configuration, in field order.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let e = &self.encoding;
        if e.q < 3 {
            out.push(format!("encoding.q must be at least 3 (got {})", e.q));
        }
        if !(e.gamma > 0.0 && e.gamma.is_finite()) {
            out.push(format!("encoding.gamma must be positive (got {})", e.gamma));
        }
        if !(e.t_interval > 0.0 && e.t_interval.is_finite()) {
            out.push(format!("encoding.t_interval must be positive (got {})", e.t_interval));
        }
        out.extend(
            self.learning
                .problems(e.t_interval)
                .into_iter()
                .map(|p| format!("learning.{p}")),
        );
        match &self.dataset {
            None => out.push("dataset is missing".into()),
            Some(DatasetSpec::Csv { path, test_path, .. }) => {
                for p in std::iter::once(path).chain(test_path) {
                    if !p.is_file() {
                        out.push(format!("dataset file {} does not exist", p.display()));
                    }
                }
            }
            Some(DatasetSpec::Idx {
                images,
                labels,
                test_images,
                test_labels,
            }) => {
                for p in [Some(images), Some(labels), test_images.as_ref(), test_labels.as_ref()]
                    .into_iter()
                    .flatten()
                {
                    if !p.is_file() {
                        out.push(format!("dataset file {} does not exist", p.display()));
                    }
                }
                if test_images.is_some() != test_labels.is_some() {
                    out.push("dataset.test_images and dataset.test_labels must be given together".into());
                }
            }
        }
        if self.split.folds == 0 {
            out.push("split.folds must be at least 1".into());
        }
        if self.has_test_file() && self.split.folds != 1 {
            out.push("split.folds must be 1 when a separate test set is given".into());
        }
        if self.split.train == Some(0) {
            out.push("split.train must be positive".into());
        }
        if let Err(e) = self.readout() {
            out.push(format!("readout: {e}"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SefronError::Config(format!("\n  - {}", problems.join("\n  - "))))
        }
    }

    fn has_test_file(&self) -> bool {
        matches!(
            self.dataset,
            Some(DatasetSpec::Csv { test_path: Some(_), .. }) | Some(DatasetSpec::Idx { test_images: Some(_), .. })
        )
    }
}

fn parse_readout(value: &serde_json::Value, step: f64, t_end: f64) -> Result<Readout> {
    let readout = match value {
        serde_json::Value::String(s) => parse_t_o(s, step)?,
        serde_json::Value::Null => Readout::Off,
        serde_json::Value::Number(n) => Readout::Fixed(n.as_f64().unwrap_or(f64::NAN)),
        other => {
            return Err(SefronError::Config(format!(
                "t_o must be \"auto\", \"off\" or a number (got {other})"
            )))
        }
    };
    check_readout(readout, t_end)?;
    Ok(readout)
}

fn parse_t_o(s: &str, step: f64) -> Result<Readout> {
    match s.trim() {
        "auto" => Ok(Readout::Auto { step }),
        "off" => Ok(Readout::Off),
        v => v
            .parse::<f64>()
            .map(Readout::Fixed)
            .map_err(|_| SefronError::Config(format!("t_o must be \"auto\", \"off\" or a number (got {v:?})"))),
    }
}

fn check_readout(readout: Readout, t_end: f64) -> Result<()> {
    match readout {
        Readout::Fixed(t) if !(t > 0.0 && t <= t_end) => Err(SefronError::Config(format!(
            "t_o = {t} lies outside (0, {t_end}]"
        ))),
        Readout::Auto { step } if !(step > 0.0 && step <= t_end) => Err(SefronError::Config(format!(
            "candidate step {step} must lie in (0, {t_end}]"
        ))),
        _ => Ok(()),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Explain(a) => cmd_explain(&a),
        Command::Eval(a) => cmd_eval(&a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SefronError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| SefronError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| SefronError::io(path, e))
}

fn label_column(spec: Option<&str>) -> LabelColumn {
    spec.map_or(LabelColumn::Last, LabelColumn::from)
}

fn is_idx(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.contains("idx3"))
}

/// `train-images-idx3-ubyte` -> `train-labels-idx1-ubyte`.
fn idx_labels_for(images: &Path) -> Result<PathBuf> {
    let name = images.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    if !name.contains("images-idx3") {
        return Err(SefronError::InvalidArgument(format!(
            "cannot derive a label file from {}; pass --labels",
            images.display()
        )));
    }
    Ok(images.with_file_name(name.replace("images-idx3", "labels-idx1")))
}

/// Loads evaluation data so that scaling and class indices match `reference`.
fn load_matching(data: &DataArgs, scaling: Option<&FeatureScaling>, class_names: &[String]) -> Result<Dataset> {
    let path = data
        .dataset
        .as_deref()
        .ok_or_else(|| SefronError::InvalidArgument("--dataset is required".into()))?;
    if data.labels.is_some() || is_idx(path) {
        let labels = match &data.labels {
            Some(l) => l.clone(),
            None => idx_labels_for(path)?,
        };
        return load_idx(path, &labels);
    }
    let label = label_column(data.label_column.as_deref());
    match scaling {
        Some(s) => load_csv_scaled(path, &label, s, class_names),
        None => load_csv(path, &label),
    }
}

fn first_rows(n: usize, limit: Option<usize>) -> Result<Vec<usize>> {
    let take = limit.unwrap_or(n);
    if take > n {
        return Err(SefronError::Data(format!("requested {take} rows but the file has {n}")));
    }
    Ok((0..take).collect())
}

/// Loads the configured data and draws its splits. With a separate test
/// file both sets are concatenated and the split points at the two halves.
pub fn load_run_data(cfg: &RunConfig) -> Result<(Dataset, Vec<Split>)> {
    let spec = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| SefronError::Config("dataset is missing".into()))?;
    let (train_part, test_part) = match spec {
        DatasetSpec::Csv {
            path,
            label_column: col,
            test_path,
        } => {
            let label = label_column(col.as_deref());
            let train = load_csv(path, &label)?;
            let test = test_path
                .as_ref()
                .map(|t| {
                    load_csv_scaled(
                        t,
                        &label,
                        train.scaling().expect("csv data carries its scaling"),
                        train.class_names(),
                    )
                })
                .transpose()?;
            (train, test)
        }
        DatasetSpec::Idx {
            images,
            labels,
            test_images,
            test_labels,
        } => {
            let train = load_idx(images, labels)?;
            let test = match (test_images, test_labels) {
                (Some(i), Some(l)) => Some(load_idx(i, l)?),
                _ => None,
            };
            (train, test)
        }
    };
    let s = &cfg.split;
    match test_part {
        None => {
            let n = train_part.len();
            let train = s.train.unwrap_or(n / 2);
            let test = s.test.unwrap_or(n.saturating_sub(train));
            let splits = random_folds(train_part.labels(), s.folds, train, test, s.seed, s.stratified)?;
            Ok((train_part, splits))
        }
        Some(test_part) => {
            if test_part.n_features() != train_part.n_features() {
                return Err(SefronError::Data(format!(
                    "training data has {} features, test data {}",
                    train_part.n_features(),
                    test_part.n_features()
                )));
            }
            let train_idx = first_rows(train_part.len(), s.train)?;
            let offset = train_part.len();
            let test_idx: Vec<usize> = first_rows(test_part.len(), s.test)?
                .into_iter()
                .map(|k| k + offset)
                .collect();
            let n_classes = train_part.n_classes().max(test_part.n_classes());
            let mut rows = train_part.rows().to_vec();
            rows.extend_from_slice(test_part.rows());
            let mut labels = train_part.labels().to_vec();
            labels.extend_from_slice(test_part.labels());
            let names = if train_part.n_classes() == n_classes {
                train_part.class_names().to_vec()
            } else {
                test_part.class_names().to_vec()
            };
            let data = Dataset::new(rows, labels, n_classes)?
                .with_names(train_part.feature_names().map(<[String]>::to_vec), names)?
                .with_scaling(train_part.scaling().cloned());
            Ok((
                data,
                vec![Split {
                    train: train_idx,
                    test: test_idx,
                }],
            ))
        }
    }
}

#[derive(Serialize)]
struct FoldMetrics {
    fold: usize,
    best_epoch: usize,
    train_acc: f64,
    test_acc: f64,
    t_o: Option<f64>,
    fsf_test_acc: Option<f64>,
    gap_points: Option<f64>,
}

#[derive(Serialize)]
struct TrainMetrics {
    name: Option<String>,
    folds: Vec<FoldMetrics>,
    train_acc: Summary,
    test_acc: Summary,
    fsf_test_acc: Option<Summary>,
    max_gap_points: Option<f64>,
}

fn trace_csv(result: &FoldResult) -> String {
    let mut out = String::from("epoch,train_accuracy,updated_samples,guarded_updates\n");
    for r in &result.trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch, r.train_accuracy, r.updated_samples, r.guarded_updates
        ));
    }
    out
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::from_file(&args.config)?;
    if let Some(path) = &args.data.dataset {
        cfg.dataset = Some(if args.data.labels.is_some() || is_idx(path) {
            DatasetSpec::Idx {
                images: path.clone(),
                labels: match &args.data.labels {
                    Some(l) => l.clone(),
                    None => idx_labels_for(path)?,
                },
                test_images: None,
                test_labels: None,
            }
        } else {
            DatasetSpec::Csv {
                path: path.clone(),
                label_column: args.data.label_column.clone(),
                test_path: None,
            }
        });
    } else if let (Some(col), Some(DatasetSpec::Csv { label_column, .. })) =
        (&args.data.label_column, cfg.dataset.as_mut())
    {
        *label_column = Some(col.clone());
    }
    if let Some(k) = args.folds {
        cfg.split.folds = k;
    }
    if let Some(seed) = args.seed {
        cfg.split.seed = seed;
        cfg.learning.seed = seed;
    }
    if let Some(t) = &args.t_o {
        cfg.readout.t_o = match t.parse::<f64>() {
            Ok(v) => json!(v),
            Err(_) => json!(t),
        };
    }
    cfg.validate()?;
    let enc = cfg.encoding_config()?;
    let readout = cfg.readout()?;
    let (data, splits) = load_run_data(&cfg)?;

    create_dir(&args.out)?;
    write_json(&args.out.join("resolved_config.json"), &cfg)?;
    info!(
        "training {} fold(s) on {} samples",
        splits.len(),
        data.len()
    );
    let threads = args.threads.unwrap_or_else(default_threads);
    let results = cross_validate(&data, &splits, &cfg.learning, &enc, readout, threads)?;

    let mut folds = Vec::with_capacity(results.len());
    for (r, split) in results.iter().zip(&splits) {
        let dir = args.out.join(format!("fold_{:02}", r.fold));
        create_dir(&dir)?;
        save_model(&r.model, &dir.join("model.json"))?;
        write_text(&dir.join("trace.csv"), &trace_csv(r))?;
        write_json(&dir.join("split.json"), split)?;
        if let Some(fsf) = &r.fsf {
            let mut fsf = fsf.clone();
            fsf.set_model_hash(Some(model_hash(&r.model)?));
            save_fsf(&fsf, &dir.join("fsf.json"))?;
        }
        folds.push(FoldMetrics {
            fold: r.fold,
            best_epoch: r.best_epoch,
            train_acc: r.train_accuracy,
            test_acc: r.test_accuracy,
            t_o: r.t_o,
            fsf_test_acc: r.fsf_test_accuracy,
            gap_points: r.gap_points(),
        });
    }
    let collect = |f: fn(&FoldMetrics) -> f64| folds.iter().map(f).collect::<Vec<_>>();
    let fsf_values: Option<Vec<f64>> = folds.iter().map(|f| f.fsf_test_acc).collect();
    let metrics = TrainMetrics {
        name: cfg.name.clone(),
        train_acc: Summary::of(&collect(|f| f.train_acc)),
        test_acc: Summary::of(&collect(|f| f.test_acc)),
        fsf_test_acc: fsf_values.map(|v| Summary::of(&v)),
        max_gap_points: folds
            .iter()
            .filter_map(|f| f.gap_points)
            .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g)))),
        folds,
    };
    write_json(&args.out.join("metrics.json"), &metrics)?;
    println!(
        "test accuracy {:.4} ± {:.4} over {} fold(s)",
        metrics.test_acc.mean,
        metrics.test_acc.std,
        metrics.folds.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct ExtractReport {
    model_hash: String,
    t_o: f64,
    t_o_source: &'static str,
    /// `(candidate, validation accuracy)` when the read-out time was searched.
    candidate_scores: Option<Vec<(f64, f64)>>,
    dataset: Option<PathBuf>,
    classifier_accuracy: Option<f64>,
    fsf_accuracy: Option<f64>,
    gap_points: Option<f64>,
}

fn cmd_extract(args: &ExtractArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let t_end = model.grid().t_end();
    let readout = parse_t_o(&args.t_o, args.candidate_step)?;
    check_readout(readout, t_end)?;
    let data = args
        .data
        .dataset
        .is_some()
        .then(|| load_matching(&args.data, model.scaling(), model.class_names()))
        .transpose()?;

    let (t_o, source, scores) = match readout {
        Readout::Fixed(t) => (t, "fixed", None),
        Readout::Auto { step } => {
            let val = data
                .as_ref()
                .ok_or_else(|| SefronError::InvalidArgument("--t-o auto needs --dataset".into()))?;
            let sel = select_t_o(&model, val, &default_candidates(t_end, step))?;
            (sel.t_o, "auto", Some(sel.scores))
        }
        Readout::Off => return Err(SefronError::InvalidArgument("--t-o off makes no sense for extract".into())),
    };
    let hash = model_hash(&model)?;
    let mut fsf = extract_fsf(&model, t_o)?;
    fsf.set_model_hash(Some(hash.clone()));

    let (clf_acc, fsf_acc) = match &data {
        Some(d) => (Some(evaluate(&model, d)?.accuracy), Some(evaluate(&fsf, d)?.accuracy)),
        None => (None, None),
    };
    let report = ExtractReport {
        model_hash: hash,
        t_o,
        t_o_source: source,
        candidate_scores: scores,
        dataset: args.data.dataset.clone(),
        classifier_accuracy: clf_acc,
        fsf_accuracy: fsf_acc,
        gap_points: clf_acc.zip(fsf_acc).map(|(a, b)| (a - b).abs() * 100.0),
    };
    create_dir(&args.out)?;
    save_fsf(&fsf, &args.out.join("fsf.json"))?;
    write_json(&args.out.join("extract_report.json"), &report)?;
    write_json(
        &args.out.join("resolved_config.json"),
        &json!({
            "command": "extract",
            "model": args.model,
            "dataset": args.data.dataset,
            "label_column": args.data.label_column,
            "t_o": args.t_o,
            "candidate_step": args.candidate_step,
        }),
    )?;
    match (clf_acc, fsf_acc) {
        (Some(a), Some(b)) => println!("t_o {t_o}: classifier {a:.4}, FSF {b:.4}"),
        _ => println!("t_o {t_o}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ExplainOutput<'a> {
    t_o: f64,
    class_names: &'a [String],
    input: Vec<f64>,
    true_label: Option<usize>,
    /// `per_feature[i][j]`: strength of feature `i` towards class `j`.
    per_feature: Vec<Vec<f64>>,
    aggregates: Vec<f64>,
    predicted: usize,
    predicted_name: &'a str,
}

fn parse_sample(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| SefronError::InvalidArgument(format!("bad sample value {v:?}")))
        })
        .collect()
}

fn cmd_explain(args: &ExplainArgs) -> Result<()> {
    let fsf = load_fsf(&args.fsf)?;
    let (input, true_label) = match (&args.sample, args.index) {
        (Some(text), _) => {
            let raw = parse_sample(text)?;
            if raw.len() != fsf.n_features() {
                return Err(SefronError::InvalidArgument(format!(
                    "sample has {} values, the FSF set expects {}",
                    raw.len(),
                    fsf.n_features()
                )));
            }
            let x = match (args.normalized, fsf.scaling()) {
                (false, Some(s)) => s.apply(&raw)?,
                _ => raw,
            };
            (x, None)
        }
        (None, Some(k)) => {
            let data = load_matching(&args.data, fsf.scaling(), fsf.class_names())?;
            if k >= data.len() {
                return Err(SefronError::InvalidArgument(format!(
                    "index {k} is out of range for {} rows",
                    data.len()
                )));
            }
            if data.n_features() != fsf.n_features() {
                return Err(SefronError::InvalidArgument(format!(
                    "dataset has {} features, the FSF set expects {}",
                    data.n_features(),
                    fsf.n_features()
                )));
            }
            (data.features(k).to_vec(), Some(data.label(k)))
        }
        (None, None) => {
            return Err(SefronError::InvalidArgument(
                "give either --sample or --dataset with --index".into(),
            ))
        }
    };
    let expl = classify_fsf(&input, &fsf)?;
    let shape = args.image_shape.as_ref().map(|s| (s[0], s[1]));
    let maps = shape
        .map(|hw| {
            (0..fsf.n_classes())
                .map(|j| heatmap(&expl, hw, j))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let output = ExplainOutput {
        t_o: fsf.t_o(),
        class_names: fsf.class_names(),
        input,
        true_label,
        per_feature: expl.per_feature.clone(),
        aggregates: expl.aggregates.clone(),
        predicted: expl.predicted,
        predicted_name: &fsf.class_names()[expl.predicted],
    };
    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            write_json(&dir.join("explanation.json"), &output)?;
            for (j, map) in maps.iter().flatten().enumerate() {
                write_text(&dir.join(format!("class_{j}.pgm")), &to_pgm(map))?;
                write_text(&dir.join(format!("class_{j}.csv")), &to_csv_matrix(map))?;
            }
            write_json(
                &dir.join("resolved_config.json"),
                &json!({
                    "command": "explain",
                    "fsf": args.fsf,
                    "sample": args.sample,
                    "normalized": args.normalized,
                    "dataset": args.data.dataset,
                    "index": args.index,
                    "image_shape": args.image_shape,
                }),
            )?;
            println!("predicted {} ({})", expl.predicted, output.predicted_name);
        }
        None => {
            if maps.is_some() {
                return Err(SefronError::InvalidArgument("--image-shape needs --out".into()));
            }
            println!("{}", serde_json::to_string_pretty(&output)?);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalReport<'a> {
    classifier: &'static str,
    class_names: &'a [String],
    #[serde(flatten)]
    evaluation: Evaluation,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (kind, evaluation, names) = match (&args.model, &args.fsf) {
        (Some(path), _) => {
            let model: Model = load_model(path)?;
            let data = load_matching(&args.data, model.scaling(), model.class_names())?;
            ("time-domain", evaluate(&model, &data)?, model.class_names().to_vec())
        }
        (None, Some(path)) => {
            let fsf: FsfSet = load_fsf(path)?;
            let data = load_matching(&args.data, fsf.scaling(), fsf.class_names())?;
            ("fsf", evaluate(&fsf, &data)?, fsf.class_names().to_vec())
        }
        (None, None) => return Err(SefronError::InvalidArgument("give --model or --fsf".into())),
    };
    let report = EvalReport {
        classifier: kind,
        class_names: &names,
        evaluation,
    };
    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            write_json(&dir.join("eval_report.json"), &report)?;
            write_json(
                &dir.join("resolved_config.json"),
                &json!({
                    "command": "eval",
                    "model": args.model,
                    "fsf": args.fsf,
                    "dataset": args.data.dataset,
                    "label_column": args.data.label_column,
                    "labels": args.data.labels,
                }),
            )?;
            println!("accuracy {:.4}", report.evaluation.accuracy);
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}
