//! Command-line surface: caption, score-zero-shot, embed, train, evaluate,
//! summarize, export-plots, validate-config.
//!
//! Configuration comes from an optional TOML file plus flag overrides; the
//! resolved settings ship with the pipeline defaults (window 7, projection
//! width 2048, 3 blocks, 2 heads, 200 epochs). Every subcommand writes its
//! artifacts atomically under `--out` and finishes by writing a
//! `manifest.txt` listing artifact hashes. Reruns with identical inputs and
//! seed produce identical outputs; inputs are never mutated.

use crate::aggregator::{save_checkpoint, save_loss_history, train, AggregatorError, TrainItem};
use crate::backend::{
    BackendClient, BackendConfig, BackendError, ChatEndpoint, HttpEndpoint, MockEndpoint,
};
use crate::caption::{generate_captions, CaptionGenError, PromptStyle};
use crate::dataset::{load_dataset, make_folds, schema, DatasetError, FoldSplit, VideoRecord};
use crate::eval::{
    cross_validate, crossval::fingerprint, evaluate_video, plot, record_segmentation,
    select_summary, write_report_csv, CrossValConfig, CrossValError, EvalError, EvalOptions,
    EvalReport, EvalRow,
};
use crate::scorer::{embed_video, score_video_zero_shot, PromptTemplate, ScorerError};
use crate::series::ScoreSeries;
use crate::util::atomic_write;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable holding the backend bearer token.
pub const TOKEN_ENV: &str = "VIDSUM_TOKEN";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub dataset: Option<PathBuf>,
    /// Sliding window size w (odd).
    pub window_size: usize,
    /// Fold count for cross-validation.
    pub folds: usize,
    pub captioner: BackendConfig,
    pub scorer: BackendConfig,
    pub aggregator: crate::aggregator::AggregatorConfig,
    pub evaluation: EvalOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            dataset: None,
            window_size: 7,
            folds: 5,
            captioner: BackendConfig {
                model: "captioner".into(),
                ..BackendConfig::default()
            },
            scorer: BackendConfig {
                model: "scorer".into(),
                ..BackendConfig::default()
            },
            aggregator: crate::aggregator::AggregatorConfig::default(),
            evaluation: EvalOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.window_size < 3 || self.window_size % 2 == 0 {
            return Err(CliError::Config(format!(
                "window size must be an odd integer >= 3, got {}",
                self.window_size
            )));
        }
        if self.folds < 2 {
            return Err(CliError::Config("folds must be at least 2".into()));
        }
        if let Some(path) = &self.dataset {
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "dataset path {} does not exist",
                    path.display()
                )));
            }
        }
        self.captioner.validate().map_err(CliError::Backend)?;
        self.scorer.validate().map_err(CliError::Backend)?;
        self.aggregator.validate().map_err(CliError::Aggregator)?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Caption(#[from] CaptionGenError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Aggregator(#[from] AggregatorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    CrossVal(#[from] CrossValError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Dataset(_) => "dataset",
            CliError::Backend(_) => "backend",
            CliError::Caption(_) => "caption",
            CliError::Scorer(_) => "scorer",
            CliError::Aggregator(_) => "aggregator",
            CliError::Eval(_) => "evaluation",
            CliError::CrossVal(_) => "cross-validation",
        }
    }

    /// Single-line machine-readable error record.
    pub fn to_error_line(&self) -> String {
        serde_json::json!({"error": {"kind": self.kind(), "message": self.to_string()}})
            .to_string()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "vidsum",
    version,
    about = "Caption-driven video summarization pipeline"
)]
pub struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset directory (manifest.txt plus per-video directories).
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Backend endpoint URL, applied to both captioner and scorer.
    #[arg(long, global = true)]
    backend_url: Option<String>,
    /// Sliding window size w (odd).
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fold assignment file (written by `evaluate` when absent).
    #[arg(long, global = true)]
    fold_file: Option<PathBuf>,
    /// Use the in-process deterministic mock backend.
    #[arg(long, global = true)]
    mock: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StyleArg {
    Generic,
    CentralBackground,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Caption every frame of every video.
    Caption {
        #[arg(long, value_enum, default_value = "generic")]
        style: StyleArg,
    },
    /// Zero-shot integer scoring through the in-context prompt.
    ScoreZeroShot {
        /// Directory with per-video captions (defaults to --out).
        #[arg(long)]
        captions_dir: Option<PathBuf>,
        /// Prompt template file (defaults to the built-in template).
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Extract per-frame query/answer embeddings.
    Embed {
        #[arg(long)]
        captions_dir: Option<PathBuf>,
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Train the aggregator and write a checkpoint.
    Train {
        /// Directory with per-video embeddings (defaults to --out).
        #[arg(long)]
        embeddings_dir: Option<PathBuf>,
        /// Exclude one fold from training (needs a fold file).
        #[arg(long)]
        holdout_fold: Option<usize>,
    },
    /// Cross-validated evaluation writing the report CSV.
    Evaluate {
        #[arg(long)]
        embeddings_dir: Option<PathBuf>,
        /// Evaluate precomputed score files instead of training.
        #[arg(long)]
        scores_dir: Option<PathBuf>,
    },
    /// Knapsack summary masks under the 15% budget.
    Summarize {
        #[arg(long)]
        scores_dir: Option<PathBuf>,
    },
    /// Score-curve CSVs and SVG charts.
    ExportPlots {
        #[arg(long)]
        scores_dir: Option<PathBuf>,
    },
    /// Parse, validate, and print the resolved configuration.
    ValidateConfig,
}

/// Entry point for the binary: parse args, run, map errors to a
/// machine-readable stderr line and a nonzero exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_error_line());
            1
        }
    }
}

/// Run with explicit argv (used by tests).
pub fn run_args<I, S>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = resolve_config(&cli.common)?;
    config.validate()?;

    if matches!(cli.command, Command::ValidateConfig) {
        println!("{}", config.to_toml());
        return Ok(());
    }

    let out = cli
        .common
        .out
        .clone()
        .ok_or_else(|| CliError::Config("--out is required for this subcommand".into()))?;
    let dataset_dir = config
        .dataset
        .clone()
        .ok_or_else(|| CliError::Config("a dataset is required (--dataset or config)".into()))?;
    let mut records = load_dataset(&dataset_dir)?;
    let mut artifacts = Vec::new();

    match cli.command {
        Command::Caption { style } => {
            let captioner = make_client(&config.captioner, cli.common.mock, config.seed)?;
            let style = match style {
                StyleArg::Generic => PromptStyle::Generic,
                StyleArg::CentralBackground => PromptStyle::CentralBackground,
            };
            for record in &records {
                let path = out.join(&record.video_id).join("captions.txt");
                match &record.captions {
                    Some(existing) => schema::save_captions(&path, existing)?,
                    None => {
                        generate_captions(record, &captioner, style, Some(&path))?;
                    }
                }
                artifacts.push(path);
            }
        }

        Command::ScoreZeroShot {
            captions_dir,
            template,
        } => {
            let scorer = make_client(&config.scorer, cli.common.mock, config.seed)?;
            let template = load_template(template.as_deref())?;
            overlay_captions(&mut records, captions_dir.as_deref().unwrap_or(&out))?;
            for record in &records {
                let cache = out.join(&record.video_id).join("scores.partial");
                let scores = score_video_zero_shot(
                    record,
                    &scorer,
                    config.window_size,
                    &template,
                    Some(&cache),
                )?;
                let path = out.join(&record.video_id).join("scores.txt");
                schema::save_scores(&path, &scores.series, &scores.filled)?;
                artifacts.push(path);
            }
        }

        Command::Embed {
            captions_dir,
            template,
        } => {
            let scorer = make_client(&config.scorer, cli.common.mock, config.seed)?;
            let template = load_template(template.as_deref())?;
            overlay_captions(&mut records, captions_dir.as_deref().unwrap_or(&out))?;
            for record in &records {
                let path = out.join(&record.video_id).join("embeddings.txt");
                embed_video(record, &scorer, config.window_size, &template, Some(&path))?;
                artifacts.push(path);
            }
        }

        Command::Train {
            embeddings_dir,
            holdout_fold,
        } => {
            let embeddings =
                load_embeddings_dir(embeddings_dir.as_deref().unwrap_or(&out), &records)?;
            let split = match (&cli.common.fold_file, holdout_fold) {
                (Some(path), _) => Some(schema::load_folds(path)?),
                (None, Some(_)) => {
                    return Err(CliError::Config("--holdout-fold needs --fold-file".into()))
                }
                (None, None) => None,
            };
            let items: Vec<TrainItem> = records
                .iter()
                .filter(|r| match (&split, holdout_fold) {
                    (Some(split), Some(fold)) => split.fold_of(&r.video_id) != Some(fold),
                    _ => true,
                })
                .map(|r| {
                    let pairs = embeddings
                        .get(&r.video_id)
                        .ok_or_else(|| CrossValError::MissingEmbeddings(r.video_id.clone()))?;
                    let target = r
                        .regression_target()
                        .ok_or_else(|| CrossValError::MissingAnnotations(r.video_id.clone()))?;
                    Ok(TrainItem {
                        pairs: pairs.clone(),
                        target: target.to_vec(),
                    })
                })
                .collect::<Result<_, CrossValError>>()?;
            let outcome = train(&items, &config.aggregator)?;
            let checkpoint = out.join("checkpoint.txt");
            save_checkpoint(&checkpoint, &outcome.params, &config.aggregator)?;
            let history = out.join("loss_history.csv");
            save_loss_history(&history, &outcome.history)?;
            artifacts.push(checkpoint);
            artifacts.push(history);
        }

        Command::Evaluate {
            embeddings_dir,
            scores_dir,
        } => {
            let split = resolve_folds(&cli.common, &config, &records, &out, &mut artifacts)?;
            let crossval_config = CrossValConfig {
                aggregator: config.aggregator.clone(),
                options: config.evaluation.clone(),
            };
            let report = match scores_dir {
                Some(dir) => {
                    evaluate_score_files(&records, &dir, &split, &crossval_config, &config)?
                }
                None => {
                    let embeddings =
                        load_embeddings_dir(embeddings_dir.as_deref().unwrap_or(&out), &records)?;
                    cross_validate(&records, &embeddings, &split, &crossval_config)?
                }
            };
            let path = out.join("eval_report.csv");
            write_report_csv(&path, &report)?;
            artifacts.push(path);
        }

        Command::Summarize { scores_dir } => {
            for record in &records {
                let (series, _) =
                    load_video_scores(scores_dir.as_deref().unwrap_or(&out), &record.video_id)?;
                let seg = record_segmentation(record, &config.evaluation)?;
                let summary = select_summary(&series, &seg)?;
                let path = out.join(&record.video_id).join("summary.txt");
                schema::save_summary(&path, &summary.mask, summary.budget_frames)?;
                artifacts.push(path);
            }
        }

        Command::ExportPlots { scores_dir } => {
            for record in &records {
                let (series, _) =
                    load_video_scores(scores_dir.as_deref().unwrap_or(&out), &record.video_id)?;
                let target = record
                    .regression_target()
                    .ok_or_else(|| CrossValError::MissingAnnotations(record.video_id.clone()))?;
                let dir = out.join(&record.video_id);
                let csv_path = dir.join("curve.csv");
                write_text(&csv_path, &plot::render_curve_csv(&series, target))?;
                let svg_path = dir.join("curve.svg");
                write_text(
                    &svg_path,
                    &plot::render_curve_svg(&record.video_id, &series, target),
                )?;
                artifacts.push(csv_path);
                artifacts.push(svg_path);
            }
        }

        Command::ValidateConfig => unreachable!("handled above"),
    }

    write_manifest(&out, &artifacts)?;
    Ok(())
}

/// Config file plus flag overrides, in that order.
fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dataset) = &common.dataset {
        config.dataset = Some(dataset.clone());
    }
    if let Some(url) = &common.backend_url {
        config.captioner.endpoint = url.clone();
        config.scorer.endpoint = url.clone();
    }
    if let Some(w) = common.window {
        config.window_size = w;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
        config.aggregator.seed = seed;
    }
    if let Ok(token) = std::env::var(TOKEN_ENV) {
        if !token.is_empty() {
            config.captioner.auth_token = Some(token.clone());
            config.scorer.auth_token = Some(token);
        }
    }
    Ok(config)
}

fn make_client(backend: &BackendConfig, mock: bool, seed: u64) -> Result<BackendClient, CliError> {
    let endpoint: Box<dyn ChatEndpoint> = if mock {
        Box::new(MockEndpoint::new(seed))
    } else {
        Box::new(HttpEndpoint::new(backend)?)
    };
    Ok(BackendClient::new(endpoint, backend.clone())?)
}

fn load_template(path: Option<&Path>) -> Result<PromptTemplate, CliError> {
    match path {
        Some(path) => Ok(PromptTemplate::from_file(path).map_err(ScorerError::Template)?),
        None => Ok(PromptTemplate::builtin().clone()),
    }
}

/// Attach captions from `<dir>/<id>/captions.txt` to records that lack
/// them; records that already carry captions keep them.
fn overlay_captions(records: &mut [VideoRecord], dir: &Path) -> Result<(), CliError> {
    for record in records.iter_mut() {
        if record.captions.is_some() {
            continue;
        }
        let path = dir.join(&record.video_id).join("captions.txt");
        if path.exists() {
            let captions = schema::load_captions(&path)?;
            record.captions = Some(captions);
            record.validate()?;
        }
    }
    Ok(())
}

fn load_embeddings_dir(
    dir: &Path,
    records: &[VideoRecord],
) -> Result<BTreeMap<String, Vec<crate::backend::EmbeddingPair>>, CliError> {
    let mut map = BTreeMap::new();
    for record in records {
        let path = dir.join(&record.video_id).join("embeddings.txt");
        if path.exists() {
            map.insert(record.video_id.clone(), schema::load_embeddings(&path)?);
        }
    }
    Ok(map)
}

fn load_video_scores(dir: &Path, video_id: &str) -> Result<(ScoreSeries, Vec<usize>), CliError> {
    let path = dir.join(video_id).join("scores.txt");
    Ok(schema::load_scores(&path)?)
}

fn resolve_folds(
    common: &CommonArgs,
    config: &RunConfig,
    records: &[VideoRecord],
    out: &Path,
    artifacts: &mut Vec<PathBuf>,
) -> Result<FoldSplit, CliError> {
    match &common.fold_file {
        Some(path) => Ok(schema::load_folds(path)?),
        None => {
            let split = make_folds(records, config.folds.min(records.len()), config.seed)?;
            let path = out.join("folds.txt");
            schema::save_folds(&path, &split)?;
            artifacts.push(path.clone());
            Ok(split)
        }
    }
}

/// Zero-shot style evaluation over precomputed score files.
fn evaluate_score_files(
    records: &[VideoRecord],
    scores_dir: &Path,
    split: &FoldSplit,
    crossval_config: &CrossValConfig,
    config: &RunConfig,
) -> Result<EvalReport, CliError> {
    let mut rows = Vec::with_capacity(records.len());
    let mut undefined = 0usize;
    for record in records {
        let (series, _) = load_video_scores(scores_dir, &record.video_id)?;
        let eval = evaluate_video(record, &series, &config.evaluation)?;
        undefined += eval.undefined_comparisons;
        rows.push(EvalRow {
            video_id: record.video_id.clone(),
            fold: split.fold_of(&record.video_id).unwrap_or(0),
            tau: eval.tau,
            rho: eval.rho,
        });
    }
    Ok(EvalReport::from_rows(
        rows,
        undefined,
        split.k,
        fingerprint(crossval_config, split),
    ))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    atomic_write(path, text.as_bytes()).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `manifest.txt`: one `sha256  relative-path` line per artifact written in
/// this run, sorted by path.
fn write_manifest(out: &Path, artifacts: &[PathBuf]) -> Result<(), CliError> {
    let mut lines = Vec::with_capacity(artifacts.len());
    for path in artifacts {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let rel = path.strip_prefix(out).unwrap_or(path);
        lines.push(format!("{hex}  {}", rel.display()));
    }
    lines.sort();
    write_text(&out.join("manifest.txt"), &(lines.join("\n") + "\n"))
}
