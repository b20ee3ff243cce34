use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mixscan::embeddings::EmbeddingBackend;
use mixscan::metrics::options_stats;
use mixscan::mixed_labels::{build_label_dir, FormMarkers};
use mixscan::pipeline::{evaluate_dirs, load_records, write_report, PipelineError};
use mixscan::{EmbeddingModel, Pipeline, PipelineConfig, Strategy};

#[derive(Parser)]
#[command(name = "mixscan", version, about = "Transcribe scanned pages with mixed printed and handwritten text")]
struct Cli {
    /// Pipeline config (JSON).
    #[arg(long, global = true, env = "TMIXT_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transcribe one page image and print the text.
    Transcribe {
        image: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Print the full page record as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Transcribe every page in a directory, resuming from checkpoints.
    Run {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score predicted transcriptions against labels.
    Evaluate {
        predictions: PathBuf,
        labels: PathBuf,
        /// Write report.json and report.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Build mixed ground-truth labels from form transcription files.
    BuildLabels {
        #[arg(long)]
        iam_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "OCR:")]
        printed_marker: String,
        #[arg(long, default_value = "CSR:")]
        handwritten_marker: String,
    },
    /// Options-list size fractions over a directory of page checkpoints.
    Report { records: PathBuf },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    nomination: Option<Strategy>,
    #[arg(long)]
    no_enhance: bool,
    #[arg(long)]
    no_deskew: bool,
    #[arg(long)]
    no_rotate: bool,
    #[arg(long)]
    pad_pixels: Option<u32>,
    #[arg(long)]
    deskew_range: Option<f64>,
    #[arg(long)]
    deskew_step: Option<f64>,
    /// Comma-separated subset of 0,90,180,270.
    #[arg(long, value_delimiter = ',')]
    rotation_candidates: Option<Vec<u32>>,
    /// Replaces the configured spell-check chain; repeat for several checkers.
    #[arg(long = "dictionary-path")]
    dictionary_paths: Vec<String>,
    #[arg(long)]
    frequency_path: Option<String>,
    #[arg(long)]
    embedding_model_path: Option<String>,
    #[arg(long)]
    max_edit: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    external_timeout_secs: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(n) = self.nomination {
            cfg.nomination = n;
        }
        cfg.stages.enhance &= !self.no_enhance;
        cfg.stages.deskew &= !self.no_deskew;
        cfg.stages.rotate_select &= !self.no_rotate;
        if let Some(p) = self.pad_pixels {
            cfg.pad_pixels = p;
        }
        if let Some(r) = self.deskew_range {
            cfg.deskew_range = r;
        }
        if let Some(s) = self.deskew_step {
            cfg.deskew_step = s;
        }
        if let Some(r) = &self.rotation_candidates {
            cfg.rotation_candidates = r.clone();
        }
        if !self.dictionary_paths.is_empty() {
            cfg.dictionary_paths = self.dictionary_paths.clone();
        }
        if let Some(f) = &self.frequency_path {
            cfg.frequency_path = Some(f.clone());
        }
        if let Some(m) = &self.embedding_model_path {
            cfg.embedding_model_path = Some(m.clone());
            cfg.embedding_backend = EmbeddingBackend::File;
        }
        if let Some(m) = self.max_edit {
            cfg.max_edit = m;
        }
        if let Some(p) = self.parallelism {
            cfg.parallelism = p.max(1);
        }
        if let Some(t) = self.external_timeout_secs {
            cfg.external_timeout_secs = t;
        }
    }
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    let path = path.ok_or_else(|| config_error(anyhow::anyhow!("no config given (use --config or TMIXT_CONFIG)")))?;
    PipelineConfig::load(path).map_err(config_error)
}

fn build_pipeline(path: Option<&Path>, overrides: &Overrides) -> Result<Pipeline, Failure> {
    let mut cfg = load_config(path)?;
    overrides.apply(&mut cfg);
    cfg.validate().map_err(config_error)?;
    Pipeline::from_config(cfg).map_err(|e| match e {
        PipelineError::Config(_) | PipelineError::Lexicon(_) | PipelineError::Embedding(_) | PipelineError::Recognizer(_) => {
            config_error(e)
        }
        other => Failure::Runtime(other.into()),
    })
}

fn evaluation_model(path: Option<&Path>) -> Result<EmbeddingModel, Failure> {
    let Some(path) = path else {
        return EmbeddingModel::hashed(64).map_err(config_error);
    };
    let cfg = load_config(Some(path))?;
    match (&cfg.embedding_model_path, cfg.embedding_backend) {
        (Some(p), EmbeddingBackend::File) => EmbeddingModel::load(p).map_err(config_error),
        _ => EmbeddingModel::hashed(cfg.embedding_dim).map_err(config_error),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Transcribe { image, overrides, json } => {
            let pipeline = build_pipeline(config, &overrides)?;
            let outcome = pipeline.transcribe_page(&image).with_context(|| format!("transcribing {}", image.display()))?;
            for w in &outcome.warnings {
                log::warn!("{w}");
            }
            if json {
                println!("{}", outcome.record.to_json().context("serializing record")?);
            } else {
                print!("{}", outcome.record.final_transcription.map(|t| t.to_text()).unwrap_or_default());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { input, out, labels, overrides } => {
            let pipeline = build_pipeline(config, &overrides)?;
            let outcome = pipeline.run_corpus(&input, labels.as_deref(), &out).context("corpus run")?;
            for id in &outcome.flagged {
                eprintln!("flagged {id}: no words recognized");
            }
            for f in &outcome.failures {
                eprintln!("failed {}: {}", f.source_id, f.error);
            }
            if let Some(report) = &outcome.report {
                print!("{}", report.to_table());
            }
            eprintln!("{} pages written, {} failed", outcome.records.len(), outcome.failures.len());
            Ok(if outcome.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Evaluate { predictions, labels, out, json } => {
            let model = evaluation_model(config)?;
            let report = evaluate_dirs(&predictions, &labels, &model).context("evaluation")?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                write_report(&report, &dir).context("writing report")?;
            }
            if json {
                println!("{}", report.to_json().context("serializing report")?);
            } else {
                print!("{}", report.to_table());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::BuildLabels { iam_dir, out, printed_marker, handwritten_marker } => {
            let markers = FormMarkers { printed: printed_marker, handwritten: handwritten_marker };
            let ids = build_label_dir(&iam_dir, &out, &markers).context("building labels")?;
            eprintln!("{} labels written to {}", ids.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { records } => {
            let pages = load_records(&records).context("loading records")?;
            let (f1, f3, f4) = options_stats(&pages).context("options statistics")?;
            println!("pages\t{}", pages.len());
            println!("size1\t{:.4}\nsize3\t{:.4}\nsize4\t{:.4}", f1, f3, f4);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// The error chain joined by `: `, skipping causes the parent message already
/// spells out.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !last.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        last = msg;
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {}", describe(&e));
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
