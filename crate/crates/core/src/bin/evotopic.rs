use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evotopic_core::pipeline::{self, PipelineConfig, RunBundle};
use evotopic_core::synth::{self, SynthSpec};
use evotopic_core::{corpus, windowing, Error, Result};

#[derive(Parser)]
#[command(name = "evotopic", version, about = "Evolving topics over overlapping time windows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the number of CPUs. Never changes outputs.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override one configuration key, e.g. `--set reduce.dim=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Assign documents to windows and write windows.json.
    Segment(Common),
    /// Run every stage and export the bundle, topics, reports and plot data.
    Fit(Common),
    /// Recompute period and topic reports from a bundle.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Write plot_data.csv from a bundle.
    ExportPlot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Generate a synthetic corpus with ground truth.
    Synth {
        #[command(flatten)]
        common: Common,
        /// JSON generator parameters; defaults apply to missing fields.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

fn resolve(common: &Common) -> Result<PipelineConfig> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &common.corpus {
        config.corpus = Some(p.clone());
    }
    if let Some(p) = &common.embeddings {
        config.embeddings = Some(p.clone());
    }
    if let Some(p) = &common.out {
        config.out = Some(p.clone());
    }
    if let Some(s) = common.seed {
        config.seed = s;
    }
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        config.set(k.trim(), v)?;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(config: &PipelineConfig) -> Result<&Path> {
    config
        .out
        .as_deref()
        .ok_or_else(|| Error::Config("no output directory given (--out)".into()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn load_corpus(config: &PipelineConfig) -> Result<corpus::Corpus> {
    let path = config
        .corpus
        .as_deref()
        .ok_or_else(|| Error::Config("no corpus path given (--corpus)".into()))?;
    let stopwords = config.stopwords.as_deref().map(corpus::load_stopwords).transpose()?;
    corpus::load_corpus(path, stopwords.as_ref())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment(common) => {
            let config = resolve(&common)?;
            let out = out_dir(&config)?;
            let corpus = load_corpus(&config)?;
            let windows = windowing::segment(&corpus, &config.window_spec())?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            write_json(&out.join("windows.json"), &windows)?;
            for w in &windows {
                println!(
                    "window {}\t{}\t{}\t{} documents",
                    w.index,
                    pipeline::format_timestamp(w.start),
                    pipeline::format_timestamp(w.end),
                    w.members.len()
                );
            }
        }
        Command::Fit(common) => {
            let config = resolve(&common)?;
            let out = out_dir(&config)?.to_path_buf();
            let bundle = pipeline::run(&config, common.threads)?;
            pipeline::export(&bundle, &out)?;
            let p = &bundle.payload;
            println!(
                "{} windows, {} local clusters, {} evolving topics",
                p.windows.len(),
                p.local_clusters.len(),
                p.topics.len()
            );
            println!("content hash {}", bundle.content_hash);
        }
        Command::Metrics { common, bundle } => {
            let config = resolve(&common)?;
            let out = out_dir(&config)?;
            let bundle = RunBundle::load(&bundle)?;
            let corpus = load_corpus(&config)?;
            let (period, topic) = pipeline::recompute_reports(&bundle, &corpus, config.ref_scope)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            pipeline::write_period_csv(&out.join(pipeline::PERIOD_FILE), &period)?;
            pipeline::write_topic_csv(&out.join(pipeline::TOPIC_REPORT_FILE), &topic)?;
            let same = period == bundle.payload.period_report && topic == bundle.payload.topic_report;
            println!("reports written; identical to bundle: {same}");
        }
        Command::ExportPlot { common, bundle } => {
            let config = resolve(&common)?;
            let out = out_dir(&config)?;
            let bundle = RunBundle::load(&bundle)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let rows = pipeline::write_plot_csv(&out.join(pipeline::PLOT_FILE), &bundle)?;
            println!("{rows} plot rows");
        }
        Command::Synth { common, spec } => {
            let out = common
                .out
                .clone()
                .ok_or_else(|| Error::Config("no output directory given (--out)".into()))?;
            let mut synth_spec: SynthSpec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
                None => SynthSpec::default(),
            };
            if let Some(s) = common.seed {
                synth_spec.seed = s;
            }
            let generated = synth::generate(&synth_spec)?;
            synth::write_files(&synth_spec, &generated, &out)?;
            for w in &generated.truth.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} documents, {} chains written to {}",
                generated.corpus.len(),
                generated.truth.chains.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
