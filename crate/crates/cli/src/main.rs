use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fsseg_core::annotate::{self, label_frames, split_report};
use fsseg_core::eval::{self, generate_scene, write_scene, SceneSpec};
use fsseg_core::pipeline::{self, FeatureSource, PipelineConfig};
use fsseg_core::{io, Error};

/// Unsupervised free-space masks for indoor RGB-D frames.
#[derive(Parser)]
#[command(name = "fsseg", version)]
struct Cli {
    /// JSON pipeline configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for superpixel sampling, cluster initialization and scene generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of clusters.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true, value_enum)]
    features: Option<Features>,
    /// Write per-frame diagnostics next to each mask.
    #[arg(long, global = true)]
    debug_json: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Features {
    Ingest,
    Fallback,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a free-space mask for every frame in a directory.
    Maskgen {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Label frames positive or unlabeled from a telemetry log.
    Annotate {
        #[arg(long)]
        telemetry: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Hand-picked challenging frame ids, one per line.
        #[arg(long)]
        challenging: Option<PathBuf>,
        /// Also write a count summary here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score predicted masks against reference masks.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render synthetic corridor scenes with reference masks.
    Synth {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Highlight a mask over its image.
    Overlay {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Partial(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParam(_) | Error::InvalidSpec(_) => Failure::Config(e.to_string()),
            other => Failure::Partial(other.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.dasp.rng_seed = seed;
        cfg.cluster.rng_seed = seed;
    }
    if let Some(k) = cli.k {
        cfg.cluster.k = k;
    }
    if let Some(f) = cli.features {
        cfg.features.source = match f {
            Features::Ingest => FeatureSource::Ingest,
            Features::Fallback => FeatureSource::Fallback,
        };
    }
    if cli.debug_json {
        cfg.debug_json = true;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Failure::Partial(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli)?;
    match cli.cmd {
        Cmd::Maskgen { input, output } => {
            if input.is_some() {
                cfg.paths.input = input;
            }
            if output.is_some() {
                cfg.paths.output = output;
            }
            let summary = pipeline::run_maskgen(&cfg)?;
            log::info!("{} masks written", summary.written.len());
            if !summary.is_success() {
                let stems: Vec<&str> = summary.failures.iter().map(|f| f.stem.as_str()).collect();
                return Err(Failure::Partial(format!("failed frames: {}", stems.join(", "))));
            }
        }
        Cmd::Annotate {
            telemetry,
            frames,
            out,
            challenging,
            report,
        } => {
            let log = annotate::read_telemetry(&telemetry)?;
            let frames = annotate::read_frames(&frames)?;
            let mut labels = label_frames(&log, &frames, &cfg.annotation)?;
            if let Some(path) = challenging {
                labels.mark_challenging(&annotate::read_challenging(&path)?);
            }
            annotate::write_labels(&labels, &out)?;
            let name = telemetry.file_stem().and_then(|s| s.to_str()).unwrap_or("log");
            let summary = annotate::split_report_by_source([(name, &labels)]);
            println!("positive: {}, unlabeled: {}", summary.overall.positive, summary.overall.unlabeled);
            if let Some(path) = report {
                write_json(&path, &summary)?;
            } else {
                log::debug!("{:?}", split_report(&labels));
            }
        }
        Cmd::Eval { pred, truth, json, csv } => {
            let report = eval::evaluate_batch(&pred, &truth)?;
            println!("mean IoU {:.4} over {} images", report.mean_iou, report.per_image.len());
            if let Some(p) = json {
                report.write_json(&p)?;
            }
            if let Some(p) = csv {
                report.write_csv(&p)?;
            }
        }
        Cmd::Synth { count, out } => {
            let base = cli.seed.unwrap_or(0);
            for (id, spec) in SceneSpec::corridor_batch(count, base) {
                let scene = generate_scene(&spec, spec.rng_seed)?;
                write_scene(&scene, &out.join(&id))?;
            }
            println!("{count} scenes written to {}", out.display());
        }
        Cmd::Overlay { image, mask, out } => {
            let img = io::load_image(&image)?;
            let mask = io::load_mask(&mask)?;
            io::save_image(&pipeline::overlay(&img, &mask)?, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
