use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curate::config::PipelineConfig;
use curate::media;
use curate::motion;
use curate::sampler;
use curate::segmenter;
use curate::{flow, pipeline};

#[derive(Parser)]
#[command(name = "curate", version, about = "Batch video curation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline over a source manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated stage subset: classify,score,filter,sample,caption
        #[arg(long)]
        stages: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Dump the effective config as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Emit stats and histogram reports for a manifest.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Probe one source and print its metadata.
    Probe { src: String },
    /// Print the sampling plan for a clip length.
    Sample {
        #[arg(long)]
        clip_n: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.10)]
        trim: f64,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
    },
    /// Classify a single clip file with the heuristic cascade.
    Classify {
        #[arg(long)]
        clip: String,
        #[arg(long, default_value_t = 270)]
        target_height: u32,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, stages, workers, print_config } => {
            let mut cfg = match PipelineConfig::load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            if let Some(stages) = stages {
                let enabled: Vec<&str> = stages.split(',').map(str::trim).collect();
                cfg.stages.classify = enabled.contains(&"classify");
                cfg.stages.score = enabled.contains(&"score");
                cfg.stages.filter = enabled.contains(&"filter");
                cfg.stages.sample = enabled.contains(&"sample");
                cfg.stages.caption = enabled.contains(&"caption");
            }
            if let Some(workers) = workers {
                cfg.workers = workers;
            }
            if print_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            if let Err(e) = cfg.check() {
                eprintln!("config error: {e}");
                return Ok(ExitCode::from(2));
            }
            match pipeline::run(&cfg) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report)?);
                    Ok(ExitCode::SUCCESS)
                }
                Err(pipeline::PipelineError::Sink(e)) => {
                    eprintln!("sink failure: {e}");
                    Ok(ExitCode::from(3))
                }
                Err(pipeline::PipelineError::Config(e)) => {
                    eprintln!("config error: {e}");
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Report { manifest, out } => {
            pipeline::report(&manifest, &out)?;
            println!("reports written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Probe { src } => {
            let meta = media::probe(&src)?;
            println!("{}", serde_json::to_string_pretty(&meta)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample { clip_n, n, trim, fps } => {
            let plan = sampler::plan_samples(clip_n, n, fps, trim)?;
            println!("{}", serde_json::to_string_pretty(&plan)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Classify { clip, target_height } => {
            let meta = media::probe(&clip)?;
            let stream = media::open_stream(&meta, target_height, false)?;
            let trace =
                segmenter::build_trace(&meta.source_id, meta.fps(), stream, &flow::FlowConfig::default())?;
            let pairs: Vec<motion::PairObservation> = trace
                .pair_stats
                .iter()
                .map(|s| motion::PairObservation {
                    motion: s.motion.unwrap_or(motion::GlobalMotion {
                        affine: [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                        divergence: 0.0,
                        curl: 0.0,
                        translation: (0.0, 0.0),
                        inlier_fraction: 0.0,
                        rms_residual: f64::MAX,
                    }),
                    center_magnitude: s.center_magnitude,
                    border_magnitude: s.border_magnitude,
                    luma_jump: false,
                })
                .collect();
            let label = motion::classify_clip(&pairs, &motion::ClassifierConfig::default())?;
            println!("{}", serde_json::to_string_pretty(&label)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
