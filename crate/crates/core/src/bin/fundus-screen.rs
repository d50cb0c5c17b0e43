use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fundus_screen::data::SyntheticSpec;
use fundus_screen::ensemble::{FusionMode, StreamSubset};
use fundus_screen::pipeline::{
    cmd_eval, cmd_generate, cmd_localize, cmd_screen, cmd_train, cmd_transform, PipelineConfig, TransformOptions,
};
use fundus_screen::{Error, Result};

#[derive(Parser)]
#[command(name = "fundus-screen", version, about = "Four-stream glaucoma screening on fundus images")]
struct Cli {
    /// Pipeline configuration file (key=value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for data generation, initialization and augmentation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Streams to fuse: `all` or names joined by `+`, e.g. `disc+polar`.
    #[arg(long, global = true)]
    subset: Option<StreamSubset>,
    /// Fusion operator: average, max, min or multiply.
    #[arg(long, global = true)]
    fusion: Option<FusionMode>,
    /// Sensitivity floor of the Spe@Sen table [default: 0.95].
    #[arg(long, global = true)]
    sens_floor: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic fundus dataset with disc masks and a manifest.
    Generate {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        side: usize,
        #[arg(long, default_value_t = 0.5)]
        positive_fraction: f64,
    },
    /// Train all four streams on a manifest.
    Train {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Classifier streams trained concurrently after localization.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Screen one image with the trained ensemble.
    Screen {
        #[arg(long)]
        weights: Option<PathBuf>,
        image: PathBuf,
    },
    /// Evaluate the trained ensemble on a labelled manifest.
    Eval {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        reports: Option<PathBuf>,
    },
    /// Polar (or inverse polar) resampling of an image.
    Transform(TransformArgs),
    /// Locate the optic disc in one image.
    Localize {
        #[arg(long)]
        weights: Option<PathBuf>,
        image: PathBuf,
    },
}

#[derive(Args)]
struct TransformArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long)]
    inverse: bool,
    /// Centre as `u,v`; defaults to the image centre.
    #[arg(long, value_parser = parse_point)]
    center: Option<(f64, f64)>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 256)]
    divisions: usize,
    #[arg(long, default_value_t = 0.0)]
    angle_offset: f64,
    /// Side of the inverse output image.
    #[arg(long)]
    output_side: Option<usize>,
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (u, v) = s.split_once(',').ok_or("expected u,v")?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok((parse(u)?, parse(v)?))
}

fn path_or(given: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    given
        .or_else(|| configured.clone())
        .ok_or_else(|| Error::Config(format!("no {what} path given on the command line or in the config")))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(subset) = cli.subset {
        config.subset = subset;
    }
    if let Some(fusion) = cli.fusion {
        config.fusion = fusion;
    }
    if let Some(floor) = cli.sens_floor {
        config.sens_floor = floor;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Generate { count, out, side, positive_fraction } => {
            let spec = SyntheticSpec {
                image_side: side,
                positive_fraction,
                seed: config.seed,
                ..SyntheticSpec::default()
            };
            let s = cmd_generate(&spec, count, &out)?;
            println!("{}\tpositives={}\tnegatives={}", s.manifest.display(), s.positives, s.negatives);
        }
        Command::Train { manifest, weights, workers } => {
            let mut config = config;
            if let Some(w) = workers {
                config.workers = w;
                config.validate()?;
            }
            let manifest = path_or(manifest, &config.manifest, "manifest")?;
            let weights = path_or(weights, &config.weights_dir, "weights")?;
            let outcome = cmd_train(&config, &manifest, &weights)?;
            for r in &outcome.reports {
                println!(
                    "{}\t{}\tepochs={}\tloss={:.4}",
                    r.stream,
                    r.phase,
                    r.epochs.len(),
                    r.final_loss().unwrap_or(f64::NAN)
                );
            }
        }
        Command::Screen { weights, image } => {
            let weights = path_or(weights, &config.weights_dir, "weights")?;
            println!("{}", cmd_screen(&config, &weights, &image)?);
        }
        Command::Eval { manifest, weights, reports } => {
            let manifest = path_or(manifest, &config.manifest, "manifest")?;
            let weights = path_or(weights, &config.weights_dir, "weights")?;
            let reports = path_or(reports, &config.report_dir, "reports")?;
            print!("{}", cmd_eval(&config, &weights, &manifest, &reports)?.report_text());
        }
        Command::Transform(t) => {
            let opts = TransformOptions {
                inverse: t.inverse,
                center: t.center,
                radius: t.radius,
                divisions: t.divisions,
                angle_offset: t.angle_offset,
                output_side: t.output_side,
            };
            let (w, h) = cmd_transform(&t.input, &t.output, &opts)?;
            println!("{}\t{w}x{h}", Path::new(&t.output).display());
        }
        Command::Localize { weights, image } => {
            let weights = path_or(weights, &config.weights_dir, "weights")?;
            println!("{}", cmd_localize(&weights, &image)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
