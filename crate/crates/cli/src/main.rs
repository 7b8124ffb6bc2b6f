use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use refine_cli::commands::{load_corpus_spec, write_json, CorpusSpec};
use refine_cli::json::to_stable_json;
use refine_cli::{
    cmd_evaluate, cmd_overlay, cmd_refine, cmd_split, cmd_synth, CliError, ConfigOverrides,
    RefineInput,
};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "corrosion-refine",
    version,
    about = "Refine coarse corrosion masks along color edges"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct PipelineFlags {
    /// Radius of the disk used to erode regions into their high-confidence core.
    #[arg(long)]
    erosion_radius: Option<usize>,
    /// Radius of the disk used to grow regions into the uncertain band.
    #[arg(long)]
    dilation_radius: Option<usize>,
    /// Skip the 3x3 box smoothing of the gradient before seeding the watershed.
    #[arg(long)]
    no_smooth_gradient: bool,
    /// Luma at or above which a mask pixel is foreground.
    #[arg(long)]
    mask_threshold: Option<u8>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Refine a coarse mask (or a batch of them) against its color image.
    Refine {
        /// Color image, or a directory of images paired with --mask by file name.
        #[arg(long, requires = "mask", conflicts_with = "corpus")]
        image: Option<PathBuf>,
        /// Coarse mask, or a directory of masks.
        #[arg(long, requires = "image")]
        mask: Option<PathBuf>,
        /// Optional ground truth (file or directory) for before/after metrics.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Directory written by `synth`; refines every scene in its manifest.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Refined mask path, or output directory in batch mode.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overlay PNG path, or directory in batch mode.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Write the run report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Leave wall-clock timings out of the report.
        #[arg(long)]
        omit_timings: bool,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Pixel-level precision, recall, F1 and IoU of predictions against truth.
    Evaluate {
        #[arg(long, num_args = 1.., required = true)]
        pred: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        truth: Vec<PathBuf>,
        #[arg(long, default_value_t = 128)]
        mask_threshold: u8,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic corpus of scenes, truth masks and coarse masks.
    Synth {
        /// JSON with optional `synth` and `degrade` sections.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shuffle a corpus manifest into train/val/test lists.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render the confidence zones and the refined contour over the image.
    Overlay {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: PipelineFlags,
    },
}

fn overrides(flags: &PipelineFlags) -> ConfigOverrides {
    ConfigOverrides {
        erosion_radius: flags.erosion_radius,
        dilation_radius: flags.dilation_radius,
        no_smooth_gradient: flags.no_smooth_gradient,
        mask_threshold: flags.mask_threshold,
        seed: flags.seed,
        ..Default::default()
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) => write_json(value, p),
        None => {
            let text = to_stable_json(value).map_err(|e| CliError::io("serialize", e))?;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("stdout", e))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Refine {
            image,
            mask,
            truth,
            corpus,
            out,
            overlay,
            report,
            omit_timings,
            flags,
        } => {
            let cfg = ConfigOverrides {
                output: out,
                overlay,
                report,
                ..overrides(&flags)
            }
            .resolve(flags.config.as_deref())?;
            let input = match (image, mask, corpus) {
                (_, _, Some(dir)) => RefineInput::Corpus { dir },
                (Some(image), Some(mask), None) if image.is_dir() => {
                    if !mask.is_dir() {
                        return Err(CliError::Usage(
                            "--image is a directory but --mask is not".into(),
                        ));
                    }
                    RefineInput::Directories {
                        images: image,
                        masks: mask,
                        truths: truth,
                    }
                }
                (Some(image), Some(mask), None) => RefineInput::Single { image, mask, truth },
                _ => {
                    return Err(CliError::Usage(
                        "give --image and --mask, or --corpus".into(),
                    ))
                }
            };
            let run = cmd_refine(&input, &cfg, !omit_timings)?;
            if cfg.report.is_none() {
                emit(&run, None)?;
            }
            Ok(())
        }
        Command::Evaluate {
            pred,
            truth,
            mask_threshold,
            report,
        } => emit(
            &cmd_evaluate(&pred, &truth, mask_threshold)?,
            report.as_ref(),
        ),
        Command::Synth {
            spec,
            count,
            seed,
            out,
        } => {
            let spec = match spec {
                Some(p) => load_corpus_spec(&p)?,
                None => CorpusSpec::default(),
            };
            cmd_synth(&spec, count, seed, &out)?;
            Ok(())
        }
        Command::Split {
            manifest,
            seed,
            report,
        } => emit(&cmd_split(&manifest, seed)?, report.as_ref()),
        Command::Overlay {
            image,
            mask,
            out,
            flags,
        } => {
            let cfg = overrides(&flags).resolve(flags.config.as_deref())?;
            cmd_overlay(&image, &mask, &cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
