use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use umbra_cli::commands::{self, BenchOptions, RemoveOptions};
use umbra_cli::{synth, CliError, PipelineConfig};

/// Training-free shadow removal for aerial and satellite images.
#[derive(Parser)]
#[command(name = "umbra", version)]
struct Cli {
    /// key = value configuration file
    #[arg(long, global = true, env = "UMBRA_CONFIG")]
    config: Option<PathBuf>,

    /// Worker threads (0 uses all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Number of nearby lit superpixels consulted per shadow superpixel
    #[arg(long)]
    neighbors: Option<usize>,
    /// Target superpixel size in pixels
    #[arg(long)]
    superpixel_size: Option<usize>,
    /// Half-width of the boundary blending band
    #[arg(long)]
    penumbra_radius: Option<usize>,
    /// Skip boundary blending
    #[arg(long)]
    no_smoothing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold-based shadow detection; writes a binary mask PNG
    Detect {
        image: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Remove shadows from an image (or every PNG of a directory)
    Remove {
        image: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Shadow mask PNG (or directory of masks in batch mode)
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Detect the mask instead of reading one
        #[arg(long, conflicts_with = "mask")]
        auto_detect: bool,
        /// Per-superpixel report (a directory in batch mode)
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the input and result next to each other
        #[arg(long)]
        side_by_side: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score predicted masks against ground truth
    EvalMask {
        pred_dir: PathBuf,
        gt_dir: PathBuf,
        /// Write JSON-lines records here
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Score removal results against region-pair annotations
    EvalRemoval {
        result_dir: PathBuf,
        annotation_dir: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Time removal over a directory, optionally sweeping the neighbor count
    Bench {
        image_dir: PathBuf,
        mask_dir: PathBuf,
        /// Region-pair annotations for SRI/CD scoring
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Comma-separated neighbor counts, e.g. 1,3,5,7,9,12,15
        #[arg(long, value_delimiter = ',')]
        sweep_neighbors: Vec<usize>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Generate synthetic shadow scenes with ground truth and annotations
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
    },
}

fn load_config(cli: &Cli, overrides: Option<&Overrides>) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(o) = overrides {
        let r = &mut cfg.relight;
        if let Some(n) = o.neighbors {
            r.n_neighbors = n;
        }
        if let Some(s) = o.superpixel_size {
            r.superpixel_size = s;
        }
        if let Some(p) = o.penumbra_radius {
            r.penumbra_radius = p;
        }
        if o.no_smoothing {
            r.smoothing = false;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_json(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => commands::write_text(p, text),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = match &cli.command {
        Command::Remove { overrides, .. } | Command::Bench { overrides, .. } => Some(overrides),
        _ => None,
    };
    let cfg = load_config(&cli, overrides)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;

    match &cli.command {
        Command::Detect { image, output } => {
            let mask = commands::detect(image, output, &cfg)?;
            println!(
                "{}: {} shadow pixels",
                output.display(),
                mask.shadow_count()
            );
        }
        Command::Remove {
            image,
            output,
            mask,
            auto_detect,
            report,
            side_by_side,
            ..
        } => {
            if image.is_dir() {
                let outcomes = commands::remove_batch(
                    image,
                    mask.as_deref(),
                    *auto_detect,
                    output,
                    report.as_deref(),
                    &cfg,
                )?;
                for o in outcomes {
                    println!("{}\t{:.3}s", o.output.display(), o.duration.as_secs_f64());
                }
            } else {
                let opts = RemoveOptions {
                    image: image.clone(),
                    mask: mask.clone(),
                    auto_detect: *auto_detect,
                    output: output.clone(),
                    report: report.clone(),
                    side_by_side: side_by_side.clone(),
                };
                let o = commands::remove(&opts, &cfg)?;
                if let Some(d) = &o.report.diagnostic {
                    eprintln!("warning: {d}");
                }
                println!(
                    "{}\t{:.3}s\t{} shadow superpixels, {} via global fallback",
                    o.output.display(),
                    o.duration.as_secs_f64(),
                    o.report.records.len(),
                    o.report.fallback_count
                );
            }
        }
        Command::EvalMask {
            pred_dir,
            gt_dir,
            json,
        } => {
            let eval = commands::eval_mask(pred_dir, gt_dir)?;
            print!("{}", eval.table());
            emit_json(json.as_ref(), &eval.json_lines())?;
        }
        Command::EvalRemoval {
            result_dir,
            annotation_dir,
            json,
        } => {
            let eval = commands::eval_removal(result_dir, annotation_dir)?;
            print!("{}", eval.table());
            emit_json(json.as_ref(), &eval.json_lines())?;
        }
        Command::Bench {
            image_dir,
            mask_dir,
            annotations,
            repeats,
            sweep_neighbors,
            json,
            ..
        } => {
            let opts = BenchOptions {
                image_dir: image_dir.clone(),
                mask_dir: mask_dir.clone(),
                annotation_dir: annotations.clone(),
                repeats: *repeats,
                neighbors: sweep_neighbors.clone(),
            };
            let rows = commands::bench(&opts, &cfg)?;
            print!("{}", commands::bench_table(&rows));
            emit_json(json.as_ref(), &commands::bench_json_lines(&rows))?;
        }
        Command::Synth {
            out_dir,
            seed,
            count,
            size,
        } => {
            let scenes = synth::write_suite(out_dir, *seed, *count, *size)?;
            println!("wrote {} scenes to {}", scenes.len(), out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
